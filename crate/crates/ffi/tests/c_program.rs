//! Compiles a small C program against the generated header and the static
//! library, then runs it.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "dstab.h"

int main(void) {
    double e[9] = {1, 0, 0, 0, 0, 0, 0, 0, 0};
    double a[9] = {0.5, 0, 2, 0, 1, 0, 0, 0, 1};
    DstabPair *pair = NULL;
    if (dstab_pair_new(3, e, a, &pair) != DSTAB_STATUS_OK) return 10;
    DstabAnalysis rep;
    if (dstab_analyze(pair, NULL, &rep) != DSTAB_STATUS_OK) return 11;
    if (!rep.admissible || rep.rank_e != 1 || rep.finite_count != 1) return 12;

    DstabSolverConfig cfg = dstab_solver_config_default();
    cfg.time_limit_seconds = 5.0;
    double g[4] = {1, 1, -1, 1};
    DstabPair *gp = NULL;
    if (dstab_pair_new(2, NULL, g, &gp) != DSTAB_STATUS_OK) return 13;
    DstabResult *res = NULL;
    if (dstab_stabilize(gp, 0, &cfg, &res) != DSTAB_STATUS_OK) return 14;
    if (!dstab_result_admissible(res)) return 15;
    printf("error=%.6f iterations=%zu\n", dstab_result_error(res), dstab_result_iterations(res));

    double bad[1] = {1.0 / 0.0};
    DstabPair *bp = NULL;
    if (dstab_pair_new(1, NULL, bad, &bp) != DSTAB_STATUS_NON_FINITE) return 16;
    char msg[128];
    if (dstab_last_error_message(msg, sizeof msg) == 0) return 17;

    dstab_result_free(res);
    dstab_pair_free(gp);
    dstab_pair_free(pair);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // .../target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn compiler() -> Option<String> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    Command::new(&cc)
        .arg("--version")
        .output()
        .ok()?
        .status
        .success()
        .then_some(cc)
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let lib = target_dir().join("libdstab_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile_dir();
    let src = dir.join("main.c");
    let exe = dir.join("main");
    std::fs::write(&src, PROGRAM).unwrap();

    let out = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let run = Command::new(&exe).output().unwrap();
    assert_eq!(
        run.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run.stdout)
    );
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.starts_with("error="), "{stdout}");
    let _ = std::fs::remove_dir_all(&dir);
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dstab-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
