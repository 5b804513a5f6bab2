//! Compiles and runs a small C program against the generated header and
//! the static library, proving the ABI is usable from plain C.

use std::path::PathBuf;
use std::process::Command;

fn cc() -> Option<&'static str> {
    ["cc", "gcc", "clang"].into_iter().find(|candidate| {
        Command::new(candidate)
            .arg("--version")
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false)
    })
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "femtoq.h"

int main(void) {
    FqConfig *config = NULL;
    if (fq_config_new(&config) != FQ_STATUS_OK) return 1;
    if (fq_config_set_n_femto(config, 2) != FQ_STATUS_OK) return 2;
    if (fq_config_set_q_iterations(config, 40) != FQ_STATUS_OK) return 3;
    if (fq_config_set_seed(config, 5) != FQ_STATUS_OK) return 4;

    FqTrace *trace = NULL;
    if (fq_run_episode(config, &trace) != FQ_STATUS_OK) return 5;

    FqSummary summary;
    if (fq_trace_summary(trace, &summary) != FQ_STATUS_OK) return 6;
    if (summary.n_femto != 2 || summary.iterations != 40) return 7;
    if (!(summary.aggregate_femto_capacity >= 0.0)) return 8;

    fq_trace_free(trace);
    fq_config_free(config);
    printf("ok %s\n", fq_version());
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let include_dir = manifest.join("include");
    // The staticlib lands next to this test's own artifacts.
    let mut lib_dir = std::env::current_exe().unwrap();
    lib_dir.pop(); // test binary
    lib_dir.pop(); // deps/
    let staticlib = lib_dir.join("libfemtoq_ffi.a");
    assert!(
        staticlib.exists(),
        "staticlib not found at {}",
        staticlib.display()
    );

    let dir = tempfile::tempdir().unwrap();
    let source = dir.path().join("smoke.c");
    std::fs::write(&source, C_PROGRAM).unwrap();
    let binary = dir.path().join("smoke");

    let output = Command::new(cc)
        .arg(&source)
        .arg("-I")
        .arg(&include_dir)
        .arg(&staticlib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&binary)
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "compile failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let run = Command::new(&binary).output().unwrap();
    assert!(
        run.status.success(),
        "smoke program exited {:?}: {}",
        run.status.code(),
        String::from_utf8_lossy(&run.stdout)
    );
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
