//! Compiles a C program against the generated header and the static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "ensemblab.h"

int main(void) {
    EnsEnsemble *e = NULL;
    const char *spec = "{\"kind\":\"wiener\",\"params\":{\"sigma\":1.0}}";
    if (ens_ensemble_simulate(spec, 0.0, 1.0, 4, 4000, 11, 1, &e) != ENS_STATUS_OK) {
        fprintf(stderr, "simulate: %s\n", ens_last_error());
        return 10;
    }
    if (ens_ensemble_n_paths(e) != 4000 || ens_ensemble_n_points(e) != 5) return 11;

    EnsEstimate m;
    if (ens_ensemble_moment(e, 0.0, 4.0, 2, &m) != ENS_STATUS_OK) return 12;
    double z = (m.estimate - 4.0) / m.std_error;
    if (z > 4.0 || z < -4.0) return 13;

    double buf[3];
    if (ens_ensemble_path_values(e, 0, buf, 3) != ENS_STATUS_BUFFER_TOO_SMALL) return 14;
    if (ens_last_error() == NULL) return 15;
    if (ens_ensemble_moment(e, 0.5, 1.0, 2, &m) != ENS_STATUS_INVALID_INPUT) return 16;

    ens_ensemble_free(e);
    printf("ok %s\n", ens_version());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("ensemblab.h").exists(), "header not generated");
    let lib = target_dir().join("libensemblab_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("main.c");
    let bin = work.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let out = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&header_dir)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .expect("run C compiler");
    assert!(out.status.success(), "cc failed:\n{}", String::from_utf8_lossy(&out.stderr));

    let run = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(
        run.status.success(),
        "exit {:?}\n{stdout}\n{}",
        run.status.code(),
        String::from_utf8_lossy(&run.stderr)
    );
    assert_eq!(stdout.trim(), format!("ok {}", env!("CARGO_PKG_VERSION")));
}
