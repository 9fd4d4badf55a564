//! Compiles and runs a C program against the generated header and the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "learnwidth.h"

int main(void) {
    LwStates *s = NULL;
    LwMatrix *g = NULL;
    size_t width = 0;
    if (lw_states_fixture("tetrahedral", 0, &s) != LW_STATUS_OK) return 10;
    if (lw_states_gram(s, &g) != LW_STATUS_OK) return 11;
    if (lw_factor_width(g, 1e-7, 0, &width) != LW_STATUS_OK) return 12;
    if (width != 2) return 13;
    if (lw_states_fixture("bogus", 0, &s) != LW_STATUS_UNKNOWN_FIXTURE) return 14;
    printf("%zu %s\n", width, lw_last_error());
    lw_matrix_free(g);
    lw_states_free(s);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps/
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("learnwidth.h").exists(), "build script did not write the header");
    let lib = target_dir().join("liblearnwidth_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler available, header check skipped");
        return;
    }
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile_dir();
    let src = dir.join("smoke.c");
    let bin = dir.join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("2 unknown fixture"), "{stdout}");
}

fn tempfile_dir() -> PathBuf {
    let d = std::env::temp_dir().join(format!("learnwidth-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
