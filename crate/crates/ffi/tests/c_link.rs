use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "gblab.h"

int main(void) {
    double a[16] = {0, 2, 0, 0, -2, 0, 0, 0, 0, 0, 0, 3, 0, 0, -3, 0};
    double pf = 0.0;
    if (gb_pfaffian(a, 4, &pf) != GB_STATUS_OK || pf != 6.0) return 1;
    double bad[4] = {0, 1, 1, 0};
    if (gb_pfaffian(bad, 2, &pf) != GB_STATUS_INVALID_ARGUMENT) return 2;
    if (strlen(gb_last_error_message()) == 0) return 3;
    GbDoubleChain *z = NULL;
    int closed = 0;
    if (gb_fundamental_cycle_new(4, &z) != GB_STATUS_OK) return 4;
    if (gb_fundamental_cycle_is_closed(z, &closed) != GB_STATUS_OK || closed != 1) return 5;
    gb_fundamental_cycle_free(z);
    printf("%s %g\n", gb_version(), pf);
    return 0;
}
"#;

fn staticlib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?;
    let lib = dir.join("libgblab_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_against_header() {
    let Some(lib) = staticlib() else {
        eprintln!("skipping: libgblab_ffi.a not found next to the test binary");
        return;
    };
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-I", include])
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout), format!("{} 6\n", env!("CARGO_PKG_VERSION")));
}
