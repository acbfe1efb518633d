use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "tm.h"

int main(void) {
    TmSurface *s = NULL;
    if (tm_surface_sphere(2, "antipodal", &s) != TM_STATUS_OK) return 1;
    size_t ell = 0;
    tm_surface_ell(s, &ell);
    TmSpectrum *sp = NULL;
    if (tm_spectrum_compute(s, 6, &sp) != TM_STATUS_OK) return 2;
    double l1 = 0.0;
    size_t mult = 0;
    tm_spectrum_lambda(sp, 1, &l1, &mult);
    TmSurface *bad = NULL;
    TmStatus st = tm_surface_sphere(2, "nonsense", &bad);
    printf("%zu %zu %.3f %d %s\n", ell, mult, l1, (int)st, tm_last_error_message()[0] ? "msg" : "none");
    tm_spectrum_free(sp);
    tm_surface_free(s);
    return 0;
}
"#;

#[test]
fn c_program_links_against_the_static_library() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = manifest.join("include/tm.h");
    assert!(header.is_file());
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "tm_surface_sphere",
        "tm_spectrum_compute",
        "tm_maximize",
        "tm_last_error_message",
        "TM_STATUS_PANIC",
    ] {
        assert!(text.contains(f), "{f}");
    }
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libtm_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if !lib.is_file() || Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let out = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success());
    let stdout = String::from_utf8_lossy(&run.stdout);
    let fields: Vec<&str> = stdout.split_whitespace().collect();
    assert_eq!(fields[0], "2");
    assert_eq!(fields[1], "5");
    assert_eq!(fields[3], "2");
    assert_eq!(fields[4], "msg");
}
