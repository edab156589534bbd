use std::path::{Path, PathBuf};
use std::process::Command;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn header() -> String {
    std::fs::read_to_string(crate_dir().join("include/crosstalk.h")).expect("generated header")
}

fn exported() -> Vec<String> {
    let src = std::fs::read_to_string(crate_dir().join("src/lib.rs")).unwrap();
    src.lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap().to_string())
        .collect()
}

#[test]
fn header_declares_every_export() {
    let h = header();
    let names = exported();
    assert!(names.len() >= 20);
    for name in names {
        assert!(
            h.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
    assert!(h.contains("typedef struct CtPair CtPair;"));
    assert!(h.contains("typedef struct CtCodec CtCodec;"));
    assert!(h.contains("CT_STATUS_PANIC = 6"));
}

fn staticlib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let deps = exe.parent()?;
    [deps.parent()?, deps]
        .iter()
        .map(|d| d.join("libcrosstalk_ffi.a"))
        .find(|p| p.exists())
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

const SMOKE: &str = r#"
#include <stdio.h>
#include <string.h>
#include "crosstalk.h"

int main(void) {
    CtPair *fp = NULL;
    if (ct_pair_new("10", "01", &fp) != CT_STATUS_OK) return 10;
    char *count = NULL;
    if (ct_count_pairs(fp, 3, &count) != CT_STATUS_OK || strcmp(count, "50") != 0) return 11;
    ct_string_free(count);

    CtCodec *c = NULL;
    if (ct_codec_synthesize(fp, 2, true, 0, &c) != CT_STATUS_OK) return 12;
    bool ok = false;
    if (ct_codec_verify(c, &ok) != CT_STATUS_OK || !ok) return 13;
    uint64_t next = 0;
    uint64_t s0 = 0;
    if (ct_codec_initial_state(c, &s0) != CT_STATUS_OK) return 18;
    if (ct_codec_encode(c, 3, s0, &next) != CT_STATUS_OK) return 14;
    uint32_t m = 0;
    if (ct_codec_decode(c, next, &m) != CT_STATUS_OK || m != 3) return 15;

    CtPair *bad = NULL;
    if (ct_pair_new("1", "0", &bad) != CT_STATUS_INVALID_ARGUMENT) return 16;
    char *msg = ct_last_error_message();
    if (msg == NULL) return 17;
    ct_string_free(msg);

    ct_codec_free(c);
    ct_pair_free(fp);
    printf("ok\n");
    return 0;
}
"#;

fn compile(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new("cc")
        .current_dir(dir)
        .args(args)
        .output()
        .expect("run cc")
}

#[test]
fn c_program_links_and_runs() {
    if !have_cc() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let dir = std::env::temp_dir().join(format!("crosstalk-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("smoke.c"), SMOKE).unwrap();
    let include = format!("-I{}", crate_dir().join("include").display());

    let o = compile(
        &dir,
        &[
            "-std=c99",
            "-Wall",
            "-Werror",
            "-fsyntax-only",
            &include,
            "smoke.c",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let lib = staticlib().expect("libcrosstalk_ffi.a next to the test binary");
    let lib = lib.to_str().unwrap();
    let o = compile(
        &dir,
        &[
            &include,
            "smoke.c",
            lib,
            "-lpthread",
            "-ldl",
            "-lm",
            "-o",
            "smoke",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = Command::new(dir.join("smoke")).output().unwrap();
    assert_eq!(run.status.code(), Some(0), "{:?}", run);
    assert_eq!(String::from_utf8_lossy(&run.stdout), "ok\n");
}
