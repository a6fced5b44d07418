//! Compiles and runs a small C program against the generated header and
//! the static library. Skipped when no C compiler is on PATH.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "sscn.h"

int main(void) {
    SscnScenario *scn = NULL;
    if (sscn_scenario_generate("num_users = 6\nnum_kbs = 4\nrng_seed = 2\n", &scn) != SSCN_STATUS_OK) return 1;
    SscnResult *res = NULL;
    if (sscn_baseline(scn, SSCN_BASELINE_MPK, 1, &res) != SSCN_STATUS_OK) return 2;
    if (!(sscn_result_sst(res) >= 0.0)) return 3;
    size_t len = 0;
    if (sscn_result_to_json(res, NULL, 0, &len) != SSCN_STATUS_OK || len < 2) return 4;
    if (sscn_scenario_generate("num_users = 0\n", &scn) != SSCN_STATUS_INVALID_CONFIG) return 5;
    char msg[256];
    sscn_last_error_message(msg, sizeof msg, NULL);
    if (strstr(msg, "num_users") == NULL) return 6;
    sscn_result_free(res);
    sscn_scenario_free(scn);
    printf("ok %s\n", sscn_version());
    return 0;
}
"#;

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
}

/// The static library next to the test binary (`target/<profile>/deps`) or
/// one level up.
fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().unwrap();
    let deps = exe.parent()?;
    let found = [deps, deps.parent()?].into_iter().map(|d| d.join("libsscn_ffi.a")).find(|p| p.exists());
    found
}

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let lib = static_lib().expect("libsscn_ffi.a next to the test binary");
    let dir = tempfile_dir();
    let src = dir.join("smoke.c");
    let bin = dir.join("smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new(cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sscn-ffi-c-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
