//! Every repro target regenerated and compared byte for byte with the
//! checked-in outputs under `tests/golden`.

use std::path::Path;
use std::process::Command;

#[test]
fn repro_all_matches_golden_files() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let out = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_wrisk"))
        .args(["repro", "all", "--out-dir"])
        .arg(out.path())
        .arg("--check")
        .arg(&golden)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let expected = std::fs::read_dir(&golden).unwrap().count();
    let written = std::fs::read_dir(out.path()).unwrap().count();
    assert_eq!(written, expected, "golden directory has stale files");
}
