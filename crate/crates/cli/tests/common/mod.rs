#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub const STAGES: [&str; 7] = [
    "prepare", "validate", "probe", "classify", "analyze", "glove", "report",
];

pub fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn toy_config() -> PathBuf {
    crate_dir().join("fixtures/toy/toy.ini")
}

pub fn golden_dir() -> PathBuf {
    crate_dir().join("tests/golden")
}

/// Runs one subcommand against the toy config and returns the exit code.
pub fn run_stage(out: &Path, stage: &str, extra: &[&str]) -> i32 {
    run_stage_with(out, stage, extra, &[])
}

/// Like [`run_stage`], with `sub` appended after the subcommand name.
pub fn run_stage_with(out: &Path, stage: &str, extra: &[&str], sub: &[&str]) -> i32 {
    let mut args: Vec<String> = vec![
        "eraprobe".into(),
        "--config".into(),
        toy_config().display().to_string(),
        "--out".into(),
        out.display().to_string(),
        "--mock".into(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    args.push(stage.into());
    args.extend(sub.iter().map(|s| s.to_string()));
    eraprobe_cli::run(args)
}

/// Runs every stage in order and returns the run directory.
pub fn run_pipeline(out: &Path, extra: &[&str]) -> Result<PathBuf, String> {
    for stage in STAGES {
        let code = run_stage(out, stage, extra);
        if code != 0 {
            return Err(format!("stage {stage} exited with {code}"));
        }
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(out)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    if dirs.len() != 1 {
        return Err(format!("expected one run dir, found {dirs:?}"));
    }
    Ok(dirs.remove(0))
}

fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, String>) {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            walk(&p, root, out);
            continue;
        }
        // Response stores carry wall-clock timestamps.
        if p.file_name().is_some_and(|n| n == "responses.jsonl") {
            continue;
        }
        let rel = p
            .strip_prefix(root)
            .unwrap()
            .to_string_lossy()
            .replace('\\', "/");
        let bytes = fs::read(&p).unwrap();
        out.insert(rel, hex::encode(Sha256::digest(&bytes)));
    }
}

/// sha256 of every deterministic file under a run directory.
pub fn digest_tree(run_dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    walk(run_dir, run_dir, &mut out);
    out
}

fn render_manifest(d: &BTreeMap<String, String>) -> String {
    d.iter().map(|(k, v)| format!("{v}  {k}\n")).collect()
}

/// Files also kept verbatim next to the digest manifest.
pub const READABLE: [&str; 3] = [
    "report.md",
    "glove/bias_1950s.csv",
    "validate/overlap_toy-1950s.json",
];

/// Compares a run against the checked-in golden set, or rewrites the set
/// when `ERAPROBE_BLESS` is set.
pub fn check_golden(run_dir: &Path) -> Result<(), String> {
    let digests = digest_tree(run_dir);
    let manifest = golden_dir().join("toy.sha256");
    if std::env::var_os("ERAPROBE_BLESS").is_some() {
        fs::create_dir_all(golden_dir()).map_err(|e| e.to_string())?;
        fs::write(&manifest, render_manifest(&digests)).map_err(|e| e.to_string())?;
        for rel in READABLE {
            let name = rel.replace('/', "__");
            fs::copy(run_dir.join(rel), golden_dir().join(name)).map_err(|e| e.to_string())?;
        }
        return Ok(());
    }
    for rel in READABLE {
        let name = rel.replace('/', "__");
        let want =
            fs::read_to_string(golden_dir().join(&name)).map_err(|e| format!("{name}: {e}"))?;
        let got = fs::read_to_string(run_dir.join(rel)).map_err(|e| format!("{rel}: {e}"))?;
        if want != got {
            return Err(format!("{rel} differs from golden copy"));
        }
    }
    let want = fs::read_to_string(&manifest).map_err(|e| format!("{}: {e}", manifest.display()))?;
    let got = render_manifest(&digests);
    if want != got {
        let want: Vec<&str> = want.lines().collect();
        let diff: Vec<&str> = got.lines().filter(|l| !want.contains(l)).take(5).collect();
        return Err(format!("digest mismatch: {diff:?}"));
    }
    Ok(())
}
