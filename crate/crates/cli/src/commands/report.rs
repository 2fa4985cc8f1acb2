use std::fmt::Write as _;
use std::io::{ErrorKind, Write as _};

use anyhow::anyhow;

use crate::args::{GlobalArgs, ReportArgs};
use crate::failure::{ExitCode, Outcome};
use crate::manifest::{sha256_file, RunManifest, MANIFEST_FILE};

pub fn run(g: &GlobalArgs, a: &ReportArgs) -> Outcome {
    let path = g.out_dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Err(anyhow!("no {} in {}", MANIFEST_FILE, g.out_dir.display())).usage();
    }
    let m = RunManifest::load_or_new(&g.out_dir).analysis()?;
    let mut out = String::new();
    writeln!(out, "{} {}  digest {}", m.tool, m.tool_version, m.digest).ok();
    for (k, v) in &m.artifact_versions {
        writeln!(out, "  {k} v{v}").ok();
    }
    let mut mismatches = Vec::new();
    for (name, s) in &m.stages {
        writeln!(out).ok();
        writeln!(out, "{name}  seed {}  {:.2}s", s.seed, s.wall_seconds).ok();
        writeln!(out, "  {}", s.command).ok();
        for (kind, files) in [("in ", &s.inputs), ("out", &s.outputs)] {
            for (file, hash) in files {
                writeln!(out, "  {kind} {file}  {}", &hash[..12]).ok();
                if a.verify {
                    let p = g.out_dir.join(file);
                    let p = if p.exists() { p } else { file.into() };
                    if sha256_file(&p).ok().as_deref() != Some(hash.as_str()) {
                        mismatches.push(file.clone());
                    }
                }
            }
        }
    }
    if m.compute_digest() != m.digest {
        mismatches.push(MANIFEST_FILE.into());
    }
    if a.verify && mismatches.is_empty() {
        writeln!(out).ok();
        writeln!(out, "all hashes verified").ok();
    }
    emit(&out)?;
    if a.verify && !mismatches.is_empty() {
        return Err(anyhow!("hash mismatch: {}", mismatches.join(", "))).analysis();
    }
    Ok(())
}

/// Writes to stdout; a closed pipe (as in `cqa report | head`) is not an error.
fn emit(text: &str) -> Outcome {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(e).analysis(),
        _ => Ok(()),
    }
}
