//! Spec files, experiment runs and JSON reports for the `qh` tool.

pub mod error;
pub mod experiments;
pub mod spec;

use std::path::Path;

use serde_json::Value;

pub use error::{CliError, Diagnostic, Result};
pub use experiments::{run, Report, RunOptions};
pub use spec::{ExperimentSpec, GroupSpec, MapSpec};

use qhom::groups::Group;
use qhom::qhom::QMap;

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn tag_file(e: CliError, path: &Path) -> CliError {
    match e {
        CliError::Spec(ds) => CliError::Spec(ds.into_iter().map(|d| d.in_file(&path.display().to_string())).collect()),
        other => other,
    }
}

pub fn load_experiment(path: &Path) -> Result<ExperimentSpec> {
    spec::parse_text(&read(path)?).map_err(|e| tag_file(e, path))
}

pub fn load_map(path: &Path) -> Result<(MapSpec, QMap)> {
    let go = || -> Result<(MapSpec, QMap)> {
        let m: MapSpec = spec::parse_text(&read(path)?)?;
        let f = spec::build_map(&m, "")?;
        Ok((m, f))
    };
    go().map_err(|e| tag_file(e, path))
}

pub fn load_group(path: &Path) -> Result<(GroupSpec, Group)> {
    let go = || -> Result<(GroupSpec, Group)> {
        let g: GroupSpec = spec::parse_text(&read(path)?)?;
        let h = spec::build_group(&g, "")?;
        Ok((g, h))
    };
    go().map_err(|e| tag_file(e, path))
}

/// Schema and semantic checks of a spec text without running anything. The
/// file may hold an experiment, a map or a group; the top-level tag decides.
pub fn validate_text(text: &str) -> Vec<Diagnostic> {
    let root: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return diagnostics(spec::parse_text::<Value>(text).err().unwrap_or(CliError::Runtime(e.to_string()))),
    };
    let outcome = if root.get("name").is_some() {
        spec::parse_text::<ExperimentSpec>(text).and_then(|s| experiments::check(&s))
    } else if root.get("rule").is_some() {
        spec::parse_text::<MapSpec>(text).and_then(|m| spec::build_map(&m, "").map(|_| ()))
    } else if root.get("kind").is_some() {
        spec::parse_text::<GroupSpec>(text).and_then(|g| spec::build_group(&g, "").map(|_| ()))
    } else {
        Err(CliError::spec("", "expected an experiment (\"name\"), a map (\"rule\") or a group (\"kind\")"))
    };
    match outcome {
        Ok(()) => Vec::new(),
        Err(e) => diagnostics(e),
    }
}

fn diagnostics(e: CliError) -> Vec<Diagnostic> {
    match e {
        CliError::Spec(ds) => ds,
        other => vec![Diagnostic::at("", other.to_string())],
    }
}

pub fn validate_files(paths: &[impl AsRef<Path>]) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let name = p.display().to_string();
        match read(p) {
            Ok(text) => out.extend(validate_text(&text).into_iter().map(|d| d.in_file(&name))),
            Err(e) => out.push(Diagnostic::at("", e.to_string()).in_file(&name)),
        }
    }
    out
}
