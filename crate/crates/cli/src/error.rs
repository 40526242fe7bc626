use serde::Serialize;
use thiserror::Error;

use qhom::defect::DefectError;
use qhom::groups::GroupError;
use qhom::qhom::MapError;
use qhom::structure::StructureError;

/// One machine-readable problem found in a spec file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    /// JSON pointer to the offending node.
    pub pointer: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Diagnostic {
    pub fn at(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            file: None,
            pointer: pointer.into(),
            line: None,
            column: None,
            message: message.into(),
            witness: None,
        }
    }

    pub fn in_file(mut self, file: &str) -> Self {
        self.file = Some(file.to_string());
        self
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{file}:")?;
        }
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, "{l}:{c}:")?;
        }
        let ptr = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, " {ptr}: {}", self.message)?;
        if let Some(w) = &self.witness {
            write!(f, " (witness: {w})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("spec error: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Spec(Vec<Diagnostic>),
    #[error("resource cap exceeded: {0}")]
    Cap(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Spec(_) => 3,
            CliError::Cap(_) => 4,
            CliError::Runtime(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn spec(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Spec(vec![Diagnostic::at(pointer, message)])
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

fn group_is_cap(e: &GroupError) -> bool {
    matches!(e, GroupError::CapExceeded { .. })
}

fn map_is_cap(e: &MapError) -> bool {
    matches!(e, MapError::Group(g) if group_is_cap(g))
}

fn defect_is_cap(e: &DefectError) -> bool {
    match e {
        DefectError::PairCap { .. } | DefectError::BallCap { .. } => true,
        DefectError::Group(g) => group_is_cap(g),
        DefectError::Map(m) => map_is_cap(m),
        DefectError::Invalid(_) => false,
    }
}

/// Classifies a library error raised while running a scan: caps map to
/// exit status 4, anything else is a runtime failure.
pub trait Classify {
    fn is_cap(&self) -> bool;
}

impl Classify for GroupError {
    fn is_cap(&self) -> bool {
        group_is_cap(self)
    }
}

impl Classify for MapError {
    fn is_cap(&self) -> bool {
        map_is_cap(self)
    }
}

impl Classify for DefectError {
    fn is_cap(&self) -> bool {
        defect_is_cap(self)
    }
}

impl Classify for StructureError {
    fn is_cap(&self) -> bool {
        match self {
            StructureError::AutCap { .. } => true,
            StructureError::Group(g) => group_is_cap(g),
            StructureError::Map(m) => map_is_cap(m),
            StructureError::Defect(d) => defect_is_cap(d),
            _ => false,
        }
    }
}

/// Error raised while running: resource caps keep their own status.
pub fn running<E: Classify + std::fmt::Display>(e: E) -> CliError {
    if e.is_cap() {
        CliError::Cap(e.to_string())
    } else {
        CliError::Runtime(e.to_string())
    }
}

/// Error raised while building groups and maps from a spec node.
pub fn building<E: Classify + std::fmt::Display>(pointer: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| {
        if e.is_cap() {
            CliError::Cap(e.to_string())
        } else {
            CliError::spec(pointer, e.to_string())
        }
    }
}
