//! Quasihomomorphisms between finitely generated groups.

pub mod defect;
pub mod groups;
pub mod qhom;
pub mod structure;
pub mod words;
