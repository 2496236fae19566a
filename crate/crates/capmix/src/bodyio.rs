//! JSON body files.
//!
//! A body file stores the support field `s(x) = c F(x) + <v, x> + terms` with
//! the norm declaration, `omega0`, seed and generator settings it came from.
//! Floats are written in shortest round-trip form, so reading a file back gives
//! the same field bit for bit, and therefore the same node caches.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use capmix_core::{SupportField, TermKind, Vector, ZonalTerm};

use crate::config::{BodyDecl, NormDecl, SuiteConfig, TermDecl};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportDecl {
    pub norm_coefficient: f64,
    pub linear: Vec<f64>,
    pub terms: Vec<TermDecl>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyFile {
    pub tool: String,
    pub version: String,
    pub n: usize,
    pub omega0: f64,
    pub norm: NormDecl,
    pub seed: Option<u64>,
    pub generator: Option<BodyDecl>,
    pub support: SupportDecl,
}

impl BodyFile {
    pub fn new(config: &SuiteConfig, seed: Option<u64>, support: &SupportField) -> Self {
        let terms = support
            .terms()
            .iter()
            .map(|t| TermDecl {
                kind: match t.kind {
                    TermKind::Bump => "bump".into(),
                    TermKind::Zonal => "zonal".into(),
                },
                center: t.center.iter().copied().collect(),
                width: t.width,
                amplitude: t.amplitude,
            })
            .collect();
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            n: config.n,
            omega0: config.omega0,
            norm: config.norm.clone(),
            seed,
            generator: seed.map(|_| config.bodies.clone()),
            support: SupportDecl {
                norm_coefficient: support.norm_coefficient(),
                linear: support.linear_part().iter().copied().collect(),
                terms,
            },
        }
    }

    /// The stored field. Terms are rebuilt without renormalising their centres.
    pub fn support_field(&self) -> capmix_core::Result<SupportField> {
        let terms = self
            .support
            .terms
            .iter()
            .map(|t| ZonalTerm {
                kind: if t.kind == "zonal" { TermKind::Zonal } else { TermKind::Bump },
                center: Vector::from_column_slice(&t.center),
                width: t.width,
                amplitude: t.amplitude,
            })
            .collect();
        SupportField::from_parts(self.support.norm_coefficient, Vector::from_column_slice(&self.support.linear), terms)
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, serde_json::to_string_pretty(self).map_err(io::Error::other)? + "\n")
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}
