//! Suite configuration: TOML parsing and validation.
//!
//! Validation walks the whole document and reports every problem with its
//! field path, not just the first one.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Value;

use capmix_core::body::RandomBodySpec;
use capmix_core::capgeom::omega_range;
use capmix_core::{CapConfig, Matrix, MeshKind, NormModel, TermKind, Vector, ZonalTerm};

pub const SUITES: [&str; 9] = ["af", "chain", "minkowski", "steiner", "symmetry", "mixdisc", "kernel", "operator", "routes"];

/// Default tolerance for each check name. Inequalities use the value as a
/// scale-relative slack, identities as a bound on the relative deviation.
pub const DEFAULT_TOLERANCES: [(&str, f64); 16] = [
    ("af", 1e-8),
    ("af.equality", 1e-6),
    ("chain", 1e-8),
    ("chain.generalized", 1e-8),
    ("kernel", 1e-4),
    ("minkowski", 1e-3),
    ("mixdisc", 1e-10),
    ("operator.energy", 1e-6),
    ("operator.fixed_point", 1e-8),
    ("operator.self_adjoint", 1e-3),
    ("routes.euclidean", 1e-8),
    ("routes.polyfit", 1e-4),
    ("steiner", 1e-4),
    ("symmetry.swap", 1e-3),
    ("symmetry.trailing", 1e-12),
    ("volume.hull", 5e-3),
];

/// Default `routes.euclidean` tolerance for the perturbed family.
pub const PERTURBED_ROUTE_TOLERANCE: f64 = 1e-5;

/// A problem found while reading a config, located by its dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Isotropic,
    Ellipsoid,
    Perturbed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDecl {
    #[serde(rename = "type")]
    pub kind: String,
    pub center: Vec<f64>,
    pub width: f64,
    pub amplitude: f64,
}

/// The norm as declared in the config, echoed into reports and body files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormDecl {
    pub family: Family,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub terms: Vec<TermDecl>,
    pub fd_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyDecl {
    pub amplitude: f64,
    pub max_shift: f64,
    pub bumps: usize,
    pub margin: f64,
}

impl From<&BodyDecl> for RandomBodySpec {
    fn from(b: &BodyDecl) -> Self {
        RandomBodySpec { amplitude: b.amplitude, max_shift: b.max_shift, bumps: b.bumps, margin: b.margin }
    }
}

/// A validated suite configuration.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteConfig {
    pub n: usize,
    pub omega0: f64,
    pub norm: NormDecl,
    pub mesh_level: u32,
    pub mesh_kind: String,
    /// Fraction of the mesh spacing used by the intrinsic difference stencils.
    pub stencil_fraction: f64,
    pub tolerances: BTreeMap<String, f64>,
    pub seeds: Vec<u64>,
    pub bodies: BodyDecl,
    pub suites: Vec<String>,
    pub output_dir: Option<String>,
    #[serde(skip)]
    pub norm_model: NormModel,
}

impl SuiteConfig {
    pub fn tolerance(&self, check: &str) -> f64 {
        self.tolerances.get(check).copied().unwrap_or(0.0)
    }

    pub fn mesh_kind(&self) -> MeshKind {
        if self.mesh_kind == "icosphere" {
            MeshKind::Icosphere
        } else {
            MeshKind::Polar
        }
    }

    pub fn cap_config(&self) -> CapConfig {
        CapConfig::new(self.norm_model.clone(), self.omega0).expect("omega0 validated at parse time")
    }

    pub fn body_spec(&self) -> RandomBodySpec {
        (&self.bodies).into()
    }

    pub fn runs(&self, suite: &str) -> bool {
        self.suites.iter().any(|s| s == suite)
    }
}

struct Walker {
    errors: Vec<ConfigError>,
}

impl Walker {
    fn err(&mut self, path: &str, message: impl Into<String>) {
        self.errors.push(ConfigError { path: path.to_string(), message: message.into() });
    }

    fn table<'a>(&mut self, root: &'a toml::Table, key: &str, allowed: &[&str]) -> Option<&'a toml::Table> {
        match root.get(key) {
            None => None,
            Some(Value::Table(t)) => {
                for k in t.keys() {
                    if !allowed.contains(&k.as_str()) {
                        self.err(&format!("{key}.{k}"), format!("unknown key (expected one of: {})", allowed.join(", ")));
                    }
                }
                Some(t)
            }
            Some(_) => {
                self.err(key, "expected a table");
                None
            }
        }
    }

    fn float(&mut self, t: Option<&toml::Table>, path: &str, key: &str) -> Option<f64> {
        match t?.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.err(&format!("{path}.{key}"), "expected a number");
                None
            }
        }
    }

    fn int(&mut self, t: Option<&toml::Table>, path: &str, key: &str) -> Option<i64> {
        match t?.get(key)? {
            Value::Integer(i) => Some(*i),
            _ => {
                self.err(&format!("{path}.{key}"), "expected an integer");
                None
            }
        }
    }

    fn string<'a>(&mut self, t: Option<&'a toml::Table>, path: &str, key: &str) -> Option<&'a str> {
        match t?.get(key)? {
            Value::String(s) => Some(s),
            _ => {
                self.err(&format!("{path}.{key}"), "expected a string");
                None
            }
        }
    }

    fn floats(&mut self, v: &Value, path: &str) -> Option<Vec<f64>> {
        let Value::Array(a) = v else {
            self.err(path, "expected an array of numbers");
            return None;
        };
        let mut out = Vec::with_capacity(a.len());
        for (i, x) in a.iter().enumerate() {
            match x {
                Value::Float(f) => out.push(*f),
                Value::Integer(k) => out.push(*k as f64),
                _ => {
                    self.err(&format!("{path}[{i}]"), "expected a number");
                    return None;
                }
            }
        }
        Some(out)
    }
}

/// Reads and validates a config file. Syntax errors and every validation
/// problem come back together.
pub fn parse_config(path: &Path) -> Result<SuiteConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigErrors(vec![ConfigError { path: path.display().to_string(), message: format!("cannot read config: {e}") }]))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<SuiteConfig, ConfigErrors> {
    let root: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigErrors(vec![ConfigError { path: "<syntax>".into(), message: e.message().to_string() }]))?;
    let mut w = Walker { errors: Vec::new() };

    for k in root.keys() {
        if !["geometry", "norm", "mesh", "numerics", "suites", "seeds", "output"].contains(&k.as_str()) {
            w.err(k, "unknown section");
        }
    }

    let geometry = w.table(&root, "geometry", &["n", "omega0"]);
    let n = match w.int(geometry, "geometry", "n") {
        Some(n @ 1..=2) => n as usize,
        Some(n) => {
            w.err("geometry.n", format!("only n = 1 and n = 2 are supported, got {n}"));
            2
        }
        None => 2,
    };
    let omega0 = w.float(geometry, "geometry", "omega0").unwrap_or(0.0);

    let norm = w.table(&root, "norm", &["family", "matrix", "terms", "fd_step"]);
    let family = match w.string(norm, "norm", "family").unwrap_or("isotropic") {
        "isotropic" => Family::Isotropic,
        "ellipsoid" => Family::Ellipsoid,
        "perturbed" => Family::Perturbed,
        other => {
            w.err("norm.family", format!("unknown family '{other}' (expected isotropic, ellipsoid or perturbed)"));
            Family::Isotropic
        }
    };
    let fd_step = w.float(norm, "norm", "fd_step").unwrap_or(1e-4);
    if !(fd_step > 0.0 && fd_step < 0.1) {
        w.err("norm.fd_step", format!("must lie in (0, 0.1), got {fd_step}"));
    }
    let matrix = parse_matrix(&mut w, norm, n, family);
    let terms = parse_terms(&mut w, norm, n, family);
    let decl = NormDecl { family, matrix, terms, fd_step };

    let mesh = w.table(&root, "mesh", &["level", "kind"]);
    let mesh_level = match w.int(mesh, "mesh", "level") {
        Some(l @ 0..=7) => l as u32,
        Some(l) => {
            w.err("mesh.level", format!("must lie in 0..=7, got {l}"));
            3
        }
        None => 3,
    };
    let mesh_kind = match w.string(mesh, "mesh", "kind").unwrap_or("polar") {
        k @ ("polar" | "icosphere") => k.to_string(),
        other => {
            w.err("mesh.kind", format!("unknown mesh kind '{other}' (expected polar or icosphere)"));
            "polar".into()
        }
    };

    let numerics = w.table(&root, "numerics", &["stencil_fraction", "tolerances"]);
    let stencil_fraction = w.float(numerics, "numerics", "stencil_fraction").unwrap_or(0.1);
    if !(stencil_fraction > 0.0 && stencil_fraction <= 0.5) {
        w.err("numerics.stencil_fraction", format!("must lie in (0, 0.5], got {stencil_fraction}"));
    }
    let mut tolerances: BTreeMap<String, f64> = DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    if family == Family::Perturbed {
        tolerances.insert("routes.euclidean".into(), PERTURBED_ROUTE_TOLERANCE);
    }
    match numerics.and_then(|t| t.get("tolerances")) {
        None => {}
        Some(Value::Table(t)) => {
            for (k, v) in flatten(t) {
                let path = format!("numerics.tolerances.{k}");
                if !tolerances.contains_key(&k) {
                    let names: Vec<&str> = DEFAULT_TOLERANCES.iter().map(|x| x.0).collect();
                    w.err(&path, format!("unknown check (expected one of: {})", names.join(", ")));
                    continue;
                }
                match v.as_float().or(v.as_integer().map(|i| i as f64)) {
                    Some(x) if x >= 0.0 && x.is_finite() => {
                        tolerances.insert(k, x);
                    }
                    _ => w.err(&path, "expected a non-negative number"),
                }
            }
        }
        Some(_) => w.err("numerics.tolerances", "expected a table"),
    }

    let suites_t = w.table(&root, "suites", &["run"]);
    let mut suites: Vec<String> = Vec::new();
    match suites_t.and_then(|t| t.get("run")) {
        None => suites = SUITES.iter().map(|s| s.to_string()).collect(),
        Some(Value::Array(a)) => {
            for (i, v) in a.iter().enumerate() {
                match v.as_str() {
                    Some("all") => suites.extend(SUITES.iter().map(|s| s.to_string())),
                    Some(s) if SUITES.contains(&s) => suites.push(s.to_string()),
                    Some(s) => w.err(&format!("suites.run[{i}]"), format!("unknown suite '{s}' (valid: {}, all)", SUITES.join(", "))),
                    None => w.err(&format!("suites.run[{i}]"), "expected a string"),
                }
            }
        }
        Some(_) => w.err("suites.run", "expected an array of suite names"),
    }
    suites.sort_by_key(|s| SUITES.iter().position(|x| x == s));
    suites.dedup();

    let seeds_t = w.table(&root, "seeds", &["list", "start", "count", "amplitude", "max_shift", "bumps", "margin"]);
    let seeds = parse_seeds(&mut w, seeds_t);
    let d = RandomBodySpec::default();
    let bodies = BodyDecl {
        amplitude: w.float(seeds_t, "seeds", "amplitude").unwrap_or(d.amplitude),
        max_shift: w.float(seeds_t, "seeds", "max_shift").unwrap_or(d.max_shift),
        bumps: w.int(seeds_t, "seeds", "bumps").map(|b| b.max(0) as usize).unwrap_or(d.bumps),
        margin: w.float(seeds_t, "seeds", "margin").unwrap_or(d.margin),
    };
    if !(bodies.max_shift >= 0.0) {
        w.err("seeds.max_shift", "must be non-negative");
    }

    let output = w.table(&root, "output", &["dir"]);
    let output_dir = w.string(output, "output", "dir").map(str::to_string);

    // the norm is only built when its declaration is clean
    let mut norm_model = NormModel::isotropic(n);
    if !w.errors.iter().any(|e| e.path.starts_with("norm") || e.path.starts_with("geometry")) {
        match build_norm(&decl, n) {
            Ok(m) => {
                norm_model = m;
                let (lo, hi) = omega_range(&norm_model);
                if !(omega0 > lo && omega0 < hi) {
                    w.err("geometry.omega0", format!("{omega0} is outside the open interval ({lo}, {hi}) admissible for this norm"));
                }
            }
            Err(e) => w.err("norm", e.to_string()),
        }
    }

    if !w.errors.is_empty() {
        return Err(ConfigErrors(w.errors));
    }
    Ok(SuiteConfig {
        n,
        omega0,
        norm: decl,
        mesh_level,
        mesh_kind,
        stencil_fraction,
        tolerances,
        seeds,
        bodies,
        suites,
        output_dir,
        norm_model,
    })
}

/// `{a = {b = 1}}` and `{"a.b" = 1}` both become `("a.b", 1)`.
fn flatten(t: &toml::Table) -> Vec<(String, &Value)> {
    let mut out = Vec::new();
    for (k, v) in t {
        match v {
            Value::Table(inner) => out.extend(flatten(inner).into_iter().map(|(k2, v2)| (format!("{k}.{k2}"), v2))),
            _ => out.push((k.clone(), v)),
        }
    }
    out
}

fn parse_matrix(w: &mut Walker, norm: Option<&toml::Table>, n: usize, family: Family) -> Option<Vec<Vec<f64>>> {
    let d = n + 1;
    let Some(v) = norm.and_then(|t| t.get("matrix")) else {
        if family == Family::Ellipsoid {
            w.err("norm.matrix", "required for the ellipsoid family");
        }
        return None;
    };
    if family == Family::Isotropic {
        w.err("norm.matrix", "not used by the isotropic family");
        return None;
    }
    let Value::Array(rows) = v else {
        w.err("norm.matrix", "expected an array of rows");
        return None;
    };
    if rows.len() != d {
        w.err("norm.matrix", format!("expected {d} rows, got {}", rows.len()));
        return None;
    }
    let mut out = Vec::with_capacity(d);
    for (i, r) in rows.iter().enumerate() {
        let row = w.floats(r, &format!("norm.matrix[{i}]"))?;
        if row.len() != d {
            w.err(&format!("norm.matrix[{i}]"), format!("expected {d} entries, got {}", row.len()));
            return None;
        }
        out.push(row);
    }
    Some(out)
}

fn parse_terms(w: &mut Walker, norm: Option<&toml::Table>, n: usize, family: Family) -> Vec<TermDecl> {
    let Some(v) = norm.and_then(|t| t.get("terms")) else {
        if family == Family::Perturbed {
            w.err("norm.terms", "the perturbed family needs at least one term");
        }
        return Vec::new();
    };
    if family != Family::Perturbed {
        w.err("norm.terms", "terms are only allowed for the perturbed family");
        return Vec::new();
    }
    let Value::Array(items) = v else {
        w.err("norm.terms", "expected an array of tables");
        return Vec::new();
    };
    let mut out = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let path = format!("norm.terms[{i}]");
        let Value::Table(t) = item else {
            w.err(&path, "expected a table");
            continue;
        };
        for k in t.keys() {
            if !["type", "center", "width", "amplitude"].contains(&k.as_str()) {
                w.err(&format!("{path}.{k}"), "unknown key (expected type, center, width, amplitude)");
            }
        }
        let kind = match w.string(Some(t), &path, "type") {
            Some(k @ ("bump" | "zonal")) => k.to_string(),
            Some(k) => {
                w.err(&format!("{path}.type"), format!("unknown term type '{k}' (expected bump or zonal)"));
                continue;
            }
            None => {
                w.err(&format!("{path}.type"), "missing");
                continue;
            }
        };
        let center = match t.get("center") {
            Some(c) => w.floats(c, &format!("{path}.center")),
            None => {
                w.err(&format!("{path}.center"), "missing");
                None
            }
        };
        let Some(center) = center else { continue };
        if center.len() != n + 1 {
            w.err(&format!("{path}.center"), format!("expected {} entries, got {}", n + 1, center.len()));
            continue;
        }
        let width = w.float(Some(t), &path, "width").unwrap_or(if kind == "zonal" { 0.0 } else { f64::NAN });
        if kind == "bump" && !(width > 0.0 && width <= 2.0) {
            w.err(&format!("{path}.width"), "bump terms need a width in (0, 2]");
        }
        let Some(amplitude) = w.float(Some(t), &path, "amplitude") else {
            w.err(&format!("{path}.amplitude"), "missing");
            continue;
        };
        out.push(TermDecl { kind, center, width, amplitude });
    }
    out
}

fn parse_seeds(w: &mut Walker, t: Option<&toml::Table>) -> Vec<u64> {
    let list = t.and_then(|t| t.get("list"));
    let start = w.int(t, "seeds", "start");
    let count = w.int(t, "seeds", "count");
    match (list, start, count) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            w.err("seeds", "give either list or start/count, not both");
            Vec::new()
        }
        (Some(Value::Array(a)), None, None) => {
            let mut out = Vec::new();
            for (i, v) in a.iter().enumerate() {
                match v.as_integer() {
                    Some(k) if k >= 0 => out.push(k as u64),
                    _ => w.err(&format!("seeds.list[{i}]"), "expected a non-negative integer"),
                }
            }
            out
        }
        (Some(_), None, None) => {
            w.err("seeds.list", "expected an array of integers");
            Vec::new()
        }
        (None, s, c) => {
            let s = s.unwrap_or(1);
            let c = c.unwrap_or(3);
            if s < 0 || !(1..=10_000).contains(&c) {
                w.err("seeds", "start must be non-negative and count in 1..=10000");
                return Vec::new();
            }
            (s as u64..(s + c) as u64).collect()
        }
    }
}

/// Builds the norm model of a clean declaration.
pub fn build_norm(decl: &NormDecl, n: usize) -> capmix_core::Result<NormModel> {
    let d = n + 1;
    let base = match (&decl.family, &decl.matrix) {
        (Family::Isotropic, _) | (Family::Perturbed, None) => NormModel::isotropic(n),
        (_, Some(rows)) => NormModel::ellipsoid(Matrix::from_fn(d, d, |i, j| rows[i][j]))?,
        (Family::Ellipsoid, None) => unreachable!("matrix presence checked during parsing"),
    };
    let mut terms = Vec::with_capacity(decl.terms.len());
    for t in &decl.terms {
        let kind = if t.kind == "bump" { TermKind::Bump } else { TermKind::Zonal };
        terms.push(ZonalTerm::new(kind, Vector::from_column_slice(&t.center), t.width, t.amplitude)?);
    }
    let model = if terms.is_empty() { base } else { base.with_terms(terms)? };
    Ok(model.with_fd_step(decl.fd_step))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config_str("[geometry]\nn = 2\nomega0 = 0.0\n[mesh]\nlevel = 3\n[suites]\nrun = [\"all\"]\n").unwrap();
        assert_eq!(c.suites.len(), SUITES.len());
        assert_eq!(c.seeds, vec![1, 2, 3]);
        assert_eq!(c.tolerance("af"), 1e-8);
        assert_eq!(c.norm.family, Family::Isotropic);
    }

    #[test]
    fn omega_at_the_closed_end_is_rejected() {
        let e = parse_config_str("[geometry]\nn = 2\nomega0 = -1.0\n").unwrap_err();
        assert_eq!(e.0.len(), 1);
        assert_eq!(e.0[0].path, "geometry.omega0");
        assert!(parse_config_str("[geometry]\nn = 2\nomega0 = -0.999\n").is_ok());
    }

    #[test]
    fn every_error_is_reported() {
        let text = "[geometry]\nn = 4\n[mesh]\nlevel = 99\nkind = \"hex\"\n[suites]\nrun = [\"af\", \"bogus\"]\n[numerics.tolerances]\nnope = 1.0\n";
        let e = parse_config_str(text).unwrap_err();
        let paths: Vec<&str> = e.0.iter().map(|x| x.path.as_str()).collect();
        for p in ["geometry.n", "mesh.level", "mesh.kind", "suites.run[1]", "numerics.tolerances.nope"] {
            assert!(paths.contains(&p), "{paths:?}");
        }
        let msg = e.0.iter().find(|x| x.path == "suites.run[1]").unwrap().message.clone();
        assert!(SUITES.iter().all(|s| msg.contains(s)));
    }

    #[test]
    fn perturbed_norm_round_trip() {
        let text = r#"
[geometry]
n = 2
omega0 = 0.1
[norm]
family = "perturbed"
matrix = [[1.0, 0.1, 0.3], [0.1, 1.3, 0.0], [0.3, 0.0, 1.0]]
terms = [{ type = "bump", center = [0.3, 0.2, 1.0], width = 0.6, amplitude = 0.05 }]
"#;
        let c = parse_config_str(text).unwrap();
        assert_eq!(c.norm_model.terms().len(), 1);
        assert!(!c.norm_model.is_quadratic());
    }
}
