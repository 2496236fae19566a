//! Convergence studies: one check evaluated over a range of mesh levels.
//!
//! Each row holds a representative value (first seed) and a residual, the
//! worst case over all seeds. Residuals of identities are their relative
//! deviations; `volume` and `cap-volume` use the change from the previous
//! level.

use std::sync::Arc;

use rayon::prelude::*;

use capmix_core::body::CapillaryBody;
use capmix_core::functionals::*;
use capmix_core::{CapFunction, CapMesh};

use crate::config::SuiteConfig;
use crate::report::ConvergenceTable;
use crate::suites::{build_function, build_mesh, equality_partner, kernel_residual, seed_body, thread_pool, STEINER_GRID};

pub const STUDY_CHECKS: [&str; 9] =
    ["af-equality", "cap-volume", "kernel", "minkowski", "routes", "self-adjoint", "steiner", "swap", "volume"];

#[derive(Debug)]
pub enum StudyError {
    UnknownCheck(String),
    BadLevels(String),
    Core(capmix_core::CoreError),
}

impl std::fmt::Display for StudyError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::UnknownCheck(c) => write!(f, "unknown check '{c}' (valid: {})", STUDY_CHECKS.join(", ")),
            Self::BadLevels(s) => write!(f, "invalid level range '{s}' (expected A..B with A <= B <= 7)"),
            Self::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for StudyError {}

impl From<capmix_core::CoreError> for StudyError {
    fn from(e: capmix_core::CoreError) -> Self {
        Self::Core(e)
    }
}

/// Parses `A..B` (inclusive) or `A..=B`.
pub fn parse_levels(s: &str) -> Result<(u32, u32), StudyError> {
    let bad = || StudyError::BadLevels(s.to_string());
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let (a, b): (u32, u32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a > b || b > 7 {
        return Err(bad());
    }
    Ok((a, b))
}

/// Value and residual of `check` at one level.
pub fn evaluate(config: &SuiteConfig, check: &str, level: u32) -> Result<(f64, f64), StudyError> {
    if !STUDY_CHECKS.contains(&check) {
        return Err(StudyError::UnknownCheck(check.into()));
    }
    let mesh = build_mesh(config, level)?;
    if check == "kernel" {
        return Ok((0.0, kernel_residual(&mesh, config.stencil_fraction)));
    }
    if check == "cap-volume" {
        let v = cap_volume(&mesh)?;
        return Ok((v, v));
    }
    let seeds = if config.seeds.is_empty() { vec![1] } else { config.seeds.clone() };
    let bodies: Vec<CapillaryBody> = seeds.par_iter().map(|&s| seed_body(&mesh, s, config.body_spec())).collect::<Result<_, _>>()?;
    let n = config.n;
    let rows: Vec<(f64, f64)> = (0..bodies.len())
        .into_par_iter()
        .map(|i| {
            let fs: Vec<&CapFunction> = (0..=n).map(|k| bodies[(i + k) % bodies.len()].function()).collect();
            per_seed(check, &mesh, &fs, seeds[i])
        })
        .collect::<Result<_, _>>()?;
    let residual = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok((rows[0].0, residual))
}

fn per_seed(check: &str, mesh: &Arc<CapMesh>, fs: &[&CapFunction], seed: u64) -> capmix_core::Result<(f64, f64)> {
    let b = fs[0];
    let n = mesh.n();
    Ok(match check {
        "volume" => (volume(b), volume(b)),
        "swap" => (mixed_volume_value(fs, MixedRoute::Anisotropic)?, swap_deviation(fs, MixedRoute::Anisotropic)?),
        "routes" => {
            let e = mixed_volume_value(fs, MixedRoute::Euclidean)?;
            let p = mixed_volume_value(fs, MixedRoute::Polyfit)?;
            (e, (e - p).abs() / e.abs().max(p.abs()).max(SCALE_FLOOR))
        }
        "minkowski" => {
            let mut worst: f64 = 0.0;
            for k in 0..n {
                worst = worst.max(minkowski_residual(b, k)?.relative());
            }
            (volume(b), worst)
        }
        "steiner" => (volume(b), steiner(b, &STEINER_GRID)?.max_relative_error),
        "af-equality" => {
            let k1 = build_function(mesh, equality_partner(fs[1].support(), seed, n))?;
            let r = af_check(&k1, fs[1], &fs[2..], MixedRoute::Anisotropic, 0.0)?;
            (r.lhs, r.relative_gap.abs())
        }
        "self-adjoint" => {
            if n < 2 {
                return Err(capmix_core::CoreError::UnsupportedDimension(n));
            }
            let op = OperatorA::new(fs[1], &fs[3.min(fs.len())..])?;
            let v = op.inner(&OperatorA::values(b), &op.apply(fs[2 % fs.len()])?);
            (v, op.self_adjointness(b, fs[2 % fs.len()])?)
        }
        _ => unreachable!("check names validated by evaluate"),
    })
}

/// Runs `check` over `levels` on a pool of `jobs` threads.
pub fn converge(config: &SuiteConfig, check: &str, levels: (u32, u32), jobs: usize) -> Result<ConvergenceTable, StudyError> {
    if !STUDY_CHECKS.contains(&check) {
        return Err(StudyError::UnknownCheck(check.into()));
    }
    let differenced = matches!(check, "volume" | "cap-volume");
    let first = if differenced && levels.0 > 0 { levels.0 - 1 } else { levels.0 };
    let pool = thread_pool(jobs);
    let mut evaluated = Vec::new();
    for level in first..=levels.1 {
        evaluated.push((level, pool.install(|| evaluate(config, check, level))?));
    }
    let mut rows = Vec::new();
    for (i, &(level, (value, residual))) in evaluated.iter().enumerate() {
        if level < levels.0 {
            continue;
        }
        let residual = if differenced {
            match i.checked_sub(1) {
                Some(p) => (value - evaluated[p].1 .0).abs() / value.abs().max(SCALE_FLOOR),
                None => f64::NAN,
            }
        } else {
            residual
        };
        rows.push((level, value, residual));
    }
    Ok(ConvergenceTable::from_levels(check, &rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_ranges() {
        assert_eq!(parse_levels("2..4").unwrap(), (2, 4));
        assert_eq!(parse_levels("3..=5").unwrap(), (3, 5));
        assert!(parse_levels("4..2").is_err());
        assert!(parse_levels("1..9").is_err());
        assert!(parse_levels("x").is_err());
    }
}
