//! CSV and JSON writers for solver, orbit, sweep and convergence output.
//!
//! Numbers are written with Rust's shortest round-trip formatting and lines
//! end in `\n`, so identical inputs give byte-identical files.

use std::io::Write;

use serde::Serialize;

use crate::analysis::{ConvergenceStudy, Slopes, SweepRecord};
use crate::bvp::Solution;
use crate::error::{Error, Result};
use crate::exact::{eval_exact, ExactProfile, Shape};
use crate::geometry::WidthProfile;
use crate::gspt::{sample_orbit, Direction, RegionLabel, SingularOrbit};

pub const PROFILE_HEADER: &str = "x,rho,j,J";
pub const SWEEP_HEADER: &str = "alpha,beta,region,left_layer,right_layer,crossing,J,agree";
pub const CONVERGENCE_HEADER: &str = "epsilon,err_L2,err_endpoint,err_flux";

/// Sidecar of a numerical solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionMeta {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    #[serde(rename = "L")]
    pub length: f64,
    pub n_cells: usize,
    #[serde(rename = "J_mean")]
    pub flux_mean: f64,
    pub flux_max_dev: f64,
    pub newton_iters: usize,
    pub continuation_steps: usize,
    pub residual_norm: f64,
}

impl From<&Solution> for SolutionMeta {
    fn from(s: &Solution) -> Self {
        Self {
            alpha: s.alpha,
            beta: s.beta,
            epsilon: s.epsilon,
            length: s.length,
            n_cells: s.n_cells(),
            flux_mean: s.flux_mean,
            flux_max_dev: s.flux_max_dev,
            newton_iters: s.newton_iters,
            continuation_steps: s.continuation_steps,
            residual_norm: s.residual_norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitMeta {
    pub region: RegionLabel,
    pub orbit_type: u8,
    pub rho0: f64,
    pub rho1: f64,
    pub slow_start: f64,
    pub slow_end: f64,
    #[serde(rename = "J_singular")]
    pub j_singular: f64,
}

impl From<&SingularOrbit> for OrbitMeta {
    fn from(o: &SingularOrbit) -> Self {
        Self {
            region: o.region,
            orbit_type: o.orbit_type,
            rho0: o.rho0,
            rho1: o.rho1,
            slow_start: o.slow_start,
            slow_end: o.slow_end,
            j_singular: o.j_singular,
        }
    }
}

/// Sidecar of a closed-form straight-corridor profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactMeta {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    #[serde(rename = "L")]
    pub length: f64,
    pub n_cells: usize,
    #[serde(rename = "J_mean")]
    pub flux_mean: f64,
    pub flux_max_dev: f64,
    /// Flux per unit width.
    #[serde(rename = "j")]
    pub flux_density: f64,
    pub shape: Shape,
    pub xi: Option<f64>,
}

impl ExactMeta {
    pub fn new(profile: &ExactProfile, k: f64, n_cells: usize) -> Self {
        Self {
            alpha: profile.alpha,
            beta: profile.beta,
            epsilon: profile.epsilon,
            length: profile.length,
            n_cells,
            flux_mean: k * profile.flux,
            flux_max_dev: 0.0,
            flux_density: profile.flux,
            shape: profile.shape,
            xi: profile.xi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopesMeta {
    pub slopes: Slopes,
}

fn rows<W: Write>(out: &mut W, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn direction(d: Option<Direction>) -> &'static str {
    d.map_or("none", Direction::as_str)
}

pub fn write_solution_csv<W: Write>(out: &mut W, solution: &Solution) -> Result<()> {
    rows(
        out,
        PROFILE_HEADER,
        solution
            .nodes
            .iter()
            .zip(&solution.rho)
            .zip(solution.nodal_fluxes())
            .map(|((x, r), (j, big))| format!("{x},{r},{j},{big}")),
    )
}

/// `n` equispaced slow points; a layer appears as two rows sharing `x`.
pub fn write_orbit_csv<W: Write>(
    out: &mut W,
    orbit: &SingularOrbit,
    profile: &WidthProfile,
    n: usize,
) -> Result<()> {
    let big = orbit.j_singular;
    rows(
        out,
        PROFILE_HEADER,
        sample_orbit(orbit, profile, n)?
            .into_iter()
            .map(|(x, r)| format!("{x},{r},{},{big}", big / profile.k(x))),
    )
}

/// The profile on `n_cells + 1` equispaced nodes of a corridor of constant
/// width `k`; the profile itself does not depend on `k`, only `J = k j` does.
pub fn write_exact_csv<W: Write>(out: &mut W, profile: &ExactProfile, k: f64, n_cells: usize) -> Result<()> {
    if n_cells == 0 {
        return Err(Error::InvalidParameter("need at least one cell".into()));
    }
    let len = profile.length;
    let (j, big) = (profile.flux, k * profile.flux);
    let lines = (0..=n_cells)
        .map(|i| {
            let x = if i == n_cells {
                len
            } else {
                len * i as f64 / n_cells as f64
            };
            eval_exact(profile, x).map(|r| format!("{x},{r},{j},{big}"))
        })
        .collect::<Result<Vec<_>>>()?;
    rows(out, PROFILE_HEADER, lines)
}

/// Observed layer directions per point, with the predicted region and the
/// agreement verdict; missing values are empty fields.
pub fn write_sweep_csv<W: Write>(out: &mut W, records: &[SweepRecord]) -> Result<()> {
    rows(
        out,
        SWEEP_HEADER,
        records.iter().map(|r| {
            let (left, right) = match &r.observed {
                Some(obs) => {
                    let (l, r) = obs.directions();
                    (direction(l), direction(r))
                }
                None => ("", ""),
            };
            format!(
                "{},{},{},{left},{right},{},{},{}",
                r.alpha,
                r.beta,
                opt(r.predicted.map(|p| p.region)),
                opt(r.observed.and_then(|o| o.interior_crossing)),
                opt(r.flux),
                opt(r.agree),
            )
        }),
    )
}

pub fn write_convergence_csv<W: Write>(out: &mut W, study: &ConvergenceStudy) -> Result<()> {
    rows(
        out,
        CONVERGENCE_HEADER,
        study
            .records
            .iter()
            .map(|r| format!("{},{},{},{}", r.epsilon, r.err_l2, r.err_endpoint, r.err_flux)),
    )
}

/// Pretty JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(out: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}
