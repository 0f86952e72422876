//! Stationary solves of `(k j)' = 0`, `j = -eps rho' + rho (1 - rho)`, with
//! inflow `j(0) = alpha (1 - rho(0))` and outflow `j(L) = beta rho(L)`.
//!
//! The discretisation is a conservative finite-volume scheme on a node
//! grid (uniform apart from nodes snapped onto jumps of `k`). Face fluxes
//! are centred:
//!
//! ```text
//! K_f = k(x_f) * ( -eps (rho_{f+1} - rho_f) / h_f + m (1 - m) ),   m = (rho_f + rho_{f+1}) / 2
//! ```
//!
//! Interior rows are the flux jumps `K_f - K_{f-1}` (left undivided: a
//! division by `h` would put the round-off floor of the diffusive term,
//! about `eps ulp / h^2`, above useful tolerances on fine grids). The two
//! boundary rows impose `K_{1/2} / k(0) = alpha (1 - rho_0)` and
//! `K_{n-1/2} / k(L) = beta rho_n`. The Newton system is tridiagonal and solved
//! directly; small diffusivities are reached by continuation in `eps`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::WidthProfile;
use crate::tridiag::Tridiagonal;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 50;
pub const DEFAULT_RATIO: f64 = 0.5;
const MAX_HALVINGS: usize = 8;
const MAX_RETRIES: usize = 12;
const MIN_CELLS: usize = 8;
const MAX_CELLS: usize = 1 << 20;

/// `max(512, ceil(40 L / eps))`, capped at 2^20: about forty cells across
/// each `O(eps)` boundary layer.
pub fn default_cells(length: f64, epsilon: f64) -> usize {
    let wanted = (40.0 * length / epsilon).ceil();
    if !wanted.is_finite() || wanted >= MAX_CELLS as f64 {
        return MAX_CELLS;
    }
    (wanted as usize).clamp(512, MAX_CELLS)
}

/// Geometry of the discrete problem; independent of `alpha`, `beta`, `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nodes: Vec<f64>,
    /// `k` at face midpoints (one-sided value on each smooth piece).
    pub face_k: Vec<f64>,
    /// `k` at the two boundary nodes.
    pub k_left: f64,
    pub k_right: f64,
    /// Nodes that coincide with a jump of `k`.
    pub jump_nodes: Vec<usize>,
}

impl Grid {
    pub fn new(profile: &WidthProfile, n_cells: usize) -> Result<Self> {
        let length = profile.length();
        let h = length / n_cells as f64;
        let mut nodes: Vec<f64> = (0..=n_cells).map(|i| i as f64 * h).collect();
        nodes[n_cells] = length;
        let mut jump_nodes = Vec::new();
        for b in profile.breakpoints() {
            let idx = ((b / h).round() as usize).clamp(1, n_cells - 1);
            if jump_nodes.contains(&idx) {
                return Err(Error::InvalidParameter(format!(
                    "{n_cells} cells cannot separate the jumps of k; refine the grid"
                )));
            }
            nodes[idx] = b;
            jump_nodes.push(idx);
        }
        let face_k = nodes
            .windows(2)
            .map(|w| profile.k(0.5 * (w[0] + w[1])))
            .collect();
        let (k_left, k_right) = profile.endpoints();
        Ok(Self {
            nodes,
            face_k,
            k_left,
            k_right,
            jump_nodes,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn spacing(&self, face: usize) -> f64 {
        self.nodes[face + 1] - self.nodes[face]
    }
}

/// One fully specified boundary-value problem.
#[derive(Debug, Clone)]
pub struct BvpProblem {
    profile: WidthProfile,
    alpha: f64,
    beta: f64,
    epsilon: f64,
    grid: Grid,
}

impl BvpProblem {
    /// `n_cells = None` picks [`default_cells`].
    pub fn new(
        profile: WidthProfile,
        alpha: f64,
        beta: f64,
        epsilon: f64,
        n_cells: Option<usize>,
    ) -> Result<Self> {
        check_rates(alpha, beta)?;
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let n_cells = n_cells.unwrap_or_else(|| default_cells(profile.length(), epsilon));
        if n_cells < MIN_CELLS {
            return Err(Error::InvalidParameter(format!(
                "need at least {MIN_CELLS} cells, got {n_cells}"
            )));
        }
        if !profile.validate().positive {
            return Err(Error::InvalidProfile("k must be positive on [0, L]".into()));
        }
        let grid = Grid::new(&profile, n_cells)?;
        Ok(Self {
            profile,
            alpha,
            beta,
            epsilon,
            grid,
        })
    }

    pub fn profile(&self) -> &WidthProfile {
        &self.profile
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn n_cells(&self) -> usize {
        self.grid.n_cells()
    }
    pub fn n_nodes(&self) -> usize {
        self.grid.nodes.len()
    }

    /// Same problem on the same grid with a different diffusivity.
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self {
            epsilon,
            ..self.clone()
        }
    }

    /// The mirrored problem `(k(L - x), beta, alpha)`.
    pub fn reflected(&self) -> Result<Self> {
        Self::new(
            self.profile.reflect(),
            self.beta,
            self.alpha,
            self.epsilon,
            Some(self.n_cells()),
        )
    }

    fn check_len(&self, rho: &[f64]) -> Result<()> {
        if rho.len() != self.n_nodes() {
            return Err(Error::SizeMismatch {
                expected: self.n_nodes(),
                got: rho.len(),
            });
        }
        Ok(())
    }

    fn face_flux(&self, face: usize, rho: &[f64]) -> f64 {
        let h = self.grid.spacing(face);
        let m = 0.5 * (rho[face] + rho[face + 1]);
        self.grid.face_k[face] * (-self.epsilon * (rho[face + 1] - rho[face]) / h + m * (1.0 - m))
    }

    /// Total flux `K = k j` on every face.
    pub fn face_fluxes(&self, rho: &[f64]) -> Result<Vec<f64>> {
        self.check_len(rho)?;
        Ok((0..self.n_cells()).map(|f| self.face_flux(f, rho)).collect())
    }
}

pub(crate) fn check_rates(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must lie in (0, 1), got {beta}"
        )));
    }
    Ok(())
}

/// Discrete conservation defect at every node.
pub fn residual(problem: &BvpProblem, rho: &[f64]) -> Result<Vec<f64>> {
    let fluxes = problem.face_fluxes(rho)?;
    let grid = &problem.grid;
    let n = grid.n_cells();
    let mut out = Vec::with_capacity(n + 1);
    out.push(fluxes[0] / grid.k_left - problem.alpha * (1.0 - rho[0]));
    for i in 1..n {
        out.push(fluxes[i] - fluxes[i - 1]);
    }
    out.push(fluxes[n - 1] / grid.k_right - problem.beta * rho[n]);
    Ok(out)
}

/// Exact derivative of [`residual`] with respect to the nodal densities.
pub fn jacobian(problem: &BvpProblem, rho: &[f64]) -> Result<Tridiagonal> {
    problem.check_len(rho)?;
    let grid = &problem.grid;
    let n = grid.n_cells();
    let eps = problem.epsilon;
    // dK_f/drho_f and dK_f/drho_{f+1}
    let (dk_left, dk_right): (Vec<f64>, Vec<f64>) = (0..n)
        .map(|f| {
            let h = grid.spacing(f);
            let conv = 0.5 * (1.0 - (rho[f] + rho[f + 1]));
            let k = grid.face_k[f];
            (k * (eps / h + conv), k * (-eps / h + conv))
        })
        .unzip();

    let mut jac = Tridiagonal::zeros(n + 1);
    jac.diag[0] = dk_left[0] / grid.k_left + problem.alpha;
    jac.upper[0] = dk_right[0] / grid.k_left;
    for i in 1..n {
        jac.lower[i] = -dk_left[i - 1];
        jac.diag[i] = dk_left[i] - dk_right[i - 1];
        jac.upper[i] = dk_right[i];
    }
    jac.lower[n] = dk_left[n - 1] / grid.k_right;
    jac.diag[n] = dk_right[n - 1] / grid.k_right - problem.beta;
    Ok(jac)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// A converged discrete solution together with solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub length: f64,
    pub nodes: Vec<f64>,
    pub rho: Vec<f64>,
    /// `K = k j` on each face.
    pub face_flux: Vec<f64>,
    /// `k` at each face midpoint.
    pub face_k: Vec<f64>,
    /// Nodal reconstruction of `K` (second-order derivative stencil); the
    /// spread of these values measures how well `K` is kept constant.
    pub node_flux: Vec<f64>,
    pub flux_mean: f64,
    pub flux_max_dev: f64,
    pub newton_iters: usize,
    pub continuation_steps: usize,
    pub residual_norm: f64,
}

impl Solution {
    fn assemble(
        problem: &BvpProblem,
        rho: Vec<f64>,
        newton_iters: usize,
        residual_norm: f64,
    ) -> Self {
        let grid = &problem.grid;
        let face_flux = problem.face_fluxes(&rho).expect("length checked by caller");
        let n = grid.n_cells();
        let eps = problem.epsilon;
        let mut node_flux = Vec::with_capacity(n + 1);
        node_flux.push(grid.k_left * problem.alpha * (1.0 - rho[0]));
        for i in 1..n {
            if grid.jump_nodes.contains(&i) {
                node_flux.push(0.5 * (face_flux[i - 1] + face_flux[i]));
                continue;
            }
            let (hl, hr) = (grid.spacing(i - 1), grid.spacing(i));
            let slope = -hr / (hl * (hl + hr)) * rho[i - 1]
                + (hr - hl) / (hl * hr) * rho[i]
                + hl / (hr * (hl + hr)) * rho[i + 1];
            let k = problem.profile.k(grid.nodes[i]);
            node_flux.push(k * (-eps * slope + rho[i] * (1.0 - rho[i])));
        }
        node_flux.push(grid.k_right * problem.beta * rho[n]);

        let flux_mean = face_flux.iter().sum::<f64>() / n as f64;
        let flux_max_dev = node_flux
            .iter()
            .fold(0.0_f64, |acc, v| acc.max((v - flux_mean).abs()));
        Self {
            alpha: problem.alpha,
            beta: problem.beta,
            epsilon: problem.epsilon,
            length: problem.profile.length(),
            nodes: grid.nodes.clone(),
            rho,
            face_k: grid.face_k.clone(),
            face_flux,
            node_flux,
            flux_mean,
            flux_max_dev,
            newton_iters,
            continuation_steps: 1,
            residual_norm,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Discrete `||rho'||_2` from cell-wise difference quotients.
    pub fn gradient_l2(&self) -> f64 {
        self.nodes
            .windows(2)
            .zip(self.rho.windows(2))
            .map(|(x, r)| {
                let h = x[1] - x[0];
                (r[1] - r[0]).powi(2) / h
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Linear interpolation of the nodal densities.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        let idx = self.nodes.partition_point(|&p| p <= x).clamp(1, n - 1);
        let (x0, x1) = (self.nodes[idx - 1], self.nodes[idx]);
        let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        self.rho[idx - 1] + t * (self.rho[idx] - self.rho[idx - 1])
    }

    /// Per-node `(j, J)`, face quantities averaged onto nodes.
    pub fn nodal_fluxes(&self) -> Vec<(f64, f64)> {
        let n = self.n_cells();
        let face_j: Vec<f64> = self
            .face_flux
            .iter()
            .zip(&self.face_k)
            .map(|(big, k)| big / k)
            .collect();
        (0..=n)
            .map(|i| {
                if i == 0 {
                    (face_j[0], self.face_flux[0])
                } else if i == n {
                    (face_j[n - 1], self.face_flux[n - 1])
                } else {
                    (
                        0.5 * (face_j[i - 1] + face_j[i]),
                        0.5 * (self.face_flux[i - 1] + self.face_flux[i]),
                    )
                }
            })
            .collect()
    }
}

/// `(mean K over faces, max_i |J_i - mean| / mean)`.
pub fn flux_of(solution: &Solution) -> (f64, f64) {
    (
        solution.flux_mean,
        solution.flux_max_dev / solution.flux_mean.abs(),
    )
}

/// Size of the rounding error in one residual evaluation: the diffusive
/// flux `k eps (rho_{f+1} - rho_f) / h` is only known to about
/// `k eps ulp / h`.
pub fn residual_noise_floor(problem: &BvpProblem) -> f64 {
    let grid = &problem.grid;
    let scale = (0..grid.n_cells())
        .map(|f| grid.face_k[f] * (problem.epsilon / grid.spacing(f) + 1.0))
        .fold(0.0, f64::max);
    16.0 * f64::EPSILON * scale
}

/// Damped Newton iteration from `initial`, stopping once the residual
/// max-norm is below `tol` or below [`residual_noise_floor`], whichever is
/// larger.
pub fn newton_solve(
    problem: &BvpProblem,
    initial: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Solution> {
    problem.check_len(initial)?;
    if initial.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
        return Err(Error::InvalidParameter(
            "initial guess must lie in (0, 1) at every node".into(),
        ));
    }
    let fail = |iterations, residual, reason, rho: &[f64]| Error::NonConvergence {
        epsilon: problem.epsilon,
        iterations,
        residual,
        reason,
        last_iterate: rho.to_vec(),
    };

    let target = tol.max(residual_noise_floor(problem));
    let mut rho = initial.to_vec();
    let mut res = residual(problem, &rho)?;
    let mut norm = inf_norm(&res);
    let mut iters = 0;
    while norm > target {
        if iters == max_iter {
            return Err(fail(iters, norm, "iteration limit reached", &rho));
        }
        iters += 1;
        let jac = jacobian(problem, &rho)?;
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let Some(step) = jac.solve(&rhs) else {
            return Err(fail(iters, norm, "singular jacobian", &rho));
        };
        // backtrack until the residual decreases inside the admissible box
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = rho.iter().zip(&step).map(|(r, d)| r + scale * d).collect();
            scale *= 0.5;
            if trial.iter().any(|r| !(-0.25..=1.25).contains(r)) {
                continue;
            }
            let trial_res = residual(problem, &trial)?;
            let trial_norm = inf_norm(&trial_res);
            if !trial_norm.is_finite() {
                continue;
            }
            let decreased = trial_norm < norm;
            accepted = Some((trial, trial_res, trial_norm));
            if decreased {
                break;
            }
        }
        let Some((trial, trial_res, trial_norm)) = accepted else {
            return Err(fail(iters, norm, "iterate left [-0.25, 1.25]", &rho));
        };
        rho = trial;
        res = trial_res;
        norm = trial_norm;
    }
    Ok(Solution::assemble(problem, rho, iters, norm))
}

/// Geometric `eps`-continuation from `rho = 1/2`: solves at
/// `eps_start, ratio * eps_start, ...` down to the problem's `eps`, each
/// solve warm-started from the previous one.
pub fn continuation_solve(
    problem: &BvpProblem,
    eps_start: f64,
    ratio: f64,
    tol: f64,
) -> Result<Solution> {
    continuation_solve_with(problem, eps_start, ratio, tol, DEFAULT_MAX_ITER)
}

pub fn continuation_solve_with(
    problem: &BvpProblem,
    eps_start: f64,
    ratio: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Solution> {
    let target = problem.epsilon;
    if !(eps_start >= target) {
        return Err(Error::InvalidParameter(format!(
            "eps_start = {eps_start} must not be below the target epsilon {target}"
        )));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "continuation ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let mut guess = vec![0.5; problem.n_nodes()];
    let mut last = None;
    let mut eps = eps_start;
    let mut steps = 0;
    let mut total_iters = 0;
    let mut retries = 0;
    loop {
        let stage = problem.with_epsilon(eps);
        let sol = match newton_solve(&stage, &guess, tol, max_iter) {
            Ok(sol) => sol,
            // a failed stage is retried from the last converged diffusivity
            // with a geometrically halved step
            Err(Error::NonConvergence { .. }) if retries < MAX_RETRIES && last.is_some() => {
                let prev: f64 = last.unwrap();
                eps = (prev * eps).sqrt();
                retries += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        steps += 1;
        total_iters += sol.newton_iters;
        if eps <= target {
            return Ok(Solution {
                newton_iters: total_iters,
                continuation_steps: steps,
                ..sol
            });
        }
        guess = sol.rho;
        last = Some(eps);
        eps = (ratio * eps).max(target);
    }
}

/// Newton and continuation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// First diffusivity of the schedule; `None` means `max(1, eps)`.
    pub eps_start: Option<f64>,
    pub ratio: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            eps_start: None,
            ratio: DEFAULT_RATIO,
        }
    }
}

impl SolverOptions {
    pub fn solve(&self, problem: &BvpProblem) -> Result<Solution> {
        let start = self.eps_start.unwrap_or(problem.epsilon.max(1.0));
        continuation_solve_with(problem, start, self.ratio, self.tol, self.max_iter)
    }
}

/// Continuation with the default schedule: start at `max(1, eps)`, ratio 1/2,
/// residual tolerance `1e-10`.
pub fn solve(problem: &BvpProblem) -> Result<Solution> {
    SolverOptions::default().solve(problem)
}

/// A priori bound on `||rho'||_2` obtained by integrating the equation once.
pub fn gradient_bound(problem: &BvpProblem) -> f64 {
    let (kmin, kmax) = problem.profile.extrema();
    let len = problem.profile.length();
    let eps = problem.epsilon;
    (len.sqrt() * kmax / 4.0 + (len * kmax * kmax / 16.0 + 4.0 * problem.alpha * eps * kmin * kmax).sqrt())
        / (2.0 * eps * kmin)
}
