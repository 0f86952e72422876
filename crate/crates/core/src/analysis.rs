//! Layer detection, phase-diagram sweeps and viscous-vs-singular
//! comparisons.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvp::{BvpProblem, Solution, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::WidthProfile;
use crate::gspt::{self, Direction, Layer, RegionLabel, SingularOrbit};

pub const DEFAULT_PROBE_FACTOR: f64 = 20.0;
pub const DEFAULT_LAYER_THRESHOLD: f64 = 0.05;

/// Probe width `min(probe_factor * eps, L / 4)` and minimal jump `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayerCriteria {
    pub probe_factor: f64,
    pub threshold: f64,
}

impl Default for LayerCriteria {
    fn default() -> Self {
        Self {
            probe_factor: DEFAULT_PROBE_FACTOR,
            threshold: DEFAULT_LAYER_THRESHOLD,
        }
    }
}

impl LayerCriteria {
    pub fn probe_width(&self, epsilon: f64, length: f64) -> f64 {
        (self.probe_factor * epsilon).min(0.25 * length)
    }

    /// Direction of a singular layer, or `None` when it is below threshold.
    pub fn visible(&self, layer: Option<&Layer>) -> Option<Direction> {
        layer
            .filter(|l| l.height() > self.threshold)
            .map(|l| l.direction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservedLayer {
    /// Along increasing `x`.
    pub direction: Direction,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerReport {
    pub left: Option<ObservedLayer>,
    pub right: Option<ObservedLayer>,
    pub interior_crossing: Option<f64>,
}

impl LayerReport {
    pub fn directions(&self) -> (Option<Direction>, Option<Direction>) {
        (
            self.left.map(|l| l.direction),
            self.right.map(|l| l.direction),
        )
    }
}

pub fn detect_layers(solution: &Solution, epsilon: f64) -> LayerReport {
    detect_layers_with(solution, epsilon, &LayerCriteria::default())
}

pub fn detect_layers_with(solution: &Solution, epsilon: f64, criteria: &LayerCriteria) -> LayerReport {
    let len = solution.length;
    let w = criteria.probe_width(epsilon, len);
    let n = solution.rho.len();
    let observe = |outer: f64, inner: f64, left: bool| {
        let jump = if left { inner - outer } else { outer - inner };
        (jump.abs() > criteria.threshold).then(|| ObservedLayer {
            direction: if jump >= 0.0 {
                Direction::Increasing
            } else {
                Direction::Decreasing
            },
            height: jump.abs(),
        })
    };
    let left = observe(solution.rho[0], solution.interpolate(w), true);
    let right = observe(solution.rho[n - 1], solution.interpolate(len - w), false);

    let interior_crossing = solution
        .nodes
        .windows(2)
        .zip(solution.rho.windows(2))
        .filter(|(x, _)| x[0] >= w && x[1] <= len - w)
        .find_map(|(x, r)| {
            let (a, b) = (r[0] - 0.5, r[1] - 0.5);
            if a == 0.0 {
                Some(x[0])
            } else {
                (a.signum() != b.signum()).then(|| x[0] + (x[1] - x[0]) * a / (a - b))
            }
        });
    LayerReport {
        left,
        right,
        interior_crossing,
    }
}

/// Layer structure expected from the singular limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub region: RegionLabel,
    pub left: Option<Direction>,
    pub right: Option<Direction>,
}

pub fn predict(profile: &WidthProfile, alpha: f64, beta: f64, criteria: &LayerCriteria) -> Result<Prediction> {
    let orbit = gspt::build_singular_orbit(profile, alpha, beta)?;
    Ok(Prediction {
        region: orbit.region,
        left: criteria.visible(orbit.left_layer.as_ref()),
        right: criteria.visible(orbit.right_layer.as_ref()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub alpha: f64,
    pub beta: f64,
    pub predicted: Option<Prediction>,
    pub observed: Option<LayerReport>,
    #[serde(rename = "J")]
    pub flux: Option<f64>,
    pub agree: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub n_alpha: usize,
    pub n_beta: usize,
    pub margin: f64,
    pub criteria: LayerCriteria,
    pub solver: SolverOptions,
    pub n_cells: Option<usize>,
}

impl SweepSettings {
    pub fn new(n_alpha: usize, n_beta: usize, margin: f64) -> Self {
        Self {
            n_alpha,
            n_beta,
            margin,
            criteria: LayerCriteria::default(),
            solver: SolverOptions::default(),
            n_cells: None,
        }
    }
}

/// Distance of `(alpha, beta)` to the nearest line carrying one of the
/// separating curves, measured in the quantity that defines that curve.
/// `None` when `k` is not monotone.
pub fn curve_distance(profile: &WidthProfile, alpha: f64, beta: f64) -> Option<f64> {
    let report = profile.validate();
    if !report.smooth {
        return None;
    }
    let (k0, k1, a, b) = if report.monotone_decreasing {
        let (k0, k1) = profile.endpoints();
        (k0, k1, alpha, beta)
    } else if profile.reflect().validate().monotone_decreasing {
        let (k1, k0) = profile.endpoints();
        (k0, k1, beta, alpha)
    } else {
        return None;
    };
    let sd = gspt::special_densities(k0, k1, a, b).ok()?;
    let mut d = (a - sd.rho_f)
        .abs()
        .min((a - 1.0 + sd.rho_f).abs())
        .min((b - 0.5).abs());
    if let Some(star) = sd.rho_star_of_alpha {
        d = d.min((b - star).abs()).min((b - 1.0 + star).abs());
    }
    if let Some(star) = sd.rho_star_of_beta {
        d = d.min((a - star).abs()).min((a - 1.0 + star).abs());
    }
    Some(d)
}

/// Solves on the open grid `((i + 1/2) / n_alpha, (j + 1/2) / n_beta)`,
/// skipping points closer than `margin` to a separating curve, and compares
/// the observed layers with the singular prediction. Records come back in
/// grid order (alpha outer, beta inner).
pub fn sweep_phase_diagram(profile: &WidthProfile, epsilon: f64, settings: &SweepSettings) -> Result<Vec<SweepRecord>> {
    if settings.n_alpha == 0 || settings.n_beta == 0 {
        return Err(Error::InvalidParameter("sweep grid must be non-empty".into()));
    }
    let points: Vec<(f64, f64)> = (0..settings.n_alpha)
        .flat_map(|i| {
            (0..settings.n_beta).map(move |j| {
                (
                    (i as f64 + 0.5) / settings.n_alpha as f64,
                    (j as f64 + 0.5) / settings.n_beta as f64,
                )
            })
        })
        .filter(|&(a, b)| curve_distance(profile, a, b).is_none_or(|d| d >= settings.margin))
        .collect();
    Ok(points
        .into_par_iter()
        .map(|(alpha, beta)| sweep_point(profile, epsilon, alpha, beta, settings))
        .collect())
}

fn sweep_point(profile: &WidthProfile, epsilon: f64, alpha: f64, beta: f64, settings: &SweepSettings) -> SweepRecord {
    let predicted = predict(profile, alpha, beta, &settings.criteria).ok();
    let mut record = SweepRecord {
        alpha,
        beta,
        predicted,
        observed: None,
        flux: None,
        agree: None,
        error: None,
    };
    let solved = BvpProblem::new(profile.clone(), alpha, beta, epsilon, settings.n_cells)
        .and_then(|p| settings.solver.solve(&p));
    match solved {
        Ok(sol) => {
            let report = detect_layers_with(&sol, epsilon, &settings.criteria);
            record.agree = predicted.map(|p| report.directions() == (p.left, p.right));
            record.observed = Some(report);
            record.flux = Some(sol.flux_mean);
        }
        Err(e) => {
            // a failed solve cannot confirm the prediction
            record.agree = predicted.map(|_| false);
            record.error = Some(e.to_string());
        }
    }
    record
}

/// Fraction of points with a prediction that agree with it.
pub fn agreement_fraction(records: &[SweepRecord]) -> Option<f64> {
    let judged: Vec<bool> = records.iter().filter_map(|r| r.agree).collect();
    (!judged.is_empty()).then(|| judged.iter().filter(|a| **a).count() as f64 / judged.len() as f64)
}

/// Distances between one viscous solution and its singular limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub epsilon: f64,
    /// Over the whole corridor, layers included.
    pub err_l2: f64,
    /// Over the slow part only: a collar of the probe width is cut off at
    /// each layered end.
    pub err_l2_slow: f64,
    pub err_endpoint: f64,
    pub err_flux: f64,
    pub hausdorff: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slopes {
    pub l2: f64,
    pub l2_slow: f64,
    pub endpoint: f64,
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub records: Vec<ConvergenceRecord>,
    pub slopes: Slopes,
}

fn errors_against(solution: &Solution, orbit: &SingularOrbit, profile: &WidthProfile, collar: f64) -> ConvergenceRecord {
    let len = solution.length;
    let lo = if orbit.left_layer.is_some() { collar } else { 0.0 };
    let hi = if orbit.right_layer.is_some() { len - collar } else { len };
    let sq: Vec<f64> = solution
        .nodes
        .iter()
        .zip(&solution.rho)
        .map(|(x, r)| (r - orbit.slow_at(profile, *x)).powi(2))
        .collect();
    let (mut full, mut slow) = (0.0, 0.0);
    for i in 0..sq.len() - 1 {
        let (x0, x1) = (solution.nodes[i], solution.nodes[i + 1]);
        let part = 0.5 * (x1 - x0) * (sq[i] + sq[i + 1]);
        full += part;
        if x0 >= lo && x1 <= hi {
            slow += part;
        }
    }
    let n = solution.rho.len();
    let left = (solution.rho[0] - orbit.rho0).abs();
    let right = (solution.rho[n - 1] - orbit.rho1).abs();
    let err_endpoint = match (orbit.left_layer.is_some(), orbit.right_layer.is_some()) {
        (true, false) => left,
        (false, true) => right,
        _ => left.max(right),
    };
    ConvergenceRecord {
        epsilon: solution.epsilon,
        err_l2: full.sqrt(),
        err_l2_slow: slow.sqrt(),
        err_endpoint,
        err_flux: (solution.flux_mean - orbit.j_singular).abs(),
        hausdorff: None,
    }
}

/// Single-`eps` record including the Hausdorff distance between the
/// solution polyline and the orbit sampled at `10 n_cells` slow points.
pub fn compare_to_singular(solution: &Solution, orbit: &SingularOrbit, profile: &WidthProfile) -> Result<ConvergenceRecord> {
    compare_with(solution, orbit, profile, &LayerCriteria::default())
}

pub fn compare_with(
    solution: &Solution,
    orbit: &SingularOrbit,
    profile: &WidthProfile,
    criteria: &LayerCriteria,
) -> Result<ConvergenceRecord> {
    if orbit.alpha != solution.alpha || orbit.beta != solution.beta {
        return Err(Error::InvalidParameter(format!(
            "orbit built for (alpha, beta) = ({}, {}) but solution has ({}, {})",
            orbit.alpha, orbit.beta, solution.alpha, solution.beta
        )));
    }
    if profile.length() != solution.length {
        return Err(Error::InvalidParameter(format!(
            "profile length {} differs from solution length {}",
            profile.length(),
            solution.length
        )));
    }
    let collar = criteria.probe_width(solution.epsilon, solution.length);
    let mut record = errors_against(solution, orbit, profile, collar);
    let curve: Vec<(f64, f64)> = solution.nodes.iter().copied().zip(solution.rho.iter().copied()).collect();
    let sampled = gspt::sample_orbit(orbit, profile, 10 * solution.n_cells())?;
    record.hausdorff = Some(hausdorff(&curve, &sampled));
    Ok(record)
}

/// Solves along `eps_list` (strictly decreasing, at least four values) and
/// fits `log err` against `log eps`.
pub fn convergence_study(profile: &WidthProfile, alpha: f64, beta: f64, eps_list: &[f64]) -> Result<ConvergenceStudy> {
    convergence_study_with(profile, alpha, beta, eps_list, &SolverOptions::default(), &LayerCriteria::default())
}

pub fn convergence_study_with(
    profile: &WidthProfile,
    alpha: f64,
    beta: f64,
    eps_list: &[f64],
    solver: &SolverOptions,
    criteria: &LayerCriteria,
) -> Result<ConvergenceStudy> {
    if eps_list.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least four diffusivities, got {}",
            eps_list.len()
        )));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter(
            "diffusivities must be positive and strictly decreasing".into(),
        ));
    }
    let orbit = gspt::build_singular_orbit(profile, alpha, beta)?;
    let records = eps_list
        .par_iter()
        .map(|&eps| {
            let problem = BvpProblem::new(profile.clone(), alpha, beta, eps, None)?;
            let sol = solver.solve(&problem)?;
            compare_with(&sol, &orbit, profile, criteria)
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = |f: fn(&ConvergenceRecord) -> f64| {
        let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.epsilon, f(r))).collect();
        log_log_slope(&pts)
    };
    let slopes = Slopes {
        l2: fit(|r| r.err_l2),
        l2_slow: fit(|r| r.err_l2_slow),
        endpoint: fit(|r| r.err_endpoint),
        flux: fit(|r| r.err_flux),
    };
    Ok(ConvergenceStudy { records, slopes })
}

/// Least-squares slope of `ln y` against `ln x`; points with a
/// non-positive coordinate are ignored. `NaN` with fewer than two points.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return f64::NAN;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn point_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt()
}

/// Bounding-box tree over the segments of a polyline with non-decreasing
/// `x`, for nearest-point queries.
struct SegmentTree<'a> {
    line: &'a [(f64, f64)],
    leaves: usize,
    /// `[xmin, xmax, ymin, ymax]`, heap layout; leaf `i` sits at `leaves + i`.
    boxes: Vec<[f64; 4]>,
}

impl<'a> SegmentTree<'a> {
    fn new(line: &'a [(f64, f64)]) -> Self {
        let segs = line.len().saturating_sub(1).max(1);
        let leaves = segs.next_power_of_two();
        let empty = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        let mut boxes = vec![empty; 2 * leaves];
        for i in 0..segs {
            let a = line[i];
            let b = line[(i + 1).min(line.len() - 1)];
            boxes[leaves + i] = [a.0.min(b.0), a.0.max(b.0), a.1.min(b.1), a.1.max(b.1)];
        }
        for j in (1..leaves).rev() {
            let (l, r) = (boxes[2 * j], boxes[2 * j + 1]);
            boxes[j] = [l[0].min(r[0]), l[1].max(r[1]), l[2].min(r[2]), l[3].max(r[3])];
        }
        Self { line, leaves, boxes }
    }

    fn box_distance(&self, node: usize, p: (f64, f64)) -> f64 {
        let b = self.boxes[node];
        let dx = (b[0] - p.0).max(p.0 - b[1]).max(0.0);
        let dy = (b[2] - p.1).max(p.1 - b[3]).max(0.0);
        if dx.is_nan() || dy.is_nan() {
            return f64::INFINITY;
        }
        (dx * dx + dy * dy).sqrt()
    }

    fn distance(&self, p: (f64, f64)) -> f64 {
        // the segment spanning p.x gives a tight first bound
        let segs = self.line.len().saturating_sub(1).max(1);
        let near = self.line[1..].partition_point(|q| q.0 < p.0).min(segs - 1);
        let mut best = point_segment(p, self.line[near], self.line[(near + 1).min(self.line.len() - 1)]);
        let mut stack = vec![1usize];
        while let Some(node) = stack.pop() {
            if self.box_distance(node, p) >= best {
                continue;
            }
            if node >= self.leaves {
                let i = node - self.leaves;
                let b = self.line[(i + 1).min(self.line.len() - 1)];
                best = best.min(point_segment(p, self.line[i], b));
                continue;
            }
            let (l, r) = (2 * node, 2 * node + 1);
            if self.box_distance(l, p) <= self.box_distance(r, p) {
                stack.push(r);
                stack.push(l);
            } else {
                stack.push(l);
                stack.push(r);
            }
        }
        best
    }
}

/// Vertices of `line`, with segments longer than four times the mean
/// segment length subdivided so every stretch of the curve is probed.
fn probe_points(line: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if line.len() < 2 {
        return line.to_vec();
    }
    let lens: Vec<f64> = line
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
        .collect();
    let mean = lens.iter().sum::<f64>() / lens.len() as f64;
    let mut out = vec![line[0]];
    for (w, len) in line.windows(2).zip(&lens) {
        let pieces = if mean > 0.0 && *len > 4.0 * mean {
            (len / mean).ceil() as usize
        } else {
            1
        };
        for k in 1..=pieces {
            let t = k as f64 / pieces as f64;
            out.push((w[0].0 + t * (w[1].0 - w[0].0), w[0].1 + t * (w[1].1 - w[0].1)));
        }
    }
    out
}

/// Hausdorff distance between two polylines, evaluated at the vertices of
/// each (long segments subdivided).
pub fn hausdorff(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let one_way = |from: &[(f64, f64)], to: &[(f64, f64)]| {
        let tree = SegmentTree::new(to);
        probe_points(from)
            .par_iter()
            .map(|p| tree.distance(*p))
            .reduce(|| 0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}
