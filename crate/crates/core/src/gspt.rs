//! The `eps = 0` limit for monotone corridors.
//!
//! For a closing corridor (`k` decreasing, `C^1`) the singular limit of a
//! stationary profile is a concatenation of at most one boundary layer at
//! each end and one slow segment on the critical manifold
//! `k(x) rho (1 - rho) = J`. Which segments occur depends on `(alpha, beta)`
//! and on `k` only through `k(0)` and `k(L)`; the unit square splits into
//! six open regions separated by seven curves.
//!
//! Opening corridors are handled by mirroring: `x -> L - x`,
//! `rho -> 1 - rho`, `(alpha, beta) -> (beta, alpha)` maps them onto the
//! closing case.

use std::fmt;

use serde::Serialize;

use crate::bvp::check_rates;
use crate::error::{Error, Result};
use crate::geometry::WidthProfile;

pub const DEFAULT_CURVE_TOL: f64 = 1e-12;

/// Densities at which the special slow orbits start or end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpecialDensities {
    pub k0: f64,
    pub k1: f64,
    /// Start of the slow orbit that ends on the fold.
    pub rho_f: f64,
    /// End of the repelling slow orbit starting at `alpha`.
    pub rho_star_of_alpha: Option<f64>,
    /// Start of the attracting slow orbit ending at `1 - beta`.
    pub rho_star_of_beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RegionLabel {
    G1,
    G2,
    G3,
    G4,
    G5,
    G6,
    #[serde(rename = "gamma12")]
    Gamma12,
    #[serde(rename = "gamma15")]
    Gamma15,
    #[serde(rename = "gamma23")]
    Gamma23,
    #[serde(rename = "gamma34")]
    Gamma34,
    #[serde(rename = "gamma35")]
    Gamma35,
    #[serde(rename = "gamma46")]
    Gamma46,
    #[serde(rename = "gamma56")]
    Gamma56,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 13] = [
        Self::G1,
        Self::G2,
        Self::G3,
        Self::G4,
        Self::G5,
        Self::G6,
        Self::Gamma12,
        Self::Gamma15,
        Self::Gamma23,
        Self::Gamma34,
        Self::Gamma35,
        Self::Gamma46,
        Self::Gamma56,
    ];

    pub fn is_curve(self) -> bool {
        self.region_index().is_none()
    }

    /// `Some(i)` for the open region `G_i`.
    pub fn region_index(self) -> Option<u8> {
        match self {
            Self::G1 => Some(1),
            Self::G2 => Some(2),
            Self::G3 => Some(3),
            Self::G4 => Some(4),
            Self::G5 => Some(5),
            Self::G6 => Some(6),
            _ => None,
        }
    }

    /// Orbit type produced for this label: the region index, or the first
    /// index of a curve. `None` where the singular limit is not unique.
    pub fn orbit_type(self) -> Option<u8> {
        match self {
            Self::Gamma15 | Self::Gamma23 => None,
            Self::Gamma12 => Some(1),
            Self::Gamma34 | Self::Gamma35 => Some(3),
            Self::Gamma46 => Some(4),
            Self::Gamma56 => Some(5),
            open => open.region_index(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::G1 => "G1",
            Self::G2 => "G2",
            Self::G3 => "G3",
            Self::G4 => "G4",
            Self::G5 => "G5",
            Self::G6 => "G6",
            Self::Gamma12 => "gamma12",
            Self::Gamma15 => "gamma15",
            Self::Gamma23 => "gamma23",
            Self::Gamma34 => "gamma34",
            Self::Gamma35 => "gamma35",
            Self::Gamma46 => "gamma46",
            Self::Gamma56 => "gamma56",
        }
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    pub fn of(from: f64, to: f64) -> Self {
        if to >= from {
            Self::Increasing
        } else {
            Self::Decreasing
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Increasing => "increasing",
            Self::Decreasing => "decreasing",
        }
    }
}

/// Which root of `k rho (1 - rho) = J` the slow segment follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `rho < 1/2`.
    Repelling,
    /// `rho > 1/2`.
    Attracting,
    /// Attracting branch, reaching the fold `rho = 1/2` at `x = L`.
    EndsAtFold,
    /// Repelling branch, leaving the fold `rho = 1/2` at `x = 0`.
    StartsAtFold,
}

impl Branch {
    pub fn is_upper(self) -> bool {
        matches!(self, Self::Attracting | Self::EndsAtFold)
    }

    fn mirrored(self) -> Self {
        match self {
            Self::Repelling => Self::Attracting,
            Self::Attracting => Self::Repelling,
            Self::EndsAtFold => Self::StartsAtFold,
            Self::StartsAtFold => Self::EndsAtFold,
        }
    }
}

/// A fast jump at one end of the corridor, read in the direction of
/// increasing `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Layer {
    pub from: f64,
    pub to: f64,
    pub direction: Direction,
}

impl Layer {
    fn new(from: f64, to: f64) -> Self {
        Self {
            from,
            to,
            direction: Direction::of(from, to),
        }
    }

    pub fn height(&self) -> f64 {
        (self.to - self.from).abs()
    }

    fn mirrored(self) -> Self {
        Self::new(1.0 - self.to, 1.0 - self.from)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularOrbit {
    /// Label of `(alpha, beta)`; for opening corridors, the label of the
    /// mirrored closing problem.
    pub region: RegionLabel,
    pub orbit_type: u8,
    pub mirrored: bool,
    pub alpha: f64,
    pub beta: f64,
    pub rho0: f64,
    pub rho1: f64,
    pub slow_start: f64,
    pub slow_end: f64,
    pub branch: Branch,
    pub left_layer: Option<Layer>,
    pub right_layer: Option<Layer>,
    pub j_singular: f64,
}

/// Lower bound on admissible left boundary densities.
pub fn rho_alpha(alpha: f64) -> f64 {
    if alpha <= 0.5 {
        alpha
    } else {
        1.0 - 0.25 / alpha
    }
}

/// Upper bound on admissible right boundary densities.
pub fn rho_beta(beta: f64) -> f64 {
    if beta <= 0.5 {
        1.0 - beta
    } else {
        0.25 / beta
    }
}

fn check_endpoints(k0: f64, k1: f64) -> Result<()> {
    if !(k0 > 0.0 && k1 > 0.0 && k0.is_finite() && k1.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "endpoint values of k must be positive, got k(0) = {k0}, k(L) = {k1}"
        )));
    }
    if k1 > k0 {
        return Err(Error::UnsupportedProfile(format!(
            "k(L) = {k1} exceeds k(0) = {k0}; mirror the opening corridor first"
        )));
    }
    Ok(())
}

fn half_root(radicand: f64, upper: bool) -> Option<f64> {
    (radicand >= 0.0).then(|| {
        let s = radicand.sqrt();
        if upper {
            0.5 * (1.0 + s)
        } else {
            0.5 * (1.0 - s)
        }
    })
}

pub fn special_densities(k0: f64, k1: f64, alpha: f64, beta: f64) -> Result<SpecialDensities> {
    check_endpoints(k0, k1)?;
    check_rates(alpha, beta)?;
    Ok(SpecialDensities {
        k0,
        k1,
        rho_f: 0.5 * (1.0 - (1.0 - k1 / k0).sqrt()),
        rho_star_of_alpha: half_root(1.0 - 4.0 * alpha * (1.0 - alpha) * k0 / k1, false),
        rho_star_of_beta: half_root(1.0 - 4.0 * beta * (1.0 - beta) * k1 / k0, true),
    })
}

/// Region or separating curve containing `(alpha, beta)`. Points within
/// `curve_tol` of a curve are assigned to the curve.
pub fn classify(k0: f64, k1: f64, alpha: f64, beta: f64, curve_tol: f64) -> Result<RegionLabel> {
    use RegionLabel::*;
    let sd = special_densities(k0, k1, alpha, beta)?;
    let rf = sd.rho_f;
    let near = |a: f64, b: f64| (a - b).abs() <= curve_tol;
    let half = near(beta, 0.5);

    if near(alpha, rf) && (beta > 0.5 || half) {
        return Ok(Gamma23);
    }
    if near(alpha, 1.0 - rf) && (beta > 0.5 || half) {
        return Ok(Gamma34);
    }
    if half && alpha > rf && alpha < 1.0 - rf {
        return Ok(Gamma35);
    }
    if half && alpha > 1.0 - rf {
        return Ok(Gamma46);
    }
    if alpha < rf {
        let star = sd
            .rho_star_of_alpha
            .expect("rho*(alpha) exists below rho_f");
        if near(beta, 1.0 - star) {
            return Ok(Gamma12);
        }
        if near(beta, star) {
            return Ok(Gamma15);
        }
    }
    let star_beta = sd
        .rho_star_of_beta
        .expect("rho_*(beta) exists whenever k(L) <= k(0)");
    if beta < 0.5 && near(alpha, star_beta) {
        return Ok(Gamma56);
    }

    if alpha < rf {
        let star = sd.rho_star_of_alpha.expect("checked above");
        if star < beta && beta < 1.0 - star {
            return Ok(G1);
        }
        if beta > 1.0 - star {
            return Ok(G2);
        }
    }
    if beta > 0.5 {
        if alpha > rf && alpha < 1.0 - rf {
            return Ok(G3);
        }
        if alpha > 1.0 - rf {
            return Ok(G4);
        }
    }
    if beta < 0.5 {
        if 1.0 - star_beta < alpha && alpha < star_beta {
            return Ok(G5);
        }
        if alpha > star_beta {
            return Ok(G6);
        }
    }
    Err(Error::InvalidParameter(format!(
        "(alpha, beta) = ({alpha}, {beta}) is not covered by any region for k(0) = {k0}, k(L) = {k1}"
    )))
}

/// Equilibrium reached by the layer flow `rho' = rho (1 - rho) - j` from
/// `start`.
pub fn layer_landing(j: f64, start: f64) -> Result<f64> {
    let (lower, upper) = layer_equilibria(j)?;
    if start < lower {
        return Err(Error::RepelledToInfinity { j, start });
    }
    Ok(if start == lower { lower } else { upper })
}

/// As [`layer_landing`] with the layer flow reversed.
pub fn layer_landing_backward(j: f64, start: f64) -> Result<f64> {
    let (lower, upper) = layer_equilibria(j)?;
    if start > upper {
        return Err(Error::RepelledToInfinity { j, start });
    }
    Ok(if start == upper { upper } else { lower })
}

fn layer_equilibria(j: f64) -> Result<(f64, f64)> {
    if !(j >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "layer flux must be non-negative, got {j}"
        )));
    }
    if j > 0.25 {
        return Err(Error::NoEquilibria(j));
    }
    let s = (1.0 - 4.0 * j).sqrt();
    Ok((0.5 * (1.0 - s), 0.5 * (1.0 + s)))
}

fn slow_density(k: f64, flux: f64, upper: bool) -> f64 {
    let s = (1.0 - 4.0 * flux / k).max(0.0).sqrt();
    if upper {
        0.5 * (1.0 + s)
    } else {
        0.5 * (1.0 - s)
    }
}

/// Density on the slow manifold `k(x) rho (1 - rho) = flux` at `x`.
pub fn reduced_orbit(profile: &WidthProfile, flux: f64, branch: Branch, x: f64) -> Result<f64> {
    if !profile.validate().smooth {
        return Err(Error::UnsupportedProfile(
            "slow orbits need a continuous k".into(),
        ));
    }
    let k = profile.eval(x)?.k;
    let four_j = 4.0 * flux;
    // tolerate rounding when the orbit touches the fold
    if four_j > k * (1.0 + 1e-12) {
        return Err(Error::FoldCrossing { xi: x, four_j, k });
    }
    Ok(slow_density(k, flux, branch.is_upper()))
}

/// The unique singular orbit for a monotone `C^1` corridor.
pub fn build_singular_orbit(profile: &WidthProfile, alpha: f64, beta: f64) -> Result<SingularOrbit> {
    check_rates(alpha, beta)?;
    let report = profile.validate();
    if !report.smooth {
        return Err(Error::UnsupportedProfile(
            "singular orbits need a continuous k".into(),
        ));
    }
    if report.monotone_decreasing {
        let (k0, k1) = profile.endpoints();
        return closing_orbit(k0, k1, alpha, beta);
    }
    let mirror = profile.reflect();
    if mirror.validate().monotone_decreasing {
        let (k0, k1) = mirror.endpoints();
        return Ok(mirror_orbit(closing_orbit(k0, k1, beta, alpha)?));
    }
    Err(Error::UnsupportedProfile(
        "singular orbits need a monotone k".into(),
    ))
}

fn closing_orbit(k0: f64, k1: f64, alpha: f64, beta: f64) -> Result<SingularOrbit> {
    use RegionLabel::*;
    let region = classify(k0, k1, alpha, beta, DEFAULT_CURVE_TOL)?;
    let sd = special_densities(k0, k1, alpha, beta)?;
    let orbit_type = region.orbit_type().ok_or(Error::NonUnique(region))?;
    let (flux, rho0, rho1, slow_start, slow_end, branch) = match orbit_type {
        1 | 2 => {
            let flux = k0 * alpha * (1.0 - alpha);
            let slow_end = sd.rho_star_of_alpha.expect("defined below rho_f");
            (flux, alpha, flux / (beta * k1), alpha, slow_end, Branch::Repelling)
        }
        3 | 4 => (
            0.25 * k1,
            1.0 - k1 / (4.0 * alpha * k0),
            0.25 / beta,
            1.0 - sd.rho_f,
            0.5,
            Branch::EndsAtFold,
        ),
        _ => {
            let flux = k1 * beta * (1.0 - beta);
            let slow_start = sd.rho_star_of_beta.expect("always defined when closing");
            (
                flux,
                1.0 - flux / (alpha * k0),
                1.0 - beta,
                slow_start,
                1.0 - beta,
                Branch::Attracting,
            )
        }
    };
    let left_layer = match region {
        Gamma34 | Gamma56 => None,
        _ if orbit_type >= 3 => Some(Layer::new(rho0, slow_start)),
        _ => None,
    };
    let right_layer = match region {
        Gamma12 | Gamma35 | Gamma46 => None,
        _ if orbit_type <= 4 => Some(Layer::new(slow_end, rho1)),
        _ => None,
    };
    Ok(SingularOrbit {
        region,
        orbit_type,
        mirrored: false,
        alpha,
        beta,
        rho0,
        rho1,
        slow_start,
        slow_end,
        branch,
        left_layer,
        right_layer,
        j_singular: flux,
    })
}

fn mirror_orbit(orbit: SingularOrbit) -> SingularOrbit {
    SingularOrbit {
        region: orbit.region,
        orbit_type: orbit.orbit_type,
        mirrored: !orbit.mirrored,
        alpha: orbit.beta,
        beta: orbit.alpha,
        rho0: 1.0 - orbit.rho1,
        rho1: 1.0 - orbit.rho0,
        slow_start: 1.0 - orbit.slow_end,
        slow_end: 1.0 - orbit.slow_start,
        branch: orbit.branch.mirrored(),
        left_layer: orbit.right_layer.map(Layer::mirrored),
        right_layer: orbit.left_layer.map(Layer::mirrored),
        j_singular: orbit.j_singular,
    }
}

impl SingularOrbit {
    /// Slow-segment density at `x`, exact at both ends.
    pub fn slow_at(&self, profile: &WidthProfile, x: f64) -> f64 {
        if x <= 0.0 {
            return self.slow_start;
        }
        if x >= profile.length() {
            return self.slow_end;
        }
        slow_density(profile.k(x), self.j_singular, self.branch.is_upper())
    }

    /// The orbit mirrored through `x -> L - x`, `rho -> 1 - rho`.
    pub fn reflected(&self) -> Self {
        mirror_orbit(self.clone())
    }
}

/// Polyline through the orbit: `n` equispaced slow points, with the outer
/// layer ends added at `x = 0` and `x = L` (layers are vertical).
pub fn sample_orbit(orbit: &SingularOrbit, profile: &WidthProfile, n: usize) -> Result<Vec<(f64, f64)>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two slow points, got {n}"
        )));
    }
    let len = profile.length();
    let mut out = Vec::with_capacity(n + 2);
    if orbit.left_layer.is_some() {
        out.push((0.0, orbit.rho0));
    }
    for i in 0..n {
        let x = if i + 1 == n {
            len
        } else {
            len * i as f64 / (n - 1) as f64
        };
        out.push((x, orbit.slow_at(profile, x)));
    }
    if orbit.right_layer.is_some() {
        out.push((len, orbit.rho1));
    }
    Ok(out)
}
