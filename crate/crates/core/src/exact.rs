//! Closed-form stationary profiles for straight corridors (`k` constant).
//!
//! With `u = rho - 1/2` the flux law reads `eps u' = (1/4 - J) - u^2`, so
//! every profile is a translate of `s tanh`, `s coth`, `-s tan` (with
//! `s = sqrt|J - 1/4|`) or `eps / (x - xi)`. The pair `(J, xi)` is fixed by
//! the two boundary conditions.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::bvp::check_rates;
use crate::error::{Error, Result};

/// Below this distance from `alpha + beta = 1` the profile is constant.
pub const CONSTANT_TOL: f64 = 1e-12;
/// Below this distance from `J = 1/4` the profile is rational.
pub const RATIONAL_TOL: f64 = 1e-10;
const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    NegTan,
    Tanh,
    Coth,
    Constant,
    Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactProfile {
    pub shape: Shape,
    #[serde(rename = "J")]
    pub flux: f64,
    /// Where `rho = 1/2` (or the pole of a coth/rational profile); may lie
    /// outside `[0, L]`. Absent for constant profiles.
    pub xi: Option<f64>,
    pub epsilon: f64,
    #[serde(rename = "L")]
    pub length: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl ExactProfile {
    fn scale(&self) -> f64 {
        (self.flux - 0.25).abs().sqrt()
    }

    /// Defects `alpha (1 - rho(0)) - J` and `beta rho(L) - J`.
    pub fn boundary_residuals(&self) -> Result<(f64, f64)> {
        let left = self.alpha * (1.0 - eval_exact(self, 0.0)?) - self.flux;
        let right = self.beta * eval_exact(self, self.length)? - self.flux;
        Ok((left, right))
    }

    /// `xi` recovered from both boundary conditions at once, as the midpoint
    /// of the left and right inversions. `None` when a shape has no such
    /// inversion or it overflows.
    pub fn xi_averaged(&self) -> Option<f64> {
        let s = self.scale();
        let inv = |y: f64| match self.shape {
            Shape::Tanh => Some(y.atanh()),
            Shape::Coth => Some((1.0 / y).atanh()),
            Shape::NegTan => Some(-y.atan()),
            Shape::Constant | Shape::Rational => None,
        };
        let left = inv((self.flux / self.alpha - 0.5) / s)?;
        let right = inv((self.flux / self.beta - 0.5) / s)?;
        let xi = 0.5 * self.length + 0.5 * self.epsilon / s * (left - right);
        xi.is_finite().then_some(xi)
    }
}

/// Flow of `eps u' = sign * s^2 - u^2` over a signed distance `t = dx / eps`;
/// `sign` is `+1` below the fold flux, `-1` above it, `0` at it. Blow-up
/// returns an infinity of the matching sign.
fn flow(u: f64, flux: f64, t: f64) -> f64 {
    let gap = 0.25 - flux;
    let s = gap.abs().sqrt();
    let blow = if t > 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    };
    if gap == 0.0 {
        if u == 0.0 {
            return 0.0;
        }
        let den = 1.0 / u + t;
        return if den == 0.0 || den.signum() != u.signum() {
            blow
        } else {
            1.0 / den
        };
    }
    if gap < 0.0 {
        let theta = (-u / s).atan() + s * t;
        return if theta.abs() >= FRAC_PI_2 {
            blow
        } else {
            -s * theta.tan()
        };
    }
    let y = u / s;
    if y.abs() < 1.0 {
        s * ((y).atanh() + s * t).tanh()
    } else if y.abs() == 1.0 {
        u
    } else {
        let a = (1.0 / y).atanh();
        let b = a + s * t;
        if b == 0.0 || b.signum() != a.signum() {
            blow
        } else {
            s / b.tanh()
        }
    }
}

/// Positive when `flux` is below the solution flux. Integrates from the
/// end whose start point is farther from the equilibrium that is unstable
/// in the integration direction.
fn flux_too_small(alpha: f64, beta: f64, eps: f64, len: f64, flux: f64) -> bool {
    let u_left = 0.5 - flux / alpha;
    let u_right = flux / beta - 0.5;
    let forward = if flux < 0.25 {
        let s = (0.25 - flux).sqrt();
        (u_left / s + 1.0).abs() >= (u_right / s - 1.0).abs()
    } else {
        true
    };
    if forward {
        flow(u_left, flux, len / eps) > u_right
    } else {
        u_left > flow(u_right, flux, -len / eps)
    }
}

fn classify_shape(alpha: f64, beta: f64, flux: f64) -> Shape {
    if (flux - 0.25).abs() < RATIONAL_TOL {
        Shape::Rational
    } else if flux > 0.25 {
        Shape::NegTan
    } else if alpha + beta < 1.0 {
        Shape::Tanh
    } else {
        Shape::Coth
    }
}

pub fn solve_exact(alpha: f64, beta: f64, epsilon: f64, length: f64) -> Result<ExactProfile> {
    check_rates(alpha, beta)?;
    if !(epsilon > 0.0 && epsilon.is_finite() && length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon and L must be positive, got {epsilon} and {length}"
        )));
    }
    let base = ExactProfile {
        shape: Shape::Constant,
        flux: alpha * (1.0 - alpha),
        xi: None,
        epsilon,
        length,
        alpha,
        beta,
    };
    if (alpha + beta - 1.0).abs() < CONSTANT_TOL {
        return Ok(base);
    }

    let (mut lo, mut hi) = (0.0, alpha);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if flux_too_small(alpha, beta, epsilon, length, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let flux = 0.5 * (lo + hi);
    if !(flux > 0.0 && flux < alpha) {
        return Err(Error::RootFinding(format!(
            "flux bracket collapsed to [{lo}, {hi}] for alpha = {alpha}, beta = {beta}"
        )));
    }
    let shape = classify_shape(alpha, beta, flux);
    let s = (flux - 0.25).abs().sqrt();
    let u_left = 0.5 - flux / alpha;
    let u_right = flux / beta - 0.5;
    let from = |x: f64, u: f64| -> f64 {
        match shape {
            Shape::Tanh => x - epsilon * (u / s).atanh() / s,
            Shape::Coth => x - epsilon * (s / u).atanh() / s,
            Shape::NegTan => x + epsilon * (u / s).atan() / s,
            Shape::Rational => x - epsilon / u,
            Shape::Constant => unreachable!(),
        }
    };
    let use_left = match shape {
        Shape::Tanh => u_left.abs() <= u_right.abs(),
        Shape::Coth => u_left.abs() >= u_right.abs(),
        _ => true,
    };
    let xi = if alpha == beta {
        0.5 * length
    } else if use_left {
        from(0.0, u_left)
    } else {
        from(length, u_right)
    };
    if !xi.is_finite() {
        return Err(Error::RootFinding(format!(
            "no finite profile centre for alpha = {alpha}, beta = {beta}, J = {flux}"
        )));
    }
    Ok(ExactProfile {
        shape,
        flux,
        xi: Some(xi),
        ..base
    })
}

pub fn eval_exact(profile: &ExactProfile, x: f64) -> Result<f64> {
    if !(0.0..=profile.length).contains(&x) {
        return Err(Error::OutOfDomain {
            x,
            length: profile.length,
        });
    }
    let Some(xi) = profile.xi else {
        return Ok(profile.alpha);
    };
    let s = profile.scale();
    let arg = s * (x - xi) / profile.epsilon;
    let rho = match profile.shape {
        Shape::Constant => profile.alpha,
        Shape::Tanh => 0.5 + s * arg.tanh(),
        Shape::Coth => 0.5 + s / arg.tanh(),
        Shape::NegTan => 0.5 - s * arg.tan(),
        Shape::Rational => 0.5 + profile.epsilon / (x - xi),
    };
    if !rho.is_finite() || x == xi && matches!(profile.shape, Shape::Coth | Shape::Rational) {
        return Err(Error::InvalidParameter(format!(
            "profile has a pole at x = {x}"
        )));
    }
    Ok(rho)
}

/// Largest flux a straight corridor of length `L` carries:
/// `(leading order, with the boundary-condition correction)`.
pub fn j_max(epsilon: f64, length: f64) -> (f64, f64) {
    let r = epsilon / length;
    let base = (PI * r).powi(2);
    let leading = 0.25 + base;
    let series = 1.0 - 8.0 * r + 64.0 * r * r - 32.0 * (48.0 - PI * PI) / 3.0 * r.powi(3);
    (leading, 0.25 + base * series)
}
