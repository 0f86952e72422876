//! Corridor coefficient `k(x)`: width times mean preferred-direction
//! component, after the streamline change of variables.
//!
//! A [`WidthProfile`] pairs one of the supported shapes with the corridor
//! length. Evaluation returns `k`, its derivative and the log-derivative
//! `g = k'/k`; at jumps of a piecewise-constant profile the derivative is
//! reported as undefined.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of `k(x)`, in the form used by scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileShape {
    Constant {
        k0: f64,
    },
    /// `k(x) = k0 + (k1 - k0) x / L`.
    Linear {
        k0: f64,
        k1: f64,
    },
    /// `[[x, k], ...]`: `k` takes the value of the last point with position
    /// `<= x`. The first point must sit at `x = 0`.
    Piecewise {
        points: Vec<[f64; 2]>,
    },
    /// `kmax` outside `[a, b]`, a full cosine dip down to `kmin` at the
    /// midpoint inside. C¹ at `a` and `b`.
    CosineBottleneck {
        kmax: f64,
        kmin: f64,
        a: f64,
        b: f64,
    },
    /// Samples interpolated with a monotone (Fritsch-Carlson) cubic.
    Table {
        x: Vec<f64>,
        k: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub k: f64,
    /// `None` exactly at a jump of a piecewise-constant profile.
    pub dk: Option<f64>,
    pub g: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub positive: bool,
    pub monotone_decreasing: bool,
    pub smooth: bool,
    pub breakpoints: Vec<f64>,
}

/// Number of samples used when a property can only be checked pointwise.
const DENSE_SAMPLES: usize = 10_001;

#[derive(Debug, Clone, PartialEq)]
pub struct WidthProfile {
    shape: ProfileShape,
    length: f64,
    /// Hermite slopes for [`ProfileShape::Table`].
    slopes: Vec<f64>,
}

impl WidthProfile {
    pub fn new(shape: ProfileShape, length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "corridor length must be positive, got {length}"
            )));
        }
        let mut slopes = Vec::new();
        match &shape {
            ProfileShape::Constant { k0 } => check_finite(&[*k0])?,
            ProfileShape::Linear { k0, k1 } => check_finite(&[*k0, *k1])?,
            ProfileShape::Piecewise { points } => {
                let Some(first) = points.first() else {
                    return Err(Error::InvalidProfile("piecewise profile needs at least one point".into()));
                };
                if first[0] != 0.0 {
                    return Err(Error::InvalidProfile(
                        "first piecewise point must be at x = 0".into(),
                    ));
                }
                for pair in points.windows(2) {
                    if pair[1][0] <= pair[0][0] {
                        return Err(Error::InvalidProfile(
                            "piecewise positions must be strictly increasing".into(),
                        ));
                    }
                }
                if let Some(last) = points.last() {
                    if points.len() > 1 && last[0] >= length {
                        return Err(Error::InvalidProfile(format!(
                            "breakpoint {} is not strictly inside (0, {length})",
                            last[0]
                        )));
                    }
                }
                check_finite(&points.iter().flatten().copied().collect::<Vec<_>>())?;
            }
            ProfileShape::CosineBottleneck { kmax, kmin, a, b } => {
                check_finite(&[*kmax, *kmin, *a, *b])?;
                if !(0.0 <= *a && a < b && *b <= length) {
                    return Err(Error::InvalidProfile(format!(
                        "bottleneck plateau bounds need 0 <= a < b <= L, got a = {a}, b = {b}"
                    )));
                }
            }
            ProfileShape::Table { x, k } => {
                if x.len() != k.len() || x.len() < 2 {
                    return Err(Error::InvalidProfile(
                        "table needs matching x and k arrays with at least two samples".into(),
                    ));
                }
                check_finite(x)?;
                check_finite(k)?;
                if x.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidProfile(
                        "table positions must be strictly increasing".into(),
                    ));
                }
                if x[0] > 0.0 || x[x.len() - 1] < length {
                    return Err(Error::InvalidProfile(format!(
                        "table samples must cover [0, {length}]"
                    )));
                }
                slopes = pchip_slopes(x, k);
            }
        }
        Ok(Self {
            shape,
            length,
            slopes,
        })
    }

    pub fn constant(k0: f64, length: f64) -> Result<Self> {
        Self::new(ProfileShape::Constant { k0 }, length)
    }

    pub fn linear(k0: f64, k1: f64, length: f64) -> Result<Self> {
        Self::new(ProfileShape::Linear { k0, k1 }, length)
    }

    pub fn shape(&self) -> &ProfileShape {
        &self.shape
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Checked evaluation of `(k, k', k'/k)`.
    pub fn eval(&self, x: f64) -> Result<ProfilePoint> {
        if !(0.0..=self.length).contains(&x) {
            return Err(Error::OutOfDomain {
                x,
                length: self.length,
            });
        }
        let (k, dk) = self.value_and_slope(x);
        Ok(ProfilePoint {
            k,
            dk,
            g: dk.map(|d| d / k),
        })
    }

    /// `k(x)` without the domain check; positions are clamped to `[0, L]`.
    pub fn k(&self, x: f64) -> f64 {
        self.value_and_slope(x.clamp(0.0, self.length)).0
    }

    /// Values at both ends, `(k(0), k(L))`.
    pub fn endpoints(&self) -> (f64, f64) {
        (self.k(0.0), self.k(self.length))
    }

    fn value_and_slope(&self, x: f64) -> (f64, Option<f64>) {
        let len = self.length;
        match &self.shape {
            ProfileShape::Constant { k0 } => (*k0, Some(0.0)),
            ProfileShape::Linear { k0, k1 } => {
                let slope = (k1 - k0) / len;
                (k0 + slope * x, Some(slope))
            }
            ProfileShape::Piecewise { points } => {
                let idx = points.partition_point(|p| p[0] <= x).saturating_sub(1);
                let at_jump = idx > 0 && points[idx][0] == x;
                (points[idx][1], if at_jump { None } else { Some(0.0) })
            }
            ProfileShape::CosineBottleneck { kmax, kmin, a, b } => {
                if x < *a || x > *b {
                    return (*kmax, Some(0.0));
                }
                let width = b - a;
                let theta = 2.0 * PI * (x - 0.5 * (a + b)) / width;
                let mean = 0.5 * (kmax + kmin);
                let amp = 0.5 * (kmin - kmax);
                (
                    mean + amp * theta.cos(),
                    Some(-amp * theta.sin() * 2.0 * PI / width),
                )
            }
            ProfileShape::Table { x: xs, k: ks } => {
                let i = xs
                    .partition_point(|&p| p <= x)
                    .saturating_sub(1)
                    .min(xs.len() - 2);
                let h = xs[i + 1] - xs[i];
                let t = (x - xs[i]) / h;
                let (y0, y1) = (ks[i], ks[i + 1]);
                let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
                let t2 = t * t;
                let t3 = t2 * t;
                let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                    + (t3 - 2.0 * t2 + t) * h * d0
                    + (-2.0 * t3 + 3.0 * t2) * y1
                    + (t3 - t2) * h * d1;
                let slope = (6.0 * t2 - 6.0 * t) * (y0 - y1) / h
                    + (3.0 * t2 - 4.0 * t + 1.0) * d0
                    + (3.0 * t2 - 2.0 * t) * d1;
                (value, Some(slope))
            }
        }
    }

    /// Jump positions of a piecewise-constant profile (empty otherwise).
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            ProfileShape::Piecewise { points } => points.iter().skip(1).map(|p| p[0]).collect(),
            _ => Vec::new(),
        }
    }

    /// `(min k, max k)` over `[0, L]`.
    pub fn extrema(&self) -> (f64, f64) {
        let minmax = |vals: &mut dyn Iterator<Item = f64>| {
            vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            })
        };
        match &self.shape {
            ProfileShape::Constant { k0 } => (*k0, *k0),
            ProfileShape::Linear { k0, k1 } => (k0.min(*k1), k0.max(*k1)),
            ProfileShape::Piecewise { points } => minmax(&mut points.iter().map(|p| p[1])),
            ProfileShape::CosineBottleneck { kmax, kmin, .. } => (kmin.min(*kmax), kmin.max(*kmax)),
            // The monotone cubic never leaves the range of neighbouring samples,
            // so only samples inside [0, L] and the two endpoint values matter.
            ProfileShape::Table { x, k } => {
                let inner = x
                    .iter()
                    .zip(k)
                    .filter(|(p, _)| (0.0..=self.length).contains(*p))
                    .map(|(_, v)| *v);
                let ends = [self.k(0.0), self.k(self.length)];
                minmax(&mut inner.chain(ends))
            }
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let breakpoints = self.breakpoints();
        let (positive, monotone_decreasing) = match &self.shape {
            ProfileShape::Constant { k0 } => (*k0 > 0.0, true),
            ProfileShape::Linear { k0, k1 } => (k0.min(*k1) > 0.0, k1 <= k0),
            ProfileShape::Piecewise { points } => (
                points.iter().all(|p| p[1] > 0.0),
                points.windows(2).all(|w| w[1][1] <= w[0][1]),
            ),
            ProfileShape::CosineBottleneck { kmax, kmin, .. } => {
                (kmin.min(*kmax) > 0.0, kmin == kmax)
            }
            ProfileShape::Table { .. } => {
                let n = DENSE_SAMPLES;
                let mut positive = true;
                let mut monotone = true;
                let mut prev = f64::INFINITY;
                for i in 0..n {
                    let x = self.length * i as f64 / (n - 1) as f64;
                    let (k, dk) = self.value_and_slope(x);
                    positive &= k > 0.0;
                    monotone &= k <= prev + 1e-12 * k.abs() && dk.is_none_or(|d| d <= 1e-12 * k.abs());
                    prev = k;
                }
                (positive, monotone)
            }
        };
        ValidationReport {
            positive,
            monotone_decreasing,
            smooth: breakpoints.is_empty(),
            breakpoints,
        }
    }

    /// The mirrored corridor `x -> k(L - x)`.
    pub fn reflect(&self) -> Self {
        let len = self.length;
        let shape = match &self.shape {
            ProfileShape::Constant { k0 } => ProfileShape::Constant { k0: *k0 },
            ProfileShape::Linear { k0, k1 } => ProfileShape::Linear { k0: *k1, k1: *k0 },
            ProfileShape::Piecewise { points } => {
                let mut mirrored = vec![[0.0, points[points.len() - 1][1]]];
                for i in (1..points.len()).rev() {
                    mirrored.push([len - points[i][0], points[i - 1][1]]);
                }
                ProfileShape::Piecewise { points: mirrored }
            }
            ProfileShape::CosineBottleneck { kmax, kmin, a, b } => ProfileShape::CosineBottleneck {
                kmax: *kmax,
                kmin: *kmin,
                a: len - b,
                b: len - a,
            },
            ProfileShape::Table { x, k } => ProfileShape::Table {
                x: x.iter().rev().map(|p| len - p).collect(),
                k: k.iter().rev().copied().collect(),
            },
        };
        Self::new(shape, len).expect("mirror of a valid profile is valid")
    }
}

fn check_finite(vals: &[f64]) -> Result<()> {
    match vals.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::InvalidProfile(format!("non-finite value {v}"))),
        None => Ok(()),
    }
}

/// Fritsch-Carlson derivative estimates with the usual shape-preserving
/// one-sided end conditions.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (dl, dr) = (delta[i - 1], delta[i]);
        if dl * dr > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / dl + w2 / dr);
        }
    }
    d[0] = pchip_end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = pchip_end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn pchip_end(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() || m0 == 0.0 {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}
