//! Tridiagonal matrices and a partially pivoted LU solve.

#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    /// `lower[i]` multiplies `x[i - 1]` in row `i`; `lower[0]` is unused.
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    /// `upper[i]` multiplies `x[i + 1]` in row `i`; the last entry is unused.
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Entry `(row, col)`; zero outside the three bands.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        if col == row {
            self.diag[row]
        } else if col + 1 == row {
            self.lower[row]
        } else if col == row + 1 {
            self.upper[row]
        } else {
            0.0
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.upper[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Solves `A x = rhs` by Gaussian elimination with partial pivoting
    /// (the `gtsv` scheme). Returns `None` for an exactly singular matrix.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        if n == 0 {
            return Some(Vec::new());
        }
        let mut dl: Vec<f64> = self.lower.iter().skip(1).copied().collect();
        let mut d = self.diag.clone();
        let mut du: Vec<f64> = self.upper[..n - 1].to_vec();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut b = rhs.to_vec();

        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    return None;
                }
                let factor = dl[i] / d[i];
                d[i + 1] -= factor * du[i];
                b[i + 1] -= factor * b[i];
                if i + 2 < n {
                    du2[i] = 0.0;
                }
            } else {
                // swap rows i and i + 1
                let factor = d[i] / dl[i];
                d[i] = dl[i];
                let tmp = d[i + 1];
                d[i + 1] = du[i] - factor * tmp;
                du[i] = tmp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -factor;
                }
                b.swap(i, i + 1);
                b[i + 1] -= factor * b[i];
            }
            dl[i] = 0.0;
        }
        if d[n - 1] == 0.0 {
            return None;
        }
        let mut x = b;
        x[n - 1] /= d[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
        Some(x)
    }
}
