//! Symmetric tridiagonal eigenpairs by Sturm-sequence bisection and
//! twisted factorizations.
//!
//! Eigenvectors come back as `(ln|z_i|, sign z_i)` so that ground states
//! whose tails fall below the double-precision range keep a usable,
//! strictly positive representation.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    pivmin: f64,
}

/// Eigenvector stored as logarithm of magnitude plus sign.
#[derive(Clone, Debug)]
pub struct LogVector {
    pub log_abs: Vec<f64>,
    pub sign: Vec<f64>,
}

impl LogVector {
    /// Values scaled so that `Σ z_i² · weight = 1`.
    pub fn normalized_values(&self, weight: f64) -> (Vec<f64>, f64) {
        let shift = self.log_norm(weight);
        let values = self
            .log_abs
            .iter()
            .zip(&self.sign)
            .map(|(l, s)| s * (l - shift).exp())
            .collect();
        (values, shift)
    }

    /// `ln sqrt(Σ z_i² · weight)`, computed without overflow.
    pub fn log_norm(&self, weight: f64) -> f64 {
        let m = self.log_abs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = self.log_abs.iter().map(|l| (2.0 * (l - m)).exp()).sum();
        m + 0.5 * (s * weight).ln()
    }
}

impl SymTridiagonal {
    /// `off[i]` couples rows `i` and `i + 1`; it must be nonzero.
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n < 2 || off.len() != n - 1 {
            return Err(Error::Usage("tridiagonal matrix needs n >= 2 and n - 1 off-diagonals".into()));
        }
        if diag.iter().chain(&off).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite tridiagonal entry".into()));
        }
        if off.contains(&0.0) {
            return Err(Error::Usage("off-diagonal entries must be nonzero".into()));
        }
        let emax = off.iter().map(|e| e * e).fold(0.0, f64::max);
        let pivmin = f64::MIN_POSITIVE * emax.max(1.0);
        Ok(Self { diag, off, pivmin })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// Number of eigenvalues strictly below `x` (Sturm count).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < self.pivmin {
            q = -self.pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            if q.abs() < self.pivmin {
                q = -self.pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// `k`-th smallest eigenvalue (0-based), bisected to working precision.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        if k >= self.len() {
            return Err(Error::Usage(format!("eigenvalue index {k} out of range")));
        }
        let (mut lo, mut hi) = self.gershgorin();
        let pad = f64::EPSILON * (lo.abs().max(hi.abs())) + self.pivmin;
        lo -= pad;
        hi += pad;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + self.pivmin {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Eigenvector for the eigenvalue `lambda` via the twisted factorization
    /// with the smallest twist element.
    pub fn eigenvector(&self, lambda: f64) -> LogVector {
        let n = self.len();
        let guard = |v: f64| if v.abs() < self.pivmin { self.pivmin.copysign(v) } else { v };

        let mut dplus = vec![0.0; n];
        dplus[0] = guard(self.diag[0] - lambda);
        for i in 1..n {
            let e = self.off[i - 1];
            dplus[i] = guard(self.diag[i] - lambda - e * e / dplus[i - 1]);
        }
        let mut dminus = vec![0.0; n];
        dminus[n - 1] = guard(self.diag[n - 1] - lambda);
        for i in (0..n - 1).rev() {
            let e = self.off[i];
            dminus[i] = guard(self.diag[i] - lambda - e * e / dminus[i + 1]);
        }
        let twist = (0..n)
            .min_by(|&a, &b| {
                let ga = (dplus[a] + dminus[a] - (self.diag[a] - lambda)).abs();
                let gb = (dplus[b] + dminus[b] - (self.diag[b] - lambda)).abs();
                ga.total_cmp(&gb)
            })
            .unwrap_or(0);

        let mut log_abs = vec![0.0; n];
        let mut sign = vec![1.0; n];
        for i in (0..twist).rev() {
            let ratio = -self.off[i] / dplus[i];
            log_abs[i] = log_abs[i + 1] + ratio.abs().ln();
            sign[i] = sign[i + 1] * ratio.signum();
        }
        for i in twist + 1..n {
            let ratio = -self.off[i - 1] / dminus[i];
            log_abs[i] = log_abs[i - 1] + ratio.abs().ln();
            sign[i] = sign[i - 1] * ratio.signum();
        }
        LogVector { log_abs, sign }
    }

    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * v[i + 1];
            }
            out[i] = s;
        }
    }

    /// `‖T z − λ z‖₂ / ‖z‖₂`.
    pub fn residual(&self, lambda: f64, z: &[f64]) -> f64 {
        let mut tz = vec![0.0; z.len()];
        self.apply(z, &mut tz);
        let num: f64 = tz.iter().zip(z).map(|(a, b)| (a - lambda * b).powi(2)).sum();
        let den: f64 = z.iter().map(|b| b * b).sum();
        (num / den).sqrt()
    }
}
