//! Gauss-Hermite rules and tensor-product quadrature grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gauss-Hermite rule for `∫ g(y) e^{−y²} dy`.
#[derive(Clone, Debug)]
pub struct HermiteRule {
    /// Ascending nodes.
    pub nodes: Vec<f64>,
    /// Weights against `e^{−y²}`.
    pub weights: Vec<f64>,
    /// `weights · e^{y²}`, i.e. weights against Lebesgue measure.
    pub lebesgue_weights: Vec<f64>,
}

/// Hermite functions `ψ_n(z)` (orthonormal polynomials times `e^{−z²/2}`)
/// and the derivative factor `√(2n) ψ_{n−1}(z)`.
fn hermite_function(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = std::f64::consts::PI.powf(-0.25) * (-0.5 * z * z).exp();
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

pub fn gauss_hermite(n: usize) -> Result<HermiteRule> {
    if n == 0 {
        return Err(Error::Usage("Gauss-Hermite rule needs at least one node".into()));
    }
    let mut desc = vec![0.0; n];
    let mut leb = vec![0.0; n];
    let half = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..half {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * desc[0],
            3 => 1.91 * z - 0.91 * desc[1],
            _ => 2.0 * z - desc[i - 2],
        };
        let mut converged = false;
        for _ in 0..100 {
            let (psi, d) = hermite_function(n, z);
            // Newton step on ψ_n, whose zeros are the Hermite roots; the
            // Gaussian factor drops out of ψ/ψ′ at a root.
            let step = psi / (d - z * psi);
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!("Gauss-Hermite node {i} of {n} did not converge")));
        }
        let (_, d) = hermite_function(n, z);
        desc[i] = z;
        desc[n - 1 - i] = -z;
        leb[i] = 2.0 / (d * d);
        leb[n - 1 - i] = leb[i];
    }
    if n % 2 == 1 {
        desc[n / 2] = 0.0;
    }
    let nodes: Vec<f64> = desc.into_iter().rev().collect();
    leb.reverse();
    let weights = nodes.iter().zip(&leb).map(|(y, l)| l * (-y * y).exp()).collect();
    Ok(HermiteRule {
        nodes,
        weights,
        lebesgue_weights: leb,
    })
}

/// Tensor-product quadrature grid: per-axis nodes `ξ` and Lebesgue weights
/// `α` so that `∫ g(x) dx ≈ Σ α_i g(ξ_i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadGrid {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl QuadGrid {
    /// Gauss-Hermite rule of `m` points per axis, stretched so that the
    /// extreme nodes sit on the box edges.
    pub fn spanning(bounds: &[(f64, f64)], m: usize) -> Result<Self> {
        let rule = gauss_hermite(m)?;
        if m < 2 {
            return Err(Error::Usage("a spanning grid needs at least two nodes".into()));
        }
        let ymax = rule.nodes[m - 1];
        let mut center = Vec::new();
        let mut scale = Vec::new();
        for &(lo, hi) in bounds {
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Usage(format!("bad quadrature box [{lo}, {hi}]")));
            }
            center.push(0.5 * (lo + hi));
            scale.push(0.5 * (hi - lo) / ymax);
        }
        Ok(Self::affine(&rule, center, scale))
    }

    /// Rule integrating exactly against `N(center, std²)` per axis: nodes
    /// `c + √2·s·y`.
    pub fn gaussian(center: &[f64], std: &[f64], m: usize) -> Result<Self> {
        if center.len() != std.len() || std.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Usage("gaussian grid needs positive standard deviations".into()));
        }
        let rule = gauss_hermite(m)?;
        let scale = std.iter().map(|s| std::f64::consts::SQRT_2 * s).collect();
        Ok(Self::affine(&rule, center.to_vec(), scale))
    }

    fn affine(rule: &HermiteRule, center: Vec<f64>, scale: Vec<f64>) -> Self {
        let nodes = center
            .iter()
            .zip(&scale)
            .map(|(c, s)| rule.nodes.iter().map(|y| c + s * y).collect())
            .collect();
        let weights = scale
            .iter()
            .map(|s| rule.lebesgue_weights.iter().map(|w| w * s).collect())
            .collect();
        Self {
            nodes,
            weights,
            center,
            scale,
        }
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn points_per_axis(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn len(&self) -> usize {
        self.nodes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Box spanned by the extreme nodes.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.nodes.iter().map(|a| (a[0], a[a.len() - 1])).collect()
    }

    /// Coordinates of flat (row-major) index `idx`.
    pub fn point_into(&self, mut idx: usize, out: &mut [f64]) {
        for k in (0..self.dim()).rev() {
            let n = self.nodes[k].len();
            out[k] = self.nodes[k][idx % n];
            idx /= n;
        }
    }

    /// Product weight of flat index `idx`.
    pub fn weight(&self, mut idx: usize) -> f64 {
        let mut w = 1.0;
        for k in (0..self.dim()).rev() {
            let n = self.nodes[k].len();
            w *= self.weights[k][idx % n];
            idx /= n;
        }
        w
    }

    /// Largest gap between neighbouring nodes over all axes.
    pub fn max_spacing(&self) -> f64 {
        self.nodes
            .iter()
            .flat_map(|a| a.windows(2).map(|w| w[1] - w[0]))
            .fold(0.0, f64::max)
    }
}
