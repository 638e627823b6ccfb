//! Histogram density estimates on rectilinear bins.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Equal-width bins per axis over a box.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinLayout {
    pub bounds: Vec<(f64, f64)>,
    pub bins: Vec<usize>,
}

impl BinLayout {
    pub fn new(bounds: Vec<(f64, f64)>, bins: Vec<usize>) -> Result<Self> {
        if bounds.is_empty() || bounds.len() != bins.len() {
            return Err(Error::Usage("bin layout needs one bin count per axis".into()));
        }
        if bounds.iter().any(|&(lo, hi)| !(hi > lo)) || bins.contains(&0) {
            return Err(Error::Usage("bins need nonempty intervals and positive counts".into()));
        }
        Ok(Self { bounds, bins })
    }

    pub fn dim(&self) -> usize {
        self.bins.len()
    }

    pub fn len(&self) -> usize {
        self.bins.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self, k: usize) -> f64 {
        (self.bounds[k].1 - self.bounds[k].0) / self.bins[k] as f64
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.width(k)).product()
    }

    /// Flat row-major bin index of `x`, or `None` outside the box.
    pub fn index(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for (k, &v) in x.iter().enumerate() {
            let (lo, hi) = self.bounds[k];
            if !(v >= lo && v <= hi) {
                return None;
            }
            let i = (((v - lo) / self.width(k)) as usize).min(self.bins[k] - 1);
            idx = idx * self.bins[k] + i;
        }
        Some(idx)
    }

    /// Centre of the bin with flat index `idx`.
    pub fn center(&self, mut idx: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dim()];
        for k in (0..self.dim()).rev() {
            let i = idx % self.bins[k];
            idx /= self.bins[k];
            c[k] = self.bounds[k].0 + (i as f64 + 0.5) * self.width(k);
        }
        c
    }
}

/// Piecewise-constant density, normalized to unit mass over the layout.
#[derive(Clone, Debug, Serialize)]
pub struct DensityEstimate {
    pub layout: BinLayout,
    pub density: Vec<f64>,
    /// Fraction of samples that fell inside the layout.
    pub in_range: f64,
}

/// Normalized histogram of `states` (row-major `n × d`). Samples outside
/// the layout are dropped and reported through `in_range`.
pub fn estimate_density(states: &[f64], dim: usize, layout: &BinLayout) -> Result<DensityEstimate> {
    if dim != layout.dim() || !states.len().is_multiple_of(dim) {
        return Err(Error::Usage("state array does not match the bin layout".into()));
    }
    let mut counts = vec![0usize; layout.len()];
    let mut inside = 0usize;
    for x in states.chunks(dim) {
        if let Some(i) = layout.index(x) {
            counts[i] += 1;
            inside += 1;
        }
    }
    let total = states.len() / dim;
    if inside == 0 {
        return Err(Error::Usage("no samples fall inside the bin layout".into()));
    }
    let scale = 1.0 / (inside as f64 * layout.volume());
    Ok(DensityEstimate {
        layout: layout.clone(),
        density: counts.iter().map(|&c| c as f64 * scale).collect(),
        in_range: inside as f64 / total as f64,
    })
}

impl DensityEstimate {
    /// Bin averages of `pdf`, from `sub` midpoint samples per axis per bin,
    /// renormalized to unit mass.
    pub fn from_fn(layout: &BinLayout, sub: usize, pdf: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let d = layout.dim();
        let sub = sub.max(1);
        let mut density = Vec::with_capacity(layout.len());
        let mut x = vec![0.0; d];
        for b in 0..layout.len() {
            let c = layout.center(b);
            let mut acc = 0.0;
            for s in 0..sub.pow(d as u32) {
                let mut r = s;
                for k in (0..d).rev() {
                    let j = r % sub;
                    r /= sub;
                    x[k] = c[k] - 0.5 * layout.width(k) + (j as f64 + 0.5) * layout.width(k) / sub as f64;
                }
                acc += pdf(&x);
            }
            density.push(acc / sub.pow(d as u32) as f64);
        }
        let mass: f64 = density.iter().sum::<f64>() * layout.volume();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Numerical("reference density has no mass on the bins".into()));
        }
        density.iter_mut().for_each(|v| *v /= mass);
        Ok(Self {
            layout: layout.clone(),
            density,
            in_range: 1.0,
        })
    }

    /// Bin averages of a gridded density (linear interpolation, zero
    /// outside the grid).
    pub fn from_grid_function(layout: &BinLayout, p: &GridFunction) -> Result<Self> {
        Self::from_fn(layout, 20, |x| {
            if p.grid().contains(x) {
                p.interpolate(x).0.max(0.0)
            } else {
                0.0
            }
        })
    }

    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.layout.volume()
    }
}

/// `Σ|aᵢ − bᵢ|·vol ∈ [0, 2]`.
pub fn l1_distance(a: &DensityEstimate, b: &DensityEstimate) -> Result<f64> {
    if a.layout != b.layout {
        return Err(Error::Usage("densities have different bin layouts".into()));
    }
    Ok(a.density.iter().zip(&b.density).map(|(x, y)| (x - y).abs()).sum::<f64>() * a.layout.volume())
}
