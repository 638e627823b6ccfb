//! Rectilinear grids and functions sampled on them.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Tensor-product grid with strictly increasing coordinates on each axis.
#[derive(Clone, Debug, PartialEq)]
pub struct RectGrid {
    axes: Vec<Vec<f64>>,
    spacing: Vec<Option<f64>>,
}

impl RectGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() || axes.iter().any(|a| a.is_empty()) {
            return Err(Error::Usage("grid needs at least one point per axis".into()));
        }
        for (k, a) in axes.iter().enumerate() {
            if a.iter().any(|v| !v.is_finite()) || a.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Usage(format!(
                    "grid axis {k} must be finite and strictly increasing"
                )));
            }
        }
        let spacing = axes.iter().map(|a| detect_spacing(a)).collect();
        Ok(Self { axes, spacing })
    }

    /// `n` equally spaced points from `lo` to `hi` inclusive.
    pub fn uniform_1d(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![linspace(lo, hi, n)?])
    }

    pub fn uniform(bounds: &[(f64, f64)], n: &[usize]) -> Result<Self> {
        if bounds.len() != n.len() {
            return Err(Error::Usage("bounds and sizes disagree in dimension".into()));
        }
        let axes = bounds
            .iter()
            .zip(n)
            .map(|(&(lo, hi), &k)| linspace(lo, hi, k))
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &[f64] {
        &self.axes[k]
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of the point with flat (row-major) index `idx`.
    pub fn point_into(&self, mut idx: usize, out: &mut [f64]) {
        for k in (0..self.dim()).rev() {
            let n = self.axes[k].len();
            out[k] = self.axes[k][idx % n];
            idx /= n;
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.point_into(idx, &mut out);
        out
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.axes
            .iter()
            .map(|a| (a[0], a[a.len() - 1]))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.bounds()
            .iter()
            .zip(x)
            .all(|(&(lo, hi), &v)| v >= lo && v <= hi)
    }

    /// Uniform spacing of axis `k`, if it has one.
    pub fn uniform_spacing(&self, k: usize) -> Option<f64> {
        self.spacing[k]
    }
}

fn detect_spacing(a: &[f64]) -> Option<f64> {
    if a.len() < 2 {
        return None;
    }
    let h = (a[a.len() - 1] - a[0]) / (a.len() - 1) as f64;
    let uniform = a
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1.0));
    uniform.then_some(h)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(hi > lo) {
        return Err(Error::Usage(format!(
            "need n >= 2 and lo < hi, got n={n}, [{lo}, {hi}]"
        )));
    }
    let h = (hi - lo) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * h })
        .collect())
}

/// Values of a function on a [`RectGrid`], stored in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: RectGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: RectGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Usage(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Evaluation {
                field: "grid function".into(),
                location: grid.point(i),
                value: values[i],
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: RectGrid, mut f: impl FnMut(&[f64]) -> Result<f64>) -> Result<Self> {
        let mut x = vec![0.0; grid.dim()];
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            grid.point_into(i, &mut x);
            values.push(f(&x)?);
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &RectGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same grid, values mapped pointwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Usage("grid functions live on different grids".into()));
        }
        Ok(())
    }

    /// Partial derivative along `axis`.
    ///
    /// Uniform axes: fourth-order central differences in the interior,
    /// second-order central next to the edge, second-order one-sided at the
    /// edge. Non-uniform axes fall back to the second-order three-point rule.
    pub fn derivative(&self, axis: usize) -> Result<GridFunction> {
        let shape = self.grid.shape();
        let n = shape[axis];
        if n < 3 {
            return Err(Error::Usage(format!("axis {axis} needs at least 3 points")));
        }
        let stride: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let xs = self.grid.axis(axis);
        let h = self.grid.uniform_spacing(axis);
        let mut out = vec![0.0; self.values.len()];
        let mut line = vec![0.0; n];
        let mut dline = vec![0.0; n];
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for i in 0..n {
                    line[i] = self.values[base + i * stride];
                }
                match h {
                    Some(h) => diff_uniform(&line, h, &mut dline),
                    None => diff_nonuniform(&line, xs, &mut dline),
                }
                for i in 0..n {
                    out[base + i * stride] = dline[i];
                }
            }
        }
        GridFunction::new(self.grid.clone(), out)
    }

    pub fn gradient(&self) -> Result<Vec<GridFunction>> {
        (0..self.grid.dim()).map(|k| self.derivative(k)).collect()
    }

    /// Multilinear interpolation. Points outside the grid are clamped to the
    /// nearest grid point; the flag reports whether clamping happened.
    pub fn interpolate(&self, x: &[f64]) -> (f64, bool) {
        let d = self.grid.dim();
        let mut clamped = false;
        let mut lo_idx = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for k in 0..d {
            let a = self.grid.axis(k);
            let n = a.len();
            let v = x[k];
            if n == 1 {
                lo_idx[k] = 0;
                frac[k] = 0.0;
                clamped |= v != a[0];
                continue;
            }
            if !(v >= a[0]) {
                clamped = true;
                lo_idx[k] = 0;
                frac[k] = 0.0;
            } else if v >= a[n - 1] {
                clamped |= v > a[n - 1];
                lo_idx[k] = n - 2;
                frac[k] = 1.0;
            } else {
                let j = match self.grid.uniform_spacing(k) {
                    Some(h) => (((v - a[0]) / h) as usize).min(n - 2),
                    None => a.partition_point(|&c| c <= v).saturating_sub(1).min(n - 2),
                };
                // Guard the uniform-index guess against rounding.
                let j = if v < a[j] { j.saturating_sub(1) } else if v >= a[j + 1] { (j + 1).min(n - 2) } else { j };
                lo_idx[k] = j;
                frac[k] = (v - a[j]) / (a[j + 1] - a[j]);
            }
        }
        let shape = self.grid.shape();
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for k in 0..d {
                let bit = (corner >> k) & 1;
                let idx = (lo_idx[k] + bit).min(shape[k] - 1);
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                flat = flat * shape[k] + idx;
            }
            if w != 0.0 {
                acc += w * self.values[flat];
            }
        }
        (acc, clamped)
    }

    /// Trapezoid integral over the grid's bounding box.
    pub fn integrate(&self) -> f64 {
        let shape = self.grid.shape();
        let weights: Vec<Vec<f64>> = self.grid.axes().iter().map(|a| trapezoid_weights(a)).collect();
        let mut idx = vec![0usize; shape.len()];
        let mut sum = 0.0;
        for (flat, &v) in self.values.iter().enumerate() {
            let mut rem = flat;
            for k in (0..shape.len()).rev() {
                idx[k] = rem % shape[k];
                rem /= shape[k];
            }
            let w: f64 = idx.iter().enumerate().map(|(k, &i)| weights[k][i]).product();
            sum += w * v;
        }
        sum
    }

    /// Write in block form: a header, one coordinate block per axis, then
    /// the values in row-major order. Numbers carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "dims,{}", self.grid.dim())?;
        for (k, a) in self.grid.axes().iter().enumerate() {
            writeln!(w, "axis,{},{}", k, a.len())?;
            for v in a {
                writeln!(w, "{}", fmt_f64(*v))?;
            }
        }
        writeln!(w, "values,{}", self.values.len())?;
        for v in &self.values {
            writeln!(w, "{}", fmt_f64(*v))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Serde("unexpected end of grid function CSV".into()))?
                .map_err(Error::from)
        };
        let header = |line: &str, key: &str| -> Result<Vec<usize>> {
            let mut parts = line.trim().split(',');
            if parts.next() != Some(key) {
                return Err(Error::Serde(format!("expected `{key}` line, got `{line}`")));
            }
            parts
                .map(|p| p.parse::<usize>().map_err(|e| Error::Serde(e.to_string())))
                .collect()
        };
        let parse = |s: String| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|e| Error::Serde(format!("{e}: `{s}`")))
        };
        let d = header(&next()?, "dims")?[0];
        let mut axes = Vec::with_capacity(d);
        for _ in 0..d {
            let h = header(&next()?, "axis")?;
            let n = *h.get(1).ok_or_else(|| Error::Serde("axis line needs a length".into()))?;
            axes.push((0..n).map(|_| next().and_then(parse)).collect::<Result<Vec<_>>>()?);
        }
        let n = header(&next()?, "values")?[0];
        let values = (0..n).map(|_| next().and_then(parse)).collect::<Result<Vec<_>>>()?;
        GridFunction::new(RectGrid::new(axes)?, values)
    }

    /// Write one row per grid point: `x1,…,xd,<name>` with a header line.
    pub fn write_columns_csv<W: Write>(&self, mut w: W, name: &str) -> Result<()> {
        let d = self.grid.dim();
        let mut head: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
        head.push(name.to_string());
        writeln!(w, "{}", head.join(","))?;
        let mut x = vec![0.0; d];
        for (i, v) in self.values.iter().enumerate() {
            self.grid.point_into(i, &mut x);
            let mut row: Vec<String> = x.iter().map(|c| fmt_f64(*c)).collect();
            row.push(fmt_f64(*v));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Inverse of [`GridFunction::write_columns_csv`]; rows must be in
    /// row-major order of a rectilinear grid.
    pub fn read_columns_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let head = lines
            .next()
            .ok_or_else(|| Error::Serde("empty grid CSV".into()))??;
        let cols = head.split(',').count();
        if cols < 2 {
            return Err(Error::Serde("grid CSV needs coordinates and a value column".into()));
        }
        let d = cols - 1;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Serde(format!("{e}: `{s}`"))))
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != cols {
                return Err(Error::Serde(format!("expected {cols} columns, got `{line}`")));
            }
            rows.push(row);
        }
        let mut axes = Vec::with_capacity(d);
        for k in 0..d {
            let mut axis: Vec<f64> = Vec::new();
            for row in &rows {
                if !axis.contains(&row[k]) {
                    axis.push(row[k]);
                }
            }
            axis.sort_by(f64::total_cmp);
            axes.push(axis);
        }
        let grid = RectGrid::new(axes)?;
        if grid.len() != rows.len() {
            return Err(Error::Serde("grid CSV rows do not form a full rectilinear grid".into()));
        }
        let mut x = vec![0.0; d];
        for (i, row) in rows.iter().enumerate() {
            grid.point_into(i, &mut x);
            if x[..] != row[..d] {
                return Err(Error::Serde("grid CSV rows are not in row-major order".into()));
            }
        }
        GridFunction::new(grid, rows.into_iter().map(|r| r[d]).collect())
    }
}

/// Full-precision decimal rendering (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn trapezoid_weights(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    if n == 1 {
        return vec![0.0];
    }
    (0..n)
        .map(|i| {
            let left = if i > 0 { a[i] - a[i - 1] } else { 0.0 };
            let right = if i + 1 < n { a[i + 1] - a[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

fn diff_uniform(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = if i >= 2 && i + 2 < n {
            (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h)
        } else {
            (f[i + 1] - f[i - 1]) / (2.0 * h)
        };
    }
}

fn diff_nonuniform(f: &[f64], x: &[f64], out: &mut [f64]) {
    let n = f.len();
    let three_point = |i0: usize, at: usize| -> f64 {
        let (x0, x1, x2) = (x[i0], x[i0 + 1], x[i0 + 2]);
        let t = x[at];
        f[i0] * (2.0 * t - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + f[i0 + 1] * (2.0 * t - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + f[i0 + 2] * (2.0 * t - x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    out[0] = three_point(0, 0);
    out[n - 1] = three_point(n - 3, n - 1);
    for i in 1..n - 1 {
        out[i] = three_point(i - 1, i);
    }
}
