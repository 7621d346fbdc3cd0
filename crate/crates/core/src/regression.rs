//! Nonparametric estimators of the regression function η(x) = P(Y = 1 | X = x).
//!
//! Three estimators are provided: k-nearest neighbors, Nadaraya–Watson kernel
//! smoothing and local polynomial regression. Every estimate is clipped to
//! `[0, 1]`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FbetaError, Result};

/// Labeled sample `D_n` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    points: Vec<f64>,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(dim: usize, points: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if dim == 0 {
            return Err(FbetaError::Invalid("dimension must be at least 1".into()));
        }
        if labels.is_empty() {
            return Err(FbetaError::Invalid("labeled dataset must be nonempty".into()));
        }
        if points.len() != dim * labels.len() {
            return Err(FbetaError::Invalid(format!(
                "{} coordinates do not form {} points of dimension {dim}",
                points.len(),
                labels.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&y| y > 1) {
            return Err(FbetaError::Invalid(format!("label[{i}] = {} is not binary", labels[i])));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(FbetaError::Invalid("points must be finite".into()));
        }
        Ok(LabeledDataset { dim, points, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(FbetaError::Invalid("rows have differing dimensions".into()));
        }
        Self::new(dim, rows.concat(), labels)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y == 1).count()
    }

    pub fn label_mean(&self) -> f64 {
        self.positives() as f64 / self.len() as f64
    }

    /// The same points with every label replaced by `1 − y`.
    pub fn flipped(&self) -> Self {
        LabeledDataset {
            dim: self.dim,
            points: self.points.clone(),
            labels: self.labels.iter().map(|y| 1 - y).collect(),
        }
    }
}

/// Hölder smoothness `(β, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessSpec {
    pub beta: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
}

impl SmoothnessSpec {
    pub fn new(beta: f64, lipschitz: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) || !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(FbetaError::Argument(format!(
                "smoothness needs beta > 0 and L > 0, got beta={beta}, L={lipschitz}"
            )));
        }
        Ok(SmoothnessSpec { beta, lipschitz })
    }

    /// Degree `⌊β⌋` of the matching local polynomial (β = 1 gives degree 1).
    pub fn poly_degree(&self) -> usize {
        self.beta.floor() as usize
    }
}

/// Bandwidth `h = n^{-1/(2β+d)}` and concentration rate `a_n = n^{2β/(2β+d)}`.
pub fn default_bandwidth(n: usize, spec: &SmoothnessSpec, d: usize) -> (f64, f64) {
    let n = n.max(1) as f64;
    let denom = 2.0 * spec.beta + d as f64;
    (n.powf(-1.0 / denom), n.powf(2.0 * spec.beta / denom))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `(1 − ‖u‖²)₊`
    Epanechnikov,
    /// `exp(−‖u‖²/2)`
    Gaussian,
}

impl KernelKind {
    fn weight(self, u2: f64) -> f64 {
        match self {
            KernelKind::Epanechnikov => (1.0 - u2).max(0.0),
            KernelKind::Gaussian => (-0.5 * u2).exp(),
        }
    }
}

/// Estimator with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum RegressionMethod {
    Knn { k: usize },
    Kernel { h: f64, kernel: KernelKind },
    LocalPoly { degree: usize, h: f64 },
}

/// Fitted η̂.
#[derive(Debug, Clone)]
pub struct RegressionEstimate {
    method: RegressionMethod,
    data: LabeledDataset,
    /// One-dimensional data only: coordinates sorted by `(x, index)`.
    sorted_x: Vec<f64>,
    sorted_idx: Vec<usize>,
    /// `prefix[j]` = number of positive labels among the first `j` sorted points.
    prefix: Vec<u64>,
}

pub fn fit_knn(data: &LabeledDataset, k: usize) -> Result<RegressionEstimate> {
    fit(data, RegressionMethod::Knn { k })
}

pub fn fit_kernel(data: &LabeledDataset, h: f64, kernel: KernelKind) -> Result<RegressionEstimate> {
    fit(data, RegressionMethod::Kernel { h, kernel })
}

pub fn fit_local_poly(data: &LabeledDataset, degree: usize, h: f64) -> Result<RegressionEstimate> {
    fit(data, RegressionMethod::LocalPoly { degree, h })
}

pub fn fit(data: &LabeledDataset, method: RegressionMethod) -> Result<RegressionEstimate> {
    match method {
        RegressionMethod::Knn { k } if k == 0 || k > data.len() => {
            return Err(FbetaError::Argument(format!("k = {k} must lie in [1, {}]", data.len())));
        }
        RegressionMethod::Kernel { h, .. } | RegressionMethod::LocalPoly { h, .. } if !(h > 0.0 && h.is_finite()) => {
            return Err(FbetaError::Argument(format!("bandwidth must be positive, got {h}")));
        }
        _ => {}
    }
    let (mut sorted_x, mut sorted_idx, mut prefix) = (Vec::new(), Vec::new(), Vec::new());
    if data.dim == 1 {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.sort_by(|&a, &b| data.points[a].total_cmp(&data.points[b]).then(a.cmp(&b)));
        sorted_x = order.iter().map(|&i| data.points[i]).collect();
        prefix.reserve(order.len() + 1);
        prefix.push(0);
        let mut acc = 0u64;
        for &i in &order {
            acc += data.labels[i] as u64;
            prefix.push(acc);
        }
        sorted_idx = order;
    }
    Ok(RegressionEstimate { method, data: data.clone(), sorted_x, sorted_idx, prefix })
}

/// Piecewise-constant form of a one-dimensional kNN estimate:
/// `values[j]` holds on `(breaks[j−1], breaks[j]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn evaluate(&self, x: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b < x)]
    }
}

impl RegressionEstimate {
    pub fn method(&self) -> RegressionMethod {
        self.method
    }

    pub fn data(&self) -> &LabeledDataset {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.dim
    }

    /// η̂(x), clipped to `[0, 1]`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.data.dim {
            return Err(FbetaError::Argument(format!(
                "query has dimension {}, estimate expects {}",
                x.len(),
                self.data.dim
            )));
        }
        Ok(self.evaluate_unchecked(x).clamp(0.0, 1.0))
    }

    /// η̂ at each row of `xs` (row-major), in parallel with ordered output.
    pub fn evaluate_batch(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let d = self.data.dim;
        if xs.len() % d != 0 {
            return Err(FbetaError::Argument(format!("{} coordinates are not a multiple of {d}", xs.len())));
        }
        Ok(xs.par_chunks(d).map(|x| self.evaluate_unchecked(x).clamp(0.0, 1.0)).collect())
    }

    fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        match self.method {
            RegressionMethod::Knn { k } => self.knn(x, k),
            RegressionMethod::Kernel { h, kernel } => self.kernel(x, h, kernel),
            RegressionMethod::LocalPoly { degree, h } => self.local_poly(x, degree, h),
        }
    }

    /// Exact piecewise-constant representation of a one-dimensional kNN
    /// estimate; `None` for other methods, `d > 1` or repeated coordinates.
    /// Agrees with [`evaluate`](Self::evaluate) away from the breakpoints.
    pub fn piecewise(&self) -> Option<PiecewiseConstant> {
        let RegressionMethod::Knn { k } = self.method else { return None };
        if self.data.dim != 1 || self.sorted_x.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        let s = &self.sorted_x;
        let n = s.len();
        let breaks = (0..n - k).map(|j| 0.5 * (s[j] + s[j + k])).collect();
        let values = (0..=n - k)
            .map(|j| (self.prefix[j + k] - self.prefix[j]) as f64 / k as f64)
            .collect();
        Some(PiecewiseConstant { breaks, values })
    }

    fn knn(&self, x: &[f64], k: usize) -> f64 {
        if self.data.dim == 1 {
            return self.knn_1d(x[0], k);
        }
        let mut keyed: Vec<(f64, usize)> = (0..self.data.len())
            .map(|i| (sq_dist(x, self.data.point(i)), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < keyed.len() {
            keyed.select_nth_unstable_by(k - 1, cmp);
        }
        let positives: u64 = keyed[..k].iter().map(|&(_, i)| self.data.labels[i] as u64).sum();
        positives as f64 / k as f64
    }

    fn knn_1d(&self, x: f64, k: usize) -> f64 {
        let s = &self.sorted_x;
        let n = s.len();
        let pos = s.partition_point(|&v| v < x);
        let (mut l, mut r) = (pos, pos);
        let mut radius = 0.0;
        for _ in 0..k {
            let dl = if l > 0 { x - s[l - 1] } else { f64::INFINITY };
            let dr = if r < n { s[r] - x } else { f64::INFINITY };
            if dl <= dr {
                l -= 1;
                radius = dl;
            } else {
                r += 1;
                radius = dr;
            }
        }
        // Strictly inside the radius: a contiguous block [lo, hi).
        let lo = s[..pos].partition_point(|&v| x - v >= radius);
        let hi = pos + s[pos..].partition_point(|&v| v - x < radius);
        let mut positives = self.prefix[hi] - self.prefix[lo];
        let need = k - (hi - lo);
        if need > 0 {
            let lo_tie = s[..lo].partition_point(|&v| x - v > radius);
            let hi_tie = hi + s[hi..].partition_point(|&v| v - x <= radius);
            let mut tied: Vec<usize> =
                (lo_tie..lo).chain(hi..hi_tie).map(|j| self.sorted_idx[j]).collect();
            tied.sort_unstable();
            positives += tied[..need].iter().map(|&i| self.data.labels[i] as u64).sum::<u64>();
        }
        positives as f64 / k as f64
    }

    /// Indices of data points within distance `h` of `x`, ascending.
    fn window(&self, x: &[f64], h: f64) -> Vec<usize> {
        if self.data.dim == 1 {
            let s = &self.sorted_x;
            let lo = s.partition_point(|&v| v < x[0] - h);
            let hi = s.partition_point(|&v| v <= x[0] + h);
            let mut idx: Vec<usize> = self.sorted_idx[lo..hi].to_vec();
            idx.sort_unstable();
            idx
        } else {
            let h2 = h * h;
            (0..self.data.len()).filter(|&i| sq_dist(x, self.data.point(i)) <= h2).collect()
        }
    }

    fn kernel(&self, x: &[f64], h: f64, kernel: KernelKind) -> f64 {
        let candidates: Vec<usize> = match kernel {
            KernelKind::Epanechnikov => self.window(x, h),
            KernelKind::Gaussian => (0..self.data.len()).collect(),
        };
        let h2 = h * h;
        let (mut num, mut den) = (0.0, 0.0);
        for i in candidates {
            let w = kernel.weight(sq_dist(x, self.data.point(i)) / h2);
            num += w * self.data.labels[i] as f64;
            den += w;
        }
        if den > 0.0 {
            num / den
        } else {
            self.knn(x, 1)
        }
    }

    fn local_poly(&self, x: &[f64], degree: usize, h: f64) -> f64 {
        if degree == 0 {
            return self.kernel(x, h, KernelKind::Epanechnikov);
        }
        let d = self.data.dim;
        let exps = monomials(d, degree);
        let h2 = h * h;
        let rows: Vec<(usize, f64)> = self
            .window(x, h)
            .into_iter()
            .map(|i| (i, KernelKind::Epanechnikov.weight(sq_dist(x, self.data.point(i)) / h2)))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        if rows.len() < exps.len() {
            return self.kernel(x, h, KernelKind::Epanechnikov);
        }
        let mut a = DMatrix::<f64>::zeros(rows.len(), exps.len());
        let mut y = DVector::<f64>::zeros(rows.len());
        let mut z = vec![0.0; d];
        for (r, &(i, w)) in rows.iter().enumerate() {
            let sw = w.sqrt();
            for (c, zc) in z.iter_mut().enumerate() {
                *zc = (self.data.point(i)[c] - x[c]) / h;
            }
            for (c, e) in exps.iter().enumerate() {
                let m: f64 = e.iter().zip(&z).map(|(&p, &v)| v.powi(p as i32)).product();
                a[(r, c)] = sw * m;
            }
            y[r] = sw * self.data.labels[i] as f64;
        }
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        if !(smax > 0.0) || svd.singular_values.min() < 1e-10 * smax {
            return self.kernel(x, h, KernelKind::Epanechnikov);
        }
        match svd.solve(&y, 0.0) {
            Ok(coef) if coef[0].is_finite() => coef[0],
            _ => self.kernel(x, h, KernelKind::Epanechnikov),
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Multi-indices of total degree ≤ `degree` in `d` variables, constant first.
fn monomials(d: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=degree {
        let mut current = vec![0; d];
        compositions(total, 0, &mut current, &mut out);
    }
    out
}

fn compositions(remaining: usize, pos: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for p in (0..=remaining).rev() {
        current[pos] = p;
        compositions(remaining - p, pos + 1, current, out);
    }
}
