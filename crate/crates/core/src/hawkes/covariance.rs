//! Integrated covariance `C_ij = ∫ cov(dN^i_t, dN^j_{t+τ}) dτ / dt`, exactly from the
//! model and empirically from binned counts.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{EventStream, HawkesError, HawkesModel};

/// Fewest bins the empirical estimator accepts.
pub const MIN_BINS: usize = 100;

/// Default bin width for the empirical estimator.
pub const DEFAULT_BIN_WIDTH: f64 = 0.2;

/// Kernel tail mass left outside the default lag window.
pub const DEFAULT_TAIL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovMatrix {
    pub names: Vec<String>,
    #[serde(serialize_with = "rows")]
    pub matrix: DMatrix<f64>,
}

fn rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    let v: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    serde::Serialize::serialize(&v, s)
}

impl CovMatrix {
    pub fn index_of(&self, name: &str) -> Result<usize, HawkesError> {
        self.names.iter().position(|n| n == name).ok_or_else(|| HawkesError::UnknownProcess(name.to_string()))
    }

    pub fn get(&self, a: &str, b: &str) -> Result<f64, HawkesError> {
        Ok(self.matrix[(self.index_of(a)?, self.index_of(b)?)])
    }

    /// Restriction to the named processes, in the given order.
    pub fn submatrix(&self, names: &[&str]) -> Result<CovMatrix, HawkesError> {
        let idx: Vec<usize> = names.iter().map(|n| self.index_of(n)).collect::<Result<_, _>>()?;
        Ok(CovMatrix {
            names: names.iter().map(|s| s.to_string()).collect(),
            matrix: DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.matrix[(idx[a], idx[b])]),
        })
    }
}

/// `R · diag(Λ) · Rᵀ` with `Λ = R μ`, restricted to `observed` (all processes when `None`).
pub fn integrated_cov_exact(model: &HawkesModel, observed: Option<&[&str]>) -> Result<CovMatrix, HawkesError> {
    let r = model.cluster_matrix()?.r;
    let lam = &r * model.mu();
    let full = &r * DMatrix::from_diagonal(&lam) * r.transpose();
    let full = (&full + full.transpose()) * 0.5;
    let all = CovMatrix { names: model.names().to_vec(), matrix: full };
    match observed {
        Some(names) => all.submatrix(names),
        None => Ok(all),
    }
}

/// Middle matrix `(I − G_OO) C_OO (I − G_OO)ᵀ` of the observed block.
pub fn observed_noise(model: &HawkesModel, observed: &[&str]) -> Result<DMatrix<f64>, HawkesError> {
    let c = integrated_cov_exact(model, Some(observed))?;
    let idx: Vec<usize> = observed.iter().map(|n| model.index_of(n)).collect::<Result<_, _>>()?;
    let k = idx.len();
    let a = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { 0.0 } - model.g()[(idx[i], idx[j])]);
    Ok(&a * c.matrix * a.transpose())
}

/// Number of lags so that `exp(−β_min · lags · width) < tail`.
pub fn default_max_lag(model: &HawkesModel, width: f64, tail: f64) -> usize {
    let beta_min = (0..model.dim())
        .flat_map(|i| (0..model.dim()).map(move |j| (i, j)))
        .filter(|&(i, j)| model.g()[(i, j)] > 0.0)
        .map(|(i, j)| model.beta()[(i, j)])
        .fold(f64::INFINITY, f64::min);
    if !beta_min.is_finite() {
        return 0;
    }
    (-(tail.ln()) / (beta_min * width)).ceil() as usize
}

/// Bins counts at `width`, sums sample cross-covariances over lags `−max_lag..=max_lag`,
/// divides by `width` and symmetrizes. Only the named processes are kept.
pub fn integrated_cov_empirical(
    stream: &EventStream,
    processes: &[&str],
    width: f64,
    max_lag: usize,
) -> Result<CovMatrix, HawkesError> {
    if width.is_nan() || width <= 0.0 {
        return Err(HawkesError::InsufficientData("bin width must be positive".into()));
    }
    if stream.events.is_empty() {
        return Err(HawkesError::InsufficientData("no events".into()));
    }
    let bins = (stream.horizon / width).floor() as usize;
    if bins < MIN_BINS || bins <= 2 * max_lag + 1 {
        return Err(HawkesError::InsufficientData(format!("{bins} bins for lag window {max_lag}")));
    }
    let idx: Vec<usize> = processes
        .iter()
        .map(|p| stream.names.iter().position(|n| n == p).ok_or_else(|| HawkesError::UnknownProcess(p.to_string())))
        .collect::<Result<_, _>>()?;
    let k = idx.len();
    let mut counts = vec![vec![0.0f64; bins]; k];
    for e in &stream.events {
        if let Some(a) = idx.iter().position(|&i| i == e.process) {
            let b = ((e.time / width) as usize).min(bins - 1);
            counts[a][b] += 1.0;
        }
    }
    for series in counts.iter_mut() {
        let mean = series.iter().sum::<f64>() / bins as f64;
        series.iter_mut().for_each(|x| *x -= mean);
    }
    let mut c = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            let mut total = 0.0;
            for lag in 0..=max_lag {
                let m = bins - lag;
                let fwd: f64 = (0..m).map(|t| counts[a][t] * counts[b][t + lag]).sum::<f64>() / m as f64;
                total += fwd;
                if lag > 0 {
                    let back: f64 = (0..m).map(|t| counts[a][t + lag] * counts[b][t]).sum::<f64>() / m as f64;
                    total += back;
                }
            }
            c[(a, b)] = total / width;
        }
    }
    let c = (&c + c.transpose()) * 0.5;
    Ok(CovMatrix { names: processes.iter().map(|s| s.to_string()).collect(), matrix: c })
}
