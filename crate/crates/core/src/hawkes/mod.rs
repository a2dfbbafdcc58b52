//! Linear multivariate Hawkes processes with exponential kernels
//! `g_ij(t) = G_ij · β_ij · exp(−β_ij t)`.
//!
//! `G_ij` is the expected number of direct `i`-children of a `j`-event and
//! `R = (I − G)^{-1}` the expected composition of a whole cluster. The submodules
//! simulate through the cluster representation, compute exact and empirical integrated
//! covariances, and identify direct and mediated effects from observed covariances.

pub mod covariance;
pub mod identify;
pub mod simulate;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use covariance::{integrated_cov_empirical, integrated_cov_exact, CovMatrix};
pub use identify::{identify, Identified, IdentifyOptions, MediationRoles};
pub use simulate::{simulate, simulate_cluster, Event, EventStream};

/// Tolerance of the spectral-radius iteration.
pub const RADIUS_TOL: f64 = 1e-10;

/// Agreement required between the linear solve and the Neumann series for `R`.
pub const CLUSTER_AGREEMENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HawkesError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid model: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("unknown process `{0}`")]
    UnknownProcess(String),
    #[error("roles must name distinct processes")]
    RoleCollision,
    #[error("expected {expected:.3e} events, budget is {budget:.0e}")]
    Budget { expected: f64, budget: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("input covariance: {0}")]
    Input(String),
    #[error("identification failed: {0}")]
    Identification(String),
    #[error("linear solve and Neumann series disagree by {0:e}")]
    Disagreement(f64),
    #[error("malformed model file: {0}")]
    File(String),
}

/// Process names, immigrant rates, branching matrix and kernel decays.
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesModel {
    names: Vec<String>,
    mu: DVector<f64>,
    g: DMatrix<f64>,
    beta: DMatrix<f64>,
}

/// Outcome of [`HawkesModel::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub spectral_radius: f64,
    pub zero_diagonal: bool,
    pub nonnegative: bool,
    pub problems: Vec<String>,
}

impl Diagnostics {
    pub fn valid(&self) -> bool {
        self.problems.is_empty()
    }
}

impl HawkesModel {
    /// Checks shapes, finiteness and positive decays on edges; stability is checked by
    /// [`HawkesModel::validate`].
    pub fn new(names: Vec<String>, mu: Vec<f64>, g: DMatrix<f64>, beta: DMatrix<f64>) -> Result<Self, HawkesError> {
        let n = names.len();
        if mu.len() != n || g.shape() != (n, n) || beta.shape() != (n, n) {
            return Err(HawkesError::Dimension(format!("{n} processes need {n} rates and {n}×{n} matrices")));
        }
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != n {
            return Err(HawkesError::Dimension("process names must be distinct".into()));
        }
        if mu.iter().chain(g.iter()).chain(beta.iter()).any(|v| !v.is_finite()) {
            return Err(HawkesError::Invalid(vec!["parameters must be finite".into()]));
        }
        for i in 0..n {
            for j in 0..n {
                if g[(i, j)] > 0.0 && beta[(i, j)] <= 0.0 {
                    return Err(HawkesError::Invalid(vec![format!("decay for {} <- {} must be positive", names[i], names[j])]));
                }
            }
        }
        Ok(HawkesModel { names, mu: DVector::from_vec(mu), g, beta })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Result<usize, HawkesError> {
        self.names.iter().position(|n| n == name).ok_or_else(|| HawkesError::UnknownProcess(name.to_string()))
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    /// Spectral radius, zero diagonal and nonnegativity.
    pub fn validate(&self) -> Diagnostics {
        let nonnegative = self.mu.iter().chain(self.g.iter()).all(|&v| v >= 0.0);
        let zero_diagonal = (0..self.dim()).all(|i| self.g[(i, i)] == 0.0);
        let spectral_radius = if nonnegative { spectral_radius(&self.g) } else { f64::NAN };
        let mut problems = Vec::new();
        if !nonnegative {
            problems.push("rates and branching ratios must be nonnegative".into());
        }
        if !zero_diagonal {
            problems.push("branching matrix must have a zero diagonal (see `normalized`)".into());
        }
        if nonnegative && spectral_radius >= 1.0 {
            problems.push(format!("spectral radius {spectral_radius} is not below 1"));
        }
        Diagnostics { spectral_radius, zero_diagonal, nonnegative, problems }
    }

    pub(crate) fn ensure_valid(&self) -> Result<Diagnostics, HawkesError> {
        let d = self.validate();
        if d.valid() {
            Ok(d)
        } else {
            Err(HawkesError::Invalid(d.problems))
        }
    }

    /// Stationary mean intensities `(I − G)^{-1} μ`.
    pub fn mean_intensity(&self) -> Result<DVector<f64>, HawkesError> {
        Ok(self.cluster_matrix()?.r * &self.mu)
    }

    /// `R = (I − G)^{-1}`, by LU and by a Neumann series that must agree.
    pub fn cluster_matrix(&self) -> Result<ClusterMatrix, HawkesError> {
        let diag = self.ensure_valid()?;
        let n = self.dim();
        let eye = DMatrix::<f64>::identity(n, n);
        let r = (&eye - &self.g).lu().try_inverse().ok_or_else(|| HawkesError::Invalid(vec!["I − G is singular".into()]))?;
        let (neumann, terms) = neumann_series(&self.g, diag.spectral_radius);
        let gap = (&r - &neumann).amax();
        if gap > CLUSTER_AGREEMENT_TOL {
            return Err(HawkesError::Disagreement(gap));
        }
        Ok(ClusterMatrix { r, neumann_terms: terms, agreement: gap })
    }

    /// Direct, mediated and total expected `outcome`-events in a cluster rooted at a
    /// `source`-event.
    pub fn decompose_effects(&self, source: &str, mediator: &str, outcome: &str) -> Result<Effects, HawkesError> {
        let (a, m, d) = (self.index_of(source)?, self.index_of(mediator)?, self.index_of(outcome)?);
        if a == m || a == d || m == d {
            return Err(HawkesError::RoleCollision);
        }
        let r = self.cluster_matrix()?.r;
        Ok(Effects { direct: self.g[(d, a)], mediated: self.g[(d, m)] * self.g[(m, a)], total: r[(d, a)] })
    }

    /// Moves self-excitation into the cross terms: `G̃_ij = G_ij / (1 − G_ii)` for
    /// `i ≠ j`, zero diagonal, and `μ̃_i = μ_i / (1 − G_ii)` so mean intensities are kept.
    /// Decays are carried over unchanged.
    pub fn normalized(&self) -> Result<HawkesModel, HawkesError> {
        let n = self.dim();
        if let Some(i) = (0..n).find(|&i| self.g[(i, i)] >= 1.0) {
            return Err(HawkesError::Invalid(vec![format!("self-excitation of {} is not below 1", self.names[i])]));
        }
        let mut g = self.g.clone();
        let mut mu = self.mu.clone();
        for i in 0..n {
            let scale = 1.0 / (1.0 - self.g[(i, i)]);
            for j in 0..n {
                g[(i, j)] = if i == j { 0.0 } else { self.g[(i, j)] * scale };
            }
            mu[i] *= scale;
        }
        HawkesModel::new(self.names.clone(), mu.as_slice().to_vec(), g, self.beta.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMatrix {
    pub r: DMatrix<f64>,
    pub neumann_terms: usize,
    /// Largest entrywise gap between the two computations.
    pub agreement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Effects {
    pub direct: f64,
    pub mediated: f64,
    pub total: f64,
}

/// Spectral radius of a nonnegative matrix: the largest radius over its strongly
/// connected blocks, each found by power iteration on `I + block` with
/// Collatz–Wielandt bounds.
pub fn spectral_radius(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows();
    let mut graph = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if g[(i, j)] > 0.0 {
                graph.add_edge(nodes[j], nodes[i], ());
            }
        }
    }
    tarjan_scc(&graph)
        .into_iter()
        .map(|comp| {
            let idx: Vec<usize> = comp.iter().map(|v| v.index()).collect();
            if idx.len() == 1 {
                return g[(idx[0], idx[0])];
            }
            let block = DMatrix::from_fn(idx.len(), idx.len(), |a, b| g[(idx[a], idx[b])]);
            irreducible_radius(&block)
        })
        .fold(0.0, f64::max)
}

fn irreducible_radius(block: &DMatrix<f64>) -> f64 {
    let k = block.nrows();
    // I + A is primitive when A is irreducible, so the iteration converges.
    let shifted = block + DMatrix::<f64>::identity(k, k);
    let mut x = DVector::from_element(k, 1.0);
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..1_000_000 {
        let y = &shifted * &x;
        let ratios = y.component_div(&x);
        lo = ratios.min();
        hi = ratios.max();
        if hi - lo <= RADIUS_TOL {
            break;
        }
        x = &y / y.max();
    }
    0.5 * (lo + hi) - 1.0
}

/// `Σ_k G^k` until the remaining tail is below `1e-13`, using the geometric bound from
/// the max-norm of powers (falls back to the spectral radius for slowly decaying powers).
fn neumann_series(g: &DMatrix<f64>, radius: f64) -> (DMatrix<f64>, usize) {
    let n = g.nrows();
    let mut sum = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut k = 0;
    loop {
        term = &term * g;
        k += 1;
        sum += &term;
        let size = term.iter().map(|v| v.abs()).sum::<f64>();
        // A tail bound of size · r / (1 − r) holds once powers shrink at rate r.
        let bound = if radius < 1.0 { size * radius.max(1e-300) / (1.0 - radius) } else { size };
        if size == 0.0 || (k >= n && bound < 1e-13) || k >= 100_000 {
            return (sum, k);
        }
    }
}

/// On-disk model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HawkesFile {
    pub processes: Vec<String>,
    pub mu: Vec<f64>,
    pub g: Vec<Vec<f64>>,
    pub beta: Vec<Vec<f64>>,
    /// Processes whose events are observed; all when absent.
    #[serde(default)]
    pub observed: Option<Vec<String>>,
    #[serde(default)]
    pub roles: Option<MediationRoles>,
}

impl HawkesFile {
    pub fn parse(text: &str) -> Result<Self, HawkesError> {
        serde_json::from_str(text).map_err(|e| HawkesError::File(e.to_string()))
    }

    pub fn model(&self) -> Result<HawkesModel, HawkesError> {
        let n = self.processes.len();
        let matrix = |rows: &[Vec<f64>], what: &str| {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(HawkesError::Dimension(format!("`{what}` must be {n}×{n}")));
            }
            Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
        };
        HawkesModel::new(self.processes.clone(), self.mu.clone(), matrix(&self.g, "g")?, matrix(&self.beta, "beta")?)
    }

    pub fn from_model(model: &HawkesModel, observed: Option<Vec<String>>, roles: Option<MediationRoles>) -> Self {
        let rows = |m: &DMatrix<f64>| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        HawkesFile {
            processes: model.names.clone(),
            mu: model.mu.as_slice().to_vec(),
            g: rows(&model.g),
            beta: rows(&model.beta),
            observed,
            roles,
        }
    }
}

/// The five-process mediation model: treatment `A`, mediator `M`, outcome `D`, observed
/// covariate `L` and latent `U`, with edges `A→M`, `A→D`, `M→D`, `L→M`, `L→D`, `U→L`, `U→D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediationWeights {
    pub ma: f64,
    pub da: f64,
    pub dm: f64,
    pub ml: f64,
    pub dl: f64,
    pub lu: f64,
    pub du: f64,
}

/// Process order used by [`mediation_model`].
pub const MEDIATION_PROCESSES: [&str; 5] = ["A", "M", "D", "L", "U"];

pub fn mediation_model(w: MediationWeights, mu: [f64; 5], beta: f64) -> Result<HawkesModel, HawkesError> {
    let mut g = DMatrix::zeros(5, 5);
    let (a, m, d, l, u) = (0, 1, 2, 3, 4);
    g[(m, a)] = w.ma;
    g[(d, a)] = w.da;
    g[(d, m)] = w.dm;
    g[(m, l)] = w.ml;
    g[(d, l)] = w.dl;
    g[(l, u)] = w.lu;
    g[(d, u)] = w.du;
    HawkesModel::new(
        MEDIATION_PROCESSES.iter().map(|s| s.to_string()).collect(),
        mu.to_vec(),
        g,
        DMatrix::from_element(5, 5, beta),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_radius(g: &DMatrix<f64>) -> f64 {
        g.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn weights(all: f64) -> MediationWeights {
        MediationWeights { ma: all, da: all, dm: all, ml: all, dl: all, lu: all, du: all }
    }

    #[test]
    fn zero_branching_is_trivially_valid() {
        let m = HawkesModel::new(
            vec!["x".into(), "y".into()],
            vec![1.0, 2.0],
            DMatrix::zeros(2, 2),
            DMatrix::from_element(2, 2, 1.0),
        )
        .unwrap();
        let d = m.validate();
        assert!(d.valid());
        assert_eq!(d.spectral_radius, 0.0);
        assert_eq!(m.cluster_matrix().unwrap().r, DMatrix::identity(2, 2));
    }

    #[test]
    fn two_cycle_radius_has_closed_form() {
        // Eigenvalues ±sqrt(bc).
        let g = DMatrix::from_row_slice(2, 2, &[0.0, 1.2, 1.2, 0.0]);
        assert!((spectral_radius(&g) - 1.2).abs() <= 1e-9);
        let m = HawkesModel::new(vec!["x".into(), "y".into()], vec![1.0, 1.0], g, DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert!(!m.validate().valid());
        assert!(m.cluster_matrix().is_err());
    }

    #[test]
    fn radius_matches_dense_eigen_solve() {
        let m = mediation_model(weights(0.3), [1.0; 5], 1.0).unwrap();
        // Acyclic: every eigenvalue is zero. A dense solver perturbs a nilpotent matrix's
        // eigenvalues by roughly eps^(1/k) for chains of length k.
        assert_eq!(m.validate().spectral_radius, 0.0);
        assert!(dense_radius(m.g()) < 1e-4);
        let g = DMatrix::from_row_slice(3, 3, &[0.0, 0.3, 0.1, 0.2, 0.0, 0.4, 0.5, 0.1, 0.0]);
        assert!((spectral_radius(&g) - dense_radius(&g)).abs() <= 1e-9);
    }

    #[test]
    fn total_effect_is_direct_plus_mediated() {
        let w = MediationWeights { ma: 0.5, da: 0.2, dm: 0.4, ..weights(0.3) };
        let m = mediation_model(w, [1.0; 5], 1.0).unwrap();
        let e = m.decompose_effects("A", "M", "D").unwrap();
        assert_eq!((e.direct, e.mediated), (0.2, 0.4 * 0.5));
        assert!((e.total - 0.4).abs() < 1e-15);
        assert!(matches!(m.decompose_effects("A", "A", "D"), Err(HawkesError::RoleCollision)));
        let no_med = mediation_model(MediationWeights { dm: 0.0, ..w }, [1.0; 5], 1.0).unwrap();
        let e = no_med.decompose_effects("A", "M", "D").unwrap();
        assert_eq!((e.mediated, e.total), (0.0, e.direct));
    }

    #[test]
    fn cluster_matrix_inverts() {
        let g = DMatrix::from_row_slice(3, 3, &[0.0, 0.3, 0.1, 0.2, 0.0, 0.4, 0.5, 0.1, 0.0]);
        let m =
            HawkesModel::new(vec!["a".into(), "b".into(), "c".into()], vec![1.0; 3], g.clone(), DMatrix::from_element(3, 3, 1.0))
                .unwrap();
        let c = m.cluster_matrix().unwrap();
        let prod = &c.r * (DMatrix::identity(3, 3) - g);
        assert!((prod - DMatrix::<f64>::identity(3, 3)).amax() <= 1e-10);
        assert!(c.agreement <= CLUSTER_AGREEMENT_TOL);
    }

    #[test]
    fn normalization_keeps_mean_intensity() {
        let g = DMatrix::from_row_slice(2, 2, &[0.4, 0.2, 0.3, 0.1]);
        let m =
            HawkesModel::new(vec!["x".into(), "y".into()], vec![1.0, 0.5], g.clone(), DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert!(!m.validate().zero_diagonal);
        let n = m.normalized().unwrap();
        assert!(n.validate().valid());
        let eye = DMatrix::<f64>::identity(2, 2);
        let lam = (&eye - &g).try_inverse().unwrap() * m.mu();
        assert!((n.mean_intensity().unwrap() - lam).amax() < 1e-12);
        assert!((n.g()[(0, 1)] - 0.2 / 0.6).abs() < 1e-15);
    }

    #[test]
    fn model_file_round_trips() {
        let m = mediation_model(weights(0.2), [1.0, 0.5, 0.2, 0.7, 0.4], 2.0).unwrap();
        let f = HawkesFile::from_model(&m, None, None);
        let back = HawkesFile::parse(&serde_json::to_string(&f).unwrap()).unwrap().model().unwrap();
        assert_eq!(back, m);
        assert!(HawkesFile::parse("{}").is_err());
    }
}
