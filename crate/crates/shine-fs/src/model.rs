//! Domain types shared by every stage of the pipeline: datasets, model
//! hyperparameters, the full optimization state, and evaluation reports.
//!
//! Data is stored features-by-samples: view `v` is a `d_v x n` matrix whose
//! columns are samples. Loaders that read row-per-sample files transpose on
//! the way in.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShineError};

/// Identifies a single feature as (view index, row index within that view).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FeatureRef {
    pub view: usize,
    pub index: usize,
}

impl FeatureRef {
    pub fn new(view: usize, index: usize) -> Self {
        FeatureRef { view, index }
    }
}

/// A multi-view dataset: `l` views over the same `n` samples.
///
/// Optional ground-truth labels and planted-feature metadata travel with the
/// data so evaluation and synthetic-recovery checks can use them.
#[derive(Debug, Clone)]
pub struct MultiViewDataset {
    /// One `d_v x n` matrix per view (features by samples).
    pub views: Vec<DMatrix<f64>>,
    /// Optional class id per sample.
    pub labels: Option<Vec<usize>>,
    /// Features known to carry cluster structure (synthetic ground truth).
    pub informative_features: Option<Vec<FeatureRef>>,
    /// Optional per-view feature names.
    pub feature_names: Option<Vec<Vec<String>>>,
}

impl MultiViewDataset {
    /// Builds a dataset from per-view matrices, validating the type
    /// invariants (shared sample count, nonempty views, finite entries).
    pub fn new(views: Vec<DMatrix<f64>>) -> Result<Self> {
        let ds = MultiViewDataset {
            views,
            labels: None,
            informative_features: None,
            feature_names: None,
        };
        ds.check()?;
        Ok(ds)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n_samples() {
            return Err(ShineError::LabelLengthMismatch {
                left: labels.len(),
                right: self.n_samples(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    /// Shared sample count. Panics on an empty view list; `check` rejects it.
    pub fn n_samples(&self) -> usize {
        self.views[0].ncols()
    }

    pub fn view_dims(&self) -> Vec<usize> {
        self.views.iter().map(|x| x.nrows()).collect()
    }

    /// Total feature count pooled over views.
    pub fn total_features(&self) -> usize {
        self.views.iter().map(|x| x.nrows()).sum()
    }

    /// Stacks all views along the feature axis into one `(sum d_v) x n` matrix.
    pub fn concatenated(&self) -> DMatrix<f64> {
        let n = self.n_samples();
        let d: usize = self.total_features();
        let mut out = DMatrix::zeros(d, n);
        let mut at = 0;
        for x in &self.views {
            out.view_mut((at, 0), (x.nrows(), n)).copy_from(x);
            at += x.nrows();
        }
        out
    }

    /// Validates the dataset invariants.
    pub fn check(&self) -> Result<()> {
        if self.views.is_empty() {
            return Err(ShineError::NoViews);
        }
        let n = self.views[0].ncols();
        if n < 2 {
            return Err(ShineError::TooFewSamples { n });
        }
        for (v, x) in self.views.iter().enumerate() {
            if x.nrows() == 0 {
                return Err(ShineError::EmptyView { view: v });
            }
            if x.ncols() != n {
                return Err(ShineError::SampleCountMismatch {
                    view: v,
                    expected: n,
                    found: x.ncols(),
                });
            }
            for j in 0..x.ncols() {
                for i in 0..x.nrows() {
                    if !x[(i, j)].is_finite() {
                        return Err(ShineError::NonFiniteEntry {
                            view: v,
                            row: i,
                            col: j,
                        });
                    }
                }
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != n {
                return Err(ShineError::LabelLengthMismatch {
                    left: labels.len(),
                    right: n,
                });
            }
        }
        Ok(())
    }
}

/// Model hyperparameters and run controls.
///
/// `lambda_s` / `lambda_g` are deliberately absent: both regularizers are
/// determined automatically inside the S and G updates and recorded on the
/// state, never tuned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    /// Row-sparsity (l2,1) weight on the projection matrices. Must be > 0.
    pub gamma: f64,
    /// Frobenius weight on the anchor graph. Must be > 0.
    pub beta: f64,
    /// Trade-off between first- and second-order similarity. Must be >= 0.
    pub eta: f64,
    /// Neighbors kept per row of the similarity graphs.
    pub k: usize,
    /// Anchor count; must satisfy m <= c.
    pub m: usize,
    /// Latent dimension, doubling as the cluster count.
    pub c: usize,
    /// Smoothing constant inside the row-reweighting diagonal.
    pub epsilon: f64,
    pub max_outer_iters: usize,
    /// Relative objective-change threshold for outer convergence.
    pub rel_tol: f64,
    pub gpi_max_iters: usize,
    pub gpi_tol: f64,
    pub seed: u64,
    /// Freezes the second-order graph at zero (the "-I" ablation variant).
    pub disable_second_order: bool,
    /// Z-score each feature before fitting.
    pub standardize: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            gamma: 1.0,
            beta: 1.0,
            eta: 1.0,
            k: 5,
            m: 4,
            c: 4,
            epsilon: 1e-8,
            max_outer_iters: 50,
            rel_tol: 1e-6,
            gpi_max_iters: 100,
            gpi_tol: 1e-8,
            seed: 0,
            disable_second_order: false,
            standardize: true,
        }
    }
}

impl HyperParams {
    /// Validates the parameter-only invariants (no dataset needed).
    pub fn check(&self) -> Result<()> {
        for (name, value, ok, requirement) in [
            ("gamma", self.gamma, self.gamma > 0.0, "> 0"),
            ("beta", self.beta, self.beta > 0.0, "> 0"),
            ("epsilon", self.epsilon, self.epsilon > 0.0, "> 0"),
            ("eta", self.eta, self.eta >= 0.0, ">= 0"),
            ("rel_tol", self.rel_tol, self.rel_tol > 0.0, "> 0"),
            ("gpi_tol", self.gpi_tol, self.gpi_tol > 0.0, "> 0"),
        ] {
            if !value.is_finite() || !ok {
                return Err(ShineError::BadParam {
                    name,
                    requirement,
                    value,
                });
            }
        }
        if self.k == 0 {
            return Err(ShineError::KZero);
        }
        if self.m == 0 {
            return Err(ShineError::BadParam {
                name: "m",
                requirement: ">= 1",
                value: 0.0,
            });
        }
        if self.c < 2 {
            return Err(ShineError::BadParam {
                name: "c",
                requirement: ">= 2",
                value: self.c as f64,
            });
        }
        if self.m > self.c {
            return Err(ShineError::MExceedsC {
                m: self.m,
                c: self.c,
            });
        }
        Ok(())
    }
}

/// Validates a dataset/hyperparameter pair against every invariant the
/// optimizer relies on, returning the pair untouched.
pub fn validate<'a>(
    dataset: &'a MultiViewDataset,
    params: &'a HyperParams,
) -> Result<(&'a MultiViewDataset, &'a HyperParams)> {
    dataset.check()?;
    params.check()?;
    let n = dataset.n_samples();
    // k neighbors, the excluded self, and the (k+1)-th sorted entry must fit.
    if params.k + 2 > n {
        return Err(ShineError::KTooLarge { k: params.k, n });
    }
    if params.c > n {
        return Err(ShineError::CExceedsSamples { c: params.c, n });
    }
    for (v, d) in dataset.view_dims().iter().enumerate() {
        if params.c > *d {
            return Err(ShineError::CExceedsViewDim {
                c: params.c,
                d: *d,
                view: v,
            });
        }
    }
    Ok((dataset, params))
}

/// Row-structured graph where every row holds exactly `k` weights that sum
/// to one, with the diagonal forced to zero.
///
/// The all-zero variant (`zeros`) exists solely for the ablation that freezes
/// the second-order graph; it fails `check` on purpose.
#[derive(Debug, Clone, PartialEq)]
pub struct KSparseRowGraph {
    n: usize,
    k: usize,
    /// Per-row entries sorted by column index.
    rows: Vec<Vec<(usize, f64)>>,
}

impl KSparseRowGraph {
    /// Assembles a graph from per-row (column, weight) entries, sorting each
    /// row by column and validating the row contracts.
    pub fn from_rows(n: usize, k: usize, mut rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if rows.len() != n {
            return Err(ShineError::ShapeMismatch {
                context: format!("graph has {} rows, expected {}", rows.len(), n),
            });
        }
        for row in rows.iter_mut() {
            row.sort_unstable_by_key(|(j, _)| *j);
        }
        let g = KSparseRowGraph { n, k, rows };
        g.check()?;
        Ok(g)
    }

    /// An empty graph standing in for "frozen at zero".
    pub fn zeros(n: usize) -> Self {
        KSparseRowGraph {
            n,
            k: 0,
            rows: vec![Vec::new(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.is_empty())
    }

    /// Entries of row `i`, sorted by column index.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                out[(i, j)] = w;
            }
        }
        out
    }

    /// Validates the row contracts: exactly `k` strictly positive weights
    /// summing to 1 within 1e-9, no self-loop, columns in range.
    pub fn check(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.k {
                return Err(ShineError::BadGraphRow {
                    row: i,
                    reason: format!("{} entries, expected {}", row.len(), self.k),
                });
            }
            let mut sum = 0.0;
            for &(j, w) in row {
                if j >= self.n {
                    return Err(ShineError::BadGraphRow {
                        row: i,
                        reason: format!("column {} out of range", j),
                    });
                }
                if j == i {
                    return Err(ShineError::BadGraphRow {
                        row: i,
                        reason: "self-loop".into(),
                    });
                }
                if !w.is_finite() || w <= 0.0 {
                    return Err(ShineError::BadGraphRow {
                        row: i,
                        reason: format!("nonpositive weight {} at column {}", w, j),
                    });
                }
                sum += w;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(ShineError::BadGraphRow {
                    row: i,
                    reason: format!("row sums to {}, expected 1", sum),
                });
            }
        }
        Ok(())
    }
}

/// Every optimization variable, plus the recorded adaptive regularizers and
/// the objective trace. Updates produce a new state; nothing mutates in
/// place across iterations.
#[derive(Debug, Clone)]
pub struct ModelState {
    /// Per-view projection matrices, `d_v x c`, orthonormal columns.
    pub w: Vec<DMatrix<f64>>,
    /// Consensus anchor graph, `m x n`; each column lies on the simplex.
    pub a: DMatrix<f64>,
    /// Consensus anchors, `c x m`, orthonormal columns.
    pub anchors: DMatrix<f64>,
    /// Second-order similarity graph.
    pub s: KSparseRowGraph,
    /// First-order similarity graph.
    pub g: KSparseRowGraph,
    /// Cluster indicator, `n x c`, orthonormal columns.
    pub f: DMatrix<f64>,
    /// View weights on the simplex.
    pub alpha: Vec<f64>,
    /// Diagonals of the per-view row-reweighting matrices.
    pub d: Vec<DVector<f64>>,
    /// Per-row adaptive regularizer recorded by the latest S update.
    pub lambda_s: Vec<f64>,
    /// Per-row adaptive regularizer recorded by the latest G update.
    pub lambda_g: Vec<f64>,
    /// Objective value at initialization and after each outer iteration.
    pub objective_trace: Vec<f64>,
}

/// Tolerances used by the state constraint suite.
pub const SIMPLEX_TOL: f64 = 1e-9;
pub const ORTHO_TOL: f64 = 1e-8;
pub const ALPHA_TOL: f64 = 1e-12;

pub(crate) fn orthonormality_deviation(m: &DMatrix<f64>) -> f64 {
    let gram = m.transpose() * m;
    let c = gram.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..c {
        for j in 0..c {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram[(i, j)] - target).abs());
        }
    }
    dev
}

impl ModelState {
    /// Runs the full constraint suite. `second_order_active` controls
    /// whether S must be a valid k-sparse graph or is expected to be frozen
    /// at zero.
    pub fn check_constraints(&self, second_order_active: bool) -> Result<()> {
        for (v, w) in self.w.iter().enumerate() {
            let dev = orthonormality_deviation(w);
            if dev > ORTHO_TOL {
                return Err(ShineError::ShapeMismatch {
                    context: format!("W[{v}] columns not orthonormal (deviation {dev:e})"),
                });
            }
        }
        for m in [&self.anchors, &self.f] {
            let dev = orthonormality_deviation(m);
            if dev > ORTHO_TOL {
                return Err(ShineError::ShapeMismatch {
                    context: format!("orthonormality violated (deviation {dev:e})"),
                });
            }
        }
        for j in 0..self.a.ncols() {
            let col = self.a.column(j);
            let mut sum = 0.0;
            for &x in col.iter() {
                if x < -SIMPLEX_TOL {
                    return Err(ShineError::ShapeMismatch {
                        context: format!("A column {j} has negative entry {x}"),
                    });
                }
                sum += x;
            }
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(ShineError::ShapeMismatch {
                    context: format!("A column {j} sums to {sum}"),
                });
            }
        }
        let mut asum = 0.0;
        for &a in &self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(ShineError::ShapeMismatch {
                    context: format!("alpha entry {a} outside [0,1]"),
                });
            }
            asum += a;
        }
        if (asum - 1.0).abs() > ALPHA_TOL {
            return Err(ShineError::ShapeMismatch {
                context: format!("alpha sums to {asum}"),
            });
        }
        self.g.check()?;
        if second_order_active {
            self.s.check()?;
        } else if !self.s.is_zero() {
            return Err(ShineError::ShapeMismatch {
                context: "second-order graph expected to be frozen at zero".into(),
            });
        }
        for x in self.objective_trace.iter() {
            if !x.is_finite() {
                return Err(ShineError::NonFinite {
                    context: "objective trace".into(),
                });
            }
        }
        Ok(())
    }
}

/// Evaluation summary for one selected-feature subset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    /// Selected features in ranking order.
    pub selected: Vec<FeatureRef>,
    /// Fraction of the pooled features kept.
    pub ratio: f64,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub nmi_mean: f64,
    pub nmi_std: f64,
    /// Copy of the objective trace of the fit that produced the selection.
    pub objective_trace: Vec<f64>,
    /// Wall-clock seconds; excluded from serialized artifacts so reruns
    /// compare byte-for-byte (timing goes to run metadata instead).
    #[serde(skip)]
    pub wallclock_secs: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_view_dataset(n: usize) -> MultiViewDataset {
        let x0 = DMatrix::from_fn(4, n, |i, j| (i * n + j) as f64 * 0.1);
        let x1 = DMatrix::from_fn(3, n, |i, j| ((i + 7) * n + j) as f64 * 0.01);
        MultiViewDataset::new(vec![x0, x1]).unwrap()
    }

    #[test]
    fn accepts_consistent_views() {
        let ds = two_view_dataset(10);
        let params = HyperParams {
            k: 3,
            m: 2,
            c: 3,
            ..HyperParams::default()
        };
        assert!(validate(&ds, &params).is_ok());
    }

    #[test]
    fn rejects_sample_count_mismatch() {
        let x0 = DMatrix::zeros(4, 10);
        let x1 = DMatrix::zeros(3, 9);
        let err = MultiViewDataset::new(vec![x0, x1]).unwrap_err();
        assert!(matches!(err, ShineError::SampleCountMismatch { view: 1, .. }));
        assert!(err.to_string().contains("sample count mismatch"));
    }

    #[test]
    fn rejects_k_too_large() {
        let ds = two_view_dataset(10);
        let params = HyperParams {
            k: 9,
            m: 2,
            c: 3,
            ..HyperParams::default()
        };
        let err = validate(&ds, &params).unwrap_err();
        assert!(matches!(err, ShineError::KTooLarge { k: 9, n: 10 }));
    }

    #[test]
    fn rejects_m_exceeding_c() {
        let params = HyperParams {
            m: 5,
            c: 3,
            ..HyperParams::default()
        };
        let err = params.check().unwrap_err();
        assert!(err.to_string().contains("m must not exceed c"));
    }

    #[test]
    fn rejects_non_finite_entries() {
        let mut x = DMatrix::zeros(2, 4);
        x[(1, 2)] = f64::NAN;
        let err = MultiViewDataset::new(vec![x]).unwrap_err();
        assert!(matches!(
            err,
            ShineError::NonFiniteEntry {
                view: 0,
                row: 1,
                col: 2
            }
        ));
    }

    #[test]
    fn ksparse_graph_contracts() {
        let rows = vec![
            vec![(1, 0.5), (2, 0.5)],
            vec![(0, 0.25), (2, 0.75)],
            vec![(0, 0.9), (1, 0.1)],
        ];
        let g = KSparseRowGraph::from_rows(3, 2, rows).unwrap();
        assert_eq!(g.row(1), &[(0, 0.25), (2, 0.75)]);
        let dense = g.to_dense();
        assert_eq!(dense[(0, 0)], 0.0);
        assert_eq!(dense[(2, 0)], 0.9);

        // self-loop rejected
        let bad = vec![vec![(0, 0.5), (1, 0.5)], vec![(0, 1.0), (2, 0.0)], vec![]];
        assert!(KSparseRowGraph::from_rows(3, 2, bad).is_err());

        // wrong row sum rejected
        let bad = vec![
            vec![(1, 0.5), (2, 0.4)],
            vec![(0, 0.5), (2, 0.5)],
            vec![(0, 0.5), (1, 0.5)],
        ];
        assert!(KSparseRowGraph::from_rows(3, 2, bad).is_err());
    }

    #[test]
    fn zero_graph_is_flagged() {
        let g = KSparseRowGraph::zeros(4);
        assert!(g.is_zero());
        assert!(g.check().is_err());
        assert_eq!(g.to_dense(), DMatrix::zeros(4, 4));
    }
}
