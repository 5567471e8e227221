//! Graph-side numerical primitives: pairwise distances, Laplacians, the
//! k-sparse simplex row solver shared by both similarity graphs, exact
//! column-wise simplex projection, and the kNN graph used at initialization.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Result, ShineError};
use crate::model::{KSparseRowGraph, MultiViewDataset};

/// Denominator threshold below which the k-sparse row solver falls back to
/// uniform weights.
pub const DEGENERATE_DENOM: f64 = 1e-15;

/// One solved row of a k-sparse similarity graph.
///
/// `neighbors` and `weights` are aligned and sorted by column index; the
/// adaptive regularizer that produced the row rides along.
#[derive(Debug, Clone, PartialEq)]
pub struct KSparseRowSolution {
    pub neighbors: Vec<usize>,
    pub weights: Vec<f64>,
    pub lambda: f64,
}

impl KSparseRowSolution {
    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&j, &w) in self.neighbors.iter().zip(&self.weights) {
            out[j] = w;
        }
        out
    }

    pub fn entries(&self) -> Vec<(usize, f64)> {
        self.neighbors
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
            .collect()
    }
}

/// Squared Euclidean distances between all column pairs of `m`.
///
/// The result is exactly symmetric with an exactly zero diagonal: entry
/// (i, j) is computed once per unordered pair by a direct sum over rows.
pub fn pairwise_sq_dists(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    for x in m.iter() {
        if !x.is_finite() {
            return Err(ShineError::NonFinite {
                context: "pairwise distance input".into(),
            });
        }
    }
    let n = m.ncols();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let ci = m.column(i);
        for j in (i + 1)..n {
            let mut d = 0.0;
            let cj = m.column(j);
            for r in 0..m.nrows() {
                let t = ci[r] - cj[r];
                d += t * t;
            }
            out[(i, j)] = d;
            out[(j, i)] = d;
        }
    }
    Ok(out)
}

/// Accumulates `sum_v weight_v * pairwise_sq_dists(views[v])`.
///
/// With `weights` omitted every view contributes with weight one.
pub fn pairwise_sq_dists_weighted(
    views: &[&DMatrix<f64>],
    weights: Option<&[f64]>,
) -> Result<DMatrix<f64>> {
    if views.is_empty() {
        return Err(ShineError::NoViews);
    }
    if let Some(w) = weights {
        if w.len() != views.len() {
            return Err(ShineError::ShapeMismatch {
                context: format!("{} weights for {} views", w.len(), views.len()),
            });
        }
    }
    let n = views[0].ncols();
    let mut out = DMatrix::zeros(n, n);
    for (v, x) in views.iter().enumerate() {
        if x.ncols() != n {
            return Err(ShineError::SampleCountMismatch {
                view: v,
                expected: n,
                found: x.ncols(),
            });
        }
        let scale = weights.map_or(1.0, |w| w[v]);
        if scale == 0.0 {
            continue;
        }
        let d = pairwise_sq_dists(x)?;
        out += d * scale;
    }
    Ok(out)
}

/// Symmetric graph Laplacian `L = diag(rowsum) - sym` of the symmetrized
/// input `sym = (g + g^T)/2`.
///
/// For any matrix `V` whose columns are points,
/// `sum_ij ||v_i - v_j||^2 g_ij = 2 tr(V L V^T)`.
pub fn symmetric_laplacian(graph: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = graph.nrows();
    if graph.ncols() != n {
        return Err(ShineError::ShapeMismatch {
            context: format!("laplacian input {}x{} not square", n, graph.ncols()),
        });
    }
    for i in 0..n {
        for j in 0..n {
            let x = graph[(i, j)];
            if !x.is_finite() {
                return Err(ShineError::NonFinite {
                    context: "laplacian input".into(),
                });
            }
            if x < 0.0 {
                return Err(ShineError::NegativeEntry {
                    row: i,
                    col: j,
                    value: x,
                });
            }
        }
    }
    let mut lap = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut degree = 0.0;
        for j in 0..n {
            let s = 0.5 * (graph[(i, j)] + graph[(j, i)]);
            degree += s;
            lap[(i, j)] = -s;
        }
        lap[(i, i)] += degree;
    }
    Ok(lap)
}

/// Solves one row of the k-sparse simplex subproblem in closed form.
///
/// Costs are sorted ascending over indices other than `exclude` (ties broken
/// by index); with `u_1..u_{k+1}` the smallest costs, the weight on the j-th
/// smallest is `(u_{k+1} - u_j) / (k u_{k+1} - sum_{p<=k} u_p)` and the
/// adaptive regularizer is half that denominator. A degenerate denominator
/// falls back to uniform weights with a zero regularizer.
pub fn ksparse_simplex_row(costs: &[f64], k: usize, exclude: usize) -> Result<KSparseRowSolution> {
    let n = costs.len();
    if k == 0 {
        return Err(ShineError::KZero);
    }
    if k + 2 > n {
        return Err(ShineError::KTooLarge { k, n });
    }
    if exclude >= n {
        return Err(ShineError::ShapeMismatch {
            context: format!("exclude index {exclude} out of range for {n} costs"),
        });
    }
    for &c in costs {
        if !c.is_finite() {
            return Err(ShineError::NonFinite {
                context: "k-sparse row costs".into(),
            });
        }
    }
    let mut order: Vec<usize> = (0..n).filter(|&j| j != exclude).collect();
    order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));

    let boundary = costs[order[k]];
    let head_sum: f64 = order[..k].iter().map(|&j| costs[j]).sum();
    let denom = k as f64 * boundary - head_sum;

    let mut picked: Vec<(usize, f64)> = if denom <= DEGENERATE_DENOM {
        order[..k].iter().map(|&j| (j, 1.0 / k as f64)).collect()
    } else {
        order[..k]
            .iter()
            .map(|&j| (j, (boundary - costs[j]) / denom))
            .collect()
    };
    picked.sort_unstable_by_key(|(j, _)| *j);

    let lambda = if denom <= DEGENERATE_DENOM {
        0.0
    } else {
        denom / 2.0
    };
    Ok(KSparseRowSolution {
        neighbors: picked.iter().map(|(j, _)| *j).collect(),
        weights: picked.iter().map(|(_, w)| *w).collect(),
        lambda,
    })
}

/// Exact Euclidean projection of a vector onto the probability simplex
/// (sort-and-threshold).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut running = 0.0;
    let mut tau = 0.0;
    for (j, &x) in sorted.iter().enumerate() {
        running += x;
        let candidate = (running - 1.0) / (j + 1) as f64;
        if x - candidate > 0.0 {
            tau = candidate;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Projects every column of `m` onto the probability simplex.
pub fn project_columns_to_simplex(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let projected = project_to_simplex(col.as_slice());
        for (dst, src) in col.iter_mut().zip(projected) {
            *dst = src;
        }
    }
    out
}

/// Probabilistic kNN graph over the concatenated views: per-row k-sparse
/// simplex solutions of the raw squared distances, self excluded.
pub fn init_knn_graph(dataset: &MultiViewDataset, k: usize) -> Result<KSparseRowGraph> {
    let concat = dataset.concatenated();
    let dists = pairwise_sq_dists(&concat)?;
    build_ksparse_graph(&dists, k).map(|(g, _)| g)
}

/// Solves every row of a cost matrix independently and assembles the graph,
/// returning the per-row adaptive regularizers alongside.
pub fn build_ksparse_graph(costs: &DMatrix<f64>, k: usize) -> Result<(KSparseRowGraph, Vec<f64>)> {
    let n = costs.nrows();
    let solutions: Vec<Result<KSparseRowSolution>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row: Vec<f64> = costs.row(i).iter().copied().collect();
            ksparse_simplex_row(&row, k, i)
        })
        .collect();
    let mut rows = Vec::with_capacity(n);
    let mut lambdas = Vec::with_capacity(n);
    for sol in solutions {
        let sol = sol?;
        lambdas.push(sol.lambda);
        rows.push(sol.entries());
    }
    Ok((KSparseRowGraph::from_rows(n, k, rows)?, lambdas))
}
