//! The alternating optimizer: objective evaluation, the seven per-variable
//! updates, convergence control, and the final feature ranking.
//!
//! Update order per outer iteration is W, A, C, S, G, F, alpha. Updates are
//! functional: each returns the new value of its variable and `fit` swaps it
//! into the state, so the state stays coherent after every step.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::zscore;
use crate::error::{Result, ShineError};
use crate::graph::{
    build_ksparse_graph, pairwise_sq_dists, pairwise_sq_dists_weighted,
    project_columns_to_simplex, symmetric_laplacian,
};
use crate::model::{
    validate, FeatureRef, HyperParams, KSparseRowGraph, ModelState, MultiViewDataset,
};
use crate::solvers::{
    gpi_orthogonal, procrustes_max_trace, smallest_eigvecs, spd_solve, GpiProblem,
};

/// Variable updated by one optimizer step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateStep {
    W,
    A,
    C,
    S,
    G,
    F,
    Alpha,
}

/// Progress events emitted by [`fit_with_observer`].
pub enum FitEvent<'a> {
    /// The state right after initialization, before the first iteration.
    Initialized { state: &'a ModelState },
    /// One variable update finished; the state reflects it.
    Step {
        iteration: usize,
        step: UpdateStep,
        state: &'a ModelState,
    },
    /// An outer iteration finished and its objective was recorded.
    IterationEnd {
        iteration: usize,
        state: &'a ModelState,
    },
}

/// Outcome of a fit: the final state, the pooled feature ranking, and
/// convergence information.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub state: ModelState,
    /// Every feature, ordered by descending row norm of its projection
    /// matrix; ties broken by (view, index).
    pub ranking: Vec<FeatureRef>,
    /// Row norms aligned with `ranking`.
    pub scores: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
}

/// How many features to keep when cutting a ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureCount {
    /// Keep `ceil(ratio * total)` features; ratio in (0, 1].
    Ratio(f64),
    /// Keep exactly this many features.
    Top(usize),
}

/// Sum of row l2 norms.
pub(crate) fn l21_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).norm()).sum()
}

/// `tr(X L X^T)` without materializing the full product.
fn smoothness(x: &DMatrix<f64>, lap: &DMatrix<f64>) -> f64 {
    (x * lap).component_mul(x).sum()
}

fn check_state_shapes(
    state: &ModelState,
    dataset: &MultiViewDataset,
    params: &HyperParams,
) -> Result<()> {
    let n = dataset.n_samples();
    let (m, c) = (params.m, params.c);
    if state.w.len() != dataset.n_views() || state.alpha.len() != dataset.n_views() {
        return Err(ShineError::ShapeMismatch {
            context: format!(
                "state has {} views, dataset {}",
                state.w.len(),
                dataset.n_views()
            ),
        });
    }
    for (v, (w, x)) in state.w.iter().zip(&dataset.views).enumerate() {
        if w.nrows() != x.nrows() || w.ncols() != c {
            return Err(ShineError::ShapeMismatch {
                context: format!(
                    "W[{v}] is {}x{}, expected {}x{c}",
                    w.nrows(),
                    w.ncols(),
                    x.nrows()
                ),
            });
        }
    }
    if state.a.nrows() != m || state.a.ncols() != n {
        return Err(ShineError::ShapeMismatch {
            context: format!("A is {}x{}, expected {m}x{n}", state.a.nrows(), state.a.ncols()),
        });
    }
    if state.anchors.nrows() != c || state.anchors.ncols() != m {
        return Err(ShineError::ShapeMismatch {
            context: format!(
                "anchor matrix is {}x{}, expected {c}x{m}",
                state.anchors.nrows(),
                state.anchors.ncols()
            ),
        });
    }
    if state.f.nrows() != n || state.f.ncols() != c {
        return Err(ShineError::ShapeMismatch {
            context: format!("F is {}x{}, expected {n}x{c}", state.f.nrows(), state.f.ncols()),
        });
    }
    Ok(())
}

/// Evaluates the full model objective on a state.
///
/// The per-row adaptive regularizers recorded by the latest S and G updates
/// weight their Frobenius terms row by row. With the second-order graph
/// disabled, every S-dependent term drops and the hybrid graph is G alone.
pub fn objective(
    state: &ModelState,
    dataset: &MultiViewDataset,
    params: &HyperParams,
) -> Result<f64> {
    check_state_shapes(state, dataset, params)?;

    let g_dense = state.g.to_dense();
    let lap_g = symmetric_laplacian(&g_dense)?;
    let ca = &state.anchors * &state.a;

    let mut total = 0.0;
    for (v, x) in dataset.views.iter().enumerate() {
        let recon = (x - &state.w[v] * &ca).norm_squared();
        let smooth = smoothness(x, &lap_g);
        let sparsity = params.gamma * l21_norm(&state.w[v]);
        total += state.alpha[v].powi(2) * (recon + smooth + sparsity);
    }
    total += params.beta * state.a.norm_squared();

    let hybrid = if params.disable_second_order {
        g_dense
    } else {
        let s_dense = state.s.to_dense();
        let lap_s = symmetric_laplacian(&s_dense)?;
        // sum_ij ||A_.i - A_.j||^2 S_ij = 2 tr(A L_S A^T)
        total += 2.0 * smoothness(&state.a, &lap_s);
        for (i, &lambda) in state.lambda_s.iter().enumerate() {
            let row_sq: f64 = state.s.row(i).iter().map(|&(_, w)| w * w).sum();
            total += lambda * row_sq;
        }
        g_dense + s_dense * params.eta
    };

    let lap_h = symmetric_laplacian(&hybrid)?;
    // 1/2 sum_ij ||F_i. - F_j.||^2 H_ij = tr(F^T L_H F)
    total += (state.f.transpose() * &lap_h * &state.f).trace();
    for (i, &lambda) in state.lambda_g.iter().enumerate() {
        let row_sq: f64 = state.g.row(i).iter().map(|&(_, w)| w * w).sum();
        total += lambda * row_sq;
    }
    if !total.is_finite() {
        return Err(ShineError::NonFinite {
            context: "objective value".into(),
        });
    }
    Ok(total)
}

/// Row-reweighting diagonal for one projection matrix.
fn reweighting_diag(w: &DMatrix<f64>, epsilon: f64) -> DVector<f64> {
    DVector::from_fn(w.nrows(), |i, _| {
        1.0 / (2.0 * (w.row(i).norm_squared() + epsilon).sqrt())
    })
}

/// New projection matrices paired with the reweighting diagonals they were
/// solved under.
pub type WUpdate = (Vec<DMatrix<f64>>, Vec<DVector<f64>>);

/// Updates every projection matrix by the generalized power iteration on
/// the reweighted trace form, returning the new matrices and the diagonals
/// used. The squared view weight cancels out of each per-view subproblem.
pub fn update_w(
    state: &ModelState,
    dataset: &MultiViewDataset,
    params: &HyperParams,
) -> Result<WUpdate> {
    check_state_shapes(state, dataset, params)?;
    let mut new_w = Vec::with_capacity(dataset.n_views());
    let mut new_d = Vec::with_capacity(dataset.n_views());
    let at_ct = state.a.transpose() * state.anchors.transpose();
    for (v, x) in dataset.views.iter().enumerate() {
        let d = reweighting_diag(&state.w[v], params.epsilon);
        let quad = DMatrix::from_diagonal(&(&d * params.gamma));
        let lin = x * &at_ct;
        let problem = GpiProblem {
            quad,
            lin,
            init: state.w[v].clone(),
        };
        let w = gpi_orthogonal(&problem, params.gpi_tol, params.gpi_max_iters)?;
        new_w.push(w);
        new_d.push(d);
    }
    Ok((new_w, new_d))
}

/// Updates the anchor graph: relaxed stationary point of the quadratic
/// subproblem, then exact column-wise simplex projection.
pub fn update_a(
    state: &ModelState,
    dataset: &MultiViewDataset,
    params: &HyperParams,
) -> Result<DMatrix<f64>> {
    check_state_shapes(state, dataset, params)?;
    let n = dataset.n_samples();
    let alpha_sq_sum: f64 = state.alpha.iter().map(|a| a * a).sum();
    let mut p = DMatrix::identity(n, n) * (alpha_sq_sum + params.beta);
    if !params.disable_second_order {
        p += symmetric_laplacian(&state.s.to_dense())? * 2.0;
    }
    let mut q = DMatrix::zeros(n, params.m);
    for (v, x) in dataset.views.iter().enumerate() {
        let coeff = 2.0 * state.alpha[v].powi(2);
        q += x.transpose() * &state.w[v] * &state.anchors * coeff;
    }
    // stationarity 2 A_hat P = Q^T, solved through P's symmetry
    let a_hat_t = spd_solve(&p, &(q * 0.5))?;
    Ok(project_columns_to_simplex(&a_hat_t.transpose()))
}

/// Updates the consensus anchors by orthogonal Procrustes.
pub fn update_c(
    state: &ModelState,
    dataset: &MultiViewDataset,
    params: &HyperParams,
) -> Result<DMatrix<f64>> {
    check_state_shapes(state, dataset, params)?;
    let mut e = DMatrix::zeros(params.c, params.m);
    for (v, x) in dataset.views.iter().enumerate() {
        let coeff = 2.0 * state.alpha[v].powi(2);
        e += state.w[v].transpose() * x * state.a.transpose() * coeff;
    }
    procrustes_max_trace(&e)
}

/// Second-order row costs: squared anchor-profile distances plus scaled
/// indicator distances.
fn second_order_costs(state: &ModelState, eta: f64) -> Result<DMatrix<f64>> {
    let a_dists = pairwise_sq_dists(&state.a)?;
    let f_dists = pairwise_sq_dists(&state.f.transpose())?;
    Ok(a_dists + f_dists * (eta / 2.0))
}

/// Updates the second-order graph row by row, recording the adaptive
/// regularizers. Must not be called with the second-order graph disabled.
pub fn update_s(state: &ModelState, params: &HyperParams) -> Result<(KSparseRowGraph, Vec<f64>)> {
    if params.disable_second_order {
        return Err(ShineError::Config {
            reason: "second-order update invoked while disabled".into(),
        });
    }
    let costs = second_order_costs(state, params.eta)?;
    build_ksparse_graph(&costs, params.k)
}

/// First-order row costs: half the view-weighted data distances plus half
/// the indicator distances.
fn first_order_costs(state: &ModelState, dataset: &MultiViewDataset) -> Result<DMatrix<f64>> {
    let weights: Vec<f64> = state.alpha.iter().map(|a| a * a).collect();
    let views: Vec<&DMatrix<f64>> = dataset.views.iter().collect();
    let x_dists = pairwise_sq_dists_weighted(&views, Some(&weights))?;
    let f_dists = pairwise_sq_dists(&state.f.transpose())?;
    Ok((x_dists + f_dists) * 0.5)
}

/// Updates the first-order graph row by row, recording the adaptive
/// regularizers.
pub fn update_g(
    state: &ModelState,
    dataset: &MultiViewDataset,
    params: &HyperParams,
) -> Result<(KSparseRowGraph, Vec<f64>)> {
    check_state_shapes(state, dataset, params)?;
    let costs = first_order_costs(state, dataset)?;
    build_ksparse_graph(&costs, params.k)
}

/// Updates the cluster indicator with the smallest eigenvectors of the
/// hybrid-graph Laplacian.
pub fn update_f(state: &ModelState, params: &HyperParams) -> Result<DMatrix<f64>> {
    let hybrid = if params.disable_second_order {
        state.g.to_dense()
    } else {
        state.g.to_dense() + state.s.to_dense() * params.eta
    };
    let lap = symmetric_laplacian(&hybrid)?;
    smallest_eigvecs(&lap, params.c)
}

/// Per-view residuals feeding the view-weight update.
fn view_residuals(
    state: &ModelState,
    dataset: &MultiViewDataset,
    params: &HyperParams,
) -> Result<Vec<f64>> {
    let lap_g = symmetric_laplacian(&state.g.to_dense())?;
    let ca = &state.anchors * &state.a;
    dataset
        .views
        .iter()
        .enumerate()
        .map(|(v, x)| {
            let recon = (x - &state.w[v] * &ca).norm_squared();
            let z = recon + params.gamma * l21_norm(&state.w[v]) + smoothness(x, &lap_g);
            if !z.is_finite() {
                return Err(ShineError::NonFinite {
                    context: format!("view {v} residual"),
                });
            }
            Ok(z)
        })
        .collect()
}

/// Closed-form view weights: normalized reciprocals of the residuals.
pub(crate) fn alpha_from_residuals(z: &[f64]) -> Result<Vec<f64>> {
    for (v, &zv) in z.iter().enumerate() {
        if zv <= 1e-300 {
            return Err(ShineError::DegenerateViewResidual { view: v });
        }
    }
    let inv: Vec<f64> = z.iter().map(|&zv| 1.0 / zv).collect();
    let sum: f64 = inv.iter().sum();
    Ok(inv.iter().map(|&i| i / sum).collect())
}

/// Updates the view weights.
pub fn update_alpha(
    state: &ModelState,
    dataset: &MultiViewDataset,
    params: &HyperParams,
) -> Result<Vec<f64>> {
    check_state_shapes(state, dataset, params)?;
    alpha_from_residuals(&view_residuals(state, dataset, params)?)
}

/// Builds the starting state: kNN first-order graph over the concatenated
/// views, random anchor-graph columns projected to the simplex, Procrustes
/// orthonormalization of random anchors, random k-sparse second-order rows,
/// identity reweighting, uniform view weights, one GPI pass per projection
/// matrix, and the indicator of the initial hybrid graph.
fn init_state(dataset: &MultiViewDataset, params: &HyperParams) -> Result<ModelState> {
    let n = dataset.n_samples();
    let l = dataset.n_views();
    let (m, c, k) = (params.m, params.c, params.k);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // draw order is fixed: A entries column-major, then anchors, then S rows
    let mut a_raw = DMatrix::zeros(m, n);
    for j in 0..n {
        for i in 0..m {
            a_raw[(i, j)] = rng.random::<f64>();
        }
    }
    let a = project_columns_to_simplex(&a_raw);

    let mut anchor_raw = DMatrix::zeros(c, m);
    for j in 0..m {
        for i in 0..c {
            anchor_raw[(i, j)] = rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
    }
    let anchors = procrustes_max_trace(&anchor_raw)?;

    let (s, lambda_s) = if params.disable_second_order {
        (KSparseRowGraph::zeros(n), vec![0.0; n])
    } else {
        let mut costs = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                costs[(i, j)] = rng.random::<f64>();
            }
        }
        build_ksparse_graph(&costs, k)?
    };

    let (g, lambda_g) = {
        let concat = dataset.concatenated();
        let dists = pairwise_sq_dists(&concat)?;
        build_ksparse_graph(&dists, k)?
    };

    let alpha = vec![1.0 / l as f64; l];
    let d: Vec<DVector<f64>> = dataset
        .view_dims()
        .iter()
        .map(|&dv| DVector::from_element(dv, 1.0))
        .collect();

    // one GPI pass per view with the identity reweighting
    let at_ct = a.transpose() * anchors.transpose();
    let mut w = Vec::with_capacity(l);
    for x in &dataset.views {
        let dv = x.nrows();
        let quad = DMatrix::identity(dv, dv) * params.gamma;
        let lin = x * &at_ct;
        let mut init = DMatrix::zeros(dv, c);
        for j in 0..c {
            init[(j, j)] = 1.0;
        }
        let problem = GpiProblem { quad, lin, init };
        w.push(gpi_orthogonal(&problem, params.gpi_tol, params.gpi_max_iters)?);
    }

    let mut state = ModelState {
        w,
        a,
        anchors,
        s,
        g,
        f: DMatrix::zeros(n, c),
        alpha,
        d,
        lambda_s,
        lambda_g,
        objective_trace: Vec::new(),
    };
    state.f = update_f(&state, params)?;
    Ok(state)
}

/// Runs the full alternating optimization.
pub fn fit(dataset: &MultiViewDataset, params: &HyperParams) -> Result<FitResult> {
    fit_with_observer(dataset, params, |_| {})
}

/// [`fit`] with a callback invoked after initialization, after every
/// variable update, and at the end of every outer iteration.
pub fn fit_with_observer(
    dataset: &MultiViewDataset,
    params: &HyperParams,
    mut observe: impl FnMut(FitEvent<'_>),
) -> Result<FitResult> {
    validate(dataset, params)?;
    let standardized;
    let data = if params.standardize {
        standardized = zscore(dataset).dataset;
        &standardized
    } else {
        dataset
    };

    let mut state = init_state(data, params)?;
    let initial = objective(&state, data, params)?;
    state.objective_trace.push(initial);
    observe(FitEvent::Initialized { state: &state });

    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=params.max_outer_iters {
        let wrap = |e: ShineError| e.at_iteration(it);

        let (w, d) = update_w(&state, data, params).map_err(wrap)?;
        state.w = w;
        state.d = d;
        observe(FitEvent::Step {
            iteration: it,
            step: UpdateStep::W,
            state: &state,
        });

        state.a = update_a(&state, data, params).map_err(wrap)?;
        observe(FitEvent::Step {
            iteration: it,
            step: UpdateStep::A,
            state: &state,
        });

        state.anchors = update_c(&state, data, params).map_err(wrap)?;
        observe(FitEvent::Step {
            iteration: it,
            step: UpdateStep::C,
            state: &state,
        });

        if !params.disable_second_order {
            let (s, lambda_s) = update_s(&state, params).map_err(wrap)?;
            state.s = s;
            state.lambda_s = lambda_s;
            observe(FitEvent::Step {
                iteration: it,
                step: UpdateStep::S,
                state: &state,
            });
        }

        let (g, lambda_g) = update_g(&state, data, params).map_err(wrap)?;
        state.g = g;
        state.lambda_g = lambda_g;
        observe(FitEvent::Step {
            iteration: it,
            step: UpdateStep::G,
            state: &state,
        });

        state.f = update_f(&state, params).map_err(wrap)?;
        observe(FitEvent::Step {
            iteration: it,
            step: UpdateStep::F,
            state: &state,
        });

        state.alpha = update_alpha(&state, data, params).map_err(wrap)?;
        observe(FitEvent::Step {
            iteration: it,
            step: UpdateStep::Alpha,
            state: &state,
        });

        let value = objective(&state, data, params).map_err(wrap)?;
        let prev = *state.objective_trace.last().unwrap();
        state.objective_trace.push(value);
        iterations = it;
        observe(FitEvent::IterationEnd {
            iteration: it,
            state: &state,
        });

        if (prev - value).abs() <= params.rel_tol * prev.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    let (ranking, scores) = rank_features(&state);
    let objective_trace = state.objective_trace.clone();
    Ok(FitResult {
        state,
        ranking,
        scores,
        converged,
        iterations,
        objective_trace,
    })
}

/// Pools every feature across views and sorts by descending projection row
/// norm; ties broken by (view, index).
fn rank_features(state: &ModelState) -> (Vec<FeatureRef>, Vec<f64>) {
    let mut scored: Vec<(FeatureRef, f64)> = Vec::new();
    for (v, w) in state.w.iter().enumerate() {
        for i in 0..w.nrows() {
            scored.push((FeatureRef::new(v, i), w.row(i).norm()));
        }
    }
    scored.sort_by(|(fa, na), (fb, nb)| nb.total_cmp(na).then(fa.cmp(fb)));
    scored.into_iter().unzip()
}

/// Cuts the ranking at a ratio of the pooled feature count or at an exact
/// count.
pub fn select_features(result: &FitResult, how: FeatureCount) -> Result<Vec<FeatureRef>> {
    let total = result.ranking.len();
    let h = match how {
        FeatureCount::Ratio(ratio) => {
            if !(ratio > 0.0 && ratio <= 1.0) {
                return Err(ShineError::BadRatio { ratio });
            }
            (ratio * total as f64).ceil() as usize
        }
        FeatureCount::Top(h) => {
            if h == 0 || h > total {
                return Err(ShineError::BadFeatureCount { h, total });
            }
            h
        }
    };
    Ok(result.ranking[..h.min(total)].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::polar_factor;

    fn random_orthonormal(d: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let m = DMatrix::from_fn(d, c, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        polar_factor(&m)
    }

    fn random_simplex_columns(m: usize, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let raw = DMatrix::from_fn(m, n, |_, _| rng.random::<f64>());
        project_columns_to_simplex(&raw)
    }

    /// Feasible random state for a dataset; every constraint holds.
    fn random_state(
        dataset: &MultiViewDataset,
        params: &HyperParams,
        rng: &mut ChaCha8Rng,
    ) -> ModelState {
        let n = dataset.n_samples();
        let (m, c, k) = (params.m, params.c, params.k);
        let w: Vec<DMatrix<f64>> = dataset
            .view_dims()
            .iter()
            .map(|&dv| random_orthonormal(dv, c, rng))
            .collect();
        let d = w
            .iter()
            .map(|wv| reweighting_diag(wv, params.epsilon))
            .collect();
        let costs_s = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>());
        let (s, lambda_s) = build_ksparse_graph(&costs_s, k).unwrap();
        let costs_g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>());
        let (g, lambda_g) = build_ksparse_graph(&costs_g, k).unwrap();
        let mut alpha: Vec<f64> = (0..dataset.n_views())
            .map(|_| rng.random::<f64>() + 0.1)
            .collect();
        let sum: f64 = alpha.iter().sum();
        alpha.iter_mut().for_each(|a| *a /= sum);
        ModelState {
            w,
            a: random_simplex_columns(m, n, rng),
            anchors: random_orthonormal(c, m, rng),
            s,
            g,
            f: random_orthonormal(n, c, rng),
            alpha,
            d,
            lambda_s,
            lambda_g,
            objective_trace: Vec::new(),
        }
    }

    fn small_dataset(rng: &mut ChaCha8Rng) -> MultiViewDataset {
        let x0 = DMatrix::from_fn(6, 9, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let x1 = DMatrix::from_fn(5, 9, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        MultiViewDataset::new(vec![x0, x1]).unwrap()
    }

    fn small_params() -> HyperParams {
        HyperParams {
            gamma: 0.5,
            beta: 0.8,
            eta: 0.7,
            k: 3,
            m: 3,
            c: 4,
            seed: 9,
            standardize: false,
            ..HyperParams::default()
        }
    }

    /// Term-by-term objective with explicit loops, no Laplacian identities.
    fn naive_objective(
        state: &ModelState,
        dataset: &MultiViewDataset,
        params: &HyperParams,
    ) -> f64 {
        let n = dataset.n_samples();
        let g = state.g.to_dense();
        let s = state.s.to_dense();
        let ca = &state.anchors * &state.a;

        let tr_xlx = |x: &DMatrix<f64>, graph: &DMatrix<f64>| -> f64 {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let sym = 0.5 * (graph[(i, j)] + graph[(j, i)]);
                    let diff = (x.column(i) - x.column(j)).norm_squared();
                    acc += diff * sym;
                }
            }
            acc / 2.0
        };

        let mut total = 0.0;
        for (v, x) in dataset.views.iter().enumerate() {
            let mut recon = 0.0;
            let wca = &state.w[v] * &ca;
            for i in 0..x.nrows() {
                for j in 0..n {
                    recon += (x[(i, j)] - wca[(i, j)]).powi(2);
                }
            }
            let mut l21 = 0.0;
            for i in 0..state.w[v].nrows() {
                let mut row = 0.0;
                for jj in 0..state.w[v].ncols() {
                    row += state.w[v][(i, jj)].powi(2);
                }
                l21 += row.sqrt();
            }
            total += state.alpha[v].powi(2) * (recon + tr_xlx(x, &g) + params.gamma * l21);
        }
        for i in 0..n {
            for j in 0..n {
                total += (state.a.column(i) - state.a.column(j)).norm_squared() * s[(i, j)];
            }
        }
        total += params.beta * state.a.norm_squared();
        for i in 0..n {
            let mut row_sq = 0.0;
            for j in 0..n {
                row_sq += s[(i, j)].powi(2);
            }
            total += state.lambda_s[i] * row_sq;
        }
        let f_rows = state.f.transpose();
        for i in 0..n {
            for j in 0..n {
                let h = g[(i, j)] + params.eta * s[(i, j)];
                total += 0.5 * (f_rows.column(i) - f_rows.column(j)).norm_squared() * h;
            }
        }
        for i in 0..n {
            let mut row_sq = 0.0;
            for j in 0..n {
                row_sq += g[(i, j)].powi(2);
            }
            total += state.lambda_g[i] * row_sq;
        }
        total
    }

    #[test]
    fn objective_matches_naive_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let ds = small_dataset(&mut rng);
        let params = small_params();
        for _ in 0..5 {
            let state = random_state(&ds, &params, &mut rng);
            let fast = objective(&state, &ds, &params).unwrap();
            let slow = naive_objective(&state, &ds, &params);
            assert!(
                (fast - slow).abs() <= 1e-10 * slow.abs().max(1.0),
                "{fast} vs {slow}"
            );
        }
    }

    #[test]
    fn objective_on_zero_data_reduces_to_penalties() {
        let ds = MultiViewDataset {
            views: vec![DMatrix::zeros(5, 6), DMatrix::zeros(4, 6)],
            labels: None,
            informative_features: None,
            feature_names: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = HyperParams {
            gamma: 0.3,
            beta: 0.9,
            k: 2,
            m: 2,
            c: 3,
            standardize: false,
            ..HyperParams::default()
        };
        let w0 = random_orthonormal(5, 3, &mut rng);
        let w1 = random_orthonormal(4, 3, &mut rng);
        let a = random_simplex_columns(2, 6, &mut rng);
        // graph terms all vanish; reconstructing zero data leaves ||W C A||^2,
        // which orthonormality collapses to ||A||^2; alpha = (1/2, 1/2).
        let expected = 0.25 * (2.0 * a.norm_squared() + params.gamma * (l21_norm(&w0) + l21_norm(&w1)))
            + params.beta * a.norm_squared();
        let state = ModelState {
            w: vec![w0, w1],
            a,
            anchors: random_orthonormal(3, 2, &mut rng),
            s: KSparseRowGraph::zeros(6),
            g: KSparseRowGraph::zeros(6),
            f: random_orthonormal(6, 3, &mut rng),
            alpha: vec![0.5, 0.5],
            d: vec![DVector::from_element(5, 1.0), DVector::from_element(4, 1.0)],
            lambda_s: vec![0.0; 6],
            lambda_g: vec![0.0; 6],
            objective_trace: Vec::new(),
        };
        let value = objective(&state, &ds, &params).unwrap();
        assert!((value - expected).abs() < 1e-12 * expected.max(1.0));
    }

    #[test]
    fn objective_is_linear_in_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let ds = small_dataset(&mut rng);
        let params = small_params();
        let state = random_state(&ds, &params, &mut rng);
        let mut doubled = params.clone();
        doubled.gamma = 2.0 * params.gamma;
        let base = objective(&state, &ds, &params).unwrap();
        let more = objective(&state, &ds, &doubled).unwrap();
        let weighted_l21: f64 = ds
            .views
            .iter()
            .enumerate()
            .map(|(v, _)| state.alpha[v].powi(2) * l21_norm(&state.w[v]))
            .sum();
        assert!((more - base - params.gamma * weighted_l21).abs() < 1e-10 * base.abs().max(1.0));
    }

    #[test]
    fn w_update_fixes_procrustes_point() {
        // n = m = c = d: A = I (simplex vertex columns), C = I, X orthonormal;
        // with gamma ~ 0 the update returns the polar factor of X, i.e. X.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random_orthonormal(3, 3, &mut rng);
        let ds = MultiViewDataset::new(vec![x.clone()]).unwrap();
        let params = HyperParams {
            gamma: 1e-300,
            k: 1,
            m: 3,
            c: 3,
            standardize: false,
            ..HyperParams::default()
        };
        let (g, lambda_g) =
            build_ksparse_graph(&DMatrix::from_fn(3, 3, |_, _| rng.random()), 1).unwrap();
        let state = ModelState {
            w: vec![DMatrix::identity(3, 3)],
            a: DMatrix::identity(3, 3),
            anchors: DMatrix::identity(3, 3),
            s: KSparseRowGraph::zeros(3),
            g,
            f: random_orthonormal(3, 3, &mut rng),
            alpha: vec![1.0],
            d: vec![DVector::from_element(3, 1.0)],
            lambda_s: vec![0.0; 3],
            lambda_g,
            objective_trace: Vec::new(),
        };
        let (w, _) = update_w(&state, &ds, &params).unwrap();
        assert!((&w[0] - &x).norm() < 1e-8);
    }

    #[test]
    fn w_update_decreases_subproblem_and_stays_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(102);
        let ds = small_dataset(&mut rng);
        let params = small_params();
        for _ in 0..10 {
            let state = random_state(&ds, &params, &mut rng);
            let (new_w, new_d) = update_w(&state, &ds, &params).unwrap();
            let at_ct = state.a.transpose() * state.anchors.transpose();
            for v in 0..ds.n_views() {
                let lin = &ds.views[v] * &at_ct;
                let quad = DMatrix::from_diagonal(&(&new_d[v] * params.gamma));
                let value = |w: &DMatrix<f64>| {
                    (w.transpose() * &quad * w).trace() - 2.0 * (w.transpose() * &lin).trace()
                };
                let before = value(&state.w[v]);
                let after = value(&new_w[v]);
                assert!(after <= before + 1e-9 * before.abs().max(1.0));
                assert!(crate::model::orthonormality_deviation(&new_w[v]) < 1e-8);
            }
        }
    }

    #[test]
    fn a_update_is_projection_identity_when_p_is_identity() {
        // two views with alpha = (1/2, 1/2) and beta = 1/2 make P = I;
        // X is chosen so Q^T/2 already has simplex columns.
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let target = random_simplex_columns(3, 5, &mut rng);
        let w = random_orthonormal(4, 3, &mut rng);
        // with C = I (c = m = 3): Q^T/2 = 0.5 W^T X, so X := 2 W target.
        let x = &w * &target * 2.0;
        let ds = MultiViewDataset::new(vec![x.clone(), x.clone()]).unwrap();
        let params = HyperParams {
            beta: 0.5,
            k: 2,
            m: 3,
            c: 3,
            standardize: false,
            ..HyperParams::default()
        };
        let (g, lambda_g) =
            build_ksparse_graph(&DMatrix::from_fn(5, 5, |_, _| rng.random()), 2).unwrap();
        let state = ModelState {
            w: vec![w.clone(), w],
            a: random_simplex_columns(3, 5, &mut rng),
            anchors: DMatrix::identity(3, 3),
            s: KSparseRowGraph::zeros(5),
            g,
            f: random_orthonormal(5, 3, &mut rng),
            alpha: vec![0.5, 0.5],
            d: vec![DVector::from_element(4, 1.0), DVector::from_element(4, 1.0)],
            lambda_s: vec![0.0; 5],
            lambda_g,
            objective_trace: Vec::new(),
        };
        let a = update_a(&state, &ds, &params).unwrap();
        assert!((&a - &target).norm() < 1e-9);
    }

    #[test]
    fn a_update_columns_land_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(104);
        let ds = small_dataset(&mut rng);
        let params = small_params();
        let state = random_state(&ds, &params, &mut rng);
        let a = update_a(&state, &ds, &params).unwrap();
        for j in 0..a.ncols() {
            let sum: f64 = a.column(j).iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(a.column(j).iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn a_update_matches_projected_gradient_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(105);
        let x0 = DMatrix::from_fn(4, 3, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let ds = MultiViewDataset::new(vec![x0]).unwrap();
        let params = HyperParams {
            beta: 1.5,
            k: 1,
            m: 2,
            c: 2,
            standardize: false,
            ..HyperParams::default()
        };
        let (s, lambda_s) =
            build_ksparse_graph(&DMatrix::from_fn(3, 3, |_, _| rng.random()), 1).unwrap();
        let (g, lambda_g) =
            build_ksparse_graph(&DMatrix::from_fn(3, 3, |_, _| rng.random()), 1).unwrap();
        let state = ModelState {
            w: vec![random_orthonormal(4, 2, &mut rng)],
            a: random_simplex_columns(2, 3, &mut rng),
            anchors: random_orthonormal(2, 2, &mut rng),
            s,
            g,
            f: random_orthonormal(3, 2, &mut rng),
            alpha: vec![1.0],
            d: vec![DVector::from_element(4, 1.0)],
            lambda_s,
            lambda_g,
            objective_trace: Vec::new(),
        };
        let ours = update_a(&state, &ds, &params).unwrap();

        // projected gradient on tr(P A^T A - Q A) over simplex columns
        let alpha_sq: f64 = state.alpha.iter().map(|a| a * a).sum();
        let mut p = DMatrix::identity(3, 3) * (alpha_sq + params.beta);
        p += symmetric_laplacian(&state.s.to_dense()).unwrap() * 2.0;
        let q = ds.views[0].transpose() * &state.w[0] * &state.anchors * 2.0;
        let lips = 2.0 * p.clone().symmetric_eigen().eigenvalues.max();
        let step = 1.0 / lips;
        let mut a = random_simplex_columns(2, 3, &mut rng);
        for _ in 0..500_000 {
            let grad = &a * &p * 2.0 - q.transpose();
            let next = project_columns_to_simplex(&(&a - grad * step));
            let shift = (&next - &a).norm();
            a = next;
            if shift < 1e-13 {
                break;
            }
        }
        let sub_value = |m: &DMatrix<f64>| (&p * m.transpose() * m).trace() - (&q * m).trace();
        // relax-then-project is not the exact argmin; the oracle bounds the gap
        assert!(
            (&ours - &a).abs().max() < 1e-4,
            "elementwise gap {} (subproblem values {} vs {})",
            (&ours - &a).abs().max(),
            sub_value(&ours),
            sub_value(&a)
        );
    }

    #[test]
    fn c_update_recovers_polar_factor() {
        // single view, W = I, A = I: E = 2 X, so the update returns the
        // polar factor of X; for X with orthogonal columns that's X with
        // normalized columns.
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 2.0, 0.0]);
        let ds = MultiViewDataset::new(vec![x]).unwrap();
        let params = HyperParams {
            k: 1,
            m: 2,
            c: 2,
            standardize: false,
            ..HyperParams::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(106);
        let state = ModelState {
            w: vec![DMatrix::identity(2, 2)],
            a: DMatrix::identity(2, 2),
            anchors: random_orthonormal(2, 2, &mut rng),
            s: KSparseRowGraph::zeros(2),
            g: KSparseRowGraph::zeros(2),
            f: random_orthonormal(2, 2, &mut rng),
            alpha: vec![1.0],
            d: vec![DVector::from_element(2, 1.0)],
            lambda_s: vec![0.0; 2],
            lambda_g: vec![0.0; 2],
            objective_trace: Vec::new(),
        };
        let c = update_c(&state, &ds, &params).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!((c - expected).norm() < 1e-12);
    }

    #[test]
    fn c_update_is_orthonormal_and_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        let ds = small_dataset(&mut rng);
        let params = small_params();
        for _ in 0..10 {
            let state = random_state(&ds, &params, &mut rng);
            let c = update_c(&state, &ds, &params).unwrap();
            assert!(crate::model::orthonormality_deviation(&c) < 1e-8);
            let recon_value = |anchors: &DMatrix<f64>| -> f64 {
                let ca = anchors * &state.a;
                ds.views
                    .iter()
                    .enumerate()
                    .map(|(v, x)| state.alpha[v].powi(2) * (x - &state.w[v] * &ca).norm_squared())
                    .sum()
            };
            let before = recon_value(&state.anchors);
            let after = recon_value(&c);
            assert!(after <= before + 1e-9 * before.abs().max(1.0));
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn s_update_matches_independent_cost_computation() {
        let mut rng = ChaCha8Rng::seed_from_u64(108);
        let ds = small_dataset(&mut rng);
        let params = small_params();
        let state = random_state(&ds, &params, &mut rng);
        let (s, lambda_s) = update_s(&state, &params).unwrap();
        let n = ds.n_samples();
        for i in 0..n {
            let mut costs = vec![0.0; n];
            for j in 0..n {
                let mut anchor_dist = 0.0;
                for r in 0..params.m {
                    anchor_dist += (state.a[(r, i)] - state.a[(r, j)]).powi(2);
                }
                let f_dist = (state.f.row(i) - state.f.row(j)).norm_squared();
                costs[j] = anchor_dist + params.eta / 2.0 * f_dist;
            }
            let sol = crate::graph::ksparse_simplex_row(&costs, params.k, i).unwrap();
            assert!((sol.lambda - lambda_s[i]).abs() < 1e-12);
            for (&(j1, w1), (j2, w2)) in s.row(i).iter().zip(sol.entries()) {
                assert_eq!(j1, j2);
                assert!((w1 - w2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn s_update_keeps_neighbors_within_anchor_groups() {
        // two identical column groups in A and eta = 0: zero within-group
        // cost keeps every neighbor inside the sample's own group
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        let n = 8;
        let mut a = DMatrix::zeros(3, n);
        let col_a = crate::graph::project_to_simplex(&[0.7, 0.2, 0.4]);
        let col_b = crate::graph::project_to_simplex(&[0.0, 0.9, 0.6]);
        for j in 0..n {
            let src = if j < 4 { &col_a } else { &col_b };
            for i in 0..3 {
                a[(i, j)] = src[i];
            }
        }
        let params = HyperParams {
            eta: 0.0,
            k: 3,
            m: 3,
            c: 3,
            standardize: false,
            ..HyperParams::default()
        };
        let (g, lambda_g) =
            build_ksparse_graph(&DMatrix::from_fn(n, n, |_, _| rng.random()), 3).unwrap();
        let state = ModelState {
            w: vec![random_orthonormal(4, 3, &mut rng)],
            a,
            anchors: random_orthonormal(3, 3, &mut rng),
            s: KSparseRowGraph::zeros(n),
            g,
            f: random_orthonormal(n, 3, &mut rng),
            alpha: vec![1.0],
            d: vec![DVector::from_element(4, 1.0)],
            lambda_s: vec![0.0; n],
            lambda_g,
            objective_trace: Vec::new(),
        };
        let (s, _) = update_s(&state, &params).unwrap();
        for i in 0..n {
            for &(j, _) in s.row(i) {
                assert_eq!(j < 4, i < 4, "row {i} crossed groups to {j}");
            }
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn g_update_matches_independent_cost_computation() {
        let mut rng = ChaCha8Rng::seed_from_u64(110);
        let ds = small_dataset(&mut rng);
        let params = small_params();
        let state = random_state(&ds, &params, &mut rng);
        let (g, lambda_g) = update_g(&state, &ds, &params).unwrap();
        let n = ds.n_samples();
        for i in 0..n {
            let mut costs = vec![0.0; n];
            for j in 0..n {
                let mut data_dist = 0.0;
                for (v, x) in ds.views.iter().enumerate() {
                    data_dist +=
                        state.alpha[v].powi(2) * (x.column(i) - x.column(j)).norm_squared();
                }
                let f_dist = (state.f.row(i) - state.f.row(j)).norm_squared();
                costs[j] = 0.5 * (data_dist + f_dist);
            }
            let sol = crate::graph::ksparse_simplex_row(&costs, params.k, i).unwrap();
            assert!((sol.lambda - lambda_g[i]).abs() < 1e-12);
            for (&(j1, w1), (j2, w2)) in g.row(i).iter().zip(sol.entries()) {
                assert_eq!(j1, j2);
                assert!((w1 - w2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn g_update_stays_intra_cluster_on_separated_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(116);
        let n = 10;
        // two clouds far apart in every view
        let make_view = |rng: &mut ChaCha8Rng, d: usize| {
            DMatrix::from_fn(d, n, |_, j| {
                let center = if j < 5 { 0.0 } else { 50.0 };
                center + rng.random::<f64>()
            })
        };
        let x0 = make_view(&mut rng, 4);
        let x1 = make_view(&mut rng, 3);
        let ds = MultiViewDataset::new(vec![x0, x1]).unwrap();
        let params = HyperParams {
            k: 3,
            m: 2,
            c: 2,
            standardize: false,
            ..HyperParams::default()
        };
        let state = random_state(&ds, &params, &mut rng);
        let (g, _) = update_g(&state, &ds, &params).unwrap();
        for i in 0..n {
            for &(j, _) in g.row(i) {
                assert_eq!(j < 5, i < 5, "row {i} crossed clusters to {j}");
            }
        }
    }

    #[test]
    fn f_update_zeroes_trace_on_disconnected_blocks() {
        // hybrid graph with c = 2 disconnected blocks: the indicators live in
        // the null space, so the trace vanishes
        let mut rng = ChaCha8Rng::seed_from_u64(111);
        let n = 6;
        let mut rows = Vec::new();
        for i in 0..n {
            let base: [usize; 3] = if i < 3 { [0, 1, 2] } else { [3, 4, 5] };
            let entries: Vec<(usize, f64)> = base
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (j, 0.5))
                .collect();
            rows.push(entries);
        }
        let block_graph = KSparseRowGraph::from_rows(n, 2, rows).unwrap();
        let params = HyperParams {
            eta: 0.9,
            k: 2,
            m: 2,
            c: 2,
            standardize: false,
            ..HyperParams::default()
        };
        let state = ModelState {
            w: vec![random_orthonormal(4, 2, &mut rng)],
            a: random_simplex_columns(2, n, &mut rng),
            anchors: random_orthonormal(2, 2, &mut rng),
            s: block_graph.clone(),
            g: block_graph,
            f: random_orthonormal(n, 2, &mut rng),
            alpha: vec![1.0],
            d: vec![DVector::from_element(4, 1.0)],
            lambda_s: vec![0.0; n],
            lambda_g: vec![0.0; n],
            objective_trace: Vec::new(),
        };
        let f = update_f(&state, &params).unwrap();
        assert!(crate::model::orthonormality_deviation(&f) < 1e-8);
        let hybrid = state.g.to_dense() + state.s.to_dense() * params.eta;
        let lap = symmetric_laplacian(&hybrid).unwrap();
        let value = (f.transpose() * &lap * &f).trace();
        assert!(value < 1e-8, "trace {value}");
    }

    #[test]
    fn f_update_value_equals_smallest_eigenvalue_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(112);
        let ds = small_dataset(&mut rng);
        let params = small_params();
        let state = random_state(&ds, &params, &mut rng);
        let f = update_f(&state, &params).unwrap();
        let hybrid = state.g.to_dense() + state.s.to_dense() * params.eta;
        let lap = symmetric_laplacian(&hybrid).unwrap();
        let got = (f.transpose() * &lap * &f).trace();
        let mut eigs: Vec<f64> = lap.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigs.sort_by(f64::total_cmp);
        let expected: f64 = eigs[..params.c].iter().sum();
        assert!((got - expected).abs() < 1e-9);
    }

    #[test]
    fn alpha_from_residuals_matches_direct_computation() {
        let alpha = alpha_from_residuals(&[1.0, 2.0, 4.0]).unwrap();
        assert!((alpha[0] - 4.0 / 7.0).abs() < 1e-15);
        assert!((alpha[1] - 2.0 / 7.0).abs() < 1e-15);
        assert!((alpha[2] - 1.0 / 7.0).abs() < 1e-15);

        let uniform = alpha_from_residuals(&[3.0, 3.0, 3.0, 3.0]).unwrap();
        for a in &uniform {
            assert!((a - 0.25).abs() < 1e-15);
        }

        assert!(matches!(
            alpha_from_residuals(&[1.0, 0.0]),
            Err(ShineError::DegenerateViewResidual { view: 1 })
        ));
    }

    #[test]
    fn alpha_update_stays_on_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        let ds = small_dataset(&mut rng);
        let params = small_params();
        let state = random_state(&ds, &params, &mut rng);
        let alpha = update_alpha(&state, &ds, &params).unwrap();
        let sum: f64 = alpha.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(alpha.iter().all(|&a| a > 0.0 && a < 1.0));
    }

    #[test]
    fn fit_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(114);
        let ds = small_dataset(&mut rng);
        let params = HyperParams {
            k: 3,
            m: 3,
            c: 4,
            max_outer_iters: 8,
            seed: 42,
            ..HyperParams::default()
        };
        let r1 = fit(&ds, &params).unwrap();
        let r2 = fit(&ds, &params).unwrap();
        assert_eq!(r1.ranking, r2.ranking);
        assert_eq!(r1.objective_trace, r2.objective_trace);
        assert_eq!(r1.iterations, r2.iterations);
        for (w1, w2) in r1.state.w.iter().zip(&r2.state.w) {
            assert_eq!(w1, w2);
        }
    }

    #[test]
    fn fit_trace_shape_and_ranking_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(115);
        let ds = small_dataset(&mut rng);
        let params = HyperParams {
            k: 3,
            m: 2,
            c: 3,
            max_outer_iters: 6,
            seed: 1,
            ..HyperParams::default()
        };
        let r = fit(&ds, &params).unwrap();
        assert_eq!(r.objective_trace.len(), r.iterations + 1);
        assert!(r.objective_trace.iter().all(|x| x.is_finite()));
        assert!(r.objective_trace.last().unwrap() <= r.objective_trace.first().unwrap());
        assert_eq!(r.ranking.len(), ds.total_features());
        let mut seen = r.ranking.clone();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), ds.total_features());
    }

    #[test]
    fn select_features_cuts_ranking() {
        let ranking = vec![
            FeatureRef::new(0, 0),
            FeatureRef::new(0, 2),
            FeatureRef::new(0, 1),
        ];
        let result = FitResult {
            state: dummy_state(),
            ranking: ranking.clone(),
            scores: vec![3.0, 2.0, 1.0],
            converged: true,
            iterations: 1,
            objective_trace: vec![1.0, 0.5],
        };
        assert_eq!(
            select_features(&result, FeatureCount::Ratio(1.0)).unwrap(),
            ranking
        );
        assert_eq!(
            select_features(&result, FeatureCount::Top(2)).unwrap(),
            ranking[..2].to_vec()
        );
        // ceil arithmetic: 0.5 of 3 -> 2
        assert_eq!(
            select_features(&result, FeatureCount::Ratio(0.5))
                .unwrap()
                .len(),
            2
        );
        assert!(select_features(&result, FeatureCount::Ratio(0.0)).is_err());
        assert!(select_features(&result, FeatureCount::Top(4)).is_err());

        // 20% of 100 features is exactly 20
        let wide = FitResult {
            ranking: (0..100).map(|i| FeatureRef::new(0, i)).collect(),
            scores: (0..100).map(|i| 100.0 - i as f64).collect(),
            ..result
        };
        assert_eq!(
            select_features(&wide, FeatureCount::Ratio(0.2)).unwrap().len(),
            20
        );
    }

    #[test]
    fn ranking_orders_by_row_norm_with_index_ties() {
        let mut state = dummy_state();
        state.w = vec![DMatrix::from_row_slice(3, 1, &[3.0, 1.0, 2.0])];
        let (ranking, scores) = rank_features(&state);
        assert_eq!(
            ranking,
            vec![
                FeatureRef::new(0, 0),
                FeatureRef::new(0, 2),
                FeatureRef::new(0, 1)
            ]
        );
        assert_eq!(scores, vec![3.0, 2.0, 1.0]);
    }

    fn dummy_state() -> ModelState {
        ModelState {
            w: vec![DMatrix::identity(3, 1)],
            a: DMatrix::from_element(1, 2, 1.0),
            anchors: DMatrix::identity(1, 1),
            s: KSparseRowGraph::zeros(2),
            g: KSparseRowGraph::zeros(2),
            f: DMatrix::identity(2, 1),
            alpha: vec![1.0],
            d: vec![DVector::from_element(3, 1.0)],
            lambda_s: vec![0.0; 2],
            lambda_g: vec![0.0; 2],
            objective_trace: vec![1.0, 0.5],
        }
    }
}
