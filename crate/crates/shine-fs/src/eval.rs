//! Clustering-based evaluation of selected features: k-means with restarts,
//! optimal label alignment, clustering accuracy, normalized mutual
//! information, and the feature-ratio sweep protocol.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::zscore;
use crate::error::{Result, ShineError};
use crate::model::{EvalReport, FeatureRef, HyperParams, MultiViewDataset};
use crate::optim::{fit, select_features, FeatureCount, FitResult};

/// Stride used to derive restart seeds from a master seed.
const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// One k-means run.
#[derive(Debug, Clone)]
pub struct ClusteringRun {
    /// Predicted cluster id per sample, every id in `[0, c)` occupied.
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares at the final centroids.
    pub inertia: f64,
    pub iterations: usize,
    pub seed: u64,
}

pub fn restart_seed(master: u64, index: usize) -> u64 {
    master.wrapping_add((index as u64).wrapping_mul(SEED_STRIDE))
}

/// Lloyd's algorithm with distance-weighted (k-means++-style) seeding.
///
/// Columns of `m` are points. Empty clusters are repaired by moving the
/// point currently farthest from its centroid (among clusters that can
/// spare one). Deterministic given the seed; stops on an assignment
/// fixpoint or after `max_iters`.
pub fn kmeans(m: &DMatrix<f64>, c: usize, seed: u64, max_iters: usize) -> Result<ClusteringRun> {
    kmeans_traced(m, c, seed, max_iters).map(|(run, _)| run)
}

fn sq_dist(m: &DMatrix<f64>, col: usize, center: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (r, &cr) in center.iter().enumerate() {
        let t = m[(r, col)] - cr;
        acc += t * t;
    }
    acc
}

fn kmeans_traced(
    m: &DMatrix<f64>,
    c: usize,
    seed: u64,
    max_iters: usize,
) -> Result<(ClusteringRun, Vec<f64>)> {
    let n = m.ncols();
    let dim = m.nrows();
    if c == 0 || c > n {
        return Err(ShineError::TooManyClusters { c, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // greedy distance-weighted seeding: several candidates per step, keep
    // the one that shrinks the potential the most
    let trials = 2 + (c as f64).ln().floor() as usize;
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(c);
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    centers.push(m.column(first).iter().copied().collect());
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(m, i, &centers[0])).collect();
    while centers.len() < c {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut best: Option<(f64, usize, Vec<f64>)> = None;
            for _ in 0..trials {
                let mut r = rng.random::<f64>() * total;
                let mut idx = n - 1;
                for (i, &w) in d2.iter().enumerate() {
                    if r < w {
                        idx = i;
                        break;
                    }
                    r -= w;
                }
                let cand: Vec<f64> = (0..n)
                    .map(|i| d2[i].min(sq_dist(m, i, m.column(idx).as_slice())))
                    .collect();
                let potential: f64 = cand.iter().sum();
                if best.as_ref().is_none_or(|(p, _, _)| potential < *p) {
                    best = Some((potential, idx, cand));
                }
            }
            let (_, idx, cand) = best.unwrap();
            d2 = cand;
            idx
        } else {
            // all remaining mass is zero (duplicates); take the first free slot
            let idx = (0..n).find(|&i| !chosen[i]).unwrap_or(0);
            for (i, d) in d2.iter_mut().enumerate() {
                *d = d.min(sq_dist(m, i, m.column(idx).as_slice()));
            }
            idx
        };
        chosen[pick] = true;
        centers.push(m.column(pick).iter().copied().collect());
    }

    let mut labels = vec![0usize; n];
    let mut inertia_trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iters {
        // assignment, ties to the lowest cluster index
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let mut best = 0;
            let mut best_d = sq_dist(m, i, &centers[0]);
            for (t, center) in centers.iter().enumerate().skip(1) {
                let d = sq_dist(m, i, center);
                if d < best_d {
                    best_d = d;
                    best = t;
                }
            }
            if *label != best {
                *label = best;
                changed = true;
            }
        }

        // repair empty clusters with the globally farthest point
        let mut sizes = vec![0usize; c];
        for &l in &labels {
            sizes[l] += 1;
        }
        for t in 0..c {
            while sizes[t] == 0 {
                let mut far_i = usize::MAX;
                let mut far_d = -1.0;
                for i in 0..n {
                    if sizes[labels[i]] < 2 {
                        continue;
                    }
                    let d = sq_dist(m, i, &centers[labels[i]]);
                    if d > far_d {
                        far_d = d;
                        far_i = i;
                    }
                }
                if far_i == usize::MAX {
                    break; // no donatable point; c > distinct points
                }
                sizes[labels[far_i]] -= 1;
                labels[far_i] = t;
                sizes[t] += 1;
                centers[t] = m.column(far_i).iter().copied().collect();
                changed = true;
            }
        }

        // centroid update
        for center in centers.iter_mut() {
            center.iter_mut().for_each(|x| *x = 0.0);
        }
        let mut counts = vec![0usize; c];
        for i in 0..n {
            counts[labels[i]] += 1;
            for r in 0..dim {
                centers[labels[i]][r] += m[(r, i)];
            }
        }
        for (t, center) in centers.iter_mut().enumerate() {
            if counts[t] > 0 {
                let inv = 1.0 / counts[t] as f64;
                center.iter_mut().for_each(|x| *x *= inv);
            }
        }

        let inertia: f64 = (0..n).map(|i| sq_dist(m, i, &centers[labels[i]])).sum();
        inertia_trace.push(inertia);
        iterations += 1;
        if !changed {
            break;
        }
    }

    let inertia = *inertia_trace.last().unwrap_or(&0.0);
    Ok((
        ClusteringRun {
            labels,
            inertia,
            iterations,
            seed,
        },
        inertia_trace,
    ))
}

/// Densely re-labels an id sequence in order of first appearance.
fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map: Vec<usize> = Vec::new();
    let ids = labels
        .iter()
        .map(|&l| {
            if let Some(idx) = map.iter().position(|&m| m == l) {
                idx
            } else {
                map.push(l);
                map.len() - 1
            }
        })
        .collect();
    (ids, map.len())
}

/// Minimum-cost perfect assignment on a square matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns the column assigned to each row.
fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Clustering accuracy: fraction of samples matched after the optimal
/// cluster-to-label assignment.
pub fn accuracy(truth: &[usize], pred: &[usize]) -> Result<f64> {
    if truth.len() != pred.len() {
        return Err(ShineError::LabelLengthMismatch {
            left: truth.len(),
            right: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(ShineError::EmptySelection);
    }
    let (t_ids, kt) = dense_ids(truth);
    let (p_ids, kp) = dense_ids(pred);
    let k = kt.max(kp);
    let mut counts = vec![vec![0.0f64; k]; k];
    for (&t, &p) in t_ids.iter().zip(&p_ids) {
        counts[p][t] += 1.0;
    }
    let cost: Vec<Vec<f64>> = counts.iter().map(|row| row.iter().map(|&x| -x).collect()).collect();
    let assignment = min_cost_assignment(&cost);
    let matched: f64 = assignment
        .iter()
        .enumerate()
        .map(|(p, &t)| counts[p][t])
        .sum();
    Ok(matched / truth.len() as f64)
}

/// Normalized mutual information with natural-log entropies and a
/// max-entropy denominator. Two single-cluster partitions score 1.0.
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64> {
    if truth.len() != pred.len() {
        return Err(ShineError::LabelLengthMismatch {
            left: truth.len(),
            right: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(ShineError::EmptySelection);
    }
    let n = truth.len() as f64;
    let (t_ids, kt) = dense_ids(truth);
    let (p_ids, kp) = dense_ids(pred);
    let mut joint = vec![vec![0.0f64; kp]; kt];
    let mut t_count = vec![0.0f64; kt];
    let mut p_count = vec![0.0f64; kp];
    for (&t, &p) in t_ids.iter().zip(&p_ids) {
        joint[t][p] += 1.0;
        t_count[t] += 1.0;
        p_count[p] += 1.0;
    }
    let entropy = |counts: &[f64]| -> f64 {
        counts
            .iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| {
                let q = x / n;
                -q * q.ln()
            })
            .sum()
    };
    let h_t = entropy(&t_count);
    let h_p = entropy(&p_count);
    let denom = h_t.max(h_p);
    if denom == 0.0 {
        // both partitions are single-cluster, hence identical
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for t in 0..kt {
        for p in 0..kp {
            let nij = joint[t][p];
            if nij > 0.0 {
                mi += (nij / n) * ((n * nij) / (t_count[t] * p_count[p])).ln();
            }
        }
    }
    Ok((mi / denom).clamp(0.0, 1.0))
}

fn selection_matrix(dataset: &MultiViewDataset, selected: &[FeatureRef]) -> Result<DMatrix<f64>> {
    if selected.is_empty() {
        return Err(ShineError::EmptySelection);
    }
    let n = dataset.n_samples();
    let mut unique = selected.to_vec();
    unique.sort();
    unique.dedup();
    if unique.len() != selected.len() {
        return Err(ShineError::ShapeMismatch {
            context: "duplicate features in selection".into(),
        });
    }
    let mut sub = DMatrix::zeros(selected.len(), n);
    for (row, fr) in selected.iter().enumerate() {
        let view = dataset.views.get(fr.view).ok_or(ShineError::ShapeMismatch {
            context: format!("selected view {} out of range", fr.view),
        })?;
        if fr.index >= view.nrows() {
            return Err(ShineError::ShapeMismatch {
                context: format!("selected feature {} out of range in view {}", fr.index, fr.view),
            });
        }
        for j in 0..n {
            sub[(row, j)] = view[(fr.index, j)];
        }
    }
    Ok(sub)
}

/// Restricts the dataset to the selected features, z-scores the result, runs
/// k-means `restarts` times with seeds split off `seed`, and summarizes
/// accuracy and NMI against the ground-truth labels.
pub fn evaluate_selection(
    dataset: &MultiViewDataset,
    selected: &[FeatureRef],
    c: usize,
    restarts: usize,
    seed: u64,
) -> Result<EvalReport> {
    let start = Instant::now();
    let truth = dataset.labels.as_ref().ok_or(ShineError::LabelsMissing)?;
    let sub = selection_matrix(dataset, selected)?;
    let standardized = zscore(&MultiViewDataset {
        views: vec![sub],
        labels: None,
        informative_features: None,
        feature_names: None,
    });
    let matrix = &standardized.dataset.views[0];

    let metrics: Vec<Result<(f64, f64)>> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let run = kmeans(matrix, c, restart_seed(seed, r), 100)?;
            Ok((accuracy(truth, &run.labels)?, nmi(truth, &run.labels)?))
        })
        .collect();
    let mut accs = Vec::with_capacity(metrics.len());
    let mut nmis = Vec::with_capacity(metrics.len());
    for m in metrics {
        let (a, v) = m?;
        accs.push(a);
        nmis.push(v);
    }
    let stats = |xs: &[f64]| -> (f64, f64) {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        (mean, var.sqrt())
    };
    let (acc_mean, acc_std) = stats(&accs);
    let (nmi_mean, nmi_std) = stats(&nmis);
    Ok(EvalReport {
        selected: selected.to_vec(),
        ratio: selected.len() as f64 / dataset.total_features() as f64,
        acc_mean,
        acc_std,
        nmi_mean,
        nmi_std,
        objective_trace: Vec::new(),
        wallclock_secs: start.elapsed().as_secs_f64(),
    })
}

/// Default evaluation ratios: 10% to 50% in steps of 10%.
pub fn default_ratios() -> Vec<f64> {
    vec![0.1, 0.2, 0.3, 0.4, 0.5]
}

/// Fits once, then evaluates the ranking cut at every ratio (ascending).
pub fn sweep(
    dataset: &MultiViewDataset,
    params: &HyperParams,
    ratios: &[f64],
    restarts: usize,
) -> Result<(FitResult, Vec<EvalReport>)> {
    if dataset.labels.is_none() {
        return Err(ShineError::LabelsMissing);
    }
    let mut ratios = ratios.to_vec();
    ratios.sort_by(f64::total_cmp);
    ratios.dedup();
    if ratios.is_empty() {
        return Err(ShineError::Config {
            reason: "no ratios to sweep".into(),
        });
    }
    let result = fit(dataset, params)?;
    let mut reports = Vec::with_capacity(ratios.len());
    for &ratio in &ratios {
        let selected = select_features(&result, FeatureCount::Ratio(ratio))?;
        let mut report =
            evaluate_selection(dataset, &selected, params.c, restarts, params.seed)?;
        report.ratio = ratio;
        report.objective_trace = result.objective_trace.clone();
        reports.push(report);
    }
    Ok((result, reports))
}

/// Random-selection baseline: draws `draws` uniform feature subsets at the
/// ratio, evaluates each with the same restart protocol, and pools all
/// draw-level runs into one report. The `selected` field is left empty
/// because no single subset is represented.
pub fn random_baseline(
    dataset: &MultiViewDataset,
    ratio: f64,
    c: usize,
    restarts: usize,
    seed: u64,
    draws: usize,
) -> Result<EvalReport> {
    let start = Instant::now();
    if dataset.labels.is_none() {
        return Err(ShineError::LabelsMissing);
    }
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(ShineError::BadRatio { ratio });
    }
    let total = dataset.total_features();
    let h = ((ratio * total as f64).ceil() as usize).clamp(1, total);
    let all: Vec<FeatureRef> = dataset
        .views
        .iter()
        .enumerate()
        .flat_map(|(v, x)| (0..x.nrows()).map(move |i| FeatureRef::new(v, i)))
        .collect();

    let mut accs = Vec::new();
    let mut nmis = Vec::new();
    for d in 0..draws.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(seed, d) ^ 0xBA5E);
        let mut pool = all.clone();
        // partial Fisher-Yates
        for i in 0..h {
            let j = i + rng.random_range(0..pool.len() - i);
            pool.swap(i, j);
        }
        let subset = &pool[..h];
        let report = evaluate_selection(dataset, subset, c, restarts, restart_seed(seed, d))?;
        // recover per-run spread from the report by re-expanding: we keep the
        // means per draw and pool them with equal weight
        accs.push((report.acc_mean, report.acc_std));
        nmis.push((report.nmi_mean, report.nmi_std));
    }
    // pooled mean and std over draws x restarts (law of total variance)
    let pool = |stats: &[(f64, f64)]| -> (f64, f64) {
        let mean = stats.iter().map(|(m, _)| m).sum::<f64>() / stats.len() as f64;
        let var = stats
            .iter()
            .map(|(m, s)| s * s + (m - mean).powi(2))
            .sum::<f64>()
            / stats.len() as f64;
        (mean, var.sqrt())
    };
    let (acc_mean, acc_std) = pool(&accs);
    let (nmi_mean, nmi_std) = pool(&nmis);
    Ok(EvalReport {
        selected: Vec::new(),
        ratio,
        acc_mean,
        acc_std,
        nmi_mean,
        nmi_std,
        objective_trace: Vec::new(),
        wallclock_secs: start.elapsed().as_secs_f64(),
    })
}
