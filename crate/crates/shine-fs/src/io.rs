//! On-disk formats: the model-state bundle (per-matrix CSVs plus a JSON
//! manifest), graph exports in coordinate-list and dense CSV form, fit
//! summaries, and the report tables emitted by the CLI.
//!
//! Matrix CSVs use shortest round-trip float formatting so a written state
//! reloads bit-exactly. Report tables are human-facing and use 12
//! significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::fmt_exact;
use crate::error::{Result, ShineError};
use crate::model::{EvalReport, HyperParams, KSparseRowGraph, ModelState};
use crate::optim::FitResult;

/// Formats a value with 12 significant digits for report tables.
pub fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ShineError + '_ {
    move |source| ShineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> ShineError + '_ {
    move |source| ShineError::Json {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(json_err(path))?;
    text.push('\n');
    write_string(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}

/// Writes a dense matrix as CSV, one row per line, bit-exact floats.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut text = String::new();
    for i in 0..m.nrows() {
        let cells: Vec<String> = (0..m.ncols()).map(|j| fmt_exact(m[(i, j)])).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    write_string(path, &text)
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| ShineError::Parse {
            what: "matrix CSV",
            path: path.display().to_string(),
            line: lineno + 1,
            reason: e.to_string(),
        })?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(ShineError::Parse {
                    what: "matrix CSV",
                    path: path.display().to_string(),
                    line: lineno + 1,
                    reason: "ragged rows".into(),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ShineError::Parse {
            what: "matrix CSV",
            path: path.display().to_string(),
            line: 0,
            reason: "empty".into(),
        });
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Writes a k-sparse graph as a coordinate list: `row,col,weight` with a
/// header, entries ordered by (row, col).
pub fn write_graph_coo(path: &Path, g: &KSparseRowGraph) -> Result<()> {
    let mut text = String::from("row,col,weight\n");
    for i in 0..g.n() {
        for &(j, w) in g.row(i) {
            text.push_str(&format!("{i},{j},{}\n", fmt_exact(w)));
        }
    }
    write_string(path, &text)
}

pub fn read_graph_coo(path: &Path, n: usize, k: usize) -> Result<KSparseRowGraph> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut total = 0usize;
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = || -> Option<(usize, usize, f64)> {
            if parts.len() != 3 {
                return None;
            }
            Some((
                parts[0].parse().ok()?,
                parts[1].parse().ok()?,
                parts[2].parse().ok()?,
            ))
        };
        let (i, j, w) = parse().ok_or_else(|| ShineError::Parse {
            what: "graph COO CSV",
            path: path.display().to_string(),
            line: lineno + 1,
            reason: "expected row,col,weight".into(),
        })?;
        if i >= n || j >= n {
            return Err(ShineError::Parse {
                what: "graph COO CSV",
                path: path.display().to_string(),
                line: lineno + 1,
                reason: format!("index ({i},{j}) out of range for n={n}"),
            });
        }
        rows[i].push((j, w));
        total += 1;
    }
    if total == 0 {
        return Ok(KSparseRowGraph::zeros(n));
    }
    KSparseRowGraph::from_rows(n, k, rows)
}

/// Manifest of a serialized model state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateManifest {
    pub n: usize,
    pub view_dims: Vec<usize>,
    pub hyperparams: HyperParams,
    pub alpha: Vec<f64>,
    pub lambda_s: Vec<f64>,
    pub lambda_g: Vec<f64>,
    pub objective_trace: Vec<f64>,
}

/// Writes a state as a directory of per-matrix CSVs plus `state.json`.
pub fn export_state(dir: &Path, state: &ModelState, params: &HyperParams) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (v, w) in state.w.iter().enumerate() {
        write_matrix_csv(&dir.join(format!("w_{v}.csv")), w)?;
    }
    write_matrix_csv(&dir.join("a.csv"), &state.a)?;
    write_matrix_csv(&dir.join("c.csv"), &state.anchors)?;
    write_matrix_csv(&dir.join("f.csv"), &state.f)?;
    write_graph_coo(&dir.join("s.csv"), &state.s)?;
    write_graph_coo(&dir.join("g.csv"), &state.g)?;
    for (v, d) in state.d.iter().enumerate() {
        let col = DMatrix::from_column_slice(d.len(), 1, d.as_slice());
        write_matrix_csv(&dir.join(format!("d_{v}.csv")), &col)?;
    }
    let manifest = StateManifest {
        n: state.a.ncols(),
        view_dims: state.w.iter().map(|w| w.nrows()).collect(),
        hyperparams: params.clone(),
        alpha: state.alpha.clone(),
        lambda_s: state.lambda_s.clone(),
        lambda_g: state.lambda_g.clone(),
        objective_trace: state.objective_trace.clone(),
    };
    write_json(&dir.join("state.json"), &manifest)
}

/// Reads a state bundle back; the manifest's hyperparameters ride along.
pub fn import_state(dir: &Path) -> Result<(ModelState, HyperParams)> {
    let manifest: StateManifest = read_json(&dir.join("state.json"))?;
    let n = manifest.n;
    let k = manifest.hyperparams.k;
    let mut w = Vec::with_capacity(manifest.view_dims.len());
    for v in 0..manifest.view_dims.len() {
        w.push(read_matrix_csv(&dir.join(format!("w_{v}.csv")))?);
    }
    let mut d = Vec::with_capacity(manifest.view_dims.len());
    for v in 0..manifest.view_dims.len() {
        let col = read_matrix_csv(&dir.join(format!("d_{v}.csv")))?;
        d.push(DVector::from_column_slice(col.column(0).as_slice()));
    }
    let state = ModelState {
        w,
        a: read_matrix_csv(&dir.join("a.csv"))?,
        anchors: read_matrix_csv(&dir.join("c.csv"))?,
        f: read_matrix_csv(&dir.join("f.csv"))?,
        s: read_graph_coo(&dir.join("s.csv"), n, k)?,
        g: read_graph_coo(&dir.join("g.csv"), n, k)?,
        alpha: manifest.alpha.clone(),
        d,
        lambda_s: manifest.lambda_s.clone(),
        lambda_g: manifest.lambda_g.clone(),
        objective_trace: manifest.objective_trace.clone(),
    };
    Ok((state, manifest.hyperparams))
}

/// One ranked feature in a serialized fit summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankedFeature {
    pub view: usize,
    pub index: usize,
    pub score: f64,
}

/// Serializable face of a [`FitResult`] (everything but the state bundle).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitSummary {
    pub converged: bool,
    pub iterations: usize,
    pub objective_trace: Vec<f64>,
    pub ranking: Vec<RankedFeature>,
}

impl FitSummary {
    pub fn from_result(result: &FitResult) -> Self {
        FitSummary {
            converged: result.converged,
            iterations: result.iterations,
            objective_trace: result.objective_trace.clone(),
            ranking: result
                .ranking
                .iter()
                .zip(&result.scores)
                .map(|(f, &score)| RankedFeature {
                    view: f.view,
                    index: f.index,
                    score,
                })
                .collect(),
        }
    }
}

/// Writes the objective trace as `iteration,objective` (12 significant
/// digits).
pub fn write_trace_csv(path: &Path, trace: &[f64]) -> Result<()> {
    let mut text = String::from("iteration,objective\n");
    for (i, v) in trace.iter().enumerate() {
        text.push_str(&format!("{i},{}\n", fmt_sig12(*v)));
    }
    write_string(path, &text)
}

/// One row of a metrics table.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub ratio: f64,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub nmi_mean: f64,
    pub nmi_std: f64,
}

impl ReportRow {
    pub fn from_report(report: &EvalReport, method: &str, seed: Option<u64>) -> Self {
        ReportRow {
            ratio: report.ratio,
            method: method.to_string(),
            seed,
            acc_mean: report.acc_mean,
            acc_std: report.acc_std,
            nmi_mean: report.nmi_mean,
            nmi_std: report.nmi_std,
        }
    }
}

/// Sweep table: `ratio,method,acc_mean,acc_std,nmi_mean,nmi_std`.
pub fn write_sweep_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut text = String::from("ratio,method,acc_mean,acc_std,nmi_mean,nmi_std\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_sig12(r.ratio),
            r.method,
            fmt_sig12(r.acc_mean),
            fmt_sig12(r.acc_std),
            fmt_sig12(r.nmi_mean),
            fmt_sig12(r.nmi_std)
        ));
    }
    write_string(path, &text)
}

/// Ablation table: per-seed rows with
/// `method,seed,ratio,acc_mean,acc_std,nmi_mean,nmi_std`.
pub fn write_ablate_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut text = String::from("method,seed,ratio,acc_mean,acc_std,nmi_mean,nmi_std\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method,
            r.seed.map_or_else(|| "-".into(), |s| s.to_string()),
            fmt_sig12(r.ratio),
            fmt_sig12(r.acc_mean),
            fmt_sig12(r.acc_std),
            fmt_sig12(r.nmi_mean),
            fmt_sig12(r.nmi_std)
        ));
    }
    write_string(path, &text)
}

/// Writes the similarity graphs both as coordinate lists and dense CSVs,
/// plus the dense hybrid graph.
pub fn export_graphs(dir: &Path, state: &ModelState, eta: f64) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_graph_coo(&dir.join("g_coo.csv"), &state.g)?;
    write_graph_coo(&dir.join("s_coo.csv"), &state.s)?;
    write_matrix_csv(&dir.join("g_dense.csv"), &state.g.to_dense())?;
    write_matrix_csv(&dir.join("s_dense.csv"), &state.s.to_dense())?;
    let hybrid = state.g.to_dense() + state.s.to_dense() * eta;
    write_matrix_csv(&dir.join("hybrid_dense.csv"), &hybrid)?;
    Ok(dir.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, SynthSpec};
    use crate::optim::fit;

    #[test]
    fn sig12_format_is_twelve_digits() {
        assert_eq!(fmt_sig12(1.0 / 3.0), "3.33333333333e-1");
        assert_eq!(fmt_sig12(0.0), "0.00000000000e0");
        assert_eq!(fmt_sig12(-12345.678), "-1.23456780000e4");
    }

    #[test]
    fn matrix_csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = DMatrix::from_fn(4, 3, |i, j| ((i * 31 + j * 7) as f64).sin() * 1e-3);
        let path = dir.path().join("m.csv");
        write_matrix_csv(&path, &m).unwrap();
        let back = read_matrix_csv(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn state_bundle_round_trip_is_bit_exact() {
        let spec = SynthSpec {
            n: 24,
            c_true: 3,
            l: 2,
            d_info: 3,
            d_noise: 4,
            separation: 5.0,
            seed: 8,
            imbalance: None,
            d_lobe: 0,
            lobe_separation: 0.0,
        };
        let ds = synth_generate(&spec).unwrap();
        let params = HyperParams {
            k: 4,
            m: 3,
            c: 3,
            max_outer_iters: 3,
            seed: 5,
            ..HyperParams::default()
        };
        let result = fit(&ds, &params).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export_state(dir.path(), &result.state, &params).unwrap();
        let (state, params_back) = import_state(dir.path()).unwrap();
        assert_eq!(params, params_back);
        for (a, b) in result.state.w.iter().zip(&state.w) {
            assert_eq!(a, b);
        }
        assert_eq!(result.state.a, state.a);
        assert_eq!(result.state.anchors, state.anchors);
        assert_eq!(result.state.f, state.f);
        assert_eq!(result.state.s.to_dense(), state.s.to_dense());
        assert_eq!(result.state.g.to_dense(), state.g.to_dense());
        assert_eq!(result.state.alpha, state.alpha);
        assert_eq!(result.state.lambda_s, state.lambda_s);
        assert_eq!(result.state.lambda_g, state.lambda_g);
        assert_eq!(result.state.objective_trace, state.objective_trace);
        for (a, b) in result.state.d.iter().zip(&state.d) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn zero_graph_round_trips_through_coo() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.csv");
        write_graph_coo(&path, &KSparseRowGraph::zeros(5)).unwrap();
        let back = read_graph_coo(&path, 5, 3).unwrap();
        assert!(back.is_zero());
    }

    #[test]
    fn fit_summary_serializes() {
        let summary = FitSummary {
            converged: true,
            iterations: 4,
            objective_trace: vec![2.0, 1.0],
            ranking: vec![RankedFeature {
                view: 0,
                index: 1,
                score: 0.5,
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fit.json");
        write_json(&path, &summary).unwrap();
        let back: FitSummary = read_json(&path).unwrap();
        assert_eq!(back.iterations, 4);
        assert_eq!(back.ranking.len(), 1);
        assert_eq!(back.objective_trace, summary.objective_trace);
    }
}
