//! Dataset ingestion, per-feature standardization, and seeded synthetic
//! multi-view generation with planted cluster structure.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShineError};
use crate::model::{FeatureRef, MultiViewDataset};

/// Dataset manifest: one CSV per view (rows are samples, columns are
/// features) plus an optional label CSV, with paths relative to the
/// manifest file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub views: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    #[serde(default)]
    pub name: String,
    /// Planted informative features, carried through save/load round trips.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub informative: Option<Vec<FeatureRef>>,
}

/// Specification for planted synthetic multi-view data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n: usize,
    pub c_true: usize,
    /// View count.
    pub l: usize,
    /// Informative features per view.
    pub d_info: usize,
    /// Noise features per view.
    pub d_noise: usize,
    /// Root-mean-square inter-cluster mean distance, in units of the
    /// within-cluster standard deviation.
    pub separation: f64,
    pub seed: u64,
    /// Optional size skew: the largest cluster gets roughly this multiple of
    /// the smallest. Balanced when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imbalance: Option<f64>,
    /// Nuisance features per view that split every cluster into two lobes.
    /// Zero keeps the clusters isotropic.
    pub d_lobe: usize,
    /// Root-mean-square distance between the two lobe means over the lobe
    /// block. Only used when `d_lobe > 0`.
    pub lobe_separation: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n: 200,
            c_true: 4,
            l: 3,
            d_info: 5,
            d_noise: 15,
            separation: 6.0,
            seed: 0,
            imbalance: None,
            d_lobe: 0,
            lobe_separation: 0.0,
        }
    }
}

impl SynthSpec {
    pub fn check(&self) -> Result<()> {
        if self.c_true == 0 || self.n < self.c_true * 2 {
            return Err(ShineError::BadSynthSpec {
                reason: format!("need n >= 2*c_true, got n={} c_true={}", self.n, self.c_true),
            });
        }
        if self.l == 0 || self.d_info + self.d_noise == 0 {
            return Err(ShineError::BadSynthSpec {
                reason: "need at least one view with at least one feature".into(),
            });
        }
        if self.separation.is_nan() || self.separation <= 0.0 {
            return Err(ShineError::BadSynthSpec {
                reason: format!("separation must be > 0, got {}", self.separation),
            });
        }
        if let Some(r) = self.imbalance {
            if r.is_nan() || r < 1.0 {
                return Err(ShineError::BadSynthSpec {
                    reason: format!("imbalance must be >= 1, got {r}"),
                });
            }
        }
        if self.d_lobe > 0 && (self.lobe_separation.is_nan() || self.lobe_separation <= 0.0) {
            return Err(ShineError::BadSynthSpec {
                reason: "lobe features need lobe_separation > 0".into(),
            });
        }
        Ok(())
    }

    /// Cluster sizes: balanced within one sample by default, geometrically
    /// skewed under `imbalance`, always at least two samples per cluster.
    fn cluster_sizes(&self) -> Vec<usize> {
        let c = self.c_true;
        let mut sizes = vec![0usize; c];
        match self.imbalance {
            None => {
                let base = self.n / c;
                let extra = self.n % c;
                for (t, size) in sizes.iter_mut().enumerate() {
                    *size = base + usize::from(t < extra);
                }
            }
            Some(r) => {
                let ratio = r.powf(1.0 / (c.max(2) - 1) as f64);
                let weights: Vec<f64> = (0..c).map(|t| ratio.powi(t as i32)).collect();
                let total: f64 = weights.iter().sum();
                let mut assigned = 0;
                for t in 0..c {
                    let want = ((weights[t] / total) * self.n as f64).round() as usize;
                    sizes[t] = want.max(2);
                    assigned += sizes[t];
                }
                // push any rounding surplus/deficit onto the largest cluster
                while assigned > self.n {
                    let t = (0..c).max_by_key(|&t| sizes[t]).unwrap();
                    sizes[t] -= 1;
                    assigned -= 1;
                }
                while assigned < self.n {
                    let t = (0..c).max_by_key(|&t| sizes[t]).unwrap();
                    sizes[t] += 1;
                    assigned += 1;
                }
            }
        }
        sizes
    }
}

/// Generates planted multi-view data. Per view, the feature layout is
/// `d_info` cluster-informative rows (Gaussian cluster means at the
/// requested separation), then `d_lobe` nuisance rows splitting every
/// cluster into two interleaved lobes, then `d_noise` standard-normal
/// rows. Labels and the informative list (the first `d_info` rows per
/// view) ride along. Deterministic given the seed.
///
/// The lobe block plants structure that fragments first-order
/// neighborhoods while leaving cluster identity recoverable through
/// shared anchors; it backs the ablation comparisons.
pub fn synth_generate(spec: &SynthSpec) -> Result<MultiViewDataset> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sizes = spec.cluster_sizes();
    let mut labels = Vec::with_capacity(spec.n);
    for (t, &size) in sizes.iter().enumerate() {
        labels.extend(std::iter::repeat_n(t, size));
    }
    // lobe assignment alternates within each cluster
    let mut lobes = vec![0usize; spec.n];
    let mut counter = vec![0usize; spec.c_true];
    for (i, &label) in labels.iter().enumerate() {
        lobes[i] = counter[label] % 2;
        counter[label] += 1;
    }

    // means scaled so the RMS distance between two block means is the
    // requested separation (within-cluster std is 1)
    let sigma_c = if spec.d_info > 0 {
        spec.separation / (2.0 * spec.d_info as f64).sqrt()
    } else {
        0.0
    };
    let sigma_l = if spec.d_lobe > 0 {
        spec.lobe_separation / (2.0 * spec.d_lobe as f64).sqrt()
    } else {
        0.0
    };

    let d_total = spec.d_info + spec.d_lobe + spec.d_noise;
    let mut views = Vec::with_capacity(spec.l);
    let mut informative = Vec::new();
    for v in 0..spec.l {
        let mut means = DMatrix::zeros(spec.d_info, spec.c_true);
        for f in 0..spec.d_info {
            for t in 0..spec.c_true {
                means[(f, t)] = sigma_c * rng.sample::<f64, _>(StandardNormal);
            }
        }
        // lobe means shared across clusters: a pure nuisance split
        let mut lobe_means = DMatrix::zeros(spec.d_lobe, 2);
        for f in 0..spec.d_lobe {
            for b in 0..2 {
                lobe_means[(f, b)] = sigma_l * rng.sample::<f64, _>(StandardNormal);
            }
        }
        let mut x = DMatrix::zeros(d_total, spec.n);
        for f in 0..d_total {
            for (i, &label) in labels.iter().enumerate() {
                let base = if f < spec.d_info {
                    means[(f, label)]
                } else if f < spec.d_info + spec.d_lobe {
                    lobe_means[(f - spec.d_info, lobes[i])]
                } else {
                    0.0
                };
                x[(f, i)] = base + rng.sample::<f64, _>(StandardNormal);
            }
        }
        for f in 0..spec.d_info {
            informative.push(FeatureRef::new(v, f));
        }
        views.push(x);
    }

    let mut ds = MultiViewDataset::new(views)?.with_labels(labels)?;
    ds.informative_features = Some(informative);
    Ok(ds)
}

/// Standardization output: the transformed dataset plus the features that
/// were constant (std below 1e-12) and were zeroed out.
#[derive(Debug, Clone)]
pub struct ZscoreOutput {
    pub dataset: MultiViewDataset,
    pub constant_features: Vec<FeatureRef>,
}

/// Per-feature z-scoring: subtract the mean and divide by the population
/// standard deviation; constant features become all-zero rows and are
/// reported.
pub fn zscore(dataset: &MultiViewDataset) -> ZscoreOutput {
    let n = dataset.n_samples() as f64;
    let mut out = dataset.clone();
    let mut constant = Vec::new();
    for (v, x) in out.views.iter_mut().enumerate() {
        for f in 0..x.nrows() {
            let mean: f64 = x.row(f).iter().sum::<f64>() / n;
            let var: f64 = x.row(f).iter().map(|&e| (e - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            if std < 1e-12 {
                x.row_mut(f).fill(0.0);
                constant.push(FeatureRef::new(v, f));
            } else {
                for e in x.row_mut(f).iter_mut() {
                    *e = (*e - mean) / std;
                }
            }
        }
    }
    ZscoreOutput {
        dataset: out,
        constant_features: constant,
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| ShineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses a numeric CSV with rows as samples. A non-numeric first row is
/// treated as a header and skipped. Returns the matrix transposed to
/// features x samples.
fn parse_view_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            cells.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(values) => {
                if let Some(w) = width {
                    if values.len() != w {
                        return Err(ShineError::Parse {
                            what: "view CSV",
                            path: path.display().to_string(),
                            line: lineno + 1,
                            reason: format!("{} columns, expected {w}", values.len()),
                        });
                    }
                } else {
                    width = Some(values.len());
                }
                rows.push(values);
            }
            Err(e) => {
                // only the first row may be non-numeric (header)
                if rows.is_empty() && width.is_none() {
                    continue;
                }
                return Err(ShineError::Parse {
                    what: "view CSV",
                    path: path.display().to_string(),
                    line: lineno + 1,
                    reason: e.to_string(),
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(ShineError::Parse {
            what: "view CSV",
            path: path.display().to_string(),
            line: 0,
            reason: "no data rows".into(),
        });
    }
    let (samples, feats) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(feats, samples, |f, s| rows[s][f]))
}

/// Parses one label per line; integer labels are used as-is, anything else
/// is densely re-labeled in order of first appearance.
fn parse_labels_csv(path: &Path) -> Result<Vec<usize>> {
    let text = read_to_string(path)?;
    let raw: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    if raw.is_empty() {
        return Err(ShineError::Parse {
            what: "label CSV",
            path: path.display().to_string(),
            line: 0,
            reason: "no labels".into(),
        });
    }
    if let Ok(ints) = raw.iter().map(|l| l.parse::<usize>()).collect::<std::result::Result<Vec<_>, _>>() {
        return Ok(ints);
    }
    let mut seen: Vec<&str> = Vec::new();
    Ok(raw
        .iter()
        .map(|l| {
            if let Some(idx) = seen.iter().position(|s| s == l) {
                idx
            } else {
                seen.push(l);
                seen.len() - 1
            }
        })
        .collect())
}

/// Loads a dataset from a manifest JSON file.
pub fn load_multiview(manifest_path: &Path) -> Result<MultiViewDataset> {
    let text = read_to_string(manifest_path)?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|source| ShineError::Json {
            path: manifest_path.display().to_string(),
            source,
        })?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut views = Vec::with_capacity(manifest.views.len());
    for rel in &manifest.views {
        views.push(parse_view_csv(&base.join(rel))?);
    }
    let mut ds = MultiViewDataset::new(views)?;
    if let Some(rel) = &manifest.labels {
        let labels = parse_labels_csv(&base.join(rel))?;
        ds = ds.with_labels(labels)?;
    }
    ds.informative_features = manifest.informative;
    Ok(ds)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| ShineError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Formats a float so it parses back bit-exactly.
pub(crate) fn fmt_exact(x: f64) -> String {
    format!("{x}")
}

/// Saves a dataset as one CSV per view (rows are samples) plus a manifest,
/// returning the manifest path. Floats are written so they round-trip
/// bit-exactly.
pub fn save_multiview(dataset: &MultiViewDataset, dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| ShineError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut view_files = Vec::new();
    for (v, x) in dataset.views.iter().enumerate() {
        let mut text = String::new();
        for s in 0..x.ncols() {
            let row: Vec<String> = (0..x.nrows()).map(|f| fmt_exact(x[(f, s)])).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        let file = format!("view_{v}.csv");
        write_file(&dir.join(&file), &text)?;
        view_files.push(file);
    }
    let labels_file = if let Some(labels) = &dataset.labels {
        let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
        write_file(&dir.join("labels.csv"), &text)?;
        Some("labels.csv".to_string())
    } else {
        None
    };
    let manifest = DatasetManifest {
        views: view_files,
        labels: labels_file,
        name: name.to_string(),
        informative: dataset.informative_features.clone(),
    };
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).map_err(|source| ShineError::Json {
        path: manifest_path.display().to_string(),
        source,
    })?;
    write_file(&manifest_path, &json)?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_two_views_with_dims() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        std::fs::write(
            d.join("a.csv"),
            (0..10)
                .map(|i| format!("{},{},{}\n", i, i * 2, i * 3))
                .collect::<String>(),
        )
        .unwrap();
        std::fs::write(
            d.join("b.csv"),
            (0..10)
                .map(|i| format!("{},{},{},{}\n", i, 1, 2, 3))
                .collect::<String>(),
        )
        .unwrap();
        std::fs::write(
            d.join("m.json"),
            r#"{"views": ["a.csv", "b.csv"], "name": "toy"}"#,
        )
        .unwrap();
        let ds = load_multiview(&d.join("m.json")).unwrap();
        assert_eq!(ds.view_dims(), vec![3, 4]);
        assert_eq!(ds.n_samples(), 10);
        assert!(ds.labels.is_none());
    }

    #[test]
    fn header_rows_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        std::fs::write(d.join("a.csv"), "f1,f2\n1.0,2.0\n3.0,4.0\n").unwrap();
        std::fs::write(d.join("m.json"), r#"{"views": ["a.csv"], "name": ""}"#).unwrap();
        let ds = load_multiview(&d.join("m.json")).unwrap();
        assert_eq!(ds.n_samples(), 2);
        assert_eq!(ds.views[0][(1, 0)], 2.0);
    }

    #[test]
    fn mismatched_sample_counts_error() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        std::fs::write(d.join("a.csv"), "1,2\n3,4\n5,6\n").unwrap();
        std::fs::write(d.join("b.csv"), "1\n2\n").unwrap();
        std::fs::write(
            d.join("m.json"),
            r#"{"views": ["a.csv", "b.csv"], "name": ""}"#,
        )
        .unwrap();
        let err = load_multiview(&d.join("m.json")).unwrap_err();
        assert!(err.to_string().contains("sample count mismatch"));
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let spec = SynthSpec {
            n: 12,
            c_true: 3,
            l: 2,
            d_info: 2,
            d_noise: 3,
            separation: 4.0,
            seed: 99,
            imbalance: None,
            d_lobe: 0,
            lobe_separation: 0.0,
        };
        let ds = synth_generate(&spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_multiview(&ds, dir.path(), "roundtrip").unwrap();
        let back = load_multiview(&manifest).unwrap();
        assert_eq!(ds.views.len(), back.views.len());
        for (a, b) in ds.views.iter().zip(&back.views) {
            assert_eq!(a, b, "matrices must round-trip bit-exactly");
        }
        assert_eq!(ds.labels, back.labels);
        assert_eq!(ds.informative_features, back.informative_features);
    }

    #[test]
    fn zscore_zeroes_constant_features_and_reports_them() {
        let x = DMatrix::from_row_slice(2, 4, &[5.0, 5.0, 5.0, 5.0, 1.0, 2.0, 3.0, 4.0]);
        let ds = MultiViewDataset::new(vec![x]).unwrap();
        let out = zscore(&ds);
        assert_eq!(out.constant_features, vec![FeatureRef::new(0, 0)]);
        assert!(out.dataset.views[0].row(0).iter().all(|&e| e == 0.0));
        let row1 = out.dataset.views[0].row(1);
        let mean: f64 = row1.iter().sum::<f64>() / 4.0;
        let var: f64 = row1.iter().map(|&e| (e - mean).powi(2)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zscore_is_idempotent() {
        let spec = SynthSpec::default();
        let ds = synth_generate(&spec).unwrap();
        let once = zscore(&ds).dataset;
        let twice = zscore(&once).dataset;
        for (a, b) in once.views.iter().zip(&twice.views) {
            assert!((a - b).abs().max() < 1e-9);
        }
    }

    #[test]
    fn synth_is_deterministic_and_balanced() {
        let spec = SynthSpec {
            n: 19,
            c_true: 4,
            ..SynthSpec::default()
        };
        let a = synth_generate(&spec).unwrap();
        let b = synth_generate(&spec).unwrap();
        for (x, y) in a.views.iter().zip(&b.views) {
            assert_eq!(x, y);
        }
        let labels = a.labels.as_ref().unwrap();
        let mut counts = vec![0usize; 4];
        for &l in labels {
            counts[l] += 1;
        }
        let max = counts.iter().max().unwrap();
        let min = counts.iter().min().unwrap();
        assert!(max - min <= 1, "counts {counts:?}");
        assert_eq!(
            a.informative_features.as_ref().unwrap().len(),
            spec.l * spec.d_info
        );
    }

    #[test]
    fn imbalanced_sizes_sum_to_n() {
        let spec = SynthSpec {
            n: 50,
            c_true: 3,
            imbalance: Some(4.0),
            ..SynthSpec::default()
        };
        let ds = synth_generate(&spec).unwrap();
        let labels = ds.labels.unwrap();
        assert_eq!(labels.len(), 50);
        let mut counts = [0usize; 3];
        for &l in &labels {
            counts[l] += 1;
        }
        assert!(counts.iter().all(|&c| c >= 2));
        assert!(counts[2] > counts[0]);
    }

    #[test]
    fn variance_ranking_finds_planted_features() {
        // generator calibration: with separation 6 and 5 informative among
        // 50 features per view, variance puts >= 80% of the planted features
        // in the top 20%
        let spec = SynthSpec {
            n: 300,
            c_true: 4,
            l: 3,
            d_info: 5,
            d_noise: 45,
            separation: 6.0,
            seed: 7,
            imbalance: None,
            d_lobe: 0,
            lobe_separation: 0.0,
        };
        let ds = synth_generate(&spec).unwrap();
        let mut variances: Vec<(FeatureRef, f64)> = Vec::new();
        for (v, x) in ds.views.iter().enumerate() {
            for f in 0..x.nrows() {
                let mean: f64 = x.row(f).iter().sum::<f64>() / spec.n as f64;
                let var: f64 =
                    x.row(f).iter().map(|&e| (e - mean).powi(2)).sum::<f64>() / spec.n as f64;
                variances.push((FeatureRef::new(v, f), var));
            }
        }
        variances.sort_by(|a, b| b.1.total_cmp(&a.1));
        let top: Vec<FeatureRef> = variances
            .iter()
            .take(variances.len() / 5)
            .map(|(f, _)| *f)
            .collect();
        let informative = ds.informative_features.as_ref().unwrap();
        let hits = informative.iter().filter(|f| top.contains(f)).count();
        assert!(
            hits as f64 >= 0.8 * informative.len() as f64,
            "only {hits}/{} planted features in the top variance slice",
            informative.len()
        );
    }

    #[test]
    fn lobe_features_split_clusters_evenly() {
        let spec = SynthSpec {
            n: 40,
            c_true: 4,
            l: 2,
            d_info: 3,
            d_noise: 2,
            d_lobe: 4,
            lobe_separation: 5.0,
            separation: 6.0,
            seed: 13,
            imbalance: None,
        };
        let ds = synth_generate(&spec).unwrap();
        assert_eq!(ds.view_dims(), vec![9, 9]);
        // informative list stays restricted to the cluster block
        let informative = ds.informative_features.as_ref().unwrap();
        assert_eq!(informative.len(), 6);
        assert!(informative.iter().all(|f| f.index < 3));
        // clusters stay balanced and each splits into two equal lobes whose
        // lobe-block means actually differ
        let labels = ds.labels.as_ref().unwrap();
        let x = &ds.views[0];
        for t in 0..4 {
            let members: Vec<usize> = (0..40).filter(|&i| labels[i] == t).collect();
            assert_eq!(members.len(), 10);
            let lobe_mean = |parity: usize| -> f64 {
                let vals: Vec<f64> = members
                    .iter()
                    .enumerate()
                    .filter(|(pos, _)| pos % 2 == parity)
                    .map(|(_, &i)| x[(3, i)])
                    .collect();
                vals.iter().sum::<f64>() / vals.len() as f64
            };
            assert!((lobe_mean(0) - lobe_mean(1)).abs() > 0.5);
        }

        // lobe-free spec with d_lobe but no separation is rejected
        let bad = SynthSpec {
            d_lobe: 2,
            lobe_separation: 0.0,
            ..SynthSpec::default()
        };
        assert!(synth_generate(&bad).is_err());
    }

    #[test]
    fn rejects_bad_specs() {
        let spec = SynthSpec {
            n: 5,
            c_true: 3,
            ..SynthSpec::default()
        };
        assert!(synth_generate(&spec).is_err());
        let spec = SynthSpec {
            separation: 0.0,
            ..SynthSpec::default()
        };
        assert!(synth_generate(&spec).is_err());
    }
}
