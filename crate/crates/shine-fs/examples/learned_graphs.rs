//! Inspect the learned first-order, second-order, and hybrid graphs: how
//! many neighbor links stay inside the true clusters.
//!
//! ```sh
//! cargo run --example learned_graphs
//! ```

use shine_fs::data::{synth_generate, SynthSpec};
use shine_fs::graph::init_knn_graph;
use shine_fs::model::{HyperParams, KSparseRowGraph};
use shine_fs::optim::fit;

fn intra_cluster_weight(graph: &KSparseRowGraph, labels: &[usize]) -> f64 {
    let mut total = 0.0;
    let mut intra = 0.0;
    for i in 0..graph.n() {
        for &(j, w) in graph.row(i) {
            total += w;
            if labels[i] == labels[j] {
                intra += w;
            }
        }
    }
    intra / total
}

fn main() -> shine_fs::Result<()> {
    let spec = SynthSpec {
        n: 200,
        c_true: 4,
        l: 3,
        d_info: 5,
        d_noise: 30,
        separation: 5.0,
        seed: 23,
        ..SynthSpec::default()
    };
    let dataset = synth_generate(&spec)?;
    let labels = dataset.labels.clone().unwrap();

    let knn = init_knn_graph(&dataset, 5)?;
    println!(
        "raw kNN graph      : {:.1}% of edge weight intra-cluster",
        100.0 * intra_cluster_weight(&knn, &labels)
    );

    let params = HyperParams {
        k: 5,
        m: 4,
        c: 4,
        seed: 2,
        ..HyperParams::default()
    };
    let result = fit(&dataset, &params)?;
    println!(
        "learned G          : {:.1}% intra-cluster",
        100.0 * intra_cluster_weight(&result.state.g, &labels)
    );
    println!(
        "learned S          : {:.1}% intra-cluster",
        100.0 * intra_cluster_weight(&result.state.s, &labels)
    );

    // adaptive regularizers recorded by the last updates
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    println!(
        "mean adaptive regularizers: lambda_G {:.4}, lambda_S {:.6}",
        mean(&result.state.lambda_g),
        mean(&result.state.lambda_s)
    );
    Ok(())
}
