//! Fit the model on planted synthetic data and watch the objective settle.
//!
//! ```sh
//! cargo run --example fit_synthetic
//! ```

use shine_fs::data::{synth_generate, SynthSpec};
use shine_fs::model::HyperParams;
use shine_fs::optim::fit;

fn main() -> shine_fs::Result<()> {
    let spec = SynthSpec {
        n: 200,
        c_true: 4,
        l: 3,
        d_info: 5,
        d_noise: 20,
        separation: 6.0,
        seed: 7,
        ..SynthSpec::default()
    };
    let dataset = synth_generate(&spec)?;
    println!(
        "dataset: {} views, {} samples, {} features total",
        dataset.n_views(),
        dataset.n_samples(),
        dataset.total_features()
    );

    let params = HyperParams {
        gamma: 1.0,
        beta: 1.0,
        eta: 1.0,
        k: 5,
        m: 4,
        c: 4,
        seed: 42,
        ..HyperParams::default()
    };
    let result = fit(&dataset, &params)?;

    println!(
        "{} after {} iterations",
        if result.converged { "converged" } else { "stopped" },
        result.iterations
    );
    println!("objective trace:");
    for (i, value) in result.objective_trace.iter().enumerate() {
        println!("  iter {i:2}: {value:.6}");
    }
    println!("view weights: {:?}", result.state.alpha);
    println!("top 10 features (view, index, row norm):");
    for (feature, score) in result.ranking.iter().zip(&result.scores).take(10) {
        println!("  view {} feature {:2}  {score:.4}", feature.view, feature.index);
    }
    Ok(())
}
