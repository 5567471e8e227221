//! Save a dataset as per-view CSVs plus a manifest, reload it, and fit from
//! the loaded copy — the same path the CLI uses for real data.
//!
//! ```sh
//! cargo run --example csv_datasets
//! ```

use shine_fs::data::{load_multiview, save_multiview, synth_generate, zscore, SynthSpec};
use shine_fs::model::HyperParams;
use shine_fs::optim::fit;

fn main() -> shine_fs::Result<()> {
    let dataset = synth_generate(&SynthSpec {
        n: 100,
        c_true: 3,
        l: 2,
        d_info: 4,
        d_noise: 10,
        separation: 6.0,
        seed: 31,
        ..SynthSpec::default()
    })?;

    let dir = std::env::temp_dir().join("shine-fs-csv-example");
    let manifest = save_multiview(&dataset, &dir, "csv-example")?;
    println!("dataset saved; manifest at {}", manifest.display());

    let loaded = load_multiview(&manifest)?;
    assert_eq!(loaded.view_dims(), dataset.view_dims());
    assert_eq!(loaded.labels, dataset.labels);

    // standardization report: constant features get zeroed and listed
    let standardized = zscore(&loaded);
    println!(
        "{} constant features zeroed by standardization",
        standardized.constant_features.len()
    );

    let params = HyperParams {
        k: 4,
        m: 3,
        c: 3,
        seed: 0,
        ..HyperParams::default()
    };
    let result = fit(&loaded, &params)?;
    println!(
        "fit from the reloaded CSV dataset: {} in {} iterations",
        if result.converged { "converged" } else { "stopped" },
        result.iterations
    );
    Ok(())
}
