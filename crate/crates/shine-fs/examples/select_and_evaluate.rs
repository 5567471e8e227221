//! Select a feature subset and score it with repeated k-means against the
//! planted ground truth.
//!
//! ```sh
//! cargo run --example select_and_evaluate
//! ```

use shine_fs::data::{synth_generate, SynthSpec};
use shine_fs::eval::evaluate_selection;
use shine_fs::model::{FeatureRef, HyperParams};
use shine_fs::optim::{fit, select_features, FeatureCount};

fn main() -> shine_fs::Result<()> {
    let spec = SynthSpec {
        n: 300,
        c_true: 4,
        l: 3,
        d_info: 5,
        d_noise: 45,
        separation: 6.0,
        seed: 3,
        ..SynthSpec::default()
    };
    let dataset = synth_generate(&spec)?;
    let params = HyperParams {
        k: 5,
        m: 4,
        c: 4,
        seed: 11,
        ..HyperParams::default()
    };

    let result = fit(&dataset, &params)?;
    let selected = select_features(&result, FeatureCount::Ratio(0.2))?;
    let planted = dataset.informative_features.clone().unwrap();
    let hits = planted.iter().filter(|f| selected.contains(f)).count();
    println!(
        "selected {} of {} features; {hits}/{} planted features recovered",
        selected.len(),
        dataset.total_features(),
        planted.len()
    );

    let report = evaluate_selection(&dataset, &selected, 4, 30, 99)?;
    println!(
        "selected subset : acc {:.3} +/- {:.3}, nmi {:.3} +/- {:.3}",
        report.acc_mean, report.acc_std, report.nmi_mean, report.nmi_std
    );

    let all: Vec<FeatureRef> = (0..dataset.n_views())
        .flat_map(|v| (0..dataset.views[v].nrows()).map(move |i| FeatureRef::new(v, i)))
        .collect();
    let full = evaluate_selection(&dataset, &all, 4, 30, 99)?;
    println!(
        "all features    : acc {:.3} +/- {:.3}, nmi {:.3} +/- {:.3}",
        full.acc_mean, full.acc_std, full.nmi_mean, full.nmi_std
    );
    Ok(())
}
