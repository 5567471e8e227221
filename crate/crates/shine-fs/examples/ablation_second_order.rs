//! Compare the full model against the variant with the second-order graph
//! frozen at zero, on data whose clusters split into lobes that fragment
//! first-order neighborhoods.
//!
//! ```sh
//! cargo run --example ablation_second_order
//! ```

use shine_fs::data::{synth_generate, SynthSpec};
use shine_fs::eval::evaluate_selection;
use shine_fs::model::HyperParams;
use shine_fs::optim::{fit, select_features, FeatureCount};

fn main() -> shine_fs::Result<()> {
    let seeds = 10u64;
    let mut full_mean = 0.0;
    let mut frozen_mean = 0.0;
    println!("seed   full    no-second-order");
    for seed in 0..seeds {
        let spec = SynthSpec {
            n: 300,
            c_true: 4,
            l: 3,
            d_info: 5,
            d_lobe: 5,
            lobe_separation: 6.0,
            d_noise: 20,
            separation: 5.0,
            seed: 6000 + seed,
            ..SynthSpec::default()
        };
        let dataset = synth_generate(&spec)?;
        let mut params = HyperParams {
            k: 5,
            m: 4,
            c: 4,
            max_outer_iters: 30,
            rel_tol: 1e-4,
            seed,
            ..HyperParams::default()
        };
        let acc = |params: &HyperParams| -> shine_fs::Result<f64> {
            let result = fit(&dataset, params)?;
            let selected = select_features(&result, FeatureCount::Ratio(0.2))?;
            Ok(evaluate_selection(&dataset, &selected, 4, 10, seed)?.acc_mean)
        };
        let full = acc(&params)?;
        params.disable_second_order = true;
        let frozen = acc(&params)?;
        println!("{seed}      {full:.3}   {frozen:.3}");
        full_mean += full / seeds as f64;
        frozen_mean += frozen / seeds as f64;
    }
    println!("\nmean   {full_mean:.3}   {frozen_mean:.3}");
    Ok(())
}
