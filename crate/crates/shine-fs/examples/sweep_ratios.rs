//! Evaluate selections from 10% to 50% of the features, next to a
//! random-selection baseline.
//!
//! ```sh
//! cargo run --example sweep_ratios
//! ```

use shine_fs::data::{synth_generate, SynthSpec};
use shine_fs::eval::{default_ratios, random_baseline, sweep};
use shine_fs::model::HyperParams;

fn main() -> shine_fs::Result<()> {
    let spec = SynthSpec {
        n: 200,
        c_true: 4,
        l: 3,
        d_info: 5,
        d_noise: 25,
        separation: 5.0,
        seed: 17,
        ..SynthSpec::default()
    };
    let dataset = synth_generate(&spec)?;
    let params = HyperParams {
        k: 5,
        m: 4,
        c: 4,
        seed: 1,
        ..HyperParams::default()
    };

    let (result, reports) = sweep(&dataset, &params, &default_ratios(), 15)?;
    println!(
        "fit {} in {} iterations\n",
        if result.converged { "converged" } else { "stopped" },
        result.iterations
    );
    println!("ratio   method     acc             nmi");
    for report in &reports {
        println!(
            "{:.1}     shine-fs   {:.3} +/- {:.3} {:.3} +/- {:.3}",
            report.ratio, report.acc_mean, report.acc_std, report.nmi_mean, report.nmi_std
        );
        let base = random_baseline(&dataset, report.ratio, params.c, 15, params.seed, 10)?;
        println!(
            "{:.1}     random     {:.3} +/- {:.3} {:.3} +/- {:.3}",
            base.ratio, base.acc_mean, base.acc_std, base.nmi_mean, base.nmi_std
        );
    }
    Ok(())
}
