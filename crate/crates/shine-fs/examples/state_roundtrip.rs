//! Export a fitted model state as a CSV bundle, reload it, and verify the
//! matrices survive bit-for-bit.
//!
//! ```sh
//! cargo run --example state_roundtrip
//! ```

use shine_fs::data::{synth_generate, SynthSpec};
use shine_fs::io::{export_state, import_state};
use shine_fs::model::HyperParams;
use shine_fs::optim::fit;

fn main() -> shine_fs::Result<()> {
    let dataset = synth_generate(&SynthSpec {
        n: 80,
        c_true: 3,
        l: 2,
        d_info: 4,
        d_noise: 8,
        separation: 6.0,
        seed: 5,
        ..SynthSpec::default()
    })?;
    let params = HyperParams {
        k: 4,
        m: 3,
        c: 3,
        seed: 8,
        ..HyperParams::default()
    };
    let result = fit(&dataset, &params)?;

    let dir = std::env::temp_dir().join("shine-fs-state-roundtrip");
    export_state(&dir, &result.state, &params)?;
    println!("state bundle written to {}", dir.display());
    for entry in std::fs::read_dir(&dir).unwrap() {
        println!("  {}", entry.unwrap().file_name().to_string_lossy());
    }

    let (reloaded, params_back) = import_state(&dir)?;
    assert_eq!(params, params_back);
    assert_eq!(result.state.a, reloaded.a);
    assert_eq!(result.state.anchors, reloaded.anchors);
    assert_eq!(result.state.f, reloaded.f);
    assert_eq!(result.state.g.to_dense(), reloaded.g.to_dense());
    assert_eq!(result.state.s.to_dense(), reloaded.s.to_dense());
    for (a, b) in result.state.w.iter().zip(&reloaded.w) {
        assert_eq!(a, b);
    }
    println!("reloaded state matches bit-for-bit");
    Ok(())
}
