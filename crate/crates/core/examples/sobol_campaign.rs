//! Reduced global sensitivity campaign; prints total-effect rankings.
//!
//! Pass a base sample size to override the preset, e.g. `-- 32` for a quick look.

use ablum::experiment::{load_config, run_sobol, METRIC_NAMES};
use ablum::sensitivity::ParameterSpace;

fn main() -> ablum::Result<()> {
    let cfg = load_config(concat!(env!("CARGO_MANIFEST_DIR"), "/presets/sensitivity.toml"))?;
    let mut settings = cfg.sobol.clone().unwrap_or_default();
    if let Some(n) = std::env::args().nth(1).and_then(|a| a.parse().ok()) {
        settings.n_base = n;
    }
    let campaign = run_sobol(&cfg, &ParameterSpace::default_model(), &settings, None)?;
    for m in METRIC_NAMES {
        let top: Vec<String> = campaign
            .ranking(m)
            .iter()
            .take(4)
            .map(|(n, st)| format!("{n} {st:.2}"))
            .collect();
        println!("{m:>9}: {}", top.join(", "));
    }
    Ok(())
}
