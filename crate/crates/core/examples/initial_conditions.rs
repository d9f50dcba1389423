//! Without medium-intensity managers at the start, none appear later.

use ablum::experiment::{load_config, run_sweep};

fn main() -> ablum::Result<()> {
    let cfg = load_config(concat!(env!("CARGO_MANIFEST_DIR"), "/presets/initial_conditions.toml"))?;
    let spec = cfg.sweep.clone().expect("preset has a sweep");
    let result = run_sweep(&cfg, &spec, None)?;
    for (v, s) in result.mean_shares() {
        println!("initial HI {:.1}  ->  C {:.2}  MI {:.2}  HI {:.2}", v[0], s.c(), s.mi(), s.hi());
    }
    Ok(())
}
