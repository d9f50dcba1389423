//! Attitude by norm-weight sweep; prints the mean final shares at each point.

use ablum::experiment::{load_config, run_sweep};

fn main() -> ablum::Result<()> {
    let cfg = load_config(concat!(env!("CARGO_MANIFEST_DIR"), "/presets/regime_map.toml"))?;
    let spec = cfg.sweep.clone().expect("preset has a sweep");
    let result = run_sweep(&cfg, &spec, None)?;
    println!("{:>6} {:>6}   C     MI    HI", "A", "w");
    for (v, s) in result.mean_shares() {
        println!("{:>6.2} {:>6.2}  {:.2}  {:.2}  {:.2}", v[0], v[1], s.c(), s.mi(), s.hi());
    }
    Ok(())
}
