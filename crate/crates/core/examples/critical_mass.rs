//! Final shares across critical mass, next to the purely economic baseline.

use ablum::dynamics::DecisionRule;
use ablum::experiment::{load_config, run_sweep, SweepParam, SweepSpec};

fn main() -> ablum::Result<()> {
    let cfg = load_config(concat!(env!("CARGO_MANIFEST_DIR"), "/presets/critical_mass.toml"))?;
    let spec = cfg.sweep.clone().expect("preset has a sweep");
    for (v, s) in run_sweep(&cfg, &spec, None)?.mean_shares() {
        println!("CM {:.1}  C {:.3}  MI {:.3}  HI {:.3}", v[0], s.c(), s.mi(), s.hi());
    }

    let mut econ = cfg.clone();
    econ.behaviour.mode = DecisionRule::Economic;
    let one = SweepSpec {
        params: vec![SweepParam::parse("cm=0.5:0.5:1")?],
        replications: spec.replications,
    };
    let (_, s) = run_sweep(&econ, &one, None)?.mean_shares().remove(0);
    println!("economic  C {:.3}  MI {:.3}  HI {:.3}", s.c(), s.mi(), s.hi());
    Ok(())
}
