//! Ramp the mean attitude up and back down and compare start and end shares.

use ablum::experiment::{load_config, run_hysteresis};

fn main() -> ablum::Result<()> {
    let cfg = load_config(concat!(env!("CARGO_MANIFEST_DIR"), "/presets/attitude_ramp.toml"))?;
    let h = run_hysteresis(&cfg, cfg.seed, "ramp")?;
    for row in h.run.trajectory.rows.iter().step_by(100) {
        println!(
            "tick {:>4}  attitude {:+.2}  C {:.3}  MI {:.3}  HI {:.3}",
            row.tick,
            h.schedule.value_at(row.tick),
            row.shares.c(),
            row.shares.mi(),
            row.shares.hi()
        );
    }
    println!("L1 distance between initial and final shares: {:.3}", h.l1_change());
    Ok(())
}
