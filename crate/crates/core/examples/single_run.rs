//! One run on the default landscape, printing the trajectory every 50 ticks.

use ablum::experiment::{run_single, ExperimentConfig};

fn main() -> ablum::Result<()> {
    let cfg = ExperimentConfig::default();
    let out = run_single(&cfg, 1, "single")?;
    for row in out.trajectory.rows.iter().step_by(50) {
        println!(
            "tick {:>4}  C {:.3}  MI {:.3}  HI {:.3}",
            row.tick,
            row.shares.c(),
            row.shares.mi(),
            row.shares.hi()
        );
    }
    let s = &out.summary;
    println!("stabilised at {:?}, mesh {:.1}", s.stabilised_at, out.mesh);
    Ok(())
}
