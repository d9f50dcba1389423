//! Mean effective mesh size over threshold ceiling and neighbourhood radius.

use std::collections::BTreeMap;

use ablum::experiment::{load_config, run_sweep, SweepParam, SweepSpec};

fn main() -> ablum::Result<()> {
    let cfg = load_config(concat!(env!("CARGO_MANIFEST_DIR"), "/presets/connectivity.toml"))?;
    let spec = SweepSpec {
        params: vec![
            SweepParam::parse("git_upper_L=0.05:1:5")?,
            SweepParam::parse("moore_radius=1:4:4")?,
        ],
        replications: 3,
    };
    let result = run_sweep(&cfg, &spec, None)?;
    let mut mesh: BTreeMap<(u64, u64), Vec<f64>> = BTreeMap::new();
    for rec in &result.records {
        let key = ((rec.values[0] * 1000.0) as u64, rec.values[1] as u64);
        mesh.entry(key).or_default().push(rec.output.mesh);
    }
    println!("   L   radius   mesh");
    for ((l, r), m) in mesh {
        println!("{:.2}   {r:>5}   {:>6.0}", l as f64 / 1000.0, m.iter().sum::<f64>() / m.len() as f64);
    }
    Ok(())
}
