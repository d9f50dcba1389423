//! Writes the capital fields, initial map and social network of the default setup.

use std::fs;

use ablum::experiment::ExperimentConfig;
use ablum::network::{NetworkConfig, SocialNetwork};

fn main() -> ablum::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.network.n_tele = 500;
    let dir = std::env::temp_dir().join("ablum_landscape");
    fs::create_dir_all(&dir).expect("temp dir");

    let fields = cfg.capital_fields(cfg.seed)?;
    println!("mean c_prod {:.3}, mean c_nat {:.3}", fields.mean_prod(), fields.mean_nat());
    let state = cfg.build_state(cfg.seed)?;
    let net = SocialNetwork::build(
        cfg.grid.width,
        cfg.grid.height,
        &NetworkConfig {
            moore_radius: cfg.network.moore_radius,
            n_teleconnections: cfg.network.n_tele,
            seed: cfg.seed,
        },
    )?;
    println!("{} edges, mean degree {:.2}", net.edge_count(), net.mean_degree());

    fs::write(dir.join("capitals.csv"), fields.to_csv()).expect("write");
    fs::write(dir.join("initial_map.csv"), state.grid.map_csv()).expect("write");
    fs::write(dir.join("edges.csv"), net.edge_list_csv()).expect("write");
    println!("wrote {}", dir.display());
    Ok(())
}
