//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiment::config::{load_config, ExperimentConfig, SobolSection, SweepParam, SweepSpec};
use crate::experiment::run::{self, write_file};
use crate::landscape::{AftKind, LandscapeGrid};
use crate::metrics::{intensity_shares, mesh_of_labels, patch_decomposition, Connectivity};
use crate::sensitivity::ParameterSpace;

#[derive(Debug, Parser)]
#[command(name = "ablum", version, about = "Agent-based land-use model with social norms")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Experiment configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Replicates per run or sweep point; overrides the configuration.
    #[arg(long, global = true)]
    reps: Option<u32>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "ABLUM_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the model until the shares settle and write trajectory, metrics and map.
    Run,
    /// Sweep one or two parameters and write a long-format results table.
    Sweep {
        /// `name=min:max:steps`; repeat for a second parameter. Overrides `[sweep]`.
        #[arg(long = "param")]
        params: Vec<String>,
    },
    /// Run the full attitude schedule and write the trajectory with the scheduled attitude.
    Hysteresis,
    /// Run a Sobol sensitivity campaign.
    Sobol {
        #[arg(long)]
        n_base: Option<usize>,
        #[arg(long)]
        second_order: bool,
    },
    /// Write the capital fields and the initial land-use map.
    Landscape,
    /// Recompute shares and mesh size from a land-use map CSV.
    Metrics {
        #[arg(long)]
        map: PathBuf,
        /// Patch adjacency: 4 or 8.
        #[arg(long, default_value_t = 4)]
        connectivity: u8,
    },
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code: 0 on success, 2 for usage and configuration
/// errors, 1 for other failures.
pub fn cli_entry<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    if argv.len() <= 1 {
        use clap::CommandFactory;
        let _ = Cli::command().print_help();
        return 2;
    }
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Usage(_) | Error::Config { .. } | Error::Parse { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn base_config(g: &Global) -> Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = g.reps {
        cfg.replications = reps;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let cfg = base_config(g)?;
    let out = &g.out;
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Run => {
            for r in run::run_replicates(&cfg, g.threads)? {
                let dir = r.write(out)?;
                let _ = writeln!(stdout, "{}", dir.display());
            }
        }
        Command::Sweep { params } => {
            let mut spec = if params.is_empty() {
                cfg.sweep.clone().ok_or_else(|| {
                    Error::Usage("no sweep given: pass --param or add a [sweep] section".into())
                })?
            } else {
                SweepSpec {
                    params: params.iter().map(|p| SweepParam::parse(p)).collect::<Result<_>>()?,
                    replications: cfg.sweep.as_ref().map_or(1, |s| s.replications),
                }
            };
            if let Some(reps) = g.reps {
                spec.replications = reps;
            }
            let result = run::run_sweep(&cfg, &spec, g.threads)?;
            let path = out.join(format!("{}_sweep.csv", cfg.name));
            write_file(&path, &result.to_csv())?;
            let _ = writeln!(stdout, "{}", path.display());
        }
        Command::Hysteresis => {
            let h = run::run_hysteresis(&cfg, cfg.seed, &cfg.name)?;
            let dir = h.write(out)?;
            let _ = writeln!(
                stdout,
                "{}  (L1 change in shares: {:.6})",
                dir.display(),
                h.l1_change()
            );
        }
        Command::Sobol {
            n_base,
            second_order,
        } => {
            let mut settings = cfg.sobol.unwrap_or_default();
            if let Some(n) = n_base {
                settings.n_base = n;
            }
            if second_order {
                settings.second_order = true;
            }
            if let Some(reps) = g.reps {
                settings.replications = reps;
            }
            sobol(&cfg, &settings, out, g.threads, &mut stdout)?;
        }
        Command::Landscape => {
            let fields = cfg.capital_fields(cfg.seed)?;
            let state = cfg.build_state(cfg.seed)?;
            let dir = out.join(&cfg.name);
            write_file(&dir.join("capitals.csv"), &fields.to_csv())?;
            write_file(&dir.join("initial_map.csv"), &state.grid.map_csv())?;
            let _ = writeln!(stdout, "{}", dir.display());
        }
        Command::Metrics { map, connectivity } => {
            let conn = match connectivity {
                4 => Connectivity::Four,
                8 => Connectivity::Eight,
                other => return Err(Error::Usage(format!("connectivity must be 4 or 8, got {other}"))),
            };
            let (w, h, labels) = read_map(&map)?;
            let shares = intensity_shares(&grid_from_labels(w, h, &labels));
            let _ = writeln!(stdout, "share_c,share_mi,share_hi,mesh,patches");
            let grid = grid_from_labels(w, h, &labels);
            let _ = writeln!(
                stdout,
                "{:.6},{:.6},{:.6},{:.6},{}",
                shares.c(),
                shares.mi(),
                shares.hi(),
                mesh_of_labels(w, h, &labels, conn),
                patch_decomposition(&grid, conn).patch_count()
            );
        }
    }
    Ok(())
}

fn sobol(
    cfg: &ExperimentConfig,
    settings: &SobolSection,
    out: &Path,
    threads: Option<usize>,
    stdout: &mut impl Write,
) -> Result<()> {
    let space = ParameterSpace::default_model();
    let campaign = run::run_sobol(cfg, &space, settings, threads)?;
    campaign.write(out)?;
    let _ = writeln!(stdout, "{}", out.join("sobol_design.csv").display());
    let _ = writeln!(stdout, "{}", out.join("sobol_indices.json").display());
    Ok(())
}

/// Reads an `x,y,aft_id` map and returns (width, height, row-major labels).
pub fn read_map(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => parse_err(format!("{other:?}")),
    })?;
    let headers = reader.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "y", "aft_id"] {
        return Err(parse_err("expected header x,y,aft_id".into()));
    }
    let mut cells = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        let field = |k: usize| -> Result<usize> {
            rec[k]
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("row {}: bad value `{}`", line + 2, &rec[k])))
        };
        let (x, y, id) = (field(0)?, field(1)?, field(2)?);
        if AftKind::from_id(id as u8).is_none() || id > 2 {
            return Err(parse_err(format!("row {}: aft_id {id} is not 0, 1 or 2", line + 2)));
        }
        cells.push((x, y, id as u8));
    }
    let w = cells.iter().map(|c| c.0).max().map_or(0, |m| m + 1);
    let h = cells.iter().map(|c| c.1).max().map_or(0, |m| m + 1);
    if w * h != cells.len() || w == 0 {
        return Err(parse_err(format!("{} rows do not cover a {w}x{h} grid", cells.len())));
    }
    let mut labels = vec![u8::MAX; w * h];
    for (x, y, id) in cells {
        labels[y * w + x] = id;
    }
    if labels.contains(&u8::MAX) {
        return Err(parse_err("duplicate cells in map".into()));
    }
    Ok((w, h, labels))
}

fn grid_from_labels(w: usize, h: usize, labels: &[u8]) -> LandscapeGrid {
    let fields = crate::landscape::CapitalFields {
        width: w,
        height: h,
        c_prod: vec![0.0; w * h],
        c_nat: vec![0.0; w * h],
    };
    let mut grid = LandscapeGrid::from_capitals(&fields, Default::default());
    for (cell, &id) in grid.cells.iter_mut().zip(labels) {
        cell.aft = AftKind::from_id(id).expect("checked");
    }
    grid
}
