//! Single runs, parameter sweeps, attitude-ramp runs and Sobol campaigns, plus
//! their CSV/JSON outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{AttitudeSchedule, Trajectory};
use crate::error::{Error, Result};
use crate::experiment::config::{ExperimentConfig, SobolSection, SweepSpec};
use crate::landscape::{LandscapeGrid, Shares};
use crate::metrics::{mesh_connectivity, share_trajectory_summary, RunSummary};
use crate::rng::replicate_seed;
use crate::sensitivity::{map_sample_to_config, saltelli_sample, sobol_indices, ParameterSpace, SobolIndices};

pub const TRAJECTORY_HEADER: &str = "tick,share_c,share_mi,share_hi,s_mat,s_nm,mean_attitude";
pub const METRICS_HEADER: &str =
    "run_id,seed,final_share_c,final_share_mi,final_share_hi,s_mat,s_nm,mesh,stabilised_at";
pub const METRIC_NAMES: [&str; 6] = ["share_c", "share_mi", "share_hi", "s_mat", "s_nm", "mesh"];

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub run_id: String,
    pub seed: u64,
    pub trajectory: Trajectory,
    pub summary: RunSummary,
    pub mesh: f64,
    pub initial_shares: Shares,
    pub grid: LandscapeGrid,
}

impl RunOutput {
    pub fn metric(&self, name: &str) -> Option<f64> {
        let s = &self.summary;
        Some(match name {
            "share_c" => s.final_shares.c(),
            "share_mi" => s.final_shares.mi(),
            "share_hi" => s.final_shares.hi(),
            "s_mat" => s.s_mat,
            "s_nm" => s.s_nm,
            "mesh" => self.mesh,
            _ => return None,
        })
    }

    pub fn trajectory_csv(&self) -> String {
        trajectory_csv(&self.trajectory, None)
    }

    pub fn metrics_csv(&self) -> String {
        format!("{METRICS_HEADER}\n{}\n", self.metrics_row())
    }

    pub fn metrics_row(&self) -> String {
        let s = &self.summary;
        format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            self.run_id,
            self.seed,
            s.final_shares.c(),
            s.final_shares.mi(),
            s.final_shares.hi(),
            s.s_mat,
            s.s_nm,
            self.mesh,
            stabilised_field(s.stabilised_at)
        )
    }

    /// Writes `trajectory.csv`, `metrics.csv` and `map.csv` under `out/<run_id>/`.
    pub fn write(&self, out: &Path) -> Result<PathBuf> {
        let dir = out.join(&self.run_id);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        write_file(&dir.join("trajectory.csv"), &self.trajectory_csv())?;
        write_file(&dir.join("metrics.csv"), &self.metrics_csv())?;
        write_file(&dir.join("map.csv"), &self.grid.map_csv())?;
        Ok(dir)
    }
}

fn stabilised_field(t: Option<u64>) -> String {
    t.map_or_else(|| "-1".to_string(), |t| t.to_string())
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Trajectory table; with a schedule an extra `scheduled_attitude` column is appended.
pub fn trajectory_csv(traj: &Trajectory, schedule: Option<&AttitudeSchedule>) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    if schedule.is_some() {
        out.push_str(",scheduled_attitude");
    }
    out.push('\n');
    for r in &traj.rows {
        let _ = write!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.tick,
            r.shares.c(),
            r.shares.mi(),
            r.shares.hi(),
            r.s_mat,
            r.s_nm,
            r.mean_attitude
        );
        if let Some(s) = schedule {
            let _ = write!(out, ",{:.6}", s.value_at(r.tick));
        }
        out.push('\n');
    }
    out
}

/// Runs one replicate until the shares settle.
pub fn run_single(cfg: &ExperimentConfig, seed: u64, run_id: &str) -> Result<RunOutput> {
    let mut state = cfg.build_state(seed)?;
    let initial_shares = state.shares();
    let traj = state.run_until_stable(cfg.run.stopping_rule());
    finish(cfg, seed, run_id, traj, state.grid, initial_shares)
}

fn finish(
    cfg: &ExperimentConfig,
    seed: u64,
    run_id: &str,
    trajectory: Trajectory,
    grid: LandscapeGrid,
    initial_shares: Shares,
) -> Result<RunOutput> {
    let summary = share_trajectory_summary(&trajectory)?;
    let mesh = mesh_connectivity(&grid, cfg.run.connectivity());
    Ok(RunOutput {
        run_id: run_id.to_string(),
        seed,
        trajectory,
        summary,
        mesh,
        initial_shares,
        grid,
    })
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))
}

/// Runs `cfg.replications` replicates with seeds `seed, seed + 1, ...`.
pub fn run_replicates(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<RunOutput>> {
    cfg.validate()?;
    let reps = cfg.replications as u64;
    pool(threads)?.install(|| {
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let id = if reps == 1 {
                    cfg.name.clone()
                } else {
                    format!("{}_r{r}", cfg.name)
                };
                run_single(cfg, replicate_seed(cfg.seed, r), &id)
            })
            .collect()
    })
}

/// One row of a sweep table.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub point: usize,
    pub values: Vec<f64>,
    pub rep: u32,
    pub output: RunOutput,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub params: Vec<String>,
    pub records: Vec<SweepRecord>,
}

impl SweepResult {
    /// Long-format table, one row per (point, replicate).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("point");
        for p in &self.params {
            let _ = write!(out, ",{p}");
        }
        out.push_str(",rep,seed,final_share_c,final_share_mi,final_share_hi,s_mat,s_nm,mesh,stabilised_at\n");
        for rec in &self.records {
            let _ = write!(out, "{}", rec.point);
            for v in &rec.values {
                let _ = write!(out, ",{v:.6}");
            }
            let s = &rec.output.summary;
            let _ = writeln!(
                out,
                ",{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
                rec.rep,
                rec.output.seed,
                s.final_shares.c(),
                s.final_shares.mi(),
                s.final_shares.hi(),
                s.s_mat,
                s.s_nm,
                rec.output.mesh,
                stabilised_field(s.stabilised_at)
            );
        }
        out
    }

    /// Mean final shares per grid point, in point order.
    pub fn mean_shares(&self) -> Vec<(Vec<f64>, Shares)> {
        let mut acc: BTreeMap<usize, (Vec<f64>, [f64; 3], usize)> = BTreeMap::new();
        for rec in &self.records {
            let e = acc.entry(rec.point).or_insert((rec.values.clone(), [0.0; 3], 0));
            for k in 0..3 {
                e.1[k] += rec.output.summary.final_shares.0[k];
            }
            e.2 += 1;
        }
        acc.into_values()
            .map(|(v, s, n)| (v, Shares(s.map(|x| x / n as f64))))
            .collect()
    }
}

/// Runs every grid point of `spec` for `spec.replications` seeds. Replicate
/// `r` uses seed `cfg.seed + r` at every point.
pub fn run_sweep(cfg: &ExperimentConfig, spec: &SweepSpec, threads: Option<usize>) -> Result<SweepResult> {
    let mut base = cfg.clone();
    base.sweep = None;
    spec.validate(&base)?;
    let points = spec.points();
    let mut jobs = Vec::with_capacity(points.len() * spec.replications as usize);
    for (pi, values) in points.iter().enumerate() {
        let mut point_cfg = base.clone();
        for (p, &v) in spec.params.iter().zip(values) {
            point_cfg.set_param(&p.name, v)?;
        }
        point_cfg.validate()?;
        for rep in 0..spec.replications {
            jobs.push((pi, values.clone(), rep, point_cfg.clone()));
        }
    }
    let records = pool(threads)?.install(|| {
        jobs.into_par_iter()
            .map(|(point, values, rep, c)| {
                let seed = replicate_seed(c.seed, rep as u64);
                let id = format!("{}_p{point}_r{rep}", c.name);
                run_single(&c, seed, &id).map(|output| SweepRecord {
                    point,
                    values,
                    rep,
                    output,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SweepResult {
        params: spec.params.iter().map(|p| p.name.clone()).collect(),
        records,
    })
}

#[derive(Debug, Clone)]
pub struct HysteresisOutput {
    pub schedule: AttitudeSchedule,
    pub run: RunOutput,
}

impl HysteresisOutput {
    pub fn trajectory_csv(&self) -> String {
        trajectory_csv(&self.run.trajectory, Some(&self.schedule))
    }

    /// L1 distance between final and initial shares.
    pub fn l1_change(&self) -> f64 {
        self.run.summary.final_shares.l1_distance(&self.run.initial_shares)
    }

    pub fn write(&self, out: &Path) -> Result<PathBuf> {
        let dir = self.run.write(out)?;
        write_file(&dir.join("trajectory.csv"), &self.trajectory_csv())?;
        Ok(dir)
    }
}

/// The attitude path used when a configuration has no `[schedule]`: from
/// -1 up to +1 and back over 400-tick legs.
pub fn default_ramp() -> AttitudeSchedule {
    AttitudeSchedule::ramp_up_down(-1.0, 1.0, 400, 0)
}

/// Runs through the whole attitude schedule without early stopping.
pub fn run_hysteresis(cfg: &ExperimentConfig, seed: u64, run_id: &str) -> Result<HysteresisOutput> {
    let mut cfg = cfg.clone();
    let schedule = match &cfg.schedule {
        Some(s) => s.schedule(),
        None => {
            let s = default_ramp();
            cfg.schedule = Some(crate::experiment::config::ScheduleSection {
                breakpoints: s.breakpoints.clone(),
            });
            s
        }
    };
    let mut state = cfg.build_state(seed)?;
    let initial_shares = state.shares();
    let traj = state.run_for(schedule.end_tick(), cfg.run.stopping_rule());
    let run = finish(&cfg, seed, run_id, traj, state.grid, initial_shares)?;
    Ok(HysteresisOutput { schedule, run })
}

#[derive(Debug, Clone, Serialize)]
pub struct SobolCampaign {
    pub params: Vec<String>,
    pub design: Vec<Vec<f64>>,
    /// Per metric, one output per design row (replicate mean).
    pub outputs: BTreeMap<String, Vec<f64>>,
    /// `None` where the metric did not vary over the design.
    pub indices: BTreeMap<String, Option<SobolIndices>>,
}

impl SobolCampaign {
    pub fn design_csv(&self) -> String {
        let mut out = String::from("row");
        for p in &self.params {
            let _ = write!(out, ",{p}");
        }
        for m in METRIC_NAMES {
            let _ = write!(out, ",{m}");
        }
        out.push('\n');
        for (i, row) in self.design.iter().enumerate() {
            let _ = write!(out, "{i}");
            for v in row {
                let _ = write!(out, ",{v:.6}");
            }
            for m in METRIC_NAMES {
                let _ = write!(out, ",{:.6}", self.outputs[m][i]);
            }
            out.push('\n');
        }
        out
    }

    pub fn indices_json(&self) -> String {
        serde_json::to_string_pretty(&self.indices).expect("indices serialise")
    }

    pub fn write(&self, out: &Path) -> Result<()> {
        write_file(&out.join("sobol_design.csv"), &self.design_csv())?;
        write_file(&out.join("sobol_indices.json"), &self.indices_json())
    }

    /// Parameter names ordered by decreasing total-order index for `metric`.
    pub fn ranking(&self, metric: &str) -> Vec<(String, f64)> {
        let Some(Some(idx)) = self.indices.get(metric) else {
            return Vec::new();
        };
        let mut r: Vec<(String, f64)> = self.params.iter().cloned().zip(idx.st.iter().copied()).collect();
        r.sort_by(|a, b| b.1.total_cmp(&a.1));
        r
    }
}

/// Evaluates the model on a Saltelli design and computes indices for every
/// output metric.
pub fn run_sobol(
    cfg: &ExperimentConfig,
    space: &ParameterSpace,
    settings: &SobolSection,
    threads: Option<usize>,
) -> Result<SobolCampaign> {
    let design = saltelli_sample(space, settings.n_base, cfg.seed, settings.second_order)?;
    let configs = design
        .iter()
        .map(|row| map_sample_to_config(cfg, space, row, settings.scale_to_grid))
        .collect::<Result<Vec<_>>>()?;
    let reps = settings.replications.max(1) as u64;
    let values: Vec<[f64; 6]> = pool(threads)?.install(|| {
        configs
            .par_iter()
            .enumerate()
            .map(|(i, c)| {
                let mut acc = [0.0; 6];
                for r in 0..reps {
                    let out = run_single(c, replicate_seed(cfg.seed, r), &format!("sobol_{i}"))?;
                    for (k, m) in METRIC_NAMES.iter().enumerate() {
                        acc[k] += out.metric(m).expect("known metric");
                    }
                }
                Ok(acc.map(|v| v / reps as f64))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut outputs = BTreeMap::new();
    let mut indices = BTreeMap::new();
    for (k, m) in METRIC_NAMES.iter().enumerate() {
        let y: Vec<f64> = values.iter().map(|v| v[k]).collect();
        let idx = match sobol_indices(&y, space.dim(), settings.second_order, settings.bootstrap, cfg.seed) {
            Ok(idx) => Some(idx),
            Err(Error::DegenerateVariance) => None,
            Err(e) => return Err(e),
        };
        outputs.insert(m.to_string(), y);
        indices.insert(m.to_string(), idx);
    }
    Ok(SobolCampaign {
        params: space.names().iter().map(|s| s.to_string()).collect(),
        design,
        outputs,
        indices,
    })
}
