//! Demand-driven competition loop.
//!
//! Every tick a fixed fraction of cells (5% by default) is drawn without
//! replacement. For each drawn cell both non-incumbent AFTs compete: a
//! competitor is admissible when its utility surplus over the incumbent
//! strictly exceeds the behavioural giving-in threshold for that transition.
//! All decisions read the start-of-tick snapshot and are committed together,
//! so the evaluation order of the drawn cells does not matter.

use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::behaviour::{conformity_for, threshold_from_fraction, BehaviourGlobals};
use crate::error::{Error, Result};
use crate::landscape::{production, AftKind, AftTable, AgentFunctionalType, Cell, LandscapeGrid, Shares};
use crate::metrics::{intensity_shares, total_supply};
use crate::network::SocialNetwork;
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandState {
    pub d_mat: f64,
    pub d_nm: f64,
    pub s_mat: f64,
    pub s_nm: f64,
}

impl DemandState {
    pub fn new(d_mat: f64, d_nm: f64) -> Result<Self> {
        for (key, d) in [("demand_mat", d_mat), ("demand_nm", d_nm)] {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::config(key, format!("demand must be positive, got {d}")));
            }
        }
        Ok(DemandState {
            d_mat,
            d_nm,
            s_mat: 0.0,
            s_nm: 0.0,
        })
    }

    /// Per-unit benefit of (material, non-material) output at current supply.
    pub fn benefits(&self) -> (f64, f64) {
        (
            residual_fraction(self.d_mat, self.s_mat),
            residual_fraction(self.d_nm, self.s_nm),
        )
    }
}

fn residual_fraction(demand: f64, supply: f64) -> f64 {
    ((demand - supply) / demand).max(0.0)
}

/// Unmet fraction of demand: `max(0, (demand - supply) / demand)`.
pub fn unit_benefit(demand: f64, supply: f64) -> Result<f64> {
    if !(demand > 0.0) {
        return Err(Error::config("demand", format!("demand must be positive, got {demand}")));
    }
    Ok(residual_fraction(demand, supply))
}

pub fn utility(aft: &AgentFunctionalType, cell: &Cell, demand: &DemandState) -> f64 {
    let (b_mat, b_nm) = demand.benefits();
    utility_with(aft, cell, b_mat, b_nm)
}

fn utility_with(aft: &AgentFunctionalType, cell: &Cell, b_mat: f64, b_nm: f64) -> f64 {
    let p = production(aft, cell);
    b_mat * p.material + b_nm * p.non_material
}

/// How the threshold a competitor must beat is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    /// Logistic giving-in threshold from attitudes, norms and inertia.
    #[default]
    Behavioural,
    /// Purely economic competition: any positive surplus wins.
    Economic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub max_ticks: u64,
    pub window: u64,
    pub epsilon: f64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            max_ticks: 2000,
            window: 50,
            epsilon: 0.002,
        }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::config("run.window", "window must be at least 2"));
        }
        if self.max_ticks < self.window {
            return Err(Error::config("run.max_ticks", "max_ticks must be at least window"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("run.epsilon", "epsilon must be positive"));
        }
        Ok(())
    }
}

/// Piecewise-linear mean-attitude schedule over ticks; constant beyond the ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttitudeSchedule {
    pub breakpoints: Vec<(u64, f64)>,
}

impl AttitudeSchedule {
    pub fn new(breakpoints: Vec<(u64, f64)>) -> Result<Self> {
        let s = AttitudeSchedule { breakpoints };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(attitude: f64) -> Self {
        AttitudeSchedule {
            breakpoints: vec![(0, attitude)],
        }
    }

    /// Linear ramp `from -> to -> from`, each leg lasting `leg_ticks`, with a
    /// hold of `hold_ticks` at the start, the turning point and the end.
    pub fn ramp_up_down(from: f64, to: f64, leg_ticks: u64, hold_ticks: u64) -> Self {
        let mut bp = vec![(0, from)];
        let mut t = 0;
        if hold_ticks > 0 {
            t += hold_ticks;
            bp.push((t, from));
        }
        t += leg_ticks;
        bp.push((t, to));
        if hold_ticks > 0 {
            t += hold_ticks;
            bp.push((t, to));
        }
        t += leg_ticks;
        bp.push((t, from));
        if hold_ticks > 0 {
            t += hold_ticks;
            bp.push((t, from));
        }
        AttitudeSchedule { breakpoints: bp }
    }

    pub fn validate(&self) -> Result<()> {
        if self.breakpoints.is_empty() {
            return Err(Error::config("schedule.breakpoints", "at least one breakpoint required"));
        }
        if self.breakpoints.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::config(
                "schedule.breakpoints",
                "ticks must be strictly increasing",
            ));
        }
        if let Some((_, a)) = self.breakpoints.iter().find(|(_, a)| !(-1.0..=1.0).contains(a)) {
            return Err(Error::config(
                "schedule.breakpoints",
                format!("mean attitude {a} outside [-1, 1]"),
            ));
        }
        Ok(())
    }

    pub fn end_tick(&self) -> u64 {
        self.breakpoints.last().map_or(0, |b| b.0)
    }

    pub fn value_at(&self, tick: u64) -> f64 {
        let bp = &self.breakpoints;
        if tick <= bp[0].0 {
            return bp[0].1;
        }
        for w in bp.windows(2) {
            let ((t0, a0), (t1, a1)) = (w[0], w[1]);
            if tick <= t1 {
                let f = (tick - t0) as f64 / (t1 - t0) as f64;
                return a0 + f * (a1 - a0);
            }
        }
        bp[bp.len() - 1].1
    }

    /// Breakpoints reflected in time about the end tick.
    pub fn reversed(&self) -> Self {
        let end = self.end_tick();
        let mut bp: Vec<_> = self.breakpoints.iter().map(|&(t, a)| (end - t, a)).collect();
        bp.reverse();
        AttitudeSchedule { breakpoints: bp }
    }
}

/// Sets every cell's attitude to `clamp(schedule(tick) + offset, -1, 1)`.
pub fn apply_attitude_schedule(
    grid: &mut LandscapeGrid,
    schedule: &AttitudeSchedule,
    offsets: &[f64],
    tick: u64,
) {
    let mean = schedule.value_at(tick);
    for (cell, off) in grid.cells.iter_mut().zip(offsets) {
        cell.profile.attitude = (mean + off).clamp(-1.0, 1.0);
    }
}

#[derive(Debug, Clone)]
pub struct SimulationState {
    pub grid: LandscapeGrid,
    pub network: SocialNetwork,
    pub afts: AftTable,
    pub globals: BehaviourGlobals,
    pub demand: DemandState,
    pub decision: DecisionRule,
    /// Fraction of cells drawn for competition each tick.
    pub update_fraction: f64,
    pub tick: u64,
    /// Optional exogenous attitude path with fixed per-cell offsets.
    pub schedule: Option<(AttitudeSchedule, Vec<f64>)>,
    rng: ChaCha8Rng,
}

/// One recorded tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub tick: u64,
    pub shares: Shares,
    pub s_mat: f64,
    pub s_nm: f64,
    pub mean_attitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub rule: StoppingRule,
    /// Stability is only assessed on windows starting at or after this tick.
    pub settle_from: u64,
}

impl Trajectory {
    /// Whether every share varied by less than epsilon over the `window`
    /// ticks ending at row `end`.
    pub fn window_is_stable(&self, end: usize) -> bool {
        let w = self.rule.window as usize;
        if end < w || self.rows[end - w].tick < self.settle_from {
            return false;
        }
        let span = &self.rows[end - w..=end];
        (0..3).all(|k| {
            let (lo, hi) = span.iter().fold((f64::MAX, f64::MIN), |(lo, hi), r| {
                (lo.min(r.shares.0[k]), hi.max(r.shares.0[k]))
            });
            hi - lo < self.rule.epsilon
        })
    }

    pub fn stabilisation_tick(&self) -> Option<u64> {
        (0..self.rows.len())
            .find(|&i| self.window_is_stable(i))
            .map(|i| self.rows[i].tick)
    }

    pub fn last(&self) -> Option<&TrajectoryRow> {
        self.rows.last()
    }
}

impl SimulationState {
    pub fn new(
        grid: LandscapeGrid,
        network: SocialNetwork,
        afts: AftTable,
        globals: BehaviourGlobals,
        demand: DemandState,
        seed: u64,
    ) -> Result<Self> {
        if network.node_count() != grid.len() {
            return Err(Error::config(
                "network",
                "network node count must equal the number of grid cells",
            ));
        }
        let mut state = SimulationState {
            grid,
            network,
            afts,
            globals,
            demand,
            decision: DecisionRule::Behavioural,
            update_fraction: 0.05,
            tick: 0,
            schedule: None,
            rng: stream_rng(seed, Stream::Selection),
        };
        state.refresh_supply();
        Ok(state)
    }

    pub fn with_decision(mut self, decision: DecisionRule) -> Self {
        self.decision = decision;
        self
    }

    pub fn with_schedule(mut self, schedule: AttitudeSchedule, offsets: Vec<f64>) -> Self {
        apply_attitude_schedule(&mut self.grid, &schedule, &offsets, self.tick);
        self.schedule = Some((schedule, offsets));
        self
    }

    pub fn refresh_supply(&mut self) {
        let s = total_supply(&self.grid, &self.afts);
        self.demand.s_mat = s.material;
        self.demand.s_nm = s.non_material;
    }

    /// Number of cells drawn per tick, rounded to nearest.
    pub fn selection_size(&self) -> usize {
        ((self.update_fraction * self.grid.len() as f64).round() as usize).min(self.grid.len())
    }

    pub fn shares(&self) -> Shares {
        intensity_shares(&self.grid)
    }

    pub fn mean_attitude(&self) -> f64 {
        self.grid.cells.iter().map(|c| c.profile.attitude).sum::<f64>() / self.grid.len() as f64
    }

    pub fn row(&self) -> TrajectoryRow {
        TrajectoryRow {
            tick: self.tick,
            shares: self.shares(),
            s_mat: self.demand.s_mat,
            s_nm: self.demand.s_nm,
            mean_attitude: self.mean_attitude(),
        }
    }

    /// The AFT that would replace the incumbent of cell `i`, if any,
    /// evaluated against the current state.
    pub fn decide(&self, i: usize) -> Option<AftKind> {
        let cell = &self.grid.cells[i];
        let (b_mat, b_nm) = self.demand.benefits();
        let incumbent = self.afts.get(cell.aft);
        let u_a = utility_with(incumbent, cell, b_mat, b_nm);
        let counts = match self.decision {
            DecisionRule::Behavioural => {
                Some(self.network.class_counts(i, |j| self.grid.cells[j].aft))
            }
            DecisionRule::Economic => None,
        };
        let degree = self.network.degree(i);

        let mut best: Option<(f64, f64, AftKind)> = None;
        for candidate in AftKind::ALL {
            if candidate == cell.aft {
                continue;
            }
            let aft_b = self.afts.get(candidate);
            let surplus = utility_with(aft_b, cell, b_mat, b_nm) - u_a;
            let git = match counts {
                None => 0.0,
                Some(counts) => {
                    let (pred, _) = conformity_for(&cell.profile, incumbent.intensity, aft_b.intensity);
                    let conforming: u32 = AftKind::ALL
                        .iter()
                        .filter(|k| pred.matches(self.afts.intensity(**k)))
                        .map(|k| counts[k.index()])
                        .sum();
                    let frac = if degree == 0 {
                        0.0
                    } else {
                        conforming as f64 / degree as f64
                    };
                    threshold_from_fraction(
                        &cell.profile,
                        &self.globals,
                        incumbent.intensity,
                        aft_b.intensity,
                        frac,
                    )
                    .expect("candidate differs from incumbent")
                }
            };
            if surplus > git {
                let margin = surplus - git;
                let jump = (aft_b.intensity - incumbent.intensity).abs();
                let better = match best {
                    None => true,
                    Some((m, j, k)) => {
                        margin > m || (margin == m && (jump < j || (jump == j && candidate < k)))
                    }
                };
                if better {
                    best = Some((margin, jump, candidate));
                }
            }
        }
        best.map(|(_, _, k)| k)
    }

    /// Runs one tick on an explicit set of selected cells.
    pub fn tick_with_selection(&mut self, selected: &[usize]) -> usize {
        self.refresh_supply();
        let changes: Vec<(usize, AftKind)> = selected
            .iter()
            .filter_map(|&i| self.decide(i).map(|k| (i, k)))
            .collect();
        for &(i, k) in &changes {
            self.grid.cells[i].aft = k;
        }
        self.refresh_supply();
        self.tick += 1;
        if let Some((schedule, offsets)) = &self.schedule {
            apply_attitude_schedule(&mut self.grid, schedule, offsets, self.tick);
        }
        changes.len()
    }

    /// Draws the cells for this tick and runs it. Returns the number of cells that changed.
    pub fn tick(&mut self) -> usize {
        let n = self.grid.len();
        let k = self.selection_size();
        let selected = index::sample(&mut self.rng, n, k).into_vec();
        self.tick_with_selection(&selected)
    }

    /// Runs until the share trajectory settles or `rule.max_ticks` is reached.
    pub fn run_until_stable(&mut self, rule: StoppingRule) -> Trajectory {
        self.run_until_stable_after(rule, 0)
    }

    /// Like [`run_until_stable`](Self::run_until_stable), but ignores
    /// windows that start before tick `settle_from`.
    pub fn run_until_stable_after(&mut self, rule: StoppingRule, settle_from: u64) -> Trajectory {
        let mut traj = Trajectory {
            rows: vec![self.row()],
            rule,
            settle_from,
        };
        while self.tick < rule.max_ticks {
            self.tick();
            traj.rows.push(self.row());
            if traj.window_is_stable(traj.rows.len() - 1) {
                break;
            }
        }
        traj
    }

    /// Runs for exactly `ticks` ticks, recording every row.
    pub fn run_for(&mut self, ticks: u64, rule: StoppingRule) -> Trajectory {
        let mut traj = Trajectory {
            rows: vec![self.row()],
            rule,
            settle_from: self.tick + ticks,
        };
        for _ in 0..ticks {
            self.tick();
            traj.rows.push(self.row());
        }
        traj
    }
}
