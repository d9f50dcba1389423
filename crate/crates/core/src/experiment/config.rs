//! Experiment configuration: a sectioned TOML document whose keys mirror the
//! model's parameter names. Every section is optional; omitted keys take the
//! defaults below, unknown keys are rejected.
//!
//! ```toml
//! name = "baseline"
//! seed = 7
//! replications = 1
//!
//! [grid]
//! width = 101
//! height = 101
//!
//! [capitals]
//! layout = "peaks"        # or "gradient"
//! noise_amp = 0.0
//! swap_fields = false
//! peaks = [{ cx = 30.0, cy = 50.0, sigma = 12.0 }, { cx = 70.0, cy = 50.0, sigma = 12.0 }]
//!
//! [behaviour]
//! mode = "behavioural"    # or "economic"
//! attitude_mean = 0.0
//! norm_weight_w = 0.5
//! inertia_lambda = 0.0
//! cm_int = 0.5
//! cm_ext = 0.5
//! git_upper_L = 1.0
//! logistic_k = 10.0
//!
//! [heterogeneity]         # per-cell normal spread around each mean
//! attitude = 0.15
//!
//! [demand]
//! demand_mat = 3500.0
//! demand_nm = 3500.0
//!
//! [network]
//! moore_radius = 1
//! n_tele = 0
//!
//! [init]
//! share_c = 0.3333333333333333
//! share_mi = 0.3333333333333333
//! share_hi = 0.3333333333333334
//!
//! [run]
//! max_ticks = 2000
//! window = 50
//! epsilon = 0.002
//! update_fraction = 0.05
//! connectivity = 4
//!
//! [schedule]              # optional: time-varying mean attitude
//! breakpoints = [[0, -1.0], [400, 1.0], [800, -1.0]]
//! ```

use std::path::Path;

use rand::distributions::Distribution;
use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::behaviour::{BehaviourGlobals, BehaviouralProfile};
use crate::dynamics::{AttitudeSchedule, DecisionRule, DemandState, SimulationState, StoppingRule};
use crate::error::{Error, Result};
use crate::landscape::{
    generate_capitals, init_land_use, AftTable, AgentFunctionalType, CapitalFields, LandscapeGrid,
    Peak, Shares,
};
use crate::metrics::Connectivity;
use crate::network::{NetworkConfig, SocialNetwork};
use crate::rng::{stream_rng, Stream};

/// Cell count of the 101 x 101 reference landscape that demands and
/// teleconnection counts are expressed against.
pub const REFERENCE_CELLS: f64 = 101.0 * 101.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub replications: u32,
    pub grid: GridSection,
    pub capitals: CapitalSection,
    pub behaviour: BehaviourSection,
    pub heterogeneity: HeterogeneitySection,
    pub demand: DemandSection,
    pub network: NetworkSection,
    pub init: InitSection,
    pub run: RunSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub afts: Option<[AgentFunctionalType; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sobol: Option<SobolSection>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "run".into(),
            seed: 1,
            replications: 1,
            grid: GridSection::default(),
            capitals: CapitalSection::default(),
            behaviour: BehaviourSection::default(),
            heterogeneity: HeterogeneitySection::default(),
            demand: DemandSection::default(),
            network: NetworkSection::default(),
            init: InitSection::default(),
            run: RunSection::default(),
            schedule: None,
            afts: None,
            sweep: None,
            sobol: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub width: usize,
    pub height: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            width: 101,
            height: 101,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapitalLayout {
    /// Gaussian natural-capital peaks in a productive valley.
    #[default]
    Peaks,
    /// Natural capital rising linearly from west (0) to east (1).
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapitalSection {
    pub layout: CapitalLayout,
    pub noise_amp: f64,
    /// Exchange the productive and natural fields after generation.
    pub swap_fields: bool,
    pub peaks: Vec<Peak>,
}

impl Default for CapitalSection {
    fn default() -> Self {
        CapitalSection {
            layout: CapitalLayout::Peaks,
            noise_amp: 0.0,
            swap_fields: false,
            peaks: crate::landscape::default_peaks(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BehaviourSection {
    pub mode: DecisionRule,
    pub attitude_mean: f64,
    pub norm_weight_w: f64,
    pub inertia_lambda: f64,
    pub cm_int: f64,
    pub cm_ext: f64,
    #[serde(rename = "git_upper_L")]
    pub git_upper_l: f64,
    pub logistic_k: f64,
}

impl Default for BehaviourSection {
    fn default() -> Self {
        BehaviourSection {
            mode: DecisionRule::Behavioural,
            attitude_mean: 0.0,
            norm_weight_w: 0.5,
            inertia_lambda: 0.0,
            cm_int: 0.5,
            cm_ext: 0.5,
            git_upper_l: 1.0,
            logistic_k: 10.0,
        }
    }
}

impl BehaviourSection {
    pub fn profile(&self) -> BehaviouralProfile {
        BehaviouralProfile {
            attitude: self.attitude_mean,
            inertia_coeff: self.inertia_lambda,
            norm_weight: self.norm_weight_w,
            cm_int: self.cm_int,
            cm_ext: self.cm_ext,
            git_upper: self.git_upper_l,
        }
    }
}

/// Standard deviations of the per-cell spread around each behavioural mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeterogeneitySection {
    pub attitude: f64,
    pub norm_weight_w: f64,
    pub inertia_lambda: f64,
    pub cm_int: f64,
    pub cm_ext: f64,
    #[serde(rename = "git_upper_L")]
    pub git_upper_l: f64,
}

impl Default for HeterogeneitySection {
    fn default() -> Self {
        HeterogeneitySection {
            attitude: 0.15,
            norm_weight_w: 0.0,
            inertia_lambda: 0.0,
            cm_int: 0.0,
            cm_ext: 0.0,
            git_upper_l: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DemandSection {
    pub demand_mat: f64,
    pub demand_nm: f64,
}

impl Default for DemandSection {
    fn default() -> Self {
        DemandSection {
            demand_mat: 3500.0,
            demand_nm: 3500.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub moore_radius: usize,
    pub n_tele: usize,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            moore_radius: 1,
            n_tele: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitSection {
    pub share_c: f64,
    pub share_mi: f64,
    pub share_hi: f64,
}

impl Default for InitSection {
    fn default() -> Self {
        InitSection {
            share_c: 1.0 / 3.0,
            share_mi: 1.0 / 3.0,
            share_hi: 1.0 - 2.0 / 3.0,
        }
    }
}

impl InitSection {
    pub fn shares(&self) -> Shares {
        Shares::new(self.share_c, self.share_mi, self.share_hi)
    }

    pub fn set(&mut self, shares: Shares) {
        self.share_c = shares.c();
        self.share_mi = shares.mi();
        self.share_hi = shares.hi();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub max_ticks: u64,
    pub window: u64,
    pub epsilon: f64,
    pub update_fraction: f64,
    /// Patch adjacency for the mesh metric: 4 or 8.
    pub connectivity: u8,
}

impl Default for RunSection {
    fn default() -> Self {
        let rule = StoppingRule::default();
        RunSection {
            max_ticks: rule.max_ticks,
            window: rule.window,
            epsilon: rule.epsilon,
            update_fraction: 0.05,
            connectivity: 4,
        }
    }
}

impl RunSection {
    pub fn stopping_rule(&self) -> StoppingRule {
        StoppingRule {
            max_ticks: self.max_ticks,
            window: self.window,
            epsilon: self.epsilon,
        }
    }

    pub fn connectivity(&self) -> Connectivity {
        if self.connectivity == 8 {
            Connectivity::Eight
        } else {
            Connectivity::Four
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub breakpoints: Vec<(u64, f64)>,
}

impl ScheduleSection {
    pub fn schedule(&self) -> AttitudeSchedule {
        AttitudeSchedule {
            breakpoints: self.breakpoints.clone(),
        }
    }
}

/// One swept parameter: `steps` evenly spaced values from `min` to `max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParam {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepParam {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        (0..self.steps)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64)
            .collect()
    }

    /// Parses `name=min:max:steps`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || Error::Usage(format!("expected name=min:max:steps, got `{spec}`"));
        let (name, range) = spec.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        Ok(SweepParam {
            name: name.trim().to_string(),
            min: parts[0].trim().parse().map_err(|_| bad())?,
            max: parts[1].trim().parse().map_err(|_| bad())?,
            steps: parts[2].trim().parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub params: Vec<SweepParam>,
    #[serde(default = "one")]
    pub replications: u32,
}

fn one() -> u32 {
    1
}

impl SweepSpec {
    pub fn validate(&self, base: &ExperimentConfig) -> Result<()> {
        if self.params.is_empty() || self.params.len() > 2 {
            return Err(Error::config("sweep.params", "sweep one or two parameters"));
        }
        if self.replications == 0 {
            return Err(Error::config("sweep.replications", "must be at least 1"));
        }
        for p in &self.params {
            if p.steps < 2 && !(p.steps == 1 && p.min == p.max) {
                return Err(Error::config(
                    format!("sweep.{}", p.name),
                    "steps must be at least 2",
                ));
            }
            let mut probe = base.clone();
            probe.set_param(&p.name, p.min)?;
            probe.set_param(&p.name, p.max)?;
        }
        Ok(())
    }

    /// Grid points in row-major order (first parameter outermost).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut points: Vec<Vec<f64>> = vec![vec![]];
        for p in &self.params {
            points = points
                .into_iter()
                .flat_map(|prefix| {
                    p.values().into_iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push(v);
                        next
                    })
                })
                .collect();
        }
        points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SobolSection {
    pub n_base: usize,
    pub second_order: bool,
    pub bootstrap: usize,
    /// Replicate seeds averaged per design row.
    pub replications: u32,
    /// Scale demands and teleconnection counts by grid area relative to 101 x 101.
    pub scale_to_grid: bool,
}

impl Default for SobolSection {
    fn default() -> Self {
        SobolSection {
            n_base: 256,
            second_order: true,
            bootstrap: 100,
            replications: 1,
            scale_to_grid: true,
        }
    }
}

/// Names accepted by [`ExperimentConfig::set_param`].
pub const PARAM_NAMES: &[&str] = &[
    "attitude_mean",
    "norm_weight_w",
    "inertia_lambda",
    "cm_int",
    "cm_ext",
    "cm",
    "git_upper_L",
    "logistic_k",
    "demand_mat",
    "demand_nm",
    "demand",
    "moore_radius",
    "n_tele",
    "init_share_c",
    "init_share_mi",
    "init_share_hi",
    "attitude_sigma",
];

fn check_range(key: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if !(lo..=hi).contains(&v) {
        return Err(Error::config(key, format!("{v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

fn round_half_up(v: f64) -> f64 {
    (v + 0.5).floor()
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<string>".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(Error::config("seed", "must fit in a signed 64-bit integer"));
        }
        if self.replications == 0 {
            return Err(Error::config("replications", "must be at least 1"));
        }
        if self.grid.width < 3 || self.grid.height < 3 {
            return Err(Error::config("grid", "width and height must be at least 3"));
        }
        check_range("capitals.noise_amp", self.capitals.noise_amp, 0.0, 0.2)?;
        if self.capitals.peaks.iter().any(|p| !(p.sigma > 0.0)) {
            return Err(Error::config("capitals.peaks", "sigma must be positive"));
        }
        self.behaviour.profile().validate()?;
        BehaviourGlobals::new(self.behaviour.logistic_k)?;
        let h = &self.heterogeneity;
        for (key, v) in [
            ("heterogeneity.attitude", h.attitude),
            ("heterogeneity.norm_weight_w", h.norm_weight_w),
            ("heterogeneity.inertia_lambda", h.inertia_lambda),
            ("heterogeneity.cm_int", h.cm_int),
            ("heterogeneity.cm_ext", h.cm_ext),
            ("heterogeneity.git_upper_L", h.git_upper_l),
        ] {
            check_range(key, v, 0.0, 1.0)?;
        }
        DemandState::new(self.demand.demand_mat, self.demand.demand_nm)?;
        if self.network.moore_radius == 0 {
            return Err(Error::config("moore_radius", "must be at least 1"));
        }
        if self.network.moore_radius >= self.grid.width.min(self.grid.height) {
            return Err(Error::config(
                "moore_radius",
                "must be smaller than the grid's shorter side",
            ));
        }
        self.init.shares().validate()?;
        self.run.stopping_rule().validate()?;
        check_range("run.update_fraction", self.run.update_fraction, 0.0, 1.0)?;
        if !matches!(self.run.connectivity, 4 | 8) {
            return Err(Error::config("run.connectivity", "must be 4 or 8"));
        }
        if let Some(s) = &self.schedule {
            s.schedule().validate()?;
        }
        if let Some(afts) = &self.afts {
            AftTable::new(*afts)?;
        }
        if let Some(sweep) = &self.sweep {
            let mut base = self.clone();
            base.sweep = None;
            sweep.validate(&base)?;
        }
        if let Some(sobol) = &self.sobol {
            if sobol.n_base == 0 {
                return Err(Error::config("sobol.n_base", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn aft_table(&self) -> AftTable {
        self.afts
            .map(|a| AftTable::new(a).expect("validated"))
            .unwrap_or_default()
    }

    /// Sets a named scalar parameter. Integer parameters are rounded half-up.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let b = &mut self.behaviour;
        match name {
            "attitude_mean" => {
                check_range(name, value, -1.0, 1.0)?;
                b.attitude_mean = value;
            }
            "norm_weight_w" => {
                check_range(name, value, 0.0, 1.0)?;
                b.norm_weight_w = value;
            }
            "inertia_lambda" => {
                check_range(name, value, 0.0, 1.0)?;
                b.inertia_lambda = value;
            }
            "cm_int" | "cm_ext" | "cm" => {
                check_range(name, value, 0.0, 1.0)?;
                if name != "cm_ext" {
                    b.cm_int = value;
                }
                if name != "cm_int" {
                    b.cm_ext = value;
                }
            }
            "git_upper_L" => {
                check_range(name, value, 0.0, 1.0)?;
                b.git_upper_l = value;
            }
            "logistic_k" => {
                if !(value > 0.0) {
                    return Err(Error::config(name, "must be positive"));
                }
                b.logistic_k = value;
            }
            "demand_mat" | "demand_nm" | "demand" => {
                if !(value > 0.0) {
                    return Err(Error::config(name, "demand must be positive"));
                }
                if name != "demand_nm" {
                    self.demand.demand_mat = value;
                }
                if name != "demand_mat" {
                    self.demand.demand_nm = value;
                }
            }
            "moore_radius" => {
                let r = round_half_up(value);
                if r < 1.0 {
                    return Err(Error::config(name, "must be at least 1"));
                }
                self.network.moore_radius = r as usize;
            }
            "n_tele" => {
                let n = round_half_up(value);
                if n < 0.0 {
                    return Err(Error::config(name, "must be non-negative"));
                }
                self.network.n_tele = n as usize;
            }
            "init_share_c" | "init_share_hi" => {
                let rest = 1.0 - self.init.share_mi - value;
                if !(0.0..=1.0).contains(&value) || rest < -1e-12 {
                    return Err(Error::config(
                        name,
                        format!("{value} leaves no room next to share_mi = {}", self.init.share_mi),
                    ));
                }
                if name == "init_share_c" {
                    self.init.share_c = value;
                    self.init.share_hi = rest.max(0.0);
                } else {
                    self.init.share_hi = value;
                    self.init.share_c = rest.max(0.0);
                }
            }
            "init_share_mi" => {
                check_range(name, value, 0.0, 1.0)?;
                let rest = (1.0 - value) / 2.0;
                self.init.share_mi = value;
                self.init.share_c = rest;
                self.init.share_hi = 1.0 - value - rest;
            }
            "attitude_sigma" => {
                check_range(name, value, 0.0, 1.0)?;
                self.heterogeneity.attitude = value;
            }
            other => {
                return Err(Error::config(
                    other,
                    format!("unknown parameter; expected one of {}", PARAM_NAMES.join(", ")),
                ))
            }
        }
        Ok(())
    }

    pub fn get_param(&self, name: &str) -> Option<f64> {
        let b = &self.behaviour;
        Some(match name {
            "attitude_mean" => b.attitude_mean,
            "norm_weight_w" => b.norm_weight_w,
            "inertia_lambda" => b.inertia_lambda,
            "cm_int" | "cm" => b.cm_int,
            "cm_ext" => b.cm_ext,
            "git_upper_L" => b.git_upper_l,
            "logistic_k" => b.logistic_k,
            "demand_mat" | "demand" => self.demand.demand_mat,
            "demand_nm" => self.demand.demand_nm,
            "moore_radius" => self.network.moore_radius as f64,
            "n_tele" => self.network.n_tele as f64,
            "init_share_c" => self.init.share_c,
            "init_share_mi" => self.init.share_mi,
            "init_share_hi" => self.init.share_hi,
            "attitude_sigma" => self.heterogeneity.attitude,
            _ => return None,
        })
    }

    /// The mirror image under Conservation <-> HighIntensity: capitals and
    /// demands exchanged, attitudes negated, critical masses exchanged,
    /// initial C and HI shares exchanged.
    pub fn mirrored(&self) -> Self {
        let mut m = self.clone();
        m.capitals.swap_fields = !self.capitals.swap_fields;
        m.behaviour.attitude_mean = -self.behaviour.attitude_mean;
        m.behaviour.cm_int = self.behaviour.cm_ext;
        m.behaviour.cm_ext = self.behaviour.cm_int;
        m.demand.demand_mat = self.demand.demand_nm;
        m.demand.demand_nm = self.demand.demand_mat;
        m.heterogeneity.cm_int = self.heterogeneity.cm_ext;
        m.heterogeneity.cm_ext = self.heterogeneity.cm_int;
        m.init.set(self.init.shares().mirrored());
        if let Some(s) = &mut m.schedule {
            for bp in &mut s.breakpoints {
                bp.1 = -bp.1;
            }
        }
        m
    }

    pub fn capital_fields(&self, seed: u64) -> Result<CapitalFields> {
        let (w, h) = (self.grid.width, self.grid.height);
        let fields = match self.capitals.layout {
            CapitalLayout::Peaks => {
                generate_capitals(w, h, &self.capitals.peaks, self.capitals.noise_amp, seed)?
            }
            CapitalLayout::Gradient => {
                // validates dimensions and noise; the peak-free fields are discarded
                generate_capitals(w, h, &[], self.capitals.noise_amp, seed)?;
                let mut rng = stream_rng(seed, Stream::Capitals);
                let amp = self.capitals.noise_amp;
                let mut noise = || if amp > 0.0 { rng.gen_range(-amp..=amp) } else { 0.0 };
                let mut f = CapitalFields {
                    width: w,
                    height: h,
                    c_prod: Vec::with_capacity(w * h),
                    c_nat: Vec::with_capacity(w * h),
                };
                for _y in 0..h {
                    for x in 0..w {
                        let g = x as f64 / (w - 1) as f64;
                        let (e_nat, e_prod) = (noise(), noise());
                        f.c_nat.push((g + e_nat).clamp(0.0, 1.0));
                        f.c_prod.push((1.0 - g + e_prod).clamp(0.0, 1.0));
                    }
                }
                f
            }
        };
        Ok(if self.capitals.swap_fields {
            fields.swapped()
        } else {
            fields
        })
    }

    /// Builds the initial simulation state for one seed.
    pub fn build_state(&self, seed: u64) -> Result<SimulationState> {
        self.validate()?;
        let capitals = self.capital_fields(seed)?;
        let means = self.behaviour.profile();
        let mut grid = LandscapeGrid::from_capitals(&capitals, means);
        let offsets = draw_profiles(&mut grid, &means, &self.heterogeneity, seed);
        init_land_use(&mut grid, self.init.shares(), seed)?;
        let network = SocialNetwork::build(
            self.grid.width,
            self.grid.height,
            &NetworkConfig {
                moore_radius: self.network.moore_radius,
                n_teleconnections: self.network.n_tele,
                seed,
            },
        )?;
        let mut state = SimulationState::new(
            grid,
            network,
            self.aft_table(),
            BehaviourGlobals::new(self.behaviour.logistic_k)?,
            DemandState::new(self.demand.demand_mat, self.demand.demand_nm)?,
            seed,
        )?
        .with_decision(self.behaviour.mode);
        state.update_fraction = self.run.update_fraction;
        let schedule = self
            .schedule
            .as_ref()
            .map(ScheduleSection::schedule)
            .unwrap_or_else(|| AttitudeSchedule::constant(self.behaviour.attitude_mean));
        Ok(state.with_schedule(schedule, offsets))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        load_config(path)
    }
}

/// Draws per-cell behavioural parameters around `means` and returns the
/// per-cell attitude offsets (attitudes are set later from a schedule).
fn draw_profiles(
    grid: &mut LandscapeGrid,
    means: &BehaviouralProfile,
    sigma: &HeterogeneitySection,
    seed: u64,
) -> Vec<f64> {
    let mut rng = stream_rng(seed, Stream::Profiles);
    let mut draw = |sd: f64| -> f64 {
        if sd > 0.0 {
            Normal::new(0.0, sd).expect("finite sd").sample(&mut rng)
        } else {
            0.0
        }
    };
    let mut offsets = Vec::with_capacity(grid.len());
    for cell in &mut grid.cells {
        offsets.push(draw(sigma.attitude));
        let p = &mut cell.profile;
        p.norm_weight = (means.norm_weight + draw(sigma.norm_weight_w)).clamp(0.0, 1.0);
        p.inertia_coeff = (means.inertia_coeff + draw(sigma.inertia_lambda)).clamp(0.0, 1.0);
        p.cm_int = (means.cm_int + draw(sigma.cm_int)).clamp(0.0, 1.0);
        p.cm_ext = (means.cm_ext + draw(sigma.cm_ext)).clamp(0.0, 1.0);
        p.git_upper = (means.git_upper + draw(sigma.git_upper_l)).clamp(0.0, 1.0);
    }
    offsets
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = ExperimentConfig::from_toml_str("seed = 9\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!((cfg.grid.width, cfg.grid.height), (101, 101));
        assert_eq!(cfg.behaviour.logistic_k, 10.0);
        assert_eq!(cfg.run.window, 50);
        assert_eq!(cfg.run.epsilon, 0.002);
        assert_eq!(cfg.run.max_ticks, 2000);
    }

    #[test]
    fn out_of_range_values_name_their_key() {
        let err = ExperimentConfig::from_toml_str("[behaviour]\nnorm_weight_w = 1.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("norm_weight_w") && msg.contains("[0, 1]"), "{msg}");
        let err = ExperimentConfig::from_toml_str("[network]\nmoore_radius = 0\n").unwrap_err();
        assert!(err.to_string().contains("moore_radius"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_toml_str("[behaviour]\nfoo = 1\n").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = true\n").is_err());
    }

    #[test]
    fn round_trip_through_toml() {
        let mut cfg = ExperimentConfig::default();
        cfg.schedule = Some(ScheduleSection {
            breakpoints: vec![(0, -0.5), (100, 0.5)],
        });
        cfg.sweep = Some(SweepSpec {
            params: vec![SweepParam::parse("attitude_mean=-1:1:5").unwrap()],
            replications: 2,
        });
        cfg.sobol = Some(SobolSection::default());
        let text = cfg.to_toml_string();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn param_setting_and_rounding() {
        let mut cfg = ExperimentConfig::default();
        cfg.set_param("moore_radius", 2.5).unwrap();
        assert_eq!(cfg.network.moore_radius, 3);
        cfg.set_param("moore_radius", 2.49).unwrap();
        assert_eq!(cfg.network.moore_radius, 2);
        cfg.set_param("cm", 0.2).unwrap();
        assert_eq!((cfg.behaviour.cm_int, cfg.behaviour.cm_ext), (0.2, 0.2));
        cfg.init.set(Shares::new(0.5, 0.0, 0.5));
        cfg.set_param("init_share_hi", 0.3).unwrap();
        assert_eq!(cfg.init.shares(), Shares::new(0.7, 0.0, 0.3));
        assert!(cfg.set_param("nonsense", 1.0).is_err());
        assert!(cfg.set_param("norm_weight_w", 1.2).is_err());
    }

    #[test]
    fn sweep_points_are_row_major() {
        let spec = SweepSpec {
            params: vec![
                SweepParam::parse("attitude_mean=-1:1:3").unwrap(),
                SweepParam::parse("norm_weight_w=0:1:2").unwrap(),
            ],
            replications: 1,
        };
        let pts = spec.points();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], vec![-1.0, 0.0]);
        assert_eq!(pts[1], vec![-1.0, 1.0]);
        assert_eq!(pts[5], vec![1.0, 1.0]);
        assert!(SweepParam::parse("attitude_mean=-1:1").is_err());
    }

    #[test]
    fn mirrored_config_is_an_involution() {
        let mut cfg = ExperimentConfig::default();
        cfg.behaviour.attitude_mean = 0.3;
        cfg.behaviour.cm_int = 0.2;
        cfg.demand.demand_mat = 4000.0;
        cfg.init.set(Shares::new(0.2, 0.3, 0.5));
        let m = cfg.mirrored();
        assert_eq!(m.behaviour.attitude_mean, -0.3);
        assert_eq!(m.behaviour.cm_ext, 0.2);
        assert_eq!(m.demand.demand_nm, 4000.0);
        assert_eq!(m.init.shares(), Shares::new(0.5, 0.3, 0.2));
        assert_eq!(m.mirrored(), cfg);
    }

    #[test]
    fn gradient_layout_swaps_into_its_reflection() {
        let mut cfg = ExperimentConfig::default();
        cfg.grid = GridSection { width: 7, height: 4 };
        cfg.capitals.layout = CapitalLayout::Gradient;
        let f = cfg.capital_fields(0).unwrap();
        cfg.capitals.swap_fields = true;
        let s = cfg.capital_fields(0).unwrap();
        for y in 0..4 {
            for x in 0..7 {
                let (i, r) = (y * 7 + x, y * 7 + (6 - x));
                assert!((s.c_nat[i] - f.c_nat[r]).abs() < 1e-12);
                assert!((s.c_prod[i] - f.c_prod[r]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn state_building_is_deterministic() {
        let mut cfg = ExperimentConfig::default();
        cfg.grid = GridSection { width: 20, height: 20 };
        let a = cfg.build_state(3).unwrap();
        let b = cfg.build_state(3).unwrap();
        assert_eq!(a.grid, b.grid);
        assert_eq!(a.network, b.network);
        // attitudes come from the constant schedule plus offsets
        let mean = a.mean_attitude();
        assert!(mean.abs() < 0.1);
        assert!(a.grid.cells.iter().any(|c| c.profile.attitude != 0.0));
    }
}
