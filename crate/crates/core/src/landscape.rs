//! Spatial grid, capital fields, agent functional types and per-cell
//! ecosystem-service production.
//!
//! Capitals are generated once and stay fixed for the whole run. Natural
//! capital forms Gaussian "mountains"; productive capital is its complement,
//! so the valley between and around the peaks is productive land.

use std::fmt::Write as _;

use rand::distributions::{Distribution, Uniform};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::behaviour::BehaviouralProfile;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// The three land-management practices, ordered by intensity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AftKind {
    Conservation = 0,
    MediumIntensity = 1,
    HighIntensity = 2,
}

impl AftKind {
    pub const ALL: [AftKind; 3] = [
        AftKind::Conservation,
        AftKind::MediumIntensity,
        AftKind::HighIntensity,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_id(id: u8) -> Option<AftKind> {
        AftKind::ALL.get(id as usize).copied()
    }

    /// Conservation <-> HighIntensity; MediumIntensity is its own mirror.
    pub fn mirrored(self) -> AftKind {
        match self {
            AftKind::Conservation => AftKind::HighIntensity,
            AftKind::MediumIntensity => AftKind::MediumIntensity,
            AftKind::HighIntensity => AftKind::Conservation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentFunctionalType {
    pub kind: AftKind,
    pub intensity: f64,
    pub s_prod: f64,
    pub s_nat: f64,
}

/// Lookup table for the three AFTs, indexed by [`AftKind`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AftTable([AgentFunctionalType; 3]);

impl AftTable {
    /// Conservation (0.0; 0/1), MediumIntensity (0.5; 0.5/0.5), HighIntensity (1.0; 1/0).
    pub fn canonical() -> Self {
        AftTable([
            AgentFunctionalType {
                kind: AftKind::Conservation,
                intensity: 0.0,
                s_prod: 0.0,
                s_nat: 1.0,
            },
            AgentFunctionalType {
                kind: AftKind::MediumIntensity,
                intensity: 0.5,
                s_prod: 0.5,
                s_nat: 0.5,
            },
            AgentFunctionalType {
                kind: AftKind::HighIntensity,
                intensity: 1.0,
                s_prod: 1.0,
                s_nat: 0.0,
            },
        ])
    }

    pub fn new(afts: [AgentFunctionalType; 3]) -> Result<Self> {
        for (i, aft) in afts.iter().enumerate() {
            if aft.kind.index() != i {
                return Err(Error::config(
                    "afts",
                    format!("entry {i} must describe {:?}", AftKind::ALL[i]),
                ));
            }
            for (name, v) in [
                ("intensity", aft.intensity),
                ("s_prod", aft.s_prod),
                ("s_nat", aft.s_nat),
            ] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::config(
                        format!("afts.{name}"),
                        format!("{v} outside [0, 1]"),
                    ));
                }
            }
            if aft.s_prod + aft.s_nat > 1.0 + 1e-12 {
                return Err(Error::config(
                    "afts",
                    format!("{:?}: s_prod + s_nat exceeds 1", aft.kind),
                ));
            }
        }
        if !(afts[0].intensity < afts[1].intensity && afts[1].intensity < afts[2].intensity) {
            return Err(Error::config(
                "afts.intensity",
                "intensities must be strictly increasing Conservation < Medium < High",
            ));
        }
        Ok(AftTable(afts))
    }

    pub fn get(&self, kind: AftKind) -> &AgentFunctionalType {
        &self.0[kind.index()]
    }

    pub fn intensity(&self, kind: AftKind) -> f64 {
        self.0[kind.index()].intensity
    }

    pub fn as_array(&self) -> &[AgentFunctionalType; 3] {
        &self.0
    }
}

impl Default for AftTable {
    fn default() -> Self {
        AftTable::canonical()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
    pub c_prod: f64,
    pub c_nat: f64,
    pub aft: AftKind,
    pub profile: BehaviouralProfile,
}

/// Ecosystem-service output of one AFT on one cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Production {
    pub material: f64,
    pub non_material: f64,
}

/// Linear production: material from productive capital, non-material from natural capital.
pub fn production(aft: &AgentFunctionalType, cell: &Cell) -> Production {
    Production {
        material: aft.s_prod * cell.c_prod,
        non_material: aft.s_nat * cell.c_nat,
    }
}

/// A Gaussian natural-capital peak centred at (`cx`, `cy`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub cx: f64,
    pub cy: f64,
    pub sigma: f64,
}

impl Peak {
    pub fn new(cx: f64, cy: f64, sigma: f64) -> Self {
        Peak { cx, cy, sigma }
    }

    fn height(&self, x: f64, y: f64) -> f64 {
        let d2 = (x - self.cx).powi(2) + (y - self.cy).powi(2);
        (-d2 / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Two peaks at (30, 50) and (70, 50) with sigma 12.
pub fn default_peaks() -> Vec<Peak> {
    vec![Peak::new(30.0, 50.0, 12.0), Peak::new(70.0, 50.0, 12.0)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapitalFields {
    pub width: usize,
    pub height: usize,
    pub c_prod: Vec<f64>,
    pub c_nat: Vec<f64>,
}

impl CapitalFields {
    /// Exchange the productive and natural fields.
    pub fn swapped(&self) -> Self {
        CapitalFields {
            width: self.width,
            height: self.height,
            c_prod: self.c_nat.clone(),
            c_nat: self.c_prod.clone(),
        }
    }

    pub fn mean_prod(&self) -> f64 {
        self.c_prod.iter().sum::<f64>() / self.c_prod.len() as f64
    }

    pub fn mean_nat(&self) -> f64 {
        self.c_nat.iter().sum::<f64>() / self.c_nat.len() as f64
    }

    /// CSV with header `x,y,c_prod,c_nat`, row-major, 6 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.c_prod.len() * 28 + 16);
        out.push_str("x,y,c_prod,c_nat\n");
        for y in 0..self.height {
            for x in 0..self.width {
                let i = y * self.width + x;
                let _ = writeln!(out, "{x},{y},{:.6},{:.6}", self.c_prod[i], self.c_nat[i]);
            }
        }
        out
    }
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Builds the natural/productive capital fields.
///
/// `c_nat = clamp01(max_p gauss_p + noise)` and `c_prod = clamp01(1 - max_p gauss_p + noise')`
/// with the two noise terms drawn independently from `U[-noise_amp, noise_amp]`.
pub fn generate_capitals(
    width: usize,
    height: usize,
    peaks: &[Peak],
    noise_amp: f64,
    seed: u64,
) -> Result<CapitalFields> {
    if width < 3 || height < 3 {
        return Err(Error::config(
            "grid",
            format!("dimensions {width}x{height} must both be at least 3"),
        ));
    }
    if let Some(p) = peaks.iter().find(|p| !(p.sigma > 0.0) || !p.sigma.is_finite()) {
        return Err(Error::config(
            "capitals.peaks",
            format!("sigma must be positive, got {}", p.sigma),
        ));
    }
    if !(0.0..=0.2).contains(&noise_amp) {
        return Err(Error::config(
            "capitals.noise_amp",
            format!("{noise_amp} outside [0, 0.2]"),
        ));
    }

    let mut rng: ChaCha8Rng = stream_rng(seed, Stream::Capitals);
    let noise = (noise_amp > 0.0).then(|| Uniform::new_inclusive(-noise_amp, noise_amp));
    let n = width * height;
    let mut c_prod = Vec::with_capacity(n);
    let mut c_nat = Vec::with_capacity(n);
    for y in 0..height {
        for x in 0..width {
            let g = peaks
                .iter()
                .map(|p| p.height(x as f64, y as f64))
                .fold(0.0_f64, f64::max);
            let (e_nat, e_prod) = match &noise {
                Some(u) => (u.sample(&mut rng), u.sample(&mut rng)),
                None => (0.0, 0.0),
            };
            c_nat.push(clamp01(g + e_nat));
            c_prod.push(clamp01(1.0 - g + e_prod));
        }
    }
    Ok(CapitalFields {
        width,
        height,
        c_prod,
        c_nat,
    })
}

/// Target initial shares of (Conservation, MediumIntensity, HighIntensity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shares(pub [f64; 3]);

impl Shares {
    pub fn new(c: f64, mi: f64, hi: f64) -> Self {
        Shares([c, mi, hi])
    }

    pub fn uniform() -> Self {
        Shares([1.0 / 3.0; 3])
    }

    pub fn c(&self) -> f64 {
        self.0[0]
    }

    pub fn mi(&self) -> f64 {
        self.0[1]
    }

    pub fn hi(&self) -> f64 {
        self.0[2]
    }

    pub fn get(&self, kind: AftKind) -> f64 {
        self.0[kind.index()]
    }

    pub fn mirrored(&self) -> Self {
        Shares([self.0[2], self.0[1], self.0[0]])
    }

    pub fn l1_distance(&self, other: &Shares) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::config("init", "shares must be non-negative"));
        }
        let total: f64 = self.0.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "init",
                format!("shares must sum to 1, got {total}"),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<Cell>,
}

impl LandscapeGrid {
    /// Grid with the given capitals; every cell starts as Conservation with `profile`.
    pub fn from_capitals(capitals: &CapitalFields, profile: BehaviouralProfile) -> Self {
        let cells = (0..capitals.width * capitals.height)
            .map(|i| Cell {
                x: i % capitals.width,
                y: i / capitals.width,
                c_prod: capitals.c_prod[i],
                c_nat: capitals.c_nat[i],
                aft: AftKind::Conservation,
                profile,
            })
            .collect();
        LandscapeGrid {
            width: capitals.width,
            height: capitals.height,
            cells,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn cell(&self, x: usize, y: usize) -> &Cell {
        &self.cells[self.index(x, y)]
    }

    pub fn afts(&self) -> Vec<AftKind> {
        self.cells.iter().map(|c| c.aft).collect()
    }

    /// Land-use map CSV: `x,y,aft_id`, row-major.
    pub fn map_csv(&self) -> String {
        let mut out = String::with_capacity(self.cells.len() * 12 + 12);
        out.push_str("x,y,aft_id\n");
        for c in &self.cells {
            let _ = writeln!(out, "{},{},{}", c.x, c.y, c.aft.id());
        }
        out
    }
}

/// Draws each cell's AFT independently with probabilities `shares`.
pub fn init_land_use(grid: &mut LandscapeGrid, shares: Shares, seed: u64) -> Result<()> {
    shares.validate()?;
    let mut rng = stream_rng(seed, Stream::LandUse);
    let unit = Uniform::new(0.0_f64, 1.0);
    let (p_c, p_cm) = (shares.c(), shares.c() + shares.mi());
    for cell in &mut grid.cells {
        let u = unit.sample(&mut rng);
        cell.aft = if u < p_c {
            AftKind::Conservation
        } else if u < p_cm {
            AftKind::MediumIntensity
        } else {
            AftKind::HighIntensity
        };
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cell(c_prod: f64, c_nat: f64) -> Cell {
        Cell {
            x: 0,
            y: 0,
            c_prod,
            c_nat,
            aft: AftKind::Conservation,
            profile: BehaviouralProfile::default(),
        }
    }

    #[test]
    fn peak_centre_is_pure_natural_capital() {
        let f = generate_capitals(9, 9, &[Peak::new(4.0, 4.0, 2.0)], 0.0, 1).unwrap();
        let i = 4 * 9 + 4;
        assert_eq!(f.c_nat[i], 1.0);
        assert_eq!(f.c_prod[i], 0.0);
    }

    #[test]
    fn one_sigma_from_peak() {
        let f = generate_capitals(11, 11, &[Peak::new(2.0, 5.0, 3.0)], 0.0, 1).unwrap();
        // (5, 5) is exactly 3 = sigma cells from the centre.
        assert_abs_diff_eq!(f.c_nat[5 * 11 + 5], (-0.5f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(f.c_nat[5 * 11 + 5], 0.6065306597, epsilon = 1e-9);
    }

    #[test]
    fn default_landscape_favours_productive_capital() {
        let f = generate_capitals(101, 101, &default_peaks(), 0.0, 3).unwrap();
        assert_abs_diff_eq!(f.mean_nat() + f.mean_prod(), 1.0, epsilon = 1e-12);
        assert!(f.mean_nat() < f.mean_prod());
    }

    #[test]
    fn capital_generation_is_seed_deterministic() {
        let a = generate_capitals(20, 15, &default_peaks(), 0.1, 42).unwrap();
        let b = generate_capitals(20, 15, &default_peaks(), 0.1, 42).unwrap();
        let c = generate_capitals(20, 15, &default_peaks(), 0.1, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.c_nat.iter().chain(&a.c_prod).all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn invalid_capital_configuration() {
        assert!(generate_capitals(2, 10, &default_peaks(), 0.0, 0).is_err());
        assert!(generate_capitals(10, 10, &[Peak::new(1.0, 1.0, 0.0)], 0.0, 0).is_err());
        assert!(generate_capitals(10, 10, &default_peaks(), 0.3, 0).is_err());
    }

    #[test]
    fn capitals_csv_layout() {
        let f = generate_capitals(3, 3, &[Peak::new(0.0, 0.0, 1.0)], 0.0, 0).unwrap();
        let csv = f.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "x,y,c_prod,c_nat");
        assert_eq!(lines[1], "0,0,0.000000,1.000000");
        assert_eq!(lines[2].split(',').next(), Some("1"));
        assert_eq!(lines.len(), 10);
    }

    #[test]
    fn production_examples() {
        let t = AftTable::canonical();
        let p = production(t.get(AftKind::HighIntensity), &cell(0.8, 0.1));
        assert_eq!((p.material, p.non_material), (0.8, 0.0));
        let p = production(t.get(AftKind::Conservation), &cell(0.7, 0.0));
        assert_eq!((p.material, p.non_material), (0.0, 0.0));
        let p = production(t.get(AftKind::MediumIntensity), &cell(0.6, 0.3));
        assert_abs_diff_eq!(p.material, 0.30, epsilon = 1e-12);
        assert_abs_diff_eq!(p.non_material, 0.15, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_and_zero_class_shares() {
        let f = generate_capitals(10, 10, &default_peaks(), 0.0, 0).unwrap();
        let mut g = LandscapeGrid::from_capitals(&f, BehaviouralProfile::default());
        init_land_use(&mut g, Shares::new(0.0, 0.0, 1.0), 5).unwrap();
        assert!(g.cells.iter().all(|c| c.aft == AftKind::HighIntensity));
        init_land_use(&mut g, Shares::new(1.0, 0.0, 0.0), 5).unwrap();
        assert!(g.cells.iter().all(|c| c.aft == AftKind::Conservation));
        init_land_use(&mut g, Shares::new(0.5, 0.0, 0.5), 5).unwrap();
        assert!(g.cells.iter().all(|c| c.aft != AftKind::MediumIntensity));
        assert!(init_land_use(&mut g, Shares::new(0.5, 0.2, 0.5), 5).is_err());
    }

    #[test]
    fn aft_table_rejects_unordered_intensities() {
        let mut afts = *AftTable::canonical().as_array();
        afts[1].intensity = 1.0;
        assert!(AftTable::new(afts).is_err());
        assert!(AftTable::new(*AftTable::canonical().as_array()).is_ok());
    }
}
