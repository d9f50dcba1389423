//! Variance-based global sensitivity analysis: Saltelli cross-sampling on a
//! scrambled Sobol sequence and first, total and second-order indices with
//! bootstrap confidence half-widths.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::config::{ExperimentConfig, REFERENCE_CELLS};
use crate::landscape::Shares;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    /// Rounded half-up after scaling.
    pub integer: bool,
}

impl Parameter {
    pub fn new(name: &str, lower: f64, upper: f64, integer: bool) -> Self {
        Parameter {
            name: name.to_string(),
            lower,
            upper,
            integer,
        }
    }

    fn scale(&self, u: f64) -> f64 {
        let v = self.lower + u * (self.upper - self.lower);
        if self.integer {
            (v + 0.5).floor().min(self.upper)
        } else {
            v
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    pub params: Vec<Parameter>,
}

impl ParameterSpace {
    pub fn new(params: Vec<Parameter>) -> Result<Self> {
        if params.is_empty() {
            return Err(Error::config("sobol.params", "at least one parameter is needed"));
        }
        if let Some(p) = params.iter().find(|p| !(p.lower < p.upper)) {
            return Err(Error::config(
                p.name.clone(),
                format!("lower bound {} must be below upper bound {}", p.lower, p.upper),
            ));
        }
        Ok(ParameterSpace { params })
    }

    /// The nine behavioural, demand and network parameters with their
    /// default ranges.
    pub fn default_model() -> Self {
        ParameterSpace {
            params: vec![
                Parameter::new("attitude_mean", -1.0, 1.0, false),
                Parameter::new("norm_weight_w", 0.0, 1.0, false),
                Parameter::new("inertia_lambda", 0.0, 0.5, false),
                Parameter::new("cm_int", 0.1, 0.8, false),
                Parameter::new("cm_ext", 0.1, 0.8, false),
                Parameter::new("demand_mat", 3000.0, 5000.0, false),
                Parameter::new("demand_nm", 3000.0, 5000.0, false),
                Parameter::new("moore_radius", 1.0, 5.0, true),
                Parameter::new("n_tele", 0.0, 2500.0, true),
            ],
        }
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }
}

/// Number of model evaluations for `n_base` base samples.
pub fn saltelli_rows(n_base: usize, d: usize, second_order: bool) -> usize {
    if second_order {
        n_base * (2 * d + 2)
    } else {
        n_base * (d + 2)
    }
}

/// Saltelli design scaled to the parameter bounds. Per base sample the rows
/// are `A`, `AB_1..AB_d`, then (second order) `BA_1..BA_d`, then `B`, where
/// `AB_i` is `A` with column `i` from `B`.
pub fn saltelli_sample(
    space: &ParameterSpace,
    n_base: usize,
    seed: u64,
    second_order: bool,
) -> Result<Vec<Vec<f64>>> {
    if n_base == 0 {
        return Err(Error::config("sobol.n_base", "must be positive"));
    }
    let d = space.dim();
    if 2 * d > sobol_burley::NUM_DIMENSIONS as usize {
        return Err(Error::config("sobol.params", "too many parameters"));
    }
    let scramble = (seed ^ (seed >> 32)) as u32;
    let base = |i: usize, k: usize| -> f64 {
        sobol_burley::sample(i as u32, k as u32, scramble) as f64
    };
    let scale = |u: &[f64]| -> Vec<f64> {
        u.iter().zip(&space.params).map(|(&u, p)| p.scale(u)).collect()
    };
    let mut rows = Vec::with_capacity(saltelli_rows(n_base, d, second_order));
    for i in 0..n_base {
        let a: Vec<f64> = (0..d).map(|k| base(i, k)).collect();
        let b: Vec<f64> = (0..d).map(|k| base(i, d + k)).collect();
        rows.push(scale(&a));
        for k in 0..d {
            let mut ab = a.clone();
            ab[k] = b[k];
            rows.push(scale(&ab));
        }
        if second_order {
            for k in 0..d {
                let mut ba = b.clone();
                ba[k] = a[k];
                rows.push(scale(&ba));
            }
        }
        rows.push(scale(&b));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolIndices {
    #[serde(rename = "S1")]
    pub s1: Vec<f64>,
    #[serde(rename = "ST")]
    pub st: Vec<f64>,
    /// Upper triangle filled (`s2[j][k]` for `j < k`), `None` without second order.
    #[serde(rename = "S2", skip_serializing_if = "Option::is_none")]
    pub s2: Option<Vec<Vec<f64>>>,
    pub conf: Confidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confidence {
    #[serde(rename = "S1")]
    pub s1: Vec<f64>,
    #[serde(rename = "ST")]
    pub st: Vec<f64>,
    #[serde(rename = "S2", skip_serializing_if = "Option::is_none")]
    pub s2: Option<Vec<Vec<f64>>>,
}

struct Blocks<'a> {
    y: &'a [f64],
    d: usize,
    stride: usize,
}

impl Blocks<'_> {
    fn a(&self, i: usize) -> f64 {
        self.y[i * self.stride]
    }
    fn ab(&self, i: usize, k: usize) -> f64 {
        self.y[i * self.stride + 1 + k]
    }
    fn ba(&self, i: usize, k: usize) -> f64 {
        self.y[i * self.stride + 1 + self.d + k]
    }
    fn b(&self, i: usize) -> f64 {
        self.y[i * self.stride + self.stride - 1]
    }
}

type Point = (Vec<f64>, Vec<f64>, Option<Vec<Vec<f64>>>);

fn estimate(blocks: &Blocks, idx: &[usize], second_order: bool) -> Result<Point> {
    let n = idx.len() as f64;
    let d = blocks.d;
    let mut all: Vec<f64> = idx.iter().map(|&i| blocks.a(i)).collect();
    all.extend(idx.iter().map(|&i| blocks.b(i)));
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    let var = all.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / all.len() as f64;
    if !(var > 1e-300) {
        return Err(Error::DegenerateVariance);
    }
    let s1: Vec<f64> = (0..d)
        .map(|k| {
            idx.iter()
                .map(|&i| blocks.b(i) * (blocks.ab(i, k) - blocks.a(i)))
                .sum::<f64>()
                / n
                / var
        })
        .collect();
    let st: Vec<f64> = (0..d)
        .map(|k| {
            0.5 * idx
                .iter()
                .map(|&i| (blocks.a(i) - blocks.ab(i, k)).powi(2))
                .sum::<f64>()
                / n
                / var
        })
        .collect();
    let s2 = second_order.then(|| {
        let mut m = vec![vec![f64::NAN; d]; d];
        for j in 0..d {
            for k in j + 1..d {
                let vjk = idx
                    .iter()
                    .map(|&i| blocks.ba(i, j) * blocks.ab(i, k) - blocks.a(i) * blocks.b(i))
                    .sum::<f64>()
                    / n;
                m[j][k] = vjk / var - s1[j] - s1[k];
            }
        }
        m
    });
    Ok((s1, st, s2))
}

fn half_width(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return 0.0;
    }
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    1.96 * var.sqrt()
}

/// Sobol indices from outputs evaluated on a [`saltelli_sample`] design.
/// Confidence values are 95% bootstrap half-widths over `resamples` draws.
pub fn sobol_indices(
    outputs: &[f64],
    d: usize,
    second_order: bool,
    resamples: usize,
    seed: u64,
) -> Result<SobolIndices> {
    let stride = if second_order { 2 * d + 2 } else { d + 2 };
    if d == 0 || outputs.is_empty() || outputs.len() % stride != 0 {
        return Err(Error::Usage(format!(
            "{} outputs do not form a Saltelli design for {d} parameters",
            outputs.len()
        )));
    }
    let n = outputs.len() / stride;
    let blocks = Blocks { y: outputs, d, stride };
    let all: Vec<usize> = (0..n).collect();
    let (s1, st, s2) = estimate(&blocks, &all, second_order)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boot_s1 = vec![Vec::with_capacity(resamples); d];
    let mut boot_st = vec![Vec::with_capacity(resamples); d];
    let mut boot_s2 = vec![vec![Vec::with_capacity(resamples); d]; d];
    for _ in 0..resamples {
        let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        // a degenerate resample carries no information about spread
        let Ok((b1, bt, b2)) = estimate(&blocks, &idx, second_order) else {
            continue;
        };
        for k in 0..d {
            boot_s1[k].push(b1[k]);
            boot_st[k].push(bt[k]);
        }
        if let Some(b2) = b2 {
            for j in 0..d {
                for k in j + 1..d {
                    boot_s2[j][k].push(b2[j][k]);
                }
            }
        }
    }
    let conf_s2 = second_order.then(|| {
        (0..d)
            .map(|j| {
                (0..d)
                    .map(|k| if k > j { half_width(&boot_s2[j][k]) } else { f64::NAN })
                    .collect()
            })
            .collect()
    });
    Ok(SobolIndices {
        s1,
        st,
        s2,
        conf: Confidence {
            s1: boot_s1.iter().map(|v| half_width(v)).collect(),
            st: boot_st.iter().map(|v| half_width(v)).collect(),
            s2: conf_s2,
        },
    })
}

/// Turns one design row into a model configuration. Threshold height is
/// pinned to 1 and initial shares to uniform. With `scale_to_grid`, demands
/// and teleconnection counts are scaled by the grid's area relative to the
/// 101 x 101 reference.
pub fn map_sample_to_config(
    base: &ExperimentConfig,
    space: &ParameterSpace,
    row: &[f64],
    scale_to_grid: bool,
) -> Result<ExperimentConfig> {
    if row.len() != space.dim() {
        return Err(Error::Usage(format!(
            "design row has {} values for {} parameters",
            row.len(),
            space.dim()
        )));
    }
    let mut cfg = base.clone();
    cfg.behaviour.git_upper_l = 1.0;
    cfg.init.set(Shares::uniform());
    let area = (cfg.grid.width * cfg.grid.height) as f64 / REFERENCE_CELLS;
    for (p, &v) in space.params.iter().zip(row) {
        let v = match p.name.as_str() {
            "demand_mat" | "demand_nm" | "demand" if scale_to_grid => v * area,
            "n_tele" if scale_to_grid => (v * area + 0.5).floor(),
            _ => v,
        };
        cfg.set_param(&p.name, v)?;
    }
    let max_radius = cfg.grid.width.min(cfg.grid.height) - 1;
    if cfg.network.moore_radius > max_radius {
        return Err(Error::config(
            "moore_radius",
            format!("{} does not fit a {}x{} grid", cfg.network.moore_radius, cfg.grid.width, cfg.grid.height),
        ));
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit_space(d: usize) -> ParameterSpace {
        ParameterSpace::new((0..d).map(|k| Parameter::new(&format!("x{k}"), 0.0, 1.0, false)).collect())
            .unwrap()
    }

    #[test]
    fn design_sizes() {
        let s = unit_space(2);
        assert_eq!(saltelli_sample(&s, 4, 0, true).unwrap().len(), 24);
        assert_eq!(saltelli_sample(&s, 4, 0, false).unwrap().len(), 16);
        assert_eq!(saltelli_sample(&ParameterSpace::default_model(), 256, 0, true).unwrap().len(), 5120);
        assert_eq!(saltelli_sample(&ParameterSpace::default_model(), 2, 0, false).unwrap().len(), 22);
        assert!(saltelli_sample(&s, 0, 0, true).is_err());
    }

    #[test]
    fn design_structure() {
        let s = unit_space(3);
        let rows = saltelli_sample(&s, 8, 5, true).unwrap();
        for blk in rows.chunks(8) {
            let (a, b) = (&blk[0], &blk[7]);
            for k in 0..3 {
                let ab = &blk[1 + k];
                let ba = &blk[4 + k];
                for j in 0..3 {
                    assert_eq!(ab[j], if j == k { b[j] } else { a[j] });
                    assert_eq!(ba[j], if j == k { a[j] } else { b[j] });
                }
            }
        }
    }

    #[test]
    fn samples_respect_bounds_and_integers() {
        let space = ParameterSpace::default_model();
        let rows = saltelli_sample(&space, 64, 11, true).unwrap();
        for row in &rows {
            for (v, p) in row.iter().zip(&space.params) {
                assert!(*v >= p.lower && *v <= p.upper, "{} = {v}", p.name);
                if p.integer {
                    assert_eq!(v.fract(), 0.0);
                }
            }
        }
    }

    #[test]
    fn constant_output_is_degenerate() {
        let y = vec![2.0; 4 * 4];
        assert!(matches!(sobol_indices(&y, 2, false, 10, 0), Err(Error::DegenerateVariance)));
    }

    fn ishigami(x: &[f64]) -> f64 {
        x[0].sin() + 7.0 * x[1].sin().powi(2) + 0.1 * x[2].powi(4) * x[0].sin()
    }

    #[test]
    fn ishigami_indices_near_analytic() {
        let space = ParameterSpace::new(
            (0..3).map(|k| Parameter::new(&format!("x{k}"), -PI, PI, false)).collect(),
        )
        .unwrap();
        let rows = saltelli_sample(&space, 1024, 1, false).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| ishigami(r)).collect();
        let idx = sobol_indices(&y, 3, false, 50, 1).unwrap();
        let (a, b) = (7.0, 0.1);
        let v = a * a / 8.0 + b * PI.powi(4) / 5.0 + b * b * PI.powi(8) / 18.0 + 0.5;
        let v1 = 0.5 * (1.0 + b * PI.powi(4) / 5.0).powi(2);
        let v2 = a * a / 8.0;
        let v13 = b * b * PI.powi(8) * (1.0 / 18.0 - 1.0 / 50.0);
        let s1 = [v1 / v, v2 / v, 0.0];
        let st = [(v1 + v13) / v, v2 / v, v13 / v];
        for k in 0..3 {
            assert!((idx.s1[k] - s1[k]).abs() < 0.05, "S1[{k}] {} vs {}", idx.s1[k], s1[k]);
            assert!((idx.st[k] - st[k]).abs() < 0.05, "ST[{k}] {} vs {}", idx.st[k], st[k]);
            assert!(idx.conf.s1[k] > 0.0);
        }
    }

    #[test]
    fn additive_function_has_no_interactions() {
        let space = unit_space(3);
        let rows = saltelli_sample(&space, 512, 2, true).unwrap();
        let y: Vec<f64> = rows.iter().map(|r| r[0] + 2.0 * r[1] + 0.5 * r[2]).collect();
        let idx = sobol_indices(&y, 3, true, 20, 2).unwrap();
        let s2 = idx.s2.unwrap();
        for j in 0..3 {
            for k in j + 1..3 {
                assert!(s2[j][k].abs() < 0.05, "S2[{j}][{k}] = {}", s2[j][k]);
            }
        }
        // variance shares 1 : 4 : 0.25
        let tot = 5.25;
        for (k, w) in [1.0, 4.0, 0.25].iter().enumerate() {
            assert!((idx.s1[k] - w / tot).abs() < 0.03);
            assert!((idx.st[k] - w / tot).abs() < 0.03);
        }
    }

    #[test]
    fn lower_bound_row_maps_to_config() {
        let space = ParameterSpace::default_model();
        let row: Vec<f64> = space.params.iter().map(|p| p.lower).collect();
        let base = ExperimentConfig::default();
        let cfg = map_sample_to_config(&base, &space, &row, true).unwrap();
        assert_eq!(cfg.behaviour.attitude_mean, -1.0);
        assert_eq!(cfg.behaviour.norm_weight_w, 0.0);
        assert_eq!(cfg.behaviour.inertia_lambda, 0.0);
        assert_eq!(cfg.behaviour.cm_int, 0.1);
        assert_eq!(cfg.behaviour.cm_ext, 0.1);
        assert_eq!(cfg.demand.demand_mat, 3000.0);
        assert_eq!(cfg.demand.demand_nm, 3000.0);
        assert_eq!(cfg.network.moore_radius, 1);
        assert_eq!(cfg.network.n_tele, 0);
        assert_eq!(cfg.behaviour.git_upper_l, 1.0);
        assert_eq!(cfg.init.shares(), Shares::uniform());
    }

    #[test]
    fn grid_scaling() {
        let space = ParameterSpace::default_model();
        let row: Vec<f64> = space.params.iter().map(|p| p.upper).collect();
        let mut base = ExperimentConfig::default();
        base.grid.width = 25;
        base.grid.height = 25;
        let cfg = map_sample_to_config(&base, &space, &row, true).unwrap();
        let area = 625.0 / REFERENCE_CELLS;
        assert!((cfg.demand.demand_mat - 5000.0 * area).abs() < 1e-9);
        assert_eq!(cfg.network.n_tele, (2500.0 * area + 0.5).floor() as usize);
        let raw = map_sample_to_config(&base, &space, &row, false).unwrap();
        assert_eq!(raw.demand.demand_mat, 5000.0);
    }
}
