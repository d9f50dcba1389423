//! Outcome metrics: intensity shares, total service supply, patch structure
//! and effective mesh size.

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::landscape::{production, AftKind, AftTable, LandscapeGrid, Production, Shares};

pub fn intensity_shares(grid: &LandscapeGrid) -> Shares {
    shares_of(grid.cells.iter().map(|c| c.aft))
}

pub fn shares_of(afts: impl Iterator<Item = AftKind>) -> Shares {
    let mut counts = [0usize; 3];
    let mut total = 0usize;
    for a in afts {
        counts[a.index()] += 1;
        total += 1;
    }
    let total = total.max(1) as f64;
    Shares(counts.map(|c| c as f64 / total))
}

/// Summed production of every cell's incumbent AFT.
pub fn total_supply(grid: &LandscapeGrid, afts: &AftTable) -> Production {
    grid.cells.iter().fold(Production::default(), |acc, c| {
        let p = production(afts.get(c.aft), c);
        Production {
            material: acc.material + p.material,
            non_material: acc.non_material + p.non_material,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    /// Von Neumann (edge) adjacency.
    #[default]
    Four,
    /// Moore (edge or corner) adjacency.
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Connectivity::Eight => &[
                (1, 0),
                (-1, 0),
                (0, 1),
                (0, -1),
                (1, 1),
                (1, -1),
                (-1, 1),
                (-1, -1),
            ],
        }
    }
}

/// Patch areas for each AFT class, largest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchDecomposition {
    pub areas: [Vec<usize>; 3],
}

impl PatchDecomposition {
    pub fn patch_count(&self) -> usize {
        self.areas.iter().map(Vec::len).sum()
    }
}

/// Connected-component areas of an arbitrary label raster (row-major).
pub fn patch_areas(
    width: usize,
    height: usize,
    labels: &[u8],
    connectivity: Connectivity,
) -> Vec<(u8, usize)> {
    assert_eq!(labels.len(), width * height, "label raster size mismatch");
    let mut seen = vec![false; labels.len()];
    let mut stack = Vec::new();
    let mut patches = Vec::new();
    for start in 0..labels.len() {
        if seen[start] {
            continue;
        }
        let class = labels[start];
        seen[start] = true;
        stack.push(start);
        let mut area = 0;
        while let Some(i) = stack.pop() {
            area += 1;
            let (x, y) = ((i % width) as isize, (i / width) as isize);
            for &(dx, dy) in connectivity.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                    continue;
                }
                let j = ny as usize * width + nx as usize;
                if !seen[j] && labels[j] == class {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        patches.push((class, area));
    }
    patches
}

pub fn patch_decomposition(grid: &LandscapeGrid, connectivity: Connectivity) -> PatchDecomposition {
    let labels: Vec<u8> = grid.cells.iter().map(|c| c.aft.id()).collect();
    let mut areas: [Vec<usize>; 3] = Default::default();
    for (class, area) in patch_areas(grid.width, grid.height, &labels, connectivity) {
        areas[class as usize].push(area);
    }
    for a in &mut areas {
        a.sort_unstable_by(|x, y| y.cmp(x));
    }
    PatchDecomposition { areas }
}

/// Effective mesh size of a label raster: sum of squared patch areas over total area.
pub fn mesh_of_labels(width: usize, height: usize, labels: &[u8], connectivity: Connectivity) -> f64 {
    let total = (width * height) as f64;
    let sum_sq: f64 = patch_areas(width, height, labels, connectivity)
        .into_iter()
        .map(|(_, a)| (a * a) as f64)
        .sum();
    sum_sq / total
}

pub fn mesh_connectivity(grid: &LandscapeGrid, connectivity: Connectivity) -> f64 {
    let labels: Vec<u8> = grid.cells.iter().map(|c| c.aft.id()).collect();
    mesh_of_labels(grid.width, grid.height, &labels, connectivity)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub final_shares: Shares,
    pub s_mat: f64,
    pub s_nm: f64,
    pub final_tick: u64,
    /// First tick at which the stopping rule held, if it ever did.
    pub stabilised_at: Option<u64>,
}

pub fn share_trajectory_summary(trajectory: &Trajectory) -> Result<RunSummary> {
    let last = trajectory
        .rows
        .last()
        .ok_or_else(|| Error::Usage("cannot summarise an empty trajectory".into()))?;
    Ok(RunSummary {
        final_shares: last.shares,
        s_mat: last.s_mat,
        s_nm: last.s_nm,
        final_tick: last.tick,
        stabilised_at: trajectory.stabilisation_tick(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviour::BehaviouralProfile;
    use crate::dynamics::{StoppingRule, TrajectoryRow};
    use crate::landscape::{default_peaks, generate_capitals};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid_with(width: usize, height: usize, afts: &[AftKind]) -> LandscapeGrid {
        let f = generate_capitals(width.max(3), height.max(3), &default_peaks(), 0.0, 0).unwrap();
        let mut g = LandscapeGrid::from_capitals(&f, BehaviouralProfile::default());
        g.width = width;
        g.height = height;
        g.cells.truncate(width * height);
        for (c, &a) in g.cells.iter_mut().zip(afts) {
            c.aft = a;
        }
        g
    }

    #[test]
    fn share_examples() {
        use AftKind::*;
        let g = grid_with(3, 3, &[Conservation; 9]);
        assert_eq!(intensity_shares(&g), Shares::new(1.0, 0.0, 0.0));
        let g = grid_with(2, 2, &[Conservation, MediumIntensity, HighIntensity, HighIntensity]);
        assert_eq!(intensity_shares(&g), Shares::new(0.25, 0.25, 0.5));
    }

    #[test]
    fn supply_examples() {
        let t = AftTable::canonical();
        let f = generate_capitals(101, 101, &default_peaks(), 0.0, 0).unwrap();
        let mut g = LandscapeGrid::from_capitals(&f, BehaviouralProfile::default());
        assert_eq!(total_supply(&g, &t).material, 0.0);
        for c in &mut g.cells {
            c.aft = AftKind::HighIntensity;
        }
        assert_eq!(total_supply(&g, &t).non_material, 0.0);
        for c in &mut g.cells {
            c.aft = AftKind::MediumIntensity;
        }
        let s = total_supply(&g, &t);
        let sum_prod: f64 = f.c_prod.iter().sum();
        let sum_nat: f64 = f.c_nat.iter().sum();
        assert_abs_diff_eq!(s.material, 0.5 * sum_prod, epsilon = 1e-9);
        assert_abs_diff_eq!(s.non_material, 0.5 * sum_nat, epsilon = 1e-9);
    }

    #[test]
    fn mesh_examples() {
        assert_eq!(mesh_of_labels(4, 4, &[0; 16], Connectivity::Four), 16.0);
        let halves: Vec<u8> = (0..16).map(|i| u8::from(i % 4 >= 2)).collect();
        assert_eq!(mesh_of_labels(4, 4, &halves, Connectivity::Four), 8.0);
        let checker: Vec<u8> = (0..16).map(|i| ((i % 4 + i / 4) % 2) as u8).collect();
        assert_eq!(mesh_of_labels(4, 4, &checker, Connectivity::Four), 1.0);
        // diagonals join under 8-connectivity: two patches of 8
        assert_eq!(mesh_of_labels(4, 4, &checker, Connectivity::Eight), 8.0);
    }

    #[test]
    fn decomposition_areas_sum_to_class_counts() {
        use AftKind::*;
        let afts = [
            Conservation, Conservation, HighIntensity,
            HighIntensity, MediumIntensity, HighIntensity,
            Conservation, Conservation, HighIntensity,
        ];
        let g = grid_with(3, 3, &afts);
        let d = patch_decomposition(&g, Connectivity::Four);
        assert_eq!(d.areas[0], vec![2, 2]);
        assert_eq!(d.areas[1], vec![1]);
        assert_eq!(d.areas[2], vec![3, 1]);
        assert_eq!(d.patch_count(), 5);
        assert_abs_diff_eq!(mesh_connectivity(&g, Connectivity::Four), 19.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn summary_of_trajectories() {
        let row = |tick, c: f64| TrajectoryRow {
            tick,
            shares: Shares::new(c, 1.0 - c, 0.0),
            s_mat: 1.0 + tick as f64,
            s_nm: 2.0,
            mean_attitude: 0.0,
        };
        let rule = StoppingRule {
            max_ticks: 100,
            window: 5,
            epsilon: 0.01,
        };
        let single = Trajectory { rows: vec![row(0, 0.3)], rule, settle_from: 0 };
        let s = share_trajectory_summary(&single).unwrap();
        assert_eq!(s.final_shares, Shares::new(0.3, 0.7, 0.0));
        assert_eq!(s.s_mat, 1.0);
        assert_eq!(s.stabilised_at, None);

        let constant = Trajectory {
            rows: (0..12).map(|t| row(t, 0.3)).collect(),
            rule,
            settle_from: 0,
        };
        assert_eq!(share_trajectory_summary(&constant).unwrap().stabilised_at, Some(5));

        let empty = Trajectory { rows: vec![], rule, settle_from: 0 };
        assert!(matches!(share_trajectory_summary(&empty), Err(Error::Usage(_))));
    }

    fn rotate(width: usize, height: usize, labels: &[u8]) -> Vec<u8> {
        // 90 degrees clockwise: new dims (height, width)
        let mut out = vec![0; labels.len()];
        for y in 0..height {
            for x in 0..width {
                let (nx, ny) = (height - 1 - y, x);
                out[ny * height + nx] = labels[y * width + x];
            }
        }
        out
    }

    fn component_of(w: usize, h: usize, labels: &[u8], start: usize) -> Vec<usize> {
        let mut seen = vec![false; labels.len()];
        let mut stack = vec![start];
        let mut out = Vec::new();
        seen[start] = true;
        while let Some(i) = stack.pop() {
            out.push(i);
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if !seen[j] && labels[j] == labels[start] {
                    seen[j] = true;
                    stack.push(j);
                }
            };
            if x + 1 < w { visit(i + 1); }
            if x > 0 { visit(i - 1); }
            if y + 1 < h { visit(i + w); }
            if y > 0 { visit(i - w); }
        }
        out
    }

    proptest! {
        #[test]
        fn mesh_invariances(w in 1usize..9, h in 1usize..9, raw in prop::collection::vec(0u8..3, 64), perm in Just([2u8, 0, 1])) {
            let labels: Vec<u8> = raw[..w * h].to_vec();
            for conn in [Connectivity::Four, Connectivity::Eight] {
                let m = mesh_of_labels(w, h, &labels, conn);
                let relabelled: Vec<u8> = labels.iter().map(|&l| perm[l as usize]).collect();
                prop_assert_eq!(m, mesh_of_labels(w, h, &relabelled, conn));
                prop_assert_eq!(m, mesh_of_labels(h, w, &rotate(w, h, &labels), conn));
                prop_assert!(m >= 1.0 - 1e-12 && m <= (w * h) as f64 + 1e-12);
            }
        }

        #[test]
        fn merging_never_decreases_mesh(w in 2usize..8, h in 2usize..8, raw in prop::collection::vec(0u8..3, 64), pick in 0usize..64) {
            let labels: Vec<u8> = raw[..w * h].to_vec();
            let i = pick % (w * h);
            // absorb the whole patch containing i into an adjacent patch of another class
            let patch = component_of(w, h, &labels, i);
            let target = patch.iter().find_map(|&c| {
                let (x, y) = (c % w, c / w);
                [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)].iter().find_map(|&(dx, dy)| {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        return None;
                    }
                    let l = labels[ny as usize * w + nx as usize];
                    (l != labels[i]).then_some(l)
                })
            });
            if let Some(t) = target {
                let mut merged = labels.clone();
                for &c in &patch {
                    merged[c] = t;
                }
                prop_assert!(
                    mesh_of_labels(w, h, &merged, Connectivity::Four)
                        > mesh_of_labels(w, h, &labels, Connectivity::Four)
                );
            }
        }
    }
}
