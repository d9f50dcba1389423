//! Undirected social network over grid cells: a Moore-neighbourhood lattice
//! with hard boundaries, optionally augmented by random long-range
//! teleconnections. Ties are only ever added, never rewired.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::AftKind;
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub moore_radius: usize,
    pub n_teleconnections: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialNetwork {
    width: usize,
    height: usize,
    adjacency: Vec<Vec<u32>>,
}

/// Which neighbours count as conforming to a candidate intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conformity {
    AtOrAbove(f64),
    AtOrBelow(f64),
}

impl Conformity {
    pub fn matches(&self, intensity: f64) -> bool {
        match *self {
            Conformity::AtOrAbove(t) => intensity >= t,
            Conformity::AtOrBelow(t) => intensity <= t,
        }
    }
}

impl SocialNetwork {
    /// Links every cell to all cells within Chebyshev distance `moore_radius`.
    pub fn lattice(width: usize, height: usize, moore_radius: usize) -> Result<Self> {
        if moore_radius == 0 {
            return Err(Error::config("moore_radius", "must be at least 1"));
        }
        if moore_radius >= width.min(height) {
            return Err(Error::config(
                "moore_radius",
                format!(
                    "radius {moore_radius} must be smaller than the grid's shorter side ({})",
                    width.min(height)
                ),
            ));
        }
        let r = moore_radius as isize;
        let mut adjacency = Vec::with_capacity(width * height);
        for y in 0..height as isize {
            for x in 0..width as isize {
                let mut nb = Vec::with_capacity(((2 * r + 1) * (2 * r + 1) - 1) as usize);
                for ny in (y - r).max(0)..=(y + r).min(height as isize - 1) {
                    for nx in (x - r).max(0)..=(x + r).min(width as isize - 1) {
                        if nx != x || ny != y {
                            nb.push((ny as usize * width + nx as usize) as u32);
                        }
                    }
                }
                adjacency.push(nb);
            }
        }
        Ok(SocialNetwork {
            width,
            height,
            adjacency,
        })
    }

    pub fn build(width: usize, height: usize, config: &NetworkConfig) -> Result<Self> {
        let mut net = SocialNetwork::lattice(width, height, config.moore_radius)?;
        net.add_teleconnections(config.n_teleconnections, config.seed)?;
        Ok(net)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn neighbours(&self, i: usize) -> &[u32] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edge_count() as f64 / self.node_count() as f64
    }

    pub fn are_adjacent(&self, i: usize, j: usize) -> bool {
        let (a, b) = if self.adjacency[i].len() <= self.adjacency[j].len() {
            (i, j)
        } else {
            (j, i)
        };
        self.adjacency[a].contains(&(b as u32))
    }

    /// Edges as `(i, j)` with `i < j`, ordered by `i` then insertion.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(i, nb)| {
            nb.iter()
                .map(|&j| j as usize)
                .filter(move |&j| i < j)
                .map(move |j| (i, j))
        })
    }

    /// Edge list CSV, header `i,j`, rows sorted with `i < j`.
    pub fn edge_list_csv(&self) -> String {
        let mut edges: Vec<_> = self.edges().collect();
        edges.sort_unstable();
        let mut out = String::from("i,j\n");
        for (i, j) in edges {
            let _ = writeln!(out, "{i},{j}");
        }
        out
    }

    fn link(&mut self, i: usize, j: usize) {
        self.adjacency[i].push(j as u32);
        self.adjacency[j].push(i as u32);
    }

    /// Adds exactly `n_tele` undirected edges between uniformly drawn,
    /// distinct, not-yet-adjacent cell pairs.
    pub fn add_teleconnections(&mut self, n_tele: usize, seed: u64) -> Result<()> {
        if n_tele == 0 {
            return Ok(());
        }
        let n = self.node_count();
        let total_pairs = n * (n - 1) / 2;
        let available = total_pairs - self.edge_count();
        if n_tele > available {
            return Err(Error::config(
                "n_tele",
                format!("{n_tele} teleconnections requested but only {available} non-adjacent pairs exist"),
            ));
        }
        let mut rng = stream_rng(seed, Stream::Network);

        if 2 * n_tele > available {
            // Dense request: rejection would stall, so shuffle the complement.
            let mut candidates = Vec::with_capacity(available);
            for i in 0..n {
                for j in i + 1..n {
                    if !self.are_adjacent(i, j) {
                        candidates.push((i, j));
                    }
                }
            }
            let (picked, _) = candidates.partial_shuffle(&mut rng, n_tele);
            for &(i, j) in picked.iter() {
                self.link(i, j);
            }
            return Ok(());
        }

        let mut added = 0;
        while added < n_tele {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i == j || self.are_adjacent(i, j) {
                continue;
            }
            self.link(i, j);
            added += 1;
        }
        Ok(())
    }

    /// Fraction of `i`'s neighbours whose intensity satisfies `predicate`.
    pub fn neighbour_intensity_fraction(
        &self,
        intensities: &[f64],
        i: usize,
        predicate: Conformity,
    ) -> Result<f64> {
        let nb = &self.adjacency[i];
        if nb.is_empty() {
            return Err(Error::UndefinedFraction(i));
        }
        let hits = nb
            .iter()
            .filter(|&&j| predicate.matches(intensities[j as usize]))
            .count();
        Ok(hits as f64 / nb.len() as f64)
    }

    /// Number of neighbours of `i` in each AFT class.
    pub fn class_counts(&self, i: usize, class_of: impl Fn(usize) -> AftKind) -> [u32; 3] {
        let mut counts = [0u32; 3];
        for &j in &self.adjacency[i] {
            counts[class_of(j as usize).index()] += 1;
        }
        counts
    }
}
