//! Periodic lattice geometry and configurations.
//!
//! The torus `{0, ..., L-1}^d` stands in for the infinite lattice. Sites are
//! flattened row-major (axis 0 varies slowest) and neighbours are always
//! listed per axis, minus direction first, so replaying a graphical
//! representation is deterministic.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// State of a single site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum State {
    Healthy = 0,
    /// Infected, no symptoms (also "burning" in the forest-fire reading).
    Asymptomatic = 1,
    /// Infected with symptoms (also "burnt").
    Symptomatic = 2,
}

impl State {
    pub const ALL: [State; 3] = [State::Healthy, State::Asymptomatic, State::Symptomatic];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_infected(self) -> bool {
        self != State::Healthy
    }

    pub fn from_index(i: u8) -> Result<State> {
        match i {
            0 => Ok(State::Healthy),
            1 => Ok(State::Asymptomatic),
            2 => Ok(State::Symptomatic),
            _ => Err(Error::Domain(format!("site state must be 0, 1 or 2, got {i}"))),
        }
    }

    /// Grey level used in PGM snapshots: white, grey, black.
    pub fn grey_level(self) -> u8 {
        match self {
            State::Healthy => 255,
            State::Asymptomatic => 128,
            State::Symptomatic => 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeGeometry {
    dim: usize,
    side: usize,
}

impl LatticeGeometry {
    /// A `dim`-dimensional torus of side `side`. The side must be at least
    /// three so that every site has `2 * dim` distinct neighbours.
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if side < 3 {
            return Err(Error::InvalidParameter(format!(
                "side length must be at least 3, got {side}"
            )));
        }
        let sites = (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(side));
        match sites {
            Some(n) if n <= u32::MAX as usize => Ok(Self { dim, side }),
            _ => Err(Error::InvalidParameter(format!(
                "a torus of side {side} in dimension {dim} is too large"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Number of neighbours of every site, `2d`.
    pub fn degree(&self) -> usize {
        2 * self.dim
    }

    pub fn num_sites(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    fn stride(&self, axis: usize) -> usize {
        self.side.pow((self.dim - 1 - axis) as u32)
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site < self.num_sites() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "site {site} outside a lattice of {} sites",
                self.num_sites()
            )))
        }
    }

    pub fn coords(&self, site: usize) -> Result<Vec<usize>> {
        self.check_site(site)?;
        Ok((0..self.dim)
            .map(|axis| (site / self.stride(axis)) % self.side)
            .collect())
    }

    pub fn site(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.dim || coords.iter().any(|&c| c >= self.side) {
            return Err(Error::Domain(format!(
                "coordinates {coords:?} invalid for side {} in dimension {}",
                self.side, self.dim
            )));
        }
        Ok(coords
            .iter()
            .enumerate()
            .map(|(axis, &c)| c * self.stride(axis))
            .sum())
    }

    /// The site playing the role of the origin: the centre of the box.
    pub fn origin(&self) -> usize {
        let c = self.side / 2;
        (0..self.dim).map(|axis| c * self.stride(axis)).sum()
    }

    /// Nearest neighbours of `site`, per axis, minus direction then plus.
    pub fn neighbors(&self, site: usize) -> Result<Vec<usize>> {
        self.check_site(site)?;
        let mut out = Vec::with_capacity(self.degree());
        self.push_neighbors(site, &mut out);
        Ok(out)
    }

    fn push_neighbors(&self, site: usize, out: &mut Vec<usize>) {
        for axis in 0..self.dim {
            let stride = self.stride(axis);
            let c = (site / stride) % self.side;
            let base = site - c * stride;
            out.push(base + ((c + self.side - 1) % self.side) * stride);
            out.push(base + ((c + 1) % self.side) * stride);
        }
    }

    /// Flattened neighbour lists for every site.
    pub fn neighbor_table(&self) -> NeighborTable {
        let mut flat = Vec::with_capacity(self.num_sites() * self.degree());
        let mut buf = Vec::with_capacity(self.degree());
        for site in 0..self.num_sites() {
            buf.clear();
            self.push_neighbors(site, &mut buf);
            flat.extend(buf.iter().map(|&y| y as u32));
        }
        NeighborTable { degree: self.degree(), flat }
    }

    /// Largest per-axis periodic distance between two sites.
    pub fn sup_distance(&self, a: usize, b: usize) -> usize {
        (0..self.dim)
            .map(|axis| {
                let s = self.stride(axis);
                let (ca, cb) = ((a / s) % self.side, (b / s) % self.side);
                let d = ca.abs_diff(cb);
                d.min(self.side - d)
            })
            .max()
            .unwrap_or(0)
    }
}

/// Precomputed neighbour lists; entry `site * degree + k` is the `k`-th
/// neighbour of `site`, which also numbers the directed edges.
#[derive(Clone, Debug)]
pub struct NeighborTable {
    degree: usize,
    flat: Vec<u32>,
}

impl NeighborTable {
    #[inline]
    pub fn of(&self, site: usize) -> &[u32] {
        &self.flat[site * self.degree..(site + 1) * self.degree]
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Head of directed edge number `edge`.
    #[inline]
    pub fn head(&self, edge: usize) -> usize {
        self.flat[edge] as usize
    }

    pub fn num_edges(&self) -> usize {
        self.flat.len()
    }
}

/// Empirical densities `(u0, u1, u2)` of the three states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub u0: f64,
    pub u1: f64,
    pub u2: f64,
}

impl Density {
    pub const HEALTHY: Density = Density { u0: 1.0, u1: 0.0, u2: 0.0 };

    pub fn from_counts(counts: [usize; 3]) -> Density {
        let n = (counts[0] + counts[1] + counts[2]) as f64;
        Density {
            u0: counts[0] as f64 / n,
            u1: counts[1] as f64 / n,
            u2: counts[2] as f64 / n,
        }
    }

    pub fn infected(&self) -> f64 {
        self.u1 + self.u2
    }
}

/// One state per site of a torus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    geometry: LatticeGeometry,
    states: Vec<State>,
}

impl Configuration {
    pub fn uniform(geometry: LatticeGeometry, state: State) -> Self {
        Self { states: vec![state; geometry.num_sites()], geometry }
    }

    pub fn healthy(geometry: LatticeGeometry) -> Self {
        Self::uniform(geometry, State::Healthy)
    }

    pub fn from_states(geometry: LatticeGeometry, states: Vec<State>) -> Result<Self> {
        if states.len() != geometry.num_sites() {
            return Err(Error::Domain(format!(
                "expected {} states, got {}",
                geometry.num_sites(),
                states.len()
            )));
        }
        Ok(Self { geometry, states })
    }

    /// Healthy everywhere except `state` at `site`.
    pub fn single(geometry: LatticeGeometry, site: usize, state: State) -> Result<Self> {
        let mut c = Self::healthy(geometry);
        c.set(site, state)?;
        Ok(c)
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn get(&self, site: usize) -> Result<State> {
        self.states
            .get(site)
            .copied()
            .ok_or_else(|| Error::Domain(format!("site {site} outside the lattice")))
    }

    pub fn set(&mut self, site: usize, state: State) -> Result<()> {
        let slot = self
            .states
            .get_mut(site)
            .ok_or_else(|| Error::Domain(format!("site {site} outside the lattice")))?;
        *slot = state;
        Ok(())
    }

    pub(crate) fn states_mut(&mut self) -> &mut [State] {
        &mut self.states
    }

    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0usize; 3];
        for s in &self.states {
            c[s.index()] += 1;
        }
        c
    }

    pub fn density(&self) -> Density {
        Density::from_counts(self.counts())
    }

    pub fn infected_count(&self) -> usize {
        self.states.iter().filter(|s| s.is_infected()).count()
    }

    pub fn infected_sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_infected())
            .map(|(i, _)| i)
    }

    /// Fraction of the neighbours of `site` that are in state `state`.
    pub fn neighbor_fraction(&self, site: usize, state: State) -> Result<f64> {
        let nbrs = self.geometry.neighbors(site)?;
        let count = nbrs.iter().filter(|&&y| self.states[y] == state).count();
        Ok(count as f64 / self.geometry.degree() as f64)
    }

    /// Writes a plain (P2) PGM image of a two-dimensional configuration:
    /// healthy white, asymptomatic grey, symptomatic black.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        if self.geometry.dim() != 2 {
            return Err(Error::Domain(format!(
                "PGM snapshots need a 2-dimensional lattice, got dimension {}",
                self.geometry.dim()
            )));
        }
        let side = self.geometry.side();
        writeln!(out, "P2")?;
        writeln!(out, "{side} {side}")?;
        writeln!(out, "255")?;
        for row in self.states.chunks(side) {
            // plain PGM lines stay under 70 characters
            for chunk in row.chunks(16) {
                let line: Vec<String> = chunk.iter().map(|s| s.grey_level().to_string()).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
        }
        Ok(())
    }
}
