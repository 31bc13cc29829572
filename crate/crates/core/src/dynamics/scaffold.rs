//! Space-time Poisson scaffolds.
//!
//! A scaffold is a set of channels. Each channel is one family of
//! independent Poisson clocks with a common rate, attached either to every
//! directed edge or to every vertex of a torus. Ring times are stored sorted
//! per clock and merged lazily through a priority queue. Simultaneous rings
//! are ordered by channel index, then by slot.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{ensure_rate, Error, Result};
use crate::lattice::{LatticeGeometry, NeighborTable};
use crate::rng::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    /// One clock per directed edge `x -> y`.
    Edge,
    /// One clock per site.
    Vertex,
}

/// Where a ring happens.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Edge { from: usize, to: usize },
    Vertex(usize),
}

#[derive(Clone, Debug)]
pub struct Channel<K> {
    pub clock: K,
    pub placement: Placement,
    pub rate: f64,
    times: Vec<Vec<f64>>,
}

impl<K> Channel<K> {
    pub fn times(&self, slot: usize) -> &[f64] {
        &self.times[slot]
    }

    pub fn total_events(&self) -> usize {
        self.times.iter().map(Vec::len).sum()
    }

    pub fn num_slots(&self) -> usize {
        self.times.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaffoldEvent<K> {
    pub time: f64,
    pub clock: K,
    pub channel: usize,
    pub target: Target,
}

#[derive(Clone, Debug)]
pub struct Scaffold<K> {
    geometry: LatticeGeometry,
    table: NeighborTable,
    horizon: f64,
    seed: Option<u64>,
    channels: Vec<Channel<K>>,
}

impl<K: Copy> Scaffold<K> {
    /// A scaffold with the given channels and no rings.
    pub fn empty(geometry: LatticeGeometry, horizon: f64, specs: &[(K, Placement, f64)]) -> Result<Self> {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be finite and nonnegative, got {horizon}")));
        }
        let table = geometry.neighbor_table();
        let mut channels = Vec::with_capacity(specs.len());
        for &(clock, placement, rate) in specs {
            ensure_rate("clock rate", rate)?;
            let slots = match placement {
                Placement::Edge => table.num_edges(),
                Placement::Vertex => geometry.num_sites(),
            };
            channels.push(Channel { clock, placement, rate, times: vec![Vec::new(); slots] });
        }
        Ok(Self { geometry, table, horizon, seed: None, channels })
    }

    /// Samples every clock as a Poisson process on `[0, horizon]`.
    pub fn sample(geometry: LatticeGeometry, horizon: f64, specs: &[(K, Placement, f64)], seed: u64) -> Result<Self> {
        let mut s = Self::empty(geometry, horizon, specs)?;
        s.seed = Some(seed);
        let mut rng = rng_from_seed(seed);
        for ch in &mut s.channels {
            if ch.rate == 0.0 {
                continue;
            }
            let exp = Exp::new(ch.rate).expect("positive rate");
            for slot in ch.times.iter_mut() {
                fill_poisson(slot, &exp, horizon, &mut rng);
            }
        }
        Ok(s)
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn neighbor_table(&self) -> &NeighborTable {
        &self.table
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn channels(&self) -> &[Channel<K>] {
        &self.channels
    }

    /// Slot number of a target in a channel of the matching placement.
    pub fn slot_of(&self, target: Target) -> Result<(Placement, usize)> {
        let n = self.geometry.num_sites();
        match target {
            Target::Vertex(x) if x < n => Ok((Placement::Vertex, x)),
            Target::Edge { from, to } if from < n => self
                .table
                .of(from)
                .iter()
                .position(|&y| y as usize == to)
                .map(|k| (Placement::Edge, from * self.table.degree() + k))
                .ok_or_else(|| Error::Domain(format!("{from} -> {to} is not a lattice edge"))),
            _ => Err(Error::Domain(format!("{target:?} outside the window"))),
        }
    }

    fn target_of(&self, placement: Placement, slot: usize) -> Target {
        match placement {
            Placement::Vertex => Target::Vertex(slot),
            Placement::Edge => Target::Edge { from: slot / self.table.degree(), to: self.table.head(slot) },
        }
    }

    /// Adds a ring of channel `channel` at `target` and `time`.
    pub fn push(&mut self, channel: usize, target: Target, time: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&time) {
            return Err(Error::Domain(format!("time {time} outside [0, {}]", self.horizon)));
        }
        let (placement, slot) = self.slot_of(target)?;
        let ch = self
            .channels
            .get_mut(channel)
            .ok_or_else(|| Error::Domain(format!("no channel {channel}")))?;
        if ch.placement != placement {
            return Err(Error::Domain(format!("channel {channel} is not a {placement:?} channel")));
        }
        let times = &mut ch.times[slot];
        match times.binary_search_by(|t| t.total_cmp(&time)) {
            Ok(_) => Err(Error::Domain(format!("duplicate ring at {time}"))),
            Err(pos) => {
                times.insert(pos, time);
                Ok(())
            }
        }
    }

    /// All rings in time order.
    pub fn events(&self) -> Events<'_, K> {
        let mut heap = BinaryHeap::new();
        for (c, ch) in self.channels.iter().enumerate() {
            for (slot, times) in ch.times.iter().enumerate() {
                if let Some(&t) = times.first() {
                    heap.push(HeapEntry { time: t, channel: c, slot, index: 0 });
                }
            }
        }
        Events { scaffold: self, heap }
    }

    pub fn total_events(&self) -> usize {
        self.channels.iter().map(Channel::total_events).sum()
    }

    /// Adds every ring of `source` to channel `channel`. Both must have the
    /// same placement and come from a scaffold on the same geometry.
    pub fn absorb<K2>(&mut self, channel: usize, source: &Channel<K2>) -> Result<()> {
        let ch = self
            .channels
            .get_mut(channel)
            .ok_or_else(|| Error::Domain(format!("no channel {channel}")))?;
        if ch.placement != source.placement || ch.times.len() != source.times.len() {
            return Err(Error::Domain("channel shapes differ".into()));
        }
        for (dst, src) in ch.times.iter_mut().zip(&source.times) {
            if src.is_empty() {
                continue;
            }
            dst.extend_from_slice(src);
            dst.sort_by(f64::total_cmp);
            dst.dedup();
        }
        Ok(())
    }
}

fn fill_poisson<R: Rng>(out: &mut Vec<f64>, exp: &Exp<f64>, horizon: f64, rng: &mut R) {
    let mut t = 0.0;
    loop {
        let next = t + exp.sample(rng);
        if next > horizon {
            break;
        }
        // zero-length gaps have probability zero; keep times strictly increasing
        if next > t {
            out.push(next);
        }
        t = next;
    }
}

#[derive(Debug)]
struct HeapEntry {
    time: f64,
    channel: usize,
    slot: usize,
    index: usize,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.channel.cmp(&self.channel))
            .then(other.slot.cmp(&self.slot))
    }
}

pub struct Events<'a, K> {
    scaffold: &'a Scaffold<K>,
    heap: BinaryHeap<HeapEntry>,
}

impl<K: Copy> Iterator for Events<'_, K> {
    type Item = ScaffoldEvent<K>;

    fn next(&mut self) -> Option<Self::Item> {
        let e = self.heap.pop()?;
        let ch = &self.scaffold.channels[e.channel];
        if let Some(&t) = ch.times[e.slot].get(e.index + 1) {
            self.heap.push(HeapEntry { time: t, index: e.index + 1, ..e });
        }
        Some(ScaffoldEvent {
            time: e.time,
            clock: ch.clock,
            channel: e.channel,
            target: self.scaffold.target_of(ch.placement, e.slot),
        })
    }
}
