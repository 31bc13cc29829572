use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{sample_times, Params, RateModel, Trajectory};
use crate::error::{Error, Result};
use crate::lattice::{Configuration, Density, NeighborTable, State};
use crate::rng::{rng_from_seed, SimRng};

/// Exact event-driven simulator (Gillespie direct method, n-fold way).
///
/// Every site belongs to exactly one rate class: healthy sites are keyed by
/// their numbers of asymptomatic and symptomatic neighbours, infected sites
/// by their state. All sites of a class share one total outgoing rate, so
/// the total rate of the lattice is `sum(class size * class rate)` and an
/// event costs `O(classes + 2d)`.
pub struct CtmcSimulator<R = SimRng> {
    config: Configuration,
    table: NeighborTable,
    model: RateModel,
    degree: usize,
    n1: Vec<u8>,
    n2: Vec<u8>,
    class_of: Vec<u16>,
    slot: Vec<u32>,
    members: Vec<Vec<u32>>,
    class_rate: Vec<f64>,
    time: f64,
    infected: usize,
    extinction_time: Option<f64>,
    events: u64,
    last_changed: usize,
    rng: R,
}

/// Mismatch between maintained and recomputed bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct BookkeepingError(pub String);

impl<R: Rng> CtmcSimulator<R> {
    pub fn new(initial: Configuration, params: &Params, rng: R) -> Result<Self> {
        params.validate()?;
        Self::with_rate_model(initial, params.rate_model(), rng)
    }

    /// Simulator for an arbitrary [`RateModel`].
    pub fn with_rate_model(mut initial: Configuration, model: RateModel, rng: R) -> Result<Self> {
        model.validate()?;
        let geometry = *initial.geometry();
        let degree = geometry.degree();
        if degree > u8::MAX as usize {
            return Err(Error::InvalidParameter(format!("dimension {} too large", geometry.dim())));
        }
        if model.collapsed {
            for s in initial.states_mut() {
                if *s == State::Asymptomatic {
                    *s = State::Symptomatic;
                }
            }
        }
        let n = geometry.num_sites();
        let table = geometry.neighbor_table();
        let healthy_classes = (degree + 1) * (degree + 1);
        let mut class_rate = Vec::with_capacity(healthy_classes + 2);
        for n1 in 0..=degree {
            for n2 in 0..=degree {
                class_rate.push(if n1 + n2 <= degree {
                    model.transitions(State::Healthy, n1, n2, degree)[0].1
                } else {
                    0.0
                });
            }
        }
        let one_total: f64 = if model.collapsed {
            0.0
        } else {
            model.transitions(State::Asymptomatic, 0, 0, degree).iter().map(|t| t.1).sum()
        };
        class_rate.push(one_total);
        class_rate.push(model.two_to_zero);

        let mut sim = Self {
            table,
            model,
            degree,
            n1: vec![0; n],
            n2: vec![0; n],
            class_of: vec![0; n],
            slot: vec![0; n],
            members: vec![Vec::new(); class_rate.len()],
            class_rate,
            time: 0.0,
            infected: initial.infected_count(),
            extinction_time: None,
            events: 0,
            last_changed: 0,
            rng,
            config: initial,
        };
        let (n1, n2) = sim.recount();
        sim.n1 = n1;
        sim.n2 = n2;
        for site in 0..n {
            let c = sim.class_for(site);
            sim.class_of[site] = c as u16;
            sim.slot[site] = sim.members[c].len() as u32;
            sim.members[c].push(site as u32);
        }
        if sim.infected == 0 {
            sim.extinction_time = Some(0.0);
        }
        Ok(sim)
    }

    fn recount(&self) -> (Vec<u8>, Vec<u8>) {
        let n = self.config.states().len();
        let states = self.config.states();
        let mut n1 = vec![0u8; n];
        let mut n2 = vec![0u8; n];
        for site in 0..n {
            for &y in self.table.of(site) {
                match states[y as usize] {
                    State::Asymptomatic => n1[site] += 1,
                    State::Symptomatic => n2[site] += 1,
                    State::Healthy => {}
                }
            }
        }
        (n1, n2)
    }

    #[inline]
    fn asym_class(&self) -> usize {
        (self.degree + 1) * (self.degree + 1)
    }

    #[inline]
    fn class_for(&self, site: usize) -> usize {
        match self.config.states()[site] {
            State::Healthy => self.n1[site] as usize * (self.degree + 1) + self.n2[site] as usize,
            State::Asymptomatic => self.asym_class(),
            State::Symptomatic => self.asym_class() + 1,
        }
    }

    fn move_to_class(&mut self, site: usize, new_class: usize) {
        let old = self.class_of[site] as usize;
        if old == new_class {
            return;
        }
        let pos = self.slot[site] as usize;
        let list = &mut self.members[old];
        list.swap_remove(pos);
        if pos < list.len() {
            let moved = list[pos] as usize;
            self.slot[moved] = pos as u32;
        }
        self.slot[site] = self.members[new_class].len() as u32;
        self.members[new_class].push(site as u32);
        self.class_of[site] = new_class as u16;
    }

    fn set_state(&mut self, site: usize, new: State) {
        let old = self.config.states()[site];
        if old == new {
            return;
        }
        self.config.states_mut()[site] = new;
        match (old.is_infected(), new.is_infected()) {
            (false, true) => self.infected += 1,
            (true, false) => self.infected -= 1,
            _ => {}
        }
        for k in 0..self.degree {
            let y = self.table.of(site)[k] as usize;
            match old {
                State::Asymptomatic => self.n1[y] -= 1,
                State::Symptomatic => self.n2[y] -= 1,
                State::Healthy => {}
            }
            match new {
                State::Asymptomatic => self.n1[y] += 1,
                State::Symptomatic => self.n2[y] += 1,
                State::Healthy => {}
            }
            if self.config.states()[y] == State::Healthy {
                let c = self.class_for(y);
                self.move_to_class(y, c);
            }
        }
        let c = self.class_for(site);
        self.move_to_class(site, c);
        if self.infected == 0 && self.extinction_time.is_none() {
            self.extinction_time = Some(self.time);
        }
    }

    /// Sum over classes of size times per-site rate.
    pub fn total_rate(&self) -> f64 {
        self.members
            .iter()
            .zip(&self.class_rate)
            .map(|(m, &r)| m.len() as f64 * r)
            .sum()
    }

    /// Performs one event. Returns `false` if no event can ever occur.
    pub fn step(&mut self) -> bool {
        let total = self.total_rate();
        if total <= 0.0 {
            return false;
        }
        let dt = Exp::new(total).expect("positive total rate").sample(&mut self.rng);
        self.time += dt;
        self.fire(total);
        true
    }

    fn fire(&mut self, total: f64) {
        let target = self.rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (c, (m, &r)) in self.members.iter().zip(&self.class_rate).enumerate() {
            let w = m.len() as f64 * r;
            if w <= 0.0 {
                continue;
            }
            acc += w;
            chosen = Some(c);
            if target < acc {
                break;
            }
        }
        let class = chosen.expect("positive total rate implies a populated class");
        let list = &self.members[class];
        let site = list[self.rng.random_range(0..list.len())] as usize;
        let new = match self.config.states()[site] {
            State::Healthy => self.model.infected_state(),
            State::Asymptomatic => {
                let up = self.model.one_to_two;
                let down = self.model.one_to_zero;
                if down == 0.0 || self.rng.random::<f64>() * (up + down) < up {
                    State::Symptomatic
                } else {
                    State::Healthy
                }
            }
            State::Symptomatic => State::Healthy,
        };
        self.events += 1;
        self.last_changed = site;
        self.set_state(site, new);
    }

    /// Runs until time `t` (or until nothing can change) and sets the clock
    /// to `t`. The pending exponential clock is discarded at `t`, which is
    /// exact by memorylessness.
    pub fn advance_to(&mut self, t: f64) {
        while self.time < t {
            let total = self.total_rate();
            if total <= 0.0 {
                break;
            }
            let dt = Exp::new(total).expect("positive total rate").sample(&mut self.rng);
            if self.time + dt > t {
                break;
            }
            self.time += dt;
            self.fire(total);
        }
        self.time = self.time.max(t);
    }

    /// Runs until `stop` returns true after an event, nothing can change,
    /// or time exceeds `t_max`. `stop` receives the site that just changed.
    /// Returns whether `stop` fired.
    pub fn run_until<F: FnMut(&Self, usize) -> bool>(&mut self, t_max: f64, mut stop: F) -> bool {
        loop {
            let total = self.total_rate();
            if total <= 0.0 {
                return false;
            }
            let dt = Exp::new(total).expect("positive total rate").sample(&mut self.rng);
            if self.time + dt > t_max {
                self.time = t_max;
                return false;
            }
            self.time += dt;
            self.fire(total);
            if stop(self, self.last_changed) {
                return true;
            }
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn into_config(self) -> Configuration {
        self.config
    }

    pub fn infected(&self) -> usize {
        self.infected
    }

    pub fn is_extinct(&self) -> bool {
        self.infected == 0
    }

    pub fn extinction_time(&self) -> Option<f64> {
        self.extinction_time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn density(&self) -> Density {
        self.config.density()
    }

    /// Recomputes neighbour counts, class memberships and per-site rates
    /// from scratch and compares them with the maintained values.
    pub fn check_bookkeeping(&self) -> std::result::Result<(), BookkeepingError> {
        let (n1, n2) = self.recount();
        if n1 != self.n1 || n2 != self.n2 {
            return Err(BookkeepingError("neighbour counts drifted".into()));
        }
        let mut sizes = vec![0usize; self.members.len()];
        let states = self.config.states();
        for site in 0..states.len() {
            let c = self.class_for(site);
            if self.class_of[site] as usize != c {
                return Err(BookkeepingError(format!("site {site} in class {} not {c}", self.class_of[site])));
            }
            if self.members[c][self.slot[site] as usize] as usize != site {
                return Err(BookkeepingError(format!("slot of site {site} is stale")));
            }
            sizes[c] += 1;
            let local: f64 = self
                .model
                .transitions(states[site], n1[site] as usize, n2[site] as usize, self.degree)
                .iter()
                .map(|t| t.1)
                .sum();
            let class_rate = self.class_rate[c];
            if local.to_bits() != class_rate.to_bits() {
                return Err(BookkeepingError(format!(
                    "site {site}: local rate {local} but class rate {class_rate}"
                )));
            }
        }
        for (c, m) in self.members.iter().enumerate() {
            if m.len() != sizes[c] {
                return Err(BookkeepingError(format!("class {c} has {} members, expected {}", m.len(), sizes[c])));
            }
        }
        let infected = states.iter().filter(|s| s.is_infected()).count();
        if infected != self.infected {
            return Err(BookkeepingError(format!("infected counter {} but {infected} infected", self.infected)));
        }
        Ok(())
    }
}

/// Simulates from `initial` up to `t_max`, sampling densities every
/// `sample_dt` and at `t_max`. Stops early on extinction; later samples are
/// the all-healthy density.
pub fn run_ctmc(
    initial: &Configuration,
    params: &Params,
    t_max: f64,
    sample_dt: f64,
    seed: u64,
) -> Result<Trajectory> {
    let times = sample_times(t_max, sample_dt)?;
    let mut sim = CtmcSimulator::new(initial.clone(), params, rng_from_seed(seed))?;
    let mut densities = Vec::with_capacity(times.len());
    for &t in &times {
        if !sim.is_extinct() {
            sim.advance_to(t);
        }
        densities.push(sim.density());
    }
    let extinction_time = sim.extinction_time();
    Ok(Trajectory {
        times,
        densities,
        final_config: sim.into_config(),
        extinction_time,
    })
}
