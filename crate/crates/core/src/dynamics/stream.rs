use super::scaffold::{Placement, Scaffold, ScaffoldEvent, Target};
use super::{sample_times, Params, Trajectory, Variant};
use crate::error::{Error, Result};
use crate::lattice::{Configuration, LatticeGeometry, State};

/// Clock families of the graphical representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Clock {
    /// Type-1 arrow: a `1` at the tail infects a healthy head.
    Arrow1,
    /// Type-2 arrow: a `2` at the tail infects a healthy head.
    Arrow2,
    /// Dot: `1 -> 2`.
    Dot,
    /// Cross: recovery.
    Cross,
}

impl Clock {
    pub const ALL: [Clock; 4] = [Clock::Arrow1, Clock::Arrow2, Clock::Dot, Clock::Cross];

    pub fn channel(self) -> usize {
        self as usize
    }

    pub fn placement(self) -> Placement {
        match self {
            Clock::Arrow1 | Clock::Arrow2 => Placement::Edge,
            Clock::Dot | Clock::Cross => Placement::Vertex,
        }
    }
}

/// Graphical representation of one process on a finite space-time window.
///
/// Channel rates: type-1 arrows `beta1/2d` per directed edge, type-2 arrows
/// `beta2/2d`, dots `gamma` and crosses `1` per site. For the forest-fire
/// variant dots ring at `1 + gamma` and crosses only act on `2`s; in the
/// collapsed variant only type-2 arrows and crosses exist and infections
/// produce `2`s.
#[derive(Clone, Debug)]
pub struct EventStream {
    scaffold: Scaffold<Clock>,
    variant: Variant,
}

fn channel_specs(params: &Params, degree: usize) -> [(Clock, Placement, f64); 4] {
    let deg = degree as f64;
    let (a1, a2, dot) = match params.variant {
        Variant::Standard => (params.beta1 / deg, params.beta2 / deg, params.gamma),
        Variant::ForestFire => (params.beta1 / deg, 0.0, 1.0 + params.gamma),
        Variant::Collapsed => (0.0, params.beta2 / deg, 0.0),
    };
    [
        (Clock::Arrow1, Placement::Edge, a1),
        (Clock::Arrow2, Placement::Edge, a2),
        (Clock::Dot, Placement::Vertex, dot),
        (Clock::Cross, Placement::Vertex, 1.0),
    ]
}

impl EventStream {
    /// A stream with no events, for hand-built scenarios.
    pub fn empty(geometry: LatticeGeometry, horizon: f64, params: &Params) -> Result<Self> {
        params.validate()?;
        let specs = channel_specs(params, geometry.degree());
        Ok(Self { scaffold: Scaffold::empty(geometry, horizon, &specs)?, variant: params.variant })
    }

    /// Wraps a scaffold whose channels are exactly `Clock::ALL` in order.
    pub fn from_scaffold(scaffold: Scaffold<Clock>, variant: Variant) -> Result<Self> {
        let ok = scaffold.channels().len() == 4
            && scaffold
                .channels()
                .iter()
                .zip(Clock::ALL)
                .all(|(ch, c)| ch.clock == c && ch.placement == c.placement());
        if !ok {
            return Err(Error::Domain("scaffold channels must be arrow1, arrow2, dot, cross".into()));
        }
        Ok(Self { scaffold, variant })
    }

    pub fn push(&mut self, clock: Clock, target: Target, time: f64) -> Result<()> {
        self.scaffold.push(clock.channel(), target, time)
    }

    pub fn scaffold(&self) -> &Scaffold<Clock> {
        &self.scaffold
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        self.scaffold.geometry()
    }

    pub fn horizon(&self) -> f64 {
        self.scaffold.horizon()
    }

    pub fn count(&self, clock: Clock) -> usize {
        self.scaffold.channels()[clock.channel()].total_events()
    }

    pub fn events(&self) -> impl Iterator<Item = ScaffoldEvent<Clock>> + '_ {
        self.scaffold.events()
    }
}

/// Samples the graphical representation of `params` on `geometry x [0, horizon]`.
pub fn sample_event_stream(geometry: LatticeGeometry, horizon: f64, params: &Params, seed: u64) -> Result<EventStream> {
    params.validate()?;
    let specs = channel_specs(params, geometry.degree());
    Ok(EventStream {
        scaffold: Scaffold::sample(geometry, horizon, &specs, seed)?,
        variant: params.variant,
    })
}

/// Applies one ring of the graphical representation. Returns the site that
/// changed, if any.
pub(crate) fn apply_clock(states: &mut [State], variant: Variant, clock: Clock, target: Target) -> Option<usize> {
    match (clock, target) {
        (Clock::Arrow1, Target::Edge { from, to }) => {
            (states[from] == State::Asymptomatic && states[to] == State::Healthy).then(|| {
                states[to] = State::Asymptomatic;
                to
            })
        }
        (Clock::Arrow2, Target::Edge { from, to }) => {
            (states[from] == State::Symptomatic && states[to] == State::Healthy).then(|| {
                states[to] = if variant == Variant::Collapsed {
                    State::Symptomatic
                } else {
                    State::Asymptomatic
                };
                to
            })
        }
        (Clock::Dot, Target::Vertex(x)) => (states[x] == State::Asymptomatic).then(|| {
            states[x] = State::Symptomatic;
            x
        }),
        (Clock::Cross, Target::Vertex(x)) => {
            let hit = match variant {
                Variant::ForestFire => states[x] == State::Symptomatic,
                _ => states[x].is_infected(),
            };
            hit.then(|| {
                states[x] = State::Healthy;
                x
            })
        }
        _ => None,
    }
}

/// Builds the process from `initial` by replaying `stream` in time order,
/// sampling densities every `sample_dt` and at the stream horizon.
pub fn evolve_from_stream(initial: &Configuration, stream: &EventStream, sample_dt: f64) -> Result<Trajectory> {
    if initial.geometry() != stream.geometry() {
        return Err(Error::Domain(format!(
            "configuration on {:?} but stream on {:?}",
            initial.geometry(),
            stream.geometry()
        )));
    }
    let horizon = stream.horizon();
    let times = if horizon > 0.0 { sample_times(horizon, sample_dt)? } else { vec![0.0] };
    let variant = stream.variant();
    let mut config = initial.clone();
    if variant == Variant::Collapsed {
        for s in config.states_mut() {
            if *s == State::Asymptomatic {
                *s = State::Symptomatic;
            }
        }
    }
    let mut infected = config.infected_count();
    let mut extinction_time = (infected == 0).then_some(0.0);
    let mut densities = Vec::with_capacity(times.len());
    let mut next_sample = 0;
    let mut events = stream.events();
    while infected > 0 {
        let Some(ev) = events.next() else { break };
        while next_sample < times.len() && times[next_sample] < ev.time {
            densities.push(config.density());
            next_sample += 1;
        }
        let states = config.states_mut();
        let was = match ev.target {
            Target::Edge { to, .. } => states[to].is_infected(),
            Target::Vertex(x) => states[x].is_infected(),
        };
        if let Some(site) = apply_clock(states, variant, ev.clock, ev.target) {
            match (was, states[site].is_infected()) {
                (false, true) => infected += 1,
                (true, false) => infected -= 1,
                _ => {}
            }
            if infected == 0 {
                extinction_time = Some(ev.time);
            }
        }
    }
    while densities.len() < times.len() {
        densities.push(config.density());
    }
    Ok(Trajectory { times, densities, final_config: config, extinction_time })
}
