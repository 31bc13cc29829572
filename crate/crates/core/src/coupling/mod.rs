//! Monotone couplings of two processes driven by shared Poisson clocks.
//!
//! A coupling runs a "low" and a "high" process on one scaffold. Every
//! clock has a marginal effect on each coordinate, so each process on its
//! own follows the single-process graphical rules. The pair state at a site
//! is `ab` with `a` the low state and `b` the high state; the orderings used
//! here keep every pair inside `S = {00, 01, 02, 11, 12, 22}`.

mod tables;

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Serialize, Serializer};

use crate::dynamics::{sample_times, Clock, EventStream, Params, Placement, Scaffold, Target, Variant};
use crate::error::{Error, Result};
use crate::lattice::{Configuration, Density, LatticeGeometry, State};

use tables::TableData;

/// States of one site in both processes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PairState {
    pub low: State,
    pub high: State,
}

impl PairState {
    /// The ordered pairs, in table order.
    pub const S: [PairState; 6] = [
        PairState::new(State::Healthy, State::Healthy),
        PairState::new(State::Healthy, State::Asymptomatic),
        PairState::new(State::Healthy, State::Symptomatic),
        PairState::new(State::Asymptomatic, State::Asymptomatic),
        PairState::new(State::Asymptomatic, State::Symptomatic),
        PairState::new(State::Symptomatic, State::Symptomatic),
    ];

    pub const fn new(low: State, high: State) -> Self {
        Self { low, high }
    }

    pub fn in_s(self) -> bool {
        self.low.index() <= self.high.index()
    }

    /// Position in [`PairState::S`].
    pub fn s_index(self) -> Option<usize> {
        PairState::S.iter().position(|&p| p == self)
    }

    pub fn label(self) -> String {
        format!("{}{}", self.low.index(), self.high.index())
    }
}

impl fmt::Display for PairState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.low.index(), self.high.index())
    }
}

impl FromStr for PairState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let b = s.as_bytes();
        if b.len() != 2 || !b.iter().all(u8::is_ascii_digit) {
            return Err(Error::InvalidParameter(format!("bad pair state {s:?}")));
        }
        Ok(Self::new(State::from_index(b[0] - b'0')?, State::from_index(b[1] - b'0')?))
    }
}

impl Serialize for PairState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Clocks of the coupled scaffolds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoupledClock {
    /// Arrow read from `1` and `2` by both processes.
    Shared,
    /// Arrow read from `2` by the low process and from `1`, `2` by the high one.
    OnePrime,
    /// Arrow read from `2` by both processes.
    Two,
    /// Arrow read from `2` by the high process only.
    TwoPrime,
    /// Arrow read from `1` only, by both processes.
    OneOnly,
    /// Dot seen by both processes.
    BlackDot,
    /// Dot seen by the high process only.
    WhiteDot,
    Cross,
}

impl CoupledClock {
    pub fn placement(self) -> Placement {
        match self {
            Self::Shared | Self::OnePrime | Self::Two | Self::TwoPrime | Self::OneOnly => Placement::Edge,
            Self::BlackDot | Self::WhiteDot | Self::Cross => Placement::Vertex,
        }
    }
}

/// Effect of a clock on one coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Effect {
    None,
    /// Infects a healthy head if the tail is `1` (`from1`) or `2` (`from2`).
    Arrow { from1: bool, from2: bool },
    Dot,
    Cross,
}

const ARROW_12: Effect = Effect::Arrow { from1: true, from2: true };
const ARROW_1: Effect = Effect::Arrow { from1: true, from2: false };
const ARROW_2: Effect = Effect::Arrow { from1: false, from2: true };

impl Effect {
    /// New state of the affected site. `tail` is the tail state for arrows.
    pub fn single(self, tail: Option<State>, site: State) -> State {
        match self {
            Effect::None => site,
            Effect::Arrow { from1, from2 } => {
                let fires = match tail {
                    Some(State::Asymptomatic) => from1,
                    Some(State::Symptomatic) => from2,
                    _ => false,
                };
                if fires && site == State::Healthy {
                    State::Asymptomatic
                } else {
                    site
                }
            }
            Effect::Dot if site == State::Asymptomatic => State::Symptomatic,
            Effect::Dot => site,
            Effect::Cross => State::Healthy,
        }
    }

    fn apply(self, states: &mut [State], target: Target) -> Option<usize> {
        let (site, tail) = match target {
            Target::Edge { from, to } => (to, Some(states[from])),
            Target::Vertex(x) => (x, None),
        };
        let new = self.single(tail, states[site]);
        (new != states[site]).then(|| {
            states[site] = new;
            site
        })
    }
}

/// Which parameter is raised from the low to the high process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    Beta1,
    Beta2,
    Gamma,
}

impl CouplingKind {
    pub const ALL: [CouplingKind; 3] = [CouplingKind::Beta1, CouplingKind::Beta2, CouplingKind::Gamma];

    pub fn clocks(self) -> &'static [CoupledClock] {
        use CoupledClock::*;
        match self {
            CouplingKind::Beta1 => &[Shared, OnePrime, Two, BlackDot, Cross],
            CouplingKind::Beta2 => &[Shared, Two, TwoPrime, BlackDot, Cross],
            CouplingKind::Gamma => &[Shared, Two, BlackDot, WhiteDot, Cross],
        }
    }

    /// Marginal effects `(low, high)` of `clock`, if it belongs to this coupling.
    pub fn effects(self, clock: CoupledClock) -> Option<(Effect, Effect)> {
        use CoupledClock::*;
        let e = match (self, clock) {
            (_, Shared) => (ARROW_12, ARROW_12),
            (_, Two) => (ARROW_2, ARROW_2),
            (_, BlackDot) => (Effect::Dot, Effect::Dot),
            (_, Cross) => (Effect::Cross, Effect::Cross),
            (CouplingKind::Beta1, OnePrime) => (ARROW_2, ARROW_12),
            (CouplingKind::Beta2, TwoPrime) => (Effect::None, ARROW_2),
            (CouplingKind::Gamma, WhiteDot) => (Effect::None, Effect::Dot),
            _ => return None,
        };
        Some(e)
    }

    fn data(self) -> &'static TableData {
        match self {
            CouplingKind::Beta1 => &tables::BETA1,
            CouplingKind::Beta2 => &tables::BETA2,
            CouplingKind::Gamma => &tables::GAMMA,
        }
    }
}

impl fmt::Display for CouplingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingKind::Beta1 => "beta1",
            CouplingKind::Beta2 => "beta2",
            CouplingKind::Gamma => "gamma",
        })
    }
}

impl FromStr for CouplingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta1" => Ok(CouplingKind::Beta1),
            "beta2" => Ok(CouplingKind::Beta2),
            "gamma" => Ok(CouplingKind::Gamma),
            _ => Err(Error::InvalidParameter(format!("unknown coupling {s:?}; expected beta1, beta2 or gamma"))),
        }
    }
}

/// A cell of a transition table that disagrees with the rules.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableViolation {
    pub clock: CoupledClock,
    /// Pair at the tail (edge clocks) or at the site (vertex clocks).
    pub x: PairState,
    /// Pair at the head, for edge clocks.
    pub y: Option<PairState>,
    pub table: PairState,
    pub rules: PairState,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosureReport {
    pub kind: CouplingKind,
    pub edge_cases: usize,
    pub vertex_cases: usize,
    pub violations: Vec<TableViolation>,
}

impl ClosureReport {
    pub fn cases(&self) -> usize {
        self.edge_cases + self.vertex_cases
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn parse_row(row: &str) -> [PairState; 6] {
    let cells: Vec<PairState> = row
        .split_whitespace()
        .map(|c| c.parse().unwrap_or_else(|e| panic!("bad table cell {c:?}: {e}")))
        .collect();
    cells.try_into().unwrap_or_else(|_| panic!("table row {row:?} must have six cells"))
}

fn check_cell(
    kind: CouplingKind,
    clock: CoupledClock,
    x: PairState,
    y: Option<PairState>,
    table: PairState,
    out: &mut Vec<TableViolation>,
) {
    let (el, eh) = kind.effects(clock).expect("clock belongs to the coupling");
    let rules = match y {
        Some(y) => PairState::new(el.single(Some(x.low), y.low), eh.single(Some(x.high), y.high)),
        None => PairState::new(el.single(None, x.low), eh.single(None, x.high)),
    };
    let mut push = |reason: &str| {
        out.push(TableViolation { clock, x, y, table, rules, reason: reason.to_string() })
    };
    if !table.in_s() {
        push("entry outside S");
    }
    if table.low != rules.low {
        push("low coordinate disagrees with its marginal rule");
    }
    if table.high != rules.high {
        push("high coordinate disagrees with its marginal rule");
    }
}

fn check_data(kind: CouplingKind, data: &TableData) -> ClosureReport {
    let mut violations = Vec::new();
    let mut edge_cases = 0;
    let mut vertex_cases = 0;
    for (clock, rows) in data.edges {
        for (i, row) in rows.iter().enumerate() {
            for (j, &cell) in parse_row(row).iter().enumerate() {
                edge_cases += 1;
                check_cell(kind, *clock, PairState::S[i], Some(PairState::S[j]), cell, &mut violations);
            }
        }
    }
    for (clock, row) in data.vertices {
        for (i, &cell) in parse_row(row).iter().enumerate() {
            vertex_cases += 1;
            check_cell(kind, *clock, PairState::S[i], None, cell, &mut violations);
        }
    }
    let listed: Vec<CoupledClock> =
        data.edges.iter().map(|e| e.0).chain(data.vertices.iter().map(|v| v.0)).collect();
    for &clock in kind.clocks() {
        if !listed.contains(&clock) {
            violations.push(TableViolation {
                clock,
                x: PairState::S[0],
                y: None,
                table: PairState::S[0],
                rules: PairState::S[0],
                reason: "clock missing from table".into(),
            });
        }
    }
    ClosureReport { kind, edge_cases, vertex_cases, violations }
}

/// Checks every cell of the embedded table of `kind`: entries must lie in
/// `S` and agree coordinate-wise with the single-process rules.
pub fn verify_table_closure(kind: CouplingKind) -> ClosureReport {
    check_data(kind, kind.data())
}

struct Table {
    edges: Vec<(CoupledClock, [[PairState; 6]; 6])>,
    vertices: Vec<(CoupledClock, [PairState; 6])>,
}

fn load(kind: CouplingKind) -> Table {
    let report = verify_table_closure(kind);
    if !report.passed() {
        panic!("embedded {kind} coupling table is inconsistent: {:?}", report.violations);
    }
    let data = kind.data();
    Table {
        edges: data.edges.iter().map(|(c, rows)| (*c, rows.map(parse_row))).collect(),
        vertices: data.vertices.iter().map(|(c, row)| (*c, parse_row(row))).collect(),
    }
}

fn table(kind: CouplingKind) -> &'static Table {
    static TABLES: OnceLock<[Table; 3]> = OnceLock::new();
    let all = TABLES.get_or_init(|| CouplingKind::ALL.map(load));
    &all[kind as usize]
}

/// Table lookup. For an edge clock `x` is the tail pair, `y` the head pair
/// and the result is the new head pair; a vertex clock takes `y = None`.
pub fn pair_transition(kind: CouplingKind, clock: CoupledClock, x: PairState, y: Option<PairState>) -> Result<PairState> {
    let t = table(kind);
    let i = x.s_index().ok_or_else(|| Error::Domain(format!("pair {x} outside S")))?;
    match (clock.placement(), y) {
        (Placement::Edge, Some(y)) => {
            let j = y.s_index().ok_or_else(|| Error::Domain(format!("pair {y} outside S")))?;
            t.edges
                .iter()
                .find(|e| e.0 == clock)
                .map(|e| e.1[i][j])
                .ok_or_else(|| Error::Domain(format!("{clock:?} is not a {kind} clock")))
        }
        (Placement::Vertex, None) => t
            .vertices
            .iter()
            .find(|v| v.0 == clock)
            .map(|v| v.1[i])
            .ok_or_else(|| Error::Domain(format!("{clock:?} is not a {kind} clock"))),
        _ => Err(Error::Domain(format!("{clock:?} needs {} pair(s)", if clock.placement() == Placement::Edge { 2 } else { 1 }))),
    }
}

/// One clock family of a coupled scaffold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClockSpec {
    pub clock: CoupledClock,
    pub rate: f64,
    pub low: Effect,
    pub high: Effect,
}

/// A monotone coupling: `low` and the same parameters with one rate raised
/// to `high_value`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Coupling {
    pub kind: CouplingKind,
    pub low: Params,
    pub high_value: f64,
}

impl Coupling {
    /// Requires `beta1 <= beta1' <= beta2` (beta1 coupling),
    /// `beta1 <= beta2 <= beta2'` (beta2) or `beta1 <= beta2, gamma <= gamma'`
    /// (gamma), on the standard variant.
    pub fn new(kind: CouplingKind, low: Params, high_value: f64) -> Result<Self> {
        low.validate()?;
        if low.variant != Variant::Standard {
            return Err(Error::InvalidParameter("couplings are defined for the standard variant".into()));
        }
        if !high_value.is_finite() {
            return Err(Error::InvalidParameter(format!("high value must be finite, got {high_value}")));
        }
        let Params { beta1, beta2, gamma, .. } = low;
        let ok = match kind {
            CouplingKind::Beta1 => beta1 <= high_value && high_value <= beta2,
            CouplingKind::Beta2 => beta1 <= beta2 && beta2 <= high_value,
            CouplingKind::Gamma => beta1 <= beta2 && gamma <= high_value,
        };
        if !ok {
            let need = match kind {
                CouplingKind::Beta1 => "beta1 <= beta1' <= beta2",
                CouplingKind::Beta2 => "beta1 <= beta2 <= beta2'",
                CouplingKind::Gamma => "beta1 <= beta2 and gamma <= gamma'",
            };
            return Err(Error::InvalidParameter(format!(
                "{kind} coupling needs {need}; got beta1 = {beta1}, beta2 = {beta2}, gamma = {gamma}, raised value {high_value}"
            )));
        }
        Ok(Self { kind, low, high_value })
    }

    pub fn high(&self) -> Params {
        let mut p = self.low;
        match self.kind {
            CouplingKind::Beta1 => p.beta1 = self.high_value,
            CouplingKind::Beta2 => p.beta2 = self.high_value,
            CouplingKind::Gamma => p.gamma = self.high_value,
        }
        p
    }

    pub fn clock_specs(&self, degree: usize) -> Vec<ClockSpec> {
        let deg = degree as f64;
        let Params { beta1, beta2, gamma, .. } = self.low;
        let h = self.high_value;
        let rate = |clock| match (self.kind, clock) {
            (_, CoupledClock::Shared) => beta1 / deg,
            (CouplingKind::Beta1, CoupledClock::OnePrime) => (h - beta1) / deg,
            (CouplingKind::Beta1, CoupledClock::Two) => (beta2 - h) / deg,
            (_, CoupledClock::Two) => (beta2 - beta1) / deg,
            (_, CoupledClock::TwoPrime) => (h - beta2) / deg,
            (_, CoupledClock::BlackDot) => gamma,
            (_, CoupledClock::WhiteDot) => h - gamma,
            (_, CoupledClock::Cross) => 1.0,
            _ => unreachable!("clock not in coupling"),
        };
        self.kind
            .clocks()
            .iter()
            .map(|&clock| {
                let (low, high) = self.kind.effects(clock).expect("own clock");
                ClockSpec { clock, rate: rate(clock), low, high }
            })
            .collect()
    }
}

/// Clocks of the attempted gamma coupling when `beta1 > beta2`. The
/// arrows read only from `1` carry the excess `beta1 - beta2`; a white dot
/// can then leave a site at `12` whose `1` infects a neighbour in the low
/// process only.
pub fn reversed_gamma_specs(low: &Params, gamma_high: f64, degree: usize) -> Result<Vec<ClockSpec>> {
    low.validate()?;
    if !(low.beta1 > low.beta2) || !(gamma_high >= low.gamma) {
        return Err(Error::InvalidParameter(format!(
            "reversed demo needs beta1 > beta2 and gamma' >= gamma; got beta1 = {}, beta2 = {}, gamma = {}, gamma' = {gamma_high}",
            low.beta1, low.beta2, low.gamma
        )));
    }
    let deg = degree as f64;
    Ok(vec![
        ClockSpec { clock: CoupledClock::Shared, rate: low.beta2 / deg, low: ARROW_12, high: ARROW_12 },
        ClockSpec { clock: CoupledClock::OneOnly, rate: (low.beta1 - low.beta2) / deg, low: ARROW_1, high: ARROW_1 },
        ClockSpec { clock: CoupledClock::BlackDot, rate: low.gamma, low: Effect::Dot, high: Effect::Dot },
        ClockSpec { clock: CoupledClock::WhiteDot, rate: gamma_high - low.gamma, low: Effect::None, high: Effect::Dot },
        ClockSpec { clock: CoupledClock::Cross, rate: 1.0, low: Effect::Cross, high: Effect::Cross },
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Low,
    High,
}

/// A sampled coupled scaffold with the marginal effect of each channel.
#[derive(Clone, Debug)]
pub struct CoupledStream {
    scaffold: Scaffold<CoupledClock>,
    specs: Vec<ClockSpec>,
    kind: Option<CouplingKind>,
}

impl CoupledStream {
    pub fn sample(geometry: LatticeGeometry, horizon: f64, specs: Vec<ClockSpec>, seed: u64) -> Result<Self> {
        let channels: Vec<_> = specs.iter().map(|s| (s.clock, s.clock.placement(), s.rate)).collect();
        Ok(Self { scaffold: Scaffold::sample(geometry, horizon, &channels, seed)?, specs, kind: None })
    }

    pub fn for_coupling(coupling: &Coupling, geometry: LatticeGeometry, horizon: f64, seed: u64) -> Result<Self> {
        let mut s = Self::sample(geometry, horizon, coupling.clock_specs(geometry.degree()), seed)?;
        s.kind = Some(coupling.kind);
        Ok(s)
    }

    pub fn scaffold(&self) -> &Scaffold<CoupledClock> {
        &self.scaffold
    }

    pub fn specs(&self) -> &[ClockSpec] {
        &self.specs
    }

    /// The single-process graphical representation seen by one side:
    /// arrows read from `1` go to the type-1 channel, arrows read from `2`
    /// to the type-2 channel, dots and crosses to their own channels.
    pub fn marginal(&self, side: Side) -> Result<EventStream> {
        let effect = |s: &ClockSpec| if side == Side::Low { s.low } else { s.high };
        let mut rates = [0.0; 4];
        for s in &self.specs {
            match effect(s) {
                Effect::Arrow { from1, from2 } => {
                    if from1 {
                        rates[Clock::Arrow1.channel()] += s.rate;
                    }
                    if from2 {
                        rates[Clock::Arrow2.channel()] += s.rate;
                    }
                }
                Effect::Dot => rates[Clock::Dot.channel()] += s.rate,
                Effect::Cross => rates[Clock::Cross.channel()] += s.rate,
                Effect::None => {}
            }
        }
        let specs: Vec<_> = Clock::ALL.iter().map(|&c| (c, c.placement(), rates[c.channel()])).collect();
        let mut out = Scaffold::empty(*self.scaffold.geometry(), self.scaffold.horizon(), &specs)?;
        for (s, ch) in self.specs.iter().zip(self.scaffold.channels()) {
            match effect(s) {
                Effect::Arrow { from1, from2 } => {
                    if from1 {
                        out.absorb(Clock::Arrow1.channel(), ch)?;
                    }
                    if from2 {
                        out.absorb(Clock::Arrow2.channel(), ch)?;
                    }
                }
                Effect::Dot => out.absorb(Clock::Dot.channel(), ch)?,
                Effect::Cross => out.absorb(Clock::Cross.channel(), ch)?,
                Effect::None => {}
            }
        }
        EventStream::from_scaffold(out, Variant::Standard)
    }
}

/// First time a site left `S`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairExit {
    pub time: f64,
    pub site: usize,
    pub pair: PairState,
    pub clock: CoupledClock,
}

#[derive(Clone, Debug)]
pub struct CoupledTrajectory {
    pub times: Vec<f64>,
    pub low: Vec<Density>,
    pub high: Vec<Density>,
    /// Whether every infected site of the low process is infected in the
    /// high process at the sample time.
    pub dominated: Vec<bool>,
    pub final_low: Configuration,
    pub final_high: Configuration,
    pub first_exit: Option<PairExit>,
}

impl CoupledTrajectory {
    pub fn always_dominated(&self) -> bool {
        self.dominated.iter().all(|&d| d)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,u_inf_low,u_inf_high,dominated")?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{},{},{},{}",
                self.times[i],
                self.low[i].infected(),
                self.high[i].infected(),
                self.dominated[i] as u8
            )?;
        }
        Ok(())
    }
}

fn pair_flags(l: State, h: State) -> (usize, usize) {
    let outside = (l.index() > h.index()) as usize;
    let uncontained = (l.is_infected() && !h.is_infected()) as usize;
    (outside, uncontained)
}

/// Replays `stream` on the pair `(low, high)`, sampling every `sample_dt`
/// and at the horizon. With `stop_at_exit` the replay ends at the first
/// pair outside `S`.
pub fn replay_coupled(
    low: &Configuration,
    high: &Configuration,
    stream: &CoupledStream,
    sample_dt: f64,
    stop_at_exit: bool,
) -> Result<CoupledTrajectory> {
    let geometry = stream.scaffold.geometry();
    if low.geometry() != geometry || high.geometry() != geometry {
        return Err(Error::Domain("configurations and coupled stream live on different lattices".into()));
    }
    let horizon = stream.scaffold.horizon();
    let times = if horizon > 0.0 { sample_times(horizon, sample_dt)? } else { vec![0.0] };
    let mut lo = low.clone();
    let mut hi = high.clone();
    let mut uncontained: usize = lo.states().iter().zip(hi.states()).map(|(&l, &h)| pair_flags(l, h).1).sum();
    let mut first_exit = None;
    let mut out = CoupledTrajectory {
        times: Vec::with_capacity(times.len()),
        low: Vec::with_capacity(times.len()),
        high: Vec::with_capacity(times.len()),
        dominated: Vec::with_capacity(times.len()),
        final_low: lo.clone(),
        final_high: hi.clone(),
        first_exit: None,
    };
    let mut next_sample = 0;
    let push_sample = |out: &mut CoupledTrajectory, lo: &Configuration, hi: &Configuration, unc: usize| {
        out.low.push(lo.density());
        out.high.push(hi.density());
        out.dominated.push(unc == 0);
    };
    let mut events = stream.scaffold.events();
    let mut live = lo.infected_count() + hi.infected_count() > 0;
    while live {
        let Some(ev) = events.next() else { break };
        while next_sample < times.len() && times[next_sample] < ev.time {
            push_sample(&mut out, &lo, &hi, uncontained);
            out.times.push(times[next_sample]);
            next_sample += 1;
        }
        let spec = stream.specs[ev.channel];
        let site = match ev.target {
            Target::Edge { to, .. } => to,
            Target::Vertex(x) => x,
        };
        let before = PairState::new(lo.states()[site], hi.states()[site]);
        if cfg!(debug_assertions) {
            if let Some(kind) = stream.kind {
                let x = match ev.target {
                    Target::Edge { from, .. } => PairState::new(lo.states()[from], hi.states()[from]),
                    Target::Vertex(_) => before,
                };
                if x.in_s() && before.in_s() {
                    let y = matches!(ev.target, Target::Edge { .. }).then_some(before);
                    let expect = pair_transition(kind, spec.clock, x, y).expect("table lookup");
                    let mut l = lo.clone();
                    let mut h = hi.clone();
                    spec.low.apply(l.states_mut(), ev.target);
                    spec.high.apply(h.states_mut(), ev.target);
                    debug_assert_eq!(PairState::new(l.states()[site], h.states()[site]), expect);
                }
            }
        }
        let changed_low = spec.low.apply(lo.states_mut(), ev.target).is_some();
        let changed_high = spec.high.apply(hi.states_mut(), ev.target).is_some();
        if changed_low || changed_high {
            let after = PairState::new(lo.states()[site], hi.states()[site]);
            let (_, u0) = pair_flags(before.low, before.high);
            let (o1, u1) = pair_flags(after.low, after.high);
            uncontained = uncontained + u1 - u0;
            if o1 == 1 && first_exit.is_none() {
                first_exit = Some(PairExit { time: ev.time, site, pair: after, clock: spec.clock });
                if stop_at_exit {
                    break;
                }
            }
            live = lo.infected_count() + hi.infected_count() > 0;
        }
    }
    while next_sample < times.len() && first_exit.is_none_or(|e| !stop_at_exit || times[next_sample] < e.time) {
        push_sample(&mut out, &lo, &hi, uncontained);
        out.times.push(times[next_sample]);
        next_sample += 1;
    }
    out.final_low = lo;
    out.final_high = hi;
    out.first_exit = first_exit;
    Ok(out)
}

/// Runs a coupling from the same configuration in both coordinates.
pub fn coupled_run(coupling: &Coupling, initial: &Configuration, t_max: f64, sample_dt: f64, seed: u64) -> Result<CoupledTrajectory> {
    let stream = CoupledStream::for_coupling(coupling, *initial.geometry(), t_max, seed)?;
    replay_coupled(initial, initial, &stream, sample_dt, false)
}

/// Outcome of the reversed-order demonstration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BreakReport {
    pub seed: u64,
    pub attempts: u64,
    pub exit: PairExit,
}

/// Searches seeds `seed, seed + 1, ...` for a run of the reversed gamma
/// coupling, started from all sites at `11`, in which a pair leaves `S`.
pub fn reversed_gamma_demo(
    low: &Params,
    gamma_high: f64,
    geometry: LatticeGeometry,
    t_max: f64,
    seed: u64,
    max_attempts: u64,
) -> Result<Option<BreakReport>> {
    let specs = reversed_gamma_specs(low, gamma_high, geometry.degree())?;
    let start = Configuration::uniform(geometry, State::Asymptomatic);
    for attempt in 0..max_attempts {
        let s = seed.wrapping_add(attempt);
        let stream = CoupledStream::sample(geometry, t_max, specs.clone(), s)?;
        let traj = replay_coupled(&start, &start, &stream, t_max, true)?;
        if let Some(exit) = traj.first_exit {
            return Ok(Some(BreakReport { seed: s, attempts: attempt + 1, exit }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_is_the_ordered_pairs() {
        for a in State::ALL {
            for b in State::ALL {
                let p = PairState::new(a, b);
                assert_eq!(p.in_s(), PairState::S.contains(&p), "{p}");
            }
        }
        assert!(!"10".parse::<PairState>().unwrap().in_s());
    }

    #[test]
    fn embedded_tables_close_and_match_rules() {
        for kind in CouplingKind::ALL {
            let r = verify_table_closure(kind);
            assert!(r.passed(), "{kind}: {:?}", r.violations);
            assert_eq!(r.edge_cases, 36 * (kind.clocks().len() - r.vertex_cases / 6));
        }
        assert_eq!(verify_table_closure(CouplingKind::Beta1).cases(), 3 * 36 + 2 * 6);
        assert_eq!(verify_table_closure(CouplingKind::Gamma).cases(), 2 * 36 + 3 * 6);
    }

    #[test]
    fn copied_beta1_arrows_break_the_beta2_rules() {
        let r = check_data(CouplingKind::Beta2, &tables::BETA2_COPIED_ARROWS);
        let cells: Vec<(CoupledClock, String, String)> = r
            .violations
            .iter()
            .map(|v| (v.clock, v.x.label(), v.y.unwrap().label()))
            .collect();
        let expected = [
            (CoupledClock::Two, "01", "00"),
            (CoupledClock::Two, "11", "00"),
            (CoupledClock::TwoPrime, "22", "00"),
            (CoupledClock::TwoPrime, "22", "01"),
            (CoupledClock::TwoPrime, "22", "02"),
        ];
        let expected: Vec<_> = expected.iter().map(|(c, x, y)| (*c, x.to_string(), y.to_string())).collect();
        let mut got = cells.clone();
        got.dedup();
        assert_eq!(got, expected);
        // every copied cell still lies in S
        assert!(r.violations.iter().all(|v| v.table.in_s()));
    }

    #[test]
    fn lookup_examples() {
        use CoupledClock::*;
        let p = |s: &str| s.parse::<PairState>().unwrap();
        assert_eq!(pair_transition(CouplingKind::Beta1, OnePrime, p("02"), Some(p("00"))).unwrap(), p("01"));
        assert_eq!(pair_transition(CouplingKind::Gamma, WhiteDot, p("11"), None).unwrap(), p("12"));
        assert_eq!(pair_transition(CouplingKind::Gamma, Cross, p("12"), None).unwrap(), p("00"));
        assert!(pair_transition(CouplingKind::Gamma, OnePrime, p("00"), Some(p("00"))).is_err());
        assert!(pair_transition(CouplingKind::Beta1, Shared, p("10"), Some(p("00"))).is_err());
        assert!(pair_transition(CouplingKind::Beta1, Cross, p("00"), Some(p("00"))).is_err());
    }

    #[test]
    fn ordering_is_validated() {
        let p = Params::new(1.0, 2.0, 0.5).unwrap();
        assert!(Coupling::new(CouplingKind::Beta1, p, 1.5).is_ok());
        assert!(Coupling::new(CouplingKind::Beta1, p, 2.5).is_err());
        assert!(Coupling::new(CouplingKind::Beta2, p, 1.5).is_err());
        assert!(Coupling::new(CouplingKind::Gamma, p, 0.2).is_err());
        let rev = Params::new(2.0, 1.0, 0.5).unwrap();
        assert!(Coupling::new(CouplingKind::Gamma, rev, 1.0).is_err());
    }

    #[test]
    fn marginal_rates_match_each_process() {
        let p = Params::new(1.0, 3.0, 0.5).unwrap();
        for (kind, h) in [(CouplingKind::Beta1, 2.0), (CouplingKind::Beta2, 4.0), (CouplingKind::Gamma, 1.5)] {
            let c = Coupling::new(kind, p, h).unwrap();
            let geo = LatticeGeometry::new(2, 4).unwrap();
            let s = CoupledStream::for_coupling(&c, geo, 0.0, 1).unwrap();
            for (side, params) in [(Side::Low, c.low), (Side::High, c.high())] {
                let m = s.marginal(side).unwrap();
                let rates: Vec<f64> = m.scaffold().channels().iter().map(|ch| ch.rate).collect();
                let want = [params.beta1 / 4.0, params.beta2 / 4.0, params.gamma, 1.0];
                for (a, b) in rates.iter().zip(want) {
                    assert!((a - b).abs() < 1e-12, "{kind} {side:?}: {rates:?} vs {want:?}");
                }
            }
        }
    }
}
