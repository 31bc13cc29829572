//! The basic two-state contact process, replayed from one arrow channel and
//! the crosses of an [`EventStream`]. Used as an independent reference for
//! the degenerate limits `gamma = 0` and `gamma = infinity`.

use super::scaffold::Target;
use super::{sample_times, Clock, EventStream};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct BasicContactTrajectory {
    pub times: Vec<f64>,
    pub infected_density: Vec<f64>,
    pub final_infected: Vec<bool>,
    pub extinction_time: Option<f64>,
}

/// Contact process in which every arrow of channel `arrows` carries the
/// infection from an infected tail to a healthy head and every cross heals.
pub fn evolve_basic_contact(
    initial: &[bool],
    stream: &EventStream,
    arrows: Clock,
    sample_dt: f64,
) -> Result<BasicContactTrajectory> {
    let n = stream.geometry().num_sites();
    if initial.len() != n {
        return Err(Error::Domain(format!("expected {n} sites, got {}", initial.len())));
    }
    if !matches!(arrows, Clock::Arrow1 | Clock::Arrow2) {
        return Err(Error::Domain(format!("{arrows:?} is not an arrow clock")));
    }
    let times = sample_times(stream.horizon(), sample_dt)?;
    let mut infected = initial.to_vec();
    let mut count = infected.iter().filter(|&&b| b).count();
    let mut extinction_time = (count == 0).then_some(0.0);
    let mut density = Vec::with_capacity(times.len());
    let mut next = 0;
    for ev in stream.events() {
        if count == 0 {
            break;
        }
        while next < times.len() && times[next] < ev.time {
            density.push(count as f64 / n as f64);
            next += 1;
        }
        match (ev.clock, ev.target) {
            (c, Target::Edge { from, to }) if c == arrows && infected[from] && !infected[to] => {
                infected[to] = true;
                count += 1;
            }
            (Clock::Cross, Target::Vertex(x)) if infected[x] => {
                infected[x] = false;
                count -= 1;
                if count == 0 {
                    extinction_time = Some(ev.time);
                }
            }
            _ => {}
        }
    }
    while density.len() < times.len() {
        density.push(count as f64 / n as f64);
    }
    Ok(BasicContactTrajectory { times, infected_density: density, final_infected: infected, extinction_time })
}
