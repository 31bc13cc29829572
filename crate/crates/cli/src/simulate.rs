use std::fs::File;
use std::io::BufWriter;

use anyhow::{bail, Context, Result};
use clap::Args;
use cpas_core::dynamics::{sample_times, CtmcSimulator};
use cpas_core::rng::rng_from_seed;
use cpas_core::{Density, Trajectory};
use serde::{Deserialize, Serialize};

use crate::config::{create_out, fill_from, load_file, resolve_common, write_json, Common, SharedArgs};

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateOpts {
    /// Comma-separated times at which to write PGM snapshots (d = 2 only).
    #[arg(long)]
    pub snapshots: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(flatten)]
    pub opts: SimulateOpts,
}

#[derive(Serialize)]
struct Resolved {
    #[serde(flatten)]
    common: Common,
    snapshots: Vec<f64>,
}

#[derive(Serialize)]
struct Summary<'a> {
    config: &'a Resolved,
    extinction_time: Option<f64>,
    final_density: Density,
    events: u64,
    snapshot_files: Vec<String>,
}

fn parse_times(list: &str) -> Result<Vec<f64>> {
    let mut times = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let t: f64 = item.parse().with_context(|| format!("bad snapshot time `{item}`"))?;
        if !(t >= 0.0 && t.is_finite()) {
            bail!("snapshot times must be non-negative, got {t}");
        }
        times.push(t);
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    Ok(times)
}

pub fn run(args: SimulateArgs, config: Option<&std::path::Path>) -> Result<()> {
    let (file_shared, file_opts): (SharedArgs, SimulateOpts) = load_file(config, "simulate")?;
    let mut opts = args.opts;
    fill_from!(opts, file_opts; snapshots);
    let common = resolve_common(args.shared, &file_shared, "out")?;
    let resolved = Resolved {
        snapshots: parse_times(opts.snapshots.as_deref().unwrap_or(""))?,
        common,
    };
    let c = &resolved.common;
    if !resolved.snapshots.is_empty() && c.dim != 2 {
        bail!("--snapshots needs --dim 2, got dimension {}", c.dim);
    }
    if let Some(&t) = resolved.snapshots.last() {
        if t > c.tmax {
            bail!("snapshot time {t} is after --tmax {}", c.tmax);
        }
    }
    let params = c.params()?;
    let geometry = c.geometry()?;
    let mut rng = rng_from_seed(c.seed);
    let start = c.initial()?.build(geometry, &mut rng)?;
    let mut sim = CtmcSimulator::new(start, &params, rng)?;

    create_out(&c.out)?;
    let times = sample_times(c.tmax, c.sample_dt)?;
    let mut densities = Vec::with_capacity(times.len());
    let mut snapshot_files = Vec::new();
    let mut pending = resolved.snapshots.iter().peekable();
    for &t in &times {
        while let Some(&&s) = pending.peek().filter(|&&&s| s <= t) {
            sim.advance_to(s);
            let name = format!("snapshot_t{s}.pgm");
            let path = c.out_file(&name);
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            sim.config().write_pgm(BufWriter::new(file))?;
            snapshot_files.push(name);
            pending.next();
        }
        sim.advance_to(t);
        densities.push(sim.density());
    }
    let events = sim.events();
    let extinction_time = sim.extinction_time();
    let traj = Trajectory { times, densities, final_config: sim.into_config(), extinction_time };

    let path = c.out_file("trajectory.csv");
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    traj.write_csv(BufWriter::new(file))?;
    let summary = Summary {
        config: &resolved,
        extinction_time,
        final_density: traj.final_density(),
        events,
        snapshot_files,
    };
    write_json(&c.out_file("summary.json"), &summary)?;
    match extinction_time {
        Some(t) => println!("extinct at t = {t:.4} after {events} events"),
        None => {
            let d = traj.final_density();
            println!("alive at t = {}: u1 = {:.4}, u2 = {:.4} ({events} events)", c.tmax, d.u1, d.u2);
        }
    }
    Ok(())
}
