use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use cpas_core::bounds::{bounds_report, gw_sample, percolation_mc, BoundsReport, GwSample, PercolationEstimate, PC_UPPER_2D};
use cpas_core::meanfield::{self, FixedPointReport, MeanFieldState, DEFAULT_DT};
use serde::{Deserialize, Serialize};

use crate::config::{create_out, fill_from, load_file, resolve_common, write_json, Common, SharedArgs};

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanfieldOpts {
    /// Initial asymptomatic fraction.
    #[arg(long, allow_negative_numbers = true)]
    pub u1: Option<f64>,
    /// Initial symptomatic fraction.
    #[arg(long, allow_negative_numbers = true)]
    pub u2: Option<f64>,
    /// RK4 step.
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    /// Write every n-th step to the CSV.
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Args, Debug)]
pub struct MeanfieldArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(flatten)]
    pub opts: MeanfieldOpts,
}

#[derive(Serialize)]
struct MeanfieldResolved<'a> {
    #[serde(flatten)]
    common: &'a Common,
    u1: f64,
    u2: f64,
    dt: f64,
    stride: usize,
}

#[derive(Serialize)]
struct MeanfieldOutput<'a> {
    config: MeanfieldResolved<'a>,
    #[serde(flatten)]
    report: FixedPointReport,
    final_state: MeanFieldState,
    converged_at: Option<f64>,
}

pub fn run_meanfield(args: MeanfieldArgs, config: Option<&Path>) -> Result<()> {
    let (file_shared, file_opts): (SharedArgs, MeanfieldOpts) = load_file(config, "meanfield")?;
    let mut opts = args.opts;
    fill_from!(opts, file_opts; u1, u2, dt, stride);
    let c = resolve_common(args.shared, &file_shared, "out")?;
    let resolved = MeanfieldResolved {
        common: &c,
        u1: opts.u1.unwrap_or(0.01),
        u2: opts.u2.unwrap_or(0.0),
        dt: opts.dt.unwrap_or(DEFAULT_DT),
        stride: opts.stride.unwrap_or(100),
    };
    if resolved.stride == 0 {
        bail!("--stride must be at least 1");
    }
    let p = c.params()?;
    let u0 = MeanFieldState::new(resolved.u1, resolved.u2)?;
    let report = meanfield::fixed_points(&p)?;
    let traj = meanfield::integrate(u0, &p, c.tmax, resolved.dt)?;

    create_out(&c.out)?;
    let path = c.out_file("meanfield.csv");
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    traj.write_csv(BufWriter::new(file), resolved.stride)?;
    let end = traj.final_state();
    match &report.p12 {
        Some(fp) => println!(
            "interior fixed point ({:.6}, {:.6}), {:?}; state at t = {}: ({:.6}, {:.6})",
            fp.u1, fp.u2, fp.stability, c.tmax, end.u1, end.u2
        ),
        None => println!("no interior fixed point; state at t = {}: ({:.6}, {:.6})", c.tmax, end.u1, end.u2),
    }
    let out = MeanfieldOutput { config: resolved, report, final_state: end, converged_at: traj.converged_at };
    write_json(&c.out_file("fixed_points.json"), &out)
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsOpts {
    /// Radius for the branching bounds.
    #[arg(long)]
    pub radius: Option<u32>,
    /// Site-openness target for beta-bar.
    #[arg(long, allow_negative_numbers = true)]
    pub target: Option<f64>,
    /// Also estimate percolation from the origin to this sup-radius (d >= 2).
    #[arg(long)]
    pub percolation_radius: Option<usize>,
    /// Also simulate this many dominating branching trees.
    #[arg(long)]
    pub gw_trees: Option<usize>,
    /// Generations per simulated tree.
    #[arg(long)]
    pub generations: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(flatten)]
    pub opts: BoundsOpts,
}

#[derive(Serialize)]
struct BoundsResolved<'a> {
    #[serde(flatten)]
    common: &'a Common,
    radius: u32,
    target: f64,
    percolation_radius: Option<usize>,
    gw_trees: Option<usize>,
    generations: usize,
}

#[derive(Serialize)]
struct BoundsOutput<'a> {
    config: BoundsResolved<'a>,
    #[serde(flatten)]
    report: BoundsReport,
    percolation: Option<PercolationEstimate>,
    branching: Option<GwSample>,
}

pub fn run_bounds(args: BoundsArgs, config: Option<&Path>) -> Result<()> {
    let (file_shared, file_opts): (SharedArgs, BoundsOpts) = load_file(config, "bounds")?;
    let mut opts = args.opts;
    fill_from!(opts, file_opts; radius, target, percolation_radius, gw_trees, generations);
    let c = resolve_common(args.shared, &file_shared, "out")?;
    let resolved = BoundsResolved {
        common: &c,
        radius: opts.radius.unwrap_or(5),
        target: opts.target.unwrap_or(PC_UPPER_2D),
        percolation_radius: opts.percolation_radius,
        gw_trees: opts.gw_trees,
        generations: opts.generations.unwrap_or(20),
    };
    let report = bounds_report(c.dim, c.beta1, c.gamma, resolved.radius, resolved.target)?;
    let percolation = match resolved.percolation_radius {
        Some(r) => Some(percolation_mc(c.beta1, c.gamma, c.dim, r, c.replicas, c.seed)?),
        None => None,
    };
    let branching = match resolved.gw_trees {
        Some(n) => Some(gw_sample(c.dim, c.gamma, resolved.generations, n, c.seed)?),
        None => None,
    };
    create_out(&c.out)?;
    println!(
        "mu = {:.6} ({}), p_open = {:.6}, beta_bar = {:.6}",
        report.mu,
        if report.subcritical { "subcritical" } else { "not subcritical" },
        report.p_open,
        report.beta_bar
    );
    if let Some(e) = &percolation {
        println!("reached radius {} in {} of {} runs", e.radius, e.reached, e.replicas);
    }
    let out = BoundsOutput { config: resolved, report, percolation, branching };
    write_json(&c.out_file("bounds.json"), &out)
}
