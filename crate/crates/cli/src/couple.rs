use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Args;
use cpas_core::coupling::{
    coupled_run, reversed_gamma_demo, verify_table_closure, BreakReport, ClosureReport, Coupling, CouplingKind,
    PairExit,
};
use cpas_core::rng::{derive_seed, replica_rng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{create_out, fill_from, load_file, resolve_common, write_json, Common, SharedArgs};

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoupleOpts {
    /// Which rate is raised: beta1, beta2 or gamma.
    #[arg(long, value_parser = ["beta1", "beta2", "gamma"])]
    pub kind: Option<String>,
    /// The raised value of that rate.
    #[arg(long, allow_negative_numbers = true)]
    pub high: Option<f64>,
    /// Verify every transition table and write tables.json.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub check_tables: Option<bool>,
    /// With beta1 > beta2, search for a gamma-coupled run in which a pair leaves S.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub demo_reversed: Option<bool>,
}

#[derive(Args, Debug)]
pub struct CoupleArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(flatten)]
    pub opts: CoupleOpts,
}

/// How a successful `couple` invocation ended.
pub enum Outcome {
    Ordered,
    Breaks,
}

#[derive(Serialize)]
struct Resolved<'a> {
    #[serde(flatten)]
    common: &'a Common,
    kind: Option<&'a str>,
    high: Option<f64>,
    check_tables: bool,
    demo_reversed: bool,
}

#[derive(Serialize)]
struct TablesOutput<'a> {
    config: &'a Resolved<'a>,
    all_passed: bool,
    reports: Vec<ClosureReport>,
}

#[derive(Serialize)]
struct DemoOutput<'a> {
    config: &'a Resolved<'a>,
    found: bool,
    report: Option<BreakReport>,
}

#[derive(Serialize)]
struct RunOutput<'a> {
    config: &'a Resolved<'a>,
    runs: usize,
    dominated_runs: usize,
    all_dominated: bool,
    first_exits: Vec<(usize, PairExit)>,
}

pub fn run(args: CoupleArgs, config: Option<&Path>) -> Result<Outcome> {
    let (file_shared, file_opts): (SharedArgs, CoupleOpts) = load_file(config, "couple")?;
    let mut opts = args.opts;
    fill_from!(opts, file_opts; kind, high, check_tables, demo_reversed);
    let c = resolve_common(args.shared, &file_shared, "out")?;
    let resolved = Resolved {
        common: &c,
        kind: opts.kind.as_deref(),
        high: opts.high,
        check_tables: opts.check_tables.unwrap_or(false),
        demo_reversed: opts.demo_reversed.unwrap_or(false),
    };
    let kind: Option<CouplingKind> = resolved.kind.map(str::parse).transpose()?;
    create_out(&c.out)?;

    if resolved.check_tables {
        let kinds = kind.map_or(CouplingKind::ALL.to_vec(), |k| vec![k]);
        let reports: Vec<ClosureReport> = kinds.into_iter().map(verify_table_closure).collect();
        let all_passed = reports.iter().all(ClosureReport::passed);
        for r in &reports {
            println!(
                "{}: {} cases, {} violations",
                r.kind,
                r.cases(),
                r.violations.len()
            );
        }
        write_json(&c.out_file("tables.json"), &TablesOutput { config: &resolved, all_passed, reports })?;
        if !all_passed {
            bail!("transition tables are inconsistent");
        }
        if !resolved.demo_reversed && resolved.high.is_none() {
            return Ok(Outcome::Ordered);
        }
    }

    let Some(high) = resolved.high else {
        bail!("--high is required");
    };
    let params = c.params()?;
    let geometry = c.geometry()?;

    if resolved.demo_reversed {
        if kind.is_some_and(|k| k != CouplingKind::Gamma) {
            bail!("--demo-reversed uses the gamma coupling");
        }
        let report = reversed_gamma_demo(&params, high, geometry, c.tmax, c.seed, c.replicas as u64)?;
        let found = report.is_some();
        match &report {
            Some(r) => println!(
                "coupling-breaks: pair {} at site {} at t = {:.4} (seed {}, attempt {})",
                r.exit.pair, r.exit.site, r.exit.time, r.seed, r.attempts
            ),
            None => println!("no pair left S in {} attempts", c.replicas),
        }
        write_json(&c.out_file("demo.json"), &DemoOutput { config: &resolved, found, report })?;
        return Ok(if found { Outcome::Breaks } else { Outcome::Ordered });
    }

    let Some(kind) = kind else {
        bail!("--kind is required");
    };
    let coupling = Coupling::new(kind, params, high)?;
    let initial = c.initial()?;
    let runs = (0..c.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let start = initial.build(geometry, &mut replica_rng(c.seed, 0, r))?;
            Ok(coupled_run(&coupling, &start, c.tmax, c.sample_dt, derive_seed(c.seed, 1, r))?)
        })
        .collect::<Result<Vec<_>>>()?;
    let path = c.out_file("coupled.csv");
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    runs[0].write_csv(BufWriter::new(file))?;
    let dominated_runs = runs.iter().filter(|t| t.always_dominated()).count();
    let first_exits: Vec<(usize, PairExit)> =
        runs.iter().enumerate().filter_map(|(i, t)| t.first_exit.map(|e| (i, e))).collect();
    let all_dominated = dominated_runs == runs.len() && first_exits.is_empty();
    println!("{kind} coupling: {dominated_runs} of {} runs dominated throughout", runs.len());
    let out = RunOutput { config: &resolved, runs: runs.len(), dominated_runs, all_dominated, first_exits };
    write_json(&c.out_file("couple.json"), &out)?;
    if all_dominated {
        Ok(Outcome::Ordered)
    } else {
        println!("coupling-breaks");
        Ok(Outcome::Breaks)
    }
}
