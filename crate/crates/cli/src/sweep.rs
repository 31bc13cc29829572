use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use cpas_core::dynamics::{survival_estimate_at, SurvivalEstimate};
use cpas_core::Params;
use serde::{Deserialize, Serialize};

use crate::config::{create_out, fill_from, load_file, resolve_common, write_json, Common, SharedArgs};

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOpts {
    /// Values of beta1: `start:stop:step`, a comma list, or one number.
    #[arg(long)]
    pub beta1_grid: Option<String>,
    #[arg(long)]
    pub beta2_grid: Option<String>,
    #[arg(long)]
    pub gamma_grid: Option<String>,
    /// Stop after computing this many new grid points.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(flatten)]
    pub opts: SweepOpts,
}

/// Parses `start:stop:step`, `a,b,c` or a single number.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().with_context(|| format!("bad number `{s}` in grid `{spec}`"))?;
        if !v.is_finite() {
            bail!("grid values must be finite, got {v}");
        }
        Ok(v)
    };
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [a, b, s] = parts[..] else {
            bail!("range grid must be start:stop:step, got `{spec}`");
        };
        let (start, stop, step) = (num(a)?, num(b)?, num(s)?);
        if !(step > 0.0) || stop < start {
            bail!("range grid needs step > 0 and stop >= start, got `{spec}`");
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        if n > 1_000_000 {
            bail!("grid `{spec}` has too many points");
        }
        (0..=n).map(|k| start + k as f64 * step).collect()
    } else {
        spec.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<Result<Vec<_>>>()?
    };
    if values.is_empty() {
        bail!("empty grid `{spec}`");
    }
    Ok(values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Fingerprint {
    beta1: Vec<f64>,
    beta2: Vec<f64>,
    gamma: Vec<f64>,
    variant: String,
    dim: usize,
    side: usize,
    tmax: f64,
    replicas: usize,
    seed: u64,
    init: String,
}

#[derive(Serialize, Deserialize)]
struct PointRecord {
    index: usize,
    beta1: f64,
    beta2: f64,
    gamma: f64,
    estimate: SurvivalEstimate,
}

#[derive(Serialize)]
struct Resolved<'a> {
    #[serde(flatten)]
    common: &'a Common,
    beta1_grid: &'a [f64],
    beta2_grid: &'a [f64],
    gamma_grid: &'a [f64],
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    config: Resolved<'a>,
    points: usize,
    complete: bool,
}

fn marker_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("point-{index:06}.json"))
}

fn read_marker(path: &Path, index: usize, b1: f64, b2: f64, g: f64) -> Result<Option<SurvivalEstimate>> {
    let Ok(text) = std::fs::read_to_string(path) else { return Ok(None) };
    let rec: PointRecord =
        serde_json::from_str(&text).with_context(|| format!("corrupt sweep marker {}", path.display()))?;
    if rec.index != index || rec.beta1 != b1 || rec.beta2 != b2 || rec.gamma != g {
        bail!("sweep marker {} does not match grid point {index}", path.display());
    }
    Ok(Some(rec.estimate))
}

pub fn run(args: SweepArgs, config: Option<&Path>) -> Result<()> {
    let (file_shared, file_opts): (SharedArgs, SweepOpts) = load_file(config, "sweep")?;
    let mut opts = args.opts;
    fill_from!(opts, file_opts; beta1_grid, beta2_grid, gamma_grid, limit);
    let c = resolve_common(args.shared, &file_shared, "out")?;
    let grid = |spec: &Option<String>, fallback: f64| match spec {
        Some(s) => parse_grid(s),
        None => Ok(vec![fallback]),
    };
    let beta1 = grid(&opts.beta1_grid, c.beta1)?;
    let beta2 = grid(&opts.beta2_grid, c.beta2)?;
    let gamma = grid(&opts.gamma_grid, c.gamma)?;
    let variant = c.params()?.variant;
    let geometry = c.geometry()?;
    let initial = c.initial()?;

    let mut points = Vec::with_capacity(beta1.len() * beta2.len() * gamma.len());
    for &b1 in &beta1 {
        for &b2 in &beta2 {
            for &g in &gamma {
                let p = Params::with_variant(b1, b2, g, variant)
                    .with_context(|| format!("grid point beta1 = {b1}, beta2 = {b2}, gamma = {g}"))?;
                points.push(p);
            }
        }
    }

    create_out(&c.out)?;
    let marks = c.out_file("sweep.points");
    create_out(&marks)?;
    let fingerprint = Fingerprint {
        beta1: beta1.clone(),
        beta2: beta2.clone(),
        gamma: gamma.clone(),
        variant: c.variant.clone(),
        dim: c.dim,
        side: c.side,
        tmax: c.tmax,
        replicas: c.replicas,
        seed: c.seed,
        init: c.init.clone(),
    };
    let fp_path = marks.join("config.json");
    if let Ok(text) = std::fs::read_to_string(&fp_path) {
        let old: Fingerprint =
            serde_json::from_str(&text).with_context(|| format!("corrupt {}", fp_path.display()))?;
        if old != fingerprint {
            bail!("{} holds a sweep with different settings; use another --out", c.out.display());
        }
    } else {
        write_json(&fp_path, &fingerprint)?;
    }

    let limit = opts.limit.unwrap_or(usize::MAX);
    let mut computed = 0;
    let mut results = Vec::with_capacity(points.len());
    for (index, p) in points.iter().enumerate() {
        let path = marker_path(&marks, index);
        if let Some(est) = read_marker(&path, index, p.beta1, p.beta2, p.gamma)? {
            results.push(est);
            continue;
        }
        if computed == limit {
            break;
        }
        let est = survival_estimate_at(p, geometry, initial, c.tmax, c.replicas, c.seed, index as u64)?;
        let rec = PointRecord { index, beta1: p.beta1, beta2: p.beta2, gamma: p.gamma, estimate: est.clone() };
        let tmp = path.with_extension("json.tmp");
        write_json(&tmp, &rec)?;
        std::fs::rename(&tmp, &path).with_context(|| format!("renaming {}", tmp.display()))?;
        println!(
            "point {}/{}: beta1 = {}, beta2 = {}, gamma = {}: survival {:.4}",
            index + 1,
            points.len(),
            p.beta1,
            p.beta2,
            p.gamma,
            est.probability.value
        );
        results.push(est);
        computed += 1;
    }

    let complete = results.len() == points.len();
    let summary = SweepSummary {
        config: Resolved { common: &c, beta1_grid: &beta1, beta2_grid: &beta2, gamma_grid: &gamma },
        points: points.len(),
        complete,
    };
    if !complete {
        write_json(&c.out_file("sweep.json"), &summary)?;
        println!("{} of {} points done; rerun to continue", results.len(), points.len());
        return Ok(());
    }
    let mut csv = String::from("beta1,beta2,gamma,survival,ci_lo,ci_hi,density,density_ci_lo,density_ci_hi\n");
    for (p, e) in points.iter().zip(&results) {
        let (s, d) = (e.probability, e.density);
        writeln!(csv, "{},{},{},{},{},{},{},{},{}", p.beta1, p.beta2, p.gamma, s.value, s.lo, s.hi, d.value, d.lo, d.hi)?;
    }
    let path = c.out_file("sweep.csv");
    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    write_json(&c.out_file("sweep.json"), &summary)?;
    println!("wrote {} points to {}", points.len(), path.display());
    Ok(())
}
