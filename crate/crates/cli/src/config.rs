//! Option resolution: command-line flags override the subcommand section of
//! the config file, which overrides its top-level keys, which override the
//! built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use cpas_core::{InitialCondition, LatticeGeometry, Params, Variant};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

macro_rules! fill_from {
    ($hi:expr, $lo:expr; $($f:ident),* $(,)?) => {
        $( if $hi.$f.is_none() { $hi.$f = $lo.$f.clone(); } )*
    };
}

pub(crate) use fill_from;

/// Flags shared by every subcommand.
#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharedArgs {
    /// Infection rate from asymptomatic neighbours.
    #[arg(long, allow_negative_numbers = true)]
    pub beta1: Option<f64>,
    /// Infection rate from symptomatic neighbours.
    #[arg(long, allow_negative_numbers = true)]
    pub beta2: Option<f64>,
    /// Rate of 1 -> 2.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Side length of the torus.
    #[arg(long)]
    pub side: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = ["standard", "forest-fire", "collapsed"])]
    pub variant: Option<String>,
    /// Initial condition: single-1, single-2, all-2, healthy or bernoulli:p1,p2.
    #[arg(long)]
    pub init: Option<String>,
    /// Spacing of density samples.
    #[arg(long, allow_negative_numbers = true)]
    pub sample_dt: Option<f64>,
}

const SHARED_KEYS: &[&str] = &[
    "beta1", "beta2", "gamma", "dim", "side", "tmax", "replicas", "seed", "out", "variant", "init", "sample_dt",
];

impl SharedArgs {
    fn fill(&mut self, lower: &SharedArgs) {
        fill_from!(self, lower; beta1, beta2, gamma, dim, side, tmax, replicas, seed, out, variant, init, sample_dt);
    }
}

/// Fully resolved shared options, echoed into every JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct Common {
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    pub variant: String,
    pub dim: usize,
    pub side: usize,
    pub tmax: f64,
    pub sample_dt: f64,
    pub replicas: usize,
    pub seed: u64,
    pub init: String,
    pub out: PathBuf,
}

impl Common {
    pub fn params(&self) -> Result<Params> {
        let variant: Variant = self.variant.parse()?;
        Ok(Params::with_variant(self.beta1, self.beta2, self.gamma, variant)?)
    }

    pub fn geometry(&self) -> Result<LatticeGeometry> {
        Ok(LatticeGeometry::new(self.dim, self.side)?)
    }

    pub fn initial(&self) -> Result<InitialCondition> {
        Ok(self.init.parse()?)
    }

    pub fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn split_table(table: toml::Table) -> (toml::Table, toml::Table) {
    table.into_iter().partition(|(k, _)| SHARED_KEYS.contains(&k.as_str()))
}

fn parse_shared(table: toml::Table, context: &str) -> Result<SharedArgs> {
    SharedArgs::deserialize(toml::Value::Table(table)).with_context(|| format!("invalid shared option in {context}"))
}

/// Reads `[section]` and the top-level keys of a config file. Other
/// subcommand sections are ignored.
pub fn load_file<T: DeserializeOwned + Default>(path: Option<&Path>, section: &str) -> Result<(SharedArgs, T)> {
    const SECTIONS: &[&str] = &["simulate", "sweep", "meanfield", "bounds", "couple"];
    let Some(path) = path else {
        return Ok((SharedArgs::default(), T::default()));
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut top: toml::Table = text.parse().with_context(|| format!("parsing {}", path.display()))?;
    let mut own = toml::Table::new();
    for name in SECTIONS {
        match top.remove(*name) {
            Some(toml::Value::Table(t)) if *name == section => own = t,
            Some(toml::Value::Table(_)) => {}
            Some(_) => bail!("[{name}] in {} must be a table", path.display()),
            None => {}
        }
    }
    let (top_shared, top_extra) = split_table(top);
    if let Some(key) = top_extra.keys().next() {
        bail!("unknown top-level key `{key}` in {}", path.display());
    }
    let (own_shared, own_extra) = split_table(own);
    let mut shared = parse_shared(own_shared, &format!("[{section}]"))?;
    shared.fill(&parse_shared(top_shared, "the top level")?);
    let extra = T::deserialize(toml::Value::Table(own_extra)).with_context(|| format!("invalid option in [{section}]"))?;
    Ok((shared, extra))
}

/// Resolves shared flags against the file and the defaults.
pub fn resolve_common(mut flags: SharedArgs, file: &SharedArgs, default_out: &str) -> Result<Common> {
    flags.fill(file);
    let c = Common {
        beta1: flags.beta1.unwrap_or(2.0),
        beta2: flags.beta2.unwrap_or(4.0),
        gamma: flags.gamma.unwrap_or(0.5),
        variant: flags.variant.unwrap_or_else(|| "standard".into()),
        dim: flags.dim.unwrap_or(1),
        side: flags.side.unwrap_or(100),
        tmax: flags.tmax.unwrap_or(100.0),
        sample_dt: flags.sample_dt.unwrap_or(1.0),
        replicas: flags.replicas.unwrap_or(100),
        seed: flags.seed.unwrap_or(0),
        init: flags.init.unwrap_or_else(|| "single-1".into()),
        out: flags.out.unwrap_or_else(|| PathBuf::from(default_out)),
    };
    c.params()?;
    c.geometry()?;
    c.initial()?.validate()?;
    if !(c.tmax > 0.0 && c.tmax.is_finite()) {
        bail!("--tmax must be positive, got {}", c.tmax);
    }
    if !(c.sample_dt > 0.0 && c.sample_dt.is_finite()) {
        bail!("--sample-dt must be positive, got {}", c.sample_dt);
    }
    if c.replicas == 0 {
        bail!("--replicas must be at least 1");
    }
    Ok(c)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
