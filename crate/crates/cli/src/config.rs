use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;
use symcone::maps::conjugated_inversion;
use symcone::{ConeSpec, GaugeMapSpec, OrderUnitSpace, ProductTensor, Vector};

pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Text,
}

/// Flags shared by every subcommand. Anything left unset falls back to the
/// `--config` file, then to the defaults.
#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// JSON file with any of the fields below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `orthant`, `lorentz`, `psd`, or an inline JSON cone spec.
    #[arg(long)]
    pub cone: Option<String>,
    /// Dimension `n` (orthant, lorentz) or matrix size `d` (psd).
    #[arg(long = "dim", visible_alias = "d")]
    pub dim: Option<usize>,
    /// `inversion`, `conjugated`, `identity`, `inverse-cube`, or a JSON file.
    #[arg(long)]
    pub map: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the result here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Vector as a JSON array, or a file holding one.
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub y: Option<String>,
    /// Product tensor JSON file (`algebra`); defaults to the builtin product.
    #[arg(long)]
    pub product: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<String>,
    cone: Option<serde_json::Value>,
    dim: Option<usize>,
    map: Option<serde_json::Value>,
    trials: Option<usize>,
    seed: Option<u64>,
    tol: Option<f64>,
    format: Option<Format>,
    out: Option<PathBuf>,
    x: Option<Vec<f64>>,
    y: Option<Vec<f64>>,
    product: Option<serde_json::Value>,
}

#[derive(Debug)]
pub struct RunConfig {
    pub cone: ConeSpec,
    pub map: Option<GaugeMapSpec>,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub x: Option<Vector>,
    pub y: Option<Vector>,
    pub product: Option<ProductTensor>,
}

impl RunConfig {
    pub fn resolve(command: &str, args: &CommonArgs) -> Result<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str::<FileConfig>(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => FileConfig::default(),
        };
        if let Some(c) = &file.command {
            if c != command {
                bail!("config is for command `{c}`, not `{command}`");
            }
        }

        let dim = args.dim.or(file.dim);
        let cone = match (&args.cone, &file.cone) {
            (Some(s), _) => parse_cone(s, dim)?,
            (None, Some(serde_json::Value::String(s))) => parse_cone(s, dim)?,
            (None, Some(v)) => serde_json::from_value(v.clone()).context("invalid cone spec")?,
            (None, None) => bail!("--cone is required"),
        };
        cone.validate().map_err(anyhow::Error::new)?;

        let seed = args.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
        let map = match (&args.map, &file.map) {
            (Some(s), _) => Some(parse_map(s, &cone, seed)?),
            (None, Some(serde_json::Value::String(s))) => Some(parse_map(s, &cone, seed)?),
            (None, Some(v)) => Some(serde_json::from_value(v.clone()).context("invalid map spec")?),
            (None, None) => None,
        };
        if let Some(n) = map.as_ref().and_then(GaugeMapSpec::dim) {
            if n != cone.dim() {
                bail!("map acts on dimension {n}, cone has dimension {}", cone.dim());
            }
        }

        let trials = args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            bail!("--trials must be at least 1");
        }
        let tol = args.tol.or(file.tol).unwrap_or(DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            bail!("--tol must be positive and finite");
        }
        let x = match &args.x {
            Some(s) => Some(parse_vector(s)?),
            None => file.x.map(Vector::new),
        };
        let y = match &args.y {
            Some(s) => Some(parse_vector(s)?),
            None => file.y.map(Vector::new),
        };
        let product = match (&args.product, file.product) {
            (Some(path), _) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Some(serde_json::from_str(&text).with_context(|| format!("parsing product {}", path.display()))?)
            }
            (None, Some(v)) => Some(serde_json::from_value(v).context("invalid product tensor")?),
            (None, None) => None,
        };
        Ok(Self {
            product,
            cone,
            map,
            trials,
            seed,
            tol,
            format: args.format.or(file.format).unwrap_or_default(),
            out: args.out.clone().or(file.out),
            x,
            y,
        })
    }

    pub fn space(&self) -> Result<OrderUnitSpace> {
        Ok(OrderUnitSpace::standard(self.cone.clone())?)
    }

    pub fn require_map(&self) -> Result<&GaugeMapSpec> {
        self.map.as_ref().context("--map is required")
    }

    pub fn vector(&self, v: &Option<Vector>, flag: &str) -> Result<Vector> {
        let v = v.clone().with_context(|| format!("--{flag} is required"))?;
        if v.len() != self.cone.dim() {
            bail!("--{flag} has {} entries, cone has dimension {}", v.len(), self.cone.dim());
        }
        Ok(v)
    }
}

fn parse_cone(s: &str, dim: Option<usize>) -> Result<ConeSpec> {
    if s.trim_start().starts_with('{') {
        return serde_json::from_str(s).context("invalid cone spec");
    }
    let need = || dim.context("--dim is required");
    Ok(match s {
        "orthant" => ConeSpec::orthant(need()?),
        "lorentz" => ConeSpec::lorentz(need()?),
        "psd" => ConeSpec::psd(need()?),
        other => bail!("unknown cone `{other}`"),
    })
}

fn parse_map(s: &str, cone: &ConeSpec, seed: u64) -> Result<GaugeMapSpec> {
    let n = cone.dim();
    Ok(match s {
        "inversion" => GaugeMapSpec::inversion(cone.clone())?,
        "conjugated" => conjugated_inversion(cone, seed)?,
        "identity" => GaugeMapSpec::Identity { n },
        "inverse-cube" => GaugeMapSpec::power(n, -3.0)?,
        path => {
            let text = std::fs::read_to_string(Path::new(path))
                .with_context(|| format!("unknown map `{path}` (not a builtin name or readable file)"))?;
            serde_json::from_str(&text).with_context(|| format!("parsing map {path}"))?
        }
    })
}

fn parse_vector(s: &str) -> Result<Vector> {
    let text = if s.trim_start().starts_with('[') {
        s.to_string()
    } else {
        std::fs::read_to_string(s).with_context(|| format!("reading vector file {s}"))?
    };
    let coords: Vec<f64> = serde_json::from_str(&text).with_context(|| format!("invalid vector `{s}`"))?;
    Ok(Vector::new(coords))
}
