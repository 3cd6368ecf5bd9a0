//! Experiment configuration: defaults, flat key=value config files, flag
//! overrides, and the `GAPSIM_SEED` fallback.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gapsim::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Rice,
    Scaling,
    Poisson,
    Splitting,
    Clustering,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Rice => "rice",
            Experiment::Scaling => "scaling",
            Experiment::Poisson => "poisson",
            Experiment::Splitting => "splitting",
            Experiment::Clustering => "clustering",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rice" => Ok(Experiment::Rice),
            "scaling" => Ok(Experiment::Scaling),
            "poisson" => Ok(Experiment::Poisson),
            "splitting" => Ok(Experiment::Splitting),
            "clustering" => Ok(Experiment::Clustering),
            other => Err(Error::Param(format!("unknown experiment `{other}`"))),
        }
    }
}

/// Fully resolved run configuration. `seed` fixed implies byte-identical
/// CSV outputs across reruns and worker counts.
#[derive(Debug, Clone)]
pub struct Config {
    pub experiment: Experiment,
    pub kernel_spec: String,
    pub seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub grid_factor: f64,
    pub n_paths: u64,
    pub n_runs: u64,
    pub r_max: Option<f64>,
    pub windows: Vec<f64>,
    pub table_paths: u64,
    pub split_r: f64,
    pub split_s: Vec<f64>,
    pub split_k: usize,
    pub cluster_r: Vec<f64>,
    pub path_units: f64,
    pub dump_zeros: bool,
}

/// Unresolved overrides from flags or a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kernel: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub grid_factor: Option<f64>,
    pub n_paths: Option<u64>,
    pub n_runs: Option<u64>,
    pub r_max: Option<f64>,
    pub windows: Option<Vec<f64>>,
    pub table_paths: Option<u64>,
    pub split_r: Option<f64>,
    pub split_s: Option<Vec<f64>>,
    pub split_k: Option<usize>,
    pub cluster_r: Option<Vec<f64>>,
    pub path_units: Option<f64>,
    pub dump_zeros: Option<bool>,
}

impl Overrides {
    /// Later overrides win field by field.
    fn layered(base: Overrides, top: Overrides) -> Overrides {
        Overrides {
            kernel: top.kernel.or(base.kernel),
            seed: top.seed.or(base.seed),
            workers: top.workers.or(base.workers),
            out: top.out.or(base.out),
            grid_factor: top.grid_factor.or(base.grid_factor),
            n_paths: top.n_paths.or(base.n_paths),
            n_runs: top.n_runs.or(base.n_runs),
            r_max: top.r_max.or(base.r_max),
            windows: top.windows.or(base.windows),
            table_paths: top.table_paths.or(base.table_paths),
            split_r: top.split_r.or(base.split_r),
            split_s: top.split_s.or(base.split_s),
            split_k: top.split_k.or(base.split_k),
            cluster_r: top.cluster_r.or(base.cluster_r),
            path_units: top.path_units.or(base.path_units),
            dump_zeros: top.dump_zeros.or(base.dump_zeros),
        }
    }
}

fn parse_list(v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Param(format!("bad numeric list entry `{p}`")))
        })
        .collect()
}

/// Parse a flat `key=value` config file; `#` starts a comment.
pub fn parse_config_file(path: &Path) -> Result<Overrides> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Param(format!("cannot read config {}: {e}", path.display())))?;
    let mut o = Overrides::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Param(format!("config line {}: expected key=value", lineno + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        let bad = |what: &str| Error::Param(format!("config line {}: bad {what} `{v}`", lineno + 1));
        match k {
            "experiment" => { Experiment::parse(v)?; } // validated; subcommand still decides
            "kernel" => o.kernel = Some(v.to_string()),
            "seed" => o.seed = Some(v.parse().map_err(|_| bad("seed"))?),
            "workers" => o.workers = Some(v.parse().map_err(|_| bad("workers"))?),
            "out" => o.out = Some(PathBuf::from(v)),
            "grid_factor" => o.grid_factor = Some(v.parse().map_err(|_| bad("grid_factor"))?),
            "n_paths" => o.n_paths = Some(v.parse().map_err(|_| bad("n_paths"))?),
            "n_runs" => o.n_runs = Some(v.parse().map_err(|_| bad("n_runs"))?),
            "r_max" => o.r_max = Some(v.parse().map_err(|_| bad("r_max"))?),
            "R" => o.windows = Some(parse_list(v)?),
            "table_paths" => o.table_paths = Some(v.parse().map_err(|_| bad("table_paths"))?),
            "r" => o.split_r = Some(v.parse().map_err(|_| bad("r"))?),
            "s" => o.split_s = Some(parse_list(v)?),
            "k" => o.split_k = Some(v.parse().map_err(|_| bad("k"))?),
            "cluster_r" => o.cluster_r = Some(parse_list(v)?),
            "path_units" => o.path_units = Some(v.parse().map_err(|_| bad("path_units"))?),
            "dump_zeros" => o.dump_zeros = Some(v.parse().map_err(|_| bad("dump_zeros"))?),
            other => return Err(Error::Param(format!("config line {}: unknown key `{other}`", lineno + 1))),
        }
    }
    Ok(o)
}

/// Resolve the final configuration: defaults, then config file, then flags;
/// the seed additionally falls back to `GAPSIM_SEED`.
pub fn resolve(
    experiment: Experiment,
    file: Option<&Path>,
    flags: Overrides,
) -> Result<Config> {
    let from_file = match file {
        Some(p) => parse_config_file(p)?,
        None => Overrides::default(),
    };
    let o = Overrides::layered(from_file, flags);
    let env_seed = std::env::var("GAPSIM_SEED")
        .ok()
        .map(|v| {
            v.parse::<u64>()
                .map_err(|_| Error::Param(format!("bad GAPSIM_SEED `{v}`")))
        })
        .transpose()?;
    let config = Config {
        experiment,
        kernel_spec: o.kernel.unwrap_or_else(|| "gaussian".to_string()),
        seed: o.seed.or(env_seed).unwrap_or(0),
        workers: o
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
        out_dir: o.out.unwrap_or_else(|| PathBuf::from("gapsim_out")),
        grid_factor: o.grid_factor.unwrap_or(0.05),
        n_paths: o.n_paths.unwrap_or(100_000),
        n_runs: o.n_runs.unwrap_or(200),
        r_max: o.r_max,
        windows: o.windows.unwrap_or_else(|| vec![2000.0]),
        table_paths: o.table_paths.unwrap_or(500_000),
        split_r: o.split_r.unwrap_or(3.0),
        split_s: o.split_s.unwrap_or_else(|| vec![3.0, 6.0, 10.0]),
        split_k: o.split_k.unwrap_or(2),
        cluster_r: o.cluster_r.unwrap_or_else(|| vec![2.0, 3.0]),
        path_units: o.path_units.unwrap_or(500.0),
        dump_zeros: o.dump_zeros.unwrap_or(false),
    };
    validate(&config)?;
    Ok(config)
}

fn validate(c: &Config) -> Result<()> {
    if !(c.grid_factor > 0.0 && c.grid_factor < 1.0) {
        return Err(Error::Param(format!("grid_factor must be in (0,1), got {}", c.grid_factor)));
    }
    for &w in &c.windows {
        if !(w > 1.0) {
            return Err(Error::Param(format!("window R must exceed 1, got {w}")));
        }
    }
    if let Some(r) = c.r_max {
        if !(r > 0.0) {
            return Err(Error::Param(format!("r_max must be positive, got {r}")));
        }
    }
    if c.split_k < 2 {
        return Err(Error::Param(format!("k must be >= 2, got {}", c.split_k)));
    }
    Ok(())
}

/// Render the resolved config back to the flat key=value format, parseable by
/// [`parse_config_file`]; re-running from this file reproduces the outputs.
pub fn render(c: &Config) -> String {
    let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let mut out = String::new();
    out.push_str(&format!("experiment={}\n", c.experiment.name()));
    out.push_str(&format!("kernel={}\n", c.kernel_spec));
    out.push_str(&format!("seed={}\n", c.seed));
    out.push_str(&format!("workers={}\n", c.workers));
    out.push_str(&format!("out={}\n", c.out_dir.display()));
    out.push_str(&format!("grid_factor={}\n", c.grid_factor));
    out.push_str(&format!("n_paths={}\n", c.n_paths));
    out.push_str(&format!("n_runs={}\n", c.n_runs));
    if let Some(r) = c.r_max {
        out.push_str(&format!("r_max={r}\n"));
    }
    out.push_str(&format!("R={}\n", list(&c.windows)));
    out.push_str(&format!("table_paths={}\n", c.table_paths));
    out.push_str(&format!("r={}\n", c.split_r));
    out.push_str(&format!("s={}\n", list(&c.split_s)));
    out.push_str(&format!("k={}\n", c.split_k));
    out.push_str(&format!("cluster_r={}\n", list(&c.cluster_r)));
    out.push_str(&format!("path_units={}\n", c.path_units));
    out.push_str(&format!("dump_zeros={}\n", c.dump_zeros));
    out
}

/// Config map for the manifest echo.
pub fn as_map(c: &Config) -> BTreeMap<String, serde_json::Value> {
    let mut m = BTreeMap::new();
    let fl = |v: &[f64]| serde_json::Value::from(v.to_vec());
    m.insert("experiment".into(), c.experiment.name().into());
    m.insert("kernel".into(), c.kernel_spec.clone().into());
    m.insert("seed".into(), c.seed.into());
    m.insert("workers".into(), (c.workers as u64).into());
    m.insert("out".into(), c.out_dir.display().to_string().into());
    m.insert("grid_factor".into(), c.grid_factor.into());
    m.insert("n_paths".into(), c.n_paths.into());
    m.insert("n_runs".into(), c.n_runs.into());
    m.insert(
        "r_max".into(),
        c.r_max.map(serde_json::Value::from).unwrap_or(serde_json::Value::Null),
    );
    m.insert("R".into(), fl(&c.windows));
    m.insert("table_paths".into(), c.table_paths.into());
    m.insert("r".into(), c.split_r.into());
    m.insert("s".into(), fl(&c.split_s));
    m.insert("k".into(), (c.split_k as u64).into());
    m.insert("cluster_r".into(), fl(&c.cluster_r));
    m.insert("path_units".into(), c.path_units.into());
    m.insert("dump_zeros".into(), c.dump_zeros.into());
    m
}
