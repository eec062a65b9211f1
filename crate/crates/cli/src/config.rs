//! Resolved, serializable command configurations. A `meta.json` holds one of
//! these plus the master seed, which is all a rerun needs.

use std::path::Path;

use influential_bandit::benchmark::Benchmark;
use influential_bandit::estimation::{LogGenerator, NormKind, Parametrization};
use influential_bandit::experiments::{
    counterexample_instance, instance_seed, linear_regret_instance, random_instance,
};
use influential_bandit::{Instance, NoiseModel, PolicySpec};
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const TOOL: &str = "ibandit";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: Job,
}

impl Meta {
    pub fn new(seed: u64, config: Job) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Job {
    Run(RunConfig),
    Scan(ScanConfig),
    Histogram(HistogramConfig),
    Fit(FitConfig),
    Probe(ProbeConfig),
    Qp(QpConfig),
    Synth(SynthConfig),
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::Run(_) => "run",
            Job::Scan(_) => "scan",
            Job::Histogram(_) => "histogram",
            Job::Fit(_) => "fit",
            Job::Probe(_) => "probe",
            Job::Qp(_) => "qp",
            Job::Synth(_) => "synth",
        }
    }
}

/// Where an instance comes from. File instances are embedded so a rerun
/// does not depend on the file still being there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSource {
    Builtin { spec: String },
    File { path: String, instance: serde_json::Value },
}

enum Builtin {
    Counterexample,
    LinearRegret,
    Random { k: usize },
}

fn parse_builtin(spec: &str) -> Option<Result<Builtin, Failure>> {
    match spec {
        "prop2" | "counterexample" => return Some(Ok(Builtin::Counterexample)),
        "prop3" | "linear_regret" => return Some(Ok(Builtin::LinearRegret)),
        _ => {}
    }
    let rest = spec.strip_prefix("random")?;
    let k = match rest.strip_prefix(":k=") {
        Some(k) => k.parse::<usize>().ok().filter(|&k| k >= 2),
        None if rest.is_empty() => Some(3),
        None => None,
    };
    Some(k.map(|k| Builtin::Random { k }).ok_or_else(|| {
        Failure::Usage(format!("bad random instance spec `{spec}` (expected random:k=<K>, K >= 2)"))
    }))
}

impl InstanceSource {
    pub fn parse(spec: &str) -> Result<Self, Failure> {
        if let Some(b) = parse_builtin(spec) {
            b?;
            return Ok(InstanceSource::Builtin { spec: spec.to_string() });
        }
        let path = Path::new(spec);
        if !path.is_file() {
            return Err(Failure::Usage(format!(
                "instance `{spec}` is neither prop2, prop3, random:k=<K> nor a JSON file"
            )));
        }
        let inst = Instance::read_json(path)?;
        let instance = serde_json::from_str(&inst.to_json()?).map_err(|e| Failure::Runtime(e.to_string()))?;
        Ok(InstanceSource::File {
            path: spec.to_string(),
            instance,
        })
    }

    pub fn name(&self) -> String {
        match self {
            InstanceSource::Builtin { spec } => spec.clone(),
            InstanceSource::File { path, .. } => Path::new(path)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.clone()),
        }
    }

    pub fn random_k(&self) -> Option<usize> {
        match self {
            InstanceSource::Builtin { spec } => match parse_builtin(spec) {
                Some(Ok(Builtin::Random { k })) => Some(k),
                _ => None,
            },
            InstanceSource::File { .. } => None,
        }
    }

    /// Random instances draw their matrix from the master seed.
    pub fn build(&self, master: u64) -> Result<Instance, Failure> {
        match self {
            InstanceSource::Builtin { spec } => match parse_builtin(spec) {
                Some(Ok(Builtin::Counterexample)) => Ok(counterexample_instance()),
                Some(Ok(Builtin::LinearRegret)) => Ok(linear_regret_instance()),
                Some(Ok(Builtin::Random { k })) => Ok(random_instance(k, instance_seed(master, 0))?),
                Some(Err(e)) => Err(e),
                None => Err(Failure::Usage(format!("unknown instance `{spec}`"))),
            },
            InstanceSource::File { instance, .. } => Ok(Instance::from_json(&instance.to_string())?),
        }
    }

    pub fn build_with_noise(&self, master: u64, noise: Option<&str>) -> Result<Instance, Failure> {
        let inst = self.build(master)?;
        match noise {
            Some(spec) => Ok(inst.with_noise(parse_noise(spec)?)?),
            None => Ok(inst),
        }
    }
}

/// `none`, `uniform:<bound>` or `gaussian:<sigma>`.
pub fn parse_noise(spec: &str) -> Result<NoiseModel, Failure> {
    let (kind, param) = match spec.split_once(':') {
        Some((kind, p)) => {
            let p: f64 = p
                .parse()
                .map_err(|_| Failure::Usage(format!("bad noise parameter in `{spec}`")))?;
            (kind, p)
        }
        None => (spec, 0.0),
    };
    Ok(NoiseModel::from_kind(kind, param)?)
}

pub fn parse_benchmark(spec: &str) -> Result<Benchmark, Failure> {
    match spec {
        "relaxation" => Ok(Benchmark::Relaxation),
        "known" => Ok(Benchmark::KnownOptimum),
        "auto" => Ok(Benchmark::Auto),
        other => Err(Failure::Usage(format!(
            "unknown benchmark `{other}` (expected relaxation, known or auto)"
        ))),
    }
}

pub fn parse_policy(spec: &str) -> Result<PolicySpec, Failure> {
    Ok(spec.parse::<PolicySpec>()?)
}

/// `uniform` or `sticky:<stay probability>`.
pub fn parse_generator(spec: &str) -> Result<LogGenerator, Failure> {
    if spec == "uniform" {
        return Ok(LogGenerator::Uniform);
    }
    let stay = spec
        .strip_prefix("sticky:")
        .and_then(|p| p.parse::<f64>().ok())
        .filter(|p| (0.0..=1.0).contains(p))
        .ok_or_else(|| Failure::Usage(format!("bad generator `{spec}` (expected uniform or sticky:<p>)")))?;
    Ok(LogGenerator::Sticky { stay })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub instance: InstanceSource,
    pub policy: String,
    pub horizon: u64,
    pub noise: Option<String>,
    pub benchmark: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub instance: InstanceSource,
    pub policies: Vec<String>,
    pub horizons: Vec<u64>,
    /// Seeds per instance.
    pub seeds: usize,
    /// Number of random instances; only for `random:k=<K>`.
    pub n_instances: Option<usize>,
    pub noise: Option<String>,
    pub benchmark: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub k: usize,
    pub n_instances: usize,
    pub policy: String,
    pub horizons: Vec<u64>,
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub ratings: String,
    pub k: usize,
    pub parametrization: String,
    pub rating_max: f64,
    pub min_events: usize,
    pub arm_map: Option<String>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_iterations: usize,
    pub patience: usize,
    pub min_relative_improvement: f64,
    pub init_scale: f64,
    pub norm: String,
    /// Users fitted between flushes of the output files.
    pub chunk: usize,
}

impl FitConfig {
    pub fn parametrization(&self) -> Result<Parametrization, Failure> {
        Ok(self.parametrization.parse()?)
    }

    pub fn norm(&self) -> Result<NormKind, Failure> {
        Ok(self.norm.parse()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub instance: InstanceSource,
    pub noise: Option<String>,
    pub budget: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpConfig {
    pub instance: InstanceSource,
    pub horizon: u64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub instance: InstanceSource,
    pub users: usize,
    pub events: usize,
    pub generator: String,
    pub noise: Option<String>,
    pub rating_max: f64,
}

/// Checks everything that can be checked without running.
pub fn validate(job: &Job) -> Result<(), Failure> {
    let horizons_ok = |h: &[u64]| -> Result<(), Failure> {
        influential_bandit::experiments::validate_horizons(h)?;
        Ok(())
    };
    match job {
        Job::Run(c) => {
            parse_policy(&c.policy)?;
            parse_benchmark(&c.benchmark)?;
            if let Some(n) = &c.noise {
                parse_noise(n)?;
            }
            if c.horizon == 0 {
                return Err(Failure::Usage("--T must be positive".into()));
            }
        }
        Job::Scan(c) => {
            if c.policies.is_empty() {
                return Err(Failure::Usage("--policies is empty".into()));
            }
            for p in &c.policies {
                parse_policy(p)?;
            }
            parse_benchmark(&c.benchmark)?;
            horizons_ok(&c.horizons)?;
            if c.seeds == 0 {
                return Err(Failure::Usage("--seeds must be positive".into()));
            }
            match (c.n_instances, c.instance.random_k()) {
                (Some(0), _) => return Err(Failure::Usage("--n-instances must be positive".into())),
                (Some(_), None) => {
                    return Err(Failure::Usage("--n-instances needs a random:k=<K> instance".into()))
                }
                (Some(_), Some(_)) if c.noise.is_some() => {
                    return Err(Failure::Usage("random instance pools use their own noise; drop --noise".into()))
                }
                _ => {}
            }
            if let Some(n) = &c.noise {
                parse_noise(n)?;
            }
        }
        Job::Histogram(c) => {
            parse_policy(&c.policy)?;
            horizons_ok(&c.horizons)?;
            if c.k < 2 || c.n_instances == 0 || c.bins == 0 {
                return Err(Failure::Usage("histogram needs --k >= 2, --n-instances >= 1 and --bins >= 1".into()));
            }
        }
        Job::Fit(c) => {
            c.parametrization()?;
            c.norm()?;
            if c.k == 0 || c.chunk == 0 {
                return Err(Failure::Usage("--k and --chunk must be positive".into()));
            }
            if !Path::new(&c.ratings).is_file() {
                return Err(Failure::Usage(format!("ratings file `{}` not found", c.ratings)));
            }
            if let Some(m) = &c.arm_map {
                if !Path::new(m).is_file() {
                    return Err(Failure::Usage(format!("arm map `{m}` not found")));
                }
            }
        }
        Job::Probe(c) => {
            if let Some(n) = &c.noise {
                parse_noise(n)?;
            }
        }
        Job::Qp(c) => {
            if c.horizon == 0 || !(c.tolerance > 0.0) || c.max_iterations == 0 {
                return Err(Failure::Usage("qp needs positive --T, --tolerance and --max-iterations".into()));
            }
        }
        Job::Synth(c) => {
            parse_generator(&c.generator)?;
            if let Some(n) = &c.noise {
                parse_noise(n)?;
            }
            if c.users == 0 || c.events < 2 {
                return Err(Failure::Usage("synth needs --users >= 1 and --events >= 2".into()));
            }
        }
    }
    Ok(())
}
