//! Run configuration: a flat `key = value` text format, built-in presets,
//! and resolution into the objects a run needs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ftl_core::dynamics::{stepper_registry, DtRule, StepBound, TimeStepper};
use ftl_core::eulerian::{vehicles_for_target_ell, InitialProfile, ProfileShape};
use ftl_core::godunov::DEFAULT_CFL;
use ftl_core::velocity::{check_axioms, velocity_registry, VelocityModel, WeightProfile};
use ftl_core::{FtlError, Result};

/// Every key the parser accepts.
pub const KEYS: &[&str] = &[
    "model",
    "weights",
    "weights_printed",
    "kappa",
    "period",
    "profile",
    "profile_breaks",
    "profile_values",
    "profile_mean",
    "profile_amplitude",
    "profile_wavenumber",
    "profile_pieces",
    "profile_min",
    "profile_max",
    "profile_nu",
    "vehicles",
    "target_ell",
    "scheme",
    "dt",
    "horizon",
    "samples",
    "out_dir",
    "seed",
    "unsafe_dt",
    "literal_weights",
    "m_list",
    "ref_cells",
    "godunov_m_list",
    "cfl",
    "reference",
];

pub const PRESETS: &[(&str, &str)] = &[
    (
        "figure1",
        "# Oscillation experiment: kappa = 0, N = 10, c_j = 1/10,
# dt = ell, T = 4, density 1 on |x| < 0.5 and 0.05 elsewhere on [-2, 2].
model = greenshields
weights = uniform:10
weights_printed = 0.1, 0.1, 0.1, 0.1, 0.1
kappa = 0
period = 4
profile = piecewise
profile_breaks = 0, 1.5, 2.5
profile_values = 0.05, 1, 0.05
target_ell = 0.022222222222222223
scheme = euler
dt = ell:1
horizon = 4
samples = 401
m_list = 64, 128, 256, 512, 1024
ref_cells = 4096
",
    ),
    (
        "uniform-steady",
        "# Constant density: every vehicle moves at the same speed forever.
model = greenshields
weights = uniform:3
kappa = 0.5
period = 4
profile = piecewise
profile_breaks = 0
profile_values = 0.5
vehicles = 40
scheme = rk4
dt = ell:0.1
horizon = 2
samples = 21
",
    ),
    (
        "smooth",
        "# Smooth periodic data for the continuum-limit study.
model = greenshields
weights = uniform:10
kappa = 0
period = 4
profile = sinusoid
profile_mean = 0.5
profile_amplitude = 0.3
profile_wavenumber = 1
vehicles = 256
scheme = rk4
dt = ell:0.1
horizon = 1
samples = 11
m_list = 64, 128, 256, 512, 1024
ref_cells = 4096
",
    ),
    (
        "random-bv",
        "# Seeded random piecewise-constant data with classical (N = 1) weights.
model = greenshields
weights = uniform:1
kappa = 0.5
period = 4
profile = random
profile_pieces = 5
profile_min = 0.2
profile_max = 1
vehicles = 100
scheme = rk4
dt = ell:0.1
horizon = 2
samples = 41
",
    ),
];

pub fn preset_text(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
        .ok_or_else(|| {
            FtlError::Config(format!(
                "unknown preset `{name}` (known: {})",
                PRESETS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
            ))
        })
}

/// Raw key-value pairs, validated against [`KEYS`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Parse `key = value` lines. `#` starts a comment; blank lines are
    /// ignored; a key may appear once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                FtlError::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1))
            })?;
            let key = key.trim();
            if cfg.values.contains_key(key) {
                return Err(FtlError::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
            cfg.set(key, value.trim()).map_err(|e| match e {
                FtlError::Config(msg) => FtlError::Config(format!("line {}: {msg}", lineno + 1)),
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::parse(preset_text(name)?)
    }

    /// Set or replace one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(FtlError::Config(format!("unknown key `{key}`")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Apply a `key=value` override.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| FtlError::Config(format!("override `{assignment}` is not `key=value`")))?;
        self.set(k.trim(), v.trim())
    }

    /// Keys of `other` replace keys of `self`.
    pub fn overlay(&mut self, other: &RunConfig) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn remove(&mut self, key: &str) {
        self.values.remove(key);
    }

    fn f64_or(&self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.get(key) {
            Some(v) => parse_f64(key, v),
            None => default.ok_or_else(|| FtlError::Config(format!("missing required key `{key}`"))),
        }
    }

    fn usize_or(&self, key: &str, default: Option<usize>) -> Result<usize> {
        match self.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| FtlError::Config(format!("`{key}` = `{v}` is not a non-negative integer"))),
            None => default.ok_or_else(|| FtlError::Config(format!("missing required key `{key}`"))),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("1") | Some("yes") => Ok(true),
            Some("false") | Some("0") | Some("no") => Ok(false),
            Some(v) => Err(FtlError::Config(format!("`{key}` = `{v}` is not a boolean"))),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| v.split(',').map(|s| parse_f64(key, s.trim())).collect())
            .transpose()
    }

    pub fn usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        s.trim()
                            .parse()
                            .map_err(|_| FtlError::Config(format!("`{key}` entry `{}` is not an integer", s.trim())))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn seed(&self) -> Result<u64> {
        match self.get("seed") {
            Some(v) => v.parse().map_err(|_| FtlError::Config(format!("`seed` = `{v}` is not a u64"))),
            None => Ok(0),
        }
    }

    /// Text in the same format, keys sorted.
    pub fn to_text(&self) -> String {
        self.values.iter().fold(String::new(), |mut out, (k, v)| {
            let _ = writeln!(out, "{k} = {v}");
            out
        })
    }

    pub fn resolve(&self) -> Result<ResolvedRun> {
        ResolvedRun::from_config(self)
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(FtlError::Config(format!("`{key}` = `{v}` is not a finite number"))),
    }
}

fn parse_dt(v: &str) -> Result<DtRule> {
    let bad = || FtlError::Config(format!("`dt` = `{v}` is not a number, `ell:<k>` or `guard:<k>`"));
    let positive = |x: f64| if x > 0.0 { Ok(x) } else { Err(bad()) };
    if let Some(k) = v.strip_prefix("ell:") {
        Ok(DtRule::EllMultiple(positive(k.trim().parse().map_err(|_| bad())?)?))
    } else if let Some(k) = v.strip_prefix("guard:") {
        Ok(DtRule::Guard(positive(k.trim().parse().map_err(|_| bad())?)?))
    } else {
        Ok(DtRule::Absolute(positive(v.parse().map_err(|_| bad())?)?))
    }
}

/// A configuration with every name resolved and every derived quantity
/// computed.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub model_spec: String,
    pub model: VelocityModel,
    pub weights: WeightProfile,
    pub profile: InitialProfile,
    pub vehicles: usize,
    pub ell: f64,
    pub stepper: Arc<dyn TimeStepper>,
    pub dt_rule: DtRule,
    pub dt: f64,
    pub bound: StepBound,
    pub horizon: f64,
    pub samples: usize,
    pub out_dir: Option<String>,
    pub seed: u64,
    pub m_list: Vec<usize>,
    pub ref_cells: usize,
    pub godunov_m_list: Vec<usize>,
    pub cfl: f64,
    pub reference: bool,
    /// Human-readable remarks for the manifest.
    pub notes: Vec<String>,
}

impl ResolvedRun {
    fn from_config(cfg: &RunConfig) -> Result<Self> {
        let mut notes = Vec::new();
        let model_spec = cfg.get("model").unwrap_or("greenshields").to_string();
        let model = velocity_registry().resolve(&model_spec)?;
        check_axioms(&*model)?;

        let kappa = cfg.f64_or("kappa", Some(0.0))?;
        let weights_spec = cfg.get("weights").unwrap_or("uniform:1");
        let mut weights = WeightProfile::from_spec(weights_spec, kappa)?;
        let printed = cfg.f64_list("weights_printed")?;
        if let Some(raw) = &printed {
            let sum: f64 = raw.iter().sum();
            if (sum - 1.0).abs() > ftl_core::velocity::WEIGHT_SUM_TOL {
                notes.push(format!(
                    "printed weights {raw:?} sum to {sum}; running normalized weights {}",
                    weights.to_spec()
                ));
            }
        }
        if cfg.bool_or("literal_weights", false)? {
            let raw = printed.ok_or_else(|| {
                FtlError::Config("`literal_weights` needs `weights_printed`".into())
            })?;
            weights = WeightProfile::renormalized(&raw, weights.n(), kappa)?;
            notes.push(format!("literal weights renormalized to {}", weights.to_spec()));
        }

        let seed = cfg.seed()?;
        let profile = profile_from_config(cfg, seed)?;

        let (vehicles, ell) = match (cfg.get("vehicles"), cfg.get("target_ell")) {
            (Some(_), Some(_)) => {
                return Err(FtlError::Config("set either `vehicles` or `target_ell`, not both".into()))
            }
            (Some(_), None) => {
                let m = cfg.usize_or("vehicles", None)?;
                if m == 0 {
                    return Err(FtlError::Config("`vehicles` must be positive".into()));
                }
                (m, profile.mass() / m as f64)
            }
            (None, Some(_)) => {
                let target = cfg.f64_or("target_ell", None)?;
                let (m, ell) = vehicles_for_target_ell(&profile, target)?;
                notes.push(format!(
                    "target ell {target} gives mass / ell = {}; using M = {m}, ell = {ell:?}",
                    profile.mass() / target
                ));
                (m, ell)
            }
            (None, None) => (100, profile.mass() / 100.0),
        };
        if vehicles < weights.n() + 2 {
            return Err(FtlError::Config(format!(
                "{vehicles} vehicles cannot hold a stencil of N = {} (need M >= N + 2)",
                weights.n()
            )));
        }

        let stepper = stepper_registry().resolve(cfg.get("scheme").unwrap_or("rk4"))?;
        let dt_rule = parse_dt(cfg.get("dt").unwrap_or("ell:0.1"))?;
        let dt = dt_rule.resolve(ell, &weights, &*model);
        let bound = if cfg.bool_or("unsafe_dt", false)? {
            notes.push("unsafe_dt: step guard relaxed to dt <= ell".into());
            StepBound::Literal
        } else {
            StepBound::Strict
        };
        let limit = ftl_core::dynamics::step_limit(ell, &weights, &*model, bound);
        if dt > limit * (1.0 + 1e-12) {
            return Err(FtlError::Config(format!(
                "dt = {dt} violates the step guard dt <= {limit} (ell = {ell}, kappa = {kappa}, lip = {})",
                model.lip()
            )));
        }

        let horizon = cfg.f64_or("horizon", Some(1.0))?;
        if horizon < 0.0 {
            return Err(FtlError::Config(format!("`horizon` = {horizon} must be non-negative")));
        }
        let cfl = cfg.f64_or("cfl", Some(DEFAULT_CFL))?;
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(FtlError::Config(format!("`cfl` = {cfl} must lie in (0, 1]")));
        }
        let m_list = cfg.usize_list("m_list")?.unwrap_or_else(|| vec![64, 128, 256, 512, 1024]);
        let ref_cells = cfg.usize_or("ref_cells", Some(4 * m_list.iter().copied().max().unwrap_or(1)))?;
        Ok(Self {
            model_spec,
            model,
            weights,
            profile,
            vehicles,
            ell,
            stepper,
            dt_rule,
            dt,
            bound,
            horizon,
            samples: cfg.usize_or("samples", Some(11))?,
            out_dir: cfg.get("out_dir").map(str::to_string),
            seed,
            m_list,
            ref_cells,
            godunov_m_list: cfg
                .usize_list("godunov_m_list")?
                .unwrap_or_else(|| vec![128, 256, 512, 1024]),
            cfl,
            reference: cfg.bool_or("reference", false)?,
            notes,
        })
    }

    /// Configuration text that reproduces this run, followed by derived
    /// quantities and notes as comments.
    pub fn manifest(&self, command: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# command: {command}");
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let ulist = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(out, "model = {}", self.model_spec);
        let _ = writeln!(out, "weights = {}", self.weights.to_spec());
        let _ = writeln!(out, "kappa = {:?}", self.weights.kappa());
        let _ = writeln!(out, "period = {:?}", self.profile.period());
        match self.profile.shape() {
            ProfileShape::PiecewiseConstant { breaks, values } => {
                let _ = writeln!(out, "profile = piecewise");
                let _ = writeln!(out, "profile_breaks = {}", list(breaks));
                let _ = writeln!(out, "profile_values = {}", list(values));
            }
            ProfileShape::Sinusoid {
                mean,
                amplitude,
                wavenumber,
            } => {
                let _ = writeln!(out, "profile = sinusoid");
                let _ = writeln!(out, "profile_mean = {mean:?}");
                let _ = writeln!(out, "profile_amplitude = {amplitude:?}");
                let _ = writeln!(out, "profile_wavenumber = {wavenumber}");
            }
        }
        let _ = writeln!(out, "profile_nu = {:?}", self.profile.nu());
        let _ = writeln!(out, "vehicles = {}", self.vehicles);
        let _ = writeln!(out, "scheme = {}", self.stepper.name());
        let _ = writeln!(out, "dt = {:?}", self.dt);
        let _ = writeln!(out, "unsafe_dt = {}", self.bound == StepBound::Literal);
        let _ = writeln!(out, "horizon = {:?}", self.horizon);
        let _ = writeln!(out, "samples = {}", self.samples);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "m_list = {}", ulist(&self.m_list));
        let _ = writeln!(out, "ref_cells = {}", self.ref_cells);
        let _ = writeln!(out, "godunov_m_list = {}", ulist(&self.godunov_m_list));
        let _ = writeln!(out, "cfl = {:?}", self.cfl);
        let _ = writeln!(out, "reference = {}", self.reference);
        let _ = writeln!(out, "# derived: mass = {:?}", self.profile.mass());
        let _ = writeln!(out, "# derived: ell = {:?}", self.ell);
        let _ = writeln!(out, "# derived: N = {}", self.weights.n());
        let _ = writeln!(out, "# derived: dt rule = {} -> dt = {:?}", self.dt_rule, self.dt);
        let _ = writeln!(
            out,
            "# derived: step guard = {:?}",
            ftl_core::dynamics::step_limit(self.ell, &self.weights, &*self.model, self.bound)
        );
        for note in &self.notes {
            let _ = writeln!(out, "# note: {note}");
        }
        out
    }
}

fn profile_from_config(cfg: &RunConfig, seed: u64) -> Result<InitialProfile> {
    let period = cfg.f64_or("period", None)?;
    let profile = match cfg.get("profile").unwrap_or("piecewise") {
        "piecewise" => {
            let breaks = cfg
                .f64_list("profile_breaks")?
                .ok_or_else(|| FtlError::Config("missing required key `profile_breaks`".into()))?;
            let values = cfg
                .f64_list("profile_values")?
                .ok_or_else(|| FtlError::Config("missing required key `profile_values`".into()))?;
            InitialProfile::piecewise(period, breaks, values)?
        }
        "sinusoid" => {
            let wavenumber = cfg.usize_or("profile_wavenumber", Some(1))?;
            InitialProfile::sinusoid(
                period,
                cfg.f64_or("profile_mean", None)?,
                cfg.f64_or("profile_amplitude", None)?,
                u32::try_from(wavenumber)
                    .map_err(|_| FtlError::Config("`profile_wavenumber` is too large".into()))?,
            )?
        }
        "random" => {
            let pieces = cfg.usize_or("profile_pieces", Some(5))?;
            let lo = cfg.f64_or("profile_min", Some(0.2))?;
            let hi = cfg.f64_or("profile_max", Some(1.0))?;
            random_profile(period, pieces, lo, hi, seed)?
        }
        other => {
            return Err(FtlError::Config(format!(
                "unknown profile kind `{other}` (known: piecewise, sinusoid, random)"
            )))
        }
    };
    Ok(match cfg.get("profile_nu") {
        Some(v) => profile.with_nu(parse_f64("profile_nu", v)?),
        None => profile,
    })
}

/// Seeded piecewise-constant profile with `pieces` values in `[lo, hi]`.
pub fn random_profile(period: f64, pieces: usize, lo: f64, hi: f64, seed: u64) -> Result<InitialProfile> {
    if pieces == 0 || !(lo > 0.0 && lo <= hi && hi <= 1.0) {
        return Err(FtlError::Config(format!(
            "random profile needs pieces >= 1 and 0 < profile_min <= profile_max <= 1 (got {pieces}, {lo}, {hi})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut breaks: Vec<f64> = (1..pieces).map(|_| rng.gen_range(0.0..period)).collect();
    breaks.push(0.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let values = breaks.iter().map(|_| rng.gen_range(lo..=hi)).collect();
    InitialProfile::piecewise(period, breaks, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for (name, _) in PRESETS {
            let run = RunConfig::preset(name).unwrap().resolve().unwrap();
            assert!(run.vehicles >= run.weights.n() + 2, "{name}");
        }
    }

    #[test]
    fn figure1_derived_parameters() {
        let run = RunConfig::preset("figure1").unwrap().resolve().unwrap();
        assert_eq!(run.vehicles, 52);
        assert!((run.ell - 1.15 / 52.0).abs() < 1e-15);
        assert_eq!(run.dt, run.ell);
        assert_eq!(run.weights.n(), 10);
        assert!(run.weights.coeffs()[..10].iter().all(|&c| c == 0.1));
        assert!(run.notes.iter().any(|n| n.contains("sum to 0.5")));
    }

    #[test]
    fn literal_weights_are_renormalized() {
        let mut cfg = RunConfig::preset("figure1").unwrap();
        cfg.set("literal_weights", "true").unwrap();
        let run = cfg.resolve().unwrap();
        assert_eq!(run.weights.n(), 10);
        assert!(run.weights.coeffs()[..5].iter().all(|&c| (c - 0.2).abs() < 1e-15));
        assert!(run.weights.coeffs()[5..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn parse_errors_name_the_problem() {
        assert!(RunConfig::parse("nonsense").unwrap_err().to_string().contains("line 1"));
        assert!(RunConfig::parse("colour = red").unwrap_err().to_string().contains("unknown key"));
        assert!(RunConfig::parse("kappa = 1\nkappa = 2").unwrap_err().to_string().contains("duplicate"));
        let mut cfg = RunConfig::preset("smooth").unwrap();
        cfg.set("weights", "0.25, 0.25, 0").unwrap();
        let err = cfg.resolve().unwrap_err();
        assert!(err.to_string().contains("weight-sum invariant"), "{err}");
        assert!(err.is_config());
    }

    #[test]
    fn step_guard_is_enforced_unless_unsafe() {
        let mut cfg = RunConfig::preset("smooth").unwrap();
        cfg.set("kappa", "0.5").unwrap();
        cfg.set("dt", "ell:1").unwrap();
        assert!(cfg.resolve().unwrap_err().to_string().contains("step guard"));
        cfg.set("unsafe_dt", "true").unwrap();
        assert_eq!(cfg.resolve().unwrap().bound, StepBound::Literal);
    }

    #[test]
    fn dt_rules() {
        assert_eq!(parse_dt("0.01").unwrap(), DtRule::Absolute(0.01));
        assert_eq!(parse_dt("ell:0.5").unwrap(), DtRule::EllMultiple(0.5));
        assert_eq!(parse_dt("guard:1").unwrap(), DtRule::Guard(1.0));
        assert!(parse_dt("ell:-1").is_err());
        assert!(parse_dt("fast").is_err());
    }

    #[test]
    fn manifest_round_trips() {
        for (name, _) in PRESETS {
            let run = RunConfig::preset(name).unwrap().resolve().unwrap();
            let again = RunConfig::parse(&run.manifest("simulate")).unwrap().resolve().unwrap();
            assert_eq!(again.vehicles, run.vehicles, "{name}");
            assert_eq!(again.ell, run.ell, "{name}");
            assert_eq!(again.dt, run.dt, "{name}");
            assert_eq!(again.weights, run.weights, "{name}");
            assert_eq!(again.profile.shape(), run.profile.shape(), "{name}");
        }
    }

    #[test]
    fn random_profile_is_seeded() {
        let a = random_profile(4.0, 5, 0.2, 1.0, 7).unwrap();
        assert_eq!(a, random_profile(4.0, 5, 0.2, 1.0, 7).unwrap());
        assert_ne!(a, random_profile(4.0, 5, 0.2, 1.0, 8).unwrap());
        assert!(a.inf() >= 0.2 && a.sup() <= 1.0);
    }
}
