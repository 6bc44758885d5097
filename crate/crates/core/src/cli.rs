//! Configuration loading and experiment dispatch for the `weyl-lab` binary.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::discretization::{adequacy_check, build, GridSpec};
use crate::error::{Error, Result};
use crate::experiments::{self, AsymptoticReport, HeatMode, SlopeTarget};
use crate::grids;
use crate::mc::MonteCarloConfig;
use crate::measures::{staircase_nu, FractionalIndex, StieltjesMeasure};
use crate::potentials::{
    make_exponential, make_power, make_rozenbljum, unit_ball_volume, Potential,
};
use crate::spectral::{eigen_lowest, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    WeylClassical,
    WeylSemiclassical,
    HeatTrace,
    Tauberian,
    TauberianSemi,
    OscillationScan,
    SigmaScan,
    NonregularDemo,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::WeylClassical,
        Experiment::WeylSemiclassical,
        Experiment::HeatTrace,
        Experiment::Tauberian,
        Experiment::TauberianSemi,
        Experiment::OscillationScan,
        Experiment::SigmaScan,
        Experiment::NonregularDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::WeylClassical => "weyl-classical",
            Experiment::WeylSemiclassical => "weyl-semiclassical",
            Experiment::HeatTrace => "heat-trace",
            Experiment::Tauberian => "tauberian",
            Experiment::TauberianSemi => "tauberian-semi",
            Experiment::OscillationScan => "oscillation-scan",
            Experiment::SigmaScan => "sigma-scan",
            Experiment::NonregularDemo => "nonregular-demo",
        }
    }

    /// The statement each experiment measures.
    pub fn claim(self) -> &'static str {
        match self {
            Experiment::WeylClassical => "N(lam) ~ (2pi)^-n omega_n int (lam - V)_+^{n/2} dx as lam -> inf",
            Experiment::WeylSemiclassical => "hbar^n N_hbar(I) ~ (2pi)^-n |{(x,xi) : |xi|^2 + V(x) in I}| as hbar -> 0",
            Experiment::HeatTrace => "Tr e^{-t(hbar^2 Delta + V)} ~ (4 pi t hbar^2)^{-n/2} int e^{-tV} dx as t -> 0 or hbar -> 0",
            Experiment::Tauberian => "int e^{-tr} dmu ~ t^-alpha int e^{-tr} dnu (t -> 0) implies mu[0,lam] ~ nu^alpha(lam) (lam -> inf)",
            Experiment::TauberianSemi => "hbar^{2alpha} mu_hbar(I) ~ nu^alpha(b) - nu^alpha(a) as hbar -> 0",
            Experiment::OscillationScan => "sphere-oscillation ratio of V grows like lam^{kappa1/kappa2 - 1} for the sharpness potential",
            Experiment::SigmaScan => "sublevel volume sigma(lam) grows like lam^{(1 - theta(n-1))/kappa2} and stays doubling",
            Experiment::NonregularDemo => "a doubling measure whose Laplace transform is not regularly varying",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|e| e.name() == name)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Flat `key = value` configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    /// Parses `key = value` lines; `#` and `;` start comments, `[section]`
    /// headers prefix the following keys with `section.`.
    pub fn parse_ini(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: no + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            values.insert(key, v.trim().to_string());
        }
        Ok(Config { values })
    }

    /// Parses a JSON object; nested objects become dotted keys and arrays
    /// comma-separated lists.
    pub fn parse_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        let mut values = BTreeMap::new();
        flatten("", &v, &mut values)?;
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        if text.trim_start().starts_with('{') {
            Self::parse_json(&text)
        } else {
            Self::parse_ini(&text)
        }
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| Error::config(key, format!("expected {what}, got {s:?}"))),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.parsed(key, "a number")
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.parsed(key, "a nonnegative integer")
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.parsed(key, "true or false")
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| Error::config(key, "missing"))
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        self.usize(key)?
            .ok_or_else(|| Error::config(key, "missing"))
    }

    /// A grid given as `a, b, c`, `geometric:lo:hi:points_per_decade`,
    /// `linear:lo:hi:n`, or `dyadic:k_lo:k_hi` (meaning `2^{-k}`).
    pub fn grid(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(s) = self.get(key) else {
            return Ok(None);
        };
        let bad = |m: String| Error::config(key, m);
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("{x:?} is not a number")))
        };
        let parts: Vec<&str> = s.split(':').collect();
        let g = match parts[0].trim() {
            "geometric" | "linear" if parts.len() == 4 => {
                let (lo, hi) = (num(parts[1])?, num(parts[2])?);
                let n = num(parts[3])?;
                let geometric = parts[0].trim() == "geometric";
                if geometric && !(lo > 0.0 && hi > lo && n >= 1.0) {
                    return Err(bad(
                        "geometric grid needs 0 < lo < hi and points >= 1".into()
                    ));
                }
                if !geometric && !(hi > lo && n >= 2.0) {
                    return Err(bad("linear grid needs lo < hi and n >= 2".into()));
                }
                if geometric {
                    grids::geometric(lo, hi, n as usize)
                } else {
                    grids::linear(lo, hi, n as usize)
                }
            }
            "dyadic" if parts.len() == 3 => {
                let (a, b) = (num(parts[1])?, num(parts[2])?);
                let mut g = grids::dyadic_t(a as i32, b as i32);
                g.sort_by(f64::total_cmp);
                g
            }
            _ => s.split(',').map(num).collect::<Result<Vec<f64>>>()?,
        };
        if g.is_empty() {
            return Err(bad("grid is empty".into()));
        }
        if g.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(bad("grid must be strictly increasing".into()));
        }
        Ok(Some(g))
    }

    pub fn interval(&self, key: &str) -> Result<Option<(f64, f64)>> {
        match self.grid(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some((v[0], v[1]))),
            Some(_) => Err(Error::config(key, "expected two endpoints a, b with a < b")),
        }
    }
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut BTreeMap<String, String>) -> Result<()> {
    use serde_json::Value;
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, out)?;
            }
        }
        Value::Array(a) => {
            let items: Vec<String> = a
                .iter()
                .map(|x| match x {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            out.insert(prefix.to_string(), items.join(","));
        }
        Value::String(s) => {
            out.insert(prefix.to_string(), s.clone());
        }
        Value::Null => {}
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    Power {
        kappa: f64,
    },
    Rozenbljum {
        theta: f64,
        kappa1: f64,
        kappa2: f64,
    },
    Exponential,
}

impl PotentialSpec {
    pub fn make(&self, dim: usize) -> Result<Potential> {
        match *self {
            PotentialSpec::Power { kappa } => make_power(dim, kappa),
            PotentialSpec::Rozenbljum {
                theta,
                kappa1,
                kappa2,
            } => make_rozenbljum(theta, kappa1, kappa2, dim),
            PotentialSpec::Exponential => Ok(make_exponential(dim)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumSource {
    /// Finite-difference spectra of the configured grid.
    Discretized,
    /// Closed-form `hbar (2k + 1)` (1D `x^2` only).
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauberianNu {
    /// `(4 pi)^{-n/2} sigma_V` with `mu` the spectrum measure.
    Weyl,
    /// Staircase measure with `mu = nu^alpha`.
    Staircase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub potential: PotentialSpec,
    pub dim: usize,
    /// `grid.L`, `grid.N`; required only by experiments that discretize.
    pub grid: Option<GridSpec>,
    pub eigen_k: Option<usize>,
    pub spectrum: SpectrumSource,
    pub hbar_list: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub lam_grid: Vec<f64>,
    pub interval: (f64, f64),
    pub beta: f64,
    pub r_exponent: f64,
    pub alpha: Option<f64>,
    pub levels: u32,
    pub heat_mode: HeatMode,
    pub t_probe: f64,
    pub tauberian_nu: TauberianNu,
    pub tolerance: Option<f64>,
    pub slope_target: Option<SlopeTarget>,
    pub mc: MonteCarloConfig,
    pub output_dir: PathBuf,
    /// Inadequate grids are errors rather than warnings.
    pub strict: bool,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "potential",
    "potential.kappa",
    "potential.theta",
    "potential.kappa1",
    "potential.kappa2",
    "grid.L",
    "grid.N",
    "grid.dim",
    "eigen.k",
    "spectrum",
    "hbar",
    "hbar_list",
    "t_grid",
    "lam_grid",
    "interval",
    "beta",
    "r_exponent",
    "alpha",
    "levels",
    "heat.mode",
    "heat.t",
    "t_probe",
    "tauberian.nu",
    "tolerance",
    "slope.expected",
    "slope.tolerance",
    "slope.sign",
    "mc.samples",
    "mc.seed",
    "output_dir",
    "strict",
];

impl RunConfig {
    pub fn from_config(experiment: Experiment, c: &Config) -> Result<Self> {
        if let Some(unknown) = c.keys().find(|k| !KNOWN_KEYS.contains(k)) {
            return Err(Error::config(unknown, "unknown key"));
        }
        if let Some(name) = c.get("experiment") {
            if name != experiment.name() {
                return Err(Error::config(
                    "experiment",
                    format!("config is for {name:?} but {experiment} was requested"),
                ));
            }
        }
        let default_potential = match experiment {
            Experiment::OscillationScan | Experiment::SigmaScan => "rozenbljum",
            _ => "power",
        };
        let potential = match c.get("potential").unwrap_or(default_potential) {
            "power" => PotentialSpec::Power {
                kappa: c.f64("potential.kappa")?.unwrap_or(2.0),
            },
            "rozenbljum" => PotentialSpec::Rozenbljum {
                theta: c.f64("potential.theta")?.unwrap_or(0.3),
                kappa1: c.f64("potential.kappa1")?.unwrap_or(0.5),
                kappa2: c.f64("potential.kappa2")?.unwrap_or(0.1),
            },
            "exponential" => PotentialSpec::Exponential,
            other => {
                return Err(Error::config(
                    "potential",
                    format!("unknown potential {other:?} (power, rozenbljum, exponential)"),
                ))
            }
        };
        let default_dim = if matches!(potential, PotentialSpec::Rozenbljum { .. }) {
            2
        } else {
            1
        };
        let dim = c.usize("grid.dim")?.unwrap_or(default_dim);
        if !(1..=2).contains(&dim) && c.get("grid.L").is_some() {
            return Err(Error::config(
                "grid.dim",
                format!("discretization supports dim 1 or 2 (got {dim})"),
            ));
        }
        let spectrum = match c.get("spectrum").unwrap_or("discretized") {
            "discretized" => SpectrumSource::Discretized,
            "exact" => {
                if potential != (PotentialSpec::Power { kappa: 2.0 }) || dim != 1 {
                    return Err(Error::config(
                        "spectrum",
                        "the exact model exists only for potential = power, kappa = 2, dim = 1",
                    ));
                }
                SpectrumSource::Exact
            }
            other => {
                return Err(Error::config(
                    "spectrum",
                    format!("expected discretized or exact, got {other:?}"),
                ))
            }
        };
        let tauberian_nu = match c.get("tauberian.nu").unwrap_or("staircase") {
            "staircase" => TauberianNu::Staircase,
            "weyl" => TauberianNu::Weyl,
            other => {
                return Err(Error::config(
                    "tauberian.nu",
                    format!("expected staircase or weyl, got {other:?}"),
                ))
            }
        };
        let needs_grid = spectrum == SpectrumSource::Discretized
            && match experiment {
                Experiment::WeylClassical
                | Experiment::WeylSemiclassical
                | Experiment::HeatTrace
                | Experiment::TauberianSemi => true,
                Experiment::Tauberian => tauberian_nu == TauberianNu::Weyl,
                _ => false,
            };
        let grid = if needs_grid {
            let l = c.require_f64("grid.L")?;
            let n = c.require_usize("grid.N")?;
            Some(GridSpec::new(dim, l, n).map_err(|e| match e {
                Error::GridTooCoarse { .. } => Error::config("grid.N", e.to_string()),
                Error::UnsupportedDimension(_) => Error::config("grid.dim", e.to_string()),
                other => Error::config("grid.L", other.to_string()),
            })?)
        } else {
            None
        };
        let semiclassical = matches!(
            experiment,
            Experiment::WeylSemiclassical | Experiment::TauberianSemi
        );
        let heat_mode = match c.get("heat.mode").unwrap_or("classical") {
            "classical" => HeatMode::Classical,
            "semiclassical" => HeatMode::Semiclassical {
                t: positive(c.f64("heat.t")?.unwrap_or(1.0), "heat.t")?,
            },
            other => {
                return Err(Error::config(
                    "heat.mode",
                    format!("expected classical or semiclassical, got {other:?}"),
                ))
            }
        };
        let hbar_list = match (c.grid("hbar_list")?, c.f64("hbar")?) {
            (Some(l), _) => l,
            (None, Some(h)) => vec![h],
            (None, None)
                if semiclassical || matches!(heat_mode, HeatMode::Semiclassical { .. }) =>
            {
                vec![0.05, 0.1, 0.2]
            }
            (None, None) => vec![1.0],
        };
        for &h in &hbar_list {
            positive(
                h,
                if c.get("hbar_list").is_some() {
                    "hbar_list"
                } else {
                    "hbar"
                },
            )?;
        }
        let t_grid = match c.grid("t_grid")? {
            Some(g) => g,
            None => match experiment {
                Experiment::NonregularDemo => grids::dyadic_t(8, 16).into_iter().rev().collect(),
                Experiment::Tauberian => grids::dyadic_t(4, 16).into_iter().rev().collect(),
                Experiment::TauberianSemi => vec![1.0, 2.0, 4.0],
                _ => vec![0.05, 0.1, 0.2],
            },
        };
        for &t in &t_grid {
            positive(t, "t_grid")?;
        }
        let lam_grid = match c.grid("lam_grid")? {
            Some(g) => g,
            None => match (experiment, tauberian_nu) {
                (Experiment::OscillationScan | Experiment::SigmaScan, _) => {
                    grids::geometric(1e2, 1e4, 4)
                }
                (Experiment::Tauberian, TauberianNu::Staircase) => {
                    (4..=20).map(|k| 2f64.powi(k)).collect()
                }
                _ => vec![20.0, 40.0, 60.0],
            },
        };
        let interval = c.interval("interval")?.unwrap_or((1.0, 2.0));
        let slope_target = match (c.get("slope.sign"), c.f64("slope.expected")?) {
            (Some("negative"), _) => Some(SlopeTarget::Negative),
            (Some(other), _) => {
                return Err(Error::config(
                    "slope.sign",
                    format!("only \"negative\" is supported, got {other:?}"),
                ))
            }
            (None, Some(slope)) => Some(SlopeTarget::Around {
                slope,
                tolerance: c.f64("slope.tolerance")?.unwrap_or(0.2),
            }),
            (None, None) => None,
        };
        let levels = c.usize("levels")?.unwrap_or(24);
        let mc = MonteCarloConfig::new(
            c.usize("mc.samples")?
                .unwrap_or(crate::mc::DEFAULT_SAMPLES)
                .max(1),
            c.parsed::<u64>("mc.seed", "an unsigned integer")?
                .unwrap_or(crate::mc::DEFAULT_SEED),
        );
        Ok(RunConfig {
            experiment,
            potential,
            dim,
            grid,
            eigen_k: c.usize("eigen.k")?,
            spectrum,
            hbar_list,
            t_grid,
            lam_grid,
            interval,
            beta: c.f64("beta")?.unwrap_or(0.25),
            r_exponent: c.f64("r_exponent")?.unwrap_or(0.5),
            alpha: c.f64("alpha")?,
            levels: u32::try_from(levels).map_err(|_| Error::config("levels", "too large"))?,
            heat_mode,
            t_probe: positive(c.f64("t_probe")?.unwrap_or(1.0), "t_probe")?,
            tauberian_nu,
            tolerance: c.f64("tolerance")?,
            slope_target,
            mc,
            output_dir: PathBuf::from(c.get("output_dir").unwrap_or(".")),
            strict: c.bool("strict")?.unwrap_or(false),
        })
    }

    fn potential(&self) -> Result<Potential> {
        self.potential
            .make(self.dim)
            .map_err(|e| Error::config("potential", e.to_string()))
    }
}

fn positive(x: f64, field: &str) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::config(field, format!("must be positive (got {x})")))
    }
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub reports: Vec<AsymptoticReport>,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.verdict.pass)
    }

    /// Process exit status: 0 pass, 2 verdict failure.
    pub fn exit_code(&self) -> i32 {
        if self.pass() {
            0
        } else {
            2
        }
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn put(&mut self, name: &str, content: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, content)?;
        self.files.push(path);
        Ok(())
    }

    fn report(&mut self, r: &AsymptoticReport) -> Result<()> {
        self.put(&format!("{}.csv", r.experiment_id), &r.to_csv())?;
        self.put(
            &format!("{}.verdict.json", r.experiment_id),
            &(r.verdict_json() + "\n"),
        )
    }

    fn measure(&mut self, name: &str, m: &StieltjesMeasure) -> Result<()> {
        self.put(name, &m.to_text())
    }

    fn spectrum(&mut self, name: &str, s: &Spectrum) -> Result<()> {
        let mut buf = Vec::new();
        s.write_csv(&mut buf)?;
        self.put(name, &String::from_utf8(buf).expect("ascii output"))
    }
}

/// `(2 pi hbar)^{-n} omega_n int (lam - V)_+^{n/2}`.
fn weyl_count(v: &Potential, hbar: f64, lam: f64) -> Result<f64> {
    let n = v.dim as i32;
    Ok(unit_ball_volume(v.dim) * v.weyl_integral(lam)? / (2.0 * PI * hbar).powi(n))
}

/// Spectra for every `hbar`, each resolving eigenvalues up to `lam_target`.
fn spectra(
    cfg: &RunConfig,
    v: &Potential,
    lam_target: f64,
    warnings: &mut Vec<String>,
) -> Result<Vec<Spectrum>> {
    if cfg.spectrum == SpectrumSource::Exact {
        return cfg
            .hbar_list
            .iter()
            .map(|&h| Spectrum::harmonic_1d(h, 1.5 * lam_target))
            .collect();
    }
    let grid = cfg.grid.ok_or_else(|| Error::config("grid.N", "missing"))?;
    let mut cells = Vec::with_capacity(cfg.hbar_list.len());
    for &hbar in &cfg.hbar_list {
        let h = build(v, grid, hbar)?;
        let adequacy = adequacy_check(&h, lam_target);
        if !adequacy.pass {
            let msg = format!(
                "grid inadequate for lambda = {lam_target} at hbar = {hbar}: boundary margin {:.4}, resolution margin {:.4}{}",
                adequacy.boundary_margin,
                adequacy.resolution_margin,
                adequacy
                    .suggested_half_width
                    .map(|l| format!(" (increase grid.L to >= {l:.4})"))
                    .unwrap_or_default()
            );
            if cfg.strict {
                let field = if adequacy.boundary_margin < 0.0 {
                    "grid.L"
                } else {
                    "grid.N"
                };
                return Err(Error::config(field, msg));
            }
            warnings.push(msg);
        }
        let k = match cfg.eigen_k {
            Some(k) => k,
            None => {
                let predicted = weyl_count(v, hbar, lam_target)?;
                ((1.25 * predicted).ceil() as usize + 10).min(h.matrix.dim() / 4)
            }
        };
        cells.push((h, k));
    }
    use rayon::prelude::*;
    cells.par_iter().map(|(h, k)| eigen_lowest(h, *k)).collect()
}

/// `(4 pi)^{-n/2} sigma_V` sampled far enough to carry the Laplace mass of `t_min`.
fn weyl_nu(v: &Potential, lam_max: f64, mc: &MonteCarloConfig) -> Result<StieltjesMeasure> {
    let lo = (v.infimum() + 1e-8).max(1e-8);
    let sigma = experiments::sigma_measure_for(v, lo, lam_max, mc)?;
    Ok(sigma.scaled((4.0 * PI).powf(-(v.dim as f64) / 2.0), "(4pi)^{-n/2} sigma"))
}

/// Runs one experiment and writes its artifacts into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    fs::create_dir_all(&cfg.output_dir)?;
    let mut out = Writer {
        dir: cfg.output_dir.clone(),
        files: Vec::new(),
    };
    let mut warnings = Vec::new();
    let mut reports = Vec::new();
    match cfg.experiment {
        Experiment::WeylClassical => {
            let v = cfg.potential()?;
            let lam_max = *cfg.lam_grid.last().unwrap();
            let s = spectra(cfg, &v, lam_max, &mut warnings)?.remove(0);
            let r = experiments::classical_weyl_report(
                &v,
                &s,
                &cfg.lam_grid,
                cfg.tolerance.unwrap_or(0.05),
                &cfg.mc,
            )?;
            out.spectrum("weyl-classical.spectrum.csv", &s)?;
            reports.push(r);
        }
        Experiment::WeylSemiclassical => {
            let v = cfg.potential()?;
            let ss = spectra(cfg, &v, cfg.interval.1, &mut warnings)?;
            let r = experiments::semiclassical_weyl_report(
                &v,
                cfg.interval,
                &ss,
                cfg.tolerance.unwrap_or(0.1),
                &cfg.mc,
            )?;
            for (i, s) in ss.iter().enumerate() {
                out.spectrum(&format!("weyl-semiclassical.spectrum-{i}.csv"), s)?;
            }
            reports.push(r);
        }
        Experiment::HeatTrace => {
            let v = cfg.potential()?;
            // tail e^{-t lam} below 1e-4 of the trace for the smallest t used
            let t_min = match cfg.heat_mode {
                HeatMode::Classical => cfg.t_grid[0],
                HeatMode::Semiclassical { t } => t,
            };
            let lam_target = v.infimum() + 10.0 / t_min;
            let ss = spectra(cfg, &v, lam_target, &mut warnings)?;
            let r = experiments::heat_trace_report(
                &v,
                &ss,
                &cfg.t_grid,
                cfg.heat_mode,
                cfg.tolerance.unwrap_or(1e-2),
                &cfg.mc,
            )?;
            reports.push(r);
        }
        Experiment::Tauberian => {
            let (mu, nu, alpha) = match cfg.tauberian_nu {
                TauberianNu::Staircase => {
                    let alpha = FractionalIndex::new(cfg.alpha.unwrap_or(0.5))
                        .map_err(|e| Error::config("alpha", e.to_string()))?;
                    let nu = staircase_nu(cfg.levels)
                        .map_err(|e| Error::config("levels", e.to_string()))?;
                    let mu =
                        nu.fractional_measure(alpha, 1e-3, 2f64.powi(cfg.levels as i32 + 4), 64)?;
                    (mu, nu, alpha)
                }
                TauberianNu::Weyl => {
                    let v = cfg.potential()?;
                    let alpha = FractionalIndex::weyl(v.dim);
                    let lam_max = *cfg.lam_grid.last().unwrap();
                    let s = spectra(cfg, &v, lam_max, &mut warnings)?.remove(0);
                    let nu = weyl_nu(&v, 60.0 / cfg.t_grid[0], &cfg.mc)?;
                    (s.spectrum_measure()?, nu, alpha)
                }
            };
            let pair = experiments::tauberian_classical(
                &mu,
                &nu,
                alpha,
                &cfg.t_grid,
                &cfg.lam_grid,
                cfg.tolerance.unwrap_or(0.02),
            )?;
            out.measure("tauberian.mu.measure", &mu)?;
            out.measure("tauberian.nu.measure", &nu)?;
            reports.push(pair.premise);
            reports.push(pair.conclusion);
        }
        Experiment::TauberianSemi => {
            let v = cfg.potential()?;
            let alpha = FractionalIndex::weyl(v.dim);
            let t_min = cfg.t_grid[0].min(cfg.t_probe);
            // the premise needs the spectrum wherever e^{-t lam} still counts
            let lam_target = cfg.interval.1.max(v.infimum() + 10.0 / t_min);
            let ss = spectra(cfg, &v, lam_target, &mut warnings)?;
            for s in &ss {
                if cfg.interval.1 > s.lambda_trust {
                    return Err(Error::UntrustedRange {
                        lam: cfg.interval.1,
                        trust: s.lambda_trust,
                    });
                }
                for &t in cfg.t_grid.iter().chain([&cfg.t_probe]) {
                    if !s.heat_trace_detail(t)?.certified {
                        return Err(Error::TailNotCertified { t, hbar: s.hbar });
                    }
                }
            }
            let family = ss
                .iter()
                .map(|s| Ok((s.hbar, s.spectrum_measure()?)))
                .collect::<Result<Vec<_>>>()?;
            let nu = weyl_nu(&v, (cfg.interval.1 * 4.0).max(60.0 / t_min), &cfg.mc)?;
            let r = experiments::tauberian_semiclassical(
                &family,
                &nu,
                alpha,
                cfg.t_probe,
                cfg.interval,
                cfg.tolerance.unwrap_or(0.1),
            )?;
            let mut report = r.report;
            for (h, p) in r.premise_at_probe {
                report = report.with_metric(&format!("premise_ratio_hbar_{h}"), p);
            }
            let (premise, restricted) = experiments::semiclassical_premise(
                &family,
                &nu,
                alpha,
                &cfg.t_grid,
                cfg.t_probe,
                cfg.tolerance.unwrap_or(0.1),
            )?;
            out.measure("tauberian-semi.nu.measure", &nu)?;
            reports.extend([report, premise, restricted]);
        }
        Experiment::OscillationScan => {
            let v = cfg.potential()?;
            let target = cfg.slope_target.unwrap_or(match cfg.potential {
                PotentialSpec::Rozenbljum { kappa1, kappa2, .. } => SlopeTarget::Around {
                    slope: kappa1 / kappa2 - 1.0,
                    tolerance: 0.3,
                },
                _ => SlopeTarget::Negative,
            });
            reports.push(experiments::oscillation_scan(
                &v,
                &cfg.lam_grid,
                cfg.r_exponent,
                cfg.beta,
                target,
                &cfg.mc,
            )?);
        }
        Experiment::SigmaScan => {
            let v = cfg.potential()?;
            let n = v.dim as f64;
            let target = cfg.slope_target.unwrap_or(match cfg.potential {
                PotentialSpec::Rozenbljum { theta, kappa2, .. } => SlopeTarget::Around {
                    slope: (1.0 - theta * (n - 1.0)) / kappa2,
                    tolerance: 0.2,
                },
                PotentialSpec::Power { kappa } => SlopeTarget::Around {
                    slope: n / kappa,
                    tolerance: 0.2,
                },
                PotentialSpec::Exponential => SlopeTarget::Around {
                    slope: 0.0,
                    tolerance: 0.2,
                },
            });
            let r = experiments::sigma_scan(&v, &cfg.lam_grid, target, &cfg.mc)?;
            let mut running = 0.0f64;
            let cdf: Vec<f64> = r
                .rows
                .iter()
                .map(|row| {
                    running = running.max(row.lhs);
                    running
                })
                .collect();
            let sigma = StieltjesMeasure::sampled_cdf(cfg.lam_grid.clone(), cdf, "sigma")?;
            out.measure("sigma-scan.sigma.measure", &sigma)?;
            reports.push(r);
        }
        Experiment::NonregularDemo => {
            let r = experiments::nonregular_demo(cfg.levels, &cfg.t_grid)?;
            out.measure("nonregular-demo.nu.measure", &staircase_nu(cfg.levels)?)?;
            reports.push(r);
        }
    }
    for r in &reports {
        out.report(r)?;
    }
    Ok(RunOutcome {
        reports,
        files: out.files,
        warnings,
    })
}
