//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so every line is printed on every run.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weyl_lab::discretization::{build, GridSpec};
use weyl_lab::experiments::{self, HeatMode, SlopeTarget};
use weyl_lab::grids;
use weyl_lab::mc::MonteCarloConfig;
use weyl_lab::potentials::{make_power, make_rozenbljum, Potential};
use weyl_lab::spectral::{eigen_lowest, Spectrum};
use weyl_lab::{staircase_nu, FractionalIndex, Result, StieltjesMeasure};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn spectrum(v: &Potential, l: f64, n: usize, hbar: f64, k: usize) -> Result<Spectrum> {
    let h = build(v, GridSpec::new(v.dim, l, n)?, hbar)?;
    eigen_lowest(&h, k)
}

fn oracle_spectrum() -> Result<Outcome> {
    let v = make_power(1, 2.0)?;
    let s = spectrum(&v, 15.0, 3000, 1.0, 50)?;
    let worst = (0..50)
        .map(|k| {
            let exact = (2 * k + 1) as f64;
            s.eigenvalues
                .get(k)
                .map_or(f64::INFINITY, |x| (x - exact).abs() / exact)
        })
        .fold(0.0, f64::max);
    let trusted = s.trusted().len();
    outcome(
        worst <= 1e-3 && trusted >= 50,
        format!("max relative error {worst:.2e} over 50 levels, {trusted} trusted"),
    )
}

fn classical_weyl() -> Result<Outcome> {
    let mc = MonteCarloConfig::default();
    let v1 = make_power(1, 2.0)?;
    let s1 = spectrum(&v1, 15.0, 3000, 1.0, 50)?;
    let r1 = experiments::classical_weyl_report(&v1, &s1, &[20.0, 40.0, 60.0], 0.05, &mc)?;
    let devs: Vec<f64> = r1.rows.iter().map(|r| (r.ratio - 1.0).abs()).collect();
    let at60 = r1.rows[2].ratio;
    let ok1 = (0.95..=1.05).contains(&at60) && devs.windows(2).all(|w| w[1] <= w[0] + 1e-12);

    let v2 = make_power(2, 2.0)?;
    let s2 = spectrum(&v2, 7.0, 244, 1.0, 136)?;
    let n30 = s2.counting(30.0)? as f64;
    let ratio2 = n30 / (30.0 * 30.0 / 8.0);
    let ok2 = (ratio2 - 1.0).abs() <= 0.10;
    outcome(
        ok1 && ok2,
        format!(
            "1D ratios {:?}; 2D N(30) = {n30}, ratio {ratio2:.4}",
            r1.rows.iter().map(|r| r.ratio).collect::<Vec<_>>()
        ),
    )
}

fn heat_trace() -> Result<Outcome> {
    let mc = MonteCarloConfig::default();
    let v = make_power(1, 2.0)?;
    let s = spectrum(&v, 20.0, 4000, 1.0, 100)?;
    let ts = [0.05, 0.1, 0.2];
    let r = experiments::heat_trace_report(&v, &[s], &ts, HeatMode::Classical, 1e-2, &mc)?;
    let mut worst = 0.0f64;
    for row in &r.rows {
        let t = row.parameter;
        worst = worst.max((row.ratio - t / t.sinh()).abs());
    }
    outcome(
        worst <= 1e-3,
        format!("max |ratio - t/sinh t| = {worst:.2e} at t in {ts:?}, tails certified"),
    )
}

fn semiclassical_weyl() -> Result<Outcome> {
    let mc = MonteCarloConfig::default();
    let v = make_power(1, 2.0)?;
    let exact = Spectrum::harmonic_1d(0.01, 4.0)?;
    let re = experiments::semiclassical_weyl_report(&v, (1.0, 2.0), &[exact], 0.1, &mc)?;
    let row = &re.rows[0];
    let ok_exact = row.lhs == 0.5 && (row.rhs - 0.5).abs() < 1e-6;

    let spectra = [0.2, 0.1, 0.05]
        .iter()
        .map(|&h| spectrum(&v, 2.5, 1000, h, 40))
        .collect::<Result<Vec<_>>>()?;
    let rd = experiments::semiclassical_weyl_report(&v, (1.0, 2.0), &spectra, 0.1, &mc)?;
    let at05 = rd.row_at(0.05).map_or(f64::NAN, |r| r.ratio);
    outcome(
        ok_exact && (at05 - 1.0).abs() <= 0.1,
        format!(
            "exact model lhs {} vs rhs {:.6}; discretized ratio {at05:.4} at hbar = 0.05",
            row.lhs, row.rhs
        ),
    )
}

/// `sup_{s >= s0} nu(2s)/nu(s)` for atoms, from both sides of every breakpoint.
fn exact_doubling(nu: &StieltjesMeasure, pts: &[(f64, f64)], s0: f64) -> f64 {
    let mut best = 0.0f64;
    let cands = pts.iter().flat_map(|&(p, _)| [p, p / 2.0]).chain([s0]);
    for b in cands {
        for s in [b, b * (1.0 - 1e-12)] {
            if s >= s0 {
                best = best.max(nu.cumulative(2.0 * s) / nu.cumulative(s));
            }
        }
    }
    best
}

fn engine_identities() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let alphas = [0.5, 1.0, 1.5];
    let (mut laplace_worst, mut doubling_violations) = (0.0f64, 0);
    let cases = 120;
    for case in 0..cases {
        let count = rng.random_range(1..=50);
        let pts: Vec<(f64, f64)> = (0..count)
            .map(|_| (rng.random_range(0.05..50.0), rng.random_range(0.01..5.0)))
            .collect();
        let nu = StieltjesMeasure::from_points(pts.iter().copied(), "random")?;
        let alpha = alphas[case % 3];
        let a = FractionalIndex::new(alpha)?;
        let lo = nu.support_min().unwrap();
        let nu_a = nu.fractional_measure(a, lo * 1e-3, nu.support_max() + 400.0, 200)?;
        for t in [0.1f64, 1.0, 10.0] {
            let rhs = t.powf(-alpha) * nu.laplace(t)?;
            laplace_worst = laplace_worst.max((nu_a.laplace(t)? - rhs).abs() / rhs);
        }
        let c_nu = exact_doubling(&nu, &pts, lo);
        let c_a = nu_a.doubling_estimate(2.0 * lo, 4.0 * nu.support_max(), 64)?;
        if c_a > c_nu * c_nu * 4f64.powf(alpha) * (1.0 + 1e-9) {
            doubling_violations += 1;
        }
    }

    let nu = staircase_nu(24)?;
    let half = FractionalIndex::new(0.5)?;
    let c = 2.0 * (2.0 * 2f64.sqrt());
    let mut bracket_violations = 0;
    for lam in grids::geometric(16.0, 2f64.powi(18), 40) {
        let base = nu.fractional_avg(half, lam)?;
        for i in 0..99 {
            let eps = i as f64 / 100.0;
            let ratio = nu.fractional_avg(half, (1.0 + eps) * lam)? / base;
            let upper = (1.0 + eps.sqrt()).sqrt() + c * eps.sqrt().sqrt() / (1.0 - eps).sqrt();
            if !(ratio >= 1.0 - 1e-12 && ratio <= upper) {
                bracket_violations += 1;
            }
        }
    }
    outcome(
        laplace_worst < 1e-4 && doubling_violations == 0 && bracket_violations == 0,
        format!(
            "{cases} random measures: Laplace identity worst {laplace_worst:.2e}, doubling violations {doubling_violations}; bracket violations {bracket_violations}"
        ),
    )
}

fn extended_tauberian() -> Result<Outcome> {
    let nu = staircase_nu(24)?;
    let alpha = FractionalIndex::new(0.5)?;
    let mu = nu.fractional_measure(alpha, 1e-3, 2f64.powi(28), 64)?;
    let t_grid: Vec<f64> = (4..=16).rev().map(|k| 2f64.powi(-k)).collect();
    let lam_grid: Vec<f64> = (4..=20).map(|k| 2f64.powi(k)).collect();
    let pair = experiments::tauberian_classical(&mu, &nu, alpha, &t_grid, &lam_grid, 0.02)?;
    let premise_dev = pair
        .premise
        .rows
        .iter()
        .map(|r| (r.ratio - 1.0).abs())
        .fold(0.0, f64::max);
    let conclusion = pair
        .conclusion
        .row_at(2f64.powi(20))
        .map_or(f64::NAN, |r| r.ratio);
    let demo = experiments::nonregular_demo(24, &grids::dyadic_t(8, 16))?;
    let spread = demo.verdict.metrics["ratio_spread"];
    outcome(
        premise_dev <= 1e-3 && (conclusion - 1.0).abs() <= 0.02 && spread > 0.1,
        format!(
            "premise max |ratio - 1| {premise_dev:.2e}; conclusion ratio {conclusion:.6} at 2^20; dyadic ratio spread {spread:.4} (needs > 0.1)"
        ),
    )
}

fn sigma_identities() -> Result<Outcome> {
    let mc = MonteCarloConfig::default();
    let t_grid = [0.05, 0.1, 0.2, 0.5, 1.0];
    let lam_grid = [2.0, 5.0, 10.0, 20.0, 40.0];
    let mut worst = 0.0f64;
    for v in [
        make_power(1, 2.0)?,
        make_power(1, 1.0)?,
        make_power(2, 2.0)?,
    ] {
        let sigma = experiments::sigma_measure_for(&v, 1e-6, 60.0 / t_grid[0], &mc)?;
        let a = experiments::laplace_identity_report(&v, &sigma, &t_grid, 0.02, &mc)?;
        let b = experiments::weyl_identity_report(&v, &sigma, &lam_grid, 0.02, &mc)?;
        for r in a.rows.iter().chain(&b.rows) {
            worst = worst.max((r.ratio - 1.0).abs());
        }
    }
    let v = make_power(1, 2.0)?;
    let sigma = experiments::sigma_measure_for(&v, 1e-6, 100.0, &mc)?;
    let phase = experiments::phase_space_from_sigma(&sigma, 1, (1.0, 2.0))?;
    let phase_err = (phase - PI).abs() / PI;
    outcome(
        worst <= 0.02 && phase_err <= 0.02,
        format!("identity rows worst |ratio - 1| {worst:.2e}; phase-space volume {phase:.6} vs pi ({phase_err:.2e})"),
    )
}

fn sharpness() -> Result<Outcome> {
    let mc = MonteCarloConfig::default();
    let v = make_rozenbljum(0.3, 0.5, 0.1, 2)?;
    let lams = grids::geometric(1e2, 1e4, 4);
    let s = experiments::sigma_scan(
        &v,
        &lams,
        SlopeTarget::Around {
            slope: 7.0,
            tolerance: 0.2,
        },
        &mc,
    )?;
    let o = experiments::oscillation_scan(
        &v,
        &lams,
        0.5,
        0.25,
        SlopeTarget::Around {
            slope: 4.0,
            tolerance: 0.3,
        },
        &mc,
    )?;
    let doubling = s.verdict.metrics["doubling_constant"];
    let contrast = experiments::oscillation_scan(
        &make_power(2, 2.0)?,
        &lams,
        0.5,
        0.25,
        SlopeTarget::Negative,
        &mc,
    )?;
    outcome(
        s.verdict.pass && o.verdict.pass && doubling.is_finite() && contrast.verdict.pass,
        format!(
            "sigma slope {:.4}, oscillation slope {:.4}, doubling {doubling:.2}, |x|^2 oscillation slope {:.4}",
            s.verdict.drift_slope, o.verdict.drift_slope, contrast.verdict.drift_slope
        ),
    )
}

/// The `weyl-lab` binary: known directly when built inside its own package,
/// otherwise next to this test's `deps` directory.
fn binary() -> PathBuf {
    if let Some(p) = option_env!("CARGO_BIN_EXE_weyl-lab") {
        return PathBuf::from(p);
    }
    let exe = std::env::current_exe().expect("test executable path");
    let dir = exe
        .parent()
        .and_then(Path::parent)
        .expect("target directory");
    dir.join(format!("weyl-lab{}", std::env::consts::EXE_SUFFIX))
}

fn run_cli(
    dir: &Path,
    config: &Path,
    experiment: &str,
) -> std::io::Result<(i32, Vec<u8>, Vec<u8>)> {
    let status = Command::new(binary())
        .args([experiment, "--config"])
        .arg(config)
        .arg("--output-dir")
        .arg(dir)
        .output()?
        .status;
    let verdict = std::fs::read(dir.join(format!("{experiment}.verdict.json")))?;
    let csv = std::fs::read(dir.join(format!("{experiment}.csv")))?;
    Ok((status.code().unwrap_or(-1), verdict, csv))
}

fn determinism() -> Result<Outcome> {
    let io = |e: std::io::Error| weyl_lab::Error::Io(e.to_string());
    let root = tempfile::tempdir().map_err(io)?;
    let config = root.path().join("scan.cfg");
    std::fs::write(
        &config,
        "potential = rozenbljum\ngrid.dim = 2\nlam_grid = geometric:100:10000:4\nmc.samples = 20000\nmc.seed = 42\n",
    )
    .map_err(io)?;
    let mut same = true;
    let mut codes = Vec::new();
    for experiment in ["oscillation-scan", "sigma-scan", "nonregular-demo"] {
        let a = run_cli(&root.path().join("a").join(experiment), &config, experiment);
        let b = run_cli(&root.path().join("b").join(experiment), &config, experiment);
        let (a, b) = (a.map_err(io)?, b.map_err(io)?);
        same &= a == b;
        codes.push(a.0);
    }
    outcome(
        same,
        format!("verdict JSON and CSV byte-identical across two runs; exit codes {codes:?}"),
    )
}

type Check = fn() -> Result<Outcome>;

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("1 oracle spectrum", oracle_spectrum),
        ("2 classical Weyl law", classical_weyl),
        ("3 heat trace", heat_trace),
        ("4 semiclassical Weyl law", semiclassical_weyl),
        ("5 Tauberian engine identities", engine_identities),
        ("6 Tauberian beyond regular variation", extended_tauberian),
        ("7 sublevel-volume identities", sigma_identities),
        ("8 sharpness counterexample", sharpness),
        ("9 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(o) => {
                if !o.pass {
                    failed += 1;
                }
                println!(
                    "{} criterion {name}: {} [{secs:.1}s]",
                    if o.pass { "PASS" } else { "FAIL" },
                    o.detail
                );
            }
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {name}: error {e} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
