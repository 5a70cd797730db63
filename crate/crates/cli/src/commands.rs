use std::time::Instant;

use gigwalk::gig::{gig_log_moment_asymptotic, gig_log_moment_numeric, GigParams};
use gigwalk::grid::LogGrid;
use gigwalk::kernels::{
    characterization_discrepancy, check_intertwining, check_stationarity, detailed_balance_log_ratio, ResidualRecord,
};
use gigwalk::rng::{derive_seed, stream};
use gigwalk::stats::{dufresne_test, n_part_convergence_curve, TestReport, DEFAULT_TAIL_TOL};
use gigwalk::walk::{n_parts, reconstruct_x_finite, reconstruct_x_limit, simulate_path, WalkConfig, WalkPath};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::to_record;

/// Parameters shared by every subcommand, after defaults were applied.
#[derive(Debug, Clone)]
pub struct Settings {
    pub lambda: f64,
    pub a: f64,
    pub delta: f64,
    pub steps: Option<usize>,
    pub samples: Option<usize>,
    pub grid_points: usize,
    pub seed: u64,
    pub tol: Option<f64>,
    pub timing: bool,
}

/// Reason a run stopped before producing a report.
#[derive(Debug)]
pub struct UsageError(pub String);

impl From<gigwalk::Error> for UsageError {
    fn from(e: gigwalk::Error) -> Self {
        UsageError(e.to_string())
    }
}

/// Records produced so far and whether every check passed.
pub struct Report {
    pub records: Vec<Value>,
    pub pass: bool,
    timing: bool,
}

impl Report {
    fn new(timing: bool) -> Self {
        Self {
            records: Vec::new(),
            pass: true,
            timing,
        }
    }

    /// Runs one check. Numerical failures become a failing record; input
    /// errors abort the run.
    fn check<T: Serialize>(
        &mut self,
        name: &str,
        run: impl FnOnce() -> gigwalk::Result<(T, bool)>,
    ) -> Result<(), UsageError> {
        let started = Instant::now();
        let result = run();
        let ms = self.timing.then(|| started.elapsed().as_millis() as u64);
        match result {
            Ok((record, pass)) => {
                self.pass &= pass;
                self.records.push(to_record(&record, ms));
            }
            Err(e) if e.is_input_error() => return Err(e.into()),
            Err(e) => {
                self.pass = false;
                let record = json!({
                    "schema_version": gigwalk::SCHEMA_VERSION,
                    "test": name,
                    "pass": false,
                    "error": e.to_string(),
                });
                self.records.push(to_record(&record, ms));
            }
        }
        Ok(())
    }
}

fn report(test: &str, s: &Settings, extra: &[(&str, f64)], statistic: f64, threshold: f64, pass: bool) -> TestReport {
    let mut params = vec![("lambda", s.lambda), ("a", s.a)];
    params.extend_from_slice(extra);
    TestReport::new(test, &params, s.seed, statistic, threshold, pass)
}

fn grid(s: &Settings) -> gigwalk::Result<LogGrid> {
    LogGrid::new(LogGrid::DEFAULT_MIN, LogGrid::DEFAULT_MAX, s.grid_points)
}

/// The stationary law has a polynomial tail of order `λ`, so small shapes
/// need a longer grid.
fn stationarity_grid(s: &Settings) -> gigwalk::Result<LogGrid> {
    if s.lambda < 1.0 {
        LogGrid::new(LogGrid::DEFAULT_MIN, 1e16, s.grid_points.max(8000))
    } else {
        grid(s)
    }
}

fn require_positive_lambda(s: &Settings, command: &str) -> Result<(), UsageError> {
    if s.lambda > 0.0 {
        Ok(())
    } else {
        Err(UsageError(format!("{command} needs --lambda > 0, got {}", s.lambda)))
    }
}

const INTERTWINING_SOURCES: [f64; 3] = [0.2, 1.0, 5.0];

#[derive(Serialize)]
struct PathRow {
    schema_version: u32,
    k: usize,
    gamma: f64,
    x: f64,
    z: f64,
    n_na: f64,
    n_an: f64,
}

fn path_rows(path: &WalkPath) -> gigwalk::Result<Vec<Value>> {
    (1..=path.len())
        .map(|k| {
            let parts = n_parts(path, k)?;
            let row = PathRow {
                schema_version: gigwalk::SCHEMA_VERSION,
                k,
                gamma: path.gammas()[k - 1],
                x: path.x(k)?,
                z: path.z(k)?,
                n_na: parts.n_na,
                n_an: parts.n_an,
            };
            Ok(serde_json::to_value(row).expect("rows serialize"))
        })
        .collect()
}

pub fn simulate(s: &Settings) -> Result<Report, UsageError> {
    let config = WalkConfig::new(
        GigParams::symmetric(s.lambda, s.a)?,
        s.delta,
        s.steps.unwrap_or(100),
        s.seed,
    )?;
    let path = simulate_path(&config, &mut config.stream());
    Ok(Report {
        records: path_rows(&path)?,
        pass: true,
        timing: s.timing,
    })
}

fn intertwining_checks(s: &Settings, out: &mut Report) -> Result<(), UsageError> {
    let grid = grid(s)?;
    let tol = s.tol.unwrap_or(1e-6);
    for z in INTERTWINING_SOURCES {
        out.check("intertwining", || {
            let r = check_intertwining(s.lambda, s.a, z, &grid)?;
            Ok((report("intertwining", s, &[("z", z)], r, tol, r < tol), r < tol))
        })?;
    }
    Ok(())
}

fn dufresne_check(s: &Settings, seed: u64, out: &mut Report) -> Result<(), UsageError> {
    let samples = s.samples.unwrap_or(100_000);
    let tail_tol = s.tol.unwrap_or(DEFAULT_TAIL_TOL);
    out.check("dufresne", || {
        let ks = dufresne_test(s.lambda, s.a, samples, seed, tail_tol)?;
        let params = [
            ("lambda", s.lambda),
            ("a", s.a),
            ("samples", samples as f64),
            ("tail_tol", tail_tol),
        ];
        Ok((TestReport::from_ks("dufresne", &params, seed, &ks), ks.pass))
    })
}

fn finite_reconstruction_check(
    s: &Settings,
    paths: usize,
    max_n: usize,
    seed: u64,
    out: &mut Report,
) -> Result<(), UsageError> {
    let threshold = 1e-10;
    let gig = GigParams::symmetric(s.lambda, s.a)?;
    out.check("reconstruction_finite", || {
        let mut rng = stream(seed, 0);
        let mut worst = 0.0f64;
        for i in 0..paths as u64 {
            let n = rng.random_range(1..=max_n);
            let p = rng.random_range(0..=max_n);
            let config = WalkConfig::new(gig, s.delta, n + p, derive_seed(seed, i + 1))?;
            let path = simulate_path(&config, &mut config.stream());
            let zs = path.zs();
            let x = reconstruct_x_finite(&zs[n - 1..n + p], n_parts(&path, n + p)?.n_na, s.delta)?;
            let truth = path.x(n)?;
            worst = worst.max((x - truth).abs() / truth);
        }
        let extra = [("delta", s.delta), ("paths", paths as f64), ("max_n", max_n as f64)];
        Ok((
            report("reconstruction_finite", s, &extra, worst, threshold, worst < threshold),
            worst < threshold,
        ))
    })
}

pub fn verify(s: &Settings) -> Result<Report, UsageError> {
    let mut out = Report::new(s.timing);
    intertwining_checks(s, &mut out)?;

    let threshold = 1e-12;
    out.check("detailed_balance", || {
        let mut rng = stream(derive_seed(s.seed, 1), 0);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let x = (rng.random::<f64>() * 6.0 - 3.0).exp();
            let y = (rng.random::<f64>() * 6.0 - 3.0).exp();
            worst = worst.max(detailed_balance_log_ratio(s.lambda, s.a, x, y)?.exp_m1().abs());
        }
        Ok((
            report(
                "detailed_balance",
                s,
                &[("pairs", 100.0)],
                worst,
                threshold,
                worst < threshold,
            ),
            worst < threshold,
        ))
    })?;

    if s.lambda > 0.0 {
        let tol = s.tol.unwrap_or(1e-7);
        out.check("stationarity", || {
            let r = check_stationarity(s.lambda, s.a, &stationarity_grid(s)?)?;
            Ok((report("stationarity", s, &[], r, tol, r < tol), r < tol))
        })?;
        let seed = derive_seed(s.seed, 2);
        let samples = s.samples.unwrap_or(100_000);
        out.check("dufresne", || {
            let ks = dufresne_test(s.lambda, s.a, samples, seed, DEFAULT_TAIL_TOL)?;
            let params = [
                ("lambda", s.lambda),
                ("a", s.a),
                ("samples", samples as f64),
                ("tail_tol", DEFAULT_TAIL_TOL),
            ];
            Ok((TestReport::from_ks("dufresne", &params, seed, &ks), ks.pass))
        })?;
    }
    finite_reconstruction_check(s, 1000, s.steps.unwrap_or(50), derive_seed(s.seed, 3), &mut out)?;
    Ok(out)
}

pub fn dufresne(s: &Settings) -> Result<Report, UsageError> {
    require_positive_lambda(s, "dufresne")?;
    let mut out = Report::new(s.timing);
    dufresne_check(s, s.seed, &mut out)?;
    Ok(out)
}

pub fn intertwine(s: &Settings) -> Result<Report, UsageError> {
    let grid = grid(s)?;
    let tol = s.tol.unwrap_or(1e-6);
    let mut out = Report::new(s.timing);
    for z in INTERTWINING_SOURCES {
        out.check("intertwining", || {
            let r = check_intertwining(s.lambda, s.a, z, &grid)?;
            let record = ResidualRecord::new("intertwining", s.lambda, s.a, Some(z), r, &grid, tol);
            let pass = record.pass;
            Ok((record, pass))
        })?;
    }
    Ok(out)
}

/// Name, increment density, and whether it is the GIG law.
type Law<'f> = (&'static str, &'f dyn Fn(f64) -> f64, bool);

/// `(z, u)` pairs at which the conditional laws are compared.
const CHARACTERIZATION_POINTS: [(f64, f64); 3] = [(1.5, 2.0), (0.5, 1.0), (3.0, 0.7)];
/// Controls must stay at least this far from the GIG identity.
const CONTROL_SEPARATION: f64 = 1e-3;

pub fn characterize(s: &Settings) -> Result<Report, UsageError> {
    let grid = grid(s)?;
    let tol = s.tol.unwrap_or(1e-7);
    let params = GigParams::symmetric(s.lambda, s.a)?;
    let gig = move |x: f64| params.pdf(x).unwrap_or(0.0);
    let log_normal = |x: f64| {
        let t = x.ln() / 0.5;
        (-0.5 * t * t).exp() / (x * 0.5 * (2.0 * std::f64::consts::PI).sqrt())
    };
    let gamma = |x: f64| x * (-x).exp();
    let laws: [Law; 3] = [
        ("characterization_gig", &gig, true),
        ("characterization_control_lognormal", &log_normal, false),
        ("characterization_control_gamma", &gamma, false),
    ];
    let mut out = Report::new(s.timing);
    for (name, f, is_gig) in laws {
        for (z, u) in CHARACTERIZATION_POINTS {
            out.check(name, || {
                let d = characterization_discrepancy(f, z, u, &grid)?;
                let (threshold, pass) = if is_gig {
                    (tol, d < tol)
                } else {
                    (CONTROL_SEPARATION, d > CONTROL_SEPARATION)
                };
                Ok((report(name, s, &[("z", z), ("u", u)], d, threshold, pass), pass))
            })?;
        }
    }
    Ok(out)
}

pub fn converge(s: &Settings) -> Result<Report, UsageError> {
    require_positive_lambda(s, "converge")?;
    let last = s.steps.unwrap_or(200);
    let mut ns: Vec<usize> = [10, 50].into_iter().filter(|&n| n < last).collect();
    ns.push(last);
    let samples = s.samples.unwrap_or(100_000);
    let tail_tol = s.tol.unwrap_or(DEFAULT_TAIL_TOL);
    let started = Instant::now();
    let curve = n_part_convergence_curve(s.lambda, s.a, &ns, samples, s.seed, tail_tol);
    let ms = s.timing.then(|| started.elapsed().as_millis() as u64);
    let mut out = Report::new(s.timing);
    match curve {
        Ok(curve) => {
            for (n, ks) in ns.iter().zip(&curve) {
                let params = [
                    ("lambda", s.lambda),
                    ("a", s.a),
                    ("n", *n as f64),
                    ("samples", samples as f64),
                    ("tail_tol", tail_tol),
                ];
                out.records.push(to_record(
                    &TestReport::from_ks("n_part_convergence", &params, s.seed, ks),
                    ms,
                ));
            }
            out.pass = curve.last().is_some_and(|k| k.pass);
        }
        Err(e) if e.is_input_error() => return Err(e.into()),
        Err(e) => {
            out.check::<()>("n_part_convergence", || Err(e))?;
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct MomentRow {
    schema_version: u32,
    m: u32,
    lambda: f64,
    a: f64,
    numeric: f64,
    asymptotic: f64,
    ratio: f64,
    threshold: f64,
    pass: bool,
}

pub fn moments(s: &Settings) -> Result<Report, UsageError> {
    let params = GigParams::symmetric(s.lambda, s.a)?;
    let tol = s.tol.unwrap_or(0.02);
    let mut out = Report::new(s.timing);
    for m in 1..=4 {
        out.check("log_moment", || {
            let numeric = gig_log_moment_numeric(&params, m)?;
            let asymptotic = gig_log_moment_asymptotic(s.lambda, s.a, m)?;
            let ratio = numeric / asymptotic;
            let pass = (ratio - 1.0).abs() < tol;
            let row = MomentRow {
                schema_version: gigwalk::SCHEMA_VERSION,
                m,
                lambda: s.lambda,
                a: s.a,
                numeric,
                asymptotic,
                ratio,
                threshold: tol,
                pass,
            };
            Ok((row, pass))
        })?;
    }
    Ok(out)
}

/// Length of the path used for the limit form of the reconstruction.
const LIMIT_PATH_STEPS: usize = 10_000;

pub fn reconstruct(s: &Settings) -> Result<Report, UsageError> {
    let mut out = Report::new(s.timing);
    let paths = s.samples.unwrap_or(1000);
    finite_reconstruction_check(s, paths, s.steps.unwrap_or(50), s.seed, &mut out)?;
    if s.lambda != 0.0 {
        let tol = s.tol.unwrap_or(1e-6);
        let config = WalkConfig::new(
            GigParams::symmetric(s.lambda, s.a)?,
            s.delta,
            LIMIT_PATH_STEPS,
            derive_seed(s.seed, 1),
        )?;
        out.check("reconstruction_limit", || {
            let path = simulate_path(&config, &mut config.stream());
            let n_inf = if s.lambda > 0.0 {
                Some(n_parts(&path, path.len())?.n_na)
            } else {
                None
            };
            let mut worst = 0.0f64;
            for n in [1usize, 5, 20] {
                let lx = reconstruct_x_limit(&path.log_zs()[n - 1..], s.delta, n_inf, s.lambda, tol)?;
                worst = worst.max((lx - path.log_xs()[n - 1]).exp_m1().abs());
            }
            let extra = [("delta", s.delta), ("steps", LIMIT_PATH_STEPS as f64)];
            Ok((
                report("reconstruction_limit", s, &extra, worst, tol, worst < tol),
                worst < tol,
            ))
        })?;
    }
    Ok(out)
}
