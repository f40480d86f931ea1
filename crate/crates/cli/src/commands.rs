//! Subcommand implementations.

use std::sync::Arc;
use std::time::Instant;

use serde_json::json;

use grassmann_holonomy::dynamics::{
    berry_maps, horizontal_transport, integrate_projector, loop_holonomy, pancharatnam_oracle, phase_distance,
    synthesize_holonomy_step, HamiltonianSchedule, HolonomyResult, LatitudeLoop, ProjectorCurve, ProjectorPath,
    SmoothLoop, TimeGrid, SYNTHESIS_CONSTANT,
};
use grassmann_holonomy::grassmann::{self, chart_from_proj, proj_from_chart};
use grassmann_holonomy::linalg::{self, prng, Prng};
use grassmann_holonomy::selftest::{self, CheckRow};
use grassmann_holonomy::{BasePoint, ChartTangent, ComplexMatrix, Frame, Projector, Tolerances, C64};

use crate::config::{matrix_from_rows, ExperimentConfig, ScheduleConfig};
use crate::error::CliError;
use crate::report::{self, gauge, node_rows, to_csv, DefectMax, RunReport};

pub const ROUND_TRIP_BOUND: f64 = 1e-10;
pub const EQUIVARIANCE_BOUND: f64 = 1e-9;
pub const RETRACTION_BOUND: f64 = 1e-9;
pub const HORIZONTALITY_BOUND: f64 = 1e-6;

/// Everything a subcommand needs besides the config.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: ExperimentConfig,
    pub tol: Tolerances,
    pub timing: bool,
}

/// What a subcommand produced. Files are written and the JSON printed before
/// `failure` turns into the exit code.
#[derive(Debug)]
pub struct Outcome {
    /// Printed to stdout and written to `<prefix>.json`.
    pub json: Option<String>,
    /// Printed to stdout and written to `<prefix>.txt`.
    pub text: Option<String>,
    /// Written to `<prefix>.csv`.
    pub csv: Option<String>,
    /// `(suffix, contents)`, written to `<prefix><suffix>`.
    pub extra_files: Vec<(String, String)>,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn report(report: &RunReport, csv: Option<String>, failure: Option<CliError>) -> Result<Self, CliError> {
        Ok(Self {
            json: Some(report.to_json()?),
            text: None,
            csv,
            extra_files: Vec::new(),
            failure,
        })
    }
}

struct Setup {
    schedule: HamiltonianSchedule,
    sigma: Frame,
    p0: Projector,
    grid: TimeGrid,
    latitude: Option<LatitudeLoop>,
    curve: Option<Arc<dyn ProjectorCurve>>,
}

fn random_generator(rng: &mut Prng, n: usize, norm: f64) -> ComplexMatrix {
    linalg::with_norm(&linalg::random_antihermitian_with(rng, n), norm)
}

fn checked_square(rows: &crate::config::MatrixRows, n: usize, what: &str) -> Result<ComplexMatrix, CliError> {
    let m = matrix_from_rows(rows)?;
    if m.shape() != (n, n) {
        return Err(CliError::Usage(format!("{what} must be {n}x{n}, got {:?}", m.shape())));
    }
    Ok(m)
}

fn curve_start(c: &dyn ProjectorCurve, grid: &TimeGrid, tol: &Tolerances) -> Result<Projector, CliError> {
    let t0 = grid.t0();
    Projector::new(c.point(t0, t0), c.rank(), tol).map_err(CliError::setup)
}

fn setup(cfg: &ExperimentConfig, tol: &Tolerances, rng: &mut Prng) -> Result<Setup, CliError> {
    let (n, m) = (cfg.n, cfg.m);
    let mut latitude = None;
    let mut curve: Option<Arc<dyn ProjectorCurve>> = None;
    let mut default_t1 = cfg.grid.t0 + 1.0;
    let schedule = match &cfg.schedule {
        ScheduleConfig::Zero => HamiltonianSchedule::zero(n),
        ScheduleConfig::Constant { generator, norm } => match (generator, norm) {
            (Some(g), None) => HamiltonianSchedule::constant(checked_square(g, n, "generator")?, tol)
                .map_err(CliError::setup)?,
            (None, norm) => HamiltonianSchedule::Constant(random_generator(rng, n, norm.unwrap_or(1.0))),
            (Some(_), Some(_)) => {
                return Err(CliError::Usage("constant schedule takes either generator or norm".into()))
            }
        },
        ScheduleConfig::Rotating {
            theta,
            omega,
            base,
            generator,
        } => match (theta, omega, base, generator) {
            (theta, omega, None, None) => {
                if n != m + 1 {
                    return Err(CliError::Usage(format!(
                        "the latitude schedule needs n = m + 1, got n = {n}, m = {m}"
                    )));
                }
                let l = LatitudeLoop::new(theta.unwrap_or(std::f64::consts::FRAC_PI_2), omega.unwrap_or(1.0), m)
                    .map_err(CliError::setup)?;
                default_t1 = cfg.grid.t0 + l.period();
                let s = l.schedule();
                latitude = Some(l);
                s
            }
            (None, None, Some(b), Some(k)) => HamiltonianSchedule::rotating(
                checked_square(b, n, "base")?,
                checked_square(k, n, "generator")?,
                tol,
            )
            .map_err(CliError::setup)?,
            _ => {
                return Err(CliError::Usage(
                    "rotating schedule takes either theta/omega or base/generator".into(),
                ))
            }
        },
        ScheduleConfig::Sampled { knots, values } => {
            let values = values
                .iter()
                .map(|v| checked_square(v, n, "sampled value"))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(last) = knots.last() {
                default_t1 = *last;
            }
            HamiltonianSchedule::sampled(knots.clone(), values, tol).map_err(CliError::setup)?
        }
        ScheduleConfig::Geometric { period } => {
            if !(period.is_finite() && *period > 0.0) {
                return Err(CliError::Usage(format!("period must be positive, got {period}")));
            }
            let c: Arc<dyn ProjectorCurve> = Arc::new(SmoothLoop::random(rng, n, m, *period));
            default_t1 = c.span().1;
            curve = Some(c.clone());
            HamiltonianSchedule::geometric(c)
        }
    };
    let t1 = cfg.grid.t1.unwrap_or(default_t1);
    let grid = TimeGrid::new(cfg.grid.t0, t1, cfg.grid.steps).map_err(CliError::setup)?;
    let sigma = match (&cfg.frame, &latitude, &curve) {
        (Some(rows), _, _) => {
            let f = matrix_from_rows(rows)?;
            if f.shape() != (n, m) {
                return Err(CliError::Usage(format!("frame must be {n}x{m}, got {:?}", f.shape())));
            }
            Frame::new(f, tol).map_err(CliError::setup)?
        }
        (None, Some(l), _) => l.frame(),
        (None, None, Some(c)) => BasePoint::from_projector(&curve_start(c.as_ref(), &grid, tol)?)
            .frame()
            .clone(),
        (None, None, None) => linalg::random_frame_with(rng, n, m),
    };
    let p0 = match &curve {
        Some(c) => curve_start(c.as_ref(), &grid, tol)?,
        None => sigma.projector(),
    };
    Ok(Setup {
        schedule,
        sigma,
        p0,
        grid,
        latitude,
        curve,
    })
}

fn elapsed(ctx: &Context, start: Instant) -> f64 {
    if ctx.timing {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    }
}

fn retraction_bound(tol: &Tolerances) -> f64 {
    RETRACTION_BOUND.max(tol.ode)
}

fn check_defects(d: &DefectMax, tol: &Tolerances) -> Option<CliError> {
    let bound = retraction_bound(tol);
    let mut bad = Vec::new();
    if d.projector > bound {
        bad.push(format!("projector defect {:e} > {bound:e}", d.projector));
    }
    if d.isometry > bound {
        bad.push(format!("isometry defect {:e} > {bound:e}", d.isometry));
    }
    if d.horizontality > HORIZONTALITY_BOUND {
        bad.push(format!("horizontality defect {:e} > {HORIZONTALITY_BOUND:e}", d.horizontality));
    }
    (!bad.is_empty()).then(|| CliError::Invariant(bad.join("; ")))
}

fn fill_from_result(report: &mut RunReport, r: &HolonomyResult, m: usize) {
    report.holonomy_dynamical = Some(gauge(&r.dynamical));
    report.holonomy_geometric = Some(gauge(&r.geometric));
    report.fiber_gap = Some(gauge(&r.fiber_gap));
    report.closure_residual = Some(r.closure_residual);
    if m == 1 && r.closed {
        report.berry_phase_arg = Some(r.berry_phase());
    }
    report.defect_max = DefectMax {
        projector: r.max_projector_defect,
        isometry: r.max_isometry_defect,
        horizontality: r.max_horizontality_defect,
    };
    report.put("fiber_gap_deviation", r.fiber_gap.distance_from_identity());
    report.put("tracking_error", r.frame_path.tracking_error(&r.projector_path));
}

pub fn chart(ctx: &Context) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let (n, m) = (ctx.cfg.n, ctx.cfg.m);
    let mut rng = prng(ctx.cfg.seed);
    let (mut round_trip, mut equivariance, mut defect) = (0.0f64, 0.0f64, 0.0f64);
    let cases = ctx.cfg.cases;
    for i in 0..cases {
        let base = BasePoint::from_frame(&linalg::random_frame_with(&mut rng, n, m));
        let norm = 10.0 * (i + 1) as f64 / cases as f64;
        let block = linalg::with_norm(&linalg::random_gaussian(&mut rng, n - m, m), norm);
        let f = ChartTangent::new(base.clone(), block.clone()).map_err(CliError::setup)?;
        let q = proj_from_chart(&f);
        defect = defect.max(q.defect());
        let back = chart_from_proj(&base, &q, &ctx.tol)?;
        round_trip = round_trip.max((back.block() - &block).norm());
        let u = linalg::random_unitary_with(&mut rng, n);
        let moved = grassmann::chart_transport(&u, &f, &ctx.tol)?;
        equivariance = equivariance.max(proj_from_chart(&moved).distance(&q.conjugate(&u)));
    }
    let mut report = RunReport::new(ctx.cfg.clone());
    report.defect_max.projector = defect;
    report.put(
        "chart",
        json!({
            "cases": cases,
            "round_trip_max": round_trip,
            "round_trip_bound": ROUND_TRIP_BOUND,
            "equivariance_max": equivariance,
            "equivariance_bound": EQUIVARIANCE_BOUND,
        }),
    );
    report.wall_time_s = elapsed(ctx, start);
    let failure = if round_trip > ROUND_TRIP_BOUND || equivariance > EQUIVARIANCE_BOUND {
        Some(CliError::Invariant(format!(
            "chart round trip {round_trip:e} (bound {ROUND_TRIP_BOUND:e}), equivariance {equivariance:e} (bound {EQUIVARIANCE_BOUND:e})"
        )))
    } else {
        None
    };
    Outcome::report(&report, None, failure)
}

fn run_berry_maps(ctx: &Context, require_closed: bool) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let mut rng = prng(ctx.cfg.seed);
    let s = setup(&ctx.cfg, &ctx.tol, &mut rng)?;
    let r = berry_maps(&s.schedule, &s.p0, &s.sigma, &s.grid, &ctx.tol)?;
    let mut report = RunReport::new(ctx.cfg.clone());
    fill_from_result(&mut report, &r, ctx.cfg.m);
    if require_closed {
        if let (Some(l), Some(arg)) = (&s.latitude, report.berry_phase_arg) {
            let samples = l.samples(ctx.cfg.grid.steps);
            let oracle = pancharatnam_oracle(&samples, &s.sigma, &ctx.tol)?;
            report.put("analytic_reference", l.solid_angle_phase());
            report.put("expected_phase_arg", l.expected_phase());
            report.put("deviation", phase_distance(arg, l.expected_phase()));
            report.put("oracle_phase_arg", oracle.phase());
            report.put("oracle_deviation", phase_distance(arg, oracle.phase()));
        }
    }
    let rows = node_rows(&r.projector_path, &r.transport_path, Some(&r.frame_path));
    report.wall_time_s = elapsed(ctx, start);
    let mut failure = check_defects(&report.defect_max, &ctx.tol);
    if failure.is_none() && s.curve.is_some() {
        let gap = r.fiber_gap.distance_from_identity();
        if gap > ctx.tol.comparison {
            failure = Some(CliError::Invariant(format!(
                "fiber gap deviates from the identity by {gap:e} on a geometric schedule"
            )));
        }
    }
    if require_closed && !r.closed {
        failure = Some(CliError::Numerical(format!(
            "path is not closed, closure residual {:e}",
            r.closure_residual
        )));
    }
    Outcome::report(&report, Some(to_csv(&rows)), failure)
}

pub fn flow(ctx: &Context) -> Result<Outcome, CliError> {
    run_berry_maps(ctx, false)
}

pub fn berry(ctx: &Context) -> Result<Outcome, CliError> {
    run_berry_maps(ctx, true)
}

fn loop_report(
    ctx: &Context,
    path: &ProjectorPath,
    sigma: &Frame,
    start: Instant,
) -> Result<(RunReport, String, Option<CliError>), CliError> {
    let residual = path.closure_residual();
    let g = loop_holonomy(path, sigma, &ctx.tol)?;
    let transport = horizontal_transport(path, sigma, &ctx.tol)?;
    let g_rev = loop_holonomy(&path.reversed(), sigma, &ctx.tol)?;
    let oracle = pancharatnam_oracle(path.samples(), sigma, &ctx.tol)?;
    let mut report = RunReport::new(ctx.cfg.clone());
    report.holonomy_geometric = Some(gauge(&g));
    report.closure_residual = Some(residual);
    if ctx.cfg.m == 1 {
        report.berry_phase_arg = Some(g.phase());
    }
    report.defect_max = DefectMax {
        projector: path.max_defect(),
        isometry: transport.max_defect(),
        horizontality: transport.max_horizontality(),
    };
    report.put("reversal_deviation", (g_rev.matrix() - g.matrix().adjoint()).norm());
    report.put("oracle_deviation", (oracle.matrix() - g.matrix()).norm());
    report.put("unitarity_defect", g.unitarity_defect());
    let rows = node_rows(path, &transport, None);
    report.wall_time_s = elapsed(ctx, start);
    let failure = check_defects(&report.defect_max, &ctx.tol);
    Ok((report, to_csv(&rows), failure))
}

pub fn holonomy(ctx: &Context) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let mut rng = prng(ctx.cfg.seed);
    let s = setup(&ctx.cfg, &ctx.tol, &mut rng)?;
    let path = match &s.curve {
        Some(c) => ProjectorPath::from_curve(c.clone(), s.grid),
        None => integrate_projector(&s.schedule, &s.p0, &s.grid, &ctx.tol)?,
    };
    let (report, csv, failure) = loop_report(ctx, &path, &s.sigma, start)?;
    Outcome::report(&report, Some(csv), failure)
}

pub fn synthesize(ctx: &Context) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let (n, m) = (ctx.cfg.n, ctx.cfg.m);
    let mut rng = prng(ctx.cfg.seed);
    let syn = ctx.cfg.synthesis.clone().unwrap_or_default();
    let sigma = match &ctx.cfg.frame {
        Some(rows) => Frame::new(matrix_from_rows(rows)?, &ctx.tol).map_err(CliError::setup)?,
        None => linalg::random_frame_with(&mut rng, n, m),
    };
    if sigma.shape() != (n, m) {
        return Err(CliError::Usage(format!("frame must be {n}x{m}, got {:?}", sigma.shape())));
    }
    let w = match &syn.w {
        Some(rows) => {
            let w = checked_square(rows, m, "w")?;
            linalg::ensure_anti_hermitian(&w, ctx.tol.structural).map_err(CliError::setup)?;
            w
        }
        None => random_generator(&mut rng, m, 1.0),
    };
    let base = BasePoint::from_frame(&sigma);
    let path =
        synthesize_holonomy_step(&w, syn.t, &base, syn.steps_per_leg, &ctx.tol).map_err(CliError::setup)?;
    let (mut report, csv, failure) = loop_report(ctx, &path, &sigma, start)?;
    let g = report
        .holonomy_geometric
        .as_ref()
        .map(matrix_from_rows)
        .transpose()?
        .expect("loop_report sets the holonomy");
    let target = w.scale(SYNTHESIS_CONSTANT * syn.t * syn.t);
    let log_error = (linalg::unitary_log(&g)? - &target).norm();
    report.put("synthesis_constant", SYNTHESIS_CONSTANT);
    report.put("scale", syn.t);
    report.put("legs", path.grid().steps() / syn.steps_per_leg);
    report.put("predicted", report::matrix(&linalg::mat_exp(&target)?));
    report.put("log_error", log_error);
    report.put("relative_remainder", log_error / (syn.t * syn.t * w.norm().max(f64::MIN_POSITIVE)));
    Outcome::report(&report, Some(csv), failure)
}

/// Least-squares slope of `ln y` against `ln x`.
fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / k, b + y / k));
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn adiabatic(ctx: &Context) -> Result<Outcome, CliError> {
    let start = Instant::now();
    let (n, m) = (ctx.cfg.n, ctx.cfg.m);
    let a = ctx.cfg.adiabatic.clone().unwrap_or_default();
    if a.totals.is_empty() || a.totals.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(CliError::Usage("adiabatic.totals must be non-empty and positive".into()));
    }
    if !(a.steps_per_unit.is_finite() && a.steps_per_unit > 0.0) {
        return Err(CliError::Usage("adiabatic.steps_per_unit must be positive".into()));
    }
    let mut rng = prng(ctx.cfg.seed);
    let sigma = match &ctx.cfg.frame {
        Some(rows) => Frame::new(matrix_from_rows(rows)?, &ctx.tol).map_err(CliError::setup)?,
        None => linalg::random_frame_with(&mut rng, n, m),
    };
    let p0 = sigma.projector();
    let base = p0.matrix() * C64::new(0.0, -a.gap);
    let k = random_generator(&mut rng, n, a.sweep_norm);
    let p_final = p0.conjugate(&linalg::mat_exp(&k)?);
    let mut sweep = Vec::new();
    let mut sweep_csv = String::from("total_time,steps,fiber_gap_deviation,leakage\n");
    let mut last = None;
    let mut defects = DefectMax::default();
    for &total in &a.totals {
        let steps = ((total * a.steps_per_unit).ceil() as usize).max(2);
        let grid = TimeGrid::new(0.0, total, steps).map_err(CliError::setup)?;
        let schedule =
            HamiltonianSchedule::rotating(base.clone(), k.scale(1.0 / total), &ctx.tol).map_err(CliError::setup)?;
        let r = berry_maps(&schedule, &p0, &sigma, &grid, &ctx.tol)?;
        let phase = C64::from_polar(1.0, -a.gap * total);
        let deviation = (r.fiber_gap.matrix() - linalg::identity(m) * phase).norm();
        let leakage = r.projector_path.end().distance(&p_final);
        sweep.push(json!({
            "total_time": total,
            "steps": steps,
            "fiber_gap_deviation": deviation,
            "leakage": leakage,
        }));
        sweep_csv.push_str(&format!("{total:e},{steps},{deviation:e},{leakage:e}\n"));
        defects.projector = defects.projector.max(r.max_projector_defect);
        defects.isometry = defects.isometry.max(r.max_isometry_defect);
        defects.horizontality = defects.horizontality.max(r.max_horizontality_defect);
        last = Some((r, deviation, total));
    }
    let (r, _, _) = last.as_ref().expect("totals is non-empty");
    let mut report = RunReport::new(ctx.cfg.clone());
    fill_from_result(&mut report, r, m);
    report.extra.remove("fiber_gap_deviation");
    report.put("phase_deviation", last.as_ref().map(|(_, d, _)| *d));
    report.defect_max = defects;
    let points: Vec<(f64, f64)> = sweep
        .iter()
        .map(|e| (e["total_time"].as_f64().unwrap(), e["fiber_gap_deviation"].as_f64().unwrap()))
        .collect();
    report.put("sweep", sweep);
    if let Some(slope) = log_log_slope(&points) {
        report.put("decay_slope", slope);
    }
    let rows = node_rows(&r.projector_path, &r.transport_path, Some(&r.frame_path));
    report.wall_time_s = elapsed(ctx, start);
    let failure = check_defects(&report.defect_max, &ctx.tol);
    let mut out = Outcome::report(&report, Some(to_csv(&rows)), failure)?;
    out.extra_files.push(("_sweep.csv".into(), sweep_csv));
    Ok(out)
}

pub fn format_table(rows: &[CheckRow]) -> String {
    let wm = rows.iter().map(|r| r.module.len()).max().unwrap_or(6).max(6);
    let wn = rows.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
    let mut out = format!("{:<wm$}  {:<wn$}  {:>11}  {:>9}  result\n", "module", "check", "measured", "bound");
    for r in rows {
        out.push_str(&format!(
            "{:<wm$}  {:<wn$}  {:>11.3e}  {:>9.1e}  {}",
            r.module,
            r.name,
            r.measured,
            r.bound,
            if r.pass { "PASS" } else { "FAIL" }
        ));
        if let Some(e) = &r.error {
            out.push_str(&format!("  ({e})"));
        }
        out.push('\n');
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    out.push_str(&format!("{} checks, {failed} failed\n", rows.len()));
    out
}

pub fn selftest(ctx: &Context) -> Result<Outcome, CliError> {
    let rows = selftest::run(&ctx.tol, ctx.cfg.seed);
    let failed = rows.iter().filter(|r| !r.pass).count();
    Ok(Outcome {
        json: None,
        text: Some(format_table(&rows)),
        csv: None,
        extra_files: Vec::new(),
        failure: (failed > 0).then(|| CliError::Invariant(format!("{failed} self-test checks failed"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(-1.5))).collect();
        assert!((log_log_slope(&pts).unwrap() + 1.5).abs() < 1e-12);
        assert!(log_log_slope(&pts[..1]).is_none());
    }

    #[test]
    fn table_marks_failures() {
        let rows = vec![
            CheckRow {
                module: "linalg",
                name: "a",
                measured: 1e-14,
                bound: 1e-10,
                pass: true,
                error: None,
            },
            CheckRow {
                module: "bundle",
                name: "b",
                measured: f64::NAN,
                bound: 1e-10,
                pass: false,
                error: Some("boom".into()),
            },
        ];
        let t = format_table(&rows);
        assert!(t.contains("PASS"));
        assert!(t.contains("FAIL  (boom)"));
        assert!(t.ends_with("2 checks, 1 failed\n"));
    }

    #[test]
    fn latitude_setup_needs_codimension_one() {
        let cfg = ExperimentConfig {
            n: 4,
            m: 2,
            ..ExperimentConfig::default()
        };
        let err = setup(&cfg, &Tolerances::default(), &mut prng(0)).err().unwrap();
        assert!(matches!(err, CliError::Usage(_)));
    }

    #[test]
    fn latitude_grid_defaults_to_one_period() {
        let cfg = ExperimentConfig::default();
        let s = setup(&cfg, &Tolerances::default(), &mut prng(0)).unwrap();
        assert!((s.grid.t1() - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        assert!(s.latitude.is_some());
    }
}
