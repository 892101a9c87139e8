//! Executes a scenario configuration into tables and a summary.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use raman_core::cumulant::{cumulant_close, expand_atoms, CumulantError, ParamBinding, PhysicalParams, TWO_PI};
use raman_core::engine::{count_local_maxima, loglog_slope, pulse_metrics_of, sweep, PulseMetrics, SweepAxis};
use raman_core::model::{photon_number, population, read, Model, ModelKind};
use raman_core::observables::{bloch_vector, GroundMoments};
use raman_core::opalgebra::{AtomOp, OpProduct};
use raman_core::oracle::{
    check_density, evolve_exact, expectation, moment_equation_deviation, random_state, random_state_below, Basis,
    ExactConfig, Lindblad, OracleError,
};
use raman_core::runs::{collective_purcell_hz, run_pulse, run_steady, PulseOptions, RunError};
use raman_core::spectra::SpectrumOptions;

use crate::config::{ConfigError, Metric, RunKind, ScenarioConfig};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("all {0} sweep points failed")]
    AllPointsFailed(usize),
    #[error("output: {0}")]
    Output(String),
}

impl From<CumulantError> for HarnessError {
    fn from(e: CumulantError) -> Self {
        HarnessError::Run(e.into())
    }
}

/// A CSV table; cells are preformatted.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// Appended to the scenario name to form the file name; empty for the
    /// main table.
    pub suffix: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { suffix: String::new(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&x| cell(x)).collect());
    }
}

/// Shortest round-trip exponent form; `NaN` for missing values.
pub fn cell(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:e}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub index: usize,
    pub value: f64,
    pub error: String,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub summary: Value,
    pub failures: Vec<PointFailure>,
    /// False when a check in an oracle run failed.
    pub passed: bool,
}

fn with_pumping(cfg: &ScenarioConfig, mut p: PhysicalParams) -> Result<PhysicalParams, RunError> {
    if let Some(f) = cfg.pumping {
        p.gamma12_hz = f * collective_purcell_hz(&p)?;
    }
    Ok(p)
}

/// Parameters at one sweep value; pumping follows the point unless the
/// pumping rate is the axis.
pub fn point_params(cfg: &ScenarioConfig, value: f64) -> Result<PhysicalParams, RunError> {
    let Some(s) = &cfg.sweep else {
        return with_pumping(cfg, cfg.params.clone());
    };
    if s.axis == SweepAxis::Gamma12 {
        let mut p = cfg.params.clone();
        p.gamma12_hz = if s.relative { value * collective_purcell_hz(&p)? } else { value };
        return Ok(p);
    }
    with_pumping(cfg, s.axis.apply(&cfg.params, value))
}

fn pulse_options(cfg: &ScenarioConfig) -> PulseOptions {
    PulseOptions { t_end: cfg.t_end, rtol: cfg.rtol, atol: cfg.atol, stop_fraction: cfg.stop_fraction }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    match cfg.kind {
        RunKind::Pulse => pulse(cfg),
        RunKind::Sweep => sweep_run(cfg),
        RunKind::Steady => steady(cfg),
        RunKind::Spectrum => spectrum_run(cfg),
        RunKind::OracleCheck => oracle_check(cfg),
    }
}

fn metrics_json(m: &Result<PulseMetrics, impl ToString>) -> Value {
    match m {
        Ok(m) => serde_json::to_value(m).expect("serialisable metrics"),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn pulse(cfg: &ScenarioConfig) -> Result<RunOutput, HarnessError> {
    let model = Model::derive(cfg.model)?;
    let p = point_params(cfg, 0.0)?;
    let run = run_pulse(&model, &p, &pulse_options(cfg))?;
    let spin = run.spin()?;
    let levels = cfg.model.levels();
    let pops: Vec<Vec<f64>> = (1..=levels).map(|l| run.population_series(l).unwrap_or_default()).collect();
    let photons = run.photon_series();
    let mut head = vec!["t_s", "photons", "s11", "s22"];
    if levels == 3 {
        head.push("s33");
    }
    head.extend(["J", "M", "A_x", "A_y"]);
    let mut table = Table::new(&head);
    let mut bloch_xy: f64 = 0.0;
    for (k, s) in spin.iter().enumerate() {
        let mut row = vec![s.t, photons[k]];
        row.extend(pops.iter().map(|v| v[k]));
        row.extend([s.dicke.j, s.dicke.m, s.bloch.x, s.bloch.y]);
        table.push(&row);
        bloch_xy = bloch_xy.max(s.bloch.x.abs()).max(s.bloch.y.abs());
    }
    let peak = photons.iter().cloned().fold(0.0, f64::max);
    let half = 0.5 * p.n_atoms;
    let summary = json!({
        "params": p,
        "metrics": metrics_json(&run.metrics()),
        "steps": run.trajectory.len(),
        "t_final": run.trajectory.t_end(),
        "final_photons": photons.last(),
        "local_maxima": count_local_maxima(&photons, 1e-3 * peak),
        "max_s33": pops.get(2).map(|v| v.iter().cloned().fold(0.0, f64::max)),
        "max_abs_bloch_xy": bloch_xy,
        "min_j_fraction": spin.iter().map(|s| s.dicke.j / half).fold(f64::INFINITY, f64::min),
        "max_m_excess": spin.iter().map(|s| s.dicke.m.abs() - s.dicke.j).fold(f64::NEG_INFINITY, f64::max),
        "switched_to_implicit": run.trajectory.switched_to_implicit,
    });
    Ok(RunOutput { tables: vec![table], summary, failures: Vec::new(), passed: true })
}

/// One computed sweep point: CSV cells after the axis value, plus the
/// largest transverse Bloch component seen.
struct Point {
    cells: Vec<f64>,
    bloch_xy: f64,
}

fn pulse_point(model: &Model, cfg: &ScenarioConfig, p: &PhysicalParams) -> Result<Point, RunError> {
    let run = run_pulse(model, p, &pulse_options(cfg))?;
    let m = run.metrics()?;
    let bloch_xy = run.spin()?.iter().map(|s| s.bloch.x.abs().max(s.bloch.y.abs())).fold(0.0, f64::max);
    Ok(Point { cells: vec![m.peak, m.peak_time, m.fwhm, m.decay_time, m.rise_time], bloch_xy })
}

fn steady_point(model: &Model, cfg: &ScenarioConfig, p: &PhysicalParams, with_line: bool) -> Result<Point, RunError> {
    let pt = run_steady(model, p, cfg.steady_t_max)?;
    let g = GroundMoments::from_state(&pt.system, &pt.steady.state, p.n_atoms)?;
    let b = bloch_vector(&g);
    let mut cells = vec![pt.photon_number];
    if with_line {
        let s = pt.spectrum(&SpectrumOptions::default())?;
        cells.extend([s.fit.shift / TWO_PI, s.fit.fwhm / TWO_PI]);
    }
    Ok(Point { cells, bloch_xy: b.x.abs().max(b.y.abs()) })
}

fn sweep_run(cfg: &ScenarioConfig) -> Result<RunOutput, HarnessError> {
    let spec = cfg.sweep.as_ref().expect("validated sweep");
    let model = Model::derive(cfg.model)?;
    let axis_col = match spec.axis {
        SweepAxis::N => "N".to_string(),
        a => format!("{}_hz", a.name()),
    };
    let metric_cols: &[&str] = match spec.metric {
        Metric::Pulse => &["peak", "peak_time_s", "fwhm_s", "decay_time_s", "rise_time_s"],
        Metric::Steady => &["n_ss"],
        Metric::Spectrum => &["n_ss", "shift_hz", "fwhm_hz"],
    };
    let points = sweep(&spec.values, |v| {
        let p = point_params(cfg, v)?;
        let axis_value = if spec.relative { p.gamma12_hz } else { v };
        let pt = match spec.metric {
            Metric::Pulse => pulse_point(&model, cfg, &p),
            Metric::Steady => steady_point(&model, cfg, &p, false),
            Metric::Spectrum => steady_point(&model, cfg, &p, true),
        }?;
        Ok::<_, RunError>((axis_value, pt))
    });
    let mut head = vec![axis_col.as_str()];
    head.extend_from_slice(metric_cols);
    let mut table = Table::new(&head);
    let mut failures = Vec::new();
    let mut xs = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); metric_cols.len()];
    let mut bloch_xy: f64 = 0.0;
    for pt in &points {
        match &pt.result {
            Ok((x, r)) => {
                let mut row = vec![*x];
                row.extend(&r.cells);
                table.push(&row);
                xs.push(x.abs());
                for (c, v) in cols.iter_mut().zip(&r.cells) {
                    c.push(v.abs());
                }
                bloch_xy = bloch_xy.max(r.bloch_xy);
            }
            Err(e) => {
                let x = point_params(cfg, pt.value).map(|p| if spec.relative { p.gamma12_hz } else { pt.value }).unwrap_or(pt.value);
                let mut row = vec![x];
                row.extend(std::iter::repeat_n(f64::NAN, metric_cols.len()));
                table.push(&row);
                failures.push(PointFailure { index: pt.index, value: pt.value, error: e.to_string() });
            }
        }
    }
    if failures.len() == points.len() {
        return Err(HarnessError::AllPointsFailed(points.len()));
    }
    let same_sign = spec.values.iter().all(|&v| v > 0.0) || spec.values.iter().all(|&v| v < 0.0);
    let slopes: serde_json::Map<String, Value> = metric_cols
        .iter()
        .zip(&cols)
        .map(|(name, c)| (name.to_string(), json!(if same_sign { loglog_slope(&xs, c) } else { None })))
        .collect();
    let summary = json!({
        "axis": spec.axis,
        "metric": spec.metric,
        "points": points.len(),
        "failed": failures.len(),
        "loglog_slopes": slopes,
        "max_abs_bloch_xy": bloch_xy,
    });
    Ok(RunOutput { tables: vec![table], summary, failures, passed: true })
}

fn steady(cfg: &ScenarioConfig) -> Result<RunOutput, HarnessError> {
    let model = Model::derive(cfg.model)?;
    let p = point_params(cfg, 0.0)?;
    let pt = run_steady(&model, &p, cfg.steady_t_max)?;
    let g = GroundMoments::from_state(&pt.system, &pt.steady.state, p.n_atoms).map_err(RunError::from)?;
    let b = bloch_vector(&g);
    let pops: Vec<f64> = (1..=cfg.model.levels())
        .map(|l| read(&pt.system, &pt.steady.state, &population(l)).map_or(f64::NAN, |z| z.re))
        .collect();
    let mut head = vec!["gamma12_hz", "n_ss", "s11", "s22"];
    if cfg.model.levels() == 3 {
        head.push("s33");
    }
    head.extend(["t_s", "residual"]);
    let mut table = Table::new(&head);
    let mut row = vec![p.gamma12_hz, pt.photon_number];
    row.extend(&pops);
    row.extend([pt.steady.t, pt.steady.residual]);
    table.push(&row);
    let summary = json!({
        "params": p,
        "n_ss": pt.photon_number,
        "t_s": pt.steady.t,
        "residual": pt.steady.residual,
        "max_abs_bloch_xy": b.x.abs().max(b.y.abs()),
    });
    Ok(RunOutput { tables: vec![table], summary, failures: Vec::new(), passed: true })
}

/// Half-width of the written spectrum window in linewidths.
const SPECTRUM_WINDOW: f64 = 50.0;

fn spectrum_run(cfg: &ScenarioConfig) -> Result<RunOutput, HarnessError> {
    let model = Model::derive(cfg.model)?;
    let p = point_params(cfg, 0.0)?;
    let pt = run_steady(&model, &p, cfg.steady_t_max)?;
    let s = pt.spectrum(&SpectrumOptions::default())?;
    let mut table = Table::new(&["omega_hz", "S"]);
    for (&w, &v) in s.omega.iter().zip(&s.values) {
        if (w - s.fit.shift).abs() <= SPECTRUM_WINDOW * s.fit.fwhm {
            table.push(&[w / TWO_PI, v]);
        }
    }
    let g = GroundMoments::from_state(&pt.system, &pt.steady.state, p.n_atoms).map_err(RunError::from)?;
    let b = bloch_vector(&g);
    let min = s.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let summary = json!({
        "params": p,
        "n_ss": pt.photon_number,
        "shift_hz": s.fit.shift / TWO_PI,
        "fwhm_hz": s.fit.fwhm / TWO_PI,
        "fit": s.fit,
        "sum_rule_ratio": s.integrated() / (2.0 * s.kappa * s.photon_number),
        "min_over_max": min / s.max(),
        "grid_points": s.values.len(),
        "max_abs_bloch_xy": b.x.abs().max(b.y.abs()),
    });
    Ok(RunOutput { tables: vec![table], summary, failures: Vec::new(), passed: true })
}

/// Relative tolerance for the symbolic equations against the Liouvillian.
pub const DERIVATION_TOLERANCE: f64 = 1e-9;
/// Allowed relative difference of the two-atom peak times.
pub const PEAK_TIME_TOLERANCE: f64 = 0.05;

fn oracle_check(cfg: &ScenarioConfig) -> Result<RunOutput, HarnessError> {
    let mut table = Table { suffix: String::new(), header: vec!["check".into(), "value".into(), "threshold".into(), "pass".into()], rows: vec![] };
    let mut passed = true;
    let mut record = |name: &str, value: f64, threshold: f64, ok: bool| {
        passed &= ok;
        table.rows.push(vec![name.to_string(), cell(value), cell(threshold), ok.to_string()]);
    };
    let mut params = cfg.params.clone();
    params.n_atoms = 2.0;

    for kind in [ModelKind::Full, ModelKind::Effective] {
        let model = Model::derive(kind)?;
        let b = model.binding(&params)?;
        let me = expand_atoms(&model.master, 2);
        let lind = Lindblad::<f64>::new(&me, &b, 4)?;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let rho = random_state_below::<f64>(lind.basis(), 1, &mut rng);
            worst = worst.max(moment_equation_deviation(&me, &lind, &b, &rho, model.system.variables())?);
        }
        record(&format!("{kind} equations, two atoms"), worst, DERIVATION_TOLERANCE, worst < DERIVATION_TOLERANCE);
    }

    let model = Model::derive(ModelKind::Full)?;
    let mut three = params.clone();
    three.n_atoms = 3.0;
    let b = model.binding(&three)?;
    let lind = Lindblad::<f64>::new(&expand_atoms(&model.master, 3), &b, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let rho = lind.basis().symmetrize(&random_state_below::<f64>(lind.basis(), 1, &mut rng));
        worst = worst.max(moment_equation_deviation(&model.master, &lind, &b, &rho, model.system.variables())?);
    }
    record("symmetric equations, three atoms", worst, DERIVATION_TOLERANCE, worst < DERIVATION_TOLERANCE);

    let basis = Basis::new(4, 2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let field = random_state_below::<f64>(&Basis::new(4, 0, 3), 1, &mut rng);
    let rho = field.kronecker(&random_state::<f64>(3, &mut rng)).kronecker(&random_state::<f64>(3, &mut rng));
    let moment = |p: &OpProduct| expectation(&rho, &basis.product(p).expect("product in basis"));
    let mut worst: f64 = 0.0;
    for parts in [
        (1, 0, vec![AtomOp { atom: 1, l: 1, m: 2 }, AtomOp { atom: 2, l: 2, m: 1 }]),
        (1, 1, vec![AtomOp { atom: 1, l: 2, m: 3 }]),
        (0, 1, vec![AtomOp { atom: 1, l: 3, m: 3 }, AtomOp { atom: 2, l: 1, m: 3 }]),
    ] {
        let p = OpProduct::from_parts(parts.0, parts.1, parts.2).expect("third-order product");
        let closed = cumulant_close::<raman_core::scalar::ExactCoeff>(&p, |q| q.clone())?;
        worst = worst.max((closed.evaluate(&|_| 1.0, &moment) - moment(&p)).norm());
    }
    record("closure on product states", worst, 1e-12, worst < 1e-12);

    let mut summary = json!({ "passed": true });
    if cfg.exact_pulse {
        let (mf, exact) = two_atom_peak_times(&cfg.params)?;
        let rel = (mf / exact - 1.0).abs();
        record("two-atom peak time", rel, PEAK_TIME_TOLERANCE, rel < PEAK_TIME_TOLERANCE);
        summary["mean_field_peak_time"] = json!(mf);
        summary["exact_peak_time"] = json!(exact);
    }
    summary["passed"] = json!(passed);
    Ok(RunOutput { tables: vec![table], summary, failures: Vec::new(), passed })
}

/// Two-atom pulse with the single-atom coupling raised so that
/// `sqrt(N) g` matches the crossover ensemble; returns the peak times of
/// the mean-field and the exact evolution.
pub fn two_atom_peak_times(reference: &PhysicalParams) -> Result<(f64, f64), HarnessError> {
    let n = 2.0;
    let mut p = reference.clone();
    p.g31_hz *= (reference.n_atoms / n).sqrt();
    p.n_atoms = n;
    let model = Model::derive(ModelKind::Full)?;
    let mf = run_pulse(&model, &p, &PulseOptions::new(8e-5))?.metrics().map_err(RunError::from)?;
    let me = expand_atoms(&model.master, 2);
    let b = ParamBinding::full(&p);
    let cfg = ExactConfig { t_end: 8e-5, dt: 5e-9, cutoff: 4 };
    let ev = evolve_exact(&me, &b, |bs| bs.product_state(2), &[photon_number()], &cfg)?;
    check_density(&ev.final_state)?;
    let v = ev.real_part(0);
    let exact = pulse_metrics_of(&ev.times, &v, |t| ev.interpolate(0, t)).map_err(RunError::from)?;
    Ok((mf.peak_time, exact.peak_time))
}
