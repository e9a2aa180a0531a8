use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use gdrb::analysis::{confidence_interval, counterexample_analytics, first_order_gamma, fit as fit_dataset, ExperimentConfig, FitResult, GammaReport, CounterexampleReport};
use gdrb::chanalg::SuperOp;
use gdrb::decomp::{deltas, gauge_to_l_identity, interpret, solve_lr, DeltaReport, Decomposition, Residuals};
use gdrb::groups::{GroupKind, GroupTable};
use gdrb::noise::{depol_z_gateset, GateSet, NoiseSpec};
use gdrb::rbsim::{brute_force_average, run_experiment, theory_curve, DecayDataset, DecayRow};
use gdrb::rng::{child_seed, Domain};
use serde::Serialize;

use crate::config::RunConfig;
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const DECAY_HEADER: [&str; 4] = ["m", "mean", "variance", "num_sequences"];

#[derive(Serialize)]
struct Versioned<T: Serialize> {
    version: &'static str,
    #[serde(flatten)]
    body: T,
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_bytes(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Io(format!("writing {}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::Io(format!("writing stdout: {e}"))),
    }
}

fn write_json<T: Serialize>(out: Option<&Path>, body: T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(&Versioned { version: VERSION, body })
        .map_err(|e| CliError::Validation(format!("serializing output: {e}")))?;
    text.push('\n');
    write_bytes(out, text.as_bytes())
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(format!("writing csv: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(format!("writing csv: {e}")))
}

/// Reads a `m,mean,variance,num_sequences` file.
pub fn read_decay_csv(path: &Path) -> Result<DecayDataset, CliError> {
    let shown = path.display();
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Io(format!("reading {shown}: {e}")))?;
    let header = r.headers().map_err(|e| CliError::Validation(format!("{shown}: {e}")))?;
    if header.iter().ne(DECAY_HEADER) {
        return Err(CliError::Validation(format!(
            "{shown}: header must be {}, found {}",
            DECAY_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let rows = r
        .deserialize::<DecayRow>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Validation(format!("{shown}: {e}")))?;
    Ok(DecayDataset::new(rows)?)
}

/// The configured gate set. An unseeded noise model takes its seed from the
/// run seed.
pub fn gate_set(cfg: &RunConfig) -> Result<GateSet, CliError> {
    let group = Arc::new(GroupTable::build(cfg.group)?);
    let noise = match cfg.noise.seed {
        Some(_) => cfg.noise.clone(),
        None => cfg.noise.with_seed(child_seed(cfg.seed, Domain::GateNoise, 0)),
    };
    Ok(noise.build(group)?)
}

/// Deltas in the `L = I` gauge when it exists, otherwise in the frame of `gs`.
fn deltas_report(gs: &GateSet, dec: &Decomposition, cfg: &RunConfig) -> Result<(DeltaReport, &'static str), CliError> {
    match gauge_to_l_identity(gs, dec) {
        Ok((gs_i, dec_i)) => Ok((deltas(&gs_i, &dec_i, &cfg.rho_vec(), &cfg.q_vec())?, "l_identity")),
        Err(_) => Ok((deltas(gs, dec, &cfg.rho_vec(), &cfg.q_vec())?, "original")),
    }
}

#[derive(Serialize)]
struct Eigengaps {
    p: f64,
    t: f64,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct DecomposeOutput<'a> {
    gate_set: &'a str,
    p: f64,
    t: f64,
    r_internoise: f64,
    residuals: Residuals,
    eigengaps: Eigengaps,
    delta1: f64,
    delta2: f64,
    thm2_bound: Option<f64>,
    /// Gauge in which the deltas were evaluated.
    delta_gauge: &'static str,
    L: &'a SuperOp,
    R: &'a SuperOp,
}

pub fn decompose(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let gs = gate_set(cfg)?;
    let dec = solve_lr(&gs)?;
    let (rep, gauge) = deltas_report(&gs, &dec, cfg)?;
    write_json(
        out,
        DecomposeOutput {
            gate_set: gs.description(),
            p: dec.p,
            t: dec.t,
            r_internoise: interpret(&dec).infidelity,
            residuals: dec.residuals,
            eigengaps: Eigengaps { p: dec.eigengap_p, t: dec.eigengap_t },
            delta1: rep.delta1,
            delta2: rep.delta2,
            thm2_bound: rep.thm2_bound,
            delta_gauge: gauge,
            L: &dec.l,
            R: &dec.r,
        },
    )
}

pub fn decay_csv(ds: &DecayDataset) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &DECAY_HEADER,
        ds.rows.iter().map(|r| vec![r.m.to_string(), fmt_f(r.mean), fmt_f(r.variance), r.num_sequences.to_string()]),
    )
}

pub fn simulate(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let gs = gate_set(cfg)?;
    let ds = run_experiment(&gs, &cfg.m_list, cfg.n_seq, &cfg.rho_vec(), &cfg.q_vec(), cfg.seed)?;
    write_bytes(out, &decay_csv(&ds)?)
}

pub fn bruteforce(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let gs = gate_set(cfg)?;
    let rows = cfg
        .bruteforce_m
        .iter()
        .map(|&m| Ok(vec![m.to_string(), fmt_f(brute_force_average(&gs, m, &cfg.rho_vec(), &cfg.q_vec())?)]))
        .collect::<Result<Vec<_>, CliError>>()?;
    write_bytes(out, &csv_bytes(&["m", "exact_mean"], rows)?)
}

pub fn fit_file(cfg: &RunConfig, input: &Path) -> Result<FitResult, CliError> {
    let ds = read_decay_csv(input)?;
    Ok(fit_dataset(&ds, &cfg.fit)?)
}

pub fn fit(cfg: &RunConfig, input: &Path, out: Option<&Path>) -> Result<(), CliError> {
    write_json(out, fit_file(cfg, input)?)
}

#[derive(Serialize)]
struct TheoryRow {
    m: usize,
    value: f64,
    bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    data_mean: Option<f64>,
    /// `data_mean - value`
    #[serde(skip_serializing_if = "Option::is_none")]
    deviation: Option<f64>,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct TheoryOutput {
    p: f64,
    t: f64,
    A: f64,
    B: f64,
    delta1: f64,
    delta2: f64,
    points: Vec<TheoryRow>,
}

/// With `input`, evaluates at the lengths of the data file and reports the
/// deviation of each mean from the prediction.
pub fn theory(cfg: &RunConfig, input: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let data = input.map(read_decay_csv).transpose()?;
    let m_list: Vec<usize> = match &data {
        Some(ds) => ds.rows.iter().map(|r| r.m).collect(),
        None => cfg.m_list.clone(),
    };
    let gs = gate_set(cfg)?;
    let dec = solve_lr(&gs)?;
    let (rep, _) = deltas_report(&gs, &dec, cfg)?;
    let curve = theory_curve(&dec, &rep, &cfg.rho_vec(), &cfg.q_vec(), &m_list)?;
    let points = curve
        .points
        .iter()
        .enumerate()
        .map(|(i, pt)| {
            let data_mean = data.as_ref().map(|ds| ds.rows[i].mean);
            TheoryRow { m: pt.m, value: pt.value, bound: pt.bound, data_mean, deviation: data_mean.map(|d| d - pt.value) }
        })
        .collect();
    write_json(
        out,
        TheoryOutput { p: curve.p, t: curve.t, A: curve.A, B: curve.B, delta1: rep.delta1, delta2: rep.delta2, points },
    )
}

#[derive(Serialize)]
struct CounterexampleOutput {
    nu: f64,
    theta: f64,
    #[serde(flatten)]
    report: GammaReport,
    analytic: CounterexampleReport,
}

/// Always on the Clifford group, with the default half partition.
pub fn counterexample(nu: f64, theta: f64, out: Option<&Path>) -> Result<(), CliError> {
    let analytic = counterexample_analytics(nu, theta)?;
    let group = Arc::new(GroupTable::build(GroupKind::Clifford)?);
    let gs = depol_z_gateset(group, nu, theta, None)?;
    let report = first_order_gamma(&gs, 0.5)?;
    write_json(out, CounterexampleOutput { nu, theta, report, analytic })
}

/// One figure point: interval of fitted `p` and mean deltas over the same
/// `experiments` noise draws.
pub struct Fig1Point {
    pub r: f64,
    pub lo: f64,
    pub hi: f64,
    pub p_predicted: f64,
    pub delta1: f64,
    pub delta2: f64,
}

pub fn fig1_point(cfg: &RunConfig, index: usize, r: f64) -> Result<Fig1Point, CliError> {
    let seed = child_seed(cfg.seed, Domain::Experiments, u32::MAX - index as u32);
    let exp = ExperimentConfig {
        group: cfg.group,
        noise: NoiseSpec::random_unitary(r, 0),
        m_list: cfg.m_list.clone(),
        n_seq: cfg.n_seq,
        seed,
        fit: cfg.fit,
        tail_cap: cfg.tail_cap,
        rho: cfg.rho_vec(),
        q: cfg.q_vec(),
    };
    let ci = confidence_interval(&exp, cfg.experiments, cfg.level)?;
    let group = Arc::new(GroupTable::build(cfg.group)?);
    let (mut d1, mut d2) = (0.0, 0.0);
    for i in 0..cfg.experiments {
        let noise_seed = child_seed(seed, Domain::Experiments, 2 * i as u32);
        let gs = exp.noise.with_seed(noise_seed).build(group.clone())?;
        let dec = solve_lr(&gs)?;
        let (rep, _) = deltas_report(&gs, &dec, cfg)?;
        d1 += rep.delta1;
        d2 += rep.delta2;
    }
    let k = cfg.experiments as f64;
    Ok(Fig1Point { r, lo: ci.lo, hi: ci.hi, p_predicted: ci.p_predicted_mean(), delta1: d1 / k, delta2: d2 / k })
}

pub fn reproduce_fig1(cfg: &RunConfig, dir: &Path) -> Result<(), CliError> {
    let points = cfg.r_grid.iter().enumerate().map(|(i, &r)| fig1_point(cfg, i, r)).collect::<Result<Vec<_>, _>>()?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("creating {}: {e}", dir.display())))?;
    let left = csv_bytes(
        &["r", "ci_lo", "ci_hi", "p_predicted"],
        points.iter().map(|p| vec![fmt_f(p.r), fmt_f(p.lo), fmt_f(p.hi), fmt_f(p.p_predicted)]),
    )?;
    let right = csv_bytes(
        &["r", "delta1", "delta2"],
        points.iter().map(|p| vec![fmt_f(p.r), fmt_f(p.delta1), fmt_f(p.delta2)]),
    )?;
    write_bytes(Some(&dir.join("left.csv")), &left)?;
    write_bytes(Some(&dir.join("right.csv")), &right)
}
