//! Fitting decay curves, confidence intervals over repeated experiments, and
//! the first-order perturbation analysis around the average noise
//! `E = E_G(G^dag G~)`.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chanalg::{induced_1to1_norm, OperatorVec, SuperOp};
use crate::decomp::solve_lr;
use crate::error::{Error, Result};
use crate::groups::{GroupKind, GroupTable};
use crate::noise::{GateSet, NoiseSpec};
use crate::rbsim::{default_m_list, run_experiment, DecayDataset};
use crate::rng::{child_seed, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `0.5 p^m + 0.5`
    #[default]
    FixedSpam,
    /// `A p^m + B`
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitOptions {
    #[serde(default)]
    pub model: FitModel,
    /// Rows with smaller `m` are dropped before fitting.
    #[serde(default = "default_min_m")]
    pub min_m: usize,
}

fn default_min_m() -> usize {
    3
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { model: FitModel::FixedSpam, min_m: default_min_m() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub p_est: f64,
    /// Fixed at 0.5 for the fixed-SPAM model.
    #[serde(rename = "A_est")]
    pub a_est: f64,
    #[serde(rename = "B_est")]
    pub b_est: f64,
    pub weighted_sse: f64,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Applies the `min_m` cutoff and dispatches on the model.
pub fn fit(ds: &DecayDataset, opts: &FitOptions) -> Result<FitResult> {
    let ds = ds.with_min_m(opts.min_m);
    match opts.model {
        FitModel::FixedSpam => fit_fixed_spam(&ds),
        FitModel::Free => fit_free(&ds),
    }
}

struct Weighted {
    m: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Weighted {
    fn new(ds: &DecayDataset) -> Self {
        Self {
            m: ds.rows.iter().map(|r| r.m as f64).collect(),
            y: ds.rows.iter().map(|r| r.mean).collect(),
            w: ds.clamped_variances().into_iter().map(|v| 1.0 / v).collect(),
        }
    }

    fn sse(&self, model: impl Fn(f64) -> f64) -> f64 {
        self.m.iter().zip(&self.y).zip(&self.w).map(|((&m, &y), &w)| w * (y - model(m)).powi(2)).sum()
    }
}

fn fixed_model(p: f64, m: f64) -> f64 {
    0.5 * p.powf(m) + 0.5
}

/// Weighted least squares for `0.5 p^m + 0.5` over `p in [0, 1]`.
///
/// The objective is scanned on a grid that is dense near 1, the best grid
/// point is bracketed and refined by golden-section search, then polished by
/// Gauss-Newton steps that are kept only if they lower the objective.
pub fn fit_fixed_spam(ds: &DecayDataset) -> Result<FitResult> {
    const OP: &str = "fit_fixed_spam";
    if ds.len() < 2 {
        return Err(Error::validation(OP, format!("need at least 2 rows, got {}", ds.len())));
    }
    let data = Weighted::new(ds);
    let f = |p: f64| data.sse(|m| fixed_model(p, m));
    let mut warnings = Vec::new();

    let mut grid: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
    grid.extend((4..=48).map(|k| 1.0 - 10f64.powf(-(k as f64) / 4.0)));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let values: Vec<f64> = grid.iter().map(|&p| f(p)).collect();
    let best = (0..grid.len()).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("grid is not empty");

    let local_minima = (0..grid.len())
        .filter(|&i| {
            let left = i == 0 || values[i - 1] > values[i];
            let right = i + 1 == grid.len() || values[i + 1] > values[i];
            left && right
        })
        .count();
    if local_minima > 1 {
        warnings.push(format!("objective has {local_minima} local minima on the scan grid; took the lowest"));
    }
    let (y_min, y_max) = data.y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    if y_max - y_min <= 1e-15 {
        warnings.push("flat likelihood: all means are equal, the data carry no decay information".into());
    }

    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(grid.len() - 1)];
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut iterations = 0;
    while hi - lo > 1e-12 && iterations < 200 {
        iterations += 1;
        if f1 <= f2 {
            hi = x2;
            (x2, f2) = (x1, f1);
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            (x1, f1) = (x2, f2);
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut p = if f1 <= f2 { x1 } else { x2 };
    let mut fp = f(p);
    if values[best] < fp {
        (p, fp) = (grid[best], values[best]);
    }

    for _ in 0..20 {
        let (mut jtr, mut jtj) = (0.0, 0.0);
        for ((&m, &y), &w) in data.m.iter().zip(&data.y).zip(&data.w) {
            let jac = if m == 0.0 { 0.0 } else { 0.5 * m * p.powf(m - 1.0) };
            jtr += w * jac * (y - fixed_model(p, m));
            jtj += w * jac * jac;
        }
        if jtj <= 0.0 {
            break;
        }
        let cand = (p + jtr / jtj).clamp(0.0, 1.0);
        let fc = f(cand);
        iterations += 1;
        if fc < fp {
            (p, fp) = (cand, fc);
        } else {
            break;
        }
    }
    Ok(FitResult {
        model: FitModel::FixedSpam,
        p_est: p,
        a_est: 0.5,
        b_est: 0.5,
        weighted_sse: fp,
        iterations,
        warnings,
    })
}

/// Damped Gauss-Newton (Levenberg-Marquardt) for `A p^m + B`.
pub fn fit_free(ds: &DecayDataset) -> Result<FitResult> {
    const OP: &str = "fit_free";
    const MAX_ITER: usize = 200;
    if ds.len() < 4 {
        return Err(Error::validation(OP, format!("need at least 4 rows, got {}", ds.len())));
    }
    let data = Weighted::new(ds);
    let model = |x: &[f64; 3], m: f64| x[0] * x[2].powf(m) + x[1];
    let sse = |x: &[f64; 3]| data.sse(|m| model(x, m));

    // Initial guess: B from the tail, p from a log-linear fit of mean - B.
    let b0 = data.y.iter().copied().fold(f64::INFINITY, f64::min);
    let a0 = data.y.iter().copied().fold(f64::NEG_INFINITY, f64::max) - b0;
    let pts: Vec<(f64, f64)> = data
        .m
        .iter()
        .zip(&data.y)
        .filter(|&(_, &y)| y - b0 > 1e-12 * a0.abs().max(1e-300))
        .map(|(&m, &y)| (m, (y - b0).ln()))
        .collect();
    let p0 = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let (sm, sl) = pts.iter().fold((0.0, 0.0), |(a, b), &(m, l)| (a + m, b + l));
        let (mm, ml) = (sm / n, sl / n);
        let (cov, var) = pts.iter().fold((0.0, 0.0), |(c, v), &(m, l)| (c + (m - mm) * (l - ml), v + (m - mm).powi(2)));
        if var > 0.0 { (cov / var).exp().clamp(1e-3, 1.0) } else { 0.9 }
    } else {
        0.9
    };

    let mut x = [a0, b0, p0];
    let mut fx = sse(&x);
    let mut lambda = 1e-3;
    let mut trace = vec![fx];
    let mut warnings = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        iterations += 1;
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for ((&m, &y), &w) in data.m.iter().zip(&data.y).zip(&data.w) {
            let pm = x[2].powf(m);
            let dp = if m == 0.0 { 0.0 } else { x[0] * m * x[2].powf(m - 1.0) };
            let jac = [pm, 1.0, dp];
            let r = y - model(&x, m);
            for i in 0..3 {
                jtr[i] += w * jac[i] * r;
                for j in 0..3 {
                    jtj[i][j] += w * jac[i] * jac[j];
                }
            }
        }
        if fx == 0.0 {
            converged = true;
            break;
        }
        // Inner loop: raise the damping until the step lowers the objective.
        let mut accepted = None;
        for _ in 0..60 {
            let mut a = nalgebra::Matrix3::from_fn(|i, j| jtj[i][j]);
            for i in 0..3 {
                a[(i, i)] += lambda * jtj[i][i].max(1e-300);
            }
            let Some(step) = a.lu().solve(&nalgebra::Vector3::from(jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let cand = [x[0] + step[0], x[1] + step[1], (x[2] + step[2]).clamp(1e-12, 1.1)];
            let fc = sse(&cand);
            if fc.is_finite() && fc <= fx {
                accepted = Some((cand, fc, step.norm()));
                break;
            }
            lambda *= 4.0;
        }
        let Some((cand, fc, step)) = accepted else {
            // No downhill step at any damping: x is a (numerical) minimum.
            converged = true;
            break;
        };
        x = cand;
        fx = fc;
        trace.push(fx);
        lambda = (lambda / 3.0).max(1e-15);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Fit { op: OP, msg: "parameters diverged".into(), trace });
        }
        if step < 1e-12 {
            converged = true;
            break;
        }
    }
    if !converged {
        warnings.push(format!("stopped after {MAX_ITER} iterations"));
    }
    if !fx.is_finite() {
        return Err(Error::Fit { op: OP, msg: "objective is not finite".into(), trace });
    }
    Ok(FitResult {
        model: FitModel::Free,
        p_est: x[2],
        a_est: x[0],
        b_est: x[1],
        weighted_sse: fx,
        iterations,
        warnings,
    })
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// One simulated experiment per draw: fresh noise, fresh sequences, one fit.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub group: GroupKind,
    pub noise: NoiseSpec,
    pub m_list: Vec<usize>,
    pub n_seq: usize,
    pub seed: u64,
    pub fit: FitOptions,
    /// Drop lengths where `0.5 p^m` (with the predicted `p`) falls below this.
    pub tail_cap: Option<f64>,
    pub rho: OperatorVec,
    pub q: OperatorVec,
}

impl ExperimentConfig {
    /// `m in {4, ..., 2048}`, 100 sequences, `0.5 p^m >= 1e-3`, `rho = Q = |0><0|`.
    pub fn new(group: GroupKind, noise: NoiseSpec, seed: u64) -> Self {
        let rho = OperatorVec::ground_state(2);
        Self {
            group,
            noise,
            m_list: default_m_list(),
            n_seq: 100,
            seed,
            fit: FitOptions::default(),
            tail_cap: Some(1e-3),
            q: rho.clone(),
            rho,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub p_est: Vec<f64>,
    /// `p` of the decomposition for each experiment's noise draw.
    pub p_predicted: Vec<f64>,
}

impl ConfidenceInterval {
    pub fn p_predicted_mean(&self) -> f64 {
        self.p_predicted.iter().sum::<f64>() / self.p_predicted.len() as f64
    }

    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }
}

/// Empirical central `level` interval of the fitted `p` over `k` independent
/// experiments. Experiment `i` draws its noise with seed
/// `child_seed(seed, 2i)` and its sequences with `child_seed(seed, 2i + 1)`.
pub fn confidence_interval(cfg: &ExperimentConfig, k: usize, level: f64) -> Result<ConfidenceInterval> {
    const OP: &str = "confidence_interval";
    if k < 10 {
        return Err(Error::validation(OP, format!("need at least 10 experiments, got {k}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::validation(OP, format!("level {level} outside (0, 1)")));
    }
    let group = Arc::new(GroupTable::build(cfg.group)?);
    let results = (0..k)
        .into_par_iter()
        .map(|i| single_experiment(cfg, &group, i).map_err(|e| Error::Experiment { op: OP, index: i, source: Box::new(e) }))
        .collect::<Result<Vec<_>>>()?;
    let (mut p_est, p_predicted): (Vec<f64>, Vec<f64>) = results.into_iter().unzip();
    let raw = p_est.clone();
    p_est.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(ConfidenceInterval {
        lo: quantile(&p_est, tail),
        hi: quantile(&p_est, 1.0 - tail),
        level,
        p_est: raw,
        p_predicted,
    })
}

fn single_experiment(cfg: &ExperimentConfig, group: &Arc<GroupTable>, i: usize) -> Result<(f64, f64)> {
    let noise_seed = child_seed(cfg.seed, Domain::Experiments, 2 * i as u32);
    let seq_seed = child_seed(cfg.seed, Domain::Experiments, 2 * i as u32 + 1);
    let gs = cfg.noise.with_seed(noise_seed).build(group.clone())?;
    let p_pred = solve_lr(&gs)?.p;
    let m_list = capped_lengths(&cfg.m_list, p_pred, cfg.tail_cap);
    let ds = run_experiment(&gs, &m_list, cfg.n_seq, &cfg.rho, &cfg.q, seq_seed)?;
    Ok((fit(&ds, &cfg.fit)?.p_est, p_pred))
}

/// Lengths with `0.5 p^m >= cap`, keeping at least the first two.
pub fn capped_lengths(m_list: &[usize], p: f64, cap: Option<f64>) -> Vec<usize> {
    let Some(cap) = cap else { return m_list.to_vec() };
    let kept: Vec<usize> = m_list.iter().copied().filter(|&m| 0.5 * p.powf(m as f64) >= cap).collect();
    if kept.len() >= 2 {
        kept
    } else {
        m_list.iter().copied().take(2).collect()
    }
}

/// `E = E_G (G^dag G~)`.
pub fn average_noise(gs: &GateSet) -> Result<SuperOp> {
    let maps = gs
        .group()
        .ids()
        .map(|g| gs.group().ideal(g).adjoint().compose(gs.noisy(g)))
        .collect::<Result<Vec<_>>>()?;
    SuperOp::mean(&maps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    /// `E_G ||G^dag G~ - E||_{1->1}`
    pub gamma: f64,
    #[serde(rename = "r_of_E")]
    pub r_of_e: f64,
    /// `f_m - B` used for the systematic uncertainty.
    pub f_m_minus_b: f64,
    /// `gamma / (2 (f_m - B))`
    pub systematic_dr: f64,
    /// `systematic_dr / r(E)`
    pub ratio: f64,
    pub per_gate: Vec<f64>,
}

impl GammaReport {
    /// `C(m + 1, k) gamma^k`, the bound on the `k`-th order term at length `m`.
    pub fn kth_order_bound(&self, m: usize, k: usize) -> f64 {
        binomial(m + 1, k) * self.gamma.powi(k as i32)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `gamma` and `r(E)` of a qubit gate set. `f_m_minus_b` is `A` in the linear
/// regime (0.5 for ideal SPAM).
pub fn first_order_gamma(gs: &GateSet, f_m_minus_b: f64) -> Result<GammaReport> {
    const OP: &str = "first_order_gamma";
    if gs.dim() != 2 {
        return Err(Error::UnsupportedDimension { op: OP, dim: gs.dim() });
    }
    if f_m_minus_b == 0.0 {
        return Err(Error::validation(OP, "f_m - B must be nonzero"));
    }
    let e = average_noise(gs)?;
    let per_gate = gs
        .group()
        .ids()
        .map(|g| {
            let d = gs.group().ideal(g).adjoint().compose(gs.noisy(g))?.sub(&e)?;
            Ok(induced_1to1_norm(&d)?.value)
        })
        .collect::<Result<Vec<_>>>()?;
    let gamma = per_gate.iter().sum::<f64>() / per_gate.len() as f64;
    let r_of_e = e.infidelity();
    let systematic_dr = gamma / (2.0 * f_m_minus_b);
    Ok(GammaReport { gamma, r_of_e, f_m_minus_b, systematic_dr, ratio: systematic_dr / r_of_e, per_gate })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub nu: f64,
    pub theta: f64,
    pub gamma_analytic: f64,
    #[serde(rename = "r_of_E_analytic")]
    pub r_of_e_analytic: f64,
    pub ratio: f64,
}

/// Closed forms for the half-rotated depolarizing model:
/// `gamma = nu |sin(theta/2)|`, `r(E) = (3 - 2 nu - nu cos theta)/6`, and
/// `ratio = gamma / (2 (f_m - B)) / r(E)` with `f_m - B = 0.5`.
pub fn counterexample_analytics(nu: f64, theta: f64) -> Result<CounterexampleReport> {
    const OP: &str = "counterexample_analytics";
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::validation(OP, format!("nu = {nu} outside (0, 1]")));
    }
    if !(0.0..FRAC_PI_2).contains(&theta) {
        return Err(Error::validation(OP, format!("theta = {theta} outside [0, pi/2)")));
    }
    let gamma = nu * (theta / 2.0).sin().abs();
    let r = (3.0 - 2.0 * nu - nu * theta.cos()) / 6.0;
    let ratio = if gamma == 0.0 { 0.0 } else { gamma / (2.0 * 0.5) / r };
    Ok(CounterexampleReport { nu, theta, gamma_analytic: gamma, r_of_e_analytic: r, ratio })
}
