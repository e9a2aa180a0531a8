//! Fast invariant checks behind `gdrb verify`.

use std::path::Path;
use std::sync::Arc;

use gdrb::analysis::{counterexample_analytics, first_order_gamma, fit_free};
use gdrb::chanalg::{OperatorVec, SuperOp};
use gdrb::decomp::{deltas, gauge_to_l_identity, gauge_transform, solve_lr, thm2_bound};
use gdrb::groups::{GroupKind, GroupTable};
use gdrb::noise::{depol_z_gateset, gate_independent_gateset, random_unitary_gateset, Placement};
use gdrb::rbsim::{brute_force_average, brute_force_delta_term, theory_curve, DecayDataset, DecayRow};
use gdrb::rng::{child_seed, Domain};

use crate::config::RunConfig;
use crate::CliError;

type Check = (&'static str, Box<dyn Fn(u64) -> gdrb::Result<(bool, String)>>);

fn group(kind: GroupKind) -> gdrb::Result<Arc<GroupTable>> {
    Ok(Arc::new(GroupTable::build(kind)?))
}

fn checks() -> Vec<Check> {
    vec![
        (
            "two-design twirl",
            Box::new(|seed| {
                let a = group(GroupKind::TPauli)?.verify_two_design(100, 1e-12, seed)?;
                let b = group(GroupKind::Clifford)?.verify_two_design(100, 1e-12, seed)?;
                Ok((a.max(b) <= 1e-12, format!("residual {:.1e}", a.max(b))))
            }),
        ),
        (
            "gate-independent recovery",
            Box::new(|_| {
                let gs = gate_independent_gateset(
                    group(GroupKind::TPauli)?,
                    Placement::Right(SuperOp::depolarizing(0.99, 1.0, 2)),
                )?;
                let dec = solve_lr(&gs)?;
                let err = (dec.p - 0.99).abs().max((dec.t - 1.0).abs());
                Ok((err <= 1e-12, format!("|p - 0.99|, |t - 1| <= {err:.1e}")))
            }),
        ),
        (
            "exact identity m = 1..3",
            Box::new(|seed| {
                let rho = OperatorVec::ground_state(2);
                let gs = random_unitary_gateset(group(GroupKind::TPauli)?, 1e-2, seed)?;
                let dec = solve_lr(&gs)?;
                let (gs_i, dec_i) = gauge_to_l_identity(&gs, &dec)?;
                let rep = deltas(&gs_i, &dec_i, &rho, &rho)?;
                let curve = theory_curve(&dec_i, &rep, &rho, &rho, &[1, 2, 3])?;
                let mut worst = 0.0_f64;
                let mut within = true;
                for pt in &curve.points {
                    let eps = brute_force_average(&gs, pt.m, &rho, &rho)? - pt.value;
                    worst = worst.max((eps - brute_force_delta_term(&gs_i, &dec_i, pt.m, &rho, &rho)?).abs());
                    within &= eps.abs() <= pt.bound;
                }
                Ok((within && worst <= 1e-10, format!("identity error {worst:.1e}")))
            }),
        ),
        (
            "gauge invariance",
            Box::new(|seed| {
                let gs = random_unitary_gateset(group(GroupKind::TPauli)?, 1e-2, seed)?;
                let dec = solve_lr(&gs)?;
                let other = random_unitary_gateset(group(GroupKind::TPauli)?, 1e-2, child_seed(seed, Domain::Gauge, 0))?;
                // any invertible map works as a gauge; a noisy unitary is well conditioned
                let s = other.noisy(other.group().identity()).clone();
                let moved = solve_lr(&gauge_transform(&gs, &s)?)?;
                let err = (moved.p - dec.p).abs().max((moved.t - dec.t).abs());
                Ok((err <= 1e-10, format!("change {err:.1e}")))
            }),
        ),
        (
            "perturbative bound on G R",
            Box::new(|seed| {
                let gs = random_unitary_gateset(group(GroupKind::TPauli)?, 1e-3, seed)?;
                let dec = solve_lr(&gs)?;
                let (gs_i, dec_i) = gauge_to_l_identity(&gs, &dec)?;
                let b = thm2_bound(&gs_i, &dec_i)?;
                let g = gs_i.group();
                let mut lhs = 0.0_f64;
                for id in g.ids() {
                    lhs = lhs.max(gs_i.noisy(id).sub(&g.ideal(id).compose(&dec_i.r)?)?.operator_norm());
                }
                Ok((lhs < b.bound, format!("{lhs:.3e} < {:.3e}", b.bound)))
            }),
        ),
        (
            "counterexample closed forms",
            Box::new(|_| {
                let gs = depol_z_gateset(group(GroupKind::Clifford)?, 0.99, 0.09, None)?;
                let rep = first_order_gamma(&gs, 0.5)?;
                let ana = counterexample_analytics(0.99, 0.09)?;
                let err = (rep.gamma - ana.gamma_analytic).abs();
                let ok = err <= 1e-6 && (rep.r_of_e - ana.r_of_e_analytic).abs() <= 1e-12;
                Ok((ok && (7.0..=10.0).contains(&rep.ratio), format!("ratio {:.3}", rep.ratio)))
            }),
        ),
        (
            "free fit on exact data",
            Box::new(|_| {
                let (a, b, p): (f64, f64, f64) = (0.4, 0.45, 0.97);
                let rows = (1..=40)
                    .map(|m| DecayRow { m: 4 * m, mean: a * p.powi(4 * m as i32) + b, variance: 0.0, num_sequences: 100 })
                    .collect();
                let fit = fit_free(&DecayDataset::new(rows)?)?;
                let err = (fit.p_est - p).abs().max((fit.a_est - a).abs()).max((fit.b_est - b).abs());
                Ok((err <= 1e-8, format!("max error {err:.1e}")))
            }),
        ),
        (
            "SuperOp JSON round trip",
            Box::new(|seed| {
                let gs = random_unitary_gateset(group(GroupKind::TPauli)?, 1e-2, seed)?;
                let s = gs.noisy(gs.group().identity());
                let back: SuperOp = serde_json::from_str(&serde_json::to_string(s)?)?;
                Ok((&back == s, "bit-faithful".into()))
            }),
        ),
    ]
}

pub fn run(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let mut table = String::new();
    let mut failed = 0;
    for (i, (name, check)) in checks().iter().enumerate() {
        let seed = child_seed(cfg.seed, Domain::TestChannels, i as u32);
        let (status, detail) = match check(seed) {
            Ok((true, d)) => ("PASS", d),
            Ok((false, d)) => ("FAIL", d),
            Err(e) => ("FAIL", e.to_string()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        table.push_str(&format!("{name:<30} {status}  {detail}\n"));
    }
    match out {
        Some(p) => std::fs::write(p, &table).map_err(|e| CliError::Io(format!("writing {}: {e}", p.display())))?,
        None => print!("{table}"),
    }
    if failed > 0 {
        return Err(CliError::Checks(failed));
    }
    Ok(())
}
