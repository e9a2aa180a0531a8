//! Gate-dependence magnitudes `delta_1`, `delta_2` and the perturbative bound
//! on `||G~ - G R||` in the gauge `L = I`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Decomposition;
use crate::chanalg::{induced_1to1_norm_on_image, OperatorVec, SuperOp};
use crate::error::{Error, Result};
use crate::noise::GateSet;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaReport {
    /// `Delta_G = G~ - L G R`, indexed by gate.
    pub deltas: Vec<SuperOp>,
    /// `||Delta_G||_{1->1}` over gauge images of pure states.
    pub induced: Vec<f64>,
    pub delta1: f64,
    pub delta2: f64,
    /// `||rho||_1` and `||Q||_1` in the working gauge.
    pub rho_norm: f64,
    pub q_norm: f64,
    /// Filled in when the gate set is in the `L = I` gauge and the bound is
    /// not vacuous.
    pub thm2_bound: Option<f64>,
}

impl DeltaReport {
    /// `delta_1 delta_2^m`, the bound on the deviation from `A p^m + B t^m`.
    pub fn epsilon_bound(&self, m: usize) -> f64 {
        self.delta1 * self.delta2.powi(m as i32)
    }
}

/// `Delta_G`, `delta_1 = max_G ||Delta_G||_{1->1} ||rho||_1 ||Q||_1` and
/// `delta_2 = E ||Delta_G||`, in the gauge of `gs`. `rho` and `Q` are given in
/// the physical frame.
pub fn deltas(gs: &GateSet, dec: &Decomposition, rho: &OperatorVec, q: &OperatorVec) -> Result<DeltaReport> {
    const OP: &str = "deltas";
    if dec.dim() != gs.dim() {
        return Err(Error::DimensionMismatch { op: OP, left: dec.dim(), right: gs.dim() });
    }
    let image = gs.frame().try_inverse().ok_or(Error::Gauge { op: OP, cond: f64::INFINITY })?;
    let group = gs.group();
    let deltas = group
        .ids()
        .map(|g| gs.noisy(g).sub(&dec.gate_dependent_free_part(group.ideal(g))?))
        .collect::<Result<Vec<_>>>()?;
    let (induced, op_norms): (Vec<f64>, Vec<f64>) = deltas
        .par_iter()
        .map(|d| Ok((induced_1to1_norm_on_image(d, &image)?.value, d.operator_norm())))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();

    let rho_w = gs.state_in_frame(rho)?;
    let q_w = gs.observable_in_frame(q)?;
    let rho_norm = rho_w.trace_norm();
    let q_norm = q_w.trace_norm();
    let delta1 = induced.iter().copied().fold(0.0, f64::max) * rho_norm * q_norm;
    let delta2 = op_norms.iter().sum::<f64>() / op_norms.len() as f64;

    let in_i_gauge = dec.l.max_abs_diff(&SuperOp::identity(gs.dim())) <= 1e-8;
    let thm2 = if in_i_gauge { thm2_bound(gs, dec).ok().map(|b| b.bound) } else { None };
    Ok(DeltaReport { deltas, induced, delta1, delta2, rho_norm, q_norm, thm2_bound: thm2 })
}

/// Right-hand side of
/// `||G~ - G R|| <= ||G~ - G D|| + ||E(G^dag G~) - D|| / (1 - E||G~ - G D|| ||D^{-1}||)`
/// with `D = D_{p,t}`, for a gate set in the gauge `L = I`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Thm2Bound {
    /// `||G~ - G D||` per gate.
    pub first: Vec<f64>,
    /// `||E(G^dag G~) - D||`.
    pub numerator: f64,
    /// `E ||G~ - G D||`.
    pub mean_first: f64,
    /// `||D_{1/p,1/t}|| = max(1/|p|, 1/|t|)`.
    pub inverse_norm: f64,
    pub denominator: f64,
    /// Bound on `||G~ - G R||` per gate.
    pub per_gate: Vec<f64>,
    /// Largest per-gate bound.
    pub bound: f64,
}

pub fn thm2_bound(gs: &GateSet, dec: &Decomposition) -> Result<Thm2Bound> {
    const OP: &str = "thm2_bound";
    let off = dec.l.max_abs_diff(&SuperOp::identity(gs.dim()));
    if off > 1e-8 {
        return Err(Error::validation(OP, format!("gate set is not in the L = I gauge (|L - I| = {off:e})")));
    }
    let group = gs.group();
    let dep = dec.depolarizing();
    let first = group
        .ids()
        .map(|g| Ok(gs.noisy(g).sub(&group.ideal(g).compose(&dep)?)?.operator_norm()))
        .collect::<Result<Vec<_>>>()?;
    let twirled = group
        .ids()
        .map(|g| group.ideal(g).adjoint().compose(gs.noisy(g)))
        .collect::<Result<Vec<_>>>()?;
    let numerator = SuperOp::mean(&twirled)?.sub(&dep)?.operator_norm();
    let mean_first = first.iter().sum::<f64>() / first.len() as f64;
    let inverse_norm = (1.0 / dec.p.abs()).max(1.0 / dec.t.abs());
    let denominator = 1.0 - mean_first * inverse_norm;
    if !(denominator > 0.0) {
        return Err(Error::BoundVacuous { op: OP, denominator });
    }
    let per_gate: Vec<f64> = first.iter().map(|f| f + numerator / denominator).collect();
    let bound = per_gate.iter().copied().fold(0.0, f64::max);
    Ok(Thm2Bound { first, numerator, mean_first, inverse_norm, denominator, per_gate, bound })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::decomp::{gauge_to_l_identity, solve_lr};
    use crate::groups::GroupTable;
    use crate::noise::{gate_independent_gateset, random_unitary_gateset, Placement};

    fn t_pauli() -> Arc<GroupTable> {
        Arc::new(GroupTable::t_pauli().unwrap())
    }

    fn in_i_gauge(r: f64, seed: u64) -> (GateSet, Decomposition) {
        let gs = random_unitary_gateset(t_pauli(), r, seed).unwrap();
        let dec = solve_lr(&gs).unwrap();
        gauge_to_l_identity(&gs, &dec).unwrap()
    }

    #[test]
    fn gate_independent_has_no_deltas() {
        let gs = gate_independent_gateset(t_pauli(), Placement::Right(SuperOp::depolarizing(0.95, 1.0, 2))).unwrap();
        let dec = solve_lr(&gs).unwrap();
        let rho = OperatorVec::ground_state(2);
        let rep = deltas(&gs, &dec, &rho, &rho).unwrap();
        assert!(rep.delta1 <= 1e-10 && rep.delta2 <= 1e-10);
        assert!(rep.deltas.iter().all(|d| d.mat().amax() <= 1e-10));
        let b = thm2_bound(&gs, &dec).unwrap();
        assert!(b.bound.abs() < 1e-12);
    }

    #[test]
    fn delta2_is_small_for_weak_noise() {
        let (gs, dec) = in_i_gauge(1e-2, 21);
        let rho = OperatorVec::ground_state(2);
        let rep = deltas(&gs, &dec, &rho, &rho).unwrap();
        assert!(rep.delta2 > 0.0 && rep.delta2 <= 1.0, "{}", rep.delta2);
        assert!(rep.thm2_bound.is_some());
        for (i, d) in rep.deltas.iter().enumerate() {
            assert!(rep.induced[i] <= 2.0 * d.operator_norm() + 1e-12);
        }
    }

    #[test]
    fn thm2_inequality_holds() {
        let (gs, dec) = in_i_gauge(1e-4, 22);
        let b = thm2_bound(&gs, &dec).unwrap();
        let group = gs.group();
        for g in group.ids() {
            let lhs = gs.noisy(g).sub(&group.ideal(g).compose(&dec.r).unwrap()).unwrap().operator_norm();
            assert!(lhs < b.per_gate[g.0], "{lhs} vs {}", b.per_gate[g.0]);
        }
    }

    #[test]
    fn thm2_vacuous_for_strong_noise() {
        let (gs, dec) = in_i_gauge(0.3, 23);
        assert!(matches!(thm2_bound(&gs, &dec), Err(Error::BoundVacuous { .. })));
    }

    #[test]
    fn thm2_requires_identity_gauge() {
        let gs = random_unitary_gateset(t_pauli(), 1e-2, 24).unwrap();
        let dec = solve_lr(&gs).unwrap();
        assert!(dec.l.max_abs_diff(&SuperOp::identity(2)) > 1e-8);
        assert!(thm2_bound(&gs, &dec).is_err());
    }
}
