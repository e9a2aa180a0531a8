//! The decomposition `G~ = L G R + Delta_G` of a noisy gate set.
//!
//! `(p, t)` are the dominant eigenvalues of `E(G_u (x) G~)` and `E(G~)`. The
//! maps `L`, `R` satisfy
//!
//! ```text
//! E(G~ L G^dag) = L D_{p,t},   E(G^dag R G~) = D_{p,t} R,   E(G R L G^dag) = D_{p,t}
//! ```
//!
//! and are unique up to a rescaling that only the product `R L` fixes. We keep
//! `|L>>` at unit 2-norm and `L'` at unit operator norm and put all scaling on
//! `R`.

mod bounds;
pub mod eigen;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use bounds::{deltas, thm2_bound, DeltaReport, Thm2Bound};
pub use eigen::{dominant_real_eigen, eigenvalues, DominantEigen};

use crate::chanalg::{kron, unvec, OperatorVec, SuperOp};
use crate::error::{Error, Result};
use crate::noise::GateSet;

/// Largest condition number accepted for a gauge map.
pub const MAX_GAUGE_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `||E(G~ L G^dag) - L D||`
    pub left: f64,
    /// `||E(G^dag R G~) - D R||`
    pub right: f64,
    /// `||E(G R L G^dag) - D||`
    pub scale: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.left.max(self.right).max(self.scale)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Decomposition {
    pub p: f64,
    pub t: f64,
    #[serde(rename = "L")]
    pub l: SuperOp,
    #[serde(rename = "R")]
    pub r: SuperOp,
    pub residuals: Residuals,
    pub eigengap_p: f64,
    pub eigengap_t: f64,
    /// The eigenvalue nearest to `p` or `t` belongs to a complex pair.
    pub dominant_complex: bool,
    /// Gauge frame of the gate set this was computed from.
    pub frame: SuperOp,
}

impl Decomposition {
    pub fn dim(&self) -> usize {
        self.l.dim()
    }

    pub fn depolarizing(&self) -> SuperOp {
        SuperOp::depolarizing(self.p, self.t, self.dim())
    }

    /// `L G R` for an ideal map `G`.
    pub fn gate_dependent_free_part(&self, ideal: &SuperOp) -> Result<SuperOp> {
        SuperOp::compose_all([&self.l, ideal, &self.r])
    }

    /// SPAM constants of `<<Q| L D^m R |rho>> = A p^m + B t^m` for a physical
    /// state and observable.
    ///
    /// With `tau = tr(R rho)`, `A = <<Q|L|R rho - tau I/d>>` and
    /// `B = tau <<Q|L|I/d>>`; for trace-preserving `R L` products `tau = 1`.
    pub fn spam_constants(&self, rho: &OperatorVec, q: &OperatorVec) -> Result<(f64, f64)> {
        let (rho, q) = self.to_frame(rho, q)?;
        let d = self.dim();
        let v = self.r.apply(&rho)?;
        let tau = v.trace();
        let mixed = OperatorVec::maximally_mixed(d);
        let lq = self.l.adjoint().apply(&q)?;
        let b = tau * lq.inner(&mixed);
        let a = lq.inner(&v.sub(&mixed.scale(tau)));
        Ok((a, b))
    }

    /// Physical-frame `(rho, Q)` expressed in this decomposition's gauge.
    pub fn to_frame(&self, rho: &OperatorVec, q: &OperatorVec) -> Result<(OperatorVec, OperatorVec)> {
        let d = self.dim();
        if rho.dim() != d || q.dim() != d {
            return Err(Error::DimensionMismatch { op: "Decomposition::to_frame", left: d, right: rho.dim().max(q.dim()) });
        }
        let inv = self
            .frame
            .try_inverse()
            .ok_or(Error::Gauge { op: "Decomposition::to_frame", cond: f64::INFINITY })?;
        Ok((inv.apply(rho)?, self.frame.adjoint().apply(q)?))
    }
}

/// `(M_t, M_p)`: the mean of the noisy maps and the mean of
/// `kron(unital_part(G), G~)`.
pub fn average_maps(gs: &GateSet) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = gs.group().order() as f64;
    let d2 = gs.dim() * gs.dim();
    let mut mt = DMatrix::zeros(d2, d2);
    let mut mp = DMatrix::zeros(d2 * d2, d2 * d2);
    for g in gs.group().ids() {
        mt += gs.noisy(g).mat();
        mp += kron(gs.group().ideal(g).unital_part().mat(), gs.noisy(g).mat());
    }
    (mt / n, mp / n)
}

/// Transposed right-hand problem: the mean of `kron(G~, unital_part(G))^T`,
/// whose eigenvectors are `vec(R')`.
fn right_problem(gs: &GateSet) -> DMatrix<f64> {
    let n = gs.group().order() as f64;
    let d4 = gs.dim().pow(4);
    let mut m = DMatrix::zeros(d4, d4);
    for g in gs.group().ids() {
        m += kron(gs.noisy(g).mat(), gs.group().ideal(g).unital_part().mat());
    }
    m.transpose() / n
}

#[allow(non_snake_case)]
pub fn solve_LR(gs: &GateSet) -> Result<Decomposition> {
    solve_lr(gs)
}

/// Solves for `(p, t, L, R)`; see the module documentation.
pub fn solve_lr(gs: &GateSet) -> Result<Decomposition> {
    const OP: &str = "solve_LR";
    let d = gs.dim();
    let d2 = d * d;
    let (mt, mp) = average_maps(gs);

    let et = dominant_real_eigen(&mt)?;
    let ep = dominant_real_eigen(&mp)?;
    let er = dominant_real_eigen(&right_problem(gs))?;
    let (t, p) = (et.value, ep.value);
    if (er.value - p).abs() > 1e-9 * p.abs().max(1.0) {
        return Err(Error::DegenerateSpectrum {
            op: OP,
            msg: format!("left and right problems disagree on p ({p} vs {})", er.value),
        });
    }

    // Trace part: L_vec has unit norm, R_vec is rescaled so <<R|L>> = t.
    let l_vec = et.right.clone();
    let overlap = et.left.dot(&l_vec);
    if overlap.abs() < 1e-14 {
        return Err(Error::Normalization { op: OP, msg: format!("<<R|L>> = {overlap:e}") });
    }
    let r_vec = &et.left * (t / overlap);

    // Traceless part: unit operator norm for L' with tr L' >= 0, then
    // tr(R' L') = p (d^2 - 1).
    let mut l_prime = unvec(&ep.right, d2, d2)?;
    let norm = l_prime.clone().svd(false, false).singular_values.max();
    if norm == 0.0 {
        return Err(Error::Normalization { op: OP, msg: "zero eigenvector for L'".into() });
    }
    l_prime /= norm;
    if l_prime.trace() < 0.0 {
        l_prime.neg_mut();
    }
    let mut r_prime = unvec(&er.right, d2, d2)?;
    let overlap = (&r_prime * &l_prime).trace();
    if overlap.abs() < 1e-14 {
        return Err(Error::Normalization { op: OP, msg: format!("tr(R'L') = {overlap:e}") });
    }
    r_prime *= p * (d2 as f64 - 1.0) / overlap;

    check_structure(OP, &l_prime, &r_prime)?;

    let mut e1 = DVector::zeros(d2);
    e1[0] = 1.0;
    let l = SuperOp::from_matrix(d, &l_vec * e1.transpose() + &l_prime)?;
    let r = SuperOp::from_matrix(d, &e1 * r_vec.transpose() + &r_prime)?;
    let residuals = residuals(gs, &l, &r, p, t)?;
    Ok(Decomposition {
        p,
        t,
        l,
        r,
        residuals,
        eigengap_p: ep.gap,
        eigengap_t: et.gap,
        dominant_complex: ep.nearest_complex || et.nearest_complex,
        frame: gs.frame().clone(),
    })
}

/// `L' |I>> = 0` and `<<I| R' = 0`.
fn check_structure(op: &'static str, l_prime: &DMatrix<f64>, r_prime: &DMatrix<f64>) -> Result<()> {
    let l_col = l_prime.column(0).amax();
    let r_row = r_prime.row(0).amax() / r_prime.amax().max(1.0);
    if l_col > 1e-12 || r_row > 1e-12 {
        return Err(Error::Normalization {
            op,
            msg: format!("eigenvectors violate the trace constraints ({l_col:e}, {r_row:e})"),
        });
    }
    Ok(())
}

fn residuals(gs: &GateSet, l: &SuperOp, r: &SuperOp, p: f64, t: f64) -> Result<Residuals> {
    let dep = SuperOp::depolarizing(p, t, gs.dim());
    let mut left = Vec::with_capacity(gs.group().order());
    let mut right = Vec::with_capacity(gs.group().order());
    let mut scale = Vec::with_capacity(gs.group().order());
    for g in gs.group().ids() {
        let ideal = gs.group().ideal(g);
        let gd = ideal.adjoint();
        left.push(SuperOp::compose_all([gs.noisy(g), l, &gd])?);
        right.push(SuperOp::compose_all([&gd, r, gs.noisy(g)])?);
        scale.push(SuperOp::compose_all([ideal, r, l, &gd])?);
    }
    Ok(Residuals {
        left: SuperOp::mean(&left)?.sub(&l.compose(&dep)?)?.operator_norm(),
        right: SuperOp::mean(&right)?.sub(&dep.compose(r)?)?.operator_norm(),
        scale: SuperOp::mean(&scale)?.sub(&dep)?.operator_norm(),
    })
}

/// `G~ -> S^{-1} G~ S` for every gate. The frame of the result is `frame S`.
pub fn gauge_transform(gs: &GateSet, s: &SuperOp) -> Result<GateSet> {
    const OP: &str = "gauge_transform";
    if s.dim() != gs.dim() {
        return Err(Error::DimensionMismatch { op: OP, left: s.dim(), right: gs.dim() });
    }
    let cond = s.condition_number();
    if !(cond <= MAX_GAUGE_CONDITION) {
        return Err(Error::Gauge { op: OP, cond });
    }
    let inv = s.try_inverse().ok_or(Error::Gauge { op: OP, cond: f64::INFINITY })?;
    let noisy = gs
        .noisy_all()
        .iter()
        .map(|c| SuperOp::compose_all([&inv, c, s]))
        .collect::<Result<Vec<_>>>()?;
    let frame = gs.frame().compose(s)?;
    Ok(GateSet::new(gs.group_arc().clone(), noisy, gs.description())?.with_frame(frame))
}

/// Moves `gs` to the gauge in which `L` is the identity and re-solves there.
///
/// Under `G~ -> S^{-1} G~ S` the solutions move as `L -> S^{-1} L` and
/// `R -> R S`, so the required gauge map is `S = L`.
pub fn gauge_to_l_identity(gs: &GateSet, dec: &Decomposition) -> Result<(GateSet, Decomposition)> {
    const OP: &str = "gauge_to_L_identity";
    let cond = dec.l.condition_number();
    if !(cond <= MAX_GAUGE_CONDITION) {
        return Err(Error::Gauge { op: OP, cond });
    }
    let moved = gauge_transform(gs, &dec.l)?;
    let new = solve_lr(&moved)?;
    let off = new.l.max_abs_diff(&SuperOp::identity(gs.dim()));
    if off > 1e-8 || (new.p - dec.p).abs() > 1e-10 || (new.t - dec.t).abs() > 1e-10 {
        return Err(Error::Normalization {
            op: OP,
            msg: format!(
                "re-solved decomposition is off (|L - I| = {off:e}, dp = {:e}, dt = {:e})",
                new.p - dec.p,
                new.t - dec.t
            ),
        });
    }
    Ok((moved, new))
}

/// Average fidelity of the noise between ideal gates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interpretation {
    pub p: f64,
    pub t: f64,
    pub fidelity: f64,
    pub infidelity: f64,
}

pub fn interpret(dec: &Decomposition) -> Interpretation {
    let d = dec.dim() as f64;
    let fidelity = (dec.p * (d - 1.0) + dec.t) / d;
    Interpretation { p: dec.p, t: dec.t, fidelity, infidelity: 1.0 - fidelity }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::chanalg::gates;
    use crate::groups::GroupTable;
    use crate::noise::{depol_z_gateset, gate_independent_gateset, random_unitary_gateset, Placement};
    use crate::rng::{self, Domain};
    use rand::Rng;

    fn t_pauli() -> Arc<GroupTable> {
        Arc::new(GroupTable::t_pauli().unwrap())
    }

    fn depolarized(p: f64, t: f64) -> GateSet {
        gate_independent_gateset(t_pauli(), Placement::Right(SuperOp::depolarizing(p, t, 2))).unwrap()
    }

    fn random_gauge(seed: u32, size: f64) -> SuperOp {
        let mut rng = rng::stream(5, Domain::Gauge, seed, 0);
        let m = DMatrix::from_fn(4, 4, |i, j| f64::from(u8::from(i == j)) + size * (rng.random::<f64>() - 0.5));
        SuperOp::from_matrix(2, m).unwrap()
    }

    #[test]
    fn average_maps_examples() {
        let (_, mp) = average_maps(&GateSet::ideal(t_pauli()));
        assert!((dominant_real_eigen(&mp).unwrap().value - 1.0).abs() < 1e-12);

        let (mt, mp) = average_maps(&depolarized(0.93, 0.97));
        assert!((dominant_real_eigen(&mp).unwrap().value - 0.93).abs() < 1e-12);
        assert!((dominant_real_eigen(&mt).unwrap().value - 0.97).abs() < 1e-12);

        let gs = random_unitary_gateset(t_pauli(), 1e-2, 3).unwrap();
        let (mt, _) = average_maps(&gs);
        let e = dominant_real_eigen(&mt).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        assert!(e.left.iter().skip(1).all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn gate_independent_recovery() {
        for p0 in [0.9, 0.99, 0.999] {
            let gs = depolarized(p0, 1.0);
            let dec = solve_lr(&gs).unwrap();
            assert!((dec.p - p0).abs() < 1e-12);
            assert!((dec.t - 1.0).abs() < 1e-12);
            assert!(dec.residuals.max() <= 1e-12, "{:?}", dec.residuals);
            for g in gs.group().ids() {
                let lgr = dec.gate_dependent_free_part(gs.group().ideal(g)).unwrap();
                assert!(lgr.max_abs_diff(gs.noisy(g)) < 1e-12);
            }
        }
    }

    #[test]
    fn random_unitary_residuals_and_structure() {
        let gs = random_unitary_gateset(t_pauli(), 1e-3, 11).unwrap();
        let dec = solve_lr(&gs).unwrap();
        assert!(dec.residuals.max() <= 1e-10, "{:?}", dec.residuals);
        assert!(dec.eigengap_p > 1e3 * dec.residuals.max());
        assert!(dec.eigengap_t > 1e3 * dec.residuals.max());

        let l = dec.l.mat();
        let r = dec.r.mat();
        // L = |L>><<I| + L', R = |I>><<R| + R'.
        let l_prime = {
            let mut m = l.clone();
            m.column_mut(0).fill(0.0);
            m
        };
        let r_prime = {
            let mut m = r.clone();
            m.row_mut(0).fill(0.0);
            m
        };
        let l_vec = l.column(0);
        let r_vec = r.row(0);
        assert!((r_vec.dot(&l_vec.transpose()) - dec.t).abs() < 1e-12);
        assert!(((&r_prime * &l_prime).trace() - 3.0 * dec.p).abs() < 1e-12);
        assert!((l_vec.norm() - 1.0).abs() < 1e-12);
        assert!((l_prime.clone().svd(false, false).singular_values.max() - 1.0).abs() < 1e-12);
        assert!(l_prime.trace() >= 0.0);

        // The twirl of R L is D_{p,t}.
        let rl = dec.r.compose(&dec.l).unwrap();
        let tw = gs.group().twirl(&rl).unwrap();
        assert!(tw.max_abs_diff(&dec.depolarizing()) < 1e-12);
    }

    #[test]
    fn bauer_fike_sanity() {
        for (r, seed) in [(1e-3, 1), (1e-2, 2), (5e-2, 3)] {
            let gs = random_unitary_gateset(t_pauli(), r, seed).unwrap();
            let dec = solve_lr(&gs).unwrap();
            let gt = gs.group();
            let twirled: Vec<SuperOp> =
                gt.ids().map(|g| gt.ideal(g).adjoint().compose(gs.noisy(g)).unwrap()).collect();
            let best = SuperOp::mean(&twirled).unwrap().decay_params();
            let dep = best.depolarizing(2);
            let dist: f64 = gt
                .ids()
                .map(|g| gs.noisy(g).sub(&gt.ideal(g).compose(&dep).unwrap()).unwrap().operator_norm())
                .sum::<f64>()
                / gt.order() as f64;
            assert!((dec.p - best.p).abs() <= dist, "{} {} {dist}", dec.p, best.p);
        }
    }

    #[test]
    fn depol_z_departs_from_average_noise_infidelity() {
        let gs = depol_z_gateset(Arc::new(GroupTable::clifford().unwrap()), 0.99, 0.09, None).unwrap();
        let dec = solve_lr(&gs).unwrap();
        assert!(dec.residuals.max() <= 1e-10);
        let r_of_e = (3.0 - 2.0 * 0.99 - 0.99 * 0.09_f64.cos()) / 6.0;
        // Second order in theta: about 1e-4 here.
        assert!((dec.p - (1.0 - 2.0 * r_of_e)).abs() > 1e-5);
    }

    #[test]
    fn gauge_identity_is_a_no_op() {
        let gs = random_unitary_gateset(t_pauli(), 1e-2, 4).unwrap();
        let moved = gauge_transform(&gs, &SuperOp::identity(2)).unwrap();
        for (a, b) in gs.noisy_all().iter().zip(moved.noisy_all()) {
            assert!(a.max_abs_diff(b) < 1e-15);
        }
    }

    #[test]
    fn gauge_invariance_of_p_and_t() {
        let gs = random_unitary_gateset(t_pauli(), 1e-2, 6).unwrap();
        let dec = solve_lr(&gs).unwrap();
        for i in 0..5 {
            let s = random_gauge(i, 0.2);
            let moved = gauge_transform(&gs, &s).unwrap();
            let other = solve_lr(&moved).unwrap();
            assert!((other.p - dec.p).abs() < 1e-10);
            assert!((other.t - dec.t).abs() < 1e-10);
            assert_eq!(moved.frame(), &s);
        }
    }

    #[test]
    fn ill_conditioned_gauge_is_rejected() {
        let gs = GateSet::ideal(t_pauli());
        let s = SuperOp::depolarizing(1e-9, 1.0, 2);
        assert!(matches!(gauge_transform(&gs, &s), Err(Error::Gauge { .. })));
    }

    #[test]
    fn l_identity_gauge() {
        let gs = random_unitary_gateset(t_pauli(), 1e-2, 8).unwrap();
        let dec = solve_lr(&gs).unwrap();
        let (moved, dec_i) = gauge_to_l_identity(&gs, &dec).unwrap();
        assert!(dec_i.l.max_abs_diff(&SuperOp::identity(2)) < 1e-8);
        // E(G R G^dag) = D_{p,t}.
        let gt = moved.group();
        let maps: Vec<SuperOp> = gt
            .ids()
            .map(|g| SuperOp::compose_all([gt.ideal(g), &dec_i.r, &gt.ideal(g).adjoint()]).unwrap())
            .collect();
        assert!(SuperOp::mean(&maps).unwrap().max_abs_diff(&dec_i.depolarizing()) < 1e-9);

        // SPAM constants are frame independent.
        let rho = OperatorVec::ground_state(2);
        let (a0, b0) = dec.spam_constants(&rho, &rho).unwrap();
        let (a1, b1) = dec_i.spam_constants(&rho, &rho).unwrap();
        assert!((a0 - a1).abs() < 1e-9 && (b0 - b1).abs() < 1e-9);
    }

    #[test]
    fn spam_constants_of_depolarizing_noise() {
        let rho = OperatorVec::ground_state(2);
        let dec = solve_lr(&GateSet::ideal(t_pauli())).unwrap();
        let (a, b) = dec.spam_constants(&rho, &rho).unwrap();
        assert!((a - 0.5).abs() < 1e-12 && (b - 0.5).abs() < 1e-12);

        // G D_p: only the traceless part of the last gate's noise reaches Q.
        let dec = solve_lr(&depolarized(0.9, 1.0)).unwrap();
        let (a, b) = dec.spam_constants(&rho, &rho).unwrap();
        assert!((a - 0.45).abs() < 1e-12 && (b - 0.5).abs() < 1e-12);
    }

    #[test]
    fn interpretation() {
        let mut dec = solve_lr(&GateSet::ideal(t_pauli())).unwrap();
        let i = interpret(&dec);
        assert!((i.fidelity - 1.0).abs() < 1e-12 && i.infidelity.abs() < 1e-12);
        dec.p = 0.98;
        dec.t = 1.0;
        assert!((interpret(&dec).infidelity - 0.01).abs() < 1e-15);
        let nu = 0.97;
        let dec = solve_lr(&depolarized(nu, 1.0)).unwrap();
        assert!((interpret(&dec).infidelity - (1.0 - nu) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn clifford_group_decomposes_too() {
        let group = Arc::new(GroupTable::clifford().unwrap());
        let u = gates::exp_z(0.05);
        let e = SuperOp::from_unitary(&u).unwrap();
        let gs = gate_independent_gateset(group, Placement::Left(e.clone())).unwrap();
        let dec = solve_lr(&gs).unwrap();
        assert!((dec.p - e.decay_params().p).abs() < 1e-12);
    }
}
