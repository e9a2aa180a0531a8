//! End-to-end use of the public API on a hand-built Clifford gate set with
//! weakly gate-dependent mixed-unitary noise.

use std::sync::Arc;

use gdrb::chanalg::{OperatorVec, SuperOp};
use gdrb::decomp::{deltas, gauge_to_l_identity, gauge_transform, solve_lr};
use gdrb::groups::GroupTable;
use gdrb::noise::{random_unitary_mixture, GateSet};
use gdrb::rbsim::{brute_force_average, run_experiment, theory_curve};
use gdrb::rng::{stream, Domain};

fn noisy_clifford(weight: f64, seed: u64) -> GateSet {
    let group = Arc::new(GroupTable::clifford().unwrap());
    let noisy = group
        .ids()
        .map(|g| {
            let mut rng = stream(seed, Domain::TestChannels, g.0 as u32, 0);
            let e = SuperOp::identity(2).scale(1.0 - weight).add(&random_unitary_mixture(&mut rng, 3).scale(weight)).unwrap();
            group.ideal(g).compose(&e).unwrap()
        })
        .collect();
    GateSet::new(group, noisy, "clifford mixed-unitary").unwrap()
}

#[test]
fn decay_model_holds_up_to_the_delta_bound() {
    let gs = noisy_clifford(0.02, 1);
    assert!(gs.is_trace_preserving(1e-12));
    let dec = solve_lr(&gs).unwrap();
    assert!(dec.residuals.max() < 1e-10);
    assert!((dec.t - 1.0).abs() < 1e-12);
    assert!(dec.p > 0.9 && dec.p < 1.0);

    let (gs_i, dec_i) = gauge_to_l_identity(&gs, &dec).unwrap();
    let rho = OperatorVec::ground_state(2);
    let rep = deltas(&gs_i, &dec_i, &rho, &rho).unwrap();
    let curve = theory_curve(&dec_i, &rep, &rho, &rho, &[1, 2]).unwrap();
    for pt in &curve.points {
        let exact = brute_force_average(&gs, pt.m, &rho, &rho).unwrap();
        assert!((exact - pt.value).abs() <= pt.bound, "m = {}", pt.m);
    }
}

#[test]
fn physical_quantities_survive_a_gauge_change() {
    let gs = noisy_clifford(0.05, 2);
    let dec = solve_lr(&gs).unwrap();
    let mut rng = stream(2, Domain::Gauge, 0, 0);
    let s = SuperOp::identity(2).scale(0.9).add(&random_unitary_mixture(&mut rng, 2).scale(0.1)).unwrap();
    let moved = gauge_transform(&gs, &s).unwrap();
    let dec_s = solve_lr(&moved).unwrap();
    assert!((dec_s.p - dec.p).abs() < 1e-12);

    let rho = OperatorVec::qubit_pure_state([1.0, 0.0, 0.0]);
    let q = OperatorVec::ground_state(2);
    let (a, b) = dec.spam_constants(&rho, &q).unwrap();
    let (a_s, b_s) = dec_s.spam_constants(&rho, &q).unwrap();
    assert!((a - a_s).abs() < 1e-10 && (b - b_s).abs() < 1e-10);

    // simulated data do not depend on the frame either
    let m_list = [1, 5, 20];
    let plain = run_experiment(&gs, &m_list, 8, &rho, &q, 3).unwrap();
    let framed = run_experiment(&moved, &m_list, 8, &rho, &q, 3).unwrap();
    for (x, y) in plain.rows.iter().zip(&framed.rows) {
        assert!((x.mean - y.mean).abs() < 1e-12);
    }
}
