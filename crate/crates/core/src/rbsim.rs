//! Randomized benchmarking sequences.
//!
//! A sequence is `m` uniformly random group elements followed by the element
//! that inverts their product. Every one of the `m + 1` operations is applied
//! through its noisy implementation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chanalg::{OperatorVec, SuperOp};
use crate::decomp::{DeltaReport, Decomposition};
use crate::error::{Error, Result};
use crate::groups::{GateId, GroupTable};
use crate::noise::GateSet;
use crate::rng::{self, Domain};

/// Largest number of sequences `|G|^m` that [`brute_force_average`] enumerates.
pub const BRUTE_FORCE_CAP: f64 = 1e7;

/// `4, 8, ..., 2048`.
pub fn default_m_list() -> Vec<usize> {
    (2..=11).map(|k| 1 << k).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub gates: Vec<GateId>,
    pub inverse: GateId,
}

impl SequenceSpec {
    pub fn m(&self) -> usize {
        self.gates.len()
    }

    /// Product of the ideal maps of the whole sequence, inverse included.
    pub fn ideal_product(&self, group: &GroupTable) -> Result<SuperOp> {
        let ops: Vec<&SuperOp> =
            std::iter::once(self.inverse).chain(self.gates.iter().rev().copied()).map(|g| group.ideal(g)).collect();
        SuperOp::compose_all(ops)
    }
}

pub fn sample_sequence<R: Rng + ?Sized>(group: &GroupTable, m: usize, rng: &mut R) -> Result<SequenceSpec> {
    if m == 0 {
        return Err(Error::validation("sample_sequence", "m must be at least 1"));
    }
    let n = group.order();
    let gates: Vec<GateId> = (0..m).map(|_| GateId(rng.random_range(0..n))).collect();
    let inverse = group.sequence_inverse(&gates);
    Ok(SequenceSpec { gates, inverse })
}

fn check_spam(op: &'static str, gs: &GateSet, rho: &OperatorVec, q: &OperatorVec) -> Result<()> {
    for v in [rho, q] {
        if v.dim() != gs.dim() {
            return Err(Error::DimensionMismatch { op, left: v.dim(), right: gs.dim() });
        }
    }
    Ok(())
}

/// `<<Q| G~_{m+1} ... G~_1 |rho>>`, with `rho`, `Q` in the gate set's frame.
pub fn survival_probability(gs: &GateSet, seq: &SequenceSpec, rho: &OperatorVec, q: &OperatorVec) -> Result<f64> {
    check_spam("survival_probability", gs, rho, q)?;
    let mut work = Workspace::new(rho.vec().len());
    Ok(work.survival(gs.noisy_all(), seq, rho.vec(), q.vec()))
}

struct Workspace {
    a: DVector<f64>,
    b: DVector<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self { a: DVector::zeros(n), b: DVector::zeros(n) }
    }

    fn survival(&mut self, maps: &[SuperOp], seq: &SequenceSpec, rho: &DVector<f64>, q: &DVector<f64>) -> f64 {
        self.a.copy_from(rho);
        for &g in seq.gates.iter().chain(std::iter::once(&seq.inverse)) {
            self.b.gemv(1.0, maps[g.0].mat(), &self.a, 0.0);
            std::mem::swap(&mut self.a, &mut self.b);
        }
        q.dot(&self.a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub m: usize,
    pub mean: f64,
    pub variance: f64,
    pub num_sequences: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DecayDataset {
    pub rows: Vec<DecayRow>,
}

impl DecayDataset {
    pub fn new(rows: Vec<DecayRow>) -> Result<Self> {
        for r in &rows {
            if !(r.mean.is_finite() && r.variance.is_finite() && r.variance >= 0.0) {
                return Err(Error::validation("DecayDataset::new", format!("bad row at m = {}", r.m)));
            }
        }
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows with `m >= min_m`.
    pub fn with_min_m(&self, min_m: usize) -> Self {
        Self { rows: self.rows.iter().filter(|r| r.m >= min_m).copied().collect() }
    }

    /// Variances with zeros replaced by the smallest positive variance (or 1
    /// when none is positive).
    pub fn clamped_variances(&self) -> Vec<f64> {
        let floor = self
            .rows
            .iter()
            .map(|r| r.variance)
            .filter(|&v| v > 0.0)
            .fold(f64::INFINITY, f64::min);
        let floor = if floor.is_finite() { floor } else { 1.0 };
        self.rows.iter().map(|r| if r.variance > 0.0 { r.variance } else { floor }).collect()
    }
}

/// Sum with `O(log n)` error growth; the association order depends only on
/// the length, so results are reproducible.
pub(crate) fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean and unbiased variance.
pub(crate) fn mean_variance(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = pairwise_sum(x) / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
    (mean, pairwise_sum(&dev) / (n - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Serial,
    Parallel,
}

/// Mean and variance of the survival probability over `n_seq` random
/// sequences for each `m`. `rho` and `Q` are physical-frame operators. The
/// sequence with index `s` at length `m` uses the stream keyed by
/// `(seed, m, s)`.
pub fn run_experiment(
    gs: &GateSet,
    m_list: &[usize],
    n_seq: usize,
    rho: &OperatorVec,
    q: &OperatorVec,
    seed: u64,
) -> Result<DecayDataset> {
    run_experiment_with(gs, m_list, n_seq, rho, q, seed, Schedule::Parallel)
}

pub fn run_experiment_with(
    gs: &GateSet,
    m_list: &[usize],
    n_seq: usize,
    rho: &OperatorVec,
    q: &OperatorVec,
    seed: u64,
    schedule: Schedule,
) -> Result<DecayDataset> {
    const OP: &str = "run_experiment";
    check_spam(OP, gs, rho, q)?;
    if n_seq < 2 {
        return Err(Error::validation(OP, "need at least 2 sequences per length"));
    }
    if m_list.is_empty() || m_list.contains(&0) {
        return Err(Error::validation(OP, "sequence lengths must be a non-empty list of positive integers"));
    }
    let mut seen = m_list.to_vec();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::validation(OP, "sequence lengths must be distinct"));
    }
    if m_list.iter().any(|&m| m > u32::MAX as usize) || n_seq > u32::MAX as usize {
        return Err(Error::validation(OP, "sequence length or count too large"));
    }

    let rho_w = gs.state_in_frame(rho)?;
    let q_w = gs.observable_in_frame(q)?;
    let group = gs.group();
    let eval = |&(m, s): &(usize, usize)| -> f64 {
        let mut rng = rng::stream(seed, Domain::Sequences, m as u32, s as u32);
        let seq = sample_sequence(group, m, &mut rng).expect("m >= 1 checked above");
        Workspace::new(rho_w.vec().len()).survival(gs.noisy_all(), &seq, rho_w.vec(), q_w.vec())
    };
    let tasks: Vec<(usize, usize)> = m_list.iter().flat_map(|&m| (0..n_seq).map(move |s| (m, s))).collect();
    let values: Vec<f64> = match schedule {
        Schedule::Serial => tasks.iter().map(eval).collect(),
        Schedule::Parallel => tasks.par_iter().map(eval).collect(),
    };

    let rows = m_list
        .iter()
        .zip(values.chunks(n_seq))
        .map(|(&m, chunk)| {
            let (mean, variance) = mean_variance(chunk);
            DecayRow { m, mean, variance, num_sequences: n_seq }
        })
        .collect();
    DecayDataset::new(rows)
}

/// Exact uniform average of `<<Q| M_{G_{m+1}} ... M_{G_1} |rho>>` over all
/// `|G|^m` sequences, where `maps[g]` stands in for gate `g`.
fn sequence_average(group: &GroupTable, maps: &[DMatrix<f64>], m: usize, rho: &DVector<f64>, q: &DVector<f64>) -> f64 {
    fn walk(
        group: &GroupTable,
        maps: &[DMatrix<f64>],
        depth: usize,
        product: GateId,
        v: &DVector<f64>,
        q: &DVector<f64>,
    ) -> f64 {
        if depth == 0 {
            return q.dot(&(&maps[group.inv(product).0] * v));
        }
        group
            .ids()
            .map(|g| walk(group, maps, depth - 1, group.mul(g, product), &(&maps[g.0] * v), q))
            .sum()
    }
    let firsts: Vec<f64> = group
        .ids()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&g| walk(group, maps, m - 1, g, &(&maps[g.0] * rho), q))
        .collect();
    pairwise_sum(&firsts) / (group.order() as f64).powi(m as i32)
}

fn check_cap(op: &'static str, group: &GroupTable, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::validation(op, "m must be at least 1"));
    }
    let count = (group.order() as f64).powi(m as i32);
    if count > BRUTE_FORCE_CAP {
        return Err(Error::validation(op, format!("{count:e} sequences exceed the cap of {BRUTE_FORCE_CAP:e}")));
    }
    Ok(())
}

/// Exact average survival probability over every sequence of length `m`.
pub fn brute_force_average(gs: &GateSet, m: usize, rho: &OperatorVec, q: &OperatorVec) -> Result<f64> {
    const OP: &str = "brute_force_average";
    check_spam(OP, gs, rho, q)?;
    check_cap(OP, gs.group(), m)?;
    let maps: Vec<DMatrix<f64>> = gs.noisy_all().iter().map(|s| s.mat().clone()).collect();
    let rho_w = gs.state_in_frame(rho)?;
    let q_w = gs.observable_in_frame(q)?;
    Ok(sequence_average(gs.group(), &maps, m, rho_w.vec(), q_w.vec()))
}

/// `<<Q| E(Delta_{m+1} ... Delta_1) |rho>>` with `Delta_G = G~ - L G R`,
/// enumerated over the same sequences as [`brute_force_average`].
pub fn brute_force_delta_term(
    gs: &GateSet,
    dec: &Decomposition,
    m: usize,
    rho: &OperatorVec,
    q: &OperatorVec,
) -> Result<f64> {
    const OP: &str = "brute_force_delta_term";
    check_spam(OP, gs, rho, q)?;
    check_cap(OP, gs.group(), m)?;
    let group = gs.group();
    let maps = group
        .ids()
        .map(|g| Ok(gs.noisy(g).sub(&dec.gate_dependent_free_part(group.ideal(g))?)?.into_matrix()))
        .collect::<Result<Vec<_>>>()?;
    let rho_w = gs.state_in_frame(rho)?;
    let q_w = gs.observable_in_frame(q)?;
    Ok(sequence_average(group, &maps, m, rho_w.vec(), q_w.vec()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryPoint {
    pub m: usize,
    /// `A p^m + B t^m`
    pub value: f64,
    /// `delta_1 delta_2^m`
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct TheoryCurve {
    pub A: f64,
    pub B: f64,
    pub p: f64,
    pub t: f64,
    pub points: Vec<TheoryPoint>,
}

pub fn theory_curve(
    dec: &Decomposition,
    report: &DeltaReport,
    rho: &OperatorVec,
    q: &OperatorVec,
    m_list: &[usize],
) -> Result<TheoryCurve> {
    let (a, b) = dec.spam_constants(rho, q)?;
    let points = m_list
        .iter()
        .map(|&m| TheoryPoint {
            m,
            value: a * dec.p.powi(m as i32) + b * dec.t.powi(m as i32),
            bound: report.epsilon_bound(m),
        })
        .collect();
    Ok(TheoryCurve { A: a, B: b, p: dec.p, t: dec.t, points })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::chanalg::gates;
    use crate::decomp::{deltas, gauge_to_l_identity, solve_lr};
    use crate::noise::{gate_independent_gateset, random_unitary_gateset, Placement};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t_pauli() -> Arc<GroupTable> {
        Arc::new(GroupTable::t_pauli().unwrap())
    }

    fn depolarized(p: f64) -> GateSet {
        gate_independent_gateset(t_pauli(), Placement::Right(SuperOp::depolarizing(p, 1.0, 2))).unwrap()
    }

    fn zero() -> OperatorVec {
        OperatorVec::ground_state(2)
    }

    #[test]
    fn sampling() {
        let g = t_pauli();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq = sample_sequence(&g, 1, &mut rng).unwrap();
        assert_eq!(seq.inverse, g.inv(seq.gates[0]));
        assert!(sample_sequence(&g, 0, &mut rng).is_err());
        for m in 1..20 {
            let seq = sample_sequence(&g, m, &mut rng).unwrap();
            assert_eq!(seq.m(), m);
            assert!(seq.ideal_product(&g).unwrap().max_abs_diff(&SuperOp::identity(2)) < 1e-12);
        }
    }

    #[test]
    fn first_gate_is_uniform() {
        let g = t_pauli();
        let mut rng = rng::stream(3, Domain::Sequences, 0, 0);
        let n = 100_000;
        let mut counts = vec![0usize; g.order()];
        for _ in 0..n {
            counts[sample_sequence(&g, 1, &mut rng).unwrap().gates[0].0] += 1;
        }
        let p = 1.0 / g.order() as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn survival_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ideal = GateSet::ideal(t_pauli());
        let p0 = 0.97;
        let dep = depolarized(p0);
        let noisy = random_unitary_gateset(t_pauli(), 1e-2, 2).unwrap();
        for m in [1, 5, 40] {
            let seq = sample_sequence(ideal.group(), m, &mut rng).unwrap();
            assert!((survival_probability(&ideal, &seq, &zero(), &zero()).unwrap() - 1.0).abs() < 1e-12);
            let want = 0.5 * p0.powi(m as i32 + 1) + 0.5;
            assert!((survival_probability(&dep, &seq, &zero(), &zero()).unwrap() - want).abs() < 1e-12);
            let s = survival_probability(&noisy, &seq, &zero(), &zero()).unwrap();
            assert!((-1e-12..=1.0 + 1e-12).contains(&s));
        }
    }

    #[test]
    fn experiment_examples() {
        let ds = run_experiment(&GateSet::ideal(t_pauli()), &[1, 4, 16], 10, &zero(), &zero(), 1).unwrap();
        for r in &ds.rows {
            assert!((r.mean - 1.0).abs() < 1e-12 && r.variance < 1e-24);
            assert_eq!(r.num_sequences, 10);
        }
        let p0 = 0.99;
        let ds = run_experiment(&depolarized(p0), &default_m_list(), 20, &zero(), &zero(), 1).unwrap();
        for r in &ds.rows {
            let want = 0.5 * p0.powi(r.m as i32 + 1) + 0.5;
            let sigma = (r.variance / r.num_sequences as f64).sqrt();
            assert!((r.mean - want).abs() <= 3.0 * sigma + 1e-12);
        }
        assert!(run_experiment(&depolarized(p0), &[4], 1, &zero(), &zero(), 1).is_err());
        assert!(run_experiment(&depolarized(p0), &[4, 4], 3, &zero(), &zero(), 1).is_err());
    }

    #[test]
    fn schedule_independence() {
        let gs = random_unitary_gateset(t_pauli(), 1e-2, 5).unwrap();
        let ms = [1, 3, 17, 64];
        let a = run_experiment_with(&gs, &ms, 30, &zero(), &zero(), 9, Schedule::Serial).unwrap();
        let b = run_experiment_with(&gs, &ms, 30, &zero(), &zero(), 9, Schedule::Parallel).unwrap();
        assert_eq!(a, b);
        let c = run_experiment_with(&gs, &ms, 30, &zero(), &zero(), 10, Schedule::Parallel).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn brute_force_examples() {
        assert!((brute_force_average(&GateSet::ideal(t_pauli()), 1, &zero(), &zero()).unwrap() - 1.0).abs() < 1e-12);
        let p0 = 0.93;
        for m in 1..=3 {
            let got = brute_force_average(&depolarized(p0), m, &zero(), &zero()).unwrap();
            assert!((got - (0.5 * p0.powi(m as i32 + 1) + 0.5)).abs() < 1e-12);
        }
        assert!(brute_force_average(&depolarized(p0), 7, &zero(), &zero()).is_err());
    }

    #[test]
    fn brute_force_matches_monte_carlo() {
        let gs = random_unitary_gateset(t_pauli(), 2e-2, 6).unwrap();
        let exact = brute_force_average(&gs, 2, &zero(), &zero()).unwrap();
        let ds = run_experiment(&gs, &[2], 4000, &zero(), &zero(), 3).unwrap();
        let r = ds.rows[0];
        assert!((r.mean - exact).abs() < 4.0 * (r.variance / r.num_sequences as f64).sqrt());
    }

    #[test]
    fn exact_decomposition_identity_and_bound() {
        let rho = zero();
        for (r, seed) in [(1e-3, 7), (1e-2, 8)] {
            let gs = random_unitary_gateset(t_pauli(), r, seed).unwrap();
            let dec = solve_lr(&gs).unwrap();
            let (gs_i, dec_i) = gauge_to_l_identity(&gs, &dec).unwrap();
            let rep = deltas(&gs_i, &dec_i, &rho, &rho).unwrap();
            let curve = theory_curve(&dec_i, &rep, &rho, &rho, &[1, 2, 3]).unwrap();
            for pt in &curve.points {
                let brute = brute_force_average(&gs, pt.m, &rho, &rho).unwrap();
                let eps = brute - pt.value;
                let delta = brute_force_delta_term(&gs_i, &dec_i, pt.m, &rho, &rho).unwrap();
                assert!((eps - delta).abs() < 1e-10, "m={} {eps} {delta}", pt.m);
                assert!(eps.abs() <= pt.bound, "m={} {eps} {}", pt.m, pt.bound);
            }
        }
    }

    #[test]
    fn theory_curve_constants() {
        let rho = zero();
        let dec = solve_lr(&GateSet::ideal(t_pauli())).unwrap();
        let rep = deltas(&GateSet::ideal(t_pauli()), &dec, &rho, &rho).unwrap();
        let c = theory_curve(&dec, &rep, &rho, &rho, &[1, 2]).unwrap();
        assert!((c.A - 0.5).abs() < 1e-10 && (c.B - 0.5).abs() < 1e-10);

        // Unital trace-preserving noise: B is exactly 1/2, A is 1/2 up to O(r).
        let r = 1e-2;
        let gs = random_unitary_gateset(t_pauli(), r, 12).unwrap();
        let dec = solve_lr(&gs).unwrap();
        let rep = deltas(&gs, &dec, &rho, &rho).unwrap();
        let c = theory_curve(&dec, &rep, &rho, &rho, &[1, 2, 4, 8]).unwrap();
        assert!((c.B - 0.5).abs() < 1e-10, "{}", c.B);
        assert!((c.A - 0.5).abs() < 5.0 * r, "{}", c.A);
        if rep.delta2 < 1.0 {
            assert!(c.points.windows(2).all(|w| w[1].bound <= w[0].bound));
        }

        let dep = depolarized(0.95);
        let dec = solve_lr(&dep).unwrap();
        let rep = deltas(&dep, &dec, &rho, &rho).unwrap();
        let c = theory_curve(&dec, &rep, &rho, &rho, &[1, 2, 3]).unwrap();
        for pt in &c.points {
            assert!(pt.bound <= 1e-10);
            assert!((brute_force_average(&dep, pt.m, &rho, &rho).unwrap() - pt.value).abs() < 1e-12);
        }
    }

    /// Builds the inverting gate from the generator bookkeeping
    /// `G_j = T^{a_j} P_{b_j} P_{b_{j-1}} T^{-a_{j-1}}` (with `a_0 = a_{m+1} = 0`,
    /// `P_{b_0} = P_{b_{m+1}} = I`) and checks it against the table inverse.
    #[test]
    fn generator_construction_agrees_with_table() {
        let g = t_pauli();
        let t = gates::t_gate();
        let t_pow = |k: usize| (0..k % 3).fold(gates::identity2(), |acc, _| &acc * &t);
        let paulis = gates::paulis();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for m in 1..=4 {
            for _ in 0..25 {
                let mut a = vec![0usize];
                let mut b = vec![0usize];
                for _ in 0..m {
                    a.push(rng.random_range(0..3));
                    b.push(rng.random_range(0..4));
                }
                a.push(0);
                b.push(0);
                let ids: Vec<GateId> = (1..=m + 1)
                    .map(|j| {
                        let u = t_pow(a[j]) * &paulis[b[j]] * &paulis[b[j - 1]] * t_pow(3 - a[j - 1] % 3);
                        g.find(&SuperOp::from_unitary(&u).unwrap()).expect("element of the group")
                    })
                    .collect();
                assert_eq!(g.sequence_inverse(&ids[..m]), ids[m]);
            }
        }
    }
}
