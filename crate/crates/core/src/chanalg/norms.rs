//! Operator, trace and induced trace norms.
//!
//! The induced norm `||C||_{1->1}` is the supremum of `||C(M)||_1` over
//! positive semidefinite `M` with unit trace. The trace norm of the output is
//! convex in the input, so the supremum is attained at a pure state and for a
//! qubit it is a maximization over the Bloch sphere. Note that this is the
//! PSD-restricted norm, which can be smaller than the supremum over all
//! trace-norm-one Hermitian inputs.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DVector;

use super::{CMatrix, OperatorVec, SuperOp};
use crate::error::{Error, Result};

const AZIMUTH_STEPS: usize = 96;
const POLAR_STEPS: usize = 48;
const REFINE_ITERATIONS: usize = 30;

/// Largest singular value of the transfer matrix.
pub fn operator_norm(c: &SuperOp) -> f64 {
    c.mat().clone().svd(false, false).singular_values.max()
}

/// `||M||_1 = tr sqrt(M^dag M)`.
pub fn trace_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.sum()
}

/// Trace norm of the Hermitian qubit operator with Pauli-basis coordinates
/// `v`. Its eigenvalues are `(v_0 +- |v_xyz|)/sqrt 2`.
pub fn qubit_hermitian_trace_norm(v: &[f64]) -> f64 {
    let r = (v[1] * v[1] + v[2] * v[2] + v[3] * v[3]).sqrt();
    SQRT_2 * v[0].abs().max(r)
}

/// Maximum of an induced-norm objective and the Bloch vector attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InducedNorm {
    pub value: f64,
    pub argmax: [f64; 3],
}

/// `||C||_{1->1}` over pure qubit inputs.
pub fn induced_1to1_norm(c: &SuperOp) -> Result<InducedNorm> {
    if c.dim() != 2 {
        return Err(Error::UnsupportedDimension { op: "induced_1to1_norm", dim: c.dim() });
    }
    let m = c.mat().clone();
    Ok(maximize_on_sphere(|n| {
        let psi = OperatorVec::qubit_pure_state(n);
        qubit_hermitian_trace_norm((&m * psi.vec()).as_slice())
    }))
}

/// `max_psi ||C(F psi)||_1 / ||F psi||_1` over pure qubit `psi`.
///
/// Used when the working frame is a gauge image `F` of the physical one: the
/// admissible inputs are images of pure states, which need not be positive.
/// With `F = I` this equals [`induced_1to1_norm`].
pub fn induced_1to1_norm_on_image(c: &SuperOp, frame: &SuperOp) -> Result<InducedNorm> {
    const OP: &str = "induced_1to1_norm_on_image";
    if c.dim() != 2 {
        return Err(Error::UnsupportedDimension { op: OP, dim: c.dim() });
    }
    if frame.dim() != 2 {
        return Err(Error::DimensionMismatch { op: OP, left: c.dim(), right: frame.dim() });
    }
    let f = frame.mat().clone();
    let cf = c.mat() * &f;
    Ok(maximize_on_sphere(|n| {
        let psi = OperatorVec::qubit_pure_state(n);
        let input: DVector<f64> = &f * psi.vec();
        let denom = qubit_hermitian_trace_norm(input.as_slice());
        if denom == 0.0 {
            return 0.0;
        }
        qubit_hermitian_trace_norm((&cf * psi.vec()).as_slice()) / denom
    }))
}

fn bloch(azimuth: f64, polar: f64) -> [f64; 3] {
    let (sp, cp) = polar.sin_cos();
    let (sa, ca) = azimuth.sin_cos();
    [sp * ca, sp * sa, cp]
}

/// Grid search followed by a step-halving coordinate search. The returned
/// value never decreases during refinement.
fn maximize_on_sphere(f: impl Fn([f64; 3]) -> f64) -> InducedNorm {
    let da = 2.0 * PI / AZIMUTH_STEPS as f64;
    let dp = PI / POLAR_STEPS as f64;
    let eval = |a: f64, p: f64| f(bloch(a, p));

    let mut best = (0.0, 0.0, eval(0.0, 0.0));
    let south = eval(0.0, PI);
    if south > best.2 {
        best = (0.0, PI, south);
    }
    for i in 0..AZIMUTH_STEPS {
        let a = i as f64 * da;
        for j in 0..POLAR_STEPS {
            let p = (j as f64 + 0.5) * dp;
            let v = eval(a, p);
            if v > best.2 {
                best = (a, p, v);
            }
        }
    }

    let (mut a, mut p, mut v) = best;
    let (mut ha, mut hp) = (da, dp);
    for _ in 0..REFINE_ITERATIONS {
        for (na, np) in [(a + ha, p), (a - ha, p)] {
            let nv = eval(na, np);
            if nv > v {
                (a, p, v) = (na, np, nv);
            }
        }
        for (na, np) in [(a, p + hp), (a, p - hp)] {
            let nv = eval(na, np);
            if nv > v {
                (a, p, v) = (na, np, nv);
            }
        }
        ha *= 0.5;
        hp *= 0.5;
    }
    InducedNorm { value: v, argmax: bloch(a, p) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanalg::{gates, C64};
    use crate::noise::{haar_su2, random_unitary_mixture};
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn basic_values() {
        assert!((operator_norm(&SuperOp::identity(2)) - 1.0).abs() < 1e-15);
        let m = CMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-2.0, 0.0)]));
        assert!((trace_norm(&m) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn qubit_closed_form_matches_svd() {
        let basis = crate::chanalg::OperatorBasis::pauli();
        for v in [[0.3, 0.1, -0.4, 0.2], [0.05, 0.9, 0.0, -0.3], [-0.7, 0.0, 0.0, 0.0]] {
            let dv = DVector::from_row_slice(&v);
            let a = trace_norm(&basis.operator(&dv));
            assert!((a - qubit_hermitian_trace_norm(&v)).abs() < 1e-14);
        }
    }

    #[test]
    fn z_rotation_difference_norm() {
        for (nu, theta) in [(0.99, 0.09), (1.0, 0.5), (0.9, 1.2)] {
            let z = SuperOp::from_unitary(&gates::z_theta(theta)).unwrap();
            let d = SuperOp::depolarizing(nu, 1.0, 2);
            let diff = d.compose(&z).unwrap().sub(&d).unwrap();
            let got = induced_1to1_norm(&diff).unwrap();
            let want = 2.0 * nu * (theta / 2.0).sin().abs();
            assert!((got.value - want).abs() < 1e-8, "{} vs {want}", got.value);
            // Attained in the xy plane.
            assert!(got.argmax[2].abs() < 1e-3);
        }
    }

    #[test]
    fn channels_have_unit_induced_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let c = random_unitary_mixture(&mut rng, 3);
            assert!((induced_1to1_norm(&c).unwrap().value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dominates_every_sampled_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = SuperOp::from_matrix(2, DMatrix::from_fn(4, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.1 - 0.2))
            .unwrap();
        let norm = induced_1to1_norm(&c).unwrap().value;
        for _ in 0..200 {
            let u = haar_su2(&mut rng);
            let zero = OperatorVec::ground_state(2);
            let psi = SuperOp::from_unitary(&u).unwrap().apply(&zero).unwrap();
            assert!(c.apply(&psi).unwrap().trace_norm() <= norm + 1e-12);
        }
    }

    #[test]
    fn image_norm_reduces_to_plain_norm() {
        let c = SuperOp::depolarizing(0.3, 0.8, 2);
        let a = induced_1to1_norm(&c).unwrap().value;
        let b = induced_1to1_norm_on_image(&c, &SuperOp::identity(2)).unwrap().value;
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn unsupported_dimension() {
        assert!(matches!(
            induced_1to1_norm(&SuperOp::identity(3)),
            Err(Error::UnsupportedDimension { .. })
        ));
    }
}
