//! Single-qubit unitaries used throughout the crate.

use std::f64::consts::FRAC_1_SQRT_2;

use super::{CMatrix, C64};

fn mat2(a: C64, b: C64, c: C64, d: C64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[a, b, c, d])
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn im(x: f64) -> C64 {
    C64::new(0.0, x)
}

pub fn identity2() -> CMatrix {
    CMatrix::identity(2, 2)
}

pub fn pauli_x() -> CMatrix {
    mat2(re(0.0), re(1.0), re(1.0), re(0.0))
}

pub fn pauli_y() -> CMatrix {
    mat2(re(0.0), im(-1.0), im(1.0), re(0.0))
}

pub fn pauli_z() -> CMatrix {
    mat2(re(1.0), re(0.0), re(0.0), re(-1.0))
}

/// `I, X, Y, Z` in that order.
pub fn paulis() -> [CMatrix; 4] {
    [identity2(), pauli_x(), pauli_y(), pauli_z()]
}

/// `T = (1/sqrt 2) [[1, -i], [1, i]]`, the order-3 (up to phase) generator of
/// the 12-element group `{T^t P}`.
pub fn t_gate() -> CMatrix {
    let s = FRAC_1_SQRT_2;
    mat2(re(s), im(-s), re(s), im(s))
}

pub fn hadamard() -> CMatrix {
    let s = FRAC_1_SQRT_2;
    mat2(re(s), re(s), re(s), re(-s))
}

pub fn phase_s() -> CMatrix {
    mat2(re(1.0), re(0.0), re(0.0), im(1.0))
}

/// `Z_theta = diag(1, e^{i theta})`: rotation by `theta` about the z axis of
/// the Bloch sphere.
pub fn z_theta(theta: f64) -> CMatrix {
    mat2(re(1.0), re(0.0), re(0.0), C64::from_polar(1.0, theta))
}

/// `exp(-i theta Z)`.
pub fn exp_z(theta: f64) -> CMatrix {
    mat2(C64::from_polar(1.0, -theta), re(0.0), re(0.0), C64::from_polar(1.0, theta))
}

/// Largest entry of `|U^dag U - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n))
        .iter()
        .fold(0.0_f64, |m, z| m.max(z.norm()))
}
