//! Quantum channels as real transfer matrices.
//!
//! A [`SuperOp`] is the `d^2 x d^2` matrix `C = sum_j |C(B_j)>><<B_j|` of a
//! Hermiticity-preserving map in a Hermitian trace-orthonormal basis with
//! `B_1 = I/sqrt(d)` (see [`OperatorBasis`]). All values are immutable; every
//! operation returns a new value.

mod basis;
pub mod gates;
mod norms;

use std::fmt;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use basis::OperatorBasis;
pub use norms::{
    induced_1to1_norm, induced_1to1_norm_on_image, operator_norm, qubit_hermitian_trace_norm,
    trace_norm, InducedNorm,
};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

const UNITARY_TOL: f64 = 1e-12;

/// Real transfer matrix of a Hermiticity-preserving linear map on `d x d`
/// matrices.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SuperOpRepr", into = "SuperOpRepr")]
pub struct SuperOp {
    dim: usize,
    mat: DMatrix<f64>,
}

impl fmt::Debug for SuperOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SuperOp(d={}){}", self.dim, self.mat)
    }
}

impl SuperOp {
    pub fn from_matrix(dim: usize, mat: DMatrix<f64>) -> Result<Self> {
        let n = dim * dim;
        if dim == 0 || mat.nrows() != n || mat.ncols() != n {
            return Err(Error::validation(
                "SuperOp::from_matrix",
                format!("expected {n}x{n} matrix for d={dim}, got {}x{}", mat.nrows(), mat.ncols()),
            ));
        }
        if mat.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("SuperOp::from_matrix", "non-finite entry"));
        }
        Ok(Self { dim, mat })
    }

    pub fn identity(dim: usize) -> Self {
        let n = dim * dim;
        Self { dim, mat: DMatrix::identity(n, n) }
    }

    pub fn zero(dim: usize) -> Self {
        let n = dim * dim;
        Self { dim, mat: DMatrix::zeros(n, n) }
    }

    /// `D_{p,t}(rho) = (t/d) I + p (rho - tr(rho) I/d)`, i.e. `diag(t, p, ..., p)`.
    pub fn depolarizing(p: f64, t: f64, dim: usize) -> Self {
        let n = dim * dim;
        let mut mat = DMatrix::identity(n, n).scale(p);
        mat[(0, 0)] = t;
        Self { dim, mat }
    }

    /// Transfer matrix of `rho -> U rho U^dag` in the default basis for `d`.
    pub fn from_unitary(u: &CMatrix) -> Result<Self> {
        Self::from_unitary_in(u, &OperatorBasis::for_dim(u.nrows()))
    }

    pub fn from_unitary_in(u: &CMatrix, basis: &OperatorBasis) -> Result<Self> {
        const OP: &str = "ptm_from_unitary";
        if u.nrows() != u.ncols() {
            return Err(Error::validation(OP, "matrix is not square"));
        }
        if u.nrows() != basis.dim() {
            return Err(Error::DimensionMismatch { op: OP, left: u.nrows(), right: basis.dim() });
        }
        let defect = gates::unitarity_defect(u);
        if defect > UNITARY_TOL {
            return Err(Error::validation(OP, format!("U^dag U deviates from I by {defect:e}")));
        }
        let m = basis.conjugation_matrix(u);
        Ok(Self { dim: basis.dim(), mat: m.map(|z| z.re) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    fn check_dims(&self, other: &SuperOp, op: &'static str) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { op, left: self.dim, right: other.dim });
        }
        Ok(())
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &SuperOp) -> Result<SuperOp> {
        self.check_dims(other, "compose")?;
        Ok(Self { dim: self.dim, mat: &self.mat * &other.mat })
    }

    /// Product of a chain `ops[0] * ops[1] * ... `; the last element acts first.
    pub fn compose_all<'a>(ops: impl IntoIterator<Item = &'a SuperOp>) -> Result<SuperOp> {
        let mut it = ops.into_iter();
        let first = it
            .next()
            .ok_or_else(|| Error::validation("compose_all", "empty product"))?
            .clone();
        it.try_fold(first, |acc, op| acc.compose(op))
    }

    /// Adjoint map. In a Hermitian basis this is the transpose.
    pub fn adjoint(&self) -> SuperOp {
        Self { dim: self.dim, mat: self.mat.transpose() }
    }

    /// `C_u(A) = C(A - tr(A) I/d)`: zeroes the first column.
    pub fn unital_part(&self) -> SuperOp {
        let mut mat = self.mat.clone();
        mat.column_mut(0).fill(0.0);
        Self { dim: self.dim, mat }
    }

    pub fn add(&self, other: &SuperOp) -> Result<SuperOp> {
        self.check_dims(other, "add")?;
        Ok(Self { dim: self.dim, mat: &self.mat + &other.mat })
    }

    pub fn sub(&self, other: &SuperOp) -> Result<SuperOp> {
        self.check_dims(other, "sub")?;
        Ok(Self { dim: self.dim, mat: &self.mat - &other.mat })
    }

    pub fn scale(&self, s: f64) -> SuperOp {
        Self { dim: self.dim, mat: self.mat.scale(s) }
    }

    /// Uniform average of a non-empty set of maps.
    pub fn mean<'a>(ops: impl IntoIterator<Item = &'a SuperOp>) -> Result<SuperOp> {
        let mut count = 0usize;
        let mut acc: Option<SuperOp> = None;
        for op in ops {
            acc = Some(match acc {
                None => op.clone(),
                Some(a) => a.add(op)?,
            });
            count += 1;
        }
        let acc = acc.ok_or_else(|| Error::validation("mean", "empty set"))?;
        Ok(acc.scale(1.0 / count as f64))
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &SuperOp) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        (&self.mat - &other.mat).amax()
    }

    pub fn apply(&self, v: &OperatorVec) -> Result<OperatorVec> {
        if self.dim != v.dim {
            return Err(Error::DimensionMismatch { op: "apply", left: self.dim, right: v.dim });
        }
        Ok(OperatorVec { dim: self.dim, vec: &self.mat * &v.vec })
    }

    pub fn decay_params(&self) -> DepolParams {
        let t = self.mat[(0, 0)];
        let n = (self.dim * self.dim) as f64;
        let p = if self.dim == 1 { 0.0 } else { (self.mat.trace() - t) / (n - 1.0) };
        DepolParams { p, t }
    }

    /// Average fidelity to the identity, `f = (p (d - 1) + t) / d`.
    pub fn average_fidelity(&self) -> f64 {
        self.decay_params().fidelity(self.dim)
    }

    pub fn infidelity(&self) -> f64 {
        1.0 - self.average_fidelity()
    }

    /// Qubit-only cross-check: `f = 1/2 + sum_sigma tr[sigma C(sigma)] / 12`.
    /// Agrees with [`SuperOp::average_fidelity`] for trace-preserving maps.
    pub fn bowdrey_fidelity(&self) -> Result<f64> {
        if self.dim != 2 {
            return Err(Error::UnsupportedDimension { op: "bowdrey_fidelity", dim: self.dim });
        }
        let basis = OperatorBasis::pauli();
        let mut acc = 0.0;
        for sigma in &gates::paulis()[1..] {
            let v = OperatorVec::from_operator(sigma, &basis);
            let image = basis.operator(&(&self.mat * &v.vec));
            acc += (sigma * image).trace().re;
        }
        Ok(0.5 + acc / 12.0)
    }

    pub fn operator_norm(&self) -> f64 {
        operator_norm(self)
    }

    /// Spectral condition number of the transfer matrix.
    pub fn condition_number(&self) -> f64 {
        let sv = self.mat.clone().svd(false, false).singular_values;
        let max = sv.max();
        let min = sv.min();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    pub fn try_inverse(&self) -> Option<SuperOp> {
        self.mat.clone().try_inverse().map(|mat| Self { dim: self.dim, mat })
    }

    /// True when the matrix is orthogonal and fixes `|I>>` from both sides,
    /// which is what unitary channels look like in this representation.
    pub fn is_unitary_channel(&self, tol: f64) -> bool {
        let n = self.mat.nrows();
        let orth = (self.mat.transpose() * &self.mat - DMatrix::<f64>::identity(n, n)).amax();
        let mut e1 = DVector::zeros(n);
        e1[0] = 1.0;
        orth <= tol
            && (&self.mat * &e1 - &e1).amax() <= tol
            && (self.mat.transpose() * &e1 - &e1).amax() <= tol
    }
}

impl TryFrom<SuperOpRepr> for SuperOp {
    type Error = Error;

    fn try_from(r: SuperOpRepr) -> Result<Self> {
        let n = r.dim * r.dim;
        if r.mat.len() != n || r.mat.iter().any(|row| row.len() != n) {
            return Err(Error::validation(
                "SuperOp deserialize",
                format!("matrix for d={} must be {n}x{n}", r.dim),
            ));
        }
        let flat: Vec<f64> = r.mat.into_iter().flatten().collect();
        SuperOp::from_matrix(r.dim, DMatrix::from_row_slice(n, n, &flat))
    }
}

/// Wire format: `{"dim": d, "mat": [[row-major reals]]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuperOpRepr {
    dim: usize,
    mat: Vec<Vec<f64>>,
}

impl From<SuperOp> for SuperOpRepr {
    fn from(s: SuperOp) -> Self {
        let mat = s.mat.row_iter().map(|row| row.iter().copied().collect()).collect();
        SuperOpRepr { dim: s.dim, mat }
    }
}

/// `|A>>` for a Hermitian operator `A`: a state `|rho>>` or, read as a row, an
/// observable `<<Q|`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorVec {
    dim: usize,
    vec: DVector<f64>,
}

pub type StateVec = OperatorVec;
pub type ObsVec = OperatorVec;

impl OperatorVec {
    pub fn new(dim: usize, vec: DVector<f64>) -> Result<Self> {
        if vec.len() != dim * dim {
            return Err(Error::validation(
                "OperatorVec::new",
                format!("length {} does not match d^2 = {}", vec.len(), dim * dim),
            ));
        }
        Ok(Self { dim, vec })
    }

    /// Coordinates of a Hermitian operator in `basis`.
    pub fn from_operator(a: &CMatrix, basis: &OperatorBasis) -> Self {
        Self { dim: basis.dim(), vec: basis.real_coordinates(a) }
    }

    /// `|0><0|` in the default basis.
    pub fn ground_state(dim: usize) -> Self {
        let mut a = CMatrix::zeros(dim, dim);
        a[(0, 0)] = C64::new(1.0, 0.0);
        Self::from_operator(&a, &OperatorBasis::for_dim(dim))
    }

    /// Pure qubit state with Bloch vector `n` (unit length).
    pub fn qubit_pure_state(n: [f64; 3]) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self { dim: 2, vec: DVector::from_vec(vec![s, n[0] * s, n[1] * s, n[2] * s]) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vec(&self) -> &DVector<f64> {
        &self.vec
    }

    /// `<<self|other>> = tr(self^dag other)`.
    pub fn inner(&self, other: &OperatorVec) -> f64 {
        self.vec.dot(&other.vec)
    }

    pub fn trace(&self) -> f64 {
        self.vec[0] * (self.dim as f64).sqrt()
    }

    pub fn to_operator(&self) -> CMatrix {
        OperatorBasis::for_dim(self.dim).operator(&self.vec)
    }

    pub fn trace_norm(&self) -> f64 {
        if self.dim == 2 {
            qubit_hermitian_trace_norm(self.vec.as_slice())
        } else {
            trace_norm(&self.to_operator())
        }
    }

    /// `|I/d>>`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let mut vec = DVector::zeros(dim * dim);
        vec[0] = 1.0 / (dim as f64).sqrt();
        Self { dim, vec }
    }

    pub fn sub(&self, other: &OperatorVec) -> OperatorVec {
        Self { dim: self.dim, vec: &self.vec - &other.vec }
    }

    pub fn scale(&self, s: f64) -> OperatorVec {
        Self { dim: self.dim, vec: self.vec.scale(s) }
    }
}

/// `(p, t)` such that the twirl of a map is `D_{p,t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepolParams {
    pub p: f64,
    pub t: f64,
}

impl DepolParams {
    pub fn depolarizing(&self, dim: usize) -> SuperOp {
        SuperOp::depolarizing(self.p, self.t, dim)
    }

    pub fn fidelity(&self, dim: usize) -> f64 {
        let d = dim as f64;
        (self.p * (d - 1.0) + self.t) / d
    }

    pub fn infidelity(&self, dim: usize) -> f64 {
        1.0 - self.fidelity(dim)
    }
}

/// Column-stacking vectorization.
pub fn vec(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &DVector<f64>, nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if v.len() != nrows * ncols {
        return Err(Error::validation(
            "unvec",
            format!("length {} cannot be reshaped to {nrows}x{ncols}", v.len()),
        ));
    }
    Ok(DMatrix::from_column_slice(nrows, ncols, v.as_slice()))
}

/// Kronecker product; with [`vec`] it satisfies `vec(ABC) = kron(C^T, A) vec(B)`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}
