use nalgebra::{DMatrix, DVector};

use super::{CMatrix, C64};
use crate::error::{Error, Result};

const BASIS_TOL: f64 = 1e-12;

/// A Hermitian, trace-orthonormal operator basis `{B_1, ..., B_{d^2}}` with
/// `B_1 = I/sqrt(d)`. Transfer matrices of Hermiticity-preserving maps are
/// real in any such basis.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    dim: usize,
    elements: Vec<CMatrix>,
}

impl OperatorBasis {
    /// Validates the basis contract.
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        const OP: &str = "OperatorBasis::new";
        let n = elements.len();
        let dim = (n as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != n {
            return Err(Error::validation(OP, format!("{n} elements is not a square number")));
        }
        for (j, b) in elements.iter().enumerate() {
            if b.nrows() != dim || b.ncols() != dim {
                return Err(Error::validation(OP, format!("element {j} is not {dim}x{dim}")));
            }
            if (b - b.adjoint()).iter().any(|z| z.norm() > BASIS_TOL) {
                return Err(Error::validation(OP, format!("element {j} is not Hermitian")));
            }
        }
        let ident = CMatrix::identity(dim, dim).scale(1.0 / (dim as f64).sqrt());
        if (&elements[0] - ident).iter().any(|z| z.norm() > BASIS_TOL) {
            return Err(Error::validation(OP, "first element must be I/sqrt(d)"));
        }
        for j in 0..n {
            for k in 0..n {
                let ip = (elements[j].adjoint() * &elements[k]).trace();
                let want = if j == k { 1.0 } else { 0.0 };
                if (ip - C64::new(want, 0.0)).norm() > BASIS_TOL {
                    return Err(Error::validation(
                        OP,
                        format!("tr(B_{j}^dag B_{k}) = {ip}, expected {want}"),
                    ));
                }
            }
        }
        Ok(Self { dim, elements })
    }

    /// Normalized Paulis `{I, X, Y, Z} / sqrt(2)`.
    pub fn pauli() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let elements = vec![
            super::gates::identity2().scale(s),
            super::gates::pauli_x().scale(s),
            super::gates::pauli_y().scale(s),
            super::gates::pauli_z().scale(s),
        ];
        Self { dim: 2, elements }
    }

    /// Normalized generalized Gell-Mann basis. Ordered identity, then the
    /// symmetric and antisymmetric off-diagonal pairs for each `j < k`, then the
    /// diagonal elements. At `d = 2` this coincides with [`OperatorBasis::pauli`].
    pub fn gell_mann(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        let d = dim;
        let mut elements = Vec::with_capacity(d * d);
        elements.push(CMatrix::identity(d, d).scale(1.0 / (d as f64).sqrt()));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..d {
            for k in (j + 1)..d {
                let mut sym = CMatrix::zeros(d, d);
                sym[(j, k)] = C64::new(h, 0.0);
                sym[(k, j)] = C64::new(h, 0.0);
                elements.push(sym);
                let mut anti = CMatrix::zeros(d, d);
                anti[(j, k)] = C64::new(0.0, -h);
                anti[(k, j)] = C64::new(0.0, h);
                elements.push(anti);
            }
        }
        for l in 1..d {
            let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
            let mut diag = CMatrix::zeros(d, d);
            for i in 0..l {
                diag[(i, i)] = C64::new(norm, 0.0);
            }
            diag[(l, l)] = C64::new(-(l as f64) * norm, 0.0);
            elements.push(diag);
        }
        Self { dim, elements }
    }

    /// Default basis for dimension `d`.
    pub fn for_dim(dim: usize) -> Self {
        if dim == 2 {
            Self::pauli()
        } else {
            Self::gell_mann(dim)
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// `|A>> = sum_j tr(B_j^dag A) e_j`.
    pub fn coordinates(&self, a: &CMatrix) -> DVector<C64> {
        DVector::from_iterator(
            self.elements.len(),
            self.elements.iter().map(|b| (b.adjoint() * a).trace()),
        )
    }

    /// Real coordinates of a Hermitian operator.
    pub fn real_coordinates(&self, a: &CMatrix) -> DVector<f64> {
        self.coordinates(a).map(|z| z.re)
    }

    /// Inverse of [`OperatorBasis::real_coordinates`]: `sum_j v_j B_j`.
    pub fn operator(&self, v: &DVector<f64>) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (b, &c) in self.elements.iter().zip(v.iter()) {
            out += b.scale(c);
        }
        out
    }

    /// Transfer matrix of `A -> U A U^dag`, before any unitarity check.
    pub(crate) fn conjugation_matrix(&self, u: &CMatrix) -> DMatrix<C64> {
        let n = self.elements.len();
        let ud = u.adjoint();
        let images: Vec<CMatrix> = self.elements.iter().map(|b| u * b * &ud).collect();
        DMatrix::from_fn(n, n, |i, j| (self.elements[i].adjoint() * &images[j]).trace())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_bases_satisfy_the_contract() {
        OperatorBasis::new(OperatorBasis::pauli().elements().to_vec()).unwrap();
        for d in 1..=4 {
            OperatorBasis::new(OperatorBasis::gell_mann(d).elements().to_vec()).unwrap();
        }
    }

    #[test]
    fn gell_mann_matches_pauli_at_qubit_dimension() {
        let gm = OperatorBasis::gell_mann(2);
        for (a, b) in gm.elements().iter().zip(OperatorBasis::pauli().elements()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_orthonormal_sets() {
        let mut els = OperatorBasis::pauli().elements().to_vec();
        els[2] = els[1].clone();
        assert!(OperatorBasis::new(els).is_err());
        let mut els = OperatorBasis::pauli().elements().to_vec();
        els.swap(0, 3);
        assert!(OperatorBasis::new(els).is_err());
    }

    #[test]
    fn coordinates_round_trip() {
        let basis = OperatorBasis::pauli();
        let v = DVector::from_vec(vec![0.3, -0.2, 0.5, 0.1]);
        let a = basis.operator(&v);
        assert!((basis.real_coordinates(&a) - v).norm() < 1e-15);
    }
}
