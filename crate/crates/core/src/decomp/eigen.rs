//! Dominant real eigenpairs of small dense nonsymmetric matrices.
//!
//! Eigenvalues come from the real Schur form; the eigenvectors belonging to
//! the selected one are then computed by inverse iteration with a tiny shift,
//! followed by one power step. The power step maps the vector into the range
//! of the matrix, which makes structural zeros of that range exact.

use nalgebra::{DMatrix, DVector, Schur};
use nalgebra::Complex;

use crate::error::{Error, Result};

const OP: &str = "dominant_real_eigen";

/// Eigenvalues closer than this in modulus (relative to the largest) count as tied.
const TIE_TOL: f64 = 1e-12;
/// Largest imaginary part, relative to the modulus, still treated as real.
const IMAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct DominantEigen {
    pub value: f64,
    /// Unit 2-norm; the entry of largest magnitude is positive.
    pub right: DVector<f64>,
    /// Left eigenvector (`left^T M = value left^T`), same normalization.
    pub left: DVector<f64>,
    /// Distance from `value` to the nearest other eigenvalue.
    pub gap: f64,
    /// True if the eigenvalue nearest to `value` is one of a complex pair.
    pub nearest_complex: bool,
    pub spectrum: Vec<Complex<f64>>,
}

/// Eigenvalues of a real square matrix, in no particular order.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { op: OP, left: m.nrows(), right: m.ncols() });
    }
    if m.is_empty() {
        return Err(Error::validation(OP, "empty matrix"));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation(OP, "matrix has non-finite entries"));
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or_else(|| Error::DegenerateSpectrum {
        op: OP,
        msg: "Schur iteration did not converge".into(),
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// The eigenvalue of largest modulus, which must be real, with its left and
/// right eigenvectors.
///
/// Ties in modulus are broken in favour of the positive eigenvalue; two or
/// more positive (or no positive) candidates is an error, as is a complex
/// dominant pair.
pub fn dominant_real_eigen(m: &DMatrix<f64>) -> Result<DominantEigen> {
    let spectrum = eigenvalues(m)?;
    let top = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = TIE_TOL * top.max(1.0);
    let tied: Vec<usize> = (0..spectrum.len()).filter(|&i| top - spectrum[i].norm() <= tol).collect();

    if let Some(&i) = tied.iter().find(|&&i| spectrum[i].im.abs() > IMAG_TOL * spectrum[i].norm()) {
        return Err(Error::DegenerateSpectrum {
            op: OP,
            msg: format!("dominant eigenvalue {} is complex", spectrum[i]),
        });
    }
    let chosen = if tied.len() == 1 {
        tied[0]
    } else {
        let positive: Vec<usize> = tied.iter().copied().filter(|&i| spectrum[i].re > 0.0).collect();
        if positive.len() != 1 {
            return Err(Error::DegenerateSpectrum {
                op: OP,
                msg: format!("{} eigenvalues tie for the largest modulus {top:e}", tied.len()),
            });
        }
        positive[0]
    };
    let value = spectrum[chosen].re;

    let (gap, nearest_complex) = spectrum
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != chosen)
        .map(|(_, z)| ((z - value).norm(), z.im.abs() > IMAG_TOL * z.norm()))
        .fold((f64::INFINITY, false), |best, c| if c.0 < best.0 { c } else { best });

    let right = eigenvector(m, value)?;
    let left = eigenvector(&m.transpose(), value)?;
    Ok(DominantEigen { value, right, left, gap, nearest_complex, spectrum })
}

/// Eigenvector of `a` for the (real, known) eigenvalue `lambda`.
fn eigenvector(a: &DMatrix<f64>, lambda: f64) -> Result<DVector<f64>> {
    let n = a.nrows();
    let scale = lambda.abs().max(1.0);
    // Fixed, generic start vector; it has a component along any eigenvector
    // except on a measure-zero set.
    let start = DVector::from_fn(n, |i, _| 1.0 + 0.37 * ((i + 1) as f64).sin());

    for rel_shift in [1e-10, 1e-8, 1e-6] {
        let shift = lambda + rel_shift * scale;
        let lu = (a - DMatrix::identity(n, n) * shift).lu();
        let mut x = start.normalize();
        let mut ok = true;
        for _ in 0..3 {
            match lu.solve(&x) {
                Some(y) if y.iter().all(|v| v.is_finite()) && y.norm() > 0.0 => x = y.normalize(),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        if lambda != 0.0 {
            x = (a * x) / lambda;
            x = x.normalize();
        }
        let residual = (a * &x - &x * lambda).norm();
        if residual <= 1e-9 * a.norm().max(1.0) {
            return Ok(fix_sign(x));
        }
    }
    Err(Error::DegenerateSpectrum {
        op: OP,
        msg: format!("inverse iteration failed to converge at eigenvalue {lambda:e}"),
    })
}

fn fix_sign(mut x: DVector<f64>) -> DVector<f64> {
    if x[x.iamax()] < 0.0 {
        x.neg_mut();
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.9, 0.3]));
        let e = dominant_real_eigen(&m).unwrap();
        assert!((e.value - 0.9).abs() < 1e-15);
        assert!((e.right - DVector::from_vec(vec![1.0, 0.0])).norm() < 1e-12);
        assert!((e.left - DVector::from_vec(vec![1.0, 0.0])).norm() < 1e-12);
        assert!((e.gap - 0.6).abs() < 1e-12);
        assert!(!e.nearest_complex);
    }

    #[test]
    fn nonsymmetric_left_and_right_differ() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.5, 0.0, 1.0, 0.3, 0.1, 0.0, 0.5]);
        let e = dominant_real_eigen(&m).unwrap();
        assert!((&m * &e.right - &e.right * e.value).norm() < 1e-12);
        assert!((m.transpose() * &e.left - &e.left * e.value).norm() < 1e-12);
        assert!((e.right.clone() - e.left.clone()).norm() > 1e-3);
    }

    #[test]
    fn rotation_block_is_rejected() {
        let (s, c) = 0.4_f64.sin_cos();
        let m = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 0.5]);
        assert!(matches!(dominant_real_eigen(&m), Err(Error::DegenerateSpectrum { .. })));
    }

    #[test]
    fn tie_prefers_positive() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![-0.7, 0.2, 0.7]));
        let e = dominant_real_eigen(&m).unwrap();
        assert_eq!(e.value, 0.7);
        assert!((e.right[2] - 1.0).abs() < 1e-12);
        assert!((e.gap - 0.5).abs() < 1e-12);

        let both = DMatrix::from_diagonal(&DVector::from_vec(vec![0.7, 0.2, 0.7]));
        assert!(dominant_real_eigen(&both).is_err());
    }

    #[test]
    fn rank_one_with_large_kernel() {
        let u = DVector::from_fn(16, |i, _| (i as f64 * 0.3).cos());
        let v = DVector::from_fn(16, |i, _| 1.0 / (1.0 + i as f64));
        let m = &u * v.transpose();
        let e = dominant_real_eigen(&m).unwrap();
        assert!((e.value - v.dot(&u)).abs() < 1e-12);
        assert!((e.right.dot(&u).abs() - u.norm()).abs() < 1e-10);
        assert!((e.left.dot(&v).abs() - v.norm()).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(dominant_real_eigen(&DMatrix::zeros(2, 3)).is_err());
        assert!(dominant_real_eigen(&DMatrix::from_element(2, 2, f64::NAN)).is_err());
    }
}
