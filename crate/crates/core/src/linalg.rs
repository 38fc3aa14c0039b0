//! Factorizations and the matrix exponential.
//!
//! Eigendecompositions, LU solves and singular values are delegated to
//! `faer` (built without its rayon feature, so results do not depend on the
//! thread count). The exponential is a Padé scaling-and-squaring
//! implementation on top of those solves.

use faer::linalg::solvers::Solve;
use faer::Side;

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64};

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    pub vectors: ComplexMatrix,
}

/// Eigenpairs of a general square matrix.
pub struct Eigen {
    pub values: Vec<C64>,
    /// Eigenvectors as columns, unit 2-norm.
    pub vectors: ComplexMatrix,
}

pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<HermitianEigen> {
    m.ensure_square()?;
    let evd = m
        .to_faer()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
    let values = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok(HermitianEigen { values, vectors: ComplexMatrix::from_faer(evd.U()) })
}

pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    m.ensure_square()?;
    m.to_faer()
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("Hermitian eigensolver failed: {e:?}")))
}

pub fn eigen(m: &ComplexMatrix) -> Result<Eigen> {
    m.ensure_square()?;
    if m.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    let evd = m.to_faer().eigen().map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok(Eigen { values, vectors: ComplexMatrix::from_faer(evd.U()) })
}

/// 2-norm condition number `σ_max / σ_min`; infinite for singular input.
pub fn condition_number(m: &ComplexMatrix) -> Result<f64> {
    m.ensure_square()?;
    let sv = m.to_faer().singular_values().map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.ensure_square()?;
    if b.rows() != n {
        return Err(Error::DimensionMismatch(format!("right-hand side has {} rows, expected {n}", b.rows())));
    }
    let lu = a.to_faer().partial_piv_lu();
    let x = lu.solve(b.to_faer());
    let x = ComplexMatrix::from_faer(x.as_ref());
    if x.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical("singular linear system".into()));
    }
    Ok(x)
}

pub fn solve_vec(a: &ComplexMatrix, b: &[C64]) -> Result<Vec<C64>> {
    let rhs = ComplexMatrix::new(b.len(), 1, b.to_vec())?;
    Ok(solve(a, &rhs)?.into_vec())
}

/// Maximum absolute column sum.
pub fn norm_one(m: &ComplexMatrix) -> f64 {
    (0..m.cols()).map(|j| (0..m.rows()).map(|i| m[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

// Padé degrees and the 1-norm thresholds below which each attains unit
// roundoff backward error.
const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.539398330063230e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068e0)];
const THETA_13: f64 = 5.371920351148152;

fn pade_coefficients(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0],
        9 => &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
        13 => &[
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ],
        _ => unreachable!("unsupported Padé degree {m}"),
    }
}

fn axpy(acc: &mut ComplexMatrix, s: f64, x: &ComplexMatrix) {
    *acc += &x.scale_real(s);
}

/// Returns `(U, V)` with `exp(A) ≈ (V - U)⁻¹ (V + U)`.
fn pade_terms(a: &ComplexMatrix, m: usize) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows();
    let b = pade_coefficients(m);
    let id = ComplexMatrix::identity(n);
    let a2 = a * a;
    if m == 13 {
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        let mut inner_u = a6.scale_real(b[13]);
        axpy(&mut inner_u, b[11], &a4);
        axpy(&mut inner_u, b[9], &a2);
        let mut u = &a6 * &inner_u;
        axpy(&mut u, b[7], &a6);
        axpy(&mut u, b[5], &a4);
        axpy(&mut u, b[3], &a2);
        axpy(&mut u, b[1], &id);
        let u = a * &u;

        let mut inner_v = a6.scale_real(b[12]);
        axpy(&mut inner_v, b[10], &a4);
        axpy(&mut inner_v, b[8], &a2);
        let mut v = &a6 * &inner_v;
        axpy(&mut v, b[6], &a6);
        axpy(&mut v, b[4], &a4);
        axpy(&mut v, b[2], &a2);
        axpy(&mut v, b[0], &id);
        return (u, v);
    }
    // Even powers I, A², A⁴, ... up to A^(m-1).
    let mut powers = vec![id];
    for _ in 1..=m / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u = ComplexMatrix::zeros(n, n);
    let mut v = ComplexMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        axpy(&mut u, b[2 * k + 1], p);
        axpy(&mut v, b[2 * k], p);
    }
    (a * &u, v)
}

/// Matrix exponential by scaling and squaring with a [13/13] Padé
/// approximant (lower degrees when the norm allows).
pub fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.ensure_square()?;
    let norm = norm_one(a);
    if !norm.is_finite() {
        return Err(Error::Numerical("matrix exponential of non-finite matrix".into()));
    }
    if norm == 0.0 {
        return Ok(ComplexMatrix::identity(n));
    }
    for &(m, theta) in &THETA {
        if norm <= theta {
            let (u, v) = pade_terms(a, m);
            return solve(&(&v - &u), &(&v + &u));
        }
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = a.scale_real(0.5f64.powi(s));
    let (u, v) = pade_terms(&scaled, 13);
    let mut x = solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        x = &x * &x;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::I;

    /// Truncated Taylor series with many terms, used as an independent
    /// oracle for small-norm inputs.
    fn expm_taylor(a: &ComplexMatrix, terms: usize) -> ComplexMatrix {
        let n = a.rows();
        let mut sum = ComplexMatrix::identity(n);
        let mut term = ComplexMatrix::identity(n);
        for k in 1..terms {
            term = (&term * a).scale_real(1.0 / k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = ComplexMatrix::zeros(3, 3);
        assert_eq!(expm(&z).unwrap(), ComplexMatrix::identity(3));
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp(-iθσy) with real entries cos θ, -sin θ.
        let theta = 0.7;
        let gen = ComplexMatrix::from_real_rows(&[&[0.0, -theta], &[theta, 0.0]]);
        let e = expm(&gen).unwrap();
        assert!((e[(0, 0)].re - theta.cos()).abs() < 1e-14);
        assert!((e[(0, 1)].re + theta.sin()).abs() < 1e-14);
        assert!((e[(1, 0)].re - theta.sin()).abs() < 1e-14);
    }

    #[test]
    fn expm_matches_taylor_for_every_pade_degree() {
        for &scale in &[0.01, 0.2, 0.9, 2.0, 5.0, 12.0] {
            let a = ComplexMatrix::from_fn(4, 4, |i, j| {
                C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0) * (scale / 8.0)
            });
            let reference = expm_taylor(&a, 200);
            let got = expm(&a).unwrap();
            let rel = got.max_abs_diff(&reference) / reference.max_abs();
            assert!(rel < 1e-12, "scale {scale}: rel error {rel:e}");
        }
    }

    #[test]
    fn expm_of_diagonal() {
        let mut a = ComplexMatrix::zeros(2, 2);
        a[(0, 0)] = C64::new(-30.0, 0.0);
        a[(1, 1)] = I * 40.0;
        let e = expm(&a).unwrap();
        assert!((e[(0, 0)].re / (-30.0f64).exp() - 1.0).abs() < 1e-10);
        let expected = C64::new(40.0f64.cos(), 40.0f64.sin());
        assert!((e[(1, 1)] - expected).norm() < 1e-12);
        assert!(e[(0, 1)].norm() < 1e-14 && e[(1, 0)].norm() < 1e-14);
    }

    #[test]
    fn eigen_of_triangular() {
        let a = ComplexMatrix::from_real_rows(&[&[2.0, 1.0], &[0.0, -3.0]]);
        let mut ev: Vec<f64> = eigen(&a).unwrap().values.iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 3.0).abs() < 1e-13 && (ev[1] - 2.0).abs() < 1e-13);
        assert!(condition_number(&ComplexMatrix::identity(3)).unwrap() - 1.0 < 1e-12);
    }

    #[test]
    fn solve_roundtrip() {
        let a = ComplexMatrix::from_fn(3, 3, |i, j| if i == j { C64::new(4.0, 1.0) } else { C64::new(0.5, -0.2) });
        let x = ComplexMatrix::from_fn(3, 1, |i, _| C64::new(i as f64, 1.0));
        let b = &a * &x;
        assert!(solve(&a, &b).unwrap().max_abs_diff(&x) < 1e-13);
    }
}
