//! Dense complex linear-algebra helpers shared by the physics modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Largest entry modulus.
pub fn max_norm(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn vec_max_norm(v: &CVector) -> f64 {
    v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Frobenius inner product `tr(a† b)`.
pub fn frobenius_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_norm(&(m - m.adjoint()))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(m: &CMatrix) -> Self {
        let sym = (m + m.adjoint()).scale(0.5);
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
        Self { values, vectors }
    }

    /// `V f(D) V†` for a scalar function applied to the spectrum.
    pub fn apply(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for c in 0..n {
            let w = f(self.values[c]);
            for r in 0..n {
                scaled[(r, c)] *= w;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// `exp(g)` for an anti-Hermitian generator, via the eigendecomposition of `i g`.
pub fn expm_anti_hermitian(g: &CMatrix) -> CMatrix {
    let k = g * I;
    HermitianEigen::new(&k).apply(|lambda| (-I * lambda).exp())
}

pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_norm(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

/// Least-squares coefficients of `target` in the span of `basis` (all flattened),
/// returned with the max-norm residual of the fit.
pub fn least_squares_span(basis: &[CMatrix], target: &CMatrix) -> (Vec<C64>, f64) {
    let rows = target.len();
    let design = CMatrix::from_fn(rows, basis.len(), |r, c| basis[c].as_slice()[r]);
    let rhs = CVector::from_column_slice(target.as_slice());
    let svd = design.clone().svd(true, true);
    let coeffs = svd.solve(&rhs, 1e-12).unwrap_or_else(|_| CVector::zeros(basis.len()));
    let fitted = &design * &coeffs;
    (coeffs.iter().copied().collect(), vec_max_norm(&(fitted - rhs)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_rotation_generator() {
        // [[0, 1], [-1, 0]] * theta exponentiates to a real rotation
        let theta = 0.3_f64;
        let g = CMatrix::from_row_slice(2, 2, &[ZERO, re(theta), re(-theta), ZERO]);
        let u = expm_anti_hermitian(&g);
        assert!((u[(0, 0)] - re(theta.cos())).norm() < 1e-14);
        assert!((u[(0, 1)] - re(theta.sin())).norm() < 1e-14);
        assert!((u[(1, 0)] - re(-theta.sin())).norm() < 1e-14);
        assert!(unitarity_defect(&u) < 1e-14);
    }

    #[test]
    fn eigenvalues_sorted() {
        let m = CMatrix::from_row_slice(2, 2, &[re(2.0), I, -I, re(2.0)]);
        let eig = HermitianEigen::new(&m);
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 3.0).abs() < 1e-14);
        let back = eig.apply(re);
        assert!(max_norm(&(back - m)) < 1e-14);
    }

    #[test]
    fn least_squares_recovers_combination() {
        let a = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]);
        let b = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        let t = a.scale(2.0) - b.scale(3.0);
        let (c, res) = least_squares_span(&[a, b], &t);
        assert!((c[0] - re(2.0)).norm() < 1e-12);
        assert!((c[1] - re(-3.0)).norm() < 1e-12);
        assert!(res < 1e-12);
    }
}
