//! Dense linear-algebra helpers shared by the simulation modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{CMatrix, CVector, RMatrix, C64};

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// Intended as a reference implementation; hot paths use eigendecompositions.
pub fn expm(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let norm = (0..n).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let scaled = m / C64::from(2f64.powi(squarings as i32));
    let mut result = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..40 {
        term = &term * &scaled / C64::from(k as f64);
        result += &term;
        let t: f64 = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if t < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `exp(-i t h)` for Hermitian `h`, via eigendecomposition.
pub fn exp_i_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let eig = SymmetricEigen::new(h.clone());
    let phases = CVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -t * e)));
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

/// Eigenpairs of a real symmetric matrix sorted by ascending eigenvalue.
pub fn sorted_symmetric_eigen(m: RMatrix) -> (Vec<f64>, RMatrix) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = RMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Largest eigenvalue of a Hermitian operator given only through its action.
///
/// Lanczos with full reorthogonalization; the Krylov space grows until the
/// top Ritz value is stable to about 1e-14 relative.
pub fn lanczos_max_eigenvalue<F>(n: usize, matvec: F) -> f64
where
    F: Fn(&CVector) -> CVector,
{
    if n == 0 {
        return 0.0;
    }
    let mut seed = 0x9e37_79b9_7f4a_7c15u64;
    let mut next = || {
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut v = CVector::from_iterator(n, (0..n).map(|_| C64::new(next(), next())));
    v /= C64::from(v.norm());

    let max_steps = n.min(400);
    let mut basis: Vec<CVector> = Vec::with_capacity(max_steps);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = f64::NAN;
    for k in 0..max_steps {
        basis.push(v.clone());
        let mut w = matvec(&v);
        let a = v.dotc(&w).re;
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&w);
                w.axpy(-c, b, C64::from(1.0));
            }
        }
        let top = tridiagonal_max(&alpha, &beta);
        let bnorm = w.norm();
        let converged = (top - last).abs() <= 1e-14 * top.abs().max(1e-300);
        if bnorm <= 1e-13 * top.abs().max(1e-300) || (k >= 8 && converged) {
            return top;
        }
        last = top;
        beta.push(bnorm);
        v = w / C64::from(bnorm);
    }
    tridiagonal_max(&alpha, &beta)
}

fn tridiagonal_max(alpha: &[f64], beta: &[f64]) -> f64 {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    SymmetricEigen::new(t).eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Spectral norm (largest singular value) of a dense complex matrix.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    let n = a.ncols();
    let ah = a.adjoint();
    lanczos_max_eigenvalue(n, |v| &ah * (a * v)).max(0.0).sqrt()
}

/// Spectral norm of a dense real matrix.
pub fn spectral_norm_real(a: &RMatrix) -> f64 {
    let n = a.ncols();
    let at = a.transpose();
    lanczos_max_eigenvalue(n, |v| {
        let re = DVector::from_iterator(n, v.iter().map(|z| z.re));
        let im = DVector::from_iterator(n, v.iter().map(|z| z.im));
        let re = &at * (a * re);
        let im = &at * (a * im);
        CVector::from_iterator(n, re.iter().zip(im.iter()).map(|(&r, &i)| C64::new(r, i)))
    })
    .max(0.0)
    .sqrt()
}

/// Converts a real matrix to complex.
pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(C64::from)
}
