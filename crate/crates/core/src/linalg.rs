//! Dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use rand::Rng;

pub type Cx = Complex<f64>;
pub type Mat = DMatrix<Cx>;

pub fn zeros(r: usize, c: usize) -> Mat {
    Mat::zeros(r, c)
}

pub fn eye(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn real(x: f64) -> Cx {
    Cx::new(x, 0.0)
}

/// Largest entry modulus (0 for empty matrices).
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Singular values in descending order; empty for empty matrices.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Spectral norm.
pub fn op_norm(m: &Mat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Number of singular values above `tol_rel` times the largest.
pub fn numerical_rank(m: &Mat, tol_rel: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&x| x > tol_rel * top).count(),
        _ => 0,
    }
}

/// Number of singular values strictly above an absolute threshold
/// (0 when the threshold is not positive and the matrix vanishes).
pub fn rank_above(m: &Mat, threshold: f64) -> usize {
    singular_values(m)
        .iter()
        .filter(|&&s| s > threshold && s > 0.0)
        .count()
}

/// Rotates `v` so that its first entry of significant modulus is real and positive.
pub fn normalize_phase(v: &mut [Cx]) {
    let scale = v.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if scale == 0.0 {
        return;
    }
    if let Some(lead) = v.iter().find(|z| z.norm() > 1e-8 * scale) {
        let phase = lead.conj() / lead.norm();
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Hermitian eigendecomposition with eigenvalues in descending order and
/// eigenvectors phase-normalized, so the result is deterministic.
pub fn hermitian_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "hermitian_eigen needs a square matrix");
    if n == 0 {
        return (Vec::new(), zeros(0, 0));
    }
    let h = (m + m.adjoint()) * real(0.5);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col: Vec<Cx> = eig.eigenvectors.column(src).iter().copied().collect();
        normalize_phase(&mut col);
        for (i, z) in col.into_iter().enumerate() {
            vectors[(i, dst)] = z;
        }
    }
    (values, vectors)
}

/// Smallest eigenvalue of the Hermitian part (`+∞` for empty matrices).
pub fn min_eigenvalue(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    hermitian_eigen(m).0.last().copied().unwrap()
}

/// Thin SVD `m = U diag(s) V*` with singular values sorted descending.
/// `V` is square (`ncols × ncols`) so trailing columns span the kernel.
pub fn full_svd(m: &Mat) -> (Mat, Vec<f64>, Mat) {
    let (r, c) = m.shape();
    if c == 0 {
        return (zeros(r, 0), Vec::new(), zeros(0, 0));
    }
    // Pad with zero rows so the thin SVD returns a complete right basis.
    let padded = if r < c {
        let mut p = zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(true, true);
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let s: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut uu = zeros(r, k);
    let mut vv = zeros(c, k);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..r {
            uu[(i, dst)] = u[(i, src)];
        }
        let mut col: Vec<Cx> = (0..c).map(|j| v_t[(src, j)].conj()).collect();
        let mut phase = Cx::new(1.0, 0.0);
        let scale = col.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if let Some(lead) = col.iter().find(|z| z.norm() > 1e-8 * scale) {
            phase = lead.conj() / lead.norm();
        }
        for z in col.iter_mut() {
            *z *= phase;
        }
        for i in 0..r {
            uu[(i, dst)] *= phase;
        }
        for (j, z) in col.into_iter().enumerate() {
            vv[(j, dst)] = z;
        }
    }
    (uu, s, vv)
}

/// Orthonormal basis of the column space (singular values above `tol_rel · σ_max`).
pub fn column_basis(m: &Mat, tol_rel: f64) -> Mat {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return zeros(r, 0);
    }
    let (u, s) = left_singular(m);
    let top = s.first().copied().unwrap_or(0.0);
    let k = s
        .iter()
        .filter(|&&x| top > 0.0 && x > tol_rel * top)
        .count();
    u.columns(0, k).into_owned()
}

/// Left singular vectors (all `min(r, c)` of them) and singular values, descending.
pub fn left_singular(m: &Mat) -> (Mat, Vec<f64>) {
    let r = m.nrows();
    if r == 0 || m.ncols() == 0 {
        return (zeros(r, 0), Vec::new());
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut uu = zeros(r, k);
    for (dst, &src) in order.iter().enumerate() {
        let mut col: Vec<Cx> = (0..r).map(|i| u[(i, src)]).collect();
        normalize_phase(&mut col);
        for (i, z) in col.into_iter().enumerate() {
            uu[(i, dst)] = z;
        }
    }
    (uu, order.iter().map(|&i| svd.singular_values[i]).collect())
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `w` inside `C^{w.nrows()}`.
pub fn orthogonal_complement(w: &Mat) -> Mat {
    let n = w.nrows();
    let proj = eye(n) - w * w.adjoint();
    let (vals, vecs) = hermitian_eigen(&proj);
    let k = vals.iter().filter(|&&v| v > 0.5).count();
    vecs.columns(0, k).into_owned()
}

/// Moore–Penrose pseudo-inverse with relative singular-value cutoff.
pub fn pinv(m: &Mat, tol_rel: f64) -> Mat {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return zeros(c, r);
    }
    let (u, s, v) = full_svd(m);
    let top = s.first().copied().unwrap_or(0.0);
    let mut out = zeros(c, r);
    for (k, &sk) in s.iter().enumerate() {
        if top > 0.0 && sk > tol_rel * top {
            let vk = v.column(k);
            let uk = u.column(k);
            out += vk * uk.adjoint() * real(1.0 / sk);
        }
    }
    out
}

/// Horizontal concatenation; all parts must share the row count.
pub fn hcat(parts: &[&Mat]) -> Mat {
    let rows = parts.first().map_or(0, |m| m.nrows());
    let cols: usize = parts.iter().map(|m| m.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        assert_eq!(p.nrows(), rows, "hcat row mismatch");
        out.view_mut((0, at), (rows, p.ncols())).copy_from(*p);
        at += p.ncols();
    }
    out
}

/// Vertical concatenation; all parts must share the column count.
pub fn vcat(parts: &[&Mat]) -> Mat {
    let cols = parts.first().map_or(0, |m| m.ncols());
    let rows: usize = parts.iter().map(|m| m.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        assert_eq!(p.ncols(), cols, "vcat column mismatch");
        out.view_mut((at, 0), (p.nrows(), cols)).copy_from(*p);
        at += p.nrows();
    }
    out
}

/// Spectral radius via the eigenvalues of the (general) square matrix.
pub fn spectral_radius(a: &Mat) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    // Gelfand's formula is unreliable for non-normal matrices; use the Schur form.
    match a.clone().try_schur(1e-14, 10_000) {
        Some(schur) => {
            let (_, t) = schur.unpack();
            (0..n).fold(0.0, |acc, i| acc.max(t[(i, i)].norm()))
        }
        None => {
            // Fall back to a power bound.
            let mut p = a.clone();
            let mut k = 1;
            while k < 256 {
                p = &p * &p;
                k *= 2;
            }
            op_norm(&p).powf(1.0 / k as f64)
        }
    }
}

/// Entrywise standard complex Gaussian matrix.
pub fn random_matrix<R: Rng>(rng: &mut R, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| {
        Cx::new(gauss(rng), gauss(rng)) * real(std::f64::consts::FRAC_1_SQRT_2)
    })
}

fn gauss<R: Rng>(rng: &mut R) -> f64 {
    // Box–Muller; avoids pulling rand_distr for a single use.
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Random unitary via the orthonormal columns of a Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> Mat {
    let g = random_matrix(rng, n, n);
    let qr = g.qr();
    qr.q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pinv_of_rank_one() {
        let m = Mat::from_row_slice(2, 2, &[real(1.0), real(1.0), real(1.0), real(1.0)]);
        let p = pinv(&m, 1e-12);
        let expect = Mat::from_element(2, 2, real(0.25));
        assert!(max_abs(&(p - expect)) < 1e-14);
    }

    #[test]
    fn complement_spans_rest() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_unitary(&mut rng, 5);
        let w = q.columns(0, 2).into_owned();
        let c = orthogonal_complement(&w);
        assert_eq!(c.ncols(), 3);
        assert!(max_abs(&(w.adjoint() * &c)) < 1e-12);
        assert!(max_abs(&(c.adjoint() * &c - eye(3))) < 1e-12);
    }

    #[test]
    fn full_svd_kernel_of_fat_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 2, 5);
        let (_, s, v) = full_svd(&m);
        assert_eq!(s.len(), 5);
        assert!(s[2] < 1e-12);
        let ker = v.columns(2, 3).into_owned();
        assert!(max_abs(&(&m * ker)) < 1e-12);
    }

    #[test]
    fn eigen_sorted_descending() {
        let m = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            real(1.0),
            real(3.0),
            real(-2.0),
        ]));
        let (vals, _) = hermitian_eigen(&m);
        assert_eq!(vals.len(), 3);
        assert!((vals[0] - 3.0).abs() < 1e-14 && (vals[2] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn spectral_radius_of_jordan_block() {
        let mut a = zeros(3, 3);
        a[(0, 0)] = real(0.5);
        a[(1, 1)] = real(0.5);
        a[(2, 2)] = real(0.5);
        a[(0, 1)] = real(10.0);
        a[(1, 2)] = real(10.0);
        assert!((spectral_radius(&a) - 0.5).abs() < 1e-8);
    }
}
