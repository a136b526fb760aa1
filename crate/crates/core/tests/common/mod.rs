#![allow(dead_code)]

use leech_core::linalg::{self, random_matrix, real};
use leech_core::toeplitz;
use leech_core::{Evaluate, Mat, MatrixPolynomial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_poly<R: Rng>(rng: &mut R, r: usize, c: usize, d: usize) -> MatrixPolynomial {
    MatrixPolynomial::new(r, c, (0..=d).map(|_| random_matrix(rng, r, c)).collect()).unwrap()
}

pub fn corona_g() -> MatrixPolynomial {
    MatrixPolynomial::new(
        1,
        2,
        vec![
            Mat::from_row_slice(1, 2, &[real(2.0), real(0.0)]),
            Mat::from_row_slice(1, 2, &[real(0.0), real(1.0)]),
        ],
    )
    .unwrap()
}

/// Rescales `K` so that `T_GT_G* − T_KT_K*` keeps a fixed fraction of the
/// lower bound of `T_GT_G*` (estimated on a 64-block compression).
pub fn make_positive(g: &MatrixPolynomial, k: &MatrixPolynomial) -> MatrixPolynomial {
    let lower = linalg::min_eigenvalue(&toeplitz::toeplitz_gram(g, 64));
    let ksup = leech_core::circle_points(256)
        .into_iter()
        .map(|z| linalg::op_norm(&k.evaluate(z).unwrap()))
        .fold(0.0, f64::max);
    k.scale(real((0.4 * lower).sqrt() / ksup))
}

/// Random instance with `G` of size `m × (m + 1..=m + 2)`, degrees up to 3.
pub fn positive_instance(seed: u64) -> (MatrixPolynomial, MatrixPolynomial) {
    let mut r = rng(seed);
    let m = r.gen_range(1..=2);
    let p = m + r.gen_range(1..=2);
    let q = r.gen_range(1..=2);
    let dg = r.gen_range(1..=3);
    let dk = r.gen_range(1..=3);
    let g = random_poly(&mut r, m, p, dg);
    let k = random_poly(&mut r, m, q, dk);
    let k = make_positive(&g, &k);
    (g, k)
}

/// `m = 2`, `d₁ = d₂ = 2`, full-rank leading coefficients.
pub fn degree_bound_instance(seed: u64) -> (MatrixPolynomial, MatrixPolynomial) {
    let mut r = rng(seed);
    let g = random_poly(&mut r, 2, 3, 2);
    let k = random_poly(&mut r, 2, 2, 2);
    assert_eq!(linalg::numerical_rank(&g.coeffs()[2], 1e-9), 2);
    assert_eq!(linalg::numerical_rank(&k.coeffs()[2], 1e-9), 2);
    (g.clone(), make_positive(&g, &k))
}
