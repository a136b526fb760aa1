//! Finite compressions of block Toeplitz and Hankel operators and the
//! operator identities between them, evaluated as residuals.
//!
//! All symbols here are banded (finite Fourier support), so products of
//! compressions are computed with an inner index enlarged by the symbol
//! degree. On the compared windows they then carry no truncation error and
//! every identity holds to machine precision.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::symbols::{block_matrix, defect_symbol, LaurentSymbol, MatrixPolynomial, Symbol};
use crate::Config;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Toeplitz,
    HankelPlus,
    HankelMinus,
}

/// Level-`N` block compression of `T_Z`, `H_{Z,+}` or `H_{Z,−}`.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    pub kind: OperatorKind,
    pub level: usize,
    /// Block shape `(rows, cols)` of the symbol.
    pub block: (usize, usize),
    pub matrix: Mat,
}

/// Rectangular `nbr × nbc` block section of `T_Z` (block `(i, j)` is `Z_{i−j}`).
pub fn toeplitz(z: &dyn Symbol, nbr: usize, nbc: usize) -> Mat {
    let (r, c) = z.shape();
    block_matrix(nbr, nbc, r, c, |i, j| z.coeff_at(i as i64 - j as i64))
}

/// Rectangular section of `H_{Z,+}` (block `(i, j)` is `Z_{i+j+1}`).
pub fn hankel_plus(z: &dyn Symbol, nbr: usize, nbc: usize) -> Mat {
    let (r, c) = z.shape();
    block_matrix(nbr, nbc, r, c, |i, j| z.coeff_at((i + j + 1) as i64))
}

/// Rectangular section of `H_{Z,−}` (block `(i, j)` is `Z_{−i−j−1}`).
pub fn hankel_minus(z: &dyn Symbol, nbr: usize, nbc: usize) -> Mat {
    let (r, c) = z.shape();
    block_matrix(nbr, nbc, r, c, |i, j| z.coeff_at(-((i + j + 1) as i64)))
}

pub fn truncate(z: &dyn Symbol, kind: OperatorKind, level: usize) -> Result<TruncatedOperator> {
    if level == 0 {
        return Err(Error::Precondition(
            "truncation level must be at least 1".into(),
        ));
    }
    let matrix = match kind {
        OperatorKind::Toeplitz => toeplitz(z, level, level),
        OperatorKind::HankelPlus => hankel_plus(z, level, level),
        OperatorKind::HankelMinus => hankel_minus(z, level, level),
    };
    Ok(TruncatedOperator {
        kind,
        level,
        block: z.shape(),
        matrix,
    })
}

/// Block forward shift `S_k` compressed to `n` blocks.
pub fn forward_shift(k: usize, n: usize) -> Mat {
    let id = linalg::eye(k);
    block_matrix(n, n, k, k, |i, j| (i == j + 1).then_some(&id))
}

/// `P_n T_G T_G* P_n`, exact because the inner index runs to `n + deg G`.
pub fn toeplitz_gram(g: &MatrixPolynomial, n: usize) -> Mat {
    let t = toeplitz(g, n, n + g.degree());
    &t * t.adjoint()
}

/// `P_n H_G H_G* P_n` (exact; `H_G` has `deg G` nonzero block columns).
pub fn hankel_gram(g: &MatrixPolynomial, n: usize) -> Mat {
    let h = hankel_plus(g, n, g.degree().max(1));
    &h * h.adjoint()
}

fn max_degree(ps: &[&MatrixPolynomial]) -> usize {
    ps.iter().map(|p| p.degree()).max().unwrap_or(0)
}

/// Operands of the four symbol identities, assembled on a common window.
/// Kept as plain matrices so a test can tamper with one of them.
#[derive(Debug, Clone)]
pub struct IdentityOperands {
    pub window: usize,
    /// `T_{V*W}`, `T_V*` (window × inner), `T_W` (inner × window).
    pub t_vw: Mat,
    pub tv_adj: Mat,
    pub tw: Mat,
    /// `T_{UV*}`, `T_U`, `T_V*` (inner × window), `H_U`, `H_V*`.
    pub t_uv: Mat,
    pub tu: Mat,
    pub tv_adj_right: Mat,
    pub hu: Mat,
    pub hv_adj: Mat,
    /// `H_{V*W,+}` and `H_W` (inner × window).
    pub h_vw: Mat,
    pub hw: Mat,
    /// `H_{UV*,+}` and `T_{Vᵗ}*` (inner × window).
    pub h_uv: Mat,
    pub tvt_adj: Mat,
}

/// Max-entry residuals of `T_{V*W} = T_V*T_W`, `T_{UV*} = T_UT_V* + H_UH_V*`,
/// `H_{V*W,+} = T_V*H_W` and `H_{UV*,+} = H_U T_{Vᵗ}*`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityResiduals {
    pub window: usize,
    pub toeplitz_product: f64,
    pub toeplitz_semicommutator: f64,
    pub hankel_left: f64,
    pub hankel_right: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.toeplitz_product
            .max(self.toeplitz_semicommutator)
            .max(self.hankel_left)
            .max(self.hankel_right)
    }
}

impl IdentityOperands {
    pub fn build(
        u: &MatrixPolynomial,
        v: &MatrixPolynomial,
        w: &MatrixPolynomial,
        level: usize,
    ) -> Result<Self> {
        if u.cols() != v.cols() || v.rows() != w.rows() {
            return Err(Error::Shape(format!(
                "identity battery needs U n×p, V m×p, W m×q; got U {}x{}, V {}x{}, W {}x{}",
                u.rows(),
                u.cols(),
                v.rows(),
                v.cols(),
                w.rows(),
                w.cols()
            )));
        }
        let d = max_degree(&[u, v, w]);
        if level <= 2 * d {
            return Err(Error::Precondition(format!(
                "window too small: level {level} must exceed twice the degree {d}"
            )));
        }
        let win = level - d;
        let inner = level + d;
        let vw = v.adjoint_symbol().multiply(&w.to_laurent())?;
        let uv = u.to_laurent().multiply(&v.adjoint_symbol())?;
        let vt = v.to_laurent().reflect();
        Ok(IdentityOperands {
            window: win,
            t_vw: toeplitz(&vw, win, win),
            tv_adj: toeplitz(v, inner, win).adjoint(),
            tw: toeplitz(w, inner, win),
            t_uv: toeplitz(&uv, win, win),
            tu: toeplitz(u, win, inner),
            tv_adj_right: toeplitz(v, win, inner).adjoint(),
            hu: hankel_plus(u, win, inner),
            hv_adj: hankel_plus(v, win, inner).adjoint(),
            h_vw: hankel_plus(&vw, win, win),
            hw: hankel_plus(w, inner, win),
            h_uv: hankel_plus(&uv, win, win),
            tvt_adj: toeplitz(&vt, win, inner).adjoint(),
        })
    }

    pub fn residuals(&self) -> IdentityResiduals {
        let r1 = &self.t_vw - &self.tv_adj * &self.tw;
        let r2 = &self.t_uv - (&self.tu * &self.tv_adj_right + &self.hu * &self.hv_adj);
        let r3 = &self.h_vw - &self.tv_adj * &self.hw;
        let r4 = &self.h_uv - &self.hu * &self.tvt_adj;
        IdentityResiduals {
            window: self.window,
            toeplitz_product: linalg::max_abs(&r1),
            toeplitz_semicommutator: linalg::max_abs(&r2),
            hankel_left: linalg::max_abs(&r3),
            hankel_right: linalg::max_abs(&r4),
        }
    }
}

pub fn verify_symbol_identities(
    u: &MatrixPolynomial,
    v: &MatrixPolynomial,
    w: &MatrixPolynomial,
    level: usize,
) -> Result<IdentityResiduals> {
    Ok(IdentityOperands::build(u, v, w, level)?.residuals())
}

/// Residual of `T_R = (T_GT_G* − T_KT_K*) + (H_GH_G* − H_KH_K*)` on the
/// leading `level − d` block window.
pub fn verify_defect_identity(
    g: &MatrixPolynomial,
    k: &MatrixPolynomial,
    level: usize,
) -> Result<f64> {
    let r = defect_symbol(g, k)?;
    let d = max_degree(&[g, k]);
    if level <= 2 * d {
        return Err(Error::Precondition(format!(
            "window too small: level {level} must exceed twice the degree {d}"
        )));
    }
    let win = level - d;
    let lhs = toeplitz(&r, win, win);
    let rhs =
        toeplitz_gram(g, win) - toeplitz_gram(k, win) + hankel_gram(g, win) - hankel_gram(k, win);
    Ok(linalg::max_abs(&(lhs - rhs)))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PositivityMargin {
    pub level: usize,
    pub min_eigenvalue: f64,
    pub positive: bool,
}

/// `P_N (T_GT_G* − T_KT_K*) P_N`, exact.
pub fn leech_difference(g: &MatrixPolynomial, k: &MatrixPolynomial, level: usize) -> Result<Mat> {
    if g.rows() != k.rows() {
        return Err(Error::Shape(format!(
            "G has {} rows but K has {}",
            g.rows(),
            k.rows()
        )));
    }
    Ok(toeplitz_gram(g, level) - toeplitz_gram(k, level))
}

/// `P_N (H_KH_K* − H_GH_G*) P_N`, exact.
pub fn hankel_difference(g: &MatrixPolynomial, k: &MatrixPolynomial, level: usize) -> Result<Mat> {
    if g.rows() != k.rows() {
        return Err(Error::Shape(format!(
            "G has {} rows but K has {}",
            g.rows(),
            k.rows()
        )));
    }
    Ok(hankel_gram(k, level) - hankel_gram(g, level))
}

/// Smallest eigenvalue of the level-`N` compression of `T_GT_G* − T_KT_K*`.
/// A negative margin at any level certifies that the operator is not positive.
pub fn positivity_margin(
    g: &MatrixPolynomial,
    k: &MatrixPolynomial,
    level: usize,
    tol_psd: f64,
) -> Result<PositivityMargin> {
    let d = max_degree(&[g, k]);
    if level < d + 1 {
        return Err(Error::Precondition(format!(
            "positivity level {level} must be at least degree + 1 = {}",
            d + 1
        )));
    }
    let diff = leech_difference(g, k, level)?;
    let min_eigenvalue = if diff.nrows() == 0 {
        0.0
    } else {
        linalg::min_eigenvalue(&diff)
    };
    Ok(PositivityMargin {
        level,
        min_eigenvalue,
        positive: min_eigenvalue >= -tol_psd,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FiniteRankReport {
    /// Whether `R(e^{it}) = 0` on all samples, i.e. `T_GT_G* − T_KT_K*` has finite rank.
    pub finite: bool,
    /// Sup over the samples of `‖R(e^{it})‖`.
    pub r_sup: f64,
    /// `rank(H_KH_K* − H_GH_G*)` when finite.
    pub rank: Option<usize>,
    pub delta_g: usize,
    pub delta_k: usize,
    /// `δ(G) ≤ δ(K)` and `δ(K) − δ(G) ≤ rank ≤ δ(K)`, when finite.
    pub rank_bounds_hold: Option<bool>,
    /// Max-entry gap between the Toeplitz and Hankel forms of the difference, when finite.
    pub coherence_residual: Option<f64>,
}

/// Sup over `samples` circle points of the spectral norm of a symbol.
pub fn sup_on_circle(r: &LaurentSymbol, samples: usize) -> f64 {
    crate::circle_points(samples)
        .into_iter()
        .map(|z| linalg::op_norm(&r.evaluate_unchecked(z)))
        .fold(0.0, f64::max)
}

/// Numerical rank of a Hermitian matrix relative to `scale`.
pub fn hermitian_rank(m: &Mat, tol_rel: f64, scale: f64) -> usize {
    if m.nrows() == 0 {
        return 0;
    }
    let (vals, _) = linalg::hermitian_eigen(m);
    vals.iter()
        .filter(|v| v.abs() > tol_rel * scale && v.abs() > 0.0)
        .count()
}

/// Decides whether `T_GT_G* − T_KT_K*` has finite rank by testing `R ≡ 0`
/// on the circle; when it does, reports its rank through the Hankel form.
pub fn finite_rank_test(
    g: &MatrixPolynomial,
    k: &MatrixPolynomial,
    cfg: &Config,
) -> Result<FiniteRankReport> {
    let margin = positivity_margin(g, k, cfg.trunc.max(max_degree(&[g, k]) + 1), cfg.tol.psd)?;
    if !margin.positive {
        return Err(Error::Precondition(format!(
            "T_G T_G* - T_K T_K* is not positive (margin {:.3e})",
            margin.min_eigenvalue
        )));
    }
    finite_rank_unchecked(g, k, cfg)
}

pub(crate) fn finite_rank_unchecked(
    g: &MatrixPolynomial,
    k: &MatrixPolynomial,
    cfg: &Config,
) -> Result<FiniteRankReport> {
    let r = defect_symbol(g, k)?;
    let r_sup = sup_on_circle(&r, cfg.samples);
    let delta_g = g.mcmillan_degree(cfg.tol.rank);
    let delta_k = k.mcmillan_degree(cfg.tol.rank);
    if r_sup > cfg.tol.psd {
        return Ok(FiniteRankReport {
            finite: false,
            r_sup,
            rank: None,
            delta_g,
            delta_k,
            rank_bounds_hold: None,
            coherence_residual: None,
        });
    }
    let d = max_degree(&[g, k]).max(1);
    let hk = hankel_gram(k, d);
    let hg = hankel_gram(g, d);
    let scale = linalg::op_norm(&hk).max(linalg::op_norm(&hg));
    let rank = hermitian_rank(&(&hk - &hg), cfg.tol.rank, scale);
    let bounds = delta_g <= delta_k && delta_k - delta_g <= rank && rank <= delta_k;
    let level = cfg.trunc.max(2 * d + 1);
    let coherence =
        linalg::max_abs(&(leech_difference(g, k, level)? - hankel_difference(g, k, level)?));
    Ok(FiniteRankReport {
        finite: true,
        r_sup,
        rank: Some(rank),
        delta_g,
        delta_k,
        rank_bounds_hold: Some(bounds),
        coherence_residual: Some(coherence),
    })
}

/// Instance of the projection-positivity lemma: `X` selfadjoint on `V = C^a`
/// with range in `V₁ = span(v1)`, and `Y: C^b → C^a`.
#[derive(Debug, Clone)]
pub struct ProjectionInstance {
    pub x: Mat,
    pub y: Mat,
    /// Orthonormal basis of `V₁`.
    pub v1: Mat,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProjectionVerdict {
    /// `YY* − X ≥ 0`.
    pub full_positive: bool,
    /// `Y P_{W₁} Y* − X ≥ 0`.
    pub projected_positive: bool,
    pub full_min_eig: f64,
    pub projected_min_eig: f64,
    pub projected_rank: usize,
    pub dim_v1: usize,
    pub dim_w1: usize,
}

impl ProjectionVerdict {
    pub fn agree(&self) -> bool {
        self.full_positive == self.projected_positive
    }
}

/// Evaluates both sides of `YY* − X ≥ 0 ⟺ Y P_{W₁} Y* − X ≥ 0` with
/// `W₁ = Y⁻¹[V₁]` computed as the kernel of `(I − P_{V₁}) Y`.
pub fn projection_positivity_check(
    inst: &ProjectionInstance,
    tol_psd: f64,
    tol_rank: f64,
) -> Result<ProjectionVerdict> {
    let (a, b) = inst.y.shape();
    let (xa, xb) = inst.x.shape();
    if xa != a || xb != a || inst.v1.nrows() != a {
        return Err(Error::Structure(format!(
            "X must be {a}x{a} and V1 must live in C^{a} (got X {xa}x{xb}, V1 rows {})",
            inst.v1.nrows()
        )));
    }
    let s = inst.v1.ncols();
    let scale = linalg::max_abs(&inst.x)
        .max(linalg::op_norm(&inst.y).powi(2))
        .max(1.0);
    if linalg::max_abs(&(inst.v1.adjoint() * &inst.v1 - linalg::eye(s))) > 1e-10 {
        return Err(Error::Structure("V1 basis is not orthonormal".into()));
    }
    if linalg::max_abs(&(&inst.x - inst.x.adjoint())) > 1e-12 * scale {
        return Err(Error::Structure("X is not selfadjoint".into()));
    }
    let p1 = &inst.v1 * inst.v1.adjoint();
    let q1 = linalg::eye(a) - &p1;
    if linalg::max_abs(&(&q1 * &inst.x)) > 1e-10 * scale {
        return Err(Error::Structure("range of X is not contained in V1".into()));
    }
    // W₁ = ker((I − P₁)Y).
    let qy = &q1 * &inst.y;
    let (_, sv, v) = linalg::full_svd(&qy);
    let ynorm = linalg::op_norm(&inst.y).max(f64::MIN_POSITIVE);
    let kept = sv.iter().filter(|&&x| x > tol_rank * ynorm).count();
    let w1 = v.columns(kept, b - kept).into_owned();
    let pw1 = &w1 * w1.adjoint();
    let full = &inst.y * inst.y.adjoint() - &inst.x;
    let projected = &inst.y * pw1 * inst.y.adjoint() - &inst.x;
    let full_min_eig = linalg::min_eigenvalue(&full);
    let projected_min_eig = linalg::min_eigenvalue(&projected);
    Ok(ProjectionVerdict {
        full_positive: full_min_eig >= -tol_psd,
        projected_positive: projected_min_eig >= -tol_psd,
        full_min_eig,
        projected_min_eig,
        projected_rank: hermitian_rank(&projected, tol_rank, scale),
        dim_v1: s,
        dim_w1: w1.ncols(),
    })
}

/// Random structured instance with `dim V ≤ max_dim`. Half of the instances
/// pin the spectrum of `Y P_{W₁} Y* − X` on `V₁` away from zero with a random
/// sign pattern, the other half draw `X` freely.
pub fn random_projection_instance<R: rand::Rng>(rng: &mut R, max_dim: usize) -> ProjectionInstance {
    let a = rng.gen_range(2..=max_dim.max(2));
    let s = rng.gen_range(1..a);
    let b = rng.gen_range(1..=max_dim.max(1));
    let basis = linalg::random_unitary(rng, a);
    let v1 = basis.columns(0, s).into_owned();
    let y = linalg::random_matrix(rng, a, b);
    let x1 = if rng.gen_bool(0.5) {
        // X₁ = Y₁Y₁* − D with D = diag(±d) in a random basis of V₁.
        let q1 = linalg::eye(a) - &v1 * v1.adjoint();
        let (_, sv, v) = linalg::full_svd(&(&q1 * &y));
        let kept = sv.iter().filter(|&&x| x > 1e-10).count();
        let w1 = v.columns(kept, b - kept).into_owned();
        let sproj = v1.adjoint() * &y * &w1 * w1.adjoint() * y.adjoint() * &v1;
        let negative = rng.gen_bool(0.5);
        let mut dvals: Vec<f64> = (0..s).map(|_| rng.gen_range(0.1..1.0)).collect();
        if negative {
            let idx = rng.gen_range(0..s);
            dvals[idx] = -rng.gen_range(0.1..1.0);
        }
        let u = linalg::random_unitary(rng, s);
        let dm = Mat::from_diagonal(&nalgebra::DVector::from_iterator(
            s,
            dvals.into_iter().map(linalg::real),
        ));
        sproj - &u * dm * u.adjoint()
    } else {
        let h = linalg::random_matrix(rng, s, s);
        (&h + h.adjoint()) * linalg::real(rng.gen_range(0.05..1.5))
    };
    let x = &v1 * x1 * v1.adjoint();
    let x = (&x + x.adjoint()) * linalg::real(0.5);
    ProjectionInstance { x, y, v1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_matrix, real};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corona_g() -> MatrixPolynomial {
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

    fn random_poly(rng: &mut ChaCha8Rng, r: usize, c: usize, d: usize) -> MatrixPolynomial {
        MatrixPolynomial::new(r, c, (0..=d).map(|_| random_matrix(rng, r, c)).collect()).unwrap()
    }

    #[test]
    fn toeplitz_of_z_is_lower_shift() {
        let z = MatrixPolynomial::new(
            1,
            1,
            vec![Mat::zeros(1, 1), Mat::from_element(1, 1, real(1.0))],
        )
        .unwrap();
        let t = truncate(&z, OperatorKind::Toeplitz, 3).unwrap();
        assert_eq!(t.matrix, forward_shift(1, 3));
        assert!(truncate(&z, OperatorKind::Toeplitz, 0).is_err());
    }

    #[test]
    fn corona_hankel_has_single_block() {
        let h = truncate(&corona_g(), OperatorKind::HankelPlus, 3)
            .unwrap()
            .matrix;
        assert_eq!(h.shape(), (3, 6));
        let mut expect = Mat::zeros(3, 6);
        expect[(0, 1)] = real(1.0);
        assert_eq!(h, expect);
    }

    #[test]
    fn analytic_symbol_has_zero_antianalytic_hankel() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = random_poly(&mut rng, 2, 2, 3);
        let h = truncate(&k, OperatorKind::HankelMinus, 5).unwrap().matrix;
        assert_eq!(linalg::max_abs(&h), 0.0);
    }

    #[test]
    fn identities_hold_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_poly(&mut rng, 2, 2, 2);
        let v = random_poly(&mut rng, 2, 2, 2);
        let w = random_poly(&mut rng, 2, 2, 2);
        let res = verify_symbol_identities(&u, &v, &w, 16).unwrap();
        assert!(res.max() < 1e-12, "{res:?}");
    }

    #[test]
    fn identity_constant_gives_identity_operator() {
        let id = MatrixPolynomial::identity(2);
        let ops = IdentityOperands::build(&id, &id, &id, 4).unwrap();
        assert_eq!(ops.t_vw, linalg::eye(8));
        assert!(ops.residuals().max() == 0.0);
    }

    #[test]
    fn identity_window_precondition() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_poly(&mut rng, 1, 1, 3);
        assert!(matches!(
            verify_symbol_identities(&v, &v, &v, 6),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn corrupted_hankel_is_detected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = random_poly(&mut rng, 2, 2, 2);
        let mut ops = IdentityOperands::build(&v, &v, &v, 8).unwrap();
        ops.hw[(0, 0)] += real(1e-3);
        assert!(ops.residuals().hankel_left > 1e-4);
    }

    #[test]
    fn defect_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random_poly(&mut rng, 2, 3, 2);
        let k = random_poly(&mut rng, 2, 2, 3);
        assert!(verify_defect_identity(&g, &k, 12).unwrap() < 1e-12);
    }

    #[test]
    fn margins() {
        let g = corona_g();
        let one = MatrixPolynomial::identity(1);
        let m = positivity_margin(&g, &one, 16, 1e-8).unwrap();
        assert!((m.min_eigenvalue - 3.0).abs() < 1e-12 && m.positive);
        let same = positivity_margin(&g, &g, 16, 1e-8).unwrap();
        assert!(same.min_eigenvalue.abs() < 1e-12 && same.positive);
        let zero = MatrixPolynomial::zero(1, 1);
        let neg = positivity_margin(&zero, &one, 4, 1e-8).unwrap();
        assert!((neg.min_eigenvalue + 1.0).abs() < 1e-12 && !neg.positive);
    }

    #[test]
    fn margin_monotone_in_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = random_poly(&mut rng, 2, 3, 2);
        let k = random_poly(&mut rng, 2, 2, 1).scale(real(0.3));
        let mut last = f64::INFINITY;
        for n in 3..20 {
            let m = positivity_margin(&g, &k, n, 1e-8).unwrap().min_eigenvalue;
            assert!(m <= last + 1e-12);
            last = m;
        }
    }

    #[test]
    fn finite_rank_examples() {
        let cfg = Config::default();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g = random_poly(&mut rng, 2, 2, 3);
        let rep = finite_rank_test(&g, &g, &cfg).unwrap();
        assert!(rep.finite && rep.rank == Some(0) && rep.rank_bounds_hold == Some(true));
        let coiso = MatrixPolynomial::constant(Mat::from_row_slice(1, 2, &[real(1.0), real(0.0)]));
        let rep = finite_rank_test(&coiso, &MatrixPolynomial::identity(1), &cfg).unwrap();
        assert!(rep.finite && rep.rank == Some(0));
        let rep = finite_rank_test(&corona_g(), &MatrixPolynomial::identity(1), &cfg).unwrap();
        assert!(!rep.finite && (rep.r_sup - 4.0).abs() < 1e-12);
        let refused = finite_rank_test(
            &MatrixPolynomial::zero(1, 1),
            &MatrixPolynomial::identity(1),
            &cfg,
        );
        assert!(matches!(refused, Err(Error::Precondition(_))));
    }

    #[test]
    fn hankel_intertwining() {
        // S_m* H_G = H_G S_p on the window.
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let g = random_poly(&mut rng, 2, 3, 3);
        let n = 10;
        let h = hankel_plus(&g, n, n + 1);
        let lhs = forward_shift(2, n).adjoint() * hankel_plus(&g, n, n);
        let rhs = &h * forward_shift(3, n + 1).columns(0, 3 * n);
        let lhs_win = lhs.view((0, 0), (2 * (n - 1), 3 * n)).into_owned();
        let rhs_win = rhs.view((0, 0), (2 * (n - 1), 3 * n)).into_owned();
        assert!(linalg::max_abs(&(lhs_win - rhs_win)) == 0.0);
    }

    #[test]
    fn projection_lemma_trivial_and_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let v1 = linalg::random_unitary(&mut rng, 4)
            .columns(0, 2)
            .into_owned();
        let inst = ProjectionInstance {
            x: Mat::zeros(4, 4),
            y: random_matrix(&mut rng, 4, 3),
            v1: v1.clone(),
        };
        let v = projection_positivity_check(&inst, 1e-8, 1e-9).unwrap();
        assert!(v.full_positive && v.projected_positive);
        let bad = ProjectionInstance {
            x: Mat::identity(4, 4),
            ..inst
        };
        assert!(matches!(
            projection_positivity_check(&bad, 1e-8, 1e-9),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn projection_lemma_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let mut seen = [0usize; 2];
        for _ in 0..50 {
            let inst = random_projection_instance(&mut rng, 8);
            let v = projection_positivity_check(&inst, 1e-8, 1e-9).unwrap();
            assert!(v.agree(), "{v:?}");
            assert!(v.projected_rank <= v.dim_v1);
            seen[v.full_positive as usize] += 1;
        }
        assert!(seen[0] > 0 && seen[1] > 0, "{seen:?}");
    }
}
