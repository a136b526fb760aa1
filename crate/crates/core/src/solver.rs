//! End-to-end construction of a contractive rational solution of `G X = K`:
//! augment `K` to `K̃ = [K F]` with `F = Φ*Θ`, factor the finite-rank defect,
//! read the colligation off the lurking isometry and realize it.

use crate::error::{Error, Result, Stage};
use crate::linalg::{self, Cx, Mat};
use crate::report::{Degrees, SolveReport, Verdict, VerifyReport, SCHEMA};
use crate::spectral::{self, SpectralFactor};
use crate::subspace::{self, InnerFunction, InvariantSubspace, MSpace};
use crate::symbols::{defect_symbol, Evaluate, LaurentSymbol, MatrixPolynomial, StateSpace};
use crate::toeplitz;
use crate::Config;
use serde::Serialize;
use std::collections::BTreeMap;

/// `F = Φ*Θ` with its analyticity and factorization diagnostics.
#[derive(Debug, Clone)]
pub struct FFactor {
    /// `m × k` analytic part.
    pub f: MatrixPolynomial,
    /// Largest norm among the discarded negative-power coefficients.
    pub negative_mass: f64,
    /// Sup over the samples of `‖FF* − R‖`.
    pub gram_residual: f64,
    /// Sup over the samples of `‖Φ − ΘF*‖`.
    pub phi_residual: f64,
}

/// Coefficients of `Φ*Θ` from the Taylor data of both factors; `tol` bounds
/// the negative-power mass that may be discarded.
pub fn build_f(
    phi: &MatrixPolynomial,
    inner: &InnerFunction,
    r: &LaurentSymbol,
    tol: f64,
    cfg: &Config,
) -> Result<FFactor> {
    let m = phi.cols();
    let rr = phi.rows();
    let theta = &inner.theta;
    if theta.d.nrows() != rr {
        return Err(Error::Shape(format!(
            "Φ has {rr} rows but Θ has {}",
            theta.d.nrows()
        )));
    }
    let k = theta.d.ncols();
    if rr == 0 {
        return Ok(FFactor {
            f: MatrixPolynomial::zero(m, k),
            negative_mass: 0.0,
            gram_residual: spectral::sample_residual(phi, r, cfg.samples),
            phi_residual: 0.0,
        });
    }
    let dphi = phi.degree();
    let e = inner.taylor.degree();
    let tc = theta.taylor(e + dphi + 2);
    let coeff = |shift: i64| {
        let mut acc = linalg::zeros(m, k);
        for (a, pa) in phi.coeffs().iter().enumerate() {
            let idx = a as i64 + shift;
            if idx >= 0 {
                if let Some(t) = tc.get(idx as usize) {
                    acc += pa.adjoint() * t;
                }
            }
        }
        acc
    };
    let negative_mass = (1..=dphi as i64)
        .map(|s| linalg::op_norm(&coeff(-s)))
        .fold(0.0, f64::max);
    if negative_mass > tol {
        return Err(Error::Residual {
            what: "negative Fourier coefficients of Φ*Θ",
            residual: negative_mass,
            tol,
        });
    }
    let f = MatrixPolynomial::new(m, k, (0..=e as i64).map(coeff).collect())?;
    let mut gram_residual: f64 = 0.0;
    let mut phi_residual: f64 = 0.0;
    for z in crate::circle_points(cfg.samples) {
        let fz = f.evaluate(z)?;
        let tz = theta.evaluate(z)?;
        gram_residual = gram_residual.max(linalg::op_norm(
            &(&fz * fz.adjoint() - r.evaluate_unchecked(z)),
        ));
        phi_residual = phi_residual.max(linalg::op_norm(&(phi.evaluate(z)? - tz * fz.adjoint())));
    }
    Ok(FFactor {
        f,
        negative_mass,
        gram_residual,
        phi_residual,
    })
}

/// Kolmogorov factor `Λ∘Λ∘*` of `H_K̃H_K̃* − H_GH_G*`.
#[derive(Debug, Clone, Serialize)]
pub struct KolmogorovFactor {
    pub nu: usize,
    /// `(L·m) × ν` columns `√λ v`, by decreasing eigenvalue.
    #[serde(skip)]
    pub columns: Mat,
    /// `Λ̂(z) = Σ_j z^j (block j of the columns)`, `m × ν`.
    #[serde(skip)]
    pub lambda_hat: MatrixPolynomial,
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    /// `‖Λ∘Λ∘* − (H_K̃H_K̃* − H_GH_G*)‖`.
    pub residual: f64,
    pub delta_g: usize,
    pub delta_k: usize,
}

pub fn augmented_defect(
    g: &MatrixPolynomial,
    kt: &MatrixPolynomial,
    dim_n: Option<usize>,
    cfg: &Config,
) -> Result<KolmogorovFactor> {
    let m = g.rows();
    let level = g.degree().max(kt.degree()).max(1);
    let diff = toeplitz::hankel_difference(g, kt, level)?;
    let (vals, vecs) = linalg::hermitian_eigen(&diff);
    let min_eigenvalue = vals.last().copied().unwrap_or(0.0);
    if min_eigenvalue < -cfg.tol.psd {
        return Err(Error::Indefinite {
            min_eig: min_eigenvalue,
        });
    }
    let nu = vals.iter().filter(|&&v| v > cfg.tol.psd).count();
    let mut columns = linalg::zeros(level * m, nu);
    for (j, v) in vals.iter().take(nu).enumerate() {
        columns.set_column(j, &(vecs.column(j) * linalg::real(v.sqrt())));
    }
    let residual = linalg::op_norm(&(&columns * columns.adjoint() - &diff));
    let lambda_hat = MatrixPolynomial::new(
        m,
        nu,
        (0..level)
            .map(|j| columns.rows(j * m, m).into_owned())
            .collect(),
    )?;
    let delta_g = g.mcmillan_degree(cfg.tol.rank);
    let delta_k = kt.mcmillan_degree(cfg.tol.rank);
    if let Some(dn) = dim_n {
        if nu > dn {
            return Err(Error::Structure(format!(
                "rank ν = {nu} exceeds dim N = {dn}"
            )));
        }
    }
    if delta_g > delta_k || delta_k - delta_g > nu || nu > delta_k {
        return Err(Error::Structure(format!(
            "rank bounds violated: δ(G) = {delta_g}, δ(K̃) = {delta_k}, ν = {nu}"
        )));
    }
    Ok(KolmogorovFactor {
        nu,
        columns,
        lambda_hat,
        eigenvalues: vals,
        min_eigenvalue,
        residual,
        delta_g,
        delta_k,
    })
}

/// Colligation `M∘ = [A∘ B∘; C∘ D∘]` with state block `ν × ν`.
#[derive(Debug, Clone, Serialize)]
pub struct Colligation {
    #[serde(skip)]
    pub m: Mat,
    pub nu: usize,
    pub p: usize,
    pub q_tilde: usize,
    #[serde(skip)]
    pub m1: Mat,
    #[serde(skip)]
    pub m_star: Mat,
    pub n_quad: usize,
    /// Max-entry gap between quadrature and coefficient forms of `M₁`, `M⋆`.
    pub quad_discrepancy: f64,
    pub fundamental_residual: f64,
    pub isometry_residual: f64,
    pub snapped: bool,
    pub norm: f64,
    /// Sup over disc samples of `‖[zΛ̂ G]M∘ − [Λ̂ K̃]‖`.
    pub colligation_residual: f64,
}

impl Colligation {
    pub fn a(&self) -> Mat {
        self.m.view((0, 0), (self.nu, self.nu)).into_owned()
    }
    pub fn b(&self) -> Mat {
        self.m
            .view((0, self.nu), (self.nu, self.q_tilde))
            .into_owned()
    }
    pub fn c(&self) -> Mat {
        self.m.view((self.nu, 0), (self.p, self.nu)).into_owned()
    }
    pub fn d(&self) -> Mat {
        self.m
            .view((self.nu, self.nu), (self.p, self.q_tilde))
            .into_owned()
    }
}

/// `V = [zΛ̂ G]` and `W = [Λ̂ K̃]` as coefficient lists.
fn lurking_rows(
    lh: &MatrixPolynomial,
    g: &MatrixPolynomial,
    kt: &MatrixPolynomial,
) -> Result<(MatrixPolynomial, MatrixPolynomial)> {
    let v = MatrixPolynomial::hcat(&[&lh.shift(), g])?;
    let w = MatrixPolynomial::hcat(&[lh, kt])?;
    Ok((v, w))
}

fn coefficient_gram(a: &MatrixPolynomial, b: &MatrixPolynomial) -> Mat {
    let mut acc = linalg::zeros(a.cols(), b.cols());
    for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
        acc += x.adjoint() * y;
    }
    acc
}

fn quadrature_gram(a: &MatrixPolynomial, b: &MatrixPolynomial, n: usize) -> Result<Mat> {
    let mut acc = linalg::zeros(a.cols(), b.cols());
    for z in crate::circle_points(n) {
        acc += a.evaluate(z)?.adjoint() * b.evaluate(z)?;
    }
    Ok(acc / linalg::real(n as f64))
}

/// Interior points used for the kernel identity and the colligation check.
fn disc_grid(radii: usize, angles: usize) -> Vec<Cx> {
    let mut out = Vec::with_capacity(radii * angles);
    for i in 0..radii {
        let rad = 0.95 * (i + 1) as f64 / radii as f64;
        for j in 0..angles {
            let t = 2.0 * std::f64::consts::PI * (j as f64 + 0.5 * i as f64) / angles as f64;
            out.push(Cx::from_polar(rad, t));
        }
    }
    out
}

pub fn lurking_isometry(
    kf: &KolmogorovFactor,
    g: &MatrixPolynomial,
    kt: &MatrixPolynomial,
    n_quad: usize,
    cfg: &Config,
) -> Result<Colligation> {
    let (v, w) = lurking_rows(&kf.lambda_hat, g, kt)?;
    let scale = v
        .coeffs()
        .iter()
        .chain(w.coeffs())
        .map(linalg::op_norm)
        .fold(1.0, f64::max)
        .powi(2);

    // Kernel identity V(z)V(w)* = W(z)W(w)* on an 8-point grid, all pairs.
    let pts: Vec<Cx> = (0..8)
        .map(|k| {
            Cx::from_polar(
                0.9 * (k + 1) as f64 / 8.0,
                0.3 + 2.0 * std::f64::consts::PI * k as f64 / 8.0,
            )
        })
        .collect();
    let vs: Vec<Mat> = pts.iter().map(|&z| v.evaluate(z)).collect::<Result<_>>()?;
    let ws: Vec<Mat> = pts.iter().map(|&z| w.evaluate(z)).collect::<Result<_>>()?;
    let mut fundamental_residual: f64 = 0.0;
    for i in 0..8 {
        for j in 0..8 {
            let d = &vs[i] * vs[j].adjoint() - &ws[i] * ws[j].adjoint();
            fundamental_residual = fundamental_residual.max(linalg::op_norm(&d));
        }
    }
    if fundamental_residual > cfg.tol.fact * scale {
        return Err(Error::Residual {
            what: "kernel identity V(z)V(w)* = W(z)W(w)*",
            residual: fundamental_residual,
            tol: cfg.tol.fact * scale,
        });
    }

    let m1 = coefficient_gram(&v, &v);
    let m_star = coefficient_gram(&v, &w);
    let quad_discrepancy = linalg::max_abs(&(quadrature_gram(&v, &v, n_quad)? - &m1)).max(
        linalg::max_abs(&(quadrature_gram(&v, &w, n_quad)? - &m_star)),
    );

    let mut m = linalg::pinv(&m1, cfg.tol.rank) * &m_star;
    let mut isometry_residual = linalg::max_abs(&(&m * m.adjoint() * &m - &m));
    let mut snapped = false;
    if isometry_residual > cfg.tol.iso {
        if isometry_residual > cfg.tol.iso.sqrt() {
            return Err(Error::Residual {
                what: "partial isometry M M* M = M",
                residual: isometry_residual,
                tol: cfg.tol.iso.sqrt(),
            });
        }
        // Polar snap: keep the partial isometry of the polar decomposition.
        let (u, s, vv) = linalg::full_svd(&m);
        let k = s.iter().filter(|&&x| x > 0.5).count();
        m = u.columns(0, k) * vv.columns(0, k).adjoint();
        isometry_residual = linalg::max_abs(&(&m * m.adjoint() * &m - &m));
        snapped = true;
    }
    let norm = linalg::op_norm(&m);
    if norm > 1.0 + cfg.tol.iso {
        return Err(Error::Residual {
            what: "contractivity of the colligation",
            residual: norm - 1.0,
            tol: cfg.tol.iso,
        });
    }
    let mut colligation_residual: f64 = 0.0;
    for z in disc_grid(8, 8) {
        let d = v.evaluate(z)? * &m - w.evaluate(z)?;
        colligation_residual = colligation_residual.max(linalg::op_norm(&d));
    }
    Ok(Colligation {
        m,
        nu: kf.nu,
        p: g.cols(),
        q_tilde: kt.cols(),
        m1,
        m_star,
        n_quad,
        quad_discrepancy,
        fundamental_residual,
        isometry_residual,
        snapped,
        norm,
        colligation_residual,
    })
}

#[derive(Debug, Clone)]
pub struct Realization {
    pub x_tilde: StateSpace,
    pub x: StateSpace,
    pub y: StateSpace,
}

/// `X̃(z) = D∘ + zC∘(I − zA∘)⁻¹B∘`, split into its first `q` and last `k` input columns.
pub fn realize_solution(col: &Colligation, q: usize, k: usize) -> Result<Realization> {
    if q + k != col.q_tilde {
        return Err(Error::Shape(format!(
            "q + k = {} but the colligation has {} inputs",
            q + k,
            col.q_tilde
        )));
    }
    let x_tilde = StateSpace::new(col.a(), col.b(), col.c(), col.d())?;
    Ok(Realization {
        x: x_tilde.input_columns(0, q),
        y: x_tilde.input_columns(q, k),
        x_tilde,
    })
}

/// Samples `‖GX − K‖` and `‖X‖` on the circle and on a 16-radius disc grid.
pub fn verify_solution(
    g: &MatrixPolynomial,
    k: &MatrixPolynomial,
    x: &StateSpace,
    cfg: &Config,
) -> Result<VerifyReport> {
    let (xr, xc) = x.d.shape();
    if g.cols() != xr || k.cols() != xc || g.rows() != k.rows() {
        return Err(Error::Shape(format!(
            "G {}x{}, X {}x{}, K {}x{}",
            g.rows(),
            g.cols(),
            xr,
            xc,
            k.rows(),
            k.cols()
        )));
    }
    let rho = x.spectral_radius();
    let boundary_radius = if rho < 1.0 - 1e-6 { 1.0 } else { 1.0 - 1e-6 };
    let mut points: Vec<Cx> = crate::circle_points(cfg.samples)
        .into_iter()
        .map(|z| z * boundary_radius)
        .collect();
    points.extend(disc_grid(16, 32));
    let mut residual: f64 = 0.0;
    let mut norm: f64 = 0.0;
    for z in points {
        let xz = x.evaluate(z)?;
        residual = residual.max(linalg::op_norm(&(g.evaluate(z)? * &xz - k.evaluate(z)?)));
        norm = norm.max(linalg::op_norm(&xz));
    }
    let degree = x.mcmillan_degree(cfg.tol.rank);
    Ok(VerifyReport {
        residual,
        norm,
        degree,
        circle_samples: cfg.samples,
        disc_radii: 16,
        boundary_radius,
        spectral_radius: rho,
        pass: residual <= cfg.tol.sol && norm <= 1.0 + cfg.tol.sol,
    })
}

/// Everything the pipeline produced.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: StateSpace,
    pub y: StateSpace,
    pub x_tilde: StateSpace,
    pub defect: LaurentSymbol,
    pub factor: Option<SpectralFactor>,
    pub n_space: InvariantSubspace,
    pub m_space: Option<MSpace>,
    pub inner: Option<InnerFunction>,
    pub f: Option<FFactor>,
    pub k_tilde: MatrixPolynomial,
    pub kolmogorov: KolmogorovFactor,
    pub colligation: Colligation,
    pub report: SolveReport,
}

/// Outer factor of `R`, the space `M_Φ` and the inner `Θ`. Also returns the
/// configuration with tolerances loosened to the accuracy reached by `Φ`,
/// which later stages should use.
pub fn factor_and_inner(
    r: &LaurentSymbol,
    n: &InvariantSubspace,
    cfg: &Config,
) -> Result<(SpectralFactor, MSpace, InnerFunction, Config)> {
    let factor = spectral::outer_spectral_factor(r, cfg)
        .map_err(|e| e.at(Stage::SpectralFactor, "R = Φ*Φ with Φ outer"))?;
    let scale = r.coeffs().iter().map(linalg::op_norm).fold(1.0, f64::max);
    let slack = 10.0 * factor.diagnostics.coefficient_residual / scale;
    let mut stage_cfg = cfg.clone();
    stage_cfg.tol.fact = cfg.tol.fact.max(slack);
    stage_cfg.tol.inner = cfg.tol.inner.max(slack.sqrt().min(1e-4));
    stage_cfg.tol.inv = cfg.tol.inv.max(slack);
    let ms = subspace::m_space(&factor.phi, n, cfg.trunc, &stage_cfg)
        .map_err(|e| e.at(Stage::MSpace, "M = preimage of N under T_Φ*"))?;
    let inner = subspace::inner_from_subspace(&ms.subspace, &stage_cfg)
        .map_err(|e| e.at(Stage::Inner, "Ker T_Θ* = M with Θ two-sided inner"))?;
    Ok((factor, ms, inner, stage_cfg))
}

/// Runs the full construction. Fails with [`Error::Infeasible`] when the
/// positivity margin at `cfg.trunc` is negative.
pub fn solve(g: &MatrixPolynomial, k: &MatrixPolynomial, cfg: &Config) -> Result<Solution> {
    if g.rows() != k.rows() {
        return Err(Error::Shape(format!(
            "G has {} rows but K has {}",
            g.rows(),
            k.rows()
        )));
    }
    let q = k.cols();
    let dmax = g.degree().max(k.degree());
    let trunc = cfg.trunc.max(dmax + 1);
    let margin = toeplitz::positivity_margin(g, k, trunc, cfg.tol.psd)?;
    if !margin.positive {
        return Err(Error::Infeasible {
            margin: margin.min_eigenvalue,
            level: trunc,
        });
    }
    let mut verdicts = Vec::new();
    let mut residuals = BTreeMap::new();
    verdicts.push(Verdict::at_most(
        "leech_difference_positive",
        "min eig of P_N(T_G T_G* - T_K T_K*)P_N >= -tol_psd",
        -margin.min_eigenvalue,
        cfg.tol.psd,
    ));

    let r = defect_symbol(g, k).map_err(|e| e.at(Stage::Defect, "R = GG* - KK*"))?;
    let n = subspace::n_space(g, k, cfg)
        .map_err(|e| e.at(Stage::NSpace, "N = closure(Im H_G + Im H_K)"))?;
    let r_sup = toeplitz::sup_on_circle(&r, cfg.samples);
    let degenerate = r_sup <= cfg.tol.psd;

    // Later identities inherit the accuracy of Φ.
    let mut stage_cfg = cfg.clone();
    let (factor, m_space, inner, f, k_tilde) = if degenerate {
        (None, None, None, None, k.clone())
    } else {
        let (factor, ms, inner, loosened) = factor_and_inner(&r, &n, cfg)?;
        stage_cfg = loosened;
        let scale = r.coeffs().iter().map(linalg::op_norm).fold(1.0, f64::max);
        let ff = build_f(
            &factor.phi,
            &inner,
            &r,
            stage_cfg.tol.fact * scale.sqrt(),
            &stage_cfg,
        )
        .map_err(|e| e.at(Stage::BuildF, "F = Φ*Θ is analytic"))?;
        let kt =
            MatrixPolynomial::hcat(&[k, &ff.f]).map_err(|e| e.at(Stage::BuildF, "K~ = [K F]"))?;
        (Some(factor), Some(ms), Some(inner), Some(ff), kt)
    };
    let kk = k_tilde.cols() - q;

    let kf = augmented_defect(g, &k_tilde, Some(n.dim()), &stage_cfg).map_err(|e| {
        e.at(
            Stage::AugmentedDefect,
            "T_G T_G* - T_K~ T_K~* positive with rank <= dim N",
        )
    })?;
    let maxdeg = g
        .degree()
        .max(k_tilde.degree())
        .max(kf.lambda_hat.degree() + 1);
    let n_quad = cfg.quad.unwrap_or(4 * (maxdeg + kf.nu + 1));
    let col = lurking_isometry(&kf, g, &k_tilde, n_quad, &stage_cfg)
        .map_err(|e| e.at(Stage::LurkingIsometry, "[zΛ G] M = [Λ K~]"))?;
    let real = realize_solution(&col, q, kk)
        .map_err(|e| e.at(Stage::Realization, "X~ = D + zC(I - zA)^-1 B"))?;
    let augmented = verify_solution(g, &k_tilde, &real.x_tilde, cfg)
        .map_err(|e| e.at(Stage::Verification, "G X~ = [K F]"))?;
    let verification = verify_solution(g, k, &real.x, cfg)
        .map_err(|e| e.at(Stage::Verification, "G X = K, |X| <= 1"))?;

    // Integer and identity checks of the construction.
    let rt = defect_symbol(g, &k_tilde)?;
    let aug_margin = toeplitz::positivity_margin(g, &k_tilde, trunc, cfg.tol.psd)?;
    residuals.insert(
        "augmented_defect_sup",
        toeplitz::sup_on_circle(&rt, cfg.samples),
    );
    residuals.insert("kolmogorov", kf.residual);
    residuals.insert("quadrature_vs_coefficients", col.quad_discrepancy);
    residuals.insert("kernel_identity", col.fundamental_residual);
    residuals.insert("partial_isometry", col.isometry_residual);
    residuals.insert("colligation_identity", col.colligation_residual);
    verdicts.push(Verdict::at_most(
        "augmented_difference_positive",
        "min eig of P_N(T_G T_G* - T_K~ T_K~*)P_N >= -tol_psd",
        -aug_margin.min_eigenvalue,
        cfg.tol.psd,
    ));
    verdicts.push(Verdict::at_most(
        "augmented_boundary_defect_vanishes",
        "sup |GG* - K~K~*| <= tol_psd",
        residuals["augmented_defect_sup"],
        stage_cfg.tol.psd.max(stage_cfg.tol.fact),
    ));
    verdicts.push(Verdict::holds(
        "rank_le_dim_n",
        "nu <= dim N",
        kf.nu,
        n.dim(),
        kf.nu <= n.dim(),
    ));
    verdicts.push(Verdict::holds(
        "rank_bounds",
        "delta(K~) - delta(G) <= nu <= delta(K~)",
        kf.nu,
        kf.delta_k,
        kf.delta_g <= kf.delta_k && kf.delta_k - kf.delta_g <= kf.nu && kf.nu <= kf.delta_k,
    ));
    let mut degrees = Degrees {
        r: r.mcmillan_degree(cfg.tol.rank),
        x_tilde: augmented.degree,
        x: verification.degree,
        ..Degrees::default()
    };
    let (mut r_rank, mut dim_m) = (0, 0);
    if let (Some(factor), Some(ms), Some(inner), Some(ff)) = (&factor, &m_space, &inner, &f) {
        r_rank = factor.diagnostics.rank;
        dim_m = ms.diagnostics.dim;
        degrees.phi = factor.diagnostics.degree_phi;
        // Same rank cut as the outerness witness.
        degrees.r = factor.diagnostics.degree_r;
        degrees.theta = inner.diagnostics.degree;
        let frank = stage_cfg.tol.rank.max(stage_cfg.tol.fact);
        degrees.f = ff.f.mcmillan_degree(frank);
        residuals.insert("factor_sample", factor.diagnostics.sample_residual);
        residuals.insert("theta_isometry", inner.diagnostics.isometry_residual);
        residuals.insert("theta_coisometry", inner.diagnostics.coisometry_residual);
        residuals.insert("theta_kernel", inner.diagnostics.kernel_residual);
        residuals.insert(
            "hankel_theta_projection",
            inner.diagnostics.hankel_projection_residual,
        );
        residuals.insert("f_negative_mass", ff.negative_mass);
        residuals.insert("ff_star_minus_r", ff.gram_residual);
        residuals.insert("phi_minus_theta_f_star", ff.phi_residual);
        let tail = hankel_f_tail(&factor.phi, &ff.f, &ms.subspace)?;
        residuals.insert("hankel_f_tail", tail);
        let r_scale = r.coeffs().iter().map(linalg::op_norm).fold(0.0, f64::max);
        let fact_bound = stage_cfg.tol.fact * (1.0 + r_scale);
        verdicts.push(Verdict::holds(
            "factor_degree_law",
            "2 delta(Phi) = delta(R)",
            2 * degrees.phi,
            degrees.r,
            2 * degrees.phi == degrees.r,
        ));
        verdicts.push(Verdict::holds(
            "phi_degree_le_theta",
            "delta(Phi) <= delta(Theta)",
            degrees.phi,
            degrees.theta,
            degrees.phi <= degrees.theta,
        ));
        verdicts.push(Verdict::holds(
            "theta_degree_eq_dim_m",
            "delta(Theta) = dim M",
            degrees.theta,
            dim_m,
            degrees.theta == dim_m,
        ));
        verdicts.push(Verdict::holds(
            "f_degree_eq_dim_m",
            "delta(F) = dim M",
            degrees.f,
            dim_m,
            degrees.f == dim_m,
        ));
        verdicts.push(Verdict::holds(
            "dim_m_le_dim_n",
            "dim M <= dim N",
            dim_m,
            n.dim(),
            dim_m <= n.dim(),
        ));
        verdicts.push(Verdict::at_most(
            "ff_star_eq_r",
            "sup |FF* - R| <= tol_fact",
            ff.gram_residual,
            fact_bound,
        ));
        verdicts.push(Verdict::at_most(
            "phi_eq_theta_f_star",
            "sup |Phi - Theta F*| <= tol_fact",
            ff.phi_residual,
            fact_bound,
        ));
        verdicts.push(Verdict::at_most(
            "hankel_f_tail",
            "|H_F H_F* - T_Phi* P_M T_Phi| <= tol_fact",
            tail,
            fact_bound,
        ));
    }
    let quad_exact = n_quad > 2 * maxdeg;
    verdicts.push(Verdict::at_most(
        "quadrature_matches_coefficients",
        "trapezoid and coefficient forms of M1, M* agree",
        col.quad_discrepancy,
        if quad_exact {
            1e-12 * (1.0 + linalg::max_abs(&col.m1))
        } else {
            f64::INFINITY
        },
    ));
    verdicts.push(Verdict::at_most(
        "partial_isometry",
        "|M M* M - M| <= tol_iso",
        col.isometry_residual,
        cfg.tol.iso,
    ));
    verdicts.push(Verdict::at_most(
        "colligation_contractive",
        "|M| <= 1 + tol_iso",
        col.norm,
        1.0 + cfg.tol.iso,
    ));
    verdicts.push(Verdict::at_most(
        "colligation_identity",
        "[zL G] M = [L K~] on disc samples",
        col.colligation_residual,
        cfg.tol.sol,
    ));
    verdicts.push(Verdict::holds(
        "solution_degree_le_nu",
        "delta(X~) <= nu",
        augmented.degree,
        kf.nu,
        augmented.degree <= kf.nu,
    ));
    verdicts.push(Verdict::at_most(
        "solution_residual",
        "sup |G X - K| <= tol_sol",
        verification.residual,
        cfg.tol.sol,
    ));
    verdicts.push(Verdict::at_most(
        "solution_norm",
        "sup |X| <= 1 + tol_sol",
        verification.norm,
        1.0 + cfg.tol.sol,
    ));

    let pass = verification.pass && augmented.pass && verdicts.iter().all(|v| v.pass);
    let report = SolveReport {
        schema: SCHEMA,
        positivity_margin: margin.min_eigenvalue,
        trunc,
        degenerate,
        r: r_rank,
        dim_n: n.dim(),
        dim_m,
        nu: kf.nu,
        quad: n_quad,
        degrees,
        residuals,
        verdicts,
        augmented,
        verification,
        pass,
    };
    Ok(Solution {
        x: real.x,
        y: real.y,
        x_tilde: real.x_tilde,
        defect: r,
        factor,
        n_space: n,
        m_space,
        inner,
        f,
        k_tilde,
        kolmogorov: kf,
        colligation: col,
        report,
    })
}

/// `‖H_FH_F* − T_Φ*P_MT_Φ‖` on the window of `M` (both sides exact there).
pub fn hankel_f_tail(
    phi: &MatrixPolynomial,
    f: &MatrixPolynomial,
    m: &InvariantSubspace,
) -> Result<f64> {
    let level = m.level;
    let hf = toeplitz::hankel_plus(f, level, f.degree().max(1));
    let t = toeplitz::toeplitz(phi, level, level);
    let lhs = &hf * hf.adjoint();
    let rhs = t.adjoint() * m.projector() * &t;
    if lhs.shape() != rhs.shape() {
        return Err(Error::Shape("H_F and T_Φ windows differ".into()));
    }
    Ok(linalg::op_norm(&(lhs - rhs)))
}
