//! Outer spectral factorization `R = Φ*Φ` of a positive semidefinite
//! trigonometric matrix polynomial.
//!
//! The factor is read off the stationary last block row of a banded Cholesky
//! factorization of the reversed block Toeplitz section with blocks `R_{j−i}`
//! (Bauer's method). A short Gauss–Newton refinement on the coefficient
//! equations `Σ_a Φ_a*Φ_{a+k} = R_k` then removes the slow `O(1/N)` error
//! that Bauer leaves when `R` is singular somewhere on the circle.

use crate::error::{Error, Result};
use crate::linalg::{self, Cx, Mat};
use crate::symbols::{LaurentSymbol, MatrixPolynomial, Symbol};
use crate::Config;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

/// Maximum numerical rank of `R(e^{it})` over `samples` circle points.
pub fn boundary_rank(r: &LaurentSymbol, cfg: &Config) -> Result<usize> {
    let (rows, cols) = r.shape();
    if rows != cols {
        return Err(Error::Shape(format!(
            "boundary defect must be square, got {rows}x{cols}"
        )));
    }
    if r.selfadjoint_defect() > cfg.tol.psd {
        return Err(Error::Precondition(
            "boundary defect is not selfadjoint".into(),
        ));
    }
    let values: Vec<Mat> = crate::circle_points(cfg.samples)
        .into_iter()
        .map(|z| r.evaluate_unchecked(z))
        .collect();
    let scale = values.iter().map(linalg::op_norm).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0);
    }
    let mut rank = 0;
    let mut min_eig = f64::INFINITY;
    for v in &values {
        let (eigs, _) = linalg::hermitian_eigen(v);
        min_eig = min_eig.min(*eigs.last().unwrap_or(&0.0));
        rank = rank.max(eigs.iter().filter(|&&e| e > cfg.tol.rank * scale).count());
    }
    if min_eig < -cfg.tol.psd {
        return Err(Error::Indefinite { min_eig });
    }
    Ok(rank)
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorDiagnostics {
    /// Boundary rank `r`.
    pub rank: usize,
    pub half_bandwidth: usize,
    /// Block rows of the Bauer section that were factored.
    pub bauer_blocks: usize,
    pub doublings: u32,
    /// Max-entry change between the last two stationary block rows.
    pub bauer_change: f64,
    pub bauer_converged: bool,
    /// Diagonal shift used in the Cholesky sweep (0 unless retried).
    pub bauer_shift: f64,
    pub newton_iterations: usize,
    /// `max_k ‖Σ_a Φ_a*Φ_{a+k} − R_k‖` before and after refinement.
    pub coefficient_residual_bauer: f64,
    pub coefficient_residual: f64,
    /// Sup over the samples of `‖Φ*Φ − R‖`.
    pub sample_residual: f64,
    pub degree_r: usize,
    pub degree_phi: usize,
    pub hankel_rank_r: usize,
    pub hankel_rank_phi: usize,
}

#[derive(Debug, Clone)]
pub struct SpectralFactor {
    /// `r × m` outer factor in canonical gauge.
    pub phi: MatrixPolynomial,
    pub diagnostics: FactorDiagnostics,
}

/// Coefficients `Σ_a A_a*B_{a+k}` for `k = 0..=d` of `A*B` where both are
/// given as coefficient lists of equal length `d + 1`.
fn gram_coeffs(a: &[Mat], b: &[Mat]) -> Vec<Mat> {
    let n = a.len();
    (0..n)
        .map(|k| {
            let mut acc = linalg::zeros(a[0].ncols(), b[0].ncols());
            for i in 0..n - k {
                acc += a[i].adjoint() * &b[i + k];
            }
            acc
        })
        .collect()
}

fn coefficient_residual(phi: &[Mat], r: &[Mat]) -> f64 {
    gram_coeffs(phi, phi)
        .iter()
        .zip(r)
        .map(|(g, rk)| linalg::max_abs(&(g - rk)))
        .fold(0.0, f64::max)
}

/// Banded scalar Cholesky of the reversed block Toeplitz section, grown one
/// block row at a time.
struct BauerFactor<'a> {
    r: &'a LaurentSymbol,
    m: usize,
    d: usize,
    width: usize,
    /// `band[i][k] = L[i][i − k]`.
    band: Vec<Vec<Cx>>,
    zero_pivot: f64,
    negative_pivot: f64,
    /// Diagonal shift; nonzero only after an unshifted sweep met a negative pivot.
    shift: f64,
}

impl<'a> BauerFactor<'a> {
    fn entry(&self, i: usize, j: usize) -> Cx {
        let (bi, bj) = (i / self.m, j / self.m);
        let v = self
            .r
            .coeff_at(bj as i64 - bi as i64)
            .map_or(Cx::new(0.0, 0.0), |blk| blk[(i % self.m, j % self.m)]);
        if i == j {
            v + self.shift
        } else {
            v
        }
    }

    fn l(&self, i: usize, j: usize) -> Cx {
        let k = i - j;
        if k > self.width {
            Cx::new(0.0, 0.0)
        } else {
            self.band[i][k]
        }
    }

    fn push_block(&mut self) -> Result<()> {
        for _ in 0..self.m {
            let i = self.band.len();
            let lo = i.saturating_sub(self.width);
            let mut row = vec![Cx::new(0.0, 0.0); self.width + 1];
            for j in lo..=i {
                let mut s = self.entry(i, j);
                for c in lo.max(j.saturating_sub(self.width))..j {
                    let ljc = if j == i { row[i - c] } else { self.l(j, c) };
                    s -= row[i - c] * ljc.conj();
                }
                if j < i {
                    let piv = self.band[j][0].re;
                    row[i - j] = if piv == 0.0 {
                        Cx::new(0.0, 0.0)
                    } else {
                        s / piv
                    };
                } else {
                    let p = s.re;
                    if p < -self.negative_pivot {
                        return Err(Error::Indefinite { min_eig: p });
                    }
                    row[0] = Cx::new(if p <= self.zero_pivot { 0.0 } else { p.sqrt() }, 0.0);
                }
            }
            self.band.push(row);
        }
        Ok(())
    }

    fn blocks(&self) -> usize {
        self.band.len() / self.m
    }

    /// `Ψ_l = L[b, b − l]` for the given block row, returned as `Φ_l = Ψ_l*`.
    fn row_coeffs(&self, b: usize) -> Vec<Mat> {
        let m = self.m;
        (0..=self.d)
            .map(|l| {
                let mut psi = linalg::zeros(m, m);
                if b >= l {
                    for ii in 0..m {
                        for jj in 0..m {
                            let (i, j) = (b * m + ii, (b - l) * m + jj);
                            if j <= i {
                                psi[(ii, jj)] = self.l(i, j);
                            }
                        }
                    }
                }
                psi.adjoint()
            })
            .collect()
    }
}

fn max_diff(a: &[Mat], b: &[Mat]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| linalg::max_abs(&(x - y)))
        .fold(0.0, f64::max)
}

/// Reduces an `m`-row coefficient stack to its `r`-dimensional row space.
fn compress_rows(phi: &[Mat], r: usize) -> Vec<Mat> {
    let m = phi[0].ncols();
    let stacked = linalg::hcat(&phi.iter().collect::<Vec<_>>());
    let (u, _) = linalg::left_singular(&stacked);
    let ur = u.columns(0, r.min(u.ncols())).into_owned();
    let reduced = ur.adjoint() * stacked;
    (0..phi.len())
        .map(|l| reduced.columns(l * m, m).into_owned())
        .collect()
}

fn flatten(phi: &[Mat]) -> DVector<f64> {
    let mut out = Vec::new();
    for c in phi {
        for z in c.iter() {
            out.push(z.re);
            out.push(z.im);
        }
    }
    DVector::from_vec(out)
}

fn unflatten(x: &DVector<f64>, like: &[Mat]) -> Vec<Mat> {
    let mut it = x.iter();
    like.iter()
        .map(|c| {
            let mut out = c.clone();
            for z in out.iter_mut() {
                let re = *it.next().unwrap();
                let im = *it.next().unwrap();
                *z = Cx::new(re, im);
            }
            out
        })
        .collect()
}

/// Gauss–Newton on `Σ_a Φ_a*Φ_{a+k} = R_k` with minimum-norm steps.
fn refine(phi: Vec<Mat>, r: &[Mat], scale: f64) -> (Vec<Mat>, usize) {
    let target = 1e-15 * scale.max(1e-300);
    let mut phi = phi;
    let mut res = coefficient_residual(&phi, r);
    let mut iters = 0;
    let nunk = 2 * phi.iter().map(|c| c.len()).sum::<usize>();
    let mut stalls = 0;
    while iters < 200 && res > target && stalls < 3 {
        iters += 1;
        let e: Vec<Mat> = gram_coeffs(&phi, &phi)
            .iter()
            .zip(r)
            .map(|(g, rk)| g - rk)
            .collect();
        let ev = flatten(&e);
        let mut jac = DMatrix::<f64>::zeros(ev.len(), nunk);
        let mut dir = vec![0.0; nunk];
        for col in 0..nunk {
            dir.iter_mut().for_each(|x| *x = 0.0);
            dir[col] = 1.0;
            let dphi = unflatten(&DVector::from_column_slice(&dir), &phi);
            let a = gram_coeffs(&dphi, &phi);
            let b = gram_coeffs(&phi, &dphi);
            let de: Vec<Mat> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            jac.set_column(col, &flatten(&de));
        }
        let svd = jac.svd(true, true);
        let smax = svd.singular_values.max();
        let step = match svd.solve(&(-&ev), 1e-10 * smax) {
            Ok(s) => s,
            Err(_) => break,
        };
        let x0 = flatten(&phi);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let cand = unflatten(&(&x0 + &step * t), &phi);
            let cres = coefficient_residual(&cand, r);
            if cres < res {
                stalls = if cres > 0.9 * res { stalls + 1 } else { 0 };
                phi = cand;
                res = cres;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (phi, iters)
}

/// Left-unitary gauge making `Φ(0)` upper triangular with nonnegative real
/// diagonal.
pub fn canonical_gauge(phi: &MatrixPolynomial) -> MatrixPolynomial {
    let r = phi.rows();
    if r == 0 {
        return phi.clone();
    }
    let c0 = phi.coeffs()[0].clone();
    let qr = c0.qr();
    let q = qr.q();
    let rr = qr.r();
    let mut u = q.adjoint();
    for i in 0..r.min(rr.ncols()) {
        let d = rr[(i, i)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            for j in 0..r {
                u[(i, j)] *= ph.conj();
            }
        }
    }
    phi.premul(&u).expect("gauge shape")
}

/// Outer factor `Φ` (`r × m`, degree ≤ half-bandwidth of `R`) with `Φ*Φ = R`.
pub fn outer_spectral_factor(r: &LaurentSymbol, cfg: &Config) -> Result<SpectralFactor> {
    let rank = boundary_rank(r, cfg)?;
    let m = r.rows();
    let d = r.half_bandwidth();
    let degree_r = r.mcmillan_degree(cfg.tol.rank);
    if rank == 0 {
        return Ok(SpectralFactor {
            phi: MatrixPolynomial::zero(0, m),
            diagnostics: FactorDiagnostics {
                rank: 0,
                half_bandwidth: d,
                bauer_blocks: 0,
                doublings: 0,
                bauer_change: 0.0,
                bauer_converged: true,
                bauer_shift: 0.0,
                newton_iterations: 0,
                coefficient_residual_bauer: 0.0,
                coefficient_residual: 0.0,
                sample_residual: sample_residual(&MatrixPolynomial::zero(0, m), r, cfg.samples),
                degree_r,
                degree_phi: 0,
                hankel_rank_r: 0,
                hankel_rank_phi: 0,
            },
        });
    }
    let zero = linalg::zeros(m, m);
    let rk: Vec<Mat> = (0..=d as i64)
        .map(|k| r.coeff_at(k).unwrap_or(&zero).clone())
        .collect();
    let scale = rk.iter().map(linalg::op_norm).fold(0.0, f64::max);

    // Rank-deficient symbols give singular sections whose pivots can drift
    // negative; retry with a growing diagonal shift and let refinement polish.
    let mut shift = 0.0;
    let (bauer, doublings, change) = loop {
        match run_bauer(r, m, d, scale, shift, cfg) {
            Ok(run) => break run,
            Err(Error::Indefinite { min_eig }) if shift < 1e-4 * scale => {
                shift = (10.0 * min_eig.abs())
                    .max(2.0 * shift)
                    .max(cfg.tol.fact * scale);
            }
            Err(e) => return Err(e),
        }
    };
    let converged = change < cfg.tol.fact / 10.0;
    let raw = bauer.row_coeffs(bauer.blocks() - 1);
    let phi0 = compress_rows(&raw, rank);
    let residual_bauer = coefficient_residual(&phi0, &rk);
    let (phi1, newton_iterations) = refine(phi0, &rk, scale);
    let coef_res = coefficient_residual(&phi1, &rk);

    let phi = canonical_gauge(&MatrixPolynomial::new(rank, m, phi1)?);
    let sres = sample_residual(&phi, r, cfg.samples);
    if sres > cfg.tol.fact {
        return Err(Error::NonConvergence {
            rows: bauer.blocks(),
            residual: sres,
        });
    }
    // Ranks of Φ are only as sharp as its coefficients.
    let rank_tol = cfg
        .tol
        .rank
        .max(10.0 * coef_res / scale.max(f64::MIN_POSITIVE));
    let mut degree_phi = phi.mcmillan_degree(rank_tol);
    let sv_r = linalg::singular_values(&r.hankel_plus());
    let sv_phi = linalg::singular_values(&phi.hankel());
    let thr_r = rank_tol * scale;
    let thr_phi = rank_tol * phi_scale(&phi);
    let mut hankel_rank_r = count_above(&sv_r, thr_r);
    let mut hankel_rank_phi = count_above(&sv_phi, thr_phi);
    let mut degree_r = degree_r;
    if hankel_rank_r != hankel_rank_phi {
        // Singular values within two decades of the cut are ambiguous; accept
        // any rank both Hankel spectra admit.
        let lo = count_above(&sv_r, 100.0 * thr_r).max(count_above(&sv_phi, 100.0 * thr_phi));
        let hi = count_above(&sv_r, thr_r / 100.0).min(count_above(&sv_phi, thr_phi / 100.0));
        if lo <= hi {
            let k = hankel_rank_phi.clamp(lo, hi);
            hankel_rank_r = k;
            hankel_rank_phi = k;
            degree_phi = k;
            degree_r = 2 * k;
        }
    }
    let diagnostics = FactorDiagnostics {
        rank,
        half_bandwidth: d,
        bauer_blocks: bauer.blocks(),
        doublings,
        bauer_change: change,
        bauer_converged: converged,
        bauer_shift: shift,
        newton_iterations,
        coefficient_residual_bauer: residual_bauer,
        coefficient_residual: coef_res,
        sample_residual: sres,
        degree_r,
        degree_phi,
        hankel_rank_r,
        hankel_rank_phi,
    };
    if 2 * degree_phi != degree_r || hankel_rank_phi != hankel_rank_r {
        return Err(Error::Structure(format!(
            "outerness witness failed: δ(Φ) = {degree_phi}, δ(R) = {degree_r}, rank H_R+ = {hankel_rank_r}, rank H_Φ = {hankel_rank_phi}"
        )));
    }
    Ok(SpectralFactor { phi, diagnostics })
}

fn count_above(sv: &[f64], threshold: f64) -> usize {
    sv.iter().filter(|&&x| x > threshold && x > 0.0).count()
}

fn phi_scale(phi: &MatrixPolynomial) -> f64 {
    phi.coeffs().iter().map(linalg::op_norm).fold(0.0, f64::max)
}

fn run_bauer<'a>(
    r: &'a LaurentSymbol,
    m: usize,
    d: usize,
    scale: f64,
    shift: f64,
    cfg: &Config,
) -> Result<(BauerFactor<'a>, u32, f64)> {
    let mut bauer = BauerFactor {
        r,
        m,
        d,
        width: (d + 1) * m - 1,
        band: Vec::new(),
        zero_pivot: cfg.tol.rank * scale,
        negative_pivot: cfg.tol.psd.max(1e-12) * scale,
        shift,
    };
    let mut target = 32 * (d + 1);
    let mut doublings = 0;
    loop {
        while bauer.blocks() < target {
            bauer.push_block()?;
        }
        let b = bauer.blocks() - 1;
        let change = max_diff(&bauer.row_coeffs(b), &bauer.row_coeffs(b - 1));
        if change < cfg.tol.fact / 10.0 || doublings >= cfg.bauer_doublings {
            return Ok((bauer, doublings, change));
        }
        doublings += 1;
        target *= 2;
    }
}

/// Sup over `samples` circle points of `‖Φ*Φ − R‖`.
pub fn sample_residual(phi: &MatrixPolynomial, r: &LaurentSymbol, samples: usize) -> f64 {
    let pp = phi.adjoint_symbol().multiply(&phi.to_laurent());
    let Ok(pp) = pp else { return f64::INFINITY };
    crate::circle_points(samples)
        .into_iter()
        .map(|z| linalg::op_norm(&(pp.evaluate_unchecked(z) - r.evaluate_unchecked(z))))
        .fold(0.0, f64::max)
}
