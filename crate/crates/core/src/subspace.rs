//! Backward-shift-invariant subspaces `N_Φ`, `M_Φ = (T_Φ*)⁻¹[N_Φ]` and the
//! two-sided inner function `Θ` with `Ker T_Θ* = M_Φ`.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::symbols::{block_matrix, Evaluate, MatrixPolynomial, StateSpace};
use crate::toeplitz;
use crate::Config;
use serde::Serialize;

/// Finite-dimensional subspace of `ℓ²₊(C^block)` held in a window of `level` blocks.
#[derive(Debug, Clone)]
pub struct InvariantSubspace {
    pub block: usize,
    pub level: usize,
    /// Orthonormal `(level·block) × n` basis.
    pub basis: Mat,
    /// Compression of the backward shift to the subspace.
    pub a_m: Mat,
    /// Block 0 of each basis vector.
    pub c_m: Mat,
    /// `‖S*·basis − basis·A_M‖`.
    pub gram_defect: f64,
}

/// Backward shift on a window: block `j` of the result is block `j + 1` of the input.
pub fn backward_shift(v: &Mat, block: usize) -> Mat {
    let mut out = linalg::zeros(v.nrows(), v.ncols());
    if v.nrows() > block {
        let n = v.nrows() - block;
        out.view_mut((0, 0), (n, v.ncols()))
            .copy_from(&v.view((block, 0), (n, v.ncols())));
    }
    out
}

impl InvariantSubspace {
    pub fn zero(block: usize, level: usize) -> Self {
        Self::from_orthonormal(linalg::zeros(block * level, 0), block, level)
    }

    /// Regresses the shifted basis onto the basis; the columns must be orthonormal.
    pub fn from_orthonormal(basis: Mat, block: usize, level: usize) -> Self {
        let shifted = backward_shift(&basis, block);
        let a_m = basis.adjoint() * &shifted;
        let gram_defect = linalg::op_norm(&(&shifted - &basis * &a_m));
        let c_m = basis.rows(0, block.min(basis.nrows())).into_owned();
        InvariantSubspace {
            block,
            level,
            basis,
            a_m,
            c_m,
            gram_defect,
        }
    }

    /// Orthonormalizes arbitrary spanning columns first.
    pub fn from_spanning(columns: &Mat, block: usize, level: usize, tol_rank: f64) -> Self {
        Self::from_orthonormal(linalg::column_basis(columns, tol_rank), block, level)
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> Mat {
        &self.basis * self.basis.adjoint()
    }

    /// The same subspace in a window of `level ≥ self.level` blocks.
    pub fn embed(&self, level: usize) -> Mat {
        let mut out = linalg::zeros(level * self.block, self.dim());
        let rows = self.basis.nrows().min(out.nrows());
        out.view_mut((0, 0), (rows, self.dim()))
            .copy_from(&self.basis.rows(0, rows));
        out
    }

    /// Relative mass of the basis in the last quarter of the window (max over columns).
    pub fn tail_mass(&self) -> f64 {
        let start = (self.level - self.level / 4) * self.block;
        (0..self.dim())
            .map(|j| {
                let col = self.basis.column(j);
                let tail: f64 = col.rows(start, col.nrows() - start).norm_squared();
                (tail / col.norm_squared().max(f64::MIN_POSITIVE)).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// `N_Φ = closure(Im H_G + Im H_K)` in `ℓ²₊(C^m)`.
pub fn n_space(
    g: &MatrixPolynomial,
    k: &MatrixPolynomial,
    cfg: &Config,
) -> Result<InvariantSubspace> {
    if g.rows() != k.rows() {
        return Err(Error::Shape(format!(
            "G has {} rows but K has {}",
            g.rows(),
            k.rows()
        )));
    }
    let m = g.rows();
    let level = g.degree().max(k.degree()).max(1);
    let hg = toeplitz::hankel_plus(g, level, g.degree());
    let hk = toeplitz::hankel_plus(k, level, k.degree());
    let cols = linalg::hcat(&[&hg, &hk]);
    if linalg::max_abs(&cols) == 0.0 {
        return Ok(InvariantSubspace::zero(m, level));
    }
    Ok(InvariantSubspace::from_spanning(
        &cols,
        m,
        level,
        cfg.tol.rank,
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct MSpaceDiagnostics {
    pub level: usize,
    pub retries: usize,
    pub dim: usize,
    /// Largest singular value assigned to the kernel, relative to the top one.
    pub kernel_level: f64,
    /// Smallest retained singular value, relative.
    pub retained_gap: f64,
    pub tail_mass: f64,
    /// `‖(I − P_M) H_Φ‖`, relative to `‖H_Φ‖`.
    pub hankel_inclusion: f64,
    pub invariance_defect: f64,
}

#[derive(Debug, Clone)]
pub struct MSpace {
    pub subspace: InvariantSubspace,
    pub diagnostics: MSpaceDiagnostics,
}

/// Relative kernel threshold used by the gap rule: singular values up to this
/// level are assigned to the kernel when followed by a gap of at least
/// [`GAP_RATIO`].
const GAP_CEILING: f64 = 1e-6;
const GAP_RATIO: f64 = 1e3;

/// Dimension of the numerical kernel from ascending relative singular values.
fn kernel_dimension(ascending: &[f64], tol_rank: f64) -> usize {
    let start = ascending.iter().take_while(|&&s| s <= tol_rank).count();
    let mut n = start;
    for k in start..ascending.len() {
        if ascending[k] > GAP_CEILING {
            break;
        }
        let next = ascending.get(k + 1).copied().unwrap_or(f64::INFINITY);
        if next >= GAP_RATIO * ascending[k].max(f64::MIN_POSITIVE) {
            n = k + 1;
        }
    }
    n
}

/// `M_Φ = (T_Φ*)⁻¹[N_Φ]` in `ℓ²₊(C^r)`, as the kernel of `Q·T_Φ*` on a window
/// where `Q` projects onto the complement of `N_Φ`.
pub fn m_space(
    phi: &MatrixPolynomial,
    n_sub: &InvariantSubspace,
    level: usize,
    cfg: &Config,
) -> Result<MSpace> {
    let r = phi.rows();
    let m = phi.cols();
    if n_sub.block != m {
        return Err(Error::Shape(format!(
            "N lives in C^{} but Φ has {m} columns",
            n_sub.block
        )));
    }
    let mut level = level.max(n_sub.level).max(8 * (phi.degree() + 1));
    if r == 0 {
        return Ok(MSpace {
            subspace: InvariantSubspace::zero(0, level),
            diagnostics: MSpaceDiagnostics {
                level,
                retries: 0,
                dim: 0,
                kernel_level: 0.0,
                retained_gap: 1.0,
                tail_mass: 0.0,
                hankel_inclusion: 0.0,
                invariance_defect: 0.0,
            },
        });
    }
    let mut retries = 0;
    loop {
        let nb = n_sub.embed(level);
        let q = linalg::eye(level * m) - &nb * nb.adjoint();
        let t_adj = toeplitz::toeplitz(phi, level, level).adjoint();
        let op = q * &t_adj;
        let (_, s, v) = linalg::full_svd(&op);
        let top = s.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
        let ascending: Vec<f64> = s.iter().rev().map(|x| x / top).collect();
        let dim = kernel_dimension(&ascending, cfg.tol.rank);
        let kernel_level = if dim == 0 { 0.0 } else { ascending[dim - 1] };
        let retained_gap = ascending.get(dim).copied().unwrap_or(1.0);
        let cols = v.ncols();
        let basis = v.columns(cols - dim, dim).into_owned();
        let sub = InvariantSubspace::from_orthonormal(basis, r, level);
        let tail = sub.tail_mass();
        if tail > cfg.tol.tail {
            if retries >= 3 {
                return Err(Error::Truncation { level, tail });
            }
            retries += 1;
            level *= 2;
            continue;
        }
        if dim > n_sub.dim() {
            return Err(Error::Structure(format!(
                "dim M_Φ = {dim} exceeds dim N_Φ = {}",
                n_sub.dim()
            )));
        }
        // Checks are only as sharp as the kernel itself.
        let tol = cfg.tol.inv.max(10.0 * kernel_level);
        let h_phi = toeplitz::hankel_plus(phi, level, phi.degree().max(1));
        let h_norm = linalg::op_norm(&h_phi);
        let hankel_inclusion = if h_norm == 0.0 {
            0.0
        } else {
            linalg::op_norm(&(&h_phi - sub.projector() * &h_phi)) / h_norm
        };
        if hankel_inclusion > tol {
            return Err(Error::Residual {
                what: "range of H_Φ inside M_Φ",
                residual: hankel_inclusion,
                tol,
            });
        }
        if sub.gram_defect > tol {
            return Err(Error::Residual {
                what: "backward-shift invariance of M_Φ",
                residual: sub.gram_defect,
                tol,
            });
        }
        let invariance_defect = sub.gram_defect;
        return Ok(MSpace {
            subspace: sub,
            diagnostics: MSpaceDiagnostics {
                level,
                retries,
                dim,
                kernel_level,
                retained_gap,
                tail_mass: tail,
                hankel_inclusion,
                invariance_defect,
            },
        });
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InnerDiagnostics {
    pub dim: usize,
    pub degree: usize,
    /// Sup over the samples of `‖Θ*Θ − I‖` and `‖ΘΘ* − I‖`.
    pub isometry_residual: f64,
    pub coisometry_residual: f64,
    /// `‖T_Θ*·basis(M)‖`.
    pub kernel_residual: f64,
    /// `‖H_ΘH_Θ* − P_M‖` on the window.
    pub hankel_projection_residual: f64,
    /// `‖T_ΘT_Θ* − (I − P_M)‖` on the window.
    pub toeplitz_projection_residual: f64,
    pub stein_residual: f64,
}

#[derive(Debug, Clone)]
pub struct InnerFunction {
    pub theta: StateSpace,
    /// Taylor polynomial of `Θ`; `exact` when the series terminates.
    pub taylor: MatrixPolynomial,
    pub exact: bool,
    pub diagnostics: InnerDiagnostics,
}

/// Solves `P = A*PA + C*C` through its Kronecker form.
pub fn stein(a: &Mat, c: &Mat) -> Result<Mat> {
    let n = a.nrows();
    if n == 0 {
        return Ok(linalg::zeros(0, 0));
    }
    // vec(A*PA) = (Aᵀ ⊗ A*) vec(P) for column-major vec.
    let at = a.transpose();
    let ah = a.adjoint();
    let kron = at.kronecker(&ah);
    let lhs = linalg::eye(n * n) - kron;
    let rhs_m = c.adjoint() * c;
    let rhs = nalgebra::DVector::from_iterator(n * n, rhs_m.iter().copied());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Structure("Stein equation is singular".into()))?;
    let p = Mat::from_iterator(n, n, sol.iter().copied());
    Ok((&p + p.adjoint()) * linalg::real(0.5))
}

/// Right-unitary gauge making `Θ(0)` lower triangular with nonnegative real diagonal.
pub fn canonical_right_gauge(theta: &StateSpace) -> StateSpace {
    let r = theta.d.ncols();
    if r == 0 || theta.d.nrows() != r {
        return theta.clone();
    }
    let qr = theta.d.adjoint().qr();
    let mut q = qr.q();
    let rr = qr.r();
    for i in 0..r {
        let d = rr[(i, i)];
        if d.norm() > 0.0 {
            let ph = d / d.norm();
            for k in 0..r {
                q[(k, i)] *= ph;
            }
        }
    }
    StateSpace {
        a: theta.a.clone(),
        b: &theta.b * &q,
        c: theta.c.clone(),
        d: &theta.d * &q,
    }
}

/// Two-sided inner `Θ` (`r × r`) with `Ker T_Θ* = M`, built by unitary
/// completion of the normalized observability pair of `(A_M, C_M)`.
pub fn inner_from_subspace(m_sub: &InvariantSubspace, cfg: &Config) -> Result<InnerFunction> {
    let r = m_sub.block;
    let n = m_sub.dim();
    let a = &m_sub.a_m;
    let c = &m_sub.c_m;
    let rho = linalg::spectral_radius(a);
    if rho >= 1.0 - cfg.tol.stab {
        return Err(Error::Precondition(format!(
            "spectral radius of A_M is {rho}, not below 1"
        )));
    }
    let p = stein(a, c)?;
    let stein_residual = linalg::max_abs(&(&p - a.adjoint() * &p * a - c.adjoint() * c));
    let (vals, vecs) = linalg::hermitian_eigen(&p);
    if vals.iter().any(|&v| v <= 0.0) {
        return Err(Error::Structure(
            "observability Gramian is not positive definite".into(),
        ));
    }
    let sqrt_d = |pow: f64| {
        let d = Mat::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            vals.iter().map(|v| linalg::real(v.powf(pow))),
        ));
        &vecs * d * vecs.adjoint()
    };
    let (ph, pmh) = (sqrt_d(0.5), sqrt_d(-0.5));
    let at = &ph * a * &pmh;
    let ct = c * &pmh;
    let w = linalg::vcat(&[&at, &ct]);
    let comp = linalg::orthogonal_complement(&w);
    if comp.ncols() != r {
        return Err(Error::Structure(format!(
            "unitary completion defect: complement has dimension {} instead of {r}",
            comp.ncols()
        )));
    }
    let bt = comp.rows(0, n).into_owned();
    let dt = comp.rows(n, r).into_owned();
    let colligation = linalg::hcat(&[&w, &comp]);
    let unitarity = linalg::max_abs(&(colligation.adjoint() * &colligation - linalg::eye(n + r)));
    if unitarity > cfg.tol.inner {
        return Err(Error::Residual {
            what: "unitarity of the completed colligation",
            residual: unitarity,
            tol: cfg.tol.inner,
        });
    }
    let theta = canonical_right_gauge(&StateSpace::new(at, bt, ct, dt)?);
    let diagnostics = inner_checks(&theta, m_sub, cfg, stein_residual)?;
    let (taylor, exact) = theta.to_polynomial(cfg.tol.inner * 1e-3, 4 * m_sub.level.max(1));
    Ok(InnerFunction {
        theta,
        taylor,
        exact,
        diagnostics,
    })
}

fn inner_checks(
    theta: &StateSpace,
    m_sub: &InvariantSubspace,
    cfg: &Config,
    stein_residual: f64,
) -> Result<InnerDiagnostics> {
    let r = m_sub.block;
    let level = m_sub.level;
    let id = linalg::eye(r);
    let mut iso: f64 = 0.0;
    let mut coiso: f64 = 0.0;
    for z in crate::circle_points(cfg.samples) {
        // |z| = 1 is outside the strict stability domain only in the limit.
        let t = theta.evaluate(z)?;
        iso = iso.max(linalg::op_norm(&(t.adjoint() * &t - &id)));
        coiso = coiso.max(linalg::op_norm(&(&t * t.adjoint() - &id)));
    }
    let coeffs = theta.taylor(3 * level + 1);
    let t_theta = block_matrix(level, level, r, r, |i, j| {
        if i >= j {
            coeffs.get(i - j)
        } else {
            None
        }
    });
    let kernel_residual = if m_sub.dim() == 0 {
        0.0
    } else {
        linalg::op_norm(&(t_theta.adjoint() * &m_sub.basis))
    };
    let h_theta = block_matrix(level, 2 * level, r, r, |i, j| coeffs.get(i + j + 1));
    let pm = m_sub.projector();
    let hank = linalg::op_norm(&(&h_theta * h_theta.adjoint() - &pm));
    let toep = linalg::op_norm(&(&t_theta * t_theta.adjoint() - (linalg::eye(level * r) - &pm)));
    let degree = theta.mcmillan_degree(cfg.tol.rank);
    let diag = InnerDiagnostics {
        dim: m_sub.dim(),
        degree,
        isometry_residual: iso,
        coisometry_residual: coiso,
        kernel_residual,
        hankel_projection_residual: hank,
        toeplitz_projection_residual: toep,
        stein_residual,
    };
    let worst = iso.max(coiso).max(kernel_residual);
    if worst > cfg.tol.inner {
        return Err(Error::Residual {
            what: "two-sided inner and kernel conditions for Θ",
            residual: worst,
            tol: cfg.tol.inner,
        });
    }
    if degree != m_sub.dim() {
        return Err(Error::Structure(format!(
            "δ(Θ) = {degree} differs from dim M = {}",
            m_sub.dim()
        )));
    }
    Ok(diag)
}
