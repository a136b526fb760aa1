//! Matrix-valued functions on the disc and the circle.
//!
//! [`MatrixPolynomial`] carries analytic data (`G`, `K`, `Φ`, `F`, ...),
//! [`LaurentSymbol`] carries two-sided symbols such as the boundary defect
//! `R = GG* − KK*`, and [`StateSpace`] carries rational outputs
//! `D + zC(I − zA)⁻¹B`.

use crate::error::{Error, Result};
use crate::linalg::{self, Cx, Mat};

/// Anything that can be evaluated at a complex point.
pub trait Evaluate {
    fn shape(&self) -> (usize, usize);
    fn evaluate(&self, z: Cx) -> Result<Mat>;
}

/// A finite block sequence indexed by integer powers; the common view used by
/// the Toeplitz and Hankel builders.
pub trait Symbol {
    fn shape(&self) -> (usize, usize);
    /// Coefficient of `z^j`, `None` outside the support.
    fn coeff_at(&self, j: i64) -> Option<&Mat>;
    /// Smallest and largest power of the support.
    fn support(&self) -> (i64, i64);
}

fn is_zero(m: &Mat) -> bool {
    m.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

/// Block matrix with `nbr × nbc` blocks of size `rows × cols`, block `(i, j)`
/// given by `f(i, j)` (zero when `None`).
pub fn block_matrix<'a, F>(nbr: usize, nbc: usize, rows: usize, cols: usize, f: F) -> Mat
where
    F: Fn(usize, usize) -> Option<&'a Mat>,
{
    let mut out = linalg::zeros(nbr * rows, nbc * cols);
    if rows == 0 || cols == 0 {
        return out;
    }
    for i in 0..nbr {
        for j in 0..nbc {
            if let Some(b) = f(i, j) {
                out.view_mut((i * rows, j * cols), (rows, cols))
                    .copy_from(b);
            }
        }
    }
    out
}

/// Finite matrix power series `V₀ + zV₁ + … + z^d V_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    rows: usize,
    cols: usize,
    coeffs: Vec<Mat>,
}

impl MatrixPolynomial {
    /// Builds a polynomial from ascending coefficients, trimming trailing zero
    /// coefficients. An empty coefficient list is the zero polynomial.
    pub fn new(rows: usize, cols: usize, coeffs: Vec<Mat>) -> Result<Self> {
        for (j, c) in coeffs.iter().enumerate() {
            if c.shape() != (rows, cols) {
                return Err(Error::Shape(format!(
                    "coefficient {j} is {}x{}, expected {rows}x{cols}",
                    c.nrows(),
                    c.ncols()
                )));
            }
        }
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && is_zero(coeffs.last().unwrap()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(linalg::zeros(rows, cols));
        }
        Ok(MatrixPolynomial { rows, cols, coeffs })
    }

    pub fn constant(value: Mat) -> Self {
        let (rows, cols) = value.shape();
        MatrixPolynomial {
            rows,
            cols,
            coeffs: vec![value],
        }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        Self::constant(linalg::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(linalg::eye(n))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Mat] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> Option<&Mat> {
        self.coeffs.get(j)
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(is_zero)
    }

    /// `[P₁ P₂ …]` side by side; all parts must share the row count.
    pub fn hcat(parts: &[&MatrixPolynomial]) -> Result<Self> {
        let rows = parts.first().map_or(0, |p| p.rows);
        if parts.iter().any(|p| p.rows != rows) {
            return Err(Error::Shape(
                "hcat of polynomials with different row counts".into(),
            ));
        }
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let deg = parts.iter().map(|p| p.degree()).max().unwrap_or(0);
        let coeffs = (0..=deg)
            .map(|j| {
                let mut c = linalg::zeros(rows, cols);
                let mut at = 0;
                for p in parts {
                    if let Some(b) = p.coeff(j) {
                        c.view_mut((0, at), (rows, p.cols)).copy_from(b);
                    }
                    at += p.cols;
                }
                c
            })
            .collect();
        Self::new(rows, cols, coeffs)
    }

    /// Columns `start..start + count`.
    pub fn columns(&self, start: usize, count: usize) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.columns(start, count).into_owned())
            .collect();
        Self::new(self.rows, count, coeffs).expect("column slice keeps shapes")
    }

    /// `z · P(z)`.
    pub fn shift(&self) -> Self {
        let mut coeffs = vec![linalg::zeros(self.rows, self.cols)];
        coeffs.extend(self.coeffs.iter().cloned());
        Self::new(self.rows, self.cols, coeffs).unwrap()
    }

    pub fn scale(&self, s: Cx) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c * s).collect();
        Self::new(self.rows, self.cols, coeffs).unwrap()
    }

    /// Left multiplication by a constant matrix.
    pub fn premul(&self, m: &Mat) -> Result<Self> {
        if m.ncols() != self.rows {
            return Err(Error::Shape("premul: inner dimensions differ".into()));
        }
        let coeffs = self.coeffs.iter().map(|c| m * c).collect();
        Self::new(m.nrows(), self.cols, coeffs)
    }

    /// Polynomial product `P(z) Q(z)`.
    pub fn mul(&self, other: &MatrixPolynomial) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "product of {}x{} and {}x{} polynomials",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let deg = self.degree() + other.degree();
        let mut coeffs = vec![linalg::zeros(self.rows, other.cols); deg + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self::new(self.rows, other.cols, coeffs)
    }

    pub fn to_laurent(&self) -> LaurentSymbol {
        LaurentSymbol::new(self.rows, self.cols, 0, self.coeffs.clone()).unwrap()
    }

    /// `P*` on the circle: coefficient `−j` is `P_j*`.
    pub fn adjoint_symbol(&self) -> LaurentSymbol {
        self.to_laurent().adjoint()
    }

    /// Finite Hankel matrix `[P_{i+j+1}]` over the `d × d` blocks where it is nonzero.
    pub fn hankel(&self) -> Mat {
        let d = self.degree();
        block_matrix(d, d, self.rows, self.cols, |i, j| self.coeff(i + j + 1))
    }

    /// McMillan degree as the numerical rank of the Hankel matrix.
    /// Singular values count against the scale of the whole polynomial, so
    /// noise-level trailing coefficients do not register as rank.
    pub fn mcmillan_degree(&self, tol_rank: f64) -> usize {
        let scale = self.coeffs.iter().map(linalg::op_norm).fold(0.0, f64::max);
        linalg::rank_above(&self.hankel(), tol_rank * scale)
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }
}

impl Symbol for MatrixPolynomial {
    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn coeff_at(&self, j: i64) -> Option<&Mat> {
        if j < 0 {
            None
        } else {
            self.coeffs.get(j as usize)
        }
    }

    fn support(&self) -> (i64, i64) {
        (0, self.degree() as i64)
    }
}

impl Evaluate for MatrixPolynomial {
    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn evaluate(&self, z: Cx) -> Result<Mat> {
        let mut acc = linalg::zeros(self.rows, self.cols);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        Ok(acc)
    }
}

/// Two-sided finite matrix Fourier series `Σ_{j=lo}^{hi} Z_j e^{ijt}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentSymbol {
    rows: usize,
    cols: usize,
    min_power: i64,
    coeffs: Vec<Mat>,
    selfadjoint: bool,
}

impl LaurentSymbol {
    /// Coefficients start at `z^{min_power}`; zero coefficients at both ends are trimmed.
    pub fn new(rows: usize, cols: usize, min_power: i64, coeffs: Vec<Mat>) -> Result<Self> {
        for (j, c) in coeffs.iter().enumerate() {
            if c.shape() != (rows, cols) {
                return Err(Error::Shape(format!(
                    "coefficient at power {} is {}x{}, expected {rows}x{cols}",
                    min_power + j as i64,
                    c.nrows(),
                    c.ncols()
                )));
            }
        }
        let mut coeffs = coeffs;
        let mut min_power = min_power;
        while coeffs.len() > 1 && is_zero(coeffs.last().unwrap()) {
            coeffs.pop();
        }
        while coeffs.len() > 1 && is_zero(&coeffs[0]) {
            coeffs.remove(0);
            min_power += 1;
        }
        if coeffs.is_empty() {
            coeffs.push(linalg::zeros(rows, cols));
            min_power = 0;
        }
        if coeffs.len() == 1 && is_zero(&coeffs[0]) {
            min_power = 0;
        }
        Ok(LaurentSymbol {
            rows,
            cols,
            min_power,
            coeffs,
            selfadjoint: false,
        })
    }

    /// Marks the symbol selfadjoint after checking `Z_{−j} = Z_j*` to `tol` (absolute).
    pub fn into_selfadjoint(mut self, tol: f64) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Shape("selfadjoint symbol must be square".into()));
        }
        let resid = self.selfadjoint_defect();
        if resid > tol {
            return Err(Error::Residual {
                what: "selfadjoint symmetry Z_{-j} = Z_j*",
                residual: resid,
                tol,
            });
        }
        self.selfadjoint = true;
        Ok(self)
    }

    pub fn selfadjoint_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let (lo, hi) = self.support();
        let top = lo.abs().max(hi.abs());
        let zero = linalg::zeros(self.rows, self.cols);
        (-top..=top)
            .map(|j| {
                let a = self.coeff_at(j).unwrap_or(&zero);
                let b = self.coeff_at(-j).unwrap_or(&zero);
                linalg::max_abs(&(a - b.adjoint()))
            })
            .fold(0.0, f64::max)
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.selfadjoint
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn min_power(&self) -> i64 {
        self.min_power
    }

    pub fn max_power(&self) -> i64 {
        self.min_power + self.coeffs.len() as i64 - 1
    }

    pub fn coeffs(&self) -> &[Mat] {
        &self.coeffs
    }

    /// Half-bandwidth `max(|lo|, |hi|)`.
    pub fn half_bandwidth(&self) -> usize {
        self.min_power
            .unsigned_abs()
            .max(self.max_power().unsigned_abs()) as usize
    }

    /// `Z*`: coefficient `j` becomes `(Z_{−j})*`.
    pub fn adjoint(&self) -> LaurentSymbol {
        let coeffs: Vec<Mat> = self.coeffs.iter().rev().map(|c| c.adjoint()).collect();
        let mut out = LaurentSymbol::new(self.cols, self.rows, -self.max_power(), coeffs).unwrap();
        out.selfadjoint = self.selfadjoint;
        out
    }

    /// `Zᵗ(e^{it}) = Z(e^{−it})`: coefficient `j` becomes `Z_{−j}`.
    pub fn reflect(&self) -> LaurentSymbol {
        let coeffs: Vec<Mat> = self.coeffs.iter().rev().cloned().collect();
        LaurentSymbol::new(self.rows, self.cols, -self.max_power(), coeffs).unwrap()
    }

    /// Product of symbols (coefficient convolution).
    pub fn multiply(&self, other: &LaurentSymbol) -> Result<LaurentSymbol> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "product of {}x{} and {}x{} symbols",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut coeffs = vec![linalg::zeros(self.rows, other.cols); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        LaurentSymbol::new(
            self.rows,
            other.cols,
            self.min_power + other.min_power,
            coeffs,
        )
    }

    pub fn sub(&self, other: &LaurentSymbol) -> Result<LaurentSymbol> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(
                "difference of symbols with different shapes".into(),
            ));
        }
        let lo = self.min_power.min(other.min_power);
        let hi = self.max_power().max(other.max_power());
        let zero = linalg::zeros(self.rows, self.cols);
        let coeffs = (lo..=hi)
            .map(|j| self.coeff_at(j).unwrap_or(&zero) - other.coeff_at(j).unwrap_or(&zero))
            .collect();
        LaurentSymbol::new(self.rows, self.cols, lo, coeffs)
    }

    /// McMillan degree `rank H_{Z,+} + rank H_{Z,−}`.
    pub fn mcmillan_degree(&self, tol_rank: f64) -> usize {
        mcmillan_with_tol(self, tol_rank)
    }

    /// Nonzero part of `H_{Z,+}` (blocks `Z_{i+j+1}`).
    pub fn hankel_plus(&self) -> Mat {
        let d = self.max_power().max(0) as usize;
        block_matrix(d, d, self.rows, self.cols, |i, j| {
            self.coeff_at((i + j + 1) as i64)
        })
    }

    /// Nonzero part of `H_{Z,−}` (blocks `Z_{−i−j−1}`).
    pub fn hankel_minus(&self) -> Mat {
        let d = (-self.min_power).max(0) as usize;
        block_matrix(d, d, self.rows, self.cols, |i, j| {
            self.coeff_at(-((i + j + 1) as i64))
        })
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }

    /// Evaluation on the circle without the `|z| = 1` check.
    pub fn evaluate_unchecked(&self, z: Cx) -> Mat {
        let mut acc = linalg::zeros(self.rows, self.cols);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc * z.powi(self.min_power as i32)
    }
}

impl Symbol for LaurentSymbol {
    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn coeff_at(&self, j: i64) -> Option<&Mat> {
        let k = j - self.min_power;
        if k < 0 {
            None
        } else {
            self.coeffs.get(k as usize)
        }
    }

    fn support(&self) -> (i64, i64) {
        (self.min_power, self.max_power())
    }
}

impl Evaluate for LaurentSymbol {
    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    fn evaluate(&self, z: Cx) -> Result<Mat> {
        if (z.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain {
                z: format!("{z}"),
                reason: "Laurent symbols are evaluated on the unit circle only".into(),
            });
        }
        Ok(self.evaluate_unchecked(z))
    }
}

/// `R = GG* − KK*` as a selfadjoint Laurent symbol.
pub fn defect_symbol(g: &MatrixPolynomial, k: &MatrixPolynomial) -> Result<LaurentSymbol> {
    if g.rows() != k.rows() {
        return Err(Error::Shape(format!(
            "G has {} rows but K has {}",
            g.rows(),
            k.rows()
        )));
    }
    let gg = g.to_laurent().multiply(&g.adjoint_symbol())?;
    let kk = k.to_laurent().multiply(&k.adjoint_symbol())?;
    let mut r = gg.sub(&kk)?;
    // Symmetrize exactly: average Z_j with Z_{-j}*.
    let d = r.half_bandwidth() as i64;
    let m = r.rows;
    let zero = linalg::zeros(m, m);
    let coeffs: Vec<Mat> = (-d..=d)
        .map(|j| {
            let a = r.coeff_at(j).unwrap_or(&zero);
            let b = r.coeff_at(-j).unwrap_or(&zero);
            (a + b.adjoint()) * linalg::real(0.5)
        })
        .collect();
    r = LaurentSymbol::new(m, m, -d, coeffs)?;
    r.selfadjoint = true;
    Ok(r)
}

/// State-space realization `X(z) = D + zC(I − zA)⁻¹B`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
}

impl StateSpace {
    /// Checks shapes only; see [`StateSpace::check_stable`].
    pub fn new(a: Mat, b: Mat, c: Mat, d: Mat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n
            || b.nrows() != n
            || c.ncols() != n
            || d.nrows() != c.nrows()
            || d.ncols() != b.ncols()
        {
            return Err(Error::Shape(format!(
                "state space A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        Ok(StateSpace { a, b, c, d })
    }

    /// Constant transfer function `D` (zero-dimensional state).
    pub fn constant(d: Mat) -> Self {
        let (p, q) = d.shape();
        StateSpace {
            a: linalg::zeros(0, 0),
            b: linalg::zeros(0, q),
            c: linalg::zeros(p, 0),
            d,
        }
    }

    /// Shift realization of a polynomial: state `(z^{j-1} u)_j`, `C = [P₁ … P_d]`.
    pub fn from_polynomial(p: &MatrixPolynomial) -> Self {
        let (r, q) = (p.rows(), p.cols());
        let d = p.degree();
        let n = d * q;
        let id = linalg::eye(q);
        let a = block_matrix(d, d, q, q, |i, j| (i == j + 1).then_some(&id));
        let b = block_matrix(d, 1, q, q, |i, _| (i == 0).then_some(&id));
        let c = block_matrix(1, d, r, q, |_, j| p.coeff(j + 1));
        debug_assert_eq!(a.nrows(), n);
        StateSpace {
            a,
            b,
            c,
            d: p.coeffs()[0].clone(),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn spectral_radius(&self) -> f64 {
        linalg::spectral_radius(&self.a)
    }

    /// Errors unless `ρ(A) < 1 − eps_stab`.
    pub fn check_stable(&self, eps_stab: f64) -> Result<()> {
        let rho = self.spectral_radius();
        if rho < 1.0 - eps_stab {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "spectral radius {rho} of A is not below 1 - {eps_stab}"
            )))
        }
    }

    /// Taylor coefficients `D, CB, CAB, …` (`count` of them).
    pub fn taylor(&self, count: usize) -> Vec<Mat> {
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(self.d.clone());
        let mut ab = self.b.clone();
        for _ in 1..count {
            out.push(&self.c * &ab);
            ab = &self.a * ab;
        }
        out
    }

    /// Taylor polynomial, stopped once the bound `‖C‖·‖A^k B‖` on the next
    /// coefficient falls below `tol` times the largest coefficient, with at
    /// most `max_terms` coefficients. The flag reports an exactly terminating
    /// series (`A^k B` numerically zero), i.e. a polynomial transfer function.
    pub fn to_polynomial(&self, tol: f64, max_terms: usize) -> (MatrixPolynomial, bool) {
        let (p, q) = self.d.shape();
        let c_norm = linalg::op_norm(&self.c);
        let b_scale = linalg::max_abs(&self.b);
        let mut coeffs = vec![self.d.clone()];
        let mut scale = linalg::max_abs(&self.d);
        let mut ab = self.b.clone();
        let mut exact = false;
        while coeffs.len() < max_terms.max(1) {
            if linalg::max_abs(&ab) <= 1e-13 * b_scale.max(f64::MIN_POSITIVE) {
                exact = true;
                break;
            }
            if c_norm * linalg::op_norm(&ab) <= tol * scale && coeffs.len() > self.state_dim() {
                break;
            }
            let ck = &self.c * &ab;
            scale = scale.max(linalg::max_abs(&ck));
            coeffs.push(ck);
            ab = &self.a * ab;
        }
        (MatrixPolynomial::new(p, q, coeffs).unwrap(), exact)
    }

    /// Rank of the block Hankel matrix `[C A^{i+j} B]_{i,j ≤ n}`.
    pub fn mcmillan_degree(&self, tol_rank: f64) -> usize {
        let n = self.state_dim();
        if n == 0 {
            return 0;
        }
        let markov = self.taylor(2 * n + 2);
        let (p, q) = self.d.shape();
        let h = block_matrix(n + 1, n + 1, p, q, |i, j| markov.get(i + j + 1));
        // Scale against the whole transfer function so numerically zero
        // Markov parameters do not register as rank.
        let top = linalg::op_norm(&h).max(linalg::op_norm(&self.d));
        linalg::rank_above(&h, tol_rank * top)
    }

    /// Input columns `start..start + count`, sharing `(A, C)`.
    pub fn input_columns(&self, start: usize, count: usize) -> StateSpace {
        StateSpace {
            a: self.a.clone(),
            b: self.b.columns(start, count).into_owned(),
            c: self.c.clone(),
            d: self.d.columns(start, count).into_owned(),
        }
    }
}

impl Evaluate for StateSpace {
    fn shape(&self) -> (usize, usize) {
        self.d.shape()
    }

    fn evaluate(&self, z: Cx) -> Result<Mat> {
        let n = self.state_dim();
        if n == 0 {
            return Ok(self.d.clone());
        }
        let rho = self.spectral_radius();
        if z.norm() * rho >= 1.0 {
            return Err(Error::Domain {
                z: format!("{z}"),
                reason: format!("|z| >= 1/ρ(A) with ρ(A) = {rho}"),
            });
        }
        let lhs = linalg::eye(n) - &self.a * z;
        let x = lhs.lu().solve(&self.b).ok_or_else(|| Error::Domain {
            z: format!("{z}"),
            reason: "I - zA is singular".into(),
        })?;
        Ok(&self.d + &self.c * x * z)
    }
}

/// McMillan degree with the default rank tolerance.
pub fn mcmillan_degree(p: &dyn Symbol) -> usize {
    mcmillan_with_tol(p, crate::Tolerances::default().rank)
}

/// `rank H_{Z,+} + rank H_{Z,−}`, with ranks measured against the largest
/// coefficient or Hankel singular value.
pub fn mcmillan_with_tol(p: &dyn Symbol, tol: f64) -> usize {
    let (lo, hi) = p.support();
    let (rows, cols) = p.shape();
    let dp = hi.max(0) as usize;
    let dm = (-lo).max(0) as usize;
    let hp = block_matrix(dp, dp, rows, cols, |i, j| p.coeff_at((i + j + 1) as i64));
    let hm = block_matrix(dm, dm, rows, cols, |i, j| p.coeff_at(-((i + j + 1) as i64)));
    let top = (lo..=hi)
        .filter_map(|j| p.coeff_at(j))
        .map(linalg::op_norm)
        .fold(linalg::op_norm(&hp).max(linalg::op_norm(&hm)), f64::max);
    linalg::rank_above(&hp, tol * top) + linalg::rank_above(&hm, tol * top)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_matrix, real};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Cx {
        Cx::new(re, im)
    }

    pub(crate) fn corona_g() -> MatrixPolynomial {
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
    fn evaluate_constant() {
        let p = MatrixPolynomial::constant(Mat::from_element(1, 1, real(2.0)));
        let v = p.evaluate(c(0.0, 0.5)).unwrap();
        assert_eq!(v[(0, 0)], real(2.0));
    }

    #[test]
    fn evaluate_corona_row_at_i() {
        let v = corona_g().evaluate(c(0.0, 1.0)).unwrap();
        assert_eq!(v[(0, 0)], real(2.0));
        assert_eq!(v[(0, 1)], c(0.0, 1.0));
    }

    #[test]
    fn adjoint_of_constant_conjugates() {
        let z = LaurentSymbol::new(1, 1, 0, vec![Mat::from_element(1, 1, c(1.0, 1.0))]).unwrap();
        assert_eq!(z.adjoint().coeff_at(0).unwrap()[(0, 0)], c(1.0, -1.0));
    }

    #[test]
    fn adjoint_of_corona_row() {
        let gs = corona_g().adjoint_symbol();
        assert_eq!((gs.rows(), gs.cols()), (2, 1));
        assert_eq!(gs.support(), (-1, 0));
        let g0 = gs.coeff_at(0).unwrap();
        let gm1 = gs.coeff_at(-1).unwrap();
        assert_eq!((g0[(0, 0)], g0[(1, 0)]), (real(2.0), real(0.0)));
        assert_eq!((gm1[(0, 0)], gm1[(1, 0)]), (real(0.0), real(1.0)));
    }

    #[test]
    fn adjoint_is_involution_and_antihomomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = LaurentSymbol::new(
                2,
                3,
                -2,
                (0..4).map(|_| random_matrix(&mut rng, 2, 3)).collect(),
            )
            .unwrap();
            let b = LaurentSymbol::new(
                3,
                2,
                -1,
                (0..3).map(|_| random_matrix(&mut rng, 3, 2)).collect(),
            )
            .unwrap();
            assert_eq!(a.adjoint().adjoint(), a);
            let lhs = a.multiply(&b).unwrap().adjoint();
            let rhs = b.adjoint().multiply(&a.adjoint()).unwrap();
            assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn corona_gram_symbol_is_five() {
        let g = corona_g();
        let rg = g.to_laurent().multiply(&g.adjoint_symbol()).unwrap();
        assert_eq!(rg.support(), (0, 0));
        assert_eq!(rg.coeff_at(0).unwrap()[(0, 0)], real(5.0));
        assert!(rg.coeff_at(1).is_none() && rg.coeff_at(-1).is_none());
    }

    #[test]
    fn identity_times_symbol() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = LaurentSymbol::new(
            2,
            2,
            -1,
            (0..3).map(|_| random_matrix(&mut rng, 2, 2)).collect(),
        )
        .unwrap();
        let id = MatrixPolynomial::identity(2).to_laurent();
        assert_eq!(id.multiply(&z).unwrap(), z);
    }

    #[test]
    fn defect_of_corona_is_four() {
        let k = MatrixPolynomial::identity(1);
        let r = defect_symbol(&corona_g(), &k).unwrap();
        assert!(r.is_selfadjoint());
        assert_eq!(r.support(), (0, 0));
        assert_eq!(r.coeff_at(0).unwrap()[(0, 0)], real(4.0));
    }

    #[test]
    fn defect_vanishes_when_g_equals_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_poly(&mut rng, 2, 3, 3);
        let r = defect_symbol(&g, &g).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }

    #[test]
    fn defect_is_selfadjoint_and_matches_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let g = random_poly(&mut rng, 2, 3, 2);
            let k = random_poly(&mut rng, 2, 2, 3);
            let r = defect_symbol(&g, &k).unwrap();
            assert!(r.support().0 >= -3 && r.support().1 <= 3);
            assert!(r.selfadjoint_defect() == 0.0);
        }
        let g = random_poly(&mut rng, 3, 2, 3);
        let k = random_poly(&mut rng, 3, 3, 1);
        let r = defect_symbol(&g, &k).unwrap();
        for z in crate::circle_points(64)
            .into_iter()
            .map(|w| w * Cx::from_polar(1.0, 0.37))
        {
            let gz = g.evaluate(z).unwrap();
            let kz = k.evaluate(z).unwrap();
            let direct = &gz * gz.adjoint() - &kz * kz.adjoint();
            let rz = r.evaluate(z).unwrap();
            assert!(linalg::max_abs(&(rz - &direct)) <= 1e-12 * linalg::max_abs(&direct).max(1.0));
        }
    }

    #[test]
    fn mcmillan_degrees() {
        assert_eq!(
            MatrixPolynomial::constant(Mat::from_element(2, 2, real(3.0))).mcmillan_degree(1e-9),
            0
        );
        assert_eq!(corona_g().mcmillan_degree(1e-9), 1);
        // Full-rank top coefficient: δ = m·d.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let g = random_poly(&mut rng, 2, 3, 3);
        assert_eq!(g.mcmillan_degree(1e-9), 6);
        assert_eq!(mcmillan_degree(&g), 6);
    }

    #[test]
    fn degree_subadditivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let g = random_poly(&mut rng, 2, 2, 2);
            let gg = g.to_laurent().multiply(&g.adjoint_symbol()).unwrap();
            assert!(gg.mcmillan_degree(1e-9) <= 2 * g.mcmillan_degree(1e-9));
        }
    }

    #[test]
    fn canonical_trimming() {
        let p = MatrixPolynomial::new(
            1,
            1,
            vec![
                Mat::from_element(1, 1, real(1.0)),
                Mat::from_element(1, 1, real(2.0)),
                Mat::zeros(1, 1),
                Mat::zeros(1, 1),
            ],
        )
        .unwrap();
        assert_eq!(p.degree(), 1);
        assert_eq!(MatrixPolynomial::new(2, 0, vec![]).unwrap().degree(), 0);
    }

    #[test]
    fn shape_errors() {
        assert!(MatrixPolynomial::new(1, 2, vec![Mat::zeros(2, 1)]).is_err());
        let a = corona_g().to_laurent();
        assert!(a.multiply(&a).is_err());
        assert!(defect_symbol(&corona_g(), &MatrixPolynomial::identity(2)).is_err());
    }

    #[test]
    fn laurent_evaluation_off_circle_is_domain_error() {
        let r = defect_symbol(&corona_g(), &MatrixPolynomial::identity(1)).unwrap();
        assert!(matches!(r.evaluate(c(0.5, 0.0)), Err(Error::Domain { .. })));
    }

    #[test]
    fn state_space_pole_is_domain_error() {
        let ss = StateSpace::new(
            Mat::from_element(1, 1, real(0.5)),
            Mat::from_element(1, 1, real(1.0)),
            Mat::from_element(1, 1, real(1.0)),
            Mat::zeros(1, 1),
        )
        .unwrap();
        assert!(ss.evaluate(c(2.0, 0.0)).is_err());
        // z/(1 - z/2) at z = 0.5 is 2/3.
        let v = ss.evaluate(c(0.5, 0.0)).unwrap()[(0, 0)];
        assert!((v - real(2.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn state_space_matches_neumann_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = random_matrix(&mut rng, 3, 3);
        let a = &a * real(0.6 / linalg::op_norm(&a));
        let ss = StateSpace::new(
            a,
            random_matrix(&mut rng, 3, 2),
            random_matrix(&mut rng, 2, 3),
            random_matrix(&mut rng, 2, 2),
        )
        .unwrap();
        let taylor = ss.taylor(64);
        for k in 0..8 {
            let z = Cx::from_polar(0.8, k as f64 * 0.7);
            let mut series = linalg::zeros(2, 2);
            let mut zk = real(1.0);
            for t in &taylor {
                series += t * zk;
                zk *= z;
            }
            let direct = ss.evaluate(z).unwrap();
            assert!(linalg::max_abs(&(direct - series)) < 1e-10);
        }
        assert_eq!(ss.mcmillan_degree(1e-9), 3);
    }

    #[test]
    fn polynomial_realization_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let p = MatrixPolynomial::new(
            2,
            3,
            (0..4).map(|_| random_matrix(&mut rng, 2, 3)).collect(),
        )
        .unwrap();
        let ss = StateSpace::from_polynomial(&p);
        let (back, exact) = ss.to_polynomial(1e-14, 16);
        assert!(exact);
        assert_eq!(back.degree(), 3);
        for (x, y) in back.coeffs().iter().zip(p.coeffs()) {
            assert!(linalg::max_abs(&(x - y)) == 0.0);
        }
        let z = Cx::new(0.2, 0.5);
        assert!(linalg::max_abs(&(ss.evaluate(z).unwrap() - p.evaluate(z).unwrap())) < 1e-14);
        assert_eq!(ss.mcmillan_degree(1e-9), p.mcmillan_degree(1e-9));
    }
}
