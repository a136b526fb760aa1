//! Rational matrix solutions of the Leech equation `G(z) X(z) = K(z)`,
//! `‖X‖∞ ≤ 1`, for matrix-polynomial data.
//!
//! The pipeline runs boundary defect → outer spectral factor →
//! backward-shift-invariant subspace → two-sided inner function →
//! augmented data `[K F]` → lurking-isometry colligation → state-space
//! realization. Every operator identity the construction relies on is
//! exposed as a numerical check on exact finite compressions.

pub mod error;
pub mod json;
pub mod linalg;
pub mod report;
pub mod solver;
pub mod spectral;
pub mod subspace;
pub mod symbols;
pub mod toeplitz;

pub use error::{Error, Result, Stage};
pub use linalg::{Cx, Mat};
pub use solver::{solve, Colligation, KolmogorovFactor, Solution};
pub use symbols::{Evaluate, LaurentSymbol, MatrixPolynomial, StateSpace};

use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Absolute eigenvalue tolerance for positivity decisions.
    pub psd: f64,
    /// Relative singular-value threshold for every rank and dimension.
    pub rank: f64,
    /// Spectral-factor and factorization-identity residuals.
    pub fact: f64,
    /// Partial-isometry residual of the colligation.
    pub iso: f64,
    /// Solution residual and norm slack.
    pub sol: f64,
    /// Unitarity and kernel residuals of the inner function.
    pub inner: f64,
    /// Backward-shift invariance defect.
    pub inv: f64,
    /// Relative tail mass of subspace basis vectors in the last quarter of the window.
    pub tail: f64,
    /// Stability margin for state-space realizations.
    pub stab: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            psd: 1e-8,
            rank: 1e-9,
            fact: 1e-8,
            iso: 1e-8,
            sol: 1e-7,
            inner: 1e-8,
            inv: 1e-8,
            tail: 1e-8,
            stab: 1e-10,
        }
    }
}

/// Solver configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    /// Truncation level (in blocks) for positivity margins and identity windows.
    pub trunc: usize,
    /// Number of uniform circle samples used by boundary checks.
    pub samples: usize,
    /// Quadrature points for the colligation; `None` selects `4 (deg + ν + 1)`.
    pub quad: Option<usize>,
    /// Seed for randomized batteries.
    pub seed: u64,
    /// Maximum number of doublings of the Bauer section length.
    pub bauer_doublings: u32,
    #[serde(rename = "tol")]
    pub tol: Tolerances,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            trunc: 32,
            samples: 512,
            quad: None,
            seed: 42,
            bauer_doublings: 4,
            tol: Tolerances::default(),
        }
    }
}

/// `n` equispaced points `e^{2πik/n}` on the unit circle.
pub fn circle_points(n: usize) -> Vec<Cx> {
    (0..n)
        .map(|k| Cx::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect()
}
