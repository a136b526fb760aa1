//! Machine-readable solver reports.

use serde::Serialize;
use std::collections::BTreeMap;

pub const SCHEMA: &str = "leech-report/1";

/// One checked inequality or identity.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Verdict {
    /// Stable key naming what was tested.
    pub check: &'static str,
    pub statement: &'static str,
    pub value: f64,
    /// Tolerance or bound the value was compared against.
    pub bound: f64,
    pub pass: bool,
}

impl Verdict {
    /// `value ≤ bound`.
    pub fn at_most(check: &'static str, statement: &'static str, value: f64, bound: f64) -> Self {
        Verdict {
            check,
            statement,
            value,
            bound,
            pass: value <= bound,
        }
    }

    /// Integer relation evaluated by the caller.
    pub fn holds(
        check: &'static str,
        statement: &'static str,
        lhs: usize,
        rhs: usize,
        pass: bool,
    ) -> Self {
        Verdict {
            check,
            statement,
            value: lhs as f64,
            bound: rhs as f64,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct VerifyReport {
    /// Sup of `‖G X − K‖` over the circle samples and the disc grid.
    pub residual: f64,
    /// Sup of `‖X‖` over the same points; a sampled lower estimate of `‖X‖∞`.
    pub norm: f64,
    pub degree: usize,
    pub circle_samples: usize,
    pub disc_radii: usize,
    /// Largest radius used on the circle (below 1 when the realization has poles near it).
    pub boundary_radius: f64,
    pub spectral_radius: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Default, Serialize, PartialEq)]
pub struct Degrees {
    pub r: usize,
    pub phi: usize,
    pub theta: usize,
    pub f: usize,
    pub x_tilde: usize,
    pub x: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SolveReport {
    pub schema: &'static str,
    pub positivity_margin: f64,
    pub trunc: usize,
    /// `R ≡ 0`: the factor, inner and `F` stages were skipped.
    pub degenerate: bool,
    pub r: usize,
    pub dim_n: usize,
    pub dim_m: usize,
    pub nu: usize,
    pub quad: usize,
    pub degrees: Degrees,
    /// Named residuals from every stage.
    pub residuals: BTreeMap<&'static str, f64>,
    pub verdicts: Vec<Verdict>,
    /// Check of `G X̃ = [K F]`.
    pub augmented: VerifyReport,
    /// Check of `G X = K`, `‖X‖∞ ≤ 1`.
    pub verification: VerifyReport,
    pub pass: bool,
}

impl SolveReport {
    pub fn failed_checks(&self) -> Vec<&'static str> {
        self.verdicts
            .iter()
            .filter(|v| !v.pass)
            .map(|v| v.check)
            .collect()
    }
}
