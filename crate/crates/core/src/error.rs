use thiserror::Error;

/// Pipeline stage, used to tag errors that surface from `solve`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Defect,
    SpectralFactor,
    NSpace,
    MSpace,
    Inner,
    BuildF,
    AugmentedDefect,
    LurkingIsometry,
    Realization,
    Verification,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Defect => "defect_symbol",
            Stage::SpectralFactor => "outer_spectral_factor",
            Stage::NSpace => "n_space",
            Stage::MSpace => "m_space",
            Stage::Inner => "inner_from_subspace",
            Stage::BuildF => "build_F",
            Stage::AugmentedDefect => "augmented_defect",
            Stage::LurkingIsometry => "lurking_isometry",
            Stage::Realization => "realize_solution",
            Stage::Verification => "verify_solution",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("evaluation at z = {z} outside the domain: {reason}")]
    Domain { z: String, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("T_G T_G* - T_K T_K* is not positive: min eigenvalue {margin:.3e} at level {level}")]
    Infeasible { margin: f64, level: usize },

    #[error("symbol is indefinite on the circle (min eigenvalue {min_eig:.3e})")]
    Indefinite { min_eig: f64 },

    #[error(
        "Bauer factorization did not converge after {rows} rows (last residual {residual:.3e})"
    )]
    NonConvergence { rows: usize, residual: f64 },

    #[error("truncation level {level} insufficient: tail mass {tail:.3e}")]
    Truncation { level: usize, tail: f64 },

    #[error("{what}: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    Residual {
        what: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("{0}")]
    Structure(String),

    #[error("stage {stage} failed [{anchor}]: {source}")]
    Stage {
        stage: Stage,
        anchor: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at(self, stage: Stage, anchor: &'static str) -> Error {
        Error::Stage {
            stage,
            anchor,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage tags stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
