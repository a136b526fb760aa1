//! JSON forms of the data types. Complex numbers are `[re, im]` pairs and
//! matrices are arrays of rows.

use crate::error::{Error, Result};
use crate::linalg::{Cx, Mat};
use crate::symbols::{LaurentSymbol, MatrixPolynomial, StateSpace, Symbol};
use crate::Config;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &Mat) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

/// Parses a row array; `cols` is needed only when there are no rows to infer it from.
pub fn matrix_from_json(rows: &JsonMatrix, cols: Option<usize>, what: &str) -> Result<Mat> {
    let nc = match (rows.first(), cols) {
        (Some(r), _) => r.len(),
        (None, Some(c)) => c,
        (None, None) => 0,
    };
    if let Some(c) = cols {
        if c != nc {
            return Err(Error::Shape(format!(
                "{what}: expected {c} columns, found {nc}"
            )));
        }
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != nc {
            return Err(Error::Shape(format!(
                "{what}: row {i} has {} entries, expected {nc}",
                r.len()
            )));
        }
    }
    Ok(Mat::from_fn(rows.len(), nc, |i, j| {
        Cx::new(rows[i][j][0], rows[i][j][1])
    }))
}

fn sized(rows: &JsonMatrix, r: usize, c: usize, what: &str) -> Result<Mat> {
    if rows.is_empty() && r == 0 {
        return Ok(Mat::zeros(0, c));
    }
    if rows.len() != r {
        return Err(Error::Shape(format!(
            "{what}: expected {r} rows, found {}",
            rows.len()
        )));
    }
    matrix_from_json(rows, Some(c), what)
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    rows: usize,
    cols: usize,
    coeffs: Vec<JsonMatrix>,
}

#[derive(Serialize, Deserialize)]
struct LaurentJson {
    rows: usize,
    cols: usize,
    min_power: i64,
    coeffs: Vec<JsonMatrix>,
}

#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct StateSpaceJson {
    A: JsonMatrix,
    B: JsonMatrix,
    C: JsonMatrix,
    D: JsonMatrix,
    /// Output and input dimensions, needed when `D` has no rows or columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape: Option<[usize; 2]>,
}

fn poly_from(raw: PolyJson, what: &str) -> Result<MatrixPolynomial> {
    let coeffs = raw
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| sized(c, raw.rows, raw.cols, &format!("{what}.coeffs[{j}]")))
        .collect::<Result<Vec<_>>>()?;
    MatrixPolynomial::new(raw.rows, raw.cols, coeffs)
}

impl Serialize for MatrixPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyJson {
            rows: self.rows(),
            cols: self.cols(),
            coeffs: self.coeffs().iter().map(matrix_to_json).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatrixPolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        poly_from(PolyJson::deserialize(d)?, "polynomial").map_err(D::Error::custom)
    }
}

impl Serialize for LaurentSymbol {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LaurentJson {
            rows: self.rows(),
            cols: self.cols(),
            min_power: self.min_power(),
            coeffs: self.coeffs().iter().map(matrix_to_json).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentSymbol {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = LaurentJson::deserialize(d)?;
        let coeffs = raw
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| sized(c, raw.rows, raw.cols, &format!("symbol.coeffs[{j}]")))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        LaurentSymbol::new(raw.rows, raw.cols, raw.min_power, coeffs).map_err(D::Error::custom)
    }
}

impl Serialize for StateSpace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (p, q) = self.d.shape();
        StateSpaceJson {
            A: matrix_to_json(&self.a),
            B: matrix_to_json(&self.b),
            C: matrix_to_json(&self.c),
            D: matrix_to_json(&self.d),
            shape: (p == 0 || q == 0 || self.state_dim() == 0).then_some([p, q]),
        }
        .serialize(s)
    }
}

fn state_space_from(raw: StateSpaceJson) -> Result<StateSpace> {
    let n = raw.A.len();
    let (p, q) = match raw.shape {
        Some([p, q]) => (p, q),
        None => (raw.D.len(), raw.D.first().map_or(0, |r| r.len())),
    };
    let a = sized(&raw.A, n, n, "A")?;
    let b = sized(&raw.B, n, q, "B")?;
    let c = sized(&raw.C, p, n, "C")?;
    let d = sized(&raw.D, p, q, "D")?;
    StateSpace::new(a, b, c, d)
}

impl<'de> Deserialize<'de> for StateSpace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        state_space_from(StateSpaceJson::deserialize(d)?).map_err(D::Error::custom)
    }
}

/// Input file: `G`, `K` (or a boundary symbol `R`) and optional configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<MatrixPolynomial>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<MatrixPolynomial>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub r: Option<LaurentSymbol>,
    #[serde(default)]
    pub config: Config,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        let pf: ProblemFile = serde_json::from_str(text)?;
        if let (Some(g), Some(k)) = (&pf.g, &pf.k) {
            if g.rows() != k.rows() {
                return Err(Error::Shape(format!(
                    "G has {} rows but K has {}",
                    g.rows(),
                    k.rows()
                )));
            }
        }
        Ok(pf)
    }

    /// `(G, K)`, or a shape error naming the missing field.
    pub fn pair(&self) -> Result<(&MatrixPolynomial, &MatrixPolynomial)> {
        match (&self.g, &self.k) {
            (Some(g), Some(k)) => Ok((g, k)),
            (None, _) => Err(Error::Shape("input has no field \"G\"".into())),
            (_, None) => Err(Error::Shape("input has no field \"K\"".into())),
        }
    }
}

/// A state-space realization together with its Taylor polynomial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RationalJson {
    pub realization: StateSpace,
    pub taylor: MatrixPolynomial,
    /// `"exact"` when the series terminates, `"taylor"` when truncated.
    pub form: String,
}

impl RationalJson {
    pub fn new(ss: &StateSpace, tol: f64, max_terms: usize) -> Self {
        let (taylor, exact) = ss.to_polynomial(tol, max_terms);
        RationalJson {
            realization: ss.clone(),
            taylor,
            form: if exact { "exact" } else { "taylor" }.into(),
        }
    }
}

/// Support-aware view used by tests: equal shape, support and bit-identical coefficients.
pub fn same_symbol(a: &dyn Symbol, b: &dyn Symbol) -> bool {
    a.shape() == b.shape() && a.support() == b.support() && {
        let (lo, hi) = a.support();
        (lo..=hi).all(|j| a.coeff_at(j) == b.coeff_at(j))
    }
}
