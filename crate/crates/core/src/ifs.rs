//! Affine iterated function systems: maps, words, validation and the JSON
//! ingestion format.
//!
//! Word indices are zero-based: a word over a system with `k` maps holds
//! values in `0..k`, and `compose` applies them as `f_{w₀} ∘ f_{w₁} ∘ …`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, SmallMatrix, SmallVector};

/// Smallest |det A| accepted as invertible.
pub const DET_FLOOR: f64 = 1e-12;
/// Lower bound on the bounding radius so that it stays strictly positive.
pub const RADIUS_FLOOR: f64 = 1e-9;

/// Resource limits shared by the enumerating operations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Limits {
    /// Longest word any recursive construction may produce.
    pub max_word_len: usize,
    /// Largest number of words `k^n` an exhaustive enumeration may visit.
    pub enumeration_budget: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_word_len: 30,
            enumeration_budget: 20_000_000,
        }
    }
}

impl Limits {
    /// Fails with [`Error::BudgetExceeded`] unless `k^n` fits the budget.
    pub fn check_enumeration(&self, k: usize, n: usize) -> Result<u64> {
        let requested = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if requested > self.enumeration_budget as u128 {
            return Err(Error::BudgetExceeded {
                requested,
                limit: self.enumeration_budget,
            });
        }
        if n > self.max_word_len {
            return Err(Error::DepthCapReached {
                cap: self.max_word_len,
            });
        }
        Ok(requested as u64)
    }
}

/// `x ↦ A x + a`.
#[derive(Clone, Copy, PartialEq)]
pub struct AffineMap {
    linear: SmallMatrix,
    translation: SmallVector,
}

impl AffineMap {
    pub fn new(linear: SmallMatrix, translation: SmallVector) -> Result<Self> {
        if linear.dim() != translation.dim() {
            return Err(Error::invalid(format!(
                "linear part is {0}x{0} but translation has {1} components",
                linear.dim(),
                translation.dim()
            )));
        }
        Ok(AffineMap {
            linear,
            translation,
        })
    }

    pub fn identity(dim: usize) -> Self {
        AffineMap {
            linear: SmallMatrix::identity(dim),
            translation: SmallVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.linear.dim()
    }

    pub fn linear(&self) -> &SmallMatrix {
        &self.linear
    }

    pub fn translation(&self) -> &SmallVector {
        &self.translation
    }

    pub fn apply(&self, x: &SmallVector) -> SmallVector {
        self.linear.mul_vec(x) + self.translation
    }

    /// `self ∘ inner`: linear part `A·B`, translation `A b + a`.
    pub fn compose_with(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            linear: self.linear * inner.linear,
            translation: self.linear.mul_vec(&inner.translation) + self.translation,
        }
    }
}

impl fmt::Debug for AffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AffineMap")
            .field("A", &self.linear)
            .field("a", &self.translation)
            .finish()
    }
}

/// Finite index sequence addressing the cylinder `f_{w₀} ∘ … ∘ f_{w_{n−1}}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word(v)
    }
}

impl From<&[usize]> for Word {
    fn from(v: &[usize]) -> Self {
        Word(v.to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{idx}")?;
        }
        write!(f, ")")
    }
}

/// Ordered, non-empty list of affine maps on ℝ^d.
#[derive(Clone, Debug, PartialEq)]
pub struct Ifs {
    maps: Vec<AffineMap>,
}

impl Ifs {
    pub fn new(maps: Vec<AffineMap>) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| Error::invalid("an IFS needs at least one map"))?;
        let d = first.dim();
        for (index, m) in maps.iter().enumerate() {
            if m.dim() != d {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: d,
                    found: m.dim(),
                });
            }
        }
        Ok(Ifs { maps })
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    /// Contraction ratios λ_i = ‖A_i‖.
    pub fn ratios(&self) -> Vec<f64> {
        self.maps
            .iter()
            .map(|m| operator_norm(&m.linear).unwrap_or(f64::NAN))
            .collect()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_ifs(self)
    }

    /// Errors unless every map is a contraction with invertible linear part.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_ifs(self);
        if report.pass {
            return Ok(());
        }
        let bad: Vec<String> = report
            .maps
            .iter()
            .filter(|m| !(m.contractive && m.invertible))
            .map(|m| {
                format!(
                    "map {} (norm {}, det {}{}{})",
                    m.index,
                    m.norm,
                    m.det,
                    if m.contractive { "" } else { ", not contractive" },
                    if m.invertible { "" } else { ", not invertible" },
                )
            })
            .collect();
        Err(Error::invalid(format!(
            "IFS failed validation: {}",
            bad.join("; ")
        )))
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        match w.indices().iter().find(|&&i| i >= self.len()) {
            Some(&i) => Err(Error::invalid(format!(
                "word index {i} out of range for {} maps",
                self.len()
            ))),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MapDiagnostics {
    pub index: usize,
    /// λ_i = ‖A_i‖.
    pub norm: f64,
    pub det: f64,
    pub contractive: bool,
    pub invertible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub maps: Vec<MapDiagnostics>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn max_ratio(&self) -> f64 {
        self.maps.iter().map(|m| m.norm).fold(0.0, f64::max)
    }
}

/// Per-map contraction ratio and determinant with pass/fail flags.
pub fn validate_ifs(ifs: &Ifs) -> ValidationReport {
    let maps: Vec<MapDiagnostics> = ifs
        .maps
        .iter()
        .enumerate()
        .map(|(index, m)| {
            let finite = m.linear.is_finite() && m.translation.is_finite();
            let norm = operator_norm(&m.linear).unwrap_or(f64::NAN);
            let det = m.linear.det();
            MapDiagnostics {
                index,
                norm,
                det,
                contractive: finite && norm < 1.0,
                invertible: finite && det.abs() >= DET_FLOOR,
            }
        })
        .collect();
    let pass = maps.iter().all(|m| m.contractive && m.invertible);
    ValidationReport { maps, pass }
}

/// The map `f_{w₀} ∘ … ∘ f_{w_{n−1}}`; the empty word gives the identity.
pub fn compose(ifs: &Ifs, w: &Word) -> Result<AffineMap> {
    ifs.check_word(w)?;
    Ok(w
        .indices()
        .iter()
        .fold(AffineMap::identity(ifs.dim()), |acc, &i| {
            acc.compose_with(&ifs.maps[i])
        }))
}

/// `R = max_i |a_i| / (1 − max_i λ_i)`, floored at [`RADIUS_FLOOR`], so that
/// every `f_i` maps `B(0,R)` into itself.
pub fn bounding_radius(ifs: &Ifs) -> Result<f64> {
    let report = validate_ifs(ifs);
    if !report.pass {
        ifs.ensure_valid()?;
    }
    let max_shift = ifs
        .maps
        .iter()
        .map(|m| m.translation.norm())
        .fold(0.0, f64::max);
    let r = max_shift / (1.0 - report.max_ratio());
    Ok(r.max(RADIUS_FLOOR))
}

#[derive(Debug, Deserialize, Serialize)]
struct MapRecord {
    #[serde(rename = "A")]
    linear: Vec<Vec<f64>>,
    #[serde(rename = "a")]
    translation: Vec<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
struct IfsRecord {
    d: usize,
    maps: Vec<MapRecord>,
}

pub(crate) fn parse_error(text: &str, e: serde_json::Error) -> Error {
    let (line, column) = (e.line(), e.column());
    Error::Parse {
        line,
        column,
        offset: byte_offset(text, line, column),
        message: e.to_string(),
    }
}

/// Converts serde_json's 1-based line/column into a byte offset.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

impl Ifs {
    /// Parses the JSON document `{"d": int, "maps": [{"A": [[..]], "a": [..]}, ..]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let record: IfsRecord = serde_json::from_str(text).map_err(|e| parse_error(text, e))?;
        if record.maps.is_empty() {
            return Err(Error::invalid("field `maps` must contain at least one map"));
        }
        let d = record.d;
        let mut maps = Vec::with_capacity(record.maps.len());
        for (index, m) in record.maps.iter().enumerate() {
            if m.linear.len() != d {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: d,
                    found: m.linear.len(),
                });
            }
            if let Some(row) = m.linear.iter().position(|r| r.len() != d) {
                return Err(Error::invalid(format!(
                    "maps[{index}].A row {row} has {} entries, expected {d}",
                    m.linear[row].len()
                )));
            }
            if m.translation.len() != d {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: d,
                    found: m.translation.len(),
                });
            }
            let linear = SmallMatrix::from_rows(&m.linear)
                .map_err(|e| Error::invalid(format!("maps[{index}].A: {e}")))?;
            let translation = SmallVector::from_slice(&m.translation)
                .map_err(|e| Error::invalid(format!("maps[{index}].a: {e}")))?;
            maps.push(AffineMap::new(linear, translation)?);
        }
        Ifs::new(maps)
    }

    pub fn to_json(&self) -> String {
        let record = IfsRecord {
            d: self.dim(),
            maps: self
                .maps
                .iter()
                .map(|m| MapRecord {
                    linear: m.linear.rows(),
                    translation: m.translation.as_slice().to_vec(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&record).expect("IFS serializes")
    }
}

/// Convenience constructor for planar systems used throughout tests and
/// examples.
pub fn planar_map(a: [[f64; 2]; 2], t: [f64; 2]) -> AffineMap {
    AffineMap::new(
        SmallMatrix::from_rows(&a).expect("2x2"),
        SmallVector::from_slice(&t).expect("2-vector"),
    )
    .expect("matching dims")
}

/// The three-map Sierpinski triangle system with ratio 1/2.
pub fn sierpinski() -> Ifs {
    let h = 0.25 * 3f64.sqrt();
    let half = [[0.5, 0.0], [0.0, 0.5]];
    Ifs::new(vec![
        planar_map(half, [0.0, 0.0]),
        planar_map(half, [0.5, 0.0]),
        planar_map(half, [0.25, h]),
    ])
    .expect("valid system")
}
