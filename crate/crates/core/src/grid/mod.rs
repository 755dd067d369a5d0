//! Sampled functions on closed dyadic grids and seeded test corpora.
//!
//! A [`GridFunction`] on the box `corner + [0, side]^n` at level `L` stores one
//! sample per node `corner + 2^-L m`, `0 <= m_l <= side * 2^L`, in row-major
//! order (axis 0 slowest). A node value belongs to the half-open cell to its
//! upper right.

mod corpus;
mod field;

pub use corpus::{generate_corpus, CorpusSpec, GeneratorKind};
pub use field::{AxisRule, NodeField};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduce;

/// Axis-parallel integer box `corner + [0, side]^n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridBox {
    pub corner: Vec<i64>,
    pub side: u64,
}

impl GridBox {
    pub fn new(corner: Vec<i64>, side: u64) -> Self {
        GridBox { corner, side }
    }

    /// `[0, 1]^n`.
    pub fn unit(dim: usize) -> Self {
        GridBox { corner: vec![0; dim], side: 1 }
    }

    pub fn dim(&self) -> usize {
        self.corner.len()
    }
}

#[derive(Deserialize)]
struct RawGrid {
    dim: usize,
    level: u32,
    #[serde(rename = "box")]
    bbox: GridBox,
    samples: Vec<f64>,
    #[serde(default)]
    tag: String,
}

impl TryFrom<RawGrid> for GridFunction {
    type Error = Error;
    fn try_from(r: RawGrid) -> Result<Self> {
        GridFunction::new(r.dim, r.level, r.bbox, r.samples, r.tag)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridFunction {
    dim: usize,
    level: u32,
    #[serde(rename = "box")]
    bbox: GridBox,
    samples: Vec<f64>,
    tag: String,
}

/// Largest level accepted anywhere; keeps `side << level` far from overflow.
pub const MAX_LEVEL: u32 = 30;

pub(crate) fn check_exponent(p: f64, name: &str) -> Result<()> {
    if p.is_nan() || p <= 0.0 {
        return Err(Error::param(format!("{name} must be positive, got {p}")));
    }
    Ok(())
}

fn check_geometry(dim: usize, level: u32, bbox: &GridBox) -> Result<usize> {
    if dim == 0 {
        return Err(Error::param("dimension must be at least 1"));
    }
    if bbox.dim() != dim {
        return Err(Error::GridMismatch(format!(
            "box corner has {} coordinates for dimension {dim}",
            bbox.dim()
        )));
    }
    if bbox.side == 0 {
        return Err(Error::param("box side must be positive"));
    }
    if level > MAX_LEVEL {
        return Err(Error::LevelTooHigh { requested: level, max: MAX_LEVEL });
    }
    let per_axis = (bbox.side << level) as usize + 1;
    per_axis
        .checked_pow(dim as u32)
        .filter(|&n| n <= 1 << 28)
        .ok_or_else(|| Error::param("grid too large"))
}

impl GridFunction {
    pub fn new(dim: usize, level: u32, bbox: GridBox, samples: Vec<f64>, tag: impl Into<String>) -> Result<Self> {
        let count = check_geometry(dim, level, &bbox)?;
        if samples.len() != count {
            return Err(Error::GridMismatch(format!(
                "expected {count} samples, got {}",
                samples.len()
            )));
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(GridFunction { dim, level, bbox, samples, tag: tag.into() })
    }

    /// Samples `generator` at every node of the grid.
    pub fn sample<F>(dim: usize, level: u32, bbox: GridBox, tag: impl Into<String>, generator: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let count = check_geometry(dim, level, &bbox)?;
        let per_axis = (bbox.side << level) as usize + 1;
        let h = (-(level as f64)).exp2();
        let corner = bbox.corner.clone();
        let samples = reduce::map_indexed(count, |flat| {
            let mut x = vec![0.0; dim];
            let mut rest = flat;
            for l in (0..dim).rev() {
                x[l] = corner[l] as f64 + (rest % per_axis) as f64 * h;
                rest /= per_axis;
            }
            generator(&x)
        });
        GridFunction::new(dim, level, bbox, samples, tag)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn bbox(&self) -> &GridBox {
        &self.bbox
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    /// Mesh width `2^-L`.
    pub fn spacing(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn nodes_per_axis(&self) -> usize {
        (self.bbox.side << self.level) as usize + 1
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.nodes_per_axis(); self.dim]
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Row-major flat index of a multi-index.
    pub fn flat_index(&self, m: &[usize]) -> usize {
        let n = self.nodes_per_axis();
        m.iter().fold(0, |acc, &k| acc * n + k)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let n = self.nodes_per_axis();
        let mut m = vec![0; self.dim];
        let mut rest = flat;
        for l in (0..self.dim).rev() {
            m[l] = rest % n;
            rest /= n;
        }
        m
    }

    pub fn node_coords(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing();
        self.multi_index(flat)
            .iter()
            .zip(&self.bbox.corner)
            .map(|(&k, &c)| c as f64 + k as f64 * h)
            .collect()
    }

    pub fn at(&self, m: &[usize]) -> f64 {
        self.samples[self.flat_index(m)]
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.dim == other.dim && self.level == other.level && self.bbox == other.bbox
    }

    /// Pointwise image under `g`, keeping the grid.
    pub fn map<F: Fn(f64) -> f64>(&self, g: F) -> GridFunction {
        GridFunction {
            dim: self.dim,
            level: self.level,
            bbox: self.bbox.clone(),
            samples: self.samples.iter().map(|&v| g(v)).collect(),
            tag: self.tag.clone(),
        }
    }

    pub fn abs(&self) -> GridFunction {
        self.map(f64::abs)
    }

    /// `max(f, 0)`.
    pub fn positive_part(&self) -> GridFunction {
        self.map(|v| v.max(0.0))
    }

    /// `min(f, 0)`, so that `f` is the sum of both parts.
    pub fn negative_part(&self) -> GridFunction {
        self.map(|v| v.min(0.0))
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch("operands live on different grids".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.samples.iter_mut().zip(&other.samples) {
            *a += b;
        }
        Ok(out)
    }

    /// Sets every sample at a node with all-integer coordinates to zero.
    pub fn zero_at_integer_nodes(&self) -> GridFunction {
        let step = 1usize << self.level;
        let mut out = self.clone();
        for flat in 0..out.samples.len() {
            if self.multi_index(flat).iter().all(|k| k % step == 0) {
                out.samples[flat] = 0.0;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Trapezoid weights along one axis, including the factor `2^-L`.
    pub(crate) fn trapezoid_axis(&self) -> Vec<f64> {
        field::axis_weights(self.nodes_per_axis(), AxisRule::Trapezoid, self.spacing())
    }

    /// `L_p` quasi-norm by the tensor trapezoid rule; `p = inf` gives the
    /// largest absolute sample.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p, "p")?;
        let w = self.trapezoid_axis();
        let weights = vec![w; self.dim];
        Ok(field::weighted_lp(&self.shape(), &weights, &self.samples, p))
    }

    /// `L_p` quasi-norm treating each node as the representative of its
    /// half-open level-`L` cell. Nodes on the upper faces carry no weight.
    /// Exact for functions that are constant on cells.
    pub fn lp_norm_cells(&self, p: f64) -> Result<f64> {
        check_exponent(p, "p")?;
        let w = field::axis_weights(self.nodes_per_axis(), AxisRule::Cell, self.spacing());
        let weights = vec![w; self.dim];
        Ok(field::weighted_lp(&self.shape(), &weights, &self.samples, p))
    }

    /// One node per row: coordinates followed by the value.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for l in 0..self.dim {
            out.push_str(&format!("x{l},"));
        }
        out.push_str("value\n");
        for (flat, v) in self.samples.iter().enumerate() {
            for x in self.node_coords(flat) {
                out.push_str(&format!("{x},"));
            }
            out.push_str(&format!("{v}\n"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("grid functions hold finite samples")
    }

    pub fn from_json(text: &str) -> Result<GridFunction> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(level: u32, f: impl Fn(f64) -> f64 + Sync + Send) -> GridFunction {
        GridFunction::sample(1, level, GridBox::unit(1), "t", move |x| f(x[0])).unwrap()
    }

    #[test]
    fn node_counts() {
        let f = GridFunction::sample(2, 3, GridBox::new(vec![-1, 0], 2), "t", |_| 0.0).unwrap();
        assert_eq!(f.nodes_per_axis(), 17);
        assert_eq!(f.len(), 17 * 17);
        assert_eq!(f.node_coords(17 * 17 - 1), vec![1.0, 2.0]);
        assert_eq!(f.node_coords(1), vec![-1.0, 0.125]);
    }

    #[test]
    fn identity_l2_norm() {
        // Trapezoid rule for x^2 on [0,1] overshoots 1/3 by h^2/6.
        let f = line(8, |x| x);
        let h = 2f64.powi(-8);
        let exact = (1.0 / 3.0 + h * h / 6.0_f64).sqrt();
        assert!((f.lp_norm(2.0).unwrap() - exact).abs() < 1e-14);
        assert!((f.lp_norm(2.0).unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-3);
    }

    #[test]
    fn sup_norm_is_max() {
        let f = line(5, |x| 3.0 * x - 2.0);
        assert_eq!(f.lp_norm(f64::INFINITY).unwrap(), 2.0);
    }

    #[test]
    fn rejects_bad_exponent() {
        let f = line(2, |x| x);
        assert!(f.lp_norm(0.0).is_err());
        assert!(f.lp_norm(-1.0).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let err = GridFunction::sample(1, 2, GridBox::unit(1), "t", |x| 1.0 / (x[0] - 0.5)).unwrap_err();
        assert_eq!(err, Error::NonFinite { index: 2 });
    }

    #[test]
    fn cell_rule_is_exact_for_steps() {
        let f = line(6, |x| if x < 0.25 { 2.0 } else { 0.0 });
        assert!((f.lp_norm_cells(1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let f = GridFunction::sample(2, 2, GridBox::new(vec![0, -1], 1), "round", |x| x[0] - x[1]).unwrap();
        let text = f.to_json();
        assert!(text.contains("\"box\":{\"corner\":[0,-1],\"side\":1}"));
        assert_eq!(GridFunction::from_json(&text).unwrap(), f);
    }

    #[test]
    fn json_rejects_wrong_count() {
        let text = r#"{"dim":1,"level":1,"box":{"corner":[0],"side":1},"samples":[0,1],"tag":"x"}"#;
        assert!(GridFunction::from_json(text).is_err());
    }

    #[test]
    fn csv_rows() {
        let f = line(1, |x| x);
        assert_eq!(f.to_csv(), "x0,value\n0,0\n0.5,0.5\n1,1\n");
    }

    proptest! {
        #[test]
        fn abs_preserves_norm(vals in proptest::collection::vec(-5.0f64..5.0, 17), p in 0.3f64..6.0) {
            let f = GridFunction::new(1, 4, GridBox::unit(1), vals, "p").unwrap();
            prop_assert_eq!(f.lp_norm(p).unwrap(), f.abs().lp_norm(p).unwrap());
            prop_assert_eq!(f.lp_norm(f64::INFINITY).unwrap(), f.abs().lp_norm(f64::INFINITY).unwrap());
        }

        #[test]
        fn norm_is_homogeneous(vals in proptest::collection::vec(-5.0f64..5.0, 25), p in 0.3f64..6.0, c in -4.0f64..4.0) {
            let f = GridFunction::new(2, 2, GridBox::unit(2), vals, "p").unwrap();
            let lhs = f.scale(c).lp_norm(p).unwrap();
            let rhs = c.abs() * f.lp_norm(p).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }

        #[test]
        fn parts_recombine(vals in proptest::collection::vec(-5.0f64..5.0, 9)) {
            let f = GridFunction::new(1, 3, GridBox::unit(1), vals, "p").unwrap();
            let g = f.positive_part().add(&f.negative_part()).unwrap();
            prop_assert_eq!(g.samples(), f.samples());
        }
    }
}
