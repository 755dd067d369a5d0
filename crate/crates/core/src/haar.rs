//! Tensor Haar system on an integer box and its sequence quasi-norm.
//!
//! `h_F = 1` on `[0, 1)` and `h_M = 1` on `[0, 1/2)`, `-1` on `[1/2, 1)`. A type
//! `G` picks one factor per axis; `h^j_{G,m}(x) = prod_l h_{G_l}(2^j x_l - m_l)`.
//! Level 0 admits every type, finer levels only types containing an `M`.
//! Coefficients are `lambda^{j,G}_m = 2^{jn} (f, h^j_{G,m})`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_exponent, GridBox, GridFunction};
use crate::reduce;

/// Bit `l` set means factor `M` on axis `l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HaarType {
    bits: u32,
    dim: usize,
}

impl HaarType {
    pub fn new(bits: u32, dim: usize) -> Result<Self> {
        if dim == 0 || dim > 16 || bits >> dim != 0 {
            return Err(Error::param(format!("invalid Haar type bits {bits:#b} for dimension {dim}")));
        }
        Ok(HaarType { bits, dim })
    }

    pub fn all_m(dim: usize) -> Self {
        HaarType { bits: (1 << dim) - 1, dim }
    }

    pub fn all_f(dim: usize) -> Self {
        HaarType { bits: 0, dim }
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn is_m(self, axis: usize) -> bool {
        self.bits >> axis & 1 == 1
    }

    /// Whether the type may occur at level `j`.
    pub fn admissible_at(self, j: u32) -> bool {
        j == 0 || self.bits != 0
    }

    /// Admissible types at level `j` in increasing bit order.
    pub fn types_at(j: u32, dim: usize) -> impl Iterator<Item = HaarType> {
        let first = if j == 0 { 0 } else { 1 };
        (first..1u32 << dim).map(move |bits| HaarType { bits, dim })
    }
}

impl fmt::Display for HaarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in 0..self.dim {
            f.write_str(if self.is_m(l) { "M" } else { "F" })?;
        }
        Ok(())
    }
}

impl FromStr for HaarType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut bits = 0;
        for (l, c) in s.chars().enumerate() {
            match c {
                'M' => bits |= 1 << l,
                'F' => {}
                _ => return Err(Error::Parse(format!("Haar type `{s}` must consist of F and M"))),
            }
        }
        HaarType::new(bits, s.chars().count())
    }
}

fn h_factor(is_m: bool, y: f64) -> f64 {
    if !(0.0..1.0).contains(&y) {
        0.0
    } else if !is_m || y < 0.5 {
        1.0
    } else {
        -1.0
    }
}

/// `h^j_{G,m}(x)`.
pub fn haar_eval(j: u32, g: HaarType, m: &[i64], x: &[f64]) -> f64 {
    let scale = (j as f64).exp2();
    (0..g.dim)
        .map(|l| h_factor(g.is_m(l), scale * x[l] - m[l] as f64))
        .product()
}

/// Whether `max(n(1/p - 1), 1/p - 1) < s < min(1/p, 1)`, the range where
/// the sequence norm is equivalent to the Besov quasi-norm.
pub fn haar_isomorphism_window(n: usize, s: f64, p: f64) -> bool {
    let ip = 1.0 / p;
    let lo = (n as f64 * (ip - 1.0)).max(ip - 1.0);
    lo < s && s < ip.min(1.0)
}

#[derive(Clone, Debug, PartialEq)]
struct Block {
    g: HaarType,
    values: Vec<f64>,
}

/// Haar coefficients of levels `0..=J` on an integer box, dense per level.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarCoeffs {
    dim: usize,
    bbox: GridBox,
    levels: Vec<Vec<Block>>,
}

/// One coefficient with absolute dyadic position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarEntry {
    pub j: u32,
    #[serde(rename = "G", with = "type_string")]
    pub g: HaarType,
    pub m: Vec<i64>,
    pub value: f64,
}

mod type_string {
    use super::HaarType;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(g: &HaarType, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(g)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<HaarType, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct HaarJson {
    n: usize,
    #[serde(rename = "J")]
    max_level: u32,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    bbox: Option<GridBox>,
    entries: Vec<HaarEntry>,
}

fn cells_per_axis(bbox: &GridBox, j: u32) -> usize {
    (bbox.side as usize) << j
}

impl HaarCoeffs {
    /// All-zero coefficients for levels `0..=max_level`.
    pub fn zeros(dim: usize, bbox: GridBox, max_level: u32) -> Result<Self> {
        if bbox.dim() != dim {
            return Err(Error::GridMismatch("box dimension differs from n".into()));
        }
        if max_level > 24 {
            return Err(Error::LevelTooHigh { requested: max_level, max: 24 });
        }
        let levels = (0..=max_level)
            .map(|j| {
                let size = cells_per_axis(&bbox, j).pow(dim as u32);
                HaarType::types_at(j, dim)
                    .map(|g| Block { g, values: vec![0.0; size] })
                    .collect()
            })
            .collect();
        Ok(HaarCoeffs { dim, bbox, levels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_level(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn bbox(&self) -> &GridBox {
        &self.bbox
    }

    fn local_index(&self, j: u32, m: &[i64]) -> Option<usize> {
        if m.len() != self.dim || j > self.max_level() {
            return None;
        }
        let k = cells_per_axis(&self.bbox, j) as i64;
        let mut flat = 0usize;
        for l in 0..self.dim {
            let local = m[l] - (self.bbox.corner[l] << j);
            if local < 0 || local >= k {
                return None;
            }
            flat = flat * k as usize + local as usize;
        }
        Some(flat)
    }

    fn block(&self, j: u32, g: HaarType) -> Option<&Block> {
        self.levels.get(j as usize)?.iter().find(|b| b.g == g)
    }

    /// Coefficient at absolute position `m`; zero outside the stored range.
    pub fn get(&self, j: u32, g: HaarType, m: &[i64]) -> f64 {
        match (self.block(j, g), self.local_index(j, m)) {
            (Some(b), Some(i)) => b.values[i],
            _ => 0.0,
        }
    }

    pub fn set(&mut self, j: u32, g: HaarType, m: &[i64], value: f64) -> Result<()> {
        if !g.admissible_at(j) {
            return Err(Error::param(format!("type {g} is not admissible at level {j}")));
        }
        let i = self
            .local_index(j, m)
            .ok_or_else(|| Error::param(format!("position {m:?} at level {j} lies outside the box")))?;
        let block = self.levels[j as usize]
            .iter_mut()
            .find(|b| b.g == g)
            .ok_or_else(|| Error::param(format!("type {g} does not match dimension {}", self.dim)))?;
        block.values[i] = value;
        Ok(())
    }

    /// Nonzero coefficients in (level, type, position) order.
    pub fn entries(&self) -> Vec<HaarEntry> {
        let mut out = Vec::new();
        for (j, level) in self.levels.iter().enumerate() {
            let k = cells_per_axis(&self.bbox, j as u32);
            for b in level {
                for (flat, &value) in b.values.iter().enumerate() {
                    if value != 0.0 {
                        let mut m = vec![0i64; self.dim];
                        let mut rest = flat;
                        for l in (0..self.dim).rev() {
                            m[l] = (rest % k) as i64 + (self.bbox.corner[l] << j);
                            rest /= k;
                        }
                        out.push(HaarEntry { j: j as u32, g: b.g, m, value });
                    }
                }
            }
        }
        out
    }

    /// Sequence quasi-norm
    /// `(sum_j 2^{j(s-n/p)q} sum_G (sum_m |lambda|^p)^{q/p})^{1/q}`
    /// with the usual suprema for infinite exponents.
    pub fn b_sequence_norm(&self, s: f64, p: f64, q: f64) -> Result<f64> {
        check_exponent(p, "p")?;
        check_exponent(q, "q")?;
        let n = self.dim as f64;
        let mut terms = Vec::new();
        for (j, level) in self.levels.iter().enumerate() {
            let weight = (j as f64 * (s - n / p)).exp2();
            for b in level {
                let inner = reduce::lq_aggregate_abs(&b.values, p);
                terms.push(weight * inner);
            }
        }
        Ok(reduce::lq_aggregate(&terms, q))
    }

    pub fn to_json(&self) -> String {
        let doc = HaarJson {
            n: self.dim,
            max_level: self.max_level(),
            bbox: Some(self.bbox.clone()),
            entries: self.entries(),
        };
        serde_json::to_string(&doc).expect("finite coefficients")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: HaarJson = serde_json::from_str(text)?;
        let bbox = match doc.bbox {
            Some(b) => b,
            None => infer_box(doc.n, &doc.entries),
        };
        let mut c = HaarCoeffs::zeros(doc.n, bbox, doc.max_level)?;
        for e in &doc.entries {
            if e.value.is_finite() {
                c.set(e.j, e.g, &e.m, e.value)?;
            } else {
                return Err(Error::param("non-finite coefficient"));
            }
        }
        Ok(c)
    }
}

fn infer_box(dim: usize, entries: &[HaarEntry]) -> GridBox {
    if entries.is_empty() {
        return GridBox::unit(dim);
    }
    let mut lo = vec![i64::MAX; dim];
    let mut hi = vec![i64::MIN; dim];
    for e in entries {
        for l in 0..dim.min(e.m.len()) {
            lo[l] = lo[l].min(e.m[l] >> e.j);
            hi[l] = hi[l].max(((e.m[l] + 1) + (1 << e.j) - 1) >> e.j);
        }
    }
    let side = (0..dim).map(|l| hi[l] - lo[l]).max().unwrap_or(1).max(1) as u64;
    GridBox::new(lo, side)
}

/// Splits level-`j+1` cell averages (shape `[2k]^n`) into level-`j` averages
/// and details, one block per type in bit order.
fn split(a: &[f64], k: usize, dim: usize) -> Vec<Vec<f64>> {
    let types = 1usize << dim;
    let k2 = 2 * k;
    let size = k.pow(dim as u32);
    let scale = 1.0 / types as f64;
    let mut out = vec![vec![0.0; size]; types];
    let mut m = vec![0usize; dim];
    let mut child = vec![0.0; types];
    for flat in 0..size {
        let mut rest = flat;
        for l in (0..dim).rev() {
            m[l] = rest % k;
            rest /= k;
        }
        for (eps, c) in child.iter_mut().enumerate() {
            let mut src = 0;
            for l in 0..dim {
                src = src * k2 + 2 * m[l] + (eps >> l & 1);
            }
            *c = a[src];
        }
        for (g, block) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (eps, &c) in child.iter().enumerate() {
                if (g & eps).count_ones() % 2 == 0 {
                    acc += c;
                } else {
                    acc -= c;
                }
            }
            block[flat] = acc * scale;
        }
    }
    out
}

/// Inverse of [`split`].
fn merge(blocks: &[&[f64]], k: usize, dim: usize) -> Vec<f64> {
    let types = 1usize << dim;
    let k2 = 2 * k;
    let size = k.pow(dim as u32);
    let mut out = vec![0.0; k2.pow(dim as u32)];
    let mut m = vec![0usize; dim];
    for flat in 0..size {
        let mut rest = flat;
        for l in (0..dim).rev() {
            m[l] = rest % k;
            rest /= k;
        }
        for eps in 0..types {
            let mut acc = 0.0;
            for (g, block) in blocks.iter().enumerate() {
                if (g & eps).count_ones() % 2 == 0 {
                    acc += block[flat];
                } else {
                    acc -= block[flat];
                }
            }
            let mut dst = 0;
            for l in 0..dim {
                dst = dst * k2 + 2 * m[l] + (eps >> l & 1);
            }
            out[dst] = acc;
        }
    }
    out
}

/// Haar coefficients of levels `0..=max_level` of a function that is constant
/// on level-`L` cells; each cell takes the value at its lower-left node.
pub fn analyze(f: &GridFunction, max_level: u32) -> Result<HaarCoeffs> {
    let level = f.level();
    if max_level > level {
        return Err(Error::LevelTooHigh { requested: max_level, max: level });
    }
    let dim = f.dim();
    let mut coeffs = HaarCoeffs::zeros(dim, f.bbox().clone(), max_level)?;
    let k_top = cells_per_axis(f.bbox(), level);
    let mut a: Vec<f64> = (0..k_top.pow(dim as u32))
        .map(|flat| {
            let mut rest = flat;
            let mut node = vec![0usize; dim];
            for l in (0..dim).rev() {
                node[l] = rest % k_top;
                rest /= k_top;
            }
            f.at(&node)
        })
        .collect();
    for j in (0..level).rev() {
        let mut blocks = split(&a, cells_per_axis(f.bbox(), j), dim);
        a = std::mem::take(&mut blocks[0]);
        if j <= max_level {
            for (slot, block) in coeffs.levels[j as usize].iter_mut().filter(|b| b.g.bits != 0).zip(blocks.into_iter().skip(1)) {
                slot.values = block;
            }
        }
    }
    coeffs.levels[0][0].values = a;
    Ok(coeffs)
}

/// Step function on level-`L` cells with the given coefficients, sampled at
/// cell representatives; nodes on the upper faces of the box get zero.
pub fn synthesize(c: &HaarCoeffs, level: u32) -> Result<GridFunction> {
    let max_level = c.max_level();
    if level < max_level {
        return Err(Error::LevelTooHigh { requested: max_level, max: level });
    }
    let dim = c.dim;
    let mut a = c.levels[0][0].values.clone();
    for j in 0..level {
        let k = cells_per_axis(&c.bbox, j);
        let size = k.pow(dim as u32);
        let zeros = vec![0.0; size];
        let mut blocks: Vec<&[f64]> = vec![&a];
        for g in 1..1u32 << dim {
            let detail = c
                .levels
                .get(j as usize)
                .and_then(|lv| lv.iter().find(|b| b.g.bits == g))
                .map(|b| b.values.as_slice())
                .unwrap_or(&zeros);
            blocks.push(detail);
        }
        a = merge(&blocks, k, dim);
    }
    if level == max_level && level > 0 {
        // Level-L details evaluated at the lower-left representative.
        for b in c.levels[level as usize].iter() {
            for (v, d) in a.iter_mut().zip(&b.values) {
                *v += d;
            }
        }
    }
    let k_top = cells_per_axis(&c.bbox, level);
    let per_axis = k_top + 1;
    let mut samples = vec![0.0; per_axis.pow(dim as u32)];
    for (flat, s) in samples.iter_mut().enumerate() {
        let mut rest = flat;
        let mut cell = 0usize;
        let mut inside = true;
        let mut stride = 1;
        for _ in 0..dim {
            let idx = rest % per_axis;
            rest /= per_axis;
            if idx == k_top {
                inside = false;
            }
            cell += idx * stride;
            stride *= k_top;
        }
        if inside {
            *s = a[cell];
        }
    }
    GridFunction::new(dim, level, c.bbox.clone(), samples, "haar-synthesis")
}

/// `f_j = sum_{m in {0..2^j-1}^n} h^j_{(M..M),m}` on `[0,1]^n` at level `L >= j+1`.
pub fn example_3_7(j: u32, n: usize, level: u32) -> Result<GridFunction> {
    if level < j + 1 {
        return Err(Error::param(format!("level {level} must be at least j + 1 = {}", j + 1)));
    }
    let scale = (j as f64).exp2();
    GridFunction::sample(n, level, GridBox::unit(n), format!("f_{j}"), move |x| {
        x.iter()
            .map(|&t| {
                if !(0.0..1.0).contains(&t) {
                    return 0.0;
                }
                let y = scale * t;
                h_factor(true, y - y.floor())
            })
            .product()
    })
}
