//! Faber hat expansion of continuous one-dimensional functions.
//!
//! `d_{j,m} = f(x + 2h) - 2 f(x + h) + f(x)` with `x = 2^-j m`, `h = 2^{-j-1}`,
//! and `f = -1/2 sum d_{j,m} v_{j,m}` where `v_{j,m}` is the unit hat over
//! `[2^-j m, 2^-j (m+1)]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_exponent, GridBox, GridFunction};
use crate::reduce;

/// Samples this close to zero satisfy the boundary hypothesis.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaberKind {
    /// `f` on `[0, 1]` with `f(0) = f(1) = 0`.
    UnitInterval,
    /// `f` compactly supported in the box and zero at every integer.
    RealLineCompact,
}

impl FaberKind {
    /// Unit interval for the box `[0, 1]`, real line otherwise.
    pub fn for_box(bbox: &GridBox) -> FaberKind {
        if bbox.corner == [0] && bbox.side == 1 {
            FaberKind::UnitInterval
        } else {
            FaberKind::RealLineCompact
        }
    }
}

/// `v_{j,m}(x)`, half-open on the right.
pub fn hat_eval(j: u32, m: i64, x: f64) -> f64 {
    let scale = (j as f64).exp2();
    let t = scale * x - m as f64;
    if !(0.0..1.0).contains(&t) {
        0.0
    } else if t < 0.5 {
        2.0 * t
    } else {
        2.0 * (1.0 - t)
    }
}

/// Whether `1/p < s < 1 + min(1/p, 1)`, where the B-type coefficient norm is
/// an equivalent quasi-norm.
pub fn faber_b_window(s: f64, p: f64) -> bool {
    let ip = 1.0 / p;
    ip < s && s < 1.0 + ip.min(1.0)
}

/// Parameter range where the F-type coefficient norm is an equivalent
/// quasi-norm.
pub fn faber_f_window(s: f64, p: f64, q: f64) -> bool {
    let (ip, iq) = (1.0 / p, 1.0 / q);
    let finite = p.is_finite() && q.is_finite();
    (finite && ip.max(iq).max(1.0) < s && s < 1.0 + ip.min(iq).min(1.0))
        || (finite && p > 1.0 && q > 1.0 && s == 1.0)
        || (p > 1.0 && p.is_finite() && q > 1.0 && ip.max(iq) < s && s < 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FaberCoeffs {
    kind: FaberKind,
    lo: i64,
    side: u64,
    levels: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct FaberJson {
    kind: FaberKind,
    #[serde(rename = "J")]
    max_level: u32,
    #[serde(rename = "box")]
    bbox: GridBox,
    entries: Vec<FaberEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaberEntry {
    pub j: u32,
    pub m: i64,
    pub value: f64,
}

impl FaberCoeffs {
    pub fn kind(&self) -> FaberKind {
        self.kind
    }

    pub fn max_level(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn bbox(&self) -> GridBox {
        GridBox::new(vec![self.lo], self.side)
    }

    /// First absolute index and count of level-`j` coefficients.
    pub fn index_range(&self, j: u32) -> (i64, usize) {
        (self.lo << j, (self.side as usize) << j)
    }

    /// Level-`j` coefficients in increasing `m`.
    pub fn level(&self, j: u32) -> &[f64] {
        &self.levels[j as usize]
    }

    pub fn get(&self, j: u32, m: i64) -> f64 {
        let (start, count) = self.index_range(j);
        match self.levels.get(j as usize) {
            Some(lv) if m >= start && ((m - start) as usize) < count => lv[(m - start) as usize],
            _ => 0.0,
        }
    }

    pub fn entries(&self) -> Vec<FaberEntry> {
        let mut out = Vec::new();
        for j in 0..=self.max_level() {
            let (start, _) = self.index_range(j);
            for (i, &value) in self.level(j).iter().enumerate() {
                if value != 0.0 {
                    out.push(FaberEntry { j, m: start + i as i64, value });
                }
            }
        }
        out
    }

    /// `(sum_j 2^{j(s-1/p)q} (sum_m |d_{j,m}|^p)^{q/p})^{1/q}`.
    pub fn b_faber_norm(&self, s: f64, p: f64, q: f64) -> Result<f64> {
        check_exponent(p, "p")?;
        check_exponent(q, "q")?;
        let terms: Vec<f64> = self
            .levels
            .iter()
            .enumerate()
            .map(|(j, d)| (j as f64 * (s - 1.0 / p)).exp2() * reduce::lq_aggregate_abs(d, p))
            .collect();
        Ok(reduce::lq_aggregate(&terms, q))
    }

    /// The `p = q` norm assembled from one unit interval at a time.
    pub fn b_faber_norm_by_interval(&self, s: f64, p: f64) -> Result<f64> {
        check_exponent(p, "p")?;
        let per_interval: Vec<f64> = (0..self.side as usize)
            .map(|k| {
                let terms: Vec<f64> = self
                    .levels
                    .iter()
                    .enumerate()
                    .map(|(j, d)| {
                        let w = 1usize << j;
                        (j as f64 * (s - 1.0 / p)).exp2() * reduce::lq_aggregate_abs(&d[k * w..(k + 1) * w], p)
                    })
                    .collect();
                reduce::lq_aggregate(&terms, p)
            })
            .collect();
        Ok(reduce::lq_aggregate(&per_interval, p))
    }

    /// `|| (sum_j 2^{jsq} |d_{j,m_j(x)}|^q)^{1/q} | L_p ||`, integrated exactly
    /// over level-`L` cells.
    pub fn f_faber_norm(&self, s: f64, p: f64, q: f64, level: u32) -> Result<f64> {
        check_exponent(p, "p")?;
        check_exponent(q, "q")?;
        if p.is_infinite() {
            return Err(Error::param("the F-type norm needs a finite p"));
        }
        if level <= self.max_level() {
            return Err(Error::param(format!("level {level} must exceed J = {}", self.max_level())));
        }
        let cells = (self.side as usize) << level;
        let weights: Vec<f64> = (0..self.levels.len()).map(|j| (j as f64 * s).exp2()).collect();
        let h = (-(level as f64)).exp2();
        let total = reduce::tree_sum_by(cells, &|i| {
            let mut acc: f64 = 0.0;
            for (j, d) in self.levels.iter().enumerate() {
                let v = weights[j] * d[i >> (level as usize - j)].abs();
                if q.is_infinite() {
                    acc = acc.max(v);
                } else {
                    acc += v.powf(q);
                }
            }
            let g = if q.is_infinite() { acc } else { acc.powf(1.0 / q) };
            h * g.powf(p)
        });
        Ok(total.powf(1.0 / p))
    }

    pub fn to_json(&self) -> String {
        let doc = FaberJson {
            kind: self.kind,
            max_level: self.max_level(),
            bbox: self.bbox(),
            entries: self.entries(),
        };
        serde_json::to_string(&doc).expect("finite coefficients")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FaberJson = serde_json::from_str(text)?;
        if doc.bbox.dim() != 1 {
            return Err(Error::param("Faber coefficients are one-dimensional"));
        }
        let mut c = FaberCoeffs::zeros(doc.kind, doc.bbox.corner[0], doc.bbox.side, doc.max_level)?;
        for e in doc.entries {
            let (start, count) = c.index_range(e.j);
            if e.j > doc.max_level || e.m < start || (e.m - start) as usize >= count || !e.value.is_finite() {
                return Err(Error::param(format!("entry (j={}, m={}) is out of range", e.j, e.m)));
            }
            c.levels[e.j as usize][(e.m - start) as usize] = e.value;
        }
        Ok(c)
    }

    fn zeros(kind: FaberKind, lo: i64, side: u64, max_level: u32) -> Result<Self> {
        if kind == FaberKind::UnitInterval && (lo != 0 || side != 1) {
            return Err(Error::param("unit-interval coefficients need the box [0, 1]"));
        }
        if max_level > 28 {
            return Err(Error::LevelTooHigh { requested: max_level, max: 28 });
        }
        let levels = (0..=max_level).map(|j| vec![0.0; (side as usize) << j]).collect();
        Ok(FaberCoeffs { kind, lo, side, levels })
    }
}

fn check_boundary(f: &GridFunction, kind: FaberKind) -> Result<()> {
    if f.dim() != 1 {
        return Err(Error::param("Faber analysis is one-dimensional"));
    }
    if kind == FaberKind::UnitInterval && (f.bbox().corner != [0] || f.bbox().side != 1) {
        return Err(Error::param("unit-interval kind needs the box [0, 1]"));
    }
    let step = 1usize << f.level();
    let lo = f.bbox().corner[0];
    for k in 0..=f.bbox().side as usize {
        let v = f.samples()[k * step];
        if v.abs() > BOUNDARY_TOL {
            return Err(Error::BoundaryViolation { node: (lo + k as i64) as f64, value: v });
        }
    }
    Ok(())
}

/// Coefficients `d_{j,m}` for `j = 0..=J`, `J <= L - 1`.
pub fn faber_analyze(f: &GridFunction, max_level: u32, kind: FaberKind) -> Result<FaberCoeffs> {
    check_boundary(f, kind)?;
    let level = f.level();
    if level == 0 || max_level > level - 1 {
        return Err(Error::LevelTooHigh { requested: max_level, max: level.saturating_sub(1) });
    }
    let mut c = FaberCoeffs::zeros(kind, f.bbox().corner[0], f.bbox().side, max_level)?;
    let v = f.samples();
    for (j, d) in c.levels.iter_mut().enumerate() {
        let width = 1usize << (level as usize - j);
        let half = width / 2;
        for (m, slot) in d.iter_mut().enumerate() {
            let b = m * width;
            *slot = v[b + width] - 2.0 * v[b + half] + v[b];
        }
    }
    Ok(c)
}

/// `-1/2 sum d_{j,m} v_{j,m}` sampled at level `L >= J + 1`.
pub fn faber_synthesize(c: &FaberCoeffs, level: u32) -> Result<GridFunction> {
    if level <= c.max_level() {
        return Err(Error::param(format!("level {level} must exceed J = {}", c.max_level())));
    }
    let nodes = ((c.side as usize) << level) + 1;
    let samples = reduce::map_indexed(nodes, |i| {
        let mut acc = 0.0;
        for (j, d) in c.levels.iter().enumerate() {
            let shift = level as usize - j;
            let cell = i >> shift;
            if cell >= d.len() {
                continue;
            }
            let t = (i & ((1 << shift) - 1)) as f64 / (1u64 << shift) as f64;
            let hat = if t < 0.5 { 2.0 * t } else { 2.0 * (1.0 - t) };
            acc += d[cell] * hat;
        }
        -0.5 * acc
    });
    GridFunction::new(1, level, c.bbox(), samples, "faber-synthesis")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomogeneityReport {
    /// `lambda^{s - 1/p} ||f|| / ||f(lambda .)||`; `NaN` for the zero function.
    pub ratio: f64,
    pub norm_f: f64,
    pub norm_dilated: f64,
    pub zero_input: bool,
}

/// Compares `||f(lambda .)||` with `lambda^{s-1/p} ||f||` for `f` supported in
/// `[0, lambda]`, `lambda = 2^-J`, using the B-type coefficient norm.
pub fn homogeneity_ratio(f: &GridFunction, dilation_level: u32, s: f64, p: f64, q: f64) -> Result<HomogeneityReport> {
    let level = f.level();
    if f.dim() != 1 || f.bbox() != &GridBox::unit(1) {
        return Err(Error::param("homogeneity check needs a function on [0, 1]"));
    }
    if dilation_level + 1 > level {
        return Err(Error::param("dilation level leaves no resolved levels"));
    }
    let support_end = 1usize << (level - dilation_level);
    let h = f.spacing();
    for (i, &v) in f.samples().iter().enumerate() {
        if (i == 0 || i >= support_end) && v.abs() > BOUNDARY_TOL {
            return Err(Error::SupportViolation { node: i as f64 * h, value: v });
        }
    }
    let dilated = GridFunction::new(
        1,
        level - dilation_level,
        GridBox::unit(1),
        f.samples()[..=support_end].to_vec(),
        format!("{}-dilated", f.tag()),
    )?;
    let norm_f = faber_analyze(f, level - 1, FaberKind::UnitInterval)?.b_faber_norm(s, p, q)?;
    let norm_dilated = faber_analyze(&dilated, dilated.level() - 1, FaberKind::UnitInterval)?.b_faber_norm(s, p, q)?;
    let lambda = (-(dilation_level as f64)).exp2();
    let zero_input = norm_f == 0.0;
    let ratio = if zero_input { f64::NAN } else { lambda.powf(s - 1.0 / p) * norm_f / norm_dilated };
    Ok(HomogeneityReport { ratio, norm_f, norm_dilated, zero_input })
}
