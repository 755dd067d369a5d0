//! Oscillations over closed dyadic cubes and the norms built from them.
//!
//! `[f]_{j,m} = sup f - inf f` over the samples in the closed cube
//! `2^-j (m + [0,1]^n)`. Cubes are indexed relative to the box corner.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{check_exponent, GridFunction};
use crate::reduce;

/// Per-cube data at one level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OscArray {
    pub level: u32,
    pub cubes_per_axis: usize,
    pub bracket: Vec<f64>,
    pub min_abs: Vec<f64>,
    pub max_abs: Vec<f64>,
}

impl OscArray {
    /// Rows `j, m_1..m_n, bracket, min_abs`.
    pub fn to_csv(&self, dim: usize) -> String {
        let mut out = String::from("j,");
        for l in 0..dim {
            out.push_str(&format!("m{l},"));
        }
        out.push_str("bracket,min_abs\n");
        let k = self.cubes_per_axis;
        for (flat, (b, a)) in self.bracket.iter().zip(&self.min_abs).enumerate() {
            out.push_str(&format!("{},", self.level));
            for l in 0..dim {
                out.push_str(&format!("{},", (flat / k.pow((dim - 1 - l) as u32)) % k));
            }
            out.push_str(&format!("{b},{a}\n"));
        }
        out
    }
}

struct Extrema {
    max: Vec<f64>,
    min: Vec<f64>,
    max_abs: Vec<f64>,
    min_abs: Vec<f64>,
}

impl Extrema {
    fn into_array(self, level: u32, cubes_per_axis: usize) -> OscArray {
        OscArray {
            level,
            cubes_per_axis,
            bracket: self.max.iter().zip(&self.min).map(|(a, b)| a - b).collect(),
            min_abs: self.min_abs,
            max_abs: self.max_abs,
        }
    }
}

/// Brackets for every level `0..=L`, index `j` holding level `j`.
pub fn osc_pyramid(f: &GridFunction) -> Vec<OscArray> {
    let dim = f.dim();
    let level = f.level();
    let n = f.nodes_per_axis();
    let k_top = n - 1;
    let corners = 1usize << dim;
    let v = f.samples();
    let size = k_top.pow(dim as u32);
    let mut ex = Extrema {
        max: vec![f64::NEG_INFINITY; size],
        min: vec![f64::INFINITY; size],
        max_abs: vec![0.0; size],
        min_abs: vec![f64::INFINITY; size],
    };
    for flat in 0..size {
        let mut rest = flat;
        let mut base = 0;
        let mut mul = 1;
        for _ in 0..dim {
            base += (rest % k_top) * mul;
            rest /= k_top;
            mul *= n;
        }
        for eps in 0..corners {
            let mut off = 0;
            let mut mul = 1;
            for l in (0..dim).rev() {
                off += (eps >> l & 1) * mul;
                mul *= n;
            }
            let x = v[base + off];
            ex.max[flat] = ex.max[flat].max(x);
            ex.min[flat] = ex.min[flat].min(x);
            ex.max_abs[flat] = ex.max_abs[flat].max(x.abs());
            ex.min_abs[flat] = ex.min_abs[flat].min(x.abs());
        }
    }
    let mut levels = Vec::with_capacity(level as usize + 1);
    let mut k = k_top;
    for j in (0..level).rev() {
        let kc = k / 2;
        let csize = kc.pow(dim as u32);
        let mut coarse = Extrema {
            max: vec![f64::NEG_INFINITY; csize],
            min: vec![f64::INFINITY; csize],
            max_abs: vec![0.0; csize],
            min_abs: vec![f64::INFINITY; csize],
        };
        for flat in 0..ex.max.len() {
            let mut rest = flat;
            let mut parent = 0;
            let mut mul = 1;
            for _ in 0..dim {
                parent += (rest % k) / 2 * mul;
                rest /= k;
                mul *= kc;
            }
            coarse.max[parent] = coarse.max[parent].max(ex.max[flat]);
            coarse.min[parent] = coarse.min[parent].min(ex.min[flat]);
            coarse.max_abs[parent] = coarse.max_abs[parent].max(ex.max_abs[flat]);
            coarse.min_abs[parent] = coarse.min_abs[parent].min(ex.min_abs[flat]);
        }
        levels.push(std::mem::replace(&mut ex, coarse).into_array(j + 1, k));
        k = kc;
    }
    levels.push(ex.into_array(0, k));
    levels.reverse();
    levels
}

/// Brackets at level `j <= L`.
pub fn osc_brackets(f: &GridFunction, j: u32) -> Result<OscArray> {
    if j > f.level() {
        return Err(Error::LevelTooHigh { requested: j, max: f.level() });
    }
    Ok(osc_pyramid(f).swap_remove(j as usize))
}

/// Samples of the closed level-`j` cube `cube`, with coordinates relative to
/// the cube corner in units of `2^-L`.
fn cube_samples(f: &GridFunction, j: u32, cube: usize) -> (Vec<Vec<usize>>, Vec<f64>) {
    let dim = f.dim();
    let n = f.nodes_per_axis();
    let w = 1usize << (f.level() - j);
    let k = (n - 1) / w;
    let mut base = vec![0usize; dim];
    let mut rest = cube;
    for l in (0..dim).rev() {
        base[l] = (rest % k) * w;
        rest /= k;
    }
    let count = (w + 1).pow(dim as u32);
    let mut coords = Vec::with_capacity(count);
    let mut vals = Vec::with_capacity(count);
    for flat in 0..count {
        let mut rest = flat;
        let mut off = vec![0usize; dim];
        for l in (0..dim).rev() {
            off[l] = rest % (w + 1);
            rest /= w + 1;
        }
        let node: Vec<usize> = (0..dim).map(|l| base[l] + off[l]).collect();
        vals.push(f.at(&node));
        coords.push(off);
    }
    (coords, vals)
}

/// Smallest vertical half-width of a strip containing all `(x, y)`, i.e. the
/// best uniform error of an affine fit. `x` must be increasing.
fn minimax_line(x: &[f64], y: &[f64]) -> f64 {
    let cross = |o: usize, a: usize, b: usize| (x[a] - x[o]) * (y[b] - y[o]) - (y[a] - y[o]) * (x[b] - x[o]);
    let mut lower: Vec<usize> = Vec::new();
    let mut upper: Vec<usize> = Vec::new();
    for i in 0..x.len() {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], i) <= 0.0 {
            lower.pop();
        }
        lower.push(i);
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], i) >= 0.0 {
            upper.pop();
        }
        upper.push(i);
    }
    let spread = |hull: &[usize], sign: f64| -> f64 {
        let mut best = f64::INFINITY;
        for e in hull.windows(2) {
            let (a, b) = (e[0], e[1]);
            let slope = (y[b] - y[a]) / (x[b] - x[a]);
            let width = (0..x.len())
                .map(|i| sign * (y[i] - (y[a] + slope * (x[i] - x[a]))))
                .fold(0.0, f64::max);
            best = best.min(width);
        }
        best
    };
    let width = spread(&lower, 1.0).min(spread(&upper, -1.0));
    if width.is_finite() { 0.5 * width } else { 0.0 }
}

/// Local polynomial oscillation of degree `M` in `L_u` over every level-`j`
/// cube: the best error of a polynomial of degree `M`, averaged
/// (`u = 2`) or uniform (`u = inf`).
pub fn osc_poly(f: &GridFunction, degree: u32, u: f64, j: u32) -> Result<Vec<f64>> {
    if degree > 1 {
        return Err(Error::param("polynomial degree must be 0 or 1"));
    }
    if !(u == 2.0 || u.is_infinite()) {
        return Err(Error::param("u must be 2 or inf"));
    }
    if j > f.level() {
        return Err(Error::LevelTooHigh { requested: j, max: f.level() });
    }
    if u.is_infinite() && degree == 0 {
        return Ok(osc_brackets(f, j)?.bracket.iter().map(|b| 0.5 * b).collect());
    }
    if u.is_infinite() && f.dim() != 1 {
        return Err(Error::param("uniform affine oscillation is implemented for n = 1"));
    }
    let cubes = ((f.nodes_per_axis() - 1) >> (f.level() - j)).pow(f.dim() as u32);
    Ok(reduce::map_indexed(cubes, |cube| {
        let (coords, vals) = cube_samples(f, j, cube);
        if u.is_infinite() {
            let x: Vec<f64> = coords.iter().map(|c| c[0] as f64).collect();
            return minimax_line(&x, &vals);
        }
        let count = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / count;
        let mut resid: Vec<f64> = vals.iter().map(|v| v - mean).collect();
        if degree == 1 {
            // The sample set is a full tensor grid, so centered coordinates
            // are orthogonal to each other and to constants.
            let h = f.spacing();
            for l in 0..f.dim() {
                let xs: Vec<f64> = coords.iter().map(|c| c[l] as f64 * h).collect();
                let xm = xs.iter().sum::<f64>() / count;
                let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
                let sxy: f64 = xs.iter().zip(&vals).map(|(x, v)| (x - xm) * v).sum();
                let beta = sxy / sxx;
                for (r, x) in resid.iter_mut().zip(&xs) {
                    *r -= beta * (x - xm);
                }
            }
        }
        (resid.iter().map(|r| r * r).sum::<f64>() / count).sqrt()
    }))
}

/// Components of the B-type oscillation norm.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OscNormReport {
    pub value: f64,
    pub lp_part: f64,
    pub bracket_part: f64,
    /// Norm over levels `0..=L` minus the norm over `0..=L-1`.
    pub tail_gap: f64,
    /// Whether `n/p < s < 1`, the range where the norm is equivalent.
    pub in_window: bool,
}

fn check_spq(p: f64, q: f64) -> Result<()> {
    check_exponent(p, "p")?;
    check_exponent(q, "q")
}

fn bracket_terms(pyr: &[OscArray], s: f64, p: f64, n: usize) -> Vec<f64> {
    pyr.iter()
        .enumerate()
        .map(|(j, a)| (j as f64 * (s - n as f64 / p)).exp2() * reduce::lq_aggregate_abs(&a.bracket, p))
        .collect()
}

/// `||f||_p + (sum_j 2^{j(s-n/p)q} (sum_m [f]_{j,m}^p)^{q/p})^{1/q}`, `j = 0..=L`.
pub fn b_osc_norm_report(f: &GridFunction, s: f64, p: f64, q: f64) -> Result<OscNormReport> {
    check_spq(p, q)?;
    let n = f.dim();
    let lp_part = f.lp_norm(p)?;
    let terms = bracket_terms(&osc_pyramid(f), s, p, n);
    let bracket_part = reduce::lq_aggregate(&terms, q);
    let shorter = reduce::lq_aggregate(&terms[..terms.len() - 1], q);
    Ok(OscNormReport {
        value: lp_part + bracket_part,
        lp_part,
        bracket_part,
        tail_gap: bracket_part - shorter,
        in_window: n as f64 / p < s && s < 1.0,
    })
}

pub fn b_osc_norm(f: &GridFunction, s: f64, p: f64, q: f64) -> Result<f64> {
    Ok(b_osc_norm_report(f, s, p, q)?.value)
}

/// `||f||_p + || (sum_j 2^{jsq} [f]_{j,m_j(x)}^q)^{1/q} | L_p ||`; the second
/// term is integrated exactly over level-`L` cells.
pub fn f_osc_norm(f: &GridFunction, s: f64, p: f64, q: f64) -> Result<f64> {
    check_spq(p, q)?;
    if p.is_infinite() {
        return Err(Error::param("the F-type norm needs a finite p"));
    }
    let pyr = osc_pyramid(f);
    let dim = f.dim();
    let level = f.level() as usize;
    let k_top = f.nodes_per_axis() - 1;
    let weights: Vec<f64> = (0..pyr.len()).map(|j| (j as f64 * s).exp2()).collect();
    let cell_volume = f.spacing().powi(dim as i32);
    let total = reduce::tree_sum_by(k_top.pow(dim as u32), &|cell| {
        let mut idx = [0usize; 8];
        let mut rest = cell;
        for l in (0..dim).rev() {
            idx[l] = rest % k_top;
            rest /= k_top;
        }
        let mut acc: f64 = 0.0;
        for (j, arr) in pyr.iter().enumerate() {
            let shift = level - j;
            let mut parent = 0;
            for &i in &idx[..dim] {
                parent = parent * arr.cubes_per_axis + (i >> shift);
            }
            let t = weights[j] * arr.bracket[parent];
            if q.is_infinite() {
                acc = acc.max(t);
            } else {
                acc += t.powf(q);
            }
        }
        let g = if q.is_infinite() { acc } else { acc.powf(1.0 / q) };
        cell_volume * g.powf(p)
    });
    Ok(f.lp_norm(p)? + total.powf(1.0 / p))
}
