//! Finite differences, moduli of smoothness and derived (semi)norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_exponent, AxisRule, GridFunction, NodeField};
use crate::reduce;

/// Growth above this factor over the second half of the levels is not
/// "bounded".
pub const BOUNDED_RATIO: f64 = 1.1;
/// Minimal log-log slope for a power-growth verdict.
pub const MIN_SLOPE: f64 = 0.05;
/// Minimal coefficient of determination for any fitted verdict.
pub const MIN_R2: f64 = 0.9;

fn check_order(order: u32) -> Result<()> {
    if order == 1 || order == 2 {
        Ok(())
    } else {
        Err(Error::param(format!("difference order must be 1 or 2, got {order}")))
    }
}

/// Converts a step `h` into a node count, rejecting non-grid steps.
pub fn grid_steps(f: &GridFunction, h: f64) -> Result<usize> {
    let k = h * (f.level() as f64).exp2();
    if !(k >= 1.0) || (k - k.round()).abs() > 1e-9 {
        return Err(Error::param(format!("step {h} is not a positive multiple of 2^-{}", f.level())));
    }
    Ok(k.round() as usize)
}

/// `Delta^M_h f` along `axis`, on the part of the box where `x + M h` stays
/// inside; the box shrinks by `M h` on the upper side of that axis.
pub fn difference(f: &GridFunction, order: u32, axis: usize, h: f64) -> Result<NodeField> {
    check_order(order)?;
    if axis >= f.dim() {
        return Err(Error::param(format!("axis {axis} out of range")));
    }
    let k = grid_steps(f, h)?;
    let n = f.nodes_per_axis();
    let span = order as usize * k;
    let mut shape = f.shape();
    shape[axis] = n.saturating_sub(span);
    let size: usize = shape.iter().product();
    let stride = n.pow((f.dim() - 1 - axis) as u32);
    let v = f.samples();
    let values = (0..size)
        .map(|flat| {
            let mut rest = flat;
            let mut src = 0;
            let mut mul = 1;
            for l in (0..f.dim()).rev() {
                src += (rest % shape[l]) * mul;
                rest /= shape[l];
                mul *= n;
            }
            let d = k * stride;
            match order {
                1 => v[src + d] - v[src],
                _ => v[src + 2 * d] - 2.0 * v[src + d] + v[src],
            }
        })
        .collect();
    let origin = f.bbox().corner.iter().map(|&c| c as f64).collect();
    Ok(NodeField {
        level: f.level(),
        shape,
        origin,
        rules: vec![AxisRule::Trapezoid; f.dim()],
        values,
    })
}

/// Sum of weighted `|Delta|^p` (or the max for `p = inf`) for a shift by `k`
/// nodes, without materializing the difference.
fn shifted_power(f: &GridFunction, order: u32, axis: usize, k: usize, p: f64) -> f64 {
    let n = f.nodes_per_axis();
    let span = order as usize * k;
    if span >= n {
        return 0.0;
    }
    let dim = f.dim();
    let m = n - span;
    let h = f.spacing();
    let trap = |i: usize, len: usize| if len == 1 { 0.0 } else if i == 0 || i == len - 1 { 0.5 * h } else { h };
    let v = f.samples();
    let stride = n.pow((dim - 1 - axis) as u32);
    let d = k * stride;
    let size = m * n.pow(dim as u32 - 1);
    if dim == 1 {
        let pw = |delta: f64| if p == 2.0 { delta * delta } else if p == 1.0 { delta } else { delta.powf(p) };
        let term = |i: usize| {
            let delta = match order {
                1 => v[i + d] - v[i],
                _ => v[i + 2 * d] - 2.0 * v[i + d] + v[i],
            }
            .abs();
            if p.is_infinite() { delta } else { trap(i, m) * pw(delta) }
        };
        return if p.is_infinite() {
            if m == 1 { 0.0 } else { reduce::max_by(size, &term) }
        } else {
            reduce::tree_sum_by(size, &term)
        };
    }
    let term = |flat: usize| {
        let mut rest = flat;
        let mut src = 0;
        let mut mul = 1;
        let mut w = 1.0;
        for l in (0..dim).rev() {
            let len = if l == axis { m } else { n };
            let i = rest % len;
            rest /= len;
            src += i * mul;
            mul *= n;
            w *= trap(i, len);
        }
        let delta = match order {
            1 => v[src + d] - v[src],
            _ => v[src + 2 * d] - 2.0 * v[src + d] + v[src],
        }
        .abs();
        if p.is_infinite() {
            if w > 0.0 { delta } else { 0.0 }
        } else if p == 2.0 {
            w * delta * delta
        } else if p == 1.0 {
            w * delta
        } else {
            w * delta.powf(p)
        }
    };
    if p.is_infinite() {
        reduce::max_by(size, &term)
    } else {
        reduce::tree_sum_by(size, &term)
    }
}

fn shift_norm(f: &GridFunction, order: u32, axis: usize, k: usize, p: f64) -> f64 {
    let raw = shifted_power(f, order, axis, k, p);
    if p.is_infinite() { raw } else { raw.powf(1.0 / p) }
}

/// `omega_M(f, t)_p`: the largest `||Delta^M_h f||_p` over grid steps
/// `0 < h <= t` along every axis.
pub fn modulus(f: &GridFunction, order: u32, p: f64, t: f64) -> Result<f64> {
    check_order(order)?;
    check_exponent(p, "p")?;
    let kmax = grid_steps(f, t)?;
    let mut best: f64 = 0.0;
    for axis in 0..f.dim() {
        for k in 1..=kmax {
            best = best.max(shift_norm(f, order, axis, k, p));
        }
    }
    Ok(best)
}

/// `omega_M(f, 2^-j)_p` for `j = j0..=j1`, sharing the shift scan.
pub fn modulus_profile(f: &GridFunction, order: u32, p: f64, j0: u32, j1: u32) -> Result<Vec<f64>> {
    check_order(order)?;
    check_exponent(p, "p")?;
    if j1 > f.level() || j0 > j1 {
        return Err(Error::param(format!("level range {j0}..={j1} invalid for grid level {}", f.level())));
    }
    let level = f.level();
    let mut out = vec![0.0; (j1 - j0 + 1) as usize];
    let mut best: f64 = 0.0;
    let mut k_done = 0usize;
    for j in (j0..=j1).rev() {
        let kmax = 1usize << (level - j);
        let norms = reduce::map_indexed(kmax - k_done, |i| {
            (0..f.dim())
                .map(|axis| shift_norm(f, order, axis, k_done + 1 + i, p))
                .fold(0.0, f64::max)
        });
        best = norms.into_iter().fold(best, f64::max);
        k_done = kmax;
        out[(j - j0) as usize] = best;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GrowthVerdict {
    Bounded,
    PowerGrowth { alpha: f64 },
    Inconclusive,
}

/// Per-level terms `a_j`, partial aggregates `S_J` and the fitted verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub levels: Vec<u32>,
    pub a: Vec<f64>,
    #[serde(rename = "S")]
    pub partial: Vec<f64>,
    pub slope: f64,
    pub r2: f64,
    pub verdict: GrowthVerdict,
}

/// Least-squares line through `(x_i, y_i)`: `(slope, r^2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.len() < 2 {
        return (0.0, 0.0);
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

impl GrowthReport {
    /// Builds the report from the terms `a_j`, `j = levels[0]..`.
    pub fn from_terms(levels: Vec<u32>, a: Vec<f64>, q: f64) -> GrowthReport {
        let mut partial = Vec::with_capacity(a.len());
        let mut acc: f64 = 0.0;
        for &t in &a {
            if q.is_infinite() {
                acc = acc.max(t);
                partial.push(acc);
            } else {
                acc += t.powf(q);
                partial.push(acc.powf(1.0 / q));
            }
        }
        let count = partial.len();
        let usable: Vec<(f64, f64)> = partial
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > 0.0)
            .map(|(i, s)| (((i + 1) as f64).log2(), s.log2()))
            .collect();
        let (x, y): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
        let (slope, r2) = linear_fit(&x, &y);

        let verdict = if count == 0 || partial[count - 1] == 0.0 {
            GrowthVerdict::Bounded
        } else {
            let mid = count / 2;
            let reference = partial[mid];
            let ratio = partial[mid..].iter().fold(0.0f64, |m, s| m.max(s / reference));
            // Geometric decay of the terms also keeps the sum bounded.
            let positive: Vec<(f64, f64)> = levels
                .iter()
                .zip(&a)
                .filter(|(_, t)| **t > 0.0)
                .map(|(j, t)| (*j as f64, t.log2()))
                .collect();
            let (jx, ly): (Vec<f64>, Vec<f64>) = positive.into_iter().unzip();
            let (decay, decay_r2) = linear_fit(&jx, &ly);
            let flat = reference > 0.0 && ratio <= BOUNDED_RATIO;
            let decaying = jx.len() >= 3 && decay < -MIN_SLOPE && decay_r2 >= MIN_R2;
            if flat || decaying {
                GrowthVerdict::Bounded
            } else if slope > MIN_SLOPE && r2 >= MIN_R2 {
                GrowthVerdict::PowerGrowth { alpha: slope }
            } else {
                GrowthVerdict::Inconclusive
            }
        };
        GrowthReport { levels, a, partial, slope, r2, verdict }
    }
}

/// `(sum_{j=j0}^{J} 2^{j sigma q} omega_M(f, 2^-j)_p^q)^{1/q}` with its growth
/// report.
pub fn besov_diff_seminorm(
    f: &GridFunction,
    sigma: f64,
    order: u32,
    p: f64,
    q: f64,
    j0: u32,
    j1: u32,
) -> Result<(f64, GrowthReport)> {
    check_exponent(q, "q")?;
    if !(sigma > 0.0 && sigma < order as f64) {
        return Err(Error::param(format!("smoothness {sigma} must lie in (0, {order})")));
    }
    let omega = modulus_profile(f, order, p, j0, j1)?;
    let levels: Vec<u32> = (j0..=j1).collect();
    let a: Vec<f64> = levels
        .iter()
        .zip(&omega)
        .map(|(&j, &w)| (j as f64 * sigma).exp2() * w)
        .collect();
    let report = GrowthReport::from_terms(levels, a, q);
    let value = *report.partial.last().unwrap_or(&0.0);
    Ok((value, report))
}

/// Growth of the difference seminorm over levels `1..=L-2`; `bounded` is read
/// as membership.
pub fn membership_diagnostic(f: &GridFunction, s: f64, p: f64, q: f64, order: u32) -> Result<GrowthReport> {
    if f.level() < 4 {
        return Err(Error::param("membership diagnostic needs level >= 4"));
    }
    Ok(besov_diff_seminorm(f, s, order, p, q, 1, f.level() - 2)?.1)
}

/// `sup |f| + sup_{0 < |x-y| <= 1} |f(x) - f(y)| / |x-y|^s` over node pairs.
pub fn holder_norm(f: &GridFunction, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::param(format!("Hoelder exponent {s} must lie in (0, 1)")));
    }
    if f.dim() > 8 {
        return Err(Error::param("Hoelder norm supports at most 8 dimensions"));
    }
    let offsets = pair_offsets(f.dim(), f.level(), s);
    let n = f.nodes_per_axis();
    let dim = f.dim();
    let v = f.samples();
    let best = reduce::max_by(v.len(), &|flat| {
        let mut idx = [0usize; 8];
        let mut rest = flat;
        for l in (0..dim).rev() {
            idx[l] = rest % n;
            rest /= n;
        }
        let mut local: f64 = 0.0;
        'off: for (off, w) in &offsets {
            let mut dst = 0usize;
            for l in 0..dim {
                let t = idx[l] as i64 + off[l];
                if t < 0 || t >= n as i64 {
                    continue 'off;
                }
                dst = dst * n + t as usize;
            }
            local = local.max((v[dst] - v[flat]).abs() * w);
        }
        local
    });
    Ok(f.max_abs() + best)
}

/// Half of the offsets with `0 < |d| 2^-L <= 1`, each with `|d 2^-L|^{-s}`.
fn pair_offsets(dim: usize, level: u32, s: f64) -> Vec<(Vec<i64>, f64)> {
    let r = 1i64 << level;
    let h = (-(level as f64)).exp2();
    let mut out = Vec::new();
    let mut cur = vec![-r; dim];
    loop {
        let norm2: i64 = cur.iter().map(|c| c * c).sum();
        let positive = cur.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0);
        if positive && norm2 <= r * r {
            out.push((cur.clone(), ((norm2 as f64).sqrt() * h).powf(-s)));
        }
        let mut l = dim;
        loop {
            if l == 0 {
                return out;
            }
            l -= 1;
            if cur[l] < r {
                cur[l] += 1;
                break;
            }
            cur[l] = -r;
        }
    }
}

/// `sum_{|alpha| <= 1} ||D^alpha f||_p` with forward differences as the
/// derivatives; each difference quotient stands for a whole cell.
pub fn w1p_norm(f: &GridFunction, p: f64) -> Result<f64> {
    check_exponent(p, "p")?;
    let mut total = f.lp_norm(p)?;
    let inv_h = (f.level() as f64).exp2();
    for axis in 0..f.dim() {
        let mut d = difference(f, 1, axis, f.spacing())?;
        for v in d.values.iter_mut() {
            *v *= inv_h;
        }
        d.rules[axis] = AxisRule::Cells;
        total += d.lp_norm(p)?;
    }
    Ok(total)
}

/// Number of level-`L` cells (one-dimensional edges along each axis) on which
/// `f` strictly changes sign.
pub fn sign_change_cells(f: &GridFunction) -> usize {
    let n = f.nodes_per_axis();
    let v = f.samples();
    let dim = f.dim();
    let mut count = 0;
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        for flat in 0..v.len() {
            let i = (flat / stride) % n;
            if i + 1 < n && v[flat] * v[flat + stride] < 0.0 {
                count += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridBox;

    fn on(lo: i64, side: u64, level: u32, f: impl Fn(f64) -> f64 + Sync + Send) -> GridFunction {
        GridFunction::sample(1, level, GridBox::new(vec![lo], side), "t", move |x| f(x[0])).unwrap()
    }

    fn chi(x: f64) -> f64 {
        if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 }
    }

    #[test]
    fn difference_shrinks_box() {
        let f = on(0, 1, 3, |x| x * x);
        let d = difference(&f, 2, 0, 0.25).unwrap();
        assert_eq!(d.shape, vec![5]);
        for v in &d.values {
            assert!((v - 0.125).abs() < 1e-15);
        }
        assert!(difference(&f, 1, 0, 0.1).is_err());
        assert!(difference(&f, 3, 0, 0.25).is_err());
    }

    #[test]
    fn indicator_modulus_law() {
        // ||Delta_h chi||_p^p = 2h away from the box faces.
        let f = on(-1, 3, 10, chi);
        for p in [1.0, 2.0, 3.5] {
            for j in 1..=6 {
                let t = (-(j as f64)).exp2();
                let w = modulus(&f, 1, p, t).unwrap();
                assert!((w - (2.0 * t).powf(1.0 / p)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn profile_matches_direct_modulus() {
        let f = on(-1, 2, 7, |x| (3.0 * x).sin() * x);
        let prof = modulus_profile(&f, 2, 1.5, 1, 6).unwrap();
        for (i, j) in (1..=6).enumerate() {
            let direct = modulus(&f, 2, 1.5, (-(j as f64)).exp2()).unwrap();
            assert_eq!(prof[i], direct);
        }
    }

    #[test]
    fn modulus_monotone_in_t() {
        let f = on(0, 1, 8, |x| (x * 20.0).sin());
        let prof = modulus_profile(&f, 1, 2.0, 0, 8).unwrap();
        assert!(prof.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn indicator_membership_dichotomy() {
        let f = on(-1, 3, 12, chi);
        let p = 2.0;
        let bounded = membership_diagnostic(&f, 1.0 / p, p, f64::INFINITY, 1).unwrap();
        assert_eq!(bounded.verdict, GrowthVerdict::Bounded);
        let a0 = bounded.a[0];
        assert!(bounded.a.iter().all(|a| (a - a0).abs() <= 1e-6 * a0));
        for q in [1.0, 2.0] {
            match membership_diagnostic(&f, 1.0 / p, p, q, 1).unwrap().verdict {
                GrowthVerdict::PowerGrowth { alpha } => assert!((alpha - 1.0 / q).abs() < 1e-9),
                other => panic!("{other:?}"),
            }
        }
        let below = membership_diagnostic(&f, 1.0 / p - 0.2, p, 1.0, 1).unwrap();
        assert_eq!(below.verdict, GrowthVerdict::Bounded);
    }

    #[test]
    fn growth_report_partials_monotone() {
        let r = GrowthReport::from_terms(vec![1, 2, 3, 4], vec![1.0, 0.5, 2.0, 0.1], 1.5);
        assert!(r.partial.windows(2).all(|w| w[0] <= w[1]));
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"S\":") && json.contains("\"verdict\":{\"kind\""));
    }

    #[test]
    fn holder_of_identity() {
        let f = on(0, 1, 6, |x| x);
        let v = holder_norm(&f, 0.5).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert!(holder_norm(&f, 1.0).is_err());
    }

    #[test]
    fn holder_two_dimensional() {
        let f = GridFunction::sample(2, 3, GridBox::unit(2), "t", |x| x[0] + x[1]).unwrap();
        let nodes: Vec<Vec<f64>> = (0..f.len()).map(|i| f.node_coords(i)).collect();
        let mut best: f64 = 0.0;
        for a in 0..f.len() {
            for b in 0..f.len() {
                let d = ((nodes[a][0] - nodes[b][0]).powi(2) + (nodes[a][1] - nodes[b][1]).powi(2)).sqrt();
                if d > 0.0 && d <= 1.0 {
                    best = best.max((f.samples()[a] - f.samples()[b]).abs() / d.sqrt());
                }
            }
        }
        let v = holder_norm(&f, 0.5).unwrap();
        assert!((v - (2.0 + best)).abs() < 1e-12, "{v}");
    }

    #[test]
    fn w1p_of_identity() {
        let f = on(0, 1, 10, |x| x);
        let v = w1p_norm(&f, 2.0).unwrap();
        assert!((v - (1.0 / 3.0f64.sqrt() + 1.0)).abs() < 1e-3);
    }

    #[test]
    fn linear_fit_exact_line() {
        let (m, r2) = linear_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((m - 2.0).abs() < 1e-15 && (r2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sign_changes_counted() {
        let f = on(0, 1, 3, |x| x - 0.3);
        assert_eq!(sign_change_cells(&f), 1);
        let g = on(0, 1, 3, |x| x - 0.25);
        assert_eq!(sign_change_cells(&g), 0);
    }
}
