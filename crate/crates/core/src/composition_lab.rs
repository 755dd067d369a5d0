//! Lipschitz scaling functions `g` and the composition experiments for
//! `g(f)` and `|g(f)|`.

use serde::{Deserialize, Serialize};

use crate::differences::{self, GrowthReport, GrowthVerdict};
use crate::error::{Error, Result};
use crate::grid::{GridBox, GridFunction};
use crate::norms::{self, NormKind};
use crate::oscillation;
use crate::reduce;
use crate::report::ReportConfig;
use crate::spaces::{self, ScalerMeta, SpaceParams};
use crate::truncation_lab::{CheckCount, EquivalenceReport, ExpectedVerdict};

/// Closed-form description of `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScalerDescriptor {
    /// `g(t) = a t`.
    Linear { a: f64 },
    /// `g(t) = a t + b sin t`.
    #[serde(alias = "sinusoidal-perturbation", alias = "sine")]
    Sinusoidal { a: f64, b: f64 },
    /// Piecewise linear through `(t, g(t))`, extended linearly past the ends.
    Table { nodes: Vec<[f64; 2]> },
}

/// A scaler with optional claimed slope bounds `L1 <= L2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzScaler {
    #[serde(flatten)]
    pub descriptor: ScalerDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<f64>,
}

impl LipschitzScaler {
    pub fn linear(a: f64) -> Self {
        LipschitzScaler { descriptor: ScalerDescriptor::Linear { a }, l1: None, l2: None }
    }

    pub fn sinusoidal(a: f64, b: f64) -> Self {
        LipschitzScaler { descriptor: ScalerDescriptor::Sinusoidal { a, b }, l1: None, l2: None }
    }

    pub fn table(mut nodes: Vec<[f64; 2]>) -> Result<Self> {
        nodes.sort_by(|x, y| x[0].total_cmp(&y[0]));
        if nodes.len() < 2 || nodes.windows(2).any(|w| w[0][0] == w[1][0]) {
            return Err(Error::Scaler("a table needs at least two distinct nodes".into()));
        }
        Ok(LipschitzScaler { descriptor: ScalerDescriptor::Table { nodes }, l1: None, l2: None })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: LipschitzScaler = serde_json::from_str(text)?;
        if let ScalerDescriptor::Table { nodes } = &g.descriptor {
            let mut t = LipschitzScaler::table(nodes.clone())?;
            t.l1 = g.l1;
            t.l2 = g.l2;
            return Ok(t);
        }
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scaler serializes")
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.descriptor {
            ScalerDescriptor::Linear { a } => a * t,
            ScalerDescriptor::Sinusoidal { a, b } => a * t + b * t.sin(),
            ScalerDescriptor::Table { nodes } => {
                let k = nodes.partition_point(|n| n[0] <= t).clamp(1, nodes.len() - 1);
                let ([t0, g0], [t1, g1]) = (nodes[k - 1], nodes[k]);
                g0 + (g1 - g0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Interval on which `g` is specified by data rather than extension.
    pub fn domain(&self) -> (f64, f64) {
        match &self.descriptor {
            ScalerDescriptor::Table { nodes } => (nodes[0][0], nodes[nodes.len() - 1][0]),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Claimed `(L1, L2)`: explicit values if given, otherwise the bounds
    /// implied by the descriptor.
    pub fn claimed_bounds(&self) -> (f64, f64) {
        let (l1, l2) = match &self.descriptor {
            ScalerDescriptor::Linear { a } => (*a, *a),
            ScalerDescriptor::Sinusoidal { a, b } => (a - b.abs(), a + b.abs()),
            ScalerDescriptor::Table { nodes } => nodes.windows(2).fold((f64::INFINITY, 0.0f64), |(lo, hi), w| {
                let slope = (w[1][1] - w[0][1]) / (w[1][0] - w[0][0]);
                (lo.min(slope), hi.max(slope))
            }),
        };
        (self.l1.unwrap_or(l1), self.l2.unwrap_or(l2))
    }
}

/// Smallest and largest divided differences of `g` on `lo, lo + step, ..`,
/// with `g(0) = 0` and the claimed bounds checked.
pub fn validate_scaler(g: &LipschitzScaler, range: (f64, f64), step: f64) -> Result<(f64, f64)> {
    let (lo, hi) = range;
    if !(lo < hi) || !(step > 0.0) {
        return Err(Error::param("validation range must be nonempty with a positive step"));
    }
    let g0 = g.eval(0.0);
    if g0.abs() > 1e-12 {
        return Err(Error::Scaler(format!("g(0) = {g0} is not 0")));
    }
    let count = ((hi - lo) / step).ceil() as usize;
    let t = |k: usize| if k == count { hi } else { lo + k as f64 * step };
    let slopes = reduce::map_indexed(count, |k| {
        let (a, b) = (t(k), t(k + 1));
        (g.eval(b) - g.eval(a)) / (b - a)
    });
    let l1 = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let l2 = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(l1 > 0.0) {
        return Err(Error::Scaler(format!("slope {l1} <= 0: not a scaling function")));
    }
    let (c1, c2) = g.claimed_bounds();
    if l1 < c1 * (1.0 - 1e-9) || l2 > c2 * (1.0 + 1e-9) {
        return Err(Error::Scaler(format!(
            "observed slopes [{l1}, {l2}] leave the claimed bounds [{c1}, {c2}]"
        )));
    }
    Ok((l1, l2))
}

pub fn compose(g: &LipschitzScaler, f: &GridFunction) -> GridFunction {
    f.map(|t| g.eval(t))
}

pub fn abs_compose(g: &LipschitzScaler, f: &GridFunction) -> GridFunction {
    compose(g, f).abs()
}

/// Solves `g(t) = tau` by bisection on `[-|tau|/L1, |tau|/L1]`.
pub fn invert_scaler(g: &LipschitzScaler, tau: f64, tol: f64) -> Result<f64> {
    let (l1, l2) = g.claimed_bounds();
    if !(l1 > 0.0) || !(tol > 0.0) {
        return Err(Error::Scaler("inversion needs L1 > 0 and tol > 0".into()));
    }
    let r = tau.abs() / l1 * (1.0 + 1e-12) + tol / l1;
    let (mut lo, mut hi) = (-r, r);
    if !(g.eval(lo) <= tau && tau <= g.eval(hi)) {
        return Err(Error::Scaler(format!("no bracket for tau = {tau} in [{lo}, {hi}]")));
    }
    // Stop once the bracket is narrow enough that any point in it meets `tol`.
    while hi - lo > tol / l2 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let v = g.eval(mid);
        if v == tau {
            return Ok(mid);
        }
        if v < tau {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    if (g.eval(t) - tau).abs() > tol {
        return Err(Error::Scaler(format!("bisection stalled at t = {t}")));
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpBounds {
    pub norm_f: f64,
    pub norm_gf: f64,
    pub norm_abs_gf: f64,
    pub l1: f64,
    pub l2: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    /// `||g(f)||_p - || |g(f)| ||_p`.
    pub abs_residual: f64,
}

/// `L1 ||f||_p <= ||g(f)||_p <= L2 ||f||_p` and `||g(f)||_p = || |g|(f) ||_p`.
pub fn lp_bounds_check(g: &LipschitzScaler, f: &GridFunction, p: f64) -> Result<LpBounds> {
    let (l1, l2) = g.claimed_bounds();
    let norm_f = f.lp_norm(p)?;
    let norm_gf = compose(g, f).lp_norm(p)?;
    let norm_abs_gf = abs_compose(g, f).lp_norm(p)?;
    let slack = 1e-12;
    Ok(LpBounds {
        norm_f,
        norm_gf,
        norm_abs_gf,
        l1,
        l2,
        lower_ok: l1 * norm_f <= norm_gf * (1.0 + slack),
        upper_ok: norm_gf <= l2 * norm_f * (1.0 + slack),
        abs_residual: norm_gf - norm_abs_gf,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComposeSlot {
    G,
    AbsG,
}

impl ComposeSlot {
    pub fn name(self) -> &'static str {
        match self {
            ComposeSlot::G => "g",
            ComposeSlot::AbsG => "abs-g",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompositionReport {
    pub equivalence: EquivalenceReport,
    pub scaler: LipschitzScaler,
    /// Empirical slope bounds on the validation range.
    pub l1: f64,
    pub l2: f64,
    pub validation_range: (f64, f64),
    pub gprime_seminorm_finite: bool,
    pub gprime_growth: Option<GrowthReport>,
    /// Approximate `B^{1+1/p}_{p,1}` norm of `g` on the validation box.
    pub g_besov_norm: Option<f64>,
    /// `max ||g(f)|| / (||g|| ||f||)` with the norm above.
    pub sublinear_constant: Option<f64>,
}

const SCALER_LEVEL: u32 = 10;

fn sampled_scaler(g: &LipschitzScaler, bbox: GridBox, derivative: bool) -> Result<GridFunction> {
    let h = 1e-5;
    GridFunction::sample(1, SCALER_LEVEL, bbox, "g", |x| {
        let t = x[0];
        if derivative {
            (g.eval(t + h) - g.eval(t - h)) / (2.0 * h)
        } else {
            g.eval(t)
        }
    })
}

fn scaler_box(range: (f64, f64)) -> GridBox {
    let lo = range.0.floor() as i64;
    let side = ((range.1.ceil() as i64) - lo).max(1) as u64;
    GridBox::new(vec![lo], side)
}

/// Growth test for `||g'| B^{1/p}_{p,inf}||` on the integer hull of `range`.
/// Finite means a bounded verdict; `p <= 1` or `p = inf` report `false`.
pub fn gprime_seminorm(g: &LipschitzScaler, range: (f64, f64), p: f64) -> Result<(bool, Option<GrowthReport>)> {
    if !(p > 1.0 && p.is_finite()) {
        return Ok((false, None));
    }
    let gp = sampled_scaler(g, scaler_box(range), true)?;
    let (_, rep) = differences::besov_diff_seminorm(&gp, 1.0 / p, 1, p, f64::INFINITY, 1, SCALER_LEVEL - 2)?;
    Ok((rep.verdict == GrowthVerdict::Bounded, Some(rep)))
}

/// Ratios `||g(f)|| / ||f||` (or with `|g(f)|`) over the corpus, with the
/// scaler validated on the corpus range plus a 10% margin.
pub fn composition_experiment(
    corpus: &[GridFunction],
    g: &LipschitzScaler,
    kind: NormKind,
    sp: &SpaceParams,
    slot: ComposeSlot,
) -> Result<CompositionReport> {
    let first = corpus.first().ok_or_else(|| Error::param("empty corpus"))?;
    if !kind.supports_dim(first.dim()) {
        return Err(Error::param(format!("{kind} is not defined in dimension {}", first.dim())));
    }
    let lo = corpus.iter().map(|f| f.min_value()).fold(0.0, f64::min);
    let hi = corpus.iter().map(|f| f.max_value()).fold(0.0, f64::max);
    let margin = 0.1 * (hi - lo).max(1e-9);
    let range = (lo - margin, hi + margin);
    let (d0, d1) = g.domain();
    if range.0 < d0 || range.1 > d1 {
        return Err(Error::Scaler(format!(
            "scaler domain [{d0}, {d1}] does not cover [{}, {}]",
            range.0, range.1
        )));
    }
    let (l1, l2) = validate_scaler(g, range, (range.1 - range.0) * 1e-4)?;

    let bbox = scaler_box(range);
    let p = sp.p;
    let (gprime_finite, gprime_growth) = gprime_seminorm(g, range, p)?;
    let g_besov_norm = if p > 1.0 && p.is_finite() {
        let gs = sampled_scaler(g, bbox, false)?;
        let (semi, _) = differences::besov_diff_seminorm(&gs, 1.0 + 1.0 / p, 2, p, 1.0, 0, SCALER_LEVEL - 2)?;
        Some(semi + gs.max_abs())
    } else {
        None
    };

    let apply = |f: &GridFunction| match slot {
        ComposeSlot::G => compose(g, f),
        ComposeSlot::AbsG => abs_compose(g, f),
    };
    let osc = matches!(kind, NormKind::OscB | NormKind::OscF);
    let per = reduce::map_indexed(corpus.len(), |i| -> Result<((String, f64, f64), (usize, usize))> {
        let f = &corpus[i];
        let gf = apply(f);
        let a = norms::norm(kind, f, sp)?;
        let b = norms::norm(kind, &gf, sp)?;
        let mut count = (0, 0);
        if osc && slot == ComposeSlot::G {
            count = bracket_sandwich(f, &gf, l1, l2);
        }
        Ok(((f.tag().to_string(), a, b), count))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let (tested, violations) = per.iter().fold((0, 0), |acc, (_, c)| (acc.0 + c.0, acc.1 + c.1));
    let config = ReportConfig::new(*sp, kind.name(), first.level(), None).with_operator(slot.name());
    let mut equivalence = EquivalenceReport::from_norms(config, per.into_iter().map(|(t, _)| t).collect())?;
    let meta = ScalerMeta { is_lipschitz_scaling: true, gprime_seminorm_finite: gprime_finite };
    equivalence.expected = Some(ExpectedVerdict::Composition(spaces::composition_verdict(sp, meta)?));
    if osc && slot == ComposeSlot::G {
        equivalence.checks.push(CheckCount { name: "bracket sandwich".into(), tested, violations });
    }
    let sublinear_constant = g_besov_norm.map(|gn| {
        equivalence.rows.iter().map(|r| r.norm_t / (gn * r.norm_f)).fold(0.0, f64::max)
    });
    Ok(CompositionReport {
        equivalence,
        scaler: g.clone(),
        l1,
        l2,
        validation_range: range,
        gprime_seminorm_finite: gprime_finite,
        gprime_growth,
        g_besov_norm,
        sublinear_constant,
    })
}

/// Counts cubes with `L1 [f] <= [g(f)] <= L2 [f]` failing, allowing the
/// rounding of `g` at the two extreme samples.
pub fn bracket_sandwich(f: &GridFunction, gf: &GridFunction, l1: f64, l2: f64) -> (usize, usize) {
    let pf = oscillation::osc_pyramid(f);
    let pg = oscillation::osc_pyramid(gf);
    let mut tested = 0;
    let mut bad = 0;
    for (a, b) in pf.iter().zip(&pg) {
        for i in 0..a.bracket.len() {
            let slack = 4.0 * f64::EPSILON * b.max_abs[i];
            let (x, y) = (a.bracket[i], b.bracket[i]);
            tested += 1;
            if l1 * x > y + slack || y > l2 * x + slack {
                bad += 1;
            }
        }
    }
    (tested, bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{generate_corpus, CorpusSpec, GeneratorKind};
    use crate::spaces::Tri;
    use proptest::prelude::*;

    fn sine() -> LipschitzScaler {
        LipschitzScaler::sinusoidal(1.0, 0.5)
    }

    #[test]
    fn validate_examples() {
        assert_eq!(validate_scaler(&LipschitzScaler::linear(2.0), (-3.0, 3.0), 0.01).unwrap(), (2.0, 2.0));
        let step = 1e-3;
        let (l1, l2) = validate_scaler(&sine(), (-4.0, 4.0), step).unwrap();
        assert!(l1 >= 0.5 - step && l1 < 0.5 + step && l2 <= 1.5 + step && l2 > 1.5 - step);
        let square = LipschitzScaler::table((-20..=20).map(|k| {
            let t = k as f64 / 10.0;
            [t, t * t]
        }).collect()).unwrap();
        assert!(matches!(validate_scaler(&square, (-1.0, 1.0), 0.01), Err(Error::Scaler(_))));
    }

    #[test]
    fn descriptor_json() {
        let g = LipschitzScaler::from_json(r#"{"kind":"sinusoidal","a":1,"b":0.5}"#).unwrap();
        assert_eq!(g, sine());
        let t = LipschitzScaler::from_json(r#"{"kind":"table","nodes":[[1,2],[-1,-1],[0,0]],"l1":0.5}"#).unwrap();
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(-2.0), -2.0);
        assert_eq!(t.claimed_bounds(), (0.5, 2.0));
        assert_eq!(LipschitzScaler::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn compose_examples() {
        let f = GridFunction::sample(1, 5, GridBox::unit(1), "f", |x| (6.0 * x[0]).sin()).unwrap();
        assert_eq!(compose(&LipschitzScaler::linear(1.0), &f).samples(), f.samples());
        assert_eq!(abs_compose(&LipschitzScaler::linear(1.0), &f).samples(), f.abs().samples());
        let d = compose(&LipschitzScaler::linear(2.0), &f);
        assert!(d.samples().iter().zip(f.samples()).all(|(a, b)| *a == 2.0 * b));
    }

    #[test]
    fn invert_examples() {
        assert!((invert_scaler(&LipschitzScaler::linear(2.0), 3.0, 1e-12).unwrap() - 1.5).abs() <= 0.5e-12);
        let g = sine();
        let t = invert_scaler(&g, g.eval(1.2), 1e-10).unwrap();
        assert!((t - 1.2).abs() <= 1e-10 / 0.5);
        assert_eq!(invert_scaler(&g, 0.0, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn lp_bounds_linear() {
        let f = GridFunction::sample(1, 6, GridBox::unit(1), "f", |x| x[0] - 0.3).unwrap();
        let b = lp_bounds_check(&LipschitzScaler::linear(2.0), &f, 2.0).unwrap();
        assert_eq!(b.norm_gf, 2.0 * b.norm_f);
        assert!(b.lower_ok && b.upper_ok);
        assert_eq!(b.abs_residual, 0.0);
    }

    #[test]
    fn identity_scaler_gives_unit_ratios() {
        let c = generate_corpus(&CorpusSpec::new(1, 5, GeneratorKind::SmoothBumpSum).with_zero_mean(true), 7, &GridBox::unit(1), 1).unwrap();
        let sp: SpaceParams = "B:0.75:2:2:1".parse().unwrap();
        let r = composition_experiment(&c, &LipschitzScaler::linear(1.0), NormKind::OscB, &sp, ComposeSlot::G).unwrap();
        assert!(r.equivalence.rows.iter().all(|row| row.ratio == 1.0));
        assert_eq!(r.equivalence.checks[0].violations, 0);
    }

    #[test]
    fn sine_regimes() {
        let c = generate_corpus(&CorpusSpec::new(2, 6, GeneratorKind::PiecewiseLinearRandomKnots), 8, &GridBox::unit(1), 1).unwrap();
        let sp: SpaceParams = "B:0.75:2:2:1".parse().unwrap();
        let r = composition_experiment(&c, &sine(), NormKind::OscB, &sp, ComposeSlot::G).unwrap();
        assert_eq!(r.equivalence.checks[0].violations, 0);
        assert!(r.equivalence.min >= 0.5 - 1e-9 && r.equivalence.max <= 1.5 + 1e-9);

        let sp: SpaceParams = "B:1.2:2:2:1".parse().unwrap();
        let r = composition_experiment(&c, &sine(), NormKind::FaberB, &sp, ComposeSlot::G).unwrap();
        assert!(r.gprime_seminorm_finite);
        match r.equivalence.expected {
            Some(ExpectedVerdict::Composition(v)) => assert_eq!(v.strong, Tri::Yes),
            _ => panic!("missing verdict"),
        }
    }

    #[test]
    fn domain_margin_enforced() {
        let narrow = LipschitzScaler::table(vec![[-1.0, -1.0], [1.0, 1.0]]).unwrap();
        let sp: SpaceParams = "B:0.75:2:2:1".parse().unwrap();
        let wide = GridFunction::sample(1, 6, GridBox::unit(1), "w", |x| 0.95 * (6.0 * x[0]).sin()).unwrap();
        let small = wide.scale(0.5);
        assert!(matches!(
            composition_experiment(&[wide], &narrow, NormKind::OscB, &sp, ComposeSlot::G),
            Err(Error::Scaler(_))
        ));
        assert!(composition_experiment(&[small], &narrow, NormKind::OscB, &sp, ComposeSlot::G).is_ok());
    }

    proptest! {
        #[test]
        fn pointwise_sandwich_and_sign(t in -50.0f64..50.0) {
            let g = sine();
            let v = g.eval(t);
            prop_assert!(0.5 * t.abs() <= v.abs() * (1.0 + 1e-15) + 1e-300);
            prop_assert!(v.abs() <= 1.5 * t.abs() * (1.0 + 1e-15));
            prop_assert_eq!(v.signum() * t.signum() >= 0.0, true);
        }

        #[test]
        fn invert_round_trip(t in -100.0f64..100.0) {
            let g = sine();
            let back = invert_scaler(&g, g.eval(t), 1e-10).unwrap();
            prop_assert!((back - t).abs() <= 2e-10);
        }
    }
}
