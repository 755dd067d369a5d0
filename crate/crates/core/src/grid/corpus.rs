use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GridBox, GridFunction};
use crate::error::{Error, Result};
use crate::reduce;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// Continuous piecewise linear functions with random values at the
    /// non-integer knots of level `detail`; zero at integers.
    PiecewiseLinearRandomKnots,
    /// Sums of disjoint smooth bumps, each supported inside a unit interval.
    SmoothBumpSum,
    /// Functions constant on level-`detail` cells with dyadic rational values.
    HaarStep,
    /// Alternating-sign tents of width `2^-detail`.
    SignOscillating,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 4] = [
        GeneratorKind::PiecewiseLinearRandomKnots,
        GeneratorKind::SmoothBumpSum,
        GeneratorKind::HaarStep,
        GeneratorKind::SignOscillating,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::PiecewiseLinearRandomKnots => "piecewise-linear-random-knots",
            GeneratorKind::SmoothBumpSum => "smooth-bump-sum",
            GeneratorKind::HaarStep => "haar-step",
            GeneratorKind::SignOscillating => "sign-oscillating",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

fn default_amplitude() -> [f64; 2] {
    [-1.0, 1.0]
}

fn default_detail() -> u32 {
    3
}

/// Seeded description of a family of test functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub count: usize,
    pub kind: GeneratorKind,
    #[serde(default = "default_amplitude")]
    pub amplitude: [f64; 2],
    #[serde(default)]
    pub zero_mean: bool,
    /// Dyadic level of knots, cells or lobes.
    #[serde(default = "default_detail")]
    pub detail: u32,
}

impl CorpusSpec {
    pub fn new(seed: u64, count: usize, kind: GeneratorKind) -> Self {
        CorpusSpec {
            seed,
            count,
            kind,
            amplitude: default_amplitude(),
            zero_mean: false,
            detail: default_detail(),
        }
    }

    pub fn with_amplitude(mut self, lo: f64, hi: f64) -> Self {
        self.amplitude = [lo, hi];
        self
    }

    pub fn with_zero_mean(mut self, zero_mean: bool) -> Self {
        self.zero_mean = zero_mean;
        self
    }

    pub fn with_detail(mut self, detail: u32) -> Self {
        self.detail = detail;
        self
    }

    fn validate(&self) -> Result<()> {
        let [lo, hi] = self.amplitude;
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::param(format!("amplitude range [{lo}, {hi}] is invalid")));
        }
        if self.detail == 0
            && self.kind == GeneratorKind::PiecewiseLinearRandomKnots
        {
            return Err(Error::param("detail must be at least 1 for this kind"));
        }
        if self.kind == GeneratorKind::SignOscillating && lo.abs().max(hi.abs()) == 0.0 {
            return Err(Error::param("sign-oscillating corpus needs a nonzero amplitude"));
        }
        Ok(())
    }
}

/// Generates `spec.count` functions on the given grid. Function `i` depends
/// only on `(spec, i)`, so the corpus is reproducible and order independent.
pub fn generate_corpus(spec: &CorpusSpec, level: u32, bbox: &GridBox, dim: usize) -> Result<Vec<GridFunction>> {
    spec.validate()?;
    if bbox.dim() != dim {
        return Err(Error::GridMismatch("box dimension differs from dim".into()));
    }
    reduce::map_indexed(spec.count, |i| generate_one(spec, i, level, bbox, dim))
        .into_iter()
        .collect()
}

fn generate_one(spec: &CorpusSpec, index: usize, level: u32, bbox: &GridBox, dim: usize) -> Result<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let tag = format!("{}-{}-{:04}", spec.kind, spec.seed, index);
    let detail = spec.detail.min(level);
    match spec.kind {
        GeneratorKind::HaarStep => {
            let step = HaarStep::draw(&mut rng, spec, detail, bbox, dim);
            GridFunction::sample(dim, level, bbox.clone(), tag, move |x| step.eval(x))
        }
        _ => {
            let profiles: Vec<Profile> = (0..dim)
                .map(|l| Profile::draw(&mut rng, spec, detail, bbox.corner[l], bbox.side))
                .collect();
            GridFunction::sample(dim, level, bbox.clone(), tag, move |x| {
                profiles.iter().zip(x).map(|(p, &t)| p.eval(t)).product()
            })
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

fn center(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in values.iter_mut() {
        *v -= mean;
    }
}

/// One-dimensional factor of a tensor-product corpus member.
enum Profile {
    Knots { start: f64, step: f64, values: Vec<f64> },
    Bumps { bumps: Vec<(f64, f64, f64)> },
    Tents { start: f64, width: f64, heights: Vec<f64> },
}

impl Profile {
    fn draw(rng: &mut ChaCha8Rng, spec: &CorpusSpec, detail: u32, corner: i64, side: u64) -> Profile {
        let per_unit = 1usize << detail;
        let start = corner as f64;
        match spec.kind {
            GeneratorKind::PiecewiseLinearRandomKnots => loop {
                let count = side as usize * per_unit + 1;
                let mut values: Vec<f64> = (0..count)
                    .map(|i| if i % per_unit == 0 { 0.0 } else { uniform(rng, spec.amplitude) })
                    .collect();
                if spec.zero_mean {
                    let mut inner: Vec<f64> = values.iter().enumerate().filter(|(i, _)| i % per_unit != 0).map(|(_, v)| *v).collect();
                    center(&mut inner);
                    let mut it = inner.into_iter();
                    for (i, v) in values.iter_mut().enumerate() {
                        if i % per_unit != 0 {
                            *v = it.next().unwrap_or(0.0);
                        }
                    }
                    if values.iter().all(|v| v.abs() < 1e-9) {
                        continue;
                    }
                }
                break Profile::Knots { start, step: 1.0 / per_unit as f64, values };
            },
            GeneratorKind::SmoothBumpSum => loop {
                let mut bumps = Vec::new();
                for k in 0..side {
                    let slots = rng.random_range(1..=spec.detail.max(1) as usize + 1);
                    let slot_width = 1.0 / slots as f64;
                    for s in 0..slots {
                        let lo = start + k as f64 + s as f64 * slot_width;
                        let radius = slot_width * rng.random_range(0.2..0.45);
                        let c = rng.random_range(lo + radius..lo + slot_width - radius);
                        bumps.push((c, radius, uniform(rng, spec.amplitude)));
                    }
                }
                if spec.zero_mean {
                    if bumps.len() < 2 {
                        continue;
                    }
                    let mut amps: Vec<f64> = bumps.iter().map(|b| b.2).collect();
                    center(&mut amps);
                    if amps.iter().all(|a| a.abs() < 1e-9) {
                        continue;
                    }
                    for (b, a) in bumps.iter_mut().zip(amps) {
                        b.2 = a;
                    }
                }
                break Profile::Bumps { bumps };
            },
            GeneratorKind::SignOscillating => {
                let [lo, hi] = spec.amplitude;
                let (mlo, mhi) = if lo.signum() == hi.signum() || lo == 0.0 || hi == 0.0 {
                    (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()))
                } else {
                    (0.25 * lo.abs().max(hi.abs()), lo.abs().max(hi.abs()))
                };
                let sign0 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let count = side as usize * per_unit;
                let heights = (0..count)
                    .map(|i| {
                        let s = if i % 2 == 0 { sign0 } else { -sign0 };
                        s * uniform(rng, [mlo, mhi])
                    })
                    .collect();
                Profile::Tents { start, width: 1.0 / per_unit as f64, heights }
            }
            GeneratorKind::HaarStep => unreachable!("haar-step is not a tensor product"),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        match self {
            Profile::Knots { start, step, values } => {
                let u = (t - start) / step;
                let i = (u.floor() as isize).clamp(0, values.len() as isize - 2) as usize;
                let r = u - i as f64;
                values[i] * (1.0 - r) + values[i + 1] * r
            }
            Profile::Bumps { bumps } => bumps
                .iter()
                .map(|&(c, w, a)| {
                    let r = (t - c) / w;
                    if r.abs() < 1.0 {
                        a * (1.0 - 1.0 / (1.0 - r * r)).exp()
                    } else {
                        0.0
                    }
                })
                .sum(),
            Profile::Tents { start, width, heights } => {
                let u = (t - start) / width;
                let i = u.floor();
                if i < 0.0 || i as usize >= heights.len() {
                    return 0.0;
                }
                let r = u - i;
                heights[i as usize] * (1.0 - (2.0 * r - 1.0).abs())
            }
        }
    }
}

/// Values are multiples of `2^-16`, so Haar averaging stays exact.
struct HaarStep {
    dim: usize,
    cells_per_axis: usize,
    corner: Vec<f64>,
    scale: f64,
    values: Vec<f64>,
}

const STEP_QUANTUM: f64 = 1.0 / 65536.0;

impl HaarStep {
    fn draw(rng: &mut ChaCha8Rng, spec: &CorpusSpec, detail: u32, bbox: &GridBox, dim: usize) -> HaarStep {
        let cells_per_axis = (bbox.side as usize) << detail;
        let count = cells_per_axis.pow(dim as u32);
        let values = loop {
            let mut v: Vec<f64> = (0..count).map(|_| uniform(rng, spec.amplitude)).collect();
            if spec.zero_mean {
                center(&mut v);
            }
            for x in v.iter_mut() {
                *x = (*x / STEP_QUANTUM).round() * STEP_QUANTUM;
            }
            if spec.zero_mean && !(v.iter().any(|&x| x > 0.0) && v.iter().any(|&x| x < 0.0)) && count > 1 {
                continue;
            }
            break v;
        };
        HaarStep {
            dim,
            cells_per_axis,
            corner: bbox.corner.iter().map(|&c| c as f64).collect(),
            scale: (1u64 << detail) as f64,
            values,
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut flat = 0;
        for l in 0..self.dim {
            let k = ((x[l] - self.corner[l]) * self.scale).floor();
            if k < 0.0 || k as usize >= self.cells_per_axis {
                return 0.0;
            }
            flat = flat * self.cells_per_axis + k as usize;
        }
        self.values[flat]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: GeneratorKind) -> CorpusSpec {
        CorpusSpec::new(7, 12, kind).with_zero_mean(true)
    }

    #[test]
    fn deterministic() {
        for kind in GeneratorKind::ALL {
            let a = generate_corpus(&spec(kind), 6, &GridBox::unit(1), 1).unwrap();
            let b = generate_corpus(&spec(kind), 6, &GridBox::unit(1), 1).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.len(), 12);
        }
    }

    #[test]
    fn seeds_differ() {
        let a = generate_corpus(&spec(GeneratorKind::SmoothBumpSum), 6, &GridBox::unit(1), 1).unwrap();
        let b = generate_corpus(&CorpusSpec { seed: 8, ..spec(GeneratorKind::SmoothBumpSum) }, 6, &GridBox::unit(1), 1).unwrap();
        assert_ne!(a[0].samples(), b[0].samples());
    }

    #[test]
    fn zero_mean_members_change_sign() {
        for kind in GeneratorKind::ALL {
            for dim in [1, 2] {
                let fs = generate_corpus(&spec(kind), 5, &GridBox::new(vec![0; dim], 2), dim).unwrap();
                for f in fs {
                    assert!(f.max_value() > 0.0 && f.min_value() < 0.0, "{kind} {}", f.tag());
                }
            }
        }
    }

    #[test]
    fn vanish_at_integers_except_steps() {
        for kind in [GeneratorKind::PiecewiseLinearRandomKnots, GeneratorKind::SmoothBumpSum, GeneratorKind::SignOscillating] {
            let fs = generate_corpus(&spec(kind), 5, &GridBox::new(vec![-1], 3), 1).unwrap();
            for f in fs {
                for k in 0..=3 {
                    assert_eq!(f.samples()[k * 32], 0.0, "{kind}");
                }
            }
        }
    }

    #[test]
    fn haar_step_is_constant_on_cells() {
        let s = spec(GeneratorKind::HaarStep).with_detail(2);
        let f = &generate_corpus(&s, 4, &GridBox::unit(1), 1).unwrap()[0];
        for i in 0..16 {
            assert_eq!(f.samples()[i], f.samples()[(i / 4) * 4]);
            assert_eq!(f.samples()[i] % STEP_QUANTUM, 0.0);
        }
        assert_eq!(f.samples()[16], 0.0);
    }

    #[test]
    fn unknown_kind_rejected() {
        assert!("wavelet".parse::<GeneratorKind>().is_err());
        let text = r#"{"seed":1,"count":2,"kind":"wavelet"}"#;
        assert!(serde_json::from_str::<CorpusSpec>(text).is_err());
    }

    #[test]
    fn spec_defaults() {
        let s: CorpusSpec = serde_json::from_str(r#"{"seed":3,"count":2,"kind":"haar-step"}"#).unwrap();
        assert_eq!(s.amplitude, [-1.0, 1.0]);
        assert_eq!(s.detail, 3);
        assert!(!s.zero_mean);
    }
}
