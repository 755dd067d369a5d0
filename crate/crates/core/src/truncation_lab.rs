//! Truncation `f -> |f|, f+, f-` and the experiments comparing norms before
//! and after it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::differences;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::haar;
use crate::norms::{self, NormKind};
use crate::reduce;
use crate::report::ReportConfig;
use crate::spaces::{self, CompositionVerdict, SpaceParams, TruncationVerdict};

/// Norms below this are treated as zero and left out of the ratios.
pub const ZERO_NORM: f64 = 1e-13;

/// `(|f|, f+, f-)` with `f+ = max(f, 0)` and `f- = min(f, 0)`.
pub fn truncate(f: &GridFunction) -> (GridFunction, GridFunction, GridFunction) {
    (f.abs(), f.positive_part(), f.negative_part())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Abs,
    Pos,
    Neg,
}

impl Operator {
    pub fn apply(self, f: &GridFunction) -> GridFunction {
        match self {
            Operator::Abs => f.abs(),
            Operator::Pos => f.positive_part(),
            Operator::Neg => f.negative_part(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Operator::Abs => "abs",
            Operator::Pos => "pos",
            Operator::Neg => "neg",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Operator {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "abs" => Ok(Operator::Abs),
            "pos" => Ok(Operator::Pos),
            "neg" => Ok(Operator::Neg),
            other => Err(Error::UnknownKind(other.to_string())),
        }
    }
}

/// One corpus member: `ratio = norm_t / norm_f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub tag: String,
    pub norm_f: f64,
    pub norm_t: f64,
    pub ratio: f64,
}

/// Classifier output carried next to the measurements.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ExpectedVerdict {
    Truncation(TruncationVerdict),
    Composition(CompositionVerdict),
}

/// Count of violations of a term-wise inequality.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckCount {
    pub name: String,
    pub tested: usize,
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub config: ReportConfig,
    pub rows: Vec<RatioRow>,
    pub skipped_zero: usize,
    pub min: f64,
    pub max: f64,
    pub geo_mean: f64,
    pub spread: f64,
    pub expected: Option<ExpectedVerdict>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckCount>,
}

impl EquivalenceReport {
    /// Summarizes `(tag, norm_f, norm_t)` triples, dropping near-zero ones.
    pub fn from_norms(config: ReportConfig, norms: Vec<(String, f64, f64)>) -> Result<Self> {
        let mut rows = Vec::with_capacity(norms.len());
        let mut skipped_zero = 0;
        for (tag, norm_f, norm_t) in norms {
            if norm_f < ZERO_NORM || norm_t < ZERO_NORM {
                skipped_zero += 1;
                continue;
            }
            rows.push(RatioRow { tag, norm_f, norm_t, ratio: norm_t / norm_f });
        }
        if rows.is_empty() {
            return Err(Error::param(format!("no corpus member has a nonzero norm ({skipped_zero} skipped)")));
        }
        let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        let max = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let logs: Vec<f64> = rows.iter().map(|r| r.ratio.ln()).collect();
        let geo_mean = (reduce::tree_sum(&logs) / rows.len() as f64).exp();
        Ok(EquivalenceReport {
            config,
            rows,
            skipped_zero,
            min,
            max,
            geo_mean,
            spread: max / min,
            expected: None,
            checks: Vec::new(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Rows `tag,norm_f,norm_T,ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tag,norm_f,norm_T,ratio\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.tag, r.norm_f, r.norm_t, r.ratio));
        }
        out
    }
}

fn check_corpus(corpus: &[GridFunction], kind: NormKind) -> Result<u32> {
    let first = corpus.first().ok_or_else(|| Error::param("empty corpus"))?;
    if !kind.supports_dim(first.dim()) {
        return Err(Error::param(format!("{kind} is not defined in dimension {}", first.dim())));
    }
    Ok(first.level())
}

/// `||T f|| / ||f||` over the corpus with the chosen discrete norm.
pub fn ratio_experiment(corpus: &[GridFunction], kind: NormKind, sp: &SpaceParams, op: Operator) -> Result<EquivalenceReport> {
    let level = check_corpus(corpus, kind)?;
    let norms = reduce::map_indexed(corpus.len(), |i| -> Result<(String, f64, f64)> {
        let f = &corpus[i];
        Ok((f.tag().to_string(), norms::norm(kind, f, sp)?, norms::norm(kind, &op.apply(f), sp)?))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let config = ReportConfig::new(*sp, kind.name(), level, None).with_operator(op.name());
    let mut report = EquivalenceReport::from_norms(config, norms)?;
    report.expected = Some(ExpectedVerdict::Truncation(spaces::truncation_verdict(sp)?));
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleRow {
    pub j: u32,
    pub norm_f: f64,
    pub norm_abs: f64,
    pub ratio: f64,
}

/// Haar sequence norms of `f_j` (all-`M` wavelets at level `j` summed over
/// the unit cube) and of `|f_j| = chi_{[0,1)^n}`.
pub fn counterexample_scaling(s: f64, p: f64, q: f64, n: usize, j_max: u32) -> Result<Vec<CounterexampleRow>> {
    let level = j_max + 1;
    let rows = reduce::map_indexed(j_max as usize + 1, |j| -> Result<CounterexampleRow> {
        let f = haar::example_3_7(j as u32, n, level)?;
        let norm_f = haar::analyze(&f, level - 1)?.b_sequence_norm(s, p, q)?;
        let norm_abs = haar::analyze(&f.abs(), level - 1)?.b_sequence_norm(s, p, q)?;
        Ok(CounterexampleRow { j: j as u32, norm_f, norm_abs, ratio: norm_f / norm_abs })
    });
    rows.into_iter().collect()
}

pub fn counterexample_csv(rows: &[CounterexampleRow]) -> String {
    let mut out = String::from("j,norm_f,norm_abs,ratio\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.j, r.norm_f, r.norm_abs, r.ratio));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderReport {
    pub equivalence: EquivalenceReport,
    /// Members with `|| |f| || > || f ||`.
    pub one_sided_violations: usize,
    pub witness: CheckCount,
}

/// Checks the three-point bound along every axis line: for nodes `x`, `y`
/// with `f(x) > 0 > f(y)`, `|x - y| <= 1`, and `z` the node strictly between
/// them where `|f|` is smallest,
/// `(f(x)-f(y))/|x-y|^s <= (|f(x)|-|f(z)|)/|x-z|^s + (|f(y)|-|f(z)|)/|y-z|^s + slack`
/// with `slack = 2|f(z)| / min(|x-z|, |y-z|)^s`, the price of `f(z) != 0`.
fn witness_triples(f: &GridFunction, s: f64) -> (usize, usize) {
    let n = f.nodes_per_axis();
    let h = f.spacing();
    let reach = (1usize << f.level()).min(n - 1);
    let v = f.samples();
    let dim = f.dim();
    let mut tested = 0;
    let mut bad = 0;
    let lines = v.len() / n;
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        for line in 0..lines {
            let outer = line / stride;
            let inner = line % stride;
            let base = outer * stride * n + inner;
            let at = |i: usize| v[base + i * stride];
            for a in 0..n {
                for b in a + 2..n.min(a + reach + 1) {
                    let (fa, fb) = (at(a), at(b));
                    if !(fa * fb < 0.0) {
                        continue;
                    }
                    let z = (a + 1..b)
                        .min_by(|&i, &k| at(i).abs().total_cmp(&at(k).abs()))
                        .unwrap();
                    let fz = at(z).abs();
                    let dxy = ((b - a) as f64 * h).powf(s);
                    let dxz = ((z - a) as f64 * h).powf(s);
                    let dyz = ((b - z) as f64 * h).powf(s);
                    let lhs = (fa - fb).abs() / dxy;
                    let rhs = (fa.abs() - fz) / dxz + (fb.abs() - fz) / dyz + 2.0 * fz / dxz.min(dyz);
                    tested += 1;
                    if lhs > rhs * (1.0 + 1e-12) {
                        bad += 1;
                    }
                }
            }
        }
    }
    (tested, bad)
}

/// Hoelder norms of `f` and `|f|` for every member, the exact one-sided
/// inequality and the three-point witness.
pub fn holder_perfect_check(corpus: &[GridFunction], s: f64) -> Result<HolderReport> {
    let level = check_corpus(corpus, NormKind::Holder)?;
    let per = reduce::map_indexed(corpus.len(), |i| -> Result<((String, f64, f64), (usize, usize))> {
        let f = &corpus[i];
        let a = differences::holder_norm(f, s)?;
        let b = differences::holder_norm(&f.abs(), s)?;
        let w = if level <= 8 { witness_triples(f, s) } else { (0, 0) };
        Ok(((f.tag().to_string(), a, b), w))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let one_sided_violations = per.iter().filter(|((_, a, b), _)| b > a).count();
    let (tested, violations) = per.iter().fold((0, 0), |acc, (_, w)| (acc.0 + w.0, acc.1 + w.1));
    let n = corpus[0].dim();
    let sp = SpaceParams::b(s, f64::INFINITY, f64::INFINITY, n)?;
    let config = ReportConfig::new(sp, NormKind::Holder.name(), level, None).with_operator("abs");
    let mut equivalence = EquivalenceReport::from_norms(config, per.into_iter().map(|(t, _)| t).collect())?;
    equivalence.expected = Some(ExpectedVerdict::Truncation(spaces::truncation_verdict(&sp)?));
    Ok(HolderReport {
        equivalence,
        one_sided_violations,
        witness: CheckCount { name: "three-point witness".into(), tested, violations },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SobolevRow {
    pub tag: String,
    pub level: u32,
    pub norm_f: f64,
    pub norm_abs: f64,
    pub gap: f64,
    pub sign_change_cells: usize,
    /// `gap / (2^{-L/p} cells^{1/p})`, zero when there is no sign change.
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SobolevReport {
    pub p: f64,
    pub rows: Vec<SobolevRow>,
    /// Largest measured constant over the corpus.
    pub max_constant: f64,
}

/// Compares the discrete `W^1_p` norms of `f` and `|f|`.
pub fn sobolev_identity_check(corpus: &[GridFunction], p: f64) -> Result<SobolevReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param(format!("Sobolev identity check needs 1 < p < inf, got {p}")));
    }
    let rows = reduce::map_indexed(corpus.len(), |i| -> Result<SobolevRow> {
        let f = &corpus[i];
        let norm_f = differences::w1p_norm(f, p)?;
        let norm_abs = differences::w1p_norm(&f.abs(), p)?;
        let gap = (norm_f - norm_abs).abs();
        let cells = differences::sign_change_cells(f);
        let scale = (-(f.level() as f64) / p).exp2() * (cells as f64).powf(1.0 / p);
        let constant = if cells == 0 { 0.0 } else { gap / scale };
        Ok(SobolevRow { tag: f.tag().to_string(), level: f.level(), norm_f, norm_abs, gap, sign_change_cells: cells, constant })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let max_constant = rows.iter().map(|r| r.constant).fold(0.0, f64::max);
    Ok(SobolevReport { p, rows, max_constant })
}
