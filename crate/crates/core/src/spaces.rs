//! Space parameters and the truncation / composition classifiers.
//!
//! Each verdict slot is `yes`, `no` or `unknown`. A slot is decided only when
//! a published statement covers the parameter point, and every decision carries
//! the tag of that statement. Points outside all statements stay `unknown`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used for window endpoints and for `s = 1/p` comparisons.
const EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    B,
    F,
}

pub(crate) mod exponent {
    //! Exponents may be infinite; JSON carries those as the string `"inf"`.
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => super::parse_exponent(&t).map_err(serde::de::Error::custom),
        }
    }
}

/// Parses a number or `inf`.
pub fn parse_exponent(text: &str) -> Result<f64> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("inf") || t == "∞" {
        return Ok(f64::INFINITY);
    }
    t.parse::<f64>()
        .map_err(|_| Error::Parse(format!("`{text}` is not a number or `inf`")))
}

fn fmt_exponent(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        v.to_string()
    }
}

/// `A^s_{p,q}(R^n)` with `A` in `{B, F}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub family: Family,
    pub s: f64,
    #[serde(with = "exponent")]
    pub p: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    pub n: usize,
}

impl SpaceParams {
    pub fn new(family: Family, s: f64, p: f64, q: f64, n: usize) -> Result<Self> {
        let sp = SpaceParams { family, s, p, q, n };
        sp.validate()?;
        Ok(sp)
    }

    pub fn b(s: f64, p: f64, q: f64, n: usize) -> Result<Self> {
        SpaceParams::new(Family::B, s, p, q, n)
    }

    pub fn f(s: f64, p: f64, q: f64, n: usize) -> Result<Self> {
        SpaceParams::new(Family::F, s, p, q, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.s.is_finite() {
            return Err(Error::param("s must be finite"));
        }
        if self.p.is_nan() || self.p <= 0.0 || self.q.is_nan() || self.q <= 0.0 {
            return Err(Error::param("p and q must be positive"));
        }
        if self.n == 0 {
            return Err(Error::param("n must be at least 1"));
        }
        if self.family == Family::F && self.p.is_infinite() {
            return Err(Error::param("F-spaces need p < inf"));
        }
        Ok(())
    }
}

impl fmt::Display for SpaceParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?}:{}:{}:{}:{}",
            self.family,
            self.s,
            fmt_exponent(self.p),
            fmt_exponent(self.q),
            self.n
        )
    }
}

impl FromStr for SpaceParams {
    type Err = Error;

    /// `B:s:p:q:n` or `F:s:p:q:n`; exponents accept `inf`.
    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 5 {
            return Err(Error::Parse(format!("space `{text}` must look like B:s:p:q:n")));
        }
        let family = match parts[0] {
            "B" | "b" => Family::B,
            "F" | "f" => Family::F,
            other => return Err(Error::Parse(format!("unknown family `{other}`"))),
        };
        let s = parts[1]
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("bad smoothness `{}`", parts[1])))?;
        let n = parts[4]
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad dimension `{}`", parts[4])))?;
        SpaceParams::new(family, s, parse_exponent(parts[2])?, parse_exponent(parts[3])?, n)
    }
}

/// `n (max(1/p, 1) - 1)`.
pub fn sigma(n: usize, p: f64) -> f64 {
    n as f64 * ((1.0 / p).max(1.0) - 1.0)
}

/// `n (max(1/p, 1/q, 1) - 1)`.
pub fn sigma_pq(n: usize, p: f64, q: f64) -> f64 {
    n as f64 * ((1.0 / p).max(1.0 / q).max(1.0) - 1.0)
}

/// `n (max(1/p, 1/r) - 1/r)`.
pub fn sigma_r(n: usize, p: f64, r: f64) -> f64 {
    n as f64 * ((1.0 / p).max(1.0 / r) - 1.0 / r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Slot {
    Truncation,
    Strong,
    Perfect,
    Sublinear,
    AbsStrong,
    AbsPerfect,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Citation {
    pub slot: Slot,
    pub tag: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationVerdict {
    pub truncation: Tri,
    pub strong: Tri,
    pub perfect: Tri,
    pub citations: Vec<Citation>,
}

fn check_chain(upper: Tri, lower: Tri, names: (&str, &str)) -> Result<()> {
    // `upper` implies `lower`: a yes above needs a yes below, a no below
    // forces a no above.
    if (upper == Tri::Yes && lower != Tri::Yes) || (lower == Tri::No && upper != Tri::No) {
        return Err(Error::param(format!(
            "nesting violated: {} = {upper:?} but {} = {lower:?}",
            names.0, names.1
        )));
    }
    Ok(())
}

impl TruncationVerdict {
    /// Builds a verdict, rejecting slot combinations that break
    /// perfect => strong => truncation.
    pub fn new(truncation: Tri, strong: Tri, perfect: Tri, citations: Vec<Citation>) -> Result<Self> {
        check_chain(perfect, strong, ("perfect", "strong"))?;
        check_chain(strong, truncation, ("strong", "truncation"))?;
        Ok(TruncationVerdict { truncation, strong, perfect, citations })
    }

    pub fn tags(&self, slot: Slot) -> Vec<&str> {
        self.citations.iter().filter(|c| c.slot == slot).map(|c| c.tag.as_str()).collect()
    }
}

/// Accumulates claims per slot and refuses contradictions.
#[derive(Default)]
struct Claims {
    entries: Vec<(Slot, bool, &'static str)>,
}

impl Claims {
    fn add(&mut self, cond: bool, slot: Slot, value: bool, tag: &'static str) {
        if cond {
            self.entries.push((slot, value, tag));
        }
    }

    fn has(&self, slot: Slot, value: bool) -> bool {
        self.entries.iter().any(|&(s, v, _)| s == slot && v == value)
    }

    /// Propagates `upper => lower` along a chain, copying tags.
    fn close(&mut self, upper: Slot, lower: Slot) {
        let ups: Vec<_> = self.entries.iter().filter(|e| e.0 == upper && e.1).map(|e| e.2).collect();
        for tag in ups {
            if !self.entries.contains(&(lower, true, tag)) {
                self.entries.push((lower, true, tag));
            }
        }
        let downs: Vec<_> = self.entries.iter().filter(|e| e.0 == lower && !e.1).map(|e| e.2).collect();
        for tag in downs {
            if !self.entries.contains(&(upper, false, tag)) {
                self.entries.push((upper, false, tag));
            }
        }
    }

    fn resolve(&self, slot: Slot) -> Result<Tri> {
        match (self.has(slot, true), self.has(slot, false)) {
            (true, true) => Err(Error::param(format!("contradictory claims for {slot:?}"))),
            (true, false) => Ok(Tri::Yes),
            (false, true) => Ok(Tri::No),
            (false, false) => Ok(Tri::Unknown),
        }
    }

    /// Citations grouped by slot, in order of first appearance.
    fn citations(&self) -> Vec<Citation> {
        let mut out: Vec<Citation> = Vec::new();
        let mut sorted = self.entries.clone();
        sorted.sort_by_key(|e| e.0);
        for (slot, _, tag) in sorted {
            if !out.iter().any(|c| c.slot == slot && c.tag == tag) {
                out.push(Citation { slot, tag: tag.to_string() });
            }
        }
        out
    }
}

fn lt(a: f64, b: f64) -> bool {
    a < b - EPS
}

fn le(a: f64, b: f64) -> bool {
    a <= b + EPS
}

fn eq(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= EPS
}

/// Strict window `lo < s < hi`.
fn within(lo: f64, s: f64, hi: f64) -> bool {
    lt(lo, s) && lt(s, hi)
}

/// Truncation, strong truncation and perfect truncation for `sp`.
pub fn truncation_verdict(sp: &SpaceParams) -> Result<TruncationVerdict> {
    sp.validate()?;
    let SpaceParams { family, s, p, q, n } = *sp;
    let (ip, iq) = (1.0 / p, 1.0 / q);
    let nf = n as f64;
    let p_finite = p.is_finite();
    let sig = sigma(n, p);
    let sig1 = ip.max(1.0) - 1.0;
    let mut c = Claims::default();
    use Slot::*;

    match family {
        Family::B => {
            let trunc = within(sig, s, 1.0 + ip);
            if n == 1 {
                c.add(within(sig1, s, 1.0 + ip), Truncation, true, "Thm3.12(i)");
                c.add(within(ip, s, 1.0 + ip.min(1.0)), Perfect, true, "Thm3.12(ii)");
                c.add(p_finite && lt(sig1, s) && le(s, ip), Strong, false, "Thm3.12(iii)");
            }
            c.add(trunc, Truncation, true, "Thm3.3(i)");
            c.add(trunc, Truncation, true, "Thm3.16(i)");
            c.add(within(nf * ip, s, 1.0), Perfect, true, "Thm3.16(ii)");
            c.add(eq(p, q) && within(ip.max(sig), s, 1.0 + ip.min(1.0)), Strong, true, "Thm3.16(iii)");
            c.add(p_finite && lt(sig, s) && le(s, ip), Strong, false, "Thm3.16(iv)");
            let chi_in = lt(s, ip) || (eq(s, ip) && q.is_infinite());
            c.add(p_finite && lt(sig, s) && chi_in, Strong, false, "Prop3.8");
            c.add(
                (p_finite && within(sig, s, ip))
                    || (eq(s, ip) && q.is_infinite() && p_finite && lt((nf - 1.0) / nf, p)),
                Strong,
                false,
                "Cor3.10",
            );
            c.add(eq(p, q) && p > 1.0 && p_finite && eq(s, ip), Strong, false, "Rem3.11");
            c.add(p.is_infinite() && q.is_infinite() && within(0.0, s, 1.0), Perfect, true, "Ex3.6");
        }
        Family::F => {
            let excluded = p <= 1.0 && eq(s, ip);
            let trunc = within(sigma_pq(n, p, q), s, 1.0 + ip) && !excluded;
            if n == 1 {
                c.add(trunc, Truncation, true, "Thm3.14(i)");
                c.add(p > 1.0 && q > 1.0 && within(ip.max(iq), s, 1.0), Perfect, true, "Thm3.14(ii)");
                c.add(within(sig1, s, ip), Strong, false, "Thm3.14(iii)");
            }
            c.add(trunc, Truncation, true, "Thm3.3(ii)");
            c.add(trunc, Truncation, true, "Thm3.18(i)");
            c.add(within(nf * ip.max(iq), s, 1.0), Perfect, true, "Thm3.18(ii)");
            c.add(p > 1.0 && q > 1.0 && within(ip.max(iq), s, 1.0), Strong, true, "Thm3.18(iii)");
            c.add(within(sig, s, ip), Strong, false, "Thm3.18(iv)");
            c.add(lt(sig, s) && lt(s, ip), Strong, false, "Prop3.8");
            c.add(within(sig, s, ip), Strong, false, "Cor3.10");
        }
    }
    c.close(Perfect, Strong);
    c.close(Strong, Truncation);
    c.close(Perfect, Strong);
    TruncationVerdict::new(c.resolve(Truncation)?, c.resolve(Strong)?, c.resolve(Perfect)?, c.citations())
}

/// What is known about the outer function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalerMeta {
    pub is_lipschitz_scaling: bool,
    pub gprime_seminorm_finite: bool,
}

/// Composition verdict. `strong` and `perfect` refer to `g(f)`, the `abs_`
/// slots to `|g(f)|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionVerdict {
    pub sublinear: Tri,
    pub strong: Tri,
    pub perfect: Tri,
    pub abs_strong: Tri,
    pub abs_perfect: Tri,
    pub requires_g_prime_seminorm: bool,
    pub citations: Vec<Citation>,
}

pub fn composition_verdict(sp: &SpaceParams, meta: ScalerMeta) -> Result<CompositionVerdict> {
    sp.validate()?;
    let SpaceParams { family, s, p, q, n } = *sp;
    let (ip, iq) = (1.0 / p, 1.0 / q);
    let nf = n as f64;
    let high = s >= 1.0 - EPS;
    let side_ok = !high || meta.gprime_seminorm_finite;
    let mut c = Claims::default();
    let mut needs_gprime = false;
    use Slot::*;

    if meta.is_lipschitz_scaling {
        match family {
            Family::B => {
                let t43 = within(nf * ip, s, 1.0);
                for slot in [Perfect, AbsPerfect] {
                    c.add(t43, slot, true, "Thm4.3");
                }
                let p47 = p > 1.0 && within(0.0, s, 1.0 + ip);
                needs_gprime |= p47 && high;
                c.add(p47 && side_ok, Strong, true, "Prop4.7");
                c.add(p47 && side_ok, Sublinear, true, "Prop4.7");
                if n == 1 {
                    let t410 = p > 1.0 && within(ip, s, 1.0 + ip);
                    needs_gprime |= t410 && high;
                    for slot in [Perfect, AbsPerfect] {
                        c.add(t410 && side_ok, slot, true, "Thm4.10");
                    }
                }
                let t412 = eq(p, q) && p > 1.0 && within(ip, s, 1.0 + ip);
                needs_gprime |= t412 && high;
                for slot in [Strong, AbsStrong] {
                    c.add(t412 && side_ok, slot, true, "Thm4.12(ii)");
                }
            }
            Family::F => {
                let t43 = within(nf * ip.max(iq), s, 1.0);
                for slot in [Perfect, AbsPerfect] {
                    c.add(t43, slot, true, "Thm4.3");
                }
                let t412 = p > 1.0 && q > 1.0 && within(ip.max(iq), s, 1.0);
                for slot in [Strong, AbsStrong] {
                    c.add(t412, slot, true, "Thm4.12(i)");
                }
            }
        }
        c.close(Perfect, Strong);
        c.close(AbsPerfect, AbsStrong);
        c.close(Strong, Sublinear);
    }
    Ok(CompositionVerdict {
        sublinear: c.resolve(Sublinear)?,
        strong: c.resolve(Strong)?,
        perfect: c.resolve(Perfect)?,
        abs_strong: c.resolve(AbsStrong)?,
        abs_perfect: c.resolve(AbsPerfect)?,
        requires_g_prime_seminorm: needs_gprime,
        citations: c.citations(),
    })
}

/// Whether `chi_Q` belongs to `A^s_{p,q}`.
pub fn indicator_in_space(sp: &SpaceParams) -> bool {
    let ip = 1.0 / sp.p;
    lt(sp.s, ip) || (sp.family == Family::B && eq(sp.s, ip) && sp.q.is_infinite())
}
