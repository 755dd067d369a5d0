//! One entry point for every discrete norm, keyed by name.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::differences;
use crate::error::{Error, Result};
use crate::faber::{self, FaberKind};
use crate::grid::GridFunction;
use crate::haar;
use crate::oscillation;
use crate::spaces::{Family, SpaceParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormKind {
    Haar,
    FaberB,
    FaberF,
    OscB,
    OscF,
    Diff,
    Holder,
    W1p,
}

impl NormKind {
    pub const ALL: [NormKind; 8] = [
        NormKind::Haar,
        NormKind::FaberB,
        NormKind::FaberF,
        NormKind::OscB,
        NormKind::OscF,
        NormKind::Diff,
        NormKind::Holder,
        NormKind::W1p,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NormKind::Haar => "haar",
            NormKind::FaberB => "faber-b",
            NormKind::FaberF => "faber-f",
            NormKind::OscB => "osc-b",
            NormKind::OscF => "osc-f",
            NormKind::Diff => "diff",
            NormKind::Holder => "holder",
            NormKind::W1p => "w1p",
        }
    }

    /// Whether the norm is defined for `dim`-dimensional input.
    pub fn supports_dim(self, dim: usize) -> bool {
        !matches!(self, NormKind::FaberB | NormKind::FaberF) || dim == 1
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        Ok(match text.to_ascii_lowercase().as_str() {
            "haar" | "haar-seq" => NormKind::Haar,
            "faber-b" => NormKind::FaberB,
            "faber-f" => NormKind::FaberF,
            "osc-b" => NormKind::OscB,
            "osc-f" => NormKind::OscF,
            "diff" | "diff-seminorm" => NormKind::Diff,
            "holder" => NormKind::Holder,
            "w1p" => NormKind::W1p,
            _ => return Err(Error::UnknownKind(text.to_string())),
        })
    }
}

/// A norm value with advisory notes about the parameter point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormValue {
    pub kind: NormKind,
    pub value: f64,
    pub flags: Vec<String>,
}

fn expect_family(kind: NormKind, sp: &SpaceParams, family: Family, flags: &mut Vec<String>) {
    if sp.family != family {
        flags.push(format!("{kind} is a {family:?}-type norm; evaluated with the given s, p, q"));
    }
}

/// Evaluates `kind` on `f` with the exponents of `sp`.
pub fn evaluate(kind: NormKind, f: &GridFunction, sp: &SpaceParams) -> Result<NormValue> {
    sp.validate()?;
    if !kind.supports_dim(f.dim()) {
        return Err(Error::param(format!("{kind} needs one-dimensional input, got n = {}", f.dim())));
    }
    if sp.n != f.dim() {
        return Err(Error::param(format!("space dimension {} does not match input dimension {}", sp.n, f.dim())));
    }
    let SpaceParams { s, p, q, n, .. } = *sp;
    let mut flags = Vec::new();
    let value = match kind {
        NormKind::Haar => {
            expect_family(kind, sp, Family::B, &mut flags);
            if !haar::haar_isomorphism_window(n, s, p) {
                flags.push("outside the window where the Haar system is an unconditional basis".into());
            }
            let j = f.level().saturating_sub(1);
            haar::analyze(f, j)?.b_sequence_norm(s, p, q)?
        }
        NormKind::FaberB => {
            expect_family(kind, sp, Family::B, &mut flags);
            if !faber::faber_b_window(s, p) {
                flags.push("outside the window where the Faber system is a basis".into());
            }
            let kind = FaberKind::for_box(f.bbox());
            faber::faber_analyze(f, f.level() - 1, kind)?.b_faber_norm(s, p, q)?
        }
        NormKind::FaberF => {
            expect_family(kind, sp, Family::F, &mut flags);
            if !faber::faber_f_window(s, p, q) {
                flags.push("outside the window where the Faber system is a basis".into());
            }
            let kind = FaberKind::for_box(f.bbox());
            faber::faber_analyze(f, f.level() - 1, kind)?.f_faber_norm(s, p, q, f.level())?
        }
        NormKind::OscB => {
            expect_family(kind, sp, Family::B, &mut flags);
            let r = oscillation::b_osc_norm_report(f, s, p, q)?;
            if !r.in_window {
                flags.push(format!("oscillation norm is equivalent only for {}/p < s < 1", n));
            }
            r.value
        }
        NormKind::OscF => {
            expect_family(kind, sp, Family::F, &mut flags);
            let lo = n as f64 / p.min(q);
            if !(lo < s && s < 1.0) {
                flags.push(format!("oscillation norm is equivalent only for {n}/min(p,q) < s < 1"));
            }
            oscillation::f_osc_norm(f, s, p, q)?
        }
        NormKind::Diff => {
            expect_family(kind, sp, Family::B, &mut flags);
            let order = if s < 1.0 { 1 } else { 2 };
            if f.level() == 0 {
                return Err(Error::param("difference norm needs level >= 1"));
            }
            let (semi, report) = differences::besov_diff_seminorm(f, s, order, p, q, 0, f.level() - 1)?;
            if report.verdict != differences::GrowthVerdict::Bounded {
                flags.push("partial sums of the difference seminorm are not settled at this level".into());
            }
            f.lp_norm(p)? + semi
        }
        NormKind::Holder => {
            if !(p.is_infinite() && q.is_infinite()) {
                flags.push("Hoelder norm ignores p and q (it is the p = q = inf case)".into());
            }
            differences::holder_norm(f, s)?
        }
        NormKind::W1p => {
            if s != 1.0 {
                flags.push("Sobolev norm ignores s and q".into());
            }
            differences::w1p_norm(f, p)?
        }
    };
    Ok(NormValue { kind, value, flags })
}

pub fn norm(kind: NormKind, f: &GridFunction, sp: &SpaceParams) -> Result<f64> {
    Ok(evaluate(kind, f, sp)?.value)
}
