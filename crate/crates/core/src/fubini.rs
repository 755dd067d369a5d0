//! Axis slices and the sliced norm
//! `sum_l || || f(.., x_l, ..) | A(R) || | L_p(R^{n-1}) ||`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{AxisRule, GridBox, GridFunction, NodeField};
use crate::norms::{self, NormKind};
use crate::oscillation;
use crate::reduce;
use crate::spaces::{Family, SpaceParams};

/// One-dimensional restrictions of `f` along `axis`, in row-major order of the
/// remaining coordinates.
pub fn slices(f: &GridFunction, axis: usize) -> Result<Vec<GridFunction>> {
    let dim = f.dim();
    if dim < 2 {
        return Err(Error::param("slicing needs dimension >= 2"));
    }
    if axis >= dim {
        return Err(Error::param(format!("axis {axis} out of range")));
    }
    let n = f.nodes_per_axis();
    let stride = n.pow((dim - 1 - axis) as u32);
    let count = f.len() / n;
    let bbox = GridBox::new(vec![f.bbox().corner[axis]], f.bbox().side);
    let v = f.samples();
    reduce::map_indexed(count, |line| {
        let base = (line / stride) * stride * n + line % stride;
        let samples = (0..n).map(|i| v[base + i * stride]).collect();
        GridFunction::new(1, f.level(), bbox.clone(), samples, format!("{}-axis{axis}-{line}", f.tag()))
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FubiniNorm {
    pub total: f64,
    pub per_axis: Vec<f64>,
}

fn gate(sp: &SpaceParams, norm1d: NormKind) -> Result<()> {
    sp.validate()?;
    if sp.p != sp.q {
        let citation = if sp.family == Family::B { "Prop2.5(ii)" } else { "Prop2.5(i)" };
        return Err(Error::Precondition {
            message: format!("the sliced norm needs p = q, got p = {} and q = {}", sp.p, sp.q),
            citation: citation.into(),
        });
    }
    if !matches!(norm1d, NormKind::FaberB | NormKind::OscB) {
        return Err(Error::param(format!("{norm1d} is not a one-dimensional B-type norm")));
    }
    Ok(())
}

/// Sliced norm with `norm1d` on every line and the trapezoid `L_p` over the
/// slice lattice, summed over axes.
pub fn fubini_norm(f: &GridFunction, sp: &SpaceParams, norm1d: NormKind) -> Result<FubiniNorm> {
    gate(sp, norm1d)?;
    let dim = f.dim();
    if dim < 2 {
        return Err(Error::param("the sliced norm needs dimension >= 2"));
    }
    let line_sp = SpaceParams { n: 1, ..*sp };
    let n = f.nodes_per_axis();
    let mut per_axis = Vec::with_capacity(dim);
    for axis in 0..dim {
        let lines = slices(f, axis)?;
        let values = reduce::map_indexed(lines.len(), |i| norms::norm(norm1d, &lines[i], &line_sp))
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
        let field = NodeField {
            level: f.level(),
            shape: vec![n; dim - 1],
            origin: vec![0.0; dim - 1],
            rules: vec![AxisRule::Trapezoid; dim - 1],
            values,
        };
        per_axis.push(field.lp_norm(sp.p)?);
    }
    // Sorting makes the total invariant under coordinate permutations.
    let mut sorted = per_axis.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(FubiniNorm { total: reduce::tree_sum(&sorted), per_axis })
}

/// Sliced norm divided by the direct `n`-dimensional oscillation norm.
pub fn fubini_compare(f: &GridFunction, sp: &SpaceParams, norm1d: NormKind) -> Result<f64> {
    let sliced = fubini_norm(f, sp, norm1d)?.total;
    let direct = oscillation::b_osc_norm(f, sp.s, sp.p, sp.q)?;
    if direct == 0.0 {
        return Err(Error::param("direct norm vanishes; ratio undefined"));
    }
    Ok(sliced / direct)
}
