use crate::error::Result;
use crate::reduce;

/// Quadrature rule along one axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisRule {
    /// Trapezoid: end nodes carry half weight.
    Trapezoid,
    /// Each node stands for the half-open cell to its right; the last node
    /// carries no weight.
    Cell,
    /// Every entry is a whole cell (used for cell-valued data such as forward
    /// differences).
    Cells,
}

pub(crate) fn axis_weights(len: usize, rule: AxisRule, h: f64) -> Vec<f64> {
    let mut w = vec![h; len];
    match rule {
        AxisRule::Trapezoid => {
            if len == 1 {
                w[0] = 0.0;
            } else {
                w[0] = 0.5 * h;
                w[len - 1] = 0.5 * h;
            }
        }
        AxisRule::Cell => w[len - 1] = 0.0,
        AxisRule::Cells => {}
    }
    w
}

pub(crate) fn weighted_lp(shape: &[usize], weights: &[Vec<f64>], values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    if p.is_infinite() {
        return reduce::max_by(values.len(), &|i| {
            if node_weight(shape, weights, i) > 0.0 {
                values[i].abs()
            } else {
                0.0
            }
        });
    }
    let total = reduce::tree_sum_by(values.len(), &|i| {
        let v = values[i].abs();
        if v == 0.0 {
            return 0.0;
        }
        let vp = if p == 1.0 {
            v
        } else if p == 2.0 {
            v * v
        } else {
            v.powf(p)
        };
        node_weight(shape, weights, i) * vp
    });
    total.powf(1.0 / p)
}

#[inline]
fn node_weight(shape: &[usize], weights: &[Vec<f64>], flat: usize) -> f64 {
    let mut rest = flat;
    let mut w = 1.0;
    for l in (0..shape.len()).rev() {
        w *= weights[l][rest % shape[l]];
        rest /= shape[l];
    }
    w
}

/// Node values on a rectangular piece of a level-`L` lattice, not tied to an
/// integer box. Produced by difference operators and slicing.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeField {
    pub level: u32,
    pub shape: Vec<usize>,
    pub origin: Vec<f64>,
    pub rules: Vec<AxisRule>,
    pub values: Vec<f64>,
}

impl NodeField {
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        super::check_exponent(p, "p")?;
        let h = (-(self.level as f64)).exp2();
        let weights: Vec<Vec<f64>> = self
            .shape
            .iter()
            .zip(&self.rules)
            .map(|(&n, &r)| axis_weights(n, r, h))
            .collect();
        Ok(weighted_lp(&self.shape, &weights, &self.values, p))
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_rule_counts_every_entry() {
        let f = NodeField {
            level: 2,
            shape: vec![4],
            origin: vec![0.0],
            rules: vec![AxisRule::Cells],
            values: vec![1.0; 4],
        };
        assert_eq!(f.lp_norm(3.0).unwrap(), 1.0);
    }

    #[test]
    fn trapezoid_weights_sum_to_length() {
        let w = axis_weights(9, AxisRule::Trapezoid, 0.125);
        assert_eq!(w.iter().sum::<f64>(), 1.0);
        let c = axis_weights(9, AxisRule::Cell, 0.125);
        assert_eq!(c.iter().sum::<f64>(), 1.0);
    }
}
