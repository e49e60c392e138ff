//! Quadrature rules on the unit interval.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A rule `∫₀ʰ g ≈ h Σ bᵢ g(cᵢ h)` with nodes in `[0, 1]`.
///
/// `order` is `q`: the rule integrates polynomials of degree `≤ q − 1`
/// exactly, so the one-interval error is `O(h^{q+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    name: String,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    order: usize,
}

impl QuadratureRule {
    /// Builds a custom rule, checking the node/weight invariants.
    pub fn new(
        name: impl Into<String>,
        nodes: Vec<f64>,
        weights: Vec<f64>,
        order: usize,
    ) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: nodes.len(),
                found: weights.len(),
            });
        }
        if nodes.is_empty() {
            return Err(Error::InvalidParameter(
                "a rule needs at least one node".into(),
            ));
        }
        if nodes.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::InvalidParameter("nodes must lie in [0, 1]".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "nodes must be strictly increasing".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "weights must sum to 1, got {total}"
            )));
        }
        Ok(Self {
            name: name.into(),
            nodes,
            weights,
            order,
        })
    }

    pub fn midpoint() -> Self {
        Self {
            name: "midpoint".into(),
            nodes: vec![0.5],
            weights: vec![1.0],
            order: 2,
        }
    }

    pub fn trapezoid() -> Self {
        Self {
            name: "trapezoid".into(),
            nodes: vec![0.0, 1.0],
            weights: vec![0.5, 0.5],
            order: 2,
        }
    }

    pub fn simpson() -> Self {
        Self {
            name: "simpson".into(),
            nodes: vec![0.0, 0.5, 1.0],
            weights: vec![1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0],
            order: 4,
        }
    }

    /// Composite Simpson rule with `panels` equal sub-panels
    /// (`2 * panels + 1` equally spaced nodes).
    pub fn composite_simpson(panels: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::InvalidParameter("panels must be positive".into()));
        }
        let m = 2 * panels;
        let nodes = (0..=m).map(|j| j as f64 / m as f64).collect();
        let w = 1.0 / (6.0 * panels as f64);
        let weights = (0..=m)
            .map(|j| {
                if j == 0 || j == m {
                    w
                } else if j % 2 == 1 {
                    4.0 * w
                } else {
                    2.0 * w
                }
            })
            .collect();
        Ok(Self {
            name: format!("composite-simpson-{panels}"),
            nodes,
            weights,
            order: 4,
        })
    }

    /// Looks up a built-in rule. Accepts `trap` as an alias of `trapezoid`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "midpoint" => Ok(Self::midpoint()),
            "trap" | "trapezoid" => Ok(Self::trapezoid()),
            "simpson" => Ok(Self::simpson()),
            other => Err(Error::UnknownRule(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `h Σ bᵢ samplesᵢ`, where `samples[i] = g(cᵢ h)`.
    pub fn apply(&self, h: f64, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.nodes.len() {
            return Err(Error::LengthMismatch {
                expected: self.nodes.len(),
                found: samples.len(),
            });
        }
        if !(h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "h must be positive, got {h}"
            )));
        }
        Ok(h * self
            .weights
            .iter()
            .zip(samples)
            .map(|(b, g)| b * g)
            .sum::<f64>())
    }

    /// Convenience: samples `g` at the scaled nodes and applies the rule.
    pub fn integrate<G: FnMut(f64) -> f64>(&self, h: f64, mut g: G) -> Result<f64> {
        let samples: Vec<f64> = self.nodes.iter().map(|c| g(c * h)).collect();
        self.apply(h, &samples)
    }
}

impl FromStr for QuadratureRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::by_name(s)
    }
}

impl fmt::Display for QuadratureRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}
