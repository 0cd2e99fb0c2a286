//! One-dimensional partitions of the unit interval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Default number of Gauss points per element.
pub const DEFAULT_QUAD_ORDER: usize = 8;

/// A partition of `[0, 1]`. The boundary consists of the two end nodes.
///
/// Quadrature points and weights are cached per element at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeshDocument", into = "MeshDocument")]
pub struct Mesh {
    nodes: Vec<f64>,
    quad_order: usize,
    rule: GaussLegendre,
    // Per element: (x_q, w_q) already mapped to physical coordinates.
    quad: Vec<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MeshDocument {
    node_coords: Vec<f64>,
    quad_order: usize,
}

impl TryFrom<MeshDocument> for Mesh {
    type Error = Error;
    fn try_from(doc: MeshDocument) -> Result<Self> {
        Mesh::from_nodes(doc.node_coords, doc.quad_order)
    }
}

impl From<Mesh> for MeshDocument {
    fn from(m: Mesh) -> Self {
        MeshDocument {
            node_coords: m.nodes,
            quad_order: m.quad_order,
        }
    }
}

impl Mesh {
    /// Uniform partition of `[0, 1]` into `n_elements` cells.
    pub fn uniform(n_elements: usize, quad_order: usize) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::invalid("mesh needs at least one element"));
        }
        let h = 1.0 / n_elements as f64;
        let mut nodes: Vec<f64> = (0..=n_elements).map(|i| i as f64 * h).collect();
        nodes[n_elements] = 1.0;
        Self::from_nodes(nodes, quad_order)
    }

    /// Arbitrary partition; nodes must increase strictly from 0 to 1.
    pub fn from_nodes(nodes: Vec<f64>, quad_order: usize) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("mesh needs at least two nodes"));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::invalid("mesh must start at 0 and end at 1"));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("mesh nodes must be strictly increasing"));
        }
        let rule = GaussLegendre::new(quad_order)?;
        let quad = nodes
            .windows(2)
            .map(|w| {
                let half = 0.5 * (w[1] - w[0]);
                let mid = 0.5 * (w[1] + w[0]);
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&xi, &wq)| (mid + half * xi, wq * half))
                    .collect()
            })
            .collect();
        Ok(Mesh {
            nodes,
            quad_order,
            rule,
            quad,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn rule(&self) -> &GaussLegendre {
        &self.rule
    }

    pub fn element_size(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn max_element_size(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| self.element_size(e))
            .fold(0.0, f64::max)
    }

    /// Physical quadrature points and weights of element `e`.
    pub fn element_quadrature(&self, e: usize) -> &[(f64, f64)] {
        &self.quad[e]
    }

    /// Integrates `f` over `[0, 1]` with the cached element rules.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.quad
            .iter()
            .flat_map(|q| q.iter())
            .map(|&(x, w)| w * f(x))
            .sum()
    }

    /// Element containing `x`; interior nodes belong to the element on their right.
    pub fn locate(&self, x: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::invalid(format!("point {x} lies outside [0, 1]")));
        }
        let idx = self.nodes.partition_point(|&n| n <= x);
        Ok(idx.saturating_sub(1).min(self.n_elements() - 1))
    }

    /// Smallest Gauss order that resolves the p-dependent integrands.
    pub fn min_quad_order_for(p_max: f64) -> usize {
        ((p_max + 2.0) / 2.0).ceil().max(1.0) as usize
    }
}
