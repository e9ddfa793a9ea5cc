use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INNER_RADIUS: f64 = 1.0;
pub const OUTER_RADIUS: f64 = 2.0;

const MIN_NODES: usize = 16;

/// Ordered radii covering `[1, 2]`, endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    nodes: Vec<f64>,
    uniform_step: Option<f64>,
}

impl Mesh {
    /// Uniform mesh with `n` nodes.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::InvalidParameter(format!(
                "mesh needs at least {MIN_NODES} nodes, got {n}"
            )));
        }
        let h = (OUTER_RADIUS - INNER_RADIUS) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| INNER_RADIUS + i as f64 * h).collect();
        nodes[n - 1] = OUTER_RADIUS;
        Ok(Self {
            nodes,
            uniform_step: Some(h),
        })
    }

    /// Builds a mesh from explicit nodes. Nodes that are uniform to within
    /// rounding are recognised as such, so a mesh read back from disk
    /// reproduces the arithmetic of the mesh that produced it.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if n < MIN_NODES {
            return Err(Error::InvalidParameter(format!(
                "mesh needs at least {MIN_NODES} nodes, got {n}"
            )));
        }
        if nodes[0] != INNER_RADIUS || nodes[n - 1] != OUTER_RADIUS {
            return Err(Error::InvalidParameter(
                "mesh must start at r = 1 and end at r = 2".into(),
            ));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "mesh nodes must be strictly increasing".into(),
            ));
        }
        let h = (OUTER_RADIUS - INNER_RADIUS) / (n - 1) as f64;
        let uniform = nodes
            .iter()
            .enumerate()
            .all(|(i, &r)| (r - (INNER_RADIUS + i as f64 * h)).abs() <= 1e-12);
        Ok(Self {
            nodes,
            uniform_step: uniform.then_some(h),
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn uniform_step(&self) -> Option<f64> {
        self.uniform_step
    }

    /// Spacing to the left and right of node `i`.
    pub fn spacing(&self, i: usize) -> (f64, f64) {
        match self.uniform_step {
            Some(h) => (h, h),
            None => (
                self.nodes[i] - self.nodes[i - 1],
                self.nodes[i + 1] - self.nodes[i],
            ),
        }
    }

    /// Index `i` of the cell `[r_i, r_{i+1}]` containing `r` (clamped).
    pub fn locate(&self, r: f64) -> usize {
        let n = self.nodes.len();
        if r <= self.nodes[0] {
            return 0;
        }
        if r >= self.nodes[n - 1] {
            return n - 2;
        }
        match self.uniform_step {
            Some(h) => (((r - INNER_RADIUS) / h) as usize).min(n - 2),
            None => self.nodes.partition_point(|&x| x <= r) - 1,
        }
    }

    /// Local four-point cubic interpolation of nodal `values` at `r`.
    /// Outside `[1, 2]` the result is 0 (Dirichlet extension).
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        let n = self.nodes.len();
        if !(INNER_RADIUS..=OUTER_RADIUS).contains(&r) {
            return 0.0;
        }
        let i = self.locate(r);
        let start = i.saturating_sub(1).min(n - 4);
        let xs = &self.nodes[start..start + 4];
        let ys = &values[start..start + 4];
        let mut acc = 0.0;
        for j in 0..4 {
            let mut basis = 1.0;
            for m in 0..4 {
                if m != j {
                    basis *= (r - xs[m]) / (xs[j] - xs[m]);
                }
            }
            acc += basis * ys[j];
        }
        acc
    }
}
