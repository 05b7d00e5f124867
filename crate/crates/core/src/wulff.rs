//! Wulff shapes `[h] = ∩ {x : x·u_i ≤ h_i}` of support vectors.

use crate::body::Polytope;
use crate::error::{Error, Result};
use crate::grid::SupportVector;

#[derive(Debug, Clone)]
pub struct Wulff {
    pub body: Polytope,
    /// Support of `[h]` at every grid direction; `≤ h_i`, equal on active facets.
    pub induced: Vec<f64>,
    /// Grid index of each facet of `body`.
    pub facet_dir: Vec<usize>,
}

impl Wulff {
    /// Grid directions whose halfspace is a facet of `[h]`.
    pub fn active(&self) -> Vec<bool> {
        let mut a = vec![false; self.induced.len()];
        for &i in &self.facet_dir {
            a[i] = true;
        }
        a
    }
}

pub fn wulff_shape(h: &SupportVector) -> Result<Wulff> {
    let body = Polytope::from_halfspaces(h.grid.directions(), &h.values).map_err(|e| match e {
        Error::Degenerate(m) => Error::Degenerate(format!("Wulff shape: {m}")),
        other => other,
    })?;
    let induced = h
        .grid
        .directions()
        .iter()
        .zip(&h.values)
        .map(|(u, &hi)| body.support(u).min(hi))
        .collect();
    let facet_dir = body.labels().to_vec();
    Ok(Wulff { body, induced, facet_dir })
}
