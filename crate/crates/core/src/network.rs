//! Star-shaped network: `I` half-lines glued at a single junction vertex.
//!
//! A point is a pair `(x, i)` with `x >= 0` the distance to the vertex and
//! `i` the ray it lives on. Every point with `x = 0` is the vertex, whatever
//! its ray label; ray 1 is the canonical label of the vertex.

use std::fmt;

use crate::error::{Error, Result};

/// One-based ray label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RayIndex(usize);

impl RayIndex {
    pub const FIRST: RayIndex = RayIndex(1);

    /// Checked constructor: `1 <= i <= ray_count` and `ray_count >= 2`.
    pub fn new(i: usize, ray_count: usize) -> Result<Self> {
        if ray_count < 2 {
            return Err(Error::InvalidInput(format!(
                "a star network needs at least 2 rays, got {ray_count}"
            )));
        }
        if i == 0 || i > ray_count {
            return Err(Error::InvalidInput(format!("ray index {i} outside 1..={ray_count}")));
        }
        Ok(RayIndex(i))
    }

    /// Build from a zero-based position without range checks against a network.
    pub fn from_zero_based(k: usize) -> Self {
        RayIndex(k + 1)
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn zero_based(self) -> usize {
        self.0 - 1
    }
}

impl fmt::Display for RayIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A point of the network. Equality follows the vertex equivalence class.
#[derive(Debug, Clone, Copy)]
pub struct NetworkPoint {
    pub x: f64,
    pub ray: RayIndex,
}

impl NetworkPoint {
    pub fn new(x: f64, ray: RayIndex) -> Result<Self> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::InvalidInput(format!(
                "network coordinate must be finite and non-negative, got {x}"
            )));
        }
        Ok(NetworkPoint { x, ray })
    }

    pub fn vertex() -> Self {
        NetworkPoint {
            x: 0.0,
            ray: RayIndex::FIRST,
        }
    }

    pub fn is_vertex(&self) -> bool {
        self.x == 0.0
    }
}

impl PartialEq for NetworkPoint {
    fn eq(&self, other: &Self) -> bool {
        if self.is_vertex() && other.is_vertex() {
            return true;
        }
        self.x == other.x && self.ray == other.ray
    }
}

/// Geodesic distance: along a ray when both points share it, through the
/// vertex otherwise.
pub fn distance(p: &NetworkPoint, q: &NetworkPoint) -> f64 {
    if p.ray == q.ray {
        (p.x - q.x).abs()
    } else {
        p.x + q.x
    }
}

/// Maps every vertex representative to `(0, ray 1)`; identity elsewhere.
pub fn canonicalize(p: &NetworkPoint) -> Result<NetworkPoint> {
    if !(p.x >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "cannot canonicalize a point with negative coordinate {}",
            p.x
        )));
    }
    if p.is_vertex() {
        Ok(NetworkPoint::vertex())
    } else {
        Ok(*p)
    }
}

/// The network geometry used for computation: `ray_count` rays truncated at
/// `truncation_radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarNetwork {
    ray_count: usize,
    truncation_radius: f64,
}

impl StarNetwork {
    pub fn new(ray_count: usize, truncation_radius: f64) -> Result<Self> {
        if ray_count < 2 {
            return Err(Error::InvalidInput(format!(
                "a star network needs at least 2 rays, got {ray_count}"
            )));
        }
        if !(truncation_radius > 0.0) || !truncation_radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "truncation radius must be positive, got {truncation_radius}"
            )));
        }
        Ok(StarNetwork {
            ray_count,
            truncation_radius,
        })
    }

    pub fn ray_count(&self) -> usize {
        self.ray_count
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    pub fn ray(&self, i: usize) -> Result<RayIndex> {
        RayIndex::new(i, self.ray_count)
    }

    pub fn rays(&self) -> impl Iterator<Item = RayIndex> {
        (0..self.ray_count).map(RayIndex::from_zero_based)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64, i: usize) -> NetworkPoint {
        NetworkPoint::new(x, RayIndex::new(i, 3).unwrap()).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&pt(1.5, 2), &pt(0.5, 2)), 1.0);
        assert_eq!(distance(&pt(1.5, 1), &pt(0.5, 2)), 2.0);
        assert_eq!(distance(&pt(0.0, 1), &pt(0.0, 3)), 0.0);
    }

    #[test]
    fn canonical_vertex() {
        let c = canonicalize(&pt(0.0, 3)).unwrap();
        assert_eq!(c.ray.get(), 1);
        assert_eq!(c.x, 0.0);
        let c = canonicalize(&pt(0.7, 2)).unwrap();
        assert_eq!((c.x, c.ray.get()), (0.7, 2));
        let c = canonicalize(&pt(0.0, 1)).unwrap();
        assert_eq!((c.x, c.ray.get()), (0.0, 1));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(RayIndex::new(0, 3).is_err());
        assert!(RayIndex::new(4, 3).is_err());
        assert!(RayIndex::new(1, 1).is_err());
        assert!(NetworkPoint::new(-0.1, RayIndex::FIRST).is_err());
        let bad = NetworkPoint {
            x: -1.0,
            ray: RayIndex::FIRST,
        };
        assert!(canonicalize(&bad).is_err());
        assert!(StarNetwork::new(1, 1.0).is_err());
        assert!(StarNetwork::new(2, 0.0).is_err());
    }

    fn arb_point() -> impl Strategy<Value = NetworkPoint> {
        (prop_oneof![Just(0.0), 0.0..5.0f64], 1usize..=4)
            .prop_map(|(x, i)| NetworkPoint::new(x, RayIndex::new(i, 4).unwrap()).unwrap())
    }

    proptest! {
        #[test]
        fn metric_axioms(p in arb_point(), q in arb_point(), r in arb_point()) {
            prop_assert_eq!(distance(&p, &q), distance(&q, &p));
            prop_assert!(distance(&p, &q) <= distance(&p, &r) + distance(&r, &q) + 1e-12);
            let same = canonicalize(&p).unwrap() == canonicalize(&q).unwrap();
            prop_assert_eq!(distance(&p, &q) == 0.0, same);
        }
    }
}
