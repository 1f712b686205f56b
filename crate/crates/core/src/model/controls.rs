//! Finite control grids standing in for the compact control sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lower, upper]` discretized with `count` uniform points.
/// With `count = 1` the single point is `lower`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlInterval {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

impl ControlInterval {
    pub fn singleton(value: f64) -> Self {
        ControlInterval {
            lower: value,
            upper: value,
            count: 1,
        }
    }

    pub fn uniform(lower: f64, upper: f64, count: usize) -> Self {
        ControlInterval { lower, upper, count }
    }

    fn points(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::Config("control interval with zero points".into()));
        }
        if !(self.lower <= self.upper) || !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(Error::Config(format!(
                "empty or non-finite control interval [{}, {}]",
                self.lower, self.upper
            )));
        }
        Ok(uniform_points(self.lower, self.upper, self.count))
    }
}

fn uniform_points(lower: f64, upper: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lower];
    }
    let step = (upper - lower) / (count - 1) as f64;
    (0..count)
        .map(|k| if k == count - 1 { upper } else { lower + step * k as f64 })
        .collect()
}

/// Vertex control set: an explicit list of points or a tensor grid over a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum VertexControls {
    Points {
        points: Vec<Vec<f64>>,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
        counts: Vec<usize>,
    },
}

impl VertexControls {
    pub fn single(point: Vec<f64>) -> Self {
        VertexControls::Points { points: vec![point] }
    }

    fn points(&self) -> Result<Vec<Vec<f64>>> {
        match self {
            VertexControls::Points { points } => {
                if points.is_empty() {
                    return Err(Error::Config("vertex control list is empty".into()));
                }
                let dim = points[0].len();
                if points.iter().any(|p| p.len() != dim) {
                    return Err(Error::Config(
                        "vertex control points have inconsistent dimensions".into(),
                    ));
                }
                Ok(points.clone())
            }
            VertexControls::Box { lower, upper, counts } => {
                if lower.len() != upper.len() || lower.len() != counts.len() || lower.is_empty() {
                    return Err(Error::Config(
                        "vertex control box needs matching non-empty lower/upper/counts".into(),
                    ));
                }
                let axes = lower
                    .iter()
                    .zip(upper)
                    .zip(counts)
                    .map(|((&lo, &hi), &n)| ControlInterval::uniform(lo, hi, n).points())
                    .collect::<Result<Vec<_>>>()?;
                // Row-major: the last axis varies fastest.
                let mut out: Vec<Vec<f64>> = vec![Vec::new()];
                for axis in &axes {
                    out = out
                        .into_iter()
                        .flat_map(|prefix| {
                            axis.iter().map(move |&v| {
                                let mut p = prefix.clone();
                                p.push(v);
                                p
                            })
                        })
                        .collect();
                }
                Ok(out)
            }
        }
    }
}

/// Materialized control grids: per-ray points and a list of vertex points.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSets {
    ray: Vec<Vec<f64>>,
    vertex: Vec<Vec<f64>>,
}

impl ControlSets {
    /// `ray` holds one interval per ray, or a single interval shared by all.
    pub fn new(ray_count: usize, ray: &[ControlInterval], vertex: &VertexControls) -> Result<Self> {
        let ray_points = match ray.len() {
            1 => vec![ray[0].points()?; ray_count],
            n if n == ray_count => ray.iter().map(|r| r.points()).collect::<Result<_>>()?,
            n => {
                return Err(Error::Config(format!(
                    "expected 1 or {ray_count} ray control intervals, got {n}"
                )))
            }
        };
        Ok(ControlSets {
            ray: ray_points,
            vertex: vertex.points()?,
        })
    }

    /// Singleton controls everywhere: uncontrolled problems.
    pub fn uncontrolled(ray_count: usize) -> Self {
        ControlSets {
            ray: vec![vec![0.0]; ray_count],
            vertex: vec![vec![1.0 / ray_count as f64; ray_count]],
        }
    }

    pub fn ray_points(&self, ray_zero_based: usize) -> &[f64] {
        &self.ray[ray_zero_based]
    }

    pub fn vertex_points(&self) -> &[Vec<f64>] {
        &self.vertex
    }

    pub fn vertex_dimension(&self) -> usize {
        self.vertex[0].len()
    }

    pub fn ray_count(&self) -> usize {
        self.ray.len()
    }

    pub fn max_ray_count(&self) -> usize {
        self.ray.iter().map(Vec::len).max().unwrap_or(0)
    }
}
