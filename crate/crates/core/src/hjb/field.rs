use super::Grid;
use crate::error::{Error, Result};
use crate::model::ControlSets;
use crate::network::NetworkPoint;
use crate::simulate::Policy;

/// Row-major offset of ray node `(k, i, n, m >= 1)`; `m` is contiguous.
#[inline]
pub(crate) fn ray_offset(grid: &Grid, k: usize, i: usize, n: usize, m: usize) -> usize {
    ((k * grid.ray_count + i) * grid.n_l + n) * (grid.n_x - 1) + (m - 1)
}

#[inline]
pub(crate) fn vertex_offset(grid: &Grid, k: usize, n: usize) -> usize {
    k * grid.n_l + n
}

pub(crate) fn ray_len(grid: &Grid) -> usize {
    grid.time_slices() * grid.ray_count * grid.n_l * (grid.n_x - 1)
}

/// Discrete value function `u_i(t_k, x_m, l_n)`. The vertex value is stored
/// once per `(k, n)` and shared by all rays.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueField {
    pub(crate) grid: Grid,
    pub(crate) rays: Vec<f64>,
    pub(crate) vertex: Vec<f64>,
}

impl ValueField {
    pub(crate) fn zeros(grid: Grid) -> Self {
        ValueField {
            grid,
            rays: vec![0.0; ray_len(&grid)],
            vertex: vec![0.0; grid.time_slices() * grid.n_l],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Zero-based ray `i`; `m = 0` returns the shared vertex value.
    #[inline]
    pub fn value(&self, i: usize, k: usize, m: usize, n: usize) -> f64 {
        if m == 0 {
            self.vertex[vertex_offset(&self.grid, k, n)]
        } else {
            self.rays[ray_offset(&self.grid, k, i, n, m)]
        }
    }

    #[cfg(test)]
    pub(crate) fn set(&mut self, i: usize, k: usize, m: usize, n: usize, v: f64) {
        if m == 0 {
            let o = vertex_offset(&self.grid, k, n);
            self.vertex[o] = v;
        } else {
            let o = ray_offset(&self.grid, k, i, n, m);
            self.rays[o] = v;
        }
    }

    /// Iterates over all stored values (vertex values once).
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.vertex.iter().chain(self.rays.iter()).copied()
    }

    /// Largest absolute value over every node.
    pub fn max_abs(&self) -> f64 {
        self.values().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Multilinear interpolation in `(t, x, l)` on ray `p.ray`.
    pub fn eval(&self, t: f64, p: &NetworkPoint, l: f64) -> Result<f64> {
        let g = &self.grid;
        let i = p.ray.zero_based();
        if i >= g.ray_count {
            return Err(Error::OutOfDomain(format!("ray {} outside the grid", p.ray)));
        }
        let slack = 1e-12;
        if !(t >= -slack * g.horizon && t <= g.horizon * (1.0 + slack)) {
            return Err(Error::OutOfDomain(format!("t = {t} outside [0, {}]", g.horizon)));
        }
        if !(p.x >= 0.0 && p.x <= g.x_max * (1.0 + slack)) {
            return Err(Error::OutOfDomain(format!("x = {} outside [0, {}]", p.x, g.x_max)));
        }
        if !(l >= 0.0) || (g.n_l > 1 && l > g.l_max * (1.0 + slack)) {
            return Err(Error::OutOfDomain(format!("l = {l} outside [0, {}]", g.l_max)));
        }
        let (k0, wt) = bracket(t / g.dt, g.n_t);
        let (m0, wx) = bracket(p.x / g.dx, g.n_x - 1);
        let (n0, wl) = if g.n_l > 1 {
            bracket(l / g.dl, g.n_l - 1)
        } else {
            (0, 0.0)
        };
        let n1 = if g.n_l > 1 { n0 + 1 } else { 0 };
        let mut acc = 0.0;
        for (k, a) in [(k0, 1.0 - wt), (k0 + 1, wt)] {
            if a == 0.0 {
                continue;
            }
            for (m, b) in [(m0, 1.0 - wx), (m0 + 1, wx)] {
                if b == 0.0 {
                    continue;
                }
                for (n, c) in [(n0, 1.0 - wl), (n1, wl)] {
                    if c == 0.0 {
                        continue;
                    }
                    acc += a * b * c * self.value(i, k, m, n);
                }
            }
        }
        Ok(acc)
    }
}

/// Lower cell index in `0..cells` and the fractional weight of the upper node.
#[inline]
fn bracket(s: f64, cells: usize) -> (usize, f64) {
    let s = s.max(0.0);
    let k = (s.floor() as usize).min(cells - 1);
    let w = (s - k as f64).clamp(0.0, 1.0);
    (k, w)
}

/// Free-function form of [`ValueField::eval`].
pub fn eval_value(field: &ValueField, t: f64, p: &NetworkPoint, l: f64) -> Result<f64> {
    field.eval(t, p, l)
}

/// Grid-indexed maximizing controls: a ray-control index per ray node and a
/// vertex-control index per `(k, n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackPolicy {
    pub(crate) grid: Grid,
    pub(crate) controls: ControlSets,
    pub(crate) rays: Vec<u16>,
    pub(crate) vertex: Vec<u16>,
}

impl FeedbackPolicy {
    pub(crate) fn zeros(grid: Grid, controls: ControlSets) -> Self {
        FeedbackPolicy {
            grid,
            controls,
            rays: vec![0; ray_len(&grid)],
            vertex: vec![0; grid.time_slices() * grid.n_l],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn controls(&self) -> &ControlSets {
        &self.controls
    }

    /// Ray-control grid index at node `(i, k, m, n)`; the vertex column
    /// reports the first interior node.
    pub fn ray_index(&self, i: usize, k: usize, m: usize, n: usize) -> usize {
        self.rays[ray_offset(&self.grid, k, i, n, m.max(1))] as usize
    }

    pub fn vertex_index(&self, k: usize, n: usize) -> usize {
        self.vertex[vertex_offset(&self.grid, k, n)] as usize
    }

    #[inline]
    fn nearest(&self, t: f64, x: f64, l: f64) -> (usize, usize, usize) {
        let g = &self.grid;
        let k = nearest(t / g.dt, g.n_t);
        let m = nearest(x / g.dx, g.n_x - 1);
        let n = if g.n_l > 1 { nearest(l / g.dl, g.n_l - 1) } else { 0 };
        (k, m, n)
    }
}

#[inline]
fn nearest(s: f64, last: usize) -> usize {
    if !(s > 0.0) {
        return 0;
    }
    (s.round() as usize).min(last)
}

impl Policy for FeedbackPolicy {
    #[inline]
    fn ray_control(&self, ray: usize, t: f64, x: f64, l: f64) -> f64 {
        let (k, m, n) = self.nearest(t, x, l);
        self.controls.ray_points(ray)[self.ray_index(ray, k, m, n)]
    }

    #[inline]
    fn vertex_control(&self, t: f64, l: f64) -> &[f64] {
        let (k, _, n) = self.nearest(t, 0.0, l);
        &self.controls.vertex_points()[self.vertex_index(k, n)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::RayIndex;

    fn linear_field() -> ValueField {
        let grid = Grid::from_parts(2, 1.0, 4, 5, 2.0, 3, 1.0).unwrap();
        let mut f = ValueField::zeros(grid);
        for k in 0..=4 {
            for n in 0..3 {
                for i in 0..2 {
                    for m in 0..5 {
                        let x = grid.space(m);
                        f.set(i, k, m, n, 3.0 * x + 0.5 * grid.local_time(n) + grid.time(k));
                    }
                }
            }
        }
        f
    }

    #[test]
    fn exact_at_nodes_and_multilinear() {
        let f = linear_field();
        let g = *f.grid();
        let r2 = RayIndex::new(2, 2).unwrap();
        let p = NetworkPoint::new(g.space(3), r2).unwrap();
        assert_eq!(f.eval(g.time(2), &p, g.local_time(1)).unwrap(), f.value(1, 2, 3, 1));
        let mid = NetworkPoint::new(0.5 * (g.space(1) + g.space(2)), r2).unwrap();
        let a = f.value(1, 2, 1, 1);
        let b = f.value(1, 2, 2, 1);
        assert!((f.eval(g.time(2), &mid, g.local_time(1)).unwrap() - 0.5 * (a + b)).abs() < 1e-14);
        let v1 = f
            .eval(0.3, &NetworkPoint::new(0.0, RayIndex::FIRST).unwrap(), 0.2)
            .unwrap();
        let v2 = f.eval(0.3, &NetworkPoint::new(0.0, r2).unwrap(), 0.2).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn out_of_domain() {
        let f = linear_field();
        let p = NetworkPoint::new(2.5, RayIndex::FIRST).unwrap();
        assert!(matches!(f.eval(0.0, &p, 0.0), Err(Error::OutOfDomain(_))));
        let p = NetworkPoint::new(1.0, RayIndex::FIRST).unwrap();
        assert!(f.eval(1.5, &p, 0.0).is_err());
        assert!(f.eval(0.5, &p, 1.5).is_err());
        assert!(f.eval(0.5, &p, 1.0).is_ok());
    }
}
