use crate::error::{Error, Result};
use crate::model::ProblemData;
use crate::network::StarNetwork;

/// Uniform discretization of `[0, T] x N x [0, l_max]`.
///
/// Space nodes `m = 0..n_x` sit at `m * dx` with `m = 0` the shared vertex;
/// time nodes `k = 0..=n_t` at `k * dt`; local-time nodes `n = 0..n_l` at
/// `n * dl`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub ray_count: usize,
    pub horizon: f64,
    pub n_t: usize,
    pub dt: f64,
    pub n_x: usize,
    pub dx: f64,
    pub x_max: f64,
    pub n_l: usize,
    pub dl: f64,
    pub l_max: f64,
}

/// Largest explicit time step keeping the upwind scheme monotone.
pub fn cfl_limit(dx: f64, sigma_upper: f64, drift_bound: f64) -> f64 {
    dx * dx / (sigma_upper * sigma_upper + drift_bound * dx)
}

impl Grid {
    /// Rebuilds a grid from its defining integers and extents; every derived
    /// step is recomputed the same way as in [`build_grid`].
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        ray_count: usize,
        horizon: f64,
        n_t: usize,
        n_x: usize,
        x_max: f64,
        n_l: usize,
        l_max: f64,
    ) -> Result<Self> {
        if ray_count < 2 {
            return Err(Error::Config(format!("grid needs at least 2 rays, got {ray_count}")));
        }
        if n_t < 1 || n_x < 3 || n_l < 1 {
            return Err(Error::Config(format!(
                "degenerate grid: n_t={n_t}, n_x={n_x}, n_l={n_l}"
            )));
        }
        if !(horizon > 0.0) || !(x_max > 0.0) || !(l_max >= 0.0) || (n_l > 1 && !(l_max > 0.0)) {
            return Err(Error::Config(format!(
                "grid extents must be positive: T={horizon}, x_max={x_max}, l_max={l_max}"
            )));
        }
        let dl = if n_l > 1 { l_max / (n_l - 1) as f64 } else { 0.0 };
        Ok(Grid {
            ray_count,
            horizon,
            n_t,
            dt: horizon / n_t as f64,
            n_x,
            dx: x_max / (n_x - 1) as f64,
            x_max,
            n_l,
            dl,
            l_max,
        })
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_t {
            self.horizon
        } else {
            k as f64 * self.dt
        }
    }

    pub fn space(&self, m: usize) -> f64 {
        if m == self.n_x - 1 {
            self.x_max
        } else {
            m as f64 * self.dx
        }
    }

    pub fn local_time(&self, n: usize) -> f64 {
        if self.n_l > 1 && n == self.n_l - 1 {
            self.l_max
        } else {
            n as f64 * self.dl
        }
    }

    /// The same space-time grid with the local-time axis reduced to `l = 0`.
    pub fn collapsed(&self) -> Grid {
        Grid {
            n_l: 1,
            dl: 0.0,
            l_max: 0.0,
            ..*self
        }
    }

    pub fn time_slices(&self) -> usize {
        self.n_t + 1
    }
}

/// Builds the grid with the time step chosen from the monotonicity bound
/// `dt <= safety * dx^2 / (sigma_upper^2 + |b| dx)`.
pub fn build_grid(
    network: &StarNetwork,
    data: &ProblemData,
    n_x: usize,
    n_l: usize,
    l_max: f64,
    safety: f64,
) -> Result<Grid> {
    if network.ray_count() != data.ray_count() {
        return Err(Error::Config(format!(
            "network has {} rays, problem data {}",
            network.ray_count(),
            data.ray_count()
        )));
    }
    if n_x < 3 || n_l < 2 {
        return Err(Error::Config(format!(
            "need n_x >= 3 and n_l >= 2, got {n_x} and {n_l}"
        )));
    }
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::Config(format!("safety factor must be in (0, 1], got {safety}")));
    }
    if !(l_max > 0.0) {
        return Err(Error::Config(format!("l_max must be positive, got {l_max}")));
    }
    let dx = network.truncation_radius() / (n_x - 1) as f64;
    let b = data.bounds();
    let limit = safety * cfl_limit(dx, b.sigma_upper, b.drift);
    if !(limit > 0.0) || !limit.is_finite() {
        return Err(Error::Config(format!("non-positive time-step bound {limit}")));
    }
    let n_t = (data.horizon() / limit).ceil().max(1.0) as usize;
    Grid::from_parts(
        data.ray_count(),
        data.horizon(),
        n_t,
        n_x,
        network.truncation_radius(),
        n_l,
        l_max,
    )
}
