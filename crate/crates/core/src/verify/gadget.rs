//! Vertex test functions built from two-point boundary-value problems.
//!
//! For each ray and each local-time level `l` in `[l* - kappa, l* + kappa]`
//! the super case solves on `(0, eps)`
//!
//! `(2 lambda / sigma_up^2) phi - phi'' + 2 rho_up + 2 (|b| |phi'| + e^{lambda T} |h|) / sigma_lo^2 = -eta`
//!
//! with `phi(0, l) = u_up(0) + S_up (l - l*)` and
//! `phi_i(eps, l) = u_lo_i(eps) - gamma + S_up (l - l*)`. The sub case flips
//! the sign of the gradient and source term, uses `rho_lo`, the right-hand
//! side `+eta`, the boundary data `v_lo(0) - S_lo (l - l*)` and
//! `v_up_i(eps) + gamma - S_lo (l - l*)`.
//!
//! The equation is discretized by central differences on a grid fine enough
//! for an M-matrix, and the `|phi'|` term is resolved by iterating on the
//! sign pattern of the discrete gradient (policy iteration).

use crate::error::{Error, Result};

pub const MAX_SIGN_ITERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GadgetCase {
    Super,
    Sub,
}

/// Data bounds entering the gadget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GadgetBounds {
    pub sigma_upper: f64,
    pub sigma_lower: f64,
    pub drift: f64,
    pub cost: f64,
    pub spin_upper: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GadgetParams {
    pub lambda: f64,
    pub epsilon: f64,
    pub kappa: f64,
    pub eta: f64,
    pub gamma: f64,
    /// Vertex scaling level `Theta`.
    pub theta: f64,
    pub l_star: f64,
    /// `u_up(0)`
    pub u_vertex: f64,
    /// `u_lo_i(eps)`, one per ray.
    pub u_edge: Vec<f64>,
    /// `v_lo(0)`
    pub v_vertex: f64,
    /// `v_up_i(eps)`, one per ray.
    pub v_edge: Vec<f64>,
    pub s_up: f64,
    pub s_lo: f64,
    /// Interior collocation intervals on `(0, eps)`; refined if needed.
    pub intervals: usize,
    /// Number of local-time levels sampled in `[l* - kappa, l* + kappa]`.
    pub levels: usize,
}

impl GadgetParams {
    fn check(&self) -> Result<()> {
        let pos = [
            ("lambda", self.lambda),
            ("epsilon", self.epsilon),
            ("kappa", self.kappa),
            ("eta", self.eta),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "gadget parameter {name} must be positive, got {v}"
                )));
            }
        }
        if !(self.gamma >= 0.0) || !(self.s_up >= 0.0) || !(self.s_lo >= 0.0) {
            return Err(Error::InvalidInput("gamma and the slopes must be non-negative".into()));
        }
        if self.u_edge.len() < 2 || self.u_edge.len() != self.v_edge.len() {
            return Err(Error::InvalidInput(
                "edge data need one value per ray (at least 2)".into(),
            ));
        }
        if self.intervals < 2 || self.levels < 2 {
            return Err(Error::InvalidInput(
                "gadget needs at least 2 intervals and 2 levels".into(),
            ));
        }
        Ok(())
    }

    pub fn ray_count(&self) -> usize {
        self.u_edge.len()
    }

    /// `rho_up = lambda Theta (1/sigma_lo^2 if Theta > 0 else 1/sigma_up^2)`.
    pub fn rho_up(&self, b: &GadgetBounds) -> f64 {
        let w = if self.theta > 0.0 { b.sigma_lower } else { b.sigma_upper };
        self.lambda * self.theta / (w * w)
    }

    /// `rho_lo = lambda Theta (1/sigma_lo^2 if Theta <= 0 else 1/sigma_up^2)`.
    pub fn rho_lo(&self, b: &GadgetBounds) -> f64 {
        let w = if self.theta <= 0.0 {
            b.sigma_lower
        } else {
            b.sigma_upper
        };
        self.lambda * self.theta / (w * w)
    }

    pub fn levels_values(&self) -> Vec<f64> {
        let n = self.levels;
        (0..n)
            .map(|j| {
                if j == n - 1 {
                    self.l_star + self.kappa
                } else {
                    self.l_star - self.kappa + 2.0 * self.kappa * j as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    fn slope(&self, case: GadgetCase) -> f64 {
        match case {
            GadgetCase::Super => self.s_up,
            GadgetCase::Sub => -self.s_lo,
        }
    }

    /// Boundary values `(phi(0, l), phi_i(eps, l))`.
    pub fn boundary(&self, case: GadgetCase, ray: usize, l: f64) -> (f64, f64) {
        let shift = self.slope(case) * (l - self.l_star);
        match case {
            GadgetCase::Super => (self.u_vertex + shift, self.u_edge[ray] - self.gamma + shift),
            GadgetCase::Sub => (self.v_vertex + shift, self.v_edge[ray] + self.gamma + shift),
        }
    }
}

/// Discrete test function `phi_i(x_j, l_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeTestFunction {
    pub case: GadgetCase,
    pub x: Vec<f64>,
    pub levels: Vec<f64>,
    /// `values[ray][n][j]`
    pub values: Vec<Vec<Vec<f64>>>,
    /// One-sided second-order `d_x phi_i(0, l_n)`, `[ray][n]`.
    pub dx_at_vertex: Vec<Vec<f64>>,
    /// `d_l phi(0, l)` between consecutive levels.
    pub dl_at_vertex: Vec<f64>,
    /// Largest `|phi'|` over all rays, levels and grid points.
    pub max_gradient: f64,
    /// Max-norm of the discrete residual at interior nodes.
    pub residual: f64,
    /// Largest number of sign-pattern iterations used.
    pub iterations: usize,
}

/// Thomas algorithm for `a_j y_{j-1} + b_j y_j + c_j y_{j+1} = d_j`.
fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for j in 1..n {
        let m = b[j] - a[j] * cp[j - 1];
        cp[j] = c[j] / m;
        dp[j] = (d[j] - a[j] * dp[j - 1]) / m;
    }
    let mut y = vec![0.0; n];
    y[n - 1] = dp[n - 1];
    for j in (0..n - 1).rev() {
        y[j] = dp[j] - cp[j] * y[j + 1];
    }
    y
}

struct Coefficients {
    zero_order: f64,
    gradient: f64,
    source: f64,
}

fn coefficients(params: &GadgetParams, bounds: &GadgetBounds, case: GadgetCase) -> Coefficients {
    let s2lo = bounds.sigma_lower * bounds.sigma_lower;
    let s2up = bounds.sigma_upper * bounds.sigma_upper;
    let growth = (params.lambda * bounds.horizon).exp() * bounds.cost;
    match case {
        // L phi + c |phi'| = -eta - 2 rho_up - 2 e^{lambda T}|h| / sigma_lo^2
        GadgetCase::Super => Coefficients {
            zero_order: 2.0 * params.lambda / s2up,
            gradient: 2.0 * bounds.drift / s2lo,
            source: -params.eta - 2.0 * params.rho_up(bounds) - 2.0 * growth / s2lo,
        },
        // L phi - c |phi'| = eta - 2 rho_lo + 2 e^{lambda T}|h| / sigma_lo^2
        GadgetCase::Sub => Coefficients {
            zero_order: 2.0 * params.lambda / s2up,
            gradient: -2.0 * bounds.drift / s2lo,
            source: params.eta - 2.0 * params.rho_lo(bounds) + 2.0 * growth / s2lo,
        },
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Solves one boundary-value problem; returns the nodal values, the residual
/// max-norm and the number of sign iterations.
fn solve_one(co: &Coefficients, dx: f64, n: usize, left: f64, right: f64) -> Result<(Vec<f64>, f64, usize)> {
    let inner = n - 1;
    let idx2 = 1.0 / (dx * dx);
    let half = 0.5 / dx;
    let mut signs = vec![0.0f64; inner];
    let mut phi = vec![0.0; n + 1];
    phi[0] = left;
    phi[n] = right;
    let mut a = vec![0.0; inner];
    let mut b = vec![0.0; inner];
    let mut c = vec![0.0; inner];
    let mut d = vec![0.0; inner];
    for iter in 1..=MAX_SIGN_ITERATIONS {
        for j in 0..inner {
            let g = co.gradient * signs[j] * half;
            a[j] = -idx2 - g;
            b[j] = co.zero_order + 2.0 * idx2;
            c[j] = -idx2 + g;
            d[j] = co.source;
        }
        d[0] -= a[0] * left;
        d[inner - 1] -= c[inner - 1] * right;
        let y = thomas(&a, &b, &c, &d);
        phi[1..n].copy_from_slice(&y);
        let mut changed = false;
        for j in 0..inner {
            let s = sign(phi[j + 2] - phi[j]);
            if s != signs[j] {
                signs[j] = s;
                changed = true;
            }
        }
        if !changed {
            let residual = residual_norm(co, &phi, dx);
            return Ok((phi, residual, iter));
        }
    }
    Err(Error::NoConvergence(MAX_SIGN_ITERATIONS))
}

/// Max-norm of `zero_order phi - phi'' + gradient |phi'| - source` at the
/// interior nodes, with central differences.
fn residual_norm(co: &Coefficients, phi: &[f64], dx: f64) -> f64 {
    let mut worst = 0.0f64;
    for j in 1..phi.len() - 1 {
        let second = (phi[j + 1] - 2.0 * phi[j] + phi[j - 1]) / (dx * dx);
        let first = (phi[j + 1] - phi[j - 1]) / (2.0 * dx);
        let r = co.zero_order * phi[j] - second + co.gradient * first.abs() - co.source;
        worst = worst.max(r.abs());
    }
    worst
}

pub fn solve_ode_gadget(params: &GadgetParams, bounds: &GadgetBounds, case: GadgetCase) -> Result<OdeTestFunction> {
    params.check()?;
    if !(bounds.sigma_lower > 0.0) || bounds.sigma_lower > bounds.sigma_upper || bounds.drift < 0.0 || bounds.cost < 0.0
    {
        return Err(Error::InvalidInput("inconsistent gadget bounds".into()));
    }
    let co = coefficients(params, bounds, case);
    // Off-diagonal signs of an M-matrix need |gradient| dx <= 2.
    let mut n = params.intervals;
    let c = co.gradient.abs();
    if c * params.epsilon / n as f64 > 1.0 {
        n = (c * params.epsilon).ceil() as usize + 1;
    }
    let dx = params.epsilon / n as f64;
    let x: Vec<f64> = (0..=n)
        .map(|j| if j == n { params.epsilon } else { j as f64 * dx })
        .collect();
    let levels = params.levels_values();
    let rays = params.ray_count();
    let mut values = vec![Vec::with_capacity(levels.len()); rays];
    let mut dx_at_vertex = vec![Vec::with_capacity(levels.len()); rays];
    let mut residual = 0.0f64;
    let mut iterations = 0;
    let mut max_gradient = 0.0f64;
    for (i, (vals, d0)) in values.iter_mut().zip(dx_at_vertex.iter_mut()).enumerate() {
        for &l in &levels {
            let (left, right) = params.boundary(case, i, l);
            let (phi, r, it) = solve_one(&co, dx, n, left, right)?;
            residual = residual.max(r);
            iterations = iterations.max(it);
            d0.push((-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * dx));
            max_gradient = max_gradient.max(gradient_max(&phi, dx));
            vals.push(phi);
        }
    }
    let dl_at_vertex = levels
        .windows(2)
        .enumerate()
        .map(|(n, w)| (values[0][n + 1][0] - values[0][n][0]) / (w[1] - w[0]))
        .collect();
    Ok(OdeTestFunction {
        case,
        x,
        levels,
        values,
        dx_at_vertex,
        dl_at_vertex,
        max_gradient,
        residual,
        iterations,
    })
}

fn gradient_max(phi: &[f64], dx: f64) -> f64 {
    let n = phi.len() - 1;
    let mut g = ((-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * dx))
        .abs()
        .max(((3.0 * phi[n] - 4.0 * phi[n - 1] + phi[n - 2]) / (2.0 * dx)).abs());
    for j in 1..n {
        g = g.max(((phi[j + 1] - phi[j - 1]) / (2.0 * dx)).abs());
    }
    g
}

/// Lower bound on the local-time slope that absorbs the Kirchhoff error:
/// `eps I zeta_up (|rho| + eta + (|b| max|phi'| + e^{lambda T}|h|) / sigma_lo)`.
pub fn slope_lower_bound(params: &GadgetParams, bounds: &GadgetBounds, case: GadgetCase, max_gradient: f64) -> f64 {
    let rho = match case {
        GadgetCase::Super => params.rho_up(bounds),
        GadgetCase::Sub => params.rho_lo(bounds),
    };
    let growth = (params.lambda * bounds.horizon).exp() * bounds.cost;
    params.epsilon
        * params.ray_count() as f64
        * bounds.spin_upper
        * (rho.abs() + params.eta + (bounds.drift * max_gradient + growth) / bounds.sigma_lower)
}

/// Chooses the slope of `case` as `margin` times the lower bound, re-solving
/// until the bound computed from the resulting test function holds.
pub fn calibrate_slope(
    params: &GadgetParams,
    bounds: &GadgetBounds,
    case: GadgetCase,
    margin: f64,
) -> Result<(GadgetParams, OdeTestFunction)> {
    let mut p = params.clone();
    for _ in 0..MAX_SIGN_ITERATIONS {
        let sol = solve_ode_gadget(&p, bounds, case)?;
        let need = slope_lower_bound(&p, bounds, case, sol.max_gradient);
        let have = match case {
            GadgetCase::Super => p.s_up,
            GadgetCase::Sub => p.s_lo,
        };
        if have >= need {
            return Ok((p, sol));
        }
        match case {
            GadgetCase::Super => p.s_up = margin * need,
            GadgetCase::Sub => p.s_lo = margin * need,
        }
    }
    Err(Error::NoConvergence(MAX_SIGN_ITERATIONS))
}

/// Deterministic sweep of `count` parameter settings with calibrated
/// slopes, spread over a low-discrepancy sequence.
pub fn gadget_sweep(count: usize) -> Result<Vec<(GadgetParams, GadgetBounds)>> {
    const STEPS: [f64; 12] = [
        std::f64::consts::SQRT_2,
        1.732_050_807_568_877,
        2.236_067_977_499_79,
        2.645_751_311_064_591,
        3.316_624_790_355_4,
        3.605_551_275_463_989,
        4.123_105_625_617_661,
        4.358_898_943_540_674,
        4.795_831_523_312_719,
        5.385_164_807_134_504,
        5.567_764_362_830_022,
        6.082_762_530_298_219,
    ];
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        let u = |k: usize| ((j as f64 + 0.5) * STEPS[k]).fract();
        let lerp = |k: usize, lo: f64, hi: f64| lo + (hi - lo) * u(k);
        let rays = 2 + j % 3;
        let sigma_lower = lerp(0, 0.3, 1.0);
        let bounds = GadgetBounds {
            sigma_lower,
            sigma_upper: sigma_lower + lerp(1, 0.0, 1.5),
            drift: lerp(2, 0.0, 2.0),
            cost: lerp(3, 0.0, 0.5),
            spin_upper: lerp(4, 0.5, 1.0),
            horizon: lerp(5, 0.5, 1.0),
        };
        let edge = |k: usize, shift: f64| -> Vec<f64> {
            (0..rays)
                .map(|r| ((j + r) as f64 * STEPS[k] + shift).fract() - 0.5)
                .collect()
        };
        let params = GadgetParams {
            lambda: lerp(6, 0.2, 2.0),
            epsilon: lerp(7, 0.05, 0.25),
            kappa: lerp(8, 0.01, 0.1),
            eta: lerp(9, 0.01, 0.5),
            gamma: lerp(10, 0.0, 0.1),
            theta: lerp(11, -1.0, 1.0),
            l_star: 0.5 + 0.1 * j as f64,
            u_vertex: u(3) - 0.5,
            u_edge: edge(4, 0.1),
            v_vertex: u(5) - 0.5,
            v_edge: edge(6, 0.3),
            s_up: 0.0,
            s_lo: 0.0,
            intervals: 64,
            levels: 5,
        };
        let (params, _) = calibrate_slope(&params, &bounds, GadgetCase::Super, 1.25)?;
        let (params, _) = calibrate_slope(&params, &bounds, GadgetCase::Sub, 1.25)?;
        out.push((params, bounds));
    }
    Ok(out)
}
