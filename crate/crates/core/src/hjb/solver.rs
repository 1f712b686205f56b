//! Explicit monotone backward marching for the HJB system on the star
//! network.
//!
//! One backward step `k + 1 -> k`:
//! 1. every ray-interior node is updated from slice `k + 1` with the ray
//!    Hamiltonian (central second difference, upwinded first difference);
//!    rows `(ray, l)` are independent and run in parallel;
//! 2. the vertex is updated per `l` from `l_max` downward with the discrete
//!    Kirchhoff relation, using the freshly updated first interior nodes;
//! 3. the outer node `x_max` is closed by linear extrapolation.

use rayon::prelude::*;

use super::field::{ray_offset, vertex_offset};
use super::{FeedbackPolicy, Grid, ValueField};
use crate::error::{Error, Result};
use crate::model::{self, ray_hamiltonian_upwind, ControlSets, ProblemData, MAX_RAYS};
use crate::network::NetworkPoint;

/// Discrete Kirchhoff update at one vertex node.
///
/// With one-sided differences for `d_x u_i(t, 0, l)` and `d_l u(t, 0, l)` the
/// unknown vertex value enters with a control-independent coefficient, so
///
/// `u(t,0,l) = [u(t,0,l+dl)/dl + sup_theta {sum_i S_i u_i(t,dx,l)/dx + h_0}] / (1/dl + 1/dx)`.
///
/// `next_l = None` marks the top of the local-time axis, closed with
/// `d_l u = 0`: `u(t,0,l_max) = sup_theta {sum_i S_i u_i(t,dx,l_max) + dx h_0}`.
/// Returns the vertex value and the maximizing vertex-control index.
#[allow(clippy::too_many_arguments)]
pub fn vertex_update(
    next_l: Option<f64>,
    neighbors: &[f64],
    t: f64,
    l: f64,
    data: &ProblemData,
    controls: &ControlSets,
    dx: f64,
    dl: f64,
) -> Result<(f64, usize)> {
    // sup_theta {sum S_i u_i + dx h_0} = dx * sup_theta {sum S_i u_i / dx + h_0}
    let a = model::kirchhoff_sup(data, controls, t, l, neighbors, dx)?;
    let value = match next_l {
        None => a.value,
        Some(next) => {
            if !(dl > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "local-time step must be positive, got {dl}"
                )));
            }
            a.value + (next - a.value) * (dx / (dx + dl))
        }
    };
    Ok((value, a.index))
}

fn check_inputs(data: &ProblemData, controls: &ControlSets, grid: &Grid) -> Result<()> {
    if grid.ray_count != data.ray_count() {
        return Err(Error::Config(format!(
            "grid has {} rays, problem data {}",
            grid.ray_count,
            data.ray_count()
        )));
    }
    if (grid.horizon - data.horizon()).abs() > 1e-12 * data.horizon() {
        return Err(Error::Config("grid horizon differs from the problem horizon".into()));
    }
    data.check_controls(controls)?;
    if controls.max_ray_count() > u16::MAX as usize || controls.vertex_points().len() > u16::MAX as usize {
        return Err(Error::Config("control grids are limited to 65535 points".into()));
    }
    Ok(())
}

/// Solves the full system on `[0, T] x N x [0, l_max]`.
pub fn solve_backward(data: &ProblemData, controls: &ControlSets, grid: &Grid) -> Result<(ValueField, FeedbackPolicy)> {
    check_inputs(data, controls, grid)?;
    if grid.n_l < 2 {
        return Err(Error::Config("solve_backward needs at least 2 local-time nodes".into()));
    }
    march(data, controls, grid)
}

/// Solves the local-time-free system: the vertex relation reduces to
/// `u(t,0) = sup_theta {sum_i S_i u_i(t,dx) + dx h_0}`. The returned field
/// has a single local-time node.
pub fn solve_no_localtime(
    data: &ProblemData,
    controls: &ControlSets,
    grid: &Grid,
) -> Result<(ValueField, FeedbackPolicy)> {
    check_inputs(data, controls, grid)?;
    ensure_local_time_free(data, controls, grid)?;
    march(data, controls, &grid.collapsed())
}

/// Rejects data whose evaluations change with the local-time argument.
pub fn ensure_local_time_free(data: &ProblemData, controls: &ControlSets, grid: &Grid) -> Result<()> {
    const LEVELS: [f64; 5] = [0.37, 1.1, 2.9, 7.3, 19.0];
    let ts: Vec<f64> = (0..5).map(|k| data.horizon() * k as f64 / 4.0).collect();
    let xs: Vec<f64> = (0..5).map(|k| grid.x_max * k as f64 / 4.0).collect();
    let misuse = |what: &str, l: f64| {
        Err(Error::Config(format!(
            "{what} depends on the local time (differs at l = {l}); use solve_backward"
        )))
    };
    for i in 0..data.ray_count() {
        for &beta in controls.ray_points(i) {
            for &t in &ts {
                for &x in &xs {
                    let base = (
                        data.sigma(i, t, x, 0.0, beta),
                        data.drift(i, t, x, 0.0, beta),
                        data.cost(i, t, x, 0.0, beta),
                        data.terminal(i, x, 0.0),
                    );
                    for &l in &LEVELS {
                        let v = (
                            data.sigma(i, t, x, l, beta),
                            data.drift(i, t, x, l, beta),
                            data.cost(i, t, x, l, beta),
                            data.terminal(i, x, l),
                        );
                        if v != base {
                            return misuse("ray data", l);
                        }
                    }
                }
            }
        }
    }
    let n = data.ray_count();
    let mut w0 = [0.0; MAX_RAYS];
    let mut w = [0.0; MAX_RAYS];
    for theta in controls.vertex_points() {
        for &t in &ts {
            data.spin_into(t, 0.0, theta, &mut w0[..n]);
            let h0 = data.vertex_cost(t, 0.0, theta);
            for &l in &LEVELS {
                data.spin_into(t, l, theta, &mut w[..n]);
                if w[..n] != w0[..n] || data.vertex_cost(t, l, theta) != h0 {
                    return misuse("vertex data", l);
                }
            }
        }
    }
    Ok(())
}

fn march(data: &ProblemData, controls: &ControlSets, grid: &Grid) -> Result<(ValueField, FeedbackPolicy)> {
    let g = *grid;
    let mut field = ValueField::zeros(g);
    let mut policy = FeedbackPolicy::zeros(g, controls.clone());
    let ray_count = g.ray_count;
    let n_l = g.n_l;
    let row = g.n_x - 1;
    let slice = ray_count * n_l * row;

    // Terminal slice.
    for n in 0..n_l {
        let l = g.local_time(n);
        let v0 = model::terminal_payoff(data, &NetworkPoint::vertex(), l)?;
        field.vertex[vertex_offset(&g, g.n_t, n)] = v0;
        for i in 0..ray_count {
            for m in 1..g.n_x {
                field.rays[ray_offset(&g, g.n_t, i, n, m)] = data.terminal(i, g.space(m), l);
            }
        }
    }
    check_slice(&field, g.n_t, "terminal condition")?;

    let cost_bound = data.bounds().cost;
    let mut prev_max = slice_max(&field, g.n_t, true);
    let mut neighbors = [0.0f64; MAX_RAYS];

    for k in (0..g.n_t).rev() {
        let t = g.time(k);
        {
            let (head, tail) = field.rays.split_at_mut((k + 1) * slice);
            let cur = &mut head[k * slice..];
            let prev = &tail[..slice];
            let prev_vertex = &field.vertex[(k + 1) * n_l..(k + 2) * n_l];
            let ctl = &mut policy.rays[k * slice..(k + 1) * slice];
            cur.par_chunks_mut(row)
                .zip(ctl.par_chunks_mut(row))
                .enumerate()
                .for_each(|(r, (out, ctl_row))| {
                    let i = r / n_l;
                    let n = r % n_l;
                    let l = g.local_time(n);
                    let src = &prev[r * row..(r + 1) * row];
                    let points = controls.ray_points(i);
                    let inv_dx = 1.0 / g.dx;
                    let inv_dx2 = inv_dx * inv_dx;
                    for m in 1..row {
                        let u = src[m - 1];
                        let left = if m == 1 { prev_vertex[n] } else { src[m - 2] };
                        let right = src[m];
                        let second = (right - 2.0 * u + left) * inv_dx2;
                        let forward = (right - u) * inv_dx;
                        let backward = (u - left) * inv_dx;
                        let a = ray_hamiltonian_upwind(data, points, i, t, g.space(m), l, forward, backward, second);
                        out[m - 1] = u + g.dt * a.value;
                        ctl_row[m - 1] = a.index as u16;
                    }
                });
        }

        // Vertex sweep from l_max downward.
        for n in (0..n_l).rev() {
            let l = g.local_time(n);
            for (i, slot) in neighbors[..ray_count].iter_mut().enumerate() {
                *slot = field.rays[ray_offset(&g, k, i, n, 1)];
            }
            let next = if n + 1 < n_l {
                Some(field.vertex[vertex_offset(&g, k, n + 1)])
            } else {
                None
            };
            let (v, theta) = vertex_update(next, &neighbors[..ray_count], t, l, data, controls, g.dx, g.dl)?;
            field.vertex[vertex_offset(&g, k, n)] = v;
            policy.vertex[vertex_offset(&g, k, n)] = theta as u16;
        }

        // Outer closure: zero second difference at x_max.
        for i in 0..ray_count {
            for n in 0..n_l {
                let last = ray_offset(&g, k, i, n, g.n_x - 1);
                let u1 = field.rays[last - 1];
                let u2 = if g.n_x == 3 {
                    field.vertex[vertex_offset(&g, k, n)]
                } else {
                    field.rays[last - 2]
                };
                field.rays[last] = 2.0 * u1 - u2;
                policy.rays[last] = policy.rays[last - 1];
            }
        }

        check_slice(&field, k, "backward marching")?;
        // Discrete maximum principle: interior and vertex nodes are convex
        // combinations of the previous slice plus the running rewards.
        let cur_max = slice_max(&field, k, false);
        let bound = prev_max + g.dt * cost_bound + g.dx * cost_bound;
        if cur_max > bound * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::numerical(
                "backward marching",
                format!("a priori bound violated at t = {t}: max |u| = {cur_max} > {bound}"),
            ));
        }
        prev_max = slice_max(&field, k, true);
    }

    // The last slice has no step of its own; reuse the controls of the step before.
    let (head, tail) = policy.rays.split_at_mut(g.n_t * slice);
    tail.copy_from_slice(&head[(g.n_t - 1) * slice..]);
    let (head, tail) = policy.vertex.split_at_mut(g.n_t * n_l);
    tail.copy_from_slice(&head[(g.n_t - 1) * n_l..]);

    Ok((field, policy))
}

fn slice_max(field: &ValueField, k: usize, include_outer: bool) -> f64 {
    let g = &field.grid;
    let mut best = 0.0f64;
    for n in 0..g.n_l {
        best = best.max(field.vertex[vertex_offset(g, k, n)].abs());
        for i in 0..g.ray_count {
            let start = ray_offset(g, k, i, n, 1);
            let end = if include_outer {
                start + g.n_x - 1
            } else {
                start + g.n_x - 2
            };
            for v in &field.rays[start..end] {
                best = best.max(v.abs());
            }
        }
    }
    best
}

fn check_slice(field: &ValueField, k: usize, stage: &'static str) -> Result<()> {
    let g = &field.grid;
    for n in 0..g.n_l {
        for i in 0..g.ray_count {
            for m in 0..g.n_x {
                let v = field.value(i, k, m, n);
                if !v.is_finite() {
                    return Err(Error::numerical(
                        stage,
                        format!(
                            "non-finite value {v} at ray {}, t = {}, x = {}, l = {} (indices k={k}, m={m}, n={n})",
                            i + 1,
                            g.time(k),
                            g.space(m),
                            g.local_time(n)
                        ),
                    ));
                }
            }
        }
    }
    Ok(())
}
