//! Statistical and deterministic verification checks.

use crate::error::{Error, Result};
use crate::hjb::{solve_backward, solve_no_localtime, FeedbackPolicy, Grid, ValueField};
use crate::model::{ControlSets, ProblemData, TerminalPayoff, MAX_RAYS};
use crate::network::NetworkPoint;
use crate::simulate::{drive, estimate_value, mean_and_se, par_paths, Flow, PathRng, PathState, Policy, SimConfig};

use super::gadget::{slope_lower_bound, solve_ode_gadget, GadgetBounds, GadgetCase, GadgetParams};
use super::report::{CheckReport, Statistic};

/// Largest censored fraction tolerated by the hitting-time checks.
pub const CENSORING_LIMIT: f64 = 0.01;

/// Number of standard errors allowed for Monte Carlo noise.
pub const SE_FACTOR: f64 = 3.0;

/// A state `(t, p, l)` at which the value function is probed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub t: f64,
    pub point: NetworkPoint,
    pub l: f64,
}

impl Probe {
    pub fn new(t: f64, point: NetworkPoint, l: f64) -> Self {
        Probe { t, point, l }
    }

    fn init(&self) -> (f64, NetworkPoint, f64) {
        (self.t, self.point, self.l)
    }
}

fn vertex_start(t: f64, l: f64) -> PathState {
    PathState::start(t, &NetworkPoint::vertex(), l)
}

/// Sorts a ladder in decreasing order and rejects non-positive entries.
fn ladder(values: &[f64], what: &str) -> Result<Vec<f64>> {
    if values.is_empty() || values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Config(format!("{what} ladder must be non-empty and positive")));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v.dedup();
    Ok(v)
}

/// First-exit rays from the vertex at each radius of the ladder against the
/// spinning weights at `(t0, l0)`.
pub fn check_diffraction_law<P: Policy + ?Sized>(
    data: &ProblemData,
    policy: &P,
    t0: f64,
    l0: f64,
    deltas: &[f64],
    sim: &SimConfig,
) -> Result<CheckReport> {
    let deltas = ladder(deltas, "delta")?;
    let n_rays = data.ray_count();
    let k = deltas.len();
    let hits = par_paths(sim.n_paths, |j| {
        let mut rng = PathRng::for_path(sim.seed, j);
        let mut rays = vec![usize::MAX; k];
        drive(data, policy, vertex_start(t0, l0), sim.dt, &mut rng, |_, next, _| {
            for (slot, &d) in rays.iter_mut().zip(&deltas) {
                if *slot == usize::MAX && next.x >= d {
                    *slot = next.ray.zero_based();
                }
            }
            if rays[0] == usize::MAX {
                Flow::Continue
            } else {
                Flow::Stop
            }
        })?;
        Ok(rays)
    })?;

    let mut target = [0.0f64; MAX_RAYS];
    data.spin_into(t0, l0, policy.vertex_control(t0, l0), &mut target[..n_rays]);
    let target = &target[..n_rays];

    let mut report = CheckReport::new("diffraction");
    report
        .meta("n_paths", sim.n_paths)
        .meta("dt", sim.dt)
        .meta("seed", sim.seed)
        .meta("t0", t0)
        .meta("l0", l0);
    // deviation[d][i] and its standard error
    let mut deviation = vec![vec![0.0; n_rays]; k];
    let mut se = vec![vec![0.0; n_rays]; k];
    for (d, &delta) in deltas.iter().enumerate() {
        let mut counts = vec![0usize; n_rays];
        let mut censored = 0usize;
        for h in &hits {
            match h[d] {
                usize::MAX => censored += 1,
                r => counts[r] += 1,
            }
        }
        let n = (sim.n_paths - censored).max(1) as f64;
        report.push(Statistic::at_most(
            format!("censored[delta={delta}]"),
            censored as f64 / sim.n_paths as f64,
            CENSORING_LIMIT,
        ));
        let smallest = d == k - 1;
        for i in 0..n_rays {
            let freq = counts[i] as f64 / n;
            let s = (target[i] * (1.0 - target[i]) / n).sqrt();
            deviation[d][i] = (freq - target[i]).abs();
            se[d][i] = s;
            let name = format!("freq[delta={delta},ray={}]", i + 1);
            if smallest {
                report.push(Statistic::within(name, freq, target[i], SE_FACTOR * s));
            } else {
                report.push(Statistic::info(name, freq));
            }
        }
    }
    if k > 1 {
        let ok = (0..n_rays)
            .filter(|&i| {
                (1..k).all(|d| {
                    let tol = SE_FACTOR * (se[d][i].powi(2) + se[d - 1][i].powi(2)).sqrt();
                    deviation[d][i] <= deviation[d - 1][i] + tol
                })
            })
            .count();
        report.push(Statistic::at_least(
            "trend_components",
            ok as f64,
            (n_rays / 2 + 1) as f64,
        ));
    }
    Ok(report)
}

/// Mean occupation time of `{x < eps}` and linear scaling in `eps`.
pub fn check_nonstickiness<P: Policy + ?Sized>(
    data: &ProblemData,
    policy: &P,
    start: Probe,
    eps: &[f64],
    sim: &SimConfig,
) -> Result<CheckReport> {
    let eps = ladder(eps, "epsilon")?;
    let k = eps.len();
    let occupation = par_paths(sim.n_paths, |j| {
        let mut rng = PathRng::for_path(sim.seed, j);
        let mut occ = vec![0.0; k];
        drive(
            data,
            policy,
            PathState::start(start.t, &start.point, start.l),
            sim.dt,
            &mut rng,
            |prev, next, _| {
                let dt = next.t - prev.t;
                for (o, &e) in occ.iter_mut().zip(&eps) {
                    if prev.x < e {
                        *o += dt;
                    }
                }
                Flow::Continue
            },
        )?;
        Ok(occ)
    })?;
    let floor = 5.0 * data.bounds().sigma_upper * sim.dt.sqrt();
    let mut report = CheckReport::new("nonstickiness");
    report
        .meta("n_paths", sim.n_paths)
        .meta("dt", sim.dt)
        .meta("seed", sim.seed)
        .meta("resolution_floor", floor);
    let mut scaled = Vec::new();
    for (d, &e) in eps.iter().enumerate() {
        let col: Vec<f64> = occupation.iter().map(|o| o[d]).collect();
        let (m, s) = mean_and_se(&col);
        report.push(Statistic::info(format!("m[eps={e}]"), m));
        report.push(Statistic::info(format!("se[eps={e}]"), s));
        if e >= floor {
            scaled.push(m / e);
        }
    }
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = if scaled.is_empty() {
        f64::NAN
    } else if max == 0.0 {
        1.0
    } else if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    };
    report.push(Statistic::at_least("retained_levels", scaled.len() as f64, 2.0));
    report.push(Statistic::at_most("ratio_max_min", ratio, 2.0));
    Ok(report)
}

/// Settings of the local-time rate check.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeRate {
    pub t_star: f64,
    pub l_star: f64,
    pub radii: Vec<f64>,
    /// Relative tolerance on `r(h) = E[l(tau_h) - l*] / h` around 1.
    pub r_tolerance: f64,
    /// Known limit of `q(h) = E[tau_h - t*] / h^2` and its relative
    /// tolerance; without it only boundedness across the ladder is checked.
    pub q_target: Option<(f64, f64)>,
    /// Bound on `max q / min q` used without a target.
    pub q_ratio_bound: f64,
}

impl LocalTimeRate {
    pub fn new(radii: Vec<f64>) -> Self {
        LocalTimeRate {
            t_star: 0.0,
            l_star: 0.0,
            radii,
            r_tolerance: 0.05,
            q_target: None,
            q_ratio_bound: 2.0,
        }
    }
}

/// Local time and exit time at the first exit from the ball of radius `h`
/// around the vertex.
pub fn check_localtime_rate<P: Policy + ?Sized>(
    data: &ProblemData,
    policy: &P,
    setup: &LocalTimeRate,
    sim: &SimConfig,
) -> Result<CheckReport> {
    let all = ladder(&setup.radii, "radius")?;
    let floor = 5.0 * data.bounds().sigma_upper * sim.dt.sqrt();
    let radii: Vec<f64> = all.iter().copied().filter(|&h| h >= floor).collect();
    let mut report = CheckReport::new("localtime_rate");
    report
        .meta("n_paths", sim.n_paths)
        .meta("dt", sim.dt)
        .meta("seed", sim.seed)
        .meta("resolution_floor", floor)
        .meta("excluded_radii", all.len() - radii.len());
    report.push(Statistic::at_least("retained_radii", radii.len() as f64, 1.0));
    if radii.is_empty() {
        return Ok(report);
    }
    let k = radii.len();
    let (t_star, l_star) = (setup.t_star, setup.l_star);
    let samples = par_paths(sim.n_paths, |j| {
        let mut rng = PathRng::for_path(sim.seed, j);
        let mut out = vec![(f64::NAN, f64::NAN); k];
        drive(
            data,
            policy,
            vertex_start(t_star, l_star),
            sim.dt,
            &mut rng,
            |_, next, _| {
                for (slot, &h) in out.iter_mut().zip(&radii) {
                    if slot.0.is_nan() && next.x >= h {
                        *slot = (next.l - l_star, next.t - t_star);
                    }
                }
                if out[0].0.is_nan() {
                    Flow::Continue
                } else {
                    Flow::Stop
                }
            },
        )?;
        Ok(out)
    })?;
    let mut qs = Vec::with_capacity(k);
    for (d, &h) in radii.iter().enumerate() {
        let hit: Vec<(f64, f64)> = samples.iter().map(|s| s[d]).filter(|s| !s.0.is_nan()).collect();
        let censored = (sim.n_paths - hit.len()) as f64 / sim.n_paths as f64;
        report.push(Statistic::at_most(
            format!("censored[h={h}]"),
            censored,
            CENSORING_LIMIT,
        ));
        let ls: Vec<f64> = hit.iter().map(|s| s.0 / h).collect();
        let ts: Vec<f64> = hit.iter().map(|s| s.1 / (h * h)).collect();
        let (r, r_se) = mean_and_se(&ls);
        let (q, q_se) = mean_and_se(&ts);
        report.push(Statistic::within(
            format!("r[h={h}]"),
            r,
            1.0,
            setup.r_tolerance + SE_FACTOR * r_se,
        ));
        match setup.q_target {
            Some((target, rel)) => {
                report.push(Statistic::within(
                    format!("q[h={h}]"),
                    q,
                    target,
                    rel * target.abs() + SE_FACTOR * q_se,
                ));
            }
            None => {
                report.push(Statistic::info(format!("q[h={h}]"), q));
            }
        }
        qs.push(q);
    }
    if setup.q_target.is_none() {
        let max = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = qs.iter().cloned().fold(f64::INFINITY, f64::min);
        report.push(Statistic::at_most("q_ratio_max_min", max / min, setup.q_ratio_bound));
    }
    Ok(report)
}

/// Solver output reused across checks.
#[derive(Debug, Clone)]
pub struct Solution {
    pub field: ValueField,
    pub policy: FeedbackPolicy,
}

impl Solution {
    pub fn solve(data: &ProblemData, controls: &ControlSets, grid: &Grid) -> Result<Self> {
        let (field, policy) = solve_backward(data, controls, grid)?;
        Ok(Solution { field, policy })
    }

    pub fn eval(&self, p: &Probe) -> Result<f64> {
        self.field.eval(p.t, &p.point, p.l)
    }
}

/// PDE value against the Monte Carlo reward under the extracted policy at
/// every probe; optional alternative policies must not beat the PDE value.
pub fn check_value_characterization<A: Policy>(
    data: &ProblemData,
    solution: &Solution,
    sim: &SimConfig,
    probes: &[Probe],
    tol_disc: f64,
    alternatives: &[A],
) -> Result<CheckReport> {
    let mut report = CheckReport::new("value_characterization");
    report
        .meta("n_paths", sim.n_paths)
        .meta("dt", sim.dt)
        .meta("seed", sim.seed)
        .meta("tol_disc", tol_disc);
    for (j, p) in probes.iter().enumerate() {
        let u = solution.eval(p)?;
        let (mc, se) = estimate_value(data, &solution.policy, p.init(), sim)?;
        report.push(Statistic::within(
            format!("probe{j}.mc"),
            mc,
            u,
            SE_FACTOR * se + tol_disc,
        ));
        for (a, alt) in alternatives.iter().enumerate() {
            let (m, s) = estimate_value(data, alt, p.init(), sim)?;
            report.push(Statistic::at_least(
                format!("probe{j}.pde_vs_alt{a}"),
                u,
                m - SE_FACTOR * s - tol_disc,
            ));
        }
    }
    Ok(report)
}

/// PDE value against a reference function at every probe.
pub fn check_against_oracle<F>(solution: &Solution, probes: &[Probe], oracle: F, tolerance: f64) -> Result<CheckReport>
where
    F: Fn(&Probe) -> Result<f64>,
{
    let mut report = CheckReport::new("oracle");
    report.meta("tolerance", tolerance);
    let mut worst = 0.0f64;
    for (j, p) in probes.iter().enumerate() {
        let u = solution.eval(p)?;
        let o = oracle(p)?;
        worst = worst.max((u - o).abs());
        report.push(Statistic::within(format!("probe{j}"), u, o, tolerance));
    }
    report.push(Statistic::at_most("max_abs_error", worst, tolerance));
    Ok(report)
}

/// Stopping rule of the dynamic programming check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop at `t + s`.
    After(f64),
    /// Stop at the first time `x >= h`.
    ExitRadius(f64),
}

/// `u(probe)` against `E[running reward up to tau + u(tau, X_tau)]` under
/// the extracted policy, with `tau` capped at the horizon.
pub fn check_dpp(
    data: &ProblemData,
    solution: &Solution,
    sim: &SimConfig,
    probe: Probe,
    stop: StopRule,
    tol_disc: f64,
) -> Result<CheckReport> {
    let g = *solution.field.grid();
    let clamped = std::sync::atomic::AtomicUsize::new(0);
    let samples = par_paths(sim.n_paths, |j| {
        let mut rng = PathRng::for_path(sim.seed, j);
        let start = PathState::start(probe.t, &probe.point, probe.l);
        let last = drive(data, &solution.policy, start, sim.dt, &mut rng, |_, next, _| {
            let done = match stop {
                StopRule::After(s) => next.t >= probe.t + s - 1e-9 * sim.dt,
                StopRule::ExitRadius(h) => next.x >= h,
            };
            if done {
                Flow::Stop
            } else {
                Flow::Continue
            }
        })?;
        let (x, l) = (last.x.min(g.x_max), last.l.min(g.l_max));
        if x != last.x || l != last.l {
            clamped.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        }
        let p = NetworkPoint { x, ray: last.ray };
        Ok(last.running_reward + solution.field.eval(last.t.min(g.horizon), &p, l)?)
    })?;
    let (mc, se) = mean_and_se(&samples);
    let u = solution.eval(&probe)?;
    let mut report = CheckReport::new("dpp");
    report
        .meta("n_paths", sim.n_paths)
        .meta("dt", sim.dt)
        .meta("seed", sim.seed)
        .meta("tol_disc", tol_disc)
        .meta(
            "stop",
            match stop {
                StopRule::After(s) => format!("after {s}"),
                StopRule::ExitRadius(h) => format!("exit radius {h}"),
            },
        );
    report.push(Statistic::within("mc", mc, u, SE_FACTOR * se + tol_disc));
    report.push(Statistic::info("clamped_paths", clamped.into_inner() as f64));
    Ok(report)
}

fn node_differences(a: &ValueField, b: &ValueField) -> (f64, f64, bool) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut identical = true;
    for (x, y) in a.values().zip(b.values()) {
        let d = y - x;
        min = min.min(d);
        max = max.max(d);
        identical &= x.to_bits() == y.to_bits();
    }
    (min, max, identical)
}

/// Solves with `g` and `g + c`: the shifted field dominates at every node
/// and differs by `c`.
pub fn check_comparison_monotonicity(
    data: &ProblemData,
    controls: &ControlSets,
    grid: &Grid,
    shift: f64,
) -> Result<CheckReport> {
    if !(shift >= 0.0) {
        return Err(Error::InvalidInput("comparison shift must be non-negative".into()));
    }
    let (u, _) = solve_backward(data, controls, grid)?;
    let (v, _) = solve_backward(
        &data.with_terminal_addition(TerminalPayoff::constant(shift)),
        controls,
        grid,
    )?;
    let (min, max, identical) = node_differences(&u, &v);
    let mut report = CheckReport::new("comparison");
    report.meta("shift", shift).meta("nodes", u.values().count());
    report.push(Statistic::at_least("min_difference", min, 0.0));
    report.push(Statistic::at_most(
        "max_deviation_from_shift",
        (max - shift).abs().max((min - shift).abs()),
        1e-10,
    ));
    if shift == 0.0 {
        report.push(Statistic::at_least("bit_identical", identical as u8 as f64, 1.0));
    }
    Ok(report)
}

/// Solves with `g` and `g + extra` for a non-negative `extra`; the second
/// field dominates at every node.
pub fn check_terminal_ordering(
    data: &ProblemData,
    controls: &ControlSets,
    grid: &Grid,
    extra: TerminalPayoff,
) -> Result<CheckReport> {
    let (u, _) = solve_backward(data, controls, grid)?;
    let (v, _) = solve_backward(&data.with_terminal_addition(extra), controls, grid)?;
    let (min, _, _) = node_differences(&u, &v);
    let mut report = CheckReport::new("terminal_ordering");
    report.push(Statistic::at_least("min_difference", min, 0.0));
    Ok(report)
}

/// Full solver against the local-time-free solver on l-independent data.
pub fn check_no_localtime_consistency(data: &ProblemData, controls: &ControlSets, grid: &Grid) -> Result<CheckReport> {
    let (full, _) = solve_backward(data, controls, grid)?;
    let (flat, _) = solve_no_localtime(data, controls, grid)?;
    let g = *grid;
    let mut gap = 0.0f64;
    let mut spread = 0.0f64;
    for i in 0..g.ray_count {
        for k in 0..g.time_slices() {
            for m in 0..g.n_x {
                let base = full.value(i, k, m, 0);
                for n in 0..g.n_l {
                    let v = full.value(i, k, m, n);
                    gap = gap.max((v - flat.value(i, k, m, 0)).abs());
                    spread = spread.max((v - base).abs());
                }
            }
        }
    }
    let mut report = CheckReport::new("no_localtime");
    report.meta("n_l", g.n_l);
    report.push(Statistic::at_most("max_solver_gap", gap, 1e-10));
    report.push(Statistic::at_most("max_l_variation", spread, 1e-10));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationAxis {
    Space,
    LocalTime,
}

/// Relative change of the probe values when `x_max` (or `l_max`) doubles at
/// fixed step sizes.
pub fn check_truncation(
    data: &ProblemData,
    controls: &ControlSets,
    grid: &Grid,
    probes: &[Probe],
    axis: TruncationAxis,
    rel_tol: f64,
) -> Result<CheckReport> {
    let wide = match axis {
        TruncationAxis::Space => Grid::from_parts(
            grid.ray_count,
            grid.horizon,
            grid.n_t,
            2 * grid.n_x - 1,
            2.0 * grid.x_max,
            grid.n_l,
            grid.l_max,
        )?,
        TruncationAxis::LocalTime => Grid::from_parts(
            grid.ray_count,
            grid.horizon,
            grid.n_t,
            grid.n_x,
            grid.x_max,
            2 * grid.n_l - 1,
            2.0 * grid.l_max,
        )?,
    };
    let (a, _) = solve_backward(data, controls, grid)?;
    let (b, _) = solve_backward(data, controls, &wide)?;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for p in probes {
        let u = a.eval(p.t, &p.point, p.l)?;
        let v = b.eval(p.t, &p.point, p.l)?;
        worst = worst.max((u - v).abs());
        scale = scale.max(u.abs());
    }
    let id = match axis {
        TruncationAxis::Space => "truncation_x",
        TruncationAxis::LocalTime => "truncation_l",
    };
    let mut report = CheckReport::new(id);
    report.meta("probes", probes.len()).meta("rel_tol", rel_tol);
    report.push(Statistic::info("max_abs_probe_value", scale));
    report.push(Statistic::at_most("max_change", worst, rel_tol * scale));
    Ok(report)
}

/// The vertex test-function construction over a parameter sweep: exact
/// boundary data, small residual, designed local-time slope at the vertex
/// and the absorption lower bound on the slope.
pub fn check_ode_gadget(settings: &[(GadgetParams, GadgetBounds)]) -> Result<CheckReport> {
    let mut report = CheckReport::new("ode_gadget");
    report.meta("settings", settings.len());
    let mut boundary_misses = 0usize;
    let mut residual = 0.0f64;
    let mut slope_dev = 0.0f64;
    let mut margin = f64::INFINITY;
    let mut iterations = 0usize;
    for (params, bounds) in settings {
        for case in [GadgetCase::Super, GadgetCase::Sub] {
            let sol = solve_ode_gadget(params, bounds, case)?;
            residual = residual.max(sol.residual);
            iterations = iterations.max(sol.iterations);
            for (i, rows) in sol.values.iter().enumerate() {
                for (n, row) in rows.iter().enumerate() {
                    let (left, right) = params.boundary(case, i, sol.levels[n]);
                    if row[0] != left || *row.last().unwrap() != right {
                        boundary_misses += 1;
                    }
                }
            }
            let slope = match case {
                GadgetCase::Super => params.s_up,
                GadgetCase::Sub => -params.s_lo,
            };
            for d in &sol.dl_at_vertex {
                slope_dev = slope_dev.max((d - slope).abs() / slope.abs().max(1.0));
            }
            let need = slope_lower_bound(params, bounds, case, sol.max_gradient);
            margin = margin.min(slope.abs() - need);
        }
    }
    report.meta("max_sign_iterations", iterations);
    report.push(Statistic::at_most("boundary_mismatches", boundary_misses as f64, 0.0));
    report.push(Statistic::at_most("max_residual", residual, 1e-8));
    report.push(Statistic::at_most("max_rel_slope_deviation", slope_dev, 1e-12));
    report.push(Statistic::at_least("min_slope_margin", margin, 0.0));
    Ok(report)
}
