//! Monte Carlo simulation of the controlled spider diffusion.
//!
//! The radial part follows a symmetrized Euler scheme: `y = x + b dt + sigma
//! sqrt(dt) Z`; a step that starts at the vertex or crosses it is a vertex
//! event, reflected to `|y|` and re-assigned a ray by the spinning measure.
//! The local-time increment of a vertex event is `|y| - y`, so that
//! `x - l` keeps the drift part of `y` exactly. This normalization makes
//! `E[l(tau_h)] -> h` where `max(0, -y)` would give `h / 2`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hjb::{write_preamble, CsvHeader};
use crate::model::{ProblemData, MAX_RAYS};
use crate::network::{NetworkPoint, RayIndex};

/// Control selection read by the simulator.
pub trait Policy: Sync {
    /// Ray control on zero-based `ray` at `(t, x, l)`.
    fn ray_control(&self, ray: usize, t: f64, x: f64, l: f64) -> f64;
    /// Vertex control `theta` at `(t, l)`.
    fn vertex_control(&self, t: f64, l: f64) -> &[f64];
}

/// The same controls everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantPolicy {
    pub ray: Vec<f64>,
    pub vertex: Vec<f64>,
}

impl ConstantPolicy {
    pub fn new(ray: Vec<f64>, vertex: Vec<f64>) -> Self {
        ConstantPolicy { ray, vertex }
    }

    /// `beta = 0` on every ray and uniform vertex weights.
    pub fn uncontrolled(ray_count: usize) -> Self {
        ConstantPolicy {
            ray: vec![0.0; ray_count],
            vertex: vec![1.0 / ray_count as f64; ray_count],
        }
    }
}

impl Policy for ConstantPolicy {
    fn ray_control(&self, ray: usize, _t: f64, _x: f64, _l: f64) -> f64 {
        self.ray[ray]
    }

    fn vertex_control(&self, _t: f64, _l: f64) -> &[f64] {
        &self.vertex
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathState {
    pub t: f64,
    pub x: f64,
    pub ray: RayIndex,
    pub l: f64,
    pub running_reward: f64,
}

impl PathState {
    pub fn start(t: f64, p: &NetworkPoint, l: f64) -> Self {
        PathState {
            t,
            x: p.x,
            ray: p.ray,
            l,
            running_reward: 0.0,
        }
    }

    pub fn point(&self) -> NetworkPoint {
        NetworkPoint {
            x: self.x,
            ray: self.ray,
        }
    }
}

/// One trajectory sampled at every step, plus the terminal payoff.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiderPath {
    pub states: Vec<PathState>,
    /// `vertex_events[j]` flags the step from `states[j]` to `states[j + 1]`.
    pub vertex_events: Vec<bool>,
    pub terminal_reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(dt: f64, n_paths: usize, seed: u64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Config(format!("simulation step must be positive, got {dt}")));
        }
        if n_paths < 1 {
            return Err(Error::Config("n_paths must be at least 1".into()));
        }
        Ok(SimConfig { dt, n_paths, seed })
    }
}

/// Total reward of one path: running rewards plus the terminal payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardSample {
    pub total: f64,
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-path seed: `splitmix64(seed ^ splitmix64(index))`.
pub fn path_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// Independent random stream of one path.
#[derive(Debug, Clone)]
pub struct PathRng(ChaCha8Rng);

impl PathRng {
    pub fn for_path(seed: u64, index: u64) -> Self {
        PathRng(ChaCha8Rng::seed_from_u64(path_seed(seed, index)))
    }

    pub fn gaussian(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.gen::<f64>()
    }
}

/// One step of the scheme. `uniform_draw` picks the new ray at a vertex
/// event by inverse CDF of the spinning weights.
pub fn step<P: Policy + ?Sized>(
    state: &PathState,
    policy: &P,
    data: &ProblemData,
    dt: f64,
    gaussian_draw: f64,
    uniform_draw: f64,
) -> Result<PathState> {
    if !(0.0..1.0).contains(&uniform_draw) {
        return Err(Error::InvalidInput(format!(
            "uniform draw {uniform_draw} outside [0, 1)"
        )));
    }
    advance(state, policy, data, dt, gaussian_draw, || uniform_draw).map(|(s, _)| s)
}

/// Like [`step`], drawing the uniform only when a vertex event needs it.
/// Returns the new state and whether the step was a vertex event.
pub(crate) fn advance<P: Policy + ?Sized>(
    state: &PathState,
    policy: &P,
    data: &ProblemData,
    dt: f64,
    gaussian_draw: f64,
    uniform_draw: impl FnOnce() -> f64,
) -> Result<(PathState, bool)> {
    if !(state.x >= 0.0) {
        return Err(Error::InvalidInput(format!("path state has x = {}", state.x)));
    }
    if !gaussian_draw.is_finite() {
        return Err(Error::numerical("simulation", "non-finite gaussian draw"));
    }
    let PathState { t, x, ray, l, .. } = *state;
    let i = ray.zero_based();
    let beta = policy.ray_control(i, t, x, l);
    let b = data.drift(i, t, x, l, beta);
    let sigma = data.sigma(i, t, x, l, beta);
    let h = data.cost(i, t, x, l, beta);
    let y = x + b * dt + sigma * dt.sqrt() * gaussian_draw;
    if !y.is_finite() || !h.is_finite() {
        return Err(Error::numerical(
            "simulation",
            format!("non-finite step at t = {t}, x = {x}, ray {ray}, l = {l}"),
        ));
    }
    let mut next = PathState {
        t: t + dt,
        running_reward: state.running_reward + h * dt,
        ..*state
    };
    if y > 0.0 && x > 0.0 {
        next.x = y;
        return Ok((next, false));
    }
    let dl = y.abs() - y;
    let theta = policy.vertex_control(t, l);
    let h0 = data.vertex_cost(t, l, theta);
    let n = data.ray_count();
    let mut w = [0.0f64; MAX_RAYS];
    data.spin_into(t, l + dl, theta, &mut w[..n]);
    let u = uniform_draw();
    let mut acc = 0.0;
    let mut chosen = n - 1;
    for (k, wk) in w[..n].iter().enumerate() {
        acc += wk;
        if u < acc {
            chosen = k;
            break;
        }
    }
    if !h0.is_finite() || w[..n].iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical(
            "simulation",
            format!("non-finite vertex data at t = {t}, l = {l}"),
        ));
    }
    next.x = y.abs();
    next.l = l + dl;
    next.ray = RayIndex::from_zero_based(chosen);
    next.running_reward += h0 * dl;
    Ok((next, true))
}

/// Verdict of an observer after every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Advances `state` to the horizon (the last step is shortened to land on
/// `T`) or until `observe(previous, next, vertex_event)` returns
/// [`Flow::Stop`]. Returns the last state; the terminal payoff is not added.
pub fn drive<P, F>(
    data: &ProblemData,
    policy: &P,
    mut state: PathState,
    dt: f64,
    rng: &mut PathRng,
    mut observe: F,
) -> Result<PathState>
where
    P: Policy + ?Sized,
    F: FnMut(&PathState, &PathState, bool) -> Flow,
{
    let horizon = data.horizon();
    let slack = 1e-9 * dt;
    while state.t < horizon - slack {
        let remaining = horizon - state.t;
        let h = if remaining < dt + slack { remaining } else { dt };
        let z = rng.gaussian();
        let (mut next, event) = advance(&state, policy, data, h, z, || rng.uniform())?;
        if remaining < dt + slack {
            next.t = horizon;
        }
        let flow = observe(&state, &next, event);
        state = next;
        if flow == Flow::Stop {
            break;
        }
    }
    Ok(state)
}

fn check_start(data: &ProblemData, t0: f64, p: &NetworkPoint, l0: f64) -> Result<()> {
    if !(t0 >= 0.0 && t0 < data.horizon()) {
        return Err(Error::InvalidInput(format!(
            "start time {t0} outside [0, {})",
            data.horizon()
        )));
    }
    if p.ray.get() > data.ray_count() || !(l0 >= 0.0) || !(p.x >= 0.0) {
        return Err(Error::InvalidInput("start state outside the network".into()));
    }
    Ok(())
}

/// Simulates path `path_index` from `(t0, p, l0)` to `T` and records every
/// step.
pub fn simulate_path<P: Policy + ?Sized>(
    data: &ProblemData,
    policy: &P,
    init: (f64, NetworkPoint, f64),
    config: &SimConfig,
    path_index: u64,
) -> Result<(SpiderPath, RewardSample)> {
    let (t0, p, l0) = init;
    check_start(data, t0, &p, l0)?;
    let mut rng = PathRng::for_path(config.seed, path_index);
    let start = PathState::start(t0, &p, l0);
    let mut states = vec![start];
    let mut events = Vec::new();
    let last = drive(data, policy, start, config.dt, &mut rng, |_, next, event| {
        states.push(*next);
        events.push(event);
        Flow::Continue
    })?;
    let terminal = data.terminal(last.ray.zero_based(), last.x, last.l);
    let total = last.running_reward + terminal;
    if !total.is_finite() {
        return Err(Error::numerical(
            "simulation",
            format!("non-finite reward on path {path_index}"),
        ));
    }
    Ok((
        SpiderPath {
            states,
            vertex_events: events,
            terminal_reward: terminal,
        },
        RewardSample { total },
    ))
}

/// Reward of path `path_index` without recording the trajectory.
pub fn path_reward<P: Policy + ?Sized>(
    data: &ProblemData,
    policy: &P,
    init: (f64, NetworkPoint, f64),
    config: &SimConfig,
    path_index: u64,
) -> Result<RewardSample> {
    let (t0, p, l0) = init;
    let mut rng = PathRng::for_path(config.seed, path_index);
    let last = drive(
        data,
        policy,
        PathState::start(t0, &p, l0),
        config.dt,
        &mut rng,
        |_, _, _| Flow::Continue,
    )?;
    let total = last.running_reward + data.terminal(last.ray.zero_based(), last.x, last.l);
    if !total.is_finite() {
        return Err(Error::numerical(
            "simulation",
            format!("non-finite reward on path {path_index}"),
        ));
    }
    Ok(RewardSample { total })
}

/// Runs `f(index)` for `index = 0..n_paths` in parallel and collects the
/// results in index order.
pub fn par_paths<T, F>(n_paths: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..n_paths as u64).into_par_iter().map(f).collect()
}

/// Sum in a fixed binary tree, independent of thread scheduling.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(v) / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Sample mean and standard error of the reward over `config.n_paths`
/// paths.
pub fn estimate_value<P: Policy + ?Sized>(
    data: &ProblemData,
    policy: &P,
    init: (f64, NetworkPoint, f64),
    config: &SimConfig,
) -> Result<(f64, f64)> {
    if config.n_paths < 2 {
        return Err(Error::Config("estimate_value needs at least 2 paths".into()));
    }
    check_start(data, init.0, &init.1, init.2)?;
    let rewards = par_paths(config.n_paths, |j| {
        path_reward(data, policy, init, config, j).map(|r| r.total)
    })?;
    Ok(mean_and_se(&rewards))
}

/// Writes paths as `path,t,x,ray,l,running_reward` rows.
pub fn write_paths_csv<W: Write>(out: &mut W, paths: &[SpiderPath], header: &CsvHeader) -> Result<()> {
    write_preamble(out, header)?;
    writeln!(out, "path,t,x,ray,l,running_reward")?;
    for (j, p) in paths.iter().enumerate() {
        for s in &p.states {
            writeln!(out, "{j},{},{},{},{},{}", s.t, s.x, s.ray, s.l, s.running_reward)?;
        }
    }
    out.flush()?;
    Ok(())
}
