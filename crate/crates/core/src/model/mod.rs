//! Problem data, declared regularity bounds and the two Hamiltonians.
//!
//! The ray Hamiltonian is
//! `sup_beta { sigma^2/2 * M + b * p + h }` over the ray control grid, and the
//! vertex (Kirchhoff) Hamiltonian is `sup_theta { sum_i S_i * p_i + h_0 }`
//! over the vertex control grid. Both break ties by the lowest grid index.

mod catalog;
mod controls;
mod validate;

pub use catalog::{RayCoefficient, SpinningMeasure, TerminalPayoff, VertexCost};
pub use controls::{ControlInterval, ControlSets, VertexControls};
pub use validate::{validate_assumptions, AssumptionEntry, AssumptionReport, SampleDomain};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{NetworkPoint, RayIndex};

/// Largest supported number of rays; keeps vertex weights on the stack.
pub const MAX_RAYS: usize = 32;

/// Tolerance on `sum_i S_i = 1` and on vertex agreement of terminal data.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Coefficients carried by one ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayData {
    pub sigma: RayCoefficient,
    #[serde(default = "zero_coefficient")]
    pub drift: RayCoefficient,
    #[serde(default = "zero_coefficient")]
    pub cost: RayCoefficient,
    pub terminal: TerminalPayoff,
}

fn zero_coefficient() -> RayCoefficient {
    RayCoefficient::ZERO
}

impl RayData {
    pub fn new(sigma: RayCoefficient, drift: RayCoefficient, cost: RayCoefficient, terminal: TerminalPayoff) -> Self {
        RayData {
            sigma,
            drift,
            cost,
            terminal,
        }
    }

    /// Constant diffusion, no drift, no running reward.
    pub fn brownian(sigma: f64, terminal: TerminalPayoff) -> Self {
        RayData::new(
            RayCoefficient::constant(sigma),
            RayCoefficient::ZERO,
            RayCoefficient::ZERO,
            terminal,
        )
    }
}

/// Declared constants of the regularity assumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeclaredBounds {
    /// Ellipticity constant: `sigma_i >= sigma_lower`.
    pub sigma_lower: f64,
    /// Bound on `sigma_i` together with its Lipschitz constants.
    pub sigma_upper: f64,
    /// Bound on `b_i` together with its Lipschitz constants.
    pub drift: f64,
    /// Bound on `h_i` and `h_0` together with their Lipschitz constants.
    pub cost: f64,
    /// Spinning lower bound: `S_i >= spin_lower`.
    pub spin_lower: f64,
    /// Bound on `S_i` together with its Lipschitz constants.
    pub spin_upper: f64,
}

impl DeclaredBounds {
    fn check(&self) -> Result<()> {
        let all = [
            ("sigma_lower", self.sigma_lower),
            ("sigma_upper", self.sigma_upper),
            ("drift", self.drift),
            ("cost", self.cost),
            ("spin_lower", self.spin_lower),
            ("spin_upper", self.spin_upper),
        ];
        for (name, v) in all {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidData(format!(
                    "declared bound {name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.sigma_lower > self.sigma_upper {
            return Err(Error::InvalidData("sigma_lower exceeds sigma_upper".into()));
        }
        Ok(())
    }
}

/// The coefficient bundle of a control problem on the star network.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemData {
    horizon: f64,
    rays: Vec<RayData>,
    spinning: SpinningMeasure,
    vertex_cost: VertexCost,
    bounds: DeclaredBounds,
    /// Extra terminal terms added on every ray (used to build ordered pairs
    /// of terminal data).
    terminal_extra: Vec<TerminalPayoff>,
}

impl ProblemData {
    pub fn new(
        horizon: f64,
        rays: Vec<RayData>,
        spinning: SpinningMeasure,
        vertex_cost: VertexCost,
        bounds: DeclaredBounds,
    ) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidData(format!("horizon must be positive, got {horizon}")));
        }
        let n = rays.len();
        if !(2..=MAX_RAYS).contains(&n) {
            return Err(Error::InvalidData(format!(
                "ray count must be in 2..={MAX_RAYS}, got {n}"
            )));
        }
        bounds.check()?;
        match &spinning {
            SpinningMeasure::Fixed { weights } if weights.len() != n => {
                return Err(Error::InvalidData(format!(
                    "fixed spinning weights have length {}, expected {n}",
                    weights.len()
                )))
            }
            SpinningMeasure::TwoRay if n != 2 => {
                return Err(Error::InvalidData("two_ray spinning needs exactly 2 rays".into()))
            }
            SpinningMeasure::LocalTimeBlend { start, end, .. }
                if end.len() != n || start.as_ref().is_some_and(|s| s.len() != n) =>
            {
                return Err(Error::InvalidData(format!(
                    "local_time_blend weights must have length {n}"
                )))
            }
            _ => {}
        }
        Ok(ProblemData {
            horizon,
            rays,
            spinning,
            vertex_cost,
            bounds,
            terminal_extra: Vec::new(),
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn ray_count(&self) -> usize {
        self.rays.len()
    }

    pub fn rays(&self) -> &[RayData] {
        &self.rays
    }

    pub fn spinning(&self) -> &SpinningMeasure {
        &self.spinning
    }

    pub fn vertex_cost_family(&self) -> &VertexCost {
        &self.vertex_cost
    }

    pub fn bounds(&self) -> &DeclaredBounds {
        &self.bounds
    }

    /// Same problem with `extra` added to the terminal payoff of every ray.
    pub fn with_terminal_addition(&self, extra: TerminalPayoff) -> Self {
        let mut out = self.clone();
        out.terminal_extra.push(extra);
        out
    }

    /// Same problem with the ray running rewards shifted by `c`.
    pub fn with_cost_shift(&self, c: f64) -> Self {
        let mut out = self.clone();
        for r in &mut out.rays {
            r.cost = r.cost.shifted(c);
        }
        out
    }

    #[inline]
    pub fn sigma(&self, ray: usize, t: f64, x: f64, l: f64, beta: f64) -> f64 {
        self.rays[ray].sigma.eval(t, x, l, beta)
    }

    #[inline]
    pub fn drift(&self, ray: usize, t: f64, x: f64, l: f64, beta: f64) -> f64 {
        self.rays[ray].drift.eval(t, x, l, beta)
    }

    #[inline]
    pub fn cost(&self, ray: usize, t: f64, x: f64, l: f64, beta: f64) -> f64 {
        self.rays[ray].cost.eval(t, x, l, beta)
    }

    /// Raw `g_i(x, l)` without the vertex continuity check.
    #[inline]
    pub fn terminal(&self, ray: usize, x: f64, l: f64) -> f64 {
        let base = self.rays[ray].terminal.eval(x, l);
        self.terminal_extra.iter().fold(base, |acc, g| acc + g.eval(x, l))
    }

    #[inline]
    pub fn spin_into(&self, t: f64, l: f64, theta: &[f64], out: &mut [f64]) {
        self.spinning.eval_into(t, l, theta, out)
    }

    #[inline]
    pub fn vertex_cost(&self, t: f64, l: f64, theta: &[f64]) -> f64 {
        self.vertex_cost.eval(t, l, theta)
    }

    /// Whether any coefficient family reads the local-time argument.
    pub fn declares_local_time_dependence(&self) -> bool {
        self.rays.iter().any(|r| {
            r.sigma.depends_on_local_time()
                || r.drift.depends_on_local_time()
                || r.cost.depends_on_local_time()
                || r.terminal.depends_on_local_time()
        }) || self.terminal_extra.iter().any(TerminalPayoff::depends_on_local_time)
            || self.spinning.depends_on_local_time()
            || self.vertex_cost.depends_on_local_time()
    }

    /// Checks that the vertex control points carry enough components for the
    /// spinning and vertex-cost families.
    pub fn check_controls(&self, controls: &ControlSets) -> Result<()> {
        if controls.ray_count() != self.ray_count() {
            return Err(Error::Config(format!(
                "control sets cover {} rays, problem has {}",
                controls.ray_count(),
                self.ray_count()
            )));
        }
        let need = self
            .spinning
            .control_dimension(self.ray_count())
            .max(self.vertex_cost.control_dimension());
        if controls.vertex_dimension() < need {
            return Err(Error::Config(format!(
                "vertex control points have dimension {}, the data reads {need} components",
                controls.vertex_dimension()
            )));
        }
        Ok(())
    }
}

/// Value and maximizing grid point of a Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Argmax {
    pub value: f64,
    pub index: usize,
}

/// `sup_beta { sigma^2/2 * M + b * p + h }` over the ray control grid.
#[allow(clippy::too_many_arguments)]
pub fn ray_hamiltonian(
    data: &ProblemData,
    controls: &ControlSets,
    ray: RayIndex,
    t: f64,
    x: f64,
    l: f64,
    p: f64,
    m: f64,
) -> Result<(f64, f64)> {
    let r = ray.zero_based();
    if r >= data.ray_count() {
        return Err(Error::InvalidInput(format!("ray {ray} outside the problem")));
    }
    let points = controls.ray_points(r);
    if points.is_empty() {
        return Err(Error::Config("empty ray control grid".into()));
    }
    let a = ray_hamiltonian_upwind(data, points, r, t, x, l, p, p, m);
    Ok((a.value, points[a.index]))
}

/// Ray Hamiltonian with an upwinded first derivative: `p_forward` is used
/// for non-negative drift and `p_backward` for negative drift.
#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn ray_hamiltonian_upwind(
    data: &ProblemData,
    points: &[f64],
    ray: usize,
    t: f64,
    x: f64,
    l: f64,
    p_forward: f64,
    p_backward: f64,
    m: f64,
) -> Argmax {
    let coeffs = &data.rays[ray];
    let mut best = Argmax {
        value: f64::NEG_INFINITY,
        index: 0,
    };
    for (k, &beta) in points.iter().enumerate() {
        let s = coeffs.sigma.eval(t, x, l, beta);
        let b = coeffs.drift.eval(t, x, l, beta);
        let h = coeffs.cost.eval(t, x, l, beta);
        let p = if b >= 0.0 { p_forward } else { p_backward };
        let v = 0.5 * s * s * m + b * p + h;
        if v > best.value {
            best = Argmax { value: v, index: k };
        }
    }
    best
}

/// `sup_theta { sum_i S_i(t, l, theta) * p_i + h_0(t, l, theta) }` over the
/// vertex control grid. Fails when a spinning vector leaves the simplex or
/// drops below the declared lower bound.
pub fn kirchhoff_hamiltonian(data: &ProblemData, controls: &ControlSets, t: f64, l: f64, p: &[f64]) -> Result<Argmax> {
    kirchhoff_sup(data, controls, t, l, p, 1.0)
}

/// `sup_theta { sum_i S_i p_i + cost_scale * h_0 }`.
pub(crate) fn kirchhoff_sup(
    data: &ProblemData,
    controls: &ControlSets,
    t: f64,
    l: f64,
    p: &[f64],
    cost_scale: f64,
) -> Result<Argmax> {
    let n = data.ray_count();
    if p.len() != n {
        return Err(Error::InvalidInput(format!(
            "expected {n} one-sided derivatives, got {}",
            p.len()
        )));
    }
    let points = controls.vertex_points();
    if points.is_empty() {
        return Err(Error::Config("empty vertex control grid".into()));
    }
    let mut w = [0.0f64; MAX_RAYS];
    let w = &mut w[..n];
    let mut best = Argmax {
        value: f64::NEG_INFINITY,
        index: 0,
    };
    for (k, theta) in points.iter().enumerate() {
        data.spin_into(t, l, theta, w);
        check_simplex(w, data.bounds.spin_lower, t, l)?;
        let v = w.iter().zip(p).map(|(s, q)| s * q).sum::<f64>() + cost_scale * data.vertex_cost(t, l, theta);
        if v > best.value {
            best = Argmax { value: v, index: k };
        }
    }
    if !best.value.is_finite() {
        return Err(Error::InvalidData(format!(
            "non-finite vertex Hamiltonian at t={t}, l={l}"
        )));
    }
    Ok(best)
}

pub(crate) fn check_simplex(w: &[f64], lower: f64, t: f64, l: f64) -> Result<()> {
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(Error::InvalidData(format!(
            "spinning weights sum to {sum} at t={t}, l={l}"
        )));
    }
    if let Some(bad) = w.iter().find(|&&s| !(s >= lower)) {
        return Err(Error::InvalidData(format!(
            "spinning weight {bad} below declared lower bound {lower} at t={t}, l={l}"
        )));
    }
    Ok(())
}

/// `g_i(x, l)` at `p`; at the vertex all rays must agree.
pub fn terminal_payoff(data: &ProblemData, p: &NetworkPoint, l: f64) -> Result<f64> {
    if !(l >= 0.0) {
        return Err(Error::InvalidInput(format!("local time must be non-negative, got {l}")));
    }
    let r = p.ray.zero_based();
    if r >= data.ray_count() {
        return Err(Error::InvalidInput(format!("ray {} outside the problem", p.ray)));
    }
    if p.is_vertex() {
        let v0 = data.terminal(0, 0.0, l);
        for i in 1..data.ray_count() {
            let vi = data.terminal(i, 0.0, l);
            if (vi - v0).abs() > SIMPLEX_TOLERANCE {
                return Err(Error::InvalidData(format!(
                    "terminal payoff is discontinuous at the vertex: g_1(0,{l}) = {v0}, g_{}(0,{l}) = {vi}",
                    i + 1
                )));
            }
        }
        return Ok(v0);
    }
    Ok(data.terminal(r, p.x, l))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn loose_bounds() -> DeclaredBounds {
        DeclaredBounds {
            sigma_lower: 0.5,
            sigma_upper: 2.0,
            drift: 1.0,
            cost: 1.0,
            spin_lower: 0.1,
            spin_upper: 1.0,
        }
    }

    fn two_ray(ray: RayData, spinning: SpinningMeasure, h0: VertexCost) -> ProblemData {
        ProblemData::new(1.0, vec![ray.clone(), ray], spinning, h0, loose_bounds()).unwrap()
    }

    #[test]
    fn ray_hamiltonian_singleton() {
        let data = two_ray(
            RayData::brownian(2f64.sqrt(), TerminalPayoff::constant(0.0)),
            SpinningMeasure::Uniform,
            VertexCost::ZERO,
        );
        let c = ControlSets::new(
            2,
            &[ControlInterval::singleton(0.25)],
            &VertexControls::single(vec![0.5]),
        )
        .unwrap();
        let (v, beta) = ray_hamiltonian(&data, &c, RayIndex::FIRST, 0.0, 1.0, 0.0, 7.0, 1.0).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        assert_eq!(beta, 0.25);
    }

    #[test]
    fn ray_hamiltonian_linear_and_quadratic() {
        let c = ControlSets::new(
            2,
            &[ControlInterval::uniform(-1.0, 1.0, 21)],
            &VertexControls::single(vec![0.5]),
        )
        .unwrap();
        let linear = two_ray(
            RayData::new(
                RayCoefficient::constant(1.0),
                RayCoefficient::ControlAffine {
                    intercept: 0.0,
                    gain: 1.0,
                },
                RayCoefficient::ZERO,
                TerminalPayoff::constant(0.0),
            ),
            SpinningMeasure::Uniform,
            VertexCost::ZERO,
        );
        let (v, beta) = ray_hamiltonian(&linear, &c, RayIndex::FIRST, 0.0, 1.0, 0.0, 2.0, 0.0).unwrap();
        assert_eq!((v, beta), (2.0, 1.0));

        let quad = two_ray(
            RayData::new(
                RayCoefficient::constant(1.0),
                RayCoefficient::ControlAffine {
                    intercept: 0.0,
                    gain: 1.0,
                },
                RayCoefficient::ControlQuadratic {
                    intercept: 0.0,
                    linear: 0.0,
                    quadratic: -1.0,
                },
                TerminalPayoff::constant(0.0),
            ),
            SpinningMeasure::Uniform,
            VertexCost::ZERO,
        );
        let (v, beta) = ray_hamiltonian(&quad, &c, RayIndex::FIRST, 0.0, 1.0, 0.0, 1.0, 0.0).unwrap();
        assert!((v - 0.25).abs() < 1e-15);
        assert!((beta - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kirchhoff_examples() {
        let data = two_ray(
            RayData::brownian(1.0, TerminalPayoff::constant(0.0)),
            SpinningMeasure::Fixed {
                weights: vec![0.5, 0.5],
            },
            VertexCost::ZERO,
        );
        let c = ControlSets::new(
            2,
            &[ControlInterval::singleton(0.0)],
            &VertexControls::single(vec![0.0]),
        )
        .unwrap();
        let a = kirchhoff_hamiltonian(&data, &c, 0.0, 0.0, &[1.0, -1.0]).unwrap();
        assert_eq!((a.value, a.index), (0.0, 0));

        let data = two_ray(
            RayData::brownian(1.0, TerminalPayoff::constant(0.0)),
            SpinningMeasure::TwoRay,
            VertexCost::ZERO,
        );
        let c = ControlSets::new(
            2,
            &[ControlInterval::singleton(0.0)],
            &VertexControls::Box {
                lower: vec![0.3],
                upper: vec![0.7],
                counts: vec![41],
            },
        )
        .unwrap();
        let a = kirchhoff_hamiltonian(&data, &c, 0.0, 0.0, &[1.0, -1.0]).unwrap();
        assert!((a.value - 0.4).abs() < 1e-15);
        assert_eq!(c.vertex_points()[a.index][0], 0.7);

        let data = two_ray(
            RayData::brownian(1.0, TerminalPayoff::constant(0.0)),
            SpinningMeasure::TwoRay,
            VertexCost::ThetaDistance {
                intercept: 0.0,
                weight: 1.0,
                center: vec![0.5],
            },
        );
        let c = ControlSets::new(
            2,
            &[ControlInterval::singleton(0.0)],
            &VertexControls::Box {
                lower: vec![0.25],
                upper: vec![0.75],
                counts: vec![5],
            },
        )
        .unwrap();
        let a = kirchhoff_hamiltonian(&data, &c, 0.0, 0.0, &[0.0, 0.0]).unwrap();
        assert_eq!(a.value, 0.0);
        assert_eq!(c.vertex_points()[a.index][0], 0.5);
    }

    #[test]
    fn kirchhoff_rejects_bad_weights() {
        let data = two_ray(
            RayData::brownian(1.0, TerminalPayoff::constant(0.0)),
            SpinningMeasure::Fixed {
                weights: vec![0.6, 0.6],
            },
            VertexCost::ZERO,
        );
        let c = ControlSets::uncontrolled(2);
        assert!(kirchhoff_hamiltonian(&data, &c, 0.0, 0.0, &[1.0, 1.0]).is_err());
        assert!(kirchhoff_hamiltonian(&data, &c, 0.0, 0.0, &[1.0]).is_err());
    }

    #[test]
    fn terminal_payoff_continuity() {
        let data = two_ray(
            RayData::brownian(1.0, TerminalPayoff::linear(1.0)),
            SpinningMeasure::Uniform,
            VertexCost::ZERO,
        );
        let p = NetworkPoint::new(2.0, RayIndex::new(2, 2).unwrap()).unwrap();
        assert_eq!(terminal_payoff(&data, &p, 3.0).unwrap(), 2.0);

        let data = two_ray(
            RayData::brownian(1.0, TerminalPayoff::constant(4.0)),
            SpinningMeasure::Uniform,
            VertexCost::ZERO,
        );
        for i in 1..=2 {
            let v = NetworkPoint::new(0.0, RayIndex::new(i, 2).unwrap()).unwrap();
            assert_eq!(terminal_payoff(&data, &v, 0.5).unwrap(), 4.0);
        }

        let data = ProblemData::new(
            1.0,
            vec![
                RayData::brownian(1.0, TerminalPayoff::constant(0.0)),
                RayData::brownian(1.0, TerminalPayoff::constant(1.0)),
            ],
            SpinningMeasure::Uniform,
            VertexCost::ZERO,
            loose_bounds(),
        )
        .unwrap();
        assert!(terminal_payoff(&data, &NetworkPoint::vertex(), 0.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn controlled() -> (ProblemData, ControlSets) {
            let ray = RayData::new(
                RayCoefficient::constant(1.0),
                RayCoefficient::ControlAffine {
                    intercept: 0.1,
                    gain: 1.0,
                },
                RayCoefficient::ControlQuadratic {
                    intercept: 0.0,
                    linear: 0.3,
                    quadratic: -0.5,
                },
                TerminalPayoff::constant(0.0),
            );
            let data = ProblemData::new(
                1.0,
                vec![ray.clone(), ray.clone(), ray],
                SpinningMeasure::ControlWeights,
                VertexCost::ThetaDistance {
                    intercept: 0.0,
                    weight: 0.5,
                    center: vec![0.5],
                },
                super::loose_bounds(),
            )
            .unwrap();
            let c = ControlSets::new(
                3,
                &[ControlInterval::uniform(-1.0, 1.0, 17)],
                &VertexControls::Points {
                    points: vec![vec![0.5, 0.25, 0.25], vec![0.2, 0.4, 0.4], vec![0.3, 0.3, 0.4]],
                },
            )
            .unwrap();
            (data, c)
        }

        proptest! {
            #[test]
            fn ray_monotone_in_second_derivative(p in -3.0..3.0f64, m in -3.0..3.0f64, dm in 0.0..2.0f64) {
                let (data, c) = controlled();
                let (v1, _) = ray_hamiltonian(&data, &c, RayIndex::FIRST, 0.2, 0.5, 0.0, p, m).unwrap();
                let (v2, _) = ray_hamiltonian(&data, &c, RayIndex::FIRST, 0.2, 0.5, 0.0, p, m + dm).unwrap();
                prop_assert!(v2 >= v1);
            }

            #[test]
            fn cost_shift_moves_value_only(p in -3.0..3.0f64, m in -3.0..3.0f64, shift in -2.0..2.0f64) {
                let (data, c) = controlled();
                let shifted = data.with_cost_shift(shift);
                let a = ray_hamiltonian_upwind(&data, c.ray_points(0), 0, 0.2, 0.5, 0.0, p, p, m);
                let b = ray_hamiltonian_upwind(&shifted, c.ray_points(0), 0, 0.2, 0.5, 0.0, p, p, m);
                prop_assert!((b.value - a.value - shift).abs() < 1e-12);
                prop_assert_eq!(a.index, b.index);
            }

            #[test]
            fn kirchhoff_monotone_in_each_slope(p in proptest::collection::vec(-2.0..2.0f64, 3), k in 0usize..3, dp in 0.0..1.0f64) {
                let (data, c) = controlled();
                let a = kirchhoff_hamiltonian(&data, &c, 0.1, 0.2, &p).unwrap();
                let mut q = p.clone();
                q[k] += dp;
                let b = kirchhoff_hamiltonian(&data, &c, 0.1, 0.2, &q).unwrap();
                prop_assert!(b.value >= a.value);
            }
        }
    }
}
