//! Named benchmark instances used by the tests and the sample configs.

use crate::error::{Error, Result};
use crate::model::{
    ControlInterval, ControlSets, DeclaredBounds, ProblemData, RayCoefficient, RayData, SpinningMeasure,
    TerminalPayoff, VertexControls, VertexCost,
};

/// Problem data together with its control grids.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: &'static str,
    pub data: ProblemData,
    pub controls: ControlSets,
}

pub const NAMES: [&str; 5] = [
    "constant",
    "folded_normal",
    "localtime_cost",
    "controlled_drift",
    "spinning_localtime",
];

fn unit_bounds() -> DeclaredBounds {
    DeclaredBounds {
        sigma_lower: 0.5,
        sigma_upper: 1.0,
        drift: 1.0,
        cost: 1.0,
        spin_lower: 0.1,
        spin_upper: 1.0,
    }
}

fn brownian(name: &'static str, rays: usize, g: TerminalPayoff, h0: f64) -> Result<Instance> {
    Ok(Instance {
        name,
        data: ProblemData::new(
            1.0,
            vec![RayData::brownian(1.0, g); rays],
            SpinningMeasure::Uniform,
            VertexCost::Constant { value: h0 },
            unit_bounds(),
        )?,
        controls: ControlSets::uncontrolled(rays),
    })
}

/// `g = c`, no running rewards: the value is `c` everywhere.
pub fn constant(c: f64) -> Result<Instance> {
    brownian("constant", 2, TerminalPayoff::constant(c), 0.0)
}

/// Unit Brownian rays with `g(x) = x`: `u(t, x) = E|x + W_{T-t}|`.
pub fn folded_normal() -> Result<Instance> {
    brownian("folded_normal", 2, TerminalPayoff::linear(1.0), 0.0)
}

/// `g = 0`, `h_0 = -c`: `u(t, x) = -c E[L_{T-t}]` for the reflected motion.
pub fn localtime_cost(c: f64) -> Result<Instance> {
    brownian("localtime_cost", 2, TerminalPayoff::constant(0.0), -c)
}

/// Drift control `b = beta` on `[-1, 1]` with reward `-beta^2 / 2`.
pub fn controlled_drift() -> Result<Instance> {
    let ray = RayData::new(
        RayCoefficient::constant(1.0),
        RayCoefficient::ControlAffine {
            intercept: 0.0,
            gain: 1.0,
        },
        RayCoefficient::ControlQuadratic {
            intercept: 0.0,
            linear: 0.0,
            quadratic: -0.5,
        },
        TerminalPayoff::Saturating {
            intercept: 0.0,
            scale: 1.0,
            rate: 1.0,
        },
    );
    Ok(Instance {
        name: "controlled_drift",
        data: ProblemData::new(
            1.0,
            vec![ray; 2],
            SpinningMeasure::Uniform,
            VertexCost::ZERO,
            unit_bounds(),
        )?,
        controls: ControlSets::new(
            2,
            &[ControlInterval::uniform(-1.0, 1.0, 21)],
            &VertexControls::single(vec![0.5, 0.5]),
        )?,
    })
}

/// Three rays with local-time dependent spinning, diffusion and terminal
/// data, a controlled drift on ray 1 and a controlled vertex.
pub fn spinning_localtime() -> Result<Instance> {
    let sigma = RayCoefficient::Trig {
        mean: 1.0,
        amplitude: 0.1,
        t_freq: 1.0,
        l_freq: 1.0,
        phase: 0.0,
    };
    let g = TerminalPayoff::Trig {
        mean: 0.0,
        amplitude: 0.5,
        x_freq: 1.0,
        l_freq: 0.5,
        phase: 0.0,
    };
    let rays = vec![
        RayData::new(
            sigma.clone(),
            RayCoefficient::ControlAffine {
                intercept: 0.0,
                gain: 1.0,
            },
            RayCoefficient::ControlQuadratic {
                intercept: 0.0,
                linear: 0.0,
                quadratic: -1.0,
            },
            g.clone(),
        ),
        RayData::new(
            sigma.clone(),
            RayCoefficient::Trig {
                mean: 0.2,
                amplitude: 0.1,
                t_freq: 2.0,
                l_freq: 0.0,
                phase: 0.0,
            },
            RayCoefficient::constant(0.1),
            g.clone(),
        ),
        RayData::new(sigma, RayCoefficient::constant(-0.2), RayCoefficient::ZERO, g),
    ];
    let bounds = DeclaredBounds {
        sigma_lower: 0.5,
        sigma_upper: 1.35,
        drift: 1.0,
        cost: 1.0,
        spin_lower: 0.1,
        spin_upper: 1.0,
    };
    Ok(Instance {
        name: "spinning_localtime",
        data: ProblemData::new(
            1.0,
            rays,
            SpinningMeasure::LocalTimeBlend {
                start: None,
                end: vec![0.2, 0.3, 0.5],
                rate: 0.5,
            },
            VertexCost::ThetaDistance {
                intercept: -0.2,
                weight: 0.5,
                center: vec![0.5, 0.3, 0.2],
            },
            bounds,
        )?,
        controls: ControlSets::new(
            3,
            &[
                ControlInterval::uniform(-0.5, 0.5, 11),
                ControlInterval::singleton(0.0),
                ControlInterval::singleton(0.0),
            ],
            &VertexControls::Points {
                points: vec![vec![0.5, 0.3, 0.2], vec![0.2, 0.4, 0.4], vec![0.4, 0.2, 0.4]],
            },
        )?,
    })
}

/// Instance by name with its default parameters.
pub fn by_name(name: &str) -> Result<Instance> {
    match name {
        "constant" => constant(1.0),
        "folded_normal" => folded_normal(),
        "localtime_cost" => localtime_cost(1.0),
        "controlled_drift" => controlled_drift(),
        "spinning_localtime" => spinning_localtime(),
        other => Err(Error::Config(format!(
            "unknown instance preset '{other}'; known: {}",
            NAMES.join(", ")
        ))),
    }
}

/// Every named instance with default parameters.
pub fn catalog() -> Result<Vec<Instance>> {
    NAMES.iter().map(|n| by_name(n)).collect()
}
