//! Closed catalog of parametric coefficient families.
//!
//! The families are selected by name in the run configuration
//! (`family = "..."`) and evaluated as plain functions of their arguments.

use serde::{Deserialize, Serialize};

/// Scalar ray coefficient `c(t, x, l, beta)`, used for the diffusion, the
/// drift and the running reward on each ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum RayCoefficient {
    Constant {
        value: f64,
    },
    /// `intercept + slope * x`
    AffineX {
        intercept: f64,
        slope: f64,
    },
    /// `mean + amplitude * sin(t_freq * t + l_freq * l + phase)`
    Trig {
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        t_freq: f64,
        #[serde(default)]
        l_freq: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `intercept + gain * beta`
    ControlAffine {
        intercept: f64,
        gain: f64,
    },
    /// `intercept + linear * beta + quadratic * beta^2`
    ControlQuadratic {
        intercept: f64,
        #[serde(default)]
        linear: f64,
        quadratic: f64,
    },
}

impl RayCoefficient {
    pub const ZERO: RayCoefficient = RayCoefficient::Constant { value: 0.0 };

    pub fn constant(value: f64) -> Self {
        RayCoefficient::Constant { value }
    }

    #[inline]
    pub fn eval(&self, t: f64, x: f64, l: f64, beta: f64) -> f64 {
        match *self {
            RayCoefficient::Constant { value } => value,
            RayCoefficient::AffineX { intercept, slope } => intercept + slope * x,
            RayCoefficient::Trig {
                mean,
                amplitude,
                t_freq,
                l_freq,
                phase,
            } => mean + amplitude * (t_freq * t + l_freq * l + phase).sin(),
            RayCoefficient::ControlAffine { intercept, gain } => intercept + gain * beta,
            RayCoefficient::ControlQuadratic {
                intercept,
                linear,
                quadratic,
            } => intercept + beta * (linear + quadratic * beta),
        }
    }

    pub fn depends_on_local_time(&self) -> bool {
        matches!(self, RayCoefficient::Trig { amplitude, l_freq, .. } if *amplitude != 0.0 && *l_freq != 0.0)
    }

    pub fn depends_on_control(&self) -> bool {
        match self {
            RayCoefficient::ControlAffine { gain, .. } => *gain != 0.0,
            RayCoefficient::ControlQuadratic { linear, quadratic, .. } => *linear != 0.0 || *quadratic != 0.0,
            _ => false,
        }
    }

    /// Adds a constant to the coefficient.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            RayCoefficient::Constant { value } => *value += c,
            RayCoefficient::AffineX { intercept, .. }
            | RayCoefficient::ControlAffine { intercept, .. }
            | RayCoefficient::ControlQuadratic { intercept, .. } => *intercept += c,
            RayCoefficient::Trig { mean, .. } => *mean += c,
        }
        out
    }
}

/// Terminal payoff `g_i(x, l)` on one ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalPayoff {
    Constant {
        value: f64,
    },
    /// `intercept + slope * x + l_slope * l`
    Affine {
        #[serde(default)]
        intercept: f64,
        #[serde(default)]
        slope: f64,
        #[serde(default)]
        l_slope: f64,
    },
    /// `intercept + scale * (1 - exp(-rate * x))`
    Saturating {
        #[serde(default)]
        intercept: f64,
        scale: f64,
        rate: f64,
    },
    /// `mean + amplitude * sin(x_freq * x + l_freq * l + phase)`
    Trig {
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        x_freq: f64,
        #[serde(default)]
        l_freq: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl TerminalPayoff {
    pub fn constant(value: f64) -> Self {
        TerminalPayoff::Constant { value }
    }

    pub fn linear(slope: f64) -> Self {
        TerminalPayoff::Affine {
            intercept: 0.0,
            slope,
            l_slope: 0.0,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64, l: f64) -> f64 {
        match *self {
            TerminalPayoff::Constant { value } => value,
            TerminalPayoff::Affine {
                intercept,
                slope,
                l_slope,
            } => intercept + slope * x + l_slope * l,
            TerminalPayoff::Saturating { intercept, scale, rate } => intercept + scale * (1.0 - (-rate * x).exp()),
            TerminalPayoff::Trig {
                mean,
                amplitude,
                x_freq,
                l_freq,
                phase,
            } => mean + amplitude * (x_freq * x + l_freq * l + phase).sin(),
        }
    }

    pub fn depends_on_local_time(&self) -> bool {
        match self {
            TerminalPayoff::Affine { l_slope, .. } => *l_slope != 0.0,
            TerminalPayoff::Trig { amplitude, l_freq, .. } => *amplitude != 0.0 && *l_freq != 0.0,
            _ => false,
        }
    }
}

/// Spinning measure `(S_1, ..., S_I)(t, l, theta)` at the vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpinningMeasure {
    /// `S_i = 1 / I`
    Uniform,
    /// Fixed probability vector.
    Fixed { weights: Vec<f64> },
    /// The vertex control is itself the probability vector: `S_i = theta_i`.
    ControlWeights,
    /// Two rays only: `S = (theta_1, 1 - theta_1)`.
    TwoRay,
    /// `S = start + (end - start) * (1 - exp(-rate * l))`; when `start` is
    /// omitted the vertex control vector is used as the starting weights.
    LocalTimeBlend {
        #[serde(default)]
        start: Option<Vec<f64>>,
        end: Vec<f64>,
        rate: f64,
    },
}

impl SpinningMeasure {
    /// Writes the weights into `out` (length `I`).
    #[inline]
    pub fn eval_into(&self, _t: f64, l: f64, theta: &[f64], out: &mut [f64]) {
        let n = out.len();
        match self {
            SpinningMeasure::Uniform => out.fill(1.0 / n as f64),
            SpinningMeasure::Fixed { weights } => out.copy_from_slice(&weights[..n]),
            SpinningMeasure::ControlWeights => out.copy_from_slice(&theta[..n]),
            SpinningMeasure::TwoRay => {
                out[0] = theta[0];
                out[1] = 1.0 - theta[0];
            }
            SpinningMeasure::LocalTimeBlend { start, end, rate } => {
                let w = 1.0 - (-rate * l).exp();
                let start = start.as_deref().unwrap_or(theta);
                for (k, o) in out.iter_mut().enumerate() {
                    *o = start[k] + (end[k] - start[k]) * w;
                }
            }
        }
    }

    pub fn depends_on_local_time(&self) -> bool {
        matches!(self, SpinningMeasure::LocalTimeBlend { rate, .. } if *rate != 0.0)
    }

    /// Minimum number of vertex-control components the family reads.
    pub fn control_dimension(&self, ray_count: usize) -> usize {
        match self {
            SpinningMeasure::ControlWeights => ray_count,
            SpinningMeasure::LocalTimeBlend { start: None, .. } => ray_count,
            SpinningMeasure::TwoRay => 1,
            _ => 0,
        }
    }
}

/// Vertex running reward `h_0(t, l, theta)`, paid per unit of local time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum VertexCost {
    Constant {
        value: f64,
    },
    /// `intercept - weight * sum_j |theta_j - center_j|` over the listed
    /// components of `center`.
    ThetaDistance {
        #[serde(default)]
        intercept: f64,
        weight: f64,
        center: Vec<f64>,
    },
    /// `mean + amplitude * sin(t_freq * t + l_freq * l + phase)`
    Trig {
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        t_freq: f64,
        #[serde(default)]
        l_freq: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl VertexCost {
    pub const ZERO: VertexCost = VertexCost::Constant { value: 0.0 };

    #[inline]
    pub fn eval(&self, t: f64, l: f64, theta: &[f64]) -> f64 {
        match self {
            VertexCost::Constant { value } => *value,
            VertexCost::ThetaDistance {
                intercept,
                weight,
                center,
            } => {
                let d: f64 = center.iter().zip(theta).map(|(c, th)| (th - c).abs()).sum();
                intercept - weight * d
            }
            VertexCost::Trig {
                mean,
                amplitude,
                t_freq,
                l_freq,
                phase,
            } => mean + amplitude * (t_freq * t + l_freq * l + phase).sin(),
        }
    }

    pub fn depends_on_local_time(&self) -> bool {
        matches!(self, VertexCost::Trig { amplitude, l_freq, .. } if *amplitude != 0.0 && *l_freq != 0.0)
    }

    pub fn control_dimension(&self) -> usize {
        match self {
            VertexCost::ThetaDistance { center, .. } => center.len(),
            _ => 0,
        }
    }
}
