//! Sampled evidence for the regularity assumption on the problem data.
//!
//! Sup norms and finite-difference Lipschitz quotients are collected on a
//! tensor grid of `(t, x, l)` and over every control grid point, then
//! compared with the declared constants.

use std::fmt;

use super::{ControlSets, ProblemData, MAX_RAYS};
use crate::error::{Error, Result};

/// Box over which the data are sampled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleDomain {
    pub x_max: f64,
    pub l_max: f64,
}

/// One condition of the assumption report.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionEntry {
    pub condition: &'static str,
    pub description: &'static str,
    /// Sampled worst value of the checked quantity.
    pub worst: f64,
    pub bound: f64,
    /// `true` when `worst` lies below (`upper`) or above (`!upper`) `bound`.
    pub upper: bool,
    pub pass: bool,
}

impl AssumptionEntry {
    fn upper(condition: &'static str, description: &'static str, worst: f64, bound: f64) -> Self {
        AssumptionEntry {
            condition,
            description,
            worst,
            bound,
            upper: true,
            pass: worst <= bound,
        }
    }

    fn lower(condition: &'static str, description: &'static str, worst: f64, bound: f64) -> Self {
        AssumptionEntry {
            condition,
            description,
            worst,
            bound,
            upper: false,
            pass: worst >= bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub entries: Vec<AssumptionEntry>,
    pub samples_per_axis: usize,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, condition: &str) -> Option<&AssumptionEntry> {
        self.entries.iter().find(|e| e.condition == condition)
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "assumption report ({} samples per axis)", self.samples_per_axis)?;
        for e in &self.entries {
            writeln!(
                f,
                "  [{}] {:<9} {:<48} worst={:<12.6e} {} {:.6e}",
                if e.pass { "PASS" } else { "FAIL" },
                e.condition,
                e.description,
                e.worst,
                if e.upper { "<=" } else { ">=" },
                e.bound
            )?;
        }
        Ok(())
    }
}

/// Sup norm plus Lipschitz quotients in each listed axis.
#[derive(Default)]
struct Regularity {
    sup: f64,
    lip_t: f64,
    lip_x: f64,
    lip_l: f64,
}

impl Regularity {
    fn total(&self) -> f64 {
        self.sup + self.lip_t + self.lip_x + self.lip_l
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidData(format!("{what} evaluated to {v}")))
    }
}

fn quotient(a: f64, b: f64, d: f64) -> f64 {
    if d > 0.0 {
        (a - b).abs() / d
    } else {
        0.0
    }
}

/// Samples the data on a `samples_per_axis`-point tensor grid and reports
/// one entry per condition of the assumption.
pub fn validate_assumptions(
    data: &ProblemData,
    controls: &ControlSets,
    domain: SampleDomain,
    samples_per_axis: usize,
) -> Result<AssumptionReport> {
    if samples_per_axis < 2 {
        return Err(Error::InvalidInput("samples_per_axis must be at least 2".into()));
    }
    data.check_controls(controls)?;
    let n = samples_per_axis;
    let ts = axis(0.0, data.horizon(), n);
    let xs = axis(0.0, domain.x_max, n);
    let ls = axis(0.0, domain.l_max, n);
    let bounds = *data.bounds();

    let mut sigma_min = f64::INFINITY;
    let mut sigma_reg = Regularity::default();
    let mut drift_reg = Regularity::default();
    let mut cost_reg = Regularity::default();

    type Eval = fn(&ProblemData, usize, f64, f64, f64, f64) -> f64;
    let evaluators: [(&str, Eval); 3] = [
        ("sigma", ProblemData::sigma),
        ("drift", ProblemData::drift),
        ("cost", ProblemData::cost),
    ];

    for ray in 0..data.ray_count() {
        for &beta in controls.ray_points(ray) {
            for (which, (name, f)) in evaluators.iter().enumerate() {
                let reg = match which {
                    0 => &mut sigma_reg,
                    1 => &mut drift_reg,
                    _ => &mut cost_reg,
                };
                for (a, &t) in ts.iter().enumerate() {
                    for (b, &x) in xs.iter().enumerate() {
                        for (c, &l) in ls.iter().enumerate() {
                            let v = finite(f(data, ray, t, x, l, beta), name)?;
                            if which == 0 {
                                sigma_min = sigma_min.min(v);
                            }
                            reg.sup = reg.sup.max(v.abs());
                            if a > 0 {
                                let w = f(data, ray, ts[a - 1], x, l, beta);
                                reg.lip_t = reg.lip_t.max(quotient(v, w, t - ts[a - 1]));
                            }
                            if b > 0 {
                                let w = f(data, ray, t, xs[b - 1], l, beta);
                                reg.lip_x = reg.lip_x.max(quotient(v, w, x - xs[b - 1]));
                            }
                            if c > 0 {
                                let w = f(data, ray, t, x, ls[c - 1], beta);
                                reg.lip_l = reg.lip_l.max(quotient(v, w, l - ls[c - 1]));
                            }
                        }
                    }
                }
            }
        }
    }

    let ray_count = data.ray_count();
    let mut spin_min = f64::INFINITY;
    let mut simplex_err: f64 = 0.0;
    let mut spin_reg = Regularity::default();
    let mut h0_reg = Regularity::default();
    let mut cur = [0.0f64; MAX_RAYS];
    let mut prev = [0.0f64; MAX_RAYS];
    for theta in controls.vertex_points() {
        for (a, &t) in ts.iter().enumerate() {
            for (c, &l) in ls.iter().enumerate() {
                data.spin_into(t, l, theta, &mut cur[..ray_count]);
                let w = &cur[..ray_count];
                for &s in w {
                    finite(s, "spinning weight")?;
                }
                simplex_err = simplex_err.max((w.iter().sum::<f64>() - 1.0).abs());
                for &s in w {
                    spin_min = spin_min.min(s);
                    spin_reg.sup = spin_reg.sup.max(s.abs());
                }
                let h0 = finite(data.vertex_cost(t, l, theta), "vertex cost")?;
                h0_reg.sup = h0_reg.sup.max(h0.abs());
                if a > 0 {
                    let dt = t - ts[a - 1];
                    data.spin_into(ts[a - 1], l, theta, &mut prev[..ray_count]);
                    for k in 0..ray_count {
                        spin_reg.lip_t = spin_reg.lip_t.max(quotient(cur[k], prev[k], dt));
                    }
                    let w = data.vertex_cost(ts[a - 1], l, theta);
                    h0_reg.lip_t = h0_reg.lip_t.max(quotient(h0, w, dt));
                }
                if c > 0 {
                    let dl = l - ls[c - 1];
                    data.spin_into(t, ls[c - 1], theta, &mut prev[..ray_count]);
                    for k in 0..ray_count {
                        spin_reg.lip_l = spin_reg.lip_l.max(quotient(cur[k], prev[k], dl));
                    }
                    let w = data.vertex_cost(t, ls[c - 1], theta);
                    h0_reg.lip_l = h0_reg.lip_l.max(quotient(h0, w, dl));
                }
            }
        }
    }

    let entries = vec![
        AssumptionEntry::lower(
            "A",
            "spinning lower bound min S_i >= zeta_lower",
            spin_min,
            bounds.spin_lower,
        ),
        AssumptionEntry::upper(
            "A-simplex",
            "max |sum_i S_i - 1|",
            simplex_err,
            super::SIMPLEX_TOLERANCE,
        ),
        AssumptionEntry::lower(
            "E",
            "ellipticity min sigma_i >= sigma_lower",
            sigma_min,
            bounds.sigma_lower,
        ),
        AssumptionEntry::upper(
            "R-i",
            "sup|b| + Lipschitz(t,x,l) <= |b|",
            drift_reg.total(),
            bounds.drift,
        ),
        AssumptionEntry::upper(
            "R-ii",
            "sup|sigma| + Lipschitz(t,x,l) <= sigma_upper",
            sigma_reg.total(),
            bounds.sigma_upper,
        ),
        AssumptionEntry::upper(
            "R-iii",
            "sup|h| + Lipschitz(t,x,l) <= |h|",
            cost_reg.total(),
            bounds.cost,
        ),
        AssumptionEntry::upper(
            "R-iv",
            "sup|S| + Lipschitz(t,l) <= zeta_upper",
            spin_reg.total(),
            bounds.spin_upper,
        ),
        AssumptionEntry::upper("R-v", "sup|h_0| + Lipschitz(t,l) <= |h|", h0_reg.total(), bounds.cost),
    ];
    Ok(AssumptionReport {
        entries,
        samples_per_axis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DeclaredBounds, RayCoefficient, RayData, SpinningMeasure, TerminalPayoff, VertexCost};

    fn bounds() -> DeclaredBounds {
        DeclaredBounds {
            sigma_lower: 0.5,
            sigma_upper: 1.0,
            drift: 1.0,
            cost: 1.0,
            spin_lower: 0.1,
            spin_upper: 1.0,
        }
    }

    fn domain() -> SampleDomain {
        SampleDomain { x_max: 2.0, l_max: 1.0 }
    }

    #[test]
    fn constant_data_passes() {
        let data = ProblemData::new(
            1.0,
            vec![RayData::brownian(1.0, TerminalPayoff::constant(0.0)); 3],
            SpinningMeasure::Uniform,
            VertexCost::ZERO,
            bounds(),
        )
        .unwrap();
        let r = validate_assumptions(&data, &ControlSets::uncontrolled(3), domain(), 4).unwrap();
        assert!(r.all_pass(), "{r}");
        assert_eq!(r.entries.len(), 8);
    }

    #[test]
    fn ellipticity_violation() {
        let data = ProblemData::new(
            1.0,
            vec![RayData::brownian(0.1, TerminalPayoff::constant(0.0)); 2],
            SpinningMeasure::Uniform,
            VertexCost::ZERO,
            bounds(),
        )
        .unwrap();
        let r = validate_assumptions(&data, &ControlSets::uncontrolled(2), domain(), 3).unwrap();
        let e = r.entry("E").unwrap();
        assert!(!e.pass);
        assert_eq!(e.worst, 0.1);
        assert!(!r.all_pass());
    }

    #[test]
    fn simplex_violation() {
        let data = ProblemData::new(
            1.0,
            vec![RayData::brownian(1.0, TerminalPayoff::constant(0.0)); 2],
            SpinningMeasure::Fixed {
                weights: vec![0.6, 0.6],
            },
            VertexCost::ZERO,
            bounds(),
        )
        .unwrap();
        let r = validate_assumptions(&data, &ControlSets::uncontrolled(2), domain(), 3).unwrap();
        let e = r.entry("A-simplex").unwrap();
        assert!(!e.pass);
        assert!((e.worst - 0.2).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_quotients_count() {
        // sup 1.2, t-Lipschitz 0.2 on a fine sampling: total close to 1.4.
        let sigma = RayCoefficient::Trig {
            mean: 1.0,
            amplitude: 0.2,
            t_freq: 1.0,
            l_freq: 0.0,
            phase: 0.0,
        };
        let data = ProblemData::new(
            std::f64::consts::PI,
            vec![
                RayData::new(
                    sigma,
                    RayCoefficient::ZERO,
                    RayCoefficient::ZERO,
                    TerminalPayoff::constant(0.0)
                );
                2
            ],
            SpinningMeasure::Uniform,
            VertexCost::ZERO,
            DeclaredBounds {
                sigma_upper: 1.3,
                ..bounds()
            },
        )
        .unwrap();
        let r = validate_assumptions(&data, &ControlSets::uncontrolled(2), domain(), 41).unwrap();
        let e = r.entry("R-ii").unwrap();
        assert!(!e.pass);
        assert!((e.worst - 1.4).abs() < 1e-2, "{}", e.worst);
    }

    #[test]
    fn non_finite_is_an_error() {
        let data = ProblemData::new(
            1.0,
            vec![RayData::brownian(f64::NAN, TerminalPayoff::constant(0.0)); 2],
            SpinningMeasure::Uniform,
            VertexCost::ZERO,
            bounds(),
        )
        .unwrap();
        assert!(validate_assumptions(&data, &ControlSets::uncontrolled(2), domain(), 2).is_err());
    }
}
