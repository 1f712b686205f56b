//! Run configuration read from a TOML file.
//!
//! Sections: `[instance]` (a named preset or explicit coefficient data),
//! `[grid]`, `[simulation]`, `[validate]`, `[verify]` with a list of
//! `[[verify.checks]]`, and `[output]`. Unknown keys are rejected. The
//! config hash is the SHA-256 of the effective configuration with the
//! output section removed, so relocating the output does not change it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hjb::{build_grid, Grid};
use crate::instances;
use crate::model::{
    ControlInterval, ControlSets, DeclaredBounds, ProblemData, RayData, SpinningMeasure, TerminalPayoff,
    VertexControls, VertexCost,
};
use crate::network::{NetworkPoint, RayIndex, StarNetwork};
use crate::simulate::{ConstantPolicy, SimConfig};
use crate::verify::Probe;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instance: InstanceConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Either `preset` (with an optional scalar `parameter`) or the explicit
/// fields `horizon`, `rays`, `spinning`, `vertex_cost`, `bounds` and
/// optionally `controls`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Level `c` of the `constant` and `localtime_cost` presets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spinning: Option<SpinningMeasure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertex_cost: Option<VertexCost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<DeclaredBounds>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rays: Vec<RayData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls: Option<ControlsConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlsConfig {
    /// One interval shared by all rays, or one per ray.
    pub ray: Vec<ControlInterval>,
    pub vertex: VertexControls,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_n_x")]
    pub n_x: usize,
    #[serde(default = "default_l_max")]
    pub l_max: f64,
    #[serde(default = "default_n_l")]
    pub n_l: usize,
    #[serde(default = "default_safety")]
    pub safety: f64,
}

fn default_x_max() -> f64 {
    6.0
}
fn default_n_x() -> usize {
    201
}
fn default_l_max() -> f64 {
    4.0
}
fn default_n_l() -> usize {
    9
}
fn default_safety() -> f64 {
    1.0
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            x_max: default_x_max(),
            n_x: default_n_x(),
            l_max: default_l_max(),
            n_l: default_n_l(),
            safety: default_safety(),
        }
    }
}

/// A state `(t, x, ray, l)`; `ray` is one-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default)]
    pub t: f64,
    #[serde(default)]
    pub x: f64,
    #[serde(default = "first_ray")]
    pub ray: usize,
    #[serde(default)]
    pub l: f64,
}

fn first_ray() -> usize {
    1
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            t: 0.0,
            x: 0.0,
            ray: 1,
            l: 0.0,
        }
    }
}

impl ProbeConfig {
    pub fn to_probe(&self, ray_count: usize) -> Result<Probe> {
        let ray = RayIndex::new(self.ray, ray_count).map_err(|e| Error::Config(format!("probe: {e}")))?;
        let point = NetworkPoint::new(self.x, ray).map_err(|e| Error::Config(format!("probe: {e}")))?;
        if !(self.t >= 0.0) || !(self.l >= 0.0) {
            return Err(Error::Config(format!(
                "probe time and local time must be non-negative, got t={} l={}",
                self.t, self.l
            )));
        }
        Ok(Probe::new(self.t, point, self.l))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Start states of the `simulate` estimates.
    #[serde(default = "default_probes")]
    pub probes: Vec<ProbeConfig>,
    /// Number of paths per probe written to the path dump (0 disables it).
    #[serde(default)]
    pub dump_paths: usize,
    #[serde(default)]
    pub policy: PolicyChoice,
}

fn default_dt() -> f64 {
    1e-3
}
fn default_n_paths() -> usize {
    10_000
}
fn default_seed() -> u64 {
    1
}
fn default_probes() -> Vec<ProbeConfig> {
    vec![ProbeConfig::default()]
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            dt: default_dt(),
            n_paths: default_n_paths(),
            seed: default_seed(),
            probes: default_probes(),
            dump_paths: 0,
            policy: PolicyChoice::default(),
        }
    }
}

/// Feedback used by the Monte Carlo stages.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyChoice {
    /// The policy extracted from the solved HJB system.
    #[default]
    Solved,
    /// `beta = 0` on every ray and uniform vertex weights.
    Uncontrolled,
    Constant(ConstantPolicyConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantPolicyConfig {
    /// One value shared by all rays, or one per ray.
    pub ray: Vec<f64>,
    pub vertex: Vec<f64>,
}

impl ConstantPolicyConfig {
    pub fn build(&self, ray_count: usize) -> Result<ConstantPolicy> {
        let ray = match self.ray.len() {
            1 => vec![self.ray[0]; ray_count],
            n if n == ray_count => self.ray.clone(),
            n => {
                return Err(Error::Config(format!(
                    "constant policy lists {n} ray controls, expected 1 or {ray_count}"
                )))
            }
        };
        if self.vertex.is_empty() {
            return Err(Error::Config("constant policy needs a vertex control".into()));
        }
        Ok(ConstantPolicy::new(ray, self.vertex.clone()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    #[serde(default = "default_samples")]
    pub samples_per_axis: usize,
}

fn default_samples() -> usize {
    5
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            samples_per_axis: default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_checks")]
    pub checks: Vec<CheckConfig>,
}

fn default_checks() -> Vec<CheckConfig> {
    vec![
        CheckConfig::Comparison { shift: default_shift() },
        CheckConfig::Truncation {
            axis: TruncationAxisConfig::Space,
            probes: Vec::new(),
            rel_tol: default_truncation_tol(),
        },
    ]
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            checks: default_checks(),
        }
    }
}

/// Per-check overrides of the simulation step and path count.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimOverride {
    pub dt: Option<f64>,
    pub n_paths: Option<usize>,
}

/// One entry of `[[verify.checks]]`, selected by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckConfig {
    Diffraction {
        #[serde(default)]
        t0: f64,
        #[serde(default)]
        l0: f64,
        #[serde(default = "default_deltas")]
        deltas: Vec<f64>,
        #[serde(default)]
        policy: PolicyChoice,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_paths: Option<usize>,
    },
    Nonstickiness {
        #[serde(default)]
        start: ProbeConfig,
        #[serde(default = "default_epsilons")]
        epsilons: Vec<f64>,
        #[serde(default)]
        policy: PolicyChoice,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_paths: Option<usize>,
    },
    LocaltimeRate {
        #[serde(default)]
        t_star: f64,
        #[serde(default)]
        l_star: f64,
        #[serde(default = "default_radii")]
        radii: Vec<f64>,
        #[serde(default = "default_r_tolerance")]
        r_tolerance: f64,
        /// Known limit of `E[tau_h] / h^2`; omitted, only boundedness is checked.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q_target: Option<f64>,
        #[serde(default = "default_q_tolerance")]
        q_tolerance: f64,
        #[serde(default = "default_q_ratio")]
        q_ratio_bound: f64,
        #[serde(default)]
        policy: PolicyChoice,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_paths: Option<usize>,
    },
    ValueCharacterization {
        /// Defaults to the simulation probes.
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        probes: Vec<ProbeConfig>,
        #[serde(default = "default_tol_disc")]
        tol_disc: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        alternatives: Vec<ConstantPolicyConfig>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_paths: Option<usize>,
    },
    Oracle {
        oracle: OracleKind,
        #[serde(default = "default_sigma")]
        sigma: f64,
        /// Multiplier of the closed form.
        #[serde(default = "default_scale")]
        scale: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        probes: Vec<ProbeConfig>,
        /// Fraction of `max |g|` over the probes (of `max |oracle|` when
        /// `g` vanishes there).
        #[serde(default = "default_oracle_tol")]
        rel_tolerance: f64,
    },
    Dpp {
        #[serde(default)]
        probe: ProbeConfig,
        stop: StopConfig,
        #[serde(default = "default_tol_disc")]
        tol_disc: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dt: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_paths: Option<usize>,
    },
    Comparison {
        #[serde(default = "default_shift")]
        shift: f64,
    },
    TerminalOrdering {
        extra: TerminalPayoff,
    },
    NoLocaltime {},
    Truncation {
        axis: TruncationAxisConfig,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        probes: Vec<ProbeConfig>,
        #[serde(default = "default_truncation_tol")]
        rel_tol: f64,
    },
    OdeGadget {
        #[serde(default = "default_settings")]
        settings: usize,
    },
}

fn default_deltas() -> Vec<f64> {
    vec![0.2, 0.1, 0.05]
}
fn default_epsilons() -> Vec<f64> {
    vec![0.4, 0.2, 0.1, 0.05]
}
fn default_radii() -> Vec<f64> {
    vec![0.4, 0.2, 0.1]
}
fn default_r_tolerance() -> f64 {
    0.05
}
fn default_q_tolerance() -> f64 {
    0.1
}
fn default_q_ratio() -> f64 {
    2.0
}
fn default_tol_disc() -> f64 {
    0.06
}
fn default_sigma() -> f64 {
    1.0
}
fn default_scale() -> f64 {
    1.0
}
fn default_oracle_tol() -> f64 {
    0.02
}
fn default_shift() -> f64 {
    1.0
}
fn default_truncation_tol() -> f64 {
    0.005
}
fn default_settings() -> usize {
    20
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// `scale * E|x + sigma W_{T-t}|`.
    FoldedNormal,
    /// `scale * E[L_{T-t}]` for the reflected motion started at `x`.
    LocalTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StopConfig {
    After(f64),
    ExitRadius(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationAxisConfig {
    Space,
    LocalTime,
}

impl CheckConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            CheckConfig::Diffraction { .. } => "diffraction",
            CheckConfig::Nonstickiness { .. } => "nonstickiness",
            CheckConfig::LocaltimeRate { .. } => "localtime_rate",
            CheckConfig::ValueCharacterization { .. } => "value_characterization",
            CheckConfig::Oracle { .. } => "oracle",
            CheckConfig::Dpp { .. } => "dpp",
            CheckConfig::Comparison { .. } => "comparison",
            CheckConfig::TerminalOrdering { .. } => "terminal_ordering",
            CheckConfig::NoLocaltime {} => "no_localtime",
            CheckConfig::Truncation { .. } => "truncation",
            CheckConfig::OdeGadget { .. } => "ode_gadget",
        }
    }

    /// Simulation overrides of the Monte Carlo checks.
    pub fn sim_override(&self) -> SimOverride {
        match *self {
            CheckConfig::Diffraction { dt, n_paths, .. }
            | CheckConfig::Nonstickiness { dt, n_paths, .. }
            | CheckConfig::LocaltimeRate { dt, n_paths, .. }
            | CheckConfig::ValueCharacterization { dt, n_paths, .. }
            | CheckConfig::Dpp { dt, n_paths, .. } => SimOverride { dt, n_paths },
            _ => SimOverride::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: PathBuf,
    /// Prepended to every output file name.
    #[serde(default)]
    pub prefix: String,
    /// Emit gnuplot data and script files next to the value CSV.
    #[serde(default = "default_true")]
    pub plots: bool,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_true() -> bool {
    true
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_dir(),
            prefix: String::new(),
            plots: true,
        }
    }
}

/// Problem data, controls and grid resolved from a configuration.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub name: String,
    pub data: ProblemData,
    pub controls: ControlSets,
    pub grid: Grid,
}

impl RunConfig {
    /// Parses TOML text; `origin` labels diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// SHA-256 (hex) of the configuration without the output section.
    pub fn hash(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Hashed<'a> {
            instance: &'a InstanceConfig,
            grid: &'a GridConfig,
            simulation: &'a SimulationConfig,
            validate: &'a ValidateConfig,
            verify: &'a VerifyConfig,
        }
        let text = toml::to_string(&Hashed {
            instance: &self.instance,
            grid: &self.grid,
            simulation: &self.simulation,
            validate: &self.validate,
            verify: &self.verify,
        })
        .map_err(|e| Error::Config(format!("cannot serialize configuration: {e}")))?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }

    /// Builds problem data, controls and the solver grid.
    pub fn resolve(&self) -> Result<Resolved> {
        let (name, data, controls) = self.instance.build()?;
        let network = StarNetwork::new(data.ray_count(), self.grid.x_max)?;
        let grid = build_grid(
            &network,
            &data,
            self.grid.n_x,
            self.grid.n_l,
            self.grid.l_max,
            self.grid.safety,
        )?;
        Ok(Resolved {
            name,
            data,
            controls,
            grid,
        })
    }

    pub fn sim_config(&self, o: &SimOverride, seed: u64) -> Result<SimConfig> {
        SimConfig::new(
            o.dt.unwrap_or(self.simulation.dt),
            o.n_paths.unwrap_or(self.simulation.n_paths),
            seed,
        )
    }
}

impl InstanceConfig {
    pub fn build(&self) -> Result<(String, ProblemData, ControlSets)> {
        if let Some(name) = &self.preset {
            if self.horizon.is_some()
                || self.spinning.is_some()
                || self.vertex_cost.is_some()
                || self.bounds.is_some()
                || !self.rays.is_empty()
                || self.controls.is_some()
            {
                return Err(Error::Config(format!(
                    "instance: preset '{name}' cannot be combined with explicit coefficient fields"
                )));
            }
            let inst = match (name.as_str(), self.parameter) {
                ("constant", Some(c)) => instances::constant(c)?,
                ("localtime_cost", Some(c)) => instances::localtime_cost(c)?,
                (_, Some(_)) => return Err(Error::Config(format!("instance: preset '{name}' takes no parameter"))),
                (_, None) => instances::by_name(name)?,
            };
            return Ok((inst.name.to_string(), inst.data, inst.controls));
        }
        if self.parameter.is_some() {
            return Err(Error::Config("instance: parameter is only valid with a preset".into()));
        }
        let missing = |f: &str| Error::Config(format!("instance: missing field '{f}' (or set 'preset')"));
        let horizon = self.horizon.ok_or_else(|| missing("horizon"))?;
        let bounds = self.bounds.ok_or_else(|| missing("bounds"))?;
        if self.rays.is_empty() {
            return Err(missing("rays"));
        }
        let data = ProblemData::new(
            horizon,
            self.rays.clone(),
            self.spinning.clone().unwrap_or(SpinningMeasure::Uniform),
            self.vertex_cost.clone().unwrap_or(VertexCost::ZERO),
            bounds,
        )?;
        let controls = match &self.controls {
            Some(c) => ControlSets::new(data.ray_count(), &c.ray, &c.vertex)?,
            None => ControlSets::uncontrolled(data.ray_count()),
        };
        data.check_controls(&controls)?;
        Ok(("custom".to_string(), data, controls))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_with_defaults() {
        let c = RunConfig::parse("[instance]\npreset = \"folded_normal\"\n", "t").unwrap();
        assert_eq!(c.grid, GridConfig::default());
        assert_eq!(c.verify.checks.len(), 2);
        let r = c.resolve().unwrap();
        assert_eq!(r.name, "folded_normal");
        assert_eq!(r.grid.n_x, 201);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let e = RunConfig::parse("[instance]\npreset = \"constant\"\n[grid]\nnx = 3\n", "cfg.toml").unwrap_err();
        let msg = e.to_string();
        assert!(matches!(e, Error::Config(_)));
        assert!(
            msg.contains("cfg.toml") && msg.contains("line 4") && msg.contains("nx"),
            "{msg}"
        );
        let e = RunConfig::parse(
            "[instance]\npreset = \"constant\"\n[[verify.checks]]\nkind = \"nope\"\n",
            "c",
        )
        .unwrap_err();
        assert!(e.to_string().contains("nope"));
    }

    #[test]
    fn unknown_preset_and_mixing() {
        let c = RunConfig::parse("[instance]\npreset = \"bogus\"\n", "c").unwrap();
        assert!(matches!(c.resolve(), Err(Error::Config(_))));
        let c = RunConfig::parse("[instance]\npreset = \"constant\"\nhorizon = 1.0\n", "c").unwrap();
        assert!(c.resolve().is_err());
        let c = RunConfig::parse("[instance]\npreset = \"folded_normal\"\nparameter = 2.0\n", "c").unwrap();
        assert!(c.resolve().is_err());
    }

    #[test]
    fn explicit_instance() {
        let text = r#"
[instance]
horizon = 0.5
spinning = { family = "fixed", weights = [0.25, 0.75] }
vertex_cost = { family = "constant", value = -1.0 }
bounds = { sigma_lower = 0.5, sigma_upper = 1.0, drift = 1.0, cost = 1.0, spin_lower = 0.1, spin_upper = 1.0 }
controls = { ray = [{ lower = -1.0, upper = 1.0, count = 5 }], vertex = { points = [[0.5, 0.5]] } }

[[instance.rays]]
sigma = { family = "constant", value = 1.0 }
drift = { family = "control_affine", intercept = 0.0, gain = 1.0 }
terminal = { family = "affine", slope = 1.0 }

[[instance.rays]]
sigma = { family = "constant", value = 1.0 }
terminal = { family = "affine", slope = 1.0 }

[grid]
n_x = 21
n_l = 3
"#;
        let c = RunConfig::parse(text, "c").unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.data.ray_count(), 2);
        assert_eq!(r.controls.ray_points(0).len(), 5);
        assert_eq!(r.grid.horizon, 0.5);
    }

    #[test]
    fn checks_parse() {
        let text = r#"
[instance]
preset = "folded_normal"

[[verify.checks]]
kind = "diffraction"
n_paths = 1000
policy = "uncontrolled"

[[verify.checks]]
kind = "dpp"
stop = { exit_radius = 0.5 }

[[verify.checks]]
kind = "oracle"
oracle = "local_time"
scale = -1.0
probes = [{ x = 0.5, ray = 2 }]

[[verify.checks]]
kind = "no_localtime"

[[verify.checks]]
kind = "value_characterization"
alternatives = [{ ray = [0.0], vertex = [0.5, 0.5] }]
"#;
        let c = RunConfig::parse(text, "c").unwrap();
        let kinds: Vec<_> = c.verify.checks.iter().map(CheckConfig::kind).collect();
        assert_eq!(
            kinds,
            ["diffraction", "dpp", "oracle", "no_localtime", "value_characterization"]
        );
        match &c.verify.checks[0] {
            CheckConfig::Diffraction { n_paths, policy, .. } => {
                assert_eq!(*n_paths, Some(1000));
                assert_eq!(*policy, PolicyChoice::Uncontrolled);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn hash_ignores_output_and_tracks_the_rest() {
        let a = RunConfig::parse("[instance]\npreset = \"constant\"\n", "c").unwrap();
        let mut b = a.clone();
        b.output.directory = PathBuf::from("elsewhere");
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.simulation.seed = 7;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
    }

    #[test]
    fn effective_config_round_trips() {
        let text = r#"
[instance]
preset = "constant"
parameter = 2.5

[[verify.checks]]
kind = "localtime_rate"
q_target = 1.0
dt = 2.5e-5

[[verify.checks]]
kind = "terminal_ordering"
extra = { family = "saturating", scale = 1.0, rate = 2.0 }
"#;
        let c = RunConfig::parse(text, "c").unwrap();
        let again = RunConfig::parse(&toml::to_string(&c).unwrap(), "c").unwrap();
        assert_eq!(c, again);
    }
}
