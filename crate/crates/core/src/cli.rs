//! Batch front end: `validate`, `solve`, `simulate`, `verify` and `all`.
//!
//! Exit status: 0 when every executed check passes, 1 when a check or an
//! assumption fails, 2 on configuration errors, 3 on numerical failures.
//! Output files are written to one directory; each starts with the config
//! hash and, unless `--no-timestamp` is given, a generation time.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};

use crate::config::{
    CheckConfig, OracleKind, PolicyChoice, ProbeConfig, Resolved, RunConfig, StopConfig, TruncationAxisConfig,
};
use crate::error::{Error, Result};
use crate::hjb::{write_field_csv, write_preamble, CsvHeader};
use crate::model::{terminal_payoff, validate_assumptions, AssumptionReport, SampleDomain};
use crate::simulate::{estimate_value, path_seed, simulate_path, write_paths_csv, ConstantPolicy, Policy, SimConfig};
use crate::verify::{
    check_against_oracle, check_comparison_monotonicity, check_diffraction_law, check_dpp, check_localtime_rate,
    check_no_localtime_consistency, check_nonstickiness, check_ode_gadget, check_terminal_ordering, check_truncation,
    check_value_characterization, gadget_sweep, reflected_bm_oracle, write_reports_csv, write_reports_text,
    CheckReport, LocalTimeRate, Probe, Solution, StopRule, TruncationAxis,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Validate,
    Solve,
    Simulate,
    Verify,
    All,
}

/// Command-line arguments.
#[derive(Debug, Clone, Parser)]
#[command(
    name = "spider-hjb",
    version,
    about = "HJB solver and Monte Carlo checks on star networks"
)]
pub struct Options {
    #[arg(value_enum)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `simulation.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Omit the generation-time header line.
    #[arg(long)]
    pub no_timestamp: bool,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Result of a run: exit status, files written and a printable log.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub status: i32,
    pub files: Vec<PathBuf>,
    pub log: String,
}

/// An error together with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: String,
    pub error: Error,
}

impl StageError {
    pub fn status(&self) -> i32 {
        match self.error {
            Error::Config(_) | Error::InvalidData(_) | Error::Format { .. } => EXIT_CONFIG,
            _ => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for StageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "error in stage {}: {}", self.stage, self.error)
    }
}

trait Stage<T> {
    fn stage(self, name: &str) -> std::result::Result<T, StageError>;
}

impl<T> Stage<T> for Result<T> {
    fn stage(self, name: &str) -> std::result::Result<T, StageError> {
        self.map_err(|error| StageError {
            stage: name.to_string(),
            error,
        })
    }
}

/// Parses `args` (including the program name), runs, prints the log and
/// returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let opts = match Options::try_parse_from(args) {
        Ok(o) => o,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(n) = opts.jobs {
        // A pool may already exist when called repeatedly in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(&opts) {
        Ok(outcome) => {
            print!("{}", outcome.log);
            outcome.status
        }
        Err(e) => {
            eprintln!("{e}");
            e.status()
        }
    }
}

/// Run settings after command-line overrides.
struct Run {
    config: RunConfig,
    resolved: Resolved,
    header: CsvHeader,
    dir: PathBuf,
    solution: Option<Solution>,
    outcome: Outcome,
}

pub fn run(opts: &Options) -> std::result::Result<Outcome, StageError> {
    let mut config = RunConfig::load(&opts.config).stage("config")?;
    if let Some(seed) = opts.seed {
        config.simulation.seed = seed;
    }
    let dir = opts.out.clone().unwrap_or_else(|| config.output.directory.clone());
    let resolved = config.resolve().stage("config")?;
    let header = CsvHeader {
        config_hash: config.hash().stage("config")?,
        timestamp: (!opts.no_timestamp).then(timestamp),
    };
    fs::create_dir_all(&dir).map_err(Error::from).stage("output")?;
    let mut run = Run {
        config,
        resolved,
        header,
        dir,
        solution: None,
        outcome: Outcome::default(),
    };
    let _ = writeln!(
        run.outcome.log,
        "instance {} | config_sha256={}",
        run.resolved.name, run.header.config_hash
    );
    let mut ok = true;
    match opts.command {
        Command::Validate => ok &= run.validate()?,
        Command::Solve => run.solve()?,
        Command::Simulate => run.simulate()?,
        Command::Verify => ok &= run.verify()?,
        Command::All => {
            ok &= run.validate()?;
            run.solve()?;
            run.simulate()?;
            ok &= run.verify()?;
        }
    }
    run.outcome.status = if ok { EXIT_OK } else { EXIT_CHECK_FAILED };
    Ok(run.outcome)
}

fn timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

/// Quotes a CSV field when it contains a separator or a quote.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_assumptions_csv<W: Write>(out: &mut W, report: &AssumptionReport, header: &CsvHeader) -> Result<()> {
    write_preamble(out, header)?;
    writeln!(out, "# samples_per_axis={}", report.samples_per_axis)?;
    writeln!(out, "condition,description,worst,bound,relation,pass")?;
    for e in &report.entries {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            e.condition,
            csv_field(e.description),
            e.worst,
            e.bound,
            if e.upper { "at_most" } else { "at_least" },
            e.pass
        )?;
    }
    Ok(())
}

impl Run {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{}{name}", self.config.output.prefix))
    }

    fn write_file<F>(&mut self, name: &str, stage: &str, f: F) -> std::result::Result<(), StageError>
    where
        F: FnOnce(&mut BufWriter<fs::File>, &Self) -> Result<()>,
    {
        let path = self.path(name);
        let result = (|| {
            let mut w = BufWriter::new(fs::File::create(&path)?);
            f(&mut w, self)?;
            w.flush()?;
            Ok(())
        })();
        result.stage(stage)?;
        let _ = writeln!(self.outcome.log, "  wrote {}", path.display());
        self.outcome.files.push(path);
        Ok(())
    }

    fn solution(&mut self) -> std::result::Result<&Solution, StageError> {
        if self.solution.is_none() {
            let r = &self.resolved;
            self.solution = Some(Solution::solve(&r.data, &r.controls, &r.grid).stage("solve")?);
        }
        Ok(self.solution.as_ref().unwrap())
    }

    fn probes(&self, list: &[ProbeConfig], stage: &str) -> std::result::Result<Vec<Probe>, StageError> {
        let list = if list.is_empty() {
            &self.config.simulation.probes
        } else {
            list
        };
        let n = self.resolved.data.ray_count();
        list.iter().map(|p| p.to_probe(n)).collect::<Result<_>>().stage(stage)
    }

    fn validate(&mut self) -> std::result::Result<bool, StageError> {
        let r = &self.resolved;
        let domain = SampleDomain {
            x_max: self.config.grid.x_max,
            l_max: self.config.grid.l_max,
        };
        let report = validate_assumptions(&r.data, &r.controls, domain, self.config.validate.samples_per_axis)
            .stage("validate")?;
        let _ = write!(self.outcome.log, "{report}");
        self.write_file("assumptions.txt", "validate", |w, run| {
            write_preamble(w, &run.header)?;
            write!(w, "{report}")?;
            Ok(())
        })?;
        self.write_file("assumptions.csv", "validate", |w, run| {
            write_assumptions_csv(w, &report, &run.header)
        })?;
        Ok(report.all_pass())
    }

    fn solve(&mut self) -> std::result::Result<(), StageError> {
        self.solution()?;
        let g = self.resolved.grid;
        let _ = writeln!(
            self.outcome.log,
            "solved on n_t={} n_x={} n_l={} (dt={:e}, dx={:e}, dl={:e})",
            g.n_t, g.n_x, g.n_l, g.dt, g.dx, g.dl
        );
        self.write_file("value.csv", "solve", |w, run| {
            let s = run.solution.as_ref().unwrap();
            write_field_csv(w, &s.field, &s.policy, &run.header)
        })?;
        if self.config.output.plots {
            self.write_file("value_t0.dat", "solve", |w, run| {
                let f = &run.solution.as_ref().unwrap().field;
                write_preamble(w, &run.header)?;
                write!(w, "# x")?;
                for i in 1..=g.ray_count {
                    write!(w, " u_ray{i}")?;
                }
                writeln!(w, "\n# t=0 l=0")?;
                for m in 0..g.n_x {
                    write!(w, "{}", g.space(m))?;
                    for i in 0..g.ray_count {
                        write!(w, " {}", f.value(i, 0, m, 0))?;
                    }
                    writeln!(w)?;
                }
                Ok(())
            })?;
            self.write_file("value_vertex.dat", "solve", |w, run| {
                let f = &run.solution.as_ref().unwrap().field;
                write_preamble(w, &run.header)?;
                writeln!(w, "# l u_vertex\n# t=0 x=0")?;
                for n in 0..g.n_l {
                    writeln!(w, "{} {}", g.local_time(n), f.value(0, 0, 0, n))?;
                }
                Ok(())
            })?;
            let prefix = self.config.output.prefix.clone();
            self.write_file("value.gp", "solve", |w, run| {
                writeln!(w, "# config_sha256={}", run.header.config_hash)?;
                if let Some(ts) = &run.header.timestamp {
                    writeln!(w, "# generated={ts}")?;
                }
                writeln!(w, "set terminal pngcairo size 1200,500")?;
                writeln!(w, "set output '{prefix}value.png'")?;
                writeln!(w, "set multiplot layout 1,2")?;
                writeln!(w, "set xlabel 'x'\nset ylabel 'u(0, x, i, 0)'")?;
                let curves: Vec<String> = (1..=g.ray_count)
                    .map(|i| format!("'{prefix}value_t0.dat' using 1:{} with lines title 'ray {i}'", i + 1))
                    .collect();
                writeln!(w, "plot {}", curves.join(", "))?;
                writeln!(w, "set xlabel 'l'\nset ylabel 'u(0, 0, l)'")?;
                writeln!(
                    w,
                    "plot '{prefix}value_vertex.dat' using 1:2 with linespoints title 'vertex'"
                )?;
                writeln!(w, "unset multiplot")?;
                Ok(())
            })?;
        }
        Ok(())
    }

    /// Runs `f` with the policy selected by `choice`.
    fn with_policy<T>(
        &mut self,
        choice: &PolicyChoice,
        stage: &str,
        f: impl FnOnce(&Self, &dyn Policy) -> Result<T>,
    ) -> std::result::Result<T, StageError> {
        let n = self.resolved.data.ray_count();
        match choice {
            PolicyChoice::Solved => {
                self.solution()?;
                f(self, &self.solution.as_ref().unwrap().policy).stage(stage)
            }
            PolicyChoice::Uncontrolled => f(self, &ConstantPolicy::uncontrolled(n)).stage(stage),
            PolicyChoice::Constant(c) => {
                let p = c.build(n).stage(stage)?;
                f(self, &p).stage(stage)
            }
        }
    }

    fn simulate(&mut self) -> std::result::Result<(), StageError> {
        let sim = self.config.simulation.clone();
        let probes = self.probes(&sim.probes, "simulate")?;
        let runs = self.with_policy(&sim.policy, "simulate", |run, policy| {
            let data = &run.resolved.data;
            let mut rows = Vec::with_capacity(probes.len());
            let mut paths = Vec::new();
            for (j, p) in probes.iter().enumerate() {
                let cfg = SimConfig::new(sim.dt, sim.n_paths, path_seed(sim.seed, j as u64))?;
                let init = (p.t, p.point, p.l);
                rows.push(estimate_value(data, policy, init, &cfg)?);
                for k in 0..sim.dump_paths.min(sim.n_paths) {
                    paths.push(simulate_path(data, policy, init, &cfg, k as u64)?.0);
                }
            }
            Ok((rows, paths))
        })?;
        let (rows, paths) = runs;
        for (p, (mean, se)) in probes.iter().zip(&rows) {
            let _ = writeln!(
                self.outcome.log,
                "estimate at t={} x={} ray={} l={}: {mean} +- {se}",
                p.t, p.point.x, p.point.ray, p.l
            );
        }
        let policy_name = match &sim.policy {
            PolicyChoice::Solved => "solved",
            PolicyChoice::Uncontrolled => "uncontrolled",
            PolicyChoice::Constant(_) => "constant",
        };
        self.write_file("estimates.csv", "simulate", |w, run| {
            write_preamble(w, &run.header)?;
            writeln!(
                w,
                "# policy={policy_name} dt={} n_paths={} seed={}",
                sim.dt, sim.n_paths, sim.seed
            )?;
            writeln!(w, "probe,t,ray,x,l,mean,std_error")?;
            for (j, (p, (mean, se))) in probes.iter().zip(&rows).enumerate() {
                writeln!(w, "{j},{},{},{},{},{mean},{se}", p.t, p.point.ray, p.point.x, p.l)?;
            }
            Ok(())
        })?;
        if !paths.is_empty() {
            self.write_file("paths.csv", "simulate", |w, run| {
                write_paths_csv(w, &paths, &run.header)
            })?;
        }
        Ok(())
    }

    fn verify(&mut self) -> std::result::Result<bool, StageError> {
        let checks = self.config.verify.checks.clone();
        let mut reports = Vec::with_capacity(checks.len());
        let mut ids = HashSet::new();
        for (index, check) in checks.iter().enumerate() {
            let stage = format!("verify:{}", check.kind());
            let seed = path_seed(self.config.simulation.seed, index as u64);
            let mut report = self.run_check(check, seed, &stage)?;
            if !ids.insert(report.id.clone()) {
                report.id = format!("{}_{index}", report.id);
                ids.insert(report.id.clone());
            }
            let _ = write!(self.outcome.log, "{report}");
            reports.push(report);
        }
        let passed = reports.iter().filter(|r| r.pass()).count();
        let _ = writeln!(self.outcome.log, "{passed}/{} checks passed", reports.len());
        self.write_file("checks.csv", "verify", |w, run| {
            write_reports_csv(w, &reports, &run.header)
        })?;
        self.write_file("checks.txt", "verify", |w, run| {
            write_reports_text(w, &reports, &run.header)
        })?;
        Ok(passed == reports.len())
    }

    fn run_check(
        &mut self,
        check: &CheckConfig,
        seed: u64,
        stage: &str,
    ) -> std::result::Result<CheckReport, StageError> {
        let sim = self.config.sim_config(&check.sim_override(), seed).stage(stage)?;
        let n = self.resolved.data.ray_count();
        match check {
            CheckConfig::Diffraction {
                t0, l0, deltas, policy, ..
            } => self.with_policy(policy, stage, |run, p| {
                check_diffraction_law(&run.resolved.data, p, *t0, *l0, deltas, &sim)
            }),
            CheckConfig::Nonstickiness {
                start,
                epsilons,
                policy,
                ..
            } => {
                let start = start.to_probe(n).stage(stage)?;
                self.with_policy(policy, stage, |run, p| {
                    check_nonstickiness(&run.resolved.data, p, start, epsilons, &sim)
                })
            }
            CheckConfig::LocaltimeRate {
                t_star,
                l_star,
                radii,
                r_tolerance,
                q_target,
                q_tolerance,
                q_ratio_bound,
                policy,
                ..
            } => {
                let setup = LocalTimeRate {
                    t_star: *t_star,
                    l_star: *l_star,
                    radii: radii.clone(),
                    r_tolerance: *r_tolerance,
                    q_target: q_target.map(|q| (q, *q_tolerance)),
                    q_ratio_bound: *q_ratio_bound,
                };
                self.with_policy(policy, stage, |run, p| {
                    check_localtime_rate(&run.resolved.data, p, &setup, &sim)
                })
            }
            CheckConfig::ValueCharacterization {
                probes,
                tol_disc,
                alternatives,
                ..
            } => {
                let probes = self.probes(probes, stage)?;
                let alts = alternatives
                    .iter()
                    .map(|a| a.build(n))
                    .collect::<Result<Vec<_>>>()
                    .stage(stage)?;
                self.solution()?;
                let s = self.solution.as_ref().unwrap();
                check_value_characterization(&self.resolved.data, s, &sim, &probes, *tol_disc, &alts).stage(stage)
            }
            CheckConfig::Oracle {
                oracle,
                sigma,
                scale,
                probes,
                rel_tolerance,
            } => {
                let probes = self.probes(probes, stage)?;
                let horizon = self.resolved.data.horizon();
                let closed_form = |p: &Probe| -> Result<f64> {
                    let s = horizon - p.t;
                    let x = p.point.x;
                    let (mean, local) = if s > 0.0 {
                        reflected_bm_oracle(x, s, *sigma)?
                    } else {
                        (x, 0.0)
                    };
                    Ok(scale
                        * match oracle {
                            OracleKind::FoldedNormal => mean,
                            OracleKind::LocalTime => local,
                        })
                };
                let mut g_max = 0.0f64;
                let mut o_max = 0.0f64;
                for p in &probes {
                    g_max = g_max.max(terminal_payoff(&self.resolved.data, &p.point, p.l).stage(stage)?.abs());
                    o_max = o_max.max(closed_form(p).stage(stage)?.abs());
                }
                let reference = if g_max > 0.0 { g_max } else { o_max };
                self.solution()?;
                let mut report = check_against_oracle(
                    self.solution.as_ref().unwrap(),
                    &probes,
                    closed_form,
                    rel_tolerance * reference,
                )
                .stage(stage)?;
                report.meta("reference_scale", reference).meta(
                    "oracle",
                    match oracle {
                        OracleKind::FoldedNormal => "folded_normal",
                        OracleKind::LocalTime => "local_time",
                    },
                );
                Ok(report)
            }
            CheckConfig::Dpp {
                probe, stop, tol_disc, ..
            } => {
                let probe = probe.to_probe(n).stage(stage)?;
                let stop = match *stop {
                    StopConfig::After(s) => StopRule::After(s),
                    StopConfig::ExitRadius(h) => StopRule::ExitRadius(h),
                };
                self.solution()?;
                let s = self.solution.as_ref().unwrap();
                check_dpp(&self.resolved.data, s, &sim, probe, stop, *tol_disc).stage(stage)
            }
            CheckConfig::Comparison { shift } => {
                let r = &self.resolved;
                check_comparison_monotonicity(&r.data, &r.controls, &r.grid, *shift).stage(stage)
            }
            CheckConfig::TerminalOrdering { extra } => {
                let r = &self.resolved;
                check_terminal_ordering(&r.data, &r.controls, &r.grid, extra.clone()).stage(stage)
            }
            CheckConfig::NoLocaltime {} => {
                let r = &self.resolved;
                check_no_localtime_consistency(&r.data, &r.controls, &r.grid).stage(stage)
            }
            CheckConfig::Truncation { axis, probes, rel_tol } => {
                let probes = self.probes(probes, stage)?;
                let axis = match axis {
                    TruncationAxisConfig::Space => TruncationAxis::Space,
                    TruncationAxisConfig::LocalTime => TruncationAxis::LocalTime,
                };
                let r = &self.resolved;
                check_truncation(&r.data, &r.controls, &r.grid, &probes, axis, *rel_tol).stage(stage)
            }
            CheckConfig::OdeGadget { settings } => {
                let sweep = gadget_sweep(*settings).stage(stage)?;
                check_ode_gadget(&sweep).stage(stage)
            }
        }
    }
}
