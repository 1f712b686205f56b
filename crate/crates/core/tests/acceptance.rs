//! Acceptance suite: one pass/fail line per criterion, non-zero exit when
//! any criterion fails. Runs without the test harness so the lines always
//! appear in the output.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use spider_hjb::hjb::{build_grid, Grid};
use spider_hjb::instances::{self, Instance};
use spider_hjb::model::{
    terminal_payoff, DeclaredBounds, ProblemData, RayData, SpinningMeasure, TerminalPayoff, VertexCost,
};
use spider_hjb::network::{NetworkPoint, RayIndex, StarNetwork};
use spider_hjb::simulate::{ConstantPolicy, SimConfig};
use spider_hjb::verify::{
    check_against_oracle, check_comparison_monotonicity, check_diffraction_law, check_dpp, check_localtime_rate,
    check_no_localtime_consistency, check_nonstickiness, check_ode_gadget, check_truncation, gadget_sweep,
    reflected_bm_oracle, CheckReport, LocalTimeRate, Probe, Solution, StopRule, TruncationAxis,
};
use spider_hjb::Result;

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

fn grid(inst: &Instance, n_x: usize, x_max: f64, n_l: usize, l_max: f64) -> Result<Grid> {
    let net = StarNetwork::new(inst.data.ray_count(), x_max)?;
    build_grid(&net, &inst.data, n_x, n_l, l_max, 1.0)
}

fn probe(t: f64, x: f64, ray: usize, l: f64) -> Probe {
    Probe::new(t, NetworkPoint::new(x, RayIndex::new(ray, 2).unwrap()).unwrap(), l)
}

/// Ten states spread over space and time, used by the oracle and DPP criteria.
fn oracle_probes() -> Vec<Probe> {
    vec![
        probe(0.0, 0.0, 1, 0.0),
        probe(0.0, 0.25, 1, 0.0),
        probe(0.0, 0.5, 2, 0.0),
        probe(0.0, 1.0, 1, 0.0),
        probe(0.0, 1.5, 2, 0.0),
        probe(0.0, 2.0, 1, 0.0),
        probe(0.0, 3.0, 2, 0.0),
        probe(0.5, 0.0, 1, 0.0),
        probe(0.5, 1.0, 1, 0.0),
        probe(0.9, 0.3, 2, 0.0),
    ]
}

fn failures(r: &CheckReport) -> String {
    let f = r.failures();
    if f.is_empty() {
        String::new()
    } else {
        format!(" failing: {}", f.join(", "))
    }
}

fn value(r: &CheckReport, name: &str) -> f64 {
    r.statistic(name).map_or(f64::NAN, |s| s.value)
}

fn three_ray_diffraction() -> Result<ProblemData> {
    ProblemData::new(
        1.0,
        vec![RayData::brownian(1.0, TerminalPayoff::constant(0.0)); 3],
        SpinningMeasure::Fixed {
            weights: vec![0.5, 0.3, 0.2],
        },
        VertexCost::ZERO,
        DeclaredBounds {
            sigma_lower: 0.5,
            sigma_upper: 1.0,
            drift: 1.0,
            cost: 1.0,
            spin_lower: 0.1,
            spin_upper: 1.0,
        },
    )
}

fn diffraction() -> Outcome {
    let data = three_ray_diffraction()?;
    let sim = SimConfig::new(1e-4, 100_000, 1)?;
    let r = check_diffraction_law(
        &data,
        &ConstantPolicy::uncontrolled(3),
        0.0,
        0.0,
        &[0.2, 0.1, 0.05],
        &sim,
    )?;
    let f: Vec<String> = (1..=3)
        .map(|i| format!("{:.5}", value(&r, &format!("freq[delta=0.05,ray={i}]"))))
        .collect();
    Ok((
        r.pass(),
        format!(
            "frequencies at delta=0.05: ({}) vs (0.5, 0.3, 0.2){}",
            f.join(", "),
            failures(&r)
        ),
    ))
}

fn nonstickiness() -> Outcome {
    let inst = instances::folded_normal()?;
    let sim = SimConfig::new(1e-4, 10_000, 2)?;
    let r = check_nonstickiness(
        &inst.data,
        &ConstantPolicy::uncontrolled(2),
        probe(0.0, 0.0, 1, 0.0),
        &[0.4, 0.2, 0.1, 0.05],
        &sim,
    )?;
    Ok((
        r.pass(),
        format!(
            "max/min of m(eps)/eps = {:.4} over {} levels{}",
            value(&r, "ratio_max_min"),
            value(&r, "retained_levels"),
            failures(&r)
        ),
    ))
}

fn localtime_rate() -> Outcome {
    let inst = instances::folded_normal()?;
    let sim = SimConfig::new(2.5e-5, 100_000, 3)?;
    let mut setup = LocalTimeRate::new(vec![0.4, 0.2, 0.1]);
    setup.q_target = Some((1.0, 0.1));
    let r = check_localtime_rate(&inst.data, &ConstantPolicy::uncontrolled(2), &setup, &sim)?;
    let parts: Vec<String> = [0.4, 0.2, 0.1]
        .iter()
        .map(|h| {
            format!(
                "h={h}: r={:.4} q={:.4}",
                value(&r, &format!("r[h={h}]")),
                value(&r, &format!("q[h={h}]"))
            )
        })
        .collect();
    Ok((r.pass(), format!("{}{}", parts.join("; "), failures(&r))))
}

fn value_characterization() -> Outcome {
    let probes = oracle_probes();
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, inst, local) in [
        ("folded normal", instances::folded_normal()?, false),
        ("local-time cost", instances::localtime_cost(1.0)?, true),
    ] {
        let g = grid(&inst, 201, 6.0, 9, 4.0)?;
        let horizon = inst.data.horizon();
        let solution = Solution::solve(&inst.data, &inst.controls, &g)?;
        let oracle = |p: &Probe| -> Result<f64> {
            let (mean, lt) = reflected_bm_oracle(p.point.x, horizon - p.t, 1.0)?;
            Ok(if local { -lt } else { mean })
        };
        let mut g_max = 0.0f64;
        let mut o_max = 0.0f64;
        for p in &probes {
            g_max = g_max.max(terminal_payoff(&inst.data, &p.point, p.l)?.abs());
            o_max = o_max.max(oracle(p)?.abs());
        }
        let scale = if g_max > 0.0 { g_max } else { o_max };
        let r = check_against_oracle(&solution, &probes, oracle, 0.02 * scale)?;
        ok &= r.pass();
        detail.push(format!(
            "{name}: max error {:.5} <= {:.5}{}",
            value(&r, "max_abs_error"),
            0.02 * scale,
            failures(&r)
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn dpp() -> Outcome {
    let inst = instances::folded_normal()?;
    let g = grid(&inst, 201, 6.0, 9, 4.0)?;
    let solution = Solution::solve(&inst.data, &inst.controls, &g)?;
    let mut g_max = 0.0f64;
    for p in oracle_probes() {
        g_max = g_max.max(terminal_payoff(&inst.data, &p.point, p.l)?.abs());
    }
    let tol_disc = 0.02 * g_max;
    let sim = SimConfig::new(1e-4, 10_000, 5)?;
    let r = check_dpp(
        &inst.data,
        &solution,
        &sim,
        probe(0.0, 0.0, 1, 0.0),
        StopRule::ExitRadius(0.5),
        tol_disc,
    )?;
    let s = r.statistic("mc").unwrap();
    Ok((
        r.pass(),
        format!(
            "u(0,0,0) = {:.5}, MC = {:.5}, allowance {:.5} (3 SE + {tol_disc}){}",
            s.target,
            s.value,
            s.tolerance,
            failures(&r)
        ),
    ))
}

fn comparison() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for inst in instances::catalog()? {
        let g = grid(&inst, 201, 6.0, 9, 4.0)?;
        let r = check_comparison_monotonicity(&inst.data, &inst.controls, &g, 1.0)?;
        ok &= r.pass();
        detail.push(format!(
            "{} min {:.3e} dev {:.1e}{}",
            inst.name,
            value(&r, "min_difference"),
            value(&r, "max_deviation_from_shift"),
            failures(&r)
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn no_localtime() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for inst in instances::catalog()? {
        if inst.data.declares_local_time_dependence() {
            continue;
        }
        let g = grid(&inst, 201, 6.0, 9, 4.0)?;
        let r = check_no_localtime_consistency(&inst.data, &inst.controls, &g)?;
        ok &= r.pass();
        detail.push(format!(
            "{} gap {:.1e} l-variation {:.1e}{}",
            inst.name,
            value(&r, "max_solver_gap"),
            value(&r, "max_l_variation"),
            failures(&r)
        ));
    }
    Ok((ok && !detail.is_empty(), detail.join("; ")))
}

fn gadget() -> Outcome {
    let sweep = gadget_sweep(20)?;
    let r = check_ode_gadget(&sweep)?;
    Ok((
        r.pass(),
        format!(
            "{} settings: boundary misses {}, residual {:.2e}, slope deviation {:.1e}, bound margin {:.3}{}",
            sweep.len(),
            value(&r, "boundary_mismatches"),
            value(&r, "max_residual"),
            value(&r, "max_rel_slope_deviation"),
            value(&r, "min_slope_margin"),
            failures(&r)
        ),
    ))
}

fn truncation() -> Outcome {
    let mut ok = true;
    let mut worst = (0.0f64, String::new());
    for inst in instances::catalog()? {
        let n = inst.data.ray_count();
        let ray = |i: usize| RayIndex::new(i.min(n), n).unwrap();
        let probes: Vec<Probe> = [
            (0.0, 0.0, 1, 0.0),
            (0.0, 1.0, 2, 0.5),
            (0.5, 0.5, 1, 1.0),
            (0.5, 2.0, 3, 0.0),
            (0.9, 0.0, 1, 1.5),
        ]
        .iter()
        .map(|&(t, x, i, l)| Probe::new(t, NetworkPoint::new(x, ray(i)).unwrap(), l))
        .collect();
        let g = grid(&inst, 201, 6.0, 9, 4.0)?;
        for axis in [TruncationAxis::Space, TruncationAxis::LocalTime] {
            let r = check_truncation(&inst.data, &inst.controls, &g, &probes, axis, 0.005)?;
            ok &= r.pass();
            let rel = value(&r, "max_change") / value(&r, "max_abs_probe_value").max(f64::MIN_POSITIVE);
            if rel >= worst.0 || !r.pass() {
                worst = (rel, format!("{} {}", inst.name, r.id));
            }
        }
    }
    Ok((
        ok,
        format!("largest relative change {:.2e} ({}) <= 5e-3", worst.0, worst.1),
    ))
}

const REPRODUCIBILITY_CONFIG: &str = r#"
[instance]
preset = "folded_normal"

[grid]
n_x = 61
x_max = 4.0
n_l = 3
l_max = 2.0

[simulation]
dt = 1e-3
n_paths = 4000
seed = 99
probes = [{ x = 0.0 }, { x = 1.0, ray = 2 }]
dump_paths = 2

[[verify.checks]]
kind = "diffraction"
deltas = [0.2, 0.1]

[[verify.checks]]
kind = "nonstickiness"

[[verify.checks]]
kind = "localtime_rate"
radii = [0.4, 0.2]

[[verify.checks]]
kind = "value_characterization"

[[verify.checks]]
kind = "dpp"
stop = { after = 0.25 }

[[verify.checks]]
kind = "comparison"
"#;

fn run_cli(bin: &str, config: &Path, out: &Path, jobs: &str) -> Result<i32> {
    let status = Command::new(bin)
        .args(["all", "--no-timestamp", "--jobs", jobs, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()?;
    Ok(status.status.code().unwrap_or(-1))
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir()?;
    let config = dir.path().join("run.toml");
    std::fs::write(&config, REPRODUCIBILITY_CONFIG)?;
    let bin = env!("CARGO_BIN_EXE_spider-hjb");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let status_a = run_cli(bin, &config, &a, "1")?;
    let status_b = run_cli(bin, &config, &b, "4")?;
    let mut names: Vec<_> = std::fs::read_dir(&a)?
        .map(|e| e.map(|e| e.file_name()))
        .collect::<std::io::Result<_>>()?;
    names.sort();
    let mut differing = Vec::new();
    for n in &names {
        if std::fs::read(a.join(n))? != std::fs::read(b.join(n))? {
            differing.push(n.to_string_lossy().into_owned());
        }
    }
    let csvs = names.iter().filter(|n| n.to_string_lossy().ends_with(".csv")).count();
    let ok = status_a == status_b && status_a != 2 && status_a != 3 && differing.is_empty() && csvs >= 4;
    Ok((
        ok,
        format!(
            "{} files ({csvs} CSV) byte-identical across two runs with 1 and 4 threads (exit {status_a}/{status_b}){}",
            names.len(),
            if differing.is_empty() {
                String::new()
            } else {
                format!("; differing: {}", differing.join(", "))
            }
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("diffraction law", diffraction),
        ("non-stickiness", nonstickiness),
        ("local-time rate", localtime_rate),
        ("value characterization", value_characterization),
        ("dynamic programming", dpp),
        ("discrete comparison", comparison),
        ("local-time-free consistency", no_localtime),
        ("ODE gadget", gadget),
        ("domain truncation", truncation),
        ("reproducibility", reproducibility),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {:>2}", k + 1);
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|s| name.contains(s.as_str()) || id.contains(s.as_str()))
        {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{id} [{}] {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
