use proptest::prelude::*;

use spider_hjb::hjb::{build_grid, read_field_csv, solve_backward, write_field_csv, CsvHeader, Grid};
use spider_hjb::instances::{self, Instance};
use spider_hjb::model::TerminalPayoff;
use spider_hjb::network::{NetworkPoint, RayIndex, StarNetwork};
use spider_hjb::simulate::{simulate_path, ConstantPolicy, SimConfig};
use spider_hjb::verify::{gadget_sweep, solve_ode_gadget, write_reports_csv, CheckReport, GadgetCase, Statistic};

fn small_grid(inst: &Instance, n_x: usize, n_l: usize) -> Grid {
    let net = StarNetwork::new(inst.data.ray_count(), 2.0).unwrap();
    build_grid(&net, &inst.data, n_x, n_l, 1.0, 1.0).unwrap()
}

fn instance(k: usize) -> Instance {
    instances::by_name(instances::NAMES[k % instances::NAMES.len()]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn simulated_paths_respect_the_dynamics(
        k in 0usize..5,
        seed in any::<u64>(),
        index in 0u64..1_000_000,
        x0 in 0.0..1.5f64,
        ray0 in 1usize..4,
        l0 in 0.0..1.0f64,
        t0 in 0.0..0.9f64,
        dt in 1e-3..2e-2f64,
    ) {
        let inst = instance(k);
        let n = inst.data.ray_count();
        let start = NetworkPoint::new(x0, RayIndex::new(ray0.min(n), n).unwrap()).unwrap();
        let theta = inst.controls.vertex_points()[0].clone();
        let policy = ConstantPolicy::new(vec![inst.controls.ray_points(0)[0]; n], theta);
        let cfg = SimConfig::new(dt, 1, seed).unwrap();
        let (path, reward) = simulate_path(&inst.data, &policy, (t0, start, l0), &cfg, index).unwrap();
        let again = simulate_path(&inst.data, &policy, (t0, start, l0), &cfg, index).unwrap();
        prop_assert_eq!(&path, &again.0);
        prop_assert_eq!(reward.total.to_bits(), again.1.total.to_bits());

        prop_assert_eq!(path.states.len(), path.vertex_events.len() + 1);
        let last = path.states.last().unwrap();
        prop_assert!((last.t - inst.data.horizon()).abs() <= 1e-9);
        for (w, &event) in path.states.windows(2).zip(&path.vertex_events) {
            let (a, b) = (w[0], w[1]);
            prop_assert!(b.x >= 0.0);
            prop_assert!(b.t > a.t);
            prop_assert!(b.l >= a.l);
            if !event {
                prop_assert_eq!(b.l, a.l);
                prop_assert_eq!(b.ray, a.ray);
            }
        }
    }

    #[test]
    fn shifted_terminal_data_shift_every_node(k in 0usize..5, c in -3.0..3.0f64) {
        let inst = instance(k);
        let grid = small_grid(&inst, 9, 3);
        let (u, _) = solve_backward(&inst.data, &inst.controls, &grid).unwrap();
        let shifted = inst.data.with_terminal_addition(TerminalPayoff::constant(c));
        let (v, _) = solve_backward(&shifted, &inst.controls, &grid).unwrap();
        for (a, b) in u.values().zip(v.values()) {
            prop_assert!((b - a - c).abs() <= 1e-10, "{} vs {} + {}", b, a, c);
        }
    }

    #[test]
    fn larger_terminal_data_dominate_without_tolerance(
        k in 0usize..5,
        scale in 0.0..2.0f64,
        rate in 0.1..3.0f64,
        intercept in 0.0..0.5f64,
    ) {
        let inst = instance(k);
        let grid = small_grid(&inst, 9, 3);
        let (u, _) = solve_backward(&inst.data, &inst.controls, &grid).unwrap();
        let extra = TerminalPayoff::Saturating { intercept, scale, rate };
        let (v, _) = solve_backward(&inst.data.with_terminal_addition(extra), &inst.controls, &grid).unwrap();
        for (a, b) in u.values().zip(v.values()) {
            prop_assert!(b >= a, "{} < {}", b, a);
        }
    }

    #[test]
    fn field_csv_round_trips_bit_exactly(k in 0usize..5, n_x in 3usize..8, n_l in 2usize..4, hash in "[0-9a-f]{64}") {
        let inst = instance(k);
        let grid = small_grid(&inst, n_x, n_l);
        let (u, policy) = solve_backward(&inst.data, &inst.controls, &grid).unwrap();
        let header = CsvHeader { config_hash: hash, timestamp: None };
        let mut first = Vec::new();
        write_field_csv(&mut first, &u, &policy, &header).unwrap();
        let (u2, policy2, header2) = read_field_csv(first.as_slice(), &inst.controls).unwrap();
        prop_assert_eq!(&header2, &header);
        prop_assert_eq!(&u2, &u);
        prop_assert_eq!(&policy2, &policy);
        let mut second = Vec::new();
        write_field_csv(&mut second, &u2, &policy2, &header2).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn report_pass_flags_are_rederivable_from_csv(
        stats in proptest::collection::vec((0usize..4, -2.0..2.0f64, -2.0..2.0f64, 0.0..1.0f64), 1..12),
    ) {
        let mut report = CheckReport::new("prop");
        for (j, &(kind, v, t, tol)) in stats.iter().enumerate() {
            let name = format!("s{j}");
            report.push(match kind {
                0 => Statistic::within(name, v, t, tol),
                1 => Statistic::at_most(name, v, t),
                2 => Statistic::at_least(name, v, t),
                _ => Statistic::info(name, v),
            });
        }
        let mut out = Vec::new();
        write_reports_csv(&mut out, &[report], &CsvHeader::default()).unwrap();
        let text = String::from_utf8(out).unwrap();
        for row in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
            let f: Vec<&str> = row.split(',').collect();
            let (v, t, tol): (f64, f64, f64) = (f[1].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap());
            let derived = match f[5] {
                "within" => (v - t).abs() <= tol,
                "at_most" => v <= t + tol,
                "at_least" => v >= t - tol,
                "info" => true,
                other => panic!("unknown relation {other}"),
            };
            prop_assert_eq!(f[4], derived.to_string(), "{}", row);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gadget_boundaries_and_slopes(k in 0usize..64) {
        let sweep = gadget_sweep(64).unwrap();
        let (params, bounds) = &sweep[k];
        for case in [GadgetCase::Super, GadgetCase::Sub] {
            let sol = solve_ode_gadget(params, bounds, case).unwrap();
            prop_assert!(sol.residual <= 1e-8);
            for (i, rows) in sol.values.iter().enumerate() {
                for (n, row) in rows.iter().enumerate() {
                    let (left, right) = params.boundary(case, i, sol.levels[n]);
                    prop_assert_eq!(row[0], left);
                    prop_assert_eq!(*row.last().unwrap(), right);
                }
            }
            let slope = match case {
                GadgetCase::Super => params.s_up,
                GadgetCase::Sub => -params.s_lo,
            };
            for d in &sol.dl_at_vertex {
                prop_assert!((d - slope).abs() <= 1e-12 * slope.abs().max(1.0));
            }
        }
    }
}

/// Two symmetric rays: the signed coordinate is an unreflected Brownian
/// motion, so its mean at the horizon is the starting point.
#[test]
fn symmetric_two_ray_walsh_is_a_folded_line() {
    let inst = instances::folded_normal().unwrap();
    let policy = ConstantPolicy::uncontrolled(2);
    let start = NetworkPoint::new(0.3, RayIndex::new(2, 2).unwrap()).unwrap();
    let cfg = SimConfig::new(1e-3, 1, 17).unwrap();
    let n = 20_000;
    let signed: Vec<f64> = (0..n)
        .map(|j| {
            let (path, _) = simulate_path(&inst.data, &policy, (0.0, start, 0.0), &cfg, j).unwrap();
            let last = path.states.last().unwrap();
            if last.ray.get() == 1 {
                last.x
            } else {
                -last.x
            }
        })
        .collect();
    let mean = signed.iter().sum::<f64>() / n as f64;
    let var = signed.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!((mean - -0.3).abs() <= 3.0 * se, "mean {mean} se {se}");
    // Unit variance over the unit horizon.
    assert!((var - 1.0).abs() < 0.05, "variance {var}");
}
