mod common;

use sigma_he::he::{solve, solve_with_qlimits, HeOptions};
use sigma_he::network::{Branch, Bus, BusType, Generator, NetworkCase, QLimit};
use sigma_he::oracle::{continuation_nose, power_mismatch, NoseOptions};
use sigma_he::sigma::{find_critical_s, CriticalStatus};
use sigma_he::EvalMethod;

fn bus(id: usize, btype: BusType, p: f64, q: f64, v: f64) -> Bus {
    Bus {
        id,
        btype,
        p_load: p,
        q_load: q,
        g_shunt: 0.0,
        b_shunt: 0.0,
        v_sp: v,
        v_angle_sp: 0.0,
    }
}

fn line(from: usize, to: usize, r: f64, x: f64) -> Branch {
    Branch {
        from,
        to,
        r,
        x,
        b_charging: 0.0,
        tap: 1.0,
        shift: 0.0,
        status: true,
    }
}

fn three_bus(q_max: f64) -> NetworkCase {
    NetworkCase {
        base_mva: 100.0,
        buses: vec![
            bus(1, BusType::Swing, 0.0, 0.0, 1.0),
            bus(2, BusType::PV, 0.2, 0.1, 1.0),
            bus(3, BusType::PQ, 0.8, 0.4, 1.0),
        ],
        generators: vec![Generator {
            bus: 2,
            p_gen: 0.3,
            q_min: -1.0,
            q_max,
            status: true,
        }],
        branches: vec![line(1, 2, 0.02, 0.2), line(2, 3, 0.02, 0.15), line(1, 3, 0.03, 0.3)],
    }
}

#[test]
fn unlimited_case_has_one_stage() {
    let case = common::case("ieee14.m").without_q_limits();
    let staged = solve_with_qlimits(&case, 5.0, &HeOptions::default()).unwrap();
    assert_eq!(staged.stages.len(), 1);
    assert!(staged.plan.switches.is_empty());
    assert_eq!(staged.plan.stages[0].s_start, 0.0);
    assert_eq!(staged.plan.stages[0].s_end, 5.0);
}

#[test]
fn clamping_below_nominal_output_switches_once() {
    let free = three_bus(f64::INFINITY);
    let q1 = solve(&free, 30)
        .unwrap()
        .q_gen(2, 1.0, EvalMethod::Pade)
        .unwrap()
        .value
        .re;
    let q0 = solve(&free, 30).unwrap().q_gen(2, 0.0, EvalMethod::Pade).unwrap().value.re;
    assert!(q1 > 0.0 && q0 < 0.9 * q1, "q(0) = {q0}, q(1) = {q1}");

    let case = three_bus(0.9 * q1);
    let staged = solve_with_qlimits(&case, 1.0, &HeOptions::default()).unwrap();
    assert_eq!(staged.plan.switches.len(), 1);
    let ev = &staged.plan.switches[0];
    assert_eq!(ev.bus, 2);
    assert_eq!(ev.limit, QLimit::Qmax);
    assert!(ev.s > 0.0 && ev.s < 1.0);
    assert_eq!(staged.stages.len(), 2);
    assert_eq!(staged.plan.stages[0].s_end, ev.s);
    assert_eq!(staged.plan.stages[1].s_start, ev.s);
    let clamp = staged.plan.stages[1].clamps[0];
    assert_eq!(clamp.bus, 2);
    assert!(!staged.stages[1].is_pv(2));

    // the clamped stage solves the clamped network and meets the old one at
    // the switch point
    let post = &staged.stages[1];
    let v: Vec<_> = case
        .buses
        .iter()
        .map(|b| post.voltage(b.id, 1.0, EvalMethod::Pade).value)
        .collect();
    assert!(power_mismatch(&case, &[clamp], 1.0, &v) < 1e-8);
    let before = staged.stages[0].voltage(3, ev.s, EvalMethod::Pade).value;
    let after = post.voltage(3, ev.s, EvalMethod::Pade).value;
    assert!((before - after).norm() < 1e-5);
}

#[test]
fn ieee14_limits_reduce_the_margin() {
    let opts = HeOptions::default();
    let case = common::case("ieee14.m");
    let on = solve_with_qlimits(&case, 6.0, &opts).unwrap();
    let off = solve_with_qlimits(&case.without_q_limits(), 6.0, &opts).unwrap();
    assert!(!on.plan.switches.is_empty());
    for pair in on.plan.switches.windows(2) {
        assert!(pair[0].s < pair[1].s);
    }
    for (k, ev) in on.plan.switches.iter().enumerate() {
        assert_eq!(on.plan.stages[k].s_end, ev.s);
        assert_eq!(on.plan.stages[k + 1].s_start, ev.s);
    }
    let c_on = find_critical_s(&on, 0.0, 6.0, 1e-6, &opts).unwrap();
    let c_off = find_critical_s(&off, 0.0, 6.0, 1e-6, &opts).unwrap();
    assert_eq!(c_on.status, CriticalStatus::ConvergenceLimit);
    assert!(c_on.s_critical < c_off.s_critical);

    let nose = continuation_nose(
        &case,
        0.0,
        0.1,
        1e-5,
        &NoseOptions {
            q_limits: true,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(nose.switches.len(), on.plan.switches.len());
    for (a, b) in nose.switches.iter().zip(&on.plan.switches) {
        assert_eq!(a.bus, b.bus);
        assert!((a.s - b.s).abs() < 1e-3);
    }
    assert!((c_on.s_critical - nose.s_nose).abs() / nose.s_nose < 0.02);
}
