mod common;

use num_complex::Complex64;
use sigma_he::oracle::{continuation_nose, newton_solve, NoseOptions, NoseStatus, PowerFlowProblem};
use sigma_he::sigma::two_bus_voltage;

#[test]
fn ieee14_matches_published_solution() {
    let case = common::case("ieee14.m");
    let nr = newton_solve(&case, 1.0, 1e-12, 30).unwrap();
    assert!(nr.max_mismatch < 1e-12);
    assert!((nr.voltage(1).unwrap() - Complex64::new(1.06, 0.0)).norm() < 1e-12);
    // the published table carries three decimals
    for (bus, vm, va) in common::published_ieee14() {
        let v = nr.voltage(bus).unwrap();
        assert!((v.norm() - vm).abs() <= 5e-4 + 1e-12, "bus {bus}: {}", v.norm());
        assert!((v.arg().to_degrees() - va).abs() <= 5e-4 + 1e-12, "bus {bus}");
    }
}

#[test]
fn two_bus_matches_closed_form() {
    let case = common::case("two_bus.m");
    let nr = newton_solve(&case, 1.0, 1e-13, 30).unwrap();
    let u = two_bus_voltage(Complex64::new(0.05, 0.10)).unwrap();
    assert!((nr.voltage(2).unwrap() - u).norm() < 1e-10);
}

#[test]
fn analytic_jacobian_matches_finite_differences() {
    let case = common::case("ieee14.m");
    let nr = newton_solve(&case, 0.5, 1e-12, 30).unwrap();
    let problem = PowerFlowProblem::new(&case, &[], 0.5);
    let v = &nr.voltages;
    let x = problem.state(v);
    let jac = problem.jacobian(v);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for col in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[col] += h;
        xm[col] -= h;
        let fp = problem.mismatch(&problem.voltages(&xp, v));
        let fm = problem.mismatch(&problem.voltages(&xm, v));
        for row in 0..x.len() {
            let fd = (fp[row] - fm[row]) / (2.0 * h);
            let rel = (fd - jac[(row, col)]).abs() / jac[(row, col)].abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-6, "{worst:e}");
}

#[test]
fn two_bus_nose() {
    let case = common::case("two_bus.m");
    let nose = continuation_nose(&case, 0.0, 0.5, 1e-5, &NoseOptions::default()).unwrap();
    assert_eq!(nose.status, NoseStatus::Nose);
    assert!((nose.s_nose - 8.09017).abs() < 0.01, "{}", nose.s_nose);
    assert_eq!(nose.weakest_bus, 2);
}

#[test]
fn zero_load_exhausts_range() {
    let case = common::case("no_load.m");
    let opts = NoseOptions {
        s_max: 20.0,
        ..Default::default()
    };
    let nose = continuation_nose(&case, 0.0, 1.0, 1e-4, &opts).unwrap();
    assert_eq!(nose.status, NoseStatus::RangeExhausted);
    assert_eq!(nose.s_nose, 20.0);
}

#[test]
fn newton_reports_divergence_past_the_nose() {
    let case = common::case("two_bus.m");
    assert!(newton_solve(&case, 9.0, 1e-10, 30).is_err());
}
