mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use sigma_he::network::{json, parse_case, CaseFormat};
use sigma_he::sigma::sigma_coefficients;
use sigma_he::{build_ybus, ComplexPowerSeries};

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

proptest! {
    #[test]
    fn sigma_convolution_reproduces_m(
        w in complex_vec(11),
        m in complex_vec(11),
        w0 in (0.5f64..2.0, -3.0f64..3.0),
    ) {
        let mut w = w;
        w[0] = Complex64::from_polar(w0.0, w0.1);
        let wser = ComplexPowerSeries::new(w);
        let mser = ComplexPowerSeries::new(m);
        let sigma = sigma_coefficients(&wser, &mser).unwrap();
        let back = sigma.mul(&wser.conj());
        for k in 0..11 {
            // sigma can grow geometrically when |W[0]| is small, so the bound
            // is taken relative to the size of the terms being summed
            let scale: f64 = (0..=k)
                .map(|t| sigma.coeffs()[t].norm() * wser.coeffs()[k - t].norm())
                .sum();
            let err = (back.coeffs()[k] - mser.coeffs()[k]).norm();
            prop_assert!(err < 1e-12 * scale.max(1.0), "k = {} err = {:e}", k, err);
        }
    }

    #[test]
    fn branch_order_does_not_change_admittances(seed in any::<u64>()) {
        let case = common::case("ieee14.m");
        let mut shuffled = case.clone();
        // deterministic Fisher-Yates driven by the seed
        let mut state = seed;
        for i in (1..shuffled.branches.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            shuffled.branches.swap(i, j);
        }
        prop_assert_eq!(build_ybus(&case), build_ybus(&shuffled));
    }
}

#[test]
fn json_round_trip_preserves_case() {
    for name in ["ieee14.m", "two_bus.m", "star3.m"] {
        let case = common::case(name);
        let text = json::to_string(&case);
        let back = parse_case(&text, CaseFormat::Json).unwrap();
        assert_eq!(back, case, "{name}");
    }
}

#[test]
fn shipped_json_matches_matpower_source() {
    for name in ["ieee14", "two_bus"] {
        let m = common::case(&format!("{name}.m"));
        let j = common::case(&format!("{name}.json"));
        assert_eq!(m.buses.len(), j.buses.len());
        let close = |a: f64, b: f64| a == b || (a - b).abs() < 1e-12;
        for (a, b) in m.buses.iter().zip(&j.buses) {
            assert_eq!((a.id, a.btype), (b.id, b.btype));
            for (x, y) in [
                (a.p_load, b.p_load),
                (a.q_load, b.q_load),
                (a.g_shunt, b.g_shunt),
                (a.b_shunt, b.b_shunt),
                (a.v_sp, b.v_sp),
                (a.v_angle_sp, b.v_angle_sp),
            ] {
                assert!(close(x, y), "{name} bus {}", a.id);
            }
        }
        for (a, b) in m.generators.iter().zip(&j.generators) {
            assert_eq!((a.bus, a.status), (b.bus, b.status));
            for (x, y) in [(a.p_gen, b.p_gen), (a.q_min, b.q_min), (a.q_max, b.q_max)] {
                assert!(close(x, y));
            }
        }
        assert_eq!(m.branches.len(), j.branches.len());
        for (a, b) in m.branches.iter().zip(&j.branches) {
            assert_eq!((a.from, a.to, a.status), (b.from, b.to, b.status));
            for (x, y) in [(a.r, b.r), (a.x, b.x), (a.b_charging, b.b_charging), (a.tap, b.tap), (a.shift, b.shift)] {
                assert!(close(x, y));
            }
        }
    }
}
