use num_complex::Complex64;

use crate::network::{AdmittanceMatrix, BusType, Clamp, NetworkCase};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Role {
    Swing,
    Pq,
    Pv,
}

/// Injection at one bus as `S(s) = s * s_lin + s_const`.
///
/// At PV buses only `Re(s_lin)` enters the equations; the reactive part is
/// the free series Q(s), and `-Im(s_lin)` is the local reactive load that the
/// generator must also cover.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct BusInjection {
    pub role: Role,
    pub v_sp: f64,
    pub s_lin: Complex64,
    pub s_const: Complex64,
}

/// Injections in admittance-matrix order. Clamped PV buses become PQ with
/// their generator reactive output held at the clamp value.
pub(crate) fn injections(
    case: &NetworkCase,
    ybus: &AdmittanceMatrix,
    clamps: &[Clamp],
) -> Vec<BusInjection> {
    ybus.bus_ids()
        .iter()
        .map(|&id| {
            let bus = case.bus(id).expect("admittance matrix built from this case");
            let p_gen = case.gen_totals(id).map_or(0.0, |g| g.p_gen);
            let s_lin = Complex64::new(p_gen - bus.p_load, -bus.q_load);
            let clamp = clamps.iter().find(|c| c.bus == id);
            let (role, s_const) = match (bus.btype, clamp) {
                (BusType::Swing, _) => (Role::Swing, Complex64::new(0.0, 0.0)),
                (BusType::PV, Some(c)) => (Role::Pq, Complex64::new(0.0, c.q_gen)),
                (BusType::PV, None) => (Role::Pv, Complex64::new(0.0, 0.0)),
                (BusType::PQ, _) => (Role::Pq, Complex64::new(0.0, 0.0)),
            };
            BusInjection {
                role,
                v_sp: bus.v_sp,
                s_lin,
                s_const,
            }
        })
        .collect()
}
