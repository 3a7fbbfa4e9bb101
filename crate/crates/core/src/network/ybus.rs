use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::case::{BusId, BusType, NetworkCase};

/// Sparse nodal admittance matrix. Row/column 0 is always the swing bus;
/// the remaining buses follow in case order.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmittanceMatrix {
    ids: Vec<BusId>,
    index: HashMap<BusId, usize>,
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl AdmittanceMatrix {
    pub fn dim(&self) -> usize {
        self.ids.len()
    }

    pub fn index_of(&self, id: BusId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn id_of(&self, idx: usize) -> BusId {
        self.ids[idx]
    }

    /// Bus ids in internal order (swing first).
    pub fn bus_ids(&self) -> &[BusId] {
        &self.ids
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let row = &self.rows[i];
        match row.binary_search_by_key(&j, |&(c, _)| c) {
            Ok(k) => row[k].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Non-zero entries of row `i`, ordered by column.
    pub fn row(&self, i: usize) -> &[(usize, Complex64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn mul(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, y)| y * v[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, y) in row {
                m[(i, j)] = y;
            }
        }
        m
    }
}

/// Standard pi-model assembly with off-nominal taps, phase shifters and bus
/// shunts. Out-of-service branches are skipped. Branches are accumulated in a
/// canonical order so the result does not depend on their order in the case.
pub fn build_ybus(case: &NetworkCase) -> AdmittanceMatrix {
    let swing = case
        .buses
        .iter()
        .position(|b| b.btype == BusType::Swing)
        .expect("validated case has a swing bus");
    let mut ids = vec![case.buses[swing].id];
    ids.extend(
        case.buses
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != swing)
            .map(|(_, b)| b.id),
    );
    let index: HashMap<BusId, usize> = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();

    let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    let mut add = |i: usize, j: usize, y: Complex64| {
        *acc.entry((i, j)).or_insert(Complex64::new(0.0, 0.0)) += y;
    };

    for b in &case.buses {
        let y = Complex64::new(b.g_shunt, b.b_shunt);
        let i = index[&b.id];
        add(i, i, y);
    }

    let mut order: Vec<usize> = (0..case.branches.len())
        .filter(|&k| case.branches[k].status)
        .collect();
    order.sort_by_key(|&k| {
        let br = &case.branches[k];
        let (f, t) = (index[&br.from], index[&br.to]);
        (
            f.min(t),
            f.max(t),
            f,
            br.r.to_bits(),
            br.x.to_bits(),
            br.b_charging.to_bits(),
            br.tap.to_bits(),
            br.shift.to_bits(),
        )
    });

    for k in order {
        let br = &case.branches[k];
        let (f, t) = (index[&br.from], index[&br.to]);
        let ys = Complex64::new(br.r, br.x).inv();
        let tap = Complex64::from_polar(br.tap, br.shift);
        let ytt = ys + Complex64::new(0.0, br.b_charging / 2.0);
        add(f, f, ytt / tap.norm_sqr());
        add(t, t, ytt);
        add(f, t, -ys / tap.conj());
        add(t, f, -ys / tap);
    }

    let mut rows = vec![Vec::new(); ids.len()];
    for ((i, j), y) in acc {
        rows[i].push((j, y));
    }
    AdmittanceMatrix { ids, index, rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::case::{Branch, Bus};

    fn bus(id: usize, btype: BusType) -> Bus {
        Bus {
            id,
            btype,
            p_load: 0.0,
            q_load: 0.0,
            g_shunt: 0.0,
            b_shunt: 0.0,
            v_sp: 1.0,
            v_angle_sp: 0.0,
        }
    }

    fn line(from: usize, to: usize, r: f64, x: f64, b: f64) -> Branch {
        Branch {
            from,
            to,
            r,
            x,
            b_charging: b,
            tap: 1.0,
            shift: 0.0,
            status: true,
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_reactance() {
        let case = NetworkCase {
            base_mva: 100.0,
            buses: vec![bus(1, BusType::Swing), bus(2, BusType::PQ)],
            generators: vec![],
            branches: vec![line(1, 2, 0.0, 0.1, 0.0)],
        };
        let y = build_ybus(&case);
        assert!((y.get(0, 1) - c(0.0, 10.0)).norm() < 1e-12);
        assert!((y.get(0, 0) - c(0.0, -10.0)).norm() < 1e-12);
        assert!((y.get(1, 1) - c(0.0, -10.0)).norm() < 1e-12);

        let mut charged = case.clone();
        charged.branches[0].b_charging = 0.2;
        let y2 = build_ybus(&charged);
        assert!((y2.get(0, 0) - y.get(0, 0) - c(0.0, 0.1)).norm() < 1e-12);
        assert!((y2.get(1, 1) - y.get(1, 1) - c(0.0, 0.1)).norm() < 1e-12);
        assert_eq!(y2.get(0, 1), y.get(0, 1));
    }

    #[test]
    fn swing_is_row_zero() {
        let case = NetworkCase {
            base_mva: 100.0,
            buses: vec![bus(4, BusType::PQ), bus(9, BusType::Swing), bus(2, BusType::PV)],
            generators: vec![],
            branches: vec![line(4, 9, 0.01, 0.1, 0.0), line(9, 2, 0.02, 0.2, 0.0)],
        };
        let y = build_ybus(&case);
        assert_eq!(y.bus_ids(), &[9, 4, 2]);
        assert_eq!(y.index_of(2), Some(2));
        assert_eq!(y.get(1, 2), c(0.0, 0.0));
        assert_eq!(y.nnz(), 7);
    }

    #[test]
    fn out_of_service_branch_excluded() {
        let mut br = line(1, 2, 0.0, 0.1, 0.0);
        br.status = false;
        let case = NetworkCase {
            base_mva: 100.0,
            buses: vec![bus(1, BusType::Swing), bus(2, BusType::PQ)],
            generators: vec![],
            branches: vec![br, line(1, 2, 0.0, 0.2, 0.0)],
        };
        let y = build_ybus(&case);
        assert!((y.get(0, 1) - c(0.0, 5.0)).norm() < 1e-12);
    }

    #[test]
    fn tap_and_shift_pi_model() {
        let mut br = line(1, 2, 0.0, 0.2, 0.0);
        br.tap = 0.95;
        br.shift = 0.1;
        let case = NetworkCase {
            base_mva: 100.0,
            buses: vec![bus(1, BusType::Swing), bus(2, BusType::PQ)],
            generators: vec![],
            branches: vec![br],
        };
        let y = build_ybus(&case);
        let ys = c(0.0, 0.2).inv();
        let t = Complex64::from_polar(0.95, 0.1);
        assert!((y.get(0, 0) - ys / (0.95 * 0.95)).norm() < 1e-12);
        assert!((y.get(0, 1) + ys / t.conj()).norm() < 1e-12);
        assert!((y.get(1, 0) + ys / t).norm() < 1e-12);
        assert!((y.get(1, 1) - ys).norm() < 1e-12);
    }
}
