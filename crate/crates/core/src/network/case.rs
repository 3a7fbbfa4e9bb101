use std::collections::{HashMap, HashSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// External bus label as it appears in the case file.
pub type BusId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BusType {
    PQ,
    PV,
    #[serde(rename = "SWING")]
    Swing,
}

/// All electrical quantities are per-unit on the case base; angles in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    #[serde(rename = "type")]
    pub btype: BusType,
    pub p_load: f64,
    pub q_load: f64,
    pub g_shunt: f64,
    pub b_shunt: f64,
    pub v_sp: f64,
    pub v_angle_sp: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: BusId,
    pub p_gen: f64,
    #[serde(with = "lower_bound")]
    pub q_min: f64,
    #[serde(with = "upper_bound")]
    pub q_max: f64,
    pub status: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub from: BusId,
    pub to: BusId,
    pub r: f64,
    pub x: f64,
    pub b_charging: f64,
    pub tap: f64,
    pub shift: f64,
    pub status: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkCase {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub branches: Vec<Branch>,
}

/// In-service generation aggregated at one bus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenTotals {
    pub p_gen: f64,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QLimit {
    Qmax,
    Qmin,
}

impl QLimit {
    pub fn as_str(self) -> &'static str {
        match self {
            QLimit::Qmax => "qmax",
            QLimit::Qmin => "qmin",
        }
    }
}

/// A PV bus retyped PQ with its generator reactive output pinned at a limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clamp {
    pub bus: BusId,
    pub limit: QLimit,
    pub q_gen: f64,
}

impl NetworkCase {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_mva > 0.0) {
            return Err(Error::InvalidCase(format!(
                "base MVA must be positive, got {}",
                self.base_mva
            )));
        }
        let mut ids = HashSet::new();
        for b in &self.buses {
            if !ids.insert(b.id) {
                return Err(Error::DuplicateBus(b.id));
            }
        }
        let swings: Vec<BusId> = self
            .buses
            .iter()
            .filter(|b| b.btype == BusType::Swing)
            .map(|b| b.id)
            .collect();
        match swings.len() {
            0 => return Err(Error::MissingSwing),
            1 => {}
            _ => return Err(Error::MultipleSwing(swings)),
        }
        for b in &self.buses {
            if b.btype != BusType::PQ && !(b.v_sp > 0.0) {
                return Err(Error::NonPositiveVoltage(b.id));
            }
        }
        let types: HashMap<BusId, BusType> =
            self.buses.iter().map(|b| (b.id, b.btype)).collect();
        for g in &self.generators {
            match types.get(&g.bus) {
                None => {
                    return Err(Error::DanglingReference {
                        what: "generator".into(),
                        bus: g.bus,
                    })
                }
                Some(BusType::PQ) if g.status => {
                    return Err(Error::InvalidCase(format!(
                        "in-service generator at PQ bus {}",
                        g.bus
                    )))
                }
                _ => {}
            }
            if g.q_min > g.q_max {
                return Err(Error::InvalidCase(format!(
                    "generator at bus {}: q_min {} > q_max {}",
                    g.bus, g.q_min, g.q_max
                )));
            }
        }
        for (k, br) in self.branches.iter().enumerate() {
            for end in [br.from, br.to] {
                if !types.contains_key(&end) {
                    return Err(Error::DanglingReference {
                        what: format!("branch {}", k + 1),
                        bus: end,
                    });
                }
            }
            if br.status && br.r * br.r + br.x * br.x <= 0.0 {
                return Err(Error::InvalidCase(format!(
                    "branch {} ({}-{}) has zero series impedance",
                    k + 1,
                    br.from,
                    br.to
                )));
            }
            if br.from == br.to {
                return Err(Error::InvalidCase(format!(
                    "branch {} connects bus {} to itself",
                    k + 1,
                    br.from
                )));
            }
        }
        Ok(())
    }

    pub fn swing(&self) -> &Bus {
        self.buses
            .iter()
            .find(|b| b.btype == BusType::Swing)
            .expect("validated case has a swing bus")
    }

    pub fn bus(&self, id: BusId) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    /// Complex swing voltage V_sw.
    pub fn v_swing(&self) -> Complex64 {
        let sw = self.swing();
        Complex64::from_polar(sw.v_sp, sw.v_angle_sp)
    }

    pub fn pq_count(&self) -> usize {
        self.buses.iter().filter(|b| b.btype == BusType::PQ).count()
    }

    pub fn pv_count(&self) -> usize {
        self.buses.iter().filter(|b| b.btype == BusType::PV).count()
    }

    /// Number of decoupled channels, one per non-swing bus.
    pub fn channel_count(&self) -> usize {
        self.buses.len() - 1
    }

    /// Sum of in-service generators at `bus`, or `None` when there are none.
    pub fn gen_totals(&self, bus: BusId) -> Option<GenTotals> {
        let mut acc: Option<GenTotals> = None;
        for g in self.generators.iter().filter(|g| g.status && g.bus == bus) {
            let t = acc.get_or_insert(GenTotals {
                p_gen: 0.0,
                q_min: 0.0,
                q_max: 0.0,
            });
            t.p_gen += g.p_gen;
            t.q_min += g.q_min;
            t.q_max += g.q_max;
        }
        acc
    }

    /// Copy of the case with every generator reactive limit removed.
    pub fn without_q_limits(&self) -> NetworkCase {
        let mut c = self.clone();
        for g in &mut c.generators {
            g.q_min = f64::NEG_INFINITY;
            g.q_max = f64::INFINITY;
        }
        c
    }
}

// JSON has no infinities; unbounded reactive limits are written as null.
mod lower_bound {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

mod upper_bound {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bus() -> NetworkCase {
        NetworkCase {
            base_mva: 100.0,
            buses: vec![
                Bus {
                    id: 1,
                    btype: BusType::Swing,
                    p_load: 0.0,
                    q_load: 0.0,
                    g_shunt: 0.0,
                    b_shunt: 0.0,
                    v_sp: 1.0,
                    v_angle_sp: 0.0,
                },
                Bus {
                    id: 2,
                    btype: BusType::PQ,
                    p_load: 0.5,
                    q_load: 0.1,
                    g_shunt: 0.0,
                    b_shunt: 0.0,
                    v_sp: 1.0,
                    v_angle_sp: 0.0,
                },
            ],
            generators: vec![],
            branches: vec![Branch {
                from: 1,
                to: 2,
                r: 0.0,
                x: 0.1,
                b_charging: 0.0,
                tap: 1.0,
                shift: 0.0,
                status: true,
            }],
        }
    }

    #[test]
    fn valid_two_bus() {
        let c = two_bus();
        c.validate().unwrap();
        assert_eq!(c.pq_count(), 1);
        assert_eq!(c.pv_count(), 0);
        assert_eq!(c.swing().id, 1);
    }

    #[test]
    fn rejects_second_swing() {
        let mut c = two_bus();
        c.buses[1].btype = BusType::Swing;
        assert!(matches!(c.validate(), Err(Error::MultipleSwing(v)) if v == vec![1, 2]));
    }

    #[test]
    fn rejects_dangling_branch() {
        let mut c = two_bus();
        c.branches[0].to = 7;
        assert!(matches!(
            c.validate(),
            Err(Error::DanglingReference { bus: 7, .. })
        ));
    }

    #[test]
    fn rejects_zero_impedance() {
        let mut c = two_bus();
        c.branches[0].x = 0.0;
        assert!(matches!(c.validate(), Err(Error::InvalidCase(_))));
        c.branches[0].status = false;
        c.validate().unwrap();
    }

    #[test]
    fn rejects_inverted_limits() {
        let mut c = two_bus();
        c.buses[1].btype = BusType::PV;
        c.generators.push(Generator {
            bus: 2,
            p_gen: 0.0,
            q_min: 1.0,
            q_max: -1.0,
            status: true,
        });
        assert!(matches!(c.validate(), Err(Error::InvalidCase(_))));
    }

    #[test]
    fn aggregates_generators() {
        let mut c = two_bus();
        c.buses[1].btype = BusType::PV;
        for (p, lo, hi) in [(0.2, -0.1, 0.3), (0.3, -0.2, 0.4)] {
            c.generators.push(Generator {
                bus: 2,
                p_gen: p,
                q_min: lo,
                q_max: hi,
                status: true,
            });
        }
        c.generators.push(Generator {
            bus: 2,
            p_gen: 9.0,
            q_min: -9.0,
            q_max: 9.0,
            status: false,
        });
        let t = c.gen_totals(2).unwrap();
        assert!((t.p_gen - 0.5).abs() < 1e-15);
        assert!((t.q_min + 0.3).abs() < 1e-15);
        assert!((t.q_max - 0.7).abs() < 1e-15);
        assert!(c.gen_totals(1).is_none());
    }

    #[test]
    fn unbounded_limits_serialize_as_null() {
        let g = Generator {
            bus: 1,
            p_gen: 0.0,
            q_min: f64::NEG_INFINITY,
            q_max: f64::INFINITY,
            status: true,
        };
        let s = serde_json::to_string(&g).unwrap();
        assert!(s.contains("\"q_min\":null"));
        let back: Generator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }
}
