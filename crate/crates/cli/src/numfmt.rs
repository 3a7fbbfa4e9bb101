//! Fixed-precision number output shared by every report format.

/// `x` rounded to 12 significant digits; negative zero becomes zero.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Text form of `round12(x)`: plain notation for moderate magnitudes,
/// scientific otherwise.
pub fn fmt12(x: f64) -> String {
    let r = round12(x);
    let a = r.abs();
    if r == 0.0 || (1e-5..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

pub mod ser {
    use serde::Serializer;

    pub fn f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(super::round12(*x))
    }

    pub fn opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) if v.is_finite() => s.serialize_f64(super::round12(*v)),
            _ => s.serialize_none(),
        }
    }
}
