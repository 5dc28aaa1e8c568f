//! Fixed-width real formatting for machine output.
//!
//! Every real that leaves the library through JSON or CSV is written with
//! 17 significant digits in scientific notation, so a value read back is
//! bit-identical to the one written. Non-finite values become `null`.

use serde::Serializer;
use serde_json::{Number, Value};

/// Formats `x` with 17 significant digits, e.g. `1.5000000000000000e0`; JSON output
/// normalizes the exponent to `e+0`.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// A JSON number carrying exactly the 17-digit rendering of `x`.
pub fn real_value(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    match format_real(x).parse::<Number>() {
        Ok(num) => Value::Number(num),
        Err(_) => Value::Null,
    }
}

pub fn serialize_real<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&real_value(*x), s)
}

pub fn serialize_reals<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let values: Vec<Value> = xs.iter().map(|&x| real_value(x)).collect();
    serde::Serialize::serialize(&values, s)
}

pub fn serialize_opt_real<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => serialize_real(v, s),
        None => s.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for &x in &[1.5, 15.0 / 7.0, -3.0e-12, 0.0, 1e300] {
            let s = format_real(x);
            let digits = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(digits.len(), 17, "{s}");
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn json_number_keeps_rendering() {
        let v = real_value(1.5);
        assert_eq!(serde_json::to_string(&v).unwrap(), "1.5000000000000000e+0");
        assert_eq!(real_value(f64::NAN), Value::Null);
    }
}
