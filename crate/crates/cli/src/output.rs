//! JSON output with numbers rounded to 12 significant digits.

use serde::Serialize;
use serde_json::Value;

use screening_core::outcomes::round_sig;

pub const SIG_DIGITS: usize = 12;

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(x) = n.as_f64().filter(|_| n.is_f64()) {
                if let Some(r) = serde_json::Number::from_f64(round_sig(x, SIG_DIGITS)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON text with a trailing newline. Non-finite numbers become null.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("serializable output");
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("valid JSON value");
    s.push('\n');
    s
}
