//! Number formatting for emitted CSV tables: 9 significant digits, printed
//! in the shortest form that reads back to the rounded value. JSON output
//! keeps full shortest-round-trip precision.

pub const SIGNIFICANT_DIGITS: usize = 9;

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses")
}

pub fn num(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        // also folds -0
        return "0".into();
    }
    let plain = format!("{r}");
    let sci = format!("{r:e}");
    if sci.len() < plain.len() {
        sci
    } else {
        plain
    }
}
