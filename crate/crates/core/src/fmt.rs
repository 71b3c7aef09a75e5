//! Fixed-significance number formatting shared by every text writer.

/// Formats `x` with `digits` significant digits, `%g` style: plain decimal
/// notation for moderate exponents, scientific otherwise, trailing zeros
/// trimmed.
pub fn sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let digits = digits.max(1);
    // Round with the formatter, then read back the exponent: 9.9999996 -> 10
    // lands in the next decade.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

/// Six significant digits, the precision of all machine-readable output.
pub fn sig6(x: f64) -> String {
    sig(x, 6)
}

/// Rounds to `digits` significant digits, e.g. for JSON output.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x.is_finite() {
        sig(x, digits).parse().expect("formatted number parses")
    } else {
        x
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
