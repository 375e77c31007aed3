//! Fixed-precision number formatting for CSV output.

/// Significant digits written for every floating-point CSV field.
pub const SIGNIFICANT_DIGITS: i32 = 9;

/// Formats `x` in plain decimal notation with nine significant digits.
///
/// Non-finite values are written as `inf`, `-inf` or `nan`.
pub fn sig9(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (SIGNIFICANT_DIGITS - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new leading digit (9.9999999996 -> 10.00000000).
    let digits = s.chars().filter(|c| c.is_ascii_digit()).count();
    let leading_zeros = s
        .trim_start_matches('-')
        .chars()
        .take_while(|c| *c == '0' || *c == '.')
        .filter(|c| *c == '0')
        .count();
    if decimals > 0 && digits - leading_zeros > SIGNIFICANT_DIGITS as usize {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.0), "1.00000000");
        assert_eq!(sig9(66666.666666666), "66666.6667");
        assert_eq!(sig9(-0.0015), "-0.00150000000");
        assert_eq!(sig9(123456789012.0), "123456789012");
        assert_eq!(sig9(9.9999999996), "10.0000000");
        assert_eq!(sig9(f64::INFINITY), "inf");
    }

    #[test]
    fn round_trips_to_nine_digits() {
        for x in [std::f64::consts::PI, 1e-7 / 3.0, 512.125, -7.77e5] {
            let back: f64 = sig9(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-8, "{x} -> {back}");
        }
    }
}
