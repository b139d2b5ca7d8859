//! Deterministic number formatting for CSV and table output: six
//! significant digits, `.` decimal separator, trailing zeros stripped,
//! scientific notation outside [1e-4, 1e6). Output is byte-stable for
//! identical inputs.

pub fn g6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // Rounding can bump the magnitude (999999.9 -> "1000000"); fall
        // through to scientific notation when it does.
        let digits = s.chars().filter(|c| c.is_ascii_digit()).count();
        let leading_zeros = s
            .trim_start_matches('-')
            .trim_start_matches("0.")
            .chars()
            .take_while(|&c| c == '0')
            .count();
        let significant = if mag < 0 { digits - 1 - leading_zeros } else { digits };
        if significant <= 6 {
            return if s.contains('.') {
                s.trim_end_matches('0').trim_end_matches('.').to_string()
            } else {
                s
            };
        }
    }
    let s = format!("{x:.5e}");
    // "1.23450e-4" -> strip mantissa trailing zeros -> "1.2345e-4"
    let (mantissa, exp) = s.split_once('e').expect("e-format");
    let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
    format!("{mantissa}e{exp}")
}

/// One CSV line: fields joined by `,`, LF terminated.
pub fn csv_line(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(g6(0.22006953279), "0.22007");
        assert_eq!(g6(41153.62), "41153.6");
        assert_eq!(g6(0.002375), "0.002375");
        assert_eq!(g6(1e7), "1e7");
        assert_eq!(g6(5e-6), "5e-6");
        assert_eq!(g6(-1.234567e-9), "-1.23457e-9");
        assert_eq!(g6(0.0), "0");
        assert_eq!(g6(1.0), "1");
        assert_eq!(g6(f64::INFINITY), "inf");
    }

    #[test]
    fn rounding_at_magnitude_boundaries() {
        assert_eq!(g6(999999.9), "1e6");
        assert_eq!(g6(999999.0), "999999");
        assert_eq!(g6(0.000099999999), "1e-4"); // floor(log10) = -5 picks scientific
        assert_eq!(g6(123456.4), "123456");
    }

    #[test]
    fn csv_lines_end_with_lf() {
        let line = csv_line(&["a".into(), "b".into()]);
        assert_eq!(line, "a,b\n");
    }
}
