//! Locale-independent number formatting for CSV output.

/// Formats `x` with 15 significant digits, dropping trailing zeros.
/// Uses positional notation for moderate magnitudes and `e` notation otherwise.
pub fn sig15(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.14e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim(mantissa.to_string()), exp)
    }
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

#[cfg(test)]
mod tests {
    use super::sig15;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(sig15(4.0 / 17.0), "0.235294117647059");
        assert_eq!(sig15(11.0 / 13.0), "0.846153846153846");
        assert_eq!(sig15(1.0 / 6.0), "0.166666666666667");
        assert_eq!(sig15(1.0), "1");
        assert_eq!(sig15(0.5), "0.5");
        assert_eq!(sig15(-0.25), "-0.25");
        assert_eq!(sig15(1234.5), "1234.5");
        assert_eq!(sig15(1e-7), "1e-7");
        assert_eq!(sig15(0.0), "0");
    }
}
