//! C-style `%.Ng` float formatting for CSV and JSON output.

/// `printf("%.{precision}g", x)`.
pub fn general(x: f64, precision: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let p = precision.max(1);
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // exponent after rounding to p significant digits
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if exp < -4 || exp >= p as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `%.12g`, the CSV format.
pub fn g12(x: f64) -> String {
    general(x, 12)
}

/// `%.17g`, enough digits to round-trip any `f64`.
pub fn g17(x: f64) -> String {
    general(x, 17)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matches_printf() {
        let cases = [
            (0.0, 12, "0"),
            (1.0, 12, "1"),
            (-2.5, 12, "-2.5"),
            (0.1, 17, "0.10000000000000001"),
            (1e-5, 12, "1e-05"),
            (0.0001234, 12, "0.0001234"),
            (123456789012.0, 12, "123456789012"),
            (1234567890123.0, 12, "1.23456789012e+12"),
            (-8.7416e4, 12, "-87416"),
            (1.0 / 3.0, 12, "0.333333333333"),
            (9.9999999999999e-5, 12, "0.0001"),
            (f64::INFINITY, 12, "inf"),
            (1e300, 17, "1.0000000000000001e+300"),
        ];
        for (x, p, want) in cases {
            assert_eq!(general(x, p), want, "{x:e} at {p}");
        }
    }

    proptest! {
        #[test]
        fn g17_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            prop_assert_eq!(g17(x).parse::<f64>().unwrap(), x);
        }
    }
}
