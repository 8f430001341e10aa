//! Small numerical helpers shared by every module.

/// Compensated (Neumaier) summation.
///
/// Sums over up to a few million coordinates stay within a couple of ulps
/// of the exact value, independent of ordering of magnitudes.
pub fn compensated_sum<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// `x^a` for `x >= 0`, `a > 0`, with `0^a = 0`.
///
/// Very small bases go through log space so that `|x|^a` for tiny `x` and
/// small `a` does not lose the subnormal range.
#[inline]
pub fn pow_nonneg(x: f64, a: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x < 1e-300 {
        (a * x.ln()).exp()
    } else {
        x.powf(a)
    }
}

/// Format a float the way C's `%.17g` does: 17 significant digits, trailing
/// zeros removed, scientific notation outside `[1e-5, 1e17)`.
///
/// Every finite output parses back to the identical `f64`.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    const PRECISION: i32 = 17;
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..PRECISION).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
