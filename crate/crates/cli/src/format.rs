//! Report number formatting and aligned text tables.

use serde_json::Value;

/// `x` to 6 significant digits, `%g` style: fixed notation for exponents in
/// `[-4, 6)`, scientific otherwise, trailing zeros dropped.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// JSON number rounded to 6 significant digits; `null` when not finite.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = sig6(x).parse().expect("sig6 output parses");
    serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

/// Cell text for an optional number, `-` when absent.
pub fn cell(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), sig6)
}

/// Left-aligned first column, right-aligned others, two spaces apart.
pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| -> String {
        let parts: Vec<String> = cells
            .zip(&widths)
            .enumerate()
            .map(|(k, (c, &w))| if k == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(&mut headers.iter().copied());
    out.push('\n');
    for row in rows {
        out.push_str(&line(&mut row.iter().map(String::as_str)));
        out.push('\n');
    }
    out
}

/// `key  value` lines with the keys padded to one width.
pub fn render_pairs(pairs: &[(&str, String)]) -> String {
    let w = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    pairs.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(-0.1644853626951), "-0.164485");
        assert_eq!(sig6(2.197224577), "2.19722");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1234567.0), "1.23457e+06");
        assert_eq!(sig6(0.000012345678), "1.23457e-05");
        assert_eq!(sig6(0.00012345678), "0.000123457");
        assert_eq!(sig6(999999.5), "1e+06");
        assert_eq!(sig6(f64::NAN), "nan");
        assert_eq!(num(0.1234567), serde_json::json!(0.123457));
        assert_eq!(num(f64::INFINITY), Value::Null);
    }

    #[test]
    fn table_alignment() {
        let t = render_table(&["method", "gain"], &[vec!["a".into(), "1".into()], vec!["long_name".into(), "22.5".into()]]);
        assert_eq!(t, "method     gain\na             1\nlong_name  22.5\n");
    }
}
