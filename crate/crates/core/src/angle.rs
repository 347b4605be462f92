//! Angle parsing and printing.
//!
//! Angles are accepted as decimal radians (`0.7853`), symbolic pi expressions
//! (`pi/4`, `3*pi/4`, `-5pi/6`, `2pi`), or degrees with a `deg` suffix
//! (`25.2deg`). Printing prefers an exact small pi fraction when one exists.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Parse an angle to radians.
pub fn parse_angle(s: &str) -> Result<f64> {
    let raw = s.trim();
    let err = |msg: &str| Error::Parse {
        line: 0,
        msg: format!("bad angle {raw:?}: {msg}"),
    };
    if raw.is_empty() {
        return Err(err("empty"));
    }
    let (sign, body) = match raw.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, raw.strip_prefix('+').unwrap_or(raw).trim()),
    };
    if let Some(deg) = body.strip_suffix("deg") {
        let v: f64 = deg
            .trim()
            .parse()
            .map_err(|_| err("degrees must be a plain number"))?;
        return Ok(sign * v.to_radians());
    }
    if let Some(pos) = body.find("pi") {
        let (num, rest) = body.split_at(pos);
        let rest = &rest[2..];
        let num = num.trim().trim_end_matches('*').trim();
        let coeff: f64 = if num.is_empty() {
            1.0
        } else {
            num.parse().map_err(|_| err("bad pi coefficient"))?
        };
        let denom: f64 = match rest.trim() {
            "" => 1.0,
            d => {
                let d = d
                    .strip_prefix('/')
                    .ok_or_else(|| err("expected '/denominator' after pi"))?;
                let v: f64 = d.trim().parse().map_err(|_| err("bad pi denominator"))?;
                if v == 0.0 {
                    return Err(err("zero denominator"));
                }
                v
            }
        };
        return Ok(sign * coeff * PI / denom);
    }
    body.parse::<f64>()
        .map(|v| sign * v)
        .map_err(|_| err("expected radians, a pi expression, or a deg suffix"))
}

/// Print an angle, as `p*pi/q` when it is an exact small fraction of pi,
/// otherwise as shortest round-trip decimal radians.
pub fn format_angle(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    for q in 1..=96u32 {
        let p = (x * q as f64 / PI).round();
        if p == 0.0 || p.abs() > 1e6 {
            continue;
        }
        if (x - p * PI / q as f64).abs() < 1e-12 {
            let p = p as i64;
            let coeff = match p {
                1 => String::new(),
                -1 => "-".to_string(),
                _ => p.to_string(),
            };
            return if q == 1 {
                format!("{coeff}pi")
            } else {
                format!("{coeff}pi/{q}")
            };
        }
    }
    format!("{x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pi_forms() {
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_angle("3*pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_angle("-5pi/6").unwrap(), -5.0 * PI / 6.0);
        assert_eq!(parse_angle("2pi").unwrap(), 2.0 * PI);
    }

    #[test]
    fn parses_decimals_and_degrees() {
        assert_eq!(parse_angle("0.5").unwrap(), 0.5);
        assert_eq!(parse_angle("1.5e-3").unwrap(), 1.5e-3);
        assert!((parse_angle("25.2deg").unwrap() - 25.2f64.to_radians()).abs() < 1e-15);
        assert!((parse_angle("-90deg").unwrap() + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_angle("").is_err());
        assert!(parse_angle("pie").is_err());
        assert!(parse_angle("pi/0").is_err());
        assert!(parse_angle("2").is_ok());
        assert!(parse_angle("two").is_err());
    }

    #[test]
    fn format_round_trips() {
        for &x in &[
            0.0,
            PI,
            -PI,
            PI / 4.0,
            -5.0 * PI / 6.0,
            3.0 * PI / 4.0,
            0.7345,
            1.234e-3,
        ] {
            let s = format_angle(x);
            assert!(
                (parse_angle(&s).unwrap() - x).abs() < 1e-12,
                "{x} -> {s} failed to round-trip"
            );
        }
        assert_eq!(format_angle(PI / 4.0), "pi/4");
        assert_eq!(format_angle(-5.0 * PI / 6.0), "-5pi/6");
    }
}
