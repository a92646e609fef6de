//! Float formatting and crash-safe file output.
//!
//! Decimal output uses 17 significant digits, enough to round-trip any `f64`.
//! The hexadecimal form writes the exact bit pattern as a C99 `%a` literal,
//! e.g. `0x1.999999999999ap-4` for `0.1`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FloatFormat {
    #[default]
    Decimal,
    Hex,
}

pub fn format_f64(x: f64, format: FloatFormat) -> String {
    match format {
        FloatFormat::Decimal => format!("{x:.16e}"),
        FloatFormat::Hex => format_hex(x),
    }
}

/// Parses either output format (and anything `str::parse::<f64>` accepts).
pub fn parse_f64(s: &str) -> Result<f64> {
    let s = s.trim();
    let unsigned = s.trim_start_matches(['-', '+']);
    if unsigned.starts_with("0x") || unsigned.starts_with("0X") {
        parse_hex(s)
    } else {
        s.parse::<f64>()
            .map_err(|_| Error::Parse(format!("not a number: `{s}`")))
    }
}

pub fn format_hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let mantissa = bits & ((1u64 << 52) - 1);
    if exp == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let mut digits = format!("{mantissa:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let frac = if digits.is_empty() {
        String::new()
    } else {
        format!(".{digits}")
    };
    let exp_sign = if exp < 0 { '-' } else { '+' };
    format!("{sign}0x{lead}{frac}p{exp_sign}{}", exp.abs())
}

fn parse_hex(s: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("malformed hex float `{s}`"));
    let (negative, rest) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let rest = rest
        .strip_prefix("0x")
        .or_else(|| rest.strip_prefix("0X"))
        .ok_or_else(bad)?;
    let (mant, exp) = rest.split_once(['p', 'P']).ok_or_else(bad)?;
    let exp: i64 = exp.parse().map_err(|_| bad())?;
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.len() != 1 || frac_part.len() > 13 {
        return Err(bad());
    }
    let lead = u64::from_str_radix(int_part, 16).map_err(|_| bad())?;
    let frac = if frac_part.is_empty() {
        0
    } else {
        u64::from_str_radix(frac_part, 16).map_err(|_| bad())? << (4 * (13 - frac_part.len()))
    };
    let bits = match lead {
        0 if frac == 0 => 0,
        0 if exp == -1022 => frac,
        1 if (-1022..=1023).contains(&exp) => (((exp + 1023) as u64) << 52) | frac,
        _ => return Err(bad()),
    };
    let value = f64::from_bits(bits);
    Ok(if negative { -value } else { value })
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so a failure never leaves a partial file behind.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut fs::File>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
