//! Grid dump formats: row-major CSV with 9 significant digits, and 8-bit
//! binary PGM scaled linearly from `[0, U_MAX]` to `[0, 255]`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{FieldGrid, U_MAX};

/// `%.9g`-style formatting.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, v);
        trim_zeros(&fixed).to_string()
    } else {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn grid_to_csv(grid: &FieldGrid) -> String {
    let n = grid.n();
    let mut out = String::with_capacity(n * n * 12);
    for row in grid.as_slice().chunks_exact(n) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_sig9(*v));
        }
        out.push('\n');
    }
    out
}

pub fn csv_to_grid(text: &str) -> Result<FieldGrid> {
    let mut data = Vec::new();
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        for field in line.split(',') {
            data.push(field.trim().parse::<f64>().map_err(|e| Error::Parse {
                path: "<csv>".into(),
                line: i + 1,
                message: e.to_string(),
            })?);
        }
    }
    FieldGrid::from_vec(rows, data)
}

pub fn grid_to_pgm(grid: &FieldGrid) -> Vec<u8> {
    let n = grid.n();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.extend(grid.as_slice().iter().map(|&v| {
        let s = (v.clamp(0.0, U_MAX) / U_MAX * 255.0).round();
        s as u8
    }));
    out
}

pub fn write_csv(grid: &FieldGrid, path: &Path) -> Result<()> {
    std::fs::write(path, grid_to_csv(grid)).map_err(|e| Error::io(path, e))
}

pub fn write_pgm(grid: &FieldGrid, path: &Path) -> Result<()> {
    std::fs::write(path, grid_to_pgm(grid)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Cell;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.5), "0.5");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(-2.0 / 3.0), "-0.666666667");
        assert_eq!(format_sig9(123456.789012), "123456.789");
        assert_eq!(format_sig9(1.5e-7), "1.5e-07");
        assert_eq!(format_sig9(0.000123456789123), "0.000123456789");
        assert_eq!(format_sig9(2.5e12), "2.5e+12");
    }

    #[test]
    fn csv_shape_and_parse_back() {
        let g = FieldGrid::from_fn(3, |x, y| (x + 10 * y) as f64 / 7.0);
        let text = grid_to_csv(&g);
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().all(|l| l.split(',').count() == 3));
        let back = csv_to_grid(&text).unwrap();
        assert!(back.max_abs_diff(&g) < 1e-8);
    }

    #[test]
    fn pgm_scaling() {
        let mut g = FieldGrid::zeros(2);
        g.set(Cell::new(1, 0), 1.0);
        g.set(Cell::new(0, 1), 0.5);
        let bytes = grid_to_pgm(&g);
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[0, 255, 128, 0]);
    }
}
