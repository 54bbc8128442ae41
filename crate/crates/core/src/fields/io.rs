//! Text serialisation of fields: `x1,x2,value` CSV plus a `key = value`
//! grid sidecar.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::geometry::Point;

use super::{FieldError, ScalarField, Trace, UniformGrid};

/// 17 significant digits, round-trip exact for f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn field_csv(field: &ScalarField) -> String {
    let g = field.grid();
    let mut out = String::from("x1,x2,value\n");
    for &n in g.active_nodes() {
        let p = g.point(n);
        let _ = writeln!(out, "{},{},{}", fmt_f64(p.x1), fmt_f64(p.x2), fmt_f64(field.value(n)));
    }
    out
}

pub fn grid_sidecar(grid: &UniformGrid) -> String {
    let o = grid.origin_offset();
    format!(
        "h = {}\nn1 = {}\nn2 = {}\norigin_x1 = {}\norigin_x2 = {}\ndomain_name = {}\n",
        fmt_f64(grid.h()),
        grid.n1(),
        grid.n2(),
        fmt_f64(o.x1),
        fmt_f64(o.x2),
        grid.domain().name()
    )
}

pub fn write_field_csv(field: &ScalarField, path: &Path) -> Result<(), FieldError> {
    fs::write(path, field_csv(field)).map_err(|e| FieldError::Io(format!("{}: {e}", path.display())))
}

pub fn write_grid_sidecar(grid: &UniformGrid, path: &Path) -> Result<(), FieldError> {
    fs::write(path, grid_sidecar(grid)).map_err(|e| FieldError::Io(format!("{}: {e}", path.display())))
}

/// Parse field CSV text onto `grid`. Every active node must be listed.
pub fn parse_field_csv(grid: &Arc<UniformGrid>, text: &str, trace: Option<Trace>) -> Result<ScalarField, FieldError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "x1,x2,value" => {}
        other => return Err(FieldError::Parse(format!("bad header {other:?}"))),
    }
    let mut values = vec![f64::NAN; grid.len()];
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(FieldError::Parse(format!("line {}: expected 3 columns", k + 2)));
        }
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| FieldError::Parse(format!("line {}: {e}", k + 2)));
        let p = Point::new(num(cols[0])?, num(cols[1])?);
        let n = grid
            .node_at(p)
            .filter(|&n| grid.is_active(n))
            .ok_or_else(|| FieldError::Parse(format!("line {}: {p} is not an active grid node", k + 2)))?;
        values[n] = num(cols[2])?;
    }
    if let Some(&n) = grid.active_nodes().iter().find(|&&n| values[n].is_nan()) {
        return Err(FieldError::Parse(format!("node {} missing", grid.point(n))));
    }
    ScalarField::from_values(grid, values, trace)
}

pub fn read_field_csv(grid: &Arc<UniformGrid>, path: &Path, trace: Option<Trace>) -> Result<ScalarField, FieldError> {
    let text = fs::read_to_string(path).map_err(|e| FieldError::Io(format!("{}: {e}", path.display())))?;
    parse_field_csv(grid, &text, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain2D;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let g = UniformGrid::new(&Domain2D::builtin("egg").unwrap(), 1.0 / 16.0).unwrap();
        let f = ScalarField::from_fn(&g, |p| (3.0 * p.x1).sin() / 7.0 + p.x2.exp(), None);
        let text = field_csv(&f);
        assert!(text.starts_with("x1,x2,value\n"));
        let back = parse_field_csv(&g, &text, None).unwrap();
        for &n in g.active_nodes() {
            assert_eq!(back.value(n).to_bits(), f.value(n).to_bits());
        }
    }

    #[test]
    fn sidecar_keys() {
        let g = UniformGrid::new(&Domain2D::unit_disk(), 0.25).unwrap();
        let s = grid_sidecar(&g);
        for key in ["h", "n1", "n2", "origin_x1", "origin_x2", "domain_name"] {
            assert!(s.lines().any(|l| l.starts_with(&format!("{key} = "))), "{key}");
        }
        assert!(s.contains("domain_name = disk"));
    }

    #[test]
    fn off_grid_rows_are_rejected() {
        let g = UniformGrid::new(&Domain2D::unit_disk(), 0.25).unwrap();
        let err = parse_field_csv(&g, "x1,x2,value\n0.1,0.0,1.0\n", None).unwrap_err();
        assert!(matches!(err, FieldError::Parse(_)));
    }
}
