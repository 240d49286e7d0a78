//! CSV and JSON artifacts.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::analysis::Diagnostics;
use crate::mesh::{Field, Grid};

/// Shortest decimal that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:?}")
}

pub fn field_csv<const D: usize>(field: &Field<D>) -> String {
    let grid = field.grid();
    let mut out = String::new();
    out.push_str(if D == 1 { "x,rho\n" } else { "x,y,rho\n" });
    for (idx, &v) in field.values().iter().enumerate() {
        for c in grid.center(idx) {
            out.push_str(&format_float(c));
            out.push(',');
        }
        out.push_str(&format_float(v));
        out.push('\n');
    }
    out
}

pub const DIAGNOSTICS_HEADER: &str = "t,mass,l1,l2,ent_quad,ent_boltz,residual";

pub fn diagnostics_csv(diagnostics: &Diagnostics) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for r in &diagnostics.rows {
        let cols = [r.t, r.mass, r.l1, r.l2, r.ent_quad, r.ent_boltz, r.residual];
        let line: Vec<String> = cols.iter().map(|&v| format_float(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// A CSV table with a header row.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

/// What [`emit_csv`] can write.
pub enum CsvContent<'a, const D: usize> {
    Field(&'a Field<D>),
    Diagnostics(&'a Diagnostics),
}

pub fn emit_csv<const D: usize>(content: CsvContent<'_, D>, path: &Path) -> io::Result<()> {
    let text = match content {
        CsvContent::Field(f) => field_csv(f),
        CsvContent::Diagnostics(d) => diagnostics_csv(d),
    };
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text)
}

/// Reads a field written by [`field_csv`] and checks that its cell centres
/// match `grid`.
pub fn read_field_csv<const D: usize>(path: &Path, grid: Grid<D>) -> Result<Field<D>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    let expected = if D == 1 { "x,rho" } else { "x,y,rho" };
    if header.trim() != expected {
        return Err(format!("expected header '{expected}', found '{header}'"));
    }
    let mut values = Vec::with_capacity(grid.len());
    let tol = 1e-9 * grid.half_width();
    for (idx, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("line {}: {e}", idx + 2))?;
        if cols.len() != D + 1 {
            return Err(format!("line {}: expected {} columns", idx + 2, D + 1));
        }
        if idx >= grid.len() {
            return Err(format!("more than {} data rows", grid.len()));
        }
        let centre = grid.center(idx);
        if centre.iter().zip(&cols).any(|(c, x)| (c - x).abs() > tol) {
            return Err(format!("line {}: coordinates do not match the grid", idx + 2));
        }
        values.push(cols[D]);
    }
    Field::new(grid, values).map_err(|e| e.to_string())
}
