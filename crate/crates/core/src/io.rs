//! Writers for the legacy VTK structured-points format, flat CSV dumps and
//! the points CSV consumed by the hull subcommand.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::grid::{BoolMask, GridField, GridSpec};
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

fn vtk_header(spec: &GridSpec, title: &str, out: &mut String) {
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str(title);
    out.push('\n');
    out.push_str("ASCII\n");
    out.push_str("DATASET STRUCTURED_POINTS\n");
    let _ = writeln!(
        out,
        "DIMENSIONS {} {} {}",
        spec.dims[0], spec.dims[1], spec.dims[2]
    );
    let _ = writeln!(
        out,
        "ORIGIN {} {} {}",
        spec.origin.0[0], spec.origin.0[1], spec.origin.0[2]
    );
    let _ = writeln!(out, "SPACING {h} {h} {h}", h = spec.spacing);
    let _ = writeln!(out, "POINT_DATA {}", spec.node_count());
}

/// Field as legacy VTK ASCII structured points (nodes in x-fastest order,
/// which matches the internal layout).
pub fn field_to_vtk(field: &GridField, name: &str) -> String {
    let mut out = String::new();
    vtk_header(&field.spec, name, &mut out);
    let _ = writeln!(out, "SCALARS {name} double");
    out.push_str("LOOKUP_TABLE default\n");
    for v in &field.values {
        let _ = writeln!(out, "{v}");
    }
    out
}

/// Mask as legacy VTK ASCII with 0/1 scalars.
pub fn mask_to_vtk(mask: &BoolMask, name: &str) -> String {
    let mut out = String::new();
    vtk_header(&mask.spec, name, &mut out);
    let _ = writeln!(out, "SCALARS {name} int");
    out.push_str("LOOKUP_TABLE default\n");
    for b in &mask.bits {
        out.push_str(if *b { "1\n" } else { "0\n" });
    }
    out
}

pub fn write_field_vtk(field: &GridField, name: &str, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(field_to_vtk(field, name).as_bytes())?;
    Ok(())
}

pub fn write_mask_vtk(mask: &BoolMask, name: &str, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(mask_to_vtk(mask, name).as_bytes())?;
    Ok(())
}

/// Field as flat CSV: one row of index triple and value per node.
pub fn field_to_csv(field: &GridField) -> String {
    let spec = &field.spec;
    let mut out = String::from("i,j,k,value\n");
    for k in 0..spec.dims[2] {
        for j in 0..spec.dims[1] {
            for i in 0..spec.dims[0] {
                let _ = writeln!(out, "{},{},{},{}", i, j, k, field.value(i, j, k));
            }
        }
    }
    out
}

/// Segment complex as CSV: one row per segment with both endpoints.
pub fn segments_to_csv(complex: &crate::epshull::SegmentComplex, dim: usize) -> String {
    let mut out = String::new();
    out.push_str(if dim == 2 {
        "x1,y1,x2,y2\n"
    } else {
        "x1,y1,z1,x2,y2,z2\n"
    });
    for s in &complex.segments {
        if dim == 2 {
            let _ = writeln!(out, "{},{},{},{}", s.a.0[0], s.a.0[1], s.b.0[0], s.b.0[1]);
        } else {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.a.0[0], s.a.0[1], s.a.0[2], s.b.0[0], s.b.0[1], s.b.0[2]
            );
        }
    }
    out
}

/// Points as CSV (`x,y[,z]` per row).
pub fn points_to_csv(points: &[Point], dim: usize) -> String {
    let mut out = String::new();
    out.push_str(if dim == 2 { "x,y\n" } else { "x,y,z\n" });
    for p in points {
        if dim == 2 {
            let _ = writeln!(out, "{},{}", p.0[0], p.0[1]);
        } else {
            let _ = writeln!(out, "{},{},{}", p.0[0], p.0[1], p.0[2]);
        }
    }
    out
}

/// Parse a points CSV: optional `x,y[,z]` header, one point per row.
pub fn points_from_csv(text: &str) -> Result<Vec<Point>> {
    let mut pts = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if lineno == 0 && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            continue; // header row
        }
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::Config(format!(
                "line {}: expected 2 or 3 comma-separated coordinates",
                lineno + 1
            )));
        }
        let mut c = [0.0f64; 3];
        for (a, f) in fields.iter().enumerate() {
            c[a] = f
                .parse()
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        pts.push(Point(c));
    }
    if pts.is_empty() {
        return Err(Error::EmptyInput("points csv has no rows"));
    }
    Ok(pts)
}
