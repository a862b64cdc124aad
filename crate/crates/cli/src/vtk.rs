//! Legacy ASCII VTK export of scalar point data on triangle meshes.

use std::fmt::Write as _;
use std::path::Path;

use steklov_patterns::Mesh;

use crate::CliError;

/// Renders `DATASET UNSTRUCTURED_GRID` with one `SCALARS` block per field.
pub fn format_vtk(mesh: &Mesh, fields: &[(&str, &[f64])], title: &str) -> Result<String, CliError> {
    let n = mesh.n_vertices();
    for (name, values) in fields {
        if values.len() != n {
            return Err(CliError::Numeric(steklov_patterns::Error::Shape { expected: n, got: values.len() }));
        }
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(CliError::Usage(format!("VTK field name {name:?} must be a single nonempty token")));
        }
    }
    let tris = mesh.triangles();
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 3.0");
    let _ = writeln!(out, "{}", title.lines().next().unwrap_or("").trim());
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(out, "POINTS {n} double");
    for p in mesh.vertices() {
        let _ = writeln!(out, "{:?} {:?} 0.0", p.x, p.y);
    }
    let _ = writeln!(out, "CELLS {} {}", tris.len(), 4 * tris.len());
    for t in tris {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {}", tris.len());
    for _ in tris {
        let _ = writeln!(out, "5");
    }
    if !fields.is_empty() {
        let _ = writeln!(out, "POINT_DATA {n}");
        for (name, values) in fields {
            let _ = writeln!(out, "SCALARS {name} double 1");
            let _ = writeln!(out, "LOOKUP_TABLE default");
            for v in *values {
                let _ = writeln!(out, "{v:?}");
            }
        }
    }
    Ok(out)
}

pub fn export_vtk(mesh: &Mesh, fields: &[(&str, &[f64])], path: &Path) -> Result<(), CliError> {
    let text = format_vtk(mesh, fields, "steklov-patterns field export")?;
    std::fs::write(path, text)?;
    Ok(())
}
