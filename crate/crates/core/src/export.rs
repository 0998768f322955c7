//! Text exports: legacy VTK, CSV traces and tables, SVG plots, and atomic
//! file writes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fem::ComplexNodalField;
use crate::geom::Vec2;
use crate::mesh::{BoundaryTag, Region, TriMesh};
use crate::scalar::Real;

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::io(path, e)
}

fn temp_path(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

/// Writes through a sibling temporary file and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let tmp = temp_path(path, ".tmp");
    let run = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    run().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path, e)
    })
}

/// CSV that grows one flushed line at a time under `<path>.partial` and is
/// renamed to `path` by `finish`.
pub struct StreamingCsv {
    path: PathBuf,
    partial: PathBuf,
    out: BufWriter<fs::File>,
}

impl StreamingCsv {
    pub fn create(path: impl AsRef<Path>, header: &str) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let partial = temp_path(&path, ".partial");
        let file = fs::File::create(&partial).map_err(|e| io_err(&partial, e))?;
        let mut s = Self {
            path,
            partial,
            out: BufWriter::new(file),
        };
        s.row(header)?;
        Ok(s)
    }

    pub fn row(&mut self, line: &str) -> Result<()> {
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|e| io_err(&self.partial, e))
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.out.flush().map_err(|e| io_err(&self.partial, e))?;
        fs::rename(&self.partial, &self.path).map_err(|e| io_err(&self.path, e))?;
        Ok(self.path)
    }
}

fn region_id(r: Region) -> u8 {
    match r {
        Region::Omega => 6,
        Region::Obstacle => 7,
    }
}

/// Point data for a VTK file.
pub enum PointData<'a, T> {
    Scalar(&'a str, &'a [T]),
    Vector(&'a str, &'a [Vec2<T>]),
}

/// Legacy ASCII VTK unstructured grid with a `region` cell field.
pub fn vtk_legacy<T: Real>(mesh: &TriMesh<T>, title: &str, data: &[PointData<'_, T>]) -> Result<String> {
    let n = mesh.n_vertices();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.lines().next().unwrap_or(""));
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {} 0", p.x, p.y);
    }
    let nc = mesh.n_cells();
    let _ = writeln!(s, "CELLS {nc} {}", 4 * nc);
    for c in mesh.cells() {
        let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        let _ = writeln!(s, "5");
    }
    let _ = writeln!(s, "CELL_DATA {nc}\nSCALARS region int 1\nLOOKUP_TABLE default");
    for &r in mesh.regions() {
        let _ = writeln!(s, "{}", region_id(r));
    }
    if !data.is_empty() {
        let _ = writeln!(s, "POINT_DATA {n}");
    }
    for d in data {
        match d {
            PointData::Scalar(name, v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch(format!("{name}: {} values for {n} points", v.len())));
                }
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for x in v.iter() {
                    let _ = writeln!(s, "{x}");
                }
            }
            PointData::Vector(name, v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch(format!("{name}: {} values for {n} points", v.len())));
                }
                let _ = writeln!(s, "VECTORS {name} double");
                for x in v.iter() {
                    let _ = writeln!(s, "{} {} 0", x.x, x.y);
                }
            }
        }
    }
    Ok(s)
}

/// Vertex values of a complex field as `(re, im, abs)` columns.
pub fn vertex_parts<T: Real>(mesh: &TriMesh<T>, u: &ComplexNodalField<T>) -> Result<[Vec<T>; 3]> {
    u.check_mesh(mesh)?;
    let vals: Vec<_> = (0..mesh.n_vertices()).map(|i| u.value(i)).collect();
    Ok([
        vals.iter().map(|z| z.re).collect(),
        vals.iter().map(|z| z.im).collect(),
        vals.iter().map(|z| z.norm()).collect(),
    ])
}

/// VTK file with the real part, imaginary part and modulus of `u`.
pub fn field_vtk<T: Real>(mesh: &TriMesh<T>, u: &ComplexNodalField<T>, name: &str) -> Result<String> {
    let [re, im, abs] = vertex_parts(mesh, u)?;
    let (nr, ni, na) = (format!("{name}_re"), format!("{name}_im"), format!("{name}_abs"));
    vtk_legacy(
        mesh,
        name,
        &[
            PointData::Scalar(&nr, &re),
            PointData::Scalar(&ni, &im),
            PointData::Scalar(&na, &abs),
        ],
    )
}

/// Vertices of the `G1` polyline in chain order with their arc length.
pub fn coast_chain<T: Real>(mesh: &TriMesh<T>) -> Vec<(usize, T)> {
    let edges: Vec<_> = mesh.edges_with_tag(BoundaryTag::G1).collect();
    let next: HashMap<usize, usize> = edges.iter().map(|e| (e.a, e.b)).collect();
    let ends: std::collections::HashSet<usize> = edges.iter().map(|e| e.b).collect();
    let mut starts: Vec<usize> = edges.iter().map(|e| e.a).filter(|a| !ends.contains(a)).collect();
    starts.sort_unstable();
    if starts.is_empty() {
        starts.extend(edges.iter().map(|e| e.a).min());
    }
    let v = mesh.vertices();
    let mut out = Vec::new();
    let mut s = T::zero();
    for start in starts {
        let mut cur = start;
        out.push((cur, s));
        while let Some(&nx) = next.get(&cur) {
            s += (v[nx] - v[cur]).norm();
            out.push((nx, s));
            cur = nx;
            if cur == start || out.len() > edges.len() + 1 {
                break;
            }
        }
    }
    out
}

/// `arc_length,re,im,abs` along `G1`.
pub fn coast_trace_csv<T: Real>(mesh: &TriMesh<T>, u: &ComplexNodalField<T>) -> Result<String> {
    u.check_mesh(mesh)?;
    let mut s = String::from("arc_length,re,im,abs\n");
    for (i, t) in coast_chain(mesh) {
        let z = u.value(i);
        let _ = writeln!(s, "{t},{},{},{}", z.re, z.im, z.norm());
    }
    Ok(s)
}

/// `x,y,label` per clustered point.
pub fn labels_csv<T: Real>(points: &[Vec2<T>], labels: &[i64]) -> Result<String> {
    if points.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!("{} points, {} labels", points.len(), labels.len())));
    }
    let mut s = String::from("x,y,label\n");
    for (p, l) in points.iter().zip(labels) {
        let _ = writeln!(s, "{},{},{l}", p.x, p.y);
    }
    Ok(s)
}

/// Objective against iteration as a standalone SVG line plot.
pub fn objective_svg<T: Real>(values: &[T], title: &str) -> String {
    let (w, h, pad) = (640.0, 400.0, 60.0);
    let vals: Vec<f64> = values.iter().filter_map(|v| v.to_f64()).collect();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let nx = (vals.len().max(2) - 1) as f64;
    let px = |i: usize| pad + (w - 2.0 * pad) * i as f64 / nx;
    let py = |v: f64| h - pad - (h - 2.0 * pad) * (v - lo) / span;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        w / 2.0,
        title.replace('&', "&amp;").replace('<', "&lt;")
    );
    let _ = writeln!(
        s,
        r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    if !vals.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{:.4e}</text>"#,
            pad - 4.0,
            pad + 4.0,
            hi
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{:.4e}</text>"#,
            pad - 4.0,
            h - pad + 4.0,
            lo
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            w - pad,
            h - pad + 18.0,
            vals.len() - 1
        );
        let pts: Vec<String> = vals
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", px(i), py(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
            pts.join(" ")
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">iteration</text>"#,
        w / 2.0,
        h - 20.0
    );
    s.push_str("</svg>\n");
    s
}
