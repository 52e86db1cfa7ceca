//! Mesh and label file formats.
//!
//! `.tet` (ASCII): optional `#` comment lines, then the vertex count, one
//! `x y z` line per vertex, the tet count, and one `a b c d` line per tet
//! with zero-based vertex indices. Blank lines are ignored.
//!
//! Legacy VTK: ASCII `DATASET UNSTRUCTURED_GRID`; cells of type 10
//! (tetrahedron) are kept, other cell types are skipped.
//!
//! Labels: TOML with integer arrays `matching`, `loaded` (boundary triangle
//! ids) and `fixed` (vertex ids).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::{Error, Result, Vec3};

use super::{RegionLabels, TetMesh};

const VTK_TETRA: usize = 10;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `text`, creating missing parent directories.
pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_fields<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    text: &str,
    expected: usize,
) -> Result<Vec<T>> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != expected {
        return Err(Error::parse(
            path,
            line,
            format!("expected {expected} fields, found {}", fields.len()),
        ));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<T>()
                .map_err(|_| Error::parse(path, line, format!("cannot parse '{f}'")))
        })
        .collect()
}

pub fn parse_tet(text: &str, path: &Path) -> Result<TetMesh> {
    let mut lines = data_lines(text);
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::parse(path, 0, format!("unexpected end of file, expected {what}")))
    };
    let (ln, l) = next("vertex count")?;
    let nv = parse_fields::<usize>(path, ln, l, 1)?[0];
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next("vertex")?;
        let c = parse_fields::<f64>(path, ln, l, 3)?;
        vertices.push(Vec3::new(c[0], c[1], c[2]));
    }
    let (ln, l) = next("tet count")?;
    let nt = parse_fields::<usize>(path, ln, l, 1)?[0];
    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = next("tet")?;
        let c = parse_fields::<usize>(path, ln, l, 4)?;
        tets.push([c[0], c[1], c[2], c[3]]);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::parse(path, ln, "trailing data after tets"));
    }
    TetMesh::new(vertices, tets)
}

pub fn format_tet(mesh: &TetMesh) -> String {
    let mut out = String::new();
    writeln!(out, "{}", mesh.vertex_count()).unwrap();
    for v in mesh.vertices() {
        writeln!(out, "{} {} {}", v.x, v.y, v.z).unwrap();
    }
    writeln!(out, "{}", mesh.tets().len()).unwrap();
    for t in mesh.tets() {
        writeln!(out, "{} {} {} {}", t[0], t[1], t[2], t[3]).unwrap();
    }
    out
}

pub fn write_tet(mesh: &TetMesh, path: &Path) -> Result<()> {
    write_text(path, &format_tet(mesh))
}

/// Whitespace tokens tagged with their line numbers.
struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
    path: &'a Path,
}

impl<'a> Tokens<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let tok = self.items.get(self.pos).copied().ok_or_else(|| {
            Error::parse(self.path, 0, format!("unexpected end of file, expected {what}"))
        })?;
        self.pos += 1;
        Ok(tok)
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let (ln, tok) = self.next(what)?;
        tok.parse()
            .map_err(|_| Error::parse(self.path, ln, format!("cannot parse {what} from '{tok}'")))
    }
}

pub fn parse_vtk(text: &str, path: &Path) -> Result<TetMesh> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if !header.starts_with("# vtk DataFile") {
        return Err(Error::parse(path, 1, "missing '# vtk DataFile' header"));
    }
    let _title = lines.next();
    let format = lines.next().unwrap_or("").trim();
    if !format.eq_ignore_ascii_case("ASCII") {
        return Err(Error::parse(path, 3, format!("only ASCII VTK is supported, found '{format}'")));
    }
    let items: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .skip(3)
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
        .collect();
    let mut tok = Tokens { items, pos: 0, path };

    let mut points: Vec<Vec3> = Vec::new();
    let mut cells: Vec<Vec<usize>> = Vec::new();
    let mut types: Vec<usize> = Vec::new();
    while tok.pos < tok.items.len() {
        let (ln, key) = tok.next("section keyword")?;
        match key.to_ascii_uppercase().as_str() {
            "DATASET" => {
                let (ln, kind) = tok.next("dataset type")?;
                if !kind.eq_ignore_ascii_case("UNSTRUCTURED_GRID") {
                    return Err(Error::parse(path, ln, format!("unsupported dataset '{kind}'")));
                }
            }
            "POINTS" => {
                let n: usize = tok.parse("point count")?;
                let _ty = tok.next("point data type")?;
                points.reserve(n);
                for _ in 0..n {
                    let x = tok.parse("coordinate")?;
                    let y = tok.parse("coordinate")?;
                    let z = tok.parse("coordinate")?;
                    points.push(Vec3::new(x, y, z));
                }
            }
            "CELLS" => {
                let n: usize = tok.parse("cell count")?;
                let size: usize = tok.parse("cell list size")?;
                let (_, peek) = *tok.items.get(tok.pos).unwrap_or(&(0, ""));
                if peek.eq_ignore_ascii_case("OFFSETS") {
                    // VTK 5.x layout: n is the offsets length
                    tok.next("OFFSETS")?;
                    tok.next("offset type")?;
                    let offsets: Vec<usize> =
                        (0..n).map(|_| tok.parse("offset")).collect::<Result<_>>()?;
                    let (ln, kw) = tok.next("CONNECTIVITY")?;
                    if !kw.eq_ignore_ascii_case("CONNECTIVITY") {
                        return Err(Error::parse(path, ln, "expected CONNECTIVITY"));
                    }
                    tok.next("connectivity type")?;
                    let conn: Vec<usize> =
                        (0..size).map(|_| tok.parse("vertex index")).collect::<Result<_>>()?;
                    for w in offsets.windows(2) {
                        cells.push(conn[w[0]..w[1]].to_vec());
                    }
                } else {
                    for _ in 0..n {
                        let k: usize = tok.parse("cell size")?;
                        let ids = (0..k).map(|_| tok.parse("vertex index")).collect::<Result<_>>()?;
                        cells.push(ids);
                    }
                }
            }
            "CELL_TYPES" => {
                let n: usize = tok.parse("cell type count")?;
                types = (0..n).map(|_| tok.parse("cell type")).collect::<Result<_>>()?;
            }
            "POINT_DATA" | "CELL_DATA" => break,
            _ => return Err(Error::parse(path, ln, format!("unexpected token '{key}'"))),
        }
    }
    if types.len() != cells.len() {
        return Err(Error::parse(
            path,
            0,
            format!("{} cells but {} cell types", cells.len(), types.len()),
        ));
    }
    let mut tets = Vec::new();
    for (cell, &ty) in cells.iter().zip(&types) {
        if ty == VTK_TETRA {
            if cell.len() != 4 {
                return Err(Error::parse(path, 0, "tetra cell without 4 vertices"));
            }
            tets.push([cell[0], cell[1], cell[2], cell[3]]);
        }
    }
    TetMesh::from_unoriented(points, tets)
}

/// Legacy ASCII VTK unstructured grid, with an optional per-vertex
/// `displacement` vector field.
pub fn format_vtk(mesh: &TetMesh, displacement: Option<&[Vec3]>) -> String {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\nelastoreg mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(out, "POINTS {} double", mesh.vertex_count()).unwrap();
    for v in mesh.vertices() {
        writeln!(out, "{} {} {}", v.x, v.y, v.z).unwrap();
    }
    let nt = mesh.tets().len();
    writeln!(out, "CELLS {} {}", nt, 5 * nt).unwrap();
    for t in mesh.tets() {
        writeln!(out, "4 {} {} {} {}", t[0], t[1], t[2], t[3]).unwrap();
    }
    writeln!(out, "CELL_TYPES {nt}").unwrap();
    for _ in 0..nt {
        writeln!(out, "{VTK_TETRA}").unwrap();
    }
    if let Some(u) = displacement {
        writeln!(out, "POINT_DATA {}\nVECTORS displacement double", u.len()).unwrap();
        for d in u {
            writeln!(out, "{} {} {}", d.x, d.y, d.z).unwrap();
        }
    }
    out
}

/// Reads `.tet` or `.vtk` depending on the file extension.
pub fn read_mesh(path: &Path) -> Result<TetMesh> {
    let text = read_text(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("vtk") => parse_vtk(&text, path),
        _ => parse_tet(&text, path),
    }
}

pub fn write_mesh(mesh: &TetMesh, path: &Path) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("vtk") => write_text(path, &format_vtk(mesh, None)),
        _ => write_tet(mesh, path),
    }
}

pub fn read_labels(path: &Path) -> Result<RegionLabels> {
    let text = read_text(path)?;
    let raw: RegionLabels =
        toml::from_str(&text).map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok(RegionLabels::new(raw.matching, raw.loaded, raw.fixed))
}

pub fn write_labels(labels: &RegionLabels, path: &Path) -> Result<()> {
    let text = toml::to_string(labels).map_err(|e| Error::Config(e.to_string()))?;
    write_text(path, &text)
}
