use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::{Error, Result, Vec3};

/// Observed surface points (meters). Nonempty with finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("point cloud is empty".into()));
        }
        if let Some(i) = points.iter().position(|p| !p.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidArgument(format!("cloud point {i} is not finite")));
        }
        Ok(PointCloud { points })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn map(&self, f: impl Fn(&Vec3) -> Vec3) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(f).collect(),
        }
    }
}

/// One `x y z` line per point; blank lines and `#` comments are skipped.
pub fn parse_xyz(text: &str, path: &Path) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(Error::parse(path, i + 1, "expected three coordinates"));
        }
        let mut c = [0.0; 3];
        for k in 0..3 {
            c[k] = fields[k]
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("cannot parse '{}'", fields[k])))?;
        }
        points.push(Vec3::from(c));
    }
    PointCloud::new(points)
}

pub fn format_xyz(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 60);
    for p in cloud.points() {
        writeln!(out, "{} {} {}", p.x, p.y, p.z).unwrap();
    }
    out
}

/// ASCII PLY reader: vertex `x y z` properties only, other elements ignored.
pub fn parse_ply(text: &str, path: &Path) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(Error::parse(path, 1, "missing 'ply' magic")),
    }
    let mut vertex_count = None;
    let mut in_vertex = false;
    let mut props: Vec<String> = Vec::new();
    let mut elements_before = 0usize;
    let mut before_counts: Vec<usize> = Vec::new();
    for (i, line) in lines.by_ref() {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => {
                return Err(Error::parse(path, i + 1, "only ASCII PLY is supported"));
            }
            ["element", name, n] => {
                let n: usize = n
                    .parse()
                    .map_err(|_| Error::parse(path, i + 1, "bad element count"))?;
                in_vertex = *name == "vertex";
                if in_vertex {
                    vertex_count = Some(n);
                } else if vertex_count.is_none() {
                    elements_before += 1;
                    before_counts.push(n);
                }
            }
            ["property", .., name] if in_vertex => props.push(name.to_string()),
            ["end_header"] => break,
            _ => {}
        }
    }
    let n = vertex_count.ok_or_else(|| Error::parse(path, 0, "no vertex element"))?;
    let idx = |name: &str| {
        props
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| Error::parse(path, 0, format!("vertex property '{name}' missing")))
    };
    let (ix, iy, iz) = (idx("x")?, idx("y")?, idx("z")?);
    let skip: usize = before_counts.iter().sum();
    debug_assert!(elements_before == before_counts.len());
    let mut points = Vec::with_capacity(n);
    for (i, line) in lines.skip(skip).take(n) {
        let f: Vec<&str> = line.split_whitespace().collect();
        let get = |k: usize| -> Result<f64> {
            f.get(k)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(path, i + 1, "bad vertex record"))
        };
        points.push(Vec3::new(get(ix)?, get(iy)?, get(iz)?));
    }
    if points.len() != n {
        return Err(Error::parse(path, 0, "truncated vertex list"));
    }
    PointCloud::new(points)
}

/// Reads `.ply` (ASCII) or XYZ (any other extension).
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("ply") => parse_ply(&text, path),
        _ => parse_xyz(&text, path),
    }
}

pub fn write_xyz(cloud: &PointCloud, path: &Path) -> Result<()> {
    crate::mesh::io::write_text(path, &format_xyz(cloud))
}
