use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Mesh, MeshError};

impl Mesh {
    /// Plain text form: `dim nvert nelem`, then vertex rows, then element rows.
    ///
    /// Coordinates use the shortest representation that parses back to the
    /// same bits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let nv = self.dim + 1;
        writeln!(s, "{} {} {}", self.dim, self.vertices.len(), self.elements.len()).unwrap();
        for v in &self.vertices {
            if self.dim == 1 {
                writeln!(s, "{:?}", v[0]).unwrap();
            } else {
                writeln!(s, "{:?} {:?}", v[0], v[1]).unwrap();
            }
        }
        for el in &self.elements {
            let row: Vec<String> = el[..nv].iter().map(|i| i.to_string()).collect();
            writeln!(s, "{}", row.join(" ")).unwrap();
        }
        s
    }

    pub fn from_text(text: &str, degree: usize) -> Result<Self, MeshError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or(MeshError::Parse { line: 1, message: "empty file".into() })?;
        let nums = parse_row::<usize>(hline, header)?;
        let [dim, nvert, nelem] = nums[..] else {
            return Err(MeshError::Parse { line: hline, message: "expected `dim nvert nelem`".into() });
        };
        if dim != 1 && dim != 2 {
            return Err(MeshError::Parse { line: hline, message: format!("dimension {dim}") });
        }
        let mut vertices = Vec::with_capacity(nvert);
        for _ in 0..nvert {
            let (ln, l) = lines.next().ok_or(MeshError::Parse {
                line: hline,
                message: "missing vertex rows".into(),
            })?;
            let c = parse_row::<f64>(ln, l)?;
            if c.len() != dim {
                return Err(MeshError::Parse { line: ln, message: format!("expected {dim} coordinates") });
            }
            vertices.push([c[0], if dim == 2 { c[1] } else { 0.0 }]);
        }
        let mut elements = Vec::with_capacity(nelem);
        for _ in 0..nelem {
            let (ln, l) = lines.next().ok_or(MeshError::Parse {
                line: hline,
                message: "missing element rows".into(),
            })?;
            let c = parse_row::<usize>(ln, l)?;
            if c.len() != dim + 1 {
                return Err(MeshError::Parse { line: ln, message: format!("expected {} indices", dim + 1) });
            }
            let mut el = [0; 3];
            el[..c.len()].copy_from_slice(&c);
            elements.push(el);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(MeshError::Parse { line: ln, message: "trailing data".into() });
        }
        Self::from_parts(dim, degree, vertices, elements)
    }

    /// Writes `vertices.csv`, `elements.csv` and `boundary.csv` into `dir`.
    pub fn write_csv(&self, dir: &Path) -> Result<(), MeshError> {
        fs::create_dir_all(dir)?;
        let mut v = String::from("id,x,y\n");
        for (i, p) in self.vertices.iter().enumerate() {
            writeln!(v, "{i},{:.16e},{:.16e}", p[0], p[1]).unwrap();
        }
        fs::write(dir.join("vertices.csv"), v)?;

        let mut e = String::from(if self.dim == 1 { "id,v0,v1\n" } else { "id,v0,v1,v2\n" });
        for (i, el) in self.elements.iter().enumerate() {
            let row: Vec<String> = el[..self.dim + 1].iter().map(|x| x.to_string()).collect();
            writeln!(e, "{i},{}", row.join(",")).unwrap();
        }
        fs::write(dir.join("elements.csv"), e)?;

        let mut b = String::from("element,local_face,nx,ny,measure,side\n");
        for f in &self.boundary_faces {
            writeln!(
                b,
                "{},{},{:.16e},{:.16e},{:.16e},{}",
                f.element,
                f.local_face,
                f.normal[0],
                f.normal[1],
                f.measure,
                f.side.name()
            )
            .unwrap();
        }
        fs::write(dir.join("boundary.csv"), b)?;
        Ok(())
    }
}

fn parse_row<T: std::str::FromStr>(line: usize, text: &str) -> Result<Vec<T>, MeshError> {
    text.split_whitespace()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| MeshError::Parse { line, message: format!("cannot parse `{t}`") })
        })
        .collect()
}
