//! Text mesh format: header `NV NT NBF`, then vertex, triangle and labeled boundary-edge lines.

use std::path::Path;

use super::Mesh;
use crate::error::{Error, Result};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let mut next = |what: &str| {
        lines.next().ok_or_else(|| Error::Parse { line: 0, msg: format!("unexpected end of file, expected {what}") })
    };
    let (hl, header) = next("header")?;
    let counts = parse_fields::<usize>(header, 3, hl)?;
    let (nv, nt, nb) = (counts[0], counts[1], counts[2]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = next("vertex")?;
        let v = parse_fields::<f64>(l, 2, ln)?;
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::Parse { line: ln, msg: "non-finite coordinate".into() });
        }
        vertices.push([v[0], v[1]]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = next("triangle")?;
        let t = parse_fields::<usize>(l, 3, ln)?;
        if t.iter().any(|&i| i >= nv) {
            return Err(Error::Parse { line: ln, msg: "vertex index out of range".into() });
        }
        triangles.push([t[0], t[1], t[2]]);
    }
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, l) = next("boundary edge")?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse { line: ln, msg: format!("expected `v0 v1 label`, got {} fields", parts.len()) });
        }
        let a = parse_one::<usize>(parts[0], ln)?;
        let b = parse_one::<usize>(parts[1], ln)?;
        if a >= nv || b >= nv {
            return Err(Error::Parse { line: ln, msg: "vertex index out of range".into() });
        }
        boundary.push(([a, b], parts[2].to_string()));
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Parse { line: ln, msg: "trailing content".into() });
    }
    Mesh::from_parts(vertices, triangles, &boundary)
}

fn parse_one<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line, msg: format!("cannot parse '{s}'") })
}

fn parse_fields<T: std::str::FromStr>(l: &str, n: usize, line: usize) -> Result<Vec<T>> {
    let parts: Vec<&str> = l.split_whitespace().collect();
    if parts.len() != n {
        return Err(Error::Parse { line, msg: format!("expected {n} fields, got {}", parts.len()) });
    }
    parts.iter().map(|s| parse_one(s, line)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_square() {
        let text = "# unit square\n4 2 4\n0 0\n1 0\n1 1\n0 1\n0 1 2\n0 2 3\n0 1 bottom\n1 2 right\n2 3 top\n3 0 left\n";
        let m = parse_mesh(text).unwrap();
        assert_eq!(m.n_facets(), 5);
        assert_eq!(m.boundary_markers.len(), 4);
    }

    #[test]
    fn reports_line_numbers() {
        let text = "3 1 0\n0 0\n1 x\n0 1\n0 1 2\n";
        match parse_mesh(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn clockwise_input_reordered() {
        let m = parse_mesh("3 1 0\n0 0\n0 1\n1 0\n0 1 2\n").unwrap();
        assert!(m.geometry_map(0, [0.2, 0.2]).2 > 0.0);
    }
}
