use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{Point, Vector};

use super::{Facet, TriangleSoup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StlFormat {
    Ascii,
    Binary,
}

const HEADER_LEN: usize = 80;
const FACET_LEN: usize = 50;

/// Parses ASCII or binary STL. Stored normals are kept verbatim.
pub fn load_stl(bytes: &[u8]) -> Result<TriangleSoup> {
    if bytes.len() >= HEADER_LEN + 4 {
        let count = u32::from_le_bytes(bytes[80..84].try_into().expect("4 bytes")) as usize;
        let exact = HEADER_LEN + 4 + count.saturating_mul(FACET_LEN);
        if bytes.len() == exact || !looks_ascii(bytes) {
            return parse_binary(bytes);
        }
    }
    if looks_ascii(bytes) {
        parse_ascii(bytes)
    } else {
        Err(Error::StlParse {
            offset: bytes.len(),
            message: "file too short for a binary header".into(),
        })
    }
}

pub fn load_stl_file(path: impl AsRef<Path>) -> Result<TriangleSoup> {
    load_stl(&std::fs::read(path)?)
}

fn looks_ascii(bytes: &[u8]) -> bool {
    let start = bytes.iter().position(|b| !b.is_ascii_whitespace()).unwrap_or(bytes.len());
    bytes[start..].starts_with(b"solid")
}

fn parse_binary(bytes: &[u8]) -> Result<TriangleSoup> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(Error::StlParse {
            offset: bytes.len(),
            message: "truncated binary header".into(),
        });
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().expect("4 bytes")) as usize;
    let available = (bytes.len() - HEADER_LEN - 4) / FACET_LEN;
    if available < count {
        return Err(Error::StlParse {
            offset: HEADER_LEN + 4 + available * FACET_LEN,
            message: format!("declared {count} facets but payload holds {available}"),
        });
    }
    let read = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as f64;
    let facets = (0..count)
        .map(|i| {
            let o = HEADER_LEN + 4 + i * FACET_LEN;
            let v = |k: usize| {
                let b = o + 12 * k;
                [read(b), read(b + 4), read(b + 8)]
            };
            let n = v(0);
            Facet {
                normal: Vector::new(n[0], n[1], n[2]),
                corners: [1, 2, 3].map(|k| {
                    let c = v(k);
                    Point::new(c[0], c[1], c[2])
                }),
            }
        })
        .collect();
    Ok(TriangleSoup { facets })
}

struct Tokens<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let rest = &self.text[self.pos..];
        let skip = rest.find(|c: char| !c.is_whitespace())?;
        let start = self.pos + skip;
        let len = self.text[start..]
            .find(char::is_whitespace)
            .unwrap_or(self.text.len() - start);
        self.pos = start + len;
        Some((start, &self.text[start..start + len]))
    }

    fn rest_of_line(&mut self) {
        match self.text[self.pos..].find('\n') {
            Some(i) => self.pos += i + 1,
            None => self.pos = self.text.len(),
        }
    }

    fn expect(&mut self, word: &str) -> Result<usize> {
        match self.next() {
            Some((o, t)) if t.eq_ignore_ascii_case(word) => Ok(o),
            Some((o, t)) => Err(Error::StlParse {
                offset: o,
                message: format!("expected '{word}', found '{t}'"),
            }),
            None => Err(Error::StlParse {
                offset: self.text.len(),
                message: format!("expected '{word}', found end of file"),
            }),
        }
    }

    fn float(&mut self) -> Result<f64> {
        match self.next() {
            Some((o, t)) => t.parse::<f64>().map_err(|_| Error::StlParse {
                offset: o,
                message: format!("invalid number '{t}'"),
            }),
            None => Err(Error::StlParse {
                offset: self.text.len(),
                message: "expected a number, found end of file".into(),
            }),
        }
    }

    fn vec3(&mut self) -> Result<[f64; 3]> {
        Ok([self.float()?, self.float()?, self.float()?])
    }
}

fn parse_ascii(bytes: &[u8]) -> Result<TriangleSoup> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::StlParse {
        offset: e.valid_up_to(),
        message: "ASCII STL is not valid UTF-8".into(),
    })?;
    let mut tok = Tokens { text, pos: 0 };
    tok.expect("solid")?;
    tok.rest_of_line();
    let mut facets = Vec::new();
    loop {
        match tok.next() {
            Some((_, t)) if t.eq_ignore_ascii_case("facet") => {
                tok.expect("normal")?;
                let n = tok.vec3()?;
                tok.expect("outer")?;
                tok.expect("loop")?;
                let mut corners = [Point::origin(); 3];
                for c in &mut corners {
                    tok.expect("vertex")?;
                    let v = tok.vec3()?;
                    *c = Point::new(v[0], v[1], v[2]);
                }
                tok.expect("endloop")?;
                tok.expect("endfacet")?;
                facets.push(Facet {
                    corners,
                    normal: Vector::new(n[0], n[1], n[2]),
                });
            }
            Some((_, t)) if t.eq_ignore_ascii_case("endsolid") => break,
            Some((o, t)) => {
                return Err(Error::StlParse {
                    offset: o,
                    message: format!("expected 'facet' or 'endsolid', found '{t}'"),
                })
            }
            None => {
                return Err(Error::StlParse {
                    offset: text.len(),
                    message: "missing 'endsolid'".into(),
                })
            }
        }
    }
    Ok(TriangleSoup { facets })
}

/// Serializes a soup. Binary output stores little-endian `f32`.
pub fn save_stl(soup: &TriangleSoup, format: StlFormat) -> Vec<u8> {
    match format {
        StlFormat::Binary => {
            let mut out = Vec::with_capacity(HEADER_LEN + 4 + FACET_LEN * soup.len());
            let mut header = [b' '; HEADER_LEN];
            let label = b"dirtyfcm binary STL";
            header[..label.len()].copy_from_slice(label);
            out.extend_from_slice(&header);
            out.extend_from_slice(&(soup.len() as u32).to_le_bytes());
            for f in &soup.facets {
                for c in f.normal.iter() {
                    out.extend_from_slice(&(*c as f32).to_le_bytes());
                }
                for p in &f.corners {
                    for c in p.iter() {
                        out.extend_from_slice(&(*c as f32).to_le_bytes());
                    }
                }
                out.extend_from_slice(&0u16.to_le_bytes());
            }
            out
        }
        StlFormat::Ascii => {
            use std::fmt::Write;
            let mut s = String::from("solid dirtyfcm\n");
            for f in &soup.facets {
                let n = f.normal;
                let _ = writeln!(s, "  facet normal {} {} {}", n.x, n.y, n.z);
                s.push_str("    outer loop\n");
                for p in &f.corners {
                    let _ = writeln!(s, "      vertex {} {} {}", p.x, p.y, p.z);
                }
                s.push_str("    endloop\n  endfacet\n");
            }
            s.push_str("endsolid dirtyfcm\n");
            s.into_bytes()
        }
    }
}

pub fn save_stl_file(soup: &TriangleSoup, format: StlFormat, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, save_stl(soup, format))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::studies::fixtures;
    use proptest::prelude::*;

    #[test]
    fn cube_binary_layout() {
        let cube = fixtures::cube(Point::origin(), 1.0);
        let bytes = save_stl(&cube, StlFormat::Binary);
        assert_eq!(bytes.len(), 684);
        let back = load_stl(&bytes).unwrap();
        assert_eq!(back.len(), 12);
        assert_eq!(back.points().count(), 36);
        assert_eq!(back, cube);
    }

    #[test]
    fn empty_soups() {
        let bin = save_stl(&TriangleSoup::default(), StlFormat::Binary);
        assert_eq!(bin.len(), 84);
        assert!(load_stl(&bin).unwrap().is_empty());
        let ascii = b"solid empty\nendsolid empty\n";
        assert!(load_stl(ascii).unwrap().is_empty());
    }

    #[test]
    fn truncated_binary_reports_offset() {
        let cube = fixtures::cube(Point::origin(), 1.0);
        let mut bytes = save_stl(&cube, StlFormat::Binary);
        bytes.truncate(84 + 50 * 5 + 20);
        match load_stl(&bytes) {
            Err(Error::StlParse { offset, .. }) => assert_eq!(offset, 84 + 50 * 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ascii_round_trip_and_errors() {
        let cube = fixtures::cube(Point::new(0.25, -1.5, 3.0), 2.0);
        let text = save_stl(&cube, StlFormat::Ascii);
        assert_eq!(load_stl(&text).unwrap(), cube);

        let bad = b"solid x\n facet normal 0 0 1\n outer loop\n vertex 0 0 zero\n";
        match load_stl(bad) {
            Err(Error::StlParse { offset, message }) => {
                assert_eq!(&bad[offset..offset + 4], b"zero");
                assert!(message.contains("invalid number"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn stored_normals_survive_verbatim() {
        let mut cube = fixtures::cube(Point::origin(), 1.0);
        cube.facets[3].normal = Vector::new(0.0, 0.0, -1.0);
        let back = load_stl(&save_stl(&cube, StlFormat::Binary)).unwrap();
        assert_eq!(back.facets[3].normal, Vector::new(0.0, 0.0, -1.0));
    }

    proptest! {
        #[test]
        fn binary_round_trip_is_bit_exact(coords in proptest::collection::vec(-1e6f32..1e6f32, 0..90)) {
            let n = coords.len() / 9;
            let soup = TriangleSoup::from_triangles((0..n).map(|i| {
                let c = |k: usize| coords[9 * i + k] as f64;
                [Point::new(c(0), c(1), c(2)), Point::new(c(3), c(4), c(5)), Point::new(c(6), c(7), c(8))]
            }));
            let back = load_stl(&save_stl(&soup, StlFormat::Binary)).unwrap();
            prop_assert_eq!(back.len(), soup.len());
            for (a, b) in back.facets.iter().zip(&soup.facets) {
                for k in 0..3 {
                    for j in 0..3 {
                        prop_assert_eq!(a.corners[k][j].to_bits(), b.corners[k][j].to_bits());
                    }
                }
            }
        }
    }
}
