//! PLY reading (ASCII and binary little-endian) and writing.

use std::io::Write;

use crate::geometry::{Frame, PointCloud, Vec3};
use crate::mesh::TriangleMesh;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, Scalar::F32 | Scalar::F64)
    }

    /// Rounds an ASCII value to the declared storage type.
    fn coerce(self, v: f64) -> f64 {
        if self == Scalar::F32 {
            v as f32 as f64
        } else {
            v
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Clone, Debug)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

/// Parsed element rows. Scalar properties hold one value; lists hold theirs.
#[derive(Debug, Default)]
struct PlyData {
    elements: Vec<(Element, Vec<Vec<Vec<f64>>>)>,
}

impl PlyData {
    fn element(&self, name: &str) -> Option<&(Element, Vec<Vec<Vec<f64>>>)> {
        self.elements.iter().find(|(e, _)| e.name == name)
    }
}

struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    body_start: usize,
    lines: usize,
}

fn parse_header(bytes: &[u8], origin: &str) -> Result<Header> {
    let err = |line: usize, msg: String| Error::parse(format!("{origin}:{line}"), msg);
    let mut pos = 0;
    let mut line_no = 0;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| err(line_no + 1, "header ends before end_header".into()))?;
        line_no += 1;
        let raw = &bytes[pos..pos + end];
        pos += end + 1;
        let text = std::str::from_utf8(raw).map_err(|_| err(line_no, "header is not UTF-8".into()))?;
        let text = text.trim_end_matches('\r');
        let mut tok = text.split_whitespace();
        let key = tok.next().unwrap_or("");
        if line_no == 1 {
            if text != "ply" {
                return Err(err(1, format!("expected magic \"ply\", got {text:?}")));
            }
            continue;
        }
        match key {
            "format" => {
                encoding = Some(match (tok.next(), tok.next()) {
                    (Some("ascii"), Some("1.0")) => PlyEncoding::Ascii,
                    (Some("binary_little_endian"), Some("1.0")) => PlyEncoding::BinaryLittleEndian,
                    (Some(f), _) => return Err(err(line_no, format!("unsupported format {f:?}"))),
                    _ => return Err(err(line_no, "incomplete format line".into())),
                })
            }
            "comment" | "obj_info" | "" => {}
            "element" => {
                let name = tok.next().ok_or_else(|| err(line_no, "element without a name".into()))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| err(line_no, format!("element {name} has no valid count")))?;
                elements.push(Element { name: name.into(), count, properties: Vec::new() });
            }
            "property" => {
                let elem = elements.last_mut().ok_or_else(|| err(line_no, "property before any element".into()))?;
                let parts: Vec<&str> = tok.collect();
                let prop = match parts.as_slice() {
                    ["list", c, i, name] => Property::List {
                        name: (*name).into(),
                        count: Scalar::parse(c).filter(|s| s.is_integer()).ok_or_else(|| err(line_no, format!("bad list count type {c:?}")))?,
                        item: Scalar::parse(i).ok_or_else(|| err(line_no, format!("bad list item type {i:?}")))?,
                    },
                    [ty, name] => Property::Scalar {
                        name: (*name).into(),
                        ty: Scalar::parse(ty).ok_or_else(|| err(line_no, format!("unknown property type {ty:?}")))?,
                    },
                    _ => return Err(err(line_no, format!("malformed property line {text:?}"))),
                };
                elem.properties.push(prop);
            }
            "end_header" => break,
            other => return Err(err(line_no, format!("unknown header keyword {other:?}"))),
        }
    }
    Ok(Header {
        encoding: encoding.ok_or_else(|| err(line_no, "header has no format line".into()))?,
        elements,
        body_start: pos,
        lines: line_no,
    })
}

fn parse_ascii_body(bytes: &[u8], header: Header, origin: &str) -> Result<PlyData> {
    let text = std::str::from_utf8(&bytes[header.body_start..])
        .map_err(|_| Error::parse(format!("{origin}:{}", header.lines + 1), "ASCII body is not UTF-8"))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (header.lines + 1 + i, l)).filter(|(_, l)| !l.trim().is_empty());
    let mut data = PlyData::default();
    for elem in header.elements {
        let mut rows = Vec::with_capacity(elem.count.min(1 << 24));
        for r in 0..elem.count {
            let (line_no, line) = lines
                .next()
                .ok_or_else(|| Error::parse(format!("{origin}:eof"), format!("element {} ends after {r} of {} rows", elem.name, elem.count)))?;
            let err = |msg: String| Error::parse(format!("{origin}:{line_no}"), msg);
            let mut tok = line.split_whitespace();
            let mut next = |what: &str| -> Result<f64> {
                let t = tok.next().ok_or_else(|| err(format!("missing value for {what}")))?;
                t.parse::<f64>().map_err(|_| err(format!("bad number {t:?} for {what}")))
            };
            let mut row = Vec::with_capacity(elem.properties.len());
            for prop in &elem.properties {
                match prop {
                    Property::Scalar { name, ty } => row.push(vec![ty.coerce(next(name)?)]),
                    Property::List { name, item, .. } => {
                        let n = next(name)?;
                        if n < 0.0 || n.fract() != 0.0 {
                            return Err(err(format!("bad list length {n} for {name}")));
                        }
                        row.push((0..n as usize).map(|_| next(name).map(|v| item.coerce(v))).collect::<Result<_>>()?);
                    }
                }
            }
            if let Some(extra) = tok.next() {
                return Err(err(format!("unexpected trailing value {extra:?}")));
            }
            rows.push(row);
        }
        data.elements.push((elem, rows));
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(Error::parse(format!("{origin}:{line_no}"), "data after the last element"));
    }
    Ok(data)
}

fn parse_binary_body(bytes: &[u8], header: Header, origin: &str) -> Result<PlyData> {
    let mut pos = header.body_start;
    let mut take = |ty: Scalar, what: &str| -> Result<f64> {
        let n = ty.size();
        if pos + n > bytes.len() {
            return Err(Error::parse(format!("{origin}:offset {pos}"), format!("file ends inside {what}")));
        }
        let v = ty.read_le(&bytes[pos..pos + n]);
        pos += n;
        Ok(v)
    };
    let mut data = PlyData::default();
    for elem in header.elements {
        let mut rows = Vec::with_capacity(elem.count.min(1 << 24));
        for _ in 0..elem.count {
            let mut row = Vec::with_capacity(elem.properties.len());
            for prop in &elem.properties {
                match prop {
                    Property::Scalar { name, ty } => row.push(vec![take(*ty, name)?]),
                    Property::List { name, count, item } => {
                        let n = take(*count, name)?;
                        if n < 0.0 {
                            return Err(Error::parse(format!("{origin}:element {}", elem.name), format!("negative list length for {name}")));
                        }
                        row.push((0..n as usize).map(|_| take(*item, name)).collect::<Result<_>>()?);
                    }
                }
            }
            rows.push(row);
        }
        data.elements.push((elem, rows));
    }
    if pos != bytes.len() {
        return Err(Error::parse(format!("{origin}:offset {pos}"), format!("{} trailing bytes", bytes.len() - pos)));
    }
    Ok(data)
}

fn parse(bytes: &[u8], origin: &str) -> Result<PlyData> {
    let header = parse_header(bytes, origin)?;
    match header.encoding {
        PlyEncoding::Ascii => parse_ascii_body(bytes, header, origin),
        PlyEncoding::BinaryLittleEndian => parse_binary_body(bytes, header, origin),
    }
}

fn vertex_positions(data: &PlyData, origin: &str) -> Result<Vec<Vec3>> {
    let (elem, rows) = data
        .element("vertex")
        .ok_or_else(|| Error::parse(origin, "no vertex element"))?;
    let col = |axis: &str| {
        elem.properties
            .iter()
            .position(|p| p.name() == axis && matches!(p, Property::Scalar { .. }))
            .ok_or_else(|| Error::parse(origin, format!("vertex element has no scalar {axis} property")))
    };
    let (x, y, z) = (col("x")?, col("y")?, col("z")?);
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let p = Vec3::new(r[x][0], r[y][0], r[z][0]);
            if p.iter().all(|c| c.is_finite()) {
                Ok(p)
            } else {
                Err(Error::parse(format!("{origin}:vertex {i}"), "non-finite coordinate"))
            }
        })
        .collect()
}

pub fn parse_ply_cloud(bytes: &[u8], origin: &str) -> Result<Vec<Vec3>> {
    vertex_positions(&parse(bytes, origin)?, origin)
}

/// Vertices and faces; polygons are fan-triangulated.
pub fn parse_ply_mesh(bytes: &[u8], origin: &str) -> Result<TriangleMesh> {
    let data = parse(bytes, origin)?;
    let vertices = vertex_positions(&data, origin)?;
    let mut faces = Vec::new();
    if let Some((elem, rows)) = data.element("face") {
        let col = elem
            .properties
            .iter()
            .position(|p| matches!(p, Property::List { name, .. } if name == "vertex_indices" || name == "vertex_index"))
            .ok_or_else(|| Error::parse(origin, "face element has no vertex_indices list"))?;
        for (i, r) in rows.iter().enumerate() {
            let idx = &r[col];
            if idx.len() < 3 {
                return Err(Error::parse(format!("{origin}:face {i}"), format!("face has {} vertices", idx.len())));
            }
            let to_index = |v: f64| {
                if v >= 0.0 && v.fract() == 0.0 && (v as usize) < vertices.len() {
                    Ok(v as usize)
                } else {
                    Err(Error::parse(format!("{origin}:face {i}"), format!("vertex index {v} out of range")))
                }
            };
            let first = to_index(idx[0])?;
            for w in idx[1..].windows(2) {
                faces.push([first, to_index(w[0])?, to_index(w[1])?]);
            }
        }
    }
    TriangleMesh::new(vertices, faces)
}

fn header(out: &mut Vec<u8>, encoding: PlyEncoding, vertices: usize, coord: &str, faces: Option<usize>) {
    let format = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
    };
    let _ = write!(out, "ply\nformat {format} 1.0\nelement vertex {vertices}\n");
    for axis in ["x", "y", "z"] {
        let _ = writeln!(out, "property {coord} {axis}");
    }
    if let Some(f) = faces {
        let _ = write!(out, "element face {f}\nproperty list uchar int vertex_indices\n");
    }
    out.extend_from_slice(b"end_header\n");
}

/// Point cloud with 32-bit float coordinates.
pub fn ply_cloud_bytes(cloud: &PointCloud, encoding: PlyEncoding) -> Vec<u8> {
    let mut out = Vec::new();
    header(&mut out, encoding, cloud.len(), "float", None);
    for p in cloud.points() {
        let c = p.map(|v| v as f32);
        match encoding {
            PlyEncoding::Ascii => {
                let _ = writeln!(out, "{} {} {}", c.x, c.y, c.z);
            }
            PlyEncoding::BinaryLittleEndian => c.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        }
    }
    out
}

/// Mesh with 64-bit float coordinates, so a written mesh reads back exactly.
pub fn ply_mesh_bytes(mesh: &TriangleMesh, encoding: PlyEncoding) -> Result<Vec<u8>> {
    if mesh.vertices.len() > i32::MAX as usize {
        return Err(Error::invalid("mesh has too many vertices for PLY int indices"));
    }
    let mut out = Vec::new();
    header(&mut out, encoding, mesh.vertices.len(), "double", Some(mesh.faces.len()));
    match encoding {
        PlyEncoding::Ascii => {
            for v in &mesh.vertices {
                let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
            }
            for f in &mesh.faces {
                let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            for v in &mesh.vertices {
                v.iter().for_each(|c| out.extend_from_slice(&c.to_le_bytes()));
            }
            for f in &mesh.faces {
                out.push(3);
                f.iter().for_each(|&i| out.extend_from_slice(&(i as i32).to_le_bytes()));
            }
        }
    }
    Ok(out)
}

pub(super) fn cloud_from_points(points: Vec<Vec3>, origin: &str) -> Result<PointCloud> {
    if points.is_empty() {
        return Err(Error::parse(origin, "file holds no points"));
    }
    PointCloud::new(points, Frame::World)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn mesh_round_trip_both_encodings() {
        let m = shapes::torus(0.5, 0.2, 12, 6);
        for enc in [PlyEncoding::Ascii, PlyEncoding::BinaryLittleEndian] {
            let bytes = ply_mesh_bytes(&m, enc).unwrap();
            assert_eq!(parse_ply_mesh(&bytes, "t.ply").unwrap(), m);
        }
    }

    #[test]
    fn cloud_round_trip_is_float32() {
        let c = PointCloud::world(vec![Vec3::new(0.1, 0.2, 0.3), Vec3::new(-1.0, 2.5, 1e3)]).unwrap();
        for enc in [PlyEncoding::Ascii, PlyEncoding::BinaryLittleEndian] {
            let pts = parse_ply_cloud(&ply_cloud_bytes(&c, enc), "c.ply").unwrap();
            for (a, b) in pts.iter().zip(c.points()) {
                assert_eq!(*a, b.map(|v| v as f32 as f64));
            }
        }
    }

    #[test]
    fn quads_are_fanned_and_extra_properties_skipped() {
        let text = "ply\nformat ascii 1.0\ncomment hi\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0 1\n1 0 0 2\n1 1 0 3\n0 1 0 4\n4 0 1 2 3\n";
        let m = parse_ply_mesh(text.as_bytes(), "q.ply").unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn diagnostics_carry_position() {
        let bad = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 oops 0\n";
        let e = parse_ply_cloud(bad.as_bytes(), "b.ply").unwrap_err().to_string();
        assert!(e.contains("b.ply:9"), "{e}");
        let short = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n";
        assert!(parse_ply_cloud(short.as_bytes(), "s.ply").is_err());
        let be = "ply\nformat binary_big_endian 1.0\nend_header\n";
        assert!(parse_ply_cloud(be.as_bytes(), "be.ply").unwrap_err().to_string().contains("be.ply:2"));
        let mut bin = ply_cloud_bytes(&PointCloud::world(vec![Vec3::zeros()]).unwrap(), PlyEncoding::BinaryLittleEndian);
        bin.pop();
        assert!(parse_ply_cloud(&bin, "t.ply").unwrap_err().to_string().contains("offset"));
        let mut bin = ply_cloud_bytes(&PointCloud::world(vec![Vec3::zeros()]).unwrap(), PlyEncoding::BinaryLittleEndian);
        bin.push(0);
        assert!(parse_ply_cloud(&bin, "t.ply").is_err());
    }

    #[test]
    fn face_index_out_of_range() {
        let text = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n3 0 0 5\n";
        assert!(parse_ply_mesh(text.as_bytes(), "f.ply").unwrap_err().to_string().contains("face 0"));
    }
}
