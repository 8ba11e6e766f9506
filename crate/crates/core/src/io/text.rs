//! Line-oriented formats: XYZ clouds, OBJ meshes, pose CSVs, calibration
//! files and loss histories.

use std::fmt::Write;

use crate::geometry::{Pose, Vec3};
use crate::mesh::TriangleMesh;
use crate::train::LossReport;
use crate::{Error, Result};

fn at(origin: &str, line: usize) -> String {
    format!("{origin}:{line}")
}

fn number(tok: &str, origin: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| Error::parse(at(origin, line), format!("bad number {tok:?} for {what}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(at(origin, line), format!("non-finite {what}")))
    }
}

/// One `x y z` line per point. Blank lines are skipped.
pub fn parse_xyz(text: &str, origin: &str) -> Result<Vec<Vec3>> {
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            [x, y, z] => points.push(Vec3::new(
                number(x, origin, line_no, "x")?,
                number(y, origin, line_no, "y")?,
                number(z, origin, line_no, "z")?,
            )),
            _ => {
                return Err(Error::parse(at(origin, line_no), format!("expected 3 fields, got {}", toks.len())));
            }
        }
    }
    Ok(points)
}

pub fn format_xyz(points: &[Vec3]) -> String {
    let mut s = String::with_capacity(points.len() * 32);
    for p in points {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    s
}

fn obj_index(tok: &str, count: usize, origin: &str, line: usize) -> Result<usize> {
    let head = tok.split('/').next().unwrap_or("");
    let raw: i64 = head
        .parse()
        .map_err(|_| Error::parse(at(origin, line), format!("bad face index {tok:?}")))?;
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        count as i64 + raw
    } else {
        -1
    };
    if idx < 0 || idx as usize >= count {
        return Err(Error::parse(at(origin, line), format!("face index {raw} outside 1..={count}")));
    }
    Ok(idx as usize)
}

/// `v` and `f` records; polygons are fan-triangulated. Texture, normal,
/// grouping and material records are skipped.
pub fn parse_obj(text: &str, origin: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.split('#').next().unwrap_or("");
        let mut tok = line.split_whitespace();
        match tok.next() {
            None => {}
            Some("v") => {
                let c: Vec<&str> = tok.collect();
                if c.len() != 3 && c.len() != 4 {
                    return Err(Error::parse(at(origin, line_no), format!("vertex needs 3 coordinates, got {}", c.len())));
                }
                vertices.push(Vec3::new(
                    number(c[0], origin, line_no, "x")?,
                    number(c[1], origin, line_no, "y")?,
                    number(c[2], origin, line_no, "z")?,
                ));
            }
            Some("f") => {
                let idx: Vec<usize> = tok.map(|t| obj_index(t, vertices.len(), origin, line_no)).collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(Error::parse(at(origin, line_no), format!("face needs 3 vertices, got {}", idx.len())));
                }
                for w in idx[1..].windows(2) {
                    faces.push([idx[0], w[0], w[1]]);
                }
            }
            Some("vt" | "vn" | "vp" | "o" | "g" | "s" | "l" | "p" | "usemtl" | "mtllib") => {}
            Some(other) => {
                return Err(Error::parse(at(origin, line_no), format!("unknown record {other:?}")));
            }
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// 1-based `v`/`f` records with shortest round-trip number formatting.
pub fn format_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::with_capacity(mesh.vertices.len() * 40 + mesh.faces.len() * 24);
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

const POSE_HEADER: &str = "frame_index,m00,m01,m02,m03,m10,m11,m12,m13,m20,m21,m22,m23,m30,m31,m32,m33";

fn pose_from(values: &[f64; 16], origin: &str, line: usize) -> Result<Pose> {
    Pose::from_row_major(values).map_err(|e| Error::parse(at(origin, line), e.to_string()))
}

/// Rows of `frame_index` then 16 row-major entries. An optional header
/// line starting with `frame` and `#` comment lines are allowed. Frame
/// indices must strictly increase.
pub fn parse_poses_csv(text: &str, origin: &str) -> Result<Vec<(usize, Pose)>> {
    let mut out: Vec<(usize, Pose)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || (out.is_empty() && trimmed.starts_with("frame")) {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() != 17 {
            return Err(Error::parse(at(origin, line_no), format!("expected 17 fields, got {}", fields.len())));
        }
        let frame: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(at(origin, line_no), format!("bad frame index {:?}", fields[0])))?;
        if let Some((prev, _)) = out.last() {
            if frame <= *prev {
                return Err(Error::parse(at(origin, line_no), format!("frame index {frame} does not follow {prev}")));
            }
        }
        let mut m = [0.0; 16];
        for (k, f) in fields[1..].iter().enumerate() {
            m[k] = number(f, origin, line_no, &format!("entry {k}"))?;
        }
        out.push((frame, pose_from(&m, origin, line_no)?));
    }
    if out.is_empty() {
        return Err(Error::parse(origin, "no pose rows"));
    }
    Ok(out)
}

pub fn format_poses_csv(poses: &[(usize, Pose)]) -> String {
    let mut s = format!("{POSE_HEADER}\n");
    for (frame, p) in poses {
        let _ = write!(s, "{frame}");
        for v in p.to_row_major() {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

/// Sixteen row-major values separated by whitespace or commas.
pub fn parse_calibration(text: &str, origin: &str) -> Result<Pose> {
    let mut values = Vec::with_capacity(16);
    let mut last_line = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            if values.len() == 16 {
                return Err(Error::parse(at(origin, i + 1), "more than 16 values"));
            }
            values.push(number(tok, origin, i + 1, "calibration entry")?);
            last_line = i + 1;
        }
    }
    let m: [f64; 16] = values
        .try_into()
        .map_err(|v: Vec<f64>| Error::parse(origin, format!("expected 16 values, got {}", v.len())))?;
    pose_from(&m, origin, last_line)
}

pub fn format_calibration(p: &Pose) -> String {
    let m = p.to_row_major();
    let mut s = String::new();
    for r in 0..4 {
        let row: Vec<String> = m[r * 4..r * 4 + 4].iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

pub const LOSS_HEADER: &str = "step,loss_self,loss_scc,loss_g_adv,loss_d,total_g,pos_count,neg_count";

/// Loss history, one row per step. Census columns are empty on steps
/// without a census.
pub fn format_loss_csv(history: &[LossReport]) -> String {
    let mut s = format!("{LOSS_HEADER}\n");
    for r in history {
        let opt = |v: Option<usize>| v.map(|c| c.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.step,
            r.loss_self,
            r.loss_scc,
            r.loss_g_adv,
            r.loss_d,
            r.total_g,
            opt(r.pos_count),
            opt(r.neg_count)
        );
    }
    s
}

pub fn parse_loss_csv(text: &str, origin: &str) -> Result<Vec<LossReport>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == LOSS_HEADER => {}
        _ => return Err(Error::parse(at(origin, 1), "missing loss header")),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let line_no = i + 1;
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 8 {
                return Err(Error::parse(at(origin, line_no), format!("expected 8 fields, got {}", f.len())));
            }
            let int = |t: &str| -> Result<usize> {
                t.trim().parse().map_err(|_| Error::parse(at(origin, line_no), format!("bad count {t:?}")))
            };
            let opt = |t: &str| -> Result<Option<usize>> { if t.is_empty() { Ok(None) } else { int(t).map(Some) } };
            let real = |t: &str, what: &str| -> Result<f64> {
                t.trim().parse().map_err(|_| Error::parse(at(origin, line_no), format!("bad {what} {t:?}")))
            };
            Ok(LossReport {
                step: int(f[0])?,
                loss_self: real(f[1], "loss_self")?,
                loss_scc: real(f[2], "loss_scc")?,
                loss_g_adv: real(f[3], "loss_g_adv")?,
                loss_d: real(f[4], "loss_d")?,
                total_g: real(f[5], "total_g")?,
                pos_count: opt(f[6])?,
                neg_count: opt(f[7])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn xyz_round_trip_is_exact() {
        let pts = vec![Vec3::new(0.1, -2.0 / 3.0, 1e-300), Vec3::new(5.0, 6.0, 7.0)];
        assert_eq!(parse_xyz(&format_xyz(&pts), "p.xyz").unwrap(), pts);
    }

    #[test]
    fn xyz_diagnostics() {
        let e = parse_xyz("1 2 3\n4 5\n", "a.xyz").unwrap_err().to_string();
        assert!(e.contains("a.xyz:2"), "{e}");
        let e = parse_xyz("1 2 3\n\n1 2 x\n", "a.xyz").unwrap_err().to_string();
        assert!(e.contains("a.xyz:3"), "{e}");
        assert!(parse_xyz("1 2 nan\n", "a.xyz").is_err());
    }

    #[test]
    fn obj_round_trip_and_features() {
        let m = shapes::icosphere(Vec3::new(0.1, 0.2, 0.3), 0.7, 1);
        assert_eq!(parse_obj(&format_obj(&m), "m.obj").unwrap(), m);
        let text = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\ng part\nf 1//1 2//1 3//1 -1//1\n";
        let q = parse_obj(text, "q.obj").unwrap();
        assert_eq!(q.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn obj_diagnostics() {
        let e = parse_obj("v 0 0 0\nf 1 2 3\n", "x.obj").unwrap_err().to_string();
        assert!(e.contains("x.obj:2"), "{e}");
        assert!(parse_obj("v 0 0\n", "x.obj").is_err());
        assert!(parse_obj("bogus 1\n", "x.obj").is_err());
        assert!(parse_obj("v 0 0 0\nf 0 1 1\n", "x.obj").is_err());
    }

    #[test]
    fn poses_round_trip_and_checks() {
        let poses = vec![(0, Pose::identity()), (3, Pose::translation(Vec3::new(0.5, -1.0, 2.25)))];
        assert_eq!(parse_poses_csv(&format_poses_csv(&poses), "p.csv").unwrap(), poses);
        let bad_row = "0,1,0,0,0,0,1,0,0,0,0,1,0,0,0,0,1\n1,1,0,0,0,0,1,0,0,0,0,1,0,0,0,1,1\n";
        let e = parse_poses_csv(bad_row, "p.csv").unwrap_err().to_string();
        assert!(e.contains("p.csv:2") && e.contains("affine"), "{e}");
        let order = "1,1,0,0,0,0,1,0,0,0,0,1,0,0,0,0,1\n1,1,0,0,0,0,1,0,0,0,0,1,0,0,0,0,1\n";
        assert!(parse_poses_csv(order, "p.csv").is_err());
        assert!(parse_poses_csv("0,1,2\n", "p.csv").is_err());
        assert!(parse_poses_csv("", "p.csv").is_err());
    }

    #[test]
    fn calibration_round_trip() {
        let p = Pose::scaling(0.25).compose(&Pose::translation(Vec3::new(1.0, 2.0, 3.0)));
        assert_eq!(parse_calibration(&format_calibration(&p), "c.txt").unwrap(), p);
        assert!(parse_calibration("1 0 0 0\n0 1 0 0\n0 0 1 0\n", "c.txt").is_err());
        assert!(parse_calibration(&format!("{}1\n", format_calibration(&p)), "c.txt").is_err());
    }

    #[test]
    fn loss_csv_round_trip() {
        let h = vec![
            LossReport { step: 0, loss_self: 0.5, loss_scc: 0.1, loss_g_adv: 0.25, loss_d: 0.3, total_g: 0.6, pos_count: Some(3), neg_count: Some(7) },
            LossReport { step: 1, loss_self: 1.0 / 3.0, loss_scc: 0.0, loss_g_adv: 0.2, loss_d: 0.1, total_g: 0.4, pos_count: None, neg_count: None },
        ];
        assert_eq!(parse_loss_csv(&format_loss_csv(&h), "l.csv").unwrap(), h);
    }
}
