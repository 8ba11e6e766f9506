//! On-disk formats. Parsers reject malformed input with a `file:line` or
//! `file:offset` position; nothing is read partially.

mod pgm;
mod ply;
mod text;

pub use pgm::{parse_pgm, pgm_bytes};
pub use ply::{parse_ply_cloud, parse_ply_mesh, ply_cloud_bytes, ply_mesh_bytes, PlyEncoding};
pub use text::{
    format_calibration, format_loss_csv, format_obj, format_poses_csv, format_xyz, parse_calibration, parse_loss_csv,
    parse_obj, parse_poses_csv, parse_xyz, LOSS_HEADER,
};

use std::fs;
use std::path::{Path, PathBuf};

use crate::geometry::{Mask, PointCloud, Pose};
use crate::mesh::TriangleMesh;
use crate::{Error, Result};

/// Vertices closer than this are merged when a mesh is read.
pub const WELD_TOLERANCE: f64 = 1e-9;

fn origin(path: &Path) -> String {
    path.display().to_string()
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

fn read_text(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::parse(origin(path), e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::parse(format!("{}:offset {}", origin(path), e.utf8_error().valid_up_to()), "not UTF-8 text"))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::parse(origin(path), e.to_string()))
}

/// `.xyz` or `.ply` point cloud in world coordinates.
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    let o = origin(path);
    let points = match extension(path).as_str() {
        "xyz" | "txt" => parse_xyz(&read_text(path)?, &o)?,
        "ply" => parse_ply_cloud(&read_bytes(path)?, &o)?,
        other => return Err(Error::parse(o, format!("unknown point cloud extension {other:?}"))),
    };
    ply::cloud_from_points(points, &o)
}

pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    let bytes = match extension(path).as_str() {
        "xyz" | "txt" => format_xyz(cloud.points()).into_bytes(),
        "ply" => ply_cloud_bytes(cloud, PlyEncoding::BinaryLittleEndian),
        other => return Err(Error::invalid(format!("unknown point cloud extension {other:?}"))),
    };
    Ok(fs::write(path, bytes)?)
}

/// `.obj` or `.ply` mesh, welded at [`WELD_TOLERANCE`].
pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    let o = origin(path);
    let mesh = match extension(path).as_str() {
        "obj" => parse_obj(&read_text(path)?, &o)?,
        "ply" => parse_ply_mesh(&read_bytes(path)?, &o)?,
        other => return Err(Error::parse(o, format!("unknown mesh extension {other:?}"))),
    };
    let (welded, dropped) = mesh.welded(WELD_TOLERANCE);
    if dropped > 0 {
        log::warn!("{o}: dropped {dropped} faces that collapsed during welding");
    }
    Ok(welded)
}

pub fn mesh_bytes(path: &Path, mesh: &TriangleMesh, encoding: PlyEncoding) -> Result<Vec<u8>> {
    match extension(path).as_str() {
        "obj" => Ok(format_obj(mesh).into_bytes()),
        "ply" => ply_mesh_bytes(mesh, encoding),
        other => Err(Error::invalid(format!("unknown mesh extension {other:?}; use .obj or .ply"))),
    }
}

/// OBJ or PLY by extension; PLY is binary little-endian.
pub fn write_mesh(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let bytes = mesh_bytes(path, mesh, PlyEncoding::BinaryLittleEndian)?;
    Ok(fs::write(path, bytes)?)
}

pub fn read_poses(path: &Path) -> Result<Vec<(usize, Pose)>> {
    parse_poses_csv(&read_text(path)?, &origin(path))
}

pub fn write_poses(path: &Path, poses: &[(usize, Pose)]) -> Result<()> {
    Ok(fs::write(path, format_poses_csv(poses))?)
}

pub fn read_calibration(path: &Path) -> Result<Pose> {
    parse_calibration(&read_text(path)?, &origin(path))
}

pub fn write_calibration(path: &Path, pose: &Pose) -> Result<()> {
    Ok(fs::write(path, format_calibration(pose))?)
}

pub fn mask_file_name(frame: usize) -> String {
    format!("frame_{frame:06}.pgm")
}

fn mask_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix("frame_")?.strip_suffix(".pgm")?;
    if digits.len() == 6 && digits.bytes().all(|b| b.is_ascii_digit()) {
        digits.parse().ok()
    } else {
        None
    }
}

/// Every `frame_NNNNNN.pgm` in `dir`, ascending by frame index. Other files
/// are ignored.
pub fn read_mask_dir(dir: &Path) -> Result<Vec<(usize, Mask)>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::parse(origin(dir), e.to_string()))?;
    let mut files: Vec<(usize, PathBuf)> = Vec::new();
    for entry in entries {
        let entry = entry?;
        if let Some(i) = entry.file_name().to_str().and_then(mask_index) {
            files.push((i, entry.path()));
        }
    }
    if files.is_empty() {
        return Err(Error::parse(origin(dir), "no frame_NNNNNN.pgm masks"));
    }
    files.sort();
    files
        .into_iter()
        .map(|(i, p)| Ok((i, parse_pgm(&read_bytes(&p)?, &origin(&p))?)))
        .collect()
}

pub fn write_mask_dir(dir: &Path, masks: &[Mask]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, m) in masks.iter().enumerate() {
        fs::write(dir.join(mask_file_name(i)), pgm_bytes(m))?;
    }
    Ok(())
}

/// Masks, calibration and per-frame poses of a tracked sweep, paired by
/// frame index.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepInput {
    pub masks: Vec<Mask>,
    pub calibration: Pose,
    pub poses: Vec<Pose>,
}

pub fn read_sweep(masks_dir: &Path, poses_csv: &Path, calibration: &Path) -> Result<SweepInput> {
    let masks = read_mask_dir(masks_dir)?;
    let poses = read_poses(poses_csv)?;
    let calibration = read_calibration(calibration)?;
    let mask_ids: Vec<usize> = masks.iter().map(|(i, _)| *i).collect();
    let pose_ids: Vec<usize> = poses.iter().map(|(i, _)| *i).collect();
    if mask_ids != pose_ids {
        let missing: Vec<usize> = mask_ids.iter().filter(|i| !pose_ids.contains(i)).copied().collect();
        return Err(Error::parse(
            origin(poses_csv),
            format!(
                "{} masks but {} pose rows; frames without a pose: {missing:?}",
                mask_ids.len(),
                pose_ids.len()
            ),
        ));
    }
    Ok(SweepInput {
        masks: masks.into_iter().map(|(_, m)| m).collect(),
        calibration,
        poses: poses.into_iter().map(|(_, p)| p).collect(),
    })
}

pub fn write_sweep(dir: &Path, sweep: &SweepInput) -> Result<()> {
    write_mask_dir(&dir.join("masks"), &sweep.masks)?;
    let indexed: Vec<(usize, Pose)> = sweep.poses.iter().copied().enumerate().collect();
    write_poses(&dir.join("poses.csv"), &indexed)?;
    write_calibration(&dir.join("calibration.txt"), &sweep.calibration)
}
