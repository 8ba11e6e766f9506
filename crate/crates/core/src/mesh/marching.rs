use std::collections::HashMap;

use super::grid::{eval_grid, GridBounds, ScalarField, ScalarGrid};
use super::tables::TRIANGLE_TABLE;
use super::TriangleMesh;
use crate::geometry::{denormalize_mesh, NormalizationTransform, PointCloud, Vec3};
use crate::{Error, Result};

pub const MIN_RESOLUTION: usize = 8;

/// Corner offsets in table order.
const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Each cube edge as (corner at its low end, axis).
const EDGES: [(usize, usize); 12] = [
    (0, 0),
    (1, 1),
    (3, 0),
    (0, 1),
    (4, 0),
    (5, 1),
    (7, 0),
    (4, 1),
    (0, 2),
    (1, 2),
    (2, 2),
    (3, 2),
];

/// Keeps crossings off the lattice points so neighbouring vertices never
/// coincide.
const T_CLAMP: f64 = 1e-6;

/// Extracts the `threshold` level set of `grid`. Samples below the
/// threshold are inside; faces wind counter-clockwise seen from outside.
pub fn marching_cubes(grid: &ScalarGrid, threshold: f64) -> TriangleMesh {
    let [nx, ny, nz] = grid.dims();
    let spacing = grid.spacing();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut welded: HashMap<usize, usize> = HashMap::new();

    let mut vertex_on = |i: usize, j: usize, k: usize, axis: usize, vertices: &mut Vec<Vec3>| -> usize {
        let key = grid.index(i, j, k) * 3 + axis;
        *welded.entry(key).or_insert_with(|| {
            let (mut i1, mut j1, mut k1) = (i, j, k);
            match axis {
                0 => i1 += 1,
                1 => j1 += 1,
                _ => k1 += 1,
            }
            let v0 = grid.value(i, j, k);
            let v1 = grid.value(i1, j1, k1);
            let t = ((threshold - v0) / (v1 - v0)).clamp(T_CLAMP, 1.0 - T_CLAMP);
            let mut p = grid.point(i, j, k);
            p[axis] += t * spacing[axis];
            vertices.push(p);
            vertices.len() - 1
        })
    };

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut case = 0usize;
                for (c, off) in CORNERS.iter().enumerate() {
                    if grid.value(i + off[0], j + off[1], k + off[2]) < threshold {
                        case |= 1 << c;
                    }
                }
                let row = &TRIANGLE_TABLE[case];
                let mut t = 0;
                while t < 15 && row[t] >= 0 {
                    let mut tri = [0usize; 3];
                    for (slot, &e) in tri.iter_mut().zip(&row[t..t + 3]) {
                        let (corner, axis) = EDGES[e as usize];
                        let off = CORNERS[corner];
                        *slot = vertex_on(i + off[0], j + off[1], k + off[2], axis, &mut vertices);
                    }
                    if tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2] {
                        // The table winds faces inward for this inside convention.
                        faces.push([tri[0], tri[2], tri[1]]);
                    }
                    t += 3;
                }
            }
        }
    }
    if faces.is_empty() {
        log::warn!("marching cubes found no crossing of level {threshold}");
    }
    TriangleMesh { vertices, faces }
}

/// Samples `field` on the default box, extracts its zero set and maps the
/// mesh back through `transform`.
pub fn extract(
    field: &dyn ScalarField,
    transform: &NormalizationTransform,
    resolution: usize,
    bounds: &GridBounds,
) -> Result<TriangleMesh> {
    let grid = eval_grid(field, resolution, bounds)?;
    Ok(denormalize_mesh(&marching_cubes(&grid, 0.0), transform))
}

/// Occupancy-grid baseline: a cell is occupied when any point falls in it;
/// the mesh is the 0.5 level of the occupancy indicator, in the cloud's
/// frame.
pub fn iso_baseline(cloud: &PointCloud, cell: f64) -> Result<TriangleMesh> {
    if !(cell > 0.0 && cell.is_finite()) {
        return Err(Error::invalid(format!("cell size must be positive, got {cell}")));
    }
    let (lo, hi) = cloud.bounds().ok_or(Error::EmptyCloud)?;
    let cells = (hi - lo) / cell;
    // One empty layer on every side closes the surface.
    let dims = [0, 1, 2].map(|a| cells[a].floor() as usize + 3);
    let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    match total {
        Some(t) if t <= 1 << 28 => {}
        _ => return Err(Error::invalid(format!("occupancy grid {dims:?} too large for cell {cell}"))),
    }
    let mut occ = vec![0.0; dims[0] * dims[1] * dims[2]];
    for p in cloud.points() {
        let c = [0, 1, 2].map(|a| (((p[a] - lo[a]) / cell).floor() as usize).min(dims[a] - 3) + 1);
        occ[(c[2] * dims[1] + c[1]) * dims[0] + c[0]] = -1.0;
    }
    let origin = lo - Vec3::repeat(0.5 * cell);
    let grid = ScalarGrid::new(dims, origin, Vec3::repeat(cell), occ)?;
    Ok(marching_cubes(&grid, -0.5))
}
