use crate::geometry::Vec3;
use crate::nn::{Real, SdfNetwork};
use crate::{Error, Result};

/// Anything that maps points to scalar values in bulk.
pub trait ScalarField {
    fn evaluate(&self, points: &[Vec3]) -> Result<Vec<f64>>;
}

impl<T: Real> ScalarField for SdfNetwork<T> {
    fn evaluate(&self, points: &[Vec3]) -> Result<Vec<f64>> {
        self.forward_batch(points)
    }
}

/// Wraps a closure as a [`ScalarField`].
pub struct FnField<F>(pub F);

impl<F: Fn(&Vec3) -> f64> ScalarField for FnField<F> {
    fn evaluate(&self, points: &[Vec3]) -> Result<Vec<f64>> {
        Ok(points.iter().map(&self.0).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridBounds {
    pub min: Vec3,
    pub max: Vec3,
}

impl Default for GridBounds {
    fn default() -> Self {
        Self::cube(1.1)
    }
}

impl GridBounds {
    pub fn cube(half: f64) -> Self {
        Self {
            min: Vec3::repeat(-half),
            max: Vec3::repeat(half),
        }
    }
}

/// Values on a regular lattice; `x` varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid {
    dims: [usize; 3],
    /// Position of sample `(0, 0, 0)`.
    origin: Vec3,
    spacing: Vec3,
    values: Vec<f64>,
}

impl ScalarGrid {
    pub fn new(dims: [usize; 3], origin: Vec3, spacing: Vec3, values: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::invalid(format!("grid needs at least 2 samples per axis, got {dims:?}")));
        }
        if values.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::invalid(format!("{} values for a {dims:?} grid", values.len())));
        }
        if !spacing.iter().all(|&s| s > 0.0 && s.is_finite()) || !origin.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("grid spacing must be positive and origin finite"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("grid value {v}")));
        }
        Ok(Self { dims, origin, spacing, values })
    }

    /// Sample positions at the centres of `resolution^3` cells tiling `bounds`.
    pub fn cell_centers(resolution: usize, bounds: &GridBounds) -> (Vec3, Vec3) {
        let spacing = (bounds.max - bounds.min) / resolution as f64;
        (bounds.min + spacing * 0.5, spacing)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn spacing(&self) -> Vec3 {
        self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + Vec3::new(i as f64, j as f64, k as f64).component_mul(&self.spacing)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Trilinear interpolation; `None` outside the sampled box.
    pub fn trilinear(&self, p: &Vec3) -> Option<f64> {
        let local = (p - self.origin).component_div(&self.spacing);
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let x = local[a];
            let top = (self.dims[a] - 1) as f64;
            if !(x >= -1e-9 && x <= top + 1e-9) {
                return None;
            }
            let x = x.clamp(0.0, top);
            let b = (x.floor() as usize).min(self.dims[a] - 2);
            base[a] = b;
            frac[a] = x - b as f64;
        }
        let mut acc = 0.0;
        for c in 0..8 {
            let (di, dj, dk) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
            let w = [di, dj, dk]
                .iter()
                .zip(&frac)
                .map(|(&d, &t)| if d == 1 { t } else { 1.0 - t })
                .product::<f64>();
            acc += w * self.value(base[0] + di, base[1] + dj, base[2] + dk);
        }
        Some(acc)
    }
}

/// Evaluates `field` at the cell centres of a `resolution^3` lattice over
/// `bounds`, one z-slab at a time.
pub fn eval_grid(field: &dyn ScalarField, resolution: usize, bounds: &GridBounds) -> Result<ScalarGrid> {
    if resolution < super::MIN_RESOLUTION {
        return Err(Error::invalid(format!(
            "resolution {resolution} is below the minimum {}",
            super::MIN_RESOLUTION
        )));
    }
    if !(0..3).all(|a| bounds.max[a] > bounds.min[a]) {
        return Err(Error::invalid("grid bounds must have positive extent"));
    }
    let (origin, spacing) = ScalarGrid::cell_centers(resolution, bounds);
    let r = resolution;
    let mut values = Vec::with_capacity(r * r * r);
    let mut slab = Vec::with_capacity(r * r);
    for k in 0..r {
        slab.clear();
        for j in 0..r {
            for i in 0..r {
                slab.push(origin + Vec3::new(i as f64, j as f64, k as f64).component_mul(&spacing));
            }
        }
        let v = field.evaluate(&slab)?;
        if let Some(bad) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("field value {} at {:?}", v[bad], slab[bad])));
        }
        values.extend(v);
    }
    ScalarGrid::new([r; 3], origin, spacing, values)
}
