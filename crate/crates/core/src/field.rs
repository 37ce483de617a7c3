//! Periodic scalar fields on the unit cube.
//!
//! Storage is a dense `Vec<f64>` with x varying fastest, so
//! `index(i, j, k) = i + nx * (j + ny * k)`. Grid point `i` along an axis
//! sits at `i * h` with `h = 1 / n`.

use crate::error::{Error, Result};
use crate::integrators::State;

/// Smallest extent per direction; the WENO5 stencil spans six points.
pub const MIN_POINTS: usize = 8;

/// Wraps `i` into `[0, n)`.
#[inline]
pub fn periodic_index(i: isize, n: usize) -> usize {
    debug_assert!(n >= 1);
    i.rem_euclid(n as isize) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    nx: usize,
    ny: usize,
    nz: usize,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx < MIN_POINTS || ny < MIN_POINTS || nz < MIN_POINTS {
            return Err(Error::param(format!(
                "grid {nx}x{ny}x{nz}: every direction needs at least {MIN_POINTS} points"
            )));
        }
        Ok(Self { nx, ny, nz })
    }

    pub fn cube(n: usize) -> Result<Self> {
        Self::new(n, n, n)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    /// Extents as `[nx, ny, nz]`.
    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    /// Grid spacing along axis `axis` (0 = x, 1 = y, 2 = z).
    pub fn spacing(&self, axis: usize) -> f64 {
        1.0 / self.dims()[axis] as f64
    }

    /// Number of degrees of freedom.
    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    /// Distance between consecutive entries of a line along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.nx,
            _ => self.nx * self.ny,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field3D {
    spec: GridSpec,
    data: Vec<f64>,
}

impl Field3D {
    pub fn zeros(spec: GridSpec) -> Self {
        Self::constant(spec, 0.0)
    }

    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Self {
            spec,
            data: vec![value; spec.len()],
        }
    }

    /// Samples `f(x, y, z)` at the grid points `(i h_x, j h_y, k h_z)`.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(f64, f64, f64) -> f64) -> Self {
        let [hx, hy, hz] = [spec.spacing(0), spec.spacing(1), spec.spacing(2)];
        let mut data = Vec::with_capacity(spec.len());
        for k in 0..spec.nz {
            for j in 0..spec.ny {
                for i in 0..spec.nx {
                    data.push(f(i as f64 * hx, j as f64 * hy, k as f64 * hz));
                }
            }
        }
        Self { spec, data }
    }

    pub fn from_vec(spec: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != spec.len() {
            return Err(Error::param(format!(
                "data length {} does not match grid size {}",
                data.len(),
                spec.len()
            )));
        }
        Ok(Self { spec, data })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.spec.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let idx = self.spec.index(i, j, k);
        self.data[idx] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn check_same_grid(&self, other: &Field3D) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::Shape {
                left: self.spec,
                right: other.spec,
            });
        }
        Ok(())
    }

    /// `self += alpha * x`.
    pub fn axpy_in_place(&mut self, alpha: f64, x: &Field3D) -> Result<()> {
        self.check_same_grid(x)?;
        for (y, x) in self.data.iter_mut().zip(&x.data) {
            *y += alpha * x;
        }
        Ok(())
    }
}

/// Returns `alpha * x + y`.
pub fn axpy(alpha: f64, x: &Field3D, y: &Field3D) -> Result<Field3D> {
    let mut out = y.clone();
    out.axpy_in_place(alpha, x)?;
    Ok(out)
}

/// Max-norm of `a - b`.
pub fn norm_inf_diff(a: &Field3D, b: &Field3D) -> Result<f64> {
    a.check_same_grid(b)?;
    Ok(a.data.iter().zip(&b.data).fold(0.0, |m, (x, y)| m.max((x - y).abs())))
}

/// `‖a - reference‖∞ / ‖reference‖∞`.
pub fn norm_inf_rel(a: &Field3D, reference: &Field3D) -> Result<f64> {
    let diff = norm_inf_diff(a, reference)?;
    let scale = reference.max_abs();
    if scale == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(diff / scale)
}

/// The three per-slice working values used by the message-passing worker.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceBuffers<S = Field3D> {
    /// Starting value of the slice; also receives the updated start.
    pub q: S,
    /// Coarse propagation of the latest starting value.
    pub q_c: S,
    /// Fine minus coarse of the previous iterate, then the outgoing end value.
    pub dq: S,
}

impl SliceBuffers<Field3D> {
    /// Allocates and zero-fills on the calling thread.
    pub fn new(spec: GridSpec) -> Self {
        Self {
            q: Field3D::zeros(spec),
            q_c: Field3D::zeros(spec),
            dq: Field3D::zeros(spec),
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.q.spec
    }
}

impl State for Field3D {
    fn axpy(&mut self, alpha: f64, x: &Self) {
        self.axpy_in_place(alpha, x)
            .expect("state arithmetic on mismatched grids");
    }

    fn scale(&mut self, alpha: f64) {
        for v in &mut self.data {
            *v *= alpha;
        }
    }

    fn is_finite(&self) -> bool {
        Field3D::is_finite(self)
    }

    fn max_abs(&self) -> f64 {
        Field3D::max_abs(self)
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        norm_inf_diff(self, other).expect("state comparison on mismatched grids")
    }
}
