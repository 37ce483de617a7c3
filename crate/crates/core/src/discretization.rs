//! Spatial operators for the scalar viscous Burgers equation
//! `u_t + u (u_x + u_y + u_z) = nu (u_xx + u_yy + u_zz)` on a periodic grid.
//!
//! Every operator works on one periodic line at a time. The advection
//! derivative is upwind-biased per point by the sign of the local velocity,
//! which for Burgers is `u` itself; `u == 0` counts as positive.

use crate::error::{Error, Result};
use crate::field::{periodic_index, Field3D};
use crate::integrators::RightHandSide;

/// Regularization in the WENO5 weight denominators.
pub const WENO_EPS: f64 = 1e-6;

/// Ideal (linear) WENO5 weights for the three candidate stencils.
pub const WENO_IDEAL_WEIGHTS: [f64; 3] = [0.1, 0.6, 0.3];

/// Ghost points on each side of a padded line; enough for WENO5.
const GHOSTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AdvectionScheme {
    Weno5,
    Upwind1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiffusionScheme {
    Centered2,
    Centered4,
}

impl AdvectionScheme {
    fn min_points(self) -> usize {
        match self {
            AdvectionScheme::Weno5 => 6,
            AdvectionScheme::Upwind1 => 2,
        }
    }
}

impl DiffusionScheme {
    fn min_points(self) -> usize {
        match self {
            DiffusionScheme::Centered2 => 3,
            DiffusionScheme::Centered4 => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhsConfig {
    nu: f64,
    pub advection: AdvectionScheme,
    pub diffusion: DiffusionScheme,
}

impl RhsConfig {
    pub fn new(nu: f64, advection: AdvectionScheme, diffusion: DiffusionScheme) -> Result<Self> {
        if !(nu >= 0.0 && nu.is_finite()) {
            return Err(Error::param(format!("viscosity must be finite and >= 0, got {nu}")));
        }
        Ok(Self {
            nu,
            advection,
            diffusion,
        })
    }

    /// Forward Euler companion: first-order upwind with second-order diffusion.
    pub fn low_order(nu: f64) -> Result<Self> {
        Self::new(nu, AdvectionScheme::Upwind1, DiffusionScheme::Centered2)
    }

    /// WENO5 advection with fourth-order diffusion.
    pub fn high_order(nu: f64) -> Result<Self> {
        Self::new(nu, AdvectionScheme::Weno5, DiffusionScheme::Centered4)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
}

fn check_spacing(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::param(format!("grid spacing must be positive, got {h}")));
    }
    Ok(())
}

fn check_line(line: &[f64], velocity: &[f64], min: usize) -> Result<()> {
    if line.len() < min {
        return Err(Error::param(format!(
            "line of length {} is shorter than the stencil minimum {min}",
            line.len()
        )));
    }
    if velocity.len() != line.len() {
        return Err(Error::param(format!(
            "velocity length {} does not match line length {}",
            velocity.len(),
            line.len()
        )));
    }
    Ok(())
}

/// Copies `line` into `padded` with `GHOSTS` periodic ghost values on each side.
fn pad_line(line: &[f64], padded: &mut Vec<f64>) {
    let n = line.len();
    padded.clear();
    padded.extend((0..n + 2 * GHOSTS).map(|i| line[periodic_index(i as isize - GHOSTS as isize, n)]));
}

/// Nonlinear WENO5 weights for the face between `c` and `d`, biased towards `a`.
///
/// The five values are consecutive points ordered from the upwind side.
pub fn weno5_weights(a: f64, b: f64, c: f64, d: f64, e: f64) -> [f64; 3] {
    let beta0 = 13.0 / 12.0 * (a - 2.0 * b + c).powi(2) + 0.25 * (a - 4.0 * b + 3.0 * c).powi(2);
    let beta1 = 13.0 / 12.0 * (b - 2.0 * c + d).powi(2) + 0.25 * (b - d).powi(2);
    let beta2 = 13.0 / 12.0 * (c - 2.0 * d + e).powi(2) + 0.25 * (3.0 * c - 4.0 * d + e).powi(2);
    let alpha0 = WENO_IDEAL_WEIGHTS[0] / (WENO_EPS + beta0).powi(2);
    let alpha1 = WENO_IDEAL_WEIGHTS[1] / (WENO_EPS + beta1).powi(2);
    let alpha2 = WENO_IDEAL_WEIGHTS[2] / (WENO_EPS + beta2).powi(2);
    let sum = alpha0 + alpha1 + alpha2;
    [alpha0 / sum, alpha1 / sum, alpha2 / sum]
}

/// WENO5 reconstruction at the face between `c` and `d`, upwind side `a`.
#[inline]
fn weno5_face(a: f64, b: f64, c: f64, d: f64, e: f64) -> f64 {
    let p0 = (2.0 * a - 7.0 * b + 11.0 * c) / 6.0;
    let p1 = (-b + 5.0 * c + 2.0 * d) / 6.0;
    let p2 = (2.0 * c + 5.0 * d - e) / 6.0;
    let [w0, w1, w2] = weno5_weights(a, b, c, d, e);
    w0 * p0 + w1 * p1 + w2 * p2
}

/// Advection derivative on a padded line; `u[GHOSTS + i]` is point `i`.
fn advect_padded(scheme: AdvectionScheme, u: &[f64], velocity: &[f64], inv_h: f64, out: &mut [f64]) {
    let g = GHOSTS;
    match scheme {
        AdvectionScheme::Upwind1 => {
            for (i, o) in out.iter_mut().enumerate() {
                let c = g + i;
                *o = if velocity[i] >= 0.0 {
                    (u[c] - u[c - 1]) * inv_h
                } else {
                    (u[c + 1] - u[c]) * inv_h
                };
            }
        }
        AdvectionScheme::Weno5 => {
            for (i, o) in out.iter_mut().enumerate() {
                let c = g + i;
                *o = if velocity[i] >= 0.0 {
                    // faces c+1/2 and c-1/2 reconstructed from the left
                    let right = weno5_face(u[c - 2], u[c - 1], u[c], u[c + 1], u[c + 2]);
                    let left = weno5_face(u[c - 3], u[c - 2], u[c - 1], u[c], u[c + 1]);
                    (right - left) * inv_h
                } else {
                    let right = weno5_face(u[c + 3], u[c + 2], u[c + 1], u[c], u[c - 1]);
                    let left = weno5_face(u[c + 2], u[c + 1], u[c], u[c - 1], u[c - 2]);
                    (right - left) * inv_h
                };
            }
        }
    }
}

fn diffuse_padded(scheme: DiffusionScheme, u: &[f64], inv_h2: f64, out: &mut [f64]) {
    let g = GHOSTS;
    match scheme {
        DiffusionScheme::Centered2 => {
            for (i, o) in out.iter_mut().enumerate() {
                let c = g + i;
                *o = (u[c - 1] - 2.0 * u[c] + u[c + 1]) * inv_h2;
            }
        }
        DiffusionScheme::Centered4 => {
            for (i, o) in out.iter_mut().enumerate() {
                let c = g + i;
                *o = (-u[c - 2] + 16.0 * u[c - 1] - 30.0 * u[c] + 16.0 * u[c + 1] - u[c + 2]) * (inv_h2 / 12.0);
            }
        }
    }
}

/// First-order upwind derivative of a periodic line.
pub fn upwind1_derivative(line: &[f64], velocity: &[f64], h: f64) -> Result<Vec<f64>> {
    advection_derivative(AdvectionScheme::Upwind1, line, velocity, h)
}

/// Fifth-order WENO derivative of a periodic line, biased by the sign of `velocity`.
pub fn weno5_derivative(line: &[f64], velocity: &[f64], h: f64) -> Result<Vec<f64>> {
    advection_derivative(AdvectionScheme::Weno5, line, velocity, h)
}

pub fn advection_derivative(scheme: AdvectionScheme, line: &[f64], velocity: &[f64], h: f64) -> Result<Vec<f64>> {
    check_spacing(h)?;
    check_line(line, velocity, scheme.min_points())?;
    let mut padded = Vec::new();
    pad_line(line, &mut padded);
    let mut out = vec![0.0; line.len()];
    advect_padded(scheme, &padded, velocity, 1.0 / h, &mut out);
    Ok(out)
}

pub fn centered_second_derivative(line: &[f64], h: f64, scheme: DiffusionScheme) -> Result<Vec<f64>> {
    check_spacing(h)?;
    check_line(line, line, scheme.min_points())?;
    let mut padded = Vec::new();
    pad_line(line, &mut padded);
    let mut out = vec![0.0; line.len()];
    diffuse_padded(scheme, &padded, 1.0 / (h * h), &mut out);
    Ok(out)
}

/// Which parts of the Burgers operator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Terms {
    All,
    AdvectionOnly,
    DiffusionOnly,
}

fn evaluate(u: &Field3D, cfg: &RhsConfig, terms: Terms) -> Result<Field3D> {
    let spec = u.spec();
    let dims = spec.dims();
    let min = cfg.advection.min_points().max(cfg.diffusion.min_points());
    if dims.iter().any(|&n| n < min) {
        return Err(Error::param(format!(
            "grid {dims:?} too small for the configured stencils"
        )));
    }
    let with_adv = terms != Terms::DiffusionOnly;
    let with_diff = terms != Terms::AdvectionOnly && cfg.nu != 0.0;

    let data = u.as_slice();
    let mut grad_sum = vec![0.0; spec.len()];
    let mut lap_sum = vec![0.0; spec.len()];

    let max_n = dims.iter().copied().max().unwrap_or(0);
    let mut line = Vec::with_capacity(max_n);
    let mut padded = Vec::with_capacity(max_n + 2 * GHOSTS);
    let mut d1 = vec![0.0; max_n];
    let mut d2 = vec![0.0; max_n];

    for axis in 0..3 {
        let n = dims[axis];
        let stride = spec.stride(axis);
        let inv_h = 1.0 / spec.spacing(axis);
        let inv_h2 = inv_h * inv_h;
        let (other_a, other_b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for b in 0..dims[other_b] {
            for a in 0..dims[other_a] {
                let start = a * spec.stride(other_a) + b * spec.stride(other_b);
                line.clear();
                line.extend((0..n).map(|i| data[start + i * stride]));
                pad_line(&line, &mut padded);
                if with_adv {
                    advect_padded(cfg.advection, &padded, &line, inv_h, &mut d1[..n]);
                }
                if with_diff {
                    diffuse_padded(cfg.diffusion, &padded, inv_h2, &mut d2[..n]);
                }
                for i in 0..n {
                    let idx = start + i * stride;
                    if with_adv {
                        grad_sum[idx] += d1[i];
                    }
                    if with_diff {
                        lap_sum[idx] += d2[i];
                    }
                }
            }
        }
    }

    let out: Vec<f64> = data
        .iter()
        .zip(grad_sum.iter().zip(&lap_sum))
        .map(|(&u, (&g, &l))| -u * g + cfg.nu * l)
        .collect();
    Field3D::from_vec(spec, out)
}

/// Right-hand side `-u (u_x + u_y + u_z) + nu * Laplacian(u)`.
pub fn burgers_rhs(u: &Field3D, cfg: &RhsConfig) -> Result<Field3D> {
    evaluate(u, cfg, Terms::All)
}

/// Only the advection part `-u (u_x + u_y + u_z)`.
pub fn advection_term(u: &Field3D, cfg: &RhsConfig) -> Result<Field3D> {
    evaluate(u, cfg, Terms::AdvectionOnly)
}

/// Only the diffusion part `nu * Laplacian(u)`.
pub fn diffusion_term(u: &Field3D, cfg: &RhsConfig) -> Result<Field3D> {
    evaluate(u, cfg, Terms::DiffusionOnly)
}

impl RightHandSide<Field3D> for RhsConfig {
    fn eval(&self, u: &Field3D, _t: f64) -> Result<Field3D> {
        burgers_rhs(u, self)
    }
}
