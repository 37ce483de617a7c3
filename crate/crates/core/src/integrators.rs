//! Explicit one-step methods and fixed-step propagation over a time slice.

use crate::error::{Error, Result};

/// Vector-space operations the steppers need from a solution state.
///
/// Implementations must be deterministic: the same sequence of calls on
/// equal inputs yields bitwise-equal results.
pub trait State: Clone + Send + Sync {
    /// `self += alpha * x`.
    fn axpy(&mut self, alpha: f64, x: &Self);
    fn scale(&mut self, alpha: f64);
    fn is_finite(&self) -> bool;
    fn max_abs(&self) -> f64;
    fn max_abs_diff(&self, other: &Self) -> f64;
}

impl State for f64 {
    fn axpy(&mut self, alpha: f64, x: &Self) {
        *self += alpha * x;
    }

    fn scale(&mut self, alpha: f64) {
        *self *= alpha;
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }

    fn max_abs(&self) -> f64 {
        self.abs()
    }

    fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

/// `f(q, t)` of the ODE `q' = f(q, t)`.
pub trait RightHandSide<S>: Send + Sync {
    fn eval(&self, u: &S, t: f64) -> Result<S>;
}

impl<S, F> RightHandSide<S> for F
where
    F: Fn(&S, f64) -> S + Send + Sync,
{
    fn eval(&self, u: &S, t: f64) -> Result<S> {
        Ok(self(u, t))
    }
}

/// Scalar linear test equation `q' = lambda q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dahlquist {
    pub lambda: f64,
}

impl RightHandSide<f64> for Dahlquist {
    fn eval(&self, u: &f64, _t: f64) -> Result<f64> {
        Ok(self.lambda * u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stepper {
    Euler,
    Rk3Ssp,
}

fn finite_or_err<S: State>(u: S) -> Result<S> {
    if u.is_finite() {
        Ok(u)
    } else {
        Err(Error::NonFinite { slice: None, step: 0 })
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

/// `u + dt f(u, t)`.
pub fn euler_step<S: State, R: RightHandSide<S> + ?Sized>(u: &S, t: f64, dt: f64, rhs: &R) -> Result<S> {
    check_dt(dt)?;
    let f = rhs.eval(u, t)?;
    let mut next = u.clone();
    next.axpy(dt, &f);
    finite_or_err(next)
}

/// Three-stage strong-stability-preserving Runge-Kutta step (Shu-Osher form).
pub fn rk3ssp_step<S: State, R: RightHandSide<S> + ?Sized>(u: &S, t: f64, dt: f64, rhs: &R) -> Result<S> {
    check_dt(dt)?;
    // u1 = u + dt f(u)
    let mut u1 = u.clone();
    u1.axpy(dt, &rhs.eval(u, t)?);

    // u2 = 3/4 u + 1/4 (u1 + dt f(u1))
    let f1 = rhs.eval(&u1, t + dt)?;
    u1.axpy(dt, &f1);
    let mut u2 = u.clone();
    u2.scale(0.75);
    u2.axpy(0.25, &u1);

    // u_next = 1/3 u + 2/3 (u2 + dt f(u2))
    let f2 = rhs.eval(&u2, t + 0.5 * dt)?;
    u2.axpy(dt, &f2);
    let mut next = u.clone();
    next.scale(1.0 / 3.0);
    next.axpy(2.0 / 3.0, &u2);
    finite_or_err(next)
}

/// Sub-interval `[t_start, t_end]` owned by slice `index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSlice {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
}

impl TimeSlice {
    pub fn new(index: usize, t_start: f64, t_end: f64) -> Result<Self> {
        if !t_start.is_finite() || !t_end.is_finite() || t_end <= t_start {
            return Err(Error::param(format!("empty time slice [{t_start}, {t_end}]")));
        }
        Ok(Self { index, t_start, t_end })
    }

    /// Slice `index` of `[0, t_end]` cut into `count` equal pieces.
    ///
    /// All executors build slices through here so slice boundaries are
    /// bitwise identical everywhere.
    pub fn uniform(t_end: f64, count: usize, index: usize) -> Result<Self> {
        if count == 0 || index >= count {
            return Err(Error::param(format!("slice {index} out of range for {count} slices")));
        }
        let at = |p: usize| t_end * p as f64 / count as f64;
        Self::new(index, at(index), at(index + 1))
    }

    pub fn len(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Anything that maps a starting value over a time slice.
pub trait Propagate<S>: Send + Sync {
    fn propagate(&self, u0: &S, slice: &TimeSlice) -> Result<S>;
}

/// Fixed-step propagation with `steps_per_slice` equal steps of `stepper`.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator<R> {
    pub rhs: R,
    pub stepper: Stepper,
    steps_per_slice: usize,
}

impl<R> Propagator<R> {
    pub fn new(rhs: R, stepper: Stepper, steps_per_slice: usize) -> Result<Self> {
        if steps_per_slice == 0 {
            return Err(Error::param("steps_per_slice must be at least 1"));
        }
        Ok(Self {
            rhs,
            stepper,
            steps_per_slice,
        })
    }

    pub fn steps_per_slice(&self) -> usize {
        self.steps_per_slice
    }

    /// Same method with a different step count.
    pub fn with_steps(&self, steps_per_slice: usize) -> Result<Self>
    where
        R: Clone,
    {
        Self::new(self.rhs.clone(), self.stepper, steps_per_slice)
    }
}

impl<S: State, R: RightHandSide<S>> Propagate<S> for Propagator<R> {
    fn propagate(&self, u0: &S, slice: &TimeSlice) -> Result<S> {
        let dt = slice.len() / self.steps_per_slice as f64;
        let mut u = u0.clone();
        for step in 0..self.steps_per_slice {
            let t = slice.t_start + step as f64 * dt;
            let next = match self.stepper {
                Stepper::Euler => euler_step(&u, t, dt, &self.rhs),
                Stepper::Rk3Ssp => rk3ssp_step(&u, t, dt, &self.rhs),
            };
            u = next.map_err(|e| match e {
                Error::NonFinite { .. } => Error::NonFinite {
                    slice: Some(slice.index),
                    step,
                },
                other => other,
            })?;
        }
        Ok(u)
    }
}

/// Propagates `u0` across slices `0..count` of `[0, t_end]` one slice at a time.
pub fn propagate_slices<S: State, P: Propagate<S> + ?Sized>(
    prop: &P,
    u0: &S,
    t_end: f64,
    slices: usize,
    count: usize,
) -> Result<S> {
    let mut u = u0.clone();
    for p in 0..count {
        u = prop.propagate(&u, &TimeSlice::uniform(t_end, slices, p)?)?;
    }
    Ok(u)
}
