//! Fixed-step classical Runge-Kutta integration.

use crate::error::{Error, Result};
use crate::rbf::VectorFieldModel;
use crate::scalar::{lit, Scalar};
use crate::state::{DomainBox, StateVec};
use crate::trajectory::Trajectory;

/// One RK4 step of the autonomous system `ż = f(z)`.
pub fn rk4_step<T, F>(f: F, z: &StateVec<T>, dt: T) -> StateVec<T>
where
    T: Scalar,
    F: Fn(&StateVec<T>) -> StateVec<T>,
{
    let half = dt * lit(0.5);
    let k1 = f(z);
    let mut tmp = z.clone();
    tmp.axpy(half, &k1);
    let k2 = f(&tmp);
    tmp = z.clone();
    tmp.axpy(half, &k2);
    let k3 = f(&tmp);
    tmp = z.clone();
    tmp.axpy(dt, &k3);
    let k4 = f(&tmp);

    let sixth = dt / lit(6.0);
    let third = dt / lit(3.0);
    let mut out = z.clone();
    out.axpy(sixth, &k1);
    out.axpy(third, &k2);
    out.axpy(third, &k3);
    out.axpy(sixth, &k4);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rollout<T> {
    pub trajectory: Trajectory<T>,
    /// Set when the state left the domain box; the trajectory then ends at
    /// the last in-domain sample.
    pub truncated: bool,
}

/// Integrates the learned field from `z0` for `n` RK4 steps of size `dt`,
/// returning `n + 1` states on the grid `t_k = k·dt`.
pub fn rollout<T: Scalar>(
    model: &VectorFieldModel<T>,
    z0: &StateVec<T>,
    dt: T,
    n: usize,
    domain: Option<&DomainBox<T>>,
) -> Result<Rollout<T>> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidConfig("rollout step must be positive".into()));
    }
    z0.check_dim(model.dim())?;
    z0.check_finite("rollout initial state")?;
    let mut states = Vec::with_capacity(n + 1);
    states.push(z0.clone());
    let mut truncated = false;
    for _ in 0..n {
        let next = rk4_step(|z| model.eval_unchecked(z), states.last().unwrap(), dt);
        if !next.is_finite() || domain.is_some_and(|b| !b.contains(&next)) {
            truncated = true;
            break;
        }
        states.push(next);
    }
    Ok(Rollout {
        trajectory: Trajectory::on_uniform_grid(dt, states)?,
        truncated,
    })
}
