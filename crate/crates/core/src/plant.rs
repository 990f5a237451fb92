//! Per-axis double-integrator plant under a PID low-level controller.
//!
//! ```text
//! ṗ = v + d_um
//! v̇ = u + d_m
//! u = K_p (p_r − p) + K_d (v_r − v) + K_i ∫(p_r − p)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::StateVec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains<T> {
    pub kp: T,
    pub ki: T,
    pub kd: T,
}

impl<T: Scalar> PidGains<T> {
    pub fn new(kp: T, ki: T, kd: T) -> Result<Self> {
        if [kp, ki, kd].iter().any(|g| !(*g > T::zero()) || !g.is_finite()) {
            return Err(Error::InvalidConfig("PID gains must be positive".into()));
        }
        Ok(Self { kp, ki, kd })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantState<T> {
    pub p: StateVec<T>,
    pub v: StateVec<T>,
    pub integral_error: StateVec<T>,
}

impl<T: Scalar> PlantState<T> {
    pub fn at_rest(p: StateVec<T>) -> Self {
        let d = p.dim();
        Self {
            p,
            v: StateVec::zeros(d),
            integral_error: StateVec::zeros(d),
        }
    }

    pub fn moving(p: StateVec<T>, v: StateVec<T>) -> Self {
        let d = p.dim();
        Self {
            p,
            v,
            integral_error: StateVec::zeros(d),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.v.is_finite() && self.integral_error.is_finite()
    }
}

/// PID law with anti-windup: the integral contribution `K_i ∫e` of each axis
/// is clamped to `±windup_limit`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowLevelController<T> {
    pub gains: PidGains<T>,
    pub windup_limit: T,
}

impl<T: Scalar> LowLevelController<T> {
    pub fn control(&self, st: &PlantState<T>, p_r: &StateVec<T>, v_r: &StateVec<T>) -> StateVec<T> {
        let g = &self.gains;
        StateVec::new(
            (0..st.p.dim())
                .map(|i| {
                    g.kp * (p_r[i] - st.p[i])
                        + g.kd * (v_r[i] - st.v[i])
                        + g.ki * st.integral_error[i]
                })
                .collect(),
        )
    }

    /// One forward-Euler step of plant and integrator.
    pub fn euler_step(
        &self,
        st: &PlantState<T>,
        p_r: &StateVec<T>,
        v_r: &StateVec<T>,
        d_m: &StateVec<T>,
        d_um: &StateVec<T>,
        h: T,
    ) -> PlantState<T> {
        let u = self.control(st, p_r, v_r);
        let limit = self.windup_limit / self.gains.ki;
        let mut next = st.clone();
        for i in 0..st.p.dim() {
            next.p[i] = st.p[i] + h * (st.v[i] + d_um[i]);
            next.v[i] = st.v[i] + h * (u[i] + d_m[i]);
            next.integral_error[i] =
                (st.integral_error[i] + h * (p_r[i] - st.p[i])).max(-limit).min(limit);
        }
        next
    }
}
