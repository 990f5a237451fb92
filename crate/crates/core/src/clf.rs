//! Min-norm CLF-QP nominal stabilizer.
//!
//! With `V(e) = eᵀPe` the QP
//!
//! ```text
//! min ½‖u‖²  s.t.  ∇V(e)ᵀ (f(z) − f(z*) + u) + c·V(e) ≤ 0
//! ```
//!
//! has a single affine constraint, so its solution is the projection of the
//! origin onto a half-space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, Matrix};
use crate::scalar::{lit, Scalar};
use crate::state::StateVec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClfConfig<T> {
    c: T,
    p: Matrix<T>,
    alpha1: T,
    alpha2: T,
}

impl<T: Scalar> ClfConfig<T> {
    pub fn new(c: T, p: Matrix<T>) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::InvalidConfig("CLF decay rate c must be positive".into()));
        }
        if !p.is_square() || !p.is_finite() {
            return Err(Error::InvalidConfig("CLF matrix P must be square and finite".into()));
        }
        let scale = (0..p.rows()).map(|i| p[(i, i)].abs()).fold(T::one(), T::max);
        if !p.is_symmetric(scale * T::epsilon() * lit(64.0)) {
            return Err(Error::InvalidConfig("CLF matrix P must be symmetric".into()));
        }
        let eig = symmetric_eigenvalues(&p);
        let alpha1 = eig[0];
        let alpha2 = eig[eig.len() - 1];
        if !(alpha1 > T::zero()) {
            return Err(Error::InvalidConfig(
                "CLF matrix P must be positive definite".into(),
            ));
        }
        Ok(Self {
            c,
            p,
            alpha1,
            alpha2,
        })
    }

    pub fn identity(dim: usize, c: T) -> Result<Self> {
        Self::new(c, Matrix::identity(dim))
    }

    pub fn diagonal(p_diag: &[T], c: T) -> Result<Self> {
        Self::new(c, Matrix::from_diagonal(p_diag))
    }

    pub fn dim(&self) -> usize {
        self.p.rows()
    }

    pub fn c(&self) -> T {
        self.c
    }

    pub fn p(&self) -> &Matrix<T> {
        &self.p
    }

    /// `λ_min(P)`
    pub fn alpha1(&self) -> T {
        self.alpha1
    }

    /// `λ_max(P)`
    pub fn alpha2(&self) -> T {
        self.alpha2
    }

    /// Exponential rate of `‖e‖`: `V̇ ≤ −cV = −2λV`.
    pub fn lambda(&self) -> T {
        self.c * lit(0.5)
    }

    /// Bound on `‖∇V‖ = ‖2Pe‖` over the ball `‖e‖ ≤ ρ`.
    pub fn delta_b(&self, rho: T) -> T {
        lit::<T>(2.0) * self.alpha2 * rho
    }
}

/// `V(e) = eᵀPe`.
pub fn clf_value<T: Scalar>(cfg: &ClfConfig<T>, e: &StateVec<T>) -> Result<T> {
    e.check_dim(cfg.dim())?;
    Ok(e.dot(&cfg.p.mul_vec(e)))
}

/// Closed-form min-norm CLF-QP input.
///
/// With `a = 2Pe` and `b = aᵀ(f(z) − f(z*)) + c·V(e)`, returns `0` when
/// `b ≤ 0` (or `e = 0`) and `−(b/‖a‖²)·a` otherwise.
pub fn clf_qp<T: Scalar>(
    cfg: &ClfConfig<T>,
    f_at_z: &StateVec<T>,
    f_at_zstar: &StateVec<T>,
    e: &StateVec<T>,
) -> Result<StateVec<T>> {
    let d = cfg.dim();
    for v in [f_at_z, f_at_zstar, e] {
        v.check_dim(d)?;
        v.check_finite("CLF-QP input")?;
    }
    if e.is_zero() {
        return Ok(StateVec::zeros(d));
    }
    let pe = cfg.p.mul_vec(e);
    let a = pe.scaled(lit(2.0));
    let drift = f_at_z - f_at_zstar;
    let b = a.dot(&drift) + cfg.c * e.dot(&pe);
    let a2 = a.norm_squared();
    // P is SPD, so a = 2Pe vanishes only with e; an underflowed a2 means e is
    // numerically zero.
    if !(a2 > T::zero()) {
        return Ok(StateVec::zeros(d));
    }
    Ok(min_norm_halfspace(&a, b, a2))
}

/// Smallest `u` with `aᵀu + b ≤ 0`.
pub(crate) fn min_norm_halfspace<T: Scalar>(a: &StateVec<T>, b: T, a2: T) -> StateVec<T> {
    if b <= T::zero() {
        StateVec::zeros(a.dim())
    } else {
        a.scaled(-b / a2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(x: &[f64]) -> StateVec<f64> {
        StateVec::from_f64(x)
    }

    #[test]
    fn zero_error_gives_zero_input() {
        let cfg = ClfConfig::identity(2, 1.0).unwrap();
        let u = clf_qp(&cfg, &sv(&[3.0, 1.0]), &sv(&[-2.0, 5.0]), &sv(&[0.0, 0.0])).unwrap();
        assert!(u.is_zero());
    }

    #[test]
    fn active_constraint_projection() {
        let cfg = ClfConfig::identity(2, 1.0).unwrap();
        let e = sv(&[1.0, 0.0]);
        let u = clf_qp(&cfg, &sv(&[0.0, 0.0]), &sv(&[0.0, 0.0]), &e).unwrap();
        assert!((u[0] + 0.5).abs() < 1e-15 && u[1] == 0.0);
        // residual of 2·u1 + 1
        assert!((2.0 * u[0] + 1.0).abs() <= 1e-10);
    }

    #[test]
    fn slack_constraint_gives_zero() {
        let cfg = ClfConfig::identity(2, 1.0).unwrap();
        let u = clf_qp(&cfg, &sv(&[-3.0, 0.0]), &sv(&[0.0, 0.0]), &sv(&[1.0, 0.0])).unwrap();
        assert!(u.is_zero());
    }

    #[test]
    fn values() {
        let id = ClfConfig::identity(2, 1.0).unwrap();
        assert_eq!(clf_value(&id, &sv(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(clf_value(&id, &sv(&[3.0, 4.0])).unwrap(), 25.0);
        let p = ClfConfig::diagonal(&[2.0, 1.0], 1.0).unwrap();
        assert_eq!(clf_value(&p, &sv(&[1.0, 1.0])).unwrap(), 3.0);
        assert!(clf_value(&p, &sv(&[1.0])).is_err());
    }

    #[test]
    fn derived_constants() {
        let cfg = ClfConfig::<f64>::new(
            4.0,
            Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap(),
        )
        .unwrap();
        assert!((cfg.alpha1() - 1.0).abs() < 1e-12);
        assert!((cfg.alpha2() - 3.0).abs() < 1e-12);
        assert_eq!(cfg.lambda(), 2.0);
        assert!((cfg.delta_b(0.5) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_invalid_configs() {
        assert!(ClfConfig::identity(2, 0.0).is_err());
        assert!(ClfConfig::diagonal(&[1.0, -1.0], 1.0).is_err());
        let asym = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(ClfConfig::new(1.0, asym).is_err());
    }

    #[test]
    fn nan_input_is_an_error() {
        let cfg = ClfConfig::identity(1, 1.0).unwrap();
        assert!(matches!(
            clf_qp(&cfg, &sv(&[f64::NAN]), &sv(&[0.0]), &sv(&[1.0])),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let cfg = ClfConfig::<f32>::identity(2, 1.0).unwrap();
        let u = clf_qp(
            &cfg,
            &StateVec::zeros(2),
            &StateVec::zeros(2),
            &StateVec::new(vec![1.0f32, 0.0]),
        )
        .unwrap();
        assert!((u[0] + 0.5).abs() < 1e-7);
    }
}
