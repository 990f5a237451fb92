//! Tube certificate for the L1-augmented closed loop: the constants
//! ζ₁…ζ₄, the bandwidth and sampling-time design conditions, and the
//! ultimate bound μ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateInputs<T> {
    /// Δ_σ: bound on ‖σ‖.
    pub delta_sigma: T,
    /// L_{σz}: bound on ‖∂σ/∂z‖.
    pub l_sigma_z: T,
    /// Δ_f: bound on ‖f_θ(z)‖ over the tube.
    pub delta_f: T,
    /// Δ_nom: bound on ‖u_nom‖ over the tube.
    pub delta_nom: T,
    /// Δ_σ̂: bound on ‖σ̂‖.
    pub delta_sigma_hat: T,
    /// Δ_b: bound on ‖∇V‖ over the tube.
    pub delta_b: T,
    pub alpha1: T,
    pub alpha2: T,
    pub lambda: T,
    /// V(e(t₀)).
    pub v0: T,
    pub epsilon: T,
    pub dim: usize,
    pub a_s_diag: Vec<T>,
    pub omega: T,
    pub t_sample: T,
    pub t1_minus_t0: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport<T> {
    pub phi1: T,
    pub rho: T,
    pub zeta1: T,
    pub zeta2: T,
    pub zeta3: T,
    pub zeta4: T,
    /// `α₁ρ² > V₀ + Δ_b ζ₁(ω)`
    pub condition_bandwidth_ok: bool,
    /// Largest admissible `T_s`; `None` when the bandwidth condition fails.
    pub ts_max: Option<T>,
    pub condition_ts_ok: bool,
    pub ultimate_bound_mu: T,
    /// `|2λ − ω| < 0.1ω`: ζ₁ is close to its singularity.
    pub near_singular_bandwidth: bool,
}

impl<T: Scalar> CertificateReport<T> {
    pub fn passed(&self) -> bool {
        self.condition_bandwidth_ok && self.condition_ts_ok
    }
}

impl<T: Scalar> CertificateInputs<T> {
    /// `φ₁ = Δ_f + Δ_nom + Δ_σ̂ + Δ_σ`
    pub fn phi1(&self) -> T {
        self.delta_f + self.delta_nom + self.delta_sigma_hat + self.delta_sigma
    }

    /// `ρ = ‖e(t₀)‖·√(α₂/α₁) + ε` with `‖e(t₀)‖` taken as its worst case
    /// `√(V₀/α₁)`.
    pub fn rho(&self) -> T {
        (self.v0 / self.alpha1).sqrt() * (self.alpha2 / self.alpha1).sqrt() + self.epsilon
    }

    fn validate(&self) -> Result<()> {
        let nonneg = [
            ("delta_sigma", self.delta_sigma),
            ("l_sigma_z", self.l_sigma_z),
            ("delta_f", self.delta_f),
            ("delta_nom", self.delta_nom),
            ("delta_sigma_hat", self.delta_sigma_hat),
            ("delta_b", self.delta_b),
            ("v0", self.v0),
            ("t1_minus_t0", self.t1_minus_t0),
        ];
        for (name, v) in nonneg {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "certificate input {name} must be finite and non-negative"
                )));
            }
        }
        let pos = [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("lambda", self.lambda),
            ("epsilon", self.epsilon),
            ("omega", self.omega),
            ("t_sample", self.t_sample),
        ];
        for (name, v) in pos {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "certificate input {name} must be finite and positive"
                )));
            }
        }
        if self.dim == 0 || self.a_s_diag.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: self.a_s_diag.len(),
            });
        }
        if self.a_s_diag.iter().any(|&l| !(l < T::zero())) {
            return Err(Error::InvalidConfig("A_s must be Hurwitz".into()));
        }
        Ok(())
    }
}

/// Evaluates the certificate constants and design conditions.
pub fn certify<T: Scalar>(inp: &CertificateInputs<T>) -> Result<CertificateReport<T>> {
    inp.validate()?;
    let two = lit::<T>(2.0);
    let two_lambda = two * inp.lambda;
    let gap = (two_lambda - inp.omega).abs();
    if gap <= T::epsilon() * inp.omega.max(two_lambda) {
        return Err(Error::SingularBandwidth {
            omega: inp.omega.to_f64().unwrap_or(f64::NAN),
            two_lambda: two_lambda.to_f64().unwrap_or(f64::NAN),
        });
    }
    let phi1 = inp.phi1();
    let rho = inp.rho();
    let sqrt_d = from_usize::<T>(inp.dim).sqrt();
    let max_eig = inp
        .a_s_diag
        .iter()
        .map(|l| l.abs())
        .fold(T::zero(), T::max);

    let zeta1 = inp.delta_sigma / gap + inp.l_sigma_z * phi1 / (two_lambda * inp.omega);
    let zeta2 = two * sqrt_d * inp.l_sigma_z * phi1 + sqrt_d * max_eig * inp.delta_sigma;
    let zeta3 = inp.delta_sigma * inp.omega;
    let zeta4 = inp.delta_b * (zeta2 + zeta3) / two_lambda;

    let margin = inp.alpha1 * rho * rho - inp.v0 - inp.delta_b * zeta1;
    let condition_bandwidth_ok = margin > T::zero();
    let ts_max = if !condition_bandwidth_ok {
        None
    } else if zeta4 > T::zero() {
        Some(margin / zeta4)
    } else {
        Some(T::infinity())
    };
    let condition_ts_ok = ts_max.is_some_and(|m| inp.t_sample <= m);

    let mu2 = ((-two_lambda * inp.t1_minus_t0).exp() * inp.v0
        + inp.delta_b * zeta1
        + zeta4 * inp.t_sample)
        / inp.alpha1;

    Ok(CertificateReport {
        phi1,
        rho,
        zeta1,
        zeta2,
        zeta3,
        zeta4,
        condition_bandwidth_ok,
        ts_max,
        condition_ts_ok,
        ultimate_bound_mu: mu2.sqrt(),
        near_singular_bandwidth: gap < lit::<T>(0.1) * inp.omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn worked_example() -> CertificateInputs<f64> {
        CertificateInputs {
            delta_sigma: 0.5,
            l_sigma_z: 0.1,
            delta_f: 1.5,
            delta_nom: 0.5,
            delta_sigma_hat: 0.5,
            delta_b: 2.0,
            alpha1: 1.0,
            alpha2: 1.0,
            lambda: 1.0,
            v0: 0.25,
            epsilon: 0.5,
            dim: 2,
            a_s_diag: vec![-10.0, -10.0],
            omega: 20.0,
            t_sample: 1e-3,
            t1_minus_t0: 0.3,
        }
    }

    #[test]
    fn worked_example_constants() {
        let inp = worked_example();
        assert_eq!(inp.phi1(), 3.0);
        let r = certify(&inp).unwrap();
        assert!((r.rho - 1.0).abs() < 1e-15);
        // independent evaluation of the closed forms
        let z1 = 0.5 / 18.0 + 0.1 * 3.0 / 40.0;
        let z2 = 2.0 * 2f64.sqrt() * 0.3 + 2f64.sqrt() * 10.0 * 0.5;
        let z4 = 2.0 * (z2 + 10.0) / 2.0;
        assert!((r.zeta1 - z1).abs() < 1e-15);
        assert!((r.zeta2 - z2).abs() < 1e-13);
        assert_eq!(r.zeta3, 10.0);
        assert!((r.zeta4 - z4).abs() < 1e-13);
        assert!((r.zeta1 - 0.035278).abs() / 0.035278 < 1e-4);
        assert!((r.zeta2 - 7.9195).abs() / 7.9195 < 1e-4);
        assert!((r.zeta4 - 17.9195).abs() / 17.9195 < 1e-4);
        assert!(r.condition_bandwidth_ok);
        assert!((0.25 + 2.0 * z1 - 0.32056).abs() < 1e-5);
        let ts = r.ts_max.unwrap();
        assert!((ts - 0.037916).abs() / 0.037916 < 1e-4);
        assert!(r.condition_ts_ok);
        assert!(r.ultimate_bound_mu <= r.rho);
    }

    #[test]
    fn zero_uncertainty() {
        let mut inp = worked_example();
        inp.delta_sigma = 0.0;
        inp.l_sigma_z = 0.0;
        let r = certify(&inp).unwrap();
        assert_eq!((r.zeta1, r.zeta2, r.zeta3, r.zeta4), (0.0, 0.0, 0.0, 0.0));
        assert!(r.condition_bandwidth_ok);
        assert_eq!(r.ts_max, Some(f64::INFINITY));
        let mu = ((-2.0f64 * 0.3).exp() * 0.25).sqrt();
        assert!((r.ultimate_bound_mu - mu).abs() < 1e-15);
    }

    #[test]
    fn larger_bandwidth_shrinks_zeta1() {
        let inp = worked_example();
        let mut wide = inp.clone();
        wide.omega *= 10.0;
        assert!(certify(&wide).unwrap().zeta1 < certify(&inp).unwrap().zeta1);
    }

    #[test]
    fn sample_time_above_limit_fails() {
        let mut inp = worked_example();
        inp.t_sample = 0.04;
        let r = certify(&inp).unwrap();
        assert!(r.condition_bandwidth_ok && !r.condition_ts_ok && !r.passed());
    }

    #[test]
    fn singular_bandwidth() {
        let mut inp = worked_example();
        inp.omega = 2.0;
        assert!(matches!(certify(&inp), Err(Error::SingularBandwidth { .. })));
        inp.omega = 2.1;
        assert!(certify(&inp).unwrap().near_singular_bandwidth);
    }
}
