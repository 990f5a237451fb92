use approx::assert_relative_eq;
use l1ds_core::clf::{clf_qp, ClfConfig};
use l1ds_core::l1::{adaptation_update, filter_step, L1Config, L1State};
use l1ds_core::linalg::Matrix;
use l1ds_core::rbf::{fit_rbf, FitOptions};
use l1ds_core::shapes::{ShapeKind, ShapeParams};
use l1ds_core::trajectory::{resample_demo, Trajectory};
use l1ds_core::StateVec;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, 3)
}

// P = L Lᵀ + 0.1 I
fn spd(l: &[f64]) -> Matrix<f64> {
    let lm = DMatrix::from_row_slice(3, 3, l);
    let p = &lm * lm.transpose() + DMatrix::identity(3, 3) * 0.1;
    Matrix::from_rows(&(0..3).map(|i| (0..3).map(|j| p[(i, j)]).collect()).collect::<Vec<_>>())
        .unwrap()
}

fn sv(x: &[f64]) -> StateVec<f64> {
    StateVec::from_f64(x)
}

fn fitted_demos(kind: ShapeKind, seed: u64) -> Vec<Trajectory<f64>> {
    ShapeParams::new(kind)
        .generate(seed)
        .unwrap()
        .iter()
        .map(|d| resample_demo(d, 300).unwrap())
        .collect()
}

proptest! {
    #[test]
    fn clf_qp_is_feasible_and_minimal(
        l in prop::collection::vec(-1.0..1.0f64, 9),
        c in 0.1..50.0f64,
        e in vec3(), fz in vec3(), fs in vec3(), probe in vec3(),
    ) {
        let cfg = ClfConfig::new(c, spd(&l)).unwrap();
        let (e, fz, fs) = (sv(&e), sv(&fz), sv(&fs));
        let u = clf_qp(&cfg, &fz, &fs, &e).unwrap();
        let a = cfg.p().mul_vec(&e).scaled(2.0);
        let b = a.dot(&(&fz - &fs)) + c * e.dot(&cfg.p().mul_vec(&e));
        let scale = 1.0 + b.abs();
        prop_assert!(a.dot(&u) + b <= 1e-9 * scale);
        if b <= 0.0 {
            prop_assert!(u.is_zero());
        }
        // any other feasible input is at least as large
        let other = sv(&probe);
        if a.dot(&other) + b <= 0.0 {
            prop_assert!(other.norm() >= u.norm() - 1e-9 * (1.0 + u.norm()));
        }
    }

    #[test]
    fn clf_qp_invariant_to_scaling_p(
        l in prop::collection::vec(-1.0..1.0f64, 9),
        k in 0.01..100.0f64,
        e in vec3(), fz in vec3(), fs in vec3(),
    ) {
        let p = spd(&l);
        let mut kp = p.clone();
        for i in 0..3 {
            for j in 0..3 {
                kp[(i, j)] *= k;
            }
        }
        let (e, fz, fs) = (sv(&e), sv(&fz), sv(&fs));
        let u1 = clf_qp(&ClfConfig::new(2.0, p).unwrap(), &fz, &fs, &e).unwrap();
        let u2 = clf_qp(&ClfConfig::new(2.0, kp).unwrap(), &fz, &fs, &e).unwrap();
        for i in 0..3 {
            assert_relative_eq!(u1[i], u2[i], epsilon = 1e-9, max_relative = 1e-8);
        }
    }

    #[test]
    fn adaptation_matches_matrix_exponential(
        a_s in prop::collection::vec(-50.0..-0.5f64, 3),
        ts in 1e-4..0.05f64,
        zt in vec3(),
    ) {
        let cfg = L1Config::new(sv(&a_s), 20.0, ts).unwrap();
        let got = adaptation_update(&cfg, &sv(&zt)).unwrap();

        let a = DMatrix::from_diagonal(&DVector::from_vec(a_s.clone()));
        let e = (&a * ts).exp();
        let phi = a.clone().try_inverse().unwrap() * (&e - DMatrix::identity(3, 3));
        let want = -(phi.try_inverse().unwrap() * &e * DVector::from_vec(zt.clone()));
        for i in 0..3 {
            assert_relative_eq!(got[i], want[i], epsilon = 1e-9, max_relative = 1e-8);
        }

        // holding σ̂ over one period drives the prediction error to zero
        let mut err = DVector::from_vec(zt);
        let h = ts / 20_000.0;
        let sig = DVector::from_vec(got.into_inner());
        for _ in 0..20_000 {
            err += (&a * &err + &sig) * h;
        }
        prop_assert!(err.norm() < 1e-3 * (1.0 + sig.norm() * ts));
    }

    #[test]
    fn filter_step_is_exact_zoh(
        omega in 1.0..500.0f64,
        dt in 1e-4..0.02f64,
        u0 in vec3(),
        sig in vec3(),
    ) {
        let cfg = L1Config::isotropic(3, -10.0, omega, dt).unwrap();
        let mut st = L1State::new(&StateVec::zeros(3), 1);
        st.u_a = sv(&u0);
        st.sigma_hat = sv(&sig);
        let next = filter_step(&cfg, &st, dt);
        let substeps = 50_000;
        let h = dt / substeps as f64;
        let mut u = u0.clone();
        for _ in 0..substeps {
            for k in 0..3 {
                u[k] += h * (-omega * u[k] - omega * sig[k]);
            }
        }
        for k in 0..3 {
            assert_relative_eq!(next.u_a[k], u[k], epsilon = 1e-3 * (1.0 + sig[k].abs() + u0[k].abs()));
        }
    }
}

#[test]
fn jacobian_matches_finite_differences_and_respects_bound() {
    for kind in ShapeKind::ALL {
        let demos = fitted_demos(kind, 3);
        let (model, _) = fit_rbf(&demos, &FitOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-6;
        for _ in 0..300 {
            let z = sv(&[
                rng.random_range(model.domain.lower[0]..model.domain.upper[0]),
                rng.random_range(model.domain.lower[1]..model.domain.upper[1]),
            ]);
            let jac = model.jacobian(&z);
            let mut fd = DMatrix::<f64>::zeros(2, 2);
            for j in 0..2 {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[j] += h;
                zm[j] -= h;
                let (fp, fm) = (model.eval(&zp).unwrap(), model.eval(&zm).unwrap());
                for i in 0..2 {
                    fd[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
                    assert_relative_eq!(jac[(i, j)], fd[(i, j)], epsilon = 1e-4, max_relative = 1e-5);
                }
            }
            let norm = fd.singular_values().max();
            assert!(norm <= model.jacobian_bound, "{kind}: {norm} > {}", model.jacobian_bound);
        }
    }
}

#[test]
fn more_centers_fit_no_worse() {
    let demos = fitted_demos(ShapeKind::Sine, 5);
    let residual = |k: usize| {
        let opts = FitOptions {
            num_centers: k,
            ..FitOptions::default()
        };
        fit_rbf(&demos, &opts).unwrap().1.mean_squared_residual
    };
    let r: Vec<f64> = [5, 20, 80].into_iter().map(residual).collect();
    assert!(r[0] >= r[1] && r[1] >= r[2], "{r:?}");
}

#[test]
fn fit_is_reproducible_per_seed() {
    let demos = fitted_demos(ShapeKind::Angle, 2);
    let opts = FitOptions::default();
    let a = fit_rbf(&demos, &opts).unwrap();
    let b = fit_rbf(&demos, &opts).unwrap();
    assert_eq!(a, b);
    let c = fit_rbf(&demos, &FitOptions { seed: 9, ..opts }).unwrap();
    assert_ne!(a.0.centers, c.0.centers);
}

#[test]
fn exact_linear_field_is_recovered() {
    // ż = -z sampled exactly; the affine block absorbs it with tiny residual
    let demo: Vec<Trajectory<f64>> = (0..3)
        .map(|i| {
            let z0 = [1.0 + 0.2 * i as f64, -0.5 + 0.3 * i as f64];
            let states = (0..200)
                .map(|k| {
                    let t = k as f64 / 199.0;
                    sv(&[z0[0] * (-t).exp(), z0[1] * (-t).exp()])
                })
                .collect();
            Trajectory::on_uniform_grid(1.0 / 199.0, states).unwrap()
        })
        .collect();
    let demos: Vec<_> = demo.iter().map(|d| resample_demo(d, 200).unwrap()).collect();
    let (model, report) = fit_rbf(&demos, &FitOptions { num_centers: 10, ..FitOptions::default() }).unwrap();
    assert!(report.mean_squared_residual < 1e-3, "{}", report.mean_squared_residual);
    let f = model.eval(&sv(&[0.8, 0.1])).unwrap();
    assert_relative_eq!(f[0], -0.8, epsilon = 0.02);
    assert_relative_eq!(f[1], -0.1, epsilon = 0.02);
}
