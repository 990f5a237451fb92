//! Gaussian RBF + affine vector-field learner.
//!
//! The field is `f(z) = Σ_j w_j φ_j(z) + A z + b` with
//! `φ_j(z) = exp(-‖z - c_j‖² / (2h²))`, fit by ridge regression on
//! demonstrated state/velocity pairs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, Matrix};
use crate::scalar::{from_usize, lit, Scalar};
use crate::state::{DomainBox, StateVec};
use crate::trajectory::Trajectory;

/// Safety factor applied to the probed Jacobian norm.
pub const JACOBIAN_SAFETY: f64 = 1.2;
/// Probe points per axis for the Jacobian bound.
pub const JACOBIAN_GRID: usize = 50;
const MAX_PROBES: usize = 1_000_000;
const KMEANS_ITERS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub num_centers: usize,
    pub bandwidth: f64,
    pub ridge: f64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            num_centers: 40,
            bandwidth: 0.15,
            ridge: 1e-6,
            seed: 0,
        }
    }
}

/// Learned nominal dynamics plus a bound on its Jacobian norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorFieldModel<T> {
    pub centers: Vec<StateVec<T>>,
    pub bandwidth: T,
    /// `(num_centers + d + 1) × d`: RBF rows, then the linear block, then the bias row.
    pub weights: Matrix<T>,
    pub jacobian_bound: T,
    /// Box the Jacobian bound was probed on (demo bounding box inflated by 10%).
    pub domain: DomainBox<T>,
}

/// Diagnostics from a fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Mean over samples of `‖ż − f(z)‖²`.
    pub mean_squared_residual: f64,
    pub samples: usize,
    pub jacobian_bound: f64,
}

impl<T: Scalar> VectorFieldModel<T> {
    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn num_centers(&self) -> usize {
        self.centers.len()
    }

    /// A model whose every weight is zero.
    pub fn zero(centers: Vec<StateVec<T>>, bandwidth: T, domain: DomainBox<T>) -> Self {
        let d = domain.dim();
        Self {
            weights: Matrix::zeros(centers.len() + d + 1, d),
            centers,
            bandwidth,
            jacobian_bound: T::zero(),
            domain,
        }
    }

    /// Affine field `f(z) = A z + b` (no RBF terms).
    pub fn affine(a: &Matrix<T>, b: &StateVec<T>, domain: DomainBox<T>) -> Result<Self> {
        let d = b.dim();
        if a.rows() != d || a.cols() != d || domain.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: a.rows(),
            });
        }
        let mut weights = Matrix::zeros(d + 1, d);
        for m in 0..d {
            for i in 0..d {
                weights[(i, m)] = a[(m, i)];
            }
            weights[(d, m)] = b[m];
        }
        let mut model = Self {
            centers: Vec::new(),
            bandwidth: T::one(),
            weights,
            jacobian_bound: T::zero(),
            domain,
        };
        model.jacobian_bound = model.probe_jacobian_bound() * lit(JACOBIAN_SAFETY);
        Ok(model)
    }

    #[inline]
    fn rbf(&self, z: &StateVec<T>, j: usize) -> T {
        let h2 = self.bandwidth * self.bandwidth;
        let r2 = z
            .iter()
            .zip(self.centers[j].iter())
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>();
        (-r2 / (lit::<T>(2.0) * h2)).exp()
    }

    /// Evaluates the field; dimension-checked.
    pub fn eval(&self, z: &StateVec<T>) -> Result<StateVec<T>> {
        z.check_dim(self.dim())?;
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: &StateVec<T>) -> StateVec<T> {
        let d = self.dim();
        let k = self.centers.len();
        let mut out = StateVec::new(self.weights.row(k + d).to_vec());
        for j in 0..k {
            let phi = self.rbf(z, j);
            let row = self.weights.row(j);
            for m in 0..d {
                out[m] += phi * row[m];
            }
        }
        for i in 0..d {
            let row = self.weights.row(k + i);
            for m in 0..d {
                out[m] += z[i] * row[m];
            }
        }
        out
    }

    /// Analytic Jacobian `J[m][i] = ∂f_m/∂z_i`.
    pub fn jacobian(&self, z: &StateVec<T>) -> Matrix<T> {
        let d = self.dim();
        let k = self.centers.len();
        let h2 = self.bandwidth * self.bandwidth;
        let mut jac = Matrix::zeros(d, d);
        for m in 0..d {
            for i in 0..d {
                jac[(m, i)] = self.weights[(k + i, m)];
            }
        }
        for j in 0..k {
            let phi = self.rbf(z, j);
            for i in 0..d {
                let g = -phi * (z[i] - self.centers[j][i]) / h2;
                for m in 0..d {
                    jac[(m, i)] += self.weights[(j, m)] * g;
                }
            }
        }
        jac
    }

    /// Max spectral norm of the Jacobian over a uniform probe grid of `domain`.
    pub fn probe_jacobian_bound(&self) -> T {
        let d = self.dim();
        let mut per_axis = JACOBIAN_GRID;
        while per_axis > 2 && per_axis.checked_pow(d as u32).is_none_or(|n| n > MAX_PROBES) {
            per_axis -= 1;
        }
        let total = per_axis.pow(d as u32);
        let step: Vec<T> = (0..d)
            .map(|i| {
                (self.domain.upper[i] - self.domain.lower[i]) / from_usize::<T>(per_axis - 1)
            })
            .collect();
        let mut z = StateVec::zeros(d);
        let mut best = T::zero();
        for flat in 0..total {
            let mut rem = flat;
            for i in 0..d {
                z[i] = self.domain.lower[i] + from_usize::<T>(rem % per_axis) * step[i];
                rem /= per_axis;
            }
            best = best.max(self.jacobian(&z).spectral_norm());
        }
        best
    }
}

/// Evaluates a learned field at `z`.
pub fn eval_field<T: Scalar>(model: &VectorFieldModel<T>, z: &StateVec<T>) -> Result<StateVec<T>> {
    model.eval(z)
}

/// Fits the RBF + affine field to preprocessed demonstrations (velocities
/// present) by ridge regression.
pub fn fit_rbf<T: Scalar>(
    demos: &[Trajectory<T>],
    opts: &FitOptions,
) -> Result<(VectorFieldModel<T>, FitReport)> {
    let first = demos.first().ok_or(Error::Empty("demonstration list"))?;
    let d = first.dim();
    let mut xs: Vec<&StateVec<T>> = Vec::new();
    let mut ys: Vec<&StateVec<T>> = Vec::new();
    for demo in demos {
        demo.first().check_dim(d)?;
        let vel = demo.velocities().ok_or_else(|| {
            Error::InvalidDemonstration("demonstration has no velocities; resample first".into())
        })?;
        xs.extend(demo.states());
        ys.extend(vel);
    }
    if opts.num_centers == 0 || opts.num_centers > xs.len() {
        return Err(Error::InvalidConfig(format!(
            "num_centers must be in 1..={} (total samples), got {}",
            xs.len(),
            opts.num_centers
        )));
    }
    if !(opts.bandwidth > 0.0) || !opts.bandwidth.is_finite() {
        return Err(Error::InvalidConfig("bandwidth must be positive".into()));
    }
    if !(opts.ridge >= 0.0) {
        return Err(Error::InvalidConfig("ridge must be non-negative".into()));
    }

    let centers = kmeans(&xs, opts.num_centers, opts.seed);
    let domain = DomainBox::bounding(xs.iter().copied())?.inflated(lit(1.1));
    let mut model = VectorFieldModel::zero(centers, lit(opts.bandwidth), domain);

    let k = model.num_centers();
    let p = k + d + 1;
    let mut gram = Matrix::<T>::zeros(p, p);
    let mut rhs = Matrix::<T>::zeros(p, d);
    let mut feat = vec![T::zero(); p];
    for (x, y) in xs.iter().zip(&ys) {
        for (j, f) in feat.iter_mut().enumerate().take(k) {
            *f = model.rbf(x, j);
        }
        for i in 0..d {
            feat[k + i] = x[i];
        }
        feat[k + d] = T::one();
        for a in 0..p {
            let fa = feat[a];
            if fa.is_zero() {
                continue;
            }
            for b in a..p {
                gram[(a, b)] += fa * feat[b];
            }
            for m in 0..d {
                rhs[(a, m)] += fa * y[m];
            }
        }
    }
    let ridge = lit::<T>(opts.ridge);
    for a in 0..p {
        gram[(a, a)] += ridge;
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    model.weights = cholesky_solve(&gram, &rhs).map_err(|e| match e {
        Error::Singular(m) if opts.ridge == 0.0 => Error::Singular(format!(
            "{m}; normal equations are singular without regularization, use ridge > 0"
        )),
        other => other,
    })?;
    if !model.weights.is_finite() {
        return Err(Error::NonFinite("RBF weights"));
    }
    model.jacobian_bound = model.probe_jacobian_bound() * lit(JACOBIAN_SAFETY);

    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (&model.eval_unchecked(x) - *y).norm_squared().to_f64().unwrap_or(f64::NAN))
        .sum();
    let report = FitReport {
        mean_squared_residual: sse / xs.len() as f64,
        samples: xs.len(),
        jacobian_bound: model.jacobian_bound.to_f64().unwrap_or(f64::NAN),
    };
    Ok((model, report))
}

/// Lloyd's k-means with k-means++ seeding.
fn kmeans<T: Scalar>(points: &[&StateVec<T>], k: usize, seed: u64) -> Vec<StateVec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = points.len();
    let mut centers: Vec<StateVec<T>> = Vec::with_capacity(k);
    centers.push(points[rng.random_range(0..n)].clone());
    let mut nearest: Vec<f64> = points
        .iter()
        .map(|p| p.distance(&centers[0]).to_f64().unwrap_or(0.0).powi(2))
        .collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let idx = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if r < w {
                    pick = i;
                    break;
                }
                r -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = points[idx].clone();
        for (w, p) in nearest.iter_mut().zip(points) {
            *w = w.min(p.distance(&c).to_f64().unwrap_or(0.0).powi(2));
        }
        centers.push(c);
    }

    let d = centers[0].dim();
    let mut assign = vec![usize::MAX; n];
    for _ in 0..KMEANS_ITERS {
        let mut changed = false;
        for (a, p) in assign.iter_mut().zip(points) {
            let best = (0..k)
                .min_by(|&i, &j| {
                    p.distance(&centers[i])
                        .partial_cmp(&p.distance(&centers[j]))
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(0);
            if *a != best {
                *a = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![StateVec::<T>::zeros(d); k];
        let mut counts = vec![0usize; k];
        for (&a, p) in assign.iter().zip(points) {
            sums[a] += *p;
            counts[a] += 1;
        }
        for ((c, s), &m) in centers.iter_mut().zip(sums).zip(&counts) {
            // empty clusters keep their previous center
            if m > 0 {
                *c = s.scaled(T::one() / from_usize(m));
            }
        }
    }
    centers
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{resample_demo, unit_grid};

    fn sv(x: &[f64]) -> StateVec<f64> {
        StateVec::from_f64(x)
    }

    fn demo_from_field(z0: [f64; 2], field: impl Fn(&[f64; 2]) -> [f64; 2], n: usize) -> Trajectory<f64> {
        // fine Euler integration of the analytic field, then sampled with exact velocities
        let times = unit_grid::<f64>(n);
        let mut z = z0;
        let mut states = Vec::new();
        let mut vels = Vec::new();
        let sub = 50;
        for k in 0..n {
            states.push(sv(&z));
            vels.push(sv(&field(&z)));
            if k + 1 < n {
                let h = (times[k + 1] - times[k]) / sub as f64;
                for _ in 0..sub {
                    let v = field(&z);
                    z = [z[0] + h * v[0], z[1] + h * v[1]];
                }
            }
        }
        Trajectory::new(times, states, Some(vels)).unwrap()
    }

    #[test]
    fn constant_field_is_reproduced() {
        let raw = Trajectory::new(
            vec![0.0, 1.0],
            vec![sv(&[0.0, 0.0]), sv(&[1.0, 0.0])],
            None,
        )
        .unwrap();
        let demo = resample_demo(&raw, 100).unwrap();
        let opts = FitOptions {
            num_centers: 10,
            bandwidth: 0.2,
            ridge: 1e-6,
            seed: 3,
        };
        let (model, _) = fit_rbf(std::slice::from_ref(&demo), &opts).unwrap();
        for z in demo.states() {
            let f = model.eval(z).unwrap();
            assert!(f.distance(&sv(&[1.0, 0.0])) < 1e-3);
        }
    }

    #[test]
    fn zero_velocity_demo_gives_zero_field() {
        let times = unit_grid::<f64>(20);
        let states: Vec<_> = times.iter().map(|&t| sv(&[t, t * t])).collect();
        let demo = Trajectory::new(times, states, Some(vec![sv(&[0.0, 0.0]); 20])).unwrap();
        let (model, _) = fit_rbf(std::slice::from_ref(&demo), &FitOptions::default().with_centers(5)).unwrap();
        for z in demo.states() {
            assert!(model.eval(z).unwrap().norm() <= 1e-6);
        }
    }

    #[test]
    fn linear_sink_generalizes() {
        let sink = |z: &[f64; 2]| [-z[0], -z[1]];
        let demos: Vec<_> = [[1.0, 0.5], [-0.8, 1.0], [0.6, -0.9], [-1.0, -0.7]]
            .iter()
            .map(|&z0| demo_from_field(z0, sink, 100))
            .collect();
        let opts = FitOptions {
            num_centers: 30,
            bandwidth: 0.3,
            ridge: 1e-6,
            seed: 1,
        };
        let (model, _) = fit_rbf(&demos, &opts).unwrap();
        let held_out = demo_from_field([0.9, 0.9], sink, 37);
        let mse = held_out
            .states()
            .iter()
            .zip(held_out.velocities().unwrap())
            .map(|(z, v)| (&model.eval(z).unwrap() - v).norm_squared())
            .sum::<f64>()
            / held_out.len() as f64;
        assert!(mse < 1e-3, "mse {mse}");
        let f = model.eval(&sv(&[0.5, -0.5])).unwrap();
        assert!(f.distance(&sv(&[-0.5, 0.5])) < 2e-2);
    }

    #[test]
    fn zero_model_and_dimension_check() {
        let dom = DomainBox::new(sv(&[-1.0, -1.0]), sv(&[1.0, 1.0])).unwrap();
        let m = VectorFieldModel::zero(vec![sv(&[0.0, 0.0])], 0.5, dom);
        assert!(m.eval(&sv(&[0.3, 0.1])).unwrap().is_zero());
        assert!(matches!(
            m.eval(&sv(&[0.3])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ridge_zero_singular_advises_regularization() {
        // all samples identical: RBF columns collinear with the bias column
        let demo = Trajectory::new(
            unit_grid::<f64>(10),
            vec![sv(&[0.5, 0.5]); 10],
            Some(vec![sv(&[1.0, 0.0]); 10]),
        );
        // strictly increasing times but repeated states is a valid trajectory
        let demo = demo.unwrap();
        let opts = FitOptions {
            num_centers: 3,
            bandwidth: 0.2,
            ridge: 0.0,
            seed: 0,
        };
        let err = fit_rbf(&[demo], &opts).unwrap_err();
        assert!(err.to_string().contains("ridge"), "{err}");
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let demos: Vec<_> = [[1.0, 0.5], [-0.8, 1.0]]
            .iter()
            .map(|&z0| demo_from_field(z0, |z| [-z[1] - 0.3 * z[0], z[0] * z[0]], 60))
            .collect();
        let (model, _) = fit_rbf(&demos, &FitOptions::default().with_centers(12)).unwrap();
        let z = sv(&[0.2, 0.4]);
        let jac = model.jacobian(&z);
        let h = 1e-6;
        for i in 0..2 {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[i] += h;
            zm[i] -= h;
            let col = (&model.eval(&zp).unwrap() - &model.eval(&zm).unwrap()).scaled(0.5 / h);
            for m in 0..2 {
                assert!((col[m] - jac[(m, i)]).abs() < 1e-6);
            }
        }
    }

    impl FitOptions {
        fn with_centers(mut self, k: usize) -> Self {
            self.num_centers = k;
            self
        }
    }
}
