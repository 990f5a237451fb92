//! Time-stamped state sequences and demonstration preprocessing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Scalar};
use crate::state::StateVec;

/// Time-stamped sequence of task-space states, optionally with velocities.
///
/// Demonstrations, target rollouts and executed runs all use this type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    times: Vec<T>,
    states: Vec<StateVec<T>>,
    velocities: Option<Vec<StateVec<T>>>,
}

impl<T: Scalar> Trajectory<T> {
    /// Validates lengths, dimensions, finiteness and strict time monotonicity.
    pub fn new(
        times: Vec<T>,
        states: Vec<StateVec<T>>,
        velocities: Option<Vec<StateVec<T>>>,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidDemonstration("trajectory has no samples".into()));
        }
        if times.len() != states.len() {
            return Err(Error::InvalidDemonstration(format!(
                "{} timestamps for {} states",
                times.len(),
                states.len()
            )));
        }
        let d = states[0].dim();
        if d == 0 {
            return Err(Error::InvalidDemonstration("state dimension is zero".into()));
        }
        for s in &states {
            s.check_dim(d)?;
            s.check_finite("trajectory state")?;
        }
        if let Some(v) = &velocities {
            if v.len() != states.len() {
                return Err(Error::InvalidDemonstration(format!(
                    "{} velocities for {} states",
                    v.len(),
                    states.len()
                )));
            }
            for s in v {
                s.check_dim(d)?;
                s.check_finite("trajectory velocity")?;
            }
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("trajectory time"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidDemonstration(
                "timestamps are not strictly increasing".into(),
            ));
        }
        Ok(Self {
            times,
            states,
            velocities,
        })
    }

    /// Trajectory on the uniform grid `t_k = k * dt`.
    pub fn on_uniform_grid(dt: T, states: Vec<StateVec<T>>) -> Result<Self> {
        let times = (0..states.len()).map(|k| from_usize::<T>(k) * dt).collect();
        Self::new(times, states, None)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn states(&self) -> &[StateVec<T>] {
        &self.states
    }

    pub fn velocities(&self) -> Option<&[StateVec<T>]> {
        self.velocities.as_deref()
    }

    pub fn first(&self) -> &StateVec<T> {
        &self.states[0]
    }

    pub fn last(&self) -> &StateVec<T> {
        &self.states[self.states.len() - 1]
    }

    pub fn into_states(self) -> Vec<StateVec<T>> {
        self.states
    }
}

/// Uniform grid of `n` points on `[0, 1]`.
pub fn unit_grid<T: Scalar>(n: usize) -> Vec<T> {
    let last = from_usize::<T>(n - 1);
    (0..n).map(|i| from_usize::<T>(i) / last).collect()
}

/// Resamples a demonstration onto `n` uniform samples of normalized time
/// `[0, 1]`. States are linearly interpolated; velocities are recomputed by
/// central differences (one-sided at the ends) per unit normalized time.
pub fn resample_demo<T: Scalar>(demo: &Trajectory<T>, n: usize) -> Result<Trajectory<T>> {
    if demo.len() < 2 {
        return Err(Error::InvalidDemonstration(format!(
            "need at least 2 samples to resample, got {}",
            demo.len()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidDemonstration(format!(
            "resampling grid needs at least 2 points, got {n}"
        )));
    }
    let t0 = demo.times[0];
    let span = demo.times[demo.len() - 1] - t0;
    let norm: Vec<T> = demo.times.iter().map(|&t| (t - t0) / span).collect();
    let grid = unit_grid::<T>(n);

    let states: Vec<StateVec<T>> = grid
        .iter()
        .map(|&u| {
            // segment j with norm[j] <= u < norm[j+1]
            let j = norm
                .partition_point(|&s| s <= u)
                .saturating_sub(1)
                .min(norm.len() - 2);
            let w = (u - norm[j]) / (norm[j + 1] - norm[j]);
            if w.is_zero() {
                return demo.states[j].clone();
            }
            if w == T::one() {
                return demo.states[j + 1].clone();
            }
            let mut s = demo.states[j].scaled(T::one() - w);
            s.axpy(w, &demo.states[j + 1]);
            s
        })
        .collect();

    let velocities = finite_difference_velocities(&grid, &states);
    Trajectory::new(grid, states, Some(velocities))
}

/// Central differences in the interior, forward/backward at the ends.
pub fn finite_difference_velocities<T: Scalar>(
    times: &[T],
    states: &[StateVec<T>],
) -> Vec<StateVec<T>> {
    let n = states.len();
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            (&states[b] - &states[a]).scaled(T::one() / (times[b] - times[a]))
        })
        .collect()
}

/// Componentwise mean of the first state of each demonstration.
pub fn mean_start<T: Scalar>(demos: &[Trajectory<T>]) -> Result<StateVec<T>> {
    let first = demos.first().ok_or(Error::Empty("demonstration list"))?;
    let d = first.dim();
    let mut acc = StateVec::zeros(d);
    for demo in demos {
        demo.first().check_dim(d)?;
        acc += demo.first();
    }
    Ok(acc.scaled(T::one() / from_usize(demos.len())))
}

/// Reads a demonstration CSV with header `t,x1,...,xd[,v1,...,vd]`.
pub fn read_demo_csv<T: Scalar>(path: &Path) -> Result<Trajectory<T>> {
    let display = path.display().to_string();
    let parse_err = |message: String| Error::Parse {
        path: display.clone(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| parse_err(e.to_string()))?.clone();
    if headers.get(0) != Some("t") {
        return Err(parse_err("first column must be `t`".into()));
    }
    let xs = headers.iter().filter(|h| h.starts_with('x')).count();
    let vs = headers.iter().filter(|h| h.starts_with('v')).count();
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=xs).map(|i| format!("x{i}")))
        .chain((1..=vs).map(|i| format!("v{i}")))
        .collect();
    if xs == 0 || (vs != 0 && vs != xs) || headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(parse_err(format!(
            "header must be t,x1..xd[,v1..vd]; got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut vels = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(format!("row {}: {e}", line + 2)))?;
        if vals.len() != expected.len() {
            return Err(parse_err(format!("row {}: wrong column count", line + 2)));
        }
        times.push(lit(vals[0]));
        states.push(StateVec::from_f64(&vals[1..=xs]));
        if vs > 0 {
            vels.push(StateVec::from_f64(&vals[xs + 1..]));
        }
    }
    Trajectory::new(times, states, (vs > 0).then_some(vels)).map_err(|e| match e {
        Error::InvalidDemonstration(m) => Error::InvalidDemonstration(format!("{display}: {m}")),
        other => other,
    })
}

pub fn write_demo_csv<T: Scalar>(path: &Path, demo: &Trajectory<T>) -> Result<()> {
    let io_err = |e: csv::Error| Error::Io {
        path: path.display().to_string(),
        source: e.into(),
    };
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    let d = demo.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    if demo.velocities.is_some() {
        header.extend((1..=d).map(|i| format!("v{i}")));
    }
    w.write_record(&header).map_err(io_err)?;
    for k in 0..demo.len() {
        let mut row = vec![demo.times[k].to_string()];
        row.extend(demo.states[k].iter().map(ToString::to_string));
        if let Some(v) = &demo.velocities {
            row.extend(v[k].iter().map(ToString::to_string));
        }
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Loads every `*.csv` file of a directory, sorted by file name.
pub fn load_demo_dir<T: Scalar>(dir: &Path) -> Result<Vec<Trajectory<T>>> {
    let io_err = |e: std::io::Error| Error::Io {
        path: dir.display().to_string(),
        source: e,
    };
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidDemonstration(format!(
            "no demonstration CSV files in {}",
            dir.display()
        )));
    }
    files.iter().map(|f| read_demo_csv(f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(x: &[f64]) -> StateVec<f64> {
        StateVec::from_f64(x)
    }

    #[test]
    fn resample_straight_line() {
        let demo = Trajectory::new(
            vec![0.0, 1.0, 2.0],
            vec![sv(&[0.0, 0.0]), sv(&[0.5, 0.5]), sv(&[1.0, 1.0])],
            None,
        )
        .unwrap();
        let r = resample_demo(&demo, 5).unwrap();
        assert_eq!(r.len(), 5);
        for (k, s) in r.states().iter().enumerate() {
            let u = k as f64 / 4.0;
            assert!((s[0] - u).abs() < 1e-15 && (s[1] - u).abs() < 1e-15);
        }
        for v in &r.velocities().unwrap()[1..4] {
            assert!((v[0] - 1.0).abs() < 1e-12 && (v[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn resample_identity_on_uniform_grid() {
        let n = 7;
        let times = unit_grid::<f64>(n);
        let states: Vec<_> = times.iter().map(|&t| sv(&[t * t, (3.0 * t).sin()])).collect();
        let demo = Trajectory::new(times, states.clone(), None).unwrap();
        let r = resample_demo(&demo, n).unwrap();
        for (a, b) in r.states().iter().zip(&states) {
            assert!(a.distance(b) < 1e-12);
        }
    }

    #[test]
    fn resample_circle_from_nonuniform_samples() {
        // 50 nonuniform times on [0,1], then 1000-point grid
        let times: Vec<f64> = (0..50).map(|i| (i as f64 / 49.0).powf(1.3)).collect();
        let curve = |t: f64| {
            let a = 2.0 * std::f64::consts::PI * t;
            sv(&[a.sin(), a.cos()])
        };
        let demo = Trajectory::new(times.clone(), times.iter().map(|&t| curve(t)).collect(), None)
            .unwrap();
        let r = resample_demo(&demo, 1000).unwrap();
        // the normalized time of the resampled demo equals the original time here
        let max_err = r
            .times()
            .iter()
            .zip(r.states())
            .map(|(&t, s)| s.distance(&curve(t)))
            .fold(0.0, f64::max);
        assert!(max_err < 5e-3, "max error {max_err}");
    }

    #[test]
    fn resample_errors() {
        let one = Trajectory::new(vec![0.0], vec![sv(&[1.0])], None).unwrap();
        assert!(matches!(resample_demo(&one, 5), Err(Error::InvalidDemonstration(_))));
        let bad = Trajectory::new(vec![0.0, 0.0], vec![sv(&[1.0]), sv(&[2.0])], None);
        assert!(matches!(bad, Err(Error::InvalidDemonstration(_))));
    }

    #[test]
    fn mean_start_examples() {
        let mk = |p: &[f64]| Trajectory::new(vec![0.0, 1.0], vec![sv(p), sv(p)], None).unwrap();
        assert_eq!(mean_start(&[mk(&[0.0, 0.0])]).unwrap(), sv(&[0.0, 0.0]));
        assert_eq!(
            mean_start(&[mk(&[1.0, 0.0]), mk(&[-1.0, 0.0])]).unwrap(),
            sv(&[0.0, 0.0])
        );
        let m = mean_start(&[
            mk(&[1.0, 2.0]),
            mk(&[3.0, 4.0]),
            mk(&[5.0, 0.0]),
            mk(&[-1.0, 2.0]),
        ])
        .unwrap();
        assert_eq!(m, sv(&[2.0, 2.0]));
        assert!(matches!(mean_start::<f64>(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let demo = Trajectory::new(
            vec![0.0, 0.5, 1.0],
            vec![sv(&[0.0, 1.0]), sv(&[0.25, 0.75]), sv(&[1.0, 0.0])],
            Some(vec![sv(&[1.0, -1.0]); 3]),
        )
        .unwrap();
        let path = dir.path().join("d0.csv");
        write_demo_csv(&path, &demo).unwrap();
        let back: Trajectory<f64> = read_demo_csv(&path).unwrap();
        assert_eq!(back, demo);
        let all: Vec<Trajectory<f64>> = load_demo_dir(dir.path()).unwrap();
        assert_eq!(all.len(), 1);
    }

    #[test]
    fn csv_rejects_bad_header_and_empty_dir() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_demo_dir::<f64>(dir.path()).unwrap_err();
        assert!(err.to_string().contains(&dir.path().display().to_string()));
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "time,x1\n0,1\n").unwrap();
        assert!(matches!(read_demo_csv::<f64>(&path), Err(Error::Parse { .. })));
    }
}
