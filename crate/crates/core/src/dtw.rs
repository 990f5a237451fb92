//! Dynamic time warping with an optional Sakoe-Chiba band.
//!
//! Indices in returned warping paths are 0-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::StateVec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DtwParams {
    /// Sakoe-Chiba half-width `w`; `None` is unconstrained.
    #[serde(default)]
    pub band: Option<usize>,
}

impl DtwParams {
    pub fn unbanded() -> Self {
        Self { band: None }
    }

    pub fn banded(w: usize) -> Self {
        Self { band: Some(w) }
    }
}

fn validate<T: Scalar>(a: &[StateVec<T>], b: &[StateVec<T>], params: DtwParams) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("DTW sequence"));
    }
    let d = a[0].dim();
    for s in a.iter().chain(b) {
        s.check_dim(d)?;
    }
    if let Some(w) = params.band {
        if a.len().abs_diff(b.len()) > w {
            return Err(Error::NoWarpingPath {
                len_a: a.len(),
                len_b: b.len(),
                band: w,
            });
        }
    }
    Ok(())
}

/// Column range `j ∈ [lo, hi]` (1-based DP coordinates) allowed in row `i`.
#[inline]
fn band_range(i: usize, n: usize, band: Option<usize>) -> (usize, usize) {
    match band {
        None => (1, n),
        Some(w) => (i.saturating_sub(w).max(1), (i + w).min(n)),
    }
}

/// `D(M, N)` of the recurrence `D(i,j) = ‖a_i − b_j‖ + min{D(i−1,j), D(i,j−1), D(i−1,j−1)}`.
pub fn dtw_distance<T: Scalar>(a: &[StateVec<T>], b: &[StateVec<T>], params: DtwParams) -> Result<T> {
    dtw_distance_counted(a, b, params).map(|(d, _)| d)
}

/// Like [`dtw_distance`], also returning the number of DP cells evaluated.
pub fn dtw_distance_counted<T: Scalar>(
    a: &[StateVec<T>],
    b: &[StateVec<T>],
    params: DtwParams,
) -> Result<(T, usize)> {
    validate(a, b, params)?;
    let mut buf = DtwBuffer::default();
    Ok(buf.run(a, b, params.band))
}

/// Reusable rolling-row storage for repeated DTW evaluations.
#[derive(Clone, Debug, Default)]
pub struct DtwBuffer<T> {
    prev: Vec<T>,
    cur: Vec<T>,
}

impl<T: Scalar> DtwBuffer<T> {
    /// Unbanded DTW cost. Inputs must be non-empty and of equal dimension.
    pub fn unbanded(&mut self, a: &[StateVec<T>], b: &[StateVec<T>]) -> T {
        self.run(a, b, None).0
    }

    fn run(&mut self, a: &[StateVec<T>], b: &[StateVec<T>], band: Option<usize>) -> (T, usize) {
        let (m, n) = (a.len(), b.len());
        let inf = T::infinity();
        self.prev.clear();
        self.prev.resize(n + 1, inf);
        self.cur.clear();
        self.cur.resize(n + 1, inf);
        self.prev[0] = T::zero();
        let mut cells = 0usize;
        for i in 1..=m {
            let (lo, hi) = band_range(i, n, band);
            self.cur.fill(inf);
            for j in lo..=hi {
                let best = self.prev[j - 1].min(self.prev[j]).min(self.cur[j - 1]);
                self.cur[j] = a[i - 1].distance(&b[j - 1]) + best;
                cells += 1;
            }
            std::mem::swap(&mut self.prev, &mut self.cur);
        }
        (self.prev[n], cells)
    }
}

/// Optimal warping path by backtracking from `(M, N)` to `(1, 1)`.
///
/// Ties in the backtrack prefer the diagonal predecessor, then `(i−1, j)`,
/// then `(i, j−1)`.
pub fn dtw_path<T: Scalar>(
    a: &[StateVec<T>],
    b: &[StateVec<T>],
    params: DtwParams,
) -> Result<Vec<(usize, usize)>> {
    validate(a, b, params)?;
    let (m, n) = (a.len(), b.len());
    let width = n + 1;
    let inf = T::infinity();
    let mut dp = vec![inf; (m + 1) * width];
    dp[0] = T::zero();
    for i in 1..=m {
        let (lo, hi) = band_range(i, n, params.band);
        for j in lo..=hi {
            let best = dp[(i - 1) * width + j - 1]
                .min(dp[(i - 1) * width + j])
                .min(dp[i * width + j - 1]);
            dp[i * width + j] = a[i - 1].distance(&b[j - 1]) + best;
        }
    }
    let mut path = Vec::with_capacity(m + n);
    let (mut i, mut j) = (m, n);
    loop {
        path.push((i - 1, j - 1));
        if i == 1 && j == 1 {
            break;
        }
        let diag = dp[(i - 1) * width + j - 1];
        let up = dp[(i - 1) * width + j];
        let left = dp[i * width + j - 1];
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    path.reverse();
    Ok(path)
}

/// Sum of local costs along a warping path.
pub fn path_cost<T: Scalar>(a: &[StateVec<T>], b: &[StateVec<T>], path: &[(usize, usize)]) -> T {
    path.iter().map(|&(i, j)| a[i].distance(&b[j])).sum()
}
