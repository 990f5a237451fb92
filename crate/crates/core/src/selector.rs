//! Windowed, forward-only DTW target selector.
//!
//! At each control step the recent execution history is compared (by
//! unbanded DTW) against target subsequences ending at every index of a
//! forward window; the best-matching end index becomes the new target.
//! Target indices are 0-based.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::dtw::DtwBuffer;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::state::StateVec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorConfig {
    /// Forward window `W`.
    pub window_w: usize,
    /// Execution history length `H`; the history holds the last `H + 1` states.
    pub history_h: usize,
    /// Target history `H'`; candidates hold up to `H' + 1` target states.
    pub target_history: usize,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            window_w: 50,
            history_h: 40,
            target_history: 40,
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_w == 0 || self.history_h == 0 || self.target_history == 0 {
            return Err(Error::InvalidConfig(
                "selector window, history and target history must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectorState {
    pub k_prev: usize,
    pub cfg: SelectorConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection<T> {
    pub k_new: usize,
    pub z_star: StateVec<T>,
    pub state: SelectorState,
}

/// Index of the target point nearest to `z0`, ties to the smallest index.
pub fn nearest_index<T: Scalar>(target: &[StateVec<T>], z0: &StateVec<T>) -> Result<usize> {
    if target.is_empty() {
        return Err(Error::Empty("target sequence"));
    }
    let mut best = (0, T::infinity());
    for (k, z) in target.iter().enumerate() {
        let d = z.distance(z0);
        if d < best.1 {
            best = (k, d);
        }
    }
    Ok(best.0)
}

impl SelectorState {
    pub fn new(cfg: SelectorConfig, k_prev: usize) -> Self {
        Self { k_prev, cfg }
    }

    /// State initialized at the target point nearest to `z0`.
    pub fn nearest<T: Scalar>(cfg: SelectorConfig, target: &[StateVec<T>], z0: &StateVec<T>) -> Result<Self> {
        Ok(Self::new(cfg, nearest_index(target, z0)?))
    }
}

/// Scans `k ∈ [k_prev, min(N−1, k_prev + W)]` and returns the index whose
/// candidate `target[max(0, k−H') ..= k]` has the smallest DTW distance to
/// `history`. Ties go to the smallest `k`.
pub fn select_target<T: Scalar>(
    st: &SelectorState,
    history: &[StateVec<T>],
    target: &[StateVec<T>],
) -> Result<Selection<T>> {
    select_target_with(st, history, target, &mut DtwBuffer::default())
}

/// [`select_target`] reusing a DTW buffer.
pub fn select_target_with<T: Scalar>(
    st: &SelectorState,
    history: &[StateVec<T>],
    target: &[StateVec<T>],
    buf: &mut DtwBuffer<T>,
) -> Result<Selection<T>> {
    if target.is_empty() {
        return Err(Error::Empty("target sequence"));
    }
    if history.is_empty() {
        return Err(Error::Empty("execution history"));
    }
    let d = target[0].dim();
    history[0].check_dim(d)?;
    let n = target.len();
    let start = st.k_prev.min(n - 1);
    let end = (start + st.cfg.window_w).min(n - 1);
    let mut best = (start, T::infinity());
    for k in start..=end {
        let from = k.saturating_sub(st.cfg.target_history);
        let cost = buf.unbanded(history, &target[from..=k]);
        if cost < best.1 {
            best = (k, cost);
        }
    }
    let k_new = best.0;
    Ok(Selection {
        k_new,
        z_star: target[k_new].clone(),
        state: SelectorState {
            k_prev: k_new,
            cfg: st.cfg,
        },
    })
}

/// Sliding buffer of the last `H + 1` executed states.
#[derive(Clone, Debug)]
pub struct History<T> {
    cap: usize,
    buf: VecDeque<StateVec<T>>,
}

impl<T: Scalar> History<T> {
    pub fn new(history_h: usize) -> Self {
        Self {
            cap: history_h + 1,
            buf: VecDeque::with_capacity(history_h + 1),
        }
    }

    pub fn push(&mut self, z: StateVec<T>) {
        if self.buf.len() == self.cap {
            self.buf.pop_front();
        }
        self.buf.push_back(z);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Oldest-first view; during warm-up this is every sample so far.
    pub fn as_slice(&mut self) -> &[StateVec<T>] {
        self.buf.make_contiguous()
    }
}
