//! Scripted disturbance signals on the normalized time axis `[0, 1]`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{lit, Scalar};
use crate::state::StateVec;

/// Where a disturbance enters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Task-level discrepancy σ (perfect regime).
    Task,
    /// `d_m`, added to the plant's velocity rate.
    Matched,
    /// `d_um`, added to the plant's position rate.
    Unmatched,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct SineComponent<T> {
    pub amplitude: T,
    /// Cycles per unit normalized time.
    pub frequency: T,
    #[serde(default = "zero")]
    pub phase: T,
}

fn zero<T: Scalar>() -> T {
    T::zero()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub enum Signal<T> {
    Constant {
        amplitude: Vec<T>,
    },
    /// `amplitude · 1[t ≥ start]`
    Step {
        amplitude: Vec<T>,
        start: T,
    },
    /// `amplitude` on each right-open window `[start, stop)`.
    PulseTrain {
        amplitude: Vec<T>,
        windows: Vec<[T; 2]>,
    },
    /// Per axis `Σ_j a_j sin(2π f_j t + φ_j)`.
    MultiSine {
        axes: Vec<Vec<SineComponent<T>>>,
    },
}

impl<T: Scalar> Signal<T> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Constant { amplitude }
            | Self::Step { amplitude, .. }
            | Self::PulseTrain { amplitude, .. } => amplitude.len(),
            Self::MultiSine { axes } => axes.len(),
        }
    }

    /// Two components per axis at 3 and 7 cycles with amplitudes `0.8·scale`
    /// and `0.4·scale`.
    pub fn default_multi_sine(scale: &[T]) -> Self {
        Self::MultiSine {
            axes: scale
                .iter()
                .map(|&s| {
                    vec![
                        SineComponent {
                            amplitude: lit::<T>(0.8) * s,
                            frequency: lit(3.0),
                            phase: T::zero(),
                        },
                        SineComponent {
                            amplitude: lit::<T>(0.4) * s,
                            frequency: lit(7.0),
                            phase: T::zero(),
                        },
                    ]
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[T]| v.iter().all(|x| x.is_finite());
        let ok = match self {
            Self::Constant { amplitude } => finite(amplitude),
            Self::Step { amplitude, start } => finite(amplitude) && start.is_finite(),
            Self::PulseTrain { amplitude, windows } => {
                finite(amplitude)
                    && windows.iter().all(|&[a, b]| {
                        a >= T::zero() && b <= T::one() && a < b
                    })
            }
            Self::MultiSine { axes } => axes.iter().flatten().all(|c| {
                c.amplitude.is_finite() && c.frequency.is_finite() && c.phase.is_finite()
            }),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(
                "disturbance parameters must be finite and pulse windows within [0, 1]".into(),
            ))
        }
    }

    pub fn eval(&self, t: T) -> StateVec<T> {
        match self {
            Self::Constant { amplitude } => StateVec::new(amplitude.clone()),
            Self::Step { amplitude, start } => {
                if t >= *start {
                    StateVec::new(amplitude.clone())
                } else {
                    StateVec::zeros(amplitude.len())
                }
            }
            Self::PulseTrain { amplitude, windows } => {
                if windows.iter().any(|&[a, b]| a <= t && t < b) {
                    StateVec::new(amplitude.clone())
                } else {
                    StateVec::zeros(amplitude.len())
                }
            }
            Self::MultiSine { axes } => StateVec::new(
                axes.iter()
                    .map(|comps| {
                        comps
                            .iter()
                            .map(|c| c.amplitude * (lit::<T>(TAU) * c.frequency * t + c.phase).sin())
                            .sum()
                    })
                    .collect(),
            ),
        }
    }

    /// Normalized-time intervals on which the signal can be non-zero.
    pub fn active_windows(&self) -> Vec<[T; 2]> {
        match self {
            Self::Constant { .. } | Self::MultiSine { .. } => vec![[T::zero(), T::one()]],
            Self::Step { start, .. } => vec![[start.max(T::zero()), T::one()]],
            Self::PulseTrain { windows, .. } => windows.clone(),
        }
    }

    /// `sup_t ‖signal(t)‖` (multi-sine bounded by the sum of amplitudes).
    pub fn norm_bound(&self) -> T {
        match self {
            Self::Constant { amplitude }
            | Self::Step { amplitude, .. }
            | Self::PulseTrain { amplitude, .. } => {
                amplitude.iter().map(|&a| a * a).sum::<T>().sqrt()
            }
            Self::MultiSine { axes } => axes
                .iter()
                .map(|c| {
                    let s: T = c.iter().map(|c| c.amplitude.abs()).sum();
                    s * s
                })
                .sum::<T>()
                .sqrt(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct DisturbanceSpec<T> {
    pub channel: Channel,
    pub signal: Signal<T>,
}

impl<T: Scalar> DisturbanceSpec<T> {
    pub fn new(channel: Channel, signal: Signal<T>) -> Self {
        Self { channel, signal }
    }
}

/// Evaluates one disturbance at normalized time `t`.
pub fn eval_disturbance<T: Scalar>(spec: &DisturbanceSpec<T>, t: T) -> StateVec<T> {
    spec.signal.eval(t)
}

/// Window over which the executed state is frozen (robot held in place).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldWindow<T> {
    pub start: T,
    pub stop: T,
}

impl<T: Scalar> HoldWindow<T> {
    pub fn contains(&self, t: T) -> bool {
        self.start <= t && t < self.stop
    }
}

/// Every disturbance acting on one run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct Disturbances<T> {
    pub specs: Vec<DisturbanceSpec<T>>,
    /// Optional state-dependent task term: `σ(z, t) = Σ task signals(t) + G·z`.
    pub task_gain: Option<Matrix<T>>,
    pub hold: Option<HoldWindow<T>>,
}

impl<T: Scalar> Disturbances<T> {
    pub fn none() -> Self {
        Self {
            specs: Vec::new(),
            task_gain: None,
            hold: None,
        }
    }

    pub fn with(mut self, spec: DisturbanceSpec<T>) -> Self {
        self.specs.push(spec);
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        for s in &self.specs {
            s.signal.validate()?;
            if s.signal.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.signal.dim(),
                });
            }
        }
        if let Some(g) = &self.task_gain {
            if g.rows() != dim || g.cols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: g.rows(),
                });
            }
        }
        if let Some(h) = &self.hold {
            if !(h.start < h.stop) {
                return Err(Error::InvalidConfig("hold window needs start < stop".into()));
            }
        }
        Ok(())
    }

    pub fn has_channel(&self, channel: Channel) -> bool {
        self.specs.iter().any(|s| s.channel == channel)
            || (channel == Channel::Task && self.task_gain.is_some())
    }

    /// Sum of the time signals routed to `channel`.
    pub fn eval_channel(&self, channel: Channel, t: T, dim: usize) -> StateVec<T> {
        let mut out = StateVec::zeros(dim);
        for s in self.specs.iter().filter(|s| s.channel == channel) {
            out += &s.signal.eval(t);
        }
        out
    }

    /// Task-level σ(z, t).
    pub fn sigma(&self, z: &StateVec<T>, t: T) -> StateVec<T> {
        let mut out = self.eval_channel(Channel::Task, t, z.dim());
        if let Some(g) = &self.task_gain {
            out += &g.mul_vec(z);
        }
        out
    }

    pub fn is_held(&self, t: T) -> bool {
        self.hold.is_some_and(|h| h.contains(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_signal() {
        let s = Signal::Constant {
            amplitude: vec![0.5, -0.3],
        };
        for t in [0.0, 0.37, 1.0] {
            assert_eq!(s.eval(t).as_slice(), &[0.5, -0.3]);
        }
    }

    #[test]
    fn pulse_is_right_open() {
        let s = Signal::PulseTrain {
            amplitude: vec![1.0, 0.0],
            windows: vec![[0.2, 0.4]],
        };
        assert!(s.eval(0.1).is_zero());
        assert_eq!(s.eval(0.3).as_slice(), &[1.0, 0.0]);
        assert!(s.eval(0.4).is_zero());
    }

    #[test]
    fn step_turns_on_at_start() {
        let s = Signal::Step {
            amplitude: vec![2.0],
            start: 0.5,
        };
        assert!(s.eval(0.49).is_zero());
        assert_eq!(s.eval(0.5)[0], 2.0);
    }

    #[test]
    fn multi_sine_sum() {
        let s = Signal::<f64>::default_multi_sine(&[1.0]);
        // 0.8 sin(1.5π) + 0.4 sin(3.5π) = -1.2
        assert!((s.eval(0.25)[0] + 1.2).abs() < 1e-12);
        assert!((s.norm_bound() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn routing_and_state_gain() {
        let d = Disturbances::none()
            .with(DisturbanceSpec::new(
                Channel::Task,
                Signal::Constant {
                    amplitude: vec![1.0, 0.0],
                },
            ))
            .with(DisturbanceSpec::new(
                Channel::Matched,
                Signal::Constant {
                    amplitude: vec![0.0, 5.0],
                },
            ));
        let d = Disturbances {
            task_gain: Some(Matrix::from_diagonal(&[0.1, 0.1])),
            ..d
        };
        let z = StateVec::<f64>::from_f64(&[1.0, 2.0]);
        let s: StateVec<f64> = d.sigma(&z, 0.5);
        assert!((s[0] - 1.1).abs() < 1e-15 && (s[1] - 0.2).abs() < 1e-15);
        assert_eq!(d.eval_channel(Channel::Matched, 0.0, 2).as_slice(), &[0.0, 5.0]);
        assert!(d.eval_channel(Channel::Unmatched, 0.0, 2).is_zero());
        assert!(!d.has_channel(Channel::Unmatched));
    }

    #[test]
    fn invalid_pulse_window_rejected() {
        let s = Signal::PulseTrain {
            amplitude: vec![1.0],
            windows: vec![[0.5, 1.2]],
        };
        assert!(s.validate().is_err());
    }
}
