//! Synthetic demonstration generators.
//!
//! Each shape produces a family of 2-D demonstrations around a base curve.
//! The non-periodic shapes (`line`, `sine`, `angle`) decelerate into an
//! attractor at the origin; `circle` is traversed at constant speed and
//! closes on itself.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use crate::state::StateVec;
use crate::trajectory::Trajectory;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Line,
    Sine,
    Angle,
    Circle,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 4] = [Self::Line, Self::Sine, Self::Angle, Self::Circle];

    pub fn name(self) -> &'static str {
        match self {
            Self::Line => "line",
            Self::Sine => "sine",
            Self::Angle => "angle",
            Self::Circle => "circle",
        }
    }

    pub fn is_periodic(self) -> bool {
        matches!(self, Self::Circle)
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown shape `{s}`")))
    }
}

/// Generator parameters. `frequency` is the number of sine cycles or circle
/// revolutions; it has no effect on `line` and `angle`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeParams {
    pub kind: ShapeKind,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_frequency")]
    pub frequency: f64,
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default = "default_demos")]
    pub demos: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_amplitude() -> f64 {
    1.0
}
fn default_frequency() -> f64 {
    1.0
}
fn default_noise() -> f64 {
    0.03
}
fn default_demos() -> usize {
    4
}
fn default_samples() -> usize {
    200
}

impl ShapeParams {
    pub fn new(kind: ShapeKind) -> Self {
        Self {
            kind,
            amplitude: default_amplitude(),
            frequency: default_frequency(),
            noise: default_noise(),
            demos: default_demos(),
            samples: default_samples(),
        }
    }

    /// Point on the base curve at path parameter `s ∈ [0, 1]`.
    pub fn base_curve(&self, s: f64) -> [f64; 2] {
        let a = self.amplitude;
        match self.kind {
            ShapeKind::Line => [-a * (1.0 - s), 0.5 * a * (1.0 - s)],
            ShapeKind::Sine => [
                -a * (1.0 - s),
                0.4 * a * (2.0 * PI * self.frequency * s).sin(),
            ],
            ShapeKind::Angle => {
                let (p0, p1) = ([-a, -0.2 * a], [-0.45 * a, 0.6 * a]);
                // corner at 45% of the path parameter
                if s < 0.45 {
                    let w = s / 0.45;
                    [p0[0] + w * (p1[0] - p0[0]), p0[1] + w * (p1[1] - p0[1])]
                } else {
                    let w = (s - 0.45) / 0.55;
                    [p1[0] * (1.0 - w), p1[1] * (1.0 - w)]
                }
            }
            ShapeKind::Circle => {
                let th = 2.0 * PI * self.frequency * s;
                [0.5 * a * th.cos(), 0.5 * a * th.sin()]
            }
        }
    }

    /// Path parameter as a function of normalized time.
    fn progress(&self, t: f64) -> f64 {
        if self.kind.is_periodic() {
            t
        } else {
            t * (2.0 - t)
        }
    }

    /// Draws `demos` demonstrations. Each is the base curve plus a smooth
    /// random deformation of size `noise * amplitude` that vanishes at the
    /// end point, sampled at `samples` uniform times over a random duration.
    pub fn generate<T: Scalar>(&self, seed: u64) -> Result<Vec<Trajectory<T>>> {
        if self.demos == 0 {
            return Err(Error::InvalidConfig("shape needs at least one demo".into()));
        }
        if self.samples < 2 {
            return Err(Error::InvalidConfig("shape needs at least 2 samples".into()));
        }
        if !(self.amplitude > 0.0) {
            return Err(Error::InvalidConfig("shape amplitude must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = self.noise * self.amplitude;
        (0..self.demos)
            .map(|_| {
                let mut normal = || -> f64 { rng.sample(StandardNormal) };
                let offset = [scale * normal(), scale * normal()];
                let bump = [scale * normal(), scale * normal()];
                let duration = 1.0 + 0.5 * rng.random::<f64>();
                let m = self.samples;
                let mut times = Vec::with_capacity(m);
                let mut states = Vec::with_capacity(m);
                for k in 0..m {
                    let t = k as f64 / (m - 1) as f64;
                    let s = self.progress(t);
                    let p = self.base_curve(s);
                    let decay = 1.0 - s;
                    let hump = (PI * s).sin();
                    times.push(lit::<T>(t * duration));
                    states.push(StateVec::from_f64(&[
                        p[0] + decay * offset[0] + hump * bump[0],
                        p[1] + decay * offset[1] + hump * bump[1],
                    ]));
                }
                Trajectory::new(times, states, None)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        for k in ShapeKind::ALL {
            assert_eq!(k.name().parse::<ShapeKind>().unwrap(), k);
        }
        assert!("blob".parse::<ShapeKind>().is_err());
    }

    #[test]
    fn generation_is_seeded() {
        let p = ShapeParams::new(ShapeKind::Sine);
        let a: Vec<Trajectory<f64>> = p.generate(7).unwrap();
        let b: Vec<Trajectory<f64>> = p.generate(7).unwrap();
        let c: Vec<Trajectory<f64>> = p.generate(8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 4);
    }

    #[test]
    fn non_periodic_shapes_end_at_origin() {
        for k in [ShapeKind::Line, ShapeKind::Sine, ShapeKind::Angle] {
            let demos: Vec<Trajectory<f64>> = ShapeParams::new(k).generate(1).unwrap();
            for d in &demos {
                assert!(d.last().norm() < 1e-9, "{k}");
            }
        }
    }
}
