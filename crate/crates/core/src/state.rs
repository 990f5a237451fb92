//! Task-space state vectors and the compact operating box.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// A point (or velocity, error, input) in the `d`-dimensional task space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateVec<T>(Vec<T>);

impl<T: Scalar> StateVec<T> {
    pub fn new(components: Vec<T>) -> Self {
        Self(components)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![T::zero(); dim])
    }

    pub fn from_f64(components: &[f64]) -> Self {
        Self(components.iter().map(|&x| lit(x)).collect())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(&a, &b)| a * b).sum()
    }

    pub fn norm_squared(&self) -> T {
        self.dot(self)
    }

    pub fn norm(&self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn distance(&self, other: &Self) -> T {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }

    pub fn scaled(&self, s: T) -> Self {
        Self(self.0.iter().map(|&x| x * s).collect())
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: T, other: &Self) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, &b) in self.0.iter_mut().zip(&other.0) {
            *a += s * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected,
                found: self.dim(),
            })
        }
    }

    pub fn check_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn cast<U: Scalar>(&self) -> StateVec<U> {
        StateVec(
            self.0
                .iter()
                .map(|x| U::from_f64(x.to_f64().unwrap_or(f64::NAN)).unwrap_or(U::nan()))
                .collect(),
        )
    }
}

impl<T> Index<usize> for StateVec<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T> IndexMut<usize> for StateVec<T> {
    fn index_mut(&mut self, i: usize) -> &mut T {
        &mut self.0[i]
    }
}

impl<T> From<Vec<T>> for StateVec<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

impl<'a, T: Scalar> Add<&'a StateVec<T>> for &'a StateVec<T> {
    type Output = StateVec<T>;
    fn add(self, rhs: &'a StateVec<T>) -> StateVec<T> {
        debug_assert_eq!(self.dim(), rhs.dim());
        StateVec(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a + b).collect())
    }
}

impl<'a, T: Scalar> Sub<&'a StateVec<T>> for &'a StateVec<T> {
    type Output = StateVec<T>;
    fn sub(self, rhs: &'a StateVec<T>) -> StateVec<T> {
        debug_assert_eq!(self.dim(), rhs.dim());
        StateVec(self.0.iter().zip(&rhs.0).map(|(&a, &b)| a - b).collect())
    }
}

impl<T: Scalar> Add for StateVec<T> {
    type Output = StateVec<T>;
    fn add(mut self, rhs: StateVec<T>) -> StateVec<T> {
        self += &rhs;
        self
    }
}

impl<T: Scalar> Sub for StateVec<T> {
    type Output = StateVec<T>;
    fn sub(mut self, rhs: StateVec<T>) -> StateVec<T> {
        self -= &rhs;
        self
    }
}

impl<T: Scalar> AddAssign<&StateVec<T>> for StateVec<T> {
    fn add_assign(&mut self, rhs: &StateVec<T>) {
        debug_assert_eq!(self.dim(), rhs.dim());
        for (a, &b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
    }
}

impl<T: Scalar> SubAssign<&StateVec<T>> for StateVec<T> {
    fn sub_assign(&mut self, rhs: &StateVec<T>) {
        debug_assert_eq!(self.dim(), rhs.dim());
        for (a, &b) in self.0.iter_mut().zip(&rhs.0) {
            *a -= b;
        }
    }
}

impl<T: Scalar> Mul<T> for &StateVec<T> {
    type Output = StateVec<T>;
    fn mul(self, s: T) -> StateVec<T> {
        self.scaled(s)
    }
}

impl<T: Scalar> Neg for &StateVec<T> {
    type Output = StateVec<T>;
    fn neg(self) -> StateVec<T> {
        StateVec(self.0.iter().map(|&x| -x).collect())
    }
}

/// Axis-aligned compact operating set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainBox<T> {
    pub lower: StateVec<T>,
    pub upper: StateVec<T>,
}

impl<T: Scalar> DomainBox<T> {
    pub fn new(lower: StateVec<T>, upper: StateVec<T>) -> Result<Self> {
        lower.check_dim(upper.dim())?;
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidConfig(
                "domain box requires lower < upper componentwise".into(),
            ));
        }
        Ok(Self { lower, upper })
    }

    /// Smallest box containing all points. Degenerate axes get a unit-width extent.
    pub fn bounding<'a, I>(points: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a StateVec<T>>,
    {
        let mut it = points.into_iter();
        let first = it.next().ok_or(Error::Empty("bounding box points"))?;
        let mut lower = first.clone();
        let mut upper = first.clone();
        for p in it {
            p.check_dim(lower.dim())?;
            for k in 0..p.dim() {
                lower[k] = lower[k].min(p[k]);
                upper[k] = upper[k].max(p[k]);
            }
        }
        let half = lit::<T>(0.5);
        for k in 0..lower.dim() {
            if upper[k] - lower[k] <= T::epsilon() {
                lower[k] -= half;
                upper[k] += half;
            }
        }
        Self::new(lower, upper)
    }

    /// Box scaled about its center by `factor` (1.1 inflates by 10%).
    pub fn inflated(&self, factor: T) -> Self {
        let two = lit::<T>(2.0);
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        for k in 0..lower.dim() {
            let mid = (self.lower[k] + self.upper[k]) / two;
            let half = (self.upper[k] - self.lower[k]) / two * factor;
            lower[k] = mid - half;
            upper[k] = mid + half;
        }
        Self { lower, upper }
    }

    pub fn contains(&self, z: &StateVec<T>) -> bool {
        z.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(x, (l, u))| l <= x && x <= u)
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    /// Largest side length; used as the characteristic scale of the workspace.
    pub fn max_extent(&self) -> T {
        self.lower
            .iter()
            .zip(self.upper.iter())
            .map(|(&l, &u)| u - l)
            .fold(T::zero(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let a = StateVec::<f64>::from_f64(&[3.0, 4.0]);
        let b = StateVec::<f64>::from_f64(&[1.0, -1.0]);
        assert_eq!(a.norm(), 5.0);
        assert_eq!((&a - &b).as_slice(), &[2.0, 5.0]);
        assert_eq!((&a + &b).as_slice(), &[4.0, 3.0]);
        assert_eq!(a.dot(&b), -1.0);
        assert_eq!(a.distance(&b), (4.0f64 + 25.0).sqrt());
    }

    #[test]
    fn box_inflation_and_membership() {
        let b = DomainBox::new(
            StateVec::<f64>::from_f64(&[0.0, 0.0]),
            StateVec::from_f64(&[2.0, 1.0]),
        )
        .unwrap();
        let big = b.inflated(1.1);
        assert!((big.lower[0] + 0.1).abs() < 1e-12);
        assert!((big.upper[1] - 1.05).abs() < 1e-12);
        assert!(b.contains(&StateVec::from_f64(&[1.0, 0.5])));
        assert!(!b.contains(&StateVec::from_f64(&[2.5, 0.5])));
    }

    #[test]
    fn box_rejects_inverted_bounds() {
        let r = DomainBox::new(
            StateVec::<f64>::from_f64(&[1.0]),
            StateVec::from_f64(&[0.0]),
        );
        assert!(r.is_err());
    }
}
