use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::scalar::{from_real, to_real, Field, Real};

/// Affine function `y ↦ ⟨gradient, y⟩ + constant`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AffineForm<S> {
    pub gradient: Vec<S>,
    pub constant: S,
}

impl<S: Clone + Num> AffineForm<S> {
    pub fn new(gradient: Vec<S>, constant: S) -> Self {
        Self { gradient, constant }
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(dim, S::zero())
    }

    pub fn constant(dim: usize, c: S) -> Self {
        Self {
            gradient: vec![S::zero(); dim],
            constant: c,
        }
    }

    /// `y ↦ ⟨xi, (y_1, …, y_r)⟩` on `R^dim`, pairing `xi ∈ R^r` with the
    /// first `r` coordinates.
    pub fn projected_pairing(dim: usize, xi: &[S]) -> Self {
        assert!(xi.len() <= dim, "pairing rank exceeds ambient dimension");
        let mut gradient = vec![S::zero(); dim];
        gradient[..xi.len()].clone_from_slice(xi);
        Self {
            gradient,
            constant: S::zero(),
        }
    }

    pub fn coordinate(dim: usize, j: usize) -> Self {
        let mut gradient = vec![S::zero(); dim];
        gradient[j] = S::one();
        Self {
            gradient,
            constant: S::zero(),
        }
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn eval(&self, y: &[S]) -> S {
        debug_assert_eq!(y.len(), self.gradient.len());
        self.gradient
            .iter()
            .zip(y)
            .fold(self.constant.clone(), |acc, (g, x)| acc + g.clone() * x.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            gradient: self
                .gradient
                .iter()
                .zip(&other.gradient)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
            constant: self.constant.clone() + other.constant.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(S::zero() - S::one()))
    }

    pub fn scale(&self, a: S) -> Self {
        Self {
            gradient: self.gradient.iter().map(|g| g.clone() * a.clone()).collect(),
            constant: self.constant.clone() * a,
        }
    }

    pub fn shift(&self, b: S) -> Self {
        Self {
            gradient: self.gradient.clone(),
            constant: self.constant.clone() + b,
        }
    }
}

impl<F: Field> AffineForm<F> {
    pub fn to_real<T: Real>(&self) -> AffineForm<T> {
        AffineForm {
            gradient: self.gradient.iter().map(to_real).collect(),
            constant: to_real(&self.constant),
        }
    }
}

impl<T: Real> AffineForm<T> {
    /// Evaluates at an exact point; the point is rounded to `T` first.
    pub fn eval_at<F: Field>(&self, y: &[F]) -> T {
        self.gradient
            .iter()
            .zip(y)
            .fold(self.constant, |acc, (g, x)| acc + *g * to_real::<F, T>(x))
    }

    /// Exact image in `F` (binary rationals convert without loss).
    pub fn to_field<F: Field>(&self) -> Option<AffineForm<F>> {
        Some(AffineForm {
            gradient: self
                .gradient
                .iter()
                .map(|g| from_real(*g))
                .collect::<Option<Vec<F>>>()?,
            constant: from_real(self.constant)?,
        })
    }
}
