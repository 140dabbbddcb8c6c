//! Double-word accumulation with a fixed pairwise reduction tree.

use crate::scalar::Real;

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TwoSum<T> {
    pub hi: T,
    pub lo: T,
}

#[inline]
fn two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn fast_two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    (s, b - (s - a))
}

impl<T: Real> TwoSum<T> {
    pub fn from_value(x: T) -> Self {
        Self { hi: x, lo: T::zero() }
    }

    pub fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = fast_two_sum(s, e);
        Self { hi, lo }
    }

    pub fn value(self) -> T {
        self.hi + self.lo
    }
}

/// Pairwise double-word sum; the tree depends only on `values.len()`.
pub fn tree_sum<T: Real>(values: &[T]) -> T {
    fn rec<T: Real>(v: &[T]) -> TwoSum<T> {
        match v.len() {
            0 => TwoSum::default(),
            1 => TwoSum::from_value(v[0]),
            n => {
                let (a, b) = v.split_at(n / 2);
                rec(a).add(rec(b))
            }
        }
    }
    rec(values).value()
}
