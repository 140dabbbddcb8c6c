//! Divided differences of `t ↦ e^{−t}`.
//!
//! For nodes `t_0, …, t_N` the kernel evaluates
//!
//! ```text
//! E[t_0, …, t_N] = ∫_{Σ_N} e^{−⟨λ, t⟩} dλ = (−1)^N · (e^{−·})[t_0, …, t_N]
//! ```
//!
//! over the standard `N`-simplex, which is positive for any nodes. Sub-ranges
//! of the divided-difference table whose node spread is below the series
//! threshold are evaluated by a Taylor expansion about the midpoint; wider
//! ranges use the recurrence. Exactly repeated nodes use the confluent value
//! `e^{−t}/N!`.

use crate::scalar::{factorial, Real};

/// Evaluation route taken for a table entry or an integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DividedDifference,
    SeriesFallback,
    Subdivision,
}

/// Which route the kernel may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Series below the threshold, recurrence above it.
    Auto,
    /// Taylor series for every entry, regardless of spread.
    Series,
    /// Recurrence for every entry except exact ties.
    Recurrence,
}

#[derive(Clone, Copy, Debug)]
pub struct KernelValue<T> {
    pub value: T,
    pub abs_err: T,
    pub method: Method,
}

/// Tuning of the divided-difference kernel.
#[derive(Clone, Copy, Debug)]
pub struct KernelConfig<T> {
    /// Node spread below which the Taylor series is used.
    pub series_threshold: T,
    /// Series truncation: stop once the tail bound falls below this fraction of the sum.
    pub truncation: T,
    pub route: Route,
}

impl<T: Real> Default for KernelConfig<T> {
    fn default() -> Self {
        Self {
            series_threshold: T::one(),
            truncation: T::lit(1e-20),
            route: Route::Auto,
        }
    }
}

const MAX_SERIES_TERMS: usize = 400;

/// Taylor expansion of `E` about the midpoint `c` of the nodes:
/// `E = e^{−c} Σ_k (−1)^k h_k(δ) / (N + k)!`, with `h_k` the complete
/// homogeneous symmetric polynomial of the offsets `δ_i = t_i − c`.
fn series<T: Real>(nodes: &[T], truncation: T) -> KernelValue<T> {
    let n = nodes.len() - 1;
    let (lo, hi) = nodes
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(l, h), &t| (l.min(t), h.max(t)));
    let c = (lo + hi) * T::lit(0.5);
    let d: Vec<T> = nodes.iter().map(|&t| t - c).collect();
    let r = d.iter().fold(T::zero(), |m, x| m.max(x.abs()));

    let inv_nfact = T::one() / factorial::<T>(n);
    let mut h_prev = vec![T::one(); n + 1];
    let mut sum = inv_nfact;
    let mut abs_sum = inv_nfact;
    let mut coef = inv_nfact; // 1/(N+k)!
    let mut bound = inv_nfact; // r^k / (N! k!)
    let mut tail = T::zero();
    for k in 1..=MAX_SERIES_TERMS {
        bound = bound * r / T::from_usize_lossy(k);
        // Σ_{j≥k} r^j/(N! j!) ≤ bound · e^r
        tail = bound * r.exp();
        if tail <= truncation * sum.abs() {
            break;
        }
        coef = coef / T::from_usize_lossy(n + k);
        let mut h = vec![T::zero(); n + 1];
        let mut acc = T::zero();
        for j in 0..=n {
            acc = acc + d[j] * h_prev[j];
            h[j] = acc;
        }
        let term = h[n] * coef;
        if k % 2 == 1 {
            sum = sum - term;
        } else {
            sum = sum + term;
        }
        abs_sum = abs_sum + term.abs();
        h_prev = h;
    }
    let scale = (-c).exp();
    let eps = T::epsilon();
    KernelValue {
        value: scale * sum,
        abs_err: scale * (eps * abs_sum * T::from_usize_lossy(n + 4) + tail),
        method: Method::SeriesFallback,
    }
}

/// `E[t_0, …, t_N]` with a running absolute error bound.
pub fn exp_divided_difference<T: Real>(nodes: &[T], cfg: &KernelConfig<T>) -> KernelValue<T> {
    assert!(!nodes.is_empty(), "divided difference needs at least one node");
    let mut t: Vec<T> = nodes.to_vec();
    t.sort_by(|a, b| a.partial_cmp(b).expect("finite nodes"));
    let shift = t[0];
    for x in t.iter_mut() {
        *x = *x - shift;
    }
    let n = t.len() - 1;
    let eps = T::epsilon();
    let scale = (-shift).exp();

    // table[i][len]: entry on nodes i..=i+len
    let mut table: Vec<Vec<KernelValue<T>>> = Vec::with_capacity(n + 1);
    for &ti in &t {
        let v = (-ti).exp();
        table.push(vec![KernelValue {
            value: v,
            abs_err: eps * v,
            method: Method::DividedDifference,
        }]);
    }
    for len in 1..=n {
        for i in 0..=(n - len) {
            let j = i + len;
            let spread = t[j] - t[i];
            let entry = if spread == T::zero() {
                let v = (-t[i]).exp() / factorial::<T>(len);
                KernelValue {
                    value: v,
                    abs_err: T::lit(2.0) * eps * v,
                    method: Method::DividedDifference,
                }
            } else {
                let use_series = match cfg.route {
                    Route::Series => true,
                    Route::Recurrence => false,
                    Route::Auto => spread < cfg.series_threshold,
                };
                if use_series {
                    series(&t[i..=j], cfg.truncation)
                } else {
                    let a = table[i][len - 1];
                    let b = table[i + 1][len - 1];
                    let v = (a.value - b.value) / spread;
                    KernelValue {
                        value: v,
                        abs_err: (a.abs_err + b.abs_err) / spread + T::lit(3.0) * eps * v.abs(),
                        method: Method::DividedDifference,
                    }
                }
            };
            table[i].push(entry);
        }
    }
    let top = table[0][n];
    KernelValue {
        value: top.value * scale,
        abs_err: top.abs_err * scale,
        method: top.method,
    }
}
