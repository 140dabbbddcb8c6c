//! Finite-degree approximations against a limit measure.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::{empirical_dh, q_m, GradedFiltration};
use crate::measure::{wasserstein1, DhMeasure};
use crate::scalar::{Field, Real};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow<T> {
    pub m: u32,
    /// `W₁` between the normalized `ν_m` and the normalized limit.
    pub wasserstein1: T,
    pub q_error: T,
    pub psi_error: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport<T> {
    pub rows: Vec<ConvergenceRow<T>>,
    /// `Q = (1/V)∫ e^{−λ} d(limit)`.
    pub q_limit: T,
    /// `|Q_m − Q|` is non-increasing along the listed degrees.
    pub monotone: bool,
}

impl<T: Real> ConvergenceReport<T> {
    /// One row per degree, values with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("m,wasserstein1,q_error,psi_error\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{:.16e},{:.16e},{:.16e}",
                r.m,
                r.wasserstein1.to_f64().unwrap_or(f64::NAN),
                r.q_error.to_f64().unwrap_or(f64::NAN),
                r.psi_error.to_f64().unwrap_or(f64::NAN)
            );
        }
        s
    }
}

/// Compares `ν_m`, `Q_m` and `Ψ_m` at each degree with their limits.
pub fn convergence_report<F: Field, T: Real>(
    f: &GradedFiltration<F>,
    limit: &DhMeasure<T, F>,
    degrees: &[u32],
) -> Result<ConvergenceReport<T>> {
    if degrees.is_empty() {
        return Err(Error::InsufficientDegrees { have: 0, need: 1 });
    }
    let lim = limit.normalized();
    let q = lim.exp_moment(T::one());
    let psi = T::one() - q;
    let rows = degrees
        .iter()
        .map(|&m| {
            // the normalization n!/m^n cancels after normalizing
            let nu = empirical_dh::<F, T>(f, m, 1)?.normalized();
            let qm: T = q_m(f, m)?;
            Ok(ConvergenceRow {
                m,
                wasserstein1: wasserstein1(&nu, &lim)?,
                q_error: (qm - q).abs(),
                psi_error: ((T::one() - qm) - psi).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = rows.windows(2).all(|w| w[1].q_error <= w[0].q_error);
    Ok(ConvergenceReport {
        rows,
        q_limit: q,
        monotone,
    })
}
