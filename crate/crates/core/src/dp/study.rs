//! Convergence of discrete prices to the vanishing-delay limit.

use serde::Serialize;

use super::{indifference_price_dp_with, DelayedProblem, DpConfig, DpError};
use crate::limit::{limit_value, LimitProblem};
use crate::model::{ModelParams, PayoffSpec, DEFAULT_NODES};
use crate::Scalar;

/// Trades per delay period used by default in the study. One trade per
/// period converges to a larger value than the limit, because the limit also
/// allows rebalancing between observation dates.
pub const STUDY_SUBSTEPS: usize = 8;

/// Frozen CSV header of [`ConvergenceRow`].
pub const CONVERGENCE_HEADER: &str = "N,H,lambda,price,limit_value,gap";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow<S> {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "H")]
    pub h: S,
    pub lambda: S,
    pub price: S,
    pub limit_value: S,
    /// `price − limit_value`.
    pub gap: S,
}

impl<S: Scalar> ConvergenceRow<S> {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.n, self.h, self.lambda, self.price, self.limit_value, self.gap
        )
    }
}

/// Prices `π(T/N, A·N/T, f)` for each `N` against the limit value at `A`,
/// trading `substeps` times per delay period.
pub fn convergence_study<S: Scalar>(
    a: S,
    spec: &PayoffSpec<S>,
    params: &ModelParams<S>,
    n_list: &[usize],
    substeps: usize,
    config: &DpConfig<S>,
) -> Result<Vec<ConvergenceRow<S>>, DpError> {
    let limit = limit_value(&LimitProblem::new(a, *params, spec.clone(), DEFAULT_NODES)?)?.value;
    n_list
        .iter()
        .map(|&n| {
            let problem = DelayedProblem::scaled(*params, spec.clone(), n, a)?.with_substeps(substeps)?;
            let price = indifference_price_dp_with(&problem, config)?.price;
            Ok(ConvergenceRow {
                n,
                h: problem.delta(),
                lambda: problem.lambda(),
                price,
                limit_value: limit,
                gap: price - limit,
            })
        })
        .collect()
}

/// Rows as CSV text with the frozen header.
pub fn convergence_csv<S: Scalar>(rows: &[ConvergenceRow<S>]) -> String {
    let mut out = String::from(CONVERGENCE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}
