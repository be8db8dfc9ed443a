//! Growth of the running maximum: quantiles of `sup |ξ(Ts)| / (√T φ(T))`.

use serde::{Deserialize, Serialize};

use super::runner::map_replicas;
use super::stats::quantile_sorted;
use crate::kernels::ResetKernel;
use crate::process::{base_times, sup_statistic_with, SimSettings};
use crate::rng::RngStream;
use crate::{Error, Result};

/// Normalizations `φ(T)`. The statistic tends to 0 when
/// `φ(T) / sqrt(ln ln T) → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiChoice {
    /// `ln T`.
    Log,
    /// `sqrt(ln ln T) · g(T)` with `g(T) = ln ln T`.
    SqrtLoglogTimesG,
    /// `sqrt(T)`.
    Sqrt,
    /// `sqrt(ln ln T)`: the borderline rate, which does not qualify.
    SqrtLoglog,
}

impl PhiChoice {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            PhiChoice::Log => t.ln(),
            PhiChoice::SqrtLoglogTimesG => t.ln().ln().powf(1.5),
            PhiChoice::Sqrt => t.sqrt(),
            PhiChoice::SqrtLoglog => t.ln().ln().sqrt(),
        }
    }

    /// Whether `φ(T) / sqrt(ln ln T)` diverges.
    pub fn dominates_loglog(&self) -> bool {
        !matches!(self, PhiChoice::SqrtLoglog)
    }

    pub fn name(&self) -> &'static str {
        match self {
            PhiChoice::Log => "log",
            PhiChoice::SqrtLoglogTimesG => "sqrt_loglog_times_g",
            PhiChoice::Sqrt => "sqrt",
            PhiChoice::SqrtLoglog => "sqrt_loglog",
        }
    }
}

impl std::str::FromStr for PhiChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [PhiChoice::Log, PhiChoice::SqrtLoglogTimesG, PhiChoice::Sqrt, PhiChoice::SqrtLoglog]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown phi choice {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupLawRow {
    #[serde(rename = "T")]
    pub t: f64,
    pub phi: f64,
    pub n_replicas: u64,
    pub median: f64,
    pub q90: f64,
    pub seed: u64,
}

/// One row per `T`; the replicas at grid point `i` use `rng.derive(i)`.
pub fn sup_law_experiment(
    lambda: f64,
    kernel: &dyn ResetKernel,
    phi: PhiChoice,
    t_grid: &[f64],
    n_replicas: u64,
    rng: &RngStream,
    sim: SimSettings,
) -> Result<Vec<SupLawRow>> {
    if !phi.dominates_loglog() {
        return Err(Error::InvalidParameter(format!(
            "phi = {} does not outgrow sqrt(ln ln T)",
            phi.name()
        )));
    }
    if n_replicas == 0 || t_grid.is_empty() {
        return Err(Error::InvalidParameter("need replicas and at least one T".into()));
    }
    let mut rows = Vec::with_capacity(t_grid.len());
    for (i, &t) in t_grid.iter().enumerate() {
        let params = sim.params(lambda, t)?;
        let phi_t = phi.eval(t);
        if !(phi_t > 0.0) || !phi_t.is_finite() {
            return Err(Error::InvalidParameter(format!("phi({t}) = {phi_t} is not positive")));
        }
        let stream = rng.derive(i as u64);
        let base = base_times(&params, &[]);
        let mut stats = map_replicas(n_replicas, || (), |_, j| {
            sup_statistic_with(&params, kernel, phi_t, &stream.with_index(j), &base)
        })?;
        stats.sort_by(f64::total_cmp);
        rows.push(SupLawRow {
            t,
            phi: phi_t,
            n_replicas,
            median: quantile_sorted(&stats, 0.5),
            q90: quantile_sorted(&stats, 0.9),
            seed: stream.master_seed,
        });
    }
    Ok(rows)
}
