//! Crude Monte Carlo for tube probabilities.

use std::ops::ControlFlow;

use super::{runner::map_replicas, tube_knots, EstimateResult, Meta, Method, TubeMonitor};
use crate::kernels::{KernelError, ResetKernel};
use crate::path::TubeSpec;
use crate::process::{base_times, draw_event_times, kernel_reset, run_path, Driver, Knot, ProcessParams};
use crate::rng::{RngStream, StreamRng};
use crate::{Error, Result};

struct HitDriver<'a> {
    kernel: &'a dyn ResetKernel,
    monitor: TubeMonitor<'a>,
    stream: RngStream,
}

impl Driver for HitDriver<'_> {
    fn reset(&mut self, ordinal: u64, _s: f64, x: f64, rng: &mut StreamRng) -> std::result::Result<Option<f64>, KernelError> {
        kernel_reset(self.kernel, ordinal, x, rng).map(Some)
    }

    fn visit(&mut self, k: &Knot) -> ControlFlow<()> {
        let stay = self.monitor.check(k)?;
        // Counter-addressed, so the decision for this bridge does not depend
        // on whether earlier bridges needed one.
        if stay < 1.0 && self.stream.counter_uniform(k.index as u64) >= stay {
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    }
}

/// Whether replica `stream` stays in the tube.
///
/// For a fixed stream the decision is monotone in `epsilon`: the skeleton
/// does not depend on it and every bridge survival probability grows with it.
pub(crate) fn replica_hit(
    tube: &TubeSpec,
    params: &ProcessParams,
    kernel: &dyn ResetKernel,
    base: &[f64],
    stream: RngStream,
) -> Result<bool> {
    let mut rng = stream.rng();
    let arrivals = draw_event_times(params, &mut rng);
    let mut d = HitDriver {
        kernel,
        monitor: TubeMonitor::new(tube, params),
        stream,
    };
    run_path(params, base, &arrivals, &mut rng, &mut d)
}

/// Fraction of replicas whose path stays in the tube, with a Clopper–Pearson
/// interval. Replica `i` uses stream `i` of `rng`'s master seed.
pub fn direct_mc_estimate(
    tube: &TubeSpec,
    params: &ProcessParams,
    kernel: &dyn ResetKernel,
    n_replicas: u64,
    rng: &RngStream,
) -> Result<EstimateResult> {
    params.validate()?;
    if n_replicas == 0 {
        return Err(Error::InvalidParameter("n_replicas must be positive".into()));
    }
    let base = base_times(params, &tube_knots(tube));
    let hits = map_replicas(n_replicas, || (), |_, i| replica_hit(tube, params, kernel, &base, rng.with_index(i)))?;
    let count = hits.iter().filter(|&&h| h).count() as u64;
    let meta = Meta {
        method: Method::Direct,
        is_mode: None,
        t: params.horizon_t,
        epsilon: tube.epsilon,
        lambda: params.lambda,
        kernel: kernel.label(),
        seed: rng.master_seed,
    };
    Ok(EstimateResult::from_hits(meta, count, n_replicas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::uniform_kernel;
    use crate::path::{in_tube, TargetPath};
    use crate::process::simulate_path;

    #[test]
    fn huge_tube_always_hit() {
        let tube = TubeSpec::new(TargetPath::linear(0.3).unwrap(), 1e6).unwrap();
        let p = ProcessParams::new(1.0, 3.0).unwrap().with_grid_points(64).unwrap();
        let r = direct_mc_estimate(&tube, &p, &uniform_kernel(), 200, &RngStream::new(1, 0)).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.empirical_rate, 0.0);
        assert_eq!(r.hits, 200);
    }

    #[test]
    fn hit_implies_grid_membership() {
        let f = TargetPath::linear(0.5).unwrap();
        let tube = TubeSpec::new(f, 0.4).unwrap();
        let p = ProcessParams::new(0.5, 2.0).unwrap().with_grid_points(128).unwrap();
        let k = uniform_kernel();
        let (mut hits, mut grid_only) = (0, 0);
        for i in 0..400 {
            let s = RngStream::new(8, i);
            let hit = replica_hit(&tube, &p, &k, &base_times(&p, &[]), s).unwrap();
            let on_grid = in_tube(&simulate_path(&p, &k, &s).unwrap(), &tube);
            assert!(!hit || on_grid);
            hits += hit as u32;
            grid_only += on_grid as u32;
        }
        assert!(hits > 0 && hits <= grid_only);
    }

    #[test]
    fn zero_hits_give_a_lower_bound() {
        let tube = TubeSpec::new(TargetPath::linear(3.0).unwrap(), 0.01).unwrap();
        let p = ProcessParams::new(1.0, 5.0).unwrap().with_grid_points(64).unwrap();
        let r = direct_mc_estimate(&tube, &p, &uniform_kernel(), 50, &RngStream::new(1, 0)).unwrap();
        assert_eq!(r.hits, 0);
        assert_eq!(r.estimate, 0.0);
        assert!(r.rate_is_lower_bound);
        assert!(r.empirical_rate.is_finite() && r.empirical_rate > 0.0);
        assert_eq!(r.rate_hi, f64::INFINITY);
    }
}
