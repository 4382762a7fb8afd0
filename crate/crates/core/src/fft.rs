//! Cached rustfft plans shared across the crate.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type PlanCache = Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)>;

fn cache() -> &'static PlanCache {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())))
}

pub(crate) fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut guard = cache().lock().expect("fft plan cache poisoned");
    let (planner, plans) = &mut *guard;
    plans
        .entry((n, forward))
        .or_insert_with(|| {
            if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            }
        })
        .clone()
}

/// Unnormalized forward DFT, `X_k = sum_j x_j e^{-2 pi i jk/n}`, in place.
pub(crate) fn forward(buf: &mut [Complex64]) {
    plan(buf.len(), true).process(buf);
}

/// Unnormalized inverse DFT, `x_j = sum_k X_k e^{2 pi i jk/n}`, in place.
pub(crate) fn inverse(buf: &mut [Complex64]) {
    plan(buf.len(), false).process(buf);
}
