use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{weyl_quantize, Symbol};
use crate::error::{Error, Result};
use crate::grid::{fourier, SampledSignal};
use crate::metaplectic::{LinearOperator, MetaplecticOperator};
use crate::symplectic::SymplecticMatrix;

/// `max_f min_c ||mu(A)^{-1} sigma^w mu(A) f - c (sigma o A)^w f|| / ||f||`
/// over the corpus.
pub fn covariance_defect(sigma: &Symbol, a: &SymplecticMatrix, corpus: &[SampledSignal]) -> Result<f64> {
    let Some(first) = corpus.first() else {
        return Ok(0.0);
    };
    let grid = *first.grid();
    let op = weyl_quantize(sigma, grid);
    let pulled = weyl_quantize(&sigma.compose(a), grid);
    let mu = MetaplecticOperator::new(a.clone());
    let mu_inv = MetaplecticOperator::new(a.inverse());
    corpus
        .par_iter()
        .map(|f| {
            let lhs = mu_inv.apply(&op.apply(&mu.apply(f)?)?)?;
            let rhs = pulled.apply(f)?;
            let c = rhs.optimal_phase(&lhs);
            Ok(rhs.distance(&lhs.scale(c)) / f.norm())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// `T f(x) = |A|^{-1/2} sum_k e^{2 pi i Phi(x, xi_k)} sigma(x, xi_k) fhat(xi_k) dxi`
/// with `Phi(x, xi) = C x^2 / (2A) + xi x / A - B xi^2 / (2A)`.
pub fn fio_type1_apply(a: &SymplecticMatrix, sigma: &Symbol, f: &SampledSignal) -> Result<SampledSignal> {
    let (pa, pb, pc, _) = a.entries();
    if pa.abs() <= 1e-8 {
        return Err(Error::TypeIUnavailable { det: pa.abs() });
    }
    let fhat = fourier(f);
    let grid = *f.grid();
    let dual = grid.dual();
    let dxi = grid.dxi() / pa.abs().sqrt();
    let xis = dual.xs();
    let phase = move |x: f64, xi: f64| pc * x * x / (2.0 * pa) + xi * x / pa - pb * xi * xi / (2.0 * pa);
    let values: Vec<Complex64> = grid
        .xs()
        .par_iter()
        .map(|&x| {
            xis.iter()
                .zip(fhat.values())
                .map(|(&xi, v)| Complex64::from_polar(1.0, 2.0 * PI * phase(x, xi)) * sigma.eval(x, xi) * v)
                .sum::<Complex64>()
                * dxi
        })
        .collect();
    SampledSignal::new(grid, values)
}
