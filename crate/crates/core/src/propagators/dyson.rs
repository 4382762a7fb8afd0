use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{quadratic_propagate, HamiltonianSpec, Method, PropagatorResult};
use crate::error::{Error, Result};
use crate::grid::SampledSignal;
use crate::quadrature::{gauss_hermite, gauss_legendre, integration_matrix};
use crate::symplectic::SymplecticMatrix;
use crate::weyl::symbol_norm_minfty;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DysonOptions {
    pub n_max: usize,
    /// Gauss-Legendre nodes on `[0, t]`.
    pub nodes: usize,
    /// Samples of `r` in `[0, t]` for `M(t)`.
    pub growth_samples: usize,
}

impl Default for DysonOptions {
    fn default() -> Self {
        Self { n_max: 6, nodes: 24, growth_samples: 64 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DysonDiagnostics {
    pub order: usize,
    pub nodes: usize,
    /// `||P_n(t) u0|| / ||u0||` for `n = 1..=order`.
    pub increments: Vec<f64>,
    pub sigma_norm: f64,
    /// `sup_r ||A_r||^s ||V_{Phi o A_r} Phi||_{L^1_{v_s}}` over the sampled `r`.
    pub growth: f64,
    /// `e^x - sum_{k <= order} x^k / k!` with `x = |t| M(t) ||sigma||`.
    pub tail_bound: f64,
    /// Factor multiplying the reported tail bound; held at 1.
    pub calibration: f64,
}

#[derive(Debug, Clone)]
pub struct DysonResult {
    pub result: PropagatorResult,
    pub diagnostics: DysonDiagnostics,
}

/// `||V_{Phi o A} Phi||_{L^1_{v_s}(R^4)}` for the Gaussian `Phi` on `R^2`.
///
/// With `G = A^T A` and `Q = I + G`, `|V_{Phi o A} Phi(z, zeta)|` equals
/// `det(Q)^{-1/2} exp(-pi z^T G Q^{-1} z - pi zeta^T Q^{-1} zeta)`; the
/// weighted integral runs over Gauss-Hermite nodes in the eigenbasis of `G`.
fn window_mass(a: &SymplecticMatrix, s: f64) -> f64 {
    let m = a.matrix();
    let g = m.transpose() * m;
    let eig = g.symmetric_eigen();
    let gs = [eig.eigenvalues[0], eig.eigenvalues[1]];
    let prec: Vec<f64> = gs.iter().map(|g| g / (1.0 + g)).chain(gs.iter().map(|g| 1.0 / (1.0 + g))).collect();
    let det_q: f64 = gs.iter().map(|g| 1.0 + g).product();
    let (x, w) = gauss_hermite(16);
    let pi = std::f64::consts::PI;
    // u_k = x_k / sqrt(pi p_k) turns exp(-pi p u^2) into exp(-x^2)
    let scale: Vec<f64> = prec.iter().map(|p| 1.0 / (pi * p).sqrt()).collect();
    let mut total = 0.0;
    for (i0, w0) in w.iter().enumerate() {
        for (i1, w1) in w.iter().enumerate() {
            for (i2, w2) in w.iter().enumerate() {
                for (i3, w3) in w.iter().enumerate() {
                    let r2 = (x[i0] * scale[0]).powi(2)
                        + (x[i1] * scale[1]).powi(2)
                        + (x[i2] * scale[2]).powi(2)
                        + (x[i3] * scale[3]).powi(2);
                    total += w0 * w1 * w2 * w3 * (1.0 + r2).powf(s / 2.0);
                }
            }
        }
    }
    total * scale.iter().product::<f64>() / det_q.sqrt()
}

/// `M(t) = sup_{r in [0, t]} ||A_r||^s ||V_{Phi o A_r} Phi||_{L^1_{v_s}}`
/// sampled at `samples` points.
pub fn growth_constant(h: &HamiltonianSpec, t: f64, s: f64, samples: usize) -> f64 {
    let samples = samples.max(2);
    (0..samples)
        .into_par_iter()
        .map(|k| {
            let a = h.flow(t * k as f64 / (samples - 1) as f64);
            a.operator_norm().powf(s) * window_mass(&a, s)
        })
        .reduce(|| 0.0, f64::max)
}

fn exp_remainder(x: f64, order: usize) -> f64 {
    let mut term = 1.0;
    let mut partial = 1.0;
    for k in 1..=order {
        term *= x / k as f64;
        partial += term;
    }
    // the tail beyond the partial sum, computed directly when it is tiny
    let direct = x.exp() - partial;
    if direct > 1e-8 * x.exp() {
        return direct;
    }
    let mut tail = 0.0;
    let mut k = order + 1;
    loop {
        term *= x / k as f64;
        tail += term;
        if term < 1e-17 * tail || k > order + 200 {
            return tail;
        }
        k += 1;
    }
}

/// `e^{itH} u0 = mu(A_t) P(t) u0` with `P(t) = sum_n P_n(t)` truncated at
/// `n_max` and `P_n(t) = i int_0^t B(r) P_{n-1}(r) dr`,
/// `B(r) = mu(A_{-r}) sigma^w mu(A_r)`. The inner integrals are spectral
/// integrals over Gauss-Legendre nodes on `[0, t]`.
pub fn dyson_propagate(h: &HamiltonianSpec, u0: &SampledSignal, t: f64, opts: &DysonOptions) -> Result<DysonResult> {
    let q = &h.quadratic;
    let Some(p) = &h.perturbation else {
        let result = quadratic_propagate(q, u0, t)?;
        let result = PropagatorResult { method: Method::Dyson(opts.n_max), ..result };
        let diagnostics = DysonDiagnostics {
            order: opts.n_max,
            nodes: 0,
            increments: vec![0.0; opts.n_max],
            sigma_norm: 0.0,
            growth: 0.0,
            tail_bound: 0.0,
            calibration: 1.0,
        };
        return Ok(DysonResult { result, diagnostics });
    };
    let s = p.class_s();
    let sigma_norm = symbol_norm_minfty(p.symbol(), s, 2.0);
    let growth = growth_constant(h, t, s, opts.growth_samples);
    let tail_bound = exp_remainder(t.abs() * growth * sigma_norm, opts.n_max);
    if tail_bound >= 1.0 {
        return Err(Error::TruncationInsufficient { tail: tail_bound, order: opts.n_max });
    }

    let m = opts.nodes.max(2);
    let (x, w) = gauss_legendre(m);
    let half = t / 2.0;
    let taus: Vec<f64> = x.iter().map(|x| half * (x + 1.0)).collect();
    let weights: Vec<f64> = w.iter().map(|w| half * w).collect();
    let integ = integration_matrix(&x) * half;
    let op = p.operator();
    let b = |r: f64, v: &SampledSignal| -> Result<SampledSignal> {
        let forward = quadratic_propagate(q, v, r)?.u_t;
        let kicked = crate::metaplectic::LinearOperator::apply(op, &forward)?;
        Ok(quadratic_propagate(q, &kicked, -r)?.u_t)
    };

    let norm0 = u0.norm();
    let i = Complex64::new(0.0, 1.0);
    let mut level: Vec<SampledSignal> = vec![u0.clone(); m];
    let mut total = u0.clone();
    let mut increments = Vec::with_capacity(opts.n_max);
    for _ in 0..opts.n_max {
        let y: Vec<SampledSignal> = taus
            .par_iter()
            .zip(level.par_iter())
            .map(|(&r, v)| Ok(b(r, v)?.scale(i)))
            .collect::<Result<_>>()?;
        let mut term = SampledSignal::zeros(*u0.grid());
        for (wj, yj) in weights.iter().zip(&y) {
            term = term.axpy(Complex64::new(*wj, 0.0), yj);
        }
        increments.push(if norm0 > 0.0 { term.norm() / norm0 } else { term.norm() });
        total = total.axpy(Complex64::new(1.0, 0.0), &term);
        level = (0..m)
            .map(|k| {
                let mut acc = SampledSignal::zeros(*u0.grid());
                for (j, yj) in y.iter().enumerate() {
                    acc = acc.axpy(Complex64::new(integ[(k, j)], 0.0), yj);
                }
                acc
            })
            .collect();
    }
    let u = quadratic_propagate(q, &total, t)?.u_t;
    let result = PropagatorResult::new(t, u0, u, Method::Dyson(opts.n_max))
        .with("tail_bound", tail_bound)
        .with("sigma_norm", sigma_norm)
        .with("growth", growth);
    let diagnostics =
        DysonDiagnostics { order: opts.n_max, nodes: m, increments, sigma_norm, growth, tail_bound, calibration: 1.0 };
    Ok(DysonResult { result, diagnostics })
}

/// Spread of the normalized ratios `(d_{n+1} / d_n) (n + 1) / t`, as the
/// largest factor by which one of them departs from their geometric mean.
/// Increments following the `t^n / n!` shape give a spread near 1.
pub fn factorial_shape_spread(increments: &[f64], t: f64) -> f64 {
    let ratios: Vec<f64> = increments
        .windows(2)
        .enumerate()
        .filter(|(_, d)| d[0] > 0.0 && d[1] > 0.0)
        .map(|(k, d)| d[1] / d[0] * (k + 2) as f64 / t.abs())
        .collect();
    if ratios.is_empty() {
        return f64::INFINITY;
    }
    let mean = (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp();
    ratios.iter().map(|r| (r / mean).max(mean / r)).fold(1.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_test_signal, Grid1D, SignalKind};
    use crate::propagators::split_step;

    fn desk() -> Grid1D {
        Grid1D::default_desk()
    }

    #[test]
    fn unperturbed_and_zeroth_order() {
        let u0 = make_test_signal(&SignalKind::GaborAtom { x: 1.0, xi: 0.5 }, desk()).unwrap();
        let h = HamiltonianSpec::harmonic_oscillator();
        let d = dyson_propagate(&h, &u0, 0.4, &DysonOptions::default()).unwrap();
        let q = quadratic_propagate(&h.quadratic, &u0, 0.4).unwrap();
        assert_eq!(d.result.u_t, q.u_t);
        let hp = HamiltonianSpec::perturbed_oscillator(3.0, desk()).unwrap();
        let opts = DysonOptions { n_max: 0, ..Default::default() };
        let d0 = dyson_propagate(&hp, &u0, 0.02, &opts).unwrap();
        assert!(d0.result.u_t.relative_error(&q_at(&h, &u0, 0.02)) < 1e-14);
        assert_eq!(d0.result.method, Method::Dyson(0));
    }

    fn q_at(h: &HamiltonianSpec, u0: &SampledSignal, t: f64) -> SampledSignal {
        quadratic_propagate(&h.quadratic, u0, t).unwrap().u_t
    }

    #[test]
    fn window_mass_for_rotations() {
        // A = I: 2 E[(1 + |u|^2)^2] with u ~ N(0, I_4 / pi)
        let expect = 2.0 * (1.0 + 8.0 / std::f64::consts::PI + (8.0 / std::f64::consts::PI.powi(2) + 16.0 / std::f64::consts::PI.powi(2)));
        let got = window_mass(&SymplecticMatrix::identity(1), 4.0);
        assert!((got - expect).abs() < 1e-10 * expect, "{got} vs {expect}");
        let rot = window_mass(&SymplecticMatrix::rotation(0.7), 4.0);
        assert!((rot - expect).abs() < 1e-10 * expect);
        assert!((window_mass(&SymplecticMatrix::identity(1), 0.0) - 2.0).abs() < 1e-12);
        let sheared = SymplecticMatrix::upper_shear(2.0);
        assert!(window_mass(&sheared, 4.0) > expect);
    }

    #[test]
    fn remainder_of_the_exponential_series() {
        assert!((exp_remainder(1.0, 0) - (1f64.exp() - 1.0)).abs() < 1e-15);
        let tiny = exp_remainder(0.1, 6);
        assert!((tiny - 0.1f64.powi(7) / 5040.0).abs() < 0.02 * tiny);
    }

    #[test]
    fn agrees_with_split_step_and_decays_factorially() {
        let g = desk();
        let h = HamiltonianSpec::perturbed_oscillator(3.0, g).unwrap();
        let u0 = make_test_signal(&SignalKind::Gaussian, g).unwrap();
        let t = 0.25;
        let d = dyson_propagate(&h, &u0, t, &DysonOptions::default()).unwrap();
        let reference = split_step(&h, &u0, t, 2048).unwrap().u_t;
        let err = d.result.u_t.relative_error(&reference);
        assert!(err < 1e-4, "{err}");
        assert!(factorial_shape_spread(&d.diagnostics.increments, t) <= 3.0, "{:?}", d.diagnostics.increments);
        assert!(d.diagnostics.tail_bound < 1.0);
        assert!(d.result.unitarity_defect() < 1e-5);
    }

    #[test]
    fn truncation_insufficient_for_long_times() {
        let g = desk();
        let h = HamiltonianSpec::perturbed_oscillator(3.0, g).unwrap();
        let u0 = make_test_signal(&SignalKind::Gaussian, g).unwrap();
        let opts = DysonOptions { n_max: 1, ..Default::default() };
        assert!(matches!(dyson_propagate(&h, &u0, 5.0, &opts), Err(Error::TruncationInsufficient { .. })));
    }

    #[test]
    fn shape_spread() {
        let t = 0.3;
        let inc: Vec<f64> = (1..=6).map(|n| 0.7 * (t * 1.3f64).powi(n) / (1..=n).product::<i32>() as f64).collect();
        assert!((factorial_shape_spread(&inc, t) - 1.0).abs() < 1e-12);
        let geometric: Vec<f64> = (1..=6).map(|n| 0.5f64.powi(n)).collect();
        assert!(factorial_shape_spread(&geometric, t) > 1.5);
    }
}
