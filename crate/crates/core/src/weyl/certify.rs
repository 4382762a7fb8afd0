use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{Symbol, WeylOperator};
use crate::error::{Error, Result};
use crate::fft;
use crate::gabor::{subconvolution_constant, Lattice};
use crate::grid::{PhasePoint, SampledSignal};
use crate::metaplectic::{decay_fit_with, gabor_matrix, DecayFit, DecayFitOptions, GaborMatrixSample, LinearOperator};
use crate::symplectic::SymplecticMatrix;

fn bracket(r: f64) -> f64 {
    (1.0 + r * r).sqrt()
}

/// Outcome of fitting `|<T pi(z) g, pi(w) g>| <= C <w - z>^{-s}`.
#[derive(Debug, Clone, Serialize)]
pub struct SymbolCertificate {
    pub fit: DecayFit,
    pub target_s: f64,
    /// `min(target_s, cap)` with `cap` the largest exponent the fitting range
    /// resolves above roundoff.
    pub effective_target: f64,
    pub passed: bool,
    /// `C_fit` over the discrete `M^inf_{1 (x) v_s}` symbol norm.
    pub cost_ratio: Option<f64>,
}

/// Fits the Gabor-matrix envelope of `t` against the identity map and
/// passes when `s_fit >= min(s, cap) - 0.5`.
pub fn certify_symbol_class(
    t: &dyn LinearOperator,
    g: &SampledSignal,
    s: f64,
    input: &Lattice,
    output: &Lattice,
    opts: &DecayFitOptions,
    symbol: Option<&Symbol>,
) -> Result<SymbolCertificate> {
    let k = gabor_matrix(t, g, input, output)?;
    let fit = decay_fit_with(&k, &SymplecticMatrix::identity(1), opts)?;
    let cap = (1.0 / opts.floor).ln() / bracket(opts.r_min).ln();
    let effective_target = s.min(cap);
    let cost_ratio = symbol.map(|sigma| fit.c_fit / symbol_norm_minfty(sigma, s, 2.0));
    Ok(SymbolCertificate { passed: fit.s_fit >= effective_target - 0.5, fit, target_s: s, effective_target, cost_ratio })
}

/// Discrete `M^inf_{1 (x) v_s}` norm `sup |V_Phi sigma(z, zeta)| <zeta>^s` with
/// a Gaussian phase-space window, for `z` in `[-radius, radius]^2`.
pub fn symbol_norm_minfty(sigma: &Symbol, s: f64, radius: f64) -> f64 {
    const P: usize = 64;
    const H: f64 = 0.125;
    let zs: Vec<PhasePoint> = {
        let m = (radius / 0.5).floor() as i64;
        (-m..=m).flat_map(|i| (-m..=m).map(move |j| PhasePoint::new(i as f64 * 0.5, j as f64 * 0.5))).collect()
    };
    let freq = |m: usize| -> f64 {
        let mi = if m < P / 2 { m as f64 } else { m as f64 - P as f64 };
        mi / (P as f64 * H)
    };
    zs.par_iter()
        .map(|z| {
            let mut patch = vec![Complex64::new(0.0, 0.0); P * P];
            for a in 0..P {
                let du = (a as f64 - (P / 2) as f64) * H;
                for b in 0..P {
                    let dv = (b as f64 - (P / 2) as f64) * H;
                    let w = (-std::f64::consts::PI * (du * du + dv * dv)).exp();
                    patch[a * P + b] = sigma.eval(z.x + du, z.xi + dv) * w * H * H;
                }
            }
            for row in patch.chunks_mut(P) {
                fft::forward(row);
            }
            let mut col = vec![Complex64::new(0.0, 0.0); P];
            let mut best = 0.0f64;
            for b in 0..P {
                for a in 0..P {
                    col[a] = patch[a * P + b];
                }
                fft::forward(&mut col);
                for (a, v) in col.iter().enumerate() {
                    let zeta = (freq(a).powi(2) + freq(b).powi(2)).sqrt();
                    best = best.max(v.norm() * bracket(zeta).powf(s));
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// `H(u) = max_{w - z = u} |<T pi(z) g, pi(w) g>|` on lattice offsets.
#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    pub alpha: f64,
    pub beta: f64,
    /// `(offset, H)` with offsets in lattice units.
    pub values: Vec<((i64, i64), f64)>,
}

impl Envelope {
    pub fn get(&self, u: PhasePoint) -> Option<f64> {
        let key = ((u.x / self.alpha).round() as i64, (u.xi / self.beta).round() as i64);
        self.values.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    pub fn point(&self, offset: (i64, i64)) -> PhasePoint {
        PhasePoint::new(offset.0 as f64 * self.alpha, offset.1 as f64 * self.beta)
    }

    /// `sum_u H(u) <u>^s alpha beta`.
    pub fn l1_weighted(&self, s: f64) -> f64 {
        self.values.iter().map(|(o, h)| h * bracket(self.point(*o).norm()).powf(s)).sum::<f64>() * self.alpha * self.beta
    }
}

pub fn envelope_function(t: &dyn LinearOperator, g: &SampledSignal, lattice: &Lattice) -> Result<Envelope> {
    let k = gabor_matrix(t, g, lattice, lattice)?;
    Ok(envelope_from_sample(&k, lattice.alpha(), lattice.beta()))
}

fn envelope_from_sample(k: &GaborMatrixSample, alpha: f64, beta: f64) -> Envelope {
    let mut map: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    for (w, z, v) in k.iter() {
        let u = w - z;
        let key = ((u.x / alpha).round() as i64, (u.xi / beta).round() as i64);
        let e = map.entry(key).or_insert(0.0);
        *e = e.max(v.norm());
    }
    Envelope { alpha, beta, values: map.into_iter().collect() }
}

/// Envelope of a product of quantized symbols together with the constant
/// comparison `C_total <= (C_0 / ||g||^2)^{n-1} prod C_j`, all constants
/// measured as `sup |k(w, z)| <w - z>^s`.
#[derive(Debug, Clone, Serialize)]
pub struct CompositionCheck {
    pub fit: DecayFit,
    pub factor_fits: Vec<DecayFit>,
    pub factor_constants: Vec<f64>,
    pub total_constant: f64,
    /// Subconvolution constant of `v_s^{-1}`.
    pub c0: f64,
    pub bound: f64,
    /// `total_constant / bound`.
    pub ratio: f64,
}

fn sup_constant(k: &GaborMatrixSample, s: f64) -> f64 {
    k.iter().map(|(w, z, v)| v.norm() * bracket((w - z).norm()).powf(s)).fold(0.0, f64::max)
}

/// Forms `sigma_1^w ... sigma_n^w` by kernel products and compares its
/// envelope with the per-factor envelopes.
pub fn compose_and_check(
    factors: &[&WeylOperator],
    g: &SampledSignal,
    s: f64,
    input: &Lattice,
    output: &Lattice,
    opts: &DecayFitOptions,
) -> Result<CompositionCheck> {
    if factors.len() < 2 {
        return Err(Error::InvalidArgument("composition needs at least two factors".into()));
    }
    let id = SymplecticMatrix::identity(1);
    let mut product = factors[0].clone();
    for f in &factors[1..] {
        product = product.compose(f)?;
    }
    let total = gabor_matrix(&product, g, input, output)?;
    let fit = decay_fit_with(&total, &id, opts)?;
    let mut factor_fits = Vec::new();
    let mut factor_constants = Vec::new();
    for f in factors {
        let k = gabor_matrix(*f, g, input, output)?;
        factor_constants.push(sup_constant(&k, s));
        factor_fits.push(decay_fit_with(&k, &id, opts)?);
    }
    let total_constant = sup_constant(&total, s);
    let c0 = if s > 2.0 { subconvolution_constant(s, 8.0, 0.25) } else { f64::INFINITY };
    let n = factors.len() as i32;
    let bound = (c0 / g.norm_sqr()).powi(n - 1) * factor_constants.iter().product::<f64>();
    Ok(CompositionCheck { fit, factor_fits, factor_constants, total_constant, c0, bound, ratio: total_constant / bound })
}
