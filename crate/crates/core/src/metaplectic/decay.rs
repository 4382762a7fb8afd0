use serde::{Deserialize, Serialize};

use super::GaborMatrixSample;
use crate::error::{Error, Result};
use crate::symplectic::SymplecticMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecayFitOptions {
    /// Radial bin width in phase space.
    pub shell_width: f64,
    pub min_shells: usize,
    /// Radii entering the regression.
    pub r_min: f64,
    pub r_max: f64,
    /// Shell maxima below `floor * max|k|` are treated as roundoff.
    pub floor: f64,
}

impl Default for DecayFitOptions {
    fn default() -> Self {
        Self { shell_width: 0.25, min_shells: 20, r_min: 4.0, r_max: 8.0, floor: 1e-13 }
    }
}

/// Largest `|k|` among entries with `|w - A z|` in one radial bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    /// Distance at which the maximum is attained.
    pub r: f64,
    pub max: f64,
    pub count: usize,
}

/// Envelope `|k(w, z)| <= C <w - A z>^{-s}` fitted to shell maxima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub s_fit: f64,
    #[serde(rename = "C_fit")]
    pub c_fit: f64,
    /// RMS of the log-residuals over the fitted shells.
    pub residual: f64,
    pub shells: Vec<Shell>,
    pub fitted_shells: usize,
    /// True when every shell in the fitting range sat below the floor and
    /// `s_fit` reports the largest exponent the range can resolve.
    pub capped: bool,
}

fn bracket(r: f64) -> f64 {
    (1.0 + r * r).sqrt()
}

impl DecayFit {
    /// `max_shell max <r>^n / max_{inner half} max <r>^n`; stays near 1 or
    /// below when the envelope decays faster than `<r>^{-n}`.
    pub fn polynomial_envelope_ratio(&self, n: f64) -> f64 {
        let weighted: Vec<f64> = self.shells.iter().map(|s| s.max * bracket(s.r).powf(n)).collect();
        let half = weighted.len().div_ceil(2).max(1);
        let inner = weighted[..half].iter().cloned().fold(0.0, f64::max);
        let all = weighted.iter().cloned().fold(0.0, f64::max);
        all / inner
    }
}

pub fn decay_fit(k: &GaborMatrixSample, map: &SymplecticMatrix) -> Result<DecayFit> {
    decay_fit_with(k, map, &DecayFitOptions::default())
}

/// Least-squares fit of `log max|k| = log C - s log <r>` over shells of
/// `r = |w - A z|` that lie on the upper envelope.
pub fn decay_fit_with(k: &GaborMatrixSample, map: &SymplecticMatrix, opts: &DecayFitOptions) -> Result<DecayFit> {
    let mapped: Vec<_> = k.inputs().iter().map(|&z| map.apply(z)).collect();
    let mut bins: Vec<Option<Shell>> = Vec::new();
    for (iz, az) in mapped.iter().enumerate() {
        for (iw, &w) in k.outputs().iter().enumerate() {
            let r = (w - *az).norm();
            let b = (r / opts.shell_width + 1e-9).floor() as usize;
            if bins.len() <= b {
                bins.resize(b + 1, None);
            }
            let v = k.get(iw, iz).norm();
            let shell = bins[b].get_or_insert(Shell { r, max: v, count: 0 });
            shell.count += 1;
            if v > shell.max {
                shell.max = v;
                shell.r = r;
            }
        }
    }
    let shells: Vec<Shell> = bins.into_iter().flatten().collect();
    if shells.len() < opts.min_shells {
        return Err(Error::InsufficientShells { found: shells.len(), required: opts.min_shells });
    }
    let peak = shells.iter().map(|s| s.max).fold(0.0, f64::max);
    // shells far below the maximum further out hold no pair near the worst
    // direction and are left out
    let mut outer = 0.0f64;
    let mut on_envelope = vec![false; shells.len()];
    for (i, s) in shells.iter().enumerate().rev() {
        on_envelope[i] = s.max >= 0.5 * outer;
        outer = outer.max(s.max);
    }
    let usable: Vec<(f64, f64)> = shells
        .iter()
        .zip(&on_envelope)
        .filter(|(s, &keep)| keep && s.r >= opts.r_min && s.r <= opts.r_max && s.max > opts.floor * peak)
        .map(|(s, _)| (bracket(s.r).ln(), s.max.ln()))
        .collect();
    if usable.len() < 2 {
        let s_cap = (1.0 / opts.floor).ln() / bracket(opts.r_min).ln();
        return Ok(DecayFit { s_fit: s_cap, c_fit: peak, residual: 0.0, shells, fitted_shells: usable.len(), capped: true });
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (usable.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(DecayFit {
        s_fit: -slope,
        c_fit: intercept.exp(),
        residual,
        shells,
        fitted_shells: usable.len(),
        capped: false,
    })
}
