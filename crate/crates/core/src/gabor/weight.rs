use serde::{Deserialize, Serialize};

use super::{stft_full, GaborCoefficients};
use crate::error::{Error, Result};
use crate::grid::{PhasePoint, SampledSignal};
use crate::symplectic::SymplecticMatrix;

/// Mixed-norm exponent, `f64::INFINITY` for the sup norm.
pub type Exponent = f64;

/// Polynomial phase-space weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    Constant,
    /// `v_s(z) = (1 + |z|^2)^{s/2}`.
    Vs { s: f64 },
    /// `1 (x) v_s` on phase space times phase space.
    Tensor { s: f64 },
}

fn bracket_pow(r2: f64, s: f64) -> f64 {
    (1.0 + r2).powf(s / 2.0)
}

impl Weight {
    pub fn vs(s: f64) -> Self {
        Weight::Vs { s }
    }

    pub fn order(&self) -> f64 {
        match self {
            Weight::Constant => 0.0,
            Weight::Vs { s } | Weight::Tensor { s } => *s,
        }
    }

    /// Value on a single phase-space point. The tensor weight is constant in
    /// its first block, so it evaluates to 1 here.
    pub fn eval(&self, z: PhasePoint) -> f64 {
        match self {
            Weight::Constant | Weight::Tensor { .. } => 1.0,
            Weight::Vs { s } => bracket_pow(z.x * z.x + z.xi * z.xi, *s),
        }
    }

    /// Value at `(z, zeta)` in phase space times phase space.
    pub fn eval_pair(&self, z: PhasePoint, zeta: PhasePoint) -> f64 {
        let r2 = |p: PhasePoint| p.x * p.x + p.xi * p.xi;
        match self {
            Weight::Constant => 1.0,
            Weight::Vs { s } => bracket_pow(r2(z) + r2(zeta), *s),
            Weight::Tensor { s } => bracket_pow(r2(zeta), *s),
        }
    }
}

fn check_exponent(e: Exponent, name: &str) -> Result<()> {
    if e.is_nan() || e < 1.0 {
        return Err(Error::InvalidArgument(format!("{name} = {e} must be >= 1 or infinite")));
    }
    Ok(())
}

fn lp(values: impl Iterator<Item = f64>, p: Exponent, h: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, f64::max)
    } else {
        (values.map(|v| v.powf(p)).sum::<f64>() * h).powf(1.0 / p)
    }
}

/// Mixed `(p, q)` norm of `|c| w`, inner over time, outer over frequency,
/// with the lattice cell sides as quadrature weights.
pub fn modulation_norm_with(
    coeffs: &GaborCoefficients,
    p: Exponent,
    q: Exponent,
    weight: impl Fn(PhasePoint) -> f64,
) -> Result<f64> {
    check_exponent(p, "p")?;
    check_exponent(q, "q")?;
    let lat = coeffs.lattice();
    let (nt, nf) = lat.shape();
    let (alpha, beta) = (lat.alpha(), lat.beta());
    let inner: Vec<f64> = (0..nf)
        .map(|fi| lp((0..nt).map(|ti| coeffs.get(ti, fi).norm() * weight(lat.point(ti, fi))), p, alpha))
        .collect();
    Ok(lp(inner.into_iter(), q, beta))
}

/// Discrete `M^{p,q}_m` norm over the full-resolution phase grid.
pub fn modulation_norm(f: &SampledSignal, g: &SampledSignal, p: Exponent, q: Exponent, m: Weight) -> Result<f64> {
    check_exponent(p, "p")?;
    check_exponent(q, "q")?;
    if g.norm_sqr() == 0.0 {
        return Err(Error::InvalidArgument("window is zero".into()));
    }
    let c = stft_full(f, g)?;
    modulation_norm_with(&c, p, q, |z| m.eval(z))
}

/// Extreme values of `m(A z) / m(z)` over a square sweep `|x|, |xi| <= radius`
/// with `samples` points per side.
pub fn weight_equivalence_check(m: &Weight, a: &SymplecticMatrix, radius: f64, samples: usize) -> (f64, f64) {
    let samples = samples.max(2);
    let h = 2.0 * radius / (samples - 1) as f64;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 0..samples {
        for j in 0..samples {
            let z = PhasePoint::new(-radius + i as f64 * h, -radius + j as f64 * h);
            let r = m.eval(a.apply(z)) / m.eval(z);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    (lo, hi)
}

/// `max_z (v_s^{-1} * v_s^{-1})(z) / v_s^{-1}(z)` over a square grid of side
/// `2 radius` and spacing `h`, with the convolution truncated to that square.
pub fn subconvolution_constant(s: f64, radius: f64, h: f64) -> f64 {
    let m = (radius / h).floor() as i64;
    let w = |i: i64, j: i64| bracket_pow(((i * i + j * j) as f64) * h * h, -s);
    let mut worst = 0.0f64;
    for zi in -m..=m {
        for zj in -m..=m {
            let mut acc = 0.0;
            for wi in -m..=m {
                for wj in -m..=m {
                    acc += w(wi, wj) * w(zi - wi, zj - wj);
                }
            }
            worst = worst.max(acc * h * h / w(zi, zj));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_test_signal, Grid1D, SignalKind};
    use crate::symplectic::{flow, quadratic_symbol_to_generator, QuadraticForm};

    fn gaussian(grid: Grid1D) -> SampledSignal {
        make_test_signal(&SignalKind::Gaussian, grid).unwrap()
    }

    #[test]
    fn moyal_through_norm() {
        let grid = Grid1D::self_dual(128).unwrap();
        let f = make_test_signal(&SignalKind::ChirpedAtom { x: 0.5, xi: 1.0, c: 0.4 }, grid).unwrap();
        let g = SampledSignal::from_real_fn(grid, |x| (-3.0 * x * x).exp());
        let n = modulation_norm(&f, &g, 2.0, 2.0, Weight::Constant).unwrap();
        assert!((n - f.norm() * g.norm()).abs() < 1e-10 * n);
    }

    #[test]
    fn sup_norm_of_gaussian() {
        let grid = Grid1D::self_dual(128).unwrap();
        let g = gaussian(grid);
        let n = modulation_norm(&g, &g, f64::INFINITY, f64::INFINITY, Weight::Constant).unwrap();
        assert!((n - 2f64.powf(-0.5)).abs() < 1e-8);
    }

    #[test]
    fn rejects_small_exponent() {
        let grid = Grid1D::self_dual(32).unwrap();
        let g = gaussian(grid);
        assert!(modulation_norm(&g, &g, 0.5, 2.0, Weight::Constant).is_err());
        assert!(modulation_norm(&g, &g, 2.0, f64::NAN, Weight::Constant).is_err());
    }

    #[test]
    fn equivalence_constants() {
        let w = Weight::vs(2.0);
        let (lo, hi) = weight_equivalence_check(&w, &SymplecticMatrix::identity(1), 5.0, 41);
        assert!((lo - 1.0).abs() < 1e-14 && (hi - 1.0).abs() < 1e-14);
        let (lo, hi) = weight_equivalence_check(&w, &SymplecticMatrix::rotation(0.7), 5.0, 41);
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        let a = flow(&quadratic_symbol_to_generator(&QuadraticForm::free_particle()), 1.0);
        let (lo, hi) = weight_equivalence_check(&w, &a, 5.0, 41);
        let bound = a.operator_norm().powf(2.0);
        assert!(lo > 0.0 && hi.is_finite());
        assert!(hi <= bound * (1.0 + 1e-12) && 1.0 / lo <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn tensor_weight_ignores_first_block() {
        let w = Weight::Tensor { s: 3.0 };
        let z = PhasePoint::new(10.0, -4.0);
        let zeta = PhasePoint::new(1.0, 1.0);
        assert_eq!(w.eval_pair(z, zeta), w.eval_pair(PhasePoint::ORIGIN, zeta));
        assert!((w.eval_pair(z, zeta) - 3f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn weight_serde_tags() {
        let w: Weight = serde_json::from_str(r#"{"kind":"vs","s":1.5}"#).unwrap();
        assert_eq!(w, Weight::vs(1.5));
        let c: Weight = serde_json::from_str(r#"{"kind":"constant"}"#).unwrap();
        assert_eq!(c, Weight::Constant);
    }

    #[test]
    fn subconvolutive_above_dimension() {
        let c = subconvolution_constant(3.0, 4.0, 0.5);
        assert!(c.is_finite() && c < 20.0, "{c}");
    }
}
