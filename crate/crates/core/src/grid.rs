//! Uniform periodic grids, sampled signals, the unitary Fourier transform with
//! kernel `e^{-2 pi i x xi}`, time-frequency shifts and analytic test signals.

use std::f64::consts::PI;
use std::ops::{Add, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

/// Fraction of the half-span excluded from decay statements near the torus seam.
pub const MARGIN: f64 = 0.125;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Centered periodic grid `x_j = -L/2 + j L/N`, `j = 0..N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n: usize,
    length: f64,
}

impl Grid1D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 {
            return Err(Error::Config(format!("grid needs N >= 8, got {n}")));
        }
        if !n.is_multiple_of(4) {
            return Err(Error::Config(format!("grid size N must be a multiple of 4, got {n}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Config(format!("grid length must be positive, got {length}")));
        }
        Ok(Self { n, length })
    }

    /// Grid with `L = sqrt(N)`, so that `dx = dxi`.
    pub fn self_dual(n: usize) -> Result<Self> {
        Self::new(n, (n as f64).sqrt())
    }

    /// The desk-scale default: `N = 512`, `L = sqrt(512)`.
    pub fn default_desk() -> Self {
        Self::self_dual(512).expect("default grid is valid")
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn dxi(&self) -> f64 {
        1.0 / self.length
    }

    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.dx()
    }

    /// Frequency of bin `k` on the dual grid.
    pub fn xi(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.dxi()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn xis(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.xi(k)).collect()
    }

    /// The grid carrying Fourier transforms of signals on `self`.
    pub fn dual(&self) -> Self {
        Self { n: self.n, length: self.n as f64 / self.length }
    }

    /// Half-span of the window inside which decay statements are tested.
    pub fn margin_radius(&self) -> f64 {
        0.5 * self.length * (1.0 - MARGIN)
    }

    /// Nearest grid index for position `x`, wrapped onto the torus.
    pub fn index_of(&self, x: f64) -> usize {
        let steps = (x / self.dx()).round() as i64 + (self.n / 2) as i64;
        steps.rem_euclid(self.n as i64) as usize
    }

    /// Nearest frequency-bin index for `xi`, wrapped.
    pub fn freq_index_of(&self, xi: f64) -> usize {
        let steps = (xi / self.dxi()).round() as i64 + (self.n / 2) as i64;
        steps.rem_euclid(self.n as i64) as usize
    }

    /// `x` rounded to the nearest multiple of `dx` (no wrapping).
    pub fn snap_x(&self, x: f64) -> f64 {
        (x / self.dx()).round() * self.dx()
    }

    pub fn snap_xi(&self, xi: f64) -> f64 {
        (xi / self.dxi()).round() * self.dxi()
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.n == other.n && (self.length - other.length).abs() <= 1e-12 * self.length
    }

    pub(crate) fn check_same(&self, other: &Grid1D) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "N={} L={} vs N={} L={}",
                self.n, self.length, other.n, other.length
            )))
        }
    }
}

/// A point `z = (x, xi)` of phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub xi: f64,
}

impl PhasePoint {
    pub const ORIGIN: PhasePoint = PhasePoint { x: 0.0, xi: 0.0 };

    pub fn new(x: f64, xi: f64) -> Self {
        Self { x, xi }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.xi)
    }

    /// Japanese bracket `<z> = (1 + |z|^2)^{1/2}`.
    pub fn bracket(&self) -> f64 {
        (1.0 + self.x * self.x + self.xi * self.xi).sqrt()
    }
}

impl Add for PhasePoint {
    type Output = PhasePoint;
    fn add(self, rhs: PhasePoint) -> PhasePoint {
        PhasePoint::new(self.x + rhs.x, self.xi + rhs.xi)
    }
}

impl Sub for PhasePoint {
    type Output = PhasePoint;
    fn sub(self, rhs: PhasePoint) -> PhasePoint {
        PhasePoint::new(self.x - rhs.x, self.xi - rhs.xi)
    }
}

/// Complex samples of a function on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    grid: Grid1D,
    values: Vec<Complex64>,
}

impl SampledSignal {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|j| f(grid.x(j))).collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Unit vector at grid index `j`, normalized to `||.||_2 = 1`.
    pub fn impulse(grid: Grid1D, j: usize) -> Self {
        let mut s = Self::zeros(grid);
        s.values[j] = Complex64::new(1.0 / grid.dx().sqrt(), 0.0);
        s
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid.dx() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    /// `||f||_2` with the `dx` quadrature weight.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<f, h> = dx * sum f conj(h)`.
    pub fn inner(&self, other: &SampledSignal) -> Complex64 {
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        s * self.grid.dx()
    }

    pub fn scale(&self, c: Complex64) -> SampledSignal {
        self.map(|v| v * c)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> SampledSignal {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise product with `m(x)`.
    pub fn multiply_by(&self, m: impl Fn(f64) -> Complex64) -> SampledSignal {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| v * m(self.grid.x(j)))
            .collect();
        Self { grid: self.grid, values }
    }

    pub fn axpy(&self, a: Complex64, other: &SampledSignal) -> SampledSignal {
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect();
        Self { grid: self.grid, values }
    }

    pub fn distance(&self, other: &SampledSignal) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (s * self.grid.dx()).sqrt()
    }

    /// `||self - other|| / ||other||`.
    pub fn relative_error(&self, reference: &SampledSignal) -> f64 {
        let r = reference.norm();
        if r == 0.0 {
            self.norm()
        } else {
            self.distance(reference) / r
        }
    }

    /// Unimodular `c` minimizing `||self - c * other||`.
    pub fn optimal_phase(&self, other: &SampledSignal) -> Complex64 {
        let ip = self.inner(other);
        if ip.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            ip / ip.norm()
        }
    }

    /// `min_{|c|=1} ||self - c other|| / ||other||`.
    pub fn relative_error_mod_phase(&self, reference: &SampledSignal) -> f64 {
        let c = self.optimal_phase(reference);
        self.relative_error(&reference.scale(c))
    }

    /// `f(-x)` on the centered grid (`x_j -> x_{N-j}`).
    pub fn reflect(&self) -> SampledSignal {
        let n = self.len();
        let values = (0..n).map(|j| self.values[(n - j) % n]).collect();
        Self { grid: self.grid, values }
    }

    /// Index-periodic translation `f_{j - m}`.
    pub fn roll(&self, m: i64) -> SampledSignal {
        let n = self.len() as i64;
        let values = (0..n)
            .map(|j| self.values[(j - m).rem_euclid(n) as usize])
            .collect();
        Self { grid: self.grid, values }
    }

    /// Columns `x,re,im,abs`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,re,im,abs")?;
        for (x, v) in self.grid.xs().iter().zip(&self.values) {
            writeln!(out, "{:.12e},{:.12e},{:.12e},{:.12e}", x, v.re, v.im, v.norm())?;
        }
        Ok(())
    }
}

/// Fourier transform `f^(xi) = int f(x) e^{-2 pi i x xi} dx` on the dual grid.
pub fn fourier(f: &SampledSignal) -> SampledSignal {
    let grid = f.grid;
    let n = grid.len();
    let half = n / 2;
    let mut buf: Vec<Complex64> = f
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| if j % 2 == 0 { *v } else { -*v })
        .collect();
    fft::forward(&mut buf);
    let dx = grid.dx();
    for (k, v) in buf.iter_mut().enumerate() {
        let sign = if (k + half).is_multiple_of(2) { dx } else { -dx };
        *v *= sign;
    }
    SampledSignal { grid: grid.dual(), values: buf }
}

/// Inverse of [`fourier`]: takes samples on the dual grid back to the primal grid.
pub fn inverse_fourier(fhat: &SampledSignal) -> SampledSignal {
    let dual = fhat.grid;
    let n = dual.len();
    let half = n / 2;
    let mut buf: Vec<Complex64> = fhat
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| if k % 2 == 0 { *v } else { -*v })
        .collect();
    fft::inverse(&mut buf);
    // spacing of the dual grid is the primal dxi
    let dxi = dual.dx();
    for (j, v) in buf.iter_mut().enumerate() {
        let sign = if (j + half).is_multiple_of(2) { dxi } else { -dxi };
        *v *= sign;
    }
    SampledSignal { grid: dual.dual(), values: buf }
}

/// Apply a Fourier multiplier `m(xi)`.
pub fn fourier_multiplier(f: &SampledSignal, m: impl Fn(f64) -> Complex64) -> SampledSignal {
    let mut out = inverse_fourier(&fourier(f).multiply_by(m));
    out.grid = f.grid;
    out
}

/// `pi(z) f = M_xi T_x f`; `z.x` is snapped to the grid, `z.xi` is exact.
pub fn tf_shift(f: &SampledSignal, z: PhasePoint) -> SampledSignal {
    let grid = f.grid;
    if z.x.abs() > 0.5 * grid.length() {
        log::warn!("time shift {} exceeds half-span {}; wrapping", z.x, 0.5 * grid.length());
    }
    let m = (z.x / grid.dx()).round() as i64;
    let shifted = if m == 0 { f.clone() } else { f.roll(m) };
    if z.xi == 0.0 {
        return shifted;
    }
    shifted.multiply_by(|x| (2.0 * PI * z.xi * x * I).exp())
}

/// Trigonometric interpolant of `f` evaluated at arbitrary points; the
/// Nyquist bin is split symmetrically so real samples stay real.
pub fn interpolate(f: &SampledSignal, points: &[f64]) -> Vec<Complex64> {
    let fhat = fourier(f);
    let grid = f.grid;
    let n = grid.len();
    let dxi = grid.dxi();
    let coeffs = fhat.values();
    let xi0 = grid.xi(0);
    points
        .iter()
        .map(|&x| {
            let step = (2.0 * PI * dxi * x * I).exp();
            let mut w = (2.0 * PI * xi0 * x * I).exp() * step;
            let mut acc = coeffs[0] * (2.0 * PI * xi0 * x).cos();
            for c in &coeffs[1..n] {
                acc += c * w;
                w *= step;
            }
            acc * dxi
        })
        .collect()
}

/// `pi(z) f` with the translation carried out exactly in the Fourier
/// domain, so `z.x` need not lie on the grid.
pub fn tf_shift_fractional(f: &SampledSignal, z: PhasePoint) -> SampledSignal {
    let shifted = fourier_multiplier(f, |xi| (-2.0 * PI * z.x * xi * I).exp());
    if z.xi == 0.0 {
        return shifted;
    }
    shifted.multiply_by(|x| (2.0 * PI * z.xi * x * I).exp())
}

/// Analytic signals used across tests and experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalKind {
    /// `e^{-pi x^2}`
    Gaussian,
    /// `e^{-pi (x/width)^2}`
    WideGaussian { width: f64 },
    /// `e^{2 pi i x xi0}`
    PlaneWave { xi0: f64 },
    /// `e^{pi i c x^2}`
    Chirp { c: f64 },
    Constant,
    /// `pi(z) phi` with `phi` the standard gaussian.
    GaborAtom { x: f64, xi: f64 },
    /// Gaussian atom multiplied by a chirp, `pi(z)(e^{pi i c x^2} phi)`.
    ChirpedAtom { x: f64, xi: f64, c: f64 },
    /// L^2-normalized eigenfunctions of `-(1/4pi) d^2/dx^2 + pi x^2`.
    Hermite { n: usize },
    /// Eigenmodes of the oscillator perturbed by `-|sin x|^mu`.
    PerturbedMode { n: usize, mu: f64 },
}

impl SignalKind {
    /// Builds a kind from a name and a flat parameter list, as written on a
    /// command line. Missing parameters default to zero.
    pub fn from_name(name: &str, params: &[(&str, f64)]) -> Result<Self> {
        let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).unwrap_or(0.0);
        let kind = match name {
            "gaussian" => SignalKind::Gaussian,
            "wide_gaussian" => SignalKind::WideGaussian { width: get("width") },
            "plane_wave" => SignalKind::PlaneWave { xi0: get("xi0") },
            "chirp" => SignalKind::Chirp { c: get("c") },
            "constant" => SignalKind::Constant,
            "gabor_atom" => SignalKind::GaborAtom { x: get("x"), xi: get("xi") },
            "chirped_atom" => SignalKind::ChirpedAtom { x: get("x"), xi: get("xi"), c: get("c") },
            "hermite" => SignalKind::Hermite { n: get("n") as usize },
            "perturbed_mode" => SignalKind::PerturbedMode { n: get("n") as usize, mu: get("mu") },
            other => return Err(Error::Config(format!("unknown signal kind '{other}'"))),
        };
        Ok(kind)
    }
}

/// Samples the named analytic signal on `grid`.
pub fn make_test_signal(kind: &SignalKind, grid: Grid1D) -> Result<SampledSignal> {
    let gauss = |x: f64| (-PI * x * x).exp();
    let s = match *kind {
        SignalKind::Gaussian => SampledSignal::from_real_fn(grid, gauss),
        SignalKind::WideGaussian { width } => {
            if !(width > 0.0) {
                return Err(Error::Config(format!("gaussian width must be positive, got {width}")));
            }
            SampledSignal::from_real_fn(grid, |x| gauss(x / width))
        }
        SignalKind::PlaneWave { xi0 } => SampledSignal::from_fn(grid, |x| (2.0 * PI * xi0 * x * I).exp()),
        SignalKind::Chirp { c } => SampledSignal::from_fn(grid, |x| (PI * c * x * x * I).exp()),
        SignalKind::Constant => SampledSignal::from_real_fn(grid, |_| 1.0),
        SignalKind::GaborAtom { x, xi } => {
            tf_shift(&SampledSignal::from_real_fn(grid, gauss), PhasePoint::new(x, xi))
        }
        SignalKind::ChirpedAtom { x, xi, c } => {
            let base = SampledSignal::from_fn(grid, |t| gauss(t) * (PI * c * t * t * I).exp());
            tf_shift(&base, PhasePoint::new(x, xi))
        }
        SignalKind::Hermite { n } => hermite_function(grid, n),
        SignalKind::PerturbedMode { n, mu } => crate::propagators::perturbed_eigenmode(grid, n, mu)?,
    };
    Ok(s)
}

/// `h_n(x) = (2 pi)^{1/4} psi_n(sqrt(2 pi) x)` with `psi_n` the orthonormal
/// Hermite functions; `h_0` is the normalized `e^{-pi x^2}`.
pub fn hermite_function(grid: Grid1D, n: usize) -> SampledSignal {
    let scale = (2.0 * PI).sqrt();
    let pref = (2.0 * PI).powf(0.25);
    SampledSignal::from_real_fn(grid, |x| {
        let y = scale * x;
        let mut prev = 0.0;
        let mut cur = PI.powf(-0.25) * (-0.5 * y * y).exp();
        for k in 0..n {
            let kf = k as f64;
            let next = (2.0 / (kf + 1.0)).sqrt() * y * cur - (kf / (kf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
        }
        pref * cur
    })
}
