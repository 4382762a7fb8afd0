//! Short-time Fourier transform on phase-space lattices, its inverse, Gabor
//! frames and weighted modulation norms.
//!
//! The STFT uses the Riemann sum
//! `V_g f(x_m, xi_k) = dx * sum_j f(x_j) conj(g(x_j - x_m)) e^{-2 pi i x_j xi_k}`,
//! one FFT per time shift. Window translation is periodic on the grid, so
//! covariance under lattice time-frequency shifts is exact.

mod frame;
mod weight;

pub use frame::{FrameBounds, GaborSystem};
pub use weight::{
    modulation_norm, modulation_norm_with, subconvolution_constant, weight_equivalence_check, Exponent, Weight,
};

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{inverse_fourier, Grid1D, PhasePoint, SampledSignal};

/// Rectangular set of phase-space grid points: a product of time indices
/// and frequency-bin indices of one [`Grid1D`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    grid: Grid1D,
    time_step: usize,
    freq_step: usize,
    time_indices: Vec<usize>,
    freq_indices: Vec<usize>,
}

impl Lattice {
    /// Every grid point: `alpha = dx`, `beta = dxi`.
    pub fn full(grid: Grid1D) -> Self {
        let n = grid.len();
        Self { grid, time_step: 1, freq_step: 1, time_indices: (0..n).collect(), freq_indices: (0..n).collect() }
    }

    /// Lattice `alpha Z x beta Z` closed on the torus, with `alpha = time_step * dx`
    /// and `beta = freq_step * dxi`; both steps must divide `N`.
    pub fn torus(grid: Grid1D, time_step: usize, freq_step: usize) -> Result<Self> {
        let n = grid.len();
        if time_step == 0 || freq_step == 0 || !n.is_multiple_of(time_step) || !n.is_multiple_of(freq_step) {
            return Err(Error::Config(format!(
                "lattice steps ({time_step}, {freq_step}) must divide N = {n}"
            )));
        }
        let idx = |step: usize| {
            let mut v: Vec<usize> = (0..n / step).map(|m| (n / 2 + m * step) % n).collect();
            v.sort_unstable();
            v
        };
        Ok(Self { grid, time_step, freq_step, time_indices: idx(time_step), freq_indices: idx(freq_step) })
    }

    /// Points `(m alpha, n beta)` with `|m| <= half_x`, `|n| <= half_xi`.
    pub fn centered(grid: Grid1D, time_step: usize, freq_step: usize, half_x: usize, half_xi: usize) -> Result<Self> {
        let n = grid.len() as i64;
        if time_step == 0 || freq_step == 0 {
            return Err(Error::Config("lattice steps must be positive".into()));
        }
        let idx = |step: usize, half: usize| -> Result<Vec<usize>> {
            let h = half as i64;
            if (2 * h * step as i64) >= n {
                return Err(Error::Config(format!("lattice of {} points with step {step} wraps the grid", 2 * h + 1)));
            }
            Ok((-h..=h).map(|m| (n / 2 + m * step as i64).rem_euclid(n) as usize).collect())
        };
        Ok(Self {
            grid,
            time_step,
            freq_step,
            time_indices: idx(time_step, half_x)?,
            freq_indices: idx(freq_step, half_xi)?,
        })
    }

    /// Centered lattice covering the square `|x|, |xi| <= radius`.
    pub fn within(grid: Grid1D, time_step: usize, freq_step: usize, radius: f64) -> Result<Self> {
        let hx = (radius / (time_step as f64 * grid.dx())).floor() as usize;
        let hxi = (radius / (freq_step as f64 * grid.dxi())).floor() as usize;
        Self::centered(grid, time_step, freq_step, hx, hxi)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.time_step as f64 * self.grid.dx()
    }

    pub fn beta(&self) -> f64 {
        self.freq_step as f64 * self.grid.dxi()
    }

    pub fn time_step(&self) -> usize {
        self.time_step
    }

    pub fn freq_step(&self) -> usize {
        self.freq_step
    }

    pub fn time_indices(&self) -> &[usize] {
        &self.time_indices
    }

    pub fn freq_indices(&self) -> &[usize] {
        &self.freq_indices
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.time_indices.len(), self.freq_indices.len())
    }

    pub fn len(&self) -> usize {
        self.time_indices.len() * self.freq_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, ti: usize, fi: usize) -> PhasePoint {
        PhasePoint::new(self.grid.x(self.time_indices[ti]), self.grid.xi(self.freq_indices[fi]))
    }

    /// All points, time-major.
    pub fn points(&self) -> Vec<PhasePoint> {
        let mut out = Vec::with_capacity(self.len());
        for ti in 0..self.time_indices.len() {
            for fi in 0..self.freq_indices.len() {
                out.push(self.point(ti, fi));
            }
        }
        out
    }

    pub fn is_full(&self) -> bool {
        let n = self.grid.len();
        self.time_step == 1 && self.freq_step == 1 && self.time_indices.len() == n && self.freq_indices.len() == n
    }

    /// Area of one lattice cell, the quadrature weight of coefficient sums.
    pub fn cell_area(&self) -> f64 {
        self.alpha() * self.beta()
    }
}

/// STFT samples over a [`Lattice`], row-major over (time, frequency).
#[derive(Debug, Clone, PartialEq)]
pub struct GaborCoefficients {
    lattice: Lattice,
    values: Vec<Complex64>,
}

#[derive(Serialize)]
struct CoefficientsJson<'a> {
    grid: &'a Grid1D,
    lattice: LatticeJson<'a>,
    values: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct LatticeJson<'a> {
    alpha: f64,
    beta: f64,
    x: Vec<f64>,
    xi: Vec<f64>,
    #[serde(skip)]
    _marker: std::marker::PhantomData<&'a ()>,
}

impl GaborCoefficients {
    pub fn new(lattice: Lattice, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for a lattice of {} points",
                values.len(),
                lattice.len()
            )));
        }
        Ok(Self { lattice, values })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, ti: usize, fi: usize) -> Complex64 {
        self.values[ti * self.lattice.freq_indices.len() + fi]
    }

    /// Iterator over `(point, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (PhasePoint, Complex64)> + '_ {
        let nf = self.lattice.freq_indices.len();
        self.values.iter().enumerate().map(move |(i, v)| (self.lattice.point(i / nf, i % nf), *v))
    }

    /// `(sum |c|^2 alpha beta)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.lattice.cell_area()).sqrt()
    }

    /// Centre of mass of `|c|^2` over the lattice.
    pub fn energy_centroid(&self) -> PhasePoint {
        let (mut x, mut xi, mut m) = (0.0, 0.0, 0.0);
        for (z, v) in self.iter() {
            let e = v.norm_sqr();
            x += z.x * e;
            xi += z.xi * e;
            m += e;
        }
        if m == 0.0 {
            PhasePoint::ORIGIN
        } else {
            PhasePoint::new(x / m, xi / m)
        }
    }

    /// Point of largest magnitude.
    pub fn peak(&self) -> (PhasePoint, f64) {
        self.iter()
            .map(|(z, v)| (z, v.norm()))
            .fold((PhasePoint::ORIGIN, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc })
    }

    /// CSV with columns `x,xi,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,xi,re,im")?;
        for (z, v) in self.iter() {
            writeln!(w, "{:.12e},{:.12e},{:.12e},{:.12e}", z.x, z.xi, v.re, v.im)?;
        }
        Ok(())
    }

    /// Grid and lattice metadata plus a flat `[re, im]` array, row-major over
    /// time then frequency.
    pub fn to_json(&self) -> serde_json::Value {
        let lat = &self.lattice;
        let doc = CoefficientsJson {
            grid: &lat.grid,
            lattice: LatticeJson {
                alpha: lat.alpha(),
                beta: lat.beta(),
                x: lat.time_indices.iter().map(|&j| lat.grid.x(j)).collect(),
                xi: lat.freq_indices.iter().map(|&k| lat.grid.xi(k)).collect(),
                _marker: std::marker::PhantomData,
            },
            values: self.values.iter().map(|v| [v.re, v.im]).collect(),
        };
        serde_json::to_value(doc).expect("coefficients serialize")
    }
}

/// Spectrum of `f(x) conj(g(x - x_m))` for the window shifted to grid index `m`.
pub(crate) fn stft_column(f: &[Complex64], g: &[Complex64], m: usize, dx: f64) -> Vec<Complex64> {
    let n = f.len();
    let half = n / 2;
    let shift = m as i64 - half as i64;
    let mut buf: Vec<Complex64> = (0..n)
        .map(|j| {
            let gj = g[(j as i64 - shift).rem_euclid(n as i64) as usize];
            let v = f[j] * gj.conj();
            if j % 2 == 0 {
                v
            } else {
                -v
            }
        })
        .collect();
    fft::forward(&mut buf);
    for (k, v) in buf.iter_mut().enumerate() {
        *v *= if (k + half).is_multiple_of(2) { dx } else { -dx };
    }
    buf
}

/// `V_g f` on `lattice`.
pub fn stft(f: &SampledSignal, g: &SampledSignal, lattice: &Lattice) -> Result<GaborCoefficients> {
    f.grid().check_same(g.grid())?;
    f.grid().check_same(lattice.grid())?;
    let dx = f.grid().dx();
    let fv = f.values();
    let gv = g.values();
    let rows: Vec<Vec<Complex64>> = lattice
        .time_indices
        .par_iter()
        .map(|&m| {
            let col = stft_column(fv, gv, m, dx);
            lattice.freq_indices.iter().map(|&k| col[k]).collect()
        })
        .collect();
    Ok(GaborCoefficients { lattice: lattice.clone(), values: rows.concat() })
}

/// `V_g f` over every grid point.
pub fn stft_full(f: &SampledSignal, g: &SampledSignal) -> Result<GaborCoefficients> {
    stft(f, g, &Lattice::full(*f.grid()))
}

/// `sum_lambda c_lambda pi(lambda) gamma`, unweighted.
pub fn synthesis(coeffs: &GaborCoefficients, gamma: &SampledSignal) -> Result<SampledSignal> {
    let lat = &coeffs.lattice;
    let grid = *lat.grid();
    grid.check_same(gamma.grid())?;
    let n = grid.len();
    let nf = lat.freq_indices.len();
    let dxi = grid.dxi();
    let gv = gamma.values();
    let parts: Vec<Vec<Complex64>> = lat
        .time_indices
        .par_iter()
        .enumerate()
        .map(|(ti, &m)| {
            let mut spec = vec![Complex64::new(0.0, 0.0); n];
            for (fi, &k) in lat.freq_indices.iter().enumerate() {
                spec[k] += coeffs.values[ti * nf + fi];
            }
            let dual = SampledSignal::new(grid.dual(), spec).expect("length matches");
            // inverse_fourier carries a dxi weight; the synthesis sum is unweighted
            let modulated = inverse_fourier(&dual);
            let shift = m as i64 - (n / 2) as i64;
            (0..n)
                .map(|j| modulated.values()[j] / dxi * gv[(j as i64 - shift).rem_euclid(n as i64) as usize])
                .collect()
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for p in parts {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    SampledSignal::new(grid, out)
}

/// Inverse STFT `f = ||g||^{-2} int V_g f(z) pi(z) g dz` from full-resolution
/// coefficients.
pub fn istft(coeffs: &GaborCoefficients, g: &SampledSignal) -> Result<SampledSignal> {
    if !coeffs.lattice.is_full() {
        return Err(Error::CoarseLattice(format!(
            "alpha = {}, beta = {}",
            coeffs.lattice.alpha(),
            coeffs.lattice.beta()
        )));
    }
    let gn = g.norm_sqr();
    if gn == 0.0 {
        return Err(Error::InvalidArgument("window is zero".into()));
    }
    let s = synthesis(coeffs, g)?;
    Ok(s.scale(Complex64::new(coeffs.lattice.cell_area() / gn, 0.0)))
}
