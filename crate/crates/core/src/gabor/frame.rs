use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{stft, synthesis, GaborCoefficients, Lattice};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, SampledSignal};

/// Ratio below which the lower frame bound counts as zero.
const FRAME_RATIO_FLOOR: f64 = 1e-10;

/// Window plus a separable lattice `alpha Z x beta Z` closed on the grid torus.
#[derive(Debug, Clone)]
pub struct GaborSystem {
    window: SampledSignal,
    lattice: Lattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    pub lower: f64,
    pub upper: f64,
    pub is_frame: bool,
}

impl FrameBounds {
    pub fn ratio(&self) -> f64 {
        self.upper / self.lower
    }
}

fn step_of(value: f64, unit: f64, what: &str) -> Result<usize> {
    let r = value / unit;
    let k = r.round();
    if k < 1.0 || (r - k).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::Config(format!("{what} = {value} is not a positive multiple of the grid step {unit}")));
    }
    Ok(k as usize)
}

impl GaborSystem {
    /// `alpha` must be a multiple of `dx` and `beta` of `dxi`, each dividing
    /// the grid period.
    pub fn new(window: SampledSignal, alpha: f64, beta: f64) -> Result<Self> {
        let grid = *window.grid();
        if window.norm_sqr() == 0.0 {
            return Err(Error::InvalidArgument("window is zero".into()));
        }
        let a = step_of(alpha, grid.dx(), "alpha")?;
        let b = step_of(beta, grid.dxi(), "beta")?;
        let lattice = Lattice::torus(grid, a, b)?;
        Ok(Self { window, lattice })
    }

    pub fn window(&self) -> &SampledSignal {
        &self.window
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn grid(&self) -> &Grid1D {
        self.window.grid()
    }

    /// Dense `S = dx sum_lambda pi(lambda)g (pi(lambda)g)^*`, so that
    /// `<S f, f> = sum |<f, pi(lambda) g>|^2` in the grid inner product.
    ///
    /// The modulation sum is carried out in closed form: it vanishes unless
    /// `i - j` is a multiple of `N / b` and equals `N / b` otherwise.
    pub fn frame_operator(&self) -> DMatrix<Complex64> {
        let grid = *self.grid();
        let n = grid.len();
        let period = n / self.lattice.freq_step();
        let count = (n / self.lattice.freq_step()) as f64;
        let g = self.window.values();
        let shifts: Vec<i64> = self.lattice.time_indices().iter().map(|&m| m as i64 - (n / 2) as i64).collect();
        let dx = grid.dx();
        DMatrix::from_fn(n, n, |i, j| {
            let d = (i as i64 - j as i64).rem_euclid(n as i64) as usize;
            if !d.is_multiple_of(period) {
                return Complex64::new(0.0, 0.0);
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for &s in &shifts {
                let gi = g[(i as i64 - s).rem_euclid(n as i64) as usize];
                let gj = g[(j as i64 - s).rem_euclid(n as i64) as usize];
                acc += gi * gj.conj();
            }
            acc * (count * dx)
        })
    }

    /// Extreme eigenvalues of the frame operator.
    pub fn frame_bounds(&self) -> FrameBounds {
        let eig = nalgebra::SymmetricEigen::new(self.frame_operator());
        let lower = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
        let upper = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        FrameBounds { lower, upper, is_frame: lower > FRAME_RATIO_FLOOR * upper }
    }

    /// Canonical dual window `S^{-1} g`.
    pub fn dual_window(&self) -> Result<SampledSignal> {
        let b = self.frame_bounds();
        if !b.is_frame {
            return Err(Error::NotAFrame { lower: b.lower, upper: b.upper });
        }
        let s = self.frame_operator();
        let rhs = DVector::from_column_slice(self.window.values());
        let sol = match s.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => s
                .lu()
                .solve(&rhs)
                .ok_or(Error::NotAFrame { lower: b.lower, upper: b.upper })?,
        };
        SampledSignal::new(*self.grid(), sol.iter().cloned().collect())
    }

    /// `<f, pi(lambda) g>` for every lattice point.
    pub fn analysis(&self, f: &SampledSignal) -> Result<GaborCoefficients> {
        stft(f, &self.window, &self.lattice)
    }

    /// `sum_lambda <f, pi(lambda) g> pi(lambda) gamma`, which returns `f` when
    /// `gamma` is the canonical dual.
    pub fn reconstruct(&self, f: &SampledSignal, gamma: &SampledSignal) -> Result<SampledSignal> {
        synthesis(&self.analysis(f)?, gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_test_signal, tf_shift, SignalKind};

    fn frame_grid() -> Grid1D {
        Grid1D::new(256, 16.0).unwrap()
    }

    fn brute_force_operator(sys: &GaborSystem) -> DMatrix<Complex64> {
        let grid = *sys.grid();
        let n = grid.len();
        let mut s = DMatrix::zeros(n, n);
        for z in sys.lattice().points() {
            let atom = tf_shift(sys.window(), z);
            let v = DVector::from_column_slice(atom.values());
            s += &v * v.adjoint();
        }
        s * Complex64::new(grid.dx(), 0.0)
    }

    #[test]
    fn structured_operator_matches_atom_sum() {
        let grid = Grid1D::new(64, 8.0).unwrap();
        let g = make_test_signal(&SignalKind::Gaussian, grid).unwrap();
        let sys = GaborSystem::new(g, 0.5, 0.5).unwrap();
        let diff = (sys.frame_operator() - brute_force_operator(&sys)).camax();
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn impulse_window_gives_identity() {
        let grid = Grid1D::new(64, 8.0).unwrap();
        let g = SampledSignal::impulse(grid, 32);
        let sys = GaborSystem::new(g, grid.dx(), 1.0 / grid.dx()).unwrap();
        let s = sys.frame_operator();
        let id = DMatrix::<Complex64>::identity(64, 64);
        assert!((s - id).camax() < 1e-12);
        let b = sys.frame_bounds();
        assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_half_lattice_bounds_are_sane() {
        let g = make_test_signal(&SignalKind::Gaussian, frame_grid()).unwrap();
        let mean = g.norm_sqr() / 0.25;
        let b = GaborSystem::new(g, 0.5, 0.5).unwrap().frame_bounds();
        assert!(b.is_frame);
        assert!(b.ratio() < 1.1);
        // the eigenvalue mean is ||g||^2 / (alpha beta)
        assert!(b.lower <= mean + 1e-9 && b.upper >= mean - 1e-9, "{b:?}");
    }

    #[test]
    fn overcritical_lattice_is_not_a_frame() {
        let g = make_test_signal(&SignalKind::Gaussian, frame_grid()).unwrap();
        let sys = GaborSystem::new(g, 2.0, 2.0).unwrap();
        assert!(!sys.frame_bounds().is_frame);
        assert!(matches!(sys.dual_window(), Err(Error::NotAFrame { .. })));
    }

    #[test]
    fn dual_window_reconstructs() {
        let grid = frame_grid();
        let g = make_test_signal(&SignalKind::Gaussian, grid).unwrap();
        let sys = GaborSystem::new(g, 0.5, 0.5).unwrap();
        let gamma = sys.dual_window().unwrap();
        let f = make_test_signal(&SignalKind::ChirpedAtom { x: 1.0, xi: -0.5, c: 0.7 }, grid).unwrap();
        let back = sys.reconstruct(&f, &gamma).unwrap();
        assert!(back.relative_error(&f) < 1e-10);
    }

    #[test]
    fn rejects_off_grid_steps() {
        let g = make_test_signal(&SignalKind::Gaussian, frame_grid()).unwrap();
        assert!(matches!(GaborSystem::new(g.clone(), 0.3, 0.5), Err(Error::Config(_))));
        assert!(matches!(GaborSystem::new(g, 0.5, 0.0), Err(Error::Config(_))));
    }
}
