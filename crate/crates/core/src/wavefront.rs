//! Global and Gabor wave front sets estimated sector by sector in phase space.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::grid::{fourier, make_test_signal, Grid1D, SampledSignal, SignalKind};
use crate::propagators::{split_step, HamiltonianSpec};
use crate::symplectic::SymplecticMatrix;
use crate::weyl::{weyl_quantize_with, Quantization, Symbol};

/// Conic sectors of the annulus `r0 <= |z| <= R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SectorGrid {
    /// Number of angular sectors; sector `k` is centred at `k * 360 / K` degrees.
    pub sectors: usize,
    pub r0: f64,
    /// Outer radius; `None` uses three quarters of the grid half-span.
    pub r_max: Option<f64>,
    pub shells: usize,
}

impl Default for SectorGrid {
    fn default() -> Self {
        Self { sectors: 72, r0: 2.0, r_max: None, shells: 12 }
    }
}

impl SectorGrid {
    pub fn validate(&self) -> Result<()> {
        if self.sectors < 4 || !self.sectors.is_multiple_of(2) {
            return Err(Error::Config(format!("sector count must be even and at least 4, got {}", self.sectors)));
        }
        if !(self.r0 > 0.0) || self.shells < 2 {
            return Err(Error::Config("inner radius must be positive and shells at least 2".into()));
        }
        if let Some(r) = self.r_max {
            if !(r > self.r0) {
                return Err(Error::Config(format!("outer radius {r} must exceed inner radius {}", self.r0)));
            }
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        2.0 * PI / self.sectors as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        k as f64 * self.width()
    }

    /// Sector containing the direction at angle `theta` (radians).
    pub fn sector_of(&self, theta: f64) -> usize {
        ((theta / self.width()).round() as i64).rem_euclid(self.sectors as i64) as usize
    }

    pub fn outer_radius(&self, grid: &Grid1D) -> f64 {
        self.r_max.unwrap_or_else(|| 0.75 * (0.5 * grid.length()).min(0.5 / grid.dxi()))
    }

    /// Circular index distance.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b) % self.sectors;
        d.min(self.sectors - d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Sectors whose fitted decay exponent falls below this are singular.
    pub rho: f64,
    /// Growth of the weighted integral under refinement marking divergence.
    pub growth: f64,
    /// Relative level below which samples count as roundoff.
    pub floor: f64,
    /// Fraction of the radial range skipped before the decay regression.
    pub fit_from: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { rho: 3.0, growth: 1.5, floor: 1e-10, fit_from: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorRecord {
    pub index: usize,
    pub angle_deg: f64,
    pub direction: [f64; 2],
    /// Fitted decay exponent of `|V_g u|` along the sector.
    pub rho: Option<f64>,
    /// Weighted integral on the base grid.
    pub integral: Option<f64>,
    /// Weighted integral on the refined grid.
    pub refined_integral: Option<f64>,
    pub singular: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Global,
    Sobolev,
    Propagated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFrontEstimate {
    pub kind: EstimateKind,
    /// Integrability exponent; infinite for the sup version.
    pub p: Option<f64>,
    pub r: Option<f64>,
    pub grid: SectorGrid,
    pub thresholds: Thresholds,
    pub sectors: Vec<SectorRecord>,
}

fn record(grid: &SectorGrid, k: usize) -> SectorRecord {
    let theta = grid.center(k);
    SectorRecord {
        index: k,
        angle_deg: theta.to_degrees(),
        direction: [theta.cos(), theta.sin()],
        rho: None,
        integral: None,
        refined_integral: None,
        singular: false,
    }
}

impl WaveFrontEstimate {
    pub fn singular_sectors(&self) -> Vec<usize> {
        self.sectors.iter().filter(|s| s.singular).map(|s| s.index).collect()
    }

    pub fn directions(&self) -> Vec<[f64; 2]> {
        self.sectors.iter().filter(|s| s.singular).map(|s| s.direction).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.iter().all(|s| !s.singular)
    }

    /// True when the sectors containing `v` and `-v` are flagged and no other
    /// sector lies more than `slack` sectors from them.
    pub fn matches_line(&self, v: [f64; 2], slack: usize) -> bool {
        let a = self.grid.sector_of(v[1].atan2(v[0]));
        let b = self.grid.sector_of((-v[1]).atan2(-v[0]));
        let flagged = self.singular_sectors();
        let near = |k: usize| self.grid.distance(k, a) <= slack || self.grid.distance(k, b) <= slack;
        let hit = |c: usize| flagged.iter().any(|&k| self.grid.distance(k, c) <= slack);
        hit(a) && hit(b) && flagged.iter().all(|&k| near(k))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let p = self.p.map(|p| if p.is_infinite() { json!("inf") } else { json!(p) });
        json!({
            "params": {
                "kind": self.kind,
                "p": p,
                "r": self.r,
                "sectors": self.grid,
                "thresholds": self.thresholds,
            },
            "sectors": self.sectors,
        })
    }

    /// Columns `index,angle_deg,rho,integral,refined_integral,singular`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "index,angle_deg,rho,integral,refined_integral,singular")?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.12e}"));
        for s in &self.sectors {
            writeln!(
                out,
                "{},{:.6},{},{},{},{}",
                s.index,
                s.angle_deg,
                opt(s.rho),
                opt(s.integral),
                opt(s.refined_integral),
                s.singular as u8
            )?;
        }
        Ok(())
    }
}

/// A signal that can be sampled on any grid.
pub trait SignalSource: Sync {
    fn sample(&self, grid: Grid1D) -> Result<SampledSignal>;
}

impl SignalSource for SignalKind {
    fn sample(&self, grid: Grid1D) -> Result<SampledSignal> {
        make_test_signal(self, grid)
    }
}

/// Closure-backed [`SignalSource`].
pub struct FnSource<F>(pub F);

impl<F: Fn(Grid1D) -> Result<SampledSignal> + Sync> SignalSource for FnSource<F> {
    fn sample(&self, grid: Grid1D) -> Result<SampledSignal> {
        (self.0)(grid)
    }
}

/// Phase-space centroid `(int x |u|^2, int xi |u^|^2) / |u|^2`.
pub fn centroid(u: &SampledSignal) -> (f64, f64) {
    let moment = |f: &SampledSignal, coord: &dyn Fn(usize) -> f64| {
        let (m, n) = f.values().iter().enumerate().fold((0.0, 0.0), |(m, n), (j, v)| {
            (m + coord(j) * v.norm_sqr(), n + v.norm_sqr())
        });
        if n > 0.0 { m / n } else { 0.0 }
    };
    let grid = *u.grid();
    let fhat = fourier(u);
    (moment(u, &|j| grid.x(j)), moment(&fhat, &|k| grid.xi(k)))
}

/// Point evaluation of `V_g u(x, xi)` with `x` snapped to the grid and `xi` exact.
struct PointStft<'a> {
    u: &'a SampledSignal,
    center: (f64, f64),
    /// `(k, conj g_k)` over the numerical support of the window.
    window: Vec<(usize, Complex64)>,
}

impl<'a> PointStft<'a> {
    fn new(u: &'a SampledSignal, g: &SampledSignal) -> Result<Self> {
        u.grid().check_same(g.grid())?;
        let peak = g.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let window = g
            .values()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 1e-17 * peak)
            .map(|(k, v)| (k, v.conj()))
            .collect();
        Ok(Self { u, window, center: centroid(u) })
    }

    /// `V_g u` at distance `r` from the centroid in direction `(c, s)`.
    fn ray(&self, r: f64, c: f64, s: f64) -> Complex64 {
        self.eval(self.center.0 + r * c, self.center.1 + r * s)
    }

    fn eval(&self, x: f64, xi: f64) -> Complex64 {
        let grid = self.u.grid();
        let n = grid.len() as i64;
        let m = (x / grid.dx()).round() as i64;
        let u = self.u.values();
        let mut acc = Complex64::new(0.0, 0.0);
        for &(k, gk) in &self.window {
            // g(t - x) at t = x_j with j = k + m; t is the unwrapped coordinate
            let j = k as i64 + m;
            let t = grid.x(0) + j as f64 * grid.dx();
            let v = u[j.rem_euclid(n) as usize];
            acc += v * gk * Complex64::from_polar(1.0, -2.0 * PI * xi * t);
        }
        acc * grid.dx()
    }
}

/// Global wave front set: per sector, shell maxima of `|V_g u|` along the
/// sector's central ray from the centroid of `u` regressed against `log <z>` over the outer radii;
/// sectors with fitted exponent below `thresholds.rho` are singular.
pub fn wavefront_global(
    u: &SampledSignal,
    g: &SampledSignal,
    sectors: &SectorGrid,
    thresholds: &Thresholds,
) -> Result<WaveFrontEstimate> {
    sectors.validate()?;
    let stft = PointStft::new(u, g)?;
    let r_max = sectors.outer_radius(u.grid());
    let per_shell = 4;
    let shell_w = (r_max - sectors.r0) / sectors.shells as f64;
    let maxima: Vec<Vec<(f64, f64)>> = (0..sectors.sectors)
        .into_par_iter()
        .map(|k| {
            let (s, c) = sectors.center(k).sin_cos();
            (0..sectors.shells)
                .map(|sh| {
                    (0..per_shell)
                        .map(|i| {
                            let r = sectors.r0 + (sh as f64 + (i as f64 + 0.5) / per_shell as f64) * shell_w;
                            (r, stft.ray(r, c, s).norm())
                        })
                        .fold((0.0, -1.0), |a, b| if b.1 > a.1 { b } else { a })
                })
                .collect()
        })
        .collect();
    let peak = maxima.iter().flatten().map(|m| m.1).fold(0.0, f64::max);
    let fit_start = sectors.r0 + thresholds.fit_from * (r_max - sectors.r0);
    let records = maxima
        .iter()
        .enumerate()
        .map(|(k, shells)| {
            let pts: Vec<(f64, f64)> = shells
                .iter()
                .filter(|(r, m)| *r >= fit_start && *m > thresholds.floor * peak)
                .map(|(r, m)| ((1.0 + r * r).sqrt().ln(), m.ln()))
                .collect();
            let mut rec = record(sectors, k);
            if pts.len() >= 2 {
                let rho = -slope(&pts);
                rec.rho = Some(rho);
                rec.singular = rho < thresholds.rho;
            }
            rec
        })
        .collect();
    Ok(WaveFrontEstimate {
        kind: EstimateKind::Global,
        p: None,
        r: None,
        grid: *sectors,
        thresholds: *thresholds,
        sectors: records,
    })
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

/// Per sector `int |V_g u|^p <z>^{pr} dz` over `r0 <= |z| <= r_max` (weighted
/// sup for infinite `p`) by polar quadrature, plus the peak sample.
fn sector_integrals(u: &SampledSignal, g: &SampledSignal, sectors: &SectorGrid, r_max: f64, p: f64, r: f64) -> Result<(Vec<f64>, f64)> {
    let stft = PointStft::new(u, g)?;
    let h = 0.125;
    let sub = 5;
    let dtheta = sectors.width() / sub as f64;
    let radii: Vec<f64> = {
        let n = ((r_max - sectors.r0) / h).ceil() as usize;
        let step = (r_max - sectors.r0) / n as f64;
        (0..n).map(|i| sectors.r0 + (i as f64 + 0.5) * step).collect()
    };
    let dr = (r_max - sectors.r0) / radii.len() as f64;
    let out: Vec<(f64, f64)> = (0..sectors.sectors)
        .into_par_iter()
        .map(|k| {
            let mut acc = 0.0f64;
            let mut peak = 0.0f64;
            for i in 0..sub {
                let theta = sectors.center(k) + ((i as f64 + 0.5) / sub as f64 - 0.5) * sectors.width();
                let (s, c) = theta.sin_cos();
                for &rad in &radii {
                    let v = stft.ray(rad, c, s).norm();
                    peak = peak.max(v);
                    let w = (1.0 + rad * rad).sqrt().powf(r);
                    if p.is_infinite() {
                        acc = acc.max(v * w);
                    } else {
                        acc += (v * w).powf(p) * rad * dr * dtheta;
                    }
                }
            }
            (acc, peak)
        })
        .collect();
    let peak = out.iter().map(|o| o.1).fold(0.0, f64::max);
    Ok((out.into_iter().map(|o| o.0).collect(), peak))
}

/// Gabor wave front set `WF^{p,r}_G`: a sector is singular when its weighted
/// integral clears the roundoff threshold on the base grid and grows by more
/// than `thresholds.growth` on the self-dual grid of twice the size, whose
/// annulus reaches `sqrt 2` times further. For `p = inf` the weighted sup must
/// grow faster than `(R'/R)^{r/2}`.
pub fn wavefront_sobolev(
    u: &dyn SignalSource,
    g: &SignalKind,
    p: f64,
    r: f64,
    base: Grid1D,
    sectors: &SectorGrid,
    thresholds: &Thresholds,
) -> Result<WaveFrontEstimate> {
    sectors.validate()?;
    if !(r > 0.0) {
        return Err(Error::Config(format!("weight exponent r must be positive, got {r}")));
    }
    if !(p >= 1.0) {
        return Err(Error::Config(format!("integrability exponent p must be in [1, inf], got {p}")));
    }
    let fine = Grid1D::self_dual(2 * base.len())?;
    let r_base = sectors.outer_radius(&base);
    let r_fine = r_base * fine.length() / base.length();
    let (coarse_int, peak) = sector_integrals(&u.sample(base)?, &g.sample(base)?, sectors, r_base, p, r)?;
    let (fine_int, _) = sector_integrals(&u.sample(fine)?, &g.sample(fine)?, sectors, r_fine, p, r)?;
    let (threshold, growth) = if p.is_infinite() {
        (thresholds.floor * peak, (r_fine / r_base).powf(r / 2.0))
    } else {
        let area = 0.5 * sectors.width() * (r_base * r_base - sectors.r0 * sectors.r0);
        ((thresholds.floor * peak).powf(p) * area, thresholds.growth)
    };
    let records = (0..sectors.sectors)
        .map(|k| {
            let mut rec = record(sectors, k);
            rec.integral = Some(coarse_int[k]);
            rec.refined_integral = Some(fine_int[k]);
            rec.singular = coarse_int[k] > threshold && fine_int[k] > growth * coarse_int[k];
            rec
        })
        .collect();
    Ok(WaveFrontEstimate {
        kind: EstimateKind::Sobolev,
        p: Some(p),
        r: Some(r),
        grid: *sectors,
        thresholds: *thresholds,
        sectors: records,
    })
}

/// Pushes every singular direction `v` to `A v / |A v|` and re-bins.
pub fn propagate_wavefront(wf: &WaveFrontEstimate, a: &SymplecticMatrix) -> WaveFrontEstimate {
    let mut sectors: Vec<SectorRecord> = (0..wf.grid.sectors).map(|k| record(&wf.grid, k)).collect();
    for s in wf.sectors.iter().filter(|s| s.singular) {
        let (x, xi) = (s.direction[0], s.direction[1]);
        let w = a.apply(crate::grid::PhasePoint::new(x, xi));
        sectors[wf.grid.sector_of(w.xi.atan2(w.x))].singular = true;
    }
    WaveFrontEstimate { kind: EstimateKind::Propagated, sectors, ..wf.clone() }
}

/// Sectors of `a` farther than `slack` sectors from every sector of `b`.
fn unmatched(grid: &SectorGrid, a: &[usize], b: &[usize], slack: usize) -> Vec<usize> {
    a.iter().copied().filter(|&k| b.iter().all(|&m| grid.distance(k, m) > slack)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PropagationReport {
    pub t: f64,
    pub p: f64,
    pub r: f64,
    pub initial: Vec<usize>,
    pub predicted: Vec<usize>,
    pub observed: Vec<usize>,
    /// Predicted sectors with no observed sector within the slack.
    pub missed: Vec<usize>,
    /// Observed sectors with no predicted sector within the slack.
    pub extra: Vec<usize>,
    pub passed: bool,
}

/// Compares `WF^{p,r}_G(e^{itH} u0)` with `A_t WF^{p,r}_G(u0)`, one sector of
/// slack either way. Requires `0 < 2r < s - 2` for the class `s` of the
/// perturbation.
#[allow(clippy::too_many_arguments)]
pub fn verify_propagation(
    h: &HamiltonianSpec,
    u0: &dyn SignalSource,
    t: f64,
    p: f64,
    r: f64,
    steps: usize,
    base: Grid1D,
    sectors: &SectorGrid,
    thresholds: &Thresholds,
) -> Result<PropagationReport> {
    let s = h.perturbation.as_ref().map_or(f64::INFINITY, |p| p.class_s());
    if !(r > 0.0 && 2.0 * r < s - 2.0) {
        return Err(Error::Config(format!(
            "propagation of WF^(p,r) needs 0 < 2r < s - 2d; got r = {r}, s = {s}, d = 1"
        )));
    }
    let window = SignalKind::Gaussian;
    let wf0 = wavefront_sobolev(u0, &window, p, r, base, sectors, thresholds)?;
    let evolved = FnSource(|grid: Grid1D| {
        let hg = h.on_grid(grid)?;
        Ok(split_step(&hg, &u0.sample(grid)?, t, steps)?.u_t)
    });
    let wft = wavefront_sobolev(&evolved, &window, p, r, base, sectors, thresholds)?;
    let predicted = propagate_wavefront(&wf0, &h.flow(t)).singular_sectors();
    let observed = wft.singular_sectors();
    let missed = unmatched(sectors, &predicted, &observed, 1);
    let extra = unmatched(sectors, &observed, &predicted, 1);
    Ok(PropagationReport {
        t,
        p,
        r,
        initial: wf0.singular_sectors(),
        passed: missed.is_empty() && extra.is_empty(),
        predicted,
        observed,
        missed,
        extra,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MicrolocalityReport {
    pub symbol: String,
    pub quantization: Quantization,
    pub input: Vec<usize>,
    pub output: Vec<usize>,
    /// Output sectors farther than one sector from every input sector.
    pub extra: Vec<usize>,
    pub passed: bool,
}

/// Checks `WF^{p,r}_G(sigma(x, D) u) subset WF^{p,r}_G(u)` with one sector of
/// slack.
#[allow(clippy::too_many_arguments)]
pub fn verify_microlocality(
    sigma: &Symbol,
    quantization: Quantization,
    u: &dyn SignalSource,
    p: f64,
    r: f64,
    base: Grid1D,
    sectors: &SectorGrid,
    thresholds: &Thresholds,
) -> Result<MicrolocalityReport> {
    let window = SignalKind::Gaussian;
    let wf_in = wavefront_sobolev(u, &window, p, r, base, sectors, thresholds)?;
    let applied = FnSource(|grid: Grid1D| {
        let op = weyl_quantize_with(&sigma.sample(grid), quantization, sigma.name());
        crate::metaplectic::LinearOperator::apply(&op, &u.sample(grid)?)
    });
    let wf_out = wavefront_sobolev(&applied, &window, p, r, base, sectors, thresholds)?;
    let input = wf_in.singular_sectors();
    let output = wf_out.singular_sectors();
    let extra = unmatched(sectors, &output, &input, 1);
    Ok(MicrolocalityReport {
        symbol: sigma.name().to_string(),
        quantization,
        passed: extra.is_empty(),
        input,
        output,
        extra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wf_grid() -> Grid1D {
        Grid1D::self_dual(1024).unwrap()
    }

    fn global(kind: SignalKind) -> WaveFrontEstimate {
        let g = wf_grid();
        let u = make_test_signal(&kind, g).unwrap();
        let w = make_test_signal(&SignalKind::Gaussian, g).unwrap();
        wavefront_global(&u, &w, &SectorGrid::default(), &Thresholds::default()).unwrap()
    }

    #[test]
    fn sector_geometry() {
        let s = SectorGrid::default();
        assert_eq!(s.sector_of(0.0), 0);
        assert_eq!(s.sector_of(PI), 36);
        assert_eq!(s.sector_of(-0.01), 0);
        assert_eq!(s.sector_of(2.0f64.atan2(1.0)), 13);
        assert_eq!(s.distance(1, 71), 2);
        assert!(SectorGrid { sectors: 7, ..s }.validate().is_err());
        assert!((s.outer_radius(&wf_grid()) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn global_anchors() {
        assert!(global(SignalKind::Gaussian).is_empty());
        let c = global(SignalKind::Constant);
        assert_eq!(c.singular_sectors(), vec![0, 36]);
        for xi0 in [1.0, -3.0] {
            assert_eq!(global(SignalKind::PlaneWave { xi0 }).singular_sectors(), vec![0, 36]);
        }
        for c in [1.0, 2.0] {
            let wf = global(SignalKind::Chirp { c });
            assert!(wf.matches_line([1.0, c], 1), "c={c}: {:?}", wf.singular_sectors());
        }
    }

    #[test]
    fn sobolev_anchors() {
        let th = Thresholds::default();
        let s = SectorGrid::default();
        let w = SignalKind::Gaussian;
        let gauss = wavefront_sobolev(&SignalKind::Gaussian, &w, 2.0, 1.0, wf_grid(), &s, &th).unwrap();
        assert!(gauss.is_empty());
        let c = wavefront_sobolev(&SignalKind::Constant, &w, 2.0, 1.0, wf_grid(), &s, &th).unwrap();
        assert_eq!(c.singular_sectors(), vec![0, 36]);
        let ch = wavefront_sobolev(&SignalKind::Chirp { c: 1.0 }, &w, 2.0, 1.0, wf_grid(), &s, &th).unwrap();
        assert!(ch.matches_line([1.0, 1.0], 1), "{:?}", ch.singular_sectors());
        let sup = wavefront_sobolev(&SignalKind::Constant, &w, f64::INFINITY, 1.0, wf_grid(), &s, &th).unwrap();
        assert_eq!(sup.singular_sectors(), vec![0, 36]);
        assert!(wavefront_sobolev(&SignalKind::Constant, &w, 2.0, 0.0, wf_grid(), &s, &th).is_err());
    }

    #[test]
    fn pushing_directions() {
        let c = global(SignalKind::Constant);
        assert_eq!(propagate_wavefront(&c, &SymplecticMatrix::identity(1)).singular_sectors(), c.singular_sectors());
        let rot = propagate_wavefront(&c, &SymplecticMatrix::rotation(PI / 4.0));
        assert_eq!(rot.singular_sectors(), vec![9, 45]);
        let a1 = SymplecticMatrix::rotation(0.3);
        let a2 = SymplecticMatrix::upper_shear(0.7);
        let twice = propagate_wavefront(&propagate_wavefront(&c, &a1), &a2);
        let once = propagate_wavefront(&c, &a2.mul(&a1));
        assert_eq!(twice.singular_sectors(), once.singular_sectors());
    }

    #[test]
    fn serialization() {
        let c = global(SignalKind::Constant);
        let j = c.to_json();
        assert_eq!(j["sectors"].as_array().unwrap().len(), 72);
        assert_eq!(j["params"]["kind"], "global");
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 73);
    }

    #[test]
    fn oscillator_rotates_the_constant() {
        let h = HamiltonianSpec::harmonic_oscillator();
        let s = SectorGrid::default();
        let th = Thresholds::default();
        let rep = verify_propagation(&h, &SignalKind::Constant, PI / 4.0, 2.0, 1.0, 16, wf_grid(), &s, &th).unwrap();
        assert_eq!(rep.initial, vec![0, 36]);
        assert_eq!(rep.observed, vec![27, 63]);
        assert!(rep.passed);
        let p = HamiltonianSpec::perturbed_oscillator(3.0, Grid1D::default_desk()).unwrap();
        // 2r < s - 2 fails for s = 4, r = 1
        assert!(verify_propagation(&p, &SignalKind::Constant, 0.5, 2.0, 1.0, 16, wf_grid(), &s, &th).is_err());
    }

    #[test]
    fn localized_symbol_removes_singularities() {
        let s = SectorGrid::default();
        let th = Thresholds::default();
        let sigma = Symbol::gaussian_bump(0.0, 0.0, 1.0);
        let rep = verify_microlocality(&sigma, Quantization::Weyl, &SignalKind::Constant, 2.0, 1.0, wf_grid(), &s, &th).unwrap();
        assert_eq!(rep.input, vec![0, 36]);
        assert!(rep.output.is_empty() && rep.passed);
    }
}
