//! Acceptance criteria, one test per criterion. Each prints a single
//! `criterion NN ...: PASS|FAIL (details)` line.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tfprop_core::gabor::{istft, modulation_norm, stft_full, Lattice, Weight};
use tfprop_core::grid::{make_test_signal, Grid1D, PhasePoint, SampledSignal, SignalKind};
use tfprop_core::metaplectic::{
    decay_fit_with, gabor_matrix, DecayFitOptions, FnOperator, LinearOperator, MetaplecticOperator, PhaseMap,
};
use tfprop_core::propagators::{
    dyson_propagate, factorial_shape_spread, free_particle, free_particle_packet, harmonic_oscillator,
    propagator_gabor_structure, split_step, DysonOptions, HamiltonianSpec, SplitStep,
};
use tfprop_core::symplectic::{
    factor_symplectic, flow, quadratic_symbol_to_generator, word_product, HamiltonianMatrix, QuadraticForm,
    SymplecticMatrix,
};
use tfprop_core::wavefront::{
    verify_microlocality, verify_propagation, wavefront_global, SectorGrid, Thresholds,
};
use tfprop_core::weyl::{certify_symbol_class, covariance_defect, weyl_quantize, Quantization, Symbol};

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {n:>2} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} {name} failed: {detail}");
}

fn desk() -> Grid1D {
    Grid1D::default_desk()
}

fn gaussian(grid: Grid1D) -> SampledSignal {
    make_test_signal(&SignalKind::Gaussian, grid).unwrap()
}

fn random_signal(grid: Grid1D, rng: &mut ChaCha8Rng) -> SampledSignal {
    let v = (0..grid.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    SampledSignal::new(grid, v).unwrap()
}

fn corpus20(grid: Grid1D) -> Vec<SampledSignal> {
    let mut kinds = vec![
        SignalKind::Gaussian,
        SignalKind::WideGaussian { width: 2.0 },
        SignalKind::PlaneWave { xi0: 1.0 },
        SignalKind::Chirp { c: 0.5 },
        SignalKind::Constant,
        SignalKind::GaborAtom { x: 1.0, xi: -2.0 },
        SignalKind::GaborAtom { x: -3.0, xi: 0.5 },
        SignalKind::ChirpedAtom { x: 0.5, xi: 1.0, c: 1.0 },
        SignalKind::ChirpedAtom { x: -1.0, xi: -1.0, c: -0.7 },
        SignalKind::PerturbedMode { n: 0, mu: 3.0 },
    ];
    kinds.extend((0..6).map(|n| SignalKind::Hermite { n }));
    let mut out: Vec<SampledSignal> = kinds.iter().map(|k| make_test_signal(k, grid).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    out.extend((0..4).map(|_| random_signal(grid, &mut rng)));
    out
}

#[test]
fn criterion_01_stft_roundtrip() {
    let grid = desk();
    let g = gaussian(grid);
    let worst = corpus20(grid)
        .iter()
        .map(|f| istft(&stft_full(f, &g).unwrap(), &g).unwrap().relative_error(f))
        .fold(0.0, f64::max);
    verdict(1, "STFT round-trip over 20 signals", worst < 1e-10, format!("max relative error {worst:.2e}"));
}

#[test]
fn criterion_02_moyal() {
    let grid = desk();
    let g = gaussian(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let f = random_signal(grid, &mut rng);
        let v = stft_full(&f, &g).unwrap();
        let expect = f.norm() * g.norm();
        worst = worst.max((v.l2_norm() - expect).abs() / expect);
    }
    verdict(2, "Moyal identity on 100 random signals", worst < 1e-10, format!("max relative error {worst:.2e}"));
}

/// `V_phi phi(x, xi)` by the trapezoid rule on `[-10, 10]` with step 1/256.
fn gaussian_stft_quadrature(x: f64, xi: f64) -> Complex64 {
    let h = 1.0 / 256.0;
    let m = (10.0 / h) as i64;
    (-m..=m)
        .map(|k| {
            let t = k as f64 * h;
            let w = (-PI * t * t).exp() * (-PI * (t - x) * (t - x)).exp();
            Complex64::from_polar(w * h, -2.0 * PI * xi * t)
        })
        .sum()
}

#[test]
fn criterion_03_gaussian_anchor() {
    let grid = desk();
    let g = gaussian(grid);
    let v = stft_full(&g, &g).unwrap();
    let margin = grid.margin_radius();
    let (mut err_quad, mut err_closed, mut count) = (0.0f64, 0.0f64, 0usize);
    let (nt, nf) = v.lattice().shape();
    for ti in (0..nt).step_by(3) {
        for fi in (0..nf).step_by(3) {
            let z = v.lattice().point(ti, fi);
            if z.norm() > margin {
                continue;
            }
            let m = v.get(ti, fi).norm();
            err_quad = err_quad.max((m - gaussian_stft_quadrature(z.x, z.xi).norm()).abs());
            err_closed = err_closed.max((m - 2f64.powf(-0.5) * (-PI * z.norm().powi(2) / 2.0).exp()).abs());
            count += 1;
        }
    }
    verdict(
        3,
        "gaussian STFT magnitude",
        err_quad < 1e-8 && err_closed < 1e-8,
        format!("{count} points, sup error {err_quad:.2e} vs quadrature, {err_closed:.2e} vs closed form"),
    );
}

#[test]
fn criterion_04_free_particle_packet() {
    let grid = desk();
    let g = gaussian(grid);
    let z = PhasePoint::new(grid.snap_x(-2.0), grid.snap_xi(0.5));
    let u0 = make_test_signal(&SignalKind::GaborAtom { x: z.x, xi: z.xi }, grid).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for t in [0.1, 0.5, 1.0] {
        let u = free_particle(&u0, t).u_t;
        let err = u.relative_error(&free_particle_packet(grid, z, t));
        let (c, _) = stft_full(&u, &g).unwrap().peak();
        let (px, pxi) = (z.x + 4.0 * PI * t * z.xi, z.xi);
        let ok = err < 1e-8 && (c.x - px).abs() <= grid.dx() && (c.xi - pxi).abs() <= grid.dxi();
        pass &= ok;
        details.push(format!("t={t}: err {err:.1e}, center ({:.4}, {:.4}) vs ({px:.4}, {pxi:.4})", c.x, c.xi));
    }
    verdict(4, "free-particle wave packet", pass, details.join("; "));
}

#[test]
fn criterion_05_oscillator_gabor_matrix() {
    let grid = desk();
    let g = gaussian(grid);
    let lat = Lattice::centered(grid, 8, 8, 8, 8).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for t in [0.3, PI / 4.0, PI / 2.0, 2.0] {
        let a = HamiltonianSpec::harmonic_oscillator().flow(t);
        let op = FnOperator::new("oscillator", PhaseMap::Symplectic(a.clone()), move |f| Ok(harmonic_oscillator(f, t)?.u_t));
        let k = gabor_matrix(&op, &g, &lat, &lat).unwrap();
        let err = k.magnitude_sup_error(|w, z| {
            let d = w - a.apply(z);
            2f64.powf(-0.5) * (-PI * (d.x * d.x + d.xi * d.xi) / 2.0).exp()
        });
        pass &= err < 1e-5;
        details.push(format!("t={t:.4}: {err:.1e}"));
    }
    verdict(5, "oscillator Gabor matrix on 17x17 lattice", pass, details.join(", "));
}

#[test]
fn criterion_06_symplectic_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let gen = |rng: &mut ChaCha8Rng| {
        HamiltonianMatrix::from_scalars(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    };
    let rel = |a: &SymplecticMatrix, b: &SymplecticMatrix| a.max_entry_diff(b) / (1.0 + b.operator_norm());
    let (mut defect, mut group) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let h = gen(&mut rng);
        let (s, t) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let a = flow(&h, t);
        defect = defect.max(a.symplectic_defect());
        group = group.max(rel(&flow(&h, s).mul(&a), &flow(&h, s + t)));
    }
    let mut factor = 0.0f64;
    for _ in 0..100 {
        let m = (0..3).fold(SymplecticMatrix::identity(1), |acc, _| {
            let t = rng.gen_range(-1.5..1.5);
            acc.mul(&flow(&gen(&mut rng), t))
        });
        factor = factor.max(rel(&word_product(&factor_symplectic(&m)), &m));
    }
    verdict(
        6,
        "symplectic invariants",
        defect < 1e-10 && group < 1e-9 && factor < 1e-9,
        format!("defect {defect:.1e}, group law {group:.1e}, factorization {factor:.1e}"),
    );
}

#[test]
fn criterion_07_metaplectic_covariance() {
    let grid = desk();
    let corpus: Vec<SampledSignal> = [(0.0, 0.0, 0.0), (1.0, -0.5, 0.3), (-1.5, 1.0, -0.4), (0.5, 0.5, 0.0)]
        .iter()
        .map(|&(x, xi, c)| make_test_signal(&SignalKind::ChirpedAtom { x, xi, c }, grid).unwrap())
        .collect();
    let symbols = [
        Symbol::gaussian_bump(0.5, -0.3, 1.2),
        Symbol::real("radial", |x, xi| (-(x * x + xi * xi) / 3.0).exp()),
        Symbol::real("shifted bump", |x, xi| (-((x - 1.0).powi(2) + 2.0 * (xi + 0.5).powi(2)) / 2.0).exp()),
        Symbol::new("complex bump", |x, xi| Complex64::new(0.0, x * 0.3).exp() * (-(x * x + xi * xi) / 2.0).exp()),
        Symbol::real("bump product", |x, xi| (-x * x / 4.0).exp() * (-xi * xi / 2.0).exp()),
    ];
    let maps = [
        SymplecticMatrix::j(1),
        SymplecticMatrix::rotation(PI / 4.0),
        SymplecticMatrix::lower_shear(0.5),
        SymplecticMatrix::upper_shear(-0.4),
        SymplecticMatrix::dilation(1.3).unwrap(),
        SymplecticMatrix::rotation(0.3).mul(&SymplecticMatrix::lower_shear(0.3)),
        SymplecticMatrix::rotation(-1.0),
        SymplecticMatrix::dilation(0.8).unwrap().mul(&SymplecticMatrix::rotation(0.6)),
        SymplecticMatrix::upper_shear(0.3).mul(&SymplecticMatrix::j(1)),
        SymplecticMatrix::lower_shear(-0.6),
    ];
    let mut worst = 0.0f64;
    for (i, a) in maps.iter().enumerate() {
        let d = covariance_defect(&symbols[i % symbols.len()], a, &corpus).unwrap();
        worst = worst.max(d);
    }
    verdict(7, "metaplectic covariance of Weyl operators", worst < 1e-5, format!("10 pairs, max defect {worst:.2e}"));
}

#[test]
fn criterion_08_symbol_class() {
    let grid = desk();
    let g = gaussian(grid);
    let input = Lattice::centered(grid, 12, 12, 3, 3).unwrap();
    let output = Lattice::centered(grid, 12, 12, 12, 12).unwrap();
    let opts = DecayFitOptions::default();
    let rough = Symbol::abs_sin_power(3.0);
    let c = certify_symbol_class(&weyl_quantize(&rough, grid), &g, 4.0, &input, &output, &opts, Some(&rough)).unwrap();
    let bump = Symbol::gaussian_bump(0.0, 0.0, 1.0);
    let b = certify_symbol_class(&weyl_quantize(&bump, grid), &g, 10.0, &input, &output, &opts, None).unwrap();
    let s = c.fit.s_fit;
    verdict(
        8,
        "symbol-class certificate",
        (3.5..=4.5).contains(&s) && b.fit.s_fit >= 10.0,
        format!("|sin x|^3 s_fit {s:.2}, bump s_fit {:.2}", b.fit.s_fit),
    );
}

#[test]
fn criterion_09_dyson_vs_split_step() {
    let grid = desk();
    let h = HamiltonianSpec::perturbed_oscillator(3.0, grid).unwrap();
    let u0 = make_test_signal(&SignalKind::GaborAtom { x: 0.5, xi: -0.5 }, grid).unwrap();
    let t = 0.25;
    let d = dyson_propagate(&h, &u0, t, &DysonOptions { n_max: 6, ..DysonOptions::default() }).unwrap();
    let reference = split_step(&h, &u0, t, 4096).unwrap().u_t;
    let err = d.result.u_t.relative_error(&reference);
    let spread = factorial_shape_spread(&d.diagnostics.increments, t);
    verdict(
        9,
        "Dyson-Phillips vs split-step",
        err < 1e-4 && spread <= 3.0,
        format!("relative difference {err:.2e}, factorial shape spread {spread:.2}"),
    );
}

#[test]
fn criterion_10_propagator_structure() {
    let grid = desk();
    let g = gaussian(grid);
    let input = Lattice::centered(grid, 12, 12, 3, 3).unwrap();
    let output = Lattice::centered(grid, 12, 12, 12, 12).unwrap();
    let opts = DecayFitOptions::default();
    let h = HamiltonianSpec::perturbed_oscillator(3.0, grid).unwrap();
    let s = propagator_gabor_structure(&h, 0.5, 64, &g, &input, &output, &opts).unwrap();
    let wide = Lattice::centered(grid, 12, 12, 8, 8).unwrap();
    let evolution = SplitStep::new(&h, grid, 0.5, 64).unwrap();
    let k = gabor_matrix(&evolution, &g, &wide, &output).unwrap();
    let misaligned = h.flow(0.5).mul(&SymplecticMatrix::rotation(PI));
    let control = decay_fit_with(&k, &misaligned, &opts).unwrap();
    verdict(
        10,
        "propagator Gabor-matrix envelope",
        s.aligned.s_fit >= 3.5 && control.s_fit < 1.0,
        format!("aligned s_fit {:.2}, misaligned control s_fit {:.2}", s.aligned.s_fit, control.s_fit),
    );
}

fn wf_grid() -> Grid1D {
    Grid1D::self_dual(1024).unwrap()
}

#[test]
fn criterion_11_wave_front_anchors() {
    let grid = wf_grid();
    let g = gaussian(grid);
    let sectors = SectorGrid::default();
    let th = Thresholds::default();
    let wf = |k: SignalKind| wavefront_global(&make_test_signal(&k, grid).unwrap(), &g, &sectors, &th).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for k in [
        SignalKind::Constant,
        SignalKind::PlaneWave { xi0: 1.0 },
        SignalKind::PlaneWave { xi0: -3.0 },
        SignalKind::PlaneWave { xi0: 5.5 },
    ] {
        let s = wf(k.clone()).singular_sectors();
        pass &= s == vec![0, 36];
        details.push(format!("{k:?} {s:?}"));
    }
    for c in [1.0, 2.0] {
        let e = wf(SignalKind::Chirp { c });
        pass &= e.matches_line([1.0, c], 1);
        details.push(format!("chirp {c} {:?}", e.singular_sectors()));
    }
    let gauss = wf(SignalKind::Gaussian);
    pass &= gauss.is_empty();
    details.push(format!("gaussian {:?}", gauss.singular_sectors()));
    verdict(11, "wave front anchors", pass, details.join("; "));
}

#[test]
fn criterion_12_propagation_law() {
    let sectors = SectorGrid::default();
    let th = Thresholds::default();
    let u0 = SignalKind::Constant;
    let ho = HamiltonianSpec::harmonic_oscillator();
    let perturbed = HamiltonianSpec::perturbed_oscillator(3.0, wf_grid()).unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for (h, t, r) in [(&ho, PI / 6.0, 1.0), (&ho, PI / 4.0, 1.0), (&perturbed, 0.5, 0.4)] {
        let rep = verify_propagation(h, &u0, t, 2.0, r, 64, wf_grid(), &sectors, &th).unwrap();
        pass &= rep.passed;
        details.push(format!("{} t={t:.3}: predicted {:?} observed {:?}", h.name, rep.predicted, rep.observed));
    }
    verdict(12, "propagation of the Gabor wave front set", pass, details.join("; "));
}

#[test]
fn criterion_13_microlocality() {
    let sectors = SectorGrid::default();
    let th = Thresholds::default();
    let pairs = [
        (Symbol::gaussian_bump(0.0, 0.0, 1.0), SignalKind::Constant),
        (Symbol::abs_sin_power(3.0), SignalKind::Constant),
        (Symbol::abs_sin_power(3.0), SignalKind::Chirp { c: 1.0 }),
        (Symbol::gaussian_bump(1.0, -1.0, 1.5), SignalKind::Chirp { c: 2.0 }),
        (Symbol::real("cos cos", |x, xi| (PI * x / 4.0).cos() * xi.cos()), SignalKind::PlaneWave { xi0: 2.0 }),
        (Symbol::abs_sin_power(3.0), SignalKind::Gaussian),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    for (sigma, u) in &pairs {
        for q in [Quantization::Weyl, Quantization::KohnNirenberg] {
            let rep = verify_microlocality(sigma, q, u, 2.0, 1.0, wf_grid(), &sectors, &th).unwrap();
            pass &= rep.passed;
            details.push(format!("{} on {u:?} {q:?}: {:?} in {:?}", rep.symbol, rep.output, rep.input));
        }
    }
    verdict(13, "microlocality", pass, details.join("; "));
}

#[test]
fn criterion_14_boundedness_proxies() {
    const BOUND: f64 = 10.0;
    let grid = desk();
    let g = gaussian(grid);
    let corpus: Vec<SampledSignal> = [
        SignalKind::Gaussian,
        SignalKind::GaborAtom { x: 1.0, xi: -0.5 },
        SignalKind::GaborAtom { x: -1.5, xi: 1.0 },
        SignalKind::ChirpedAtom { x: 0.5, xi: 0.5, c: 0.5 },
        SignalKind::Hermite { n: 2 },
    ]
    .iter()
    .map(|k| make_test_signal(k, grid).unwrap())
    .collect();
    let h = HamiltonianSpec::perturbed_oscillator(3.0, grid).unwrap();
    let ops: Vec<Box<dyn LinearOperator>> = vec![
        Box::new(MetaplecticOperator::new(SymplecticMatrix::rotation(0.7))),
        Box::new(MetaplecticOperator::new(SymplecticMatrix::lower_shear(0.5))),
        Box::new(MetaplecticOperator::new(flow(&quadratic_symbol_to_generator(&QuadraticForm::free_particle()), 0.05))),
        Box::new(weyl_quantize(&Symbol::abs_sin_power(3.0), grid)),
        Box::new(weyl_quantize(&Symbol::gaussian_bump(0.5, 0.0, 1.0), grid)),
        Box::new(SplitStep::new(&h, grid, 0.5, 64).unwrap()),
    ];
    let mut worst = 0.0f64;
    for p in [1.0, 2.0, f64::INFINITY] {
        for r in [0.0, 0.4] {
            let m = Weight::vs(r);
            for f in &corpus {
                let base = modulation_norm(f, &g, p, p, m).unwrap();
                for op in &ops {
                    let ratio = modulation_norm(&op.apply(f).unwrap(), &g, p, p, m).unwrap() / base;
                    worst = worst.max(ratio);
                }
            }
        }
    }
    verdict(
        14,
        "modulation-space norm ratios",
        worst <= BOUND,
        format!("6 operators x 5 signals x p in {{1,2,inf}} x r in {{0,0.4}}, max ratio {worst:.3} <= {BOUND}"),
    );
}
