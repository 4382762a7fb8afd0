use std::f64::consts::PI;

use serde_json::{json, Value};

use tfprop_core::gabor::{istft, modulation_norm, stft, stft_full, GaborSystem, Lattice, Weight};
use tfprop_core::grid::{make_test_signal, Grid1D, PhasePoint, SampledSignal, SignalKind};
use tfprop_core::metaplectic::{decay_fit_with, gabor_matrix, FnOperator, PhaseMap};
use tfprop_core::propagators::{
    dyson_propagate, free_particle, harmonic_oscillator, propagator_gabor_structure, quadratic_propagate, split_step,
    HamiltonianSpec, PropagatorResult,
};
use tfprop_core::wavefront::{
    verify_propagation, wavefront_global, wavefront_sobolev, PropagationReport, WaveFrontEstimate,
};
use tfprop_core::weyl::{certify_symbol_class, weyl_quantize_with};
use tfprop_core::{Error, Result};

use crate::config::{HamiltonianKind, MethodKind, RunConfig, WavefrontMode, QUARTER_TURN};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// A check was refused because its preconditions do not hold.
    Refused,
}

pub struct Outcome {
    pub status: Status,
    pub report: Value,
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outcome {
    fn new(passed: bool, report: Value) -> Self {
        Self { status: if passed { Status::Pass } else { Status::Fail }, report, files: Vec::new() }
    }

    fn file(mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Self> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name.to_string(), buf));
        Ok(self)
    }
}

fn window(cfg: &RunConfig, grid: Grid1D) -> Result<SampledSignal> {
    make_test_signal(&cfg.window.signal, grid)
}

fn point(z: PhasePoint) -> Value {
    json!({ "x": z.x, "xi": z.xi })
}

/// Ridge `xi(x)` of an STFT: argmax over frequency per time column.
fn ridge(coeffs: &tfprop_core::gabor::GaborCoefficients) -> Vec<(f64, f64, f64)> {
    let (nt, nf) = coeffs.lattice().shape();
    (0..nt)
        .map(|ti| {
            let (fi, m) = (0..nf)
                .map(|fi| (fi, coeffs.get(ti, fi).norm()))
                .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
            let z = coeffs.lattice().point(ti, fi);
            (z.x, z.xi, m)
        })
        .collect()
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

pub fn stft_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let g = window(cfg, grid)?;
    let kind = cfg.signal.clone().unwrap_or(SignalKind::Gaussian);
    let f = make_test_signal(&kind, grid)?;
    let full = stft_full(&f, &g)?;
    let expected = f.norm() * g.norm();
    let moyal = (full.l2_norm() - expected).abs() / expected.max(f64::MIN_POSITIVE);
    let roundtrip = istft(&full, &g)?.relative_error(&f);
    let (peak, peak_mag) = full.peak();
    let step = cfg.lattice.stft_step.max(1);
    let lattice = Lattice::torus(grid, step, step)?;
    let coeffs = stft(&f, &g, &lattice)?;

    let margin = grid.margin_radius();
    let ridge_pts = ridge(&full);
    let central: Vec<(f64, f64)> =
        ridge_pts.iter().filter(|p| p.0.abs() <= 0.5 * margin && p.2 > 0.0).map(|p| (p.0, p.1)).collect();
    let ridge_slope = if central.len() >= 2 { slope(&central) } else { f64::NAN };

    let passed = moyal < 1e-10 && roundtrip < 1e-10;
    let report = json!({
        "signal": kind,
        "norms": { "signal": f.norm(), "window": g.norm(), "stft": full.l2_norm() },
        "moyal_relative_error": moyal,
        "roundtrip_relative_error": roundtrip,
        "peak": { "x": peak.x, "xi": peak.xi, "magnitude": peak_mag },
        "ridge_slope": if ridge_slope.is_finite() { json!(ridge_slope) } else { Value::Null },
        "lattice": { "alpha": lattice.alpha(), "beta": lattice.beta(), "shape": lattice.shape() },
        "passed": passed,
    });
    Outcome::new(passed, report)
        .file("signal.csv", |w| f.write_csv(w))?
        .file("coefficients.csv", |w| coeffs.write_csv(w))?
        .file("ridge.csv", |w| {
            use std::io::Write;
            writeln!(w, "x,xi,abs")?;
            for (x, xi, m) in &ridge_pts {
                writeln!(w, "{x:.12e},{xi:.12e},{m:.12e}")?;
            }
            Ok(())
        })
}

/// `e^{itH}` for the oscillator as an operator, Mehler formula away from caustics.
fn oscillator_operator(t: f64) -> FnOperator {
    let a = HamiltonianSpec::harmonic_oscillator().flow(t);
    FnOperator::new(format!("e^(itH), oscillator, t = {t}"), PhaseMap::Symplectic(a), move |f| {
        Ok(harmonic_oscillator(f, t)?.u_t)
    })
}

fn propagation_json(rep: &PropagationReport) -> Value {
    serde_json::to_value(rep).expect("report serializes")
}

pub fn example1(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let t = cfg.propagator.time(QUARTER_TURN)?;
    let g = window(cfg, grid)?;
    let h = HamiltonianSpec::harmonic_oscillator();
    let a = h.flow(t);

    let u0 = make_test_signal(&SignalKind::Constant, grid)?;
    let evolved = harmonic_oscillator(&u0, t)?;

    // Gabor matrix against the closed form on a 17 x 17 lattice
    let small = Lattice::centered(grid, 8, 8, 8, 8)?;
    let op = oscillator_operator(t);
    let k = gabor_matrix(&op, &g, &small, &small)?;
    let g0 = g.norm_sqr();
    let matrix_err = k.magnitude_sup_error(|w, z| {
        let d = w - a.apply(z);
        g0 * (-PI * (d.x * d.x + d.xi * d.xi) / 2.0).exp()
    });
    let matrix_ok = matrix_err < 1e-5;

    let (input, output) = cfg.lattice.pair(grid)?;
    let big = gabor_matrix(&op, &g, &input, &output)?;
    let fit = decay_fit_with(&big, &a, &cfg.decay)?;
    let cap = (1.0 / cfg.decay.floor).ln() / (1.0 + cfg.decay.r_min.powi(2)).sqrt().ln();
    let decay_ok = fit.s_fit >= cap - 0.5;

    let wf = &cfg.wavefront;
    let r = wf.r.unwrap_or(1.0);
    let prop = verify_propagation(
        &h,
        &SignalKind::Constant,
        t,
        wf.p.0,
        r,
        wf.steps,
        wf.grid()?,
        &wf.sectors,
        &wf.thresholds,
    )?;

    let passed = matrix_ok && decay_ok && prop.passed;
    let report = json!({
        "t": t,
        "flow": a,
        "evolution": evolved.to_json(),
        "gabor_matrix": { "lattice_shape": small.shape(), "sup_error": matrix_err, "tolerance": 1e-5, "passed": matrix_ok },
        "decay": { "fit": fit, "cap": cap, "passed": decay_ok },
        "wavefront": propagation_json(&prop),
        "passed": passed,
    });
    Outcome::new(passed, report)
        .file("u_t.csv", |w| evolved.write_csv(w))?
        .file("gabor_matrix.csv", |w| k.write_csv(w))
}

/// Corpus for norm-ratio checks.
fn norm_corpus(grid: Grid1D) -> Result<Vec<SampledSignal>> {
    [
        SignalKind::Gaussian,
        SignalKind::GaborAtom { x: 1.0, xi: -0.5 },
        SignalKind::GaborAtom { x: -1.5, xi: 1.0 },
        SignalKind::ChirpedAtom { x: 0.5, xi: 0.5, c: 0.5 },
        SignalKind::Hermite { n: 2 },
    ]
    .iter()
    .map(|k| make_test_signal(k, grid))
    .collect()
}

pub fn example2(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let pc = &cfg.propagator;
    let mu = pc.mu;
    let t = pc.time(0.5)?;
    let wf = &cfg.wavefront;
    let r = wf.r.unwrap_or(0.4);
    let g = window(cfg, grid)?;
    let h = pc.perturbed(grid)?;
    let s = h.perturbation.as_ref().map_or(f64::INFINITY, |p| p.class_s());
    let (input, output) = cfg.lattice.pair(grid)?;

    let certificate = match &h.perturbation {
        Some(p) => {
            let c = certify_symbol_class(p.operator(), &g, s, &input, &output, &cfg.decay, Some(p.symbol()))?;
            json!({ "class_s": s, "certificate": c, "passed": c.passed })
        }
        None => json!({ "skipped": "perturbation is zero", "passed": true }),
    };
    let cert_ok = certificate["passed"].as_bool().unwrap_or(false);

    let mut refused = Vec::new();

    // boundedness of e^{itH} on M^p_{v_r}
    // ranges stated for this example: |r| < mu - 2 and 0 < r < mu/2 - 1
    let (norm_limit, prop_limit) = if h.perturbation.is_some() { (mu - 2.0, mu / 2.0 - 1.0) } else { (f64::INFINITY, f64::INFINITY) };
    let norms = if r.abs() < norm_limit {
        let corpus = norm_corpus(grid)?;
        let mut rows = Vec::new();
        let mut worst = 0.0f64;
        for p in [1.0, 2.0, f64::INFINITY] {
            for f in &corpus {
                let u = split_step(&h, f, t, pc.steps)?.u_t;
                let m = Weight::vs(r);
                let ratio = modulation_norm(&u, &g, p, p, m)? / modulation_norm(f, &g, p, p, m)?;
                worst = worst.max(ratio.max(1.0 / ratio));
                rows.push(json!({ "p": if p.is_infinite() { json!("inf") } else { json!(p) }, "ratio": ratio }));
            }
        }
        json!({ "r": r, "bound": cfg.norms.bound, "worst": worst, "ratios": rows, "passed": worst <= cfg.norms.bound })
    } else {
        let msg = format!("well-posedness on M^p_(v_r) needs |r| < mu - 2 = {norm_limit}; got r = {r}");
        refused.push(msg.clone());
        json!({ "refused": msg })
    };
    let norms_ok = norms["passed"].as_bool().unwrap_or(false);

    let structure = propagator_gabor_structure(&h, t, pc.steps.min(64), &g, &input, &output, &cfg.decay)?;

    let propagation = if r > 0.0 && r < prop_limit {
        let rep = verify_propagation(&h, &SignalKind::Constant, t, wf.p.0, r, wf.steps, wf.grid()?, &wf.sectors, &wf.thresholds)?;
        propagation_json(&rep)
    } else {
        let msg = format!("propagation of WF^(p,r) needs 0 < r < mu/2 - 1 = {prop_limit}; got r = {r}");
        refused.push(msg.clone());
        json!({ "refused": msg })
    };
    let prop_ok = propagation["passed"].as_bool().unwrap_or(false);

    let passed = cert_ok && norms_ok && structure.passed && prop_ok;
    let report = json!({
        "mu": mu,
        "t": t,
        "r": r,
        "hamiltonian": h.name,
        "symbol_class": certificate,
        "norm_bounds": norms,
        "structure": structure,
        "wavefront": propagation,
        "refused": refused,
        "passed": passed,
    });
    let u0 = make_test_signal(&SignalKind::GaborAtom { x: 0.0, xi: 0.0 }, grid)?;
    let evolved = split_step(&h, &u0, t, pc.steps)?;
    let mut out = Outcome::new(passed, report).file("u_t.csv", |w| evolved.write_csv(w))?;
    if !refused.is_empty() {
        out.status = Status::Refused;
    }
    Ok(out)
}

pub fn certify(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let g = window(cfg, grid)?;
    let sigma = cfg.symbol.spec.build();
    let s = cfg.symbol.class_s();
    let op = weyl_quantize_with(&sigma.sample(grid), cfg.symbol.quantization, sigma.name());
    let (input, output) = cfg.lattice.pair(grid)?;
    let c = certify_symbol_class(&op, &g, s, &input, &output, &cfg.decay, Some(&sigma))?;
    let report = json!({
        "symbol": cfg.symbol.spec,
        "quantization": cfg.symbol.quantization,
        "structure": op.structure(),
        "certificate": c,
        "class_cap": c.effective_target,
        "capped": c.fit.capped,
        "passed": c.passed,
    });
    Outcome::new(c.passed, report).file("shells.csv", |w| {
        use std::io::Write;
        writeln!(w, "r,max")?;
        for sh in &c.fit.shells {
            writeln!(w, "{:.12e},{:.12e}", sh.r, sh.max)?;
        }
        Ok(())
    })
}

fn run_method(cfg: &RunConfig, kind: HamiltonianKind, h: &HamiltonianSpec, u0: &SampledSignal, t: f64) -> Result<(PropagatorResult, Value)> {
    let pc = &cfg.propagator;
    let perturbed = h.perturbation.is_some();
    let quad_only = |what: &str| {
        if perturbed {
            Err(Error::Config(format!("method '{what}' needs a quadratic Hamiltonian")))
        } else {
            Ok(())
        }
    };
    let res = match pc.method {
        MethodKind::Auto => match kind {
            HamiltonianKind::FreeParticle => free_particle(u0, t),
            HamiltonianKind::HarmonicOscillator => harmonic_oscillator(u0, t)?,
            HamiltonianKind::PerturbedOscillator if !perturbed => harmonic_oscillator(u0, t)?,
            HamiltonianKind::PerturbedOscillator => split_step(h, u0, t, pc.steps)?,
        },
        MethodKind::ClosedForm => {
            quad_only("closed_form")?;
            match kind {
                HamiltonianKind::FreeParticle => free_particle(u0, t),
                _ => harmonic_oscillator(u0, t)?,
            }
        }
        MethodKind::Metaplectic => {
            quad_only("metaplectic")?;
            quadratic_propagate(&h.quadratic, u0, t)?
        }
        MethodKind::SplitStep => split_step(h, u0, t, pc.steps)?,
        MethodKind::Dyson => {
            let d = dyson_propagate(h, u0, t, &pc.dyson)?;
            let diag = serde_json::to_value(&d.diagnostics).expect("diagnostics serialize");
            return Ok((d.result, diag));
        }
    };
    Ok((res, Value::Null))
}

pub fn propagate(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.grid.build()?;
    let pc = &cfg.propagator;
    let kind = pc.hamiltonian.unwrap_or(HamiltonianKind::FreeParticle);
    let h = pc.hamiltonian(kind, grid)?;
    let t = pc.time(0.5)?;
    let signal = cfg.signal.clone().unwrap_or(SignalKind::GaborAtom { x: 1.0, xi: 0.5 });
    let u0 = make_test_signal(&signal, grid)?;
    let (res, extra) = run_method(cfg, kind, &h, &u0, t)?;
    let defect = res.unitarity_defect();
    let unitary = defect < 1e-6;

    let center = match signal {
        SignalKind::GaborAtom { x, xi } if h.perturbation.is_none() => {
            let z0 = PhasePoint::new(grid.snap_x(x), xi);
            let predicted = h.flow(t).apply(z0);
            let g = window(cfg, grid)?;
            let measured = stft_full(&res.u_t, &g)?.energy_centroid();
            let ok = (measured.x - predicted.x).abs() <= grid.dx() && (measured.xi - predicted.xi).abs() <= grid.dxi();
            json!({ "initial": point(z0), "predicted": point(predicted), "measured": point(measured), "passed": ok })
        }
        _ => Value::Null,
    };
    let center_ok = center.get("passed").and_then(Value::as_bool).unwrap_or(true);
    let passed = unitary && center_ok;
    let report = json!({
        "hamiltonian": h.name,
        "signal": signal,
        "result": res.to_json(),
        "unitarity_defect": defect,
        "dyson": extra,
        "center": center,
        "passed": passed,
    });
    Outcome::new(passed, report).file("u0.csv", |w| u0.write_csv(w))?.file("u_t.csv", |w| res.write_csv(w))
}

pub fn wavefront(cfg: &RunConfig) -> Result<Outcome> {
    let wf = &cfg.wavefront;
    let grid = wf.grid()?;
    let signal = cfg.signal.clone().unwrap_or(SignalKind::Constant);
    let est: WaveFrontEstimate = match wf.mode {
        WavefrontMode::Global => {
            let u = make_test_signal(&signal, grid)?;
            wavefront_global(&u, &window(cfg, grid)?, &wf.sectors, &wf.thresholds)?
        }
        WavefrontMode::Sobolev => wavefront_sobolev(
            &signal,
            &cfg.window.signal,
            wf.p.0,
            wf.r.unwrap_or(1.0),
            grid,
            &wf.sectors,
            &wf.thresholds,
        )?,
    };
    let report = json!({
        "signal": signal,
        "estimate": est.to_json(),
        "singular_sectors": est.singular_sectors(),
        "singular_directions": est.directions(),
        "passed": true,
    });
    Outcome::new(true, report).file("sectors.csv", |w| est.write_csv(w))
}

pub fn frame(cfg: &RunConfig) -> Result<Outcome> {
    let fc = &cfg.frame;
    let grid = Grid1D::new(fc.n, fc.length)?;
    let g = window(cfg, grid)?;
    let sys = GaborSystem::new(g, fc.alpha, fc.beta)?;
    let bounds = sys.frame_bounds();
    let signal = cfg.signal.clone().unwrap_or(SignalKind::GaborAtom { x: 0.5, xi: -1.0 });
    let mut out = Outcome::new(false, Value::Null);
    let mut reconstruction = Value::Null;
    let mut rec_ok = false;
    if bounds.is_frame {
        let dual = sys.dual_window()?;
        let f = make_test_signal(&signal, grid)?;
        let err = sys.reconstruct(&f, &dual)?.relative_error(&f);
        rec_ok = err < 1e-10;
        reconstruction = json!({ "signal": signal, "relative_error": err, "passed": rec_ok });
        out = out.file("dual_window.csv", |w| dual.write_csv(w))?;
    }
    let passed = bounds.is_frame && rec_ok;
    out.status = if passed { Status::Pass } else { Status::Fail };
    out.report = json!({
        "alpha": fc.alpha,
        "beta": fc.beta,
        "grid": { "n": fc.n, "length": fc.length },
        "bounds": bounds,
        "frame": bounds.is_frame,
        "ratio": bounds.ratio(),
        "reconstruction": reconstruction,
        "passed": passed,
    });
    Ok(out)
}
