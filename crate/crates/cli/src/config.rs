use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use tfprop_core::gabor::Lattice;
use tfprop_core::grid::{Grid1D, SignalKind};
use tfprop_core::metaplectic::DecayFitOptions;
use tfprop_core::propagators::{DysonOptions, HamiltonianSpec};
use tfprop_core::wavefront::{SectorGrid, Thresholds};
use tfprop_core::weyl::{Quantization, SymbolSpec};
use tfprop_core::{Error, Result};

/// Everything a subcommand reads. Every field is optional in the file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Output subdirectory; defaults to the subcommand name.
    pub experiment: Option<String>,
    pub grid: GridConfig,
    pub window: WindowConfig,
    /// Input signal; each subcommand has its own default.
    pub signal: Option<SignalKind>,
    pub lattice: LatticeConfig,
    pub decay: DecayFitOptions,
    pub propagator: PropagatorConfig,
    pub wavefront: WavefrontConfig,
    pub symbol: SymbolConfig,
    pub frame: FrameConfig,
    pub norms: NormConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    /// Period; `sqrt(n)` when absent.
    pub length: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 512, length: None }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid1D> {
        match self.length {
            Some(l) => Grid1D::new(self.n, l),
            None => Grid1D::self_dual(self.n),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    pub signal: SignalKind,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { signal: SignalKind::Gaussian }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    /// Lattice steps in grid units for Gabor matrices.
    pub time_step: usize,
    pub freq_step: usize,
    /// Half-widths, in lattice points, of the input and output lattices.
    pub input_half: usize,
    pub output_half: usize,
    /// Steps of the lattice exported by `stft`.
    pub stft_step: usize,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { time_step: 12, freq_step: 12, input_half: 3, output_half: 12, stft_step: 4 }
    }
}

impl LatticeConfig {
    pub fn pair(&self, grid: Grid1D) -> Result<(Lattice, Lattice)> {
        let l = |h| Lattice::centered(grid, self.time_step, self.freq_step, h, h);
        Ok((l(self.input_half)?, l(self.output_half)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianKind {
    FreeParticle,
    HarmonicOscillator,
    PerturbedOscillator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Auto,
    ClosedForm,
    Metaplectic,
    SplitStep,
    Dyson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagatorConfig {
    pub hamiltonian: Option<HamiltonianKind>,
    pub method: MethodKind,
    pub t: Option<f64>,
    pub steps: usize,
    pub mu: f64,
    /// Multiplies the perturbation; zero removes it.
    pub sigma_scale: f64,
    pub dyson: DysonOptions,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            hamiltonian: None,
            method: MethodKind::Auto,
            t: None,
            steps: 256,
            mu: 3.0,
            sigma_scale: 1.0,
            dyson: DysonOptions::default(),
        }
    }
}

impl PropagatorConfig {
    pub fn hamiltonian(&self, kind: HamiltonianKind, grid: Grid1D) -> Result<HamiltonianSpec> {
        match kind {
            HamiltonianKind::FreeParticle => Ok(HamiltonianSpec::free_particle()),
            HamiltonianKind::HarmonicOscillator => Ok(HamiltonianSpec::harmonic_oscillator()),
            HamiltonianKind::PerturbedOscillator => self.perturbed(grid),
        }
    }

    /// Oscillator plus `sigma_scale |sin x|^mu`; the bare oscillator when the
    /// scale is zero.
    pub fn perturbed(&self, grid: Grid1D) -> Result<HamiltonianSpec> {
        if !self.sigma_scale.is_finite() {
            return Err(Error::Config("sigma_scale must be finite".into()));
        }
        if self.sigma_scale == 0.0 {
            return Ok(HamiltonianSpec::harmonic_oscillator());
        }
        let h = HamiltonianSpec::perturbed_oscillator(self.mu, grid)?;
        if self.sigma_scale == 1.0 {
            return Ok(h);
        }
        let p = h.perturbation.as_ref().expect("perturbed oscillator has a perturbation");
        let base = p.symbol().clone();
        let scale = self.sigma_scale;
        let sigma = tfprop_core::weyl::Symbol::new(format!("{scale} {}", base.name()), move |x, xi| {
            base.eval(x, xi) * scale
        });
        HamiltonianSpec::harmonic_oscillator().with_perturbation(sigma, p.class_s(), grid)
    }

    pub fn time(&self, default: f64) -> Result<f64> {
        let t = self.t.unwrap_or(default);
        if !t.is_finite() {
            return Err(Error::Config(format!("t must be finite, got {t}")));
        }
        Ok(t)
    }
}

/// Integrability exponent written as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PExponent(pub f64);

impl Serialize for PExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for PExponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match Value::deserialize(d)? {
            Value::Number(n) => Ok(PExponent(n.as_f64().unwrap_or(f64::NAN))),
            Value::String(s) if matches!(s.as_str(), "inf" | "infinity" | "Inf") => Ok(PExponent(f64::INFINITY)),
            other => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WavefrontMode {
    Global,
    Sobolev,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WavefrontConfig {
    /// Base grid size; the grid is self-dual.
    pub n: usize,
    pub mode: WavefrontMode,
    pub p: PExponent,
    /// Weight exponent; `example1` and `wavefront` default to 1, `example2` to 0.4.
    pub r: Option<f64>,
    pub steps: usize,
    pub sectors: SectorGrid,
    pub thresholds: Thresholds,
}

impl Default for WavefrontConfig {
    fn default() -> Self {
        Self {
            n: 1024,
            mode: WavefrontMode::Global,
            p: PExponent(2.0),
            r: None,
            steps: 64,
            sectors: SectorGrid::default(),
            thresholds: Thresholds::default(),
        }
    }
}

impl WavefrontConfig {
    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::self_dual(self.n)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolConfig {
    pub spec: SymbolSpec,
    /// Target class `s`; `mu + 1` for `|sin x|^mu`, 10 otherwise.
    pub class_s: Option<f64>,
    pub quantization: Quantization,
}

impl Default for SymbolConfig {
    fn default() -> Self {
        Self { spec: SymbolSpec::AbsSinPower { mu: 3.0 }, class_s: None, quantization: Quantization::Weyl }
    }
}

impl SymbolConfig {
    pub fn class_s(&self) -> f64 {
        self.class_s.unwrap_or(match self.spec {
            SymbolSpec::AbsSinPower { mu } => mu + 1.0,
            _ => 10.0,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    pub n: usize,
    pub length: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self { n: 256, length: 16.0, alpha: 0.5, beta: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormConfig {
    /// Bound the norm ratios must stay below.
    pub bound: f64,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self { bound: 10.0 }
    }
}

pub const QUARTER_TURN: f64 = PI / 4.0;

/// Sets `path` (dot separated) in `root` to `value`, creating objects as needed.
fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = root;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("bad override key '{path}'")));
    }
    for key in &keys[..keys.len() - 1] {
        if !cur.is_object() {
            return Err(Error::Config(format!("override '{path}' descends into a non-object")));
        }
        cur = cur.as_object_mut().unwrap().entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    match cur.as_object_mut() {
        Some(obj) => {
            obj.insert(keys[keys.len() - 1].to_string(), value);
            Ok(())
        }
        None => Err(Error::Config(format!("override '{path}' descends into a non-object"))),
    }
}

/// Parses `key=value`; the value is read as JSON and otherwise kept as a string.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{spec}' is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    set_path(root, key.trim(), value)
}

pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    serde_json::from_value(root).map_err(|e| Error::Config(e.to_string()))
}
