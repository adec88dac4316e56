//! Deterministic synthetic dataset generators with known ground truth,
//! standing in for plant data in tests and demos.
//!
//! Two presets mirror the case-study shapes: a 22-variable fermentation-like
//! catalog with 3 informative features and a 7-variable polymerization-like
//! catalog with 4 informative features, so a 50% selection keeps 11 and 4
//! variables respectively.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Dataset, Sample, TaskConfig, VariableSpec};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
}

/// Label-generating response surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    /// `y = w . x`
    Linear { weights: Vec<f64> },
    /// A named smooth function of the first three variables.
    Nonlinear { function: NonlinearFn },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearFn {
    /// `y = sin(2 pi x1) + 2 x2^2 + x3`
    SineMix,
}

/// Generator configuration; deterministic per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n_samples: usize,
    pub catalog: Vec<VariableSpec>,
    pub primary: VariableSpec,
    /// Per-variable uniform sampling ranges `(lo, hi)`.
    pub ranges: Vec<(f64, f64)>,
    pub response: Response,
    pub noise_std: f64,
    pub seed: u64,
    pub industrial_process: String,
    pub facility: String,
}

impl GeneratorSpec {
    /// Variables with nonzero linear weight, heaviest first; empty for
    /// nonlinear responses.
    pub fn informative_variables(&self) -> Vec<String> {
        match &self.response {
            Response::Linear { weights } => {
                let mut pairs: Vec<(String, f64)> = self
                    .catalog
                    .iter()
                    .zip(weights)
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(v, w)| (v.name.clone(), w.abs()))
                    .collect();
                pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                pairs.into_iter().map(|(n, _)| n).collect()
            }
            Response::Nonlinear { .. } => Vec::new(),
        }
    }
}

/// Draws the dataset: features uniform per-variable over their ranges,
/// label = response + Gaussian noise.
pub fn generate(spec: &GeneratorSpec) -> Result<Dataset, SynthError> {
    if spec.n_samples == 0 {
        return Err(SynthError::InvalidSpec("n_samples must be at least 1".into()));
    }
    if spec.ranges.len() != spec.catalog.len() {
        return Err(SynthError::InvalidSpec(format!(
            "{} ranges for {} variables",
            spec.ranges.len(),
            spec.catalog.len()
        )));
    }
    if let Response::Linear { weights } = &spec.response {
        if weights.len() != spec.catalog.len() {
            return Err(SynthError::InvalidSpec(format!(
                "{} weights for {} variables",
                weights.len(),
                spec.catalog.len()
            )));
        }
    }
    if !(spec.noise_std >= 0.0 && spec.noise_std.is_finite()) {
        return Err(SynthError::InvalidSpec("noise_std must be finite and >= 0".into()));
    }
    for (i, (lo, hi)) in spec.ranges.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(SynthError::InvalidSpec(format!(
                "range ({lo}, {hi}) for variable {i} is not a finite interval"
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = if spec.noise_std > 0.0 {
        Some(Normal::new(0.0, spec.noise_std).expect("valid normal"))
    } else {
        None
    };
    let samples = (0..spec.n_samples)
        .map(|_| {
            let xs: Vec<f64> = spec
                .ranges
                .iter()
                .map(|(lo, hi)| rng.gen_range(*lo..*hi))
                .collect();
            let mut label = match &spec.response {
                Response::Linear { weights } => {
                    xs.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>()
                }
                Response::Nonlinear { function: NonlinearFn::SineMix } => {
                    let x1 = xs.first().copied().unwrap_or(0.0);
                    let x2 = xs.get(1).copied().unwrap_or(0.0);
                    let x3 = xs.get(2).copied().unwrap_or(0.0);
                    (2.0 * std::f64::consts::PI * x1).sin() + 2.0 * x2 * x2 + x3
                }
            };
            if let Some(noise) = &noise {
                label += noise.sample(&mut rng);
            }
            Sample::new(
                spec.catalog
                    .iter()
                    .zip(&xs)
                    .map(|(v, x)| (v.name.clone(), Some(*x)))
                    .collect(),
                Some(label),
            )
        })
        .collect();

    Ok(Dataset {
        catalog: spec.catalog.clone(),
        primary_variable: spec.primary.clone(),
        samples,
        task_config: TaskConfig {
            industrial_process: spec.industrial_process.clone(),
            facility: spec.facility.clone(),
            primary_variable_name: spec.primary.name.clone(),
            feature_count: spec.catalog.len(),
        },
    })
}

fn pensim_catalog() -> Vec<VariableSpec> {
    [
        ("Aeration rate", "V1", "m^3/min"),
        ("Sugar feed rate", "V2", "L/h"),
        ("Acid flow rate", "V3", "L/h"),
        ("Base flow rate", "V4", "L/h"),
        ("Heating/cooling water flow rate", "V5", "L/h"),
        ("Heating water flow rate", "V6", "L/h"),
        ("Water for injection/dilution", "V7", "L/h"),
        ("Air head pressure", "V8", "bar"),
        ("Dumped broth flow", "V9", "L/h"),
        ("Substrate concentration", "V10", "g/L"),
        ("Dissolved oxygen concentration", "V11", "mg/L"),
        ("Vessel Volume", "V12", "L"),
        ("Vessel Weight", "V13", "kg"),
        ("pH", "V14", "/"),
        ("Temperature of broth", "V15", "K"),
        ("Generated heat", "V16", "kJ"),
        ("carbon dioxide percent in off-gas", "V17", "%"),
        ("PAA flow", "V18", "L/h"),
        ("Oil flow", "V19", "L/h"),
        ("Oxygen Uptake Rate", "V20", "g/min"),
        ("Oxygen in percent in off-gas", "V21", "%"),
        ("Carbon evolution rate", "V22", "g/h"),
    ]
    .iter()
    .map(|(name, code, unit)| VariableSpec::new(name, code, unit))
    .collect()
}

fn poly_catalog() -> Vec<VariableSpec> {
    [
        ("Hydrogen Ratio", "V1", "/"),
        ("Reactor Pressure", "V2", "bar"),
        ("Reactor Bed Level", "V3", "m"),
        ("Liquefied Recycle gas to R-310 dome top", "V4", "L/h"),
        ("Hydrogen Flow", "V5", "kg/h"),
        ("Reactor Temperature", "V6", "K"),
        ("Propylene flow", "V7", "kg/h"),
    ]
    .iter()
    .map(|(name, code, unit)| VariableSpec::new(name, code, unit))
    .collect()
}

/// Named presets: `pensim-like` (22 auxiliary variables, 3 informative) and
/// `poly-like` (7 auxiliary variables, 4 informative).
pub fn preset_spec(
    name: &str,
    n_samples: usize,
    noise_std: f64,
    seed: u64,
) -> Option<GeneratorSpec> {
    match name {
        "pensim-like" => {
            let catalog = pensim_catalog();
            let mut weights = vec![0.0; catalog.len()];
            // informative: dissolved oxygen, substrate concentration, pH
            weights[10] = 3.0;
            weights[9] = 2.0;
            weights[13] = 1.5;
            Some(GeneratorSpec {
                n_samples,
                ranges: vec![(0.0, 1.0); catalog.len()],
                catalog,
                primary: VariableSpec::new("Penicillin concentration", "P", "g/L"),
                response: Response::Linear { weights },
                noise_std,
                seed,
                industrial_process: "penicillin fermentation process".into(),
                facility: "industrial-scale fed-batch fermenter".into(),
            })
        }
        "poly-like" => {
            let catalog = poly_catalog();
            let mut weights = vec![0.0; catalog.len()];
            // informative: hydrogen ratio, reactor pressure, hydrogen flow,
            // reactor temperature
            weights[0] = 4.0;
            weights[1] = 3.0;
            weights[4] = 2.0;
            weights[5] = 1.5;
            Some(GeneratorSpec {
                n_samples,
                ranges: vec![(0.0, 1.0); catalog.len()],
                catalog,
                primary: VariableSpec::new("MFR", "Melt Flow Rate", "/"),
                response: Response::Linear { weights },
                noise_std,
                seed,
                industrial_process: "polypropylene production process".into(),
                facility: "fluidized bed reactor line".into(),
            })
        }
        _ => None,
    }
}

pub const PRESET_NAMES: &[&str] = &["pensim-like", "poly-like"];
