//! Deterministic stub backend.
//!
//! For soft-sensor prompts it re-parses the demonstrations and test sample
//! out of the rendered text and answers with a distance-weighted
//! nearest-neighbour prediction, so end-to-end runs are exactly checkable
//! against a standalone oracle. For selection prompts it scores variables by
//! absolute Pearson correlation when a dataset is configured, else
//! uniformly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{GenerationParams, LlmError, StructuredAnswer};
use crate::domain::{Dataset, Sample};
use crate::prompt::parse_sample_line;
use crate::prompt::templates::{
    GLOBAL_CANDIDATES_MARKER, LOCAL_VARIABLE_MARKER, TEST_SAMPLE_MARKER,
};

/// Weight guard for the distance-weighted mean: `w = 1 / (EPSILON + d)`.
pub const DISTANCE_EPSILON: f64 = 1e-9;

/// Numeric columns the stub correlates against labels for selection
/// prompts.
#[derive(Debug, Clone)]
struct CorrelationData {
    names: Vec<String>,
    columns: Vec<Vec<Option<f64>>>,
    labels: Vec<f64>,
}

/// The deterministic stub oracle.
#[derive(Debug, Clone, Default)]
pub struct StubBackend {
    data: Option<CorrelationData>,
}

impl StubBackend {
    pub fn new() -> Self {
        StubBackend { data: None }
    }

    /// Configures the dataset used to score selection prompts by absolute
    /// Pearson correlation with the primary variable.
    pub fn with_dataset(dataset: &Dataset) -> Self {
        let names: Vec<String> = dataset.variable_names();
        let columns = names
            .iter()
            .map(|name| dataset.samples.iter().map(|s| s.get(name)).collect())
            .collect();
        let labels = dataset
            .samples
            .iter()
            .map(|s| s.label.unwrap_or(f64::NAN))
            .collect();
        StubBackend { data: Some(CorrelationData { names, columns, labels }) }
    }

    pub(super) fn complete(
        &self,
        prompt: &str,
        params: &GenerationParams,
    ) -> Result<String, LlmError> {
        if let Some(test_line) = find_marker_line(prompt, TEST_SAMPLE_MARKER) {
            self.answer_soft_sensor(prompt, &test_line, params)
        } else if let Some(variable) = find_marker_line(prompt, LOCAL_VARIABLE_MARKER) {
            Ok(self.answer_local(&variable))
        } else if let Some(candidates) = find_marker_line(prompt, GLOBAL_CANDIDATES_MARKER) {
            Ok(self.answer_global(&candidates))
        } else {
            Err(LlmError::StubParseFailure("no recognized prompt marker".into()))
        }
    }

    fn answer_soft_sensor(
        &self,
        prompt: &str,
        test_line: &str,
        params: &GenerationParams,
    ) -> Result<String, LlmError> {
        let demonstrations: Vec<Sample> = prompt
            .lines()
            .filter(|line| line.contains(" -> "))
            .filter_map(parse_sample_line)
            .filter(|s| s.label.is_some())
            .collect();
        if demonstrations.is_empty() {
            return Err(LlmError::StubParseFailure("no demonstrations found".into()));
        }
        let test = parse_sample_line(test_line)
            .ok_or_else(|| LlmError::StubParseFailure("unparseable test sample".into()))?;

        let (mut prediction, nearest) = knn_oracle(&demonstrations, &test);
        if params.temperature > 0.0 {
            let labels: Vec<f64> = demonstrations.iter().filter_map(|d| d.label).collect();
            let sigma = params.temperature * sample_std(&labels);
            if sigma > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed.unwrap_or(0));
                let normal = Normal::new(0.0, sigma)
                    .map_err(|e| LlmError::StubParseFailure(e.to_string()))?;
                prediction += normal.sample(&mut rng);
            }
        }
        let confidence = 1.0 / (1.0 + nearest);
        let reasoning = format!(
            "Compared the test sample against {} example samples; the closest example lies at \
             a standardized distance of {nearest:.6}, and the distance-weighted average of the \
             example labels gives {prediction}.",
            demonstrations.len()
        );
        Ok(StructuredAnswer::Ufss { prediction, confidence, reasoning }.to_json())
    }

    fn answer_local(&self, variable: &str) -> String {
        let detail = match self.correlation_for(variable) {
            Some(r) => format!(
                "its absolute correlation with the primary variable over the configured \
                 historical data is {:.4}",
                r.abs()
            ),
            None => "no historical data is configured, so the assessment rests on the \
                     retrieved context alone"
                .to_string(),
        };
        let reasoning = format!(
            "Step-by-step assessment of {variable}: it is measured continuously by the control \
             system, it acts on the primary variable through the process mechanisms described \
             in the retrieved context, and {detail}."
        );
        StructuredAnswer::ZavsLocal { reasoning }.to_json()
    }

    fn answer_global(&self, candidate_line: &str) -> String {
        let names: Vec<&str> = candidate_line
            .split(", ")
            .map(str::trim)
            .filter(|n| !n.is_empty())
            .collect();
        let mut scored: Vec<(String, f64)> = names
            .iter()
            .map(|name| {
                let score = match self.correlation_for(name) {
                    Some(r) if r.is_finite() => r.abs(),
                    _ => 0.5,
                };
                (name.to_string(), score)
            })
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let ranking_lines: Vec<String> = scored
            .iter()
            .enumerate()
            .map(|(i, (name, score))| format!("{}. {name}: {score}", i + 1))
            .collect();
        let reasoning = format!(
            "Ranked {} candidate variables by their estimated influence on the primary \
             variable, using absolute correlation where historical data is configured and a \
             neutral score otherwise.",
            scored.len()
        );
        StructuredAnswer::ZavsGlobal {
            score_and_ranking: ranking_lines.join("\n"),
            reasoning,
        }
        .to_json()
    }

    fn correlation_for(&self, variable: &str) -> Option<f64> {
        let data = self.data.as_ref()?;
        let idx = data.names.iter().position(|n| n == variable)?;
        pearson(&data.columns[idx], &data.labels)
    }
}

fn find_marker_line(prompt: &str, marker: &str) -> Option<String> {
    prompt
        .lines()
        .find_map(|line| line.strip_prefix(marker).map(str::to_string))
}

/// Distance-weighted nearest-neighbour prediction over the demonstrations:
/// features are z-scored with statistics computed from the demonstrations
/// themselves (missing values impute to the mean, i.e. 0 after z-scoring),
/// weights are `1 / (1e-9 + d)`. Returns the prediction and the nearest
/// distance.
pub fn knn_oracle(demonstrations: &[Sample], test: &Sample) -> (f64, f64) {
    let variables: Vec<String> = test.variable_names().map(str::to_string).collect();
    if demonstrations.len() == 1 {
        // demonstration-derived stds are all 0, so every z-score and the
        // distance are 0; return the label verbatim, no weight arithmetic
        return (demonstrations[0].label.unwrap_or(0.0), 0.0);
    }
    let stats: Vec<(f64, f64)> = variables
        .iter()
        .map(|name| {
            let observed: Vec<f64> =
                demonstrations.iter().filter_map(|d| d.get(name)).collect();
            if observed.is_empty() {
                return (0.0, 0.0);
            }
            let n = observed.len() as f64;
            let mean = observed.iter().sum::<f64>() / n;
            let var = observed.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .collect();
    let z = |sample: &Sample, j: usize| -> f64 {
        let (mean, std) = stats[j];
        match sample.get(&variables[j]) {
            Some(x) if std > 0.0 => (x - mean) / std,
            _ => 0.0,
        }
    };

    let mut weight_sum = 0.0;
    let mut weighted_labels = 0.0;
    let mut nearest = f64::INFINITY;
    for demo in demonstrations {
        let distance = (0..variables.len())
            .map(|j| {
                let d = z(test, j) - z(demo, j);
                d * d
            })
            .sum::<f64>()
            .sqrt();
        nearest = nearest.min(distance);
        let weight = 1.0 / (DISTANCE_EPSILON + distance);
        weight_sum += weight;
        weighted_labels += weight * demo.label.unwrap_or(0.0);
    }
    (weighted_labels / weight_sum, nearest)
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    var.sqrt()
}

/// Pearson correlation over pairs where both sides are present and finite;
/// `None` when undefined (fewer than two pairs or zero variance).
fn pearson(column: &[Option<f64>], labels: &[f64]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = column
        .iter()
        .zip(labels)
        .filter_map(|(x, y)| match x {
            Some(x) if x.is_finite() && y.is_finite() => Some((*x, *y)),
            _ => None,
        })
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = pairs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in &pairs {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
