//! The sample-to-text formatter and its inverse line parser.

use crate::domain::{render_value, Sample};

/// Renders a sample as `"Name1: v1, Name2: v2, ..."` in the sample's
/// variable order, with `"N/A"` for missing values. When `label_as` names
/// the primary variable and the sample carries a label, appends
/// `" -> <name>: <y>"`. Output is byte-stable for identical inputs.
pub fn format_sample_text(sample: &Sample, label_as: Option<&str>) -> String {
    let features = sample
        .values
        .iter()
        .map(|(name, value)| format!("{name}: {}", render_value(*value)))
        .collect::<Vec<_>>()
        .join(", ");
    match (label_as, sample.label) {
        (Some(name), Some(y)) => format!("{features} -> {name}: {y}"),
        _ => features,
    }
}

/// Parses a line produced by [`format_sample_text`] back into a sample;
/// `"N/A"` becomes missing. Returns `None` for lines that are not sample
/// lines. Variable names must not contain `", "` or `": "`.
pub fn parse_sample_line(line: &str) -> Option<Sample> {
    let line = line.trim();
    if line.is_empty() {
        return None;
    }
    let (feature_part, label) = match line.split_once(" -> ") {
        Some((features, label_part)) => {
            let (_, y) = label_part.rsplit_once(": ")?;
            (features, Some(y.trim().parse::<f64>().ok()?))
        }
        None => (line, None),
    };
    let mut values = Vec::new();
    if !feature_part.is_empty() {
        for segment in feature_part.split(", ") {
            let (name, raw) = segment.rsplit_once(": ")?;
            let value = match raw.trim() {
                "N/A" => None,
                other => Some(other.parse::<f64>().ok()?),
            };
            values.push((name.to_string(), value));
        }
    }
    Some(Sample::new(values, label))
}
