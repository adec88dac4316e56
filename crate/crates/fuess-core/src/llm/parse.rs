//! Strict parsing of the three structured JSON answer shapes.
//!
//! Extraction is tolerant (prose and code fences around the JSON are fine);
//! validation is strict (required fields, numeric coercion, confidence
//! range).

use serde_json::Value;

use super::LlmError;

/// Which answer schema to expect.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnswerKind {
    ZavsGlobal,
    ZavsLocal,
    Ufss,
}

/// A validated structured answer.
#[derive(Debug, Clone, PartialEq)]
pub enum StructuredAnswer {
    ZavsGlobal {
        score_and_ranking: String,
        reasoning: String,
    },
    ZavsLocal {
        reasoning: String,
    },
    Ufss {
        prediction: f64,
        confidence: f64,
        reasoning: String,
    },
}

impl StructuredAnswer {
    pub fn kind(&self) -> AnswerKind {
        match self {
            StructuredAnswer::ZavsGlobal { .. } => AnswerKind::ZavsGlobal,
            StructuredAnswer::ZavsLocal { .. } => AnswerKind::ZavsLocal,
            StructuredAnswer::Ufss { .. } => AnswerKind::Ufss,
        }
    }

    /// Serializes to the canonical JSON answer shape; parseable back by
    /// [`parse_response`] with the matching kind.
    pub fn to_json(&self) -> String {
        let value = match self {
            StructuredAnswer::ZavsGlobal { score_and_ranking, reasoning } => serde_json::json!({
                "score and ranking": score_and_ranking,
                "reasoning": reasoning,
            }),
            StructuredAnswer::ZavsLocal { reasoning } => serde_json::json!({
                "reasoning": reasoning,
            }),
            StructuredAnswer::Ufss { prediction, confidence, reasoning } => serde_json::json!({
                "Prediction Result": prediction,
                "Confidence Score": confidence,
                "Reasoning": reasoning,
            }),
        };
        value.to_string()
    }
}

/// Finds the first balanced `{...}` region that parses as a JSON object,
/// skipping prose, code fences, and earlier non-JSON brace regions.
fn extract_first_json(raw: &str) -> Option<Value> {
    let bytes = raw.as_bytes();
    for (start, &b) in bytes.iter().enumerate() {
        if b != b'{' {
            continue;
        }
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        for (i, &c) in bytes.iter().enumerate().skip(start) {
            if in_string {
                if escaped {
                    escaped = false;
                } else if c == b'\\' {
                    escaped = true;
                } else if c == b'"' {
                    in_string = false;
                }
                continue;
            }
            match c {
                b'"' => in_string = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        if let Ok(value) =
                            serde_json::from_str::<Value>(&raw[start..=i])
                        {
                            if value.is_object() {
                                return Some(value);
                            }
                        }
                        break;
                    }
                }
                _ => {}
            }
        }
    }
    None
}

/// Coerces a JSON number or numeric string to f64.
fn coerce_number(value: &Value) -> Option<f64> {
    match value {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    }
}

fn require_string(obj: &serde_json::Map<String, Value>, field: &str) -> Result<String, LlmError> {
    match obj.get(field) {
        Some(Value::String(s)) => Ok(s.clone()),
        _ => Err(LlmError::SchemaViolation(field.to_string())),
    }
}

/// Parses a raw completion into the expected structured answer.
///
/// The first JSON object found in the text is validated against the schema
/// for `kind`: UFSS requires "Prediction Result", "Reasoning", and
/// "Confidence Score" (numbers coerced from JSON numbers or numeric
/// strings, confidence clamped into [0, 1] only when within 0.01 of it);
/// the global selection schema requires "score and ranking" and
/// "reasoning"; the local schema requires "reasoning".
pub fn parse_response(kind: AnswerKind, raw: &str) -> Result<StructuredAnswer, LlmError> {
    let value = extract_first_json(raw).ok_or(LlmError::NoJsonFound)?;
    let obj = value.as_object().ok_or(LlmError::NoJsonFound)?;
    match kind {
        AnswerKind::ZavsGlobal => Ok(StructuredAnswer::ZavsGlobal {
            score_and_ranking: require_string(obj, "score and ranking")?,
            reasoning: require_string(obj, "reasoning")?,
        }),
        AnswerKind::ZavsLocal => Ok(StructuredAnswer::ZavsLocal {
            reasoning: require_string(obj, "reasoning")?,
        }),
        AnswerKind::Ufss => {
            let prediction_value = obj
                .get("Prediction Result")
                .ok_or_else(|| LlmError::SchemaViolation("Prediction Result".into()))?;
            let prediction = coerce_number(prediction_value)
                .filter(|p| p.is_finite())
                .ok_or(LlmError::NonNumericPrediction)?;
            let confidence_value = obj
                .get("Confidence Score")
                .ok_or_else(|| LlmError::SchemaViolation("Confidence Score".into()))?;
            let confidence = coerce_number(confidence_value)
                .ok_or_else(|| LlmError::SchemaViolation("Confidence Score".into()))?;
            let confidence = if (0.0..=1.0).contains(&confidence) {
                confidence
            } else if (-0.01..=1.01).contains(&confidence) {
                log::warn!("confidence score {confidence} clamped into [0, 1]");
                confidence.clamp(0.0, 1.0)
            } else {
                return Err(LlmError::ConfidenceOutOfRange(confidence));
            };
            let reasoning = require_string(obj, "Reasoning")?;
            Ok(StructuredAnswer::Ufss { prediction, confidence, reasoning })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bare_ufss_answer() {
        let raw = r#"{"Prediction Result": 1.335, "Confidence Score": 0.9, "Reasoning": "close match"}"#;
        let ans = parse_response(AnswerKind::Ufss, raw).unwrap();
        assert_eq!(
            ans,
            StructuredAnswer::Ufss { prediction: 1.335, confidence: 0.9, reasoning: "close match".into() }
        );
    }

    #[test]
    fn parses_fenced_json_with_prose() {
        let raw = "Sure, here is the result:\n```json\n{\"Prediction Result\": 2.5, \"Confidence Score\": 0.8, \"Reasoning\": \"r\"}\n```\nHope this helps!";
        let ans = parse_response(AnswerKind::Ufss, raw).unwrap();
        assert!(matches!(ans, StructuredAnswer::Ufss { prediction, .. } if prediction == 2.5));
    }

    #[test]
    fn skips_invalid_brace_regions() {
        let raw = "{not json} then {\"reasoning\": \"ok\"}";
        let ans = parse_response(AnswerKind::ZavsLocal, raw).unwrap();
        assert_eq!(ans, StructuredAnswer::ZavsLocal { reasoning: "ok".into() });
    }

    #[test]
    fn missing_confidence_is_schema_violation() {
        let raw = r#"{"Prediction Result": 1.0, "Reasoning": "r"}"#;
        match parse_response(AnswerKind::Ufss, raw).unwrap_err() {
            LlmError::SchemaViolation(field) => assert_eq!(field, "Confidence Score"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn numeric_strings_coerce() {
        let raw = r#"{"Prediction Result": "26.123", "Confidence Score": "0.85", "Reasoning": "r"}"#;
        let ans = parse_response(AnswerKind::Ufss, raw).unwrap();
        assert_eq!(
            ans,
            StructuredAnswer::Ufss { prediction: 26.123, confidence: 0.85, reasoning: "r".into() }
        );
    }

    #[test]
    fn non_numeric_prediction_errors() {
        let raw = r#"{"Prediction Result": "high", "Confidence Score": 0.5, "Reasoning": "r"}"#;
        assert!(matches!(
            parse_response(AnswerKind::Ufss, raw),
            Err(LlmError::NonNumericPrediction)
        ));
    }

    #[test]
    fn confidence_clamps_only_near_range() {
        let raw = r#"{"Prediction Result": 1.0, "Confidence Score": 1.005, "Reasoning": "r"}"#;
        let ans = parse_response(AnswerKind::Ufss, raw).unwrap();
        assert!(matches!(ans, StructuredAnswer::Ufss { confidence, .. } if confidence == 1.0));

        let raw = r#"{"Prediction Result": 1.0, "Confidence Score": 1.2, "Reasoning": "r"}"#;
        assert!(matches!(
            parse_response(AnswerKind::Ufss, raw),
            Err(LlmError::ConfidenceOutOfRange(_))
        ));
    }

    #[test]
    fn no_json_found() {
        assert!(matches!(
            parse_response(AnswerKind::Ufss, "no braces here"),
            Err(LlmError::NoJsonFound)
        ));
        assert!(matches!(
            parse_response(AnswerKind::Ufss, "{broken"),
            Err(LlmError::NoJsonFound)
        ));
    }

    #[test]
    fn global_schema_requires_both_fields() {
        let raw = r#"{"score and ranking": "1. a: 0.9", "reasoning": "r"}"#;
        let ans = parse_response(AnswerKind::ZavsGlobal, raw).unwrap();
        assert!(matches!(ans, StructuredAnswer::ZavsGlobal { .. }));

        let raw = r#"{"score and ranking": "1. a: 0.9"}"#;
        assert!(matches!(
            parse_response(AnswerKind::ZavsGlobal, raw),
            Err(LlmError::SchemaViolation(f)) if f == "reasoning"
        ));
    }

    #[test]
    fn serialize_then_parse_is_identity() {
        let answers = vec![
            StructuredAnswer::Ufss { prediction: -3.25, confidence: 0.42, reasoning: "why \"quoted\" and {braced}".into() },
            StructuredAnswer::ZavsGlobal { score_and_ranking: "1. pH: 0.93\n2. T: 0.7".into(), reasoning: "r".into() },
            StructuredAnswer::ZavsLocal { reasoning: "multi\nline".into() },
        ];
        for ans in answers {
            let parsed = parse_response(ans.kind(), &ans.to_json()).unwrap();
            assert_eq!(parsed, ans);
        }
    }

    #[test]
    fn embedded_braces_in_strings_do_not_confuse_extraction() {
        let raw = r#"prefix {"reasoning": "a { nested \" brace }"} suffix"#;
        let ans = parse_response(AnswerKind::ZavsLocal, raw).unwrap();
        assert!(matches!(ans, StructuredAnswer::ZavsLocal { .. }));
    }
}
