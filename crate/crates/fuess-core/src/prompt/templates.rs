//! Canonical template text, shipped with the crate and versioned.
//!
//! Placeholder grammar: a placeholder is a literal brace-wrapped name;
//! the recognized names are {Industrial Process}, {Facility},
//! {Primary Variable}, {Feature Count}, {Auxiliary Variable},
//! {Auxiliary Variables}, {Context}, {Samples}, and {Test Sample}.
//! Rendering substitutes every occurrence in a single pass; templates are
//! covered by golden tests, so any wording change is a version bump.

/// Bumped whenever any template file changes; recorded in run manifests.
pub const TEMPLATE_VERSION: &str = "1";

pub const ROLE: &str = include_str!("../../templates/role.txt");
pub const AVS_DATA: &str = include_str!("../../templates/avs_data.txt");
pub const AVS_INSTRUCTION_GLOBAL: &str =
    include_str!("../../templates/avs_instruction_global.txt");
pub const AVS_INSTRUCTION_LOCAL: &str = include_str!("../../templates/avs_instruction_local.txt");
pub const AVS_CONTEXT: &str = include_str!("../../templates/avs_context.txt");
pub const AVS_MAIN_GLOBAL: &str = include_str!("../../templates/avs_main_global.txt");
pub const AVS_MAIN_LOCAL: &str = include_str!("../../templates/avs_main_local.txt");
pub const SS_DATA: &str = include_str!("../../templates/ss_data.txt");
pub const SS_IMPORTANCE_HEADER: &str = include_str!("../../templates/ss_importance_header.txt");
pub const SS_EXPLANATION_HEADER: &str = include_str!("../../templates/ss_explanation_header.txt");
pub const SS_INSTRUCTION_BASE: &str = include_str!("../../templates/ss_instruction_base.txt");
pub const SS_INSTRUCTION_COT: &str = include_str!("../../templates/ss_instruction_cot.txt");
pub const SS_INSTRUCTION_FORMAT: &str = include_str!("../../templates/ss_instruction_format.txt");
pub const SS_INSTRUCTION_EC: &str = include_str!("../../templates/ss_instruction_ec.txt");
pub const SS_CONTEXT: &str = include_str!("../../templates/ss_context.txt");
pub const SS_MAIN: &str = include_str!("../../templates/ss_main.txt");

/// Sentence stating that no knowledge was retrieved; substituted for
/// {Context} when retrieval returned nothing so the prompt stays valid.
pub const EMPTY_CONTEXT_NOTE: &str = "No external knowledge was retrieved for this query.";

/// Line prefixes the deterministic stub backend keys on. They live in the
/// template files above; tests pin the correspondence.
pub const TEST_SAMPLE_MARKER: &str = "Test sample: ";
pub const GLOBAL_CANDIDATES_MARKER: &str = "Candidate auxiliary variables: ";
pub const LOCAL_VARIABLE_MARKER: &str = "Auxiliary variable under analysis: ";

/// Substitutes each `(placeholder, value)` pair everywhere it occurs.
pub fn fill(template: &str, substitutions: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (placeholder, value) in substitutions {
        out = out.replace(placeholder, value);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markers_match_template_files() {
        assert!(SS_MAIN.starts_with(TEST_SAMPLE_MARKER.trim_end()));
        assert!(AVS_MAIN_GLOBAL.starts_with(GLOBAL_CANDIDATES_MARKER.trim_end()));
        assert!(AVS_MAIN_LOCAL.starts_with(LOCAL_VARIABLE_MARKER.trim_end()));
    }

    #[test]
    fn fill_replaces_all_occurrences() {
        let out = fill("{A} and {A} or {B}", &[("{A}", "x"), ("{B}", "y")]);
        assert_eq!(out, "x and x or y");
    }

    #[test]
    fn templates_have_no_trailing_newline() {
        for t in [ROLE, AVS_DATA, SS_MAIN, SS_INSTRUCTION_EC] {
            assert_eq!(t, t.trim_end());
        }
    }
}
