use std::path::Path;

use ctxed_core::corpus::Sentence;
use serde::Serialize;

use crate::error::PromptError;
use crate::shots::Exemplar;

const FEW: &str = include_str!("../templates/few.tmpl");
const ZERO: &str = include_str!("../templates/zero.tmpl");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateKind {
    Few,
    Zero,
}

/// Template text with `[[name]]` placeholders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub kind: TemplateKind,
    pub text: String,
}

impl Template {
    pub fn builtin(kind: TemplateKind) -> Template {
        let text = match kind {
            TemplateKind::Few => FEW,
            TemplateKind::Zero => ZERO,
        };
        Template {
            kind,
            text: text.to_string(),
        }
    }

    pub fn from_file(kind: TemplateKind, path: impl AsRef<Path>) -> Result<Template, PromptError> {
        Ok(Template {
            kind,
            text: std::fs::read_to_string(path)?,
        })
    }
}

/// Replaces every `[[name]]` with its value. Any placeholder without a value is an error.
pub fn render_template(text: &str, values: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find("[[") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        let Some(close) = after.find("]]") else {
            out.push_str(&rest[open..]);
            return Ok(out);
        };
        let name = &after[..close];
        let is_name = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !is_name {
            out.push_str("[[");
            rest = after;
            continue;
        }
        let value = values
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| PromptError::MissingPlaceholder(name.to_string()))?;
        out.push_str(value);
        rest = &after[close + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

fn tokens_json(tokens: &[String]) -> String {
    serde_json::to_string(tokens).expect("strings serialize")
}

#[derive(Serialize)]
struct ExemplarJson<'a> {
    sentence: &'a [String],
    trigger: String,
    e_start: usize,
    eventtype: &'a str,
}

/// One exemplar per line, each a JSON object in the output schema.
pub fn exemplar_block(shots: &[Exemplar]) -> String {
    shots
        .iter()
        .map(|e| {
            let obj = ExemplarJson {
                sentence: &e.sentence.tokens,
                trigger: e.trigger_text(),
                e_start: e.mention.start,
                eventtype: &e.mention.type_name,
            };
            serde_json::to_string(&obj).expect("exemplar serializes")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn render_prompt(template: &Template, sentence: &Sentence, shots: &[Exemplar]) -> Result<String, PromptError> {
    let tokens = tokens_json(&sentence.tokens);
    match template.kind {
        TemplateKind::Few => {
            if shots.is_empty() {
                return Err(PromptError::NoExemplars);
            }
            let block = exemplar_block(shots);
            render_template(&template.text, &[("sentence_tokens", &tokens), ("few_shot_example", &block)])
        }
        TemplateKind::Zero => render_template(&template.text, &[("tokenized_sentence", &tokens)]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placeholders_are_filled() {
        assert_eq!(render_template("a [[x]] b [[x]]", &[("x", "1")]).unwrap(), "a 1 b 1");
    }

    #[test]
    fn missing_value_is_an_error() {
        let err = render_template("[[x]] [[y]]", &[("x", "1")]).unwrap_err();
        assert!(matches!(err, PromptError::MissingPlaceholder(ref n) if n == "y"));
    }

    #[test]
    fn non_placeholder_brackets_pass_through() {
        assert_eq!(render_template("[[1, 2], [3]] [[", &[]).unwrap(), "[[1, 2], [3]] [[");
        assert_eq!(render_template("'[{{\"a\": 1}}]'", &[]).unwrap(), "'[{{\"a\": 1}}]'");
    }

    #[test]
    fn builtin_templates_use_their_placeholders() {
        assert!(Template::builtin(TemplateKind::Few).text.contains("[[few_shot_example]]"));
        assert!(Template::builtin(TemplateKind::Few).text.contains("[[sentence_tokens]]"));
        assert!(Template::builtin(TemplateKind::Zero).text.contains("[[tokenized_sentence]]"));
    }
}
