#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use ctxed_core::corpus::{load_corpus, Corpus};
use ctxed_prompt::{render_prompt, sample_shots, ShotConfig, Template, TemplateKind};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn train() -> Corpus {
    load_corpus(fixture("train.jsonl"), "train").unwrap()
}

pub fn test() -> Corpus {
    load_corpus(fixture("test.jsonl"), "test").unwrap()
}

/// Few-shot config used for the golden fixtures: the defaults with seed 7.
pub fn shot_config() -> ShotConfig {
    ShotConfig {
        seed: 7,
        ..ShotConfig::default()
    }
}

pub fn few_prompts() -> Vec<String> {
    let shots = sample_shots(&train(), &shot_config()).unwrap();
    let t = Template::builtin(TemplateKind::Few);
    test().sentences().iter().map(|s| render_prompt(&t, s, &shots).unwrap()).collect()
}

pub fn zero_prompts() -> Vec<String> {
    let t = Template::builtin(TemplateKind::Zero);
    test().sentences().iter().map(|s| render_prompt(&t, s, &[]).unwrap()).collect()
}

/// Raw responses by sentence id.
pub fn responses() -> BTreeMap<String, String> {
    serde_json::from_str(&std::fs::read_to_string(fixture("responses.json")).unwrap()).unwrap()
}

pub fn blessing() -> bool {
    std::env::var_os("CTXED_BLESS").is_some()
}
