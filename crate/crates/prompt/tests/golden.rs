mod common;

use common::{blessing, few_prompts, fixture, responses, test, zero_prompts};
use ctxed_prompt::{prompt_hash, CacheEntry};

fn check_golden(name: &str, rendered: &str) {
    let path = fixture(&format!("golden/{name}"));
    if blessing() {
        std::fs::write(&path, rendered).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(rendered, expected, "{name} differs from golden fixture");
}

#[test]
fn few_shot_prompts_match_golden() {
    let corpus = test();
    for (s, p) in corpus.sentences().iter().zip(few_prompts()) {
        check_golden(&format!("{}.few.txt", s.id), &p);
    }
}

#[test]
fn zero_shot_prompts_match_golden() {
    let corpus = test();
    for (s, p) in corpus.sentences().iter().zip(zero_prompts()) {
        check_golden(&format!("{}.zero.txt", s.id), &p);
    }
}

#[test]
fn rendered_prompts_contain_instruction_text() {
    for p in zero_prompts() {
        assert!(p.contains("Each trigger must be one or two words long"));
        assert!(!p.contains("[["));
    }
    for p in few_prompts() {
        assert!(p.contains("each trigger should be output separately as an independent JSON entry"));
        assert!(!p.contains("[["));
    }
}

#[test]
fn few_shot_prompt_embeds_sentence_and_exemplars() {
    let p = &few_prompts()[1];
    assert!(p.contains(r#"join_tokens(["He","fell","down","the","stairs"])"#));
    assert!(p.contains(r#""eventtype":"Motion""#));
}

/// The stub fixture maps each few-shot prompt's hash to the recorded response.
#[test]
fn stub_fixture_is_keyed_by_current_prompts() {
    let path = fixture("stub_responses.jsonl");
    let corpus = test();
    let responses = responses();
    let expected: Vec<CacheEntry> = corpus
        .sentences()
        .iter()
        .zip(few_prompts())
        .map(|(s, p)| CacheEntry {
            prompt_sha256: prompt_hash(&p),
            response: responses[&s.id].clone(),
            model: "stub".into(),
            temperature: 0.4,
        })
        .collect();
    let text: String = expected
        .iter()
        .map(|e| serde_json::to_string(e).unwrap() + "\n")
        .collect();
    if blessing() {
        std::fs::write(&path, &text).unwrap();
        return;
    }
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}
