use ctxed_core::corpus::{EventTypeVocabulary, NONE};
use ctxed_prompt::parse_llm_output;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vocab() -> EventTypeVocabulary {
    EventTypeVocabulary::new(vec!["Attack".into(), "Motion".into()]).unwrap()
}

fn toks(s: &[&str]) -> Vec<String> {
    s.iter().map(|t| t.to_string()).collect()
}

#[test]
fn valid_entry_is_kept() {
    let out = parse_llm_output(
        r#"[{"sentence":["He","fell"],"trigger":"fell","e_start":1,"eventtype":"Motion"}]"#,
        &vocab(),
        &toks(&["He", "fell"]),
    );
    assert_eq!(out.entries.len(), 1);
    assert_eq!(out.entries[0].eventtype, "Motion");
    assert!(out.rejected.is_empty() && out.diagnostic.is_none());
}

#[test]
fn unknown_type_becomes_none() {
    let out = parse_llm_output(
        r#"[{"sentence":["He","fell"],"trigger":"fell","e_start":1,"eventtype":"Tumbling"}]"#,
        &vocab(),
        &toks(&["He", "fell"]),
    );
    assert_eq!(out.entries.len(), 1);
    assert_eq!(out.entries[0].eventtype, NONE);
}

#[test]
fn leading_prose_is_ignored() {
    let out = parse_llm_output(
        "Sure! The events are listed below [see]:\n[{\"trigger\":\"fell\",\"e_start\":1,\"eventtype\":\"Motion\"}] hope this helps",
        &vocab(),
        &toks(&["He", "fell"]),
    );
    assert_eq!(out.entries.len(), 1);
}

#[test]
fn malformed_entries_are_rejected_with_reasons() {
    let t = toks(&["They", "blew", "up", "it"]);
    let text = r#"[
        {"trigger":"blew up","e_start":1,"eventtype":"Attack"},
        {"trigger":"blew up it","e_start":1,"eventtype":"Attack"},
        {"trigger":"it","e_start":9,"eventtype":"Attack"},
        {"trigger":"it","e_start":-1,"eventtype":"Attack"},
        {"trigger":"up","e_start":1,"eventtype":"Attack"},
        {"e_start":1,"eventtype":"Attack"},
        {"trigger":"up","e_start":2},
        {"trigger":"up","e_start":"2","eventtype":"Attack"},
        {"trigger":"","e_start":0,"eventtype":"Attack"},
        "blew",
        {"trigger":"it","e_start":18446744073709551615,"eventtype":"Attack"}
    ]"#;
    let out = parse_llm_output(text, &vocab(), &t);
    assert_eq!(out.entries.len(), 1);
    assert_eq!(out.entries[0].e_start, 1);
    assert_eq!(out.entries[0].word_count(), 2);
    assert_eq!(out.rejected.len(), 10);
    assert!(out.rejected.iter().all(|r| !r.reason.is_empty()));
}

#[test]
fn no_array_yields_diagnostic() {
    for text in ["", "no events", "[unclosed", "{\"trigger\":\"x\"}", "[1, 2"] {
        let out = parse_llm_output(text, &vocab(), &toks(&["x"]));
        assert!(out.entries.is_empty());
        assert!(out.diagnostic.is_some(), "{text:?}");
    }
}

#[test]
fn deep_nesting_does_not_overflow() {
    let text = "[".repeat(100_000);
    let out = parse_llm_output(&text, &vocab(), &toks(&["x"]));
    assert!(out.entries.is_empty());
}

const FRAGMENTS: &[&str] = &[
    "[", "]", "{", "}", ",", ":", "\"", "\"trigger\"", "\"e_start\"", "\"eventtype\"", "\"Attack\"", "\"Motion\"",
    "\"Bogus\"", "\"fell\"", "\"He fell\"", "0", "1", "2", "-1", "1e99", "null", "true", " ", "\n", "\\", "\\u0000",
    "é", "\u{1F600}",
];

/// Random byte strings and random JSON-ish fragment soups.
fn fuzz_input(rng: &mut ChaCha8Rng) -> String {
    if rng.random_bool(0.5) {
        let len = rng.random_range(0..64);
        let bytes: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        String::from_utf8_lossy(&bytes).into_owned()
    } else {
        let n = rng.random_range(0..40);
        (0..n).map(|_| FRAGMENTS[rng.random_range(0..FRAGMENTS.len())]).collect()
    }
}

#[test]
fn fuzz_never_panics_and_types_are_total() {
    let v = vocab();
    let t = toks(&["He", "fell"]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100_000 {
        let text = fuzz_input(&mut rng);
        let out = parse_llm_output(&text, &v, &t);
        for e in &out.entries {
            assert!(v.contains(&e.eventtype) || e.eventtype == NONE);
            assert!(e.e_start + e.word_count() <= t.len());
        }
    }
}

proptest! {
    #[test]
    fn arbitrary_text_is_tolerated(text in ".{0,200}") {
        let v = vocab();
        let out = parse_llm_output(&text, &v, &toks(&["He", "fell"]));
        for e in &out.entries {
            prop_assert!(v.contains(&e.eventtype) || e.eventtype == NONE);
        }
    }

    #[test]
    fn well_formed_entries_map_types_totally(
        entries in prop::collection::vec((0usize..4, "[A-Za-z]{1,8}"), 0..6),
    ) {
        let v = vocab();
        let t = toks(&["a", "b", "c"]);
        let items: Vec<serde_json::Value> = entries
            .iter()
            .map(|(i, ty)| serde_json::json!({"trigger": t.get(*i).cloned().unwrap_or_default(), "e_start": i, "eventtype": ty}))
            .collect();
        let out = parse_llm_output(&serde_json::Value::Array(items).to_string(), &v, &t);
        prop_assert_eq!(out.entries.len() + out.rejected.len(), entries.len());
        for (e, (_, ty)) in out.entries.iter().zip(entries.iter().filter(|(i, _)| *i < 3)) {
            let expected = if v.contains(ty) { ty.as_str() } else { NONE };
            prop_assert_eq!(e.eventtype.as_str(), expected);
        }
    }
}
