use std::path::Path;

use accepted::content::{extract_content_features, ContentFeatures};
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    name: String,
    title: String,
    body_html: String,
    expected: ContentFeatures,
}

#[test]
fn crafted_questions_match_hand_traced_features() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/content/golden.json");
    let cases: Vec<Case> = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(cases.len(), 20);
    for case in &cases {
        let got = extract_content_features(&case.title, &case.body_html);
        assert_eq!(got, case.expected, "{}", case.name);
    }
}
