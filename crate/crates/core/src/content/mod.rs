//! Content features of a question: title and body presentation statistics.

mod html;
mod text;

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use html::{parse_body, BodyParts};
pub use text::{count_sentences, tokenize_words};

/// Feature names in canonical order.
pub const CONTENT_FEATURE_NAMES: [&str; 17] = [
    "title_avg_word_chars",
    "title_has_wh_word",
    "body_avg_word_chars",
    "body_avg_sentence_words",
    "body_word_count",
    "link_count",
    "code_snippet_count",
    "title_word_count",
    "title_starts_capital",
    "paragraph_count",
    "title_is_interrogative",
    "title_has_error_keyword",
    "has_quote",
    "lines_of_code",
    "body_sentence_count",
    "code_chars",
    "has_list",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContentFeatures {
    pub title_avg_word_chars: f64,
    pub title_has_wh_word: bool,
    pub body_avg_word_chars: f64,
    pub body_avg_sentence_words: f64,
    pub body_word_count: usize,
    pub link_count: usize,
    pub code_snippet_count: usize,
    pub title_word_count: usize,
    pub title_starts_capital: bool,
    pub paragraph_count: usize,
    pub title_is_interrogative: bool,
    pub title_has_error_keyword: bool,
    pub has_quote: bool,
    pub lines_of_code: usize,
    pub body_sentence_count: usize,
    pub code_chars: usize,
    pub has_list: bool,
}

impl ContentFeatures {
    pub fn values(&self) -> [f64; 17] {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        [
            self.title_avg_word_chars,
            flag(self.title_has_wh_word),
            self.body_avg_word_chars,
            self.body_avg_sentence_words,
            self.body_word_count as f64,
            self.link_count as f64,
            self.code_snippet_count as f64,
            self.title_word_count as f64,
            flag(self.title_starts_capital),
            self.paragraph_count as f64,
            flag(self.title_is_interrogative),
            flag(self.title_has_error_keyword),
            flag(self.has_quote),
            self.lines_of_code as f64,
            self.body_sentence_count as f64,
            self.code_chars as f64,
            flag(self.has_list),
        ]
    }
}

static WH_WORD: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(what|when|where|which|who|whom|whose|why|how)\b").unwrap()
});

fn word_stats(words: &[&str]) -> (usize, f64) {
    let count = words.len();
    if count == 0 {
        return (0, 0.0);
    }
    let chars: usize = words.iter().map(|w| w.chars().count()).sum();
    (count, chars as f64 / count as f64)
}

pub fn extract_content_features(title: &str, body_html: &str) -> ContentFeatures {
    let body = parse_body(body_html);

    let title_words = tokenize_words(title);
    let (title_word_count, title_avg_word_chars) = word_stats(&title_words);
    let body_words = tokenize_words(&body.plain_text);
    let (body_word_count, body_avg_word_chars) = word_stats(&body_words);
    let body_sentence_count = count_sentences(&body.plain_text);
    let body_avg_sentence_words = if body_sentence_count == 0 {
        0.0
    } else {
        body_word_count as f64 / body_sentence_count as f64
    };

    let lowered = title.to_lowercase();
    let lines_of_code = body
        .code_blocks
        .iter()
        .flat_map(|block| block.lines())
        .filter(|line| !line.trim().is_empty())
        .count();
    let code_chars = body.code_blocks.iter().map(|b| b.chars().count()).sum();

    ContentFeatures {
        title_avg_word_chars,
        title_has_wh_word: WH_WORD.is_match(title),
        body_avg_word_chars,
        body_avg_sentence_words,
        body_word_count,
        link_count: body.links,
        code_snippet_count: body.code_blocks.len(),
        title_word_count,
        title_starts_capital: title.chars().next().is_some_and(char::is_uppercase),
        paragraph_count: body.paragraphs,
        title_is_interrogative: title.trim_end().ends_with('?'),
        title_has_error_keyword: lowered.contains("error") || lowered.contains("not working"),
        has_quote: body.has_blockquote,
        lines_of_code,
        body_sentence_count,
        code_chars,
        has_list: body.has_list_item,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interrogative_title() {
        let f = extract_content_features("Why does X fail?", "<p>It breaks. Help me.</p>");
        assert!(f.title_has_wh_word);
        assert!(f.title_is_interrogative);
        assert_eq!(f.body_sentence_count, 2);
        assert_eq!(f.body_word_count, 4);
        assert_eq!(f.body_avg_sentence_words, 2.0);
        assert!(f.title_starts_capital);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(extract_content_features("", ""), ContentFeatures::default());
    }

    #[test]
    fn error_title_with_code() {
        let f = extract_content_features("error in loop", "<pre><code>x\n\ny</code></pre>");
        assert!(f.title_has_error_keyword);
        assert_eq!(f.lines_of_code, 2);
        assert_eq!(f.code_snippet_count, 1);
        assert_eq!(f.code_chars, 4);
        assert!(!f.title_starts_capital);
        assert_eq!(f.body_word_count, 0);
    }

    #[test]
    fn wh_word_needs_word_boundary() {
        assert!(!extract_content_features("Showcase whatever", "").title_has_wh_word);
        assert!(extract_content_features("HOW-TO guide", "").title_has_wh_word);
    }

    #[test]
    fn vector_order_matches_names() {
        let f = extract_content_features("Why?", "<ul><li>x</li></ul>");
        let v = f.values();
        assert_eq!(v.len(), CONTENT_FEATURE_NAMES.len());
        assert_eq!(v[1], 1.0);
        assert_eq!(v[16], 1.0);
        assert_eq!(v[10], 1.0);
    }

    fn body_strategy() -> impl Strategy<Value = String> {
        prop::collection::vec(
            prop_oneof![
                "[a-zA-Z ,.?!]{0,30}".prop_map(|t| format!("<p>{t}</p>")),
                "[a-z ]{0,10}".prop_map(|t| format!("<blockquote>{t}</blockquote>")),
                "[a-z]{1,8}".prop_map(|t| format!("<a href=\"#\">{t}</a>")),
                "[a-z]{1,8}".prop_map(|t| format!("<ul><li>{t}</li></ul>")),
            ],
            0..6,
        )
        .prop_map(|parts| parts.concat())
    }

    proptest! {
        #[test]
        fn code_never_leaks_into_text(body in body_strategy(), code in "[ -~\n]{0,60}", at in 0usize..4) {
            let base = extract_content_features("t", &body);
            let escaped = html_escape::encode_text(&code);
            let snippet = format!("<pre><code>{escaped}</code></pre>");
            // Insert the snippet between top-level elements.
            let pieces: Vec<&str> = body.split_inclusive("</p>").collect();
            let cut = at.min(pieces.len());
            let injected = format!("{}{}{}", pieces[..cut].concat(), snippet, pieces[cut..].concat());
            let with_code = extract_content_features("t", &injected);
            prop_assert_eq!(with_code.body_word_count, base.body_word_count);
            prop_assert_eq!(with_code.body_sentence_count, base.body_sentence_count);
            prop_assert_eq!(with_code.body_avg_word_chars, base.body_avg_word_chars);
            prop_assert_eq!(with_code.code_snippet_count, base.code_snippet_count + 1);
            prop_assert_eq!(with_code.code_chars, code.chars().count());
        }

        #[test]
        fn appending_a_paragraph_is_monotone(body in body_strategy(), word in "[a-zA-Z]{1,10}") {
            let before = extract_content_features("t", &body);
            let after = extract_content_features("t", &format!("{body}<p>{word}.</p>"));
            prop_assert!(after.paragraph_count >= before.paragraph_count);
            prop_assert!(after.body_word_count >= before.body_word_count);
            prop_assert!(after.body_sentence_count >= before.body_sentence_count);
        }

        #[test]
        fn plain_text_has_no_markup_stats(text in "[a-zA-Z0-9 .,?!]{0,80}") {
            let f = extract_content_features(&text, &text);
            prop_assert_eq!(f.link_count, 0);
            prop_assert_eq!(f.code_snippet_count, 0);
            prop_assert_eq!(f.paragraph_count, 0);
            prop_assert!(f.code_chars >= f.lines_of_code);
            if f.body_sentence_count > 0 {
                prop_assert!(f.body_word_count >= f.body_sentence_count);
            }
            prop_assert_eq!(&f, &extract_content_features(&text, &text));
        }
    }
}
