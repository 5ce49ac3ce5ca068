/// Whitespace tokenizer. Tokens without any alphanumeric character are
/// dropped; punctuation inside kept tokens stays attached.
pub fn tokenize_words(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .filter(|token| token.chars().any(char::is_alphanumeric))
        .collect()
}

/// Counts sentences: maximal segments ended by `.`, `?` or `!` followed by
/// whitespace or end of text, or by the end of text itself. Segments without
/// a word do not count.
pub fn count_sentences(text: &str) -> usize {
    let mut count = 0;
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !matches!(c, '.' | '?' | '!') {
            continue;
        }
        let boundary = chars.peek().map_or(true, |(_, next)| next.is_whitespace());
        if boundary {
            let end = i + c.len_utf8();
            if !tokenize_words(&text[start..end]).is_empty() {
                count += 1;
            }
            start = end;
        }
    }
    if !tokenize_words(&text[start..]).is_empty() {
        count += 1;
    }
    count
}
