//! Lenient HTML fragment scanner for question bodies.
//!
//! Only the structure the features need is tracked: which elements are open,
//! whether text sits inside `<pre>` or `<code>`, and the element counts.
//! Unclosed elements are closed implicitly at the end of the fragment and
//! stray closing tags are ignored.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BodyParts {
    /// Text with markup removed, `<pre>`/`<code>` content dropped, entities
    /// decoded and whitespace collapsed.
    pub plain_text: String,
    /// Text of every `<code>` element whose parent is a `<pre>`.
    pub code_blocks: Vec<String>,
    pub links: usize,
    pub paragraphs: usize,
    pub has_blockquote: bool,
    pub has_list_item: bool,
}

const VOID_ELEMENTS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "source", "track",
    "wbr",
];

/// Elements that do not break the surrounding text flow.
const INLINE_ELEMENTS: &[&str] = &[
    "a", "abbr", "b", "bdi", "bdo", "cite", "code", "del", "dfn", "em", "i", "ins", "kbd", "mark",
    "q", "s", "samp", "small", "span", "strike", "strong", "sub", "sup", "tt", "u", "var",
];

enum Token<'a> {
    Text(&'a str),
    Open { name: String, self_closing: bool },
    Close { name: String },
}

struct Tokenizer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Tokenizer<'a> {
    fn new(src: &'a str) -> Self {
        Tokenizer { src, pos: 0 }
    }

    /// Scans a tag starting at `self.pos` (which points at `<`). Returns `None`
    /// when the `<` does not begin markup, in which case it is plain text.
    fn tag(&mut self) -> Option<Option<Token<'a>>> {
        let rest = &self.src[self.pos..];
        let bytes = rest.as_bytes();
        if rest.starts_with("<!--") {
            let end = rest[4..].find("-->").map_or(rest.len(), |i| i + 7);
            self.pos += end;
            return Some(None);
        }
        if rest.starts_with("<!") || rest.starts_with("<?") {
            let end = rest.find('>').map_or(rest.len(), |i| i + 1);
            self.pos += end;
            return Some(None);
        }
        let closing = bytes.get(1) == Some(&b'/');
        let name_start = if closing { 2 } else { 1 };
        if !bytes.get(name_start).is_some_and(u8::is_ascii_alphabetic) {
            return None;
        }
        let name_len = rest[name_start..]
            .bytes()
            .take_while(|b| b.is_ascii_alphanumeric() || *b == b'-' || *b == b':')
            .count();
        let name = rest[name_start..name_start + name_len].to_ascii_lowercase();

        // Skip attributes, honouring quoted values that may contain `>`.
        let mut i = name_start + name_len;
        let mut quote: Option<u8> = None;
        let mut end = None;
        while i < bytes.len() {
            let b = bytes[i];
            match quote {
                Some(q) if b == q => quote = None,
                Some(_) => {}
                None if b == b'"' || b == b'\'' => quote = Some(b),
                None if b == b'>' => {
                    end = Some(i);
                    break;
                }
                None => {}
            }
            i += 1;
        }
        let end = end.unwrap_or(bytes.len().saturating_sub(1));
        let self_closing = end > 0 && bytes.get(end) == Some(&b'>') && bytes[end - 1] == b'/';
        self.pos += (end + 1).min(rest.len());
        Some(Some(if closing {
            Token::Close { name }
        } else {
            Token::Open { name, self_closing }
        }))
    }
}

impl<'a> Iterator for Tokenizer<'a> {
    type Item = Token<'a>;

    fn next(&mut self) -> Option<Token<'a>> {
        loop {
            if self.pos >= self.src.len() {
                return None;
            }
            let rest = &self.src[self.pos..];
            if rest.starts_with('<') {
                match self.tag() {
                    Some(Some(token)) => return Some(token),
                    Some(None) => continue,
                    None => {
                        // A bare `<` is text; emit it together with what follows.
                        let next_lt = rest[1..].find('<').map_or(rest.len(), |i| i + 1);
                        self.pos += next_lt;
                        return Some(Token::Text(&rest[..next_lt]));
                    }
                }
            }
            let next_lt = rest.find('<').unwrap_or(rest.len());
            self.pos += next_lt;
            return Some(Token::Text(&rest[..next_lt]));
        }
    }
}

pub fn parse_body(body_html: &str) -> BodyParts {
    let mut parts = BodyParts::default();
    let mut stack: Vec<String> = Vec::new();
    let mut text = String::new();
    // Index into `stack` of the `<code>` element collecting a block, if any.
    let mut block: Option<(usize, String)> = None;
    let mut pre_depth = 0usize;
    let mut code_depth = 0usize;

    for token in Tokenizer::new(body_html) {
        match token {
            Token::Text(raw) => {
                let decoded = html_escape::decode_html_entities(raw);
                if let Some((_, buf)) = block.as_mut() {
                    buf.push_str(&decoded);
                } else if pre_depth == 0 && code_depth == 0 {
                    text.push_str(&decoded);
                }
            }
            Token::Open { name, self_closing } => {
                match name.as_str() {
                    "a" => parts.links += 1,
                    "p" => parts.paragraphs += 1,
                    "blockquote" => parts.has_blockquote = true,
                    "li" => parts.has_list_item = true,
                    _ => {}
                }
                if !INLINE_ELEMENTS.contains(&name.as_str()) {
                    text.push(' ');
                }
                if self_closing || VOID_ELEMENTS.contains(&name.as_str()) {
                    continue;
                }
                if name == "code" && block.is_none() && stack.last().is_some_and(|n| n == "pre") {
                    block = Some((stack.len(), String::new()));
                }
                match name.as_str() {
                    "pre" => pre_depth += 1,
                    "code" => code_depth += 1,
                    _ => {}
                }
                stack.push(name);
            }
            Token::Close { name } => {
                if !INLINE_ELEMENTS.contains(&name.as_str()) {
                    text.push(' ');
                }
                let Some(at) = stack.iter().rposition(|n| *n == name) else {
                    continue;
                };
                for closed in stack.drain(at..) {
                    match closed.as_str() {
                        "pre" => pre_depth -= 1,
                        "code" => code_depth -= 1,
                        _ => {}
                    }
                }
                if block.as_ref().is_some_and(|(depth, _)| *depth >= at) {
                    parts.code_blocks.push(block.take().unwrap().1);
                }
            }
        }
    }
    if let Some((_, buf)) = block {
        parts.code_blocks.push(buf);
    }
    parts.plain_text = text.split_whitespace().collect::<Vec<_>>().join(" ");
    parts
}
