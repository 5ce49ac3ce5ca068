use super::IngestError;

/// Splits an entity-decoded `Tags` attribute (`<javascript><php>`) into
/// lowercase tag names, in order.
///
/// Some dump releases use a pipe-delimited form (`|a|b|`); that form, and any
/// other input not made of `<name>` groups, is rejected instead of guessed.
pub fn split_tags(raw: &str) -> Result<Vec<String>, IngestError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    if !raw.starts_with('<') {
        return Err(IngestError::UnrecognizedTagFormat {
            raw: raw.to_string(),
        });
    }

    let mut names = Vec::new();
    let mut rest = raw;
    while !rest.is_empty() {
        let Some(body) = rest.strip_prefix('<') else {
            return Err(malformed(rest));
        };
        let Some(close) = body.find('>') else {
            return Err(malformed(rest));
        };
        let name = &body[..close];
        if name.is_empty() || name.contains('<') || name.chars().any(char::is_whitespace) {
            return Err(malformed(&rest[..close + 2]));
        }
        names.push(name.to_lowercase());
        rest = &body[close + 1..];
    }
    Ok(names)
}

fn malformed(fragment: &str) -> IngestError {
    let fragment: String = fragment.chars().take(40).collect();
    IngestError::MalformedTags { fragment }
}

/// Inverse of [`split_tags`].
pub fn join_tags<S: AsRef<str>>(names: &[S]) -> String {
    let mut out = String::new();
    for name in names {
        out.push('<');
        out.push_str(name.as_ref());
        out.push('>');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn splits_groups_in_order() {
        assert_eq!(split_tags("<javascript><php>").unwrap(), vec!["javascript", "php"]);
        assert_eq!(split_tags("<c#>").unwrap(), vec!["c#"]);
        assert!(split_tags("").unwrap().is_empty());
    }

    #[test]
    fn lowercases() {
        assert_eq!(split_tags("<Java><SQL-Server>").unwrap(), vec!["java", "sql-server"]);
    }

    #[test]
    fn rejects_pipe_form() {
        let err = split_tags("|javascript|php|").unwrap_err();
        assert!(matches!(err, IngestError::UnrecognizedTagFormat { .. }));
    }

    #[test]
    fn malformed_names_fragment() {
        match split_tags("<a><b").unwrap_err() {
            IngestError::MalformedTags { fragment } => assert_eq!(fragment, "<b"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(split_tags("<a>b").is_err());
        assert!(split_tags("<>").is_err());
        assert!(split_tags("<a<b>").is_err());
    }

    proptest! {
        #[test]
        fn join_inverts_split(names in prop::collection::vec("[a-z0-9#+.-]{1,12}", 1..=5)) {
            let joined = join_tags(&names);
            let split = split_tags(&joined).unwrap();
            prop_assert_eq!(&split, &names);
            prop_assert_eq!(join_tags(&split), joined);
        }
    }
}
