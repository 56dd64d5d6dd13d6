use super::SensingError;

/// Instruction template; the comment replaces the first `{comment}` slot.
pub const PROMPT_TEMPLATE: &str = include_str!("prompt_template.txt");

const SLOT: &str = "{comment}";

/// Wraps `comment` in the instruction template.
///
/// The comment is spliced in verbatim, so braces or a literal `{comment}` in the
/// user text are never interpreted.
pub fn build_prompt(comment: &str) -> Result<String, SensingError> {
    if comment.is_empty() {
        return Err(SensingError::EmptyComment);
    }
    let (head, tail) = PROMPT_TEMPLATE.split_once(SLOT).expect("template has a comment slot");
    let mut prompt = String::with_capacity(head.len() + comment.len() + tail.len());
    prompt.push_str(head);
    prompt.push_str(comment);
    prompt.push_str(tail);
    Ok(prompt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn braces_are_literal() {
        let p = build_prompt("{comment} {x}").unwrap();
        assert!(p.ends_with("Text: {comment} {x}[/INST]"));
        assert_eq!(p.matches("{comment}").count(), 1);
    }

    #[test]
    fn empty_comment_rejected() {
        assert!(matches!(build_prompt(""), Err(SensingError::EmptyComment)));
    }
}
