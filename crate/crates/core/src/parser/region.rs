use super::lexer::{split_statements, tokenize, Split, Tok};

/// Returns the contents of all fenced code blocks, newline-joined, or the
/// response unchanged when it has no fences. An unclosed final fence runs to
/// the end of the response.
pub fn extract_code_region(response: &str) -> String {
    let mut blocks: Vec<Vec<&str>> = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in response.split('\n') {
        let bare = line.strip_suffix('\r').unwrap_or(line);
        if bare.trim_start().starts_with("```") {
            match current.take() {
                Some(block) => blocks.push(block),
                None => current = Some(Vec::new()),
            }
            continue;
        }
        if let Some(block) = current.as_mut() {
            block.push(bare);
        }
    }
    if let Some(block) = current {
        blocks.push(block);
    }
    if blocks.is_empty() {
        return response.to_string();
    }
    blocks
        .iter()
        .map(|b| b.join("\n"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Cuts generated code at the first annotation block that follows other
/// content. Completion models often continue past the target by inventing
/// a further instruction and its answer.
pub fn truncate_at_next_instruction(code: &str) -> &str {
    let mut seen_content = false;
    for piece in split_statements(code) {
        let (line, is_annotation) = match piece {
            Split::Broken { line, .. } => (line, false),
            Split::Statement(raw) => match tokenize(&raw.text) {
                Ok(t) if t.is_empty() => continue,
                Ok(t) => (
                    raw.line,
                    matches!(t.as_slice(), [Tok::Str(_)])
                        && raw.text.trim_start().starts_with("\"\"\""),
                ),
                Err(_) => (raw.line, false),
            },
        };
        if is_annotation && seen_content {
            let offset: usize = code.split('\n').take(line - 1).map(|l| l.len() + 1).sum();
            return code[..offset].trim_end_matches(['\n', '\r']);
        }
        seen_content = true;
    }
    code
}
