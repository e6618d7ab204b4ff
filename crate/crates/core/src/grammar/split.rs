/// Lowercase, drop punctuation, split on whitespace.
pub fn tokenize(sentence: &str) -> Vec<String> {
    sentence
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '$' || c.is_whitespace() { c } else { ' ' })
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

/// Split an instruction into sentences at `.`, `!`, `?`, `;` and at the
/// connective "then" when it follows a comma or "and".
pub fn split_instruction(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split(['.', '!', '?', ';']) {
        let words: Vec<&str> = chunk.split_whitespace().collect();
        let mut cur: Vec<&str> = Vec::new();
        for (i, w) in words.iter().enumerate() {
            let joins = i > 0 && (words[i - 1].ends_with(',') || words[i - 1].eq_ignore_ascii_case("and"));
            if w.eq_ignore_ascii_case("then") && joins {
                if cur.last().is_some_and(|l| l.eq_ignore_ascii_case("and")) {
                    cur.pop();
                }
                push_sentence(&mut out, &cur);
                cur.clear();
                continue;
            }
            cur.push(w);
        }
        push_sentence(&mut out, &cur);
    }
    out
}

fn push_sentence(out: &mut Vec<String>, words: &[&str]) {
    let s = words.join(" ");
    let s = s.trim().trim_end_matches(',').trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}
