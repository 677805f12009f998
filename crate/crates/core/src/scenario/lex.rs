//! Line and block structure: `head words: value`, blocks by indentation.

use super::Diagnostic;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Word {
    pub text: String,
    pub col: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct Stmt {
    pub line: usize,
    pub head: Vec<Word>,
    /// Text after the colon, trimmed; `None` for block openers.
    pub value: Option<Word>,
    pub colon_col: usize,
    pub children: Vec<Stmt>,
}

impl Stmt {
    pub fn col(&self) -> usize {
        self.head[0].col
    }

    pub fn keyword(&self) -> &str {
        &self.head[0].text
    }

    /// Position just after the colon, used when a value is missing.
    pub fn value_diag(&self, message: impl Into<String>) -> Diagnostic {
        match &self.value {
            Some(v) => Diagnostic::new(self.line, v.col, message),
            None => Diagnostic::new(self.line, self.colon_col + 1, message),
        }
    }
}

struct Line {
    number: usize,
    indent: usize,
    stmt: Stmt,
}

pub(crate) fn lex(text: &str, diags: &mut Vec<Diagnostic>) -> Vec<Stmt> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let content = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if content.trim().is_empty() {
            continue;
        }
        let chars: Vec<char> = content.chars().collect();
        let indent = chars.iter().take_while(|c| c.is_whitespace()).count();
        if let Some(c) = chars[..indent].iter().position(|c| *c != ' ') {
            diags.push(Diagnostic::new(number, c + 1, "indentation must use spaces"));
            continue;
        }
        let Some(colon) = chars.iter().position(|c| *c == ':') else {
            diags.push(Diagnostic::new(number, indent + 1, "expected `key: value` or `key:`"));
            continue;
        };
        let head = words(&chars[..colon], 0);
        if head.is_empty() {
            diags.push(Diagnostic::new(number, colon + 1, "missing key before `:`"));
            continue;
        }
        let rest = &chars[colon + 1..];
        let lead = rest.iter().take_while(|c| c.is_whitespace()).count();
        let value_text: String = rest[lead..].iter().collect::<String>().trim_end().to_string();
        let value = (!value_text.is_empty()).then(|| Word { text: value_text, col: colon + 1 + lead + 1 });
        lines.push(Line {
            number,
            indent,
            stmt: Stmt { line: number, head, value, colon_col: colon + 1, children: Vec::new() },
        });
    }
    let mut pos = 0;
    let mut out = Vec::new();
    while pos < lines.len() {
        let indent = lines[pos].indent;
        if indent != 0 {
            let l = &lines[pos];
            diags.push(Diagnostic::new(l.number, l.indent + 1, "unexpected indentation"));
            pos += 1;
            continue;
        }
        out.extend(block(&mut lines, &mut pos, 0, diags));
    }
    out
}

fn words(chars: &[char], offset: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        out.push(Word { text: chars[start..i].iter().collect(), col: offset + start + 1 });
    }
    out
}

fn block(lines: &mut [Line], pos: &mut usize, indent: usize, diags: &mut Vec<Diagnostic>) -> Vec<Stmt> {
    let mut out: Vec<Stmt> = Vec::new();
    while *pos < lines.len() {
        let l = &lines[*pos];
        if l.indent < indent {
            break;
        }
        if l.indent > indent {
            diags.push(Diagnostic::new(l.number, l.indent + 1, "unexpected indentation"));
            *pos += 1;
            continue;
        }
        let mut stmt = l.stmt.clone();
        *pos += 1;
        if *pos < lines.len() && lines[*pos].indent > indent {
            let child_indent = lines[*pos].indent;
            if stmt.value.is_some() {
                let c = &lines[*pos];
                diags.push(Diagnostic::new(c.number, c.indent + 1, "indented block after a `key: value` line"));
            }
            stmt.children = block(lines, pos, child_indent, diags);
        }
        out.push(stmt);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nesting_and_columns() {
        let mut d = Vec::new();
        let s = lex("a: 1\nb x:\n  c: two words # note\n  d:\n    e: 3\nf: 4\n", &mut d);
        assert!(d.is_empty(), "{d:?}");
        assert_eq!(s.len(), 3);
        assert_eq!(s[1].head.len(), 2);
        assert_eq!(s[1].head[1].col, 3);
        assert_eq!(s[1].children[0].value.as_ref().unwrap().text, "two words");
        assert_eq!(s[1].children[0].value.as_ref().unwrap().col, 6);
        assert_eq!(s[1].children[1].children[0].keyword(), "e");
    }

    #[test]
    fn bad_indentation_is_reported() {
        let mut d = Vec::new();
        lex("a:\n    b: 1\n  c: 2\n", &mut d);
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].line, d[0].column), (3, 3));

        let mut d = Vec::new();
        lex("a:\n\tb: 1\n", &mut d);
        assert_eq!(d[0].message, "indentation must use spaces");

        let mut d = Vec::new();
        lex("a: 1\n  b: 2\n", &mut d);
        assert_eq!(d.len(), 1);

        let mut d = Vec::new();
        lex("just words\n", &mut d);
        assert_eq!(d.len(), 1);
    }
}
