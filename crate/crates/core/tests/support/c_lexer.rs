//! Regex-driven C lexer used as a test oracle for comment removal. It only
//! distinguishes literals, comments and everything else.

use std::sync::LazyLock;

use regex::Regex;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Code(String),
    Literal(String),
    LineComment(String),
    BlockComment(String),
}

static TOKEN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"(?x)
        (?P<line>//(?:\\\n|[^\n])*)
      | (?P<block>/\*[\s\S]*?(?:\*/|\z))
      | (?P<q>["'])
      | (?P<other>[\s\S])
    "#,
    )
    .unwrap()
});

static LITERAL_CHAR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"\\[\s\S]|\\\z|[^\\]"#).unwrap());

pub fn lex(src: &str) -> Vec<Token> {
    let re = &*TOKEN;
    let mut out: Vec<Token> = Vec::new();
    let mut pos = 0;
    while pos < src.len() {
        let caps = re.captures_at(src, pos).unwrap();
        let m = caps.get(0).unwrap();
        assert_eq!(m.start(), pos, "lexer must be total");
        let text = m.as_str().to_string();
        let tok = if caps.name("line").is_some() {
            Token::LineComment(text)
        } else if caps.name("block").is_some() {
            Token::BlockComment(text)
        } else if let Some(q) = caps.name("q") {
            literal_token(src, pos, q.as_str())
        } else {
            Token::Code(text)
        };
        pos += match &tok {
            Token::Code(t) | Token::Literal(t) | Token::LineComment(t) | Token::BlockComment(t) => t.len(),
        };
        match (&tok, out.last_mut()) {
            (Token::Code(t), Some(Token::Code(prev))) => prev.push_str(t),
            _ => out.push(tok),
        }
    }
    out
}

/// The regex crate has no backreferences, so the closing quote is found by
/// hand: a literal ends at its own quote kind, a newline, or end of input.
fn literal_token(src: &str, start: usize, quote: &str) -> Token {
    let re = &*LITERAL_CHAR;
    let mut end = start + 1;
    for m in re.find_iter(&src[start + 1..]) {
        end = start + 1 + m.end();
        if m.as_str() == quote || m.as_str() == "\n" {
            break;
        }
    }
    Token::Literal(src[start..end].to_string())
}

/// The source with every comment token dropped.
pub fn without_comments(src: &str) -> String {
    lex(src)
        .into_iter()
        .filter_map(|t| match t {
            Token::Code(s) | Token::Literal(s) => Some(s),
            _ => None,
        })
        .collect()
}

pub fn comments(src: &str) -> Vec<String> {
    lex(src)
        .into_iter()
        .filter_map(|t| match t {
            Token::LineComment(s) | Token::BlockComment(s) => Some(s),
            _ => None,
        })
        .collect()
}

pub fn literals(src: &str) -> Vec<String> {
    lex(src)
        .into_iter()
        .filter_map(|t| match t {
            Token::Literal(s) => Some(s),
            _ => None,
        })
        .collect()
}
