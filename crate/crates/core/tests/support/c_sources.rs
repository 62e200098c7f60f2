//! Generators for C-like sources with known comments and literals.

#![allow(dead_code)]

use proptest::prelude::*;

/// Characters that stress the lexer: quotes, escapes, slashes and stars.
pub fn c_noise() -> impl Strategy<Value = String> {
    proptest::collection::vec(
        prop_oneof![
            Just("/".to_string()),
            Just("*".to_string()),
            Just("\"".to_string()),
            Just("'".to_string()),
            Just("\\".to_string()),
            Just("\n".to_string()),
            Just(" ".to_string()),
            "[a-z0-9;(){}=+]{1,4}",
            Just("é".to_string()),
        ],
        0..60,
    )
    .prop_map(|v| v.concat())
}

#[derive(Debug, Clone)]
pub enum Piece {
    Code(String),
    Str(String),
    Char(String),
    Line(String),
    Block(String),
}

pub fn piece() -> impl Strategy<Value = Piece> {
    prop_oneof![
        "[a-z0-9 ;(){}=+\\-\n]{1,12}".prop_map(Piece::Code),
        // string bodies may hold comment markers and escaped quotes
        proptest::collection::vec(
            prop_oneof![
                "[a-z ]{1,5}",
                Just("//".to_string()),
                Just("/*".to_string()),
                Just("*/".to_string()),
                Just("\\\"".to_string()),
                Just("\\\\".to_string()),
                Just("'".to_string()),
            ],
            0..6
        )
        .prop_map(|v| Piece::Str(format!("\"{}\"", v.concat()))),
        prop_oneof![Just("'/'"), Just("'*'"), Just("'\\''"), Just("'\"'"), Just("'a'"), Just("'\\\\'")]
            .prop_map(|s| Piece::Char(s.to_string())),
        "[a-z \"'/*]{0,20}".prop_map(|body| Piece::Line(format!("//{body}\n"))),
        "[a-z \"'/\n]{0,20}".prop_map(|body| Piece::Block(format!("/*{body}*/"))),
    ]
}

/// Structured sources whose literals and comments are known up front.
pub fn program() -> impl Strategy<Value = Vec<Piece>> {
    proptest::collection::vec(piece(), 0..25)
}

pub fn render(pieces: &[Piece]) -> String {
    pieces
        .iter()
        .map(|p| match p {
            Piece::Code(s) | Piece::Str(s) | Piece::Char(s) | Piece::Line(s) | Piece::Block(s) => s.as_str(),
        })
        .collect()
}
