/// Removes `//` and `/* */` comments from C source.
///
/// String and character literals are copied through untouched, including any
/// comment markers inside them. A line comment keeps its terminating newline;
/// backslash-newline continues it onto the next line, as in C. An
/// unterminated block comment runs to the end of the input. A literal
/// without its closing quote ends at the newline.
pub fn redact_source(source: &str) -> String {
    #[derive(Clone, Copy, PartialEq)]
    enum State {
        Code,
        Str(u8),
        LineComment,
        BlockComment,
    }

    let bytes = source.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut state = State::Code;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let next = bytes.get(i + 1).copied();
        match state {
            State::Code => match (b, next) {
                (b'/', Some(b'/')) => {
                    state = State::LineComment;
                    i += 2;
                    continue;
                }
                (b'/', Some(b'*')) => {
                    state = State::BlockComment;
                    i += 2;
                    continue;
                }
                (b'"' | b'\'', _) => {
                    state = State::Str(b);
                    out.push(b);
                }
                _ => out.push(b),
            },
            State::Str(quote) => {
                if b == b'\\' {
                    out.push(b);
                    if let Some(n) = next {
                        out.push(n);
                        i += 2;
                        continue;
                    }
                } else {
                    out.push(b);
                    if b == quote || b == b'\n' {
                        state = State::Code;
                    }
                }
            }
            State::LineComment => match (b, next) {
                (b'\\', Some(b'\n')) => {
                    i += 2;
                    continue;
                }
                (b'\n', _) => {
                    out.push(b);
                    state = State::Code;
                }
                _ => {}
            },
            State::BlockComment => {
                if b == b'*' && next == Some(b'/') {
                    state = State::Code;
                    i += 2;
                    continue;
                }
            }
        }
        i += 1;
    }
    // Only ASCII bytes are ever dropped, so the output stays valid UTF-8.
    String::from_utf8(out).expect("comment removal preserves UTF-8")
}
