//! Tokenizer shared by the dataset and task block grammars.

use super::SdlError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    /// Bare word: identifiers, numbers, paths, `?`.
    Word(String),
    /// Double-quoted string with escapes resolved.
    Str(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Colon,
    Comma,
    Newline,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn is_bare(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '{' | '}' | '[' | ']' | '(' | ')' | ':' | ',' | '"' | '#')
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, SdlError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ':' => Some(Tok::Colon),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            col += 1;
            out.push(Token { tok, line: tl, col: tc });
            continue;
        }
        match c {
            '\n' => {
                chars.next();
                out.push(Token { tok: Tok::Newline, line: tl, col: tc });
                line += 1;
                col = 1;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    col += 1;
                }
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '"' => {
                chars.next();
                col += 1;
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None | Some('\n') => {
                            return Err(SdlError::Syntax {
                                line: tl,
                                column: tc,
                                message: "unterminated string".into(),
                            })
                        }
                        Some('"') => {
                            col += 1;
                            break;
                        }
                        Some('\\') => {
                            col += 2;
                            let esc = match chars.next() {
                                Some('"') => '"',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('t') => '\t',
                                Some('r') => '\r',
                                other => {
                                    return Err(SdlError::Syntax {
                                        line,
                                        column: col - 2,
                                        message: format!("bad escape `\\{}`", other.unwrap_or(' ')),
                                    })
                                }
                            };
                            s.push(esc);
                        }
                        Some(ch) => {
                            col += 1;
                            s.push(ch);
                        }
                    }
                }
                out.push(Token { tok: Tok::Str(s), line: tl, col: tc });
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_bare(c) {
                        break;
                    }
                    s.push(c);
                    chars.next();
                    col += 1;
                }
                out.push(Token { tok: Tok::Word(s), line: tl, col: tc });
            }
        }
    }
    Ok(out)
}

/// Quotes a string for output, escaping what the tokenizer unescapes.
pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Whether `s` can be written as a bare identifier.
pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

/// Cursor over a token list with the error helpers both grammars use.
pub(crate) struct Cursor {
    toks: Vec<Token>,
    pos: usize,
    eof_line: usize,
}

impl Cursor {
    pub fn new(text: &str) -> Result<Self, SdlError> {
        let toks = tokenize(text)?;
        let eof_line = text.lines().count().max(1);
        Ok(Cursor { toks, pos: 0, eof_line })
    }

    pub fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    pub fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn skip_newlines(&mut self) {
        while matches!(self.peek(), Some(Token { tok: Tok::Newline, .. })) {
            self.pos += 1;
        }
    }

    pub fn error_here(&self, message: impl Into<String>) -> SdlError {
        let (line, column) = match self.peek() {
            Some(t) => (t.line, t.col),
            None => (self.eof_line, 1),
        };
        SdlError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }

    /// Next non-newline token.
    pub fn next_significant(&mut self, what: &str) -> Result<Token, SdlError> {
        self.skip_newlines();
        match self.next() {
            Some(t) => Ok(t),
            None => Err(self.error_here(format!("unexpected end of input, expected {what}"))),
        }
    }

    pub fn expect(&mut self, tok: Tok, what: &str) -> Result<Token, SdlError> {
        self.skip_newlines();
        match self.peek() {
            Some(t) if t.tok == tok => Ok(self.next().expect("peeked")),
            _ => Err(self.error_here(format!("expected {what}"))),
        }
    }

    pub fn expect_word(&mut self, word: &str) -> Result<(), SdlError> {
        self.skip_newlines();
        match self.peek() {
            Some(Token { tok: Tok::Word(w), .. }) if w == word => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error_here(format!("expected `{word}`"))),
        }
    }

    /// A bare word or quoted string, returned as text.
    pub fn name(&mut self, what: &str) -> Result<String, SdlError> {
        self.skip_newlines();
        match self.peek() {
            Some(Token { tok: Tok::Word(w), .. }) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            Some(Token { tok: Tok::Str(s), .. }) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error_here(format!("expected {what}"))),
        }
    }

    pub fn string(&mut self, what: &str) -> Result<String, SdlError> {
        self.skip_newlines();
        match self.peek() {
            Some(Token { tok: Tok::Str(s), .. }) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error_here(format!("expected {what} (a quoted string)"))),
        }
    }

    pub fn at_end(&mut self) -> bool {
        self.skip_newlines();
        self.peek().is_none()
    }

    pub fn peek_is(&self, tok: &Tok) -> bool {
        matches!(self.peek(), Some(t) if &t.tok == tok)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_and_positions() {
        let toks = tokenize("column x: real # c\n  rows").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Word("column".into()),
                Tok::Word("x".into()),
                Tok::Colon,
                Tok::Word("real".into()),
                Tok::Newline,
                Tok::Word("rows".into()),
            ]
        );
        assert_eq!((toks[5].line, toks[5].col), (2, 3));
    }

    #[test]
    fn string_escapes() {
        let toks = tokenize(r#""a\"b\\c\n""#).unwrap();
        assert_eq!(toks[0].tok, Tok::Str("a\"b\\c\n".into()));
        assert_eq!(quote("a\"b\\c\n"), r#""a\"b\\c\n""#);
        assert!(tokenize("\"open").is_err());
    }
}
