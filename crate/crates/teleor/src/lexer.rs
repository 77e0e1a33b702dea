//! Shared tokenizer for term text and TR program source.
//!
//! `%` starts a comment that runs to end of line. Identifiers beginning
//! with a lowercase letter or underscore are atoms/functors; identifiers
//! beginning with an uppercase letter are variables.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Var(String),
    Int(i64),
    Float(f64),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Amp,
    Pipe,
    PipePipe,
    DefinedAs, // ::=
    Colon,
    DotDot,
    Arrow, // ~>
    Semicolon,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "`{s}`"),
            TokenKind::Var(s) => write!(f, "`{s}`"),
            TokenKind::Int(n) => write!(f, "`{n}`"),
            TokenKind::Float(x) => write!(f, "`{x:?}`"),
            TokenKind::Str(_) => write!(f, "string"),
            TokenKind::LParen => write!(f, "`(`"),
            TokenKind::RParen => write!(f, "`)`"),
            TokenKind::LBrace => write!(f, "`{{`"),
            TokenKind::RBrace => write!(f, "`}}`"),
            TokenKind::LBracket => write!(f, "`[`"),
            TokenKind::RBracket => write!(f, "`]`"),
            TokenKind::Comma => write!(f, "`,`"),
            TokenKind::Amp => write!(f, "`&`"),
            TokenKind::Pipe => write!(f, "`|`"),
            TokenKind::PipePipe => write!(f, "`||`"),
            TokenKind::DefinedAs => write!(f, "`::=`"),
            TokenKind::Colon => write!(f, "`:`"),
            TokenKind::DotDot => write!(f, "`..`"),
            TokenKind::Arrow => write!(f, "`~>`"),
            TokenKind::Semicolon => write!(f, "`;`"),
            TokenKind::Lt => write!(f, "`<`"),
            TokenKind::Le => write!(f, "`<=`"),
            TokenKind::Gt => write!(f, "`>`"),
            TokenKind::Ge => write!(f, "`>=`"),
            TokenKind::EqEq => write!(f, "`==`"),
            TokenKind::Plus => write!(f, "`+`"),
            TokenKind::Minus => write!(f, "`-`"),
            TokenKind::Star => write!(f, "`*`"),
            TokenKind::Slash => write!(f, "`/`"),
            TokenKind::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    pub offset: usize,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct LexError {
    pub message: String,
    pub offset: usize,
    pub line: u32,
    pub col: u32,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! err {
        ($off:expr, $l:expr, $c:expr, $($arg:tt)*) => {
            return Err(LexError { message: format!($($arg)*), offset: $off, line: $l, col: $c })
        };
    }

    while i < bytes.len() {
        let start = i;
        let (tl, tc) = (line, col);
        let b = bytes[i];
        let mut push = |kind: TokenKind, line: &mut u32, col: &mut u32, n: u32| {
            tokens.push(Token { kind, offset: start, line: tl, col: tc });
            *col += n;
            let _ = line;
        };
        match b {
            b' ' | b'\t' | b'\r' => {
                i += 1;
                col += 1;
            }
            b'\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            b'%' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                push(TokenKind::LParen, &mut line, &mut col, 1);
                i += 1;
            }
            b')' => {
                push(TokenKind::RParen, &mut line, &mut col, 1);
                i += 1;
            }
            b'{' => {
                push(TokenKind::LBrace, &mut line, &mut col, 1);
                i += 1;
            }
            b'}' => {
                push(TokenKind::RBrace, &mut line, &mut col, 1);
                i += 1;
            }
            b'[' => {
                push(TokenKind::LBracket, &mut line, &mut col, 1);
                i += 1;
            }
            b']' => {
                push(TokenKind::RBracket, &mut line, &mut col, 1);
                i += 1;
            }
            b',' => {
                push(TokenKind::Comma, &mut line, &mut col, 1);
                i += 1;
            }
            b'&' => {
                push(TokenKind::Amp, &mut line, &mut col, 1);
                i += 1;
            }
            b';' => {
                push(TokenKind::Semicolon, &mut line, &mut col, 1);
                i += 1;
            }
            b'+' => {
                push(TokenKind::Plus, &mut line, &mut col, 1);
                i += 1;
            }
            b'-' => {
                push(TokenKind::Minus, &mut line, &mut col, 1);
                i += 1;
            }
            b'*' => {
                push(TokenKind::Star, &mut line, &mut col, 1);
                i += 1;
            }
            b'/' => {
                push(TokenKind::Slash, &mut line, &mut col, 1);
                i += 1;
            }
            b'|' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    push(TokenKind::PipePipe, &mut line, &mut col, 2);
                    i += 2;
                } else {
                    push(TokenKind::Pipe, &mut line, &mut col, 1);
                    i += 1;
                }
            }
            b'~' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    push(TokenKind::Arrow, &mut line, &mut col, 2);
                    i += 2;
                } else {
                    err!(start, tl, tc, "unexpected character `~`");
                }
            }
            b':' => {
                if bytes.get(i + 1) == Some(&b':') && bytes.get(i + 2) == Some(&b'=') {
                    push(TokenKind::DefinedAs, &mut line, &mut col, 3);
                    i += 3;
                } else {
                    push(TokenKind::Colon, &mut line, &mut col, 1);
                    i += 1;
                }
            }
            b'.' => {
                if bytes.get(i + 1) == Some(&b'.') {
                    push(TokenKind::DotDot, &mut line, &mut col, 2);
                    i += 2;
                } else {
                    err!(start, tl, tc, "unexpected character `.`");
                }
            }
            b'<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push(TokenKind::Le, &mut line, &mut col, 2);
                    i += 2;
                } else {
                    push(TokenKind::Lt, &mut line, &mut col, 1);
                    i += 1;
                }
            }
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push(TokenKind::Ge, &mut line, &mut col, 2);
                    i += 2;
                } else {
                    push(TokenKind::Gt, &mut line, &mut col, 1);
                    i += 1;
                }
            }
            b'=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push(TokenKind::EqEq, &mut line, &mut col, 2);
                    i += 2;
                } else {
                    err!(start, tl, tc, "unexpected character `=` (did you mean `==`?)");
                }
            }
            b'"' => {
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match bytes.get(j) {
                        None => err!(start, tl, tc, "unterminated string"),
                        Some(b'"') => {
                            j += 1;
                            break;
                        }
                        Some(b'\\') => match bytes.get(j + 1) {
                            Some(b'"') => {
                                s.push('"');
                                j += 2;
                            }
                            Some(b'\\') => {
                                s.push('\\');
                                j += 2;
                            }
                            Some(b'n') => {
                                s.push('\n');
                                j += 2;
                            }
                            _ => err!(start, tl, tc, "invalid string escape"),
                        },
                        Some(b'\n') => err!(start, tl, tc, "newline in string literal"),
                        Some(&c) => {
                            s.push(c as char);
                            j += 1;
                        }
                    }
                }
                col += (j - i) as u32;
                i = j;
                tokens.push(Token { kind: TokenKind::Str(s), offset: start, line: tl, col: tc });
            }
            b'0'..=b'9' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let mut is_float = false;
                if bytes.get(j) == Some(&b'.') && bytes.get(j + 1).is_some_and(|c| c.is_ascii_digit()) {
                    is_float = true;
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if bytes.get(j) == Some(&b'e') || bytes.get(j) == Some(&b'E') {
                    let mut k = j + 1;
                    if bytes.get(k) == Some(&b'+') || bytes.get(k) == Some(&b'-') {
                        k += 1;
                    }
                    if bytes.get(k).is_some_and(|c| c.is_ascii_digit()) {
                        is_float = true;
                        j = k;
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                let text = &src[i..j];
                let kind = if is_float {
                    match text.parse::<f64>() {
                        Ok(x) if x.is_finite() => TokenKind::Float(x),
                        _ => err!(start, tl, tc, "invalid number `{text}`"),
                    }
                } else {
                    match text.parse::<i64>() {
                        Ok(n) => TokenKind::Int(n),
                        Err(_) => err!(start, tl, tc, "integer out of range `{text}`"),
                    }
                };
                col += (j - i) as u32;
                i = j;
                tokens.push(Token { kind, offset: start, line: tl, col: tc });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut j = i;
                while j < bytes.len()
                    && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                let name = src[i..j].to_string();
                let kind = if bytes[i].is_ascii_uppercase() {
                    TokenKind::Var(name)
                } else {
                    TokenKind::Ident(name)
                };
                col += (j - i) as u32;
                i = j;
                tokens.push(Token { kind, offset: start, line: tl, col: tc });
            }
            other => {
                err!(start, tl, tc, "unexpected character `{}`", other as char)
            }
        }
    }
    tokens.push(Token { kind: TokenKind::Eof, offset: src.len(), line, col });
    Ok(tokens)
}
