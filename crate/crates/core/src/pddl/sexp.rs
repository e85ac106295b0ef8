//! Tokenizer and s-expression reader. Symbols are lower-cased on the way in.

use super::{ParseError, ParseErrorKind};

/// Nesting deeper than this is rejected rather than recursed into.
pub const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Symbol { text: String, pos: Pos },
    List { items: Vec<Sexp>, pos: Pos },
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Symbol { pos, .. } | Sexp::List { pos, .. } => *pos,
        }
    }

    pub fn symbol(&self) -> Option<&str> {
        match self {
            Sexp::Symbol { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Symbol { .. } => None,
        }
    }

    /// Short rendering used as the offending token in errors.
    pub fn token(&self) -> String {
        match self {
            Sexp::Symbol { text, .. } => text.clone(),
            Sexp::List { items, .. } => match items.first() {
                Some(Sexp::Symbol { text, .. }) => format!("({text}"),
                _ => "(".to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open(Pos),
    Close(Pos),
    Symbol(String, Pos),
}

fn is_symbol_char(c: char) -> bool {
    c.is_ascii_graphic() && c != '(' && c != ')' && c != ';'
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut line = 1;
    let mut column = 1;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, column };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                column = 1;
            }
            ' ' | '\t' | '\r' => {
                chars.next();
                column += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    column += 1;
                }
            }
            '(' => {
                chars.next();
                column += 1;
                tokens.push(Token::Open(pos));
            }
            ')' => {
                chars.next();
                column += 1;
                tokens.push(Token::Close(pos));
            }
            c if is_symbol_char(c) => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_symbol_char(c) {
                        break;
                    }
                    s.push(c.to_ascii_lowercase());
                    chars.next();
                    column += 1;
                }
                tokens.push(Token::Symbol(s, pos));
            }
            other => {
                return Err(ParseError::new(
                    pos,
                    other.escape_default().to_string(),
                    ParseErrorKind::Lexical("unexpected character".into()),
                ));
            }
        }
    }
    Ok(tokens)
}

/// Reads exactly one top-level s-expression; trailing tokens are an error.
pub fn read(text: &str) -> Result<Sexp, ParseError> {
    let tokens = tokenize(text)?;
    let mut stack: Vec<(Pos, Vec<Sexp>)> = Vec::new();
    let mut done: Option<Sexp> = None;
    for tok in tokens {
        if done.is_some() {
            let (pos, token) = match &tok {
                Token::Open(p) => (*p, "(".to_string()),
                Token::Close(p) => (*p, ")".to_string()),
                Token::Symbol(s, p) => (*p, s.clone()),
            };
            return Err(ParseError::new(
                pos,
                token,
                ParseErrorKind::Syntax("unexpected input after the closing parenthesis".into()),
            ));
        }
        match tok {
            Token::Open(p) => {
                if stack.len() >= MAX_DEPTH {
                    return Err(ParseError::new(
                        p,
                        "(",
                        ParseErrorKind::Syntax("nesting too deep".into()),
                    ));
                }
                stack.push((p, Vec::new()));
            }
            Token::Close(p) => {
                let (open, items) = stack.pop().ok_or_else(|| {
                    ParseError::new(p, ")", ParseErrorKind::Syntax("unbalanced `)`".into()))
                })?;
                let node = Sexp::List { items, pos: open };
                match stack.last_mut() {
                    Some((_, parent)) => parent.push(node),
                    None => done = Some(node),
                }
            }
            Token::Symbol(s, p) => match stack.last_mut() {
                Some((_, parent)) => parent.push(Sexp::Symbol { text: s, pos: p }),
                None => {
                    return Err(ParseError::new(
                        p,
                        s,
                        ParseErrorKind::Syntax("expected `(` at top level".into()),
                    ))
                }
            },
        }
    }
    if let Some((open, _)) = stack.pop() {
        return Err(ParseError::new(
            open,
            "(",
            ParseErrorKind::Syntax("unclosed `(`".into()),
        ));
    }
    done.ok_or_else(|| {
        ParseError::new(
            Pos { line: 1, column: 1 },
            "",
            ParseErrorKind::Syntax("empty input".into()),
        )
    })
}
