use crate::error::{Error, Position, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Word(String),
    QuotedIdent(String),
    Integer(String),
    Decimal(String),
    Str(String),
    LParen,
    RParen,
    Comma,
    Semicolon,
    Dot,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Star,
    Minus,
    Other(char),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub position: Position,
    /// Byte offsets into the source.
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn text<'a>(&self, src: &'a str) -> &'a str {
        if matches!(self.kind, TokenKind::Eof) {
            "<end of input>"
        } else {
            &src[self.start..self.end]
        }
    }

    pub fn is_word(&self, kw: &str) -> bool {
        matches!(&self.kind, TokenKind::Word(w) if w.eq_ignore_ascii_case(kw))
    }
}

struct Cursor<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<(usize, char)> {
        self.chars.peek().copied()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let next = self.chars.next();
        if let Some((_, c)) = next {
            if c == '\n' {
                self.line += 1;
                self.column = 1;
            } else {
                self.column += 1;
            }
        }
        next
    }

    fn offset(&mut self) -> usize {
        self.peek().map(|(i, _)| i).unwrap_or(self.src.len())
    }

    fn position(&self) -> Position {
        Position {
            line: self.line,
            column: self.column,
        }
    }
}

fn syntax(position: Position, token: &str, message: &str) -> Error {
    Error::Syntax {
        position,
        token: token.to_string(),
        message: message.to_string(),
    }
}

/// Splits HQL source into tokens. `--` comments and whitespace are dropped.
pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut cur = Cursor {
        src,
        chars: src.char_indices().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    while let Some((start, c)) = cur.peek() {
        let position = cur.position();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '-' && cur.peek2() == Some('-') {
            while let Some((_, c)) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            while let Some((_, c)) = cur.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    cur.bump();
                } else {
                    break;
                }
            }
            let end = cur.offset();
            TokenKind::Word(src[start..end].to_string())
        } else if c.is_ascii_digit() {
            lex_number(&mut cur, start)
        } else if c == '\'' || c == '"' {
            TokenKind::Str(lex_quoted(&mut cur, c, position)?)
        } else if c == '`' {
            let ident = lex_quoted(&mut cur, '`', position)?;
            if ident.is_empty() {
                return Err(syntax(position, "``", "empty quoted identifier"));
            }
            TokenKind::QuotedIdent(ident)
        } else {
            cur.bump();
            match c {
                '(' => TokenKind::LParen,
                ')' => TokenKind::RParen,
                ',' => TokenKind::Comma,
                ';' => TokenKind::Semicolon,
                '.' => TokenKind::Dot,
                '*' => TokenKind::Star,
                '-' => TokenKind::Minus,
                '=' => {
                    if cur.peek().map(|p| p.1) == Some('=') {
                        cur.bump();
                    }
                    TokenKind::Eq
                }
                '!' if cur.peek().map(|p| p.1) == Some('=') => {
                    cur.bump();
                    TokenKind::NotEq
                }
                '<' => match cur.peek().map(|p| p.1) {
                    Some('=') => {
                        cur.bump();
                        TokenKind::LtEq
                    }
                    Some('>') => {
                        cur.bump();
                        TokenKind::NotEq
                    }
                    _ => TokenKind::Lt,
                },
                '>' => {
                    if cur.peek().map(|p| p.1) == Some('=') {
                        cur.bump();
                        TokenKind::GtEq
                    } else {
                        TokenKind::Gt
                    }
                }
                other => TokenKind::Other(other),
            }
        };
        let end = cur.offset();
        out.push(Token {
            kind,
            position,
            start,
            end,
        });
    }
    let end = src.len();
    out.push(Token {
        kind: TokenKind::Eof,
        position: cur.position(),
        start: end,
        end,
    });
    Ok(out)
}

fn lex_number(cur: &mut Cursor<'_>, start: usize) -> TokenKind {
    let mut decimal = false;
    while let Some((_, c)) = cur.peek() {
        if c.is_ascii_digit() {
            cur.bump();
        } else {
            break;
        }
    }
    if cur.peek().map(|p| p.1) == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
        decimal = true;
        cur.bump();
        while let Some((_, c)) = cur.peek() {
            if c.is_ascii_digit() {
                cur.bump();
            } else {
                break;
            }
        }
    }
    if matches!(cur.peek().map(|p| p.1), Some('e' | 'E')) {
        let mut look = cur.chars.clone();
        look.next();
        let mut next = look.next().map(|p| p.1);
        if matches!(next, Some('+' | '-')) {
            next = look.next().map(|p| p.1);
        }
        if next.is_some_and(|c| c.is_ascii_digit()) {
            decimal = true;
            cur.bump();
            if matches!(cur.peek().map(|p| p.1), Some('+' | '-')) {
                cur.bump();
            }
            while let Some((_, c)) = cur.peek() {
                if c.is_ascii_digit() {
                    cur.bump();
                } else {
                    break;
                }
            }
        }
    }
    let end = cur.offset();
    let text = cur.src[start..end].to_string();
    if decimal {
        TokenKind::Decimal(text)
    } else {
        TokenKind::Integer(text)
    }
}

/// Reads a quoted run; a doubled quote character stands for one literal quote.
fn lex_quoted(cur: &mut Cursor<'_>, quote: char, position: Position) -> Result<String> {
    cur.bump();
    let mut value = String::new();
    loop {
        match cur.bump() {
            Some((_, c)) if c == quote => {
                if cur.peek().map(|p| p.1) == Some(quote) {
                    cur.bump();
                    value.push(quote);
                } else {
                    return Ok(value);
                }
            }
            Some((_, c)) => value.push(c),
            None => {
                return Err(syntax(
                    position,
                    &format!("{quote}{value}"),
                    "unterminated quoted text",
                ))
            }
        }
    }
}
