//! Recursive-descent parser for metric expressions.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | atom ("^" ["-"] number)?
//! atom   := number | "x[" int "]" | "y[" int "]" | "F"
//!         | "(" expr ")" | fn "(" expr ")" | "dot_xx" | "dot_xy" | "dot_yy"
//! fn     := "sqrt" | "exp" | "log" | "sin" | "cos"
//! ```

use std::fmt;

use thiserror::Error;

use super::ast::{BinOp, Dot, Expr, Func};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownIdentifier,
    IndexOutOfRange,
    MissingKey,
    UnknownKey,
    DuplicateKey,
    InvalidValue,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ParseErrorKind::Syntax => "syntax error",
            ParseErrorKind::UnknownIdentifier => "unknown identifier",
            ParseErrorKind::IndexOutOfRange => "variable index out of range",
            ParseErrorKind::MissingKey => "missing key",
            ParseErrorKind::UnknownKey => "unknown key",
            ParseErrorKind::DuplicateKey => "duplicate key",
            ParseErrorKind::InvalidValue => "invalid value",
        };
        f.write_str(s)
    }
}

/// Parse failure with a 1-based line/column position.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {kind}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> std::result::Result<Vec<(Token, usize)>, (usize, String)> {
        let mut lx = Lexer { src: src.as_bytes(), pos: 0 };
        let mut out = Vec::new();
        loop {
            while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_whitespace() {
                lx.pos += 1;
            }
            let start = lx.pos;
            let Some(&c) = lx.src.get(lx.pos) else {
                out.push((Token::End, start));
                return Ok(out);
            };
            let tok = match c {
                b'(' => Token::LParen,
                b')' => Token::RParen,
                b'[' => Token::LBracket,
                b']' => Token::RBracket,
                b'+' => Token::Plus,
                b'-' => Token::Minus,
                b'*' => Token::Star,
                b'/' => Token::Slash,
                b'^' => Token::Caret,
                b'0'..=b'9' | b'.' => {
                    out.push((lx.number()?, start));
                    continue;
                }
                c if c.is_ascii_alphabetic() || c == b'_' => {
                    while lx
                        .src
                        .get(lx.pos)
                        .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
                    {
                        lx.pos += 1;
                    }
                    let ident = std::str::from_utf8(&lx.src[start..lx.pos]).unwrap().to_string();
                    out.push((Token::Ident(ident), start));
                    continue;
                }
                other => return Err((start, format!("unexpected character '{}'", other as char))),
            };
            lx.pos += 1;
            out.push((tok, start));
        }
    }

    fn number(&mut self) -> std::result::Result<Token, (usize, String)> {
        let start = self.pos;
        let digits = |lx: &mut Self| {
            while lx.src.get(lx.pos).is_some_and(u8::is_ascii_digit) {
                lx.pos += 1;
            }
        };
        digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                digits(self);
            } else {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Token::Num)
            .map_err(|_| (start, format!("malformed number '{text}'")))
    }
}

/// Parses a single expression. `dim` bounds the coordinate indices; `line`
/// and `column` locate the expression's first character in its source.
pub fn parse_expr(text: &str, dim: usize, line: usize, column: usize) -> Result<Expr, ParseError> {
    let err = |kind, offset: usize, message: String| ParseError {
        kind,
        line,
        column: column + offset,
        message,
    };
    let tokens = Lexer::tokens(text).map_err(|(at, msg)| err(ParseErrorKind::Syntax, at, msg))?;
    let mut p = Parser { tokens, pos: 0, dim };
    let expr = p.expr().map_err(|(kind, at, msg)| err(kind, at, msg))?;
    match p.peek() {
        Token::End => Ok(expr),
        t => Err(err(
            ParseErrorKind::Syntax,
            p.offset(),
            format!("unexpected {t:?} after expression"),
        )),
    }
}

type PResult<T> = std::result::Result<T, (ParseErrorKind, usize, String)>;

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].0.clone();
        if t != Token::End {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err((ParseErrorKind::Syntax, self.offset(), msg.into()))
    }

    fn expect(&mut self, tok: Token) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected {tok:?}, found {:?}", self.peek()))
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Token::Plus => BinOp::Add,
                Token::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Token::Star => BinOp::Mul,
                Token::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.factor()?);
        }
    }

    fn factor(&mut self) -> PResult<Expr> {
        if *self.peek() == Token::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if *self.peek() != Token::Caret {
            return Ok(base);
        }
        self.bump();
        let sign = if *self.peek() == Token::Minus {
            self.bump();
            -1.0
        } else {
            1.0
        };
        match self.bump() {
            Token::Num(v) => Ok(Expr::Pow(Box::new(base), sign * v)),
            _ => {
                self.pos -= 1;
                self.syntax("exponent must be a number literal")
            }
        }
    }

    fn index(&mut self) -> PResult<usize> {
        self.expect(Token::LBracket)?;
        let at = self.offset();
        let idx = match self.bump() {
            Token::Num(v) if v.fract() == 0.0 && v >= 0.0 => v as usize,
            _ => return Err((ParseErrorKind::Syntax, at, "expected integer index".into())),
        };
        self.expect(Token::RBracket)?;
        if idx == 0 || idx > self.dim {
            return Err((
                ParseErrorKind::IndexOutOfRange,
                at,
                format!("index {idx} not in 1..={}", self.dim),
            ));
        }
        Ok(idx - 1)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let at = self.offset();
        match self.bump() {
            Token::Num(v) => Ok(Expr::Num(v)),
            Token::LParen => {
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Token::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::X(self.index()?)),
                "y" => Ok(Expr::Y(self.index()?)),
                "F" => Ok(Expr::Metric),
                "dot_xx" => Ok(Expr::Dot(Dot::Xx)),
                "dot_xy" => Ok(Expr::Dot(Dot::Xy)),
                "dot_yy" => Ok(Expr::Dot(Dot::Yy)),
                other => match Func::from_name(other) {
                    Some(func) => {
                        self.expect(Token::LParen)?;
                        let arg = self.expr()?;
                        self.expect(Token::RParen)?;
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                    None => Err((
                        ParseErrorKind::UnknownIdentifier,
                        at,
                        format!("'{other}'"),
                    )),
                },
            },
            t => {
                self.pos -= usize::from(t != Token::End);
                self.syntax(format!("expected operand, found {t:?}"))
            }
        }
    }
}
