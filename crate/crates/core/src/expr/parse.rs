use thiserror::Error;

use super::{BinOp, Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("function `{name}` at byte {offset} takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        offset: usize,
        expected: usize,
        found: usize,
    },
}

impl ParseError {
    /// Byte offset of the offending token, if the error has one.
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Empty => None,
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Arity { offset, .. } => Some(*offset),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let tok = match c {
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                    end += 1;
                }
                if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                    let mut k = end + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        end = k;
                    }
                }
                let text = &self.src[start..end];
                let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                self.pos = end;
                Tok::Num(v)
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut end = self.pos;
                while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                    end += 1;
                }
                self.pos = end;
                Tok::Ident(self.src[start..end].to_string())
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                self.pos += 1;
                Tok::Op(c as char)
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b',' => {
                self.pos += 1;
                Tok::Comma
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        Ok((tok, start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    offset: usize,
    constants: &'a [(&'a str, f64)],
}

const UNARY_BP: u8 = 30;

fn infix_binding(op: char) -> Option<(BinOp, u8, u8)> {
    Some(match op {
        '+' => (BinOp::Add, 10, 10),
        '-' => (BinOp::Sub, 10, 10),
        '*' => (BinOp::Mul, 20, 20),
        '/' => (BinOp::Div, 20, 20),
        '^' => (BinOp::Pow, 40, 39),
        _ => return None,
    })
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ParseError> {
        let (tok, offset) = self.lexer.next_token()?;
        self.tok = tok;
        self.offset = offset;
        Ok(())
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset,
            message: message.into(),
        })
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        while let Tok::Op(c) = self.tok {
            let (op, lbp, rbp) = infix_binding(c).expect("lexer only emits known operators");
            if lbp <= min_bp {
                break;
            }
            self.bump()?;
            let rhs = self.expr(rbp)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset;
        match std::mem::replace(&mut self.tok, Tok::End) {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Const(v))
            }
            Tok::Op('-') => {
                self.bump()?;
                let operand = self.expr(UNARY_BP)?;
                Ok(Expr::neg(operand))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr(0)?;
                if self.tok != Tok::RParen {
                    return self.syntax("expected `)`");
                }
                self.bump()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump()?;
                self.identifier(name, offset)
            }
            tok => {
                self.tok = tok;
                match self.tok {
                    Tok::End => self.syntax("unexpected end of input"),
                    Tok::RParen => self.syntax("unexpected `)`"),
                    Tok::Comma => self.syntax("unexpected `,`"),
                    Tok::Op(c) => self.syntax(format!("unexpected operator `{c}`")),
                    _ => unreachable!(),
                }
            }
        }
    }

    fn identifier(&mut self, name: String, offset: usize) -> Result<Expr, ParseError> {
        if let Some(func) = Func::from_name(&name) {
            if self.tok != Tok::LParen {
                return Err(ParseError::Arity {
                    name,
                    offset,
                    expected: 1,
                    found: 0,
                });
            }
            self.bump()?;
            let mut args = Vec::new();
            if self.tok != Tok::RParen {
                loop {
                    args.push(self.expr(0)?);
                    match self.tok {
                        Tok::Comma => self.bump()?,
                        Tok::RParen => break,
                        _ => return self.syntax("expected `,` or `)` in argument list"),
                    }
                }
            }
            self.bump()?;
            if args.len() != 1 {
                return Err(ParseError::Arity {
                    name,
                    offset,
                    expected: 1,
                    found: args.len(),
                });
            }
            return Ok(Expr::call(func, args.pop().unwrap()));
        }
        let e = match name.as_str() {
            "x" => Expr::Var(Var::X),
            "t" => Expr::Var(Var::T),
            "eps" => Expr::Var(Var::Eps),
            "pi" => Expr::Pi,
            _ => match self.constants.iter().find(|(n, _)| *n == name) {
                Some(&(_, v)) => Expr::Const(v),
                None => return Err(ParseError::UnknownIdentifier { name, offset }),
            },
        };
        if self.tok == Tok::LParen {
            return Err(ParseError::Syntax {
                offset,
                message: format!("`{name}` is not a function"),
            });
        }
        Ok(e)
    }
}

/// Parses an expression over `x`, `t`, `eps` and `pi`.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with_constants(text, &[])
}

/// Parses an expression, replacing each identifier in `constants` by its
/// numeric value (used to inline the period `T`).
pub fn parse_with_constants(text: &str, constants: &[(&str, f64)]) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut p = Parser {
        lexer: Lexer { src: text, pos: 0 },
        tok: Tok::End,
        offset: 0,
        constants,
    };
    p.bump()?;
    let e = p.expr(0)?;
    if p.tok != Tok::End {
        return p.syntax("unexpected trailing input");
    }
    Ok(e)
}
