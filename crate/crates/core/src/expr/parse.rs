use thiserror::Error;

use super::{BinaryOp, Env, Expr, UnaryOp, Var};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at byte {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    UnexpectedChar(char),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("expected {expected}, found {found}")]
    Expected { expected: &'static str, found: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("malformed number `{0}`")]
    BadNumber(String),
    #[error("exponent must be a finite constant: {0}")]
    NonConstantExponent(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn describe(tok: Option<&(usize, Token)>) -> String {
    match tok {
        None => "end of input".to_string(),
        Some((_, Token::Number(v))) => format!("number {v}"),
        Some((_, Token::Ident(s))) => format!("`{s}`"),
        Some((_, Token::Op(c))) => format!("`{c}`"),
        Some((_, Token::LParen)) => "`(`".to_string(),
        Some((_, Token::RParen)) => "`)`".to_string(),
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push((i, Token::Op(c as char)));
                i += 1;
            }
            b'(' => {
                out.push((i, Token::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Token::RParen));
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    let digits_start = j;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    if j == digits_start {
                        return Err(ParseError {
                            offset: start,
                            kind: ParseErrorKind::BadNumber(src[start..j].to_string()),
                        });
                    }
                    i = j;
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    kind: ParseErrorKind::BadNumber(text.to_string()),
                })?;
                if !value.is_finite() {
                    return Err(ParseError {
                        offset: start,
                        kind: ParseErrorKind::BadNumber(text.to_string()),
                    });
                }
                out.push((start, Token::Number(value)));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Token::Ident(src[start..i].to_string())));
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('\u{fffd}');
                return Err(ParseError {
                    offset: i,
                    kind: ParseErrorKind::UnexpectedChar(ch),
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            offset: self.offset(),
            kind,
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token::RParen) => {
                self.pos += 1;
                Ok(())
            }
            None => Err(self.err(ParseErrorKind::UnexpectedEnd)),
            _ => Err(self.err(ParseErrorKind::Expected {
                expected: "`)`",
                found: describe(self.tokens.get(self.pos)),
            })),
        }
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(op @ ('+' | '-'))) = self.peek() {
            let op = if *op == '+' { BinaryOp::Add } else { BinaryOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    // term := factor (('*'|'/') factor)*
    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(Token::Op(op @ ('*' | '/'))) = self.peek() {
            let op = if *op == '*' { BinaryOp::Mul } else { BinaryOp::Div };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    // factor := atom ('^' factor)? | '-' factor
    fn factor(&mut self) -> Result<Expr, ParseError> {
        if let Some(Token::Op('-')) = self.peek() {
            self.pos += 1;
            let inner = self.factor()?;
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        let base = self.atom()?;
        if let Some(Token::Op('^')) = self.peek() {
            self.pos += 1;
            let exp_offset = self.offset();
            let exponent = self.factor()?;
            let value = constant_value(&exponent).ok_or_else(|| ParseError {
                offset: exp_offset,
                kind: ParseErrorKind::NonConstantExponent(exponent.to_string()),
            })?;
            return Ok(Expr::Pow(Box::new(base), value));
        }
        Ok(base)
    }

    // atom := number | ident | func '(' expr ')' | '(' expr ')'
    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        let tok = match self.tokens.get(self.pos) {
            Some((_, tok)) => tok.clone(),
            None => return Err(self.err(ParseErrorKind::UnexpectedEnd)),
        };
        self.pos += 1;
        match tok {
            Token::Number(v) => Ok(Expr::Const(v)),
            Token::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Token::Ident(name) => {
                if let Some(op) = UnaryOp::from_function_name(&name) {
                    match self.peek() {
                        Some(Token::LParen) => self.pos += 1,
                        _ => {
                            return Err(self.err(ParseErrorKind::Expected {
                                expected: "`(` after function name",
                                found: describe(self.tokens.get(self.pos)),
                            }))
                        }
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::Unary(op, Box::new(arg)));
                }
                Var::from_name(&name).map(Expr::Var).ok_or(ParseError {
                    offset,
                    kind: ParseErrorKind::UnknownIdentifier(name),
                })
            }
            Token::Op(c) => Err(ParseError {
                offset,
                kind: ParseErrorKind::Expected {
                    expected: "operand",
                    found: format!("`{c}`"),
                },
            }),
            Token::RParen => Err(ParseError {
                offset,
                kind: ParseErrorKind::Expected {
                    expected: "operand",
                    found: "`)`".to_string(),
                },
            }),
        }
    }
}

fn constant_value(e: &Expr) -> Option<f64> {
    if !e.free_vars().is_empty() {
        return None;
    }
    e.eval(&Env::new()).ok()
}

/// Parses `source` into an expression tree.
///
/// `^` is right-associative and binds tighter than unary minus, so `-x1^2`
/// is `-(x1^2)` and `2^3^2` is `2^9`. Exponents must reduce to a finite
/// constant.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: source.len(),
    };
    let e = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(parser.err(ParseErrorKind::Expected {
            expected: "operator or end of input",
            found: describe(parser.tokens.get(parser.pos)),
        }));
    }
    Ok(e)
}
