//! Hand-rolled lexer and recursive-descent parser for the formula syntax.
//!
//! Grammar (brackets `[ ]` and parentheses `( )` are interchangeable):
//!
//! ```text
//! formula  := or
//! or       := and { "|" and }
//! and      := unary { "&" unary }
//! unary    := "!" unary
//!           | ("AX"|"EX"|"AF"|"EF"|"AG"|"EG") unary
//!           | ("A"|"E") "[" formula "U" formula "]"
//!           | primary
//! primary  := "true" | "false" | term cmp term | "(" formula ")"
//! term     := "m" "(" ident ")" | integer
//! cmp      := "=" | "==" | "!=" | "<" | "<=" | ">" | ">="
//! ```
//!
//! Negation binds tighter than `&`, which binds tighter than `|`; temporal
//! operators bind tighter than the boolean connectives, so `EX p | q` is
//! `(EX p) | q`. The unicode spellings `¬ ∧ ∨ ≠ ≤ ≥` are accepted as
//! aliases for `! & | != <= >=`.

use crate::{Error, Result};

use super::{AtomicPredicate, Cmp, Formula, Term};

pub fn parse(text: &str) -> Result<Formula> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let formula = p.formula()?;
    match p.peek() {
        None => Ok(formula),
        Some(tok) => Err(err_at(
            tok.pos,
            format!("unexpected `{}`", tok.kind.describe()),
        )),
    }
}

fn err_at(pos: usize, msg: String) -> Error {
    Error::FormulaSyntax { pos, msg }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Ident(String),
    Int(i64),
    Not,
    AndOp,
    OrOp,
    Open(char),  // '(' or '['
    Close(char), // ')' or ']'
    Cmp(Cmp),
}

impl TokenKind {
    fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => s.clone(),
            TokenKind::Int(i) => i.to_string(),
            TokenKind::Not => "!".into(),
            TokenKind::AndOp => "&".into(),
            TokenKind::OrOp => "|".into(),
            TokenKind::Open(c) | TokenKind::Close(c) => c.to_string(),
            TokenKind::Cmp(c) => c.symbol().into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        let kind = match c {
            _ if c.is_whitespace() => {
                chars.next();
                continue;
            }
            '(' | '[' => {
                chars.next();
                TokenKind::Open(c)
            }
            ')' | ']' => {
                chars.next();
                TokenKind::Close(c)
            }
            '&' | '∧' => {
                chars.next();
                if c == '&' && matches!(chars.peek(), Some((_, '&'))) {
                    chars.next();
                }
                TokenKind::AndOp
            }
            '|' | '∨' => {
                chars.next();
                if c == '|' && matches!(chars.peek(), Some((_, '|'))) {
                    chars.next();
                }
                TokenKind::OrOp
            }
            '¬' => {
                chars.next();
                TokenKind::Not
            }
            '≠' => {
                chars.next();
                TokenKind::Cmp(Cmp::Ne)
            }
            '≤' => {
                chars.next();
                TokenKind::Cmp(Cmp::Le)
            }
            '≥' => {
                chars.next();
                TokenKind::Cmp(Cmp::Ge)
            }
            '!' => {
                chars.next();
                if matches!(chars.peek(), Some((_, '='))) {
                    chars.next();
                    TokenKind::Cmp(Cmp::Ne)
                } else {
                    TokenKind::Not
                }
            }
            '=' => {
                chars.next();
                if matches!(chars.peek(), Some((_, '='))) {
                    chars.next();
                }
                TokenKind::Cmp(Cmp::Eq)
            }
            '<' => {
                chars.next();
                if matches!(chars.peek(), Some((_, '='))) {
                    chars.next();
                    TokenKind::Cmp(Cmp::Le)
                } else {
                    TokenKind::Cmp(Cmp::Lt)
                }
            }
            '>' => {
                chars.next();
                if matches!(chars.peek(), Some((_, '='))) {
                    chars.next();
                    TokenKind::Cmp(Cmp::Ge)
                } else {
                    TokenKind::Cmp(Cmp::Gt)
                }
            }
            _ if c.is_ascii_digit() => {
                let mut value: i64 = 0;
                while let Some(&(_, d)) = chars.peek() {
                    if let Some(digit) = d.to_digit(10) {
                        value = value
                            .checked_mul(10)
                            .and_then(|v| v.checked_add(i64::from(digit)))
                            .ok_or_else(|| err_at(pos, "integer literal overflows".into()))?;
                        chars.next();
                    } else {
                        break;
                    }
                }
                TokenKind::Int(value)
            }
            _ if c.is_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&(_, d)) = chars.peek() {
                    if d.is_alphanumeric() || d == '_' {
                        name.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                TokenKind::Ident(name)
            }
            other => return Err(err_at(pos, format!("unexpected character `{other}`"))),
        };
        tokens.push(Token { kind, pos });
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn end_pos(&self) -> usize {
        self.tokens.last().map(|t| t.pos + 1).unwrap_or(0)
    }

    fn expect_open(&mut self, what: &str) -> Result<()> {
        match self.next() {
            Some(Token {
                kind: TokenKind::Open(_),
                ..
            }) => Ok(()),
            Some(tok) => Err(err_at(
                tok.pos,
                format!(
                    "expected `(` or `[` {what}, found `{}`",
                    tok.kind.describe()
                ),
            )),
            None => Err(err_at(
                self.end_pos(),
                format!("expected `(` or `[` {what}"),
            )),
        }
    }

    fn expect_close(&mut self, what: &str) -> Result<()> {
        match self.next() {
            Some(Token {
                kind: TokenKind::Close(_),
                ..
            }) => Ok(()),
            Some(tok) => Err(err_at(
                tok.pos,
                format!(
                    "expected `)` or `]` {what}, found `{}`",
                    tok.kind.describe()
                ),
            )),
            None => Err(err_at(
                self.end_pos(),
                format!("expected `)` or `]` {what}"),
            )),
        }
    }

    fn formula(&mut self) -> Result<Formula> {
        let mut lhs = self.and_level()?;
        while matches!(
            self.peek(),
            Some(Token {
                kind: TokenKind::OrOp,
                ..
            })
        ) {
            self.next();
            let rhs = self.and_level()?;
            lhs = Formula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_level(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while matches!(
            self.peek(),
            Some(Token {
                kind: TokenKind::AndOp,
                ..
            })
        ) {
            self.next();
            let rhs = self.unary()?;
            lhs = Formula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return Err(err_at(self.end_pos(), "expected a formula".into())),
        };
        if tok.kind == TokenKind::Not {
            self.next();
            let inner = self.unary()?;
            return Ok(Formula::Not(Box::new(inner)));
        }
        if let TokenKind::Ident(name) = &tok.kind {
            match name.as_str() {
                "AX" | "EX" | "AF" | "EF" | "AG" | "EG" => {
                    self.next();
                    let inner = self.unary()?;
                    let inner = Box::new(inner);
                    return Ok(match name.as_str() {
                        "AX" => Formula::AX(inner),
                        "EX" => Formula::EX(inner),
                        "AF" => Formula::AF(inner),
                        "EF" => Formula::EF(inner),
                        "AG" => Formula::AG(inner),
                        _ => Formula::EG(inner),
                    });
                }
                "A" | "E" => {
                    let universal = name == "A";
                    self.next();
                    self.expect_open("after the path quantifier")?;
                    let lhs = self.formula()?;
                    match self.next() {
                        Some(Token {
                            kind: TokenKind::Ident(u),
                            ..
                        }) if u == "U" => {}
                        Some(t) => {
                            return Err(err_at(
                                t.pos,
                                format!("expected `U`, found `{}`", t.kind.describe()),
                            ))
                        }
                        None => return Err(err_at(self.end_pos(), "expected `U`".into())),
                    }
                    let rhs = self.formula()?;
                    self.expect_close("after the until operand")?;
                    let (lhs, rhs) = (Box::new(lhs), Box::new(rhs));
                    return Ok(if universal {
                        Formula::AU(lhs, rhs)
                    } else {
                        Formula::EU(lhs, rhs)
                    });
                }
                _ => {}
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Formula> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return Err(err_at(self.end_pos(), "expected a formula".into())),
        };
        match &tok.kind {
            TokenKind::Open(_) => {
                self.next();
                let inner = self.formula()?;
                self.expect_close("to end the group")?;
                Ok(inner)
            }
            TokenKind::Ident(name) if name == "true" => {
                self.next();
                Ok(Formula::Atomic(AtomicPredicate::True))
            }
            TokenKind::Ident(name) if name == "false" => {
                self.next();
                Ok(Formula::Atomic(AtomicPredicate::False))
            }
            TokenKind::Ident(_) | TokenKind::Int(_) => {
                let lhs = self.term()?;
                let op = match self.next() {
                    Some(Token {
                        kind: TokenKind::Cmp(op),
                        ..
                    }) => op,
                    Some(t) => {
                        return Err(err_at(
                            t.pos,
                            format!("expected a comparison, found `{}`", t.kind.describe()),
                        ))
                    }
                    None => return Err(err_at(self.end_pos(), "expected a comparison".into())),
                };
                let rhs = self.term()?;
                Ok(Formula::Atomic(AtomicPredicate::Cmp(lhs, op, rhs)))
            }
            other => Err(err_at(
                tok.pos,
                format!("expected a formula, found `{}`", other.describe()),
            )),
        }
    }

    fn term(&mut self) -> Result<Term> {
        match self.next() {
            Some(Token {
                kind: TokenKind::Int(value),
                ..
            }) => Ok(Term::Const(value)),
            Some(Token {
                kind: TokenKind::Ident(name),
                pos,
            }) => {
                if name != "m" {
                    return Err(err_at(
                        pos,
                        format!("expected `m(place)` or an integer, found `{name}`"),
                    ));
                }
                self.expect_open("after `m`")?;
                let place = match self.next() {
                    Some(Token {
                        kind: TokenKind::Ident(place),
                        ..
                    }) => place,
                    Some(t) => {
                        return Err(err_at(
                            t.pos,
                            format!("expected a place name, found `{}`", t.kind.describe()),
                        ))
                    }
                    None => return Err(err_at(self.end_pos(), "expected a place name".into())),
                };
                self.expect_close("after the place name")?;
                Ok(Term::Place(place))
            }
            Some(t) => Err(err_at(
                t.pos,
                format!("expected a term, found `{}`", t.kind.describe()),
            )),
            None => Err(err_at(self.end_pos(), "expected a term".into())),
        }
    }
}
