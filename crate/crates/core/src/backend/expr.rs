//! Tiny arithmetic expression evaluator for scripted response templates.
//!
//! Supports `+ - * /`, parentheses, numeric literals and the functions
//! `round`, `floor`, `ceil`, `abs`, `min`, `max`, `clamp`. Identifiers may
//! contain hyphens (`last-target`); a `-` directly attached to identifier
//! characters extends the identifier, so subtraction between identifiers
//! needs surrounding whitespace (`a - b`).

use std::collections::BTreeMap;

use crate::error::BackendError;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
}

fn err(msg: impl Into<String>) -> BackendError {
    BackendError::Template(msg.into())
}

fn tokenize(src: &str) -> Result<Vec<Token>, BackendError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star);
                i += 1;
            }
            '/' => {
                tokens.push(Token::Slash);
                i += 1;
            }
            '(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            ',' => {
                tokens.push(Token::Comma);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let value = text
                    .parse::<f64>()
                    .map_err(|_| err(format!("bad number literal '{text}'")))?;
                tokens.push(Token::Num(value));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                i += 1;
                while i < chars.len() {
                    let ch = chars[i];
                    if ch.is_ascii_alphanumeric() || ch == '_' {
                        i += 1;
                    } else if ch == '-'
                        && i + 1 < chars.len()
                        && (chars[i + 1].is_ascii_alphanumeric() || chars[i + 1] == '_')
                    {
                        // hyphen glues identifier parts: last-target
                        i += 2;
                    } else {
                        break;
                    }
                }
                tokens.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(err(format!("unexpected character '{other}'"))),
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    env: &'a BTreeMap<String, f64>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, expected: Token) -> Result<(), BackendError> {
        match self.next() {
            Some(t) if t == expected => Ok(()),
            other => Err(err(format!("expected {expected:?}, found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<f64, BackendError> {
        let mut left = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.next();
                    left += self.term()?;
                }
                Some(Token::Minus) => {
                    self.next();
                    left -= self.term()?;
                }
                _ => return Ok(left),
            }
        }
    }

    fn term(&mut self) -> Result<f64, BackendError> {
        let mut left = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.next();
                    left *= self.unary()?;
                }
                Some(Token::Slash) => {
                    self.next();
                    let rhs = self.unary()?;
                    if rhs == 0.0 {
                        return Err(err("division by zero"));
                    }
                    left /= rhs;
                }
                _ => return Ok(left),
            }
        }
    }

    fn unary(&mut self) -> Result<f64, BackendError> {
        if matches!(self.peek(), Some(Token::Minus)) {
            self.next();
            return Ok(-self.unary()?);
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<f64, BackendError> {
        match self.next() {
            Some(Token::Num(v)) => Ok(v),
            Some(Token::LParen) => {
                let v = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(v)
            }
            Some(Token::Ident(name)) => {
                if matches!(self.peek(), Some(Token::LParen)) {
                    self.next();
                    let mut args = vec![self.expr()?];
                    while matches!(self.peek(), Some(Token::Comma)) {
                        self.next();
                        args.push(self.expr()?);
                    }
                    self.expect(Token::RParen)?;
                    self.call(&name, &args)
                } else {
                    self.env
                        .get(&name)
                        .copied()
                        .ok_or_else(|| err(format!("unknown variable '{name}'")))
                }
            }
            other => Err(err(format!("unexpected token {other:?}"))),
        }
    }

    fn call(&self, name: &str, args: &[f64]) -> Result<f64, BackendError> {
        let one = |args: &[f64]| -> Result<f64, BackendError> {
            if args.len() != 1 {
                Err(err(format!("{name} takes one argument")))
            } else {
                Ok(args[0])
            }
        };
        match name {
            // rounds half away from zero
            "round" => Ok(one(args)?.round()),
            "floor" => Ok(one(args)?.floor()),
            "ceil" => Ok(one(args)?.ceil()),
            "abs" => Ok(one(args)?.abs()),
            "min" if args.len() == 2 => Ok(args[0].min(args[1])),
            "max" if args.len() == 2 => Ok(args[0].max(args[1])),
            "clamp" if args.len() == 3 => Ok(args[0].clamp(args[1], args[2])),
            _ => Err(err(format!(
                "unknown function '{name}' with {} args",
                args.len()
            ))),
        }
    }
}

/// Evaluate one arithmetic expression against a numeric environment.
pub fn eval(src: &str, env: &BTreeMap<String, f64>) -> Result<f64, BackendError> {
    let tokens = tokenize(src)?;
    if tokens.is_empty() {
        return Err(err("empty expression"));
    }
    let mut parser = Parser {
        tokens: &tokens,
        pos: 0,
        env,
    };
    let value = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(err("trailing tokens in expression"));
    }
    Ok(value)
}
