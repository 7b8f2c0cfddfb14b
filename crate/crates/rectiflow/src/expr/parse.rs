//! Recursive-descent parser for the expression grammar. Deterministic: one
//! token of lookahead, no backtracking.

use super::{Func, Node};
use crate::{Error, Result};

pub fn parse(src: &str, dim: usize) -> Result<Node> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, dim };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(p.err("empty expression"));
    }
    let node = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(node)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    dim: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && (self.src[self.pos] as char).is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    // expr := term (("+" | "-") term)*
    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = Node::Add(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Node::Sub(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    // term := factor (("*" | "/") factor)*
    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.factor()?;
                lhs = Node::Mul(Box::new(lhs), Box::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                lhs = Node::Div(Box::new(lhs), Box::new(rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    // factor := atom ("^" factor)?   -- right-associative
    fn factor(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let ex = self.factor()?;
            Ok(Node::Pow(Box::new(base), Box::new(ex)))
        } else {
            Ok(base)
        }
    }

    // atom := number | "t" | "x" digits | func "(" expr ")" | "(" expr ")" | "-" atom
    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.err("expected an operand")),
            Some(b'-') => {
                self.pos += 1;
                self.skip_ws();
                let inner = self.atom()?;
                // fold a minus applied to a literal (parenthesized or not)
                // into the literal, so negative constants print and re-parse
                // identically
                if let Node::Num(v) = inner {
                    return Ok(Node::Num(-v));
                }
                Ok(Node::Neg(Box::new(inner)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Node::Num(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(self.err(&format!("unexpected character '{}'", c as char))),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.src.get(self.pos), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            while matches!(self.src.get(self.pos), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        // exponent, only when digits follow: "2e" must not eat the 'e'
        if matches!(self.src.get(self.pos), Some(b'e') | Some(b'E')) {
            let mut probe = self.pos + 1;
            if matches!(self.src.get(probe), Some(b'+') | Some(b'-')) {
                probe += 1;
            }
            if matches!(self.src.get(probe), Some(c) if c.is_ascii_digit()) {
                self.pos = probe;
                while matches!(self.src.get(self.pos), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        text.parse::<f64>().map_err(|_| Error::Syntax {
            pos: start,
            msg: format!("invalid number '{text}'"),
        })
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while matches!(self.src.get(self.pos), Some(c) if c.is_ascii_alphanumeric() || *c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        match name {
            "t" => Ok(Node::Time),
            "pi" => Ok(Node::Num(std::f64::consts::PI)),
            "e" => Ok(Node::Num(std::f64::consts::E)),
            "sin" | "cos" | "tan" | "exp" | "log" | "sqrt" | "abs" | "tanh" | "sign" => {
                let f = match name {
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "tan" => Func::Tan,
                    "exp" => Func::Exp,
                    "log" => Func::Log,
                    "sqrt" => Func::Sqrt,
                    "abs" => Func::Abs,
                    "tanh" => Func::Tanh,
                    _ => Func::Sign,
                };
                if !self.eat(b'(') {
                    return Err(self.err(&format!("expected '(' after '{name}'")));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.err("expected ')'"));
                }
                Ok(Node::Call(f, Box::new(arg)))
            }
            _ => {
                if let Some(digits) = name.strip_prefix('x') {
                    if !digits.is_empty() && digits.bytes().all(|c| c.is_ascii_digit()) {
                        let index: usize = digits.parse().map_err(|_| Error::Syntax {
                            pos: start,
                            msg: format!("invalid variable '{name}'"),
                        })?;
                        if index == 0 || index > self.dim {
                            return Err(Error::Dimension { index, dim: self.dim });
                        }
                        return Ok(Node::Var(index - 1));
                    }
                }
                Err(Error::Syntax {
                    pos: start,
                    msg: format!("unknown identifier '{name}'"),
                })
            }
        }
    }
}
