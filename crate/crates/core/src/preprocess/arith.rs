//! Integer arithmetic for `#do` bounds and `#if` conditions.

use num::{BigInt, Zero};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("Division by zero in preprocessor expression")]
    DivisionByZero,
    #[error("Illegal character in preprocessor expression: {0}")]
    NonNumeric(String),
    #[error("Incomplete preprocessor expression: {0}")]
    Incomplete(String),
}

/// Evaluates `+ - * /` and parentheses over integers. Division truncates
/// toward zero.
pub fn pp_arith(text: &str) -> Result<BigInt, ArithError> {
    let mut p = Parser { s: text.as_bytes(), pos: 0, text };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(ArithError::NonNumeric(text[p.pos..].to_string()));
    }
    Ok(v)
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    text: &'a str,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<BigInt, ArithError> {
        let mut v = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let r = self.term()?;
            if c == b'+' {
                v += r;
            } else {
                v -= r;
            }
        }
        Ok(v)
    }

    fn term(&mut self) -> Result<BigInt, ArithError> {
        let mut v = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let r = self.unary()?;
            if c == b'*' {
                v *= r;
            } else {
                if r.is_zero() {
                    return Err(ArithError::DivisionByZero);
                }
                v /= r;
            }
        }
        Ok(v)
    }

    fn unary(&mut self) -> Result<BigInt, ArithError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<BigInt, ArithError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(ArithError::Incomplete(self.text.to_string()));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                Ok(self.text[start..self.pos].parse().expect("digits"))
            }
            Some(_) => Err(ArithError::NonNumeric(self.text[self.pos..].to_string())),
            None => Err(ArithError::Incomplete(self.text.to_string())),
        }
    }
}
