use super::{Expr, ExprError, Func, Node, VarSet};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if start >= bytes.len() {
            return Ok((Tok::End, start));
        }
        let c = bytes[start];
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            // exponent part: e or E followed by optional sign and digits
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
            let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number '{text}'"),
            })?;
            self.pos = end;
            return Ok((Tok::Num(v), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        self.pos += 1;
        match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => Ok((Tok::Op(c as char), start)),
            b'(' => Ok((Tok::LParen, start)),
            b')' => Ok((Tok::RParen, start)),
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character '{ch}'"),
                })
            }
        }
    }
}

pub(super) struct Parser<'a> {
    lex: Lexer<'a>,
    tok: Tok,
    at: usize,
    vars: VarSet,
}

impl<'a> Parser<'a> {
    pub(super) fn new(src: &'a str, vars: VarSet) -> Result<Self, ExprError> {
        let mut lex = Lexer { src, pos: 0 };
        let (tok, at) = lex.next()?;
        Ok(Parser { lex, tok, at, vars })
    }

    fn bump(&mut self) -> Result<(), ExprError> {
        let (tok, at) = self.lex.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn unexpected(&self, wanted: &str) -> ExprError {
        let found = match &self.tok {
            Tok::End => "end of input".to_string(),
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Op(c) => format!("'{c}'"),
            Tok::LParen => "'('".to_string(),
            Tok::RParen => "')'".to_string(),
        };
        ExprError::Syntax {
            offset: self.at,
            message: format!("expected {wanted}, found {found}"),
        }
    }

    pub(super) fn parse_all(&mut self) -> Result<Expr, ExprError> {
        if self.tok == Tok::End {
            return Err(self.unexpected("an expression"));
        }
        let e = self.sum()?;
        if self.tok != Tok::End {
            return Err(self.unexpected("an operator or end of input"));
        }
        Ok(e)
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        while let Tok::Op(op @ ('+' | '-')) = self.tok {
            let at = self.at;
            self.bump()?;
            let rhs = self.product()?;
            let node = if op == '+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
            lhs = Expr { node, offset: at };
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(op @ ('*' | '/')) = self.tok {
            let at = self.at;
            self.bump()?;
            let rhs = self.unary()?;
            let node = if op == '*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
            lhs = Expr { node, offset: at };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.tok == Tok::Op('-') {
            let at = self.at;
            self.bump()?;
            let inner = self.unary()?;
            return Ok(Expr {
                node: Node::Neg(Box::new(inner)),
                offset: at,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.tok != Tok::Op('^') {
            return Ok(base);
        }
        let at = self.at;
        self.bump()?;
        let exp_at = self.at;
        let exponent = self.integer_exponent()?;
        let exponent = i32::try_from(exponent).map_err(|_| ExprError::Syntax {
            offset: exp_at,
            message: "exponent out of range".into(),
        })?;
        Ok(Expr {
            node: Node::Pow(Box::new(base), exponent),
            offset: at,
        })
    }

    // Exponents are integer constants; `^` is right-associative so `2^3^2` folds to 2^9.
    fn integer_exponent(&mut self) -> Result<i64, ExprError> {
        let at = self.at;
        let negative = if self.tok == Tok::Op('-') {
            self.bump()?;
            true
        } else {
            false
        };
        let base = match self.tok.clone() {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() < 1e9 => {
                self.bump()?;
                v as i64
            }
            Tok::LParen => {
                self.bump()?;
                let v = self.integer_exponent()?;
                if self.tok != Tok::RParen {
                    return Err(self.unexpected("')'"));
                }
                self.bump()?;
                v
            }
            _ => {
                return Err(ExprError::Syntax {
                    offset: at,
                    message: "exponent must be an integer constant".into(),
                })
            }
        };
        let mut value = base;
        if self.tok == Tok::Op('^') {
            self.bump()?;
            let e = self.integer_exponent()?;
            if !(0..=64).contains(&e) {
                return Err(ExprError::Syntax {
                    offset: at,
                    message: "exponent must be an integer constant".into(),
                });
            }
            value = base.checked_pow(e as u32).ok_or(ExprError::Syntax {
                offset: at,
                message: "exponent out of range".into(),
            })?;
        }
        Ok(if negative { -value } else { value })
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let at = self.at;
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr {
                    node: Node::Const(v),
                    offset: at,
                })
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.sum()?;
                if self.tok != Tok::RParen {
                    return Err(self.unexpected("')'"));
                }
                self.bump()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump()?;
                if let Some(f) = Func::from_name(&name) {
                    if self.tok != Tok::LParen {
                        return Err(self.unexpected(&format!("'(' after {name}")));
                    }
                    self.bump()?;
                    let arg = self.sum()?;
                    if self.tok != Tok::RParen {
                        return Err(self.unexpected("')'"));
                    }
                    self.bump()?;
                    return Ok(Expr {
                        node: Node::Call(f, Box::new(arg)),
                        offset: at,
                    });
                }
                let index = self.vars.resolve(&name, at)?;
                Ok(Expr {
                    node: Node::Var(index),
                    offset: at,
                })
            }
            _ => Err(self.unexpected("an operand")),
        }
    }
}
