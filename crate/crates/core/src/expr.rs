//! Small scalar expression language for loads and boundary profiles.
//!
//! Grammar (recursive descent): `+ − * / ^` with usual precedence, `^`
//! right-associative, unary minus, parentheses, the functions `sin cos exp
//! ln sqrt`, the variables `x1 x2 x3`, the constant `pi`, and decimal
//! literals. Expressions carry an exact symbolic derivative, needed for the
//! axial slopes ∂₃v entering the recovery sequence.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Variable index 0..3 for x1, x2, x3.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Sqrt(Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!("trailing input at token {:?}", p.tokens[p.pos])));
        }
        Ok(e)
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Ln(a) => a.eval(x).ln(),
            Expr::Sqrt(a) => a.eval(x).sqrt(),
        }
    }

    /// Exact partial derivative with respect to variable `var` (0..3).
    pub fn derivative(&self, var: usize) -> Expr {
        use Expr::*;
        let b = Box::new;
        match self {
            Const(_) => Const(0.0),
            Var(i) => Const(if *i == var { 1.0 } else { 0.0 }),
            Neg(a) => Neg(b(a.derivative(var))),
            Add(a, c) => Add(b(a.derivative(var)), b(c.derivative(var))),
            Sub(a, c) => Sub(b(a.derivative(var)), b(c.derivative(var))),
            Mul(a, c) => Add(
                b(Mul(b(a.derivative(var)), c.clone())),
                b(Mul(a.clone(), b(c.derivative(var)))),
            ),
            Div(a, c) => Div(
                b(Sub(
                    b(Mul(b(a.derivative(var)), c.clone())),
                    b(Mul(a.clone(), b(c.derivative(var)))),
                )),
                b(Mul(c.clone(), c.clone())),
            ),
            Pow(a, c) => {
                // a^c · (c′ ln a + c a′/a); for constant exponents use the
                // power rule so integer powers stay defined at a ≤ 0
                if let Const(n) = **c {
                    Mul(
                        b(Mul(b(Const(n)), b(Pow(a.clone(), b(Const(n - 1.0)))))),
                        b(a.derivative(var)),
                    )
                } else {
                    Mul(
                        b(self.clone()),
                        b(Add(
                            b(Mul(b(c.derivative(var)), b(Ln(a.clone())))),
                            b(Div(b(Mul(c.clone(), b(a.derivative(var)))), a.clone())),
                        )),
                    )
                }
            }
            Sin(a) => Mul(b(Cos(a.clone())), b(a.derivative(var))),
            Cos(a) => Neg(b(Mul(b(Sin(a.clone())), b(a.derivative(var))))),
            Exp(a) => Mul(b(self.clone()), b(a.derivative(var))),
            Ln(a) => Div(b(a.derivative(var)), a.clone()),
            Sqrt(a) => Div(b(a.derivative(var)), b(Mul(b(Const(2.0)), b(self.clone())))),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Ln(a) => write!(f, "ln({a})"),
            Expr::Sqrt(a) => write!(f, "sqrt({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    if d.is_ascii_digit() || d == '.' {
                        i += 1;
                    } else if (d == 'e' || d == 'E')
                        && i + 1 < bytes.len()
                        && ((bytes[i + 1] as char).is_ascii_digit()
                            || bytes[i + 1] == b'+'
                            || bytes[i + 1] == b'-')
                    {
                        i += 2;
                    } else {
                        break;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Expr(format!("bad number literal {text:?}")))?;
                out.push(Token::Num(v));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push(Token::Ident(src[start..i].to_string()));
            }
            other => return Err(Error::Expr(format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Token) -> Result<()> {
        match self.bump() {
            Some(got) if got == t => Ok(()),
            got => Err(Error::Expr(format!("expected {t:?}, got {got:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    acc = Expr::Mul(Box::new(acc), Box::new(self.factor()?));
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    acc = Expr::Div(Box::new(acc), Box::new(self.factor()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        // unary minus binds looser than ^, so -2^2 = -(2^2)
        if let Some(Token::Minus) = self.peek() {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if let Some(Token::Caret) = self.peek() {
            self.pos += 1;
            // right associative; the exponent may itself carry a sign
            let exp = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Token::Num(v)) => Ok(Expr::Const(v)),
            Some(Token::LParen) => {
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "x1" => Ok(Expr::Var(0)),
                "x2" => Ok(Expr::Var(1)),
                "x3" => Ok(Expr::Var(2)),
                "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                func @ ("sin" | "cos" | "exp" | "ln" | "sqrt") => {
                    self.expect(Token::LParen)?;
                    let arg = Box::new(self.expr()?);
                    self.expect(Token::RParen)?;
                    Ok(match func {
                        "sin" => Expr::Sin(arg),
                        "cos" => Expr::Cos(arg),
                        "exp" => Expr::Exp(arg),
                        "ln" => Expr::Ln(arg),
                        _ => Expr::Sqrt(arg),
                    })
                }
                other => Err(Error::Expr(format!("unknown identifier {other:?}"))),
            },
            got => Err(Error::Expr(format!("expected a value, got {got:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parses_and_evaluates() {
        let e = Expr::parse("2*x1 + x2^2 - sin(pi*x3)/2").unwrap();
        let x = [0.5, 3.0, 0.5];
        assert_relative_eq!(e.eval(x), 1.0 + 9.0 - 0.5, max_relative = 1e-14);
    }

    #[test]
    fn precedence_and_unary_minus() {
        assert_relative_eq!(Expr::parse("-2^2").unwrap().eval([0.0; 3]), -4.0);
        assert_relative_eq!(Expr::parse("2+3*4").unwrap().eval([0.0; 3]), 14.0);
        assert_relative_eq!(Expr::parse("(2+3)*4").unwrap().eval([0.0; 3]), 20.0);
        assert_relative_eq!(Expr::parse("2^3^2").unwrap().eval([0.0; 3]), 512.0);
        assert_relative_eq!(Expr::parse("1e-3 + 1.5e2").unwrap().eval([0.0; 3]), 150.001);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(Expr::parse("2 +").is_err());
        assert!(Expr::parse("sin x1").is_err());
        assert!(Expr::parse("x4").is_err());
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse("1..2").is_err());
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let cases = [
            "x1^3 + 2*x2*x3",
            "sin(x1*x2) * exp(-x3)",
            "ln(1 + x1^2) / (2 + cos(x2))",
            "sqrt(1 + x3^2)",
            "x1^x2",
        ];
        let x = [0.7, 1.3, 0.4];
        let h = 1e-6;
        for src in cases {
            let e = Expr::parse(src).unwrap();
            for var in 0..3 {
                let d = e.derivative(var);
                let mut xp = x;
                let mut xm = x;
                xp[var] += h;
                xm[var] -= h;
                let fd = (e.eval(xp) - e.eval(xm)) / (2.0 * h);
                assert_relative_eq!(d.eval(x), fd, max_relative = 1e-7, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn integer_power_rule_at_zero_base() {
        // d/dx x³ at x = 0 must be 0, not NaN from the log form
        let e = Expr::parse("x1^3").unwrap();
        let d = e.derivative(0);
        assert_eq!(d.eval([0.0; 3]), 0.0);
        assert_relative_eq!(d.eval([-2.0, 0.0, 0.0]), 12.0);
    }
}
