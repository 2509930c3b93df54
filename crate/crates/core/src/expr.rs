//! Arithmetic expressions in the coordinates, used for boundary data in configs.
//!
//! Grammar: numbers, `x1..x9` (also `x`, `y`, `z`), `t`, `pi`, `e`,
//! `+ - * / ^`, parentheses and the functions
//! `sin cos tan exp ln log sqrt abs min max pos`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Param,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(String, Vec<Node>),
}

/// Parsed expression; evaluate with a point and the family parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    root: Node,
    max_var: usize,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, max_var: 0 };
        let root = p.sum()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Format(format!(
                "unexpected `{}` in expression `{src}`",
                p.tokens[p.pos].text()
            )));
        }
        Ok(Expr { root, max_var: p.max_var })
    }

    /// Number of coordinates referenced (highest index).
    pub fn arity(&self) -> usize {
        self.max_var
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        eval(&self.root, x, t)
    }
}

fn eval(n: &Node, x: &[f64], t: f64) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(i) => x.get(*i).copied().unwrap_or(0.0),
        Node::Param => t,
        Node::Neg(a) => -eval(a, x, t),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x, t), eval(b, x, t));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => {
                    if b.fract() == 0.0 && b.abs() <= 64.0 {
                        a.powi(b as i32)
                    } else {
                        a.powf(b)
                    }
                }
            }
        }
        Node::Call(f, args) => {
            let v: Vec<f64> = args.iter().map(|a| eval(a, x, t)).collect();
            match f.as_str() {
                "sin" => v[0].sin(),
                "cos" => v[0].cos(),
                "tan" => v[0].tan(),
                "exp" => v[0].exp(),
                "ln" | "log" => v[0].ln(),
                "sqrt" => v[0].sqrt(),
                "abs" => v[0].abs(),
                "pos" => v[0].max(0.0),
                "min" => v[0].min(v[1]),
                _ => v[0].max(v[1]),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Sym(char),
}

impl Token {
    fn text(&self) -> String {
        match self {
            Token::Num(v) => v.to_string(),
            Token::Ident(s) => s.clone(),
            Token::Sym(c) => c.to_string(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("bad number `{text}`")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Token::Sym(c));
            i += 1;
        } else {
            return Err(Error::Format(format!("unexpected character `{c}` in expression")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    max_var: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Token::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Format(format!("expected `{c}` in expression")))
        }
    }

    fn sum(&mut self) -> Result<Node> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat('+') {
                '+'
            } else if self.eat('-') {
                '-'
            } else {
                return Ok(lhs);
            };
            let rhs = self.product()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                '*'
            } else if self.eat('/') {
                '/'
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    // right associative, binds tighter than unary minus on the left: -x^2 = -(x^2)
    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Format("expression ended unexpectedly".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Node::Num(v)),
            Token::Sym('(') => {
                let inner = self.sum()?;
                self.expect(')')?;
                Ok(inner)
            }
            Token::Sym(c) => Err(Error::Format(format!("unexpected `{c}` in expression"))),
            Token::Ident(name) => self.ident(name),
        }
    }

    fn ident(&mut self, name: String) -> Result<Node> {
        let arity = match name.as_str() {
            "sin" | "cos" | "tan" | "exp" | "ln" | "log" | "sqrt" | "abs" | "pos" => Some(1),
            "min" | "max" => Some(2),
            _ => None,
        };
        if let Some(arity) = arity {
            self.expect('(')?;
            let mut args = vec![self.sum()?];
            while self.eat(',') {
                args.push(self.sum()?);
            }
            self.expect(')')?;
            if args.len() != arity {
                return Err(Error::Format(format!("`{name}` takes {arity} argument(s)")));
            }
            return Ok(Node::Call(name, args));
        }
        let var = match name.as_str() {
            "pi" => return Ok(Node::Num(std::f64::consts::PI)),
            "e" => return Ok(Node::Num(std::f64::consts::E)),
            "t" => return Ok(Node::Param),
            "x" => 0,
            "y" => 1,
            "z" => 2,
            other => match other.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                Some(k) if (1..=9).contains(&k) => k - 1,
                _ => return Err(Error::Format(format!("unknown name `{other}` in expression"))),
            },
        };
        self.max_var = self.max_var.max(var + 1);
        Ok(Node::Var(var))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("1 + 2*3^2 - -x1/2").unwrap();
        assert_eq!(e.eval(&[4.0], 0.0), 1.0 + 18.0 + 2.0);
        assert_eq!(Expr::parse("-2^2").unwrap().eval(&[], 0.0), -4.0);
        assert_eq!(Expr::parse("2^3^2").unwrap().eval(&[], 0.0), 512.0);
        assert_eq!(Expr::parse("8/4/2").unwrap().eval(&[], 0.0), 1.0);
    }

    #[test]
    fn variables_functions_and_parameter() {
        let e = Expr::parse("0.5*x2^2 + t + max(x, 0) + sqrt(abs(z)) + pos(-1)").unwrap();
        assert_eq!(e.arity(), 3);
        assert_eq!(e.eval(&[-1.0, 2.0, 9.0], 0.25), 2.0 + 0.25 + 0.0 + 3.0);
        let r = Expr::parse("(x1^2 + x2^2 - 0.25)/4 - 0.125*ln(sqrt(x1^2+x2^2)/0.5)").unwrap();
        assert!((r.eval(&[0.5, 0.0], 0.0)).abs() < 1e-15);
        assert!((Expr::parse("2.5e-1*pi").unwrap().eval(&[], 0.0) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        for bad in ["", "1 +", "(1", "x0", "foo(1)", "min(1)", "1 $ 2", "1 2"] {
            assert!(Expr::parse(bad).is_err(), "{bad}");
        }
    }
}
