//! Closed-form expressions for metric profiles, fields and maps.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | constant | variable | func '(' expr (',' expr)* ')' | '(' expr ')'
//! func   := exp | ln | log | sqrt | sin | cos | sinh | cosh | tanh | pow
//! ```
//!
//! Constants are `pi` and `e`. Variables are fixed when parsing (`t` for
//! profiles, `x, y` for chart fields). Evaluation runs on [`Jet`]s, so every
//! expression also yields exact derivatives.

use std::fmt;

use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Tanh,
    Pow,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" | "log" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "tanh" => Func::Tanh,
            "pow" => Func::Pow,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

/// A parsed expression together with the names of its variables.
#[derive(Clone, PartialEq)]
pub struct Expr {
    source: String,
    vars: Vec<String>,
    root: Node,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    pub fn parse(source: &str, vars: &[&str]) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut p = Parser {
            tokens: &tokens,
            pos: 0,
            vars,
        };
        let root = p.expr()?;
        if p.pos != tokens.len() {
            return Err(Error::Expression(format!(
                "unexpected token {:?} in {source:?}",
                tokens[p.pos]
            )));
        }
        Ok(Self {
            source: source.to_string(),
            vars: vars.iter().map(|s| s.to_string()).collect(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    /// True when the expression does not reference any variable.
    pub fn is_constant(&self) -> bool {
        fn walk(n: &Node) -> bool {
            match n {
                Node::Num(_) => true,
                Node::Var(_) => false,
                Node::Neg(a) => walk(a),
                Node::Add(a, b)
                | Node::Sub(a, b)
                | Node::Mul(a, b)
                | Node::Div(a, b)
                | Node::Pow(a, b) => walk(a) && walk(b),
                Node::Call(_, args) => args.iter().all(walk),
            }
        }
        walk(&self.root)
    }

    pub fn eval(&self, args: &[f64]) -> f64 {
        let jets: Vec<Jet<1>> = args.iter().map(|&a| Jet::constant(a)).collect();
        self.eval_jet(&jets).value()
    }

    pub fn eval_jet<const N: usize>(&self, args: &[Jet<N>]) -> Jet<N> {
        debug_assert_eq!(args.len(), self.vars.len());
        eval_node(&self.root, args)
    }
}

fn eval_node<const N: usize>(n: &Node, args: &[Jet<N>]) -> Jet<N> {
    match n {
        Node::Num(v) => Jet::constant(*v),
        Node::Var(i) => args[*i],
        Node::Neg(a) => -eval_node(a, args),
        Node::Add(a, b) => eval_node(a, args) + eval_node(b, args),
        Node::Sub(a, b) => eval_node(a, args) - eval_node(b, args),
        Node::Mul(a, b) => eval_node(a, args) * eval_node(b, args),
        Node::Div(a, b) => eval_node(a, args) / eval_node(b, args),
        Node::Pow(a, b) => eval_node(a, args).pow(&eval_node(b, args)),
        Node::Call(f, xs) => {
            let a = eval_node(&xs[0], args);
            match f {
                Func::Exp => a.exp(),
                Func::Ln => a.ln(),
                Func::Sqrt => a.sqrt(),
                Func::Sin => a.sin_cos().0,
                Func::Cos => a.sin_cos().1,
                Func::Sinh => a.sinh_cosh().0,
                Func::Cosh => a.sinh_cosh().1,
                Func::Tanh => a.tanh(),
                Func::Pow => a.pow(&eval_node(&xs[1], args)),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
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
                .map_err(|_| Error::Expression(format!("bad number {text:?}")))?;
            out.push(Tok::Num(v));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^(),".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::Expression(format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Tok],
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Expression(format!("expected {c:?}")))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Node::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Node::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Node::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.peek_op() == Some('+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let e = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(e)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| Error::Expression("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek_op() == Some('(') {
                    let f = Func::from_name(&name)
                        .ok_or_else(|| Error::Expression(format!("unknown function {name:?}")))?;
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek_op() == Some(',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != f.arity() {
                        return Err(Error::Expression(format!(
                            "{name} takes {} argument(s), got {}",
                            f.arity(),
                            args.len()
                        )));
                    }
                    return Ok(Node::Call(f, args));
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    return Ok(Node::Var(i));
                }
                match name.as_str() {
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    _ => Err(Error::Expression(format!("unknown identifier {name:?}"))),
                }
            }
            Tok::Op(c) => Err(Error::Expression(format!("unexpected {c:?}"))),
        }
    }
}
