//! Small arithmetic expression language for user-supplied data and fields.
//!
//! Grammar: numbers, named variables, `+ - * / ^` (with `^` right
//! associative and binding tighter than unary minus), parentheses, and calls
//! `sin cos tan exp log sqrt abs sinh cosh tanh sign min max spow`.
//! `pi` and `e` are constants. When the variable list contains `x1`, `x2`,
//! `x3`, the aliases `x`, `y`, `z` refer to them.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sinh,
    Cosh,
    Tanh,
    Sign,
    Min,
    Max,
    Spow,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "sin" => (Func::Sin, 1),
            "cos" => (Func::Cos, 1),
            "tan" => (Func::Tan, 1),
            "exp" => (Func::Exp, 1),
            "log" | "ln" => (Func::Log, 1),
            "sqrt" => (Func::Sqrt, 1),
            "abs" => (Func::Abs, 1),
            "sinh" => (Func::Sinh, 1),
            "cosh" => (Func::Cosh, 1),
            "tanh" => (Func::Tanh, 1),
            "sign" => (Func::Sign, 1),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            "spow" => (Func::Spow, 2),
            _ => return None,
        })
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

/// A parsed expression bound to an ordered list of variable names.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    names: Vec<String>,
    root: Node,
}

impl Expr {
    /// Parses `src`; every identifier must be a function, a constant, or one
    /// of `names` (or an alias of one).
    pub fn parse(src: &str, names: &[&str]) -> Result<Self> {
        let tokens = tokenize(src)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            names,
        };
        let root = p.expr()?;
        if let Some(tok) = p.tokens.get(p.pos) {
            return Err(Error::Expr(format!(
                "unexpected '{}' at column {} in \"{src}\"",
                tok.text(),
                tok.column
            )));
        }
        Ok(Self {
            source: src.to_string(),
            names: names.iter().map(|s| s.to_string()).collect(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Whether the expression reads variable `name`.
    pub fn uses(&self, name: &str) -> bool {
        match self.names.iter().position(|n| n == name) {
            Some(i) => uses(&self.root, i),
            None => false,
        }
    }

    /// Evaluates with `vars[i]` bound to the `i`-th name.
    pub fn eval<T: Scalar>(&self, vars: &[T]) -> T {
        eval(&self.root, vars)
    }
}

fn uses(node: &Node, i: usize) -> bool {
    match node {
        Node::Num(_) => false,
        Node::Var(j) => *j == i,
        Node::Neg(a) => uses(a, i),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            uses(a, i) || uses(b, i)
        }
        Node::Call(_, args) => args.iter().any(|a| uses(a, i)),
    }
}

fn eval<T: Scalar>(node: &Node, vars: &[T]) -> T {
    match node {
        Node::Num(v) => T::lit(*v),
        Node::Var(i) => vars[*i],
        Node::Neg(a) => -eval(a, vars),
        Node::Add(a, b) => eval(a, vars) + eval(b, vars),
        Node::Sub(a, b) => eval(a, vars) - eval(b, vars),
        Node::Mul(a, b) => eval(a, vars) * eval(b, vars),
        Node::Div(a, b) => eval(a, vars) / eval(b, vars),
        Node::Pow(a, b) => {
            let (base, ex) = (eval(a, vars), eval(b, vars));
            if ex.fract() == T::zero() && ex.abs() <= T::lit(64.0) {
                base.powi(ex.to_i32().unwrap_or(0))
            } else {
                base.powf(ex)
            }
        }
        Node::Call(f, args) => {
            let a = eval(&args[0], vars);
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tan => a.tan(),
                Func::Exp => a.exp(),
                Func::Log => a.ln(),
                Func::Sqrt => a.sqrt(),
                Func::Abs => a.abs(),
                Func::Sinh => a.sinh(),
                Func::Cosh => a.cosh(),
                Func::Tanh => a.tanh(),
                Func::Sign => {
                    if a > T::zero() {
                        T::one()
                    } else if a < T::zero() {
                        -T::one()
                    } else {
                        T::zero()
                    }
                }
                Func::Min => a.min(eval(&args[1], vars)),
                Func::Max => a.max(eval(&args[1], vars)),
                Func::Spow => crate::algebra::spow_unchecked(a, eval(&args[1], vars)),
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

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    column: usize,
}

impl Token {
    fn text(&self) -> String {
        match &self.tok {
            Tok::Num(v) => v.to_string(),
            Tok::Ident(s) => s.clone(),
            Tok::Op(c) => c.to_string(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
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
            let value = text
                .parse::<f64>()
                .map_err(|_| Error::Expr(format!("bad number '{text}' at column {column}")))?;
            out.push(Token {
                tok: Tok::Num(value),
                column,
            });
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                column,
            });
        } else if "+-*/^(),".contains(c) {
            out.push(Token {
                tok: Tok::Op(c),
                column,
            });
            i += 1;
        } else {
            return Err(Error::Expr(format!(
                "unexpected character '{c}' at column {column} in \"{src}\""
            )));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    names: &'a [&'a str],
}

impl Parser<'_> {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token { tok: Tok::Op(c), .. }) => Some(*c),
            _ => None,
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{op}'")))
        }
    }

    fn error(&self, what: &str) -> Error {
        match self.tokens.get(self.pos) {
            Some(t) => Error::Expr(format!("{what} at column {}, found '{}'", t.column, t.text())),
            None => Error::Expr(format!("{what} at end of input")),
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
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let Some(token) = self.tokens.get(self.pos).cloned() else {
            return Err(self.error("expected a value"));
        };
        match token.tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Node::Num(v))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                if self.peek_op() == Some('(') {
                    let Some((func, arity)) = Func::lookup(&name) else {
                        return Err(Error::Expr(format!(
                            "unknown function '{name}' at column {}",
                            token.column
                        )));
                    };
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek_op() == Some(',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != arity {
                        return Err(Error::Expr(format!(
                            "'{name}' takes {arity} argument(s), got {} at column {}",
                            args.len(),
                            token.column
                        )));
                    }
                    return Ok(Node::Call(func, args));
                }
                self.variable(&name, token.column)
            }
            Tok::Op(_) => Err(self.error("expected a value")),
        }
    }

    fn variable(&self, name: &str, column: usize) -> Result<Node> {
        if let Some(i) = self.names.iter().position(|n| *n == name) {
            return Ok(Node::Var(i));
        }
        let alias = match name {
            "x" => Some("x1"),
            "y" => Some("x2"),
            "z" => Some("x3"),
            _ => None,
        };
        if let Some(i) = alias.and_then(|a| self.names.iter().position(|n| *n == a)) {
            return Ok(Node::Var(i));
        }
        match name {
            "pi" => Ok(Node::Num(std::f64::consts::PI)),
            "e" => Ok(Node::Num(std::f64::consts::E)),
            _ => Err(Error::Expr(format!(
                "unknown variable '{name}' at column {column} (allowed: {})",
                self.names.join(", ")
            ))),
        }
    }
}
