//! Radial closed forms in `|x|`: numbers, the symbols `d`, `beta`, `p`,
//! `+ - * / ^` and parentheses, e.g. `d^(-2|x|)` or `3*|x|^(-1.5) + 0.5^|x|`.
//! `|x|` raised to a negative power is read as `max(|x|, 1)`.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Radius,
    Sym(String),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprError(pub String);

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Values of the symbols an expression may use.
#[derive(Debug, Clone, Default)]
pub struct Symbols {
    pub d: Option<f64>,
    pub beta: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Radius,
    Op(char),
}

fn lex(s: &str) -> Result<Vec<Tok>, ExprError> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '|' {
            let rest: String = chars[i..].iter().take(3).collect();
            if rest != "|x|" {
                return Err(ExprError(format!("expected |x| at offset {i}")));
            }
            out.push(Tok::Radius);
            i += 3;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
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
            out.push(Tok::Num(text.parse().map_err(|_| ExprError(format!("bad number {text:?}")))?));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(ExprError(format!("unexpected {c:?} at offset {i}")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.product()?;
        loop {
            if self.eat('+') {
                lhs = Node::Bin('+', Box::new(lhs), Box::new(self.product()?));
            } else if self.eat('-') {
                lhs = Node::Bin('-', Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Node::Bin('*', Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Node::Bin('/', Box::new(lhs), Box::new(self.unary()?));
            } else if matches!(self.peek(), Some(Tok::Radius | Tok::Ident(_) | Tok::Num(_)) | Some(Tok::Op('('))) {
                // juxtaposition, as in `2|x|`
                lhs = Node::Bin('*', Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.eat('+');
        self.power()
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            // right associative, binds tighter than unary minus on the left
            let exp = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let tok = self.peek().cloned();
        self.pos += 1;
        match tok {
            Some(Tok::Num(v)) => Ok(Node::Num(v)),
            Some(Tok::Radius) => Ok(Node::Radius),
            Some(Tok::Ident(name)) => match name.as_str() {
                "d" | "beta" | "p" => Ok(Node::Sym(name)),
                _ => Err(ExprError(format!("unknown symbol {name:?}; use d, beta, p or |x|"))),
            },
            Some(Tok::Op('(')) => {
                let inner = self.sum()?;
                if !self.eat(')') {
                    return Err(ExprError("missing )".into()));
                }
                Ok(inner)
            }
            other => Err(ExprError(format!("unexpected {other:?}"))),
        }
    }
}

impl Expr {
    pub fn parse(s: &str) -> Result<Self, ExprError> {
        let mut parser = Parser { toks: lex(s)?, pos: 0 };
        if parser.toks.is_empty() {
            return Err(ExprError("empty expression".into()));
        }
        let root = parser.sum()?;
        if parser.pos != parser.toks.len() {
            return Err(ExprError(format!("trailing input in {s:?}")));
        }
        Ok(Self { root })
    }

    pub fn eval(&self, radius: usize, sym: &Symbols) -> Result<f64, ExprError> {
        eval(&self.root, radius as f64, sym)
    }
}

fn eval(n: &Node, r: f64, sym: &Symbols) -> Result<f64, ExprError> {
    let missing = |s: &str| ExprError(format!("symbol {s} is not defined for this task"));
    Ok(match n {
        Node::Num(v) => *v,
        Node::Radius => r,
        Node::Sym(s) => match s.as_str() {
            "d" => sym.d.ok_or_else(|| missing("d"))?,
            "beta" => sym.beta.ok_or_else(|| missing("beta"))?,
            _ => sym.p.ok_or_else(|| missing("p"))?,
        },
        Node::Neg(a) => -eval(a, r, sym)?,
        Node::Bin(op, a, b) => {
            let rhs = eval(b, r, sym)?;
            let lhs = if *op == '^' && **a == Node::Radius && rhs < 0.0 { r.max(1.0) } else { eval(a, r, sym)? };
            match op {
                '+' => lhs + rhs,
                '-' => lhs - rhs,
                '*' => lhs * rhs,
                '/' => lhs / rhs,
                _ => lhs.powf(rhs),
            }
        }
    })
}
