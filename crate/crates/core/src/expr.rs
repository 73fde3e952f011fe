//! Parser and evaluator for scalar expressions of one variable `t`.
//!
//! Used for coefficient-matrix entries, custom growth rates, and integrated
//! exponent functions. Hand-written recursive descent with Pratt-style
//! precedence so parse errors carry exact byte offsets.
//!
//! Grammar (EBNF), loosest to tightest binding:
//!
//! ```text
//! expr   := term   { ("+" | "-") term }
//! term   := factor { ("*" | "/") factor }
//! factor := "-" factor | power
//! power  := atom [ "^" factor ]            ; right-associative
//! atom   := number | "t" | "pi" | "e"
//!         | func "(" expr [ "," expr ] ")"
//!         | "(" expr ")"
//! func   := "ln" | "exp" | "sqrt" | "abs" | "sin" | "cos" | "pow"
//! number := digits [ "." digits ] [ ("e"|"E") ["+"|"-"] digits ]
//! ```
//!
//! `^` binds tighter than unary minus, so `-t^2` parses as `-(t^2)`, and
//! `2^3^2` is `2^(3^2) = 512`. Whitespace is insignificant.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Ln,
    Exp,
    Sqrt,
    Abs,
    Sin,
    Cos,
    Pow,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Ln => "ln",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Pow => "pow",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Pow => 2,
            _ => 1,
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "ln" => Func::Ln,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "pow" => Func::Pow,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedConst {
    Pi,
    E,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression AST. Immutable and cheap to share.
#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    Const(f64),
    Named(NamedConst),
    Var,
    Neg(Arc<Ast>),
    Bin(BinOp, Arc<Ast>, Arc<Ast>),
    Call(Func, Vec<Ast>),
}

/// A parsed expression of the single variable `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    ast: Arc<Ast>,
    text: String,
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = lex(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let ast = p.expr()?;
        p.expect_eof()?;
        Ok(Expr {
            ast: Arc::new(ast),
            text: text.to_string(),
        })
    }

    pub fn from_ast(ast: Ast) -> Expr {
        let text = print_ast(&ast, 0);
        Expr {
            ast: Arc::new(ast),
            text,
        }
    }

    pub fn ast(&self) -> &Ast {
        &self.ast
    }

    /// The original source text (or the printed form for synthesized ASTs).
    pub fn source(&self) -> &str {
        &self.text
    }

    pub fn eval<T: Real>(&self, t: T) -> Result<T> {
        eval_ast(&self.ast, t)
    }

    /// Render the AST back to parseable text.
    pub fn print(&self) -> String {
        print_ast(&self.ast, 0)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn eval_ast<T: Real>(ast: &Ast, t: T) -> Result<T> {
    let v = match ast {
        Ast::Const(c) => T::of(*c),
        Ast::Named(NamedConst::Pi) => T::of(std::f64::consts::PI),
        Ast::Named(NamedConst::E) => T::of(std::f64::consts::E),
        Ast::Var => t,
        Ast::Neg(x) => -eval_ast(x, t)?,
        Ast::Bin(op, a, b) => {
            let a = eval_ast(a, t)?;
            let b = eval_ast(b, t)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == T::zero() {
                        return Err(Error::Eval("division by zero".into()));
                    }
                    a / b
                }
                BinOp::Pow => a.powf(b),
            }
        }
        Ast::Call(f, args) => {
            let a = eval_ast(&args[0], t)?;
            match f {
                Func::Ln => {
                    if a <= T::zero() {
                        return Err(Error::Eval(format!("ln of nonpositive value {a}")));
                    }
                    a.ln()
                }
                Func::Exp => a.exp(),
                Func::Sqrt => {
                    if a < T::zero() {
                        return Err(Error::Eval(format!("sqrt of negative value {a}")));
                    }
                    a.sqrt()
                }
                Func::Abs => a.abs(),
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Pow => {
                    let b = eval_ast(&args[1], t)?;
                    a.powf(b)
                }
            }
        }
    };
    if !v.is_finite() {
        return Err(Error::Eval(format!("non-finite value {v} at t = {t}")));
    }
    Ok(v)
}

// Precedence levels for printing: 1 additive, 2 multiplicative, 3 unary
// minus, 4 power, 5 atom.
fn print_ast(ast: &Ast, min_prec: u8) -> String {
    let (prec, body) = match ast {
        // a negative literal prints with a leading '-', so it binds like a
        // unary minus when reparsed
        Ast::Const(c) => (if c.is_sign_negative() { 3 } else { 5 }, format!("{c:?}")),
        Ast::Named(NamedConst::Pi) => (5, "pi".to_string()),
        Ast::Named(NamedConst::E) => (5, "e".to_string()),
        Ast::Var => (5, "t".to_string()),
        Ast::Neg(x) => (3, format!("-{}", print_ast(x, 3))),
        Ast::Bin(op, a, b) => {
            let (p, sym) = match op {
                BinOp::Add => (1, "+"),
                BinOp::Sub => (1, "-"),
                BinOp::Mul => (2, "*"),
                BinOp::Div => (2, "/"),
                BinOp::Pow => (4, "^"),
            };
            let s = if *op == BinOp::Pow {
                // right-associative; lhs must be an atom
                format!("{}{}{}", print_ast(a, 5), sym, print_ast(b, 4))
            } else {
                format!("{}{}{}", print_ast(a, p), sym, print_ast(b, p + 1))
            };
            (p, s)
        }
        Ast::Call(f, args) => {
            let rendered: Vec<String> = args.iter().map(|a| print_ast(a, 0)).collect();
            (5, format!("{}({})", f.name(), rendered.join(",")))
        }
    };
    if prec < min_prec {
        format!("({body})")
    } else {
        body
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'+' => {
                out.push((Tok::Plus, i));
                i += 1;
            }
            b'-' => {
                out.push((Tok::Minus, i));
                i += 1;
            }
            b'*' => {
                out.push((Tok::Star, i));
                i += 1;
            }
            b'/' => {
                out.push((Tok::Slash, i));
                i += 1;
            }
            b'^' => {
                out.push((Tok::Caret, i));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, i));
                i += 1;
            }
            b'0'..=b'9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    if i >= bytes.len() || !bytes[i].is_ascii_digit() {
                        return Err(Error::Parse {
                            offset: i,
                            expected: "digit after decimal point".into(),
                            found: token_at(text, i),
                        });
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    // exponent only if followed by digits (with optional sign)
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s = &text[start..i];
                let v: f64 = s.parse().map_err(|_| Error::Parse {
                    offset: start,
                    expected: "numeric literal".into(),
                    found: format!("'{s}'"),
                })?;
                out.push((Tok::Num(v), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                return Err(Error::Parse {
                    offset: i,
                    expected: "operator, number, or identifier".into(),
                    found: token_at(text, i),
                });
            }
        }
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

fn token_at(text: &str, offset: usize) -> String {
    match text[offset..].chars().next() {
        Some(c) => format!("'{c}'"),
        None => "end of input".into(),
    }
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, usize) {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, expected: &str) -> Error {
        let (tok, offset) = self.peek();
        Error::Parse {
            offset: *offset,
            expected: expected.into(),
            found: tok.describe(),
        }
    }

    fn expect(&mut self, want: Tok, expected: &str) -> Result<()> {
        if self.peek().0 == want {
            self.bump();
            Ok(())
        } else {
            Err(self.err_here(expected))
        }
    }

    fn expect_eof(&mut self) -> Result<()> {
        if self.peek().0 == Tok::Eof {
            Ok(())
        } else {
            Err(self.err_here("end of input or binary operator"))
        }
    }

    fn expr(&mut self) -> Result<Ast> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().0 {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Ast::Bin(op, Arc::new(lhs), Arc::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Ast> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().0 {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Ast::Bin(op, Arc::new(lhs), Arc::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Ast> {
        if self.peek().0 == Tok::Minus {
            self.bump();
            let inner = self.factor()?;
            return Ok(Ast::Neg(Arc::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast> {
        let base = self.atom()?;
        if self.peek().0 == Tok::Caret {
            self.bump();
            // right-associative; allow unary minus in the exponent
            let exponent = self.factor()?;
            return Ok(Ast::Bin(BinOp::Pow, Arc::new(base), Arc::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Ast> {
        match self.peek().0.clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Ast::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    self.bump();
                    self.expect(Tok::LParen, "'(' after function name")?;
                    let mut args = vec![self.expr()?];
                    while self.peek().0 == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(Tok::RParen, "')'")?;
                    if args.len() != f.arity() {
                        let (_, offset) = *self.peek();
                        return Err(Error::Parse {
                            offset,
                            expected: format!("{} argument(s) to {}", f.arity(), f.name()),
                            found: format!("{} argument(s)", args.len()),
                        });
                    }
                    return Ok(Ast::Call(f, args));
                }
                match name.as_str() {
                    "t" => {
                        self.bump();
                        Ok(Ast::Var)
                    }
                    "pi" => {
                        self.bump();
                        Ok(Ast::Named(NamedConst::Pi))
                    }
                    "e" => {
                        self.bump();
                        Ok(Ast::Named(NamedConst::E))
                    }
                    _ => Err(self.err_here("'t', 'pi', 'e', or a function name")),
                }
            }
            _ => Err(self.err_here("number, 't', constant, function call, or '('")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const E: f64 = std::f64::consts::E;

    #[test]
    fn paper_log_coefficient_entry() {
        // at t = e - 1: (1+t) = e and ln(1+t) = 1, so the value is -1/e
        let e = Expr::parse("-1/((1+t)*ln(1+t))").unwrap();
        assert_relative_eq!(e.eval(E - 1.0).unwrap(), -1.0 / E, max_relative = 1e-14);
    }

    #[test]
    fn variable_passthrough() {
        assert_eq!(Expr::parse("t").unwrap().eval(7.0).unwrap(), 7.0);
    }

    #[test]
    fn caret_is_right_associative() {
        assert_eq!(Expr::parse("2^3^2").unwrap().eval(0.0).unwrap(), 512.0);
    }

    #[test]
    fn unary_minus_binds_looser_than_caret() {
        // -t^2 means -(t^2)
        assert_eq!(Expr::parse("-t^2").unwrap().eval(3.0).unwrap(), -9.0);
        let a = Expr::parse("-t^2").unwrap();
        let b = Expr::parse("-(t^2)").unwrap();
        for t in [0.5, 1.0, 2.0, 4.2] {
            assert_eq!(a.eval(t).unwrap(), b.eval(t).unwrap());
        }
    }

    #[test]
    fn mul_binds_tighter_than_add() {
        let a = Expr::parse("1+2*t").unwrap();
        let b = Expr::parse("1+(2*t)").unwrap();
        for t in [0.0, 1.5, -2.0] {
            assert_eq!(a.eval(t).unwrap(), b.eval(t).unwrap());
        }
    }

    #[test]
    fn exp_and_ln() {
        assert_eq!(Expr::parse("exp(t)").unwrap().eval(0.0).unwrap(), 1.0);
        assert_relative_eq!(
            Expr::parse("ln(1+t)").unwrap().eval(E - 1.0).unwrap(),
            1.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn division_by_zero_is_eval_error() {
        let e = Expr::parse("1/t").unwrap();
        assert!(matches!(e.eval(0.0), Err(Error::Eval(_))));
    }

    #[test]
    fn ln_and_sqrt_domain_errors() {
        assert!(Expr::parse("ln(t)").unwrap().eval(-1.0).is_err());
        assert!(Expr::parse("ln(t)").unwrap().eval(0.0).is_err());
        assert!(Expr::parse("sqrt(t)").unwrap().eval(-2.0).is_err());
    }

    #[test]
    fn overflow_is_eval_error() {
        assert!(Expr::parse("exp(t)").unwrap().eval(1e9).is_err());
    }

    #[test]
    fn pow_call_two_args() {
        assert_eq!(Expr::parse("pow(t,3)").unwrap().eval(2.0).unwrap(), 8.0);
        assert!(Expr::parse("pow(t)").is_err());
        assert!(Expr::parse("ln(t,1)").is_err());
    }

    #[test]
    fn named_constants() {
        assert_relative_eq!(
            Expr::parse("cos(pi)").unwrap().eval(0.0).unwrap(),
            -1.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            Expr::parse("ln(e)").unwrap().eval(0.0).unwrap(),
            1.0,
            max_relative = 1e-15
        );
    }

    #[test]
    fn number_literal_forms() {
        assert_eq!(Expr::parse("1e3").unwrap().eval(0.0).unwrap(), 1000.0);
        assert_eq!(Expr::parse("2.5E-1").unwrap().eval(0.0).unwrap(), 0.25);
        assert_eq!(Expr::parse("1.25").unwrap().eval(0.0).unwrap(), 1.25);
    }

    #[test]
    fn parse_error_offsets() {
        match Expr::parse("1+*2") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        match Expr::parse("ln(1") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        match Expr::parse("2 $ 3") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        match Expr::parse("foo(t)") {
            Err(Error::Parse { offset, expected, .. }) => {
                assert_eq!(offset, 0);
                assert!(exp_contains(&expected, "function"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    fn exp_contains(expected: &str, needle: &str) -> bool {
        expected.contains(needle)
    }

    #[test]
    fn negative_exponent_without_parens() {
        assert_relative_eq!(
            Expr::parse("2^-3").unwrap().eval(0.0).unwrap(),
            0.125,
            max_relative = 1e-15
        );
    }

    // random ASTs of bounded depth for the round-trip property
    fn arb_ast() -> impl Strategy<Value = Ast> {
        let leaf = prop_oneof![
            (-5.0f64..5.0).prop_map(Ast::Const),
            Just(Ast::Var),
            Just(Ast::Named(NamedConst::Pi)),
            Just(Ast::Named(NamedConst::E)),
        ];
        leaf.prop_recursive(5, 64, 8, |inner| {
            prop_oneof![
                inner.clone().prop_map(|x| Ast::Neg(Arc::new(x))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Bin(
                    BinOp::Add,
                    Arc::new(a),
                    Arc::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Bin(
                    BinOp::Sub,
                    Arc::new(a),
                    Arc::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Bin(
                    BinOp::Mul,
                    Arc::new(a),
                    Arc::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Bin(
                    BinOp::Div,
                    Arc::new(a),
                    Arc::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Bin(
                    BinOp::Pow,
                    Arc::new(a),
                    Arc::new(b)
                )),
                inner.clone().prop_map(|x| Ast::Call(Func::Ln, vec![x])),
                inner.clone().prop_map(|x| Ast::Call(Func::Exp, vec![x])),
                inner.clone().prop_map(|x| Ast::Call(Func::Sqrt, vec![x])),
                inner.clone().prop_map(|x| Ast::Call(Func::Abs, vec![x])),
                inner.clone().prop_map(|x| Ast::Call(Func::Sin, vec![x])),
                inner.clone().prop_map(|x| Ast::Call(Func::Cos, vec![x])),
                (inner.clone(), inner).prop_map(|(a, b)| Ast::Call(Func::Pow, vec![a, b])),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn print_parse_round_trip(ast in arb_ast()) {
            let original = Expr::from_ast(ast);
            let reparsed = Expr::parse(&original.print()).unwrap();
            // evaluation-equal on 10 probe points (errors must agree too)
            for k in 0..10 {
                let t = -4.5 + (k as f64);
                match (original.eval(t), reparsed.eval(t)) {
                    (Ok(a), Ok(b)) => {
                        let scale = a.abs().max(1.0);
                        prop_assert!((a - b).abs() <= 1e-12 * scale,
                            "mismatch at t={t}: {a} vs {b} for {}", original.print());
                    }
                    (Err(_), Err(_)) => {}
                    (a, b) => prop_assert!(false,
                        "result class mismatch at t={t}: {a:?} vs {b:?} for {}", original.print()),
                }
            }
        }
    }
}
