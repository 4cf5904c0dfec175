//! Recursive-descent parser for the formula grammar.
//!
//! Parsing is syntax-first; identifiers are resolved against a signature
//! afterwards. Positions in errors are byte offsets into the input.

use std::collections::BTreeSet;

use super::{Formula, Term};
use crate::error::{Error, Result};
use crate::sigstruct::Signature;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Eq,
    Neq,
    Bang,
    Amp,
    Bar,
    Arrow,
    DArrow,
    Forall,
    Exists,
    True,
    False,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::End => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Dot => ".",
            Tok::Eq => "=",
            Tok::Neq => "!=",
            Tok::Bang => "!",
            Tok::Amp => "&",
            Tok::Bar => "|",
            Tok::Arrow => "->",
            Tok::DArrow => "<->",
            Tok::Forall => "forall",
            Tok::Exists => "exists",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Ident(_) | Tok::End => "",
        }
    }
}

fn syntax(position: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        position,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'.' => Tok::Dot,
            b'=' => Tok::Eq,
            b'&' => Tok::Amp,
            b'|' => Tok::Bar,
            b'!' if bytes.get(i + 1) == Some(&b'=') => {
                i += 1;
                Tok::Neq
            }
            b'!' => Tok::Bang,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            b'<' if bytes.get(i + 1) == Some(&b'-') && bytes.get(i + 2) == Some(&b'>') => {
                i += 2;
                Tok::DArrow
            }
            c if c.is_ascii_alphabetic() => {
                while i + 1 < bytes.len()
                    && (bytes[i + 1].is_ascii_alphanumeric() || bytes[i + 1] == b'_')
                {
                    i += 1;
                }
                match &text[start..=i] {
                    "forall" => Tok::Forall,
                    "exists" => Tok::Exists,
                    "true" => Tok::True,
                    "false" => Tok::False,
                    word => Tok::Ident(word.to_string()),
                }
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(syntax(start, format!("unexpected character `{ch}`")));
            }
        };
        i += 1;
        out.push((tok, start));
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

#[derive(Debug, Clone)]
struct RawTerm {
    name: String,
    args: Option<Vec<RawTerm>>,
    pos: usize,
}

#[derive(Debug, Clone)]
enum Raw {
    True,
    False,
    Pred(RawTerm),
    Eq(RawTerm, RawTerm),
    Not(Box<Raw>),
    And(Box<Raw>, Box<Raw>),
    Or(Box<Raw>, Box<Raw>),
    Implies(Box<Raw>, Box<Raw>),
    Iff(Box<Raw>, Box<Raw>),
    Exists(String, usize, Box<Raw>),
    Forall(String, usize, Box<Raw>),
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn pos(&self) -> usize {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(syntax(
                self.pos(),
                format!(
                    "expected {}, found {}",
                    tok.describe(),
                    self.peek().describe()
                ),
            ))
        }
    }

    fn formula(&mut self) -> Result<Raw> {
        let mut left = self.implication()?;
        while *self.peek() == Tok::DArrow {
            self.bump();
            let right = self.implication()?;
            left = Raw::Iff(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn implication(&mut self) -> Result<Raw> {
        let left = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let right = self.implication()?;
            return Ok(Raw::Implies(Box::new(left), Box::new(right)));
        }
        Ok(left)
    }

    fn disjunction(&mut self) -> Result<Raw> {
        let mut left = self.conjunction()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let right = self.conjunction()?;
            left = Raw::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> Result<Raw> {
        let mut left = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let right = self.unary()?;
            left = Raw::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Raw> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Raw::Not(Box::new(self.unary()?)))
            }
            Tok::Forall | Tok::Exists => {
                let universal = *self.peek() == Tok::Forall;
                self.bump();
                let pos = self.pos();
                let var = match self.bump() {
                    Tok::Ident(name) => name,
                    other => {
                        return Err(syntax(
                            pos,
                            format!(
                                "expected a variable after quantifier, found {}",
                                other.describe()
                            ),
                        ))
                    }
                };
                self.expect(Tok::Dot)?;
                let body = Box::new(self.formula()?);
                Ok(if universal {
                    Raw::Forall(var, pos, body)
                } else {
                    Raw::Exists(var, pos, body)
                })
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Raw> {
        match self.peek().clone() {
            Tok::True => {
                self.bump();
                Ok(Raw::True)
            }
            Tok::False => {
                self.bump();
                Ok(Raw::False)
            }
            Tok::LParen => {
                self.bump();
                let inner = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(_) => {
                let left = self.term()?;
                match self.peek() {
                    Tok::Eq => {
                        self.bump();
                        Ok(Raw::Eq(left, self.term()?))
                    }
                    Tok::Neq => {
                        self.bump();
                        Ok(Raw::Not(Box::new(Raw::Eq(left, self.term()?))))
                    }
                    _ => Ok(Raw::Pred(left)),
                }
            }
            other => Err(syntax(
                self.pos(),
                format!("expected a formula, found {}", other.describe()),
            )),
        }
    }

    fn term(&mut self) -> Result<RawTerm> {
        let pos = self.pos();
        let name = match self.bump() {
            Tok::Ident(name) => name,
            other => {
                return Err(syntax(
                    pos,
                    format!("expected a term, found {}", other.describe()),
                ))
            }
        };
        if *self.peek() != Tok::LParen {
            return Ok(RawTerm {
                name,
                args: None,
                pos,
            });
        }
        self.bump();
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.term()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        Ok(RawTerm {
            name,
            args: Some(args),
            pos,
        })
    }
}

fn parse_raw(text: &str) -> Result<Raw> {
    let mut p = Parser {
        toks: tokenize(text)?,
        i: 0,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::End {
        return Err(syntax(
            p.pos(),
            format!("unexpected {} after formula", p.peek().describe()),
        ));
    }
    Ok(f)
}

enum Symbols<'a> {
    Fixed(&'a Signature),
    Infer {
        constants: &'a BTreeSet<String>,
        sig: &'a mut Signature,
    },
}

impl Symbols<'_> {
    fn sig(&self) -> &Signature {
        match self {
            Symbols::Fixed(s) => s,
            Symbols::Infer { sig, .. } => sig,
        }
    }

    fn is_symbol(&self, name: &str) -> bool {
        match self {
            Symbols::Fixed(s) => s.contains(name),
            Symbols::Infer { constants, sig } => sig.contains(name) || constants.contains(name),
        }
    }

    fn relation_atom(&mut self, t: &RawTerm) -> Result<Formula> {
        let args = t.args.as_deref().unwrap_or(&[]);
        if let Some(k) = self.sig().relation_arity(&t.name) {
            if t.args.is_none() || k != args.len() {
                return Err(Error::Arity {
                    symbol: t.name.clone(),
                    expected: k,
                    found: args.len(),
                });
            }
        } else if self.sig().function_arity(&t.name).is_some() {
            return Err(syntax(
                t.pos,
                format!("function symbol `{}` used as a formula", t.name),
            ));
        } else {
            match self {
                Symbols::Infer { constants, sig }
                    if t.args.is_some() && !constants.contains(&t.name) =>
                {
                    if args.is_empty() {
                        return Err(syntax(
                            t.pos,
                            format!("relation `{}` needs arguments", t.name),
                        ));
                    }
                    sig.add_relation(&t.name, args.len())?;
                }
                _ if t.args.is_none() => {
                    return Err(syntax(
                        t.pos,
                        format!("expected a formula, found term `{}`", t.name),
                    ))
                }
                _ => return Err(Error::UnknownSymbol(t.name.clone())),
            }
        }
        let terms = args
            .iter()
            .map(|a| self.term(a))
            .collect::<Result<Vec<_>>>()?;
        Ok(Formula::Atom(t.name.clone(), terms))
    }

    fn term(&mut self, t: &RawTerm) -> Result<Term> {
        if self.sig().relation_arity(&t.name).is_some() {
            return Err(syntax(
                t.pos,
                format!("relation symbol `{}` used as a term", t.name),
            ));
        }
        let found = t.args.as_ref().map_or(0, Vec::len);
        match self.sig().function_arity(&t.name) {
            Some(k) => {
                if k != found {
                    return Err(Error::Arity {
                        symbol: t.name.clone(),
                        expected: k,
                        found,
                    });
                }
            }
            None => match self {
                Symbols::Fixed(_) => {
                    if t.args.is_some() {
                        return Err(Error::UnknownSymbol(t.name.clone()));
                    }
                    return Ok(Term::Var(t.name.clone()));
                }
                Symbols::Infer { constants, sig } => {
                    if constants.contains(&t.name) {
                        if found != 0 {
                            return Err(Error::Arity {
                                symbol: t.name.clone(),
                                expected: 0,
                                found,
                            });
                        }
                        sig.add_function(&t.name, 0)?;
                    } else if t.args.is_some() {
                        sig.add_function(&t.name, found)?;
                    } else {
                        return Ok(Term::Var(t.name.clone()));
                    }
                }
            },
        }
        let args = t.args.as_deref().unwrap_or(&[]);
        let terms = args
            .iter()
            .map(|a| self.term(a))
            .collect::<Result<Vec<_>>>()?;
        Ok(Term::App(t.name.clone(), terms))
    }

    fn formula(&mut self, raw: &Raw) -> Result<Formula> {
        Ok(match raw {
            Raw::True => Formula::True,
            Raw::False => Formula::False,
            Raw::Pred(t) => self.relation_atom(t)?,
            Raw::Eq(a, b) => Formula::Eq(self.term(a)?, self.term(b)?),
            Raw::Not(a) => self.formula(a)?.not(),
            Raw::And(a, b) => self.formula(a)?.and(self.formula(b)?),
            Raw::Or(a, b) => self.formula(a)?.or(self.formula(b)?),
            Raw::Implies(a, b) => self.formula(a)?.implies(self.formula(b)?),
            Raw::Iff(a, b) => self.formula(a)?.iff(self.formula(b)?),
            Raw::Exists(v, pos, body) | Raw::Forall(v, pos, body) => {
                if self.is_symbol(v) {
                    return Err(syntax(*pos, format!("cannot quantify over symbol `{v}`")));
                }
                let body = self.formula(body)?;
                if matches!(raw, Raw::Exists(..)) {
                    Formula::exists(v, body)
                } else {
                    Formula::forall(v, body)
                }
            }
        })
    }
}

/// Parses `text` against a fixed signature. Undeclared identifiers in term
/// position are variables.
pub fn parse_formula(text: &str, signature: &Signature) -> Result<Formula> {
    let raw = parse_raw(text)?;
    Symbols::Fixed(signature).formula(&raw)
}

/// Parses `text`, extending `signature` with relation and function symbols
/// inferred from their use. Names in `constants` are constant symbols.
pub fn parse_formula_inferring(
    text: &str,
    constants: &BTreeSet<String>,
    signature: &mut Signature,
) -> Result<Formula> {
    let raw = parse_raw(text)?;
    Symbols::Infer {
        constants,
        sig: signature,
    }
    .formula(&raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn v(name: &str) -> Term {
        Term::var(name)
    }

    fn sig2() -> Signature {
        fixtures::fix2().signature().clone()
    }

    #[test]
    fn conjunction_with_negation() {
        let f = parse_formula("R(x,y) & !R(y,x)", &sig2()).unwrap();
        let r = |a: &str, b: &str| Formula::atom("R", vec![v(a), v(b)]);
        assert_eq!(f, r("x", "y").and(r("y", "x").not()));
    }

    #[test]
    fn existential_binds_z() {
        let f = parse_formula("exists z. (R(x,z) & R(z,y))", &sig2()).unwrap();
        match &f {
            Formula::Exists(z, _) => assert_eq!(z, "z"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(!f.free_vars().contains("z"));
    }

    #[test]
    fn function_equality() {
        let sig = fixtures::fix1().signature().clone();
        let f = parse_formula("f(x) = y", &sig).unwrap();
        assert_eq!(f, Formula::eq(Term::app("f", vec![v("x")]), v("y")));
    }

    #[test]
    fn precedence_and_associativity() {
        let s = sig2();
        let p = |t: &str| parse_formula(t, &s).unwrap();
        assert_eq!(
            p("R(x,y) | R(y,x) & R(x,x)"),
            p("R(x,y) | (R(y,x) & R(x,x))")
        );
        assert_eq!(
            p("R(x,y) -> R(y,x) -> R(x,x)"),
            p("R(x,y) -> (R(y,x) -> R(x,x))")
        );
        assert_eq!(
            p("R(x,y) <-> R(y,x) <-> R(x,x)"),
            p("(R(x,y) <-> R(y,x)) <-> R(x,x)")
        );
        assert_eq!(
            p("R(x,y) & exists z. R(x,z) | R(z,y)"),
            p("R(x,y) & (exists z. (R(x,z) | R(z,y)))")
        );
        assert_eq!(p("x != y"), Formula::neq(v("x"), v("y")));
        assert_eq!(p("!x = y"), Formula::neq(v("x"), v("y")));
    }

    #[test]
    fn errors() {
        let s = sig2();
        assert!(matches!(
            parse_formula("R(x,", &s),
            Err(Error::Syntax { position: 4, .. })
        ));
        assert!(matches!(parse_formula("S(x)", &s), Err(Error::UnknownSymbol(n)) if n == "S"));
        assert!(matches!(parse_formula("g(x) = y", &s), Err(Error::UnknownSymbol(n)) if n == "g"));
        assert!(matches!(
            parse_formula("R(x)", &s),
            Err(Error::Arity {
                expected: 2,
                found: 1,
                ..
            })
        ));
        assert!(matches!(parse_formula("x", &s), Err(Error::Syntax { .. })));
        assert!(matches!(
            parse_formula("R(x,y) R", &s),
            Err(Error::Syntax { .. })
        ));
        assert!(matches!(
            parse_formula("x # y", &s),
            Err(Error::Syntax { position: 2, .. })
        ));
        assert!(matches!(
            parse_formula("exists R. true", &s),
            Err(Error::Syntax { .. })
        ));
        let s1 = fixtures::fix1().signature().clone();
        assert!(matches!(
            parse_formula("f(x,y) = y", &s1),
            Err(Error::Arity { .. })
        ));
    }

    #[test]
    fn inference_mode() {
        let constants: BTreeSet<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let mut sig = Signature::new();
        let f = parse_formula_inferring("R(a,f(b)) & !(a = b)", &constants, &mut sig).unwrap();
        assert_eq!(sig.relation_arity("R"), Some(2));
        assert_eq!(sig.function_arity("f"), Some(1));
        assert_eq!(sig.function_arity("a"), Some(0));
        assert!(f.free_vars().is_empty());
        assert!(parse_formula_inferring("R(a)", &constants, &mut sig).is_err());
        let g = parse_formula_inferring("exists x. R(x,a)", &constants, &mut sig).unwrap();
        assert!(g.free_vars().is_empty());
    }

    #[test]
    fn unparse_parse_round_trip() {
        let s = sig2();
        for text in [
            "R(x,y) & !R(y,x)",
            "exists z. R(x,z) & R(z,y)",
            "(exists z. R(x,z)) & R(z,y)",
            "forall x. exists y. R(x,y)",
            "R(x,y) -> R(y,x) | x = y",
            "(R(x,y) <-> R(y,x)) <-> true",
            "!(R(x,y) & false)",
            "x != y & !!x = y",
        ] {
            let f = parse_formula(text, &s).unwrap();
            let again = parse_formula(&f.unparse(), &s).unwrap();
            assert_eq!(f, again, "round trip of {text}");
        }
    }
}
