//! Recursive-descent parser for the formula grammar.
//!
//! ```text
//! or      := and ('|' and)*
//! and     := unary ('&' unary)*
//! unary   := '!' unary | primary
//! primary := '(' or ')' | ('G' | 'F') '[' num ',' num ']' '(' or ')'
//!          | 'true' | 'false' | ident
//! ```
//!
//! A chain of one operator becomes a single n-ary node; a parenthesized
//! group stays a separate node.

use std::collections::{BTreeMap, HashMap};

use super::{Expr, Formula, FormulaError, Predicate};

#[derive(Clone, Debug)]
pub struct ParseOptions {
    /// Seconds per step; temporal bounds are written in seconds.
    pub dt: f64,
    /// Named subformulas that may be referenced like predicates.
    pub definitions: BTreeMap<String, String>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            dt: 1.0,
            definitions: BTreeMap::new(),
        }
    }
}

/// Parses with `dt = 1`, so bounds are read directly as steps.
pub fn parse_formula(
    text: &str,
    predicates: &HashMap<String, Predicate>,
) -> Result<Formula, FormulaError> {
    parse_formula_with(text, predicates, &ParseOptions::default())
}

pub fn parse_formula_with(
    text: &str,
    predicates: &HashMap<String, Predicate>,
    opts: &ParseOptions,
) -> Result<Formula, FormulaError> {
    let mut stack = Vec::new();
    let expr = parse_expr(text, predicates, opts, &mut stack)?;
    Formula::new(expr)
}

fn parse_expr(
    text: &str,
    predicates: &HashMap<String, Predicate>,
    opts: &ParseOptions,
    stack: &mut Vec<String>,
) -> Result<Expr, FormulaError> {
    let mut p = Parser {
        src: text,
        pos: 0,
        predicates,
        opts,
        stack,
    };
    let e = p.or()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a, 's> {
    src: &'a str,
    pos: usize,
    predicates: &'a HashMap<String, Predicate>,
    opts: &'a ParseOptions,
    stack: &'s mut Vec<String>,
}

impl<'a> Parser<'a, '_> {
    fn error(&self, msg: impl Into<String>) -> FormulaError {
        FormulaError::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), FormulaError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn or(&mut self) -> Result<Expr, FormulaError> {
        let mut items = vec![self.and()?];
        while self.eat('|') {
            items.push(self.and()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::Or(items)
        })
    }

    fn and(&mut self) -> Result<Expr, FormulaError> {
        let mut items = vec![self.unary()?];
        while self.eat('&') {
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            Expr::And(items)
        })
    }

    fn unary(&mut self) -> Result<Expr, FormulaError> {
        if self.eat('!') {
            return Ok(Expr::not(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, FormulaError> {
        if self.eat('(') {
            let e = self.or()?;
            self.expect(')')?;
            return Ok(e);
        }
        self.skip_ws();
        let ident = self
            .ident()
            .ok_or_else(|| self.error("expected an operand"))?;
        if ident == "G" || ident == "F" {
            self.skip_ws();
            if self.peek() == Some('[') {
                return self.temporal(ident == "G");
            }
        }
        match ident {
            "true" => return Ok(Expr::True),
            "false" => return Ok(Expr::False),
            _ => {}
        }
        if let Some(p) = self.predicates.get(ident) {
            return Ok(Expr::Pred(p.clone()));
        }
        if let Some(body) = self.opts.definitions.get(ident) {
            if self.stack.iter().any(|s| s == ident) {
                return Err(FormulaError::RecursiveDefinition(ident.to_string()));
            }
            self.stack.push(ident.to_string());
            let e =
                parse_expr(body, self.predicates, self.opts, self.stack).map_err(|e| match e {
                    FormulaError::Syntax { pos, msg } => FormulaError::Syntax {
                        pos,
                        msg: format!("in definition `{ident}`: {msg}"),
                    },
                    other => other,
                })?;
            self.stack.pop();
            return Ok(e);
        }
        Err(FormulaError::UnknownPredicate(ident.to_string()))
    }

    fn ident(&mut self) -> Option<&'a str> {
        let src: &'a str = self.src;
        let rest = &src[self.pos..];
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, c)) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return None,
        }
        let end = chars
            .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
            .map_or(rest.len(), |(i, _)| i);
        self.pos += end;
        Some(&rest[..end])
    }

    fn temporal(&mut self, globally: bool) -> Result<Expr, FormulaError> {
        self.expect('[')?;
        let a = self.number()?;
        self.expect(',')?;
        let b = self.number()?;
        self.expect(']')?;
        if a >= b {
            return Err(FormulaError::BadInterval { a, b });
        }
        let (sa, sb) = (self.steps(a)?, self.steps(b)?);
        if sa >= sb {
            return Err(FormulaError::BadInterval {
                a: sa as f64,
                b: sb as f64,
            });
        }
        self.expect('(')?;
        let child = self.or()?;
        self.expect(')')?;
        Ok(if globally {
            Expr::globally(sa, sb, child)
        } else {
            Expr::finally(sa, sb, child)
        })
    }

    fn number(&mut self) -> Result<f64, FormulaError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let end = rest
            .find(|c: char| !(c.is_ascii_digit() || c == '.'))
            .unwrap_or(rest.len());
        let tok = &rest[..end];
        let valid = !tok.is_empty()
            && !tok.starts_with('.')
            && !tok.ends_with('.')
            && tok.matches('.').count() <= 1;
        if !valid {
            return Err(self.error("expected a nonnegative number"));
        }
        let v: f64 = tok.parse().map_err(|_| self.error("bad number"))?;
        self.pos += end;
        Ok(v)
    }

    fn steps(&self, seconds: f64) -> Result<usize, FormulaError> {
        let dt = self.opts.dt;
        let k = seconds / dt;
        let r = k.round();
        if (k - r).abs() > 1e-9 * r.max(1.0) {
            return Err(FormulaError::FractionalBound { value: seconds, dt });
        }
        Ok(r as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Node;

    fn table(names: &[&str]) -> HashMap<String, Predicate> {
        names
            .iter()
            .map(|n| {
                (
                    n.to_string(),
                    Predicate::affine(*n, vec![1.0, 0.0], 0.0, 0.5),
                )
            })
            .collect()
    }

    #[test]
    fn globally_avoid() {
        let t = table(&["avoid"]);
        let f = parse_formula("G[0,20](avoid)", &t).unwrap();
        assert!(matches!(
            f.node(f.root()),
            Node::Globally {
                a: 0,
                b: 20,
                child: 0
            }
        ));
        assert!(matches!(f.node(0), Node::Pred(p) if p.id == "avoid"));
    }

    #[test]
    fn finally_of_disjunction() {
        let t = table(&["muA", "muB"]);
        let f = parse_formula("F[2,7](muA | muB)", &t).unwrap();
        assert_eq!(f.to_string(), "F[2,7](muA | muB)");
        assert!(matches!(f.node(2), Node::Or(cs) if cs == &vec![0, 1]));
    }

    #[test]
    fn negated_finally_becomes_globally() {
        let t = table(&["p"]);
        let f = parse_formula("!(F[0,5](p))", &t).unwrap();
        match (f.node(0), f.node(1)) {
            (
                Node::Pred(q),
                Node::Globally {
                    a: 0,
                    b: 5,
                    child: 0,
                },
            ) => {
                assert_eq!(*q, t["p"].negate());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn precedence_and_grouping() {
        let t = table(&["a", "b", "c", "d"]);
        let f = parse_formula("a | b & c | d", &t).unwrap();
        assert_eq!(f.to_string(), "a | (b & c) | d");
        let g = parse_formula("a & (b & c)", &t).unwrap();
        assert!(matches!(g.node(g.root()), Node::And(cs) if cs.len() == 2));
        let h = parse_formula("a & b & c", &t).unwrap();
        assert!(matches!(h.node(h.root()), Node::And(cs) if cs.len() == 3));
    }

    #[test]
    fn errors() {
        let t = table(&["p"]);
        assert_eq!(
            parse_formula("F[0,5](q)", &t),
            Err(FormulaError::UnknownPredicate("q".into()))
        );
        assert!(matches!(
            parse_formula("F[5,5](p)", &t),
            Err(FormulaError::BadInterval { .. })
        ));
        assert!(matches!(
            parse_formula("F[0,5](p", &t),
            Err(FormulaError::Syntax { pos: 8, .. })
        ));
        assert!(matches!(
            parse_formula("p &", &t),
            Err(FormulaError::Syntax { pos: 3, .. })
        ));
        assert!(matches!(
            parse_formula("F[0,1.](p)", &t),
            Err(FormulaError::Syntax { .. })
        ));
    }

    #[test]
    fn seconds_are_converted_by_dt() {
        let t = table(&["p"]);
        let opts = ParseOptions {
            dt: 0.5,
            ..Default::default()
        };
        let f = parse_formula_with("G[0,2.5](p)", &t, &opts).unwrap();
        assert_eq!(f.horizon(), 5);
        assert!(matches!(
            parse_formula_with("G[0,1.2](p)", &t, &opts),
            Err(FormulaError::FractionalBound { .. })
        ));
    }

    #[test]
    fn definitions_expand() {
        let t = table(&["p", "q"]);
        let mut opts = ParseOptions::default();
        opts.definitions.insert("both".into(), "p & q".into());
        opts.definitions.insert("loop".into(), "p | loop".into());
        let f = parse_formula_with("F[0,3](both)", &t, &opts).unwrap();
        assert_eq!(f.to_string(), "F[0,3](p & q)");
        assert_eq!(
            parse_formula_with("loop", &t, &opts),
            Err(FormulaError::RecursiveDefinition("loop".into()))
        );
    }

    #[test]
    fn predicate_named_like_an_operator() {
        let t = table(&["G"]);
        let f = parse_formula("F[0,1](G)", &t).unwrap();
        assert_eq!(f.to_string(), "F[0,1](G)");
    }
}
