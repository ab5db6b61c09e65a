//! Hand-rolled lexer and recursive-descent parser for the Datalog dialect.
//!
//! Grammar sketch:
//!
//! ```text
//! program  := clause*
//! clause   := directive | fact | rule
//! directive:= ".decl" ident "(" arg ("," arg)* ")"
//! fact     := atom "."
//! rule     := atom ":-" literal ("," literal)* "."
//! literal  := atom | term cmp term | var "=" term arith term
//! term     := ident | int | string
//! cmp      := "=" | "!=" | "<" | "<=" | ">" | ">="
//! arith    := "+" | "-" | "*"
//! ```
//!
//! `//` comments run to end of line. Identifiers are case-sensitive and are
//! always variables inside rules; string constants are always double-quoted.

use std::fmt;

use thiserror::Error;

use super::ast::{ArithOp, Atom, CmpOp, Literal, Program, Rule, Term};

/// Parse failure with 1-based line/column position.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("{line}:{col}: arity mismatch for relation `{relation}`: declared/first used with {expected}, used with {found}")]
    ArityMismatch {
        line: u32,
        col: u32,
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("{line}:{col}: non-constant term in a fact for relation `{relation}`")]
    NonConstantFact {
        line: u32,
        col: u32,
        relation: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    /// Unsigned digit run; sign and range are resolved at parse time so
    /// `-9223372036854775808` round-trips.
    Int(u64),
    Str(String),
    Directive(String),
    LParen,
    RParen,
    Comma,
    Dot,
    ColonDash,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Colon,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(v) => write!(f, "integer `{v}`"),
            Tok::Str(_) => write!(f, "string literal"),
            Tok::Directive(d) => write!(f, "directive `.{d}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
            Tok::Dot => write!(f, "`.`"),
            Tok::ColonDash => write!(f, "`:-`"),
            Tok::Eq => write!(f, "`=`"),
            Tok::Ne => write!(f, "`!=`"),
            Tok::Lt => write!(f, "`<`"),
            Tok::Le => write!(f, "`<=`"),
            Tok::Gt => write!(f, "`>`"),
            Tok::Ge => write!(f, "`>=`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::Colon => write!(f, "`:`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col: self.col,
            msg: msg.into(),
        }
    }

    fn tokenize(mut self) -> Result<Vec<(Tok, u32, u32)>, ParseError> {
        let mut out = Vec::new();
        loop {
            while let Some(&c) = self.chars.peek() {
                if c.is_whitespace() {
                    self.bump();
                } else if c == '/' {
                    let mut ahead = self.chars.clone();
                    ahead.next();
                    if ahead.peek() == Some(&'/') {
                        while let Some(&c) = self.chars.peek() {
                            if c == '\n' {
                                break;
                            }
                            self.bump();
                        }
                    } else {
                        return Err(self.err("unexpected `/`"));
                    }
                } else {
                    break;
                }
            }
            let (line, col) = (self.line, self.col);
            let Some(&c) = self.chars.peek() else {
                out.push((Tok::Eof, line, col));
                return Ok(out);
            };
            let tok = match c {
                '(' => {
                    self.bump();
                    Tok::LParen
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                ',' => {
                    self.bump();
                    Tok::Comma
                }
                '+' => {
                    self.bump();
                    Tok::Plus
                }
                '-' => {
                    self.bump();
                    Tok::Minus
                }
                '*' => {
                    self.bump();
                    Tok::Star
                }
                '.' => {
                    self.bump();
                    if matches!(self.chars.peek(), Some(c) if c.is_ascii_alphabetic()) {
                        let mut name = String::new();
                        while let Some(&c) = self.chars.peek() {
                            if c.is_ascii_alphanumeric() || c == '_' {
                                name.push(c);
                                self.bump();
                            } else {
                                break;
                            }
                        }
                        Tok::Directive(name)
                    } else {
                        Tok::Dot
                    }
                }
                ':' => {
                    self.bump();
                    if self.chars.peek() == Some(&'-') {
                        self.bump();
                        Tok::ColonDash
                    } else {
                        Tok::Colon
                    }
                }
                '=' => {
                    self.bump();
                    Tok::Eq
                }
                '!' => {
                    self.bump();
                    if self.chars.peek() == Some(&'=') {
                        self.bump();
                        Tok::Ne
                    } else {
                        return Err(self.err("expected `!=`"));
                    }
                }
                '<' => {
                    self.bump();
                    if self.chars.peek() == Some(&'=') {
                        self.bump();
                        Tok::Le
                    } else {
                        Tok::Lt
                    }
                }
                '>' => {
                    self.bump();
                    if self.chars.peek() == Some(&'=') {
                        self.bump();
                        Tok::Ge
                    } else {
                        Tok::Gt
                    }
                }
                '"' => {
                    self.bump();
                    let mut s = String::new();
                    loop {
                        match self.bump() {
                            None => return Err(self.err("unterminated string literal")),
                            Some('"') => break,
                            Some('\\') => match self.bump() {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                Some('r') => s.push('\r'),
                                other => {
                                    return Err(self.err(format!(
                                        "invalid escape sequence `\\{}`",
                                        other.map(String::from).unwrap_or_default()
                                    )))
                                }
                            },
                            Some(c) => s.push(c),
                        }
                    }
                    Tok::Str(s)
                }
                c if c.is_ascii_digit() => {
                    let mut digits = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_ascii_digit() {
                            digits.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let v: u64 = digits
                        .parse()
                        .map_err(|_| self.err(format!("integer literal `{digits}` out of range")))?;
                    Tok::Int(v)
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut name = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_ascii_alphanumeric() || c == '_' {
                            name.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    Tok::Ident(name)
                }
                c => return Err(self.err(format!("unexpected character `{c}`"))),
            };
            out.push((tok, line, col));
        }
    }
}

struct Parser {
    toks: Vec<(Tok, u32, u32)>,
    pos: usize,
    program: Program,
    anon_counter: u32,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].0
    }

    fn here(&self) -> (u32, u32) {
        let (_, l, c) = self.toks[self.pos];
        (l, c)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {}, found {}", want, self.peek())))
        }
    }

    fn ensure_relation(&mut self, name: &str, arity: usize) -> Result<super::ast::RelId, ParseError> {
        let (line, col) = self.here();
        self.program
            .ensure_relation(name, arity)
            .map_err(|(expected, found)| ParseError::ArityMismatch {
                line,
                col,
                relation: name.to_string(),
                expected,
                found,
            })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.bump() {
            Tok::Ident(name) => {
                if name == "_" {
                    self.anon_counter += 1;
                    Ok(Term::Var(format!("_anon{}", self.anon_counter)))
                } else {
                    Ok(Term::Var(name))
                }
            }
            Tok::Int(v) => {
                let v = i64::try_from(v)
                    .map_err(|_| self.err(format!("integer literal `{v}` out of range")))?;
                Ok(Term::Const(self.program.pool.intern_int(v)))
            }
            Tok::Str(s) => Ok(Term::Const(self.program.pool.intern_str(&s))),
            Tok::Minus => match self.bump() {
                Tok::Int(v) if v <= i64::MAX as u64 + 1 => {
                    Ok(Term::Const(self.program.pool.intern_int((v as i128).wrapping_neg() as i64)))
                }
                Tok::Int(v) => Err(self.err(format!("integer literal `-{v}` out of range"))),
                other => Err(self.err(format!("expected integer after `-`, found {other}"))),
            },
            other => Err(self.err(format!("expected term, found {other}"))),
        }
    }

    fn atom_with_name(&mut self, name: String) -> Result<Atom, ParseError> {
        self.expect(Tok::LParen)?;
        let mut terms = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                terms.push(self.term()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        let rel = self.ensure_relation(&name, terms.len())?;
        Ok(Atom { rel, terms })
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        if let Tok::Ident(_) = self.peek() {
            if *self.peek2() == Tok::LParen {
                let Tok::Ident(name) = self.bump() else { unreachable!() };
                return Ok(Literal::Atom(self.atom_with_name(name)?));
            }
        }
        let lhs = self.term()?;
        let op = match self.bump() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            other => return Err(self.err(format!("expected comparison operator, found {other}"))),
        };
        let rhs = self.term()?;
        let arith = match self.peek() {
            Tok::Plus => Some(ArithOp::Add),
            Tok::Minus => Some(ArithOp::Sub),
            Tok::Star => Some(ArithOp::Mul),
            _ => None,
        };
        if let Some(arith_op) = arith {
            if op != CmpOp::Eq {
                return Err(self.err("arithmetic is only allowed after `=`"));
            }
            let Term::Var(target) = lhs else {
                return Err(self.err("binding built-in target must be a variable"));
            };
            self.bump();
            let rhs2 = self.term()?;
            return Ok(Literal::Bind {
                target,
                op: arith_op,
                lhs: rhs,
                rhs: rhs2,
            });
        }
        Ok(Literal::Cmp { op, lhs, rhs })
    }

    fn clause(&mut self) -> Result<(), ParseError> {
        if let Tok::Directive(d) = self.peek().clone() {
            let (line, col) = self.here();
            if d != "decl" {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: format!("unknown directive `.{d}`"),
                });
            }
            self.bump();
            let Tok::Ident(name) = self.bump() else {
                return Err(self.err("expected relation name after `.decl`"));
            };
            self.expect(Tok::LParen)?;
            let mut arity = 0;
            if *self.peek() != Tok::RParen {
                loop {
                    match self.bump() {
                        Tok::Ident(_) => arity += 1,
                        other => {
                            return Err(self.err(format!(
                                "expected column name in `.decl`, found {other}"
                            )))
                        }
                    }
                    if *self.peek() == Tok::Colon {
                        self.bump();
                        match self.bump() {
                            Tok::Ident(_) => {}
                            other => {
                                return Err(
                                    self.err(format!("expected type name after `:`, found {other}"))
                                )
                            }
                        }
                    }
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen)?;
            self.ensure_relation(&name, arity)?;
            return Ok(());
        }

        let (line, col) = self.here();
        let Tok::Ident(name) = self.bump() else {
            return Err(ParseError::Syntax {
                line,
                col,
                msg: format!("expected clause, found {}", self.toks[self.pos - 1].0),
            });
        };
        let atom = self.atom_with_name(name)?;
        match self.bump() {
            Tok::Dot => {
                // A bare atom clause is a fact; every term must be constant.
                let mut tuple = super::ast::Tuple::new();
                for t in &atom.terms {
                    match t {
                        Term::Const(c) => tuple.push(*c),
                        Term::Var(_) => {
                            return Err(ParseError::NonConstantFact {
                                line,
                                col,
                                relation: self.program.relation_name(atom.rel).to_string(),
                            })
                        }
                    }
                }
                self.program.add_fact(atom.rel, tuple);
                Ok(())
            }
            Tok::ColonDash => {
                let mut body = vec![self.literal()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    body.push(self.literal()?);
                }
                self.expect(Tok::Dot)?;
                let id = self.program.rules.len() as u32;
                self.program.rules.push(Rule {
                    id,
                    head: atom,
                    body,
                });
                Ok(())
            }
            other => Err(self.err(format!("expected `.` or `:-`, found {other}"))),
        }
    }
}

/// Parses a source text into a normalized [`Program`].
///
/// On success the program has arity-consistent atoms, facts stored under EDB
/// relations only (rule-defined relations with inline facts get a synthetic
/// input relation plus copy rule), and a canonically ordered constant pool.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    let toks = Lexer::new(source).tokenize()?;
    let mut p = Parser {
        toks,
        pos: 0,
        program: Program::new(),
        anon_counter: 0,
    };
    while *p.peek() != Tok::Eof {
        p.clause()?;
    }
    let mut program = p.program;
    program.normalize();
    program.canonicalize_pool();
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::ast::RelKind;

    #[test]
    fn parses_transitive_closure() {
        let p = parse(
            "path(x,y) :- edge(x,y).\npath(x,z) :- edge(x,y), path(y,z).\nedge(\"a\",\"b\").",
        )
        .unwrap();
        assert_eq!(p.rules.len(), 2);
        let edge = p.relation_named("edge").unwrap();
        assert_eq!(p.facts[&edge].len(), 1);
        assert_eq!(p.kind(edge), RelKind::Edb);
        assert_eq!(p.kind(p.relation_named("path").unwrap()), RelKind::Idb);
    }

    #[test]
    fn reports_arity_mismatch() {
        let err = parse("p(x) :- q(x, x).\nq(1).").unwrap_err();
        match err {
            ParseError::ArityMismatch { relation, expected, found, .. } => {
                assert_eq!(relation, "q");
                assert_eq!(expected, 2);
                assert_eq!(found, 1);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn reports_non_constant_fact() {
        let err = parse("edge(x, \"b\").").unwrap_err();
        assert!(matches!(err, ParseError::NonConstantFact { ref relation, .. } if relation == "edge"));
    }

    #[test]
    fn reports_syntax_error_position() {
        let err = parse("p(x) :- q(x)\nr(1).").unwrap_err();
        match err {
            ParseError::Syntax { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn parses_builtins() {
        let p = parse("f(n, r) :- g(m, a), n = m + 1, r <= 10, n != r.").unwrap();
        let body = &p.rules[0].body;
        assert!(matches!(body[1], Literal::Bind { ref target, op: ArithOp::Add, .. } if target == "n"));
        assert!(matches!(body[2], Literal::Cmp { op: CmpOp::Le, .. }));
        assert!(matches!(body[3], Literal::Cmp { op: CmpOp::Ne, .. }));
    }

    #[test]
    fn negative_integers_and_strings_roundtrip() {
        let p = parse("m(-9223372036854775807, \"a\\\"b\\n\").").unwrap();
        let printed = p.to_string();
        let p2 = parse(&printed).unwrap();
        assert_eq!(p, p2);
    }

    #[test]
    fn inline_facts_for_idb_relation_are_normalized() {
        let p = parse("path(x,y) :- edge(x,y).\npath(\"a\",\"b\").\nedge(\"a\",\"c\").").unwrap();
        let path = p.relation_named("path").unwrap();
        let synth = p.relation_named("path__edb").unwrap();
        assert!(!p.facts.contains_key(&path));
        assert_eq!(p.facts[&synth].len(), 1);
        assert_eq!(p.rules.len(), 2);
        assert_eq!(p.kind(synth), RelKind::Edb);
    }

    #[test]
    fn decl_sets_arity() {
        let err = parse(".decl edge(a, b)\nedge(1).").unwrap_err();
        assert!(matches!(err, ParseError::ArityMismatch { .. }));
    }

    #[test]
    fn print_reparse_is_identity() {
        let src = r#"
            .decl edge(a, b)
            tc(x, y) :- edge(x, y).
            tc(x, z) :- edge(x, y), tc(y, z), x != z.
            big(n) :- tc(x, y), n = 5 + 2.
            edge(1, 2).
            edge(2, -3).
            tc("seed", "seed").
        "#;
        let p = parse(src).unwrap();
        let p2 = parse(&p.to_string()).unwrap();
        assert_eq!(p, p2);
        let p3 = parse(&p2.to_string()).unwrap();
        assert_eq!(p2, p3);
    }
}
