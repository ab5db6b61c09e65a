//! Core data model: interned constants, relations, terms, rules, programs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use smallvec::SmallVec;

/// Dense id of an interned constant in a [`ConstPool`].
///
/// Both integer and string constants are interned, so tuples are uniform
/// integer vectors with cheap hashing and comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstId(pub u32);

/// A fixed-arity tuple of interned constants.
pub type Tuple = SmallVec<[ConstId; 4]>;

/// The value behind a [`ConstId`]: a signed 64-bit integer or a string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstValue {
    Int(i64),
    Str(Box<str>),
}

impl ConstValue {
    /// Total order used for deterministic printing: integers first
    /// (numerically), then strings (lexicographically).
    pub fn sort_key(&self) -> (u8, i64, &str) {
        match self {
            ConstValue::Int(v) => (0, *v, ""),
            ConstValue::Str(s) => (1, 0, s),
        }
    }
}

/// Interner mapping constants to dense [`ConstId`]s and back.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConstPool {
    values: Vec<ConstValue>,
    ints: HashMap<i64, ConstId>,
    strs: HashMap<Box<str>, ConstId>,
}

impl ConstPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern_int(&mut self, v: i64) -> ConstId {
        if let Some(&id) = self.ints.get(&v) {
            return id;
        }
        let id = ConstId(self.values.len() as u32);
        self.values.push(ConstValue::Int(v));
        self.ints.insert(v, id);
        id
    }

    pub fn intern_str(&mut self, s: &str) -> ConstId {
        if let Some(&id) = self.strs.get(s) {
            return id;
        }
        let id = ConstId(self.values.len() as u32);
        self.values.push(ConstValue::Str(s.into()));
        self.strs.insert(s.into(), id);
        id
    }

    pub fn value(&self, id: ConstId) -> &ConstValue {
        &self.values[id.0 as usize]
    }

    pub fn as_int(&self, id: ConstId) -> Option<i64> {
        match self.value(id) {
            ConstValue::Int(v) => Some(*v),
            ConstValue::Str(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Renders a constant the way the dialect spells it: integers bare,
    /// strings double-quoted with `\"`, `\\`, `\n`, `\t`, `\r` escapes.
    pub fn display(&self, id: ConstId) -> String {
        match self.value(id) {
            ConstValue::Int(v) => v.to_string(),
            ConstValue::Str(s) => {
                let mut out = String::with_capacity(s.len() + 2);
                out.push('"');
                for c in s.chars() {
                    match c {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        '\t' => out.push_str("\\t"),
                        '\r' => out.push_str("\\r"),
                        c => out.push(c),
                    }
                }
                out.push('"');
                out
            }
        }
    }

    /// Renders a constant for tab-separated fact/result files: integers as
    /// decimal, strings raw (no quoting, Soufflé style).
    pub fn display_tsv(&self, id: ConstId) -> String {
        match self.value(id) {
            ConstValue::Int(v) => v.to_string(),
            ConstValue::Str(s) => s.to_string(),
        }
    }

    /// Numeric-then-lexicographic comparison of two interned constants.
    pub fn compare(&self, a: ConstId, b: ConstId) -> std::cmp::Ordering {
        self.value(a).sort_key().cmp(&self.value(b).sort_key())
    }

    pub fn compare_tuples(&self, a: &Tuple, b: &Tuple) -> std::cmp::Ordering {
        for (x, y) in a.iter().zip(b.iter()) {
            let ord = self.compare(*x, *y);
            if ord != std::cmp::Ordering::Equal {
                return ord;
            }
        }
        a.len().cmp(&b.len())
    }
}

/// Dense id of a relation in a [`Program`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelId(pub u32);

/// Whether a relation holds input facts (EDB) or is derived by rules (IDB).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RelKind {
    Edb,
    Idb,
}

#[derive(Debug, Clone, PartialEq)]
struct RelInfo {
    name: String,
    arity: usize,
}

/// A term inside an atom: a variable or an interned constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Var(String),
    Const(ConstId),
}

impl Term {
    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

/// A predicate applied to terms, e.g. `edge(x, y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub rel: RelId,
    pub terms: Vec<Term>,
}

/// Comparison operators usable as body filters. All variables on either side
/// must be bound by earlier literals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Arithmetic operators for binding built-ins (`z = x + y`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }

    pub fn apply(self, a: i64, b: i64) -> Option<i64> {
        match self {
            ArithOp::Add => a.checked_add(b),
            ArithOp::Sub => a.checked_sub(b),
            ArithOp::Mul => a.checked_mul(b),
        }
    }
}

/// One body literal: a relation atom, a comparison filter, or a binding
/// built-in that computes one new variable from bound inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Atom(Atom),
    Cmp { op: CmpOp, lhs: Term, rhs: Term },
    Bind { target: String, op: ArithOp, lhs: Term, rhs: Term },
}

impl Literal {
    pub fn as_atom(&self) -> Option<&Atom> {
        match self {
            Literal::Atom(a) => Some(a),
            _ => None,
        }
    }
}

/// A Datalog rule `head :- body.` with a stable id.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: u32,
    pub head: Atom,
    pub body: Vec<Literal>,
}

/// A parsed program: interned constant pool, relation table, explicit facts,
/// and rules.
///
/// Invariant (maintained by [`Program::normalize`], which `parse` applies):
/// no relation both carries explicit facts and appears in a rule head. Facts
/// given for a rule-defined relation are moved into a synthetic input
/// relation that a generated copy rule unions back in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Program {
    pub pool: ConstPool,
    relations: Vec<RelInfo>,
    by_name: HashMap<String, RelId>,
    pub facts: BTreeMap<RelId, BTreeSet<Tuple>>,
    pub rules: Vec<Rule>,
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    /// Looks up or creates a relation, enforcing arity consistency.
    /// Returns `Err((expected, found))` on an arity clash.
    pub fn ensure_relation(&mut self, name: &str, arity: usize) -> Result<RelId, (usize, usize)> {
        if let Some(&id) = self.by_name.get(name) {
            let expected = self.relations[id.0 as usize].arity;
            if expected != arity {
                return Err((expected, arity));
            }
            return Ok(id);
        }
        let id = RelId(self.relations.len() as u32);
        self.relations.push(RelInfo {
            name: name.to_string(),
            arity,
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn relation_named(&self, name: &str) -> Option<RelId> {
        self.by_name.get(name).copied()
    }

    pub fn relation_name(&self, rel: RelId) -> &str {
        &self.relations[rel.0 as usize].name
    }

    pub fn arity(&self, rel: RelId) -> usize {
        self.relations[rel.0 as usize].arity
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn relation_ids(&self) -> impl Iterator<Item = RelId> {
        (0..self.relations.len() as u32).map(RelId)
    }

    /// IDB = appears in some rule head; everything else is EDB input.
    pub fn kind(&self, rel: RelId) -> RelKind {
        if self.rules.iter().any(|r| r.head.rel == rel) {
            RelKind::Idb
        } else {
            RelKind::Edb
        }
    }

    pub fn idb_relations(&self) -> Vec<RelId> {
        self.relation_ids()
            .filter(|&r| self.kind(r) == RelKind::Idb)
            .collect()
    }

    pub fn edb_relations(&self) -> Vec<RelId> {
        self.relation_ids()
            .filter(|&r| self.kind(r) == RelKind::Edb)
            .collect()
    }

    pub fn rules_for(&self, rel: RelId) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(move |r| r.head.rel == rel)
    }

    /// Adds a fact tuple; the tuple's arity must match the relation's.
    pub fn add_fact(&mut self, rel: RelId, tuple: Tuple) {
        debug_assert_eq!(tuple.len(), self.arity(rel));
        self.facts.entry(rel).or_default().insert(tuple);
    }

    /// Restores the EDB/IDB disjointness invariant: facts attached to a
    /// relation that also has rules are moved into a fresh synthetic relation
    /// and a copy rule `rel(v...) :- rel__edb(v...)` is appended. Idempotent.
    pub fn normalize(&mut self) {
        let offenders: Vec<RelId> = self
            .facts
            .keys()
            .copied()
            .filter(|&r| self.kind(r) == RelKind::Idb)
            .collect();
        for rel in offenders {
            let arity = self.arity(rel);
            let mut synth_name = format!("{}__edb", self.relation_name(rel));
            while self.by_name.contains_key(&synth_name) {
                synth_name.push('_');
            }
            let synth = self
                .ensure_relation(&synth_name, arity)
                .expect("fresh relation");
            let tuples = self.facts.remove(&rel).unwrap_or_default();
            self.facts.insert(synth, tuples);
            let vars: Vec<Term> = (0..arity).map(|i| Term::Var(format!("v{i}"))).collect();
            let id = self.rules.len() as u32;
            self.rules.push(Rule {
                id,
                head: Atom {
                    rel,
                    terms: vars.clone(),
                },
                body: vec![Literal::Atom(Atom { rel: synth, terms: vars })],
            });
        }
    }

    /// Rebuilds the constant pool in a canonical traversal order (rules
    /// first, then per-relation facts sorted by value) so that structurally
    /// equal programs get identical `ConstId` assignments. `parse` applies
    /// this, which is what makes the print/reparse round trip exact.
    pub fn canonicalize_pool(&mut self) {
        let old = std::mem::take(&mut self.pool);
        let mut remap: HashMap<ConstId, ConstId> = HashMap::new();
        let mut pool = ConstPool::new();
        let intern = |id: ConstId, pool: &mut ConstPool, remap: &mut HashMap<_, _>| {
            *remap.entry(id).or_insert_with(|| match old.value(id) {
                ConstValue::Int(v) => pool.intern_int(*v),
                ConstValue::Str(s) => pool.intern_str(s),
            })
        };
        for rule in &mut self.rules {
            for term in rule
                .head
                .terms
                .iter_mut()
                .chain(rule.body.iter_mut().flat_map(|l| match l {
                    Literal::Atom(a) => a.terms.iter_mut().collect::<Vec<_>>(),
                    Literal::Cmp { lhs, rhs, .. } | Literal::Bind { lhs, rhs, .. } => {
                        vec![lhs, rhs]
                    }
                }))
            {
                if let Term::Const(id) = term {
                    *id = intern(*id, &mut pool, &mut remap);
                }
            }
        }
        let facts = std::mem::take(&mut self.facts);
        for (rel, tuples) in facts {
            let mut sorted: Vec<Tuple> = tuples.into_iter().collect();
            sorted.sort_by(|a, b| old.compare_tuples(a, b));
            let remapped: BTreeSet<Tuple> = sorted
                .into_iter()
                .map(|t| {
                    t.into_iter()
                        .map(|c| intern(c, &mut pool, &mut remap))
                        .collect()
                })
                .collect();
            self.facts.insert(rel, remapped);
        }
        self.pool = pool;
    }

    fn fmt_term(&self, t: &Term, out: &mut String) {
        match t {
            Term::Var(v) => out.push_str(v),
            Term::Const(c) => out.push_str(&self.pool.display(*c)),
        }
    }

    fn fmt_atom(&self, a: &Atom, out: &mut String) {
        out.push_str(self.relation_name(a.rel));
        out.push('(');
        for (i, t) in a.terms.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            self.fmt_term(t, out);
        }
        out.push(')');
    }
}

impl fmt::Display for Program {
    /// Prints the program in the dialect itself: `.decl` headers in relation
    /// id order (so reparsing reproduces id assignment), then rules, then
    /// facts sorted by value.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rel in self.relation_ids() {
            let cols: Vec<String> = (0..self.arity(rel)).map(|i| format!("c{i}")).collect();
            writeln!(f, ".decl {}({})", self.relation_name(rel), cols.join(", "))?;
        }
        for rule in &self.rules {
            let mut line = String::new();
            self.fmt_atom(&rule.head, &mut line);
            line.push_str(" :- ");
            for (i, lit) in rule.body.iter().enumerate() {
                if i > 0 {
                    line.push_str(", ");
                }
                match lit {
                    Literal::Atom(a) => self.fmt_atom(a, &mut line),
                    Literal::Cmp { op, lhs, rhs } => {
                        self.fmt_term(lhs, &mut line);
                        line.push_str(&format!(" {} ", op.symbol()));
                        self.fmt_term(rhs, &mut line);
                    }
                    Literal::Bind { target, op, lhs, rhs } => {
                        line.push_str(target);
                        line.push_str(" = ");
                        self.fmt_term(lhs, &mut line);
                        line.push_str(&format!(" {} ", op.symbol()));
                        self.fmt_term(rhs, &mut line);
                    }
                }
            }
            writeln!(f, "{line}.")?;
        }
        for rel in self.relation_ids() {
            if let Some(tuples) = self.facts.get(&rel) {
                let mut sorted: Vec<&Tuple> = tuples.iter().collect();
                sorted.sort_by(|a, b| self.pool.compare_tuples(a, b));
                for t in sorted {
                    let cols: Vec<String> = t.iter().map(|&c| self.pool.display(c)).collect();
                    writeln!(f, "{}({}).", self.relation_name(rel), cols.join(", "))?;
                }
            }
        }
        Ok(())
    }
}
