//! Propositional formulas over the attributes of a single entity.
//!
//! Rules are stored schematically (`Formula<Attribute>`, the universally
//! quantified variable is implicit) and grounded on demand into
//! `Formula<GroundAtom>` for a concrete entity. Facts are always ground.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest atom count `equivalent` and model enumeration will accept.
pub const ATOM_BUDGET: usize = 16;

/// Largest formula depth a rule or fact may have.
pub const MAX_DEPTH: usize = 12;

/// Words the sentence templates use; none of them may name an attribute.
pub const RESERVED_WORDS: &[&str] = &[
    "and", "are", "both", "case", "either", "if", "is", "it", "not", "or", "someone", "that",
    "the", "then", "they",
];

const RESERVED_ENTITIES: &[&str] = &["If", "It", "Someone"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("atom `{0}` is not in the assignment domain")]
    UnknownAtom(String),
    #[error("{count} distinct atoms exceed the enumeration budget of {limit}")]
    AtomBudgetExceeded { count: usize, limit: usize },
    #[error("invalid attribute name `{0}`")]
    InvalidAttribute(String),
    #[error("invalid entity name `{0}`")]
    InvalidEntity(String),
    #[error("formula depth {depth} exceeds the limit of {limit}")]
    DepthExceeded { depth: usize, limit: usize },
    #[error("fact must be a disjunction of one or two literals, got `{0}`")]
    InvalidFact(String),
    #[error("fact mentions `{found}` but the theory is about `{expected}`")]
    ForeignEntity { expected: String, found: String },
    #[error("attribute `{0}` appears twice in the vocabulary")]
    DuplicateAttribute(String),
    #[error("attribute `{0}` is not part of the theory vocabulary")]
    OutsideVocabulary(String),
}

/// A property an entity may have, e.g. `green`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Attribute(String);

impl Attribute {
    pub fn new(name: impl Into<String>) -> Result<Self, LogicError> {
        let name = name.into();
        let well_formed = !name.is_empty() && name.bytes().all(|b| b.is_ascii_lowercase());
        if !well_formed || RESERVED_WORDS.contains(&name.as_str()) {
            return Err(LogicError::InvalidAttribute(name));
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Attribute {
    type Error = LogicError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<Attribute> for String {
    fn from(value: Attribute) -> Self {
        value.0
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The single individual a theory talks about, e.g. `Anne`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Entity(String);

impl Entity {
    pub fn new(name: impl Into<String>) -> Result<Self, LogicError> {
        let name = name.into();
        let mut bytes = name.bytes();
        let well_formed = match bytes.next() {
            Some(first) => first.is_ascii_uppercase() && bytes.all(|b| b.is_ascii_lowercase()),
            None => false,
        };
        if !well_formed || RESERVED_ENTITIES.contains(&name.as_str()) {
            return Err(LogicError::InvalidEntity(name));
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Entity {
    type Error = LogicError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<Entity> for String {
    fn from(value: Entity) -> Self {
        value.0
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An attribute applied to a concrete entity: `Green(Anne)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub entity: Entity,
    pub attribute: Attribute,
}

impl GroundAtom {
    pub fn new(entity: Entity, attribute: Attribute) -> Self {
        Self { entity, attribute }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.attribute, self.entity)
    }
}

/// Anything that names an attribute; lets schematic and ground formulas share
/// one evaluator.
pub trait HasAttribute {
    fn attribute(&self) -> &Attribute;
}

impl HasAttribute for Attribute {
    fn attribute(&self) -> &Attribute {
        self
    }
}

impl HasAttribute for GroundAtom {
    fn attribute(&self) -> &Attribute {
        &self.attribute
    }
}

/// Propositional formula. `And`/`Or` are binary; longer chains are
/// left-nested. `False` is the only representation of ⊥.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula<A = Attribute> {
    Atom(A),
    Not(Box<Formula<A>>),
    And(Box<Formula<A>>, Box<Formula<A>>),
    Or(Box<Formula<A>>, Box<Formula<A>>),
    Implies(Box<Formula<A>>, Box<Formula<A>>),
    True,
    False,
}

pub type GroundFormula = Formula<GroundAtom>;

impl<A> Formula<A> {
    pub fn atom(a: A) -> Self {
        Formula::Atom(a)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Self) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(l: Self, r: Self) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Self, r: Self) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn implies(l: Self, r: Self) -> Self {
        Formula::Implies(Box::new(l), Box::new(r))
    }

    /// Atoms and constants have depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::True | Formula::False => 1,
            Formula::Not(f) => 1 + f.depth(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                1 + l.depth().max(r.depth())
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::True | Formula::False => 1,
            Formula::Not(f) => 1 + f.size(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                1 + l.size() + r.size()
            }
        }
    }

    pub fn map_atoms<B>(&self, f: &mut impl FnMut(&A) -> B) -> Formula<B> {
        match self {
            Formula::Atom(a) => Formula::Atom(f(a)),
            Formula::Not(x) => Formula::not(x.map_atoms(f)),
            Formula::And(l, r) => {
                let l = l.map_atoms(f);
                Formula::and(l, r.map_atoms(f))
            }
            Formula::Or(l, r) => {
                let l = l.map_atoms(f);
                Formula::or(l, r.map_atoms(f))
            }
            Formula::Implies(l, r) => {
                let l = l.map_atoms(f);
                Formula::implies(l, r.map_atoms(f))
            }
            Formula::True => Formula::True,
            Formula::False => Formula::False,
        }
    }

    /// Counts of each connective, indexed `[not, and, or, implies, true, false]`.
    pub fn connective_counts(&self) -> [usize; 6] {
        fn walk<A>(f: &Formula<A>, acc: &mut [usize; 6]) {
            match f {
                Formula::Atom(_) => {}
                Formula::Not(x) => {
                    acc[0] += 1;
                    walk(x, acc);
                }
                Formula::And(l, r) => {
                    acc[1] += 1;
                    walk(l, acc);
                    walk(r, acc);
                }
                Formula::Or(l, r) => {
                    acc[2] += 1;
                    walk(l, acc);
                    walk(r, acc);
                }
                Formula::Implies(l, r) => {
                    acc[3] += 1;
                    walk(l, acc);
                    walk(r, acc);
                }
                Formula::True => acc[4] += 1,
                Formula::False => acc[5] += 1,
            }
        }
        let mut acc = [0; 6];
        walk(self, &mut acc);
        acc
    }

    fn visit_atoms<'a>(&'a self, f: &mut impl FnMut(&'a A)) {
        match self {
            Formula::Atom(a) => f(a),
            Formula::Not(x) => x.visit_atoms(f),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                l.visit_atoms(f);
                r.visit_atoms(f);
            }
            Formula::True | Formula::False => {}
        }
    }

    /// Number of atom occurrences (with repetition).
    pub fn atom_occurrences(&self) -> usize {
        let mut n = 0;
        self.visit_atoms(&mut |_| n += 1);
        n
    }
}

impl<A: HasAttribute> Formula<A> {
    /// Distinct attributes in first-occurrence order.
    pub fn attributes(&self) -> Vec<Attribute> {
        let mut out: Vec<Attribute> = Vec::new();
        self.visit_atoms(&mut |a| {
            let attr = a.attribute();
            if !out.contains(attr) {
                out.push(attr.clone());
            }
        });
        out
    }
}

/// Distinct atoms of `formula`, in first-occurrence order.
pub fn atoms_of<A: HasAttribute>(formula: &Formula<A>) -> Vec<Attribute> {
    formula.attributes()
}

impl<A: fmt::Display> fmt::Display for Formula<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn operand<A: fmt::Display>(x: &Formula<A>, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match x {
                Formula::And(..) | Formula::Or(..) | Formula::Implies(..) => write!(f, "({x})"),
                _ => write!(f, "{x}"),
            }
        }
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Not(x) => {
                f.write_str("¬")?;
                operand(x, f)
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                let op = match self {
                    Formula::And(..) => " ∧ ",
                    Formula::Or(..) => " ∨ ",
                    _ => " → ",
                };
                operand(l, f)?;
                f.write_str(op)?;
                operand(r, f)
            }
            Formula::True => f.write_str("⊤"),
            Formula::False => f.write_str("⊥"),
        }
    }
}

/// A signed attribute; `positive == false` means "not <attribute>".
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub attribute: Attribute,
    pub positive: bool,
}

impl Literal {
    pub fn pos(attribute: Attribute) -> Self {
        Self {
            attribute,
            positive: true,
        }
    }

    pub fn neg(attribute: Attribute) -> Self {
        Self {
            attribute,
            positive: false,
        }
    }

    pub fn complement(&self) -> Self {
        Self {
            attribute: self.attribute.clone(),
            positive: !self.positive,
        }
    }

    pub fn to_formula(&self) -> Formula {
        let atom = Formula::Atom(self.attribute.clone());
        if self.positive {
            atom
        } else {
            Formula::not(atom)
        }
    }

    /// Recognizes `a` and `¬a`.
    pub fn from_formula<A: HasAttribute>(f: &Formula<A>) -> Option<Self> {
        match f {
            Formula::Atom(a) => Some(Self::pos(a.attribute().clone())),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Atom(a) => Some(Self::neg(a.attribute().clone())),
                _ => None,
            },
            _ => None,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.attribute)
        } else {
            write!(f, "¬{}", self.attribute)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleId(pub String);

impl RuleId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    /// `rule1`, `rule2`, ... for 1-based positions.
    pub fn positional(index: usize) -> Self {
        Self(format!("rule{index}"))
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A universally quantified rule over the implicit variable `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub id: RuleId,
    pub body: Formula,
}

impl Rule {
    pub fn new(id: RuleId, body: Formula) -> Result<Self, LogicError> {
        let depth = body.depth();
        if depth > MAX_DEPTH {
            return Err(LogicError::DepthExceeded {
                depth,
                limit: MAX_DEPTH,
            });
        }
        Ok(Self { id, body })
    }

    /// `∀x (antecedent(x) → consequent(x))` over plain attributes.
    pub fn implication(id: RuleId, antecedent: Attribute, consequent: Attribute) -> Self {
        Self {
            id,
            body: Formula::implies(Formula::Atom(antecedent), Formula::Atom(consequent)),
        }
    }

    pub fn attributes(&self) -> Vec<Attribute> {
        self.body.attributes()
    }
}

/// Instantiates the rule's implicit variable with `entity`.
pub fn ground(rule: &Rule, entity: &Entity) -> GroundFormula {
    rule.body
        .map_atoms(&mut |a| GroundAtom::new(entity.clone(), a.clone()))
}

/// A ground disjunction of one or two literals about a single entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fact {
    body: GroundFormula,
}

impl Fact {
    pub fn new(body: GroundFormula) -> Result<Self, LogicError> {
        let literal_ok = |f: &GroundFormula| match f {
            Formula::Atom(_) => true,
            Formula::Not(inner) => matches!(inner.as_ref(), Formula::Atom(_)),
            _ => false,
        };
        let shape_ok = match &body {
            Formula::Or(l, r) => literal_ok(l) && literal_ok(r),
            other => literal_ok(other),
        };
        if !shape_ok {
            return Err(LogicError::InvalidFact(body.to_string()));
        }
        let fact = Self { body };
        let entities = fact.entities();
        if let Some(first) = entities.first() {
            if let Some(other) = entities.iter().find(|e| *e != first) {
                return Err(LogicError::ForeignEntity {
                    expected: first.to_string(),
                    found: other.to_string(),
                });
            }
        }
        Ok(fact)
    }

    pub fn from_literals(entity: &Entity, literals: &[Literal]) -> Result<Self, LogicError> {
        let lit = |l: &Literal| -> GroundFormula {
            let atom = Formula::Atom(GroundAtom::new(entity.clone(), l.attribute.clone()));
            if l.positive {
                atom
            } else {
                Formula::not(atom)
            }
        };
        match literals {
            [a] => Self::new(lit(a)),
            [a, b] => Self::new(Formula::or(lit(a), lit(b))),
            _ => Err(LogicError::InvalidFact(format!(
                "{} literals",
                literals.len()
            ))),
        }
    }

    pub fn body(&self) -> &GroundFormula {
        &self.body
    }

    pub fn entity(&self) -> &Entity {
        // Shape validation guarantees at least one atom.
        let mut found = None;
        self.body.visit_atoms(&mut |a| {
            if found.is_none() {
                found = Some(&a.entity);
            }
        });
        found.expect("fact has at least one atom")
    }

    fn entities(&self) -> Vec<&Entity> {
        let mut out = Vec::new();
        self.body.visit_atoms(&mut |a| out.push(&a.entity));
        out
    }

    /// Disjuncts in order.
    pub fn literals(&self) -> Vec<Literal> {
        match &self.body {
            Formula::Or(l, r) => vec![
                Literal::from_formula(l).expect("validated literal"),
                Literal::from_formula(r).expect("validated literal"),
            ],
            other => vec![Literal::from_formula(other).expect("validated literal")],
        }
    }

    pub fn is_disjunctive(&self) -> bool {
        matches!(self.body, Formula::Or(..))
    }
}

/// Facts, rules, the entity they describe, and the attribute vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theory {
    pub entity: Entity,
    pub vocabulary: Vec<Attribute>,
    pub facts: Vec<Fact>,
    pub rules: Vec<Rule>,
}

impl Theory {
    pub fn new(
        entity: Entity,
        vocabulary: Vec<Attribute>,
        facts: Vec<Fact>,
        rules: Vec<Rule>,
    ) -> Result<Self, LogicError> {
        for (i, a) in vocabulary.iter().enumerate() {
            if vocabulary[..i].contains(a) {
                return Err(LogicError::DuplicateAttribute(a.to_string()));
            }
        }
        let theory = Self {
            entity,
            vocabulary,
            facts,
            rules,
        };
        for fact in &theory.facts {
            if fact.entity() != &theory.entity {
                return Err(LogicError::ForeignEntity {
                    expected: theory.entity.to_string(),
                    found: fact.entity().to_string(),
                });
            }
        }
        for attr in theory.mentioned_attributes() {
            if !theory.vocabulary.contains(&attr) {
                return Err(LogicError::OutsideVocabulary(attr.to_string()));
            }
        }
        Ok(theory)
    }

    /// Builds a theory whose vocabulary is every attribute mentioned, in
    /// first-occurrence order (facts first, then rules, then `extra`).
    pub fn inferring_vocabulary(
        entity: Entity,
        facts: Vec<Fact>,
        rules: Vec<Rule>,
        extra: &[Attribute],
    ) -> Result<Self, LogicError> {
        let mut vocabulary: Vec<Attribute> = Vec::new();
        let fact_attrs = facts.iter().flat_map(|f| f.body().attributes());
        let rule_attrs = rules.iter().flat_map(|r| r.attributes());
        for a in fact_attrs.chain(rule_attrs).chain(extra.iter().cloned()) {
            if !vocabulary.contains(&a) {
                vocabulary.push(a);
            }
        }
        Self::new(entity, vocabulary, facts, rules)
    }

    pub fn mentioned_attributes(&self) -> Vec<Attribute> {
        let mut out: Vec<Attribute> = Vec::new();
        let fact_attrs = self.facts.iter().flat_map(|f| f.body().attributes());
        let rule_attrs = self.rules.iter().flat_map(|r| r.attributes());
        for a in fact_attrs.chain(rule_attrs) {
            if !out.contains(&a) {
                out.push(a);
            }
        }
        out
    }

    pub fn rule(&self, id: &RuleId) -> Option<&Rule> {
        self.rules.iter().find(|r| &r.id == id)
    }

    pub fn without_rule(&self, id: &RuleId) -> Self {
        let mut t = self.clone();
        t.rules.retain(|r| &r.id != id);
        t
    }

    pub fn with_fact(&self, fact: Fact) -> Self {
        let mut t = self.clone();
        t.facts.push(fact);
        t
    }
}

/// A truth value for every attribute in a vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    values: BTreeMap<Attribute, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    /// Bit `i` of `mask` is the value of `vocabulary[i]`.
    pub fn from_mask(vocabulary: &[Attribute], mask: u64) -> Self {
        let values = vocabulary
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), mask >> i & 1 == 1))
            .collect();
        Self { values }
    }

    pub fn set(&mut self, attribute: Attribute, value: bool) -> &mut Self {
        self.values.insert(attribute, value);
        self
    }

    pub fn with(mut self, attribute: Attribute, value: bool) -> Self {
        self.values.insert(attribute, value);
        self
    }

    pub fn get(&self, attribute: &Attribute) -> Option<bool> {
        self.values.get(attribute).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Attribute, bool)> {
        self.values.iter().map(|(a, v)| (a, *v))
    }
}

impl FromIterator<(Attribute, bool)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (Attribute, bool)>>(iter: T) -> Self {
        Self {
            values: iter.into_iter().collect(),
        }
    }
}

/// Classical truth value of `formula` under `assignment`.
pub fn evaluate<A: HasAttribute>(
    formula: &Formula<A>,
    assignment: &Assignment,
) -> Result<bool, LogicError> {
    Ok(match formula {
        Formula::Atom(a) => {
            let attr = a.attribute();
            assignment
                .get(attr)
                .ok_or_else(|| LogicError::UnknownAtom(attr.to_string()))?
        }
        Formula::Not(x) => !evaluate(x, assignment)?,
        Formula::And(l, r) => evaluate(l, assignment)? & evaluate(r, assignment)?,
        Formula::Or(l, r) => evaluate(l, assignment)? | evaluate(r, assignment)?,
        Formula::Implies(l, r) => !evaluate(l, assignment)? | evaluate(r, assignment)?,
        Formula::True => true,
        Formula::False => false,
    })
}

/// Truth-table equivalence over the union of both formulas' atoms.
pub fn equivalent<A: HasAttribute, B: HasAttribute>(
    f1: &Formula<A>,
    f2: &Formula<B>,
) -> Result<bool, LogicError> {
    let mut atoms = f1.attributes();
    for a in f2.attributes() {
        if !atoms.contains(&a) {
            atoms.push(a);
        }
    }
    if atoms.len() > ATOM_BUDGET {
        return Err(LogicError::AtomBudgetExceeded {
            count: atoms.len(),
            limit: ATOM_BUDGET,
        });
    }
    let c1 = MaskFormula::compile(f1, &atoms)?;
    let c2 = MaskFormula::compile(f2, &atoms)?;
    Ok((0..1u64 << atoms.len()).all(|mask| c1.eval(mask) == c2.eval(mask)))
}

/// A formula with atoms resolved to bit positions, for fast enumeration.
#[derive(Debug, Clone)]
pub(crate) enum MaskFormula {
    Var(u32),
    Not(Box<MaskFormula>),
    And(Box<MaskFormula>, Box<MaskFormula>),
    Or(Box<MaskFormula>, Box<MaskFormula>),
    Implies(Box<MaskFormula>, Box<MaskFormula>),
    Const(bool),
}

impl MaskFormula {
    pub(crate) fn compile<A: HasAttribute>(
        f: &Formula<A>,
        vocabulary: &[Attribute],
    ) -> Result<Self, LogicError> {
        let bx = |f: &Formula<A>| Self::compile(f, vocabulary).map(Box::new);
        Ok(match f {
            Formula::Atom(a) => {
                let attr = a.attribute();
                let i = vocabulary
                    .iter()
                    .position(|v| v == attr)
                    .ok_or_else(|| LogicError::UnknownAtom(attr.to_string()))?;
                MaskFormula::Var(i as u32)
            }
            Formula::Not(x) => MaskFormula::Not(bx(x)?),
            Formula::And(l, r) => MaskFormula::And(bx(l)?, bx(r)?),
            Formula::Or(l, r) => MaskFormula::Or(bx(l)?, bx(r)?),
            Formula::Implies(l, r) => MaskFormula::Implies(bx(l)?, bx(r)?),
            Formula::True => MaskFormula::Const(true),
            Formula::False => MaskFormula::Const(false),
        })
    }

    pub(crate) fn eval(&self, mask: u64) -> bool {
        match self {
            MaskFormula::Var(i) => mask >> i & 1 == 1,
            MaskFormula::Not(x) => !x.eval(mask),
            MaskFormula::And(l, r) => l.eval(mask) && r.eval(mask),
            MaskFormula::Or(l, r) => l.eval(mask) || r.eval(mask),
            MaskFormula::Implies(l, r) => !l.eval(mask) || r.eval(mask),
            MaskFormula::Const(b) => *b,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attr(s: &str) -> Attribute {
        Attribute::new(s).unwrap()
    }

    fn at(s: &str) -> Formula {
        Formula::Atom(attr(s))
    }

    fn anne() -> Entity {
        Entity::new("Anne").unwrap()
    }

    fn full(pairs: &[(&str, bool)]) -> Assignment {
        pairs.iter().map(|(a, v)| (attr(a), *v)).collect()
    }

    #[test]
    fn ground_instantiates_every_atom() {
        let rule = Rule::implication(RuleId::positional(1), attr("green"), attr("cold"));
        let g = ground(&rule, &anne());
        assert_eq!(g.to_string(), "green(Anne) → cold(Anne)");

        let constant = Rule::new(
            RuleId::new("r"),
            Formula::implies(Formula::True, at("cold")),
        )
        .unwrap();
        assert_eq!(ground(&constant, &anne()).to_string(), "⊤ → cold(Anne)");

        let contra = Rule::new(
            RuleId::new("r"),
            Formula::implies(Formula::not(at("cold")), Formula::not(at("green"))),
        )
        .unwrap();
        let g = ground(&contra, &anne());
        let expected = Formula::implies(
            Formula::not(Formula::Atom(GroundAtom::new(anne(), attr("cold")))),
            Formula::not(Formula::Atom(GroundAtom::new(anne(), attr("green")))),
        );
        assert_eq!(g, expected);
    }

    #[test]
    fn evaluate_examples() {
        let a = full(&[("green", true), ("blue", false), ("cold", true)]);
        assert!(evaluate(&Formula::or(at("green"), at("blue")), &a).unwrap());
        assert!(!evaluate::<Attribute>(&Formula::False, &a).unwrap());
        assert!(!evaluate::<Attribute>(&Formula::False, &Assignment::new()).unwrap());
        let f = Formula::not(Formula::and(at("green"), Formula::not(at("cold"))));
        assert!(evaluate(&f, &a).unwrap());
    }

    #[test]
    fn evaluate_rejects_unknown_atom() {
        let a = full(&[("green", true)]);
        let err = evaluate(&at("cold"), &a).unwrap_err();
        assert_eq!(err, LogicError::UnknownAtom("cold".into()));
    }

    #[test]
    fn equivalence_examples() {
        let r = Formula::implies(at("green"), at("cold"));
        let contra = Formula::implies(Formula::not(at("cold")), Formula::not(at("green")));
        assert!(equivalent(&r, &contra).unwrap());
        assert!(equivalent(&r, &r).unwrap());
        assert!(!equivalent(&r, &Formula::implies(at("blue"), at("cold"))).unwrap());
    }

    #[test]
    fn equivalence_budget() {
        let names = [
            "aa", "ab", "ac", "ad", "ae", "af", "ag", "ah", "ai", "aj", "ak", "al", "am", "an",
            "ao", "ap", "aq",
        ];
        let big = names[1..]
            .iter()
            .fold(at(names[0]), |acc, n| Formula::or(acc, at(n)));
        assert!(matches!(
            equivalent(&big, &big),
            Err(LogicError::AtomBudgetExceeded {
                count: 17,
                limit: 16
            })
        ));
        let ok = names[1..16]
            .iter()
            .fold(at(names[0]), |acc, n| Formula::and(acc, at(n)));
        assert!(equivalent(&ok, &ok).unwrap());
    }

    #[test]
    fn dilemma_merge_is_equivalent() {
        let pair = Formula::and(
            Formula::implies(at("green"), at("cold")),
            Formula::implies(at("blue"), at("cold")),
        );
        let merged = Formula::implies(Formula::or(at("green"), at("blue")), at("cold"));
        assert!(equivalent(&pair, &merged).unwrap());
    }

    #[test]
    fn atoms_in_first_occurrence_order() {
        assert_eq!(
            atoms_of(&Formula::or(at("green"), at("blue"))),
            vec![attr("green"), attr("blue")]
        );
        assert!(atoms_of::<Attribute>(&Formula::True).is_empty());
        let f = Formula::not(Formula::and(at("green"), Formula::not(at("cold"))));
        assert_eq!(atoms_of(&f), vec![attr("green"), attr("cold")]);
        let rep = Formula::or(Formula::and(at("cold"), at("green")), at("cold"));
        assert_eq!(atoms_of(&rep), vec![attr("cold"), attr("green")]);
    }

    #[test]
    fn names_are_validated() {
        assert!(Attribute::new("green").is_ok());
        for bad in ["", "Green", "not", "or", "big-red", "x1"] {
            assert!(Attribute::new(bad).is_err(), "{bad}");
        }
        assert!(Entity::new("Anne").is_ok());
        for bad in ["anne", "ANNE", "", "Someone", "If"] {
            assert!(Entity::new(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn fact_shape_is_checked() {
        let e = anne();
        let g = |a: &str| Formula::Atom(GroundAtom::new(e.clone(), attr(a)));
        assert!(Fact::new(Formula::or(g("green"), g("blue"))).is_ok());
        assert!(Fact::new(Formula::or(
            Formula::not(g("cold")),
            Formula::not(g("nice"))
        ))
        .is_ok());
        assert!(Fact::new(g("green")).is_ok());
        assert!(Fact::new(Formula::and(g("green"), g("blue"))).is_err());
        assert!(Fact::new(Formula::not(Formula::not(g("green")))).is_err());
        let bob = Entity::new("Bob").unwrap();
        let mixed = Formula::or(
            g("green"),
            Formula::Atom(GroundAtom::new(bob, attr("blue"))),
        );
        assert!(matches!(
            Fact::new(mixed),
            Err(LogicError::ForeignEntity { .. })
        ));
    }

    #[test]
    fn theory_checks_vocabulary() {
        let fact = Fact::from_literals(&anne(), &[Literal::pos(attr("green"))]).unwrap();
        let rule = Rule::implication(RuleId::positional(1), attr("green"), attr("cold"));
        let err = Theory::new(
            anne(),
            vec![attr("green")],
            vec![fact.clone()],
            vec![rule.clone()],
        )
        .unwrap_err();
        assert_eq!(err, LogicError::OutsideVocabulary("cold".into()));
        let dup = Theory::new(anne(), vec![attr("green"), attr("green")], vec![], vec![]);
        assert!(matches!(dup, Err(LogicError::DuplicateAttribute(_))));
        let t =
            Theory::inferring_vocabulary(anne(), vec![fact], vec![rule], &[attr("nice")]).unwrap();
        assert_eq!(
            t.vocabulary,
            vec![attr("green"), attr("cold"), attr("nice")]
        );
    }

    #[test]
    fn rule_depth_limit() {
        let mut f = at("green");
        for _ in 0..MAX_DEPTH {
            f = Formula::not(f);
        }
        assert!(matches!(
            Rule::new(RuleId::new("deep"), f),
            Err(LogicError::DepthExceeded {
                depth: 13,
                limit: 12
            })
        ));
    }
}
