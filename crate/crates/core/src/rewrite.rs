//! Equivalence-law rewriting of rule bodies.
//!
//! Each law has one canonical site: the outermost eligible subterm, ties
//! broken left-first (pre-order). Every application is checked with
//! [`equivalent`] before it is returned.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{equivalent, Fact, Formula, LogicError, Rule};

/// Smallest and largest number of laws a stack composes.
pub const STACK_RANGE: std::ops::RangeInclusive<usize> = 2..=5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RewriteError {
    #[error("law `{law}` does not apply to `{formula}`")]
    NotApplicable { law: Law, formula: String },
    #[error("unknown law `{0}`")]
    UnknownLaw(String),
    #[error("stack size {0} is outside 2..=5")]
    BadStackSize(usize),
    #[error("no applicable law at stacking step {step}")]
    StackingFailed { step: usize },
    #[error("rewrite by `{law}` changed the meaning of `{formula}`")]
    NotEquivalent { law: Law, formula: String },
    #[error(transparent)]
    Logic(#[from] LogicError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "&'static str", try_from = "String")]
pub enum Law {
    Contraposition,
    DoubleNegation,
    Implication,
    DeMorgan,
    Identity,
    Commutativity,
}

impl Law {
    pub const ALL: [Law; 6] = [
        Law::Contraposition,
        Law::DoubleNegation,
        Law::Implication,
        Law::DeMorgan,
        Law::Identity,
        Law::Commutativity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Law::Contraposition => "contrapositive",
            Law::DoubleNegation => "double-negation",
            Law::Implication => "implication",
            Law::DeMorgan => "de-morgan",
            Law::Identity => "identity",
            Law::Commutativity => "commutativity",
        }
    }
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Law {
    type Err = RewriteError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Law::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| RewriteError::UnknownLaw(s.to_string()))
    }
}

impl From<Law> for &'static str {
    fn from(l: Law) -> Self {
        l.name()
    }
}

impl TryFrom<String> for Law {
    type Error = RewriteError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Which child to descend into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Left,
    Right,
    Operand,
}

/// Path from the root of a formula to a subterm.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Site(pub Vec<Branch>);

impl Site {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    fn child(&self, b: Branch) -> Self {
        let mut path = self.0.clone();
        path.push(b);
        Self(path)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("root")?;
        for b in &self.0 {
            f.write_str(match b {
                Branch::Left => "/left",
                Branch::Right => "/right",
                Branch::Operand => "/operand",
            })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteStep {
    pub law: Law,
    pub site: Site,
    pub before: Formula,
    pub after: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RewriteTrace {
    pub steps: Vec<RewriteStep>,
}

impl RewriteTrace {
    pub fn laws(&self) -> Vec<Law> {
        self.steps.iter().map(|s| s.law).collect()
    }

    /// Re-applies every law in order starting from `start`.
    pub fn replay(&self, start: &Formula) -> Result<Formula, RewriteError> {
        replay_laws(start, &self.laws())
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Applies `laws` in sequence at their canonical sites.
pub fn replay_laws(start: &Formula, laws: &[Law]) -> Result<Formula, RewriteError> {
    let mut current = start.clone();
    for &law in laws {
        current = rewrite_formula(&current, law)?.0;
    }
    Ok(current)
}

fn subterm<'a>(f: &'a Formula, site: &Site) -> &'a Formula {
    site.0.iter().fold(f, |node, b| match (node, b) {
        (Formula::Not(x), Branch::Operand) => x,
        (Formula::And(l, _) | Formula::Or(l, _) | Formula::Implies(l, _), Branch::Left) => l,
        (Formula::And(_, r) | Formula::Or(_, r) | Formula::Implies(_, r), Branch::Right) => r,
        _ => unreachable!("site does not match formula shape"),
    })
}

fn replace_at(f: &Formula, path: &[Branch], new: Formula) -> Formula {
    let Some((first, rest)) = path.split_first() else {
        return new;
    };
    match (f, first) {
        (Formula::Not(x), Branch::Operand) => Formula::not(replace_at(x, rest, new)),
        (Formula::And(l, r), Branch::Left) => Formula::and(replace_at(l, rest, new), (**r).clone()),
        (Formula::And(l, r), Branch::Right) => {
            Formula::and((**l).clone(), replace_at(r, rest, new))
        }
        (Formula::Or(l, r), Branch::Left) => Formula::or(replace_at(l, rest, new), (**r).clone()),
        (Formula::Or(l, r), Branch::Right) => Formula::or((**l).clone(), replace_at(r, rest, new)),
        (Formula::Implies(l, r), Branch::Left) => {
            Formula::implies(replace_at(l, rest, new), (**r).clone())
        }
        (Formula::Implies(l, r), Branch::Right) => {
            Formula::implies((**l).clone(), replace_at(r, rest, new))
        }
        _ => unreachable!("site does not match formula shape"),
    }
}

/// First node in pre-order satisfying `pred`.
fn preorder_find(f: &Formula, at: Site, pred: &impl Fn(&Formula) -> bool) -> Option<Site> {
    if pred(f) {
        return Some(at);
    }
    match f {
        Formula::Not(x) => preorder_find(x, at.child(Branch::Operand), pred),
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
            preorder_find(l, at.child(Branch::Left), pred)
                .or_else(|| preorder_find(r, at.child(Branch::Right), pred))
        }
        _ => None,
    }
}

fn is_literal(f: &Formula) -> bool {
    match f {
        Formula::Atom(_) => true,
        Formula::Not(x) => matches!(x.as_ref(), Formula::Atom(_)),
        _ => false,
    }
}

fn leftmost_literal(f: &Formula, at: Site) -> Option<Site> {
    if is_literal(f) {
        return Some(at);
    }
    match f {
        Formula::Not(x) => leftmost_literal(x, at.child(Branch::Operand)),
        Formula::And(l, _) | Formula::Or(l, _) | Formula::Implies(l, _) => {
            leftmost_literal(l, at.child(Branch::Left))
        }
        _ => None,
    }
}

fn de_morgan_site(f: &Formula) -> bool {
    match f {
        Formula::Not(x) => matches!(x.as_ref(), Formula::And(..) | Formula::Or(..)),
        Formula::And(l, r) | Formula::Or(l, r) => {
            matches!(l.as_ref(), Formula::Not(_)) || matches!(r.as_ref(), Formula::Not(_))
        }
        _ => false,
    }
}

/// Strips one leading negation, or adds one.
fn negate(f: &Formula) -> Formula {
    match f {
        Formula::Not(x) => (**x).clone(),
        other => Formula::not(other.clone()),
    }
}

/// Where `law` would act on `f`, if anywhere.
pub fn find_site(law: Law, f: &Formula) -> Option<Site> {
    let top_implication = matches!(f, Formula::Implies(..));
    match law {
        Law::Contraposition | Law::Implication => top_implication.then(Site::root),
        Law::Identity => top_implication.then(|| Site::root().child(Branch::Left)),
        Law::DoubleNegation => {
            if top_implication {
                Some(Site::root().child(Branch::Left))
            } else {
                leftmost_literal(f, Site::root())
            }
        }
        Law::DeMorgan => preorder_find(f, Site::root(), &de_morgan_site),
        Law::Commutativity => preorder_find(f, Site::root(), &|x| {
            matches!(x, Formula::And(..) | Formula::Or(..))
        }),
    }
}

fn transform(law: Law, node: &Formula) -> Formula {
    match (law, node) {
        (Law::Contraposition, Formula::Implies(p, q)) => {
            Formula::implies(Formula::not((**q).clone()), Formula::not((**p).clone()))
        }
        (Law::Implication, Formula::Implies(p, q)) => {
            Formula::or(Formula::not((**p).clone()), (**q).clone())
        }
        (Law::Identity, p) => Formula::or(p.clone(), p.clone()),
        (Law::DoubleNegation, p) => Formula::not(Formula::not(p.clone())),
        (Law::DeMorgan, Formula::Not(x)) => match x.as_ref() {
            Formula::And(a, b) => Formula::or(negate(a), negate(b)),
            Formula::Or(a, b) => Formula::and(negate(a), negate(b)),
            _ => unreachable!("checked by de_morgan_site"),
        },
        (Law::DeMorgan, Formula::Or(a, b)) => Formula::not(Formula::and(negate(a), negate(b))),
        (Law::DeMorgan, Formula::And(a, b)) => Formula::not(Formula::or(negate(a), negate(b))),
        (Law::Commutativity, Formula::And(a, b)) => Formula::and((**b).clone(), (**a).clone()),
        (Law::Commutativity, Formula::Or(a, b)) => Formula::or((**b).clone(), (**a).clone()),
        _ => unreachable!("site selection guarantees a matching shape"),
    }
}

/// Rewrites `f` once with `law` at its canonical site, verifying equivalence.
pub fn rewrite_formula(f: &Formula, law: Law) -> Result<(Formula, Site), RewriteError> {
    let site = find_site(law, f).ok_or_else(|| RewriteError::NotApplicable {
        law,
        formula: f.to_string(),
    })?;
    let replaced = transform(law, subterm(f, &site));
    let after = replace_at(f, &site.0, replaced);
    if !equivalent(f, &after)? {
        return Err(RewriteError::NotEquivalent {
            law,
            formula: f.to_string(),
        });
    }
    Ok((after, site))
}

pub fn applicable(law: Law, rule: &Rule) -> bool {
    find_site(law, &rule.body).is_some()
}

/// Laws that can act on `rule`, in [`Law::ALL`] order.
pub fn applicable_laws(rule: &Rule) -> Vec<Law> {
    Law::ALL
        .into_iter()
        .filter(|&l| applicable(l, rule))
        .collect()
}

pub fn apply_law(rule: &Rule, law: Law) -> Result<(Rule, RewriteStep), RewriteError> {
    let (after, site) = rewrite_formula(&rule.body, law)?;
    let rewritten = Rule::new(rule.id.clone(), after.clone())?;
    Ok((
        rewritten,
        RewriteStep {
            law,
            site,
            before: rule.body.clone(),
            after,
        },
    ))
}

/// Applies a sequence of laws, returning the final rule and its trace.
pub fn apply_laws(rule: &Rule, laws: &[Law]) -> Result<(Rule, RewriteTrace), RewriteError> {
    let mut current = rule.clone();
    let mut trace = RewriteTrace::default();
    for &law in laws {
        let (next, step) = apply_law(&current, law)?;
        trace.steps.push(step);
        current = next;
    }
    Ok((current, trace))
}

/// Composes `k` laws, each drawn uniformly from those applicable to the
/// current form. Pure in `(rule, k, seed)`.
pub fn stack_laws(rule: &Rule, k: usize, seed: u64) -> Result<(Rule, RewriteTrace), RewriteError> {
    if !STACK_RANGE.contains(&k) {
        return Err(RewriteError::BadStackSize(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = rule.clone();
    let mut trace = RewriteTrace::default();
    for step in 0..k {
        let candidates = applicable_laws(&current);
        if candidates.is_empty() {
            return Err(RewriteError::StackingFailed { step });
        }
        let law = candidates[rng.random_range(0..candidates.len())];
        let (next, s) = apply_law(&current, law)?;
        trace.steps.push(s);
        current = next;
    }
    if !equivalent(&rule.body, &current.body)? {
        return Err(RewriteError::NotEquivalent {
            law: trace.steps.last().map(|s| s.law).unwrap_or(Law::Identity),
            formula: rule.body.to_string(),
        });
    }
    Ok((current, trace))
}

/// Swaps the two disjuncts of a disjunctive fact.
pub fn commute_fact(fact: &Fact) -> Result<Fact, RewriteError> {
    match fact.body() {
        Formula::Or(a, b) => Ok(Fact::new(Formula::or((**b).clone(), (**a).clone()))?),
        other => Err(RewriteError::NotApplicable {
            law: Law::Commutativity,
            formula: other.to_string(),
        }),
    }
}
