//! Ground truth for a theory.
//!
//! Entailment is decided by enumerating every assignment over the theory
//! vocabulary. A separate case-split forward chainer produces readable
//! derivation traces and doubles as an independent cross-check on
//! implication-form theories.
//!
//! Answers follow closed-world, conservative semantics: a question is `T`
//! only when its atom holds in every model of a consistent theory.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{
    Attribute, Entity, Formula, Literal, LogicError, MaskFormula, RuleId, Theory, ATOM_BUDGET,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("attribute `{0}` is not in the theory vocabulary")]
    UnknownAttribute(String),
    #[error("question is about `{found}` but the theory describes `{expected}`")]
    ForeignSubject { expected: String, found: String },
    #[error("rule {0} is not in plain implication form and cannot be chained")]
    UnsupportedRuleForm(RuleId),
    #[error("answer policy `{0}` is not implemented")]
    PolicyNotImplemented(AnswerPolicy),
}

/// Binary gold/predicted label, serialized as `"T"` / `"F"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    T,
    F,
}

impl Label {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Label::T
        } else {
            Label::F
        }
    }

    pub fn as_bool(self) -> bool {
        self == Label::T
    }

    pub fn flipped(self) -> Self {
        Label::from_bool(!self.as_bool())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::T => "T",
            Label::F => "F",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// "Is `subject` `attribute`?"
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Question {
    pub subject: Entity,
    pub attribute: Attribute,
}

impl Question {
    pub fn new(subject: Entity, attribute: Attribute) -> Self {
        Self { subject, attribute }
    }

    /// Attaches the oracle answer for `theory`.
    pub fn label(self, theory: &Theory) -> Result<LabelledQuestion, InferenceError> {
        let gold = answer(theory, &self)?;
        Ok(LabelledQuestion {
            question: self,
            gold,
        })
    }
}

/// A question together with its oracle-computed gold label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelledQuestion {
    pub question: Question,
    gold: Label,
}

impl LabelledQuestion {
    pub fn gold(&self) -> Label {
        self.gold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntailmentStatus {
    Entailed,
    NotEntailed,
    Inconsistent,
}

impl fmt::Display for EntailmentStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntailmentStatus::Entailed => "entailed",
            EntailmentStatus::NotEntailed => "not entailed",
            EntailmentStatus::Inconsistent => "inconsistent",
        })
    }
}

/// How to answer questions against an inconsistent theory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AnswerPolicy {
    /// Withhold every conclusion: all answers are `F`.
    #[default]
    Conservative,
    PriorityBased,
    Paraconsistent,
}

impl fmt::Display for AnswerPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnswerPolicy::Conservative => "conservative",
            AnswerPolicy::PriorityBased => "priority-based",
            AnswerPolicy::Paraconsistent => "paraconsistent",
        })
    }
}

/// Everything a single model enumeration tells us about a theory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntailmentSummary {
    pub consistent: bool,
    pub model_count: u64,
    /// Attributes true in every model, in vocabulary order. Empty when
    /// the theory is inconsistent.
    pub entailed: Vec<Attribute>,
}

fn compiled_constraints(theory: &Theory) -> Result<Vec<MaskFormula>, InferenceError> {
    let n = theory.vocabulary.len();
    if n > ATOM_BUDGET {
        return Err(LogicError::AtomBudgetExceeded {
            count: n,
            limit: ATOM_BUDGET,
        }
        .into());
    }
    let mut out = Vec::with_capacity(theory.facts.len() + theory.rules.len());
    for fact in &theory.facts {
        out.push(MaskFormula::compile(fact.body(), &theory.vocabulary)?);
    }
    for rule in &theory.rules {
        out.push(MaskFormula::compile(&rule.body, &theory.vocabulary)?);
    }
    Ok(out)
}

/// Every satisfying assignment, as bitmasks over `theory.vocabulary`.
pub fn models(theory: &Theory) -> Result<Vec<u64>, InferenceError> {
    let constraints = compiled_constraints(theory)?;
    let total = 1u64 << theory.vocabulary.len();
    Ok((0..total)
        .filter(|&m| constraints.iter().all(|c| c.eval(m)))
        .collect())
}

pub fn summarize(theory: &Theory) -> Result<EntailmentSummary, InferenceError> {
    let models = models(theory)?;
    if models.is_empty() {
        return Ok(EntailmentSummary {
            consistent: false,
            model_count: 0,
            entailed: Vec::new(),
        });
    }
    let all_true = models.iter().fold(u64::MAX, |acc, m| acc & m);
    let entailed = theory
        .vocabulary
        .iter()
        .enumerate()
        .filter(|(i, _)| all_true >> i & 1 == 1)
        .map(|(_, a)| a.clone())
        .collect();
    Ok(EntailmentSummary {
        consistent: true,
        model_count: models.len() as u64,
        entailed,
    })
}

pub fn is_consistent(theory: &Theory) -> Result<bool, InferenceError> {
    let constraints = compiled_constraints(theory)?;
    let total = 1u64 << theory.vocabulary.len();
    Ok((0..total).any(|m| constraints.iter().all(|c| c.eval(m))))
}

pub fn entails(theory: &Theory, attribute: &Attribute) -> Result<EntailmentStatus, InferenceError> {
    let index = theory
        .vocabulary
        .iter()
        .position(|a| a == attribute)
        .ok_or_else(|| InferenceError::UnknownAttribute(attribute.to_string()))?;
    let summary = summarize(theory)?;
    Ok(if !summary.consistent {
        EntailmentStatus::Inconsistent
    } else if summary.entailed.contains(&theory.vocabulary[index]) {
        EntailmentStatus::Entailed
    } else {
        EntailmentStatus::NotEntailed
    })
}

/// Conservative closed-world answer: `T` iff the atom is entailed.
pub fn answer(theory: &Theory, question: &Question) -> Result<Label, InferenceError> {
    answer_with_policy(theory, question, AnswerPolicy::Conservative)
}

pub fn answer_with_policy(
    theory: &Theory,
    question: &Question,
    policy: AnswerPolicy,
) -> Result<Label, InferenceError> {
    if policy != AnswerPolicy::Conservative {
        return Err(InferenceError::PolicyNotImplemented(policy));
    }
    if question.subject != theory.entity {
        return Err(InferenceError::ForeignSubject {
            expected: theory.entity.to_string(),
            found: question.subject.to_string(),
        });
    }
    let status = entails(theory, &question.attribute)?;
    Ok(Label::from_bool(status == EntailmentStatus::Entailed))
}

/// One forward-chaining firing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationStep {
    pub rule: RuleId,
    pub derived: Literal,
}

/// Why a branch closed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conflict {
    /// `None` when two assumed fact literals already clash.
    pub rule: Option<RuleId>,
    pub literal: Literal,
}

/// Chaining within one combination of chosen fact disjuncts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchTrace {
    pub assumptions: Vec<Literal>,
    pub steps: Vec<DerivationStep>,
    pub conflict: Option<Conflict>,
}

impl BranchTrace {
    pub fn is_closed(&self) -> bool {
        self.conflict.is_some()
    }
}

/// Per-branch traces, ordered by disjunct index (first fact varies slowest).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DerivationTrace {
    pub branches: Vec<BranchTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainOutcome {
    /// Positive atoms derived in every open branch, in vocabulary order.
    pub entailed: Vec<Attribute>,
    pub trace: DerivationTrace,
    /// True iff every branch derived a literal and its negation.
    pub inconsistent: bool,
}

struct ChainRule<'a> {
    id: &'a RuleId,
    body: &'a Formula,
    heads: Vec<Literal>,
}

fn literal_tree(f: &Formula) -> bool {
    match f {
        Formula::And(l, r) | Formula::Or(l, r) => literal_tree(l) && literal_tree(r),
        Formula::True | Formula::False => true,
        other => Literal::from_formula(other).is_some(),
    }
}

fn collect_heads(f: &Formula, out: &mut Vec<Literal>) -> bool {
    match f {
        Formula::And(l, r) => collect_heads(l, out) && collect_heads(r, out),
        other => match Literal::from_formula(other) {
            Some(l) => {
                out.push(l);
                true
            }
            None => false,
        },
    }
}

/// True when `f` holds under every completion of `known`.
fn satisfied(f: &Formula, known: &BTreeMap<Attribute, bool>) -> bool {
    match f {
        Formula::Atom(a) => known.get(a) == Some(&true),
        Formula::Not(x) => match x.as_ref() {
            Formula::Atom(a) => known.get(a) == Some(&false),
            _ => false,
        },
        Formula::And(l, r) => satisfied(l, known) && satisfied(r, known),
        Formula::Or(l, r) => satisfied(l, known) || satisfied(r, known),
        Formula::True => true,
        Formula::False | Formula::Implies(..) => false,
    }
}

fn run_branch(
    assumptions: Vec<Literal>,
    rules: &[ChainRule<'_>],
) -> (BranchTrace, BTreeMap<Attribute, bool>) {
    let mut known = BTreeMap::new();
    let mut trace = BranchTrace {
        assumptions,
        steps: Vec::new(),
        conflict: None,
    };
    for lit in &trace.assumptions {
        match known.get(&lit.attribute) {
            Some(&v) if v != lit.positive => {
                trace.conflict = Some(Conflict {
                    rule: None,
                    literal: lit.clone(),
                });
                return (trace, known);
            }
            _ => {
                known.insert(lit.attribute.clone(), lit.positive);
            }
        }
    }
    loop {
        let mut changed = false;
        for rule in rules {
            if !satisfied(rule.body, &known) {
                continue;
            }
            for head in &rule.heads {
                match known.get(&head.attribute) {
                    Some(&v) if v == head.positive => {}
                    Some(_) => {
                        trace.conflict = Some(Conflict {
                            rule: Some(rule.id.clone()),
                            literal: head.clone(),
                        });
                        return (trace, known);
                    }
                    None => {
                        known.insert(head.attribute.clone(), head.positive);
                        trace.steps.push(DerivationStep {
                            rule: rule.id.clone(),
                            derived: head.clone(),
                        });
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return (trace, known);
        }
    }
}

/// Case-splits on every disjunctive fact and chains rules to a fixpoint in
/// each branch.
///
/// Every rule must be `P → Q` with `P` an and/or tree of literals and `Q` a
/// literal or a conjunction of literals.
pub fn forward_chain(theory: &Theory) -> Result<ChainOutcome, InferenceError> {
    let mut rules = Vec::with_capacity(theory.rules.len());
    for rule in &theory.rules {
        let unsupported = || InferenceError::UnsupportedRuleForm(rule.id.clone());
        let Formula::Implies(body, head) = &rule.body else {
            return Err(unsupported());
        };
        if !literal_tree(body) {
            return Err(unsupported());
        }
        let mut heads = Vec::new();
        if !collect_heads(head, &mut heads) {
            return Err(unsupported());
        }
        rules.push(ChainRule {
            id: &rule.id,
            body,
            heads,
        });
    }

    let choices: Vec<Vec<Literal>> = theory.facts.iter().map(|f| f.literals()).collect();
    let branch_count: usize = choices.iter().map(Vec::len).product();
    let mut branches = Vec::with_capacity(branch_count);
    let mut common: Option<Vec<Attribute>> = None;
    for index in 0..branch_count {
        // Mixed-radix decode with the first fact as the most significant digit.
        let mut rem = index;
        let mut picks = vec![0; choices.len()];
        for (slot, options) in picks.iter_mut().zip(&choices).rev() {
            *slot = rem % options.len();
            rem /= options.len();
        }
        let assumptions = picks
            .iter()
            .zip(&choices)
            .map(|(&i, c)| c[i].clone())
            .collect();
        let (trace, known) = run_branch(assumptions, &rules);
        if !trace.is_closed() {
            let derived: Vec<Attribute> = theory
                .vocabulary
                .iter()
                .filter(|a| known.get(*a) == Some(&true))
                .cloned()
                .collect();
            common = Some(match common {
                None => derived,
                Some(prev) => prev.into_iter().filter(|a| derived.contains(a)).collect(),
            });
        }
        branches.push(trace);
    }
    let inconsistent = common.is_none();
    Ok(ChainOutcome {
        entailed: common.unwrap_or_default(),
        trace: DerivationTrace { branches },
        inconsistent,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RulePartition {
    pub essential: Vec<RuleId>,
    pub redundant: Vec<RuleId>,
}

/// A rule is redundant when deleting it changes none of the answers.
pub fn essential_rules(
    theory: &Theory,
    questions: &[Question],
) -> Result<RulePartition, InferenceError> {
    let baseline: Vec<Label> = questions
        .iter()
        .map(|q| answer(theory, q))
        .collect::<Result<_, _>>()?;
    let mut partition = RulePartition::default();
    for rule in &theory.rules {
        let reduced = theory.without_rule(&rule.id);
        let mut unchanged = true;
        for (q, expected) in questions.iter().zip(&baseline) {
            if answer(&reduced, q)? != *expected {
                unchanged = false;
                break;
            }
        }
        if unchanged {
            partition.redundant.push(rule.id.clone());
        } else {
            partition.essential.push(rule.id.clone());
        }
    }
    Ok(partition)
}
