//! Seeded generation of base groups, their eleven variants, and the on-disk
//! dataset.
//!
//! A base group is an isomorphic copy of the dilemma-plus-chain example:
//!
//! ```text
//! fact:  a0a ∨ a0b
//! rules: a0a→a1, a0b→a1, a1→a2, a2→a3, a3→a1 (redundant back-edge), a3→a4
//! questions: a1, a2, a3, a4 (all T)
//! ```
//!
//! Every gold label is recomputed by the entailment oracle on the theory the
//! record actually shows.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::inference::{InferenceError, Label, LabelledQuestion, Question};
use crate::logic::{Attribute, Entity, Fact, Literal, LogicError, Rule, RuleId, Theory};
use crate::rewrite::{self, Law, RewriteError, RewriteTrace};
use crate::text::{self, ParseError, RenderError};
use crate::vocab::{ADJECTIVES, NAMES};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BASE_TRAIN_FILE: &str = "base_train.jsonl";
pub const BASE_TEST_FILE: &str = "base_test.jsonl";
pub const QUESTIONS_PER_GROUP: usize = 4;
const FORMAT_VERSION: u32 = 1;

const SPLIT_SALT: u64 = 0x5350_4c49_545f_4944;
const POOL_SALT: u64 = 0x564f_4341_425f_504c;
const MULTI_SALT: u64 = 0x4d55_4c54_495f_4c41;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("vocabulary collision: `{0}` is used twice")]
    VocabularyCollision(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("record does not parse: {0}")]
    Parse(#[from] ParseError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: content hash does not match the manifest")]
    HashMismatch { path: PathBuf },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> GenError + '_ {
    move |source| GenError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// SplitMix64 finalizer; turns structured seeds into well-spread ones.
pub fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one group: the dataset seed XOR the group id.
pub fn group_seed(dataset_seed: u64, group_id: u32) -> u64 {
    dataset_seed ^ u64::from(group_id)
}

/// Names, vocabulary roles, and seed for one base group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub group_id: u32,
    pub entity: Entity,
    /// The two disjuncts of the dilemma fact (`a0a`, `a0b`).
    pub dilemma: [Attribute; 2],
    /// Chain attributes `a1..a4`; also the four questions, in order.
    pub chain: [Attribute; 4],
    pub seed: u64,
}

impl GroupSpec {
    pub fn new(
        group_id: u32,
        entity: Entity,
        dilemma: [Attribute; 2],
        chain: [Attribute; 4],
        seed: u64,
    ) -> Result<Self, GenError> {
        let spec = Self {
            group_id,
            entity,
            dilemma,
            chain,
            seed,
        };
        let vocab = spec.vocabulary();
        for (i, a) in vocab.iter().enumerate() {
            if vocab[..i].contains(a) {
                return Err(GenError::VocabularyCollision(a.to_string()));
            }
        }
        Ok(spec)
    }

    /// The worked example: Anne; green/blue; cold, rough, young, nice.
    pub fn worked_example() -> Self {
        let a = |s: &str| Attribute::new(s).expect("static attribute");
        Self::new(
            0,
            Entity::new("Anne").expect("static entity"),
            [a("green"), a("blue")],
            [a("cold"), a("rough"), a("young"), a("nice")],
            0,
        )
        .expect("distinct attributes")
    }

    /// `[a0a, a0b, a1, a2, a3, a4]`.
    pub fn vocabulary(&self) -> Vec<Attribute> {
        self.dilemma.iter().chain(&self.chain).cloned().collect()
    }
}

/// Assigns attribute words and entity names to the groups of one dataset.
#[derive(Debug, Clone)]
pub struct VocabularyPlan {
    dataset_seed: u64,
    permutation: Vec<usize>,
}

impl VocabularyPlan {
    pub fn new(dataset_seed: u64) -> Self {
        let mut permutation: Vec<usize> = (0..ADJECTIVES.len()).collect();
        permutation.shuffle(&mut ChaCha8Rng::seed_from_u64(mix(dataset_seed, POOL_SALT)));
        Self {
            dataset_seed,
            permutation,
        }
    }

    pub fn pool_size() -> usize {
        ADJECTIVES.len()
    }

    /// Groups with ids below this get disjoint words.
    pub fn disjoint_groups() -> usize {
        ADJECTIVES.len() / 6
    }

    pub fn policy() -> String {
        format!(
            "groups 0..{} take disjoint 6-word blocks of a seeded permutation of the {}-word pool; \
             later groups draw 6 distinct words independently from the group seed, so words may \
             repeat across those groups",
            Self::disjoint_groups(),
            Self::pool_size()
        )
    }

    pub fn spec(&self, group_id: u32) -> GroupSpec {
        let seed = group_seed(self.dataset_seed, group_id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = group_id as usize;
        let words: Vec<usize> = if g < Self::disjoint_groups() {
            self.permutation[g * 6..g * 6 + 6].to_vec()
        } else {
            rand::seq::index::sample(&mut rng, ADJECTIVES.len(), 6).into_vec()
        };
        let entity = NAMES[rng.random_range(0..NAMES.len())];
        let a = |i: usize| Attribute::new(ADJECTIVES[words[i]]).expect("validated pool");
        GroupSpec::new(
            group_id,
            Entity::new(entity).expect("validated pool"),
            [a(0), a(1)],
            [a(2), a(3), a(4), a(5)],
            seed,
        )
        .expect("distinct words drawn")
    }
}

/// A base theory with its labelled questions and role bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseGroup {
    pub spec: GroupSpec,
    pub theory: Theory,
    pub questions: Vec<LabelledQuestion>,
    /// `a3 → a1`; deleting it changes nothing.
    pub redundant_rule: RuleId,
    /// `a1 → a2`; deleting it cuts the chain.
    pub essential_rule: RuleId,
}

impl BaseGroup {
    pub fn gold(&self) -> Vec<Label> {
        self.questions.iter().map(LabelledQuestion::gold).collect()
    }
}

fn unlabelled(spec: &GroupSpec) -> Vec<Question> {
    spec.chain
        .iter()
        .map(|a| Question::new(spec.entity.clone(), a.clone()))
        .collect()
}

fn label_all(theory: &Theory, questions: Vec<Question>) -> Result<Vec<LabelledQuestion>, GenError> {
    Ok(questions
        .into_iter()
        .map(|q| q.label(theory))
        .collect::<Result<_, _>>()?)
}

pub fn sample_base_group(spec: &GroupSpec) -> Result<BaseGroup, GenError> {
    let [a0a, a0b] = spec.dilemma.clone();
    let [a1, a2, a3, a4] = spec.chain.clone();
    let fact = Fact::from_literals(
        &spec.entity,
        &[Literal::pos(a0a.clone()), Literal::pos(a0b.clone())],
    )?;
    let edges = [
        (a0a, a1.clone()),
        (a0b, a1.clone()),
        (a1, a2.clone()),
        (a2, a3.clone()),
        (a3.clone(), spec.chain[0].clone()),
        (a3, a4),
    ];
    let rules = edges
        .into_iter()
        .enumerate()
        .map(|(i, (from, to))| Rule::implication(RuleId::positional(i + 1), from, to))
        .collect();
    let theory = Theory::new(spec.entity.clone(), spec.vocabulary(), vec![fact], rules)?;
    let questions = label_all(&theory, unlabelled(spec))?;
    Ok(BaseGroup {
        spec: spec.clone(),
        theory,
        questions,
        redundant_rule: RuleId::positional(5),
        essential_rule: RuleId::positional(3),
    })
}

/// The eleven dataset splits, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "&'static str", try_from = "String")]
pub enum VariantKind {
    Base,
    Variant1,
    Variant2,
    Variant3,
    Contrapositive,
    DoubleNegation,
    Implication,
    DeMorgan,
    Identity,
    Commutativity,
    Multi,
}

impl VariantKind {
    pub const ALL: [VariantKind; 11] = [
        VariantKind::Base,
        VariantKind::Variant1,
        VariantKind::Variant2,
        VariantKind::Variant3,
        VariantKind::Contrapositive,
        VariantKind::DoubleNegation,
        VariantKind::Implication,
        VariantKind::DeMorgan,
        VariantKind::Identity,
        VariantKind::Commutativity,
        VariantKind::Multi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariantKind::Base => "base",
            VariantKind::Variant1 => "variant1",
            VariantKind::Variant2 => "variant2",
            VariantKind::Variant3 => "variant3",
            VariantKind::Contrapositive => "variant4-contrapositive",
            VariantKind::DoubleNegation => "variant4-double-negation",
            VariantKind::Implication => "variant4-implication",
            VariantKind::DeMorgan => "variant4-de-morgan",
            VariantKind::Identity => "variant4-identity",
            VariantKind::Commutativity => "variant4-commutativity",
            VariantKind::Multi => "variant4-multi",
        }
    }

    /// The single law a `variant4-<law>` split applies.
    pub fn law(self) -> Option<Law> {
        match self {
            VariantKind::Contrapositive => Some(Law::Contraposition),
            VariantKind::DoubleNegation => Some(Law::DoubleNegation),
            VariantKind::Implication => Some(Law::Implication),
            VariantKind::DeMorgan => Some(Law::DeMorgan),
            VariantKind::Identity => Some(Law::Identity),
            VariantKind::Commutativity => Some(Law::Commutativity),
            _ => None,
        }
    }

    /// Whether the split should keep the base group's answers.
    pub fn preserves_semantics(self) -> bool {
        !matches!(self, VariantKind::Variant2 | VariantKind::Variant3)
    }

    pub fn file_name(self) -> String {
        format!("{}.jsonl", self.name())
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VariantKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VariantKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown variant `{s}`"))
    }
}

impl From<VariantKind> for &'static str {
    fn from(k: VariantKind) -> Self {
        k.name()
    }
}

impl TryFrom<String> for VariantKind {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// A dataset split, or the merged-dilemma rewrite that is only built on
/// request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Standard(VariantKind),
    MergedDilemma,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Standard(k) => k.name(),
            Variant::MergedDilemma => "merged-dilemma",
        }
    }
}

/// One perturbed copy of a base group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantInstance {
    pub variant: Variant,
    pub theory: Theory,
    /// One trace per rule of `theory`, empty where the rule is untouched.
    pub traces: Vec<RewriteTrace>,
    pub questions: Vec<LabelledQuestion>,
    pub description: String,
}

impl VariantInstance {
    pub fn laws_applied(&self) -> Vec<Vec<Law>> {
        self.traces.iter().map(RewriteTrace::laws).collect()
    }

    pub fn gold(&self) -> Vec<Label> {
        self.questions.iter().map(LabelledQuestion::gold).collect()
    }

    pub fn render(&self) -> Result<(Vec<String>, Vec<String>), RenderError> {
        let facts = self.theory.facts.iter().map(text::render_fact).collect();
        let rules = self
            .theory
            .rules
            .iter()
            .map(text::render_rule)
            .collect::<Result<_, _>>()?;
        Ok((facts, rules))
    }
}

/// Rewrites one rule for a single-law split. De Morgan never fits a plain
/// implication, so it runs as implication followed by De Morgan there.
fn single_law_rewrite(rule: &Rule, law: Law) -> Result<(Rule, RewriteTrace), GenError> {
    if rewrite::applicable(law, rule) {
        return Ok(rewrite::apply_laws(rule, &[law])?);
    }
    if law == Law::DeMorgan && rewrite::applicable(Law::Implication, rule) {
        let (mid, _) = rewrite::apply_law(rule, Law::Implication)?;
        if rewrite::applicable(Law::DeMorgan, &mid) {
            return Ok(rewrite::apply_laws(
                rule,
                &[Law::Implication, Law::DeMorgan],
            )?);
        }
    }
    Ok((rule.clone(), RewriteTrace::default()))
}

fn describe(kind: VariantKind, group: &BaseGroup) -> String {
    let s = &group.spec;
    match kind {
        VariantKind::Base => format!(
            "base: dilemma {} or {} feeds the chain {} -> {} -> {} -> {}, with a redundant back-edge {} -> {}",
            s.dilemma[0], s.dilemma[1], s.chain[0], s.chain[1], s.chain[2], s.chain[3], s.chain[2], s.chain[0]
        ),
        VariantKind::Variant1 => format!(
            "redundant rule removed: the back-edge {} -> {} is deleted; every answer is unchanged",
            s.chain[2], s.chain[0]
        ),
        VariantKind::Variant2 => format!(
            "essential rule removed: {} -> {} is deleted, so {}, {} and {} are no longer derivable",
            s.chain[0], s.chain[1], s.chain[1], s.chain[2], s.chain[3]
        ),
        VariantKind::Variant3 => format!(
            "contradictory fact added: {} is not {} or not {}; the theory is inconsistent and every conclusion is withheld",
            s.entity, s.chain[0], s.chain[3]
        ),
        VariantKind::Contrapositive => {
            "contrapositive: every rule P -> Q is rewritten to not Q -> not P".into()
        }
        VariantKind::DoubleNegation => {
            "double negation: every rule antecedent P is rewritten to not not P".into()
        }
        VariantKind::Implication => {
            "implication: every rule P -> Q is rewritten to the disjunction not P or Q".into()
        }
        VariantKind::DeMorgan => "de morgan: every rule P -> Q is rewritten to not P or Q and then \
             to not (P and not Q), rendered as 'It is not the case that someone is P and not Q'"
            .into(),
        VariantKind::Identity => {
            "identity: every rule antecedent P is duplicated to P or P".into()
        }
        VariantKind::Commutativity => "commutativity: the operands of the disjunctive fact are \
             swapped; rules have no binary connective and are unchanged"
            .into(),
        VariantKind::Multi => "multi-law stacking: each rule is rewritten by an independently \
             seeded sequence of 2-5 equivalence laws (see laws_applied)"
            .into(),
    }
}

/// Builds one variant. `seed` only matters for `Multi`.
pub fn make_variant(
    group: &BaseGroup,
    kind: VariantKind,
    seed: u64,
) -> Result<VariantInstance, GenError> {
    let base = &group.theory;
    let untouched = |t: &Theory| vec![RewriteTrace::default(); t.rules.len()];
    let (theory, traces) = match kind {
        VariantKind::Base => (base.clone(), untouched(base)),
        VariantKind::Variant1 => {
            let t = base.without_rule(&group.redundant_rule);
            let tr = untouched(&t);
            (t, tr)
        }
        VariantKind::Variant2 => {
            let t = base.without_rule(&group.essential_rule);
            let tr = untouched(&t);
            (t, tr)
        }
        VariantKind::Variant3 => {
            let clash = Fact::from_literals(
                &group.spec.entity,
                &[
                    Literal::neg(group.spec.chain[0].clone()),
                    Literal::neg(group.spec.chain[3].clone()),
                ],
            )?;
            (base.with_fact(clash), untouched(base))
        }
        VariantKind::Multi => {
            let mut t = base.clone();
            let mut traces = Vec::with_capacity(t.rules.len());
            for (i, rule) in t.rules.iter_mut().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, MULTI_SALT ^ i as u64));
                let k = rng.random_range(rewrite::STACK_RANGE);
                let (rewritten, trace) = rewrite::stack_laws(rule, k, rng.next_u64())?;
                *rule = rewritten;
                traces.push(trace);
            }
            (t, traces)
        }
        single => {
            let law = single.law().expect("remaining kinds are single-law");
            let mut t = base.clone();
            let mut traces = Vec::with_capacity(t.rules.len());
            for rule in t.rules.iter_mut() {
                let (rewritten, trace) = single_law_rewrite(rule, law)?;
                *rule = rewritten;
                traces.push(trace);
            }
            if law == Law::Commutativity {
                for fact in t.facts.iter_mut().filter(|f| f.is_disjunctive()) {
                    *fact = rewrite::commute_fact(fact)?;
                }
            }
            (t, traces)
        }
    };
    let questions = label_all(&theory, unlabelled(&group.spec))?;
    Ok(VariantInstance {
        variant: Variant::Standard(kind),
        theory,
        traces,
        questions,
        description: describe(kind, group),
    })
}

/// Rules 1 and 2 merged into `(a0a ∨ a0b) → a1`, keeping only `a1 → a2` and
/// `a2 → a3` from the chain.
pub fn merged_dilemma_variant(group: &BaseGroup) -> Result<VariantInstance, GenError> {
    use crate::logic::Formula;
    let s = &group.spec;
    let atom = |a: &Attribute| Formula::Atom(a.clone());
    let merged = Rule::new(
        RuleId::new("ruleA"),
        Formula::implies(
            Formula::or(atom(&s.dilemma[0]), atom(&s.dilemma[1])),
            atom(&s.chain[0]),
        ),
    )?;
    let keep = |n: usize| {
        group
            .theory
            .rule(&RuleId::positional(n))
            .cloned()
            .expect("base rule")
    };
    let theory = Theory::new(
        s.entity.clone(),
        s.vocabulary(),
        group.theory.facts.clone(),
        vec![merged, keep(3), keep(4)],
    )?;
    let questions = label_all(&theory, unlabelled(s))?;
    Ok(VariantInstance {
        variant: Variant::MergedDilemma,
        traces: vec![RewriteTrace::default(); theory.rules.len()],
        theory,
        questions,
        description: "rule equivalence merge: the two dilemma rules become one rule with a \
                      disjunctive antecedent; the back-edge and the final chain rule are dropped"
            .into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub group_id: u32,
    pub split: Split,
    pub variant: VariantKind,
    pub facts: Vec<String>,
    pub rules: Vec<String>,
    pub laws_applied: Vec<Vec<Law>>,
    pub question: String,
    pub question_index: usize,
    pub label: Label,
    pub description: String,
}

impl QuestionRecord {
    pub fn prompt(&self) -> String {
        text::serialize_prompt(&self.facts, &self.rules, &self.question)
    }

    /// Parses the rendered facts and rules back into a theory. The vocabulary
    /// is every attribute mentioned plus the queried one.
    pub fn theory(&self) -> Result<(Theory, Question), GenError> {
        let question = text::parse_question(&self.question)?;
        let facts = self
            .facts
            .iter()
            .map(|f| text::parse_fact(f))
            .collect::<Result<Vec<_>, _>>()?;
        let rules = self
            .rules
            .iter()
            .enumerate()
            .map(|(i, r)| text::parse_rule(RuleId::positional(i + 1), r))
            .collect::<Result<Vec<_>, _>>()?;
        let entity = facts
            .first()
            .map_or_else(|| question.subject.clone(), |f| f.entity().clone());
        let theory = Theory::inferring_vocabulary(
            entity,
            facts,
            rules,
            std::slice::from_ref(&question.attribute),
        )?;
        Ok((theory, question))
    }
}

fn records_for(
    instance: &VariantInstance,
    kind: VariantKind,
    group_id: u32,
    split: Split,
) -> Result<Vec<QuestionRecord>, GenError> {
    let (facts, rules) = instance.render()?;
    let laws = instance.laws_applied();
    Ok(instance
        .questions
        .iter()
        .enumerate()
        .map(|(i, q)| QuestionRecord {
            group_id,
            split,
            variant: kind,
            facts: facts.clone(),
            rules: rules.clone(),
            laws_applied: laws.clone(),
            question: text::render_question(&q.question),
            question_index: i,
            label: q.gold(),
            description: instance.description.clone(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetConfig {
    pub groups: usize,
    pub train: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            groups: 100,
            train: 80,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub records: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub seed: u64,
    pub total_groups: usize,
    pub train_group_ids: Vec<u32>,
    pub test_group_ids: Vec<u32>,
    /// Scored questions per split: `base` counts test groups only, every
    /// variant counts all groups.
    pub question_counts: BTreeMap<String, usize>,
    /// Base questions over all groups; the denominator variant Δ is taken
    /// against.
    pub delta_reference_questions: usize,
    pub total_records: usize,
    pub vocabulary_pool_size: usize,
    pub vocabulary_policy: String,
    pub files: BTreeMap<String, FileEntry>,
}

/// A dataset held in memory, ready to be written or scored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    /// Records per file name, in the manifest's file order.
    pub files: BTreeMap<String, Vec<QuestionRecord>>,
}

impl Dataset {
    pub fn records(&self) -> impl Iterator<Item = &QuestionRecord> {
        self.files.values().flatten()
    }

    /// SHA-256 of the serialized manifest.
    pub fn manifest_hash(&self) -> String {
        sha256_hex(&manifest_bytes(&self.manifest))
    }

    pub fn write(&self, dir: &Path) -> Result<(), GenError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for (name, records) in &self.files {
            let path = dir.join(name);
            fs::write(&path, jsonl_bytes(records)).map_err(io_err(&path))?;
        }
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, manifest_bytes(&self.manifest)).map_err(io_err(&path))
    }

    /// Reads a dataset directory and checks every file against its hash.
    pub fn load(dir: &Path) -> Result<Self, GenError> {
        let path = dir.join(MANIFEST_FILE);
        let raw = fs::read(&path).map_err(io_err(&path))?;
        let manifest: DatasetManifest =
            serde_json::from_slice(&raw).map_err(|source| GenError::Json {
                path: path.clone(),
                source,
            })?;
        let mut files = BTreeMap::new();
        for (name, entry) in &manifest.files {
            let path = dir.join(name);
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            if sha256_hex(&bytes) != entry.sha256 {
                return Err(GenError::HashMismatch { path });
            }
            let records = parse_jsonl(&bytes, &path)?;
            files.insert(name.clone(), records);
        }
        Ok(Self { manifest, files })
    }
}

pub fn parse_jsonl<T: for<'de> Deserialize<'de>>(
    bytes: &[u8],
    path: &Path,
) -> Result<Vec<T>, GenError> {
    let text = std::str::from_utf8(bytes).map_err(|e| GenError::Io {
        path: path.to_path_buf(),
        source: io::Error::new(io::ErrorKind::InvalidData, e),
    })?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|source| GenError::Json {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect()
}

pub fn jsonl_bytes<T: Serialize>(records: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("records serialize");
        out.push(b'\n');
    }
    out
}

fn manifest_bytes(manifest: &DatasetManifest) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    out.push(b'\n');
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// All eleven variants of one group as records.
pub fn group_records(
    spec: &GroupSpec,
    split: Split,
) -> Result<Vec<(VariantKind, Vec<QuestionRecord>)>, GenError> {
    let group = sample_base_group(spec)?;
    VariantKind::ALL
        .into_iter()
        .map(|kind| {
            let instance = make_variant(&group, kind, spec.seed)?;
            Ok((kind, records_for(&instance, kind, spec.group_id, split)?))
        })
        .collect()
}

/// Generates every group and variant in memory.
pub fn generate(config: &DatasetConfig) -> Result<Dataset, GenError> {
    if config.groups == 0 {
        return Err(GenError::InvalidConfig(
            "at least one group is required".into(),
        ));
    }
    if config.train >= config.groups {
        return Err(GenError::InvalidConfig(format!(
            "train ({}) must be smaller than groups ({})",
            config.train, config.groups
        )));
    }
    let groups = u32::try_from(config.groups)
        .map_err(|_| GenError::InvalidConfig("too many groups".into()))?;
    let mut order: Vec<u32> = (0..groups).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix(config.seed, SPLIT_SALT)));
    let mut train_ids = order[..config.train].to_vec();
    let mut test_ids = order[config.train..].to_vec();
    train_ids.sort_unstable();
    test_ids.sort_unstable();

    let plan = VocabularyPlan::new(config.seed);
    let per_group: Vec<_> = (0..groups)
        .into_par_iter()
        .map(|id| {
            let split = if train_ids.binary_search(&id).is_ok() {
                Split::Train
            } else {
                Split::Test
            };
            group_records(&plan.spec(id), split).map(|r| (split, r))
        })
        .collect::<Result<_, _>>()?;

    let mut files: BTreeMap<String, Vec<QuestionRecord>> = BTreeMap::new();
    files.insert(BASE_TRAIN_FILE.into(), Vec::new());
    files.insert(BASE_TEST_FILE.into(), Vec::new());
    for (split, variants) in per_group {
        for (kind, records) in variants {
            let name = match (kind, split) {
                (VariantKind::Base, Split::Train) => BASE_TRAIN_FILE.to_string(),
                (VariantKind::Base, Split::Test) => BASE_TEST_FILE.to_string(),
                _ => kind.file_name(),
            };
            files.entry(name).or_default().extend(records);
        }
    }

    let mut question_counts = BTreeMap::new();
    question_counts.insert("base".to_string(), files[BASE_TEST_FILE].len());
    for kind in &VariantKind::ALL[1..] {
        question_counts.insert(kind.name().to_string(), files[&kind.file_name()].len());
    }
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        seed: config.seed,
        total_groups: config.groups,
        train_group_ids: train_ids,
        test_group_ids: test_ids,
        question_counts,
        delta_reference_questions: files[BASE_TRAIN_FILE].len() + files[BASE_TEST_FILE].len(),
        total_records: files.values().map(Vec::len).sum(),
        vocabulary_pool_size: VocabularyPlan::pool_size(),
        vocabulary_policy: VocabularyPlan::policy(),
        files: files
            .iter()
            .map(|(name, records)| {
                let entry = FileEntry {
                    records: records.len(),
                    sha256: sha256_hex(&jsonl_bytes(records)),
                };
                (name.clone(), entry)
            })
            .collect(),
    };
    Ok(Dataset { manifest, files })
}

/// Generates and writes a dataset, returning its manifest.
pub fn generate_dataset(
    config: &DatasetConfig,
    out_dir: &Path,
) -> Result<DatasetManifest, GenError> {
    let dataset = generate(config)?;
    dataset.write(out_dir)?;
    Ok(dataset.manifest)
}
