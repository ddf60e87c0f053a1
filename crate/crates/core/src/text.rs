//! Templated English for facts, rules, and questions.
//!
//! Sentence forms:
//!
//! ```text
//! If someone is <phrase> then they are <phrase>.
//! It is not the case that someone is <phrase>.      (negated and/or)
//! Someone is <phrase>.                              (anything else)
//! <Entity> is <literal>[ or <literal>].             (facts)
//! <Entity> is <attribute>. True/False?              (questions)
//! ```
//!
//! Phrases flatten left-nested `or`/`and` chains, bind `and` tighter than
//! `or`, and mark any other grouping with `either X or Y` / `both X and Y`,
//! whose operands are single unary phrases. The parser is the exact inverse
//! of the renderer on every form the generator and rewriter produce.

use std::fmt;

use thiserror::Error;

use crate::inference::Question;
use crate::logic::{Attribute, Entity, Fact, Formula, GroundAtom, LogicError, Rule, RuleId};

pub const QUESTION_SUFFIX: &str = " True/False?";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("cannot render `{0}` as a sentence")]
    Unrenderable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, message: impl Into<String>) -> Self {
        Self {
            position,
            message: message.into(),
        }
    }
}

fn unrenderable<A: fmt::Display>(f: &Formula<A>) -> RenderError {
    RenderError::Unrenderable(f.to_string())
}

fn name_of(f: &Formula) -> Option<&str> {
    match f {
        Formula::Atom(a) => Some(a.as_str()),
        _ => None,
    }
}

fn disj(f: &Formula, out: &mut String) -> Result<(), RenderError> {
    match f {
        Formula::Or(l, r) => {
            disj(l, out)?;
            out.push_str(" or ");
            conj(r, out)
        }
        other => conj(other, out),
    }
}

fn conj(f: &Formula, out: &mut String) -> Result<(), RenderError> {
    match f {
        Formula::And(l, r) => {
            conj(l, out)?;
            out.push_str(" and ");
            unary(r, out)
        }
        other => unary(other, out),
    }
}

fn unary(f: &Formula, out: &mut String) -> Result<(), RenderError> {
    match f {
        Formula::Not(x) => {
            out.push_str("not ");
            unary(x, out)
        }
        Formula::Or(l, r) => {
            out.push_str("either ");
            unary(l, out)?;
            out.push_str(" or ");
            unary(r, out)
        }
        Formula::And(l, r) => {
            out.push_str("both ");
            unary(l, out)?;
            out.push_str(" and ");
            unary(r, out)
        }
        other => {
            out.push_str(name_of(other).ok_or_else(|| unrenderable(other))?);
            Ok(())
        }
    }
}

/// Renders a property phrase such as `not green or cold`.
pub fn render_phrase(f: &Formula) -> Result<String, RenderError> {
    let mut out = String::new();
    disj(f, &mut out)?;
    Ok(out)
}

pub fn render_rule_body(body: &Formula) -> Result<String, RenderError> {
    match body {
        Formula::Implies(p, q) => Ok(format!(
            "If someone is {} then they are {}.",
            render_phrase(p)?,
            render_phrase(q)?
        )),
        Formula::Not(x) if matches!(x.as_ref(), Formula::And(..) | Formula::Or(..)) => Ok(format!(
            "It is not the case that someone is {}.",
            render_phrase(x)?
        )),
        other => Ok(format!("Someone is {}.", render_phrase(other)?)),
    }
}

pub fn render_rule(rule: &Rule) -> Result<String, RenderError> {
    render_rule_body(&rule.body)
}

pub fn render_fact(fact: &Fact) -> String {
    let schematic = fact
        .body()
        .map_atoms(&mut |a: &GroundAtom| a.attribute.clone());
    let phrase = render_phrase(&schematic).expect("fact literals always render");
    format!("{} is {}.", fact.entity(), phrase)
}

pub fn render_question(question: &Question) -> String {
    format!(
        "{} is {}.{}",
        question.subject, question.attribute, QUESTION_SUFFIX
    )
}

/// Facts, then rules, then the question, joined by single spaces.
pub fn serialize_prompt(facts: &[String], rules: &[String], question: &str) -> String {
    facts
        .iter()
        .chain(rules)
        .map(String::as_str)
        .chain(std::iter::once(question))
        .collect::<Vec<_>>()
        .join(" ")
}

/// The text an evaluated model sees for one question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedInstance {
    pub facts_text: Vec<String>,
    pub rules_text: Vec<String>,
    pub question_text: String,
    pub prompt: String,
}

impl RenderedInstance {
    pub fn new(facts_text: Vec<String>, rules_text: Vec<String>, question_text: String) -> Self {
        let prompt = serialize_prompt(&facts_text, &rules_text, &question_text);
        Self {
            facts_text,
            rules_text,
            question_text,
            prompt,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    offset: usize,
}

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    index: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    /// Splits `body` (a sentence without its final period) on single spaces.
    fn new(body: &'a str, base: usize) -> Result<Self, ParseError> {
        let mut tokens = Vec::new();
        let mut offset = base;
        for text in body.split(' ') {
            if text.is_empty() {
                return Err(ParseError::new(offset, "expected a word"));
            }
            tokens.push(Token { text, offset });
            offset += text.len() + 1;
        }
        Ok(Self {
            tokens,
            index: 0,
            end: base + body.len(),
        })
    }

    fn peek(&self) -> Option<&'a str> {
        self.tokens.get(self.index).map(|t| t.text)
    }

    fn position(&self) -> usize {
        self.tokens.get(self.index).map_or(self.end, |t| t.offset)
    }

    fn expect(&mut self, word: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(w) if w == word => {
                self.index += 1;
                Ok(())
            }
            Some(w) => Err(ParseError::new(
                self.position(),
                format!("expected `{word}`, found `{w}`"),
            )),
            None => Err(ParseError::new(
                self.position(),
                format!("expected `{word}`"),
            )),
        }
    }

    fn expect_all(&mut self, words: &[&str]) -> Result<(), ParseError> {
        words.iter().try_for_each(|w| self.expect(w))
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(w) => Err(ParseError::new(
                self.position(),
                format!("unexpected `{w}`"),
            )),
        }
    }

    fn disj(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conj()?;
        while self.peek() == Some("or") {
            self.index += 1;
            acc = Formula::or(acc, self.conj()?);
        }
        Ok(acc)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while self.peek() == Some("and") {
            self.index += 1;
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let position = self.position();
        match self.peek() {
            Some("not") => {
                self.index += 1;
                Ok(Formula::not(self.unary()?))
            }
            Some("either") => {
                self.index += 1;
                let l = self.unary()?;
                self.expect("or")?;
                Ok(Formula::or(l, self.unary()?))
            }
            Some("both") => {
                self.index += 1;
                let l = self.unary()?;
                self.expect("and")?;
                Ok(Formula::and(l, self.unary()?))
            }
            Some(word) => {
                let attr = Attribute::new(word).map_err(|_| {
                    ParseError::new(position, format!("`{word}` is not an attribute"))
                })?;
                self.index += 1;
                Ok(Formula::Atom(attr))
            }
            None => Err(ParseError::new(position, "expected an attribute")),
        }
    }

    fn entity(&mut self) -> Result<Entity, ParseError> {
        let position = self.position();
        let word = self
            .peek()
            .ok_or_else(|| ParseError::new(position, "expected a name"))?;
        let entity = Entity::new(word)
            .map_err(|_| ParseError::new(position, format!("`{word}` is not an entity name")))?;
        self.index += 1;
        Ok(entity)
    }
}

fn strip_period(text: &str) -> Result<&str, ParseError> {
    text.strip_suffix('.')
        .ok_or_else(|| ParseError::new(text.len(), "sentence must end with `.`"))
}

/// Parses a rule sentence back into its body.
pub fn parse_rule_body(text: &str) -> Result<Formula, ParseError> {
    let body = strip_period(text)?;
    let mut p = Parser::new(body, 0)?;
    let formula = match p.peek() {
        Some("If") => {
            p.expect_all(&["If", "someone", "is"])?;
            let antecedent = p.disj()?;
            p.expect_all(&["then", "they", "are"])?;
            Formula::implies(antecedent, p.disj()?)
        }
        Some("It") => {
            p.expect_all(&["It", "is", "not", "the", "case", "that", "someone", "is"])?;
            Formula::not(p.disj()?)
        }
        Some("Someone") => {
            p.expect_all(&["Someone", "is"])?;
            p.disj()?
        }
        _ => return Err(ParseError::new(0, "expected `If`, `It`, or `Someone`")),
    };
    p.finish()?;
    Ok(formula)
}

pub fn parse_rule(id: RuleId, text: &str) -> Result<Rule, ParseError> {
    let body = parse_rule_body(text)?;
    Rule::new(id, body).map_err(|e| ParseError::new(0, e.to_string()))
}

pub fn parse_fact(text: &str) -> Result<Fact, ParseError> {
    let body = strip_period(text)?;
    let mut p = Parser::new(body, 0)?;
    let entity = p.entity()?;
    p.expect("is")?;
    let phrase_start = p.position();
    let phrase = p.disj()?;
    p.finish()?;
    let ground = phrase.map_atoms(&mut |a| GroundAtom::new(entity.clone(), a.clone()));
    Fact::new(ground).map_err(|e: LogicError| ParseError::new(phrase_start, e.to_string()))
}

pub fn parse_question(text: &str) -> Result<Question, ParseError> {
    let sentence = text
        .strip_suffix(QUESTION_SUFFIX)
        .ok_or_else(|| ParseError::new(text.len(), "question must end with `. True/False?`"))?;
    let body = strip_period(sentence)?;
    let mut p = Parser::new(body, 0)?;
    let subject = p.entity()?;
    p.expect("is")?;
    let position = p.position();
    let attribute = match p.unary()? {
        Formula::Atom(a) => a,
        _ => {
            return Err(ParseError::new(
                position,
                "question must ask about one attribute",
            ))
        }
    };
    p.finish()?;
    Ok(Question::new(subject, attribute))
}

/// Any sentence that may appear in an instance file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sentence {
    Fact(Fact),
    Rule(Formula),
    Question(Question),
}

/// Classifies a sentence by its shape and parses it.
pub fn parse_sentence(text: &str) -> Result<Sentence, ParseError> {
    if text.ends_with(QUESTION_SUFFIX) {
        return parse_question(text).map(Sentence::Question);
    }
    match text.split(' ').next() {
        Some("If" | "It" | "Someone") => parse_rule_body(text).map(Sentence::Rule),
        _ => parse_fact(text).map(Sentence::Fact),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::Literal;

    fn attr(s: &str) -> Attribute {
        Attribute::new(s).unwrap()
    }

    fn at(s: &str) -> Formula {
        Formula::Atom(attr(s))
    }

    fn anne() -> Entity {
        Entity::new("Anne").unwrap()
    }

    fn round_trip(body: Formula, expected: &str) {
        let text = render_rule_body(&body).unwrap();
        assert_eq!(text, expected);
        assert_eq!(parse_rule_body(&text).unwrap(), body);
    }

    #[test]
    fn rule_templates() {
        round_trip(
            Formula::implies(at("green"), at("cold")),
            "If someone is green then they are cold.",
        );
        round_trip(
            Formula::implies(Formula::not(at("cold")), Formula::not(at("green"))),
            "If someone is not cold then they are not green.",
        );
        round_trip(
            Formula::or(Formula::not(at("green")), at("cold")),
            "Someone is not green or cold.",
        );
        round_trip(
            Formula::not(Formula::and(at("green"), Formula::not(at("cold")))),
            "It is not the case that someone is green and not cold.",
        );
        round_trip(
            Formula::implies(Formula::or(at("green"), at("green")), at("cold")),
            "If someone is green or green then they are cold.",
        );
        round_trip(
            Formula::implies(Formula::not(Formula::not(at("green"))), at("cold")),
            "If someone is not not green then they are cold.",
        );
    }

    #[test]
    fn grouping_words_disambiguate_nesting() {
        round_trip(
            Formula::or(at("a"), Formula::or(at("b"), at("c"))),
            "Someone is a or either b or c.",
        );
        round_trip(
            Formula::or(Formula::or(at("a"), at("b")), at("c")),
            "Someone is a or b or c.",
        );
        round_trip(
            Formula::and(Formula::or(at("a"), at("b")), at("c")),
            "Someone is either a or b and c.",
        );
        round_trip(
            Formula::or(Formula::and(at("a"), at("b")), at("c")),
            "Someone is a and b or c.",
        );
        round_trip(
            Formula::implies(
                Formula::not(Formula::or(Formula::or(at("a"), at("a")), at("a"))),
                Formula::and(at("b"), Formula::and(at("c"), at("d"))),
            ),
            "If someone is not either either a or a or a then they are b and both c and d.",
        );
        round_trip(
            Formula::not(Formula::not(Formula::and(at("a"), at("b")))),
            "Someone is not not both a and b.",
        );
    }

    #[test]
    fn constants_are_unrenderable() {
        let err = render_rule_body(&Formula::implies(Formula::True, at("cold"))).unwrap_err();
        assert!(matches!(err, RenderError::Unrenderable(_)));
    }

    #[test]
    fn fact_templates() {
        let e = anne();
        let two = Fact::from_literals(
            &e,
            &[Literal::pos(attr("green")), Literal::pos(attr("blue"))],
        )
        .unwrap();
        assert_eq!(render_fact(&two), "Anne is green or blue.");
        let neg = Fact::from_literals(
            &e,
            &[Literal::neg(attr("cold")), Literal::neg(attr("nice"))],
        )
        .unwrap();
        assert_eq!(render_fact(&neg), "Anne is not cold or not nice.");
        let one = Fact::from_literals(&e, &[Literal::pos(attr("green"))]).unwrap();
        assert_eq!(render_fact(&one), "Anne is green.");
        for f in [two, neg, one] {
            assert_eq!(parse_fact(&render_fact(&f)).unwrap(), f);
        }
    }

    #[test]
    fn question_template() {
        let q = Question::new(anne(), attr("cold"));
        assert_eq!(render_question(&q), "Anne is cold. True/False?");
        assert_eq!(
            render_question(&Question::new(anne(), attr("nice"))),
            "Anne is nice. True/False?"
        );
        let bob = Question::new(Entity::new("Bob").unwrap(), attr("rough"));
        assert_eq!(render_question(&bob), "Bob is rough. True/False?");
        assert_eq!(parse_question("Bob is rough. True/False?").unwrap(), bob);
    }

    #[test]
    fn parse_errors_carry_positions() {
        let e = parse_rule_body("If someone is green than they are cold.").unwrap_err();
        assert_eq!(e.position, 20);
        let e = parse_rule_body("If someone is green then they are cold").unwrap_err();
        assert_eq!(e.position, 38);
        let e = parse_rule_body("If someone is  green then they are cold.").unwrap_err();
        assert_eq!(e.position, 14);
        let e = parse_rule_body("Someone is Green.").unwrap_err();
        assert_eq!(e.position, 11);
        let e = parse_fact("Anne is green and blue.").unwrap_err();
        assert_eq!(e.position, 8);
        let e = parse_fact("anne is green.").unwrap_err();
        assert_eq!(e.position, 0);
        assert!(parse_question("Anne is cold.").is_err());
        assert!(parse_question("Anne is not cold. True/False?").is_err());
    }

    #[test]
    fn prompt_order() {
        let facts = vec!["Anne is green or blue.".to_string()];
        let rules = vec!["If someone is green then they are cold.".to_string()];
        let p = serialize_prompt(&facts, &rules, "Anne is cold. True/False?");
        assert_eq!(
            p,
            "Anne is green or blue. If someone is green then they are cold. Anne is cold. True/False?"
        );
        assert_eq!(
            serialize_prompt(&facts, &[], "Anne is cold. True/False?"),
            "Anne is green or blue. Anne is cold. True/False?"
        );
        let inst = RenderedInstance::new(facts, rules, "Anne is cold. True/False?".into());
        assert!(inst.prompt.starts_with("Anne is green or blue. If"));
    }

    #[test]
    fn sentences_are_classified() {
        assert!(matches!(
            parse_sentence("Anne is green or blue.").unwrap(),
            Sentence::Fact(_)
        ));
        assert!(matches!(
            parse_sentence("Someone is not green or cold.").unwrap(),
            Sentence::Rule(_)
        ));
        assert!(matches!(
            parse_sentence("Anne is cold. True/False?").unwrap(),
            Sentence::Question(_)
        ));
    }
}
