//! Auditable lower-bound certificates.
//!
//! A certificate is an ordered list of inequalities between named
//! quantities. Verified steps carry exact values for both sides and are
//! re-checked by [`check_certificate`] using only those stored values.
//! External-assumption steps (cited theorems applied at sizes we cannot
//! enumerate) are kept visibly separate and counted in the summary.

mod bounds;
mod expr;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use bounds::*;
pub use expr::{Expr, ExprJson};

use crate::norms::Alpha;
use crate::rational::{self, Rational};

/// Rational upper bound on Euler's number used in every side condition.
pub fn e_upper() -> Rational {
    Rational::new(271828182845905u64.into(), 100000000000000u64.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rel {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Rel {
    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            Rel::Lt => ord == Ordering::Less,
            Rel::Le => ord != Ordering::Greater,
            Rel::Eq => ord == Ordering::Equal,
            Rel::Ge => ord != Ordering::Less,
            Rel::Gt => ord == Ordering::Greater,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    VerifiedExact,
    VerifiedByEnumeration,
    ExternalAssumption,
}

impl Status {
    pub fn is_verified(self) -> bool {
        self != Status::ExternalAssumption
    }
}

/// A named quantity, with its exact value when known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Expr>,
}

impl Quantity {
    pub fn named(name: impl Into<String>) -> Self {
        Quantity { name: name.into(), value: None }
    }

    pub fn valued(name: impl Into<String>, value: Expr) -> Self {
        Quantity { name: name.into(), value: Some(value) }
    }

    pub fn rational(name: impl Into<String>, value: Rational) -> Self {
        Self::valued(name, Expr::rational(value))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub claim: String,
    pub lhs: Quantity,
    pub relation: Rel,
    pub rhs: Quantity,
    pub status: Status,
    pub citation: String,
}

/// The final statement: `subject relation bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conclusion {
    pub subject: String,
    pub relation: Rel,
    pub bound: Quantity,
    /// For norm bounds, which norm: `α = 1` is `μ` itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_alpha: Option<Alpha>,
    /// Whether the subject is `2^{bits}` for a communication cost.
    #[serde(default)]
    pub in_bits: bool,
    /// `log₂` of the bound, for humans; absent when the bound is not positive.
    pub log2_bound: Option<f64>,
    /// True when the bound says nothing (for bit bounds, `2^{bits} ≤ 1`).
    pub vacuous: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub verified_exact: usize,
    pub verified_by_enumeration: usize,
    pub external_assumptions: usize,
    pub total: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub title: String,
    pub parameters: BTreeMap<String, String>,
    pub steps: Vec<Step>,
    pub conclusion: Option<Conclusion>,
    pub notes: Vec<String>,
    pub summary: Summary,
}

impl BoundCertificate {
    pub fn new(title: impl Into<String>) -> Self {
        BoundCertificate {
            title: title.into(),
            parameters: BTreeMap::new(),
            steps: Vec::new(),
            conclusion: None,
            notes: Vec::new(),
            summary: Summary::default(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_owned(), value.to_string());
        self
    }

    pub fn note(&mut self, text: impl Into<String>) -> &mut Self {
        self.notes.push(text.into());
        self
    }

    pub fn push(&mut self, step: Step) -> &mut Self {
        self.steps.push(step);
        self.summary = summarise(&self.steps);
        self
    }

    pub fn verified(&mut self, claim: impl Into<String>, lhs: Quantity, relation: Rel, rhs: Quantity, citation: &str) -> &mut Self {
        self.push(Step { claim: claim.into(), lhs, relation, rhs, status: Status::VerifiedExact, citation: citation.into() })
    }

    pub fn enumerated(&mut self, claim: impl Into<String>, lhs: Quantity, relation: Rel, rhs: Quantity, citation: &str) -> &mut Self {
        self.push(Step {
            claim: claim.into(),
            lhs,
            relation,
            rhs,
            status: Status::VerifiedByEnumeration,
            citation: citation.into(),
        })
    }

    pub fn assume(&mut self, claim: impl Into<String>, lhs: Quantity, relation: Rel, rhs: Quantity, citation: &str) -> &mut Self {
        self.push(Step {
            claim: claim.into(),
            lhs,
            relation,
            rhs,
            status: Status::ExternalAssumption,
            citation: citation.into(),
        })
    }

    /// Sets the conclusion; `bound` must carry a value.
    pub fn conclude(&mut self, subject: &str, relation: Rel, bound: Quantity, norm_alpha: Option<Alpha>, in_bits: bool) {
        let value = bound.value.clone().expect("conclusion bound has a value");
        let log2_bound = value.log2_f64();
        let vacuous = if in_bits {
            value.cmp_exact(&Expr::int(1)).map(|o| o != Ordering::Greater).unwrap_or(true)
        } else {
            value.signum() <= 0
        };
        self.conclusion = Some(Conclusion {
            subject: subject.to_owned(),
            relation,
            bound,
            norm_alpha,
            in_bits,
            log2_bound: (value.signum() > 0).then_some(log2_bound),
            vacuous,
        });
    }

    pub fn final_bound(&self) -> Option<&Expr> {
        self.conclusion.as_ref().and_then(|c| c.bound.value.as_ref())
    }

    /// Human-readable rendering.
    pub fn render(&self) -> String {
        let mut out = format!("{}\n", self.title);
        for (k, v) in &self.parameters {
            out.push_str(&format!("  {k} = {v}\n"));
        }
        for (i, s) in self.steps.iter().enumerate() {
            let tag = match s.status {
                Status::VerifiedExact => "exact",
                Status::VerifiedByEnumeration => "enumerated",
                Status::ExternalAssumption => "ASSUMED",
            };
            let show = |q: &Quantity| match &q.value {
                Some(v) if v.exponent == Rational::from_integer(0.into()) => format!("{} [{}]", q.name, v),
                Some(v) => format!("{} [{} ~ {:.6}]", q.name, v, v.to_f64()),
                None => q.name.clone(),
            };
            out.push_str(&format!(
                "{:>3}. ({tag}) {}\n       {} {} {}   <{}>\n",
                i + 1,
                s.claim,
                show(&s.lhs),
                s.relation,
                show(&s.rhs),
                s.citation
            ));
        }
        if let Some(c) = &self.conclusion {
            let v = c.bound.value.as_ref().expect("valued");
            out.push_str(&format!("conclusion: {} {} {}", c.subject, c.relation, v));
            if let Some(l) = c.log2_bound {
                out.push_str(&format!(" (log2 = {l:.6})"));
            }
            if c.vacuous {
                out.push_str(" [vacuous]");
            }
            out.push('\n');
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out.push_str(&format!(
            "summary: {} exact, {} by enumeration, {} external assumptions\n",
            self.summary.verified_exact, self.summary.verified_by_enumeration, self.summary.external_assumptions
        ));
        out
    }
}

fn summarise(steps: &[Step]) -> Summary {
    let count = |s: Status| steps.iter().filter(|x| x.status == s).count();
    Summary {
        verified_exact: count(Status::VerifiedExact),
        verified_by_enumeration: count(Status::VerifiedByEnumeration),
        external_assumptions: count(Status::ExternalAssumption),
        total: steps.len(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub valid: bool,
    pub errors: Vec<String>,
    pub steps_checked: usize,
    pub external_assumptions: usize,
}

/// Re-validates a certificate from its stored values alone.
///
/// Checks that every verified step holds exactly, external steps carry a
/// citation, each name has one value throughout, the summary counts are
/// right, and the conclusion follows from the steps by chaining.
pub fn check_certificate(cert: &BoundCertificate) -> CheckReport {
    let mut errors = Vec::new();
    let mut values: HashMap<&str, &Expr> = HashMap::new();
    let mut checked = 0;
    for (i, s) in cert.steps.iter().enumerate() {
        for q in [&s.lhs, &s.rhs] {
            if let Some(v) = &q.value {
                match values.get(q.name.as_str()) {
                    Some(prev) => match prev.equals(v) {
                        Ok(true) => {}
                        Ok(false) => errors.push(format!("step {}: {:?} has two different values", i + 1, q.name)),
                        Err(e) => errors.push(format!("step {}: cannot compare values of {:?}: {e}", i + 1, q.name)),
                    },
                    None => {
                        values.insert(q.name.as_str(), v);
                    }
                }
            }
        }
        if s.citation.trim().is_empty() {
            errors.push(format!("step {} has no citation", i + 1));
        }
        if s.status.is_verified() {
            match (&s.lhs.value, &s.rhs.value) {
                (Some(l), Some(r)) => match l.cmp_exact(r) {
                    Ok(ord) if s.relation.holds(ord) => checked += 1,
                    Ok(_) => errors.push(format!("step {} fails: {} {} {} is false", i + 1, l, s.relation, r)),
                    Err(e) => errors.push(format!("step {}: {e}", i + 1)),
                },
                _ => errors.push(format!("step {} is marked verified but lacks values", i + 1)),
            }
        }
    }
    if summarise(&cert.steps) != cert.summary {
        errors.push("summary counts do not match the steps".into());
    }
    match &cert.conclusion {
        None => errors.push("certificate has no conclusion".into()),
        Some(c) => {
            match &c.bound.value {
                None => errors.push("conclusion bound has no value".into()),
                Some(v) => {
                    if let Some(prev) = values.get(c.bound.name.as_str()) {
                        if !prev.equals(v).unwrap_or(false) {
                            errors.push("conclusion value differs from the steps".into());
                        }
                    }
                    let vacuous = if c.in_bits {
                        v.cmp_exact(&Expr::int(1)).map(|o| o != Ordering::Greater).unwrap_or(true)
                    } else {
                        v.signum() <= 0
                    };
                    if vacuous != c.vacuous {
                        errors.push("vacuous flag is wrong".into());
                    }
                }
            }
            if !follows(&cert.steps, &c.subject, c.relation, &c.bound.name) {
                errors.push(format!(
                    "conclusion {} {} {} does not follow from the steps",
                    c.subject, c.relation, c.bound.name
                ));
            }
        }
    }
    CheckReport {
        valid: errors.is_empty(),
        errors,
        steps_checked: checked,
        external_assumptions: cert.summary.external_assumptions,
    }
}

/// Whether `from rel to` follows by transitivity. Strictness is dropped:
/// the conclusion `≥`/`≤` follows from any mix of strict and non-strict
/// links, `=` only from equalities.
fn follows(steps: &[Step], from: &str, rel: Rel, to: &str) -> bool {
    if from == to {
        return matches!(rel, Rel::Le | Rel::Eq | Rel::Ge);
    }
    let mut edges: HashMap<&str, Vec<&str>> = HashMap::new();
    let want_ge = matches!(rel, Rel::Ge | Rel::Gt);
    let want_eq = rel == Rel::Eq;
    for s in steps {
        let (l, r) = (s.lhs.name.as_str(), s.rhs.name.as_str());
        let ge = matches!(s.relation, Rel::Ge | Rel::Gt);
        let le = matches!(s.relation, Rel::Le | Rel::Lt);
        let eq = s.relation == Rel::Eq;
        if eq {
            edges.entry(l).or_default().push(r);
            edges.entry(r).or_default().push(l);
        } else if !want_eq {
            // Edge a -> b means a >= b (or a <= b when proving upper bounds).
            if (ge && want_ge) || (le && !want_ge) {
                edges.entry(l).or_default().push(r);
            } else {
                edges.entry(r).or_default().push(l);
            }
        }
    }
    let mut seen: HashSet<&str> = HashSet::new();
    let mut queue = VecDeque::from([from]);
    while let Some(n) = queue.pop_front() {
        if n == to {
            return true;
        }
        if !seen.insert(n) {
            continue;
        }
        if let Some(next) = edges.get(n) {
            queue.extend(next.iter().copied());
        }
    }
    false
}

/// Render a rational for claim text.
pub(crate) fn fmt_rat(r: &Rational) -> String {
    rational::format(r)
}
