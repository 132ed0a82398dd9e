//! Running litmus tests and comparing models or implementations, with
//! serialisable reports.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::consistency::ModelId;
use crate::enumerate::{outcomes, program_hash, EnumError, EnumOptions, OutcomeSet};
use crate::litmus::{format_outcome, Expectation, Expected, Litmus, Outcome, Program};
use crate::stm::{translate, ImplVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Met,
    Violated,
    /// The expectation is about a model that was not run.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectationResult {
    pub model: ModelId,
    pub verdict: Expected,
    pub outcome: Outcome,
    pub status: Status,
}

impl fmt::Display for ExpectationResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match self.verdict {
            Expected::Allowed => "allowed",
            Expected::Forbidden => "forbidden",
        };
        let status = match self.status {
            Status::Met => "PASS",
            Status::Violated => "FAIL",
            Status::Skipped => "SKIP",
        };
        write!(f, "{} {verdict} {}: {status}", self.model, format_outcome(&self.outcome))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub program: String,
    pub program_hash: String,
    /// One outcome set per model run.
    pub results: Vec<OutcomeSet>,
    /// One entry per expectation of the file, in file order.
    pub expectations: Vec<ExpectationResult>,
    pub wall_time_ms: f64,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.expectations.iter().all(|e| e.status != Status::Violated)
    }
}

fn evaluate(e: &Expectation, set: Option<&OutcomeSet>) -> ExpectationResult {
    let status = match set {
        None => Status::Skipped,
        Some(s) if e.met_by(&s.outcomes) => Status::Met,
        Some(_) => Status::Violated,
    };
    ExpectationResult { model: e.model, verdict: e.verdict, outcome: e.outcome.clone(), status }
}

/// Runs `l` under `model`, or under every model its expectations mention
/// when `model` is `None`.
pub fn run_litmus(l: &Litmus, model: Option<ModelId>, opts: &EnumOptions) -> Result<RunReport, EnumError> {
    let start = Instant::now();
    let models: Vec<ModelId> = match model {
        Some(m) => vec![m],
        None => {
            let mut ms: Vec<ModelId> = Vec::new();
            for e in &l.expectations {
                if !ms.contains(&e.model) {
                    ms.push(e.model);
                }
            }
            ms
        }
    };
    let results = models.iter().map(|&m| outcomes(&l.program, m, opts)).collect::<Result<Vec<_>, _>>()?;
    let expectations = l.expectations.iter().map(|e| evaluate(e, results.iter().find(|r| r.model == e.model))).collect();
    Ok(RunReport {
        program: l.program.name.clone(),
        program_hash: program_hash(&l.program),
        results,
        expectations,
        wall_time_ms: start.elapsed().as_secs_f64() * 1000.0,
    })
}

/// One side of a comparison: a model applied to the program, or an
/// implementation of its transactions checked under a lock model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Model(ModelId),
    Impl(ImplVariant, ModelId),
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Model(m) => write!(f, "{m}"),
            Side::Impl(v, ModelId::Ra) => write!(f, "{v}"),
            Side::Impl(v, m) => write!(f, "{v}@{m}"),
        }
    }
}

impl FromStr for Side {
    type Err = String;

    /// `si`, `rsi`, ... name a model; `eager-si` names an implementation
    /// checked under RA, `eager-si@ra-rsync` one checked under RA with RSync.
    fn from_str(s: &str) -> Result<Self, String> {
        if let Some((v, m)) = s.split_once('@') {
            let m: ModelId = m.parse()?;
            if !m.is_ra() {
                return Err(format!("implementations run under ra or ra-rsync, not {m}"));
            }
            return Ok(Side::Impl(v.parse()?, m));
        }
        if let Ok(m) = s.parse::<ModelId>() {
            return Ok(Side::Model(m));
        }
        s.parse::<ImplVariant>().map(|v| Side::Impl(v, ModelId::Ra)).map_err(|_| format!("`{s}` is neither a model nor an implementation"))
    }
}

pub fn side_outcomes(p: &Program, side: Side, opts: &EnumOptions) -> Result<OutcomeSet, EnumError> {
    match side {
        Side::Model(m) => outcomes(p, m, opts),
        Side::Impl(v, m) => outcomes(&translate(p, v), m, opts),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub program: String,
    pub left: String,
    pub right: String,
    pub left_graphs: usize,
    pub right_graphs: usize,
    pub left_only: Vec<Outcome>,
    pub right_only: Vec<Outcome>,
    pub equal: bool,
    pub wall_time_ms: f64,
}

pub fn compare(p: &Program, left: Side, right: Side, opts: &EnumOptions) -> Result<CompareReport, EnumError> {
    let start = Instant::now();
    let l = side_outcomes(p, left, opts)?;
    let r = side_outcomes(p, right, opts)?;
    let diff = |a: &BTreeSet<Outcome>, b: &BTreeSet<Outcome>| a.difference(b).cloned().collect::<Vec<_>>();
    let left_only = diff(&l.outcomes, &r.outcomes);
    let right_only = diff(&r.outcomes, &l.outcomes);
    Ok(CompareReport {
        program: p.name.clone(),
        left: left.to_string(),
        right: right.to_string(),
        left_graphs: l.graph_count,
        right_graphs: r.graph_count,
        equal: left_only.is_empty() && right_only.is_empty(),
        left_only,
        right_only,
        wall_time_ms: start.elapsed().as_secs_f64() * 1000.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn sides_parse() {
        assert_eq!("si".parse::<Side>().unwrap(), Side::Model(ModelId::SiAxiomatic));
        assert_eq!("cand-b".parse::<Side>().unwrap(), Side::Impl(ImplVariant::CandB, ModelId::Ra));
        assert_eq!("eager-rsi@ra-rsync".parse::<Side>().unwrap(), Side::Impl(ImplVariant::EagerRsi, ModelId::RaRsync));
        assert!("eager-si@rsi".parse::<Side>().is_err());
        assert!("nope".parse::<Side>().is_err());
        for s in ["si", "cand-b", "eager-rsi@ra-rsync"] {
            assert_eq!(s.parse::<Side>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn run_report_round_trips() {
        let lu = &corpus::fig1()[0];
        let r = run_litmus(lu, Some(ModelId::SiAxiomatic), &EnumOptions::default()).unwrap();
        assert!(r.passed());
        assert!(r.expectations.iter().any(|e| e.status == Status::Skipped));
        let back: RunReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn ws_against_cand_b() {
        let ws = &corpus::fig1()[1];
        let r = compare(&ws.program, Side::Model(ModelId::SiAxiomatic), Side::Impl(ImplVariant::CandB, ModelId::Ra), &EnumOptions::default()).unwrap();
        assert!(!r.equal);
        assert!(r.right_only.is_empty());
        assert_eq!(r.left_only.len(), 1);
    }
}
