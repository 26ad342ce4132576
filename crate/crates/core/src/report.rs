//! Analysis pipeline and its JSON documents.
//!
//! Reports are written as pretty-printed JSON with every real rounded to 12
//! significant digits, so emitting a parsed report reproduces it byte for
//! byte.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::coupling::{jpd_feasibility, minimize_mismatch, optimal_coupling};
use crate::error::{Error, Result};
use crate::generators::GeneratorSpec;
use crate::ingest::{bootstrap_resample, CountTable};
use crate::measures::{
    bdk_check, chsh_profile, closed_form_delta_min, marginal_consistency, signaling_profile,
    ChshProfile, MarginalConsistency, SignalingProfile,
};
use crate::types::{ContextLabel, CyclicSystem, PairJoint, DEFAULT_TOL};

/// Largest `|Δ_min(LP) - max(Δ₀, Δ_CHSH)|` for a report to count as consistent.
pub const CLOSED_FORM_TOL: f64 = 1e-6;

const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableDoc {
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
}

/// On-disk form of a [`CyclicSystem`]: `{"contexts": {"11": {"pp": .., ..}, ..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDoc {
    pub contexts: BTreeMap<String, TableDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
}

impl SystemDoc {
    pub fn from_system(system: &CyclicSystem, generator: Option<GeneratorSpec>) -> Self {
        let contexts = system
            .joints()
            .iter()
            .map(|j| {
                let [pp, pm, mp, mm] = j.probs();
                (j.context().key(), TableDoc { pp, pm, mp, mm })
            })
            .collect();
        SystemDoc {
            contexts,
            generator,
        }
    }

    pub fn to_system(&self) -> Result<CyclicSystem> {
        if self.contexts.len() != 4 {
            return Err(Error::SystemFormat(format!(
                "expected 4 contexts, found {}",
                self.contexts.len()
            )));
        }
        let joints = self
            .contexts
            .iter()
            .map(|(key, t)| PairJoint::new(ContextLabel::from_key(key)?, [t.pp, t.pm, t.mp, t.mm]))
            .collect::<Result<Vec<_>>>()?;
        CyclicSystem::from_joints(joints)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("system document serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn read_system_json(text: &str) -> Result<CyclicSystem> {
    SystemDoc::from_json(text)?.to_system()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSummary {
    pub context: String,
    pub pp: f64,
    pub pm: f64,
    pub mp: f64,
    pub mm: f64,
    pub m_a: f64,
    pub m_b: f64,
    pub cov: f64,
}

fn summarize(system: &CyclicSystem) -> Vec<ContextSummary> {
    system
        .joints()
        .iter()
        .map(|j| {
            let [pp, pm, mp, mm] = j.probs();
            let s = j.stats();
            ContextSummary {
                context: j.context().key(),
                pp,
                pm,
                mp,
                mm,
                m_a: s.m_a,
                m_b: s.m_b,
                cov: s.cov,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub mean: f64,
    pub std: f64,
    pub q025: f64,
    pub q500: f64,
    pub q975: f64,
}

impl Quantiles {
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut v = samples.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Quantiles {
            mean,
            std: var.sqrt(),
            q025: quantile(&v, 0.025),
            q500: quantile(&v, 0.5),
            q975: quantile(&v, 0.975),
        }
    }
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicates: usize,
    pub seed: u64,
    pub delta0: Quantiles,
    pub delta_chsh: Quantiles,
    pub genuine: Quantiles,
}

/// Bootstrap distributions of `Δ₀`, `Δ_CHSH` and `Δ_min - Δ₀`.
pub fn bootstrap_summary(
    counts: &CountTable,
    seed: u64,
    replicates: usize,
) -> Result<BootstrapSummary> {
    let systems = bootstrap_resample(counts, seed, replicates)?;
    let rows = systems
        .par_iter()
        .map(|s| {
            let d0 = signaling_profile(s).delta0;
            let dc = chsh_profile(s).delta_chsh;
            let (dm, _) = optimal_coupling(s)?;
            Ok((d0, dc, dm - d0))
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&(f64, f64, f64)) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    Ok(BootstrapSummary {
        replicates,
        seed,
        delta0: Quantiles::from_samples(&col(|r| r.0)),
        delta_chsh: Quantiles::from_samples(&col(|r| r.1)),
        genuine: Quantiles::from_samples(&col(|r| r.2)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub contexts: Vec<ContextSummary>,
    pub tol: f64,
    pub signaling: SignalingProfile,
    pub marginal_consistency: MarginalConsistency,
    pub chsh: ChshProfile,
    pub delta_min_lp: f64,
    pub delta_min_closed: f64,
    pub closed_form_gap: f64,
    pub consistent: bool,
    pub genuine: f64,
    pub bdk_satisfied: bool,
    pub jpd_exists: bool,
    pub degenerate_coupling: bool,
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapSummary>,
}

/// Fields that do not need the LP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialReport {
    pub contexts: Vec<ContextSummary>,
    pub tol: f64,
    pub signaling: SignalingProfile,
    pub marginal_consistency: MarginalConsistency,
    pub chsh: ChshProfile,
    pub delta_min_closed: f64,
    pub bdk_satisfied: bool,
}

#[derive(Debug, thiserror::Error)]
#[error("analysis incomplete: {error}")]
pub struct AnalysisFailure {
    pub partial: Box<PartialReport>,
    #[source]
    pub error: Error,
}

#[derive(Debug, Clone, Copy)]
pub struct AnalysisOptions {
    /// Tolerance for the no-signaling verdict.
    pub tol: f64,
    pub include_witness: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            tol: DEFAULT_TOL,
            include_witness: false,
        }
    }
}

/// One-line classification from the three boolean findings.
pub fn verdict(bdk_satisfied: bool, jpd_exists: bool, signaling: bool) -> &'static str {
    match (jpd_exists, signaling, bdk_satisfied) {
        (true, _, _) => "noncontextual: a joint distribution exists",
        (false, false, false) => "contextual: CHSH violated without signaling",
        (false, false, true) => "no genuine contextuality: CHSH satisfied, no joint distribution",
        (false, true, true) => "signaling only: no genuine contextuality",
        (false, true, false) => "genuinely contextual beyond signaling",
    }
}

pub fn run_analysis(
    system: &CyclicSystem,
    options: AnalysisOptions,
) -> std::result::Result<AnalysisReport, AnalysisFailure> {
    let signaling = signaling_profile(system);
    let chsh = chsh_profile(system);
    let delta_min_closed = closed_form_delta_min(system);
    let bdk_satisfied = bdk_check(system);
    let partial = PartialReport {
        contexts: summarize(system),
        tol: options.tol,
        signaling,
        marginal_consistency: marginal_consistency(system, options.tol),
        chsh,
        delta_min_closed,
        bdk_satisfied,
    };
    let lp = minimize_mismatch(system).and_then(|m| Ok((m, jpd_feasibility(system)?)));
    let (mismatch, jpd) = match lp {
        Ok(v) => v,
        Err(error) => {
            return Err(AnalysisFailure {
                partial: Box::new(partial),
                error,
            })
        }
    };
    let closed_form_gap = (mismatch.delta_min - delta_min_closed).abs();
    let signaling_present = !partial.marginal_consistency.no_signaling;
    Ok(AnalysisReport {
        contexts: partial.contexts,
        tol: partial.tol,
        signaling,
        marginal_consistency: partial.marginal_consistency,
        chsh,
        delta_min_lp: mismatch.delta_min,
        delta_min_closed,
        closed_form_gap,
        consistent: closed_form_gap <= CLOSED_FORM_TOL,
        genuine: mismatch.delta_min - signaling.delta0,
        bdk_satisfied,
        jpd_exists: jpd.exists,
        degenerate_coupling: mismatch.degenerate,
        verdict: verdict(bdk_satisfied, jpd.exists, signaling_present).to_string(),
        witness: options
            .include_witness
            .then(|| mismatch.witness.weights().to_vec()),
        bootstrap: None,
    })
}

/// Rounds `x` to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let r = round_significant(n.as_f64().unwrap_or(0.0));
            if let Some(num) = serde_json::Number::from_f64(r) {
                *n = num;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with rounded reals and a trailing newline.
pub fn to_report_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report serializes");
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        to_report_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl PartialReport {
    pub fn to_json(&self) -> String {
        to_report_json(self)
    }
}
