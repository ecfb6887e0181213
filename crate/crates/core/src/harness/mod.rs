//! Monte-Carlo trials of encoder, jammer and decoder, with error estimates
//! and the diagnostics predicted by the analysis.

mod diagnostics;
mod sweep;

pub use diagnostics::{residual_entropy, EntropyDiagnostic};
pub use sweep::{sweep, write_sweep_csv, SweepAxis, SweepRow};

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{
    extract_subcode, plan_attack, AdversaryError, AttackConfig, AttackPlan, BabbleAndPush,
    BabbleOnly, CausalJammer, FailureFlags, StandDown,
};
use crate::capacity::{min_mi_feasible, CapacityError};
use crate::codec::{
    build_codebook, encode, iterative_decode, Codebook, CodecConfig, CodecError, DecodeOutcome,
    DecodeStatus, Vgrid,
};
use crate::model::{AvcSpec, ChunkScheme, CondDist, Dist, ModelError, SlackSchedule, Transcript};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Capacity(#[from] CapacityError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[serde(rename = "standdown")]
    #[value(name = "standdown")]
    StandDown,
    Babble,
    BabblePush,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    pub rate: f64,
    pub trials: usize,
    pub seed: u64,
    pub strategy: Strategy,
    /// Overrides the channel's budget when set.
    pub budget: Option<f64>,
    /// Input law used in every chunk; defaults to uniform when feasible.
    pub input: Option<Vec<f64>>,
    /// Seed-rate exponent; defaults to `ε⁴`.
    pub gamma: Option<f64>,
    pub delta_min: f64,
    pub delta0: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 240,
            k: 4,
            rate: 0.5,
            trials: 200,
            seed: 0,
            strategy: Strategy::StandDown,
            budget: None,
            input: None,
            gamma: None,
            delta_min: 0.5,
            delta0: 0.1,
        }
    }
}

/// How the jammer was set up.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum JammerSetup {
    StandDown,
    Babble {
        v: Vec<CondDist>,
        value: f64,
    },
    Push(Box<AttackPlan>),
    /// No division point met the rate guarantee; babble-only was used instead.
    NoAttackFallback {
        v: Vec<CondDist>,
        value: f64,
    },
}

/// Everything fixed before the first trial.
pub struct Experiment {
    pub avc: AvcSpec,
    pub cfg: ExperimentConfig,
    pub scheme: ChunkScheme,
    pub slack: SlackSchedule,
    pub codebook: Codebook,
    pub vgrid: Vgrid,
    pub tol: f64,
    pub jammer: JammerSetup,
}

/// Bob's side of a trial.
pub trait Decoder: Sync {
    fn decode(&self, y: &[usize]) -> DecodeOutcome;
}

pub struct IterativeDecoder<'a> {
    pub cb: &'a Codebook,
    pub avc: &'a AvcSpec,
    pub tol: f64,
    pub vgrid: &'a Vgrid,
}

impl Decoder for IterativeDecoder<'_> {
    fn decode(&self, y: &[usize]) -> DecodeOutcome {
        iterative_decode(y, self.cb, self.avc, self.tol, self.vgrid)
    }
}

/// Ignores the channel output and always answers the same message.
pub struct ConstantDecoder(pub usize);

impl Decoder for ConstantDecoder {
    fn decode(&self, _y: &[usize]) -> DecodeOutcome {
        DecodeOutcome {
            status: DecodeStatus::Decoded(self.0),
            alpha_used: None,
            list_sizes: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub message: usize,
    pub transcript: Transcript,
    pub outcome: DecodeOutcome,
    pub flags: FailureFlags,
    pub spoof: Option<usize>,
    /// Wrong or missing decision on a trial where the attack did not fail.
    pub error: bool,
}

/// One causal channel use: the jammer sees `x(i)` and answers `s(i)` before
/// the next input symbol, then Bob decodes the whole output.
///
/// A trial whose realised cost exceeds the budget is an attack failure and
/// never counts as an error.
pub fn run_trial<R: Rng>(
    cb: &Codebook,
    jammer: &mut dyn CausalJammer,
    decoder: &dyn Decoder,
    avc: &AvcSpec,
    m: usize,
    rng: &mut R,
) -> Result<TrialResult, HarnessError> {
    let (x, _seeds) = encode(cb, m, rng)?;
    let s: Vec<usize> = x.iter().map(|&xi| jammer.next_state(xi)).collect();
    let flags = jammer.failure();
    let mut transcript = Transcript::new(avc, &cb.scheme(), x, s, false);
    transcript.attack_failed = flags.any() || !transcript.within_budget(avc.budget());
    assert!(transcript.is_consistent(avc));
    let outcome = decoder.decode(&transcript.y);
    let error = !transcript.attack_failed && outcome.decoded() != Some(m);
    Ok(TrialResult {
        message: m,
        transcript,
        outcome,
        flags,
        spoof: jammer.spoof(),
        error,
    })
}

/// 95% Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let nf = n as f64;
    let p = k as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Per-trial summary written to CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub message: usize,
    pub spoof: Option<usize>,
    pub status: String,
    pub alpha_used: Option<usize>,
    pub max_list: usize,
    pub cost: f64,
    pub attack_failed: bool,
    pub zero_evidence: bool,
    pub budget_exhausted: bool,
    pub type_deviation: bool,
    pub error: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub trials: usize,
    pub messages: usize,
    pub seeds: usize,
    pub errors: usize,
    pub correct: usize,
    pub attack_failures: usize,
    pub avg_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Largest per-message error frequency among sampled messages.
    pub max_error: f64,
    pub attack_fail_rate: f64,
    /// Trials whose realised state cost exceeded the budget.
    pub cost_violation_rate: f64,
    pub decoded: usize,
    pub aborts: usize,
    pub erasures: usize,
    /// Trials whose spoof equals the transmitted message.
    pub collisions: usize,
    pub list_bound: usize,
    /// Fraction of trials whose largest list stays within `list_bound`.
    pub list_within_bound: f64,
    pub list_size_hist: BTreeMap<usize, usize>,
    pub alpha_hist: BTreeMap<usize, usize>,
    pub jammer: JammerSetup,
    pub records: Vec<TrialRecord>,
    #[serde(skip)]
    pub runtime_secs: f64,
}

fn uniform_or_feasible(avc: &AvcSpec) -> Vec<f64> {
    let u = vec![1.0 / avc.nx() as f64; avc.nx()];
    if avc.input_feasible(&u) {
        u
    } else {
        avc.some_feasible_input()
    }
}

impl Experiment {
    /// Builds codebook, decoder grid and jammer plan for a configuration.
    pub fn prepare(
        avc: &AvcSpec,
        cfg: &ExperimentConfig,
        codec: &CodecConfig,
        attack: &AttackConfig,
    ) -> Result<Self, HarnessError> {
        if cfg.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        let avc = match cfg.budget {
            Some(b) => avc.with_budget(b),
            None => avc.clone(),
        };
        let scheme = ChunkScheme::new(cfg.n, cfg.k)?;
        let slack = SlackSchedule::new(&scheme, avc.nx(), avc.ns(), cfg.delta_min, cfg.delta0);
        let input = match &cfg.input {
            Some(p) => Dist::new(p.clone())?,
            None => Dist::normalized(uniform_or_feasible(&avc))?,
        };
        let p_xu = CondDist::constant(cfg.k, &input);
        let gamma = cfg.gamma.unwrap_or(slack.gamma);
        let codebook = build_codebook(&avc, &p_xu, cfg.rate, &scheme, gamma, codec, cfg.seed)?;
        let vgrid = Vgrid::build(&codebook, &avc, &slack, codec.vgrid_resolution);
        let tol = codec.tolerance(scheme.chunk_len());
        let babble = || -> Result<(Vec<CondDist>, f64), HarnessError> {
            // below δ_state the reserve takes the whole budget
            let shrink = attack.delta_state.min(avc.budget());
            let w = min_mi_feasible(&codebook.params.p_xu, &avc, &scheme, shrink)?;
            Ok((w.v, w.value))
        };
        let jammer = match cfg.strategy {
            Strategy::StandDown => JammerSetup::StandDown,
            Strategy::Babble => {
                let (v, value) = babble()?;
                JammerSetup::Babble { v, value }
            }
            Strategy::BabblePush => {
                let sub = extract_subcode(&codebook, attack.delta_input);
                match plan_attack(&avc, &sub, &scheme, cfg.rate, attack) {
                    Ok(plan) => JammerSetup::Push(Box::new(plan)),
                    Err(AdversaryError::NoAttack) => {
                        let (v, value) = babble()?;
                        JammerSetup::NoAttackFallback { v, value }
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        };
        Ok(Experiment {
            avc,
            cfg: cfg.clone(),
            scheme,
            slack,
            codebook,
            vgrid,
            tol,
            jammer,
        })
    }

    pub fn decoder(&self) -> IterativeDecoder<'_> {
        IterativeDecoder {
            cb: &self.codebook,
            avc: &self.avc,
            tol: self.tol,
            vgrid: &self.vgrid,
        }
    }

    /// Independent stream for trial `t`; stream 0 is never used by trials.
    pub fn trial_rng(&self, t: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(t as u64 + 1);
        rng
    }

    /// Runs trial `t` against the configured jammer and a given decoder.
    pub fn trial_with(&self, t: usize, decoder: &dyn Decoder) -> Result<TrialResult, HarnessError> {
        let mut rng = self.trial_rng(t);
        let m = rng.gen_range(0..self.codebook.messages());
        let jrng = ChaCha8Rng::seed_from_u64(rng.gen());
        let mut jammer: Box<dyn CausalJammer + '_> = match &self.jammer {
            JammerSetup::StandDown => Box::new(StandDown::new(&self.avc)),
            JammerSetup::Babble { v, .. } | JammerSetup::NoAttackFallback { v, .. } => {
                Box::new(BabbleOnly::new(v, &self.scheme, jrng))
            }
            JammerSetup::Push(plan) => {
                Box::new(BabbleAndPush::new(plan, &self.codebook, &self.avc, jrng))
            }
        };
        run_trial(
            &self.codebook,
            jammer.as_mut(),
            decoder,
            &self.avc,
            m,
            &mut rng,
        )
    }

    pub fn trial(&self, t: usize) -> Result<TrialResult, HarnessError> {
        self.trial_with(t, &self.decoder())
    }
}

fn status_name(s: &DecodeStatus) -> &'static str {
    match s {
        DecodeStatus::Decoded(_) => "decoded",
        DecodeStatus::Abort(_) => "abort",
        DecodeStatus::Erasure => "erasure",
    }
}

/// Runs all trials in parallel and aggregates them in trial order.
pub fn estimate_error_with(
    exp: &Experiment,
    decoder: &dyn Decoder,
) -> Result<ExperimentReport, HarnessError> {
    let start = Instant::now();
    let results: Vec<TrialResult> = (0..exp.cfg.trials)
        .into_par_iter()
        .map(|t| exp.trial_with(t, decoder))
        .collect::<Result<_, _>>()?;
    let trials = results.len();
    let list_bound = exp.slack.list_bound(exp.avc.ny());
    let mut per_message: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut rep = ExperimentReport {
        trials,
        messages: exp.codebook.messages(),
        seeds: exp.codebook.seeds(),
        errors: 0,
        correct: 0,
        attack_failures: 0,
        avg_error: 0.0,
        ci_low: 0.0,
        ci_high: 0.0,
        max_error: 0.0,
        attack_fail_rate: 0.0,
        cost_violation_rate: 0.0,
        decoded: 0,
        aborts: 0,
        erasures: 0,
        collisions: 0,
        list_bound,
        list_within_bound: 0.0,
        list_size_hist: BTreeMap::new(),
        alpha_hist: BTreeMap::new(),
        jammer: exp.jammer.clone(),
        records: Vec::with_capacity(trials),
        runtime_secs: 0.0,
    };
    let mut violations = 0;
    let mut within = 0;
    for (t, r) in results.iter().enumerate() {
        let e = per_message.entry(r.message).or_default();
        e.0 += 1;
        e.1 += usize::from(r.error);
        rep.errors += usize::from(r.error);
        if r.transcript.attack_failed {
            rep.attack_failures += 1;
        } else if !r.error {
            rep.correct += 1;
        }
        if !r.transcript.within_budget(exp.avc.budget()) {
            violations += 1;
        }
        match r.outcome.status {
            DecodeStatus::Decoded(_) => rep.decoded += 1,
            DecodeStatus::Abort(_) => rep.aborts += 1,
            DecodeStatus::Erasure => rep.erasures += 1,
        }
        rep.collisions += usize::from(r.spoof == Some(r.message));
        let max_list = r.outcome.list_sizes.iter().copied().max().unwrap_or(0);
        within += usize::from(max_list <= list_bound);
        *rep.list_size_hist.entry(max_list).or_default() += 1;
        if let Some(a) = r.outcome.alpha_used {
            *rep.alpha_hist.entry(a).or_default() += 1;
        }
        rep.records.push(TrialRecord {
            trial: t,
            message: r.message,
            spoof: r.spoof,
            status: status_name(&r.outcome.status).to_string(),
            alpha_used: r.outcome.alpha_used,
            max_list,
            cost: r.transcript.total_cost,
            attack_failed: r.transcript.attack_failed,
            zero_evidence: r.flags.zero_evidence,
            budget_exhausted: r.flags.budget_exhausted,
            type_deviation: r.flags.type_deviation,
            error: r.error,
        });
    }
    let tf = trials as f64;
    rep.avg_error = rep.errors as f64 / tf;
    (rep.ci_low, rep.ci_high) = wilson_interval(rep.errors, trials);
    rep.max_error = per_message
        .values()
        .map(|(n, e)| *e as f64 / *n as f64)
        .fold(0.0, f64::max);
    rep.attack_fail_rate = rep.attack_failures as f64 / tf;
    rep.cost_violation_rate = violations as f64 / tf;
    rep.list_within_bound = within as f64 / tf;
    rep.runtime_secs = start.elapsed().as_secs_f64();
    Ok(rep)
}

/// Builds the experiment and estimates its average error.
pub fn estimate_error(
    avc: &AvcSpec,
    cfg: &ExperimentConfig,
    codec: &CodecConfig,
    attack: &AttackConfig,
) -> Result<ExperimentReport, HarnessError> {
    let exp = Experiment::prepare(avc, cfg, codec, attack)?;
    estimate_error_with(&exp, &exp.decoder())
}

/// Writes per-trial records as CSV.
pub fn write_trials_csv<W: std::io::Write>(
    records: &[TrialRecord],
    out: W,
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::Strategy;
    use super::*;
    use proptest::prelude::*;

    fn cfg(strategy: Strategy, trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            n: 120,
            k: 4,
            rate: 0.25,
            trials,
            seed: 3,
            strategy,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn wilson_matches_reference_values() {
        // reference: 0/10 → [0, 0.2775], 5/10 → [0.2366, 0.7634]
        let (lo, hi) = wilson_interval(0, 10);
        assert!(lo == 0.0 && (hi - 0.27753).abs() < 1e-4);
        let (lo, hi) = wilson_interval(5, 10);
        assert!((lo - 0.23659).abs() < 1e-4 && (hi - 0.76341).abs() < 1e-4);
    }

    #[test]
    fn noiseless_channel_never_errs() {
        let rep = estimate_error(
            &AvcSpec::xor(0.0),
            &cfg(Strategy::StandDown, 200),
            &CodecConfig::default(),
            &AttackConfig::default(),
        )
        .unwrap();
        assert_eq!(rep.errors, 0);
        assert_eq!(rep.avg_error, 0.0);
        assert_eq!(rep.correct + rep.errors + rep.attack_failures, rep.trials);
    }

    #[test]
    fn constant_decoder_errs_three_quarters() {
        // 2^{8 R} = 4 messages
        let c = ExperimentConfig {
            n: 8,
            k: 2,
            rate: 0.25,
            trials: 4000,
            ..cfg(Strategy::StandDown, 4000)
        };
        let exp = Experiment::prepare(
            &AvcSpec::xor(0.0),
            &c,
            &CodecConfig::default(),
            &AttackConfig::default(),
        )
        .unwrap();
        assert_eq!(exp.codebook.messages(), 4);
        let rep = estimate_error_with(&exp, &ConstantDecoder(0)).unwrap();
        assert!(rep.ci_low <= 0.75 && 0.75 <= rep.ci_high, "{rep:?}");
    }

    #[test]
    fn seeded_trials_replay_exactly() {
        let exp = Experiment::prepare(
            &AvcSpec::xor(0.2),
            &cfg(Strategy::Babble, 5),
            &CodecConfig::default(),
            &AttackConfig::default(),
        )
        .unwrap();
        assert_eq!(exp.trial(3).unwrap(), exp.trial(3).unwrap());
        let mut a = estimate_error_with(&exp, &exp.decoder()).unwrap();
        let mut b = estimate_error_with(&exp, &exp.decoder()).unwrap();
        (a.runtime_secs, b.runtime_secs) = (0.0, 0.0);
        assert_eq!(a, b);
    }

    #[test]
    fn over_budget_jammer_is_an_attack_failure() {
        let avc = AvcSpec::xor(0.05);
        let exp = Experiment::prepare(
            &avc,
            &cfg(Strategy::StandDown, 1),
            &CodecConfig::default(),
            &AttackConfig::default(),
        )
        .unwrap();
        let v = vec![CondDist::constant(2, &Dist::point(2, 1)); 4];
        let mut j = BabbleOnly::new(&v, &exp.scheme, ChaCha8Rng::seed_from_u64(0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = run_trial(&exp.codebook, &mut j, &exp.decoder(), &avc, 0, &mut rng).unwrap();
        assert!(r.transcript.attack_failed);
        assert!(!r.error);
    }

    #[test]
    fn trial_csv_has_one_row_per_trial() {
        let rep = estimate_error(
            &AvcSpec::xor(0.0),
            &cfg(Strategy::StandDown, 7),
            &CodecConfig::default(),
            &AttackConfig::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trials_csv(&rep.records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 8);
        assert!(text.starts_with("trial,message,spoof,status"));
    }

    proptest! {
        #[test]
        fn wilson_interval_brackets_the_point_estimate(n in 1usize..5000, frac in 0.0f64..=1.0) {
            let k = ((n as f64) * frac).round() as usize;
            let (lo, hi) = wilson_interval(k, n);
            let p = k as f64 / n as f64;
            prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
        }

        #[test]
        fn trial_accounting_adds_up(seed in 0u64..1000, budget in 0.0f64..0.5, s in 0usize..3) {
            let strategy = [Strategy::StandDown, Strategy::Babble, Strategy::BabblePush][s];
            let c = ExperimentConfig {
                n: 40,
                k: 4,
                rate: 0.2,
                trials: 12,
                seed,
                strategy,
                budget: Some(budget),
                ..ExperimentConfig::default()
            };
            let rep = estimate_error(
                &AvcSpec::xor(0.0),
                &c,
                &CodecConfig::default(),
                &AttackConfig::default(),
            )
            .unwrap();
            prop_assert_eq!(rep.errors + rep.correct + rep.attack_failures, rep.trials);
            prop_assert_eq!(rep.decoded + rep.aborts + rep.erasures, rep.trials);
            prop_assert_eq!(rep.list_size_hist.values().sum::<usize>(), rep.trials);
            prop_assert!((0.0..=1.0).contains(&rep.avg_error));
            prop_assert!(rep.ci_low <= rep.avg_error && rep.avg_error <= rep.ci_high);
            for r in &rep.records {
                prop_assert!(!(r.attack_failed && r.error));
            }
        }
    }
}
