//! Randomised verification harness.
//!
//! A check is a predicate on a sampled [`Snapshot`]. Each trial draws its own
//! snapshot from a seed derived from the run seed and the trial index, so
//! reports are reproducible and independent of thread scheduling. Samples that
//! land on a singular locus of the map under test are redrawn a bounded
//! number of times.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coords::{dictionary_identities, xy_to_fg};
use crate::dynamics::{
    delta_closed, delta_recurrence, qp6_residual, qp6_residual_with, run_orbit, tridiag_det_bruteforce,
    tridiag_det_closed, Qp6Convention, Snapshot, TimePlacement,
};
use crate::error::{Error, Result};
use crate::hypergeom::{first_equation_residuals, particular_solution, verify_particular_solution_with, ExponentSign};
use crate::lax::{det_m_profile, lax_residual};
use crate::model::{check_state, derive_seed, rng_for, small_rational, SampleOptions, TRegime};
use crate::scalar::Scalar;
use crate::symmetry::{check_invariance_with, check_relations_with};

/// Redraws allowed per trial before it is recorded as a sampling failure.
pub const MAX_TRIAL_RESAMPLES: u64 = 8;

/// Default bit-size ceiling for orbit iteration.
pub const DEFAULT_MAX_BITS: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub trial: usize,
    pub seed: u64,
    /// `None` when no usable sample could be drawn.
    pub witness: Option<Snapshot>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl Failure {
    /// True if the trial never reached the check.
    pub fn is_sampling_failure(&self) -> bool {
        self.witness.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationReport {
    pub relation: String,
    pub n: usize,
    pub trials: usize,
    /// Samples discarded because they hit a singular locus.
    pub resamples: usize,
    pub failures: Vec<Failure>,
}

impl RelationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn sampling_failures(&self) -> usize {
        self.failures.iter().filter(|f| f.is_sampling_failure()).count()
    }
}

/// Errors that mean "this sample sits on a singular locus", not "the check is wrong".
fn is_degenerate(e: &Error) -> bool {
    matches!(
        e,
        Error::SingularAction { .. }
            | Error::SingularStep { .. }
            | Error::DegenerateState { .. }
            | Error::DegenerateFrame { .. }
            | Error::DegenerateSample { .. }
            | Error::VanishingDenominator { .. }
            | Error::LinearSolveSingular
    )
}

enum Outcome {
    Pass { resamples: usize },
    Fail { resamples: usize, failure: Box<Failure> },
}

fn one_trial<F>(n: usize, seed: u64, trial: usize, opts: &SampleOptions, check: &F) -> Outcome
where
    F: Fn(&Snapshot, &mut ChaCha8Rng) -> Result<bool>,
{
    let mut last_error = None;
    for attempt in 0..MAX_TRIAL_RESAMPLES {
        let sub = derive_seed(seed, trial as u64, attempt);
        let snap = match Snapshot::sample(n, sub, opts) {
            Ok(s) => s,
            Err(e) => {
                last_error = Some(e.to_string());
                continue;
            }
        };
        let mut rng = rng_for(sub, 7);
        match check(&snap, &mut rng) {
            Ok(true) => return Outcome::Pass { resamples: attempt as usize },
            Ok(false) => {
                return Outcome::Fail {
                    resamples: attempt as usize,
                    failure: Box::new(Failure {
                        trial,
                        seed: sub,
                        witness: Some(snap),
                        error: None,
                    }),
                }
            }
            Err(e) if is_degenerate(&e) => last_error = Some(e.to_string()),
            Err(e) => {
                return Outcome::Fail {
                    resamples: attempt as usize,
                    failure: Box::new(Failure {
                        trial,
                        seed: sub,
                        witness: Some(snap),
                        error: Some(e.to_string()),
                    }),
                }
            }
        }
    }
    Outcome::Fail {
        resamples: MAX_TRIAL_RESAMPLES as usize,
        failure: Box::new(Failure {
            trial,
            seed: derive_seed(seed, trial as u64, 0),
            witness: None,
            error: last_error,
        }),
    }
}

/// Runs `check` on `trials` independent samples; the closure also receives a
/// per-trial generator for any auxiliary randomness.
pub fn run_trials_seeded<F>(name: &str, n: usize, seed: u64, trials: usize, opts: &SampleOptions, check: F) -> RelationReport
where
    F: Fn(&Snapshot, &mut ChaCha8Rng) -> Result<bool> + Sync,
{
    let outcomes: Vec<Outcome> = (0..trials)
        .into_par_iter()
        .map(|trial| one_trial(n, seed, trial, opts, &check))
        .collect();
    let mut report = RelationReport {
        relation: name.to_string(),
        n,
        trials,
        resamples: 0,
        failures: Vec::new(),
    };
    for o in outcomes {
        match o {
            Outcome::Pass { resamples } => report.resamples += resamples,
            Outcome::Fail { resamples, failure } => {
                report.resamples += resamples;
                report.failures.push(*failure);
            }
        }
    }
    report
}

pub fn run_trials<F>(name: &str, n: usize, seed: u64, trials: usize, opts: &SampleOptions, check: F) -> RelationReport
where
    F: Fn(&Snapshot) -> Result<bool> + Sync,
{
    run_trials_seeded(name, n, seed, trials, opts, |s, _| check(s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Roundtrip,
    Weyl,
    Invariance,
    Lax,
    Det,
    Qp6,
    Hyper,
    Constraint,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Roundtrip,
        Suite::Det,
        Suite::Weyl,
        Suite::Invariance,
        Suite::Constraint,
        Suite::Lax,
        Suite::Qp6,
        Suite::Hyper,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Roundtrip => "roundtrip",
            Suite::Weyl => "weyl",
            Suite::Invariance => "invariance",
            Suite::Lax => "lax",
            Suite::Det => "det",
            Suite::Qp6 => "qp6",
            Suite::Hyper => "hyper",
            Suite::Constraint => "constraint",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Truncation order for the hypergeometric suite.
    pub order: usize,
    pub t_regime: TRegime,
    pub max_bits: u64,
    /// Orbit length for the suites that iterate the map.
    pub steps: usize,
}

impl SuiteConfig {
    pub fn new(n: usize, trials: usize, seed: u64) -> Self {
        SuiteConfig {
            n,
            trials,
            seed,
            order: crate::hypergeom::DEFAULT_ORDER,
            t_regime: TRegime::Generic,
            max_bits: DEFAULT_MAX_BITS,
            steps: 8,
        }
    }

    fn options(&self) -> SampleOptions {
        SampleOptions {
            t_regime: self.t_regime,
            ..SampleOptions::default()
        }
    }

    fn validate(&self, suite: Suite) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParams("trials must be at least 1".into()));
        }
        match suite {
            Suite::Det if self.n < 2 => Err(Error::UnsupportedRegime(
                "the tridiagonal determinant needs n >= 2".into(),
            )),
            Suite::Qp6 if self.n != 1 => Err(Error::WrongOrder { n: self.n }),
            Suite::Hyper if self.order == 0 => Err(Error::InvalidParams("order must be at least 1".into())),
            Suite::Lax | Suite::Roundtrip if self.steps == 0 => {
                Err(Error::InvalidParams("steps must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Runs one suite. Errors are configuration problems; check outcomes are in
/// the reports.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<Vec<RelationReport>> {
    cfg.validate(suite)?;
    let (n, trials) = (cfg.n, cfg.trials);
    let seed = derive_seed(cfg.seed, suite as u64, 0xD1CE);
    let opts = cfg.options();
    let sub = |k: u64| derive_seed(seed, k, 3);
    let reports = match suite {
        Suite::Roundtrip => vec![
            run_trials("backward forward = id", n, sub(0), trials, &opts, |s| {
                Ok(s.forward()?.backward()? == *s)
            }),
            run_trials("orbit stays on the constraint surface", n, sub(1), trials, &opts, |s| {
                orbit_check(s, cfg, |snap| {
                    let frame = snap.frame()?;
                    Ok(check_state(&snap.state, &snap.params).passed
                        && check_state(&frame, &snap.params).passed
                        && xy_to_fg(&frame, &snap.params)? == snap.state)
                })
            }),
        ],
        Suite::Det => vec![
            run_trials("tridiagonal determinant closed form", n, sub(0), trials, &opts, |s| {
                Ok(tridiag_det_closed(&s.state, &s.params)? == tridiag_det_bruteforce(&s.state, &s.params)?)
            }),
            run_trials("principal minor recurrence", n, sub(1), trials, &opts, |s| {
                Ok(delta_recurrence(&s.state, &s.params)? == delta_closed(&s.state, &s.params)?)
            }),
        ],
        Suite::Weyl => check_relations_with(n, seed, trials, &opts),
        Suite::Invariance => check_invariance_with(n, seed, trials, &opts),
        Suite::Constraint => vec![
            run_trials("dictionary round trip", n, sub(0), trials, &opts, |s| {
                let frame = s.frame()?;
                Ok(check_state(&frame, &s.params).passed && xy_to_fg(&frame, &s.params)? == s.state)
            }),
            run_trials("auxiliary identities", n, sub(1), trials, &opts, |s| {
                Ok(dictionary_identities(&s.frame()?, &s.state, &s.params).passed)
            }),
        ],
        Suite::Lax => vec![
            run_trials_seeded("lax compatibility along orbits", n, sub(0), trials, &opts, |s, rng| {
                lax_orbit_check(s, cfg, rng)
            }),
            run_trials("det M is quadratic in z", n, sub(1), trials, &opts, |s| {
                let prod: Scalar = (1..=n + 1).map(|i| s.params.a(i) * s.params.b(i)).product();
                let profile = det_m_profile(&s.frame()?, &s.params);
                Ok(profile.degree_at_most_two && profile.coeffs[0] == prod)
            }),
        ],
        Suite::Qp6 => vec![
            run_trials("q-PVI along orbits", n, sub(0), trials, &opts, |s| {
                let orbit = orbit_or_degenerate(s, cfg)?;
                for w in orbit.windows(2) {
                    let (r1, r2) = qp6_residual(&w[0], &w[1])?;
                    if !r1.is_zero() || !r2.is_zero() {
                        return Ok(false);
                    }
                }
                Ok(true)
            }),
            run_trials("literal q-PVI coefficient list is refuted", n, sub(1), trials, &opts, |s| {
                let next = s.forward()?;
                for time in [TimePlacement::Current, TimePlacement::Shifted] {
                    let (r1, r2) = qp6_residual_with(s, &next, &Qp6Convention::displayed(&s.params, time))?;
                    if r1.is_zero() && r2.is_zero() {
                        return Ok(false);
                    }
                }
                Ok(true)
            }),
        ],
        Suite::Hyper => {
            let hopts = SampleOptions::hypergeometric();
            let order = cfg.order;
            vec![
                run_trials("hypergeometric solution, a_1 form", n, sub(0), trials, &hopts, |s| {
                    Ok(verify_particular_solution_with(&s.params, order, ExponentSign::Plus)?.passed)
                }),
                run_trials("hypergeometric solution, first equation", n, sub(1), trials, &hopts, |s| {
                    let phi = particular_solution(&s.params, order)?;
                    Ok(first_equation_residuals(&s.params, &phi)?.iter().all(|r| r.is_zero()))
                }),
                run_trials("a_1^-1 form fails at degree 0", n, sub(2), trials, &hopts, |s| {
                    let report = verify_particular_solution_with(&s.params, order, ExponentSign::Minus)?;
                    Ok(report.components.iter().any(|c| c.first_failure == Some(0)))
                }),
            ]
        }
    };
    Ok(reports)
}

/// Runs all suites in `suites`, tagging each report with its suite.
pub fn run_suites(suites: &[Suite], cfg: &SuiteConfig) -> Result<Vec<(Suite, RelationReport)>> {
    let mut out = Vec::new();
    for &suite in suites {
        out.extend(run_suite(suite, cfg)?.into_iter().map(|r| (suite, r)));
    }
    Ok(out)
}

/// Forward orbit from `s`; a singular step is reported as degenerate so the
/// trial is redrawn, while hitting the size limit just shortens the orbit.
fn orbit_or_degenerate(s: &Snapshot, cfg: &SuiteConfig) -> Result<Vec<Snapshot>> {
    let orbit = run_orbit(s.clone(), cfg.steps, cfg.max_bits);
    match orbit.stopped {
        Some((_, Error::SizeLimit { .. })) | None => Ok(orbit.snapshots),
        Some((_, e)) => Err(e),
    }
}

fn orbit_check<F>(s: &Snapshot, cfg: &SuiteConfig, check: F) -> Result<bool>
where
    F: Fn(&Snapshot) -> Result<bool>,
{
    for snap in orbit_or_degenerate(s, cfg)? {
        if !check(&snap)? {
            return Ok(false);
        }
    }
    Ok(true)
}

const LAX_POINTS_PER_STEP: usize = 5;

fn lax_orbit_check(s: &Snapshot, cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Result<bool> {
    let orbit = orbit_or_degenerate(s, cfg)?;
    let frames = orbit.iter().map(Snapshot::frame).collect::<Result<Vec<_>>>()?;
    for k in 1..orbit.len() {
        for _ in 0..LAX_POINTS_PER_STEP {
            let mut z = small_rational(rng, 30);
            while z.is_zero() {
                z = Scalar::from_int(rng.random_range(1..=30));
            }
            if !lax_residual(&frames[k], &frames[k - 1], &orbit[k].params, &z)?.is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
