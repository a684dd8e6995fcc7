//! Replay-based checks of correctness, privacy, rate and side-information
//! use. Exact mode enumerates every coin path and reports rational
//! probabilities; sampled mode falls back to chi-square homogeneity tests.

use crate::capacity::{gap_report, GapReport};
use crate::gf::{tower_new, FieldElem};
use crate::model::{
    compute_y, enumerate_scenarios, lambda_vectors, MessageStore, ModelError, Params,
    PrivacyMode, Scenario, SideInfo,
};
use crate::rational::Rational;
use crate::rng::{choose, for_each_path, Coins, SeededCoins};
use crate::schemes::{IaScheme, Scheme, SchemeError};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use thiserror::Error;

pub const REPORT_VERSION: u32 = 1;
/// Atomic randomness outcomes allowed per privacy cell in exact mode.
pub const DEFAULT_ENUM_BUDGET: u64 = 10_000_000;
/// Overrides [`DEFAULT_ENUM_BUDGET`].
pub const BUDGET_ENV: &str = "PCSI_ENUM_BUDGET";
pub const DEFAULT_THRESHOLD: f64 = 0.01;

/// The enumeration budget, honouring the environment override.
pub fn enumeration_budget() -> u64 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ENUM_BUDGET)
}

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("enumeration budget of {budget} outcomes exceeded in {what}")]
    BudgetExceeded { what: String, budget: u64 },
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("rational overflow while accumulating probabilities")]
    Overflow,
    #[error("{0}")]
    Inconsistent(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageMode {
    Exhaustive,
    Sampled { n: usize, seed: u64 },
}

/// What the decoder is handed as side information.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    /// Whatever the scheme chooses to retain.
    Retained,
    /// The full combination Y.
    Full,
    /// A single F_√q symbol fixed to zero in place of the retained projection.
    Zeroed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub scenario: Scenario,
    #[serde(rename = "W")]
    pub store: Vec<Vec<u32>>,
    pub decoded: Option<Vec<FieldElem>>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectnessReport {
    pub mode: MessageMode,
    pub csi: CsiMode,
    pub scenarios: u64,
    /// (scenario, coin path) pairs replayed.
    pub query_paths: u64,
    pub trials: u64,
    pub failures: u64,
    pub first_failure: Option<Failure>,
}

impl CorrectnessReport {
    pub fn pass(&self) -> bool {
        self.failures == 0 && self.trials > 0
    }
}

fn side_for(scheme: &dyn Scheme, csi: CsiMode, state: &crate::schemes::ClientState, y: Vec<FieldElem>) -> SideInfo {
    match csi {
        CsiMode::Retained => scheme.retain(state, y),
        CsiMode::Full => SideInfo::Full(y),
        CsiMode::Zeroed => SideInfo::Projected(vec![FieldElem::ZERO; y.len()]),
    }
}

struct Tally<'a> {
    scheme: &'a dyn Scheme,
    csi: CsiMode,
    trials: u64,
    failures: u64,
    first: Option<Failure>,
}

impl Tally<'_> {
    fn check(
        &mut self,
        scen: &Scenario,
        query: &crate::schemes::Query,
        state: &crate::schemes::ClientState,
        store: &MessageStore,
    ) -> Result<(), AuditError> {
        let f = self.scheme.field();
        let answer = self.scheme.answer(query, store)?;
        let y = compute_y(f, store, scen);
        let side = side_for(self.scheme, self.csi, state, y);
        let out = self.scheme.decode(&answer, state, &side);
        self.trials += 1;
        let ok = matches!(&out, Ok(w) if w.as_slice() == store.message(scen.theta));
        if !ok {
            self.failures += 1;
            if self.first.is_none() {
                let (decoded, error) = match out {
                    Ok(w) => (Some(w), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                self.first = Some(Failure {
                    scenario: scen.clone(),
                    store: store.to_codes(),
                    decoded,
                    error,
                });
            }
        }
        Ok(())
    }
}

/// Every (θ, S, Λ) the scheme's variant admits, with explicit coefficients.
pub fn full_scenarios(scheme: &dyn Scheme) -> Result<Vec<Scenario>, AuditError> {
    Ok(enumerate_scenarios(
        &scheme.params(),
        scheme.variant(),
        PrivacyMode::ThetaSLambda,
    )?)
}

/// Number of message stores, q^{KL}, if it fits in a u64.
pub fn store_count(params: &Params) -> Option<u64> {
    (params.q as u64).checked_pow((params.k * params.l) as u32)
}

/// Replays the scheme against message stores. Exhaustive mode covers every
/// scenario, every coin path and every store; sampled mode draws `n` stores
/// and one coin path per (store, scenario).
pub fn audit_correctness(
    scheme: &dyn Scheme,
    mode: MessageMode,
    csi: CsiMode,
) -> Result<CorrectnessReport, AuditError> {
    let params = scheme.params();
    let scenarios = full_scenarios(scheme)?;
    let mut tally = Tally {
        scheme,
        csi,
        trials: 0,
        failures: 0,
        first: None,
    };
    let mut paths = 0u64;
    match mode {
        MessageMode::Exhaustive => {
            let stores = store_count(&params).ok_or_else(|| AuditError::BudgetExceeded {
                what: "message stores".into(),
                budget: u64::MAX,
            })?;
            let mut store = MessageStore::zeros(params.k, params.l);
            for scen in &scenarios {
                for_each_path(
                    |coins| scheme.query(scen, coins).map_err(AuditError::from),
                    |(query, state), _| {
                        paths += 1;
                        for idx in 0..stores {
                            store.set_index(params.q, idx);
                            tally.check(scen, &query, &state, &store)?;
                        }
                        Ok(())
                    },
                )?;
            }
        }
        MessageMode::Sampled { n, seed } => {
            let mut coins = SeededCoins::new(seed);
            let mut store = MessageStore::zeros(params.k, params.l);
            for _ in 0..n {
                for k in 0..params.k {
                    for d in store.message_mut(k) {
                        *d = FieldElem(coins.below(params.q));
                    }
                }
                for scen in &scenarios {
                    let (query, state) = scheme.query(scen, &mut coins)?;
                    paths += 1;
                    tally.check(scen, &query, &state, &store)?;
                }
            }
        }
    }
    Ok(CorrectnessReport {
        mode,
        csi,
        scenarios: scenarios.len() as u64,
        query_paths: paths,
        trials: tally.trials,
        failures: tally.failures,
        first_failure: tally.first,
    })
}

/// Exact law of the canonical query bytes in one conditioning cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryDistribution {
    pub probs: BTreeMap<Vec<u8>, Rational>,
    pub outcomes: u64,
}

impl QueryDistribution {
    pub fn total(&self) -> Rational {
        self.probs.values().fold(Rational::zero(), |a, &b| a + b)
    }
}

/// ½ Σ |p − q| over the union of supports.
pub fn total_variation(a: &QueryDistribution, b: &QueryDistribution) -> Rational {
    let keys: BTreeSet<&Vec<u8>> = a.probs.keys().chain(b.probs.keys()).collect();
    let sum = keys.into_iter().fold(Rational::zero(), |acc, k| {
        let pa = a.probs.get(k).copied().unwrap_or_default();
        let pb = b.probs.get(k).copied().unwrap_or_default();
        acc + (pa - pb).abs()
    });
    sum * Rational::new(1, 2)
}

/// Conditioning cells for a privacy notion: (θ, S) with Λ open, or (θ, S, Λ).
pub fn privacy_cells(scheme: &dyn Scheme, mode: PrivacyMode) -> Result<Vec<Scenario>, AuditError> {
    Ok(enumerate_scenarios(&scheme.params(), scheme.variant(), mode)?)
}

fn cell_label(c: &Scenario) -> String {
    let lam: Vec<u32> = c.lambda.iter().map(|e| e.0).collect();
    format!("theta={} S={:?} lambda={:?}", c.theta, c.support, lam)
}

/// Exact query distribution of one cell. An empty `lambda` is marginalised
/// uniformly over (F_q^×)^M.
pub fn cell_distribution(
    scheme: &dyn Scheme,
    cell: &Scenario,
    budget: u64,
) -> Result<QueryDistribution, AuditError> {
    let params = scheme.params();
    let lambdas = if cell.lambda.is_empty() {
        lambda_vectors(params.q, params.m)
    } else {
        vec![cell.lambda.clone()]
    };
    let lam_den = lambdas.len() as u128;
    let mut probs: BTreeMap<Vec<u8>, Rational> = BTreeMap::new();
    let mut outcomes = 0u64;
    for lam in &lambdas {
        let scen = cell.with_lambda(lam.clone());
        for_each_path(
            |coins| {
                outcomes += 1;
                if outcomes > budget {
                    return Err(AuditError::BudgetExceeded {
                        what: cell_label(cell),
                        budget,
                    });
                }
                Ok(scheme.query(&scen, coins)?.0.canonical_bytes())
            },
            |bytes, den| {
                let den = i128::try_from(den * lam_den).map_err(|_| AuditError::Overflow)?;
                let p = Rational::new(1, den);
                let slot = probs.entry(bytes).or_default();
                *slot = slot.checked_add(&p).ok_or(AuditError::Overflow)?;
                Ok(())
            },
        )?;
    }
    let dist = QueryDistribution { probs, outcomes };
    if dist.total() != Rational::one() {
        return Err(AuditError::Inconsistent(format!(
            "probabilities in {} sum to {}",
            cell_label(cell),
            dist.total()
        )));
    }
    Ok(dist)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentTest {
    pub component: usize,
    pub categories: usize,
    pub chi_square: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PrivacyReport {
    Exact {
        mode: PrivacyMode,
        cells: usize,
        /// Distinct query distributions among the cells.
        distinct: usize,
        max_outcomes_per_cell: u64,
        max_tv: Rational,
        pass: bool,
    },
    Sampled {
        mode: PrivacyMode,
        cells: usize,
        samples_per_cell: usize,
        seed: u64,
        /// Largest pairwise TV between empirical per-component marginals.
        max_tv_estimate: f64,
        components: Vec<ComponentTest>,
        /// Smallest component p-value times the number of components, capped at 1.
        p_value: f64,
        threshold: f64,
        pass: bool,
    },
}

impl PrivacyReport {
    pub fn pass(&self) -> bool {
        match self {
            PrivacyReport::Exact { pass, .. } | PrivacyReport::Sampled { pass, .. } => *pass,
        }
    }
}

/// Enumerates every cell's query law and compares them exactly.
pub fn audit_privacy_exact(
    scheme: &dyn Scheme,
    mode: PrivacyMode,
    budget: u64,
) -> Result<PrivacyReport, AuditError> {
    let cells = privacy_cells(scheme, mode)?;
    let mut distinct: Vec<QueryDistribution> = Vec::new();
    let mut max_outcomes = 0;
    for cell in &cells {
        let d = cell_distribution(scheme, cell, budget)?;
        max_outcomes = max_outcomes.max(d.outcomes);
        if !distinct.iter().any(|e| e.probs == d.probs) {
            distinct.push(d);
        }
    }
    let mut max_tv = Rational::zero();
    for i in 0..distinct.len() {
        for j in i + 1..distinct.len() {
            let tv = total_variation(&distinct[i], &distinct[j]);
            if tv > max_tv {
                max_tv = tv;
            }
        }
    }
    Ok(PrivacyReport::Exact {
        mode,
        cells: cells.len(),
        distinct: distinct.len(),
        max_outcomes_per_cell: max_outcomes,
        pass: max_tv.is_zero(),
        max_tv,
    })
}

/// Chi-square test of homogeneity for a cells × categories table.
fn homogeneity(table: &[BTreeMap<u64, u64>]) -> (f64, usize, usize, f64) {
    let cats: BTreeSet<u64> = table.iter().flat_map(|r| r.keys().copied()).collect();
    let rows: Vec<f64> = table.iter().map(|r| r.values().sum::<u64>() as f64).collect();
    let n: f64 = rows.iter().sum();
    let mut stat = 0.0;
    for &c in &cats {
        let col: f64 = table.iter().map(|r| *r.get(&c).unwrap_or(&0) as f64).sum();
        for (r, &rt) in table.iter().zip(&rows) {
            let e = rt * col / n;
            let o = *r.get(&c).unwrap_or(&0) as f64;
            stat += (o - e) * (o - e) / e;
        }
    }
    let df = (table.len().saturating_sub(1)) * (cats.len().saturating_sub(1));
    let p = if df == 0 {
        1.0
    } else {
        ChiSquared::new(df as f64).map_or(0.0, |d| d.sf(stat))
    };
    (stat, df, cats.len(), p)
}

fn empirical_tv(a: &BTreeMap<u64, u64>, b: &BTreeMap<u64, u64>, n: f64) -> f64 {
    let keys: BTreeSet<u64> = a.keys().chain(b.keys()).copied().collect();
    keys.into_iter()
        .map(|k| {
            let pa = *a.get(&k).unwrap_or(&0) as f64 / n;
            let pb = *b.get(&k).unwrap_or(&0) as f64 / n;
            (pa - pb).abs()
        })
        .sum::<f64>()
        / 2.0
}

/// Draws `n` queries per cell and tests every query component for
/// homogeneity across cells, Bonferroni-corrected.
pub fn audit_privacy_sampled(
    scheme: &dyn Scheme,
    mode: PrivacyMode,
    n: usize,
    seed: u64,
    threshold: f64,
) -> Result<PrivacyReport, AuditError> {
    let params = scheme.params();
    let cells = privacy_cells(scheme, mode)?;
    let lambdas = lambda_vectors(params.q, params.m);
    let mut coins = SeededCoins::new(seed);
    // tables[component][cell] = counts
    let mut tables: Vec<Vec<BTreeMap<u64, u64>>> = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        for _ in 0..n {
            let scen = if cell.lambda.is_empty() {
                let idx = coins.below(lambdas.len() as u32) as usize;
                cell.with_lambda(lambdas[idx].clone())
            } else {
                cell.clone()
            };
            let (query, _) = scheme.query(&scen, &mut coins)?;
            let comps = query.payload.components(params.q);
            if tables.is_empty() {
                tables = vec![vec![BTreeMap::new(); cells.len()]; comps.len()];
            }
            if comps.len() != tables.len() {
                return Err(AuditError::Inconsistent("query component count varies".into()));
            }
            for (t, c) in tables.iter_mut().zip(comps) {
                *t[ci].entry(c).or_insert(0) += 1;
            }
        }
    }
    let mut components = Vec::new();
    let mut max_tv: f64 = 0.0;
    for (j, table) in tables.iter().enumerate() {
        let (chi_square, df, categories, p_value) = homogeneity(table);
        components.push(ComponentTest {
            component: j,
            categories,
            chi_square,
            df,
            p_value,
        });
        for a in 0..table.len() {
            for b in a + 1..table.len() {
                max_tv = max_tv.max(empirical_tv(&table[a], &table[b], n as f64));
            }
        }
    }
    let p_min = components.iter().map(|c| c.p_value).fold(1.0, f64::min);
    let p_value = (p_min * components.len().max(1) as f64).min(1.0);
    Ok(PrivacyReport::Sampled {
        mode,
        cells: cells.len(),
        samples_per_cell: n,
        seed,
        max_tv_estimate: max_tv,
        components,
        p_value,
        threshold,
        pass: p_value > threshold,
    })
}

/// L / D averaged over `n_rounds` random rounds; every round's download must
/// match the declared cost.
pub fn measure_rate(scheme: &dyn Scheme, n_rounds: usize, seed: u64) -> Result<Rational, AuditError> {
    let params = scheme.params();
    let scenarios = full_scenarios(scheme)?;
    let mut coins = SeededCoins::new(seed);
    let mut store = MessageStore::zeros(params.k, params.l);
    let declared = scheme.download_cost();
    let mut total = Rational::zero();
    for _ in 0..n_rounds.max(1) {
        for k in 0..params.k {
            for d in store.message_mut(k) {
                *d = FieldElem(coins.below(params.q));
            }
        }
        let scen = choose(&mut coins, &(0..scenarios.len()).collect::<Vec<_>>());
        let t = crate::schemes::run_round(scheme, &scenarios[scen], &store, &mut coins)?;
        if t.download != declared {
            return Err(AuditError::Inconsistent(format!(
                "round downloaded {} but {} declares {}",
                t.download,
                scheme.name(),
                declared
            )));
        }
        total = total + t.download;
    }
    let mean = total / Rational::int(n_rounds.max(1) as i128);
    Ok(Rational::int(params.l as i128) / mean)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfCsiReport {
    pub retained: CorrectnessReport,
    pub full: CorrectnessReport,
    pub zeroed: CorrectnessReport,
    pub pass: bool,
}

/// The alignment scheme decodes from V_Y(1) alone and from full Y, and fails
/// somewhere once that projection is replaced by a constant.
pub fn audit_half_csi(params: &Params) -> Result<HalfCsiReport, AuditError> {
    let f = crate::gf::field_of_order(params.q).map_err(SchemeError::from)?;
    let tower = Arc::new(tower_new(f).map_err(SchemeError::from)?);
    let ia = IaScheme::new(tower, params.k, params.m)?;
    let retained = audit_correctness(&ia, MessageMode::Exhaustive, CsiMode::Retained)?;
    let full = audit_correctness(&ia, MessageMode::Exhaustive, CsiMode::Full)?;
    let zeroed = audit_correctness(&ia, MessageMode::Exhaustive, CsiMode::Zeroed)?;
    let pass = retained.pass() && full.pass() && zeroed.failures > 0;
    Ok(HalfCsiReport {
        retained,
        full,
        zeroed,
        pass,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Exhaustive or exact when within budget, otherwise sampled.
    Auto,
    Exact,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub seed: u64,
    pub correctness: Method,
    /// Stores drawn in sampled correctness mode.
    pub correctness_samples: usize,
    /// Largest number of replays auto mode will run exhaustively.
    pub correctness_budget: u64,
    pub privacy: Method,
    pub privacy_mode: Option<PrivacyMode>,
    pub samples_per_cell: usize,
    pub enum_budget: u64,
    pub threshold: f64,
    pub rate_rounds: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            seed: 0,
            correctness: Method::Auto,
            correctness_samples: 1000,
            correctness_budget: 20_000_000,
            privacy: Method::Auto,
            privacy_mode: None,
            samples_per_cell: 10_000,
            enum_budget: enumeration_budget(),
            threshold: DEFAULT_THRESHOLD,
            rate_rounds: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub report_version: u32,
    pub scheme: String,
    pub params: Params,
    pub variant: crate::model::Variant,
    pub seed: u64,
    pub correctness: CorrectnessReport,
    pub privacy: PrivacyReport,
    pub rate: Rational,
    pub download: Rational,
    pub capacity: Option<GapReport>,
    pub exit_code: i32,
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CORRECTNESS: i32 = 1;
pub const EXIT_PRIVACY: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Replays counted in exhaustive mode, or None past `limit`.
pub fn exhaustive_size(scheme: &dyn Scheme, limit: u64) -> Result<Option<u64>, AuditError> {
    let Some(stores) = store_count(&scheme.params()) else {
        return Ok(None);
    };
    if stores > limit {
        return Ok(None);
    }
    let mut paths = 0u64;
    let cap = limit / stores;
    for scen in &full_scenarios(scheme)? {
        let res = for_each_path(
            |coins| {
                scheme.query(scen, coins)?;
                Ok::<_, AuditError>(())
            },
            |_, _| {
                paths += 1;
                if paths > cap {
                    Err(AuditError::BudgetExceeded {
                        what: "correctness".into(),
                        budget: limit,
                    })
                } else {
                    Ok(())
                }
            },
        );
        match res {
            Ok(()) => {}
            Err(AuditError::BudgetExceeded { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    Ok(Some(paths * stores))
}

/// Correctness, privacy, rate and capacity gap in one report.
pub fn run_audit(scheme: &dyn Scheme, cfg: &AuditConfig) -> Result<AuditReport, AuditError> {
    let params = scheme.params();
    let sampled = MessageMode::Sampled {
        n: cfg.correctness_samples,
        seed: cfg.seed,
    };
    let mode = match cfg.correctness {
        Method::Exact => MessageMode::Exhaustive,
        Method::Sampled => sampled,
        Method::Auto => match exhaustive_size(scheme, cfg.correctness_budget)? {
            Some(_) => MessageMode::Exhaustive,
            None => sampled,
        },
    };
    let correctness = audit_correctness(scheme, mode, CsiMode::Retained)?;
    let pmode = cfg.privacy_mode.unwrap_or_else(|| scheme.privacy());
    let sampled_privacy =
        || audit_privacy_sampled(scheme, pmode, cfg.samples_per_cell, cfg.seed, cfg.threshold);
    let privacy = match cfg.privacy {
        Method::Exact => audit_privacy_exact(scheme, pmode, cfg.enum_budget)?,
        Method::Sampled => sampled_privacy()?,
        Method::Auto => match audit_privacy_exact(scheme, pmode, cfg.enum_budget) {
            Err(AuditError::BudgetExceeded { .. }) => sampled_privacy()?,
            other => other?,
        },
    };
    let rate = measure_rate(scheme, cfg.rate_rounds, cfg.seed)?;
    let capacity = gap_report(scheme.variant(), params.q, params.k, params.m, rate).ok();
    let exit_code = if !correctness.pass() {
        EXIT_CORRECTNESS
    } else if !privacy.pass() {
        EXIT_PRIVACY
    } else {
        EXIT_PASS
    };
    Ok(AuditReport {
        report_version: REPORT_VERSION,
        scheme: scheme.name().to_string(),
        params,
        variant: scheme.variant(),
        seed: cfg.seed,
        correctness,
        privacy,
        rate,
        download: scheme.download_cost(),
        capacity,
        exit_code,
    })
}
