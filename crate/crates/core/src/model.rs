//! Problem instances: parameters, message stores, retrieval scenarios and
//! the coded side information they induce.
//!
//! Message and support indices are 0-based throughout, including the JSON
//! forms.

use crate::gf::{FieldCtx, FieldElem};
use crate::rng::{Coins, SeededCoins};
use itertools::Itertools;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    Invalid(String),
    #[error("{variant} requires {rule}, got K={k}, M={m}")]
    Infeasible {
        variant: Variant,
        rule: &'static str,
        k: usize,
        m: usize,
    },
    #[error("scenario does not fit the parameters: {0}")]
    Scenario(String),
}

/// Where the desired index may fall relative to the side-information support.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// θ outside the support.
    #[serde(rename = "PCSI-I")]
    PcsiI,
    /// θ inside the support.
    #[serde(rename = "PCSI-II")]
    PcsiII,
    /// θ anywhere.
    #[serde(rename = "PCSI")]
    Pcsi,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::PcsiI, Variant::PcsiII, Variant::Pcsi];

    pub fn label(self) -> &'static str {
        match self {
            Variant::PcsiI => "PCSI-I",
            Variant::PcsiII => "PCSI-II",
            Variant::Pcsi => "PCSI",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Variant::ALL
            .into_iter()
            .find(|v| v.label().eq_ignore_ascii_case(s))
    }

    /// Checks the support size against this variant's range.
    pub fn check(self, k: usize, m: usize) -> Result<(), ModelError> {
        let (ok, rule) = match self {
            Variant::PcsiI => (m >= 1 && m < k, "1 <= M <= K-1"),
            Variant::PcsiII => (m >= 2 && m <= k, "2 <= M <= K"),
            Variant::Pcsi => (m >= 1 && m <= k, "1 <= M <= K"),
        };
        if k < 2 {
            return Err(ModelError::Invalid(format!("K must be at least 2, got {k}")));
        }
        if ok {
            Ok(())
        } else {
            Err(ModelError::Infeasible {
                variant: self,
                rule,
                k,
                m,
            })
        }
    }

    pub fn admits(self, theta: usize, support: &[usize]) -> bool {
        let inside = support.contains(&theta);
        match self {
            Variant::PcsiI => !inside,
            Variant::PcsiII => inside,
            Variant::Pcsi => true,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// What the server must learn nothing about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrivacyMode {
    /// (θ, S) hidden; coefficients are marginalised.
    #[serde(rename = "theta_S")]
    ThetaS,
    /// (θ, S, Λ) hidden.
    #[serde(rename = "theta_S_lambda")]
    ThetaSLambda,
}

impl PrivacyMode {
    pub fn label(self) -> &'static str {
        match self {
            PrivacyMode::ThetaS => "theta_S",
            PrivacyMode::ThetaSLambda => "theta_S_lambda",
        }
    }

    pub fn parse(s: &str) -> Option<PrivacyMode> {
        [PrivacyMode::ThetaS, PrivacyMode::ThetaSLambda]
            .into_iter()
            .find(|m| m.label() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Params {
    pub q: u32,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    /// Message length in q-ary symbols.
    #[serde(rename = "L")]
    pub l: usize,
}

impl Params {
    pub fn new(q: u32, k: usize, m: usize, l: usize) -> Result<Self, ModelError> {
        if crate::gf::prime_power(q).is_err() {
            return Err(ModelError::Invalid(format!("q must be a prime power, got {q}")));
        }
        if k < 2 {
            return Err(ModelError::Invalid(format!("K must be at least 2, got {k}")));
        }
        if m == 0 || m > k {
            return Err(ModelError::Invalid(format!("M must lie in 1..=K, got {m}")));
        }
        if l == 0 {
            return Err(ModelError::Invalid("L must be positive".into()));
        }
        Ok(Params { q, k, m, l })
    }

    pub fn for_variant(self, v: Variant) -> Result<Self, ModelError> {
        v.check(self.k, self.m)?;
        Ok(self)
    }
}

/// K messages of L symbols each, stored row by row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageStore {
    k: usize,
    l: usize,
    data: Vec<FieldElem>,
}

impl MessageStore {
    pub fn zeros(k: usize, l: usize) -> Self {
        MessageStore {
            k,
            l,
            data: vec![FieldElem::ZERO; k * l],
        }
    }

    pub fn from_messages(msgs: &[Vec<FieldElem>]) -> Result<Self, ModelError> {
        let l = msgs.first().map_or(0, Vec::len);
        if msgs.is_empty() || l == 0 || msgs.iter().any(|m| m.len() != l) {
            return Err(ModelError::Invalid("messages must share a positive length".into()));
        }
        Ok(MessageStore {
            k: msgs.len(),
            l,
            data: msgs.concat(),
        })
    }

    /// The store whose symbols are the base-q digits of `index`, message 0's
    /// first symbol least significant.
    pub fn from_index(k: usize, l: usize, q: u32, index: u64) -> Self {
        let mut s = Self::zeros(k, l);
        s.set_index(q, index);
        s
    }

    pub fn set_index(&mut self, q: u32, mut index: u64) {
        for d in self.data.iter_mut() {
            *d = FieldElem((index % q as u64) as u32);
            index /= q as u64;
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.l
    }

    pub fn is_empty(&self) -> bool {
        self.l == 0
    }

    #[inline]
    pub fn message(&self, i: usize) -> &[FieldElem] {
        &self.data[i * self.l..(i + 1) * self.l]
    }

    pub fn message_mut(&mut self, i: usize) -> &mut [FieldElem] {
        &mut self.data[i * self.l..(i + 1) * self.l]
    }

    pub fn to_codes(&self) -> Vec<Vec<u32>> {
        (0..self.k)
            .map(|i| self.message(i).iter().map(|e| e.0).collect())
            .collect()
    }
}

pub fn sample_messages(params: &Params, seed: u64) -> MessageStore {
    let mut coins = SeededCoins::new(seed);
    let mut s = MessageStore::zeros(params.k, params.l);
    for d in s.data.iter_mut() {
        *d = FieldElem(coins.below(params.q));
    }
    s
}

/// One realisation of (θ, S, Λ) under a variant and privacy mode.
///
/// Scenarios enumerated under [`PrivacyMode::ThetaS`] carry an empty
/// `lambda`: the coefficients are left open for the caller to marginalise.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scenario {
    pub variant: Variant,
    pub privacy_mode: PrivacyMode,
    pub theta: usize,
    #[serde(rename = "S")]
    pub support: Vec<usize>,
    pub lambda: Vec<FieldElem>,
}

impl Scenario {
    pub fn with_lambda(&self, lambda: Vec<FieldElem>) -> Scenario {
        Scenario {
            lambda,
            ..self.clone()
        }
    }

    /// Position of θ inside the support, if any.
    pub fn theta_pos(&self) -> Option<usize> {
        self.support.iter().position(|&i| i == self.theta)
    }

    pub fn theta_in_support(&self) -> bool {
        self.theta_pos().is_some()
    }

    /// Coefficient attached to message `k` in the side information.
    pub fn coefficient(&self, k: usize) -> Option<FieldElem> {
        self.support
            .iter()
            .position(|&i| i == k)
            .map(|m| self.lambda[m])
    }

    pub fn validate(&self, params: &Params) -> Result<(), ModelError> {
        let err = |s: String| Err(ModelError::Scenario(s));
        if self.support.len() != params.m {
            return err(format!("support has {} entries, M={}", self.support.len(), params.m));
        }
        if !self.support.windows(2).all(|w| w[0] < w[1]) {
            return err("support must be strictly increasing".into());
        }
        if self.support.iter().any(|&i| i >= params.k) || self.theta >= params.k {
            return err("index outside 0..K".into());
        }
        if !self.variant.admits(self.theta, &self.support) {
            return err(format!("theta={} not admissible for {}", self.theta, self.variant));
        }
        if self.lambda.len() != params.m {
            return err("coefficient vector must have M entries".into());
        }
        if self.lambda.iter().any(|l| l.is_zero() || l.0 >= params.q) {
            return err("coefficients must be nonzero field elements".into());
        }
        Ok(())
    }
}

/// All of (F_q^×)^M in lexicographic order.
pub fn lambda_vectors(q: u32, m: usize) -> Vec<Vec<FieldElem>> {
    (0..m)
        .map(|_| (1..q).map(FieldElem))
        .multi_cartesian_product()
        .collect()
}

/// Feasible scenarios ordered by (S, θ, Λ).
pub fn enumerate_scenarios(
    params: &Params,
    variant: Variant,
    mode: PrivacyMode,
) -> Result<Vec<Scenario>, ModelError> {
    variant.check(params.k, params.m)?;
    let lambdas = match mode {
        PrivacyMode::ThetaS => vec![Vec::new()],
        PrivacyMode::ThetaSLambda => lambda_vectors(params.q, params.m),
    };
    let mut out = Vec::new();
    for support in (0..params.k).combinations(params.m) {
        for theta in (0..params.k).filter(|t| variant.admits(*t, &support)) {
            for lambda in &lambdas {
                out.push(Scenario {
                    variant,
                    privacy_mode: mode,
                    theta,
                    support: support.clone(),
                    lambda: lambda.clone(),
                });
            }
        }
    }
    Ok(out)
}

/// Side information as held by the client.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SideInfo {
    /// The full combination Y over F_q.
    Full(Vec<FieldElem>),
    /// One coordinate per symbol over F_√q: half of Y.
    Projected(Vec<FieldElem>),
}

impl SideInfo {
    /// Retained fraction of the side information, as (numerator, denominator).
    pub fn alpha(&self) -> (u32, u32) {
        match self {
            SideInfo::Full(_) => (1, 1),
            SideInfo::Projected(_) => (1, 2),
        }
    }
}

/// Y = Σ λ_m W_{S(m)}.
pub fn compute_y(f: &FieldCtx, store: &MessageStore, scen: &Scenario) -> Vec<FieldElem> {
    let mut y = vec![FieldElem::ZERO; store.len()];
    for (&i, &lam) in scen.support.iter().zip(&scen.lambda) {
        for (acc, &w) in y.iter_mut().zip(store.message(i)) {
            *acc = f.add(*acc, f.mul(lam, w));
        }
    }
    y
}

pub fn side_info(f: &FieldCtx, store: &MessageStore, scen: &Scenario) -> SideInfo {
    SideInfo::Full(compute_y(f, store, scen))
}

/// Self-contained problem instance in the documented JSON layout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub q: u32,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub variant: Variant,
    pub theta: usize,
    #[serde(rename = "S")]
    pub support: Vec<usize>,
    pub lambda: Vec<u32>,
    #[serde(rename = "W")]
    pub w: Vec<Vec<u32>>,
}

impl Instance {
    pub fn new(params: &Params, scen: &Scenario, store: &MessageStore) -> Self {
        Instance {
            q: params.q,
            k: params.k,
            m: params.m,
            l: params.l,
            variant: scen.variant,
            theta: scen.theta,
            support: scen.support.clone(),
            lambda: scen.lambda.iter().map(|e| e.0).collect(),
            w: store.to_codes(),
        }
    }

    pub fn parts(&self, mode: PrivacyMode) -> Result<(Params, Scenario, MessageStore), ModelError> {
        let params = Params::new(self.q, self.k, self.m, self.l)?;
        let scen = Scenario {
            variant: self.variant,
            privacy_mode: mode,
            theta: self.theta,
            support: self.support.clone(),
            lambda: self.lambda.iter().map(|&c| FieldElem(c)).collect(),
        };
        scen.validate(&params)?;
        let msgs: Vec<Vec<FieldElem>> = self
            .w
            .iter()
            .map(|m| m.iter().map(|&c| FieldElem(c)).collect())
            .collect();
        let store = MessageStore::from_messages(&msgs)?;
        if store.k() != params.k || store.len() != params.l {
            return Err(ModelError::Invalid("W does not match K and L".into()));
        }
        if msgs.iter().flatten().any(|e| e.0 >= params.q) {
            return Err(ModelError::Invalid("W holds a symbol outside F_q".into()));
        }
        Ok((params, scen, store))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::field_of_order;

    #[test]
    fn scenario_counts() {
        let p = Params::new(3, 4, 3, 1).unwrap();
        let n = |v, m| enumerate_scenarios(&p, v, m).unwrap().len();
        assert_eq!(n(Variant::PcsiII, PrivacyMode::ThetaS), 12);
        assert_eq!(n(Variant::PcsiI, PrivacyMode::ThetaS), 4);
        assert_eq!(n(Variant::Pcsi, PrivacyMode::ThetaS), 16);
        assert_eq!(n(Variant::PcsiII, PrivacyMode::ThetaSLambda), 96);
    }

    #[test]
    fn infeasible_variant() {
        let p = Params::new(3, 4, 4, 1).unwrap();
        assert!(enumerate_scenarios(&p, Variant::PcsiI, PrivacyMode::ThetaS).is_err());
        let p = Params::new(3, 4, 1, 1).unwrap();
        assert!(enumerate_scenarios(&p, Variant::PcsiII, PrivacyMode::ThetaS).is_err());
    }

    #[test]
    fn order_is_support_then_theta_then_lambda() {
        let p = Params::new(3, 3, 2, 1).unwrap();
        let s = enumerate_scenarios(&p, Variant::PcsiII, PrivacyMode::ThetaSLambda).unwrap();
        assert_eq!(s[0].support, vec![0, 1]);
        assert_eq!(s[0].theta, 0);
        assert_eq!(s[0].lambda, vec![FieldElem(1), FieldElem(1)]);
        assert_eq!(s[1].lambda, vec![FieldElem(1), FieldElem(2)]);
        assert_eq!(s[4].theta, 1);
        assert_eq!(s[8].support, vec![0, 2]);
    }

    #[test]
    fn y_over_f2_is_xor() {
        let f = field_of_order(2).unwrap();
        let store = MessageStore::from_index(3, 1, 2, 0b101);
        let scen = Scenario {
            variant: Variant::PcsiII,
            privacy_mode: PrivacyMode::ThetaS,
            theta: 0,
            support: vec![0, 2],
            lambda: vec![FieldElem(1), FieldElem(1)],
        };
        assert_eq!(compute_y(&f, &store, &scen), vec![FieldElem(0)]);
    }

    #[test]
    fn instance_round_trip() {
        let p = Params::new(3, 3, 2, 2).unwrap();
        let store = sample_messages(&p, 9);
        let scen = Scenario {
            variant: Variant::Pcsi,
            privacy_mode: PrivacyMode::ThetaS,
            theta: 2,
            support: vec![0, 1],
            lambda: vec![FieldElem(2), FieldElem(1)],
        };
        let inst = Instance::new(&p, &scen, &store);
        let text = serde_json::to_string(&inst).unwrap();
        assert!(text.contains("\"S\":[0,1]"));
        let back: Instance = serde_json::from_str(&text).unwrap();
        let (p2, s2, w2) = back.parts(PrivacyMode::ThetaS).unwrap();
        assert_eq!((p2, s2, w2), (p, scen, store));
    }
}
