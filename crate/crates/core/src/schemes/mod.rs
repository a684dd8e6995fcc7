//! Retrieval schemes behind one query / answer / decode interface.
//!
//! A scheme builds its query from the scenario and a coin source only; the
//! server side sees the query and the message store; the client decodes from
//! the answer, its private state and its side information.

mod bank;
mod f3;
mod generic;
mod grs;
mod halfdl;
mod ia;
mod mk;

pub use bank::{
    default_extension_degree, g_matrix_pcsi1, g_matrix_pcsi2, search_vectors, Attempt, BankMode,
    SearchError, SearchOptions, VectorBank, DEFAULT_BUDGET,
};
pub use f3::F3Scheme;
pub use generic::{GenericPcsi1, GenericPcsi2, TwoStepPcsi1};
pub use grs::{GrsKind, GrsScheme};
pub use halfdl::HalfDlScheme;
pub use ia::{IaScheme, LeakyIaScheme};
pub use mk::MkScheme;

use crate::gf::{FieldCtx, FieldElem, FieldError, LinalgError, Matrix, Vec2};
use crate::model::{side_info, MessageStore, ModelError, Params, PrivacyMode, Scenario, SideInfo, Variant};
use crate::rational::Rational;
use crate::rng::Coins;
use serde::{Deserialize, Serialize};
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error("unsupported parameters: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("{scheme} cannot use this {what}")]
    Mismatch { scheme: &'static str, what: &'static str },
}

pub(crate) fn unsupported<T>(msg: impl Into<String>) -> Result<T, SchemeError> {
    Err(SchemeError::Unsupported(msg.into()))
}

/// Scheme-specific content of a query. Field elements are integer codes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryPayload {
    /// One projection row over F_√q per message.
    Rows { rows: Vec<Vec2> },
    /// Scaled Vandermonde rows `v_k ω_k^i`, i < `rows`.
    Grs { v: Vec<FieldElem>, rows: usize },
    /// A single linear combination of all messages.
    Combination { coeffs: Vec<FieldElem> },
    /// Download these messages in full.
    Direct { indices: Vec<usize> },
    /// The three free coefficients of the fixed two-row ternary query.
    Eta {
        eta_b: FieldElem,
        eta_c: FieldElem,
        eta_d: FieldElem,
    },
    /// Per-message combination matrices over the extension field.
    Bank { vectors: Vec<Matrix> },
    /// Combination matrix applied to the message vector.
    Psi { psi: Matrix },
    /// A full combination followed by an inner query on the complement.
    TwoStep {
        a: Vec<FieldElem>,
        inner: Option<Box<QueryPayload>>,
    },
    /// Two projections per message plus GRS scalars over F_√q.
    HalfDl {
        l: Vec<Vec2>,
        l_prime: Vec<Vec2>,
        v: Vec<FieldElem>,
    },
}

fn hash_of<T: Hash>(t: &T) -> u64 {
    let mut h = DefaultHasher::new();
    t.hash(&mut h);
    h.finish()
}

impl QueryPayload {
    /// Per-message categorical summaries of the query, used for
    /// homogeneity tests when the full query space is too large to tabulate.
    pub fn components(&self, s: u32) -> Vec<u64> {
        let pair = |p: &Vec2| (p[0].0 + p[1].0 * s) as u64;
        match self {
            QueryPayload::Rows { rows } => rows.iter().map(pair).collect(),
            QueryPayload::Grs { v, .. } => v.iter().map(|e| e.0 as u64).collect(),
            QueryPayload::Combination { coeffs } => coeffs.iter().map(|e| e.0 as u64).collect(),
            QueryPayload::Direct { indices } => vec![hash_of(indices)],
            QueryPayload::Eta { eta_b, eta_c, eta_d } => {
                vec![eta_b.0 as u64, eta_c.0 as u64, eta_d.0 as u64]
            }
            QueryPayload::Bank { vectors } => vec![hash_of(vectors)],
            QueryPayload::Psi { psi } => vec![hash_of(psi)],
            QueryPayload::TwoStep { a, inner } => {
                let mut c: Vec<u64> = a.iter().map(|e| e.0 as u64).collect();
                c.push(hash_of(inner));
                c
            }
            QueryPayload::HalfDl { l, l_prime, v } => {
                let ss = (s * s) as u64;
                l.iter()
                    .zip(l_prime)
                    .zip(v)
                    .map(|((a, b), e)| pair(a) + ss * pair(b) + ss * ss * e.0 as u64)
                    .collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub scheme: String,
    pub payload: QueryPayload,
}

impl Query {
    /// Serialised form with sorted keys; equal queries give equal bytes.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let v = serde_json::to_value(self).expect("query serialises");
        serde_json::to_vec(&v).expect("value serialises")
    }
}

/// A run of downloaded symbols over one field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    /// Order of the field the symbols live in.
    pub field_order: u32,
    /// Cost of one symbol in q-ary symbols.
    pub weight: Rational,
    pub symbols: Vec<FieldElem>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub segments: Vec<Segment>,
}

impl Answer {
    pub fn download_cost(&self) -> Rational {
        self.segments.iter().fold(Rational::zero(), |acc, s| {
            acc + s.weight * Rational::int(s.symbols.len() as i128)
        })
    }

    fn segment(&self, i: usize, scheme: &'static str) -> Result<&[FieldElem], SchemeError> {
        self.segments
            .get(i)
            .map(|s| s.symbols.as_slice())
            .ok_or(SchemeError::Mismatch {
                scheme,
                what: "answer",
            })
    }
}

/// Private data the client keeps between query and decode.
#[derive(Clone, Debug)]
pub struct ClientState {
    pub scenario: Scenario,
    inner: StateInner,
}

#[derive(Clone, Debug)]
enum StateInner {
    Ia,
    GrsOutside {
        p: Vec<FieldElem>,
        scale: FieldElem,
    },
    GrsInside {
        p: Vec<FieldElem>,
        lambda_prime: FieldElem,
    },
    Mk {
        lambda_prime: Option<FieldElem>,
    },
    F3 {
        rule: &'static f3::Rule,
        eta_b: FieldElem,
    },
    Generic2 {
        /// Rows of G_S⁻¹, one block of M rows per support position.
        g_inv: Matrix,
    },
    Generic1 {
        a_inv: Matrix,
    },
    TwoStep {
        a: Vec<FieldElem>,
        inner: Option<Box<ClientState>>,
    },
    HalfDl {
        l: Vec<Vec2>,
        l_prime: Vec<Vec2>,
        v: Vec<FieldElem>,
        p: Vec<FieldElem>,
    },
}

pub trait Scheme: Send + Sync {
    fn name(&self) -> &'static str;
    fn field(&self) -> &Arc<FieldCtx>;
    /// (q, K, M, L) this instance was built for.
    fn params(&self) -> Params;
    fn variant(&self) -> Variant;
    /// The privacy notion the construction is designed to meet.
    fn privacy(&self) -> PrivacyMode;
    /// Download per round in q-ary symbols.
    fn download_cost(&self) -> Rational;
    /// Fraction of the side information the decoder consumes.
    fn csi_fraction(&self) -> Rational {
        Rational::one()
    }
    fn rate(&self) -> Rational {
        Rational::int(self.params().l as i128) / self.download_cost()
    }

    fn query(&self, scen: &Scenario, coins: &mut dyn Coins)
        -> Result<(Query, ClientState), SchemeError>;
    fn answer(&self, query: &Query, store: &MessageStore) -> Result<Answer, SchemeError>;
    fn decode(
        &self,
        answer: &Answer,
        state: &ClientState,
        side: &SideInfo,
    ) -> Result<Vec<FieldElem>, SchemeError>;

    /// The part of Y the client keeps after processing.
    fn retain(&self, _state: &ClientState, y: Vec<FieldElem>) -> SideInfo {
        SideInfo::Full(y)
    }
}

pub(crate) fn check_scenario(
    params: &Params,
    variant: Variant,
    scen: &Scenario,
) -> Result<(), SchemeError> {
    let as_variant = Scenario {
        variant,
        ..scen.clone()
    };
    as_variant.validate(params)?;
    Ok(())
}

pub(crate) fn full_y<'a>(
    scheme: &'static str,
    side: &'a SideInfo,
) -> Result<&'a [FieldElem], SchemeError> {
    match side {
        SideInfo::Full(y) => Ok(y),
        SideInfo::Projected(_) => Err(SchemeError::Mismatch {
            scheme,
            what: "projected side information",
        }),
    }
}

/// One protocol round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub scheme: String,
    pub scenario: Scenario,
    pub query: Query,
    pub answer: Answer,
    pub decoded: Vec<FieldElem>,
    #[serde(rename = "D")]
    pub download: Rational,
}

pub fn run_round(
    scheme: &dyn Scheme,
    scen: &Scenario,
    store: &MessageStore,
    coins: &mut dyn Coins,
) -> Result<Transcript, SchemeError> {
    let (query, state) = scheme.query(scen, coins)?;
    let answer = scheme.answer(&query, store)?;
    let SideInfo::Full(y) = side_info(scheme.field(), store, scen) else {
        unreachable!("side_info returns the full combination")
    };
    let side = scheme.retain(&state, y);
    let decoded = scheme.decode(&answer, &state, &side)?;
    Ok(Transcript {
        scheme: scheme.name().to_string(),
        scenario: scen.clone(),
        download: answer.download_cost(),
        query,
        answer,
        decoded,
    })
}

/// How to build a scheme by name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub name: String,
    pub q: u32,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    /// Extension degree for the generic schemes.
    pub l: Option<usize>,
    pub private_coeffs: bool,
    /// Seed for vector-bank search.
    pub seed: u64,
    pub budget: usize,
}

impl SchemeSpec {
    pub fn new(name: &str, q: u32, k: usize, m: usize) -> Self {
        SchemeSpec {
            name: name.to_string(),
            q,
            k,
            m,
            l: None,
            private_coeffs: false,
            seed: 0,
            budget: DEFAULT_BUDGET,
        }
    }
}

pub const SCHEME_NAMES: [&str; 10] = [
    "ia_pcsi2",
    "grs_pcsi1",
    "modgrs_pcsi2",
    "combined_pcsi",
    "generic_pcsi2",
    "generic_pcsi1",
    "twostep_pcsi1",
    "mk_pcsi2",
    "f3_m3k4",
    "halfdl_pcsi",
];

/// Builds a scheme by catalog name, running the vector search when needed.
pub fn build_scheme(spec: &SchemeSpec) -> Result<Box<dyn Scheme>, SchemeError> {
    use crate::gf::{field_of_order, tower_new};
    let f = field_of_order(spec.q)?;
    let (k, m) = (spec.k, spec.m);
    let opts = SearchOptions {
        l: spec.l,
        budget: spec.budget,
    };
    Ok(match spec.name.as_str() {
        "ia_pcsi2" => Box::new(IaScheme::new(Arc::new(tower_new(f)?), k, m)?),
        "halfdl_pcsi" => Box::new(HalfDlScheme::new(Arc::new(tower_new(f)?), k, m)?),
        "grs_pcsi1" => Box::new(GrsScheme::new(f, k, m, GrsKind::PcsiI)?),
        "modgrs_pcsi2" => Box::new(GrsScheme::new(f, k, m, GrsKind::PcsiII)?),
        "combined_pcsi" => Box::new(GrsScheme::new(f, k, m, GrsKind::Pcsi)?),
        "mk_pcsi2" => {
            if m != k {
                return unsupported("mk_pcsi2 requires M = K");
            }
            Box::new(MkScheme::new(f, k)?)
        }
        "f3_m3k4" => {
            if (spec.q, k, m) != (3, 4, 3) {
                return unsupported("f3_m3k4 runs only at q=3, K=4, M=3");
            }
            Box::new(F3Scheme::new())
        }
        "generic_pcsi2" => {
            let mode = if spec.private_coeffs {
                BankMode::Pcsi2Private
            } else {
                BankMode::Pcsi2
            };
            let bank = search_vectors(&f, k, m, mode, spec.seed, &opts)?;
            Box::new(GenericPcsi2::new(f, k, m, spec.private_coeffs, bank)?)
        }
        "generic_pcsi1" => {
            let mode = if spec.private_coeffs {
                BankMode::Pcsi1Private
            } else {
                BankMode::Pcsi1
            };
            let bank = search_vectors(&f, k, m, mode, spec.seed, &opts)?;
            Box::new(GenericPcsi1::new(f, k, m, spec.private_coeffs, bank)?)
        }
        "twostep_pcsi1" => {
            if 2 * m <= k || m >= k {
                return unsupported("twostep_pcsi1 requires K/2 < M <= K-1");
            }
            let bank = if k - m >= 2 {
                Some(search_vectors(&f, k, k - m, BankMode::Pcsi2Private, spec.seed, &opts)?)
            } else {
                None
            };
            Box::new(TwoStepPcsi1::new(f, k, m, bank)?)
        }
        other => return unsupported(format!("unknown scheme {other}")),
    })
}
