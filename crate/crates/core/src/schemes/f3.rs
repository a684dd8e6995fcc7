use super::{
    check_scenario, full_y, unsupported, Answer, ClientState, Query, QueryPayload, Scheme,
    SchemeError, Segment, StateInner,
};
use crate::gf::{field_new, FieldCtx, FieldElem};
use crate::model::{MessageStore, Params, PrivacyMode, Scenario, SideInfo, Variant};
use crate::rational::Rational;
use crate::rng::{nonzero, Coins};
use std::sync::Arc;

const NAME: &str = "f3_m3k4";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Eta {
    B,
    C,
    D,
}

/// Which normalised coefficient an assignment or divisor refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Lam {
    One,
    Second,
    Third,
}

/// Answer combination the decoder pairs with Y.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Combo {
    /// Δ1
    First,
    /// Δ2 / η_b
    SecondOverEtaB,
    /// Δ1 + Δ2
    Sum,
    /// Δ1 + 2Δ2
    SumDouble,
}

/// One line of the case tables: support, desired index, which η is free,
/// how the other two are set, and the recovery identity
/// `div · W_θ = y_coef · Y + combo`.
#[derive(Debug)]
pub(crate) struct Rule {
    support: [usize; 3],
    theta: usize,
    free: Eta,
    /// (η, constant, coefficient, scaled by the free η)
    set: [(Eta, u32, Lam, bool); 2],
    y_coef: u32,
    combo: Combo,
    div: (u32, Lam),
}

use Combo::*;
use Eta::*;
use Lam::*;

#[rustfmt::skip]
static RULES: [Rule; 12] = [
    Rule { support: [0, 1, 2], theta: 0, free: D, set: [(B, 2, Second, false), (C, 2, Third, false)], y_coef: 1, combo: First, div: (2, One) },
    Rule { support: [0, 1, 2], theta: 1, free: D, set: [(B, 2, Second, false), (C, 1, Third, false)], y_coef: 2, combo: First, div: (1, Second) },
    Rule { support: [0, 1, 2], theta: 2, free: D, set: [(B, 1, Second, false), (C, 2, Third, false)], y_coef: 2, combo: First, div: (1, Third) },
    Rule { support: [1, 2, 3], theta: 1, free: B, set: [(C, 1, Second, true), (D, 1, Third, true)], y_coef: 2, combo: SecondOverEtaB, div: (1, One) },
    Rule { support: [1, 2, 3], theta: 2, free: B, set: [(C, 1, Second, true), (D, 2, Third, true)], y_coef: 1, combo: SecondOverEtaB, div: (2, Second) },
    Rule { support: [1, 2, 3], theta: 3, free: B, set: [(C, 2, Second, true), (D, 1, Third, true)], y_coef: 1, combo: SecondOverEtaB, div: (2, Third) },
    Rule { support: [0, 2, 3], theta: 0, free: B, set: [(C, 1, Second, false), (D, 2, Third, false)], y_coef: 1, combo: Sum, div: (2, One) },
    Rule { support: [0, 2, 3], theta: 2, free: B, set: [(C, 1, Second, false), (D, 1, Third, false)], y_coef: 2, combo: Sum, div: (1, Second) },
    Rule { support: [0, 2, 3], theta: 3, free: B, set: [(C, 2, Second, false), (D, 2, Third, false)], y_coef: 2, combo: Sum, div: (1, Third) },
    Rule { support: [0, 1, 3], theta: 0, free: C, set: [(B, 1, Second, false), (D, 1, Third, false)], y_coef: 1, combo: SumDouble, div: (2, One) },
    Rule { support: [0, 1, 3], theta: 1, free: C, set: [(B, 1, Second, false), (D, 2, Third, false)], y_coef: 2, combo: SumDouble, div: (1, Second) },
    Rule { support: [0, 1, 3], theta: 3, free: C, set: [(B, 2, Second, false), (D, 1, Third, false)], y_coef: 2, combo: SumDouble, div: (1, Third) },
];

/// Rate-1/2 scheme for q = 3, K = 4, M = 3 with the fixed answer form
/// Δ1 = A + η_b B + η_c C, Δ2 = 2η_b B + η_c C + η_d D.
pub struct F3Scheme {
    f: Arc<FieldCtx>,
}

impl Default for F3Scheme {
    fn default() -> Self {
        Self::new()
    }
}

impl F3Scheme {
    pub fn new() -> Self {
        F3Scheme {
            f: Arc::new(field_new(3, 1).expect("F_3 exists")),
        }
    }

    /// λ2/λ1 and λ3/λ1.
    fn normalised(&self, lambda: &[FieldElem]) -> Result<[FieldElem; 3], SchemeError> {
        let f = &self.f;
        Ok([
            FieldElem::ONE,
            f.div(lambda[1], lambda[0])?,
            f.div(lambda[2], lambda[0])?,
        ])
    }
}

fn lam_index(l: Lam) -> usize {
    match l {
        One => 0,
        Second => 1,
        Third => 2,
    }
}

impl Scheme for F3Scheme {
    fn name(&self) -> &'static str {
        NAME
    }

    fn field(&self) -> &Arc<FieldCtx> {
        &self.f
    }

    fn params(&self) -> Params {
        Params {
            q: 3,
            k: 4,
            m: 3,
            l: 1,
        }
    }

    fn variant(&self) -> Variant {
        Variant::PcsiII
    }

    fn privacy(&self) -> PrivacyMode {
        PrivacyMode::ThetaS
    }

    fn download_cost(&self) -> Rational {
        Rational::int(2)
    }

    fn query(
        &self,
        scen: &Scenario,
        coins: &mut dyn Coins,
    ) -> Result<(Query, ClientState), SchemeError> {
        check_scenario(&self.params(), Variant::PcsiII, scen)?;
        let f = &self.f;
        let rule = RULES
            .iter()
            .find(|r| r.support[..] == scen.support[..] && r.theta == scen.theta)
            .expect("every feasible scenario has a rule");
        let lam = self.normalised(&scen.lambda)?;
        let free = nonzero(coins, f);
        let mut eta = [FieldElem::ZERO; 3];
        let slot = |e: Eta| match e {
            B => 0,
            C => 1,
            D => 2,
        };
        eta[slot(rule.free)] = free;
        for &(e, c, l, scaled) in &rule.set {
            let mut v = f.mul(FieldElem(c), lam[lam_index(l)]);
            if scaled {
                v = f.mul(v, free);
            }
            eta[slot(e)] = v;
        }
        Ok((
            Query {
                scheme: NAME.into(),
                payload: QueryPayload::Eta {
                    eta_b: eta[0],
                    eta_c: eta[1],
                    eta_d: eta[2],
                },
            },
            ClientState {
                scenario: scen.clone(),
                inner: StateInner::F3 {
                    rule,
                    eta_b: eta[0],
                },
            },
        ))
    }

    fn answer(&self, query: &Query, store: &MessageStore) -> Result<Answer, SchemeError> {
        let QueryPayload::Eta { eta_b, eta_c, eta_d } = query.payload else {
            return unsupported("f3_m3k4 expects eta coefficients");
        };
        if store.k() != 4 || store.len() != 1 {
            return unsupported("store must hold 4 messages of length 1");
        }
        let f = &self.f;
        let w: Vec<FieldElem> = (0..4).map(|k| store.message(k)[0]).collect();
        let two = FieldElem(2);
        let d1 = f.dot(&[FieldElem::ONE, eta_b, eta_c], &w[0..3]);
        let d2 = f.dot(&[f.mul(two, eta_b), eta_c, eta_d], &w[1..4]);
        Ok(Answer {
            segments: vec![Segment {
                field_order: 3,
                weight: Rational::one(),
                symbols: vec![d1, d2],
            }],
        })
    }

    fn decode(
        &self,
        answer: &Answer,
        state: &ClientState,
        side: &SideInfo,
    ) -> Result<Vec<FieldElem>, SchemeError> {
        let f = &self.f;
        let StateInner::F3 { rule, eta_b } = state.inner else {
            return Err(SchemeError::Mismatch {
                scheme: NAME,
                what: "client state",
            });
        };
        let delta = answer.segment(0, NAME)?;
        let scen = &state.scenario;
        let lam = self.normalised(&scen.lambda)?;
        let y = f.div(full_y(NAME, side)?[0], scen.lambda[0])?;
        let (d1, d2) = (delta[0], delta[1]);
        let two = FieldElem(2);
        let combo = match rule.combo {
            First => d1,
            SecondOverEtaB => f.div(d2, eta_b)?,
            Sum => f.add(d1, d2),
            SumDouble => f.add(d1, f.mul(two, d2)),
        };
        let rhs = f.add(f.mul(FieldElem(rule.y_coef), y), combo);
        let div = f.mul(FieldElem(rule.div.0), lam[lam_index(rule.div.1)]);
        Ok(vec![f.div(rhs, div)?])
    }
}
