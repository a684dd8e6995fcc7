use super::{
    check_scenario, full_y, unsupported, Answer, ClientState, Query, QueryPayload, Scheme,
    SchemeError, Segment, StateInner,
};
use crate::gf::{FieldCtx, FieldElem};
use crate::model::{MessageStore, Params, PrivacyMode, Scenario, SideInfo, Variant};
use crate::rational::Rational;
use crate::rng::{choose, Coins};
use std::sync::Arc;

const NAME: &str = "mk_pcsi2";

/// Side information over all K messages. Over q ≠ 2 one shifted
/// combination suffices; over F_2 the first K − 1 messages are downloaded.
pub struct MkScheme {
    f: Arc<FieldCtx>,
    k: usize,
}

impl MkScheme {
    pub fn new(f: Arc<FieldCtx>, k: usize) -> Result<Self, SchemeError> {
        Variant::PcsiII.check(k, k)?;
        Ok(MkScheme { f, k })
    }

    fn binary(&self) -> bool {
        self.f.order() == 2
    }
}

impl Scheme for MkScheme {
    fn name(&self) -> &'static str {
        NAME
    }

    fn field(&self) -> &Arc<FieldCtx> {
        &self.f
    }

    fn params(&self) -> Params {
        Params {
            q: self.f.order(),
            k: self.k,
            m: self.k,
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
        if self.binary() {
            Rational::int(self.k as i128 - 1)
        } else {
            Rational::one()
        }
    }

    fn query(
        &self,
        scen: &Scenario,
        coins: &mut dyn Coins,
    ) -> Result<(Query, ClientState), SchemeError> {
        check_scenario(&self.params(), Variant::PcsiII, scen)?;
        let f = &self.f;
        let (payload, lambda_prime) = if self.binary() {
            let indices = (0..self.k - 1).collect();
            (QueryPayload::Direct { indices }, None)
        } else {
            let pos = scen.theta_pos().expect("theta lies in the support");
            let lt = scen.lambda[pos];
            let allowed: Vec<FieldElem> = f.nonzero().filter(|&c| !f.add(lt, c).is_zero()).collect();
            let lp = choose(coins, &allowed);
            let mut coeffs = scen.lambda.clone();
            coeffs[pos] = f.add(lt, lp);
            (QueryPayload::Combination { coeffs }, Some(lp))
        };
        Ok((
            Query {
                scheme: NAME.into(),
                payload,
            },
            ClientState {
                scenario: scen.clone(),
                inner: StateInner::Mk { lambda_prime },
            },
        ))
    }

    fn answer(&self, query: &Query, store: &MessageStore) -> Result<Answer, SchemeError> {
        if store.k() != self.k || store.len() != 1 {
            return unsupported("store does not match K and L=1");
        }
        let f = &self.f;
        let symbols = match &query.payload {
            QueryPayload::Combination { coeffs } if coeffs.len() == self.k => {
                let w: Vec<FieldElem> = (0..self.k).map(|k| store.message(k)[0]).collect();
                vec![f.dot(coeffs, &w)]
            }
            QueryPayload::Direct { indices } => {
                indices.iter().map(|&i| store.message(i)[0]).collect()
            }
            _ => return unsupported("mk_pcsi2 expects a combination or a direct download"),
        };
        Ok(Answer {
            segments: vec![Segment {
                field_order: f.order(),
                weight: Rational::one(),
                symbols,
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
        let y = full_y(NAME, side)?[0];
        let delta = answer.segment(0, NAME)?;
        let StateInner::Mk { lambda_prime } = state.inner else {
            return Err(SchemeError::Mismatch {
                scheme: NAME,
                what: "client state",
            });
        };
        let scen = &state.scenario;
        if let Some(lp) = lambda_prime {
            return Ok(vec![f.div(f.sub(delta[0], y), lp)?]);
        }
        if scen.theta < self.k - 1 {
            return Ok(vec![delta[scen.theta]]);
        }
        let known = (0..self.k - 1).fold(y, |acc, i| f.sub(acc, f.mul(scen.lambda[i], delta[i])));
        Ok(vec![f.div(known, scen.lambda[self.k - 1])?])
    }
}
