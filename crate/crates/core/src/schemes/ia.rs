use super::{
    check_scenario, unsupported, Answer, ClientState, Query, QueryPayload, Scheme, SchemeError,
    Segment, StateInner,
};
use crate::gf::{FieldCtx, FieldElem, TowerCtx, Vec2};
use crate::model::{MessageStore, Params, PrivacyMode, Scenario, SideInfo, Variant};
use crate::rational::Rational;
use crate::rng::{nonzero_pair, Coins};
use std::sync::Arc;

const NAME: &str = "ia_pcsi2";

/// Interference alignment over the quadratic tower: every message is split
/// into two F_√q halves and one projection of each is downloaded.
pub struct IaScheme {
    tower: Arc<TowerCtx>,
    k: usize,
    m: usize,
}

impl IaScheme {
    pub fn new(tower: Arc<TowerCtx>, k: usize, m: usize) -> Result<Self, SchemeError> {
        Variant::PcsiII.check(k, m)?;
        Ok(IaScheme { tower, k, m })
    }

    pub fn tower(&self) -> &Arc<TowerCtx> {
        &self.tower
    }

    /// Row-1 projection of Y: the only part of the side information decode needs.
    pub fn project(&self, y: FieldElem) -> FieldElem {
        self.tower.vec_rep(y)[0]
    }

    /// Row 1 of M_{λθ} applied to V_{Wθ}, recovered from the projected side
    /// information by cancelling the other support downloads.
    pub fn aligned_residual(
        &self,
        answer: &Answer,
        scen: &Scenario,
        y_bar: FieldElem,
    ) -> Result<FieldElem, SchemeError> {
        let s = self.tower.base();
        let ans = answer.segment(0, NAME)?;
        if ans.len() != self.k {
            return Err(SchemeError::Mismatch {
                scheme: NAME,
                what: "answer",
            });
        }
        Ok(scen
            .support
            .iter()
            .filter(|&&i| i != scen.theta)
            .fold(y_bar, |acc, &i| s.sub(acc, ans[i])))
    }
}

impl Scheme for IaScheme {
    fn name(&self) -> &'static str {
        NAME
    }

    fn field(&self) -> &Arc<FieldCtx> {
        self.tower.field()
    }

    fn params(&self) -> Params {
        Params {
            q: self.tower.field().order(),
            k: self.k,
            m: self.m,
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
        Rational::new(self.k as i128, 2)
    }

    fn csi_fraction(&self) -> Rational {
        Rational::new(1, 2)
    }

    fn query(
        &self,
        scen: &Scenario,
        coins: &mut dyn Coins,
    ) -> Result<(Query, ClientState), SchemeError> {
        check_scenario(&self.params(), Variant::PcsiII, scen)?;
        let s = self.tower.base().order();
        let rows: Vec<Vec2> = (0..self.k)
            .map(|k| match scen.coefficient(k) {
                Some(lam) if k == scen.theta => self.tower.row(lam, 1),
                Some(lam) => self.tower.row(lam, 0),
                None => nonzero_pair(coins, s),
            })
            .collect();
        Ok((
            Query {
                scheme: NAME.into(),
                payload: QueryPayload::Rows { rows },
            },
            ClientState {
                scenario: scen.clone(),
                inner: StateInner::Ia,
            },
        ))
    }

    fn answer(&self, query: &Query, store: &MessageStore) -> Result<Answer, SchemeError> {
        let QueryPayload::Rows { rows } = &query.payload else {
            return unsupported("ia_pcsi2 expects projection rows");
        };
        if rows.len() != self.k || store.k() != self.k || store.len() != 1 {
            return unsupported("query or store does not match K and L=1");
        }
        let symbols = rows
            .iter()
            .enumerate()
            .map(|(k, &row)| self.tower.dot(row, self.tower.vec_rep(store.message(k)[0])))
            .collect();
        Ok(Answer {
            segments: vec![Segment {
                field_order: self.tower.base().order(),
                weight: Rational::new(1, 2),
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
        let StateInner::Ia = state.inner else {
            return Err(SchemeError::Mismatch {
                scheme: NAME,
                what: "client state",
            });
        };
        let scen = &state.scenario;
        let y_bar = match side {
            SideInfo::Full(y) => self.project(y[0]),
            SideInfo::Projected(v) => v[0],
        };
        let r1 = self.aligned_residual(answer, scen, y_bar)?;
        let r2 = answer.segment(0, NAME)?[scen.theta];
        let pos = scen.theta_pos().expect("theta lies in the support");
        let lam = scen.lambda[pos];
        let f = self.tower.field();
        let scaled: Vec2 = [r1, r2];
        Ok(vec![f.div(self.tower.from_vec_rep(scaled), lam)?])
    }

    fn retain(&self, _state: &ClientState, y: Vec<FieldElem>) -> SideInfo {
        SideInfo::Projected(vec![self.project(y[0])])
    }
}

/// Negative control for the privacy auditor: support rows are fixed rows of
/// the identity (row 2 at θ, row 1 elsewhere) instead of rows of M_λ, so the
/// query pins down S. Off-support rows stay uniform.
pub struct LeakyIaScheme {
    inner: IaScheme,
}

impl LeakyIaScheme {
    pub fn new(tower: Arc<TowerCtx>, k: usize, m: usize) -> Result<Self, SchemeError> {
        Ok(LeakyIaScheme {
            inner: IaScheme::new(tower, k, m)?,
        })
    }
}

impl Scheme for LeakyIaScheme {
    fn name(&self) -> &'static str {
        "leaky_ia_control"
    }

    fn field(&self) -> &Arc<FieldCtx> {
        self.inner.field()
    }

    fn params(&self) -> Params {
        self.inner.params()
    }

    fn variant(&self) -> Variant {
        Variant::PcsiII
    }

    fn privacy(&self) -> PrivacyMode {
        PrivacyMode::ThetaS
    }

    fn download_cost(&self) -> Rational {
        self.inner.download_cost()
    }

    fn csi_fraction(&self) -> Rational {
        self.inner.csi_fraction()
    }

    fn query(
        &self,
        scen: &Scenario,
        coins: &mut dyn Coins,
    ) -> Result<(Query, ClientState), SchemeError> {
        check_scenario(&self.params(), Variant::PcsiII, scen)?;
        let s = self.inner.tower.base().order();
        let rows: Vec<Vec2> = (0..self.inner.k)
            .map(|k| match scen.coefficient(k) {
                Some(_) if k == scen.theta => [FieldElem::ZERO, FieldElem::ONE],
                Some(_) => [FieldElem::ONE, FieldElem::ZERO],
                None => nonzero_pair(coins, s),
            })
            .collect();
        Ok((
            Query {
                scheme: self.name().into(),
                payload: QueryPayload::Rows { rows },
            },
            ClientState {
                scenario: scen.clone(),
                inner: StateInner::Ia,
            },
        ))
    }

    fn answer(&self, query: &Query, store: &MessageStore) -> Result<Answer, SchemeError> {
        self.inner.answer(query, store)
    }

    fn decode(
        &self,
        answer: &Answer,
        state: &ClientState,
        side: &SideInfo,
    ) -> Result<Vec<FieldElem>, SchemeError> {
        self.inner.decode(answer, state, side)
    }

    fn retain(&self, state: &ClientState, y: Vec<FieldElem>) -> SideInfo {
        self.inner.retain(state, y)
    }
}
