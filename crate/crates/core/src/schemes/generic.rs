use super::{
    check_scenario, full_y, unsupported, Answer, ClientState, Query, QueryPayload, Scheme,
    SchemeError, Segment, StateInner,
};
use super::bank::{g_matrix_pcsi1, g_matrix_pcsi2, BankMode, VectorBank};
use crate::gf::{ExtensionCtx, FieldCtx, FieldElem};
use crate::model::{MessageStore, Params, PrivacyMode, Scenario, SideInfo, Variant};
use crate::rational::Rational;
use crate::rng::{nonzero, Coins};
use std::sync::Arc;

/// Splits an F_q vector into consecutive length-l chunks, each packed into
/// one F_{q^l} symbol.
fn pack_chunks(ext: &ExtensionCtx, w: &[FieldElem]) -> Vec<FieldElem> {
    w.chunks(ext.degree()).map(|c| ext.pack(c)).collect()
}

fn unpack_all(ext: &ExtensionCtx, symbols: &[FieldElem]) -> Vec<FieldElem> {
    symbols.iter().flat_map(|&s| ext.unpack(s)).collect()
}

fn state_mismatch(scheme: &'static str) -> SchemeError {
    SchemeError::Mismatch {
        scheme,
        what: "client state",
    }
}

fn big_segment(ext: &ExtensionCtx, symbols: Vec<FieldElem>) -> Segment {
    Segment {
        field_order: ext.big().order(),
        weight: Rational::int(ext.degree() as i128),
        symbols,
    }
}

const NAME2: &str = "generic_pcsi2";

/// Downloads M−1 generic combinations of the M F_{q^l}-chunks of every
/// message and solves the stacked system with Y for all of W_S.
pub struct GenericPcsi2 {
    f: Arc<FieldCtx>,
    ext: ExtensionCtx,
    k: usize,
    m: usize,
    private: bool,
    bank: VectorBank,
}

impl GenericPcsi2 {
    pub fn new(
        f: Arc<FieldCtx>,
        k: usize,
        m: usize,
        private_coeffs: bool,
        bank: VectorBank,
    ) -> Result<Self, SchemeError> {
        Variant::PcsiII.check(k, m)?;
        if m < 2 {
            return unsupported("generic_pcsi2 requires M >= 2");
        }
        if bank.k != k || bank.m != m {
            return unsupported(format!(
                "bank built for K={}, M={}, scheme needs K={k}, M={m}",
                bank.k, bank.m
            ));
        }
        match (bank.mode, private_coeffs) {
            (BankMode::Pcsi2Private, _) | (BankMode::Pcsi2, false) => {}
            (mode, _) => return unsupported(format!("bank mode {mode} cannot serve generic_pcsi2")),
        }
        bank.verify(&f)?;
        let ext = bank.extension(&f)?;
        Ok(GenericPcsi2 {
            f,
            ext,
            k,
            m,
            private: private_coeffs,
            bank,
        })
    }

    pub fn bank(&self) -> &VectorBank {
        &self.bank
    }

    pub fn extension(&self) -> &ExtensionCtx {
        &self.ext
    }

    /// Every support message, in support order.
    pub fn recover_all(
        &self,
        answer: &Answer,
        state: &ClientState,
        side: &SideInfo,
    ) -> Result<Vec<Vec<FieldElem>>, SchemeError> {
        let StateInner::Generic2 { g_inv } = &state.inner else {
            return Err(state_mismatch(NAME2));
        };
        let m = self.m;
        let y = full_y(NAME2, side)?;
        let delta = answer.segment(0, NAME2)?;
        if y.len() != self.params().l || delta.len() != self.k * (m - 1) {
            return Err(SchemeError::Mismatch {
                scheme: NAME2,
                what: "answer",
            });
        }
        let mut rhs = pack_chunks(&self.ext, y);
        for &i in &state.scenario.support {
            rhs.extend_from_slice(&delta[i * (m - 1)..(i + 1) * (m - 1)]);
        }
        let x = g_inv.apply(self.ext.big(), &rhs);
        Ok(x.chunks(m).map(|c| unpack_all(&self.ext, c)).collect())
    }
}

impl Scheme for GenericPcsi2 {
    fn name(&self) -> &'static str {
        NAME2
    }

    fn field(&self) -> &Arc<FieldCtx> {
        &self.f
    }

    fn params(&self) -> Params {
        Params {
            q: self.f.order(),
            k: self.k,
            m: self.m,
            l: self.m * self.ext.degree(),
        }
    }

    fn variant(&self) -> Variant {
        Variant::PcsiII
    }

    fn privacy(&self) -> PrivacyMode {
        if self.private {
            PrivacyMode::ThetaSLambda
        } else {
            PrivacyMode::ThetaS
        }
    }

    fn download_cost(&self) -> Rational {
        Rational::int((self.k * (self.m - 1) * self.ext.degree()) as i128)
    }

    fn query(
        &self,
        scen: &Scenario,
        _coins: &mut dyn Coins,
    ) -> Result<(Query, ClientState), SchemeError> {
        check_scenario(&self.params(), Variant::PcsiII, scen)?;
        let g = g_matrix_pcsi2(&self.ext, &self.bank.vectors, &scen.support, &scen.lambda);
        let g_inv = g.inverse(self.ext.big())?;
        Ok((
            Query {
                scheme: NAME2.into(),
                payload: QueryPayload::Bank {
                    vectors: self.bank.vectors.clone(),
                },
            },
            ClientState {
                scenario: scen.clone(),
                inner: StateInner::Generic2 { g_inv },
            },
        ))
    }

    fn answer(&self, query: &Query, store: &MessageStore) -> Result<Answer, SchemeError> {
        let QueryPayload::Bank { vectors } = &query.payload else {
            return unsupported("generic_pcsi2 expects bank matrices");
        };
        if vectors.len() != self.k || store.k() != self.k || store.len() != self.params().l {
            return unsupported("query or store does not match K and L");
        }
        let big = self.ext.big();
        let mut symbols = Vec::with_capacity(self.k * (self.m - 1));
        for (k, h) in vectors.iter().enumerate() {
            let v = pack_chunks(&self.ext, store.message(k));
            symbols.extend(h.apply(big, &v));
        }
        Ok(Answer {
            segments: vec![big_segment(&self.ext, symbols)],
        })
    }

    fn decode(
        &self,
        answer: &Answer,
        state: &ClientState,
        side: &SideInfo,
    ) -> Result<Vec<FieldElem>, SchemeError> {
        let all = self.recover_all(answer, state, side)?;
        let pos = state
            .scenario
            .theta_pos()
            .ok_or_else(|| state_mismatch(NAME2))?;
        Ok(all[pos].clone())
    }
}

const NAME1: &str = "generic_pcsi1";

/// Treats each message as one F_{q^L} symbol and downloads K−1 generic
/// combinations; together with Y they determine every message.
pub struct GenericPcsi1 {
    f: Arc<FieldCtx>,
    ext: ExtensionCtx,
    k: usize,
    m: usize,
    private: bool,
    variant: Variant,
    bank: VectorBank,
}

impl GenericPcsi1 {
    pub fn new(
        f: Arc<FieldCtx>,
        k: usize,
        m: usize,
        private_coeffs: bool,
        bank: VectorBank,
    ) -> Result<Self, SchemeError> {
        Variant::PcsiI.check(k, m)?;
        if bank.k != k || bank.m != m {
            return unsupported(format!(
                "bank built for K={}, M={}, scheme needs K={k}, M={m}",
                bank.k, bank.m
            ));
        }
        let want = if private_coeffs {
            BankMode::Pcsi1Private
        } else {
            BankMode::Pcsi1
        };
        if bank.mode != want {
            return unsupported(format!("generic_pcsi1 needs a {want} bank, got {}", bank.mode));
        }
        bank.verify(&f)?;
        let ext = bank.extension(&f)?;
        let variant = if private_coeffs {
            Variant::Pcsi
        } else {
            Variant::PcsiI
        };
        Ok(GenericPcsi1 {
            f,
            ext,
            k,
            m,
            private: private_coeffs,
            variant,
            bank,
        })
    }

    /// Runs the same construction under another variant; decoding recovers
    /// every message so θ may lie anywhere.
    pub fn with_variant(mut self, variant: Variant) -> Result<Self, SchemeError> {
        variant.check(self.k, self.m)?;
        self.variant = variant;
        Ok(self)
    }

    pub fn bank(&self) -> &VectorBank {
        &self.bank
    }

    /// All K messages.
    pub fn recover_all(
        &self,
        answer: &Answer,
        state: &ClientState,
        side: &SideInfo,
    ) -> Result<Vec<Vec<FieldElem>>, SchemeError> {
        let StateInner::Generic1 { a_inv } = &state.inner else {
            return Err(state_mismatch(NAME1));
        };
        let y = full_y(NAME1, side)?;
        let delta = answer.segment(0, NAME1)?;
        if y.len() != self.ext.degree() || delta.len() != self.k - 1 {
            return Err(SchemeError::Mismatch {
                scheme: NAME1,
                what: "answer",
            });
        }
        let mut rhs = vec![self.ext.pack(y)];
        rhs.extend_from_slice(delta);
        let w = a_inv.apply(self.ext.big(), &rhs);
        Ok(w.iter().map(|&s| self.ext.unpack(s)).collect())
    }
}

impl Scheme for GenericPcsi1 {
    fn name(&self) -> &'static str {
        NAME1
    }

    fn field(&self) -> &Arc<FieldCtx> {
        &self.f
    }

    fn params(&self) -> Params {
        Params {
            q: self.f.order(),
            k: self.k,
            m: self.m,
            l: self.ext.degree(),
        }
    }

    fn variant(&self) -> Variant {
        self.variant
    }

    fn privacy(&self) -> PrivacyMode {
        if self.private {
            PrivacyMode::ThetaSLambda
        } else {
            PrivacyMode::ThetaS
        }
    }

    fn download_cost(&self) -> Rational {
        Rational::int(((self.k - 1) * self.ext.degree()) as i128)
    }

    fn query(
        &self,
        scen: &Scenario,
        _coins: &mut dyn Coins,
    ) -> Result<(Query, ClientState), SchemeError> {
        check_scenario(&self.params(), self.variant, scen)?;
        let psi = &self.bank.vectors[self.bank.psi_slot(&scen.lambda)];
        let a = g_matrix_pcsi1(&self.ext, psi, &scen.support, &scen.lambda);
        let a_inv = a.inverse(self.ext.big())?;
        Ok((
            Query {
                scheme: NAME1.into(),
                payload: QueryPayload::Psi { psi: psi.clone() },
            },
            ClientState {
                scenario: scen.clone(),
                inner: StateInner::Generic1 { a_inv },
            },
        ))
    }

    fn answer(&self, query: &Query, store: &MessageStore) -> Result<Answer, SchemeError> {
        let QueryPayload::Psi { psi } = &query.payload else {
            return unsupported("generic_pcsi1 expects a combination matrix");
        };
        if psi.rows() != self.k || psi.cols() != self.k - 1 {
            return unsupported("combination matrix must be K x (K-1)");
        }
        if store.k() != self.k || store.len() != self.ext.degree() {
            return unsupported("store does not match K and L");
        }
        let w: Vec<FieldElem> = (0..self.k).map(|k| self.ext.pack(store.message(k))).collect();
        let symbols = psi.transpose().apply(self.ext.big(), &w);
        Ok(Answer {
            segments: vec![big_segment(&self.ext, symbols)],
        })
    }

    fn decode(
        &self,
        answer: &Answer,
        state: &ClientState,
        side: &SideInfo,
    ) -> Result<Vec<FieldElem>, SchemeError> {
        let mut all = self.recover_all(answer, state, side)?;
        Ok(all.swap_remove(state.scenario.theta))
    }
}

const NAME_TWO: &str = "twostep_pcsi1";

/// Downloads one full combination that turns Y into side information on the
/// complement of S, then runs the private-coefficient generic PCSI-II scheme
/// there.
pub struct TwoStepPcsi1 {
    f: Arc<FieldCtx>,
    k: usize,
    m: usize,
    l: usize,
    inner: Option<GenericPcsi2>,
}

impl TwoStepPcsi1 {
    pub fn new(
        f: Arc<FieldCtx>,
        k: usize,
        m: usize,
        inner_bank: Option<VectorBank>,
    ) -> Result<Self, SchemeError> {
        Variant::PcsiI.check(k, m)?;
        if 2 * m <= k {
            return unsupported("twostep_pcsi1 requires M > K/2");
        }
        let inner = match (k - m, inner_bank) {
            (1, None) => None,
            (1, Some(_)) => return unsupported("K-M=1 needs no inner bank"),
            (_, None) => return unsupported("K-M>=2 needs an inner pcsi2_private bank"),
            (mc, Some(bank)) => {
                if bank.mode != BankMode::Pcsi2Private {
                    return unsupported(format!(
                        "inner step must use a pcsi2_private bank, got {}",
                        bank.mode
                    ));
                }
                Some(GenericPcsi2::new(f.clone(), k, mc, true, bank)?)
            }
        };
        let l = inner.as_ref().map_or(1, |s| s.params().l);
        Ok(TwoStepPcsi1 { f, k, m, l, inner })
    }

    pub fn inner(&self) -> Option<&GenericPcsi2> {
        self.inner.as_ref()
    }

    /// Side information left after step one: Σ_{k∉S} a_k W_k.
    pub fn shifted_side(&self, delta1: &[FieldElem], y: &[FieldElem]) -> Vec<FieldElem> {
        delta1.iter().zip(y).map(|(&d, &y)| self.f.sub(d, y)).collect()
    }

    fn inner_scenario(&self, scen: &Scenario, a: &[FieldElem]) -> Scenario {
        let support: Vec<usize> = (0..self.k).filter(|k| !scen.support.contains(k)).collect();
        let lambda = support.iter().map(|&k| a[k]).collect();
        Scenario {
            variant: Variant::PcsiII,
            privacy_mode: PrivacyMode::ThetaSLambda,
            theta: scen.theta,
            support,
            lambda,
        }
    }
}

impl Scheme for TwoStepPcsi1 {
    fn name(&self) -> &'static str {
        NAME_TWO
    }

    fn field(&self) -> &Arc<FieldCtx> {
        &self.f
    }

    fn params(&self) -> Params {
        Params {
            q: self.f.order(),
            k: self.k,
            m: self.m,
            l: self.l,
        }
    }

    fn variant(&self) -> Variant {
        Variant::PcsiI
    }

    fn privacy(&self) -> PrivacyMode {
        PrivacyMode::ThetaS
    }

    fn download_cost(&self) -> Rational {
        let step1 = Rational::int(self.l as i128);
        match &self.inner {
            Some(s) => step1 + s.download_cost(),
            None => step1,
        }
    }

    fn query(
        &self,
        scen: &Scenario,
        coins: &mut dyn Coins,
    ) -> Result<(Query, ClientState), SchemeError> {
        check_scenario(&self.params(), Variant::PcsiI, scen)?;
        let a: Vec<FieldElem> = (0..self.k)
            .map(|k| scen.coefficient(k).unwrap_or_else(|| nonzero(coins, &self.f)))
            .collect();
        let (inner_q, inner_s) = match &self.inner {
            Some(s) => {
                let (q, st) = s.query(&self.inner_scenario(scen, &a), coins)?;
                (Some(Box::new(q.payload)), Some(Box::new(st)))
            }
            None => (None, None),
        };
        Ok((
            Query {
                scheme: NAME_TWO.into(),
                payload: QueryPayload::TwoStep {
                    a: a.clone(),
                    inner: inner_q,
                },
            },
            ClientState {
                scenario: scen.clone(),
                inner: StateInner::TwoStep { a, inner: inner_s },
            },
        ))
    }

    fn answer(&self, query: &Query, store: &MessageStore) -> Result<Answer, SchemeError> {
        let QueryPayload::TwoStep { a, inner } = &query.payload else {
            return unsupported("twostep_pcsi1 expects a two-step query");
        };
        if a.len() != self.k || store.k() != self.k || store.len() != self.l {
            return unsupported("query or store does not match K and L");
        }
        let f = &self.f;
        let delta1 = (0..self.l)
            .map(|j| f.sum((0..self.k).map(|k| f.mul(a[k], store.message(k)[j]))))
            .collect();
        let mut segments = vec![Segment {
            field_order: f.order(),
            weight: Rational::one(),
            symbols: delta1,
        }];
        match (&self.inner, inner) {
            (Some(s), Some(p)) => {
                let q = Query {
                    scheme: s.name().into(),
                    payload: (**p).clone(),
                };
                segments.extend(s.answer(&q, store)?.segments);
            }
            (None, None) => {}
            _ => return unsupported("inner query does not match the scheme"),
        }
        Ok(Answer { segments })
    }

    fn decode(
        &self,
        answer: &Answer,
        state: &ClientState,
        side: &SideInfo,
    ) -> Result<Vec<FieldElem>, SchemeError> {
        let StateInner::TwoStep { a, inner } = &state.inner else {
            return Err(state_mismatch(NAME_TWO));
        };
        let y = full_y(NAME_TWO, side)?;
        let delta1 = answer.segment(0, NAME_TWO)?;
        if delta1.len() != y.len() {
            return Err(SchemeError::Mismatch {
                scheme: NAME_TWO,
                what: "answer",
            });
        }
        let y_prime = self.shifted_side(delta1, y);
        match (&self.inner, inner) {
            (None, None) => {
                let at = a[state.scenario.theta];
                y_prime
                    .iter()
                    .map(|&v| Ok(self.f.div(v, at)?))
                    .collect()
            }
            (Some(s), Some(st)) => {
                let rest = Answer {
                    segments: answer.segments[1..].to_vec(),
                };
                s.decode(&rest, st, &SideInfo::Full(y_prime))
            }
            _ => Err(state_mismatch(NAME_TWO)),
        }
    }
}
