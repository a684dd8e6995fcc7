use super::{
    check_scenario, full_y, unsupported, Answer, ClientState, Query, QueryPayload, Scheme,
    SchemeError, Segment, StateInner,
};
use crate::gf::{poly, FieldCtx, FieldElem};
use crate::model::{MessageStore, Params, PrivacyMode, Scenario, SideInfo, Variant};
use crate::rational::Rational;
use crate::rng::{choose, nonzero, Coins};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Which GRS construction a [`GrsScheme`] runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrsKind {
    /// θ outside the support: K − M rows.
    PcsiI,
    /// θ inside the support, shifted coefficient on θ: K − M + 1 rows.
    PcsiII,
    /// Either case with K − M + 1 rows; the outside case carries one
    /// redundant row.
    Pcsi,
}

/// Specialized GRS queries. Evaluation points are the field elements with
/// codes 0..K.
pub struct GrsScheme {
    f: Arc<FieldCtx>,
    k: usize,
    m: usize,
    kind: GrsKind,
    omega: Vec<FieldElem>,
}

impl GrsScheme {
    pub fn new(f: Arc<FieldCtx>, k: usize, m: usize, kind: GrsKind) -> Result<Self, SchemeError> {
        let q = f.order();
        match kind {
            GrsKind::PcsiI => Variant::PcsiI.check(k, m)?,
            GrsKind::PcsiII => Variant::PcsiII.check(k, m)?,
            GrsKind::Pcsi => {
                Variant::Pcsi.check(k, m)?;
                if m < 2 {
                    return unsupported("combined_pcsi requires M >= 2");
                }
            }
        }
        if (q as usize) < k {
            return unsupported(format!("GRS evaluation points need q >= K, got q={q}, K={k}"));
        }
        if kind != GrsKind::PcsiI && q == 2 {
            return unsupported("shifted GRS coefficient needs q != 2");
        }
        let omega = (0..k as u32).map(FieldElem).collect();
        Ok(GrsScheme { f, k, m, kind, omega })
    }

    pub fn omega(&self) -> &[FieldElem] {
        &self.omega
    }

    fn rows(&self) -> usize {
        match self.kind {
            GrsKind::PcsiI => self.k - self.m,
            GrsKind::PcsiII | GrsKind::Pcsi => self.k - self.m + 1,
        }
    }

    /// Polynomial vanishing on the evaluation points of `excluded`.
    pub fn vanishing(&self, excluded: impl Fn(usize) -> bool) -> Vec<FieldElem> {
        let roots: Vec<FieldElem> = (0..self.k)
            .filter(|&k| excluded(k))
            .map(|k| self.omega[k])
            .collect();
        poly::from_roots(&self.f, &roots)
    }

    /// Σ_i p_i Q_i as a coefficient vector over the K messages.
    pub fn combined_row(&self, v: &[FieldElem], p: &[FieldElem]) -> Vec<FieldElem> {
        (0..self.k)
            .map(|k| self.f.mul(v[k], poly::eval(&self.f, p, self.omega[k])))
            .collect()
    }

    fn query_outside(
        &self,
        scen: &Scenario,
        coins: &mut dyn Coins,
    ) -> Result<(Vec<FieldElem>, StateInner), SchemeError> {
        let f = &self.f;
        let p = self.vanishing(|k| k != scen.theta && !scen.support.contains(&k));
        let mut v = Vec::with_capacity(self.k);
        for k in 0..self.k {
            v.push(match scen.coefficient(k) {
                Some(lam) => f.div(lam, poly::eval(f, &p, self.omega[k]))?,
                None => nonzero(coins, f),
            });
        }
        let scale = f.mul(v[scen.theta], poly::eval(f, &p, self.omega[scen.theta]));
        Ok((v, StateInner::GrsOutside { p, scale }))
    }

    fn query_inside(
        &self,
        scen: &Scenario,
        coins: &mut dyn Coins,
    ) -> Result<(Vec<FieldElem>, StateInner), SchemeError> {
        let f = &self.f;
        let p = self.vanishing(|k| !scen.support.contains(&k));
        let mut v = Vec::with_capacity(self.k);
        let mut lambda_prime = FieldElem::ONE;
        for k in 0..self.k {
            let at = poly::eval(f, &p, self.omega[k]);
            v.push(match scen.coefficient(k) {
                Some(lam) if k == scen.theta => {
                    let allowed: Vec<FieldElem> =
                        f.nonzero().filter(|&c| !f.add(lam, c).is_zero()).collect();
                    lambda_prime = choose(coins, &allowed);
                    f.div(f.add(lam, lambda_prime), at)?
                }
                Some(lam) => f.div(lam, at)?,
                None => nonzero(coins, f),
            });
        }
        Ok((v, StateInner::GrsInside { p, lambda_prime }))
    }
}

impl Scheme for GrsScheme {
    fn name(&self) -> &'static str {
        match self.kind {
            GrsKind::PcsiI => "grs_pcsi1",
            GrsKind::PcsiII => "modgrs_pcsi2",
            GrsKind::Pcsi => "combined_pcsi",
        }
    }

    fn field(&self) -> &Arc<FieldCtx> {
        &self.f
    }

    fn params(&self) -> Params {
        Params {
            q: self.f.order(),
            k: self.k,
            m: self.m,
            l: 1,
        }
    }

    fn variant(&self) -> Variant {
        match self.kind {
            GrsKind::PcsiI => Variant::PcsiI,
            GrsKind::PcsiII => Variant::PcsiII,
            GrsKind::Pcsi => Variant::Pcsi,
        }
    }

    fn privacy(&self) -> PrivacyMode {
        PrivacyMode::ThetaS
    }

    fn download_cost(&self) -> Rational {
        Rational::int(self.rows() as i128)
    }

    fn query(
        &self,
        scen: &Scenario,
        coins: &mut dyn Coins,
    ) -> Result<(Query, ClientState), SchemeError> {
        check_scenario(&self.params(), self.variant(), scen)?;
        let (v, inner) = if scen.theta_in_support() {
            self.query_inside(scen, coins)?
        } else {
            self.query_outside(scen, coins)?
        };
        Ok((
            Query {
                scheme: self.name().into(),
                payload: QueryPayload::Grs {
                    v,
                    rows: self.rows(),
                },
            },
            ClientState {
                scenario: scen.clone(),
                inner,
            },
        ))
    }

    fn answer(&self, query: &Query, store: &MessageStore) -> Result<Answer, SchemeError> {
        let QueryPayload::Grs { v, rows } = &query.payload else {
            return unsupported("GRS schemes expect a v-vector");
        };
        if v.len() != self.k || store.k() != self.k || store.len() != 1 {
            return unsupported("query or store does not match K and L=1");
        }
        let f = &self.f;
        let mut col: Vec<FieldElem> = (0..self.k)
            .map(|k| f.mul(v[k], store.message(k)[0]))
            .collect();
        let mut symbols = Vec::with_capacity(*rows);
        for _ in 0..*rows {
            symbols.push(f.sum(col.iter().copied()));
            for (c, &w) in col.iter_mut().zip(&self.omega) {
                *c = f.mul(*c, w);
            }
        }
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
        let y = full_y(self.name(), side)?[0];
        let delta = answer.segment(0, self.name())?;
        let (p, div) = match &state.inner {
            StateInner::GrsOutside { p, scale } => (p, *scale),
            StateInner::GrsInside { p, lambda_prime } => (p, *lambda_prime),
            _ => {
                return Err(SchemeError::Mismatch {
                    scheme: self.name(),
                    what: "client state",
                })
            }
        };
        if delta.len() < p.len() {
            return Err(SchemeError::Mismatch {
                scheme: self.name(),
                what: "answer",
            });
        }
        let combined = f.dot(p, delta);
        Ok(vec![f.div(f.sub(combined, y), div)?])
    }
}
