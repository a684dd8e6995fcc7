use super::{
    check_scenario, unsupported, Answer, ClientState, Query, QueryPayload, Scheme, SchemeError,
    Segment, StateInner,
};
use crate::gf::{poly, FieldCtx, FieldElem, TowerCtx, Vec2};
use crate::model::{MessageStore, Params, PrivacyMode, Scenario, SideInfo, Variant};
use crate::rational::Rational;
use crate::rng::{nonzero, nonzero_pair, Coins};
use std::sync::Arc;

const NAME: &str = "halfdl_pcsi";

/// Downloads one F_√q projection of every message plus K − M GRS
/// combinations of second projections. With θ in S the first projections
/// are aligned with the side information; otherwise the GRS part isolates
/// the second projection of W_θ.
pub struct HalfDlScheme {
    tower: Arc<TowerCtx>,
    k: usize,
    m: usize,
    omega: Vec<FieldElem>,
}

impl HalfDlScheme {
    pub fn new(tower: Arc<TowerCtx>, k: usize, m: usize) -> Result<Self, SchemeError> {
        Variant::Pcsi.check(k, m)?;
        let s = tower.base().order();
        if (s as usize) < k {
            return unsupported(format!("GRS points over F_{s} need sqrt(q) >= K, got K={k}"));
        }
        let omega = (0..k as u32).map(FieldElem).collect();
        Ok(HalfDlScheme { tower, k, m, omega })
    }

    pub fn tower(&self) -> &Arc<TowerCtx> {
        &self.tower
    }

    fn grs_rows(&self) -> usize {
        self.k - self.m
    }

    fn project(&self, y: FieldElem) -> FieldElem {
        self.tower.vec_rep(y)[0]
    }

    fn independent(&self, a: Vec2, b: Vec2) -> bool {
        !self.tower.det(&[a, b]).is_zero()
    }

    /// Uniform over the s² − s vectors outside the span of `a`.
    fn independent_of(&self, coins: &mut dyn Coins, a: Vec2) -> Vec2 {
        let s = self.tower.base().order();
        let idx = coins.below(s * s - s);
        (1..s * s)
            .map(|i| [FieldElem(i % s), FieldElem(i / s)])
            .filter(|&b| self.independent(a, b))
            .nth(idx as usize)
            .expect("s^2 - s independent vectors exist")
    }
}

impl Scheme for HalfDlScheme {
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
        Variant::Pcsi
    }

    fn privacy(&self) -> PrivacyMode {
        PrivacyMode::ThetaS
    }

    fn download_cost(&self) -> Rational {
        Rational::new((self.k + self.grs_rows()) as i128, 2)
    }

    fn csi_fraction(&self) -> Rational {
        Rational::new(1, 2)
    }

    fn query(
        &self,
        scen: &Scenario,
        coins: &mut dyn Coins,
    ) -> Result<(Query, ClientState), SchemeError> {
        check_scenario(&self.params(), Variant::Pcsi, scen)?;
        let s = self.tower.base();
        let mut l = Vec::with_capacity(self.k);
        let mut l_prime = Vec::with_capacity(self.k);
        let mut v = Vec::with_capacity(self.k);
        let mut p = Vec::new();
        if scen.theta_in_support() {
            for k in 0..self.k {
                let row = match scen.coefficient(k) {
                    Some(lam) if k == scen.theta => self.tower.row(lam, 1),
                    Some(lam) => self.tower.row(lam, 0),
                    None => nonzero_pair(coins, s.order()),
                };
                l.push(row);
                l_prime.push(self.independent_of(coins, row));
                v.push(nonzero(coins, s));
            }
        } else {
            let roots: Vec<FieldElem> = (0..self.k)
                .filter(|&k| k != scen.theta && !scen.support.contains(&k))
                .map(|k| self.omega[k])
                .collect();
            p = poly::from_roots(s, &roots);
            for k in 0..self.k {
                match scen.coefficient(k) {
                    Some(lam) => {
                        let a = nonzero(coins, s);
                        let r = self.tower.row(lam, 0);
                        let lp = [s.div(r[0], a)?, s.div(r[1], a)?];
                        l_prime.push(lp);
                        l.push(self.independent_of(coins, lp));
                        v.push(s.div(a, poly::eval(s, &p, self.omega[k]))?);
                    }
                    None => {
                        let row = nonzero_pair(coins, s.order());
                        l.push(row);
                        l_prime.push(self.independent_of(coins, row));
                        v.push(nonzero(coins, s));
                    }
                }
            }
        }
        Ok((
            Query {
                scheme: NAME.into(),
                payload: QueryPayload::HalfDl {
                    l: l.clone(),
                    l_prime: l_prime.clone(),
                    v: v.clone(),
                },
            },
            ClientState {
                scenario: scen.clone(),
                inner: StateInner::HalfDl { l, l_prime, v, p },
            },
        ))
    }

    fn answer(&self, query: &Query, store: &MessageStore) -> Result<Answer, SchemeError> {
        let QueryPayload::HalfDl { l, l_prime, v } = &query.payload else {
            return unsupported("halfdl_pcsi expects projection pairs and GRS scalars");
        };
        if l.len() != self.k || l_prime.len() != self.k || v.len() != self.k {
            return unsupported("query does not match K");
        }
        if store.k() != self.k || store.len() != 1 {
            return unsupported("store does not match K and L=1");
        }
        let s = self.tower.base();
        let vw: Vec<Vec2> = (0..self.k)
            .map(|k| self.tower.vec_rep(store.message(k)[0]))
            .collect();
        let mut symbols: Vec<FieldElem> = (0..self.k).map(|k| self.tower.dot(l[k], vw[k])).collect();
        let mut col: Vec<FieldElem> = (0..self.k)
            .map(|k| s.mul(v[k], self.tower.dot(l_prime[k], vw[k])))
            .collect();
        for _ in 0..self.grs_rows() {
            symbols.push(s.sum(col.iter().copied()));
            for (c, &w) in col.iter_mut().zip(&self.omega) {
                *c = s.mul(*c, w);
            }
        }
        Ok(Answer {
            segments: vec![Segment {
                field_order: s.order(),
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
        let StateInner::HalfDl { l, l_prime, v, p } = &state.inner else {
            return Err(SchemeError::Mismatch {
                scheme: NAME,
                what: "client state",
            });
        };
        let scen = &state.scenario;
        let s = self.tower.base();
        let sym = answer.segment(0, NAME)?;
        if sym.len() != self.k + self.grs_rows() {
            return Err(SchemeError::Mismatch {
                scheme: NAME,
                what: "answer",
            });
        }
        let y_bar = match side {
            SideInfo::Full(y) => self.project(y[0]),
            SideInfo::Projected(y) => y[0],
        };
        let t = scen.theta;
        let vw = if let Some(pos) = scen.theta_pos() {
            let residual = scen
                .support
                .iter()
                .filter(|&&i| i != t)
                .fold(y_bar, |acc, &i| s.sub(acc, sym[i]));
            let lam = scen.lambda[pos];
            self.tower
                .solve2(self.tower.row(lam, 0), self.tower.row(lam, 1), [residual, sym[t]])?
        } else {
            let grs = &sym[self.k..];
            let combined = s.dot(p, &grs[..p.len()]);
            let scale = s.mul(v[t], poly::eval(s, p, self.omega[t]));
            let second = s.div(s.sub(combined, y_bar), scale)?;
            self.tower.solve2(l[t], l_prime[t], [sym[t], second])?
        };
        Ok(vec![self.tower.from_vec_rep(vw)])
    }

    fn retain(&self, _state: &ClientState, y: Vec<FieldElem>) -> SideInfo {
        SideInfo::Projected(vec![self.project(y[0])])
    }
}
