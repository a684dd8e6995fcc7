use super::ext::{embedding, ExtensionCtx};
use super::field::{field_new, FieldCtx, FieldElem, FieldError};
use std::sync::Arc;

/// Column vector over F_s: `[γ, μ]`.
pub type Vec2 = [FieldElem; 2];
/// Row-major 2×2 matrix over F_s.
pub type Mat2 = [[FieldElem; 2]; 2];

/// F_q written as F_s[z]/g(z) with g(z) = z² + a1·z + a0, s = √q.
#[derive(Clone, Debug)]
pub struct TowerCtx {
    ext: ExtensionCtx,
    a0: FieldElem,
    a1: FieldElem,
}

pub fn tower_new(field: Arc<FieldCtx>) -> Result<TowerCtx, FieldError> {
    if field.degree() % 2 != 0 {
        return Err(FieldError::NotAnEvenPrimePower(field.order()));
    }
    let base = Arc::new(field_new(field.characteristic(), field.degree() / 2)?);
    let (a1, a0) = base
        .elements()
        .flat_map(|a1| base.elements().map(move |a0| (a1, a0)))
        .find(|&(a1, a0)| {
            base.elements().all(|z| {
                let v = base.add(base.mul(z, base.add(z, a1)), a0);
                !v.is_zero()
            })
        })
        .ok_or(FieldError::NoIrreducible {
            p: base.order(),
            n: 2,
        })?;
    let emb = embedding(&base, &field)?;
    let (e1, e0) = (emb[a1.0 as usize], emb[a0.0 as usize]);
    let zeta = field
        .elements()
        .find(|&z| {
            let v = field.add(field.mul(z, field.add(z, e1)), e0);
            v.is_zero()
        })
        .ok_or(FieldError::NotSubfield {
            small: base.order(),
            big: field.order(),
        })?;
    let ext = ExtensionCtx::with_basis(base, field, vec![FieldElem::ONE, zeta])?;
    Ok(TowerCtx { ext, a0, a1 })
}

impl TowerCtx {
    pub fn field(&self) -> &Arc<FieldCtx> {
        self.ext.big()
    }

    pub fn base(&self) -> &Arc<FieldCtx> {
        self.ext.base()
    }

    /// `(a1, a0)` of the quadratic g.
    pub fn g(&self) -> (FieldElem, FieldElem) {
        (self.a1, self.a0)
    }

    /// The element of F_q playing the role of z.
    pub fn zeta(&self) -> FieldElem {
        self.ext.basis()[1]
    }

    #[inline]
    pub fn vec_rep(&self, c: FieldElem) -> Vec2 {
        let s = self.base().order();
        let packed = self.ext.packed_of(c);
        [FieldElem(packed % s), FieldElem(packed / s)]
    }

    #[inline]
    pub fn from_vec_rep(&self, v: Vec2) -> FieldElem {
        self.ext.from_packed(v[0].0 + v[1].0 * self.base().order())
    }

    pub fn mat_rep(&self, c: FieldElem) -> Mat2 {
        let b = self.base();
        let [g, m] = self.vec_rep(c);
        [
            [g, b.neg(b.mul(m, self.a0))],
            [m, b.sub(g, b.mul(m, self.a1))],
        ]
    }

    pub fn row(&self, c: FieldElem, r: usize) -> Vec2 {
        self.mat_rep(c)[r]
    }

    #[inline]
    pub fn dot(&self, row: Vec2, v: Vec2) -> FieldElem {
        let b = self.base();
        b.add(b.mul(row[0], v[0]), b.mul(row[1], v[1]))
    }

    pub fn mat_vec(&self, m: &Mat2, v: Vec2) -> Vec2 {
        [self.dot(m[0], v), self.dot(m[1], v)]
    }

    pub fn det(&self, m: &Mat2) -> FieldElem {
        let b = self.base();
        b.sub(b.mul(m[0][0], m[1][1]), b.mul(m[0][1], m[1][0]))
    }

    /// Solves `[r1; r2] · x = rhs` for a 2×2 system given by two rows.
    pub fn solve2(&self, r1: Vec2, r2: Vec2, rhs: Vec2) -> Result<Vec2, FieldError> {
        let b = self.base();
        let det = self.det(&[r1, r2]);
        let inv = b.inv(det)?;
        let x0 = b.sub(b.mul(r2[1], rhs[0]), b.mul(r1[1], rhs[1]));
        let x1 = b.sub(b.mul(r1[0], rhs[1]), b.mul(r2[0], rhs[0]));
        Ok([b.mul(x0, inv), b.mul(x1, inv)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tower(p: u32, n: u32) -> TowerCtx {
        tower_new(Arc::new(field_new(p, n).unwrap())).unwrap()
    }

    #[test]
    fn f4_tower_matches_polynomial_basis() {
        let t = tower(2, 2);
        assert_eq!(t.g(), (FieldElem(1), FieldElem(1)));
        assert_eq!(t.zeta(), FieldElem(2));
        let x1 = FieldElem(3);
        assert_eq!(
            t.mat_rep(x1),
            [[FieldElem(1), FieldElem(1)], [FieldElem(1), FieldElem(0)]]
        );
    }

    #[test]
    fn odd_degree_rejected() {
        let f = Arc::new(field_new(2, 3).unwrap());
        assert_eq!(
            tower_new(f).unwrap_err(),
            FieldError::NotAnEvenPrimePower(8)
        );
    }

    #[test]
    fn solve2_inverts_mat_rep() {
        let t = tower(3, 2);
        let f = t.field().clone();
        for c in f.nonzero() {
            let m = t.mat_rep(c);
            for w in f.elements() {
                let v = t.vec_rep(w);
                let rhs = t.mat_vec(&m, v);
                assert_eq!(t.solve2(m[0], m[1], rhs).unwrap(), v);
            }
        }
    }
}
