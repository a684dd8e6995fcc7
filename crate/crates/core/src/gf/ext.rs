use super::field::{field_new, FieldCtx, FieldElem, FieldError};
use std::sync::Arc;

/// A field viewed as a vector space over one of its subfields.
///
/// Coordinates `(c_0, .., c_{d-1})` over the subfield are packed into the
/// integer `Σ c_i·s^i` (s the subfield order), and both directions of the
/// coordinate map are tabulated.
#[derive(Clone, Debug)]
pub struct ExtensionCtx {
    base: Arc<FieldCtx>,
    big: Arc<FieldCtx>,
    degree: usize,
    embed: Vec<FieldElem>,
    basis: Vec<FieldElem>,
    to_packed: Vec<u32>,
    from_packed: Vec<u32>,
}

/// Image of each subfield element in `big`, found by mapping the subfield's
/// generator to the smallest-code root of its modulus.
pub fn embedding(base: &FieldCtx, big: &FieldCtx) -> Result<Vec<FieldElem>, FieldError> {
    let not_sub = || FieldError::NotSubfield {
        small: base.order(),
        big: big.order(),
    };
    if base.characteristic() != big.characteristic() || big.degree() % base.degree() != 0 {
        return Err(not_sub());
    }
    if base.degree() == 1 {
        return Ok(base.elements().collect());
    }
    let root = big
        .elements()
        .find(|&x| big.eval_prime_poly(base.modulus(), x).is_zero())
        .ok_or_else(not_sub)?;
    let powers: Vec<FieldElem> = (0..base.degree()).map(|i| big.pow(root, i as u64)).collect();
    Ok(base
        .elements()
        .map(|c| {
            let digits = base.coeffs(c);
            big.sum(
                digits
                    .iter()
                    .zip(&powers)
                    .map(|(&d, &w)| big.mul(FieldElem(d), w)),
            )
        })
        .collect())
}

impl ExtensionCtx {
    /// F_{q^degree} over F_q with basis 1, x, .., x^{degree-1}, where x is the
    /// generator of the big field's polynomial representation.
    pub fn new(base: Arc<FieldCtx>, degree: usize) -> Result<Self, FieldError> {
        let big_degree = base.degree() * degree as u32;
        let big = Arc::new(field_new(base.characteristic(), big_degree)?);
        let x = if big_degree == 1 {
            FieldElem::ONE
        } else {
            FieldElem(base.characteristic())
        };
        let basis = (0..degree).map(|i| big.pow(x, i as u64)).collect();
        Self::with_basis(base, big, basis)
    }

    pub fn with_basis(
        base: Arc<FieldCtx>,
        big: Arc<FieldCtx>,
        basis: Vec<FieldElem>,
    ) -> Result<Self, FieldError> {
        let embed = embedding(&base, &big)?;
        let degree = basis.len();
        let s = base.order() as u64;
        if s.pow(degree as u32) != big.order() as u64 {
            return Err(FieldError::NotSubfield {
                small: base.order(),
                big: big.order(),
            });
        }
        let total = big.order() as usize;
        let mut to_packed = vec![u32::MAX; total];
        let mut from_packed = vec![0u32; total];
        for packed in 0..total as u32 {
            let mut rest = packed;
            let mut e = FieldElem::ZERO;
            for &b in &basis {
                let c = embed[(rest % base.order()) as usize];
                rest /= base.order();
                e = big.add(e, big.mul(c, b));
            }
            if to_packed[e.0 as usize] != u32::MAX {
                return Err(FieldError::NotSubfield {
                    small: base.order(),
                    big: big.order(),
                });
            }
            to_packed[e.0 as usize] = packed;
            from_packed[packed as usize] = e.0;
        }
        Ok(ExtensionCtx {
            base,
            big,
            degree,
            embed,
            basis,
            to_packed,
            from_packed,
        })
    }

    pub fn base(&self) -> &Arc<FieldCtx> {
        &self.base
    }

    pub fn big(&self) -> &Arc<FieldCtx> {
        &self.big
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self) -> &[FieldElem] {
        &self.basis
    }

    pub fn embed(&self, a: FieldElem) -> FieldElem {
        self.embed[a.0 as usize]
    }

    #[inline]
    pub fn packed_of(&self, e: FieldElem) -> u32 {
        self.to_packed[e.0 as usize]
    }

    #[inline]
    pub fn from_packed(&self, packed: u32) -> FieldElem {
        FieldElem(self.from_packed[packed as usize])
    }

    /// Element with the given coordinates over the subfield.
    pub fn pack(&self, coords: &[FieldElem]) -> FieldElem {
        let s = self.base.order();
        let packed = coords.iter().rev().fold(0u32, |acc, c| acc * s + c.0);
        self.from_packed(packed)
    }

    pub fn unpack(&self, e: FieldElem) -> Vec<FieldElem> {
        let mut out = vec![FieldElem::ZERO; self.degree];
        self.unpack_into(e, &mut out);
        out
    }

    pub fn unpack_into(&self, e: FieldElem, out: &mut [FieldElem]) {
        let s = self.base.order();
        let mut rest = self.packed_of(e);
        for o in out.iter_mut() {
            *o = FieldElem(rest % s);
            rest /= s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_base_packing_is_identity() {
        let base = Arc::new(field_new(2, 1).unwrap());
        let ext = ExtensionCtx::new(base, 3).unwrap();
        for e in ext.big().elements() {
            assert_eq!(ext.packed_of(e), e.0);
        }
    }

    #[test]
    fn embedding_is_a_homomorphism() {
        let base = field_new(2, 2).unwrap();
        let big = field_new(2, 4).unwrap();
        let emb = embedding(&base, &big).unwrap();
        for a in base.elements() {
            for b in base.elements() {
                assert_eq!(
                    emb[base.mul(a, b).0 as usize],
                    big.mul(emb[a.0 as usize], emb[b.0 as usize])
                );
                assert_eq!(
                    emb[base.add(a, b).0 as usize],
                    big.add(emb[a.0 as usize], emb[b.0 as usize])
                );
            }
        }
    }

    #[test]
    fn coordinates_are_linear_over_base() {
        let base = Arc::new(field_new(3, 1).unwrap());
        let ext = ExtensionCtx::new(base.clone(), 2).unwrap();
        let big = ext.big().clone();
        for a in big.elements() {
            for c in base.elements() {
                let scaled = big.mul(ext.embed(c), a);
                let want: Vec<_> = ext.unpack(a).iter().map(|&x| base.mul(c, x)).collect();
                assert_eq!(ext.unpack(scaled), want);
            }
            assert_eq!(ext.pack(&ext.unpack(a)), a);
        }
    }

    #[test]
    fn rejects_non_subfield() {
        let base = field_new(2, 2).unwrap();
        let big = field_new(2, 3).unwrap();
        assert!(embedding(&base, &big).is_err());
    }
}
