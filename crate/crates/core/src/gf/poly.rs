use super::field::{FieldCtx, FieldElem};

/// Coefficients (low to high) of ∏ (x − r) over the given roots.
pub fn from_roots(f: &FieldCtx, roots: &[FieldElem]) -> Vec<FieldElem> {
    let mut c = vec![FieldElem::ONE];
    for &r in roots {
        let nr = f.neg(r);
        let mut next = vec![FieldElem::ZERO; c.len() + 1];
        for (i, &a) in c.iter().enumerate() {
            next[i + 1] = f.add(next[i + 1], a);
            next[i] = f.add(next[i], f.mul(a, nr));
        }
        c = next;
    }
    c
}

pub fn eval(f: &FieldCtx, coeffs: &[FieldElem], x: FieldElem) -> FieldElem {
    coeffs
        .iter()
        .rev()
        .fold(FieldElem::ZERO, |acc, &c| f.add(f.mul(acc, x), c))
}
