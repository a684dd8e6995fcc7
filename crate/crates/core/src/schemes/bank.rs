use crate::gf::{ExtensionCtx, FieldCtx, FieldElem, FieldError, Matrix};
use crate::model::lambda_vectors;
use crate::rng::{Coins, SeededCoins};
use itertools::Itertools;
use num_integer::binomial;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub const DEFAULT_BUDGET: usize = 64;

/// Which family of systems a bank must make invertible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BankMode {
    /// One (M−1)×M matrix per message; every support with unit coefficients.
    Pcsi2,
    /// As `Pcsi2`, certified for every coefficient vector.
    #[serde(rename = "pcsi2_private")]
    Pcsi2Private,
    /// One K×(K−1) matrix per coefficient vector, each valid for every support.
    Pcsi1,
    /// A single K×(K−1) matrix valid for every support and coefficient vector.
    #[serde(rename = "pcsi1_private")]
    Pcsi1Private,
}

impl BankMode {
    pub const ALL: [BankMode; 4] = [
        BankMode::Pcsi2,
        BankMode::Pcsi2Private,
        BankMode::Pcsi1,
        BankMode::Pcsi1Private,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BankMode::Pcsi2 => "pcsi2",
            BankMode::Pcsi2Private => "pcsi2_private",
            BankMode::Pcsi1 => "pcsi1",
            BankMode::Pcsi1Private => "pcsi1_private",
        }
    }

    pub fn parse(s: &str) -> Option<BankMode> {
        BankMode::ALL.into_iter().find(|m| m.label() == s)
    }

    pub fn private(self) -> bool {
        matches!(self, BankMode::Pcsi2Private | BankMode::Pcsi1Private)
    }

    fn pcsi2(self) -> bool {
        matches!(self, BankMode::Pcsi2 | BankMode::Pcsi2Private)
    }

    /// Number of nonzero polynomial factors whose product must not vanish:
    /// the field-size bound q^l must exceed this.
    pub fn degree_bound(self, q: u32, k: usize, m: usize) -> u128 {
        let supports = binomial(k as u128, m as u128);
        let per = if self.pcsi2() {
            (m * m.saturating_sub(1)) as u128
        } else {
            (k - 1) as u128
        };
        let lambdas = if self.private() {
            (q as u128 - 1).pow(m as u32)
        } else {
            1
        };
        lambdas * supports * per
    }
}

impl fmt::Display for BankMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Smallest l with q^l above the mode's degree bound.
pub fn default_extension_degree(q: u32, k: usize, m: usize, mode: BankMode) -> usize {
    let bound = mode.degree_bound(q, k, m);
    let mut l = 1;
    let mut size = q as u128;
    while size <= bound {
        size *= q as u128;
        l += 1;
    }
    l
}

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SearchError {
    #[error(
        "search failed: {mode} q={q} K={k} M={m} l={l}: slot {slot} still had {singular} singular \
         systems after {attempts} attempts"
    )]
    SearchFailed {
        mode: BankMode,
        q: u32,
        k: usize,
        m: usize,
        l: usize,
        slot: usize,
        attempts: usize,
        singular: usize,
    },
    #[error("bank is not certified: {0} singular systems")]
    Uncertified(usize),
    #[error("bank does not fit: {0}")]
    Shape(String),
    #[error("extension field: {0}")]
    Field(String),
}

impl From<FieldError> for SearchError {
    fn from(e: FieldError) -> Self {
        SearchError::Field(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    /// Which matrix is being drawn (always 0 except for per-coefficient banks).
    pub slot: usize,
    pub draw: usize,
    /// Systems found singular with this draw.
    pub singular: usize,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    /// Extension degree; defaults to the mode's bound.
    pub l: Option<usize>,
    /// Draws allowed per slot.
    pub budget: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            l: None,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Certified combination matrices over F_{q^l}.
///
/// For the PCSI-II modes `vectors[k]` is the (M−1)×M matrix applied to
/// message k. For the PCSI-I modes each entry is a K×(K−1) matrix Ψ, one per
/// coefficient vector (see [`VectorBank::psi_slot`]), or a single one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VectorBank {
    pub q: u32,
    pub l: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub mode: BankMode,
    pub vectors: Vec<Matrix>,
    pub attempts: Vec<Attempt>,
}

/// [λ_1 I … λ_M I ; blockdiag(H_{i_1} … H_{i_M})] over the extension field.
pub fn g_matrix_pcsi2(
    ext: &ExtensionCtx,
    h: &[Matrix],
    support: &[usize],
    lambda: &[FieldElem],
) -> Matrix {
    let m = support.len();
    let mut g = Matrix::zeros(m * m, m * m);
    for (b, (&i, &lam)) in support.iter().zip(lambda).enumerate() {
        let lam = ext.embed(lam);
        for r in 0..m {
            g.set(r, b * m + r, lam);
        }
        let hk = &h[i];
        for j in 0..m - 1 {
            for c in 0..m {
                g.set(m + b * (m - 1) + j, b * m + c, hk.get(j, c));
            }
        }
    }
    g
}

/// [u_{Λ,S} ; Ψᵀ] over the extension field.
pub fn g_matrix_pcsi1(
    ext: &ExtensionCtx,
    psi: &Matrix,
    support: &[usize],
    lambda: &[FieldElem],
) -> Matrix {
    let k = psi.rows();
    let mut g = Matrix::zeros(k, k);
    for (&i, &lam) in support.iter().zip(lambda) {
        g.set(0, i, ext.embed(lam));
    }
    for c in 0..psi.cols() {
        for r in 0..k {
            g.set(1 + c, r, psi.get(r, c));
        }
    }
    g
}

fn random_matrix(coins: &mut dyn Coins, big: &FieldCtx, rows: usize, cols: usize) -> Matrix {
    let mut out = Matrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            out.set(r, c, FieldElem(coins.below(big.order())));
        }
    }
    out
}

impl VectorBank {
    pub fn extension(&self, base: &std::sync::Arc<FieldCtx>) -> Result<ExtensionCtx, SearchError> {
        if base.order() != self.q {
            return Err(SearchError::Shape(format!(
                "bank built over q={}, field has q={}",
                self.q,
                base.order()
            )));
        }
        Ok(ExtensionCtx::new(base.clone(), self.l)?)
    }

    fn slot_lambdas(&self) -> Vec<Vec<Vec<FieldElem>>> {
        slot_lambdas(self.mode, self.q, self.m)
    }

    /// Index into `vectors` of the Ψ serving coefficient vector `lambda`.
    pub fn psi_slot(&self, lambda: &[FieldElem]) -> usize {
        match self.mode {
            BankMode::Pcsi1 => lambda
                .iter()
                .rev()
                .fold(0usize, |acc, c| acc * (self.q as usize - 1) + (c.0 as usize - 1)),
            _ => 0,
        }
    }

    fn check_shape(&self) -> Result<(), SearchError> {
        let (k, m) = (self.k, self.m);
        let ok = if self.mode.pcsi2() {
            self.vectors.len() == k
                && self
                    .vectors
                    .iter()
                    .all(|h| h.rows() == m - 1 && h.cols() == m)
        } else {
            self.vectors.len() == self.slot_lambdas().len()
                && self
                    .vectors
                    .iter()
                    .all(|p| p.rows() == k && p.cols() == k - 1)
        };
        if ok {
            Ok(())
        } else {
            Err(SearchError::Shape(format!(
                "{} matrices do not fit mode {} at K={k}, M={m}",
                self.vectors.len(),
                self.mode
            )))
        }
    }

    /// Recomputes every required determinant; returns how many systems were
    /// checked.
    pub fn verify(&self, base: &std::sync::Arc<FieldCtx>) -> Result<usize, SearchError> {
        self.check_shape()?;
        let ext = self.extension(base)?;
        let mut checked = 0;
        let mut singular = 0;
        for (slot, lambdas) in self.slot_lambdas().iter().enumerate() {
            let (n, bad) = count_singular(&ext, self.mode, &self.vectors, slot, self.k, self.m, lambdas);
            checked += n;
            singular += bad;
        }
        if singular > 0 {
            return Err(SearchError::Uncertified(singular));
        }
        Ok(checked)
    }
}

/// Coefficient vectors grouped by slot.
fn slot_lambdas(mode: BankMode, q: u32, m: usize) -> Vec<Vec<Vec<FieldElem>>> {
    let ones = vec![vec![FieldElem::ONE; m]];
    match mode {
        BankMode::Pcsi2 => vec![ones],
        BankMode::Pcsi2Private | BankMode::Pcsi1Private => vec![lambda_vectors(q, m)],
        BankMode::Pcsi1 => {
            // lambda_vectors is lexicographic with the first entry most
            // significant; slots are indexed little-endian to match psi_slot.
            let mut all = lambda_vectors(q, m);
            all.sort_by_key(|v| v.iter().rev().map(|c| c.0).collect::<Vec<_>>());
            all.into_iter().map(|v| vec![v]).collect()
        }
    }
}

/// (systems checked, systems singular) for one slot.
fn count_singular(
    ext: &ExtensionCtx,
    mode: BankMode,
    vectors: &[Matrix],
    slot: usize,
    k: usize,
    m: usize,
    lambdas: &[Vec<FieldElem>],
) -> (usize, usize) {
    let big = ext.big();
    let mut n = 0;
    let mut bad = 0;
    for support in (0..k).combinations(m) {
        for lam in lambdas {
            let g = if mode.pcsi2() {
                g_matrix_pcsi2(ext, vectors, &support, lam)
            } else {
                g_matrix_pcsi1(ext, &vectors[slot], &support, lam)
            };
            n += 1;
            if g.determinant(big).map_or(true, |d| d.is_zero()) {
                bad += 1;
            }
        }
    }
    (n, bad)
}

/// Draws combination matrices uniformly over F_{q^l} until every required
/// system is invertible, retrying each slot up to `opts.budget` times.
pub fn search_vectors(
    base: &std::sync::Arc<FieldCtx>,
    k: usize,
    m: usize,
    mode: BankMode,
    seed: u64,
    opts: &SearchOptions,
) -> Result<VectorBank, SearchError> {
    let q = base.order();
    if m == 0 || m > k || k < 2 || (mode.pcsi2() && m < 2) || (!mode.pcsi2() && m >= k) {
        return Err(SearchError::Shape(format!("mode {mode} does not apply at K={k}, M={m}")));
    }
    let l = opts.l.unwrap_or_else(|| default_extension_degree(q, k, m, mode));
    let ext = ExtensionCtx::new(base.clone(), l)?;
    let big = ext.big().clone();
    let mut coins = SeededCoins::new(seed);
    let slots = slot_lambdas(mode, q, m);
    let mut vectors = Vec::new();
    let mut attempts = Vec::new();
    for (slot, lambdas) in slots.iter().enumerate() {
        let mut last = 0;
        let mut found = false;
        for draw in 0..opts.budget {
            let cand: Vec<Matrix> = if mode.pcsi2() {
                (0..k).map(|_| random_matrix(&mut coins, &big, m - 1, m)).collect()
            } else {
                vec![random_matrix(&mut coins, &big, k, k - 1)]
            };
            let (_, bad) = count_singular(&ext, mode, &cand, 0, k, m, lambdas);
            attempts.push(Attempt {
                slot,
                draw,
                singular: bad,
                certified: bad == 0,
            });
            last = bad;
            if bad == 0 {
                vectors.extend(cand);
                found = true;
                break;
            }
        }
        if !found {
            return Err(SearchError::SearchFailed {
                mode,
                q,
                k,
                m,
                l,
                slot,
                attempts: opts.budget,
                singular: last,
            });
        }
    }
    Ok(VectorBank {
        q,
        l,
        k,
        m,
        mode,
        vectors,
        attempts,
    })
}
