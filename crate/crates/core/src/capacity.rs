//! Closed-form capacity and redundancy values as exact rationals.
//!
//! Only cells with a closed form are answered; anything else is
//! [`CapacityError::Unknown`].

use crate::gf::prime_power;
use crate::model::{ModelError, Variant};
use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Supremum over fields.
    Sup,
    /// Infimum over fields.
    Inf,
    /// A specific field order.
    AtQ(u32),
    /// Private coefficients, supremum over fields.
    PriSup,
    /// Private coefficients, infimum over fields.
    PriInf,
    /// Private coefficients, specific field order.
    PriAtQ(u32),
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Sup => f.write_str("sup"),
            Mode::Inf => f.write_str("inf"),
            Mode::AtQ(q) => write!(f, "at_q({q})"),
            Mode::PriSup => f.write_str("pri_sup"),
            Mode::PriInf => f.write_str("pri_inf"),
            Mode::PriAtQ(q) => write!(f, "pri_at_q({q})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityQuery {
    pub variant: Variant,
    pub mode: Mode,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CapacityValue {
    Exact { value: Rational },
    Interval { lo: Rational, hi: Rational },
}

impl CapacityValue {
    fn exact(value: Rational) -> Self {
        CapacityValue::Exact { value }
    }

    pub fn lower(&self) -> Rational {
        match *self {
            CapacityValue::Exact { value } => value,
            CapacityValue::Interval { lo, .. } => lo,
        }
    }

    pub fn upper(&self) -> Rational {
        match *self {
            CapacityValue::Exact { value } => value,
            CapacityValue::Interval { hi, .. } => hi,
        }
    }

    pub fn value(&self) -> Option<Rational> {
        match *self {
            CapacityValue::Exact { value } => Some(value),
            CapacityValue::Interval { .. } => None,
        }
    }
}

impl fmt::Display for CapacityValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapacityValue::Exact { value } => write!(f, "{value}"),
            CapacityValue::Interval { lo, hi } => write!(f, "[{lo};{hi}]"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CapacityError {
    #[error(transparent)]
    Infeasible(#[from] ModelError),
    #[error("{0} is not a prime power")]
    BadField(u32),
    #[error("no closed form for {variant} {mode} at K={k}, M={m}")]
    Unknown {
        variant: Variant,
        mode: Mode,
        k: usize,
        m: usize,
    },
}

/// A capacity together with the result it comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sourced {
    pub value: CapacityValue,
    pub source: &'static str,
}

fn r(n: usize, d: usize) -> Rational {
    Rational::new(n as i128, d as i128)
}

fn sup(v: Variant, k: usize, m: usize) -> Sourced {
    let (value, source) = match v {
        Variant::PcsiI => (r(1, k - m), "pcsi1_sup_prior"),
        Variant::PcsiII if 2 * m <= k + 1 => (r(2, k), "pcsi2_sup"),
        Variant::PcsiII => (r(1, k - m + 1), "pcsi2_sup"),
        Variant::Pcsi if m == 1 => (r(1, k - 1), "pcsi_sup"),
        Variant::Pcsi => (r(1, k - m + 1), "pcsi_sup"),
    };
    Sourced {
        value: CapacityValue::exact(value),
        source,
    }
}

fn inf(v: Variant, k: usize, m: usize) -> Sourced {
    let (value, source) = match v {
        Variant::PcsiI if 2 * m <= k => (r(1, k - 1), "pcsi1_inf"),
        // (K − M/(K−M))⁻¹ = (K−M) / (K(K−M) − M)
        Variant::PcsiI => (r(k - m, k * (k - m) - m), "pcsi1_inf"),
        Variant::PcsiII => (r(m, (m - 1) * k), "pcsi2_inf"),
        Variant::Pcsi => (r(1, k - 1), "pcsi_inf"),
    };
    Sourced {
        value: CapacityValue::exact(value),
        source,
    }
}

fn at_q(v: Variant, q: u32, k: usize, m: usize) -> Option<Sourced> {
    let pick = |s: Sourced, source| Sourced { source, ..s };
    match v {
        Variant::PcsiII if m == k => Some(if q == 2 {
            pick(inf(v, k, m), "pcsi2_full_support")
        } else {
            pick(sup(v, k, m), "pcsi2_full_support")
        }),
        Variant::PcsiII if (m, k) == (3, 4) => Some(if q == 2 {
            pick(inf(v, k, m), "pcsi2_ternary_m3k4")
        } else {
            pick(sup(v, k, m), "pcsi2_ternary_m3k4")
        }),
        Variant::PcsiII if q == 2 || m == 2 => Some(inf(v, k, m)),
        Variant::PcsiI if q == 2 || m + 1 == k => Some(inf(v, k, m)),
        Variant::Pcsi if q == 2 || m == 1 => Some(inf(v, k, m)),
        _ => None,
    }
}

fn private(v: Variant, mode: Mode, k: usize, m: usize) -> Option<Sourced> {
    match (v, mode) {
        (Variant::PcsiII, _) => Some(Sourced {
            source: "pcsi2_private",
            ..inf(v, k, m)
        }),
        (Variant::Pcsi, _) => Some(Sourced {
            source: "pcsi_private",
            ..inf(v, k, m)
        }),
        (Variant::PcsiI, Mode::PriSup) => Some(Sourced {
            source: "pcsi1_private",
            ..inf(v, k, m)
        }),
        (Variant::PcsiI, Mode::PriInf) => {
            let c_inf = inf(v, k, m).value.upper();
            let lo = r(1, k - 1);
            let hi = if k > 2 { c_inf.min(r(1, k - 2)) } else { c_inf };
            let value = if lo == hi {
                CapacityValue::exact(lo)
            } else {
                CapacityValue::Interval { lo, hi }
            };
            Some(Sourced {
                value,
                source: "pcsi1_private",
            })
        }
        (Variant::PcsiI, Mode::PriAtQ(2)) => Some(Sourced {
            source: "pcsi1_private",
            ..inf(v, k, m)
        }),
        _ => None,
    }
}

/// Capacity value with the result that pins it.
pub fn capacity_sourced(cq: &CapacityQuery) -> Result<Sourced, CapacityError> {
    let CapacityQuery { variant, mode, k, m } = *cq;
    variant.check(k, m)?;
    if let Mode::AtQ(q) | Mode::PriAtQ(q) = mode {
        prime_power(q).map_err(|_| CapacityError::BadField(q))?;
    }
    let found = match mode {
        Mode::Sup => Some(sup(variant, k, m)),
        Mode::Inf => Some(inf(variant, k, m)),
        Mode::AtQ(q) => at_q(variant, q, k, m),
        Mode::PriSup | Mode::PriInf | Mode::PriAtQ(_) => private(variant, mode, k, m),
    };
    found.ok_or(CapacityError::Unknown {
        variant,
        mode,
        k,
        m,
    })
}

pub fn capacity_value(cq: &CapacityQuery) -> Result<CapacityValue, CapacityError> {
    capacity_sourced(cq).map(|s| s.value)
}

/// Fraction of the side information that can be discarded at the supremum
/// capacity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Redundancy {
    Exact { value: Rational },
    AtMost { bound: Rational },
}

pub fn redundancy_value(v: Variant, k: usize, m: usize) -> Result<Redundancy, CapacityError> {
    v.check(k, m)?;
    let exact = |value| Redundancy::Exact { value };
    Ok(match v {
        Variant::PcsiII if m > 1 && 2 * m <= k + 2 => exact(r(1, 2)),
        Variant::PcsiII | Variant::PcsiI => exact(Rational::zero()),
        Variant::Pcsi if m == 2 => exact(r(1, 2)),
        Variant::Pcsi if m >= 3 && 2 * m <= k + 2 => Redundancy::AtMost { bound: r(1, m) },
        Variant::Pcsi => exact(Rational::zero()),
    })
}

/// Minimum retained fraction of side information, `1 − ρ` (a lower bound
/// when ρ is only bounded).
pub fn min_csi_fraction(v: Variant, k: usize, m: usize) -> Result<Rational, CapacityError> {
    Ok(match redundancy_value(v, k, m)? {
        Redundancy::Exact { value } => Rational::one() - value,
        Redundancy::AtMost { bound } => Rational::one() - bound,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapEntry {
    pub mode: String,
    pub capacity: Option<CapacityValue>,
    pub source: Option<String>,
    /// Upper end of the capacity minus the measured rate.
    pub gap: Option<Rational>,
    pub achieving: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapReport {
    pub variant: Variant,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub q: u32,
    pub measured: Rational,
    pub entries: Vec<GapEntry>,
    /// True when no mode has a closed form here.
    pub unknown: bool,
}

/// Compares a measured rate against every capacity notion that applies.
pub fn gap_report(
    variant: Variant,
    q: u32,
    k: usize,
    m: usize,
    measured: Rational,
) -> Result<GapReport, CapacityError> {
    variant.check(k, m)?;
    let mut modes = vec![Mode::Sup, Mode::Inf, Mode::AtQ(q)];
    modes.extend(match variant {
        Variant::PcsiI => vec![Mode::PriSup, Mode::PriInf, Mode::PriAtQ(q)],
        _ => vec![Mode::PriAtQ(q)],
    });
    let mut entries = Vec::new();
    for mode in modes {
        let cq = CapacityQuery { variant, mode, k, m };
        let entry = match capacity_sourced(&cq) {
            Ok(s) => {
                let gap = s.value.upper() - measured;
                GapEntry {
                    mode: mode.to_string(),
                    capacity: Some(s.value),
                    source: Some(s.source.to_string()),
                    gap: Some(gap),
                    achieving: gap.is_zero(),
                }
            }
            Err(CapacityError::Unknown { .. }) => GapEntry {
                mode: mode.to_string(),
                capacity: None,
                source: None,
                gap: None,
                achieving: false,
            },
            Err(e) => return Err(e),
        };
        entries.push(entry);
    }
    let unknown = entries.iter().all(|e| e.capacity.is_none());
    Ok(GapReport {
        variant,
        k,
        m,
        q,
        measured,
        entries,
        unknown,
    })
}

impl GapReport {
    pub fn entry(&self, mode: &str) -> Option<&GapEntry> {
        self.entries.iter().find(|e| e.mode == mode)
    }
}

/// CSV rendering of the field-independent table cells over the given ranges.
/// Infeasible (variant, K, M) combinations are skipped.
pub fn capacity_table_csv(
    k_range: std::ops::RangeInclusive<usize>,
    m_range: std::ops::RangeInclusive<usize>,
) -> String {
    let mut out = String::from("variant,mode,K,M,value,source\n");
    for k in k_range {
        for m in m_range.clone() {
            for v in Variant::ALL {
                if v.check(k, m).is_err() {
                    continue;
                }
                let modes: &[Mode] = match v {
                    Variant::PcsiI => &[Mode::Sup, Mode::Inf, Mode::PriSup, Mode::PriInf],
                    _ => &[Mode::Sup, Mode::Inf, Mode::PriSup],
                };
                for &mode in modes {
                    let cq = CapacityQuery { variant: v, mode, k, m };
                    if let Ok(s) = capacity_sourced(&cq) {
                        let mode = match (v, mode) {
                            (Variant::PcsiI, _) => mode.to_string(),
                            (_, Mode::PriSup) => "pri".to_string(),
                            _ => mode.to_string(),
                        };
                        out.push_str(&format!(
                            "{},{},{},{},{},{}\n",
                            v, mode, k, m, s.value, s.source
                        ));
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cap(v: Variant, mode: Mode, k: usize, m: usize) -> Result<CapacityValue, CapacityError> {
        capacity_value(&CapacityQuery { variant: v, mode, k, m })
    }

    #[test]
    fn interval_collapses_when_bounds_meet() {
        let c = cap(Variant::PcsiI, Mode::PriInf, 3, 1).unwrap();
        assert_eq!(c, CapacityValue::exact(r(1, 2)));
        let c = cap(Variant::PcsiI, Mode::PriInf, 6, 5).unwrap();
        assert_eq!(
            c,
            CapacityValue::Interval {
                lo: r(1, 5),
                hi: r(1, 4)
            }
        );
    }

    #[test]
    fn open_cells_are_unknown() {
        assert!(matches!(
            cap(Variant::PcsiII, Mode::AtQ(3), 6, 3),
            Err(CapacityError::Unknown { .. })
        ));
        assert!(matches!(
            cap(Variant::PcsiI, Mode::PriAtQ(3), 6, 3),
            Err(CapacityError::Unknown { .. })
        ));
        assert_eq!(
            cap(Variant::PcsiII, Mode::AtQ(6), 6, 3),
            Err(CapacityError::BadField(6))
        );
    }

    #[test]
    fn csv_has_header_and_no_floats() {
        let csv = capacity_table_csv(4..=4, 3..=3);
        assert!(csv.starts_with("variant,mode,K,M,value,source\n"));
        assert!(csv.contains("PCSI-II,sup,4,3,1/2,pcsi2_sup"));
        assert!(csv.contains("PCSI-II,inf,4,3,3/8,pcsi2_inf"));
        assert!(!csv.contains('.'));
    }
}
