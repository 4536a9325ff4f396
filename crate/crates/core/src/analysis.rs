//! Proof-size analytics: `sigma(k, n)` for the `k`-th newest item, exact
//! averages over windows where the size is periodic in `n`, and the closed
//! forms they are compared against.

use std::fmt;
use std::io::Write;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::bagging::{BaggedState, StructureKind};
use crate::error::{Error, Result};
use crate::node_math::{ceil_log2, floor_log2};
use crate::proofs::{self, Decomposition, Layout};

pub type Rational = Ratio<i128>;

fn q(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

fn int(n: i128) -> Rational {
    Rational::from_integer(n)
}

fn pow2(e: u32) -> i128 {
    1i128 << e
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SigmaSample {
    pub kind: StructureKind,
    pub k: u64,
    pub n: u64,
    pub sigma: u64,
    pub decomposition: Decomposition,
}

/// Size of the proof of the `k`-th newest item when the list has `n` items.
pub fn sigma(kind: StructureKind, k: u64, n: u64) -> Result<SigmaSample> {
    sigma_in(&Layout::new(kind, n), k)
}

pub fn sigma_in(layout: &Layout, k: u64) -> Result<SigmaSample> {
    let n = layout.n;
    if k == 0 || k > n {
        return Err(Error::ItemOutOfRange { index: k, n });
    }
    let decomposition = layout.decompose(n - k + 1).expect("item in range");
    Ok(SigmaSample {
        kind: layout.kind,
        k,
        n,
        sigma: decomposition.sigma(),
        decomposition,
    })
}

/// Transmitted size of an actual generated proof, for spot checks.
pub fn sigma_from_state(state: &BaggedState, k: u64) -> Result<u64> {
    let n = state.n();
    if k == 0 || k > n {
        return Err(Error::ItemOutOfRange { index: k, n });
    }
    Ok(proofs::gen_membership(state, n - k + 1)?.size() as u64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    EmpiricalOverPeriod,
    ClosedForm,
    UpperBound,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::EmpiricalOverPeriod => "empirical",
            Source::ClosedForm => "exact",
            Source::UpperBound => "bound",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AmortizedValue {
    pub kind: StructureKind,
    pub k: u64,
    pub value: Rational,
    pub source: Source,
}

/// `d = floor(log2(k + 1))`.
pub fn d_of(k: u64) -> u32 {
    floor_log2(k + 1)
}

/// `d' = ceil(log2 k)`.
pub fn d_prime_of(k: u64) -> u32 {
    ceil_log2(k)
}

/// Window `[start, start + len)` of sizes over which the average of
/// `sigma(kind, k, .)` equals its long-run mean.
///
/// The lazy-forest kinds are periodic in `n` with period dividing
/// `2^(d+3)`; F-MMB additionally starts past the sizes where the item can
/// still sit in the leftmost mountain. The eager forests are not periodic
/// (the height of the mountain above the low bits of `n` is `nu2` of the
/// high part), so their window fixes the high part of `n` to 6, whose
/// valuation is exactly the long-run mean 1, and sweeps the low `d'` bits.
/// The chain does not depend on `n`.
pub fn window(kind: StructureKind, k: u64) -> Option<(u64, u64)> {
    let d = d_of(k);
    match kind {
        StructureKind::Ummb | StructureKind::Mmb => Some((k, 1 << (d + 3))),
        StructureKind::Fmmb => Some((k + (1 << (d + 3)), 1 << (d + 3))),
        StructureKind::Ummr | StructureKind::Fmmr => {
            let dp = d_prime_of(k);
            Some((6 << dp, 1 << dp))
        }
        StructureKind::Chain => Some((k, 1)),
        StructureKind::Mmr => None,
    }
}

/// Exact average of `f(layout, k)` over the kind's window.
fn window_average(kind: StructureKind, k: u64, f: impl Fn(&Layout) -> u64 + Sync) -> Option<Rational> {
    let (start, len) = window(kind, k)?;
    let total: u64 = (start..start + len)
        .into_par_iter()
        .map(|n| f(&Layout::new(kind, n)))
        .sum();
    Some(q(total as i128, len as i128))
}

pub fn amortized_empirical(kind: StructureKind, k: u64) -> Result<AmortizedValue> {
    if k == 0 {
        return Err(Error::ItemOutOfRange { index: 0, n: 0 });
    }
    let value = window_average(kind, k, |lay| sigma_in(lay, k).expect("k <= n").sigma)
        .ok_or(Error::UnsupportedKind(kind))?;
    Ok(AmortizedValue {
        kind,
        k,
        value,
        source: Source::EmpiricalOverPeriod,
    })
}

fn component_average(k: u64, pick: impl Fn(&Decomposition) -> u64 + Sync) -> Rational {
    window_average(StructureKind::Mmb, k, |lay| {
        pick(&sigma_in(lay, k).expect("k <= n").decomposition)
    })
    .expect("MMB has a window")
}

/// Mean number of belt-node ancestors, measured.
pub fn b_bar_empirical(k: u64) -> Rational {
    component_average(k, |d| d.b)
}

/// Mean number of range-node ancestors, measured.
pub fn r_bar_empirical(k: u64) -> Rational {
    component_average(k, |d| d.r)
}

/// Fraction of sizes where the item sits in the leftmost mountain of its range.
pub fn r_prime_bar_empirical(k: u64) -> Rational {
    component_average(k, |d| d.r_prime)
}

/// Whether `k + 1` lies in the lower part `[2^d, 1.5 * 2^d)` of its octave.
fn lower_half(k: u64) -> bool {
    let d = d_of(k);
    2 * (k as i128 + 1) < 3 * pow2(d)
}

/// Closed form for the mean number of belt-node ancestors.
pub fn b_bar_formula(k: u64) -> Rational {
    let d = d_of(k);
    let k1 = k as i128 + 1;
    let dd = int(d as i128);
    // The lower branch includes its upper end point.
    if 2 * k1 <= 3 * pow2(d) {
        q(3, 8) * dd + q(k1, pow2(d + 1)) + q(1, 8)
    } else {
        q(3, 8) * dd + q(k1, pow2(d + 2)) + q(1, 2)
    }
}

pub fn ummr_formula(k: u64) -> Rational {
    let dp = d_prime_of(k);
    int(dp as i128) + q(2 * k as i128, pow2(dp)) - int(1)
}

pub fn fmmr_formula(k: u64) -> Rational {
    let dp = d_prime_of(k);
    q(3 * dp as i128, 2) + q(3 * k as i128, pow2(dp)) - int(1)
}

pub fn ummb_formula(k: u64) -> Rational {
    let d = d_of(k);
    let k1 = k as i128 + 1;
    let dd = int(d as i128);
    if lower_half(k) {
        dd + q(3 * k1, pow2(d + 1)) - int(2)
    } else {
        dd + q(k1, pow2(d + 1)) - q(1, 2)
    }
}

pub fn fmmb_formula(k: u64) -> Rational {
    let d = d_of(k);
    let k1 = k as i128 + 1;
    let dd = int(2 * d as i128);
    if lower_half(k) {
        dd + q(5 * k1, pow2(d + 1)) - int(3)
    } else {
        dd + q(3 * k1, pow2(d + 1)) - q(3, 2)
    }
}

/// Piecewise upper bound on the MMB mean.
pub fn mmb_piecewise_bound(k: u64) -> Rational {
    let d = d_of(k);
    let k1 = k as i128 + 1;
    let base = q(11 * d as i128, 8);
    if lower_half(k) {
        base + q(4 * k1 - 5, pow2(d + 1)) + q(1, 16)
    } else {
        base + q(3 * k1 - 6, pow2(d + 2)) + int(2)
    }
}

/// Smooth upper bound `11/8 log2((k+1)/3) + 9/2 - 9/(4(k+1))`.
pub fn mmb_smooth_bound(k: f64) -> f64 {
    11.0 / 8.0 * ((k + 1.0) / 3.0).log2() + 4.5 - 9.0 / (4.0 * (k + 1.0))
}

/// Lower bound on the gap between the eager and lazy unbagged means.
pub fn ummr_ummb_gap_bound(k: u64) -> Rational {
    q(5, 4) - q(3, 2 * (k as i128 + 1))
}

pub fn amortized_formula(kind: StructureKind, k: u64) -> Result<AmortizedValue> {
    if k == 0 {
        return Err(Error::ItemOutOfRange { index: 0, n: 0 });
    }
    let (value, source) = match kind {
        StructureKind::Ummr => (ummr_formula(k), Source::ClosedForm),
        StructureKind::Fmmr => (fmmr_formula(k), Source::ClosedForm),
        StructureKind::Ummb => (ummb_formula(k), Source::ClosedForm),
        StructureKind::Fmmb => (fmmb_formula(k), Source::ClosedForm),
        StructureKind::Mmb => (mmb_piecewise_bound(k), Source::UpperBound),
        StructureKind::Chain | StructureKind::Mmr => return Err(Error::UnsupportedKind(kind)),
    };
    Ok(AmortizedValue {
        kind,
        k,
        value,
        source,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurveyRow {
    pub kind: StructureKind,
    pub k: u64,
    pub empirical: Option<Rational>,
    pub reference: Option<Rational>,
    /// `exact`, `bound`, or `diverges`.
    pub reference_type: &'static str,
    pub delta: Option<Rational>,
    /// Smooth bound check, MMB rows only.
    pub smooth_ok: bool,
}

impl SurveyRow {
    /// Exact kinds need a zero delta; bounds need a non-negative one.
    pub fn ok(&self) -> bool {
        match (self.reference_type, self.delta) {
            ("exact", Some(d)) => d.is_zero(),
            ("bound", Some(d)) => d >= Rational::zero() && self.smooth_ok,
            ("diverges", _) => true,
            _ => false,
        }
    }
}

fn survey_row(kind: StructureKind, k: u64) -> Result<SurveyRow> {
    if kind == StructureKind::Mmr {
        return Ok(SurveyRow {
            kind,
            k,
            empirical: None,
            reference: None,
            reference_type: "diverges",
            delta: None,
            smooth_ok: true,
        });
    }
    let emp = amortized_empirical(kind, k)?.value;
    let (reference, reference_type) = match kind {
        StructureKind::Chain => (int(k as i128), "exact"),
        _ => {
            let f = amortized_formula(kind, k)?;
            let t = if f.source == Source::UpperBound { "bound" } else { "exact" };
            (f.value, t)
        }
    };
    let delta = if reference_type == "bound" {
        reference - emp
    } else {
        emp - reference
    };
    let smooth_ok = kind != StructureKind::Mmb
        || emp.to_f64().expect("finite") <= mmb_smooth_bound(k as f64);
    Ok(SurveyRow {
        kind,
        k,
        empirical: Some(emp),
        reference: Some(reference),
        reference_type,
        delta: Some(delta),
        smooth_ok,
    })
}

/// One row per `(kind, k)`, ordered by the input kind order then `k`.
pub fn survey(kinds: &[StructureKind], k_max: u64) -> Result<Vec<SurveyRow>> {
    if k_max == 0 {
        return Err(Error::Malformed("k_max must be at least 1".into()));
    }
    let jobs: Vec<(StructureKind, u64)> = kinds
        .iter()
        .flat_map(|&kind| (1..=k_max).map(move |k| (kind, k)))
        .collect();
    jobs.into_par_iter().map(|(kind, k)| survey_row(kind, k)).collect()
}

pub const CSV_HEADER: &str = "kind,k,empirical_num,empirical_den,reference_num,reference_den,reference_type,delta";

fn frac(r: &Option<Rational>) -> (String, String) {
    match r {
        Some(r) => (r.numer().to_string(), r.denom().to_string()),
        None => (String::new(), String::new()),
    }
}

pub fn write_csv<W: Write>(rows: &[SurveyRow], w: &mut W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        let (en, ed) = frac(&r.empirical);
        let (rn, rd) = frac(&r.reference);
        let delta = r.delta.map(|d| d.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{en},{ed},{rn},{rd},{},{delta}", r.kind, r.k, r.reference_type)?;
    }
    Ok(())
}
