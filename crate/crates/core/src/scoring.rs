//! Decomposable local scores: BDeu, BIC and AIC.
//!
//! For a child with arity `r`, `q` possible parent configurations, counts
//! `N_jk` and row totals `N_j`:
//!
//! * BDeu: `sum_j [lnG(a/q) - lnG(a/q + N_j) + sum_k (lnG(a/(qr) + N_jk) - lnG(a/(qr)))]`
//! * BIC:  `sum_jk N_jk ln(N_jk / N_j) - (ln N / 2) q (r - 1)`
//! * AIC:  `sum_jk N_jk ln(N_jk / N_j) - q (r - 1)`
//!
//! Only observed parent configurations and nonzero counts contribute. Every
//! route to a score goes through [`Scorer`], which visits rows and counts in
//! the order given, so equal tables in equal order give bit-identical scores.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::dataset::CondFreqTable;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Bde,
    Bic,
    Aic,
}

impl ScoreKind {
    pub fn code(self) -> u8 {
        match self {
            ScoreKind::Bde => 0,
            ScoreKind::Bic => 1,
            ScoreKind::Aic => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ScoreKind::Bde),
            1 => Some(ScoreKind::Bic),
            2 => Some(ScoreKind::Aic),
            _ => None,
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreKind::Bde => "bde",
            ScoreKind::Bic => "bic",
            ScoreKind::Aic => "aic",
        })
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bde" | "bdeu" => Ok(ScoreKind::Bde),
            "bic" => Ok(ScoreKind::Bic),
            "aic" => Ok(ScoreKind::Aic),
            _ => Err(Error::InvalidArgument(format!("unknown score '{s}'"))),
        }
    }
}

/// Score function plus its equivalent sample size (used by BDe only).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreSpec {
    pub kind: ScoreKind,
    pub ess: f64,
}

impl ScoreSpec {
    pub const DEFAULT_ESS: f64 = 1.0;

    pub fn bde(ess: f64) -> Result<Self> {
        ScoreSpec {
            kind: ScoreKind::Bde,
            ess,
        }
        .validated()
    }

    pub fn bic() -> Self {
        ScoreSpec {
            kind: ScoreKind::Bic,
            ess: Self::DEFAULT_ESS,
        }
    }

    pub fn aic() -> Self {
        ScoreSpec {
            kind: ScoreKind::Aic,
            ess: Self::DEFAULT_ESS,
        }
    }

    pub fn new(kind: ScoreKind, ess: f64) -> Result<Self> {
        ScoreSpec { kind, ess }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.kind == ScoreKind::Bde && !(self.ess.is_finite() && self.ess > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "equivalent sample size must be positive and finite, got {}",
                self.ess
            )));
        }
        Ok(self)
    }

    pub(crate) fn scorer<'a, G: LnGammaDiff>(
        &self,
        child_arity: u32,
        parent_configs: f64,
        data_rows: u64,
        lgamma: &'a mut G,
    ) -> Scorer<'a, G> {
        let r = f64::from(child_arity);
        let (row_slot, cell_slot, row_prior, cell_prior) = if self.kind == ScoreKind::Bde {
            let row_prior = self.ess / parent_configs;
            let cell_prior = row_prior / r;
            (
                lgamma.slot(row_prior),
                lgamma.slot(cell_prior),
                row_prior,
                cell_prior,
            )
        } else {
            (Slot::NONE, Slot::NONE, 0.0, 0.0)
        };
        Scorer {
            kind: self.kind,
            lgamma,
            row_slot,
            cell_slot,
            row_prior,
            cell_prior,
            penalty: match self.kind {
                ScoreKind::Bde => 0.0,
                ScoreKind::Bic => (data_rows as f64).ln() / 2.0 * parent_configs * (r - 1.0),
                ScoreKind::Aic => parent_configs * (r - 1.0),
            },
            sum: 0.0,
        }
    }
}

impl Default for ScoreSpec {
    fn default() -> Self {
        ScoreSpec {
            kind: ScoreKind::Bde,
            ess: Self::DEFAULT_ESS,
        }
    }
}

impl fmt::Display for ScoreSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ScoreKind::Bde => write!(f, "bde(ess={})", self.ess),
            kind => write!(f, "{kind}"),
        }
    }
}

/// Local score of a conditional frequency table.
pub fn local_score(cft: &CondFreqTable, spec: &ScoreSpec) -> f64 {
    let mut lgamma = DirectLnGamma;
    let mut scorer = spec.scorer(
        cft.child_arity(),
        cft.parent_configurations(),
        cft.total(),
        &mut lgamma,
    );
    for (_, counts) in cft.rows() {
        let total = counts.iter().sum();
        scorer.add_row(total, counts.iter().copied().filter(|&c| c > 0));
    }
    scorer.finish()
}

/// Handle to a cached `lnG(a + c) - lnG(a)` table for one prior `a`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Slot(usize);

impl Slot {
    const NONE: Slot = Slot(usize::MAX);
}

/// Source of `lnG(a + c) - lnG(a)` values.
pub(crate) trait LnGammaDiff {
    fn slot(&mut self, a: f64) -> Slot;
    fn diff(&mut self, slot: Slot, a: f64, c: u32) -> f64;
}

#[inline]
fn ln_gamma_diff(a: f64, c: u32) -> f64 {
    ln_gamma(a + f64::from(c)) - ln_gamma(a)
}

pub(crate) struct DirectLnGamma;

impl LnGammaDiff for DirectLnGamma {
    fn slot(&mut self, _a: f64) -> Slot {
        Slot::NONE
    }

    fn diff(&mut self, _slot: Slot, a: f64, c: u32) -> f64 {
        ln_gamma_diff(a, c)
    }
}

/// Memoizes `lnG(a + c) - lnG(a)` for `c <= max_count`, per distinct `a`.
///
/// Values are computed by the same expression as [`DirectLnGamma`], so the
/// cache never changes a result. Once `budget` entries are allocated further
/// priors are computed directly.
pub(crate) struct LnGammaCache {
    index: HashMap<u64, usize>,
    tables: Vec<Vec<f64>>,
    max_count: usize,
    budget: usize,
}

impl LnGammaCache {
    pub(crate) fn new(max_count: u64, budget_entries: usize) -> Self {
        LnGammaCache {
            index: HashMap::new(),
            tables: Vec::new(),
            max_count: max_count as usize,
            budget: budget_entries,
        }
    }
}

impl LnGammaDiff for LnGammaCache {
    fn slot(&mut self, a: f64) -> Slot {
        if let Some(&i) = self.index.get(&a.to_bits()) {
            return Slot(i);
        }
        let len = self.max_count + 1;
        if self.budget < len {
            return Slot::NONE;
        }
        self.budget -= len;
        let i = self.tables.len();
        self.tables.push(vec![f64::NAN; len]);
        self.index.insert(a.to_bits(), i);
        Slot(i)
    }

    #[inline]
    fn diff(&mut self, slot: Slot, a: f64, c: u32) -> f64 {
        match self.tables.get_mut(slot.0) {
            Some(table) if (c as usize) < table.len() => {
                let cell = &mut table[c as usize];
                if cell.is_nan() {
                    *cell = ln_gamma_diff(a, c);
                }
                *cell
            }
            _ => ln_gamma_diff(a, c),
        }
    }
}

/// Accumulates one local score row by row.
pub(crate) struct Scorer<'a, G> {
    kind: ScoreKind,
    lgamma: &'a mut G,
    row_slot: Slot,
    cell_slot: Slot,
    row_prior: f64,
    cell_prior: f64,
    penalty: f64,
    sum: f64,
}

impl<G: LnGammaDiff> Scorer<'_, G> {
    /// Adds one parent configuration: its total and its nonzero child counts
    /// in ascending child-value order.
    #[inline]
    pub(crate) fn add_row(&mut self, total: u32, nonzero: impl Iterator<Item = u32>) {
        let mut row = 0.0;
        match self.kind {
            ScoreKind::Bde => {
                row -= self.lgamma.diff(self.row_slot, self.row_prior, total);
                for c in nonzero {
                    row += self.lgamma.diff(self.cell_slot, self.cell_prior, c);
                }
            }
            ScoreKind::Bic | ScoreKind::Aic => {
                let nj = f64::from(total);
                for c in nonzero {
                    let c = f64::from(c);
                    row += c * (c / nj).ln();
                }
            }
        }
        self.sum += row;
    }

    pub(crate) fn finish(self) -> f64 {
        self.sum - self.penalty
    }
}
