use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::planner::{
    find_k_gbas, speedup_rho, LowerBoundRule, RasTarget, SearchOptions, TwoStagePlanner,
    DEFAULT_DIVISOR,
};
use crate::unbiased::ratio_bound;

/// `(p, ε, δ)` rows of the draw-count comparison.
pub const TABLE1_GRID: [(f64, f64, f64); 9] = [
    (0.9, 0.1, 1e-2),
    (0.9, 0.1, 1e-6),
    (0.9, 0.01, 1e-6),
    (0.5, 0.1, 1e-2),
    (0.5, 0.1, 1e-6),
    (0.5, 0.01, 1e-6),
    (0.1, 0.1, 1e-2),
    (0.1, 0.1, 1e-6),
    (0.1, 0.01, 1e-6),
];

/// `(M, n, δ₁)` rows of the ratio-bound table.
pub const TABLE2_GRID: [(u64, usize, f64); 5] = [
    (10_000, 1000, 1e-6),
    (10_000, 10_000, 1e-6),
    (10_000, 1000, 1e-8),
    (10_000, 100, 1e-8),
    (100_000, 1000, 1e-8),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub p: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub k_gbas: u64,
    pub k_stage1: u64,
    pub k_stage2: u64,
    /// `k_gbas / (k_stage1 + k_stage2)`.
    pub speedup: f64,
    pub rho: f64,
    pub inv_one_minus_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub m: u64,
    pub n: usize,
    pub delta1: f64,
    pub x: f64,
}

/// Planned draw counts of the gamma and two-stage schemes over
/// [`TABLE1_GRID`]. Stage two is planned at the lower bound the pilot
/// would report if it hit `p` exactly, `p(1 - √ε)/(1 + √ε)`.
pub fn regenerate_table1() -> Result<Vec<Table1Row>> {
    let mut rows = Vec::with_capacity(TABLE1_GRID.len());
    for &(p, eps, delta) in &TABLE1_GRID {
        let target = RasTarget::new(eps, delta)?;
        let search = SearchOptions::default();
        let k_gbas = find_k_gbas(&target, true, &search)?.k;
        let planner =
            TwoStagePlanner::new(&target, true, DEFAULT_DIVISOR, LowerBoundRule::SqrtEpsilon, search)?;
        let s = eps.sqrt();
        let k_stage2 = planner.stage2_for_lower_bound(p * (1.0 - s) / (1.0 + s))?.k;
        let k_stage1 = planner.stage1().k;
        rows.push(Table1Row {
            p,
            epsilon: eps,
            delta,
            k_gbas,
            k_stage1,
            k_stage2,
            speedup: k_gbas as f64 / (k_stage1 + k_stage2) as f64,
            rho: speedup_rho(p, &target)?,
            inv_one_minus_p: 1.0 / (1.0 - p),
        });
    }
    Ok(rows)
}

/// Ratio bounds over [`TABLE2_GRID`].
pub fn regenerate_table2() -> Result<Vec<Table2Row>> {
    TABLE2_GRID
        .iter()
        .map(|&(m, n, d)| Ok(Table2Row { m, n, delta1: d, x: ratio_bound(m, n, d)?.x }))
        .collect()
}

/// Tab-separated rendering with a header; numbers are printed at fixed
/// precision so the output is byte-stable.
pub fn table1_tsv(rows: &[Table1Row]) -> String {
    let mut out = String::from("p\tepsilon\tdelta\tk_gbas\tk_stage1\tk_stage2\tspeedup\trho\tinv_one_minus_p\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{:e}\t{}\t{}\t{}\t{:.2}\t{:.2}\t{:.2}",
            r.p, r.epsilon, r.delta, r.k_gbas, r.k_stage1, r.k_stage2, r.speedup, r.rho, r.inv_one_minus_p
        );
    }
    out
}

pub fn table2_tsv(rows: &[Table2Row]) -> String {
    let mut out = String::from("m\tn\tdelta1\tx\n");
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{:e}\t{:.8}", r.m, r.n, r.delta1, r.x);
    }
    out
}
