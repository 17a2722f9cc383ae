use serde::{Deserialize, Serialize};

use super::{find_k_dklr, find_k_gbas, Plan, RasTarget, SearchOptions};
use crate::error::{domain, Result};

/// How the stage-two lower bound `a` is derived from the first-stage
/// estimate `p̂₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundRule {
    /// `a = p̂₁ / (1 + √ε)`, matching the first-stage accuracy.
    #[default]
    SqrtEpsilon,
    /// `a = p̂₁ / (1 + ε)`.
    Epsilon,
}

/// Plans for the two-stage scheme: a gamma-scheme pilot at `(√ε, δ/2)`,
/// then a negative binomial run at `(ε, δ/2)` certified on `[a, 1]`.
///
/// The pilot plan does not depend on data and is computed once; stage-two
/// plans are computed per pilot estimate.
#[derive(Debug, Clone)]
pub struct TwoStagePlanner {
    target: RasTarget,
    tilt: bool,
    divisor: u32,
    rule: LowerBoundRule,
    stage1: Plan,
    search: SearchOptions,
}

impl TwoStagePlanner {
    pub fn new(
        target: &RasTarget,
        tilt: bool,
        divisor: u32,
        rule: LowerBoundRule,
        search: SearchOptions,
    ) -> Result<Self> {
        let pilot = RasTarget::new(target.epsilon().sqrt(), target.delta() / 2.0)?;
        let stage1 = find_k_gbas(&pilot, tilt, &search)?;
        Ok(TwoStagePlanner { target: *target, tilt, divisor, rule, stage1, search })
    }

    pub fn target(&self) -> &RasTarget {
        &self.target
    }

    pub fn tilt(&self) -> bool {
        self.tilt
    }

    pub fn divisor(&self) -> u32 {
        self.divisor
    }

    pub fn rule(&self) -> LowerBoundRule {
        self.rule
    }

    pub fn stage1(&self) -> &Plan {
        &self.stage1
    }

    /// Target of stage two: `(ε, δ/2)`.
    pub fn stage2_target(&self) -> RasTarget {
        RasTarget::new(self.target.epsilon(), self.target.delta() / 2.0)
            .expect("halving a valid delta stays valid")
    }

    /// The lower end `a` implied by a pilot estimate.
    pub fn lower_bound(&self, p_hat1: f64) -> f64 {
        let e = self.target.epsilon();
        match self.rule {
            LowerBoundRule::SqrtEpsilon => p_hat1 / (1.0 + e.sqrt()),
            LowerBoundRule::Epsilon => p_hat1 / (1.0 + e),
        }
    }

    /// Stage-two plan certified on `[a, 1]` for an explicit `a`.
    pub fn stage2_for_lower_bound(&self, a: f64) -> Result<Plan> {
        if !(a > 0.0 && a < 1.0) {
            return Err(domain(format!("stage-two lower bound must lie in (0, 1), got {a}")));
        }
        find_k_dklr(a, &self.stage2_target(), self.tilt, self.divisor, &self.search)
    }

    /// Stage-two plan for a pilot estimate.
    pub fn stage2(&self, p_hat1: f64) -> Result<Plan> {
        if !(p_hat1 > 0.0 && p_hat1.is_finite()) {
            return Err(domain(format!("pilot estimate must be positive, got {p_hat1}")));
        }
        self.stage2_for_lower_bound(self.lower_bound(p_hat1))
    }
}

/// [`TwoStagePlanner`] with the default lower-bound rule and search options.
pub fn plan_two_stage(target: &RasTarget, tilt: bool, divisor: u32) -> Result<TwoStagePlanner> {
    TwoStagePlanner::new(target, tilt, divisor, LowerBoundRule::default(), SearchOptions::default())
}
