//! Exact Bayes-optimal acquisition on small discrete problems.
//!
//! Every covariate takes values `0..alphabet[i]` and the joint pmf over
//! `(x, y)` is given as a table. A state is the set of observed covariates
//! with their values; the optimal procedure is found by evaluating states
//! from the full set down to the empty set.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::CostModel;
use crate::error::{Error, Result};
use crate::policy::Decision;
use crate::Label;

/// Upper bound on `2^p · Π alphabet sizes`.
pub const MAX_STATES: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteInstance {
    pub alphabets: Vec<usize>,
    /// `pmf[x_code * 2 + y]`, `x_code` in mixed radix with `x_1` most significant.
    pub pmf: Vec<f64>,
    pub costs: CostModel,
}

impl DiscreteInstance {
    pub fn new(alphabets: Vec<usize>, pmf: Vec<f64>, costs: CostModel) -> Result<Self> {
        if alphabets.is_empty() || alphabets.contains(&0) {
            return Err(Error::InvalidInput("alphabets must be nonempty".into()));
        }
        if costs.p() != alphabets.len() {
            return Err(Error::InvalidInput(format!(
                "{} covariate costs for {} covariates",
                costs.p(),
                alphabets.len()
            )));
        }
        costs.shifted()?;
        let nx = alphabets
            .iter()
            .try_fold(1usize, |acc, &a| acc.checked_mul(a))
            .ok_or(Error::StateSpaceTooLarge(usize::MAX))?;
        let states = (1usize << alphabets.len().min(usize::BITS as usize - 1)).saturating_mul(nx);
        if alphabets.len() >= 31 || states > MAX_STATES {
            return Err(Error::StateSpaceTooLarge(states));
        }
        if pmf.len() != 2 * nx {
            return Err(Error::InvalidInput(format!(
                "pmf has {} entries, expected {}",
                pmf.len(),
                2 * nx
            )));
        }
        if pmf.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidInput("pmf entries must be nonnegative".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("pmf sums to {total}")));
        }
        Ok(Self { alphabets, pmf, costs })
    }

    pub fn p(&self) -> usize {
        self.alphabets.len()
    }

    pub fn num_assignments(&self) -> usize {
        self.pmf.len() / 2
    }

    pub fn num_states(&self) -> usize {
        (1 << self.p()) * self.num_assignments()
    }

    pub fn encode(&self, x: &[usize]) -> usize {
        x.iter().zip(&self.alphabets).fold(0, |acc, (&v, &a)| acc * a + v)
    }

    pub fn decode(&self, mut code: usize) -> Vec<usize> {
        let mut x = vec![0; self.p()];
        for i in (0..self.p()).rev() {
            x[i] = code % self.alphabets[i];
            code /= self.alphabets[i];
        }
        x
    }

    /// State index of observed set `mask` with values `x` (unobserved entries ignored).
    pub fn state(&self, mask: u32, x: &[usize]) -> usize {
        let masked: Vec<usize> = (0..self.p())
            .map(|i| if mask & (1 << i) != 0 { x[i] } else { 0 })
            .collect();
        mask as usize * self.num_assignments() + self.encode(&masked)
    }

    /// `Σ_y P(y) c_{y, label}` for class masses `mass = [P(·, y=0), P(·, y=1)]`.
    fn classify_cost(&self, mass: [f64; 2], label: Label) -> f64 {
        let c = |y: Label| self.costs.misclassification_cost(y, label).expect("costs validated");
        mass[0] * c(0) + mass[1] * c(1)
    }

    fn best_label(&self, mass: [f64; 2]) -> (Label, f64) {
        let one = self.classify_cost(mass, 1);
        let zero = self.classify_cost(mass, 0);
        if one <= zero {
            (1, one)
        } else {
            (0, zero)
        }
    }

    /// `P(x_S, y)` for every state.
    fn marginals(&self) -> Vec<[f64; 2]> {
        let nx = self.num_assignments();
        let mut out = vec![[0.0; 2]; self.num_states()];
        for code in 0..nx {
            let x = self.decode(code);
            for mask in 0..(1u32 << self.p()) {
                let s = self.state(mask, &x);
                out[s][0] += self.pmf[2 * code];
                out[s][1] += self.pmf[2 * code + 1];
            }
        }
        out
    }

    /// Loss of classifying immediately with the best label.
    pub fn classify_now_loss(&self) -> f64 {
        let mass = self.pmf.chunks(2).fold([0.0, 0.0], |m, c| [m[0] + c[0], m[1] + c[1]]);
        self.best_label(mass).1
    }
}

/// A decision procedure on a discrete instance. `x` holds observed values at
/// positions in `mask`; other entries must not be read.
pub trait DiscretePolicy {
    fn decide(&self, mask: u32, x: &[usize]) -> Decision;
}

/// Decisions stored per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablePolicy {
    pub alphabets: Vec<usize>,
    pub decisions: Vec<Decision>,
}

impl TablePolicy {
    fn state(&self, mask: u32, x: &[usize]) -> usize {
        let nx: usize = self.alphabets.iter().product();
        let code = (0..self.alphabets.len()).fold(0, |acc, i| {
            acc * self.alphabets[i] + if mask & (1 << i) != 0 { x[i] } else { 0 }
        });
        mask as usize * nx + code
    }
}

impl DiscretePolicy for TablePolicy {
    fn decide(&self, mask: u32, x: &[usize]) -> Decision {
        self.decisions[self.state(mask, x)].clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OraclePolicy {
    pub table: TablePolicy,
    /// Mass-weighted expected remaining cost `Σ_{x,y consistent} P(x, y) · loss` per state.
    pub values: Vec<f64>,
    pub expected_loss: f64,
}

impl DiscretePolicy for OraclePolicy {
    fn decide(&self, mask: u32, x: &[usize]) -> Decision {
        self.table.decide(mask, x)
    }
}

/// Optimal procedure by backward induction over observed sets: at every state
/// take the cheaper of classifying and acquiring one more covariate.
/// Ties favor classifying, then the lower covariate index.
pub fn solve_exact(inst: &DiscreteInstance) -> OraclePolicy {
    let p = inst.p();
    let nx = inst.num_assignments();
    let marg = inst.marginals();
    let mut values = vec![0.0; inst.num_states()];
    let mut decisions = vec![Decision::Classify(1); inst.num_states()];

    let mut masks: Vec<u32> = (0..(1u32 << p)).collect();
    masks.sort_by_key(|m| core::cmp::Reverse(m.count_ones()));
    for mask in masks {
        for code in 0..nx {
            let x = inst.decode(code);
            if (0..p).any(|i| mask & (1 << i) == 0 && x[i] != 0) {
                continue;
            }
            let s = mask as usize * nx + code;
            let mass = marg[s];
            let (label, mut best) = inst.best_label(mass);
            let mut decision = Decision::Classify(label);
            for i in (0..p).filter(|i| mask & (1 << i) == 0) {
                let next = mask | (1 << i);
                let mut y = x.clone();
                let mut value = inst.costs.covariate_costs[i] * (mass[0] + mass[1]);
                for v in 0..inst.alphabets[i] {
                    y[i] = v;
                    value += values[inst.state(next, &y)];
                }
                if value < best {
                    best = value;
                    decision = Decision::Acquire(vec![i]);
                }
            }
            values[s] = best;
            decisions[s] = decision;
        }
    }
    let expected_loss = values[0];
    OraclePolicy {
        table: TablePolicy {
            alphabets: inst.alphabets.clone(),
            decisions,
        },
        values,
        expected_loss,
    }
}

/// Optimal expected loss by plain recursion without memoization.
pub fn exact_loss_recursive(inst: &DiscreteInstance) -> f64 {
    fn rec(inst: &DiscreteInstance, mask: u32, x: &mut Vec<usize>) -> f64 {
        let mut mass = [0.0; 2];
        for code in 0..inst.num_assignments() {
            let full = inst.decode(code);
            if (0..inst.p()).all(|i| mask & (1 << i) == 0 || full[i] == x[i]) {
                mass[0] += inst.pmf[2 * code];
                mass[1] += inst.pmf[2 * code + 1];
            }
        }
        let mut best = inst.best_label(mass).1;
        for i in (0..inst.p()).filter(|i| mask & (1 << i) == 0) {
            let mut value = inst.costs.covariate_costs[i] * (mass[0] + mass[1]);
            for v in 0..inst.alphabets[i] {
                x[i] = v;
                value += rec(inst, mask | (1 << i), x);
            }
            x[i] = 0;
            best = best.min(value);
        }
        best
    }
    rec(inst, 0, &mut vec![0; inst.p()])
}

/// Exact expected loss of `pol`: every full assignment is run through the
/// procedure and its loss weighted by the pmf.
pub fn policy_expected_loss(inst: &DiscreteInstance, pol: &dyn DiscretePolicy) -> Result<f64> {
    let p = inst.p();
    let mut total = 0.0;
    for code in 0..inst.num_assignments() {
        let mass = [inst.pmf[2 * code], inst.pmf[2 * code + 1]];
        if mass[0] == 0.0 && mass[1] == 0.0 {
            continue;
        }
        let x = inst.decode(code);
        let mut mask = 0u32;
        let mut seen = vec![0; p];
        let mut paid = 0.0;
        loop {
            for i in (0..p).filter(|i| mask & (1 << i) != 0) {
                seen[i] = x[i];
            }
            match pol.decide(mask, &seen) {
                Decision::Classify(label) if label <= 1 => {
                    total += (mass[0] + mass[1]) * paid + inst.classify_cost(mass, label);
                    break;
                }
                Decision::Classify(label) => {
                    return Err(Error::InvalidAction(format!("label {label}")));
                }
                Decision::Acquire(set) => {
                    let &[i] = set.as_slice() else {
                        return Err(Error::InvalidAction(format!("acquire {set:?}: one covariate at a time")));
                    };
                    if i >= p || mask & (1 << i) != 0 {
                        return Err(Error::InvalidAction(format!("acquire covariate {i}")));
                    }
                    mask |= 1 << i;
                    paid += inst.costs.covariate_costs[i];
                }
            }
        }
    }
    Ok(total)
}

/// Acquires the covariates in `mask` (in index order), then classifies with
/// the Bayes label for the observed values.
pub fn fixed_subset_policy(inst: &DiscreteInstance, subset: u32) -> TablePolicy {
    let nx = inst.num_assignments();
    let marg = inst.marginals();
    let mut decisions = vec![Decision::Classify(1); inst.num_states()];
    for mask in 0..(1u32 << inst.p()) {
        for code in 0..nx {
            let s = mask as usize * nx + code;
            let missing = subset & !mask;
            decisions[s] = if missing != 0 {
                Decision::Acquire(vec![missing.trailing_zeros() as usize])
            } else {
                Decision::Classify(inst.best_label(marg[s]).0)
            };
        }
    }
    TablePolicy {
        alphabets: inst.alphabets.clone(),
        decisions,
    }
}

/// Uniformly random valid decision in every state.
pub fn random_policy<R: Rng + ?Sized>(inst: &DiscreteInstance, rng: &mut R) -> TablePolicy {
    let nx = inst.num_assignments();
    let p = inst.p();
    let mut decisions = Vec::with_capacity(inst.num_states());
    for mask in 0..(1u32 << p) {
        let open: Vec<usize> = (0..p).filter(|i| mask & (1 << i) == 0).collect();
        for _ in 0..nx {
            let pick = rng.gen_range(0..open.len() + 2);
            decisions.push(if pick < 2 {
                Decision::Classify(pick as Label)
            } else {
                Decision::Acquire(vec![open[pick - 2]])
            });
        }
    }
    TablePolicy {
        alphabets: inst.alphabets.clone(),
        decisions,
    }
}
