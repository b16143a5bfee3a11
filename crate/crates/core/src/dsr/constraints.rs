use serde::{Deserialize, Serialize};

use super::{DsrError, SlotTracker};
use crate::expr::Operator;
use crate::{Library, Scalar};

/// One masking rule over the next token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Masks tokens whose smallest completion would exceed the bound.
    MaxLength(usize),
    /// Masks terminals that would complete the expression below the bound.
    MinLength(usize),
    /// Masks trigonometric tokens below a trigonometric ancestor.
    NoNestedTrig,
    /// Masks `exp` directly under `log` and `log` directly under `exp`.
    NoInversePairs,
}

impl Rule {
    fn apply(self, lib: &Library, slot: &SlotTracker, allowed: &mut [bool]) {
        let (n, d) = (slot.len(), slot.dangling());
        match self {
            Rule::MaxLength(max) => {
                for (i, ok) in allowed.iter_mut().enumerate() {
                    if n + d + lib.arity(i) > max {
                        *ok = false;
                    }
                }
            }
            Rule::MinLength(min) => {
                if d == 1 && n + 1 < min {
                    for (i, ok) in allowed.iter_mut().enumerate() {
                        if lib.arity(i) == 0 {
                            *ok = false;
                        }
                    }
                }
            }
            Rule::NoNestedTrig => {
                let under_trig = slot.ancestors().any(|a| lib.operator(a).is_some_and(Operator::is_trig));
                if under_trig {
                    for (i, ok) in allowed.iter_mut().enumerate() {
                        if lib.operator(i).is_some_and(Operator::is_trig) {
                            *ok = false;
                        }
                    }
                }
            }
            Rule::NoInversePairs => {
                let banned = match slot.parent().and_then(|p| lib.operator(p)) {
                    Some(Operator::Log) => Operator::Exp,
                    Some(Operator::Exp) => Operator::Log,
                    _ => return,
                };
                for (i, ok) in allowed.iter_mut().enumerate() {
                    if lib.operator(i) == Some(banned) {
                        *ok = false;
                    }
                }
            }
        }
    }
}

/// Rules whose masks are combined by intersection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub rules: Vec<Rule>,
}

impl ConstraintSet {
    /// Length bounds plus the trig and inverse-pair rules.
    pub fn standard(min_length: usize, max_length: usize) -> ConstraintSet {
        ConstraintSet {
            rules: vec![
                Rule::MaxLength(max_length),
                Rule::MinLength(min_length),
                Rule::NoNestedTrig,
                Rule::NoInversePairs,
            ],
        }
    }

    pub fn none() -> ConstraintSet {
        ConstraintSet { rules: Vec::new() }
    }

    /// Allowed-token mask for the next slot of `slot`.
    pub fn allowed(&self, lib: &Library, slot: &SlotTracker) -> Result<Vec<bool>, DsrError> {
        let mut allowed = vec![true; lib.len()];
        for rule in &self.rules {
            rule.apply(lib, slot, &mut allowed);
        }
        if allowed.iter().any(|&a| a) {
            Ok(allowed)
        } else {
            Err(DsrError::Infeasible { length: slot.len() })
        }
    }

    /// Mask logits: `0` for allowed tokens, `-inf` otherwise.
    pub fn logits<T: Scalar>(&self, lib: &Library, slot: &SlotTracker) -> Result<Vec<T>, DsrError> {
        Ok(self
            .allowed(lib, slot)?
            .into_iter()
            .map(|ok| if ok { T::zero() } else { T::neg_infinity() })
            .collect())
    }
}

/// Mask logits for the slot after `partial`.
pub fn constraint_logits<T: Scalar>(
    cs: &ConstraintSet,
    lib: &Library,
    partial: &[usize],
) -> Result<Vec<T>, DsrError> {
    let slot = SlotTracker::from_prefix(lib, partial)?;
    if slot.is_complete() {
        return Err(DsrError::CompleteTraversal);
    }
    cs.logits(lib, &slot)
}
