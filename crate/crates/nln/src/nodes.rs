//! Differentiable AND/OR concept nodes under product fuzzy logic.
//!
//! An AND node with signed weights `A` in [-1,1] and bias `a` in [0,1] computes
//!
//! ```text
//! a * prod_j (1 - pos(A_j) * (1 - c_j)) * (1 - neg(A_j) * c_j)
//! ```
//!
//! and an OR node with weights `O` and bias `o` computes
//!
//! ```text
//! 1 - (1 - o) * prod_j (1 - pos(O_j) * c_j) * (1 - neg(O_j) * (1 - c_j))
//! ```
//!
//! where `pos(w) = max(0, w)` and `neg(w) = max(0, -w)`. A positive weight uses
//! the input concept directly, a negative weight uses its contrary, and the
//! bias carries the probability mass of unobserved concepts. With integer
//! weights, full biases (a = 1, o = 0) and binary inputs, both formulas collapse
//! exactly to classical conjunction and disjunction over the selected literals.

use crate::error::{NlnError, Result};
use serde::{Deserialize, Serialize};

/// Width of the clamp applied to forward results, only to absorb rounding.
const CLAMP_EPS: f64 = 1e-12;

/// A probability in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitInterval(f64);

impl UnitInterval {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(NlnError::Domain(format!("{value} is not in [0, 1]")))
        }
    }

    /// Clamps into [0, 1]; panics in debug builds if the excursion exceeds the
    /// rounding watermark, so logic errors are not silently masked.
    pub fn clamped(value: f64) -> Self {
        debug_assert!(
            value > -CLAMP_EPS && value < 1.0 + CLAMP_EPS,
            "value {value} outside [0,1] by more than rounding"
        );
        Self(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A signed weight in [-1, 1]. The positive and negative parts are derived on
/// the fly; a single parameter learns both the concept and its contrary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignedUnit(f64);

impl SignedUnit {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (-1.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(NlnError::Domain(format!("{value} is not in [-1, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn pospart(self) -> f64 {
        self.0.max(0.0)
    }

    pub fn negpart(self) -> f64 {
        (-self.0).max(0.0)
    }
}

#[inline]
fn pospart(w: f64) -> f64 {
    w.max(0.0)
}

#[inline]
fn negpart(w: f64) -> f64 {
    (-w).max(0.0)
}

/// Gradients of a node's output with respect to its parameters and inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGradients {
    pub d_weights: Vec<f64>,
    pub d_bias: f64,
    pub d_inputs: Vec<f64>,
}

/// AND concept node: all concepts selected by nonzero weights are necessary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AndNode {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// OR concept node: any concept selected by a nonzero weight is sufficient.
/// With `allow_negation` false the weights are restricted to [0, 1] (output
/// layers and categorical equivalency classes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrNode {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub allow_negation: bool,
}

impl AndNode {
    pub fn new(weights: Vec<SignedUnit>, bias: UnitInterval) -> Self {
        Self {
            weights: weights.into_iter().map(SignedUnit::value).collect(),
            bias: bias.value(),
        }
    }

    pub fn from_raw(weights: Vec<f64>, bias: f64) -> Result<Self> {
        for &w in &weights {
            SignedUnit::new(w)?;
        }
        UnitInterval::new(bias)?;
        Ok(Self { weights, bias })
    }

    pub fn fan_in(&self) -> usize {
        self.weights.len()
    }

    pub fn forward(&self, inputs: &[f64]) -> Result<UnitInterval> {
        check_len(self.weights.len(), inputs.len())?;
        Ok(UnitInterval::clamped(and_product(
            self.bias,
            &self.weights,
            inputs,
        )))
    }

    /// Exact partial derivatives of the forward value, scaled by `upstream`.
    /// At a weight's 0 kink the derivative is the sum of the two one-sided
    /// limits, `2 (c_j - 1/2) * rest`, so a parked weight can move with a
    /// magnitude comparable to |W| = 1.
    pub fn backward(&self, inputs: &[f64], upstream: f64) -> Result<NodeGradients> {
        check_len(self.weights.len(), inputs.len())?;
        let n = self.weights.len();
        let mut factors = vec![0.0; n];
        for j in 0..n {
            factors[j] = and_factor(self.weights[j], inputs[j]);
        }
        let rest = leave_one_out_products(&factors);
        let prod: f64 = factors.iter().product();

        let mut d_weights = vec![0.0; n];
        let mut d_inputs = vec![0.0; n];
        for j in 0..n {
            let r = self.bias * rest[j];
            let w = self.weights[j];
            let c = inputs[j];
            d_weights[j] = upstream
                * r
                * if w > 0.0 {
                    -(1.0 - c)
                } else if w < 0.0 {
                    c
                } else {
                    2.0 * (c - 0.5)
                };
            d_inputs[j] = upstream * w * r;
        }
        Ok(NodeGradients {
            d_weights,
            d_bias: upstream * prod,
            d_inputs,
        })
    }

    /// Classical-logic evaluation. Requires integer weights, full bias a = 1,
    /// and binary inputs.
    pub fn crisp_eval(&self, inputs: &[f64]) -> Result<f64> {
        check_len(self.weights.len(), inputs.len())?;
        check_crisp(&self.weights, self.bias, 1.0, inputs)?;
        for (&w, &c) in self.weights.iter().zip(inputs) {
            if (w == 1.0 && c == 0.0) || (w == -1.0 && c == 1.0) {
                return Ok(0.0);
            }
        }
        Ok(1.0)
    }

    /// De Morgan dual: an OR node with flipped weight signs and complemented
    /// bias, satisfying `dual.forward(c) == 1 - self.forward(c)`.
    pub fn demorgan_dual(&self) -> OrNode {
        OrNode {
            weights: self.weights.iter().map(|w| -w).collect(),
            bias: 1.0 - self.bias,
            allow_negation: true,
        }
    }
}

impl OrNode {
    pub fn new(weights: Vec<SignedUnit>, bias: UnitInterval, allow_negation: bool) -> Result<Self> {
        let node = Self {
            weights: weights.into_iter().map(SignedUnit::value).collect(),
            bias: bias.value(),
            allow_negation,
        };
        node.check_negation()?;
        Ok(node)
    }

    pub fn from_raw(weights: Vec<f64>, bias: f64, allow_negation: bool) -> Result<Self> {
        for &w in &weights {
            SignedUnit::new(w)?;
        }
        UnitInterval::new(bias)?;
        let node = Self {
            weights,
            bias,
            allow_negation,
        };
        node.check_negation()?;
        Ok(node)
    }

    fn check_negation(&self) -> Result<()> {
        if !self.allow_negation {
            if let Some(w) = self.weights.iter().find(|w| **w < 0.0) {
                return Err(NlnError::Domain(format!(
                    "negative weight {w} in an OR node without negation"
                )));
            }
        }
        Ok(())
    }

    pub fn fan_in(&self) -> usize {
        self.weights.len()
    }

    pub fn forward(&self, inputs: &[f64]) -> Result<UnitInterval> {
        check_len(self.weights.len(), inputs.len())?;
        self.check_negation()?;
        Ok(UnitInterval::clamped(or_value(
            self.bias,
            &self.weights,
            inputs,
        )))
    }

    pub fn backward(&self, inputs: &[f64], upstream: f64) -> Result<NodeGradients> {
        check_len(self.weights.len(), inputs.len())?;
        let n = self.weights.len();
        let mut factors = vec![0.0; n];
        for j in 0..n {
            factors[j] = or_factor(self.weights[j], inputs[j]);
        }
        let rest = leave_one_out_products(&factors);
        let prod: f64 = factors.iter().product();

        let mut d_weights = vec![0.0; n];
        let mut d_inputs = vec![0.0; n];
        for j in 0..n {
            let r = (1.0 - self.bias) * rest[j];
            let w = self.weights[j];
            let c = inputs[j];
            d_weights[j] = upstream
                * r
                * if w > 0.0 {
                    c
                } else if w < 0.0 {
                    -(1.0 - c)
                } else {
                    2.0 * (c - 0.5)
                };
            d_inputs[j] = upstream * w * r;
        }
        Ok(NodeGradients {
            d_weights,
            d_bias: upstream * prod,
            d_inputs,
        })
    }

    pub fn crisp_eval(&self, inputs: &[f64]) -> Result<f64> {
        check_len(self.weights.len(), inputs.len())?;
        check_crisp(&self.weights, self.bias, 0.0, inputs)?;
        for (&w, &c) in self.weights.iter().zip(inputs) {
            if (w == 1.0 && c == 1.0) || (w == -1.0 && c == 0.0) {
                return Ok(1.0);
            }
        }
        Ok(0.0)
    }

    pub fn demorgan_dual(&self) -> AndNode {
        AndNode {
            weights: self.weights.iter().map(|w| -w).collect(),
            bias: 1.0 - self.bias,
        }
    }
}

#[inline]
pub(crate) fn and_factor(w: f64, c: f64) -> f64 {
    (1.0 - pospart(w) * (1.0 - c)) * (1.0 - negpart(w) * c)
}

#[inline]
pub(crate) fn or_factor(w: f64, c: f64) -> f64 {
    (1.0 - pospart(w) * c) * (1.0 - negpart(w) * (1.0 - c))
}

/// `a * prod_j and_factor(w_j, c_j)`; empty products are 1, so an empty
/// fan-in returns the bias.
#[inline]
pub(crate) fn and_product(bias: f64, weights: &[f64], inputs: &[f64]) -> f64 {
    let mut p = bias;
    for (&w, &c) in weights.iter().zip(inputs) {
        p *= and_factor(w, c);
    }
    p
}

#[inline]
pub(crate) fn or_value(bias: f64, weights: &[f64], inputs: &[f64]) -> f64 {
    let mut p = 1.0 - bias;
    for (&w, &c) in weights.iter().zip(inputs) {
        p *= or_factor(w, c);
    }
    1.0 - p
}

/// Products of all factors except the j-th, via prefix/suffix sweeps. Stable
/// when individual factors are 0, unlike division by the factor.
pub(crate) fn leave_one_out_products(factors: &[f64]) -> Vec<f64> {
    let n = factors.len();
    let mut rest = vec![1.0; n];
    let mut prefix = 1.0;
    for j in 0..n {
        rest[j] = prefix;
        prefix *= factors[j];
    }
    let mut suffix = 1.0;
    for j in (0..n).rev() {
        rest[j] *= suffix;
        suffix *= factors[j];
    }
    rest
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(NlnError::Dimension { expected, got })
    }
}

fn check_crisp(weights: &[f64], bias: f64, full_bias: f64, inputs: &[f64]) -> Result<()> {
    if bias != full_bias {
        return Err(NlnError::Precondition(format!(
            "crisp evaluation requires bias {full_bias}, got {bias}"
        )));
    }
    if let Some(w) = weights.iter().find(|w| !matches!(**w, -1.0 | 0.0 | 1.0)) {
        return Err(NlnError::Precondition(format!("non-integer weight {w}")));
    }
    if let Some(c) = inputs.iter().find(|c| !matches!(**c, 0.0 | 1.0)) {
        return Err(NlnError::Precondition(format!("non-binary input {c}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn and(weights: &[f64], bias: f64) -> AndNode {
        AndNode::from_raw(weights.to_vec(), bias).unwrap()
    }

    fn or(weights: &[f64], bias: f64) -> OrNode {
        OrNode::from_raw(weights.to_vec(), bias, true).unwrap()
    }

    #[test]
    fn and_forward_identity_when_all_satisfied() {
        let n = and(&[1.0, -1.0], 1.0);
        assert_eq!(n.forward(&[1.0, 0.0]).unwrap().value(), 1.0);
    }

    #[test]
    fn and_forward_single_necessary_passes_through() {
        let n = and(&[1.0], 1.0);
        assert_eq!(n.forward(&[0.5]).unwrap().value(), 0.5);
    }

    #[test]
    fn and_forward_scalar_substitution() {
        // 0.8 * 0.9 * 0.8
        let n = and(&[1.0, -0.5], 0.8);
        let got = n.forward(&[0.9, 0.4]).unwrap().value();
        assert!((got - 0.576).abs() < 1e-15, "got {got}");
    }

    #[test]
    fn and_forward_empty_fan_in_returns_bias() {
        let n = and(&[], 0.7);
        assert_eq!(n.forward(&[]).unwrap().value(), 0.7);
        let o = or(&[], 0.7);
        assert_eq!(o.forward(&[]).unwrap().value(), 0.7);
    }

    #[test]
    fn and_forward_rejects_length_mismatch() {
        let n = and(&[1.0], 1.0);
        assert!(matches!(
            n.forward(&[0.5, 0.5]),
            Err(NlnError::Dimension { .. })
        ));
    }

    #[test]
    fn or_forward_single_sufficient_passes_through() {
        let n = or(&[1.0], 0.0);
        assert_eq!(n.forward(&[0.3]).unwrap().value(), 0.3);
    }

    #[test]
    fn or_forward_full_bias_trivially_activated() {
        let n = or(&[0.4, -0.9], 1.0);
        assert_eq!(n.forward(&[0.2, 0.8]).unwrap().value(), 1.0);
    }

    #[test]
    fn or_forward_scalar_substitution() {
        // 1 - 0.8 * 0.7 * 0.3
        let n = or(&[0.5, -1.0], 0.2);
        let got = n.forward(&[0.6, 0.3]).unwrap().value();
        assert!((got - 0.832).abs() < 1e-15, "got {got}");
    }

    #[test]
    fn or_without_negation_rejects_negative_weight() {
        assert!(OrNode::from_raw(vec![-0.1], 0.0, false).is_err());
    }

    #[test]
    fn and_backward_hand_derived() {
        let n = and(&[1.0], 1.0);
        let g = n.backward(&[0.5], 1.0).unwrap();
        assert_eq!(g.d_bias, 0.5);
        assert_eq!(g.d_weights, vec![-0.5]);
        assert_eq!(g.d_inputs, vec![1.0]);
    }

    #[test]
    fn and_backward_zero_weight_uninformative_input() {
        let n = and(&[0.0], 1.0);
        let g = n.backward(&[0.5], 1.0).unwrap();
        assert_eq!(g.d_weights, vec![0.0]);
    }

    #[test]
    fn or_backward_hand_derived() {
        let n = or(&[1.0], 0.0);
        let g = n.backward(&[0.3], 1.0).unwrap();
        assert!((g.d_bias - 0.7).abs() < 1e-15);
        assert!((g.d_weights[0] - 0.3).abs() < 1e-15);
        assert!((g.d_inputs[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn demorgan_dual_flips_signs_and_complements_bias() {
        let n = and(&[0.7, -0.2], 0.3);
        let d = n.demorgan_dual();
        assert_eq!(d.weights, vec![-0.7, 0.2]);
        assert!((d.bias - 0.7).abs() < 1e-15);

        let back = d.demorgan_dual();
        assert_eq!(back.weights, n.weights);
        assert_eq!(back.bias, n.bias);

        let inputs = [0.5, 0.5];
        let a = n.forward(&inputs).unwrap().value();
        let o = d.forward(&inputs).unwrap().value();
        assert!((a - 0.1755).abs() < 1e-15, "and {a}");
        assert!((o - 0.8245).abs() < 1e-15, "or {o}");
    }

    #[test]
    fn crisp_eval_examples() {
        let n = and(&[1.0, -1.0, 0.0], 1.0);
        assert_eq!(n.crisp_eval(&[1.0, 0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(n.crisp_eval(&[1.0, 1.0, 0.0]).unwrap(), 0.0);
        let o = or(&[1.0, 0.0, 1.0], 0.0);
        assert_eq!(o.crisp_eval(&[0.0, 1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn crisp_eval_rejects_bad_preconditions() {
        let n = and(&[0.5], 1.0);
        assert!(n.crisp_eval(&[1.0]).is_err());
        let n = and(&[1.0], 0.9);
        assert!(n.crisp_eval(&[1.0]).is_err());
        let n = and(&[1.0], 1.0);
        assert!(n.crisp_eval(&[0.25]).is_err());
    }

    fn random_integer_weights(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| [-1.0, 0.0, 1.0][rng.gen_range(0..3)]).collect()
    }

    #[test]
    fn binary_collapse_forward_equals_crisp() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.gen_range(1..8);
            let inputs: Vec<f64> = (0..n).map(|_| rng.gen_range(0..2) as f64).collect();
            let w = random_integer_weights(&mut rng, n);
            if rng.gen_bool(0.5) {
                let node = and(&w, 1.0);
                assert_eq!(
                    node.forward(&inputs).unwrap().value(),
                    node.crisp_eval(&inputs).unwrap()
                );
            } else {
                let node = or(&w, 0.0);
                assert_eq!(
                    node.forward(&inputs).unwrap().value(),
                    node.crisp_eval(&inputs).unwrap()
                );
            }
        }
    }

    #[test]
    fn demorgan_duality_holds_on_random_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let n = rng.gen_range(0..7);
            let node = and(
                &(0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect::<Vec<_>>(),
                rng.gen_range(0.0..=1.0),
            );
            let inputs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let a = node.forward(&inputs).unwrap().value();
            let o = node.demorgan_dual().forward(&inputs).unwrap().value();
            assert!((o - (1.0 - a)).abs() <= 1e-12);
        }
    }

    #[test]
    fn monotone_in_inputs_according_to_weight_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let n = rng.gen_range(1..6);
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let node = and(&w, rng.gen_range(0.0..=1.0));
            let mut lo: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let j = rng.gen_range(0..n);
            let mut hi = lo.clone();
            hi[j] = lo[j] + rng.gen_range(0.0..=1.0 - lo[j]);
            lo[j] = lo[j].min(hi[j]);
            let f_lo = node.forward(&lo).unwrap().value();
            let f_hi = node.forward(&hi).unwrap().value();
            if w[j] > 0.0 {
                assert!(f_hi >= f_lo - 1e-12);
            } else if w[j] < 0.0 {
                assert!(f_hi <= f_lo + 1e-12);
            }
            // Mirrored statement for OR on the same draw.
            let onode = or(&w, rng.gen_range(0.0..=1.0));
            let o_lo = onode.forward(&lo).unwrap().value();
            let o_hi = onode.forward(&hi).unwrap().value();
            if w[j] > 0.0 {
                assert!(o_hi >= o_lo - 1e-12);
            } else if w[j] < 0.0 {
                assert!(o_hi <= o_lo + 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = 1e-5;
        let mut checked = 0;
        'outer: for _ in 0..200 {
            let n = rng.gen_range(1..5);
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.95..=0.95)).collect();
            // Stay away from the weight = 0 kink.
            if w.iter().any(|w| w.abs() < 1e-3) {
                continue 'outer;
            }
            let bias = rng.gen_range(0.05..=0.95);
            let inputs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..=0.95)).collect();
            let is_and = rng.gen_bool(0.5);

            let eval = |w: &[f64], b: f64, x: &[f64]| -> f64 {
                if is_and {
                    and_product(b, w, x)
                } else {
                    or_value(b, w, x)
                }
            };
            let g = if is_and {
                and(&w, bias).backward(&inputs, 1.0).unwrap()
            } else {
                or(&w, bias).backward(&inputs, 1.0).unwrap()
            };

            let check = |analytic: f64, fd: f64| {
                let denom = analytic.abs().max(fd.abs()).max(1e-8);
                assert!(
                    ((analytic - fd) / denom).abs() < 1e-4,
                    "analytic {analytic} vs fd {fd}"
                );
            };
            for j in 0..n {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[j] += h;
                wm[j] -= h;
                check(
                    g.d_weights[j],
                    (eval(&wp, bias, &inputs) - eval(&wm, bias, &inputs)) / (2.0 * h),
                );
                let mut xp = inputs.clone();
                let mut xm = inputs.clone();
                xp[j] += h;
                xm[j] -= h;
                check(
                    g.d_inputs[j],
                    (eval(&w, bias, &xp) - eval(&w, bias, &xm)) / (2.0 * h),
                );
            }
            check(
                g.d_bias,
                (eval(&w, bias + h, &inputs) - eval(&w, bias - h, &inputs)) / (2.0 * h),
            );
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn outputs_stay_in_unit_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..1000 {
            let n = rng.gen_range(0..10);
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
            let a = and(&w, rng.gen_range(0.0..=1.0)).forward(&x).unwrap().value();
            let o = or(&w, rng.gen_range(0.0..=1.0)).forward(&x).unwrap().value();
            assert!((0.0..=1.0).contains(&a));
            assert!((0.0..=1.0).contains(&o));
        }
    }
}
