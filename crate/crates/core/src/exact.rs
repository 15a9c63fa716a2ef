//! Model-based Bellman operators and fixed-point solvers.
//!
//! The relaxed operators mix a Bellman backup with the current estimate of the
//! same state:
//!
//! ```text
//! (T_w V)(i)   = max_a { w (r(i,a) + alpha sum_j p(j|i,a) V(j)) + (1 - w) V(i) }
//! (H_w Q)(i,a) = w (r(i,a) + alpha sum_j p(j|i,a) max_b Q(j,b)) + (1 - w) max_c Q(i,c)
//! ```
//!
//! Both are max-norm contractions for `0 < w <= w*`, where
//! `w* = min_{i,a} 1 / (1 - alpha p(i|i,a))`, and `H_w` contracts with factor
//! `w alpha + 1 - w`. With `w = 1` they are the ordinary operators `T` and `H`.

use thiserror::Error;

use crate::mdp::{row_max, Mdp, Policy, QTable, Table, ValueFunction};

/// Slack allowed above `w*` when validating a relaxation factor.
pub const RELAXATION_SLACK: f64 = 1e-12;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("relaxation factor {w} is outside (0, {w_star}]")]
    RelaxationOutOfRange { w: f64, w_star: f64 },
    #[error("tolerance must be positive (got {0})")]
    Tolerance(f64),
}

/// An over-relaxation factor `w > 0`.
///
/// The upper bound depends on the model, so it is checked against `w_star` at
/// every operator or solver entry.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RelaxationFactor(f64);

impl RelaxationFactor {
    pub const ONE: Self = Self(1.0);

    pub fn new(w: f64) -> Result<Self, ExactError> {
        if w.is_finite() && w > 0.0 {
            Ok(Self(w))
        } else {
            Err(ExactError::RelaxationOutOfRange { w, w_star: f64::NAN })
        }
    }

    /// The largest admissible factor for `mdp`.
    pub fn optimal(mdp: &Mdp) -> Self {
        Self(w_star(mdp))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Errors unless `0 < w <= w_star(mdp) + RELAXATION_SLACK`.
    pub fn check(self, mdp: &Mdp) -> Result<(), ExactError> {
        let ws = w_star(mdp);
        if self.0 > 0.0 && self.0 <= ws + RELAXATION_SLACK {
            Ok(())
        } else {
            Err(ExactError::RelaxationOutOfRange { w: self.0, w_star: ws })
        }
    }

    /// Max-norm contraction factor `w alpha + 1 - w` of `H_w`.
    pub fn contraction_factor(self, discount: f64) -> f64 {
        self.0 * discount + 1.0 - self.0
    }
}

/// `w* = min_{i,a} 1 / (1 - alpha p(i|i,a))`; always at least one.
pub fn w_star(mdp: &Mdp) -> f64 {
    let alpha = mdp.discount();
    let mut best = f64::INFINITY;
    for i in 0..mdp.num_states() {
        for a in 0..mdp.num_actions() {
            best = best.min(1.0 / (1.0 - alpha * mdp.self_loop(i, a)));
        }
    }
    best
}

/// Result of a fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<S> {
    pub solution: S,
    pub iterations: usize,
    /// Max-norm of the last update step.
    pub final_residual: f64,
    pub converged: bool,
}

fn check_values(mdp: &Mdp, v: &ValueFunction) -> Result<(), ExactError> {
    if v.len() != mdp.num_states() {
        return Err(ExactError::ShapeMismatch {
            expected: (mdp.num_states(), 1),
            got: (v.len(), 1),
        });
    }
    Ok(())
}

fn check_q(mdp: &Mdp, q: &QTable) -> Result<(), ExactError> {
    if !q.matches(mdp) {
        return Err(ExactError::ShapeMismatch {
            expected: (mdp.num_states(), mdp.num_actions()),
            got: q.shape(),
        });
    }
    Ok(())
}

/// `r(i,a) + alpha sum_j p(j|i,a) v(j)`.
#[inline]
fn backup(mdp: &Mdp, i: usize, a: usize, v: &[f64]) -> f64 {
    let lookahead: f64 = mdp.transition_row(i, a).iter().zip(v).map(|(p, v)| p * v).sum();
    mdp.expected_reward_unchecked(i, a) + mdp.discount() * lookahead
}

fn apply_t(mdp: &Mdp, v: &[f64]) -> Vec<f64> {
    (0..mdp.num_states())
        .map(|i| {
            (0..mdp.num_actions())
                .map(|a| backup(mdp, i, a, v))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

fn apply_tw(mdp: &Mdp, v: &[f64], w: f64) -> Vec<f64> {
    (0..mdp.num_states())
        .map(|i| {
            (0..mdp.num_actions())
                .map(|a| w * backup(mdp, i, a, v) + (1.0 - w) * v[i])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

fn apply_h(mdp: &Mdp, q: &QTable) -> QTable {
    let m = q.greedy_values();
    let mut out = Vec::with_capacity(mdp.num_states() * mdp.num_actions());
    for i in 0..mdp.num_states() {
        for a in 0..mdp.num_actions() {
            out.push(backup(mdp, i, a, m.values()));
        }
    }
    QTable::from_vec_unchecked(mdp.num_states(), mdp.num_actions(), out)
}

fn apply_hw(mdp: &Mdp, q: &QTable, w: f64) -> QTable {
    let m = q.greedy_values();
    let mut out = Vec::with_capacity(mdp.num_states() * mdp.num_actions());
    for i in 0..mdp.num_states() {
        for a in 0..mdp.num_actions() {
            out.push(w * backup(mdp, i, a, m.values()) + (1.0 - w) * m[i]);
        }
    }
    QTable::from_vec_unchecked(mdp.num_states(), mdp.num_actions(), out)
}

/// `(TV)(i) = max_a { r(i,a) + alpha sum_j p(j|i,a) V(j) }`.
pub fn bellman_t(mdp: &Mdp, v: &ValueFunction) -> Result<ValueFunction, ExactError> {
    check_values(mdp, v)?;
    Ok(ValueFunction::from_vec_unchecked(apply_t(mdp, v.values())))
}

/// The relaxed value operator `T_w`.
pub fn sor_bellman_tw(mdp: &Mdp, v: &ValueFunction, w: RelaxationFactor) -> Result<ValueFunction, ExactError> {
    check_values(mdp, v)?;
    w.check(mdp)?;
    Ok(ValueFunction::from_vec_unchecked(apply_tw(mdp, v.values(), w.value())))
}

/// `(HQ)(i,a) = r(i,a) + alpha sum_j p(j|i,a) max_b Q(j,b)`.
pub fn q_bellman_h(mdp: &Mdp, q: &QTable) -> Result<QTable, ExactError> {
    check_q(mdp, q)?;
    Ok(apply_h(mdp, q))
}

/// The relaxed Q operator `H_w`.
pub fn sor_q_bellman_hw(mdp: &Mdp, q: &QTable, w: RelaxationFactor) -> Result<QTable, ExactError> {
    check_q(mdp, q)?;
    w.check(mdp)?;
    Ok(apply_hw(mdp, q, w.value()))
}

/// `||x - y||_inf` for tables of equal shape.
pub fn max_abs_diff<T: Table + ?Sized>(x: &T, y: &T) -> Result<f64, ExactError> {
    if x.shape() != y.shape() {
        return Err(ExactError::ShapeMismatch {
            expected: x.shape(),
            got: y.shape(),
        });
    }
    Ok(sup_distance(x.as_slice(), y.as_slice()))
}

#[inline]
pub(crate) fn sup_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// Iterates `v_n = T_w v_{n-1}` until the step falls to `tol` or `max_iter`
/// applications have been made.
pub fn value_iteration(
    mdp: &Mdp,
    w: RelaxationFactor,
    v0: ValueFunction,
    tol: f64,
    max_iter: usize,
) -> Result<SolveResult<ValueFunction>, ExactError> {
    check_values(mdp, &v0)?;
    w.check(mdp)?;
    if !(tol > 0.0) {
        return Err(ExactError::Tolerance(tol));
    }
    let w = w.value();
    let mut v = v0.values().to_vec();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        let next = if w == 1.0 { apply_t(mdp, &v) } else { apply_tw(mdp, &v, w) };
        residual = sup_distance(&next, &v);
        v = next;
        iterations += 1;
        if residual <= tol {
            break;
        }
    }
    Ok(SolveResult {
        solution: ValueFunction::from_vec_unchecked(v),
        iterations,
        final_residual: residual,
        converged: residual <= tol,
    })
}

/// Iterates `q_n = H_w q_{n-1}` from the zero table.
pub fn q_value_iteration(
    mdp: &Mdp,
    w: RelaxationFactor,
    tol: f64,
    max_iter: usize,
) -> Result<SolveResult<QTable>, ExactError> {
    q_value_iteration_from(mdp, w, QTable::zeros_for(mdp), tol, max_iter)
}

pub fn q_value_iteration_from(
    mdp: &Mdp,
    w: RelaxationFactor,
    q0: QTable,
    tol: f64,
    max_iter: usize,
) -> Result<SolveResult<QTable>, ExactError> {
    check_q(mdp, &q0)?;
    w.check(mdp)?;
    if !(tol > 0.0) {
        return Err(ExactError::Tolerance(tol));
    }
    let w = w.value();
    let mut q = q0;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        let next = if w == 1.0 { apply_h(mdp, &q) } else { apply_hw(mdp, &q, w) };
        residual = sup_distance(next.values(), q.values());
        q = next;
        iterations += 1;
        if residual <= tol {
            break;
        }
    }
    Ok(SolveResult {
        solution: q,
        iterations,
        final_residual: residual,
        converged: residual <= tol,
    })
}

/// `pi(i) = argmax_a q(i,a)`, ties going to the lowest action index.
pub fn greedy_policy(q: &QTable) -> Policy {
    Policy::from_vec_unchecked((0..q.num_states()).map(|i| argmax(q.row(i))).collect())
}

/// Index of the first maximal entry.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = a;
        }
    }
    best
}

/// Per state, the actions whose value lies within `tol` of the row maximum.
pub fn optimal_action_sets(q: &QTable, tol: f64) -> Vec<Vec<usize>> {
    (0..q.num_states())
        .map(|i| {
            let row = q.row(i);
            let m = row_max(row);
            row.iter()
                .enumerate()
                .filter(|(_, &x)| x >= m - tol)
                .map(|(a, _)| a)
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{generate_random_mdp, GeneratorConfig};
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn single_state(reward: f64, discount: f64) -> Mdp {
        Mdp::new_validated(1, 1, discount, vec![1.0], vec![reward]).unwrap()
    }

    fn seeded(seed: u64) -> Mdp {
        generate_random_mdp(&GeneratorConfig {
            seed,
            ..Default::default()
        })
        .unwrap()
    }

    fn random_q(mdp: &Mdp, s: &mut rng::Stream, scale: f64) -> QTable {
        let n = mdp.num_states() * mdp.num_actions();
        QTable::from_vec(
            mdp.num_states(),
            mdp.num_actions(),
            (0..n).map(|_| scale * (2.0 * s.random::<f64>() - 1.0)).collect(),
        )
        .unwrap()
    }

    fn v_star(mdp: &Mdp) -> ValueFunction {
        value_iteration(mdp, RelaxationFactor::ONE, ValueFunction::zeros(mdp.num_states()), 1e-12, DEFAULT_MAX_ITER)
            .unwrap()
            .solution
    }

    #[test]
    fn t_single_state_substitution() {
        let mdp = single_state(1.0, 0.5);
        let tv = bellman_t(&mdp, &ValueFunction::zeros(1)).unwrap();
        assert_eq!(tv.values(), &[1.0]);
    }

    #[test]
    fn t_fixes_v_star() {
        let mdp = seeded(4);
        let v = v_star(&mdp);
        let tv = bellman_t(&mdp, &v).unwrap();
        assert!(max_abs_diff(&tv, &v).unwrap() <= 1e-10);
    }

    #[test]
    fn deterministic_cycle_geometric_series() {
        // 0 -> 1 -> 0 with unit reward
        let mdp = Mdp::new_validated(2, 1, 0.9, vec![0.0, 1.0, 1.0, 0.0], vec![1.0; 4]).unwrap();
        let tv = bellman_t(&mdp, &ValueFunction::zeros(2)).unwrap();
        assert_eq!(tv.values(), &[1.0, 1.0]);
        let v = v_star(&mdp);
        for x in v.values() {
            assert!((x - 10.0).abs() < 1e-10);
        }
    }

    #[test]
    fn tw_reduces_to_t_at_one() {
        let mdp = seeded(5);
        let mut s = rng::stream(1);
        for _ in 0..20 {
            let v = ValueFunction::from_vec((0..10).map(|_| s.random::<f64>() * 4.0 - 2.0).collect()).unwrap();
            let a = bellman_t(&mdp, &v).unwrap();
            let b = sor_bellman_tw(&mdp, &v, RelaxationFactor::ONE).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn tw_fixes_v_star() {
        let mdp = seeded(6);
        let v = v_star(&mdp);
        let tv = sor_bellman_tw(&mdp, &v, RelaxationFactor::optimal(&mdp)).unwrap();
        assert!(max_abs_diff(&tv, &v).unwrap() <= 1e-10);
    }

    #[test]
    fn tw_single_state_one_step() {
        let mdp = single_state(1.0, 0.9);
        let ws = w_star(&mdp);
        assert!((ws - 10.0).abs() < 1e-12);
        let tv = sor_bellman_tw(&mdp, &ValueFunction::zeros(1), RelaxationFactor::new(ws).unwrap()).unwrap();
        assert!((tv[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn relaxation_above_w_star_is_rejected() {
        let mdp = single_state(1.0, 0.9);
        let err = sor_bellman_tw(&mdp, &ValueFunction::zeros(1), RelaxationFactor::new(50.0).unwrap()).unwrap_err();
        assert!(matches!(err, ExactError::RelaxationOutOfRange { .. }));
        assert!(RelaxationFactor::new(0.0).is_err());
        assert!(RelaxationFactor::new(-1.0).is_err());
    }

    #[test]
    fn dimension_mismatches() {
        let mdp = seeded(1);
        assert!(bellman_t(&mdp, &ValueFunction::zeros(3)).is_err());
        assert!(q_bellman_h(&mdp, &QTable::zeros(10, 4)).is_err());
        assert!(max_abs_diff(&QTable::zeros(2, 2), &QTable::zeros(2, 3)).is_err());
    }

    #[test]
    fn h_fixes_its_fixed_point() {
        let mdp = seeded(7);
        let q = q_value_iteration(&mdp, RelaxationFactor::ONE, 1e-12, DEFAULT_MAX_ITER).unwrap().solution;
        let hq = q_bellman_h(&mdp, &q).unwrap();
        assert!(max_abs_diff(&hq, &q).unwrap() <= 1e-10);
    }

    #[test]
    fn h_without_lookahead() {
        let mdp = Mdp::new_validated(1, 2, 0.0, vec![1.0, 1.0], vec![1.0, 0.0]).unwrap();
        let hq = q_bellman_h(&mdp, &QTable::filled(1, 2, 5.0)).unwrap();
        assert_eq!(hq.values(), &[1.0, 0.0]);
    }

    #[test]
    fn h_row_max_matches_t_of_greedy_values() {
        let mdp = seeded(8);
        let mut s = rng::stream(8);
        for _ in 0..10 {
            let q = random_q(&mdp, &mut s, 5.0);
            let hq = q_bellman_h(&mdp, &q).unwrap();
            let t = bellman_t(&mdp, &q.greedy_values()).unwrap();
            for i in 0..mdp.num_states() {
                assert!((hq.row_max(i) - t[i]).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn hw_reduces_to_h_at_one() {
        let mdp = seeded(9);
        let mut s = rng::stream(9);
        for _ in 0..20 {
            let q = random_q(&mdp, &mut s, 3.0);
            assert_eq!(
                q_bellman_h(&mdp, &q).unwrap(),
                sor_q_bellman_hw(&mdp, &q, RelaxationFactor::ONE).unwrap()
            );
        }
    }

    #[test]
    fn hw_fixes_q_star() {
        let mdp = seeded(10);
        let w = RelaxationFactor::optimal(&mdp);
        let q = q_value_iteration(&mdp, w, 1e-12, DEFAULT_MAX_ITER).unwrap().solution;
        let hq = sor_q_bellman_hw(&mdp, &q, w).unwrap();
        assert!(max_abs_diff(&hq, &q).unwrap() <= 1e-10);
    }

    #[test]
    fn hw_contracts_on_random_pairs() {
        let mdp = seeded(11);
        let ws = w_star(&mdp);
        let mut s = rng::stream(11);
        for _ in 0..1000 {
            let w = RelaxationFactor::new(ws * (1.0 - s.random::<f64>()).max(1e-9)).unwrap();
            let p = random_q(&mdp, &mut s, 10.0);
            let q = random_q(&mdp, &mut s, 10.0);
            let lhs = max_abs_diff(&sor_q_bellman_hw(&mdp, &p, w).unwrap(), &sor_q_bellman_hw(&mdp, &q, w).unwrap()).unwrap();
            let rhs = w.contraction_factor(mdp.discount()) * max_abs_diff(&p, &q).unwrap();
            assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
        }
    }

    #[test]
    fn w_star_cases() {
        let no_loops = Mdp::new_validated(2, 1, 0.9, vec![0.0, 1.0, 1.0, 0.0], vec![0.0; 4]).unwrap();
        assert_eq!(w_star(&no_loops), 1.0);
        let all_loops = Mdp::new_validated(2, 1, 0.9, vec![1.0, 0.0, 0.0, 1.0], vec![0.0; 4]).unwrap();
        assert!((w_star(&all_loops) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn w_star_matches_exhaustive_scan() {
        let mdp = seeded(12);
        let s = mdp.num_states();
        let mut best = f64::INFINITY;
        for (k, row) in mdp.transition_tensor().chunks(s).enumerate() {
            let i = k / mdp.num_actions();
            best = best.min(1.0 / (1.0 - mdp.discount() * row[i]));
        }
        assert_eq!(w_star(&mdp), best);
        assert!(w_star(&mdp) > 1.0);
    }

    #[test]
    fn value_iteration_single_state() {
        let mdp = single_state(1.0, 0.9);
        let r = value_iteration(&mdp, RelaxationFactor::ONE, ValueFunction::zeros(1), 1e-10, DEFAULT_MAX_ITER).unwrap();
        assert!(r.converged);
        assert!((r.solution[0] - 10.0).abs() < 1e-8);
        assert!(r.iterations > 100);
    }

    #[test]
    fn value_iteration_at_w_star_lands_in_one_application() {
        let mdp = single_state(1.0, 0.9);
        let w = RelaxationFactor::optimal(&mdp);
        let one = value_iteration(&mdp, w, ValueFunction::zeros(1), 1e-10, 1).unwrap();
        assert!((one.solution[0] - 10.0).abs() < 1e-12);
        // the residual test needs a second application to confirm the fixed point
        let full = value_iteration(&mdp, w, ValueFunction::zeros(1), 1e-10, DEFAULT_MAX_ITER).unwrap();
        assert!(full.converged);
        assert!(full.iterations <= 2);
    }

    #[test]
    fn unconverged_runs_are_flagged() {
        let mdp = seeded(13);
        let r = value_iteration(&mdp, RelaxationFactor::ONE, ValueFunction::zeros(10), 1e-8, 3).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
        assert!(value_iteration(&mdp, RelaxationFactor::ONE, ValueFunction::zeros(10), 0.0, 3).is_err());
    }

    #[test]
    fn over_relaxation_never_needs_more_iterations() {
        for seed in 0..20 {
            let mdp = seeded(seed);
            let v0 = ValueFunction::zeros(mdp.num_states());
            let plain = value_iteration(&mdp, RelaxationFactor::ONE, v0.clone(), 1e-8, DEFAULT_MAX_ITER).unwrap();
            let relaxed = value_iteration(&mdp, RelaxationFactor::optimal(&mdp), v0, 1e-8, DEFAULT_MAX_ITER).unwrap();
            assert!(relaxed.iterations <= plain.iterations, "seed {seed}");
        }
    }

    #[test]
    fn q_fixed_points_share_greedy_values() {
        let tol = 1e-10;
        let mdp = seeded(14);
        let v = value_iteration(&mdp, RelaxationFactor::ONE, ValueFunction::zeros(10), tol, DEFAULT_MAX_ITER)
            .unwrap()
            .solution;
        let q1 = q_value_iteration(&mdp, RelaxationFactor::ONE, tol, DEFAULT_MAX_ITER).unwrap().solution;
        let wmid = RelaxationFactor::new((1.0 + w_star(&mdp)) / 2.0).unwrap();
        let qw = q_value_iteration(&mdp, wmid, tol, DEFAULT_MAX_ITER).unwrap().solution;
        // The residual tolerance bounds the distance to the limit by
        // factor / (1 - factor) * tol, about 9 tol here; allow 20 tol.
        for i in 0..10 {
            assert!((q1.row_max(i) - v[i]).abs() <= 20.0 * tol);
            assert!((qw.row_max(i) - v[i]).abs() <= 20.0 * tol);
            let c = argmax(q1.row(i));
            assert!((qw.get(i, c) - q1.get(i, c)).abs() <= 20.0 * tol);
        }
    }

    #[test]
    fn a_priori_error_bound() {
        let mdp = seeded(15);
        let w = RelaxationFactor::optimal(&mdp);
        let q_star = q_value_iteration(&mdp, w, 1e-13, DEFAULT_MAX_ITER).unwrap().solution;
        let norm = q_star.values().iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let factor = w.contraction_factor(mdp.discount());
        let mut q = QTable::zeros_for(&mdp);
        for n in 1..=60 {
            q = sor_q_bellman_hw(&mdp, &q, w).unwrap();
            let err = max_abs_diff(&q, &q_star).unwrap();
            assert!(err <= factor.powi(n) * norm + 1e-11, "n={n}");
        }
    }

    #[test]
    fn greedy_tie_breaks_low() {
        let q = QTable::from_vec(2, 3, vec![0.0, 3.0, 1.0, 2.0, 2.0, 0.0]).unwrap();
        assert_eq!(greedy_policy(&q).actions(), &[1, 0]);
    }

    // Iterative policy evaluation: v = r_pi + alpha P_pi v.
    fn evaluate_policy(mdp: &Mdp, pi: &Policy) -> Vec<f64> {
        let s = mdp.num_states();
        let mut v = vec![0.0; s];
        loop {
            let next: Vec<f64> = (0..s)
                .map(|i| {
                    let a = pi.action(i);
                    let row = mdp.transition_row(i, a);
                    let rew = mdp.reward_row(i, a);
                    (0..s).map(|j| row[j] * (rew[j] + mdp.discount() * v[j])).sum()
                })
                .collect();
            let d = sup_distance(&next, &v);
            v = next;
            if d < 1e-12 {
                return v;
            }
        }
    }

    #[test]
    fn greedy_policy_of_q_star_is_optimal() {
        let mdp = seeded(16);
        let w = RelaxationFactor::optimal(&mdp);
        let q = q_value_iteration(&mdp, w, 1e-10, DEFAULT_MAX_ITER).unwrap().solution;
        let vpi = evaluate_policy(&mdp, &greedy_policy(&q));
        let v = v_star(&mdp);
        for i in 0..10 {
            assert!((vpi[i] - v[i]).abs() <= 1e-6);
        }
    }

    #[test]
    fn max_abs_diff_cases() {
        let x = ValueFunction::from_vec(vec![1.0, 2.0]).unwrap();
        let y = ValueFunction::from_vec(vec![0.0, 5.0]).unwrap();
        assert_eq!(max_abs_diff(&x, &x).unwrap(), 0.0);
        assert_eq!(max_abs_diff(&x, &y).unwrap(), 3.0);
    }

    #[test]
    fn optimal_sets_include_ties() {
        let q = QTable::from_vec(2, 3, vec![1.0, 1.0 - 1e-12, 0.0, -1.0, 0.0, 0.5]).unwrap();
        assert_eq!(optimal_action_sets(&q, 1e-9), vec![vec![0, 1], vec![2]]);
    }

    proptest! {
        #[test]
        fn max_abs_diff_matches_scan(xs in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..40)) {
            let (a, b): (Vec<f64>, Vec<f64>) = xs.into_iter().unzip();
            let mut brute = 0.0f64;
            for k in 0..a.len() {
                let d = (a[k] - b[k]).abs();
                if d > brute { brute = d; }
            }
            let x = ValueFunction::from_vec(a).unwrap();
            let y = ValueFunction::from_vec(b).unwrap();
            prop_assert_eq!(max_abs_diff(&x, &y).unwrap(), brute);
        }

        #[test]
        fn max_is_nonexpansive(xs in proptest::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 1..30)) {
            let (a, b): (Vec<f64>, Vec<f64>) = xs.into_iter().unzip();
            let lhs = (row_max(&a) - row_max(&b)).abs();
            prop_assert!(lhs <= sup_distance(&a, &b));
        }

        #[test]
        fn contraction_factor_decreases_in_w(discount in 0.0f64..0.999, u in 0.0f64..1.0, v in 0.0f64..1.0) {
            let mdp = Mdp::new_validated(1, 1, discount, vec![1.0], vec![0.0]).unwrap();
            let ws = w_star(&mdp);
            let (lo, hi) = if u < v { (u, v) } else { (v, u) };
            let w1 = RelaxationFactor::new(1.0 + lo * (ws - 1.0)).unwrap();
            let w2 = RelaxationFactor::new(1.0 + hi * (ws - 1.0)).unwrap();
            prop_assert!(w2.contraction_factor(discount) <= w1.contraction_factor(discount) + 1e-15);
            prop_assert!(w1.contraction_factor(discount) <= discount + 1e-15);
        }
    }
}
