//! Projected descent for smooth convex duals.
//!
//! The feasible sets that arise from the bandit and MDP duals are boxes
//! (`κ ≥ 0`) intersected with half-spaces on the conjugate arguments. Every
//! such half-space contains the baseline coordinate λ with a negative
//! coefficient (`−1/η`), so feasibility can be restored in one pass by moving
//! λ alone. The line search treats any evaluation failure as a rejected step,
//! which keeps iterates strictly inside open conjugate domains.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::divergence::DomainError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("start point violates the feasible set")]
    InfeasibleStart,
    #[error("objective is not finite at the start point: {0}")]
    NonFiniteObjective(DomainError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("finite-difference stencil leaves the objective domain at coordinate {0}")]
    StencilInfeasible(usize),
    #[error("solver did not converge: {0:?}")]
    NotConverged(SolverReport),
}

/// Value, gradient and (optionally) Hessian at a point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Option<DMatrix<f64>>,
}

pub trait Objective {
    fn dim(&self) -> usize;

    /// Evaluate at `x`. Errors mean `x` lies outside the objective's domain.
    fn evaluate(&self, x: &[f64], with_hessian: bool) -> Result<Evaluation, DomainError>;
}

/// Adapts a closure returning `(value, gradient)` into an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    func: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    pub fn new(dim: usize, func: F) -> Self {
        Self { dim, func }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &[f64], _with_hessian: bool) -> Result<Evaluation, DomainError> {
        let (value, gradient) = (self.func)(x);
        if !value.is_finite() {
            return Err(DomainError::NonFinite(value));
        }
        Ok(Evaluation {
            value,
            gradient,
            hessian: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AtMost,
    AtLeast,
}

/// `Σ coeffs·x + offset ≤ limit` (or `≥`).
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub coeffs: Vec<(usize, f64)>,
    pub offset: f64,
    pub direction: Direction,
    pub limit: f64,
}

impl Halfspace {
    pub fn affine_value(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, c)| c * x[i]).sum::<f64>() + self.offset
    }

    pub fn is_satisfied(&self, x: &[f64]) -> bool {
        let v = self.affine_value(x);
        match self.direction {
            Direction::AtMost => v <= self.limit,
            Direction::AtLeast => v >= self.limit,
        }
    }

    fn coefficient(&self, index: usize) -> f64 {
        self.coeffs
            .iter()
            .filter(|&&(i, _)| i == index)
            .map(|&(_, c)| c)
            .sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeasibleSet {
    pub nonneg: Vec<usize>,
    pub halfspaces: Vec<Halfspace>,
    /// Coordinate used to repair half-space violations.
    pub shift: Option<usize>,
}

impl FeasibleSet {
    pub fn unconstrained() -> Self {
        Self::default()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.nonneg.iter().all(|&i| x[i] >= 0.0) && self.halfspaces.iter().all(|h| h.is_satisfied(x))
    }
}

/// Clip the non-negative coordinates, then move the shift coordinate just far
/// enough that every half-space holds.
pub fn project_feasible(point: &[f64], set: &FeasibleSet) -> Vec<f64> {
    let mut x = point.to_vec();
    for &i in &set.nonneg {
        if x[i] < 0.0 {
            x[i] = 0.0;
        }
    }
    let Some(j) = set.shift else {
        return x;
    };
    // admissible interval for the shift increment
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for h in &set.halfspaces {
        let c = h.coefficient(j);
        if c == 0.0 {
            continue;
        }
        let room = h.limit - h.affine_value(&x);
        // c·Δ ≤ room  (AtMost)   or   c·Δ ≥ room  (AtLeast)
        let bound = room / c;
        let upper_side = (h.direction == Direction::AtMost) == (c > 0.0);
        if upper_side {
            hi = hi.min(bound);
        } else {
            lo = lo.max(bound);
        }
    }
    let delta = if lo > 0.0 {
        lo
    } else if hi < 0.0 {
        hi.max(lo)
    } else {
        0.0
    };
    if delta != 0.0 {
        let base = x[j];
        let mut candidate = base + delta;
        // absorb rounding in the affine recomputation
        let nudge = delta.signum() * 4.0 * f64::EPSILON * base.abs().max(delta.abs()).max(1.0);
        for _ in 0..8 {
            x[j] = candidate;
            if set.halfspaces.iter().all(|h| h.is_satisfied(&x)) {
                break;
            }
            candidate += nudge;
        }
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub grad_tol: f64,
    pub max_iter: usize,
    pub initial_step: f64,
    pub armijo: f64,
    pub shrink: f64,
    /// Use Newton directions when the objective supplies a Hessian.
    pub newton: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iter: 10_000,
            initial_step: 1.0,
            armijo: 1e-4,
            shrink: 0.5,
            newton: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    pub final_gradient_norm: f64,
    pub converged: bool,
    pub objective_value: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A constraint written as `normal·x ≤ limit`.
struct Row {
    normal: Vec<f64>,
    limit: f64,
}

impl Row {
    fn room(&self, x: &[f64]) -> f64 {
        self.limit - dot(&self.normal, x)
    }
}

fn constraint_rows(set: &FeasibleSet, n: usize) -> Vec<Row> {
    let mut rows = Vec::with_capacity(set.nonneg.len() + set.halfspaces.len());
    for &i in &set.nonneg {
        let mut normal = vec![0.0; n];
        normal[i] = -1.0;
        rows.push(Row { normal, limit: 0.0 });
    }
    for h in &set.halfspaces {
        let sign = match h.direction {
            Direction::AtMost => 1.0,
            Direction::AtLeast => -1.0,
        };
        let mut normal = vec![0.0; n];
        for &(i, c) in &h.coeffs {
            normal[i] += sign * c;
        }
        rows.push(Row {
            normal,
            limit: sign * (h.limit - h.offset),
        });
    }
    rows
}

fn is_active(row: &Row, x: &[f64]) -> bool {
    let scale = row.limit.abs().max(norm(&row.normal) * norm(x)).max(1.0);
    row.room(x) <= 1e-10 * scale
}

/// Gradient with the components along active constraint normals removed,
/// using non-negative multipliers only. Returns the residual and the indices
/// of the constraints kept in the active set.
fn constrained_residual(grad: &[f64], rows: &[Row], candidates: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let mut active = candidates.to_vec();
    loop {
        if active.is_empty() {
            return (grad.to_vec(), active);
        }
        let Some(mu) = multipliers(grad, rows, &active) else {
            return (grad.to_vec(), Vec::new());
        };
        let (worst, &most_negative) = mu
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty active set");
        if most_negative < 0.0 {
            active.remove(worst);
            continue;
        }
        let mut residual = grad.to_vec();
        for (r, &j) in active.iter().enumerate() {
            for (ri, ni) in residual.iter_mut().zip(&rows[j].normal) {
                *ri += mu[r] * ni;
            }
        }
        return (residual, active);
    }
}

/// Orthonormal basis of the directions orthogonal to every normal in `set`.
fn null_space(rows: &[Row], set: &[usize], n: usize) -> DMatrix<f64> {
    if set.is_empty() {
        return DMatrix::identity(n, n);
    }
    let mut gram = DMatrix::zeros(n, n);
    for &j in set {
        let v = DVector::from_column_slice(&rows[j].normal);
        gram += &v * v.transpose();
    }
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() <= 1e-10 * top).collect();
    DMatrix::from_fn(n, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])])
}

/// Newton step with the constraints in `set` held as equalities, computed in
/// their null space. Curvature along the held normals (often huge next to a
/// domain boundary) drops out exactly instead of swamping the solve.
fn newton_direction(hessian: &DMatrix<f64>, grad: &[f64], rows: &[Row], set: &[usize]) -> Option<Vec<f64>> {
    let z = null_space(rows, set, grad.len());
    if z.ncols() == 0 {
        return None;
    }
    let g = DVector::from_column_slice(grad);
    let reduced_grad = z.transpose() * &g;
    let reduced = z.transpose() * hessian * &z;
    let scale = reduced.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut mu = 0.0;
    for _ in 0..10 {
        let mut m = reduced.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += mu;
        }
        if let Some(chol) = m.cholesky() {
            let d = &z * chol.solve(&(-&reduced_grad));
            if d.iter().all(|v| v.is_finite()) && d.dot(&g) < 0.0 {
                return Some(d.iter().copied().collect());
            }
        }
        mu = if mu == 0.0 { 1e-14 * scale } else { mu * 100.0 };
    }
    None
}

/// Steepest descent restricted to the null space of the given normals.
fn projected_descent(grad: &[f64], rows: &[Row], set: &[usize]) -> Vec<f64> {
    let mut d: Vec<f64> = grad.iter().map(|g| -g).collect();
    if let Some(mu) = multipliers(grad, rows, set) {
        for (r, &j) in set.iter().enumerate() {
            for (di, ni) in d.iter_mut().zip(&rows[j].normal) {
                *di -= mu[r] * ni;
            }
        }
    }
    d
}

/// Least-squares multipliers `μ` with `grad + Σ μ n ≈ 0` over `set`.
fn multipliers(grad: &[f64], rows: &[Row], set: &[usize]) -> Option<DVector<f64>> {
    if set.is_empty() {
        return None;
    }
    let k = set.len();
    let gram = DMatrix::from_fn(k, k, |r, c| dot(&rows[set[r]].normal, &rows[set[c]].normal));
    let rhs = DVector::from_iterator(k, set.iter().map(|&j| -dot(&rows[j].normal, grad)));
    gram.svd(true, true).solve(&rhs, 1e-12).ok()
}

fn most_negative_multiplier(grad: &[f64], rows: &[Row], set: &[usize]) -> Option<usize> {
    let mu = multipliers(grad, rows, set)?;
    let (r, &value) = mu.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    (value < 0.0).then_some(set[r])
}

pub const STALL_STEPS: usize = 25;

/// Minimize a smooth convex objective over `feasible` starting from `start`.
///
/// Active-set projected descent: constraints that hold with equality are kept
/// in a working set, multipliers are estimated by least squares (dropping
/// negative ones), and the step is either a Newton step on the working
/// subspace or the residual gradient. Step lengths are capped by a ratio test
/// against inactive constraints and then backtracked (Armijo); evaluation
/// failures count as rejected steps.
///
/// `final_gradient_norm` is the norm of the gradient after subtracting the
/// multiplier combination of active constraint normals, which is zero exactly
/// at a KKT point. `converged` is false when the iteration budget ran out or
/// the line search failed first. A run that keeps accepting descent steps
/// without lowering the objective has reached float resolution; it stops
/// after [`STALL_STEPS`] such steps and counts as converged, with the residual
/// reported as is. This happens next to kinks where the gradient is only
/// Hölder continuous (e.g. the profiled conjugate for large α), so the
/// residual cannot be driven below `grad_tol` in floating point.
pub fn minimize_convex<O: Objective + ?Sized>(
    objective: &O,
    feasible: &FeasibleSet,
    start: &[f64],
    options: &SolverOptions,
) -> Result<(Vec<f64>, SolverReport), SolverError> {
    let n = objective.dim();
    if start.len() != n {
        return Err(SolverError::Dimension {
            expected: n,
            got: start.len(),
        });
    }
    if !feasible.contains(start) {
        return Err(SolverError::InfeasibleStart);
    }
    let rows = constraint_rows(feasible, n);
    let mut x = start.to_vec();
    let mut eval = objective
        .evaluate(&x, options.newton)
        .map_err(SolverError::NonFiniteObjective)?;
    if !eval.value.is_finite() {
        return Err(SolverError::NonFiniteObjective(DomainError::NonFinite(eval.value)));
    }
    let working = |x: &[f64]| -> Vec<usize> { (0..rows.len()).filter(|&j| is_active(&rows[j], x)).collect() };
    let (mut residual, mut active) = constrained_residual(&eval.gradient, &rows, &working(&x));
    let mut residual_norm = norm(&residual);
    let mut step_hint = options.initial_step;
    let mut iterations = 0;
    let mut flat_steps = 0;

    while residual_norm > options.grad_tol && iterations < options.max_iter && flat_steps < STALL_STEPS {
        iterations += 1;
        let boundary = working(&x);
        let step_direction = |set: &[usize]| -> (Vec<f64>, bool) {
            match eval.hessian.as_ref().and_then(|h| newton_direction(h, &eval.gradient, &rows, set)) {
                Some(d) => (d, true),
                None => (projected_descent(&eval.gradient, &rows, set), false),
            }
        };
        let blocked = |d: &[f64], set: &[usize]| {
            boundary
                .iter()
                .any(|j| !set.contains(j) && dot(&rows[*j].normal, d) > 0.0)
        };
        let (mut direction, mut is_newton) = step_direction(&active);
        if blocked(&direction, &active) {
            // release one constraint at a time: the most negative multiplier
            // of the full boundary set
            let mut set = boundary.clone();
            if let Some(worst) = most_negative_multiplier(&eval.gradient, &rows, &boundary) {
                set.retain(|&j| j != worst);
            }
            (direction, is_newton) = step_direction(&set);
            if blocked(&direction, &set) {
                set = boundary.clone();
                (direction, is_newton) = step_direction(&set);
            }
            active = set;
        }
        let search = |direction: &[f64], set: &[usize], is_newton: bool| {
            if !(dot(&eval.gradient, direction) < 0.0) {
                return None;
            }
            // longest step keeping every constraint outside the working set
            let mut t_max = f64::INFINITY;
            for (j, row) in rows.iter().enumerate() {
                if set.contains(&j) {
                    continue;
                }
                let rate = dot(&row.normal, direction);
                if rate > 0.0 {
                    t_max = t_max.min(row.room(&x).max(0.0) / rate);
                }
            }
            let mut t = if is_newton { options.initial_step } else { step_hint };
            t = t.min(t_max);
            while t > 1e-20 {
                let trial: Vec<f64> = x.iter().zip(direction).map(|(xi, di)| xi + t * di).collect();
                let trial = project_feasible(&trial, feasible);
                if feasible.contains(&trial) {
                    if let Ok(e) = objective.evaluate(&trial, options.newton) {
                        let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
                        let decrease = options.armijo * dot(&eval.gradient, &moved);
                        if e.value.is_finite() && e.value <= eval.value + decrease {
                            return Some((trial, e, t));
                        }
                    }
                }
                t *= options.shrink;
            }
            None
        };
        let mut accepted = search(&direction, &active, is_newton);
        if accepted.is_none() && is_newton {
            // flat directions of the conjugate can make the Newton step useless
            direction = projected_descent(&eval.gradient, &rows, &active);
            is_newton = false;
            accepted = search(&direction, &active, false);
        }
        let Some((trial, e, t)) = accepted else {
            break;
        };
        if !is_newton {
            step_hint = (2.0 * t).min(1e12);
        }
        flat_steps = if e.value < eval.value { 0 } else { flat_steps + 1 };
        x = trial;
        eval = e;
        (residual, active) = constrained_residual(&eval.gradient, &rows, &working(&x));
        residual_norm = norm(&residual);
    }

    Ok((
        x,
        SolverReport {
            iterations,
            final_gradient_norm: residual_norm,
            converged: residual_norm <= options.grad_tol || flat_steps >= STALL_STEPS,
            objective_value: eval.value,
        },
    ))
}

/// Value, derivative and second derivative of a one-dimensional objective.
pub type ScalarEvaluation = (f64, f64, f64);

/// Minimize a smooth convex function of one variable on `(lower, upper]`.
///
/// The derivative must be `≤ 0` just above `lower` and `≥ 0` at `upper`.
/// `lower` may be an open domain end where evaluation fails; any failed
/// evaluation is treated as lying below the minimizer. Newton steps are taken
/// when they stay inside the current bracket, bisection otherwise, so the
/// minimizer can sit arbitrarily close to an open end without a slack margin.
///
/// Stops when `|derivative| ≤ grad_tol`, or when the bracket has shrunk to
/// neighbouring floating-point numbers (the residual is then at the
/// resolution of the problem, and `converged` is still set).
pub fn minimize_scalar_convex<F>(
    objective: F,
    lower: f64,
    upper: f64,
    options: &SolverOptions,
) -> Result<(f64, SolverReport), SolverError>
where
    F: Fn(f64) -> Result<ScalarEvaluation, DomainError>,
{
    let (mut value, mut slope, mut curvature) = objective(upper).map_err(SolverError::NonFiniteObjective)?;
    if !value.is_finite() {
        return Err(SolverError::NonFiniteObjective(DomainError::NonFinite(value)));
    }
    let (mut lo, mut hi) = (lower.min(upper), upper);
    let mut x = upper;
    let mut iterations = 0;
    let mut collapsed = false;
    // width two iterations ago; Newton must at least halve it
    let mut widths = [f64::INFINITY; 2];

    while slope.abs() > options.grad_tol && iterations < options.max_iter {
        iterations += 1;
        if slope > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            collapsed = true;
            break;
        }
        let slow = hi - lo > 0.5 * widths[0];
        widths = [widths[1], hi - lo];
        let newton = x - slope / curvature;
        let use_newton = options.newton && !slow && curvature > 0.0 && newton > lo && newton < hi;
        let mut candidate = if use_newton {
            newton
        } else {
            mid
        };
        loop {
            match objective(candidate) {
                Ok((v, s, c)) if v.is_finite() && s.is_finite() => {
                    (value, slope, curvature) = (v, s, c);
                    x = candidate;
                    break;
                }
                _ => {
                    lo = candidate;
                    candidate = lo + 0.5 * (hi - lo);
                    if candidate <= lo || candidate >= hi {
                        collapsed = true;
                        break;
                    }
                }
            }
        }
        if collapsed {
            break;
        }
    }

    let converged = slope.abs() <= options.grad_tol || collapsed;
    Ok((
        x,
        SolverReport {
            iterations,
            final_gradient_norm: slope.abs(),
            converged,
            objective_value: value,
        },
    ))
}

/// Largest relative discrepancy between the analytic gradient and central
/// differences. Each coordinate is scaled by `max(1, |analytic|, |numeric|)`.
pub fn check_gradient<O: Objective + ?Sized>(
    objective: &O,
    point: &[f64],
    step: f64,
) -> Result<f64, SolverError> {
    let analytic = objective
        .evaluate(point, false)
        .map_err(SolverError::NonFiniteObjective)?
        .gradient;
    let mut worst: f64 = 0.0;
    let mut probe = point.to_vec();
    for i in 0..point.len() {
        probe[i] = point[i] + step;
        let up = objective
            .evaluate(&probe, false)
            .map_err(|_| SolverError::StencilInfeasible(i))?
            .value;
        probe[i] = point[i] - step;
        let down = objective
            .evaluate(&probe, false)
            .map_err(|_| SolverError::StencilInfeasible(i))?
            .value;
        probe[i] = point[i];
        let numeric = (up - down) / (2.0 * step);
        let scale = analytic[i].abs().max(numeric.abs()).max(1.0);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn upper(coeffs: Vec<(usize, f64)>, offset: f64, limit: f64) -> Halfspace {
        Halfspace {
            coeffs,
            offset,
            direction: Direction::AtMost,
            limit,
        }
    }

    #[test]
    fn minimizes_with_upper_bound() {
        let obj = FnObjective::new(1, |x: &[f64]| ((x[0] - 2.0).powi(2), vec![2.0 * (x[0] - 2.0)]));
        let set = FeasibleSet {
            nonneg: vec![],
            halfspaces: vec![upper(vec![(0, 1.0)], 0.0, 1.0)],
            shift: Some(0),
        };
        let (x, report) = minimize_convex(&obj, &set, &[0.0], &SolverOptions::default()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12, "{x:?}");
        assert!(report.objective_value <= 4.0);
    }

    #[test]
    fn minimizes_unconstrained_quadratic() {
        let obj = FnObjective::new(1, |x: &[f64]| (x[0] * x[0], vec![2.0 * x[0]]));
        let (x, report) =
            minimize_convex(&obj, &FeasibleSet::unconstrained(), &[3.0], &SolverOptions::default())
                .unwrap();
        assert!(x[0].abs() < 1e-8);
        assert!(report.converged);
    }

    #[test]
    fn nonnegativity_is_respected() {
        // minimize (x+1)^2 + (y-2)^2 with x >= 0
        let obj = FnObjective::new(2, |x: &[f64]| {
            (
                (x[0] + 1.0).powi(2) + (x[1] - 2.0).powi(2),
                vec![2.0 * (x[0] + 1.0), 2.0 * (x[1] - 2.0)],
            )
        });
        let set = FeasibleSet {
            nonneg: vec![0],
            ..Default::default()
        };
        let (x, report) = minimize_convex(&obj, &set, &[1.0, 0.0], &SolverOptions::default()).unwrap();
        assert_eq!(x[0], 0.0);
        assert!((x[1] - 2.0).abs() < 1e-8);
        assert!(report.converged);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let obj = FnObjective::new(1, |x: &[f64]| (x[0] * x[0], vec![2.0 * x[0]]));
        let set = FeasibleSet {
            nonneg: vec![0],
            ..Default::default()
        };
        assert_eq!(
            minimize_convex(&obj, &set, &[-1.0], &SolverOptions::default()).unwrap_err(),
            SolverError::InfeasibleStart
        );
    }

    #[test]
    fn non_finite_start_is_rejected() {
        let obj = FnObjective::new(1, |x: &[f64]| (-x[0].ln(), vec![-1.0 / x[0]]));
        let err = minimize_convex(&obj, &FeasibleSet::unconstrained(), &[-1.0], &SolverOptions::default());
        assert!(matches!(err, Err(SolverError::NonFiniteObjective(_))));
    }

    #[test]
    fn line_search_backs_off_from_open_boundary() {
        // minimize -x - ln(1 - x): domain x < 1, optimum x = 0
        let obj = FnObjective::new(1, |x: &[f64]| {
            let v = -x[0] - (1.0 - x[0]).ln();
            (if x[0] < 1.0 { v } else { f64::NAN }, vec![-1.0 + 1.0 / (1.0 - x[0])])
        });
        let (x, report) =
            minimize_convex(&obj, &FeasibleSet::unconstrained(), &[0.9], &SolverOptions::default())
                .unwrap();
        assert!(x[0].abs() < 1e-8 && report.converged);
    }

    #[test]
    fn descent_is_monotone_and_deterministic() {
        let obj = FnObjective::new(2, |x: &[f64]| {
            (
                10.0 * x[0] * x[0] + x[1] * x[1] + x[0] * x[1],
                vec![20.0 * x[0] + x[1], 2.0 * x[1] + x[0]],
            )
        });
        let opts = SolverOptions::default();
        let a = minimize_convex(&obj, &FeasibleSet::unconstrained(), &[1.0, -3.0], &opts).unwrap();
        let b = minimize_convex(&obj, &FeasibleSet::unconstrained(), &[1.0, -3.0], &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.1.objective_value <= 10.0 + 9.0 - 3.0);
        let mut prev = f64::INFINITY;
        for budget in 1..20 {
            let o = SolverOptions { max_iter: budget, ..opts };
            let (_, r) = minimize_convex(&obj, &FeasibleSet::unconstrained(), &[1.0, -3.0], &o).unwrap();
            assert!(r.objective_value <= prev);
            prev = r.objective_value;
        }
    }

    #[test]
    fn projection_clips_kappa() {
        let set = FeasibleSet {
            nonneg: vec![1],
            ..Default::default()
        };
        assert_eq!(project_feasible(&[0.5, -0.3], &set), vec![0.5, 0.0]);
    }

    #[test]
    fn projection_is_identity_on_feasible_points() {
        let set = FeasibleSet {
            nonneg: vec![1],
            halfspaces: vec![upper(vec![(0, -1.0), (1, 1.0)], 0.2, 1.0)],
            shift: Some(0),
        };
        let x = [0.0, 0.5];
        assert!(set.contains(&x));
        assert_eq!(project_feasible(&x, &set), x.to_vec());
    }

    #[test]
    fn projection_repairs_conjugate_argument_through_shift() {
        // y = (Q - λ + κ)/η with η = 2, Q = 3; domain y ≤ 1 − 1e-8
        let eta = 2.0;
        let slack = 1e-8;
        let set = FeasibleSet {
            nonneg: vec![1],
            halfspaces: vec![
                upper(vec![(0, -1.0 / eta), (1, 1.0 / eta)], 3.0 / eta, 1.0 - slack),
                upper(vec![(0, -1.0 / eta)], 0.5 / eta, 1.0 - slack),
            ],
            shift: Some(0),
        };
        // λ chosen so the first argument sits at bound + 0.1
        let lambda = 3.0 - eta * 1.1;
        let x = [lambda, 0.0];
        assert!((set.halfspaces[0].affine_value(&x) - 1.1).abs() < 1e-12);
        let p = project_feasible(&x, &set);
        assert!(p[0] > lambda);
        assert!(set.contains(&p));
        assert!(set.halfspaces[0].affine_value(&p) <= 1.0 - slack);
        assert_eq!(project_feasible(&p, &set), p);
    }

    #[test]
    fn gradient_check_on_quadratic() {
        let obj = FnObjective::new(3, |x: &[f64]| {
            (
                x[0] * x[0] + 3.0 * x[1] * x[2] - x[2],
                vec![2.0 * x[0], 3.0 * x[2], 3.0 * x[1] - 1.0],
            )
        });
        let err = check_gradient(&obj, &[0.3, -1.2, 4.0], 1e-4).unwrap();
        assert!(err <= 1e-9, "{err}");
    }

    #[test]
    fn gradient_check_reports_infeasible_stencil() {
        let obj = FnObjective::new(1, |x: &[f64]| (-x[0].ln(), vec![-1.0 / x[0]]));
        assert_eq!(
            check_gradient(&obj, &[1e-6], 1e-3).unwrap_err(),
            SolverError::StencilInfeasible(0)
        );
    }

    struct Quadratic {
        center: Vec<f64>,
    }

    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.center.len()
        }

        fn evaluate(&self, x: &[f64], with_hessian: bool) -> Result<Evaluation, DomainError> {
            let diff: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
            Ok(Evaluation {
                value: dot(&diff, &diff),
                gradient: diff.iter().map(|d| 2.0 * d).collect(),
                hessian: with_hessian.then(|| DMatrix::identity(x.len(), x.len()) * 2.0),
            })
        }
    }

    #[test]
    fn reaches_kkt_point_on_slanted_halfspace() {
        // minimize |x - (2, 2)|^2 s.t. x + y <= 1: optimum (0.5, 0.5)
        let set = FeasibleSet {
            nonneg: vec![],
            halfspaces: vec![upper(vec![(0, 1.0), (1, 1.0)], 0.0, 1.0)],
            shift: Some(1),
        };
        let newton = Quadratic { center: vec![2.0, 2.0] };
        let gradient_only = FnObjective::new(2, |x: &[f64]| {
            (
                (x[0] - 2.0).powi(2) + (x[1] - 2.0).powi(2),
                vec![2.0 * (x[0] - 2.0), 2.0 * (x[1] - 2.0)],
            )
        });
        let objectives: [&dyn Objective; 2] = [&newton, &gradient_only];
        for obj in objectives {
            let (x, report) = minimize_convex(obj, &set, &[-1.0, 0.0], &SolverOptions::default()).unwrap();
            assert!(report.converged, "{report:?}");
            assert!((x[0] - 0.5).abs() < 1e-8 && (x[1] - 0.5).abs() < 1e-8, "{x:?}");
        }
    }

    #[test]
    fn releases_constraint_with_wrong_sign_multiplier() {
        // start on the boundary x >= 0 while the optimum is interior
        let set = FeasibleSet {
            nonneg: vec![0],
            ..Default::default()
        };
        let obj = Quadratic { center: vec![1.5, -1.0] };
        let (x, report) = minimize_convex(&obj, &set, &[0.0, 0.0], &SolverOptions::default()).unwrap();
        assert!(report.converged);
        assert!((x[0] - 1.5).abs() < 1e-10 && (x[1] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn scalar_solver_finds_minimizer_next_to_open_end() {
        // x - 1e-12 ln x on (0, 1]: minimizer 1e-12, undefined at 0
        let f = |x: f64| {
            if x <= 0.0 {
                return Err(DomainError::NonPositiveArgument(x));
            }
            Ok((x - 1e-12 * x.ln(), 1.0 - 1e-12 / x, 1e-12 / (x * x)))
        };
        let (x, report) = minimize_scalar_convex(f, 0.0, 1.0, &SolverOptions::default()).unwrap();
        assert!(report.converged);
        assert!((x - 1e-12).abs() < 1e-20, "{x}");
    }

    #[test]
    fn scalar_solver_bisects_without_curvature() {
        let f = |x: f64| Ok(((x - 0.3).powi(2), 2.0 * (x - 0.3), 0.0));
        let options = SolverOptions {
            newton: false,
            ..Default::default()
        };
        let (x, report) = minimize_scalar_convex(f, -4.0, 4.0, &options).unwrap();
        assert!(report.converged && (x - 0.3).abs() < 1e-8);
    }
}
