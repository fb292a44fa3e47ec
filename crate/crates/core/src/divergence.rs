//! α-divergence generators and their convex conjugates.
//!
//! The family is generated by
//!
//! ```text
//! f_α(x)      = ((x^α − 1) − α(x − 1)) / (α(α − 1))
//! f_α'(x)     = (x^(α−1) − 1) / (α − 1)
//! f_α*(y)     = (1 + (α − 1)y)^(α/(α−1)) / α − 1/α
//! (f_α*)'(y)  = (1 + (α − 1)y)^(1/(α−1))          for y(1 − α) < 1
//! ```
//!
//! with the KL (α = 1) and reverse-KL (α = 0) members evaluated through their
//! logarithmic limits. Everything here is a pure function of its arguments.
//!
//! The [`Divergence`] trait is the generic bundle `(f, f', f*, (f*)', dom f*)`
//! consumed by the bandit and MDP solvers; [`AlphaDivergence`] is the only
//! implementation shipped.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Distance from α = 1 (or α = 0) below which the logarithmic limit is used.
pub const LIMIT_TOLERANCE: f64 = 1e-9;

/// Relative slack applied to a finite conjugate-domain bound.
pub const DEFAULT_RELATIVE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("f is only defined for x > 0, got x = {0}")]
    NonPositiveArgument(f64),
    #[error("conjugate argument y = {y} lies outside {domain}")]
    OutsideConjugateDomain { y: f64, domain: ConjugateDomain },
    #[error("non-finite value while evaluating at {0}")]
    NonFinite(f64),
    #[error("conjugate derivative overflows at y = {0}")]
    Overflow(f64),
    #[error("alpha must be finite, got {0}")]
    InvalidAlpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    AllReals,
    /// `y < bound`
    UpperBounded,
    /// `y > bound`
    LowerBounded,
}

/// The open half-line (or real line) on which `f*` is defined, together with
/// a numerical margin `slack` used when the solver needs a closed set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugateDomain {
    pub kind: DomainKind,
    pub bound: f64,
    pub slack: f64,
}

impl ConjugateDomain {
    pub fn all_reals() -> Self {
        Self {
            kind: DomainKind::AllReals,
            bound: f64::NAN,
            slack: 0.0,
        }
    }

    /// Half-line with the default slack `1e-8 · max(1, |bound|)`.
    pub fn half_line(kind: DomainKind, bound: f64) -> Self {
        Self {
            kind,
            bound,
            slack: DEFAULT_RELATIVE_SLACK * bound.abs().max(1.0),
        }
    }

    pub fn with_slack(self, slack: f64) -> Self {
        Self {
            slack: slack.max(0.0),
            ..self
        }
    }

    /// Membership in the open domain (slack ignored).
    pub fn contains(&self, y: f64) -> bool {
        if !y.is_finite() {
            return false;
        }
        match self.kind {
            DomainKind::AllReals => true,
            DomainKind::UpperBounded => y < self.bound,
            DomainKind::LowerBounded => y > self.bound,
        }
    }

    /// Membership in the closed domain shrunk by `slack`.
    pub fn contains_with_slack(&self, y: f64) -> bool {
        if !y.is_finite() {
            return false;
        }
        match self.kind {
            DomainKind::AllReals => true,
            DomainKind::UpperBounded => y <= self.bound - self.slack,
            DomainKind::LowerBounded => y >= self.bound + self.slack,
        }
    }

    /// The closest point of the slack-shrunk domain.
    pub fn clip(&self, y: f64) -> f64 {
        match self.kind {
            DomainKind::AllReals => y,
            DomainKind::UpperBounded => y.min(self.bound - self.slack),
            DomainKind::LowerBounded => y.max(self.bound + self.slack),
        }
    }
}

impl std::fmt::Display for ConjugateDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            DomainKind::AllReals => write!(f, "y ∈ ℝ"),
            DomainKind::UpperBounded => write!(f, "y < {}", self.bound),
            DomainKind::LowerBounded => write!(f, "y > {}", self.bound),
        }
    }
}

/// A convex generator `f` with `f(1) = 0`, its conjugate and their derivatives.
pub trait Divergence {
    fn f(&self, x: f64) -> Result<f64, DomainError>;
    fn f_prime(&self, x: f64) -> Result<f64, DomainError>;
    fn conjugate(&self, y: f64) -> Result<f64, DomainError>;
    fn conjugate_prime(&self, y: f64) -> Result<f64, DomainError>;
    fn conjugate_domain(&self) -> ConjugateDomain;

    /// `f(0)` for generators whose derivative is finite at zero. These are the
    /// cases where the non-negativity multipliers can become active.
    fn value_at_zero(&self) -> Option<f64> {
        None
    }

    /// Second derivative of `f*`; used for Newton steps in the dual solvers.
    fn conjugate_curvature(&self, y: f64) -> Result<f64, DomainError> {
        let h = 1e-6 * y.abs().max(1.0);
        let up = self.conjugate_prime(y + h)?;
        let down = self.conjugate_prime(y - h)?;
        Ok((up - down) / (2.0 * h))
    }

    /// Conjugate of `f` restricted to `x ≥ 0`, i.e. `sup_{x ≥ 0} xy − f(x)`.
    ///
    /// Equal to `f*` inside the domain. When `f'(0)` is finite the domain is
    /// bounded below and the supremum below the bound is attained at `x = 0`,
    /// giving `−f(0)` with zero slope. Returns `(value, slope, curvature)`.
    fn nonneg_conjugate(&self, y: f64) -> Result<(f64, f64, f64), DomainError> {
        let dom = self.conjugate_domain();
        if dom.kind == DomainKind::LowerBounded && y <= dom.bound {
            if let Some(f0) = self.value_at_zero() {
                return Ok((-f0, 0.0, 0.0));
            }
        }
        Ok((
            self.conjugate(y)?,
            self.conjugate_prime(y)?,
            self.conjugate_curvature(y)?,
        ))
    }

    /// `|f*(y) + f((f*)'(y)) − y (f*)'(y)|`, zero by Fenchel's equality.
    fn fenchel_residual(&self, y: f64) -> Result<f64, DomainError> {
        let x = self.conjugate_prime(y)?;
        Ok((self.conjugate(y)? + self.f(x)? - y * x).abs())
    }
}

/// Conjugate value, slope and curvature of a dual term whose argument must lie
/// in `range_{x ≥ 0} f'`.
///
/// For generators with finite `f'(0)` that range is closed at the lower bound,
/// where the slope vanishes. With `profile_kappa` set, arguments below the
/// bound are lifted onto it, which is the exact minimization over a
/// non-negativity multiplier added to the argument.
pub fn dual_terms<D: Divergence + ?Sized>(
    divergence: &D,
    y: f64,
    profile_kappa: bool,
) -> Result<(f64, f64, f64), DomainError> {
    let dom = divergence.conjugate_domain();
    if dom.kind == DomainKind::LowerBounded && divergence.value_at_zero().is_some() {
        // tolerate the rounding left by κ = η·b − Q + λ
        let floor = dom.bound - 1e-12 * dom.bound.abs().max(1.0);
        if !y.is_finite() || (y < floor && !profile_kappa) {
            return Err(DomainError::OutsideConjugateDomain { y, domain: dom });
        }
        return divergence.nonneg_conjugate(y);
    }
    Ok((
        divergence.conjugate(y)?,
        divergence.conjugate_prime(y)?,
        divergence.conjugate_curvature(y)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Branch {
    Kl,
    ReverseKl,
    Generic,
}

/// The α-function generator `f_α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaDivergence {
    alpha: f64,
}

impl AlphaDivergence {
    pub fn new(alpha: f64) -> Result<Self, DomainError> {
        if alpha.is_finite() {
            Ok(Self { alpha })
        } else {
            Err(DomainError::InvalidAlpha(alpha))
        }
    }

    pub fn kl() -> Self {
        Self { alpha: 1.0 }
    }

    pub fn reverse_kl() -> Self {
        Self { alpha: 0.0 }
    }

    pub fn pearson() -> Self {
        Self { alpha: 2.0 }
    }

    pub fn neyman() -> Self {
        Self { alpha: -1.0 }
    }

    pub fn hellinger() -> Self {
        Self { alpha: 0.5 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Whether the non-negativity multipliers κ can be nonzero (α > 1).
    pub fn has_active_nonnegativity(&self) -> bool {
        self.branch() == Branch::Generic && self.alpha > 1.0
    }

    fn branch(&self) -> Branch {
        if (self.alpha - 1.0).abs() <= LIMIT_TOLERANCE {
            Branch::Kl
        } else if self.alpha.abs() <= LIMIT_TOLERANCE {
            Branch::ReverseKl
        } else {
            Branch::Generic
        }
    }

    fn check_positive(x: f64) -> Result<(), DomainError> {
        if !x.is_finite() {
            Err(DomainError::NonFinite(x))
        } else if x <= 0.0 {
            Err(DomainError::NonPositiveArgument(x))
        } else {
            Ok(())
        }
    }

    /// `(α − 1)y` after checking `1 + (α − 1)y > 0`.
    fn conjugate_base(&self, y: f64) -> Result<f64, DomainError> {
        if !y.is_finite() {
            return Err(DomainError::NonFinite(y));
        }
        let z = (self.alpha - 1.0) * y;
        if 1.0 + z > 0.0 {
            Ok(z)
        } else {
            Err(DomainError::OutsideConjugateDomain {
                y,
                domain: self.conjugate_domain(),
            })
        }
    }
}

fn finite(value: f64, at: f64) -> Result<f64, DomainError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(DomainError::NonFinite(at))
    }
}

/// `x^p − 1` for `x > 0`, accurate near `x = 1`.
fn powm1(x: f64, p: f64) -> f64 {
    let t = p * x.ln();
    if t.abs() < 0.5 {
        t.exp_m1()
    } else {
        x.powf(p) - 1.0
    }
}

/// `(1 + z)^p` for `z > −1`.
fn pow1p(z: f64, p: f64) -> f64 {
    if z.abs() < 0.5 {
        (p * z.ln_1p()).exp()
    } else {
        (1.0 + z).powf(p)
    }
}

/// `(1 + z)^p − 1` for `z > −1`, accurate near `z = 0`.
fn pow1pm1(z: f64, p: f64) -> f64 {
    let t = p * z.ln_1p();
    if t.abs() < 0.5 {
        t.exp_m1()
    } else {
        (1.0 + z).powf(p) - 1.0
    }
}

impl Divergence for AlphaDivergence {
    fn f(&self, x: f64) -> Result<f64, DomainError> {
        Self::check_positive(x)?;
        let a = self.alpha;
        let value = match self.branch() {
            Branch::Kl => x * x.ln() - (x - 1.0),
            Branch::ReverseKl => -x.ln() + (x - 1.0),
            Branch::Generic => (powm1(x, a) - a * (x - 1.0)) / (a * (a - 1.0)),
        };
        finite(value, x)
    }

    fn f_prime(&self, x: f64) -> Result<f64, DomainError> {
        Self::check_positive(x)?;
        let value = match self.branch() {
            Branch::Kl => x.ln(),
            Branch::ReverseKl => 1.0 - 1.0 / x,
            Branch::Generic => powm1(x, self.alpha - 1.0) / (self.alpha - 1.0),
        };
        finite(value, x)
    }

    fn conjugate(&self, y: f64) -> Result<f64, DomainError> {
        let z = self.conjugate_base(y)?;
        let a = self.alpha;
        let value = match self.branch() {
            Branch::Kl => y.exp_m1(),
            Branch::ReverseKl => -(-y).ln_1p(),
            Branch::Generic => pow1pm1(z, a / (a - 1.0)) / a,
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(DomainError::Overflow(y))
        }
    }

    fn conjugate_prime(&self, y: f64) -> Result<f64, DomainError> {
        let z = self.conjugate_base(y)?;
        let value = match self.branch() {
            Branch::Kl => y.exp(),
            Branch::ReverseKl => 1.0 / (1.0 - y),
            Branch::Generic => pow1p(z, 1.0 / (self.alpha - 1.0)),
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(DomainError::Overflow(y))
        }
    }

    fn conjugate_curvature(&self, y: f64) -> Result<f64, DomainError> {
        let z = self.conjugate_base(y)?;
        let value = match self.branch() {
            Branch::Kl => y.exp(),
            Branch::ReverseKl => (1.0 - y).powi(-2),
            Branch::Generic => pow1p(z, 1.0 / (self.alpha - 1.0) - 1.0),
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(DomainError::Overflow(y))
        }
    }

    fn conjugate_domain(&self) -> ConjugateDomain {
        match self.branch() {
            Branch::Kl => ConjugateDomain::all_reals(),
            Branch::ReverseKl => ConjugateDomain::half_line(DomainKind::UpperBounded, 1.0),
            Branch::Generic => {
                let bound = 1.0 / (1.0 - self.alpha);
                let kind = if self.alpha < 1.0 {
                    DomainKind::UpperBounded
                } else {
                    DomainKind::LowerBounded
                };
                ConjugateDomain::half_line(kind, bound)
            }
        }
    }

    fn value_at_zero(&self) -> Option<f64> {
        self.has_active_nonnegativity().then(|| 1.0 / self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn f_value_examples() {
        let pearson = AlphaDivergence::pearson();
        assert!(close(pearson.f(3.0).unwrap(), 2.0, 1e-12));
        let d = AlphaDivergence::new(0.7).unwrap();
        assert_eq!(d.f(1.0).unwrap(), 0.0);
        assert!(close(AlphaDivergence::kl().f(E).unwrap(), 1.0, 1e-12));
    }

    #[test]
    fn f_rejects_non_positive() {
        let d = AlphaDivergence::hellinger();
        assert_eq!(d.f(0.0), Err(DomainError::NonPositiveArgument(0.0)));
        assert_eq!(d.f(-1.0), Err(DomainError::NonPositiveArgument(-1.0)));
        assert!(matches!(d.f(f64::NAN), Err(DomainError::NonFinite(_))));
        assert!(d.f_prime(0.0).is_err());
    }

    #[test]
    fn f_prime_examples() {
        assert!(close(AlphaDivergence::pearson().f_prime(3.0).unwrap(), 2.0, 1e-12));
        assert_eq!(AlphaDivergence::kl().f_prime(1.0).unwrap(), 0.0);
        assert!(close(AlphaDivergence::reverse_kl().f_prime(2.0).unwrap(), 0.5, 1e-12));
    }

    #[test]
    fn conjugate_examples() {
        assert!(close(AlphaDivergence::kl().conjugate(1.0).unwrap(), E - 1.0, 1e-12));
        assert!(close(AlphaDivergence::pearson().conjugate(1.0).unwrap(), 1.5, 1e-12));
        for alpha in [-3.0, -1.0, 0.0, 0.5, 1.0, 2.0, 7.5] {
            let d = AlphaDivergence::new(alpha).unwrap();
            assert_eq!(d.conjugate(0.0).unwrap(), 0.0, "alpha {alpha}");
            assert_eq!(d.conjugate_prime(0.0).unwrap(), 1.0, "alpha {alpha}");
        }
    }

    #[test]
    fn conjugate_prime_examples() {
        assert!(close(AlphaDivergence::kl().conjugate_prime(1.0).unwrap(), E, 1e-12));
        assert!(close(AlphaDivergence::pearson().conjugate_prime(0.5).unwrap(), 1.5, 1e-12));
    }

    #[test]
    fn conjugate_domain_examples() {
        assert_eq!(AlphaDivergence::kl().conjugate_domain().kind, DomainKind::AllReals);
        let rkl = AlphaDivergence::reverse_kl().conjugate_domain();
        assert_eq!((rkl.kind, rkl.bound), (DomainKind::UpperBounded, 1.0));
        let neyman = AlphaDivergence::neyman().conjugate_domain();
        assert_eq!((neyman.kind, neyman.bound), (DomainKind::UpperBounded, 0.5));
        let pearson = AlphaDivergence::pearson().conjugate_domain();
        assert_eq!((pearson.kind, pearson.bound), (DomainKind::LowerBounded, -1.0));
        assert_eq!(pearson.slack, 1e-8);
        let steep = AlphaDivergence::new(1.001).unwrap().conjugate_domain();
        assert!(close(steep.slack, 1e-8 * 1000.0, 1e-9));
    }

    #[test]
    fn evaluation_at_bound_is_domain_error() {
        let rkl = AlphaDivergence::reverse_kl();
        assert!(matches!(
            rkl.conjugate(1.0),
            Err(DomainError::OutsideConjugateDomain { .. })
        ));
        let pearson = AlphaDivergence::pearson();
        assert!(pearson.conjugate_prime(-1.0).is_err());
        assert!(pearson.conjugate_prime(-1.5).is_err());
    }

    #[test]
    fn conjugate_overflow_is_reported() {
        assert_eq!(
            AlphaDivergence::kl().conjugate_prime(1000.0),
            Err(DomainError::Overflow(1000.0))
        );
    }

    #[test]
    fn fenchel_residual_examples() {
        for (alpha, y) in [(1.0, 0.3), (2.0, -0.5), (0.5, 1.0)] {
            let r = AlphaDivergence::new(alpha).unwrap().fenchel_residual(y).unwrap();
            assert!(r <= 1e-10, "alpha {alpha} residual {r}");
        }
    }

    #[test]
    fn nonneg_conjugate_clamps_below_bound() {
        let d = AlphaDivergence::pearson();
        let (v, s, c) = d.nonneg_conjugate(-3.0).unwrap();
        assert_eq!((v, s, c), (-0.5, 0.0, 0.0));
        let (v, s, _) = d.nonneg_conjugate(0.5).unwrap();
        assert!(close(v, d.conjugate(0.5).unwrap(), 0.0));
        assert!(close(s, 1.5, 1e-15));
        // continuous at the bound
        let (v, s, _) = d.nonneg_conjugate(-1.0 + 1e-12).unwrap();
        assert!(close(v, -0.5, 1e-10) && s < 1e-10);
        assert!(AlphaDivergence::kl().value_at_zero().is_none());
    }

    #[test]
    fn limit_branches_match_nearby_generic() {
        for (pole, closed) in [(1.0, AlphaDivergence::kl()), (0.0, AlphaDivergence::reverse_kl())] {
            let near = AlphaDivergence::new(pole + 1e-5).unwrap();
            for x in [0.3, 1.7, 4.0] {
                assert!(close(near.f(x).unwrap(), closed.f(x).unwrap(), 1e-4));
            }
        }
    }

    #[test]
    fn curvature_matches_finite_difference() {
        for alpha in [-1.0, 0.0, 0.5, 1.0, 2.0, 3.0] {
            let d = AlphaDivergence::new(alpha).unwrap();
            for y in [-0.2, 0.0, 0.1] {
                let h = 1e-5;
                let fd = (d.conjugate_prime(y + h).unwrap() - d.conjugate_prime(y - h).unwrap())
                    / (2.0 * h);
                let c = d.conjugate_curvature(y).unwrap();
                assert!((fd - c).abs() <= 1e-6 * c.abs().max(1.0), "alpha {alpha} y {y}");
            }
        }
    }

    fn sample_in_domain(d: &AlphaDivergence, u: f64) -> f64 {
        // u in (0, 1) mapped into the domain intersected with [-4, 4]
        let dom = d.conjugate_domain();
        let (lo, hi) = match dom.kind {
            DomainKind::AllReals => (-4.0, 4.0),
            DomainKind::UpperBounded => (-4.0, dom.bound.min(4.0)),
            DomainKind::LowerBounded => (dom.bound.max(-4.0), 4.0),
        };
        let margin = 1e-3 * (hi - lo);
        lo + margin + u * (hi - lo - 2.0 * margin)
    }

    proptest! {
        #[test]
        fn f_vanishes_at_one(alpha in -10.0f64..10.0) {
            let d = AlphaDivergence::new(alpha).unwrap();
            prop_assert!(d.f(1.0).unwrap().abs() <= 1e-12);
        }

        #[test]
        fn f_is_nonnegative(alpha in -10.0f64..10.0, log_x in -3.0f64..3.0) {
            let d = AlphaDivergence::new(alpha).unwrap();
            prop_assert!(d.f(10f64.powf(log_x)).unwrap() >= -1e-12);
        }

        #[test]
        fn f_is_midpoint_convex(alpha in -4.0f64..4.0, a in 0.01f64..20.0, b in 0.01f64..20.0) {
            let d = AlphaDivergence::new(alpha).unwrap();
            let mid = d.f(0.5 * (a + b)).unwrap();
            prop_assert!(mid <= 0.5 * (d.f(a).unwrap() + d.f(b).unwrap()) + 1e-10);
        }

        #[test]
        fn conjugate_derivative_inverts_f_prime(
            alpha in prop::sample::select(vec![-2.0, -1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 4.0]),
            u in 0.0f64..1.0,
        ) {
            let d = AlphaDivergence::new(alpha).unwrap();
            let y = sample_in_domain(&d, u);
            let back = d.f_prime(d.conjugate_prime(y).unwrap()).unwrap();
            prop_assert!((back - y).abs() <= 1e-8, "alpha {} y {} back {}", alpha, y, back);
        }

        #[test]
        fn derivatives_match_central_differences(
            alpha in prop::sample::select(vec![-2.0, -1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 4.0]),
            x in 0.05f64..10.0,
            u in 0.0f64..1.0,
        ) {
            let d = AlphaDivergence::new(alpha).unwrap();
            let h = 1e-5 * x.abs().max(1.0);
            let fd = (d.f(x + h).unwrap() - d.f(x - h).unwrap()) / (2.0 * h);
            let an = d.f_prime(x).unwrap();
            prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0));

            let y = sample_in_domain(&d, u);
            let dom = d.conjugate_domain();
            let room = if dom.bound.is_finite() { (y - dom.bound).abs() } else { f64::INFINITY };
            let h = 1e-5 * y.abs().max(1.0).min(room);
            if d.conjugate_domain().contains(y - h) && d.conjugate_domain().contains(y + h) {
                let fd = (d.conjugate(y + h).unwrap() - d.conjugate(y - h).unwrap()) / (2.0 * h);
                let an = d.conjugate_prime(y).unwrap();
                prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0));
            }
        }

        #[test]
        fn f_prime_is_monotone(alpha in -5.0f64..5.0, a in 0.01f64..20.0, b in 0.01f64..20.0) {
            let d = AlphaDivergence::new(alpha).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(d.f_prime(lo).unwrap() <= d.f_prime(hi).unwrap() + 1e-12);
        }
    }
}
