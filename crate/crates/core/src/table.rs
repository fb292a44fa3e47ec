//! Hand-written closed forms of the named α-divergences. They share no code
//! with [`AlphaDivergence`](crate::divergence::AlphaDivergence), which makes
//! them a reference for the generic formulas.

use crate::divergence::{ConjugateDomain, DomainKind};

#[derive(Debug, Clone, Copy)]
pub struct NamedDivergence {
    pub name: &'static str,
    pub alpha: f64,
    pub f: fn(f64) -> f64,
    pub f_prime: fn(f64) -> f64,
    pub conjugate: fn(f64) -> f64,
    pub conjugate_prime: fn(f64) -> f64,
    pub domain: ConjugateDomain,
}

pub fn named_divergences() -> [NamedDivergence; 5] {
    [
        NamedDivergence {
            name: "KL",
            alpha: 1.0,
            f: |x| x * x.ln() - (x - 1.0),
            f_prime: f64::ln,
            conjugate: f64::exp_m1,
            conjugate_prime: f64::exp,
            domain: ConjugateDomain::all_reals(),
        },
        NamedDivergence {
            name: "reverse KL",
            alpha: 0.0,
            f: |x| -x.ln() + (x - 1.0),
            f_prime: |x| 1.0 - 1.0 / x,
            conjugate: |y| -(-y).ln_1p(),
            conjugate_prime: |y| 1.0 / (1.0 - y),
            domain: ConjugateDomain::half_line(DomainKind::UpperBounded, 1.0),
        },
        NamedDivergence {
            name: "Pearson chi2",
            alpha: 2.0,
            f: |x| 0.5 * (x - 1.0).powi(2),
            f_prime: |x| x - 1.0,
            conjugate: |y| 0.5 * (y + 1.0).powi(2) - 0.5,
            conjugate_prime: |y| y + 1.0,
            domain: ConjugateDomain::half_line(DomainKind::LowerBounded, -1.0),
        },
        NamedDivergence {
            name: "Neyman chi2",
            alpha: -1.0,
            f: |x| (x - 1.0).powi(2) / (2.0 * x),
            f_prime: |x| 0.5 * (1.0 - 1.0 / (x * x)),
            conjugate: |y| 1.0 - (1.0 - 2.0 * y).sqrt(),
            conjugate_prime: |y| 1.0 / (1.0 - 2.0 * y).sqrt(),
            domain: ConjugateDomain::half_line(DomainKind::UpperBounded, 0.5),
        },
        NamedDivergence {
            name: "Hellinger",
            alpha: 0.5,
            f: |x| 2.0 * (x.sqrt() - 1.0).powi(2),
            f_prime: |x| 2.0 - 2.0 / x.sqrt(),
            conjugate: |y| 2.0 * y / (2.0 - y),
            conjugate_prime: |y| 4.0 / (2.0 - y).powi(2),
            domain: ConjugateDomain::half_line(DomainKind::UpperBounded, 2.0),
        },
    ]
}

pub fn named_divergence(alpha: f64) -> Option<NamedDivergence> {
    named_divergences().into_iter().find(|d| d.alpha == alpha)
}

/// `count` points in `dom f*`: log-spaced distances `10^-3 .. 10^1.5` from
/// the bound on its open side (both signs around 0 when unbounded).
pub fn conjugate_sample_points(domain: &ConjugateDomain, count: usize) -> Vec<f64> {
    let step = |i: usize| 10f64.powf(-3.0 + 4.5 * i as f64 / (count.max(2) - 1) as f64);
    match domain.kind {
        DomainKind::UpperBounded => (0..count).map(|i| domain.bound - step(i)).collect(),
        DomainKind::LowerBounded => (0..count).map(|i| domain.bound + step(i)).collect(),
        DomainKind::AllReals => (0..count)
            .map(|i| {
                let magnitude = 10f64.powf(-3.0 + 4.0 * (i / 2) as f64 / (count.max(2) / 2) as f64);
                if i % 2 == 0 { magnitude } else { -magnitude }
            })
            .collect(),
    }
}

/// `count` log-spaced points `10^-3 .. 10^3` in the domain of `f`.
pub fn generator_sample_points(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (count.max(2) - 1) as f64))
        .collect()
}
