//! Closed-form bounds for the random-walk insertion regime.
//!
//! All logarithms are natural. `m_const` is the absolute constant of the
//! bounds, 96 by default.

/// Default absolute constant.
pub const DEFAULT_M: f64 = 96.0;

/// Smallest slack `ε` covered by the expected insertion-time bound:
/// `sqrt(M (ln(4d) + 1) / d)`.
pub fn epsilon_threshold(d: usize, m_const: f64) -> f64 {
    let d = d as f64;
    (m_const * ((4.0 * d).ln() + 1.0) / d).sqrt()
}

/// Bound on the expected number of walk steps per insertion: `4M / ε²`.
pub fn theorem_bound(epsilon: f64, m_const: f64) -> f64 {
    4.0 * m_const / (epsilon * epsilon)
}

/// Bound on the expected number of size-`k` components of `G_S`:
/// `(n / k²) exp(-ε² d k / M)`.
pub fn component_count_bound(n: usize, k: usize, epsilon: f64, d: usize, m_const: f64) -> f64 {
    let k = k as f64;
    n as f64 / (k * k) * (-(epsilon * epsilon) * d as f64 * k / m_const).exp()
}

/// Likely ceiling on the largest component of `G_S`: `(M / (ε² d)) ln n`.
pub fn k0_bound(n: usize, epsilon: f64, d: usize, m_const: f64) -> f64 {
    m_const / (epsilon * epsilon * d as f64) * (n as f64).ln()
}

/// Whether `(ε, d)` satisfies the hypothesis of the insertion-time bound.
pub fn in_theorem_regime(epsilon: f64, d: usize, m_const: f64) -> bool {
    epsilon >= epsilon_threshold(d, m_const)
}
