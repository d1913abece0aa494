//! Small numerical helpers shared by the operators.

/// Pairwise (cascade) summation. The split points depend only on the
/// length, so results are reproducible for a fixed input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(i)` for `i` in `0..n`.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(n: usize, f: F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= 32 {
            return (lo..hi).map(f).sum();
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    if n == 0 {
        0.0
    } else {
        rec(0, n, &f)
    }
}

/// Weights `(w_near, w_far)` for integrating `exp(-tau * t) * L(t)` over
/// `t ∈ [0, 1]` times `tau`, where `L` is linear with `L(0) = near`,
/// `L(1) = far`.
///
/// In other words, for a segment of optical depth `tau` ending at the
/// evaluation point, `near` is the source at the evaluation end and `far`
/// the source at the upstream end. A constant source `c` integrates to
/// `c * (1 - exp(-tau))` exactly.
pub fn exp_segment_weights(tau: f64) -> (f64, f64) {
    if tau < 1e-4 {
        // series of the expressions below, accurate to O(tau^4)
        let t2 = tau * tau;
        let t3 = t2 * tau;
        let w_near = tau / 2.0 - t2 / 6.0 + t3 / 24.0;
        let w_far = tau / 2.0 - t2 / 3.0 + t3 / 8.0;
        return (w_near, w_far);
    }
    let e = (-tau).exp();
    let one_minus = -(-tau).exp_m1();
    let ratio = one_minus / tau;
    (1.0 - ratio, ratio - e)
}

/// Segment coefficients for `∫_0^Δ e^{-κt} L(t) dt` with `L` linear:
/// returns `(c_near, c_far, e^{-κΔ})` such that the integral equals
/// `c_near L(0) + c_far L(Δ)`. Reduces to the trapezoid rule as `κ → 0`.
#[inline]
pub fn exp_segment_coeffs(kappa: f64, delta: f64) -> (f64, f64, f64) {
    let tau = kappa * delta;
    if tau < 1e-4 {
        let t2 = tau * tau;
        let c_near = delta * (0.5 - tau / 6.0 + t2 / 24.0);
        let c_far = delta * (0.5 - tau / 3.0 + t2 / 8.0);
        return (c_near, c_far, (-tau).exp());
    }
    let (wn, wf) = exp_segment_weights(tau);
    (wn / kappa, wf / kappa, (-tau).exp())
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}
