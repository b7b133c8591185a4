//! Degree and sketch-length recipes for model expanders, and the count of
//! rooted subtrees used in their derivation.

use num_bigint::BigUint;

use crate::error::{Error, Result};

/// Left degree and number of measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpanderParams {
    pub d: usize,
    pub m: usize,
}

fn check_constants(epsilon: f64, c_d: f64, c_m: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} outside (0, 1]"
        )));
    }
    if !(c_d > 0.0 && c_m > 0.0) {
        return Err(Error::InvalidParameter("constants must be positive".into()));
    }
    Ok(())
}

/// Tree-model recipe with natural logarithms:
/// `d = max(1, ⌊c_d ln(N/k) / (ε ln ln(N/k))⌋)` and `m = max(d, ⌊c_m d k / ε⌋)`.
///
/// Requires `N/k > e` so that `ln ln(N/k) > 0`.
pub fn tree_expander_params(
    n: usize,
    k: usize,
    epsilon: f64,
    c_d: f64,
    c_m: f64,
) -> Result<ExpanderParams> {
    check_constants(epsilon, c_d, c_m)?;
    if k == 0 || n <= k {
        return Err(Error::InvalidParameter(format!(
            "need N > k >= 1, got N={n}, k={k}"
        )));
    }
    let ratio = n as f64 / k as f64;
    if ratio <= std::f64::consts::E {
        return Err(Error::InvalidParameter(format!(
            "N/k = {ratio} must exceed e for ln ln(N/k) > 0"
        )));
    }
    let d = (c_d * ratio.ln() / (epsilon * ratio.ln().ln()))
        .floor()
        .max(1.0) as usize;
    let m = ((c_m * (d * k) as f64 / epsilon).floor() as usize).max(d);
    Ok(ExpanderParams { d, m })
}

/// Group-model recipe: `d = max(1, ⌊c_d ln N / (ε ln(k g_max))⌋)` and
/// `m = max(d, ⌊c_m d k g_max / ε⌋)`. Requires `k g_max >= 2` and `N > k g_max`.
pub fn group_expander_params(
    n: usize,
    k: usize,
    g_max: usize,
    epsilon: f64,
    c_d: f64,
    c_m: f64,
) -> Result<ExpanderParams> {
    check_constants(epsilon, c_d, c_m)?;
    let kg = k * g_max;
    if kg < 2 {
        return Err(Error::InvalidParameter(format!(
            "k * g_max = {kg} must be at least 2"
        )));
    }
    if n <= kg {
        return Err(Error::InvalidParameter(format!(
            "need N > k * g_max, got N={n}, k*g_max={kg}"
        )));
    }
    let d = (c_d * (n as f64).ln() / (epsilon * (kg as f64).ln()))
        .floor()
        .max(1.0) as usize;
    let m = ((c_m * (d * kg) as f64 / epsilon).floor() as usize).max(d);
    Ok(ExpanderParams { d, m })
}

/// Number of rooted ordered `D`-ary trees with `k` nodes,
/// `C(Dk, k) / ((D - 1) k + 1)`, in exact arithmetic.
pub fn raney_tree_count(arity: usize, k: usize) -> Result<BigUint> {
    if arity < 2 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "need D >= 2 and k >= 1, got D={arity}, k={k}"
        )));
    }
    let dk = arity * k;
    // C(dk, k) built incrementally stays integral at every step.
    let mut binom = BigUint::from(1u32);
    for i in 0..k {
        binom *= BigUint::from(dk - i);
        binom /= BigUint::from(i + 1);
    }
    Ok(binom / BigUint::from((arity - 1) * k + 1))
}
