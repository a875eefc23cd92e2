//! Exact 0/1 knapsack by dynamic programming over integer capacity.

use crate::scalar::Scalar;

/// Maximizes `valuesᵀx` subject to `weightsᵀx ≤ capacity`, `x ∈ {0,1}ⁿ`.
///
/// Items with value `≤ 0` are never selected. On exact ties the item is
/// excluded, scanning items from last to first during reconstruction.
pub fn solve<T: Scalar>(values: &[T], weights: &[u32], capacity: u32) -> Vec<T> {
    debug_assert_eq!(values.len(), weights.len());
    let n = values.len();
    let cap = capacity as usize;
    let width = cap + 1;
    // best[i * width + r]: optimum over the first i items with residual capacity r.
    let mut best = vec![T::zero(); (n + 1) * width];
    for i in 0..n {
        let (v, w) = (values[i], weights[i] as usize);
        let (prev, cur) = best.split_at_mut((i + 1) * width);
        let prev = &prev[i * width..];
        let cur = &mut cur[..width];
        cur.copy_from_slice(prev);
        if v > T::zero() && w <= cap {
            for r in w..=cap {
                let take = prev[r - w] + v;
                if take > cur[r] {
                    cur[r] = take;
                }
            }
        }
    }
    let mut x = vec![T::zero(); n];
    let mut r = cap;
    for i in (0..n).rev() {
        let (v, w) = (values[i], weights[i] as usize);
        if v > T::zero() && w <= r && best[(i + 1) * width + r] > best[i * width + r] {
            x[i] = T::one();
            r -= w;
        }
    }
    x
}
