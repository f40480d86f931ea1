//! Finite-difference weights on uniform grids.

/// Fornberg's recursion: weights `w[d][j]` such that
/// `f^(d)(z) ≈ Σ_j w[d][j] f(x_j)` for `d ≤ max_order`.
pub fn fornberg_weights(z: f64, x: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut w = vec![vec![0.0; n]; max_order + 1];
    if n == 0 {
        return w;
    }
    w[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[k][i] = c1 * (k as f64 * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                w[k][j] = (c4 * w[k][j] - k as f64 * w[k - 1][j]) / c3;
            }
            w[0][j] = c4 * w[0][j] / c3;
        }
        c1 = c2;
    }
    w
}

/// First-derivative stencil of accuracy `order` at node `k` of the index range
/// `lo..hi`, for unit spacing. Central when there is room, otherwise shifted
/// to stay inside the range. Returns `(node, weight)` pairs.
pub fn first_derivative_stencil(k: usize, lo: usize, hi: usize, order: usize) -> Vec<(usize, f64)> {
    assert!(lo <= k && k < hi, "node outside range");
    let width = (order + 1).min(hi - lo);
    let half = width / 2;
    let start = k.saturating_sub(half).max(lo).min(hi - width);
    let nodes: Vec<f64> = (0..width).map(|j| (start + j) as f64 - k as f64).collect();
    let w = fornberg_weights(0.0, &nodes, 1);
    (0..width).map(|j| (start + j, w[1][j])).collect()
}

/// Weights for the first derivative at the midpoint between nodes `k` and
/// `k + 1`, fourth-order when four nodes are available in `lo..hi`.
pub fn midpoint_derivative_stencil(k: usize, lo: usize, hi: usize) -> Vec<(usize, f64)> {
    assert!(lo <= k && k + 1 < hi, "interval outside range");
    let width = 4.min(hi - lo);
    let start = k.saturating_sub(1).max(lo).min(hi - width);
    let nodes: Vec<f64> = (0..width).map(|j| (start + j) as f64 - k as f64).collect();
    let w = fornberg_weights(0.5, &nodes, 1);
    (0..width).map(|j| (start + j, w[1][j])).collect()
}
