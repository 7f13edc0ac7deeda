//! In-place fast Walsh–Hadamard transform in natural (Sylvester) order.

/// Unnormalized transform: `data ← H data` with `H[i][j] = (-1)^popcount(i & j)`.
///
/// The length must be a power of two; callers validate this once up front.
pub fn fwht(data: &mut [f64]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}
