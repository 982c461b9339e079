//! Shape functions on a single interval `[a, a + h]`, local coordinate `s ∈ [0, 1]`.

/// Cubic Hermite functions for `(v_a, v'_a, v_b, v'_b)`; entry `[k][i]` is the
/// `k`-th derivative in `x` of function `i`.
pub fn cubic(s: f64, h: f64) -> [[f64; 4]; 4] {
    let s2 = s * s;
    let s3 = s2 * s;
    [
        [
            1.0 - 3.0 * s2 + 2.0 * s3,
            h * (s - 2.0 * s2 + s3),
            3.0 * s2 - 2.0 * s3,
            h * (s3 - s2),
        ],
        [
            (6.0 * s2 - 6.0 * s) / h,
            1.0 - 4.0 * s + 3.0 * s2,
            (6.0 * s - 6.0 * s2) / h,
            3.0 * s2 - 2.0 * s,
        ],
        [
            (12.0 * s - 6.0) / (h * h),
            (6.0 * s - 4.0) / h,
            (6.0 - 12.0 * s) / (h * h),
            (6.0 * s - 2.0) / h,
        ],
        [
            12.0 / (h * h * h),
            6.0 / (h * h),
            -12.0 / (h * h * h),
            6.0 / (h * h),
        ],
    ]
}

/// Linear functions for `(v_a, v_b)`; entry `[k][i]` as in [`cubic`].
pub fn linear(s: f64, h: f64) -> [[f64; 2]; 2] {
    [[1.0 - s, s], [-1.0 / h, 1.0 / h]]
}
