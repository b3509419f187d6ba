//! Safe row-major wrappers over `matrixmultiply`.
//!
//! Naming follows the operand layouts: `nt` multiplies by a transposed
//! right operand, `tn` by a transposed left one.

use super::Real;

fn check(name: &str, len: usize, need: usize) {
    assert!(len >= need, "{name}: buffer of {len} for a view needing {need}");
}

/// `c (m×n) ← a (m×k) · bᵀ + beta·c` where `b` is `n×k`.
pub fn matmul_nt<T: Real>(m: usize, k: usize, n: usize, a: &[T], b: &[T], beta: T, c: &mut [T]) {
    if m == 0 || n == 0 {
        return;
    }
    check("matmul_nt a", a.len(), m * k);
    check("matmul_nt b", b.len(), n * k);
    check("matmul_nt c", c.len(), m * n);
    // SAFETY: bounds checked above; `c` is a unique borrow.
    unsafe {
        T::gemm_raw(m, k, n, T::one(), a.as_ptr(), k as isize, 1, b.as_ptr(), 1, k as isize, beta, c.as_mut_ptr(), n as isize, 1)
    }
}

/// `c (m×n) ← a (m×k) · b (k×n) + beta·c`.
pub fn matmul_nn<T: Real>(m: usize, k: usize, n: usize, a: &[T], b: &[T], beta: T, c: &mut [T]) {
    if m == 0 || n == 0 {
        return;
    }
    check("matmul_nn a", a.len(), m * k);
    check("matmul_nn b", b.len(), k * n);
    check("matmul_nn c", c.len(), m * n);
    // SAFETY: as above.
    unsafe {
        T::gemm_raw(m, k, n, T::one(), a.as_ptr(), k as isize, 1, b.as_ptr(), n as isize, 1, beta, c.as_mut_ptr(), n as isize, 1)
    }
}

/// `c (m×n) ← aᵀ · b + beta·c` where `a` is `k×m` and `b` is `k×n`.
pub fn matmul_tn<T: Real>(m: usize, k: usize, n: usize, a: &[T], b: &[T], beta: T, c: &mut [T]) {
    if m == 0 || n == 0 {
        return;
    }
    check("matmul_tn a", a.len(), k * m);
    check("matmul_tn b", b.len(), k * n);
    check("matmul_tn c", c.len(), m * n);
    // SAFETY: as above.
    unsafe {
        T::gemm_raw(m, k, n, T::one(), a.as_ptr(), 1, m as isize, b.as_ptr(), n as isize, 1, beta, c.as_mut_ptr(), n as isize, 1)
    }
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 8];
    let chunks = a.len() / 8;
    for i in 0..chunks {
        let (x, y) = (&a[i * 8..i * 8 + 8], &b[i * 8..i * 8 + 8]);
        for j in 0..8 {
            acc[j] += x[j] * y[j];
        }
    }
    let mut s = acc.iter().copied().fold(T::zero(), |s, x| s + x);
    for i in chunks * 8..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// `y += alpha·x`.
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(m: usize, k: usize, n: usize, a: impl Fn(usize, usize) -> f64, b: impl Fn(usize, usize) -> f64) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                c[i * n + j] = (0..k).map(|p| a(i, p) * b(p, j)).sum();
            }
        }
        c
    }

    #[test]
    fn layouts_agree_with_naive_product() {
        let (m, k, n) = (3, 4, 5);
        let a: Vec<f64> = (0..m * k).map(|x| x as f64 * 0.5 - 1.0).collect();
        let bt: Vec<f64> = (0..n * k).map(|x| (x as f64).sin()).collect();
        let b: Vec<f64> = (0..k * n).map(|x| (x as f64).cos()).collect();
        let at: Vec<f64> = (0..k * m).map(|x| x as f64 * 0.25).collect();

        let mut c = vec![0.0; m * n];
        matmul_nt(m, k, n, &a, &bt, 0.0, &mut c);
        for (x, y) in c.iter().zip(&naive(m, k, n, |i, p| a[i * k + p], |p, j| bt[j * k + p])) {
            assert!((x - y).abs() < 1e-12);
        }

        let mut c = vec![1.0; m * n];
        matmul_nn(m, k, n, &a, &b, 1.0, &mut c);
        let want: Vec<f64> = naive(m, k, n, |i, p| a[i * k + p], |p, j| b[p * n + j]).iter().map(|x| x + 1.0).collect();
        for (x, y) in c.iter().zip(&want) {
            assert!((x - y).abs() < 1e-12);
        }

        let mut c = vec![0.0; m * n];
        matmul_tn(m, k, n, &at, &b, 0.0, &mut c);
        let want = naive(m, k, n, |i, p| at[p * m + i], |p, j| b[p * n + j]);
        for (x, y) in c.iter().zip(&want) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dot_handles_tails() {
        let a: Vec<f32> = (0..19).map(|x| x as f32).collect();
        assert_eq!(dot(&a, &a), (0..19).map(|x| (x * x) as f32).sum::<f32>());
    }
}
