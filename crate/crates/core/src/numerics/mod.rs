//! Dense numerical core: row-major matrices, stable softmax and
//! cross-entropy, a named parameter store with paired gradients, Adam,
//! uniform initialisation, finite-difference gradient checking and a
//! binary checkpoint format.
//!
//! Storage is generic over [`Real`] so the same model code runs in 32-bit
//! for training and in 64-bit for gradient checks. Reductions accumulate in
//! `f64` regardless of the storage type.

mod adam;
mod checkpoint;
mod gradcheck;
pub mod linalg;
mod matrix;
mod params;

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

use crate::error::{Error, Result};

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckReport};
pub use matrix::Matrix;

pub use params::{fan_in_scale, init_uniform, Grads, ParamId, ParameterStore, Values};

/// Floating-point storage type for matrices and parameters.
pub trait Real:
    Float + FromPrimitive + Default + Debug + Display + Sum + AddAssign + SubAssign + MulAssign + Send + Sync + 'static
{
    /// `c ← alpha·a·b + beta·c` over strided row/column layouts.
    ///
    /// # Safety
    /// Pointers and strides must describe in-bounds, non-aliasing
    /// `m×k`, `k×n` and `m×n` views.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    /// Hyperbolic tangent used on hot paths; exact unless overridden.
    #[inline]
    fn fast_tanh(self) -> Self {
        self.tanh()
    }

    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to every Real")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {
    /// Clamped odd rational approximation (degree 13/6), within a few ulp
    /// of `tanh` and free of branches so slice loops vectorise.
    #[inline]
    fn fast_tanh(self) -> f32 {
        const A: [f32; 7] = [
            4.893_524_6e-3,
            6.372_619_3e-4,
            1.485_722_4e-5,
            5.122_297e-8,
            -8.604_672e-11,
            2.000_188e-13,
            -2.760_768_5e-16,
        ];
        const B: [f32; 4] = [4.893_525e-3, 2.268_434_6e-3, 1.185_347e-4, 1.198_258_4e-6];
        let x = self.clamp(-7.905_311, 7.905_311);
        let x2 = x * x;
        let p = ((((((A[6] * x2 + A[5]) * x2 + A[4]) * x2 + A[3]) * x2 + A[2]) * x2 + A[1]) * x2 + A[0]) * x;
        let q = ((B[3] * x2 + B[2]) * x2 + B[1]) * x2 + B[0];
        if self.abs() < 4e-4 {
            self
        } else {
            p / q
        }
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Real for f64 {
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Logistic function via `fast_tanh`.
#[inline]
pub fn fast_sigmoid<T: Real>(x: T) -> T {
    let half = T::of(0.5);
    half + half * (x * half).fast_tanh()
}

pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `W·x + b`.
pub fn affine<T: Real>(x: &[T], w: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    if w.cols() != x.len() || w.rows() != b.len() {
        return Err(Error::shape(
            "affine",
            format!("W {}x{}, x {}, b {}", w.rows(), w.cols(), w.cols(), w.rows()),
            format!("W {}x{}, x {}, b {}", w.rows(), w.cols(), x.len(), b.len()),
        ));
    }
    Ok((0..w.rows())
        .map(|r| {
            let acc: f64 = w.row(r).iter().zip(x).map(|(a, b)| a.f64() * b.f64()).sum();
            T::of(acc + b[r].f64())
        })
        .collect())
}

/// Max-subtracted softmax in place; the normaliser is accumulated in `f64`.
pub fn softmax_in_place<T: Real>(v: &mut [T]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::EmptyInput("softmax"));
    }
    let max = v.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = 0.0f64;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += x.f64();
    }
    if !sum.is_finite() || sum <= 0.0 {
        return Err(Error::NonFinite("softmax".into()));
    }
    let inv = T::of(1.0 / sum);
    for x in v.iter_mut() {
        *x *= inv;
    }
    Ok(())
}

pub fn softmax<T: Real>(v: &[T]) -> Result<Vec<T>> {
    let mut out = v.to_vec();
    softmax_in_place(&mut out)?;
    Ok(out)
}

/// Overwrites `logits` with `softmax(logits) − onehot(target)` and returns
/// `−log softmax(logits)[target]`.
pub fn cross_entropy_in_place<T: Real>(logits: &mut [T], target: usize) -> Result<f64> {
    if target >= logits.len() {
        return Err(Error::OutOfRange { what: "logits", index: target, size: logits.len() });
    }
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max).f64();
    let sum: f64 = logits.iter().map(|x| (x.f64() - max).exp()).sum();
    let log_z = max + sum.ln();
    let loss = log_z - logits[target].f64();
    for x in logits.iter_mut() {
        *x = T::of((x.f64() - log_z).exp());
    }
    logits[target] -= T::one();
    if !loss.is_finite() {
        return Err(Error::NonFinite("cross-entropy".into()));
    }
    Ok(loss)
}

/// Loss and gradient with respect to the logits.
pub fn cross_entropy<T: Real>(logits: &[T], target: usize) -> Result<(f64, Vec<T>)> {
    let mut grad = logits.to_vec();
    let loss = cross_entropy_in_place(&mut grad, target)?;
    Ok((loss, grad))
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: Real>(v: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, &x) in v.iter().enumerate() {
        match best {
            Some((_, b)) if x <= b => {}
            _ => best = Some((i, x)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_hand_values() {
        let w = Matrix::from_vec(2, 2, vec![1.0f64, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(affine(&[1.0, 1.0], &w, &[0.0, 0.0]).unwrap(), vec![3.0, 7.0]);
        let id = Matrix::<f64>::identity(3);
        assert_eq!(affine(&[0.5, -1.0, 2.0], &id, &[0.0; 3]).unwrap(), vec![0.5, -1.0, 2.0]);
        assert!(matches!(affine(&[1.0], &w, &[0.0, 0.0]), Err(Error::Shape { .. })));
    }

    #[test]
    fn softmax_oracles() {
        assert_eq!(softmax(&[0.0f64, 0.0]).unwrap(), vec![0.5, 0.5]);
        let big = softmax(&[1000.0f32, 0.0]).unwrap();
        assert!((big[0] - 1.0).abs() < 1e-6 && big[1] >= 0.0 && big[1] < 1e-6);
        let p = softmax(&[1.0f64, 2.0, 3.0]).unwrap();
        for (a, b) in p.iter().zip([0.0900, 0.2447, 0.6652]) {
            assert!((a - b).abs() < 1e-4);
        }
        assert!(matches!(softmax::<f64>(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn softmax_permutation_equivariant() {
        let v = [0.3f64, -1.2, 2.5, 0.0];
        let p = softmax(&v).unwrap();
        let q = softmax(&[v[2], v[0], v[3], v[1]]).unwrap();
        assert_eq!([p[2], p[0], p[3], p[1]], [q[0], q[1], q[2], q[3]]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cross_entropy_uniform_and_gradient_sum() {
        let (loss, grad) = cross_entropy(&[0.0f64; 7], 3).unwrap();
        assert!((loss - 7f64.ln()).abs() < 1e-12);
        assert!(grad.iter().sum::<f64>().abs() < 1e-6);
        let (_, g) = cross_entropy(&[0.2f32, -3.0, 1.7, 0.4], 0).unwrap();
        assert!(g.iter().map(|&x| x as f64).sum::<f64>().abs() < 1e-6);
        assert!(matches!(cross_entropy(&[0.0f64; 3], 3), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn cross_entropy_matches_central_difference() {
        let logits = [0.3f64, -0.7, 1.1, 0.05, -2.0];
        let (_, grad) = cross_entropy(&logits, 2).unwrap();
        let h = 1e-5;
        for i in 0..logits.len() {
            let mut up = logits;
            up[i] += h;
            let mut dn = logits;
            dn[i] -= h;
            let num = (cross_entropy(&up, 2).unwrap().0 - cross_entropy(&dn, 2).unwrap().0) / (2.0 * h);
            assert!((num - grad[i]).abs() / num.abs().max(grad[i].abs()).max(1e-8) < 1e-4);
        }
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[1.0f32, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax::<f64>(&[]), None);
    }

    #[test]
    fn fast_tanh_tracks_libm() {
        let mut worst = 0.0f64;
        for i in -200_000..=200_000 {
            let x = i as f32 * 1e-4;
            worst = worst.max((x.fast_tanh() as f64 - (x as f64).tanh()).abs());
            let s = fast_sigmoid(x) as f64;
            worst = worst.max((s - 1.0 / (1.0 + (-(x as f64)).exp())).abs());
        }
        assert!(worst < 1e-6, "{worst}");
        assert_eq!(1e-5f32.fast_tanh(), 1e-5);
        assert_eq!(100f32.fast_tanh(), 1.0);
        assert_eq!(0.3f64.fast_tanh(), 0.3f64.tanh());
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0f64), 0.5);
        assert!(sigmoid(-1000.0f32) >= 0.0);
        assert!((sigmoid(1000.0f32) - 1.0).abs() < 1e-7);
    }
}
