//! Single-site matrices in the natural basis.
//!
//! Spin-1/2 basis order is `(|0>, |1>)` with `sigma^z |1> = +|1>`, so
//! `sigma^z = diag(-1, 1)` and `sigma^+ = |1><0|` raises the charge.

use ndarray::{array, Array2};

use crate::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn sigma_x() -> Array2<C64> {
    array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
}

pub fn sigma_y() -> Array2<C64> {
    array![[c(0.0, 0.0), c(0.0, 1.0)], [c(0.0, -1.0), c(0.0, 0.0)]]
}

pub fn sigma_z() -> Array2<C64> {
    array![[c(-1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]
}

pub fn sigma_plus() -> Array2<C64> {
    array![[c(0.0, 0.0), c(0.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
}

pub fn sigma_minus() -> Array2<C64> {
    array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]]
}

/// Truncated annihilation operator: `a|n> = sqrt(n)|n-1>`.
pub fn boson_a(d: usize) -> Array2<C64> {
    let mut a = Array2::zeros((d, d));
    for n in 1..d {
        a[[n - 1, n]] = c((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn boson_n(d: usize) -> Array2<C64> {
    let mut n = Array2::zeros((d, d));
    for k in 0..d {
        n[[k, k]] = c(k as f64, 0.0);
    }
    n
}
