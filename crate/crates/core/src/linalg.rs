//! Small dense-matrix numerics used by the propagators.
//!
//! The level structures handled here are tiny (a handful of states), so the
//! routines favour robustness over asymptotic performance: Padé
//! scaling-and-squaring for matrix exponentials (no eigendecomposition, safe
//! for degenerate generators), Gauss–Jordan elimination with partial pivoting
//! for solves, and characteristic-polynomial root finding for the
//! exponential-mode expansion of a rate generator.

use ndarray::Array2;
use num_complex::Complex64;

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

/// Infinity norm (max absolute row sum).
fn norm_inf(a: &Array2<C>) -> f64 {
    let n = a.nrows();
    (0..n)
        .map(|i| (0..n).map(|j| a[[i, j]].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn identity(n: usize) -> Array2<C> {
    Array2::from_shape_fn((n, n), |(i, j)| if i == j { c(1.0) } else { c(0.0) })
}

/// Solve `A X = B` by Gauss–Jordan elimination with partial pivoting.
///
/// Returns `None` when a pivot falls below `tol` times the largest entry of
/// `A`, i.e. when the system is numerically singular.
pub fn solve(a: &Array2<C>, b: &Array2<C>) -> Option<Array2<C>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.nrows(), n);
    let m = b.ncols();
    let mut aug = Array2::<C>::zeros((n, n + m));
    for i in 0..n {
        for j in 0..n {
            aug[[i, j]] = a[[i, j]];
        }
        for j in 0..m {
            aug[[i, n + j]] = b[[i, j]];
        }
    }
    let scale = norm_inf(a).max(f64::MIN_POSITIVE);
    let tol = 1e-13 * scale;
    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, aug[[r, col]].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pivot_mag <= tol {
            return None;
        }
        if pivot_row != col {
            for j in 0..n + m {
                let tmp = aug[[col, j]];
                aug[[col, j]] = aug[[pivot_row, j]];
                aug[[pivot_row, j]] = tmp;
            }
        }
        let pivot = aug[[col, col]];
        for j in col..n + m {
            aug[[col, j]] /= pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = aug[[row, col]];
            if factor.norm() == 0.0 {
                continue;
            }
            for j in col..n + m {
                let sub = factor * aug[[col, j]];
                aug[[row, j]] -= sub;
            }
        }
    }
    let mut x = Array2::<C>::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            x[[i, j]] = aug[[i, n + j]];
        }
    }
    Some(x)
}

/// Matrix inverse via [`solve`] against the identity.
pub fn inverse(a: &Array2<C>) -> Option<Array2<C>> {
    solve(a, &identity(a.nrows()))
}

/// Matrix exponential by (6,6) Padé approximation with scaling and squaring.
pub fn expm(a: &Array2<C>) -> Array2<C> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    if n == 0 {
        return Array2::zeros((0, 0));
    }
    let norm = norm_inf(a);
    // Scale so the Padé argument has norm below 1/2.
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / c(2f64.powi(s as i32)));

    // Padé(6,6) coefficients for exp(x).
    const COEF: [f64; 7] = [1.0, 0.5, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0, 1.0 / 665280.0];
    let mut power = identity(n);
    let mut num = Array2::<C>::zeros((n, n));
    let mut den = Array2::<C>::zeros((n, n));
    for (k, &ck) in COEF.iter().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        num = num + &power * c(ck);
        den = den + &power * c(ck * sign);
        if k < COEF.len() - 1 {
            power = power.dot(&scaled);
        }
    }
    let mut result = solve(&den, &num).expect("Padé denominator is nonsingular for scaled argument");
    for _ in 0..s {
        result = result.dot(&result);
    }
    result
}

/// Real-matrix wrapper around [`expm`].
pub fn expm_real(a: &Array2<f64>) -> Array2<f64> {
    let ac = a.mapv(|x| C::new(x, 0.0));
    expm(&ac).mapv(|z| z.re)
}

/// Characteristic polynomial coefficients by the Faddeev–LeVerrier recursion.
///
/// Returns `p` with `det(xI - A) = x^n + p[0] x^(n-1) + ... + p[n-1]`.
fn char_poly(a: &Array2<C>) -> Vec<C> {
    let n = a.nrows();
    let mut coef = vec![C::new(0.0, 0.0); n];
    let mut m = identity(n);
    for k in 1..=n {
        if k > 1 {
            m = a.dot(&m);
            let ck = coef[k - 2];
            for i in 0..n {
                m[[i, i]] += ck;
            }
        }
        let am = a.dot(&m);
        let trace: C = (0..n).map(|i| am[[i, i]]).sum();
        coef[k - 1] = -trace / c(k as f64);
    }
    coef
}

/// All roots of a monic polynomial by Durand–Kerner iteration.
///
/// `coef` follows the [`char_poly`] layout. Converges for the small,
/// well-separated spectra that rate generators produce.
fn poly_roots(coef: &[C]) -> Vec<C> {
    let n = coef.len();
    if n == 0 {
        return vec![];
    }
    if n == 1 {
        return vec![-coef[0]];
    }
    let eval = |z: C| -> C {
        let mut v = c(1.0);
        for &ck in coef {
            v = v * z + ck;
        }
        v
    };
    // Initial guesses on a circle that bounds the roots (Cauchy bound).
    let radius = 1.0 + coef.iter().map(|ck| ck.norm()).fold(0.0, f64::max);
    let mut roots: Vec<C> = (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64;
            C::from_polar(radius.max(1e-3), theta)
        })
        .collect();
    let tol = 1e-14 * radius.max(1.0);
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let zi = roots[i];
            let mut denom = c(1.0);
            for (j, &zj) in roots.iter().enumerate() {
                if j != i {
                    denom *= zi - zj;
                }
            }
            if denom.norm() == 0.0 {
                continue;
            }
            let delta = eval(zi) / denom;
            roots[i] = zi - delta;
            moved = moved.max(delta.norm());
        }
        if moved < tol {
            break;
        }
    }
    roots
}

/// Eigenvalues of a small matrix via its characteristic polynomial.
pub fn eigenvalues(a: &Array2<C>) -> Vec<C> {
    poly_roots(&char_poly(a))
}

/// Spectral (Sylvester) decomposition `A = Σ_j λ_j P_j` for a matrix with
/// distinct eigenvalues, so that `exp(At) = Σ_j e^{λ_j t} P_j`.
///
/// Returns `None` when two eigenvalues are closer than `1e-8` relative to the
/// spectral scale; callers fall back to an error rather than risk a blown-up
/// projector.
pub fn exponential_modes(a: &Array2<C>) -> Option<Vec<(C, Array2<C>)>> {
    let n = a.nrows();
    if n == 0 {
        return Some(vec![]);
    }
    if n == 1 {
        return Some(vec![(a[[0, 0]], identity(1))]);
    }
    // Diagonal generators decompose per basis state; repeated rates are fine.
    let off_diag = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| a[[i, j]].norm())
        .fold(0.0, f64::max);
    if off_diag == 0.0 {
        return Some(
            (0..n)
                .map(|j| {
                    let mut proj = Array2::<C>::zeros((n, n));
                    proj[[j, j]] = c(1.0);
                    (a[[j, j]], proj)
                })
                .collect(),
        );
    }
    let lambda = eigenvalues(a);
    let scale = lambda
        .iter()
        .map(|z| z.norm())
        .fold(norm_inf(a), f64::max)
        .max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (lambda[i] - lambda[j]).norm() < 1e-8 * scale {
                return None;
            }
        }
    }
    let mut modes = Vec::with_capacity(n);
    for j in 0..n {
        // P_j = Π_{k≠j} (A - λ_k I) / (λ_j - λ_k)
        let mut proj = identity(n);
        for k in 0..n {
            if k == j {
                continue;
            }
            let mut shifted = a.clone();
            for i in 0..n {
                shifted[[i, i]] -= lambda[k];
            }
            proj = proj.dot(&shifted);
            proj = proj.mapv(|z| z / (lambda[j] - lambda[k]));
        }
        modes.push((lambda[j], proj));
    }
    Some(modes)
}
