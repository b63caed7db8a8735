//! Internal dense linear algebra: Hermitian eigendecomposition via LAPACK's
//! divide-and-conquer driver, Lanczos operator-norm estimation for matrices
//! too large for a full solve, Gauss–Hermite nodes, and Kronecker products.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

extern "C" {
    fn zheevd_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        w: *mut f64,
        work: *mut Complex64,
        lwork: *const i32,
        rwork: *mut f64,
        lrwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
}

/// Full Hermitian eigendecomposition. Consumes the matrix buffer; returns
/// ascending eigenvalues and the eigenvector matrix `v` (row-major, column m
/// is the m-th eigenvector), so `a = v · diag(w) · v†`.
pub fn eigh(mut a: Array2<Complex64>) -> Result<(Vec<f64>, Array2<Complex64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.ncols() });
    }
    if n == 0 {
        return Ok((vec![], a));
    }
    let buf = a.as_slice_mut().expect("contiguous row-major buffer");
    let mut w = vec![0.0f64; n];
    let (jobz, uplo) = (b'V', b'L');
    let ni = n as i32;
    let mut info = 0i32;
    let mut wkopt = Complex64::new(0.0, 0.0);
    let mut rwkopt = 0.0f64;
    let mut iwkopt = 0i32;
    let m1 = -1i32;
    unsafe {
        // LAPACK reads the buffer column-major, i.e. it sees our matrix
        // transposed = conjugated (Hermitian); on exit the buffer holds the
        // eigenvectors of the conjugate, which we conjugate-transpose below.
        zheevd_(&jobz, &uplo, &ni, buf.as_mut_ptr(), &ni, w.as_mut_ptr(), &mut wkopt, &m1, &mut rwkopt, &m1, &mut iwkopt, &m1, &mut info);
        if info != 0 {
            return Err(Error::EigSolver(info));
        }
        let lwork = wkopt.re as i32;
        let lrwork = rwkopt as i32;
        let liwork = iwkopt;
        let mut work = vec![Complex64::new(0.0, 0.0); lwork.max(1) as usize];
        let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
        let mut iwork = vec![0i32; liwork.max(1) as usize];
        zheevd_(&jobz, &uplo, &ni, buf.as_mut_ptr(), &ni, w.as_mut_ptr(), work.as_mut_ptr(), &lwork, rwork.as_mut_ptr(), &lrwork, iwork.as_mut_ptr(), &liwork, &mut info);
        if info != 0 {
            return Err(Error::EigSolver(info));
        }
    }
    // In-place conjugate transpose: buffer row-major currently holds v†.
    for i in 0..n {
        buf[i * n + i] = buf[i * n + i].conj();
        for j in (i + 1)..n {
            let x = buf[i * n + j].conj();
            let y = buf[j * n + i].conj();
            buf[i * n + j] = y;
            buf[j * n + i] = x;
        }
    }
    Ok((w, a))
}

/// Max-abs deviation from self-adjointness.
pub fn hermiticity_deviation(a: &Array2<Complex64>) -> f64 {
    let n = a.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (a[[i, j]] - a[[j, i]].conj()).norm();
            if d > dev {
                dev = d;
            }
        }
    }
    dev
}

fn cdot(a: &Array1<Complex64>, b: &Array1<Complex64>) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn nrm2(a: &Array1<Complex64>) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Deterministic dense start vector with generically nonzero overlap with
/// every eigenvector.
fn start_vector(n: usize) -> Array1<Complex64> {
    let mut v = Array1::from_shape_fn(n, |i| {
        let x = i as f64;
        Complex64::new((1.0 + 0.7 * x).sin() + 0.25 * (2.1 + 1.3 * x).cos(), 0.2 * (0.4 + 0.9 * x).sin())
    });
    let s = nrm2(&v);
    v.mapv_inplace(|z| z / s);
    v
}

/// Eigenvalues of a real symmetric tridiagonal matrix plus the last
/// component of each eigenvector (for Lanczos residual bounds).
fn sym_tridiag_eig(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = alpha.len();
    let mut t = Array2::<Complex64>::zeros((m, m));
    for i in 0..m {
        t[[i, i]] = Complex64::new(alpha[i], 0.0);
        if i + 1 < m {
            t[[i, i + 1]] = Complex64::new(beta[i], 0.0);
            t[[i + 1, i]] = Complex64::new(beta[i], 0.0);
        }
    }
    let (w, v) = eigh(t).expect("tridiagonal eigensolve");
    let last: Vec<f64> = (0..m).map(|k| v[[m - 1, k]].norm()).collect();
    (w, last)
}

/// Largest |eigenvalue| of a Hermitian operator given only its action,
/// via Lanczos with full reorthogonalization. Absolute accuracy is driven
/// to `tol · max(estimate, 1)` through the residual bound.
pub fn lanczos_extreme_abs(n: usize, mut matvec: impl FnMut(&Array1<Complex64>) -> Array1<Complex64>) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let tol = 1e-12;
    let max_iter = n.min(400);
    let mut basis: Vec<Array1<Complex64>> = vec![start_vector(n)];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut best = 0.0f64;
    for j in 0..max_iter {
        let mut w = matvec(&basis[j]);
        let alpha = cdot(&basis[j], &w).re;
        alphas.push(alpha);
        // Two reorthogonalization sweeps keep the basis orthonormal to
        // machine precision even for clustered spectra.
        for _ in 0..2 {
            for v in &basis {
                let c = cdot(v, &w);
                w.iter_mut().zip(v.iter()).for_each(|(wi, vi)| *wi -= c * vi);
            }
        }
        let beta = nrm2(&w);
        let check = j + 1 == max_iter || beta < 1e-14 * (1.0 + best) || (j >= 4 && j % 5 == 4);
        if check {
            let (theta, last) = sym_tridiag_eig(&alphas, &betas);
            let mut est = 0.0f64;
            let mut resid = f64::INFINITY;
            for (t, l) in theta.iter().zip(last.iter()) {
                if t.abs() > est {
                    est = t.abs();
                    resid = beta * l;
                }
            }
            best = est;
            if resid <= tol * best.max(1.0) || beta < 1e-14 * (1.0 + best) {
                return best;
            }
        }
        if j + 1 < max_iter {
            betas.push(beta);
            basis.push(w.mapv(|z| z / beta));
        }
    }
    best
}

/// Operator (spectral) norm of a Hermitian matrix.
pub fn op_norm_hermitian(a: &Array2<Complex64>) -> f64 {
    let n = a.nrows();
    if n <= 256 {
        let (w, _) = eigh(a.clone()).expect("hermitian eigensolve");
        w.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    } else {
        lanczos_extreme_abs(n, |x| a.dot(x))
    }
}

/// Operator norm (largest singular value) of a general matrix, computed as
/// the square root of the largest eigenvalue of A†A.
pub fn op_norm_general(a: &Array2<Complex64>) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    if n <= 256 && a.ncols() <= 256 {
        let ata = a.t().mapv(|z| z.conj()).dot(a);
        let (w, _) = eigh(ata).expect("gram eigensolve");
        w.iter().fold(0.0f64, |m, x| m.max(*x)).max(0.0).sqrt()
    } else {
        // A†y = conj(Aᵀ·conj(y)) avoids materializing the adjoint matrix.
        op_norm_general_matvec(
            a.ncols(),
            |x| a.dot(x),
            |y| a.t().dot(&y.mapv(|z| z.conj())).mapv(|z| z.conj()),
        )
    }
}

/// Operator norm of a general operator given its action and its adjoint's
/// action, via Hermitian Lanczos on A†A.
pub fn op_norm_general_matvec(
    n: usize,
    mut apply: impl FnMut(&Array1<Complex64>) -> Array1<Complex64>,
    mut apply_adj: impl FnMut(&Array1<Complex64>) -> Array1<Complex64>,
) -> f64 {
    lanczos_extreme_abs(n, |x| apply_adj(&apply(x))).max(0.0).sqrt()
}

/// Hermite function ψ_n(x) = h_n(x) e^{−x²/2} with h_n the orthonormal
/// Hermite polynomial, together with ψ_{n−1}(x). The damped recurrence stays
/// bounded for all x, unlike the raw polynomial three-term recurrence.
fn hermite_fn_pair(n: usize, x: f64) -> (f64, f64) {
    // Apply the Gaussian damping lazily: folding e^{−x²/2} in up front
    // underflows for |x| ≳ 38 even where ψ_n itself is O(1), because the
    // polynomial growth that would compensate has not happened yet.
    let mut pending = -0.5 * x * x;
    let mut prev = 0.0f64;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    for k in 0..n {
        let kf = k as f64;
        let next = x * (2.0 / (kf + 1.0)).sqrt() * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if pending < 0.0 && (cur.abs() > 1e50 || prev.abs() > 1e50) {
            let step = pending.max(-100.0);
            let f = step.exp();
            cur *= f;
            prev *= f;
            pending -= step;
        }
    }
    let f = pending.exp();
    (cur * f, prev * f)
}

/// Gauss–Hermite nodes and weights: ∫ e^{−x²} g(x) dx ≈ Σ w_k g(x_k).
///
/// Nodes are the roots of the degree-n Hermite function, located by a scan
/// for sign changes followed by bisection plus a Newton polish; the weight at
/// a root is e^{−x²} / (n ψ_{n−1}(x)²). Everything is evaluated through the
/// exponentially damped recurrence, so the routine is stable for node counts
/// in the tens of thousands, where both the raw polynomial recurrence and a
/// dense Golub–Welsch eigensolve break down. Weights beyond |x| ≈ 6.4
/// underflow to zero and are pruned by the caller.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let upper = (2.0 * n as f64 + 1.0).sqrt() + 2.0;
    // Minimal root spacing is ≈ π/√(2n); a quarter of that guarantees the
    // scan brackets every sign change.
    let step = std::f64::consts::PI / (4.0 * (2.0 * n as f64).sqrt());
    let nsteps = (upper / step).ceil() as usize + 1;
    let mut pos_roots = Vec::with_capacity(n / 2 + 1);
    let mut x_prev = 0.0f64;
    let mut f_prev = hermite_fn_pair(n, x_prev).0;
    for i in 1..=nsteps {
        let x = step * i as f64;
        let f = hermite_fn_pair(n, x).0;
        if f_prev == 0.0 {
            pos_roots.push(x_prev);
        } else if f_prev.signum() != f.signum() && f != 0.0 {
            let (mut lo, mut hi, mut flo) = (x_prev, x, f_prev);
            for _ in 0..30 {
                let mid = 0.5 * (lo + hi);
                let fm = hermite_fn_pair(n, mid).0;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let mut root = 0.5 * (lo + hi);
            // Newton polish: ψ_n'(x) = √(2n) ψ_{n−1}(x) − x ψ_n(x).
            for _ in 0..3 {
                let (f0, f1) = hermite_fn_pair(n, root);
                let d = (2.0 * n as f64).sqrt() * f1 - root * f0;
                if d != 0.0 {
                    root -= f0 / d;
                }
            }
            pos_roots.push(root);
        }
        x_prev = x;
        f_prev = f;
    }
    let mut xs = Vec::with_capacity(n);
    if n % 2 == 1 {
        xs.push(0.0);
    }
    for &r in &pos_roots {
        if r > 0.0 {
            xs.push(r);
            xs.push(-r);
        }
    }
    debug_assert_eq!(xs.len(), n, "gauss-hermite root scan missed roots");
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let weights: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let (_, psi_prev) = hermite_fn_pair(n, x);
            (-x * x).exp() / (n as f64 * psi_prev * psi_prev)
        })
        .collect();
    (xs, weights)
}

/// Kronecker product a ⊗ b.
pub fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::<Complex64>::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[[i, j]];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[[i * rb + k, j * cb + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}
