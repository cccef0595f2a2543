//! Dense complex linear algebra shared by the propagators.
//!
//! Vectorization is column-stacking throughout: `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`,
//! which coincides with nalgebra's column-major storage.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Below this size nalgebra's generic product is faster than a packed gemm call.
const GEMM_MIN_DIM: usize = 24;

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let mut c = CMat::zeros(a.nrows(), b.ncols());
    matmul_into(a, b, &mut c);
    c
}

/// `c = a * b`, overwriting `c`.
pub fn matmul_into(a: &CMat, b: &CMat, c: &mut CMat) {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimension mismatch");
    assert_eq!(c.nrows(), a.nrows());
    assert_eq!(c.ncols(), b.ncols());
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    if m.min(k).min(n) < GEMM_MIN_DIM {
        a.mul_to(b, c);
        return;
    }
    // SAFETY: Complex<f64> is repr(C) with layout [re, im]; all three buffers are
    // dense column-major with the leading dimensions passed below, and `c` does
    // not alias `a` or `b` (exclusive borrow).
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vec(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvec(v: &CVec, d: usize) -> CMat {
    assert_eq!(v.len(), d * d, "unvec: length is not d²");
    CMat::from_column_slice(d, d, v.as_slice())
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_error(h: &CMat) -> f64 {
    if !h.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(h, &h.adjoint())
}

pub fn unitarity_error(u: &CMat) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let d = u.nrows();
    max_abs_diff(&matmul(&u.adjoint(), u), &identity(d))
}

/// Frobenius inner product `Tr(A† B)`.
pub fn inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues and
/// the unitary whose columns are the matching eigenvectors.
pub fn hermitian_eigh(h: &CMat) -> (Vec<f64>, CMat) {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(h.nrows(), h.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(h: &CMat) -> Vec<f64> {
    let mut v: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn one_norm(a: &CMat) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152e0;

fn scaled(a: &CMat, s: f64) -> CMat {
    a * C64::new(s, 0.0)
}

fn add_identity(m: &mut CMat, s: f64) {
    for i in 0..m.nrows() {
        m[(i, i)] += s;
    }
}

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant
/// (orders 3–13 selected from the 1-norm). Accurate to roughly machine precision
/// relative to `‖exp(A)‖` for the non-normal generators used here.
pub fn expm(a: &CMat) -> Result<CMat> {
    if !a.is_square() {
        return Err(invalid("expm requires a square matrix"));
    }
    let d = a.nrows();
    if d == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    if a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(invalid("expm: non-finite entry"));
    }
    let norm = one_norm(a);
    let a2 = matmul(a, a);

    for &(m, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            let (u, v) = pade_low(a, &a2, coeffs);
            return solve_pade(&u, &v);
        }
    }

    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scale = 2f64.powi(-s);
    let a = scaled(a, scale);
    let a2 = scaled(&a2, scale * scale);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a4, &a2);
    let b = &PADE13;

    let mut inner_u = scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]);
    inner_u = matmul(&a6, &inner_u);
    inner_u += scaled(&a6, b[7]) + scaled(&a4, b[5]) + scaled(&a2, b[3]);
    add_identity(&mut inner_u, b[1]);
    let u = matmul(&a, &inner_u);

    let mut v = scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]);
    v = matmul(&a6, &v);
    v += scaled(&a6, b[6]) + scaled(&a4, b[4]) + scaled(&a2, b[2]);
    add_identity(&mut v, b[0]);

    let mut x = solve_pade(&u, &v)?;
    for _ in 0..s {
        x = matmul(&x, &x);
    }
    Ok(x)
}

fn pade_low(a: &CMat, a2: &CMat, b: &[f64]) -> (CMat, CMat) {
    let d = a.nrows();
    let mut u_acc = CMat::zeros(d, d);
    let mut v_acc = CMat::zeros(d, d);
    let mut power = identity(d);
    let mut k = 0;
    while 2 * k + 1 < b.len() {
        u_acc += scaled(&power, b[2 * k + 1]);
        v_acc += scaled(&power, b[2 * k]);
        power = matmul(&power, a2);
        k += 1;
    }
    (matmul(a, &u_acc), v_acc)
}

fn solve_pade(u: &CMat, v: &CMat) -> Result<CMat> {
    let p = v + u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| invalid("expm: singular Padé denominator"))
}

/// Scales entry `(k, l)` by `phases[k] * conj(phases[l])`, i.e. `P A P†` for
/// the diagonal unitary `P = diag(phases)`.
pub fn diag_conjugate(a: &CMat, phases: &[C64]) -> CMat {
    let mut out = a.clone();
    diag_conjugate_in_place(&mut out, phases);
    out
}

pub fn diag_conjugate_in_place(a: &mut CMat, phases: &[C64]) {
    let n = phases.len();
    assert_eq!(a.nrows(), n);
    assert_eq!(a.ncols(), n);
    for l in 0..n {
        let pl = phases[l].conj();
        for k in 0..n {
            a[(k, l)] *= phases[k] * pl;
        }
    }
}
