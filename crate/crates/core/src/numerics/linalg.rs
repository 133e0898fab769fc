//! Matrix-product kernels over row-major slices.
//!
//! The models multiply many small matrices (a dozen rows by a few dozen
//! columns), where packing operands for a blocked GEMM costs more than the
//! arithmetic. Products below `GEMM_THRESHOLD` multiply-adds therefore use
//! straight loops with contiguous inner strides; larger ones (full-size
//! widths) go through `matrixmultiply`.

const GEMM_THRESHOLD: usize = 4096;

/// `c (+)= a · b` with `a: m×k`, `b: k×n`.
pub fn matmul(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize, accumulate: bool) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m * k * n >= GEMM_THRESHOLD {
        gemm(
            m,
            k,
            n,
            a,
            (k as isize, 1),
            b,
            (n as isize, 1),
            c,
            accumulate,
        );
        return;
    }
    if !accumulate {
        c.fill(0.0);
    }
    for i in 0..m {
        let ci = &mut c[i * n..(i + 1) * n];
        for (p, &av) in a[i * k..(i + 1) * k].iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            axpy(av, &b[p * n..(p + 1) * n], ci);
        }
    }
}

/// `c (+)= a · bᵀ` with `a: m×k`, `b: n×k`.
pub fn matmul_nt(
    a: &[f64],
    b: &[f64],
    c: &mut [f64],
    m: usize,
    k: usize,
    n: usize,
    accumulate: bool,
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(c.len(), m * n);
    if m * k * n >= GEMM_THRESHOLD {
        gemm(
            m,
            k,
            n,
            a,
            (k as isize, 1),
            b,
            (1, k as isize),
            c,
            accumulate,
        );
        return;
    }
    for i in 0..m {
        let ai = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let d = dot(ai, &b[j * k..(j + 1) * k]);
            if accumulate {
                c[i * n + j] += d;
            } else {
                c[i * n + j] = d;
            }
        }
    }
}

/// `c (+)= aᵀ · b` with `a: k×m`, `b: k×n`.
pub fn matmul_tn(
    a: &[f64],
    b: &[f64],
    c: &mut [f64],
    m: usize,
    k: usize,
    n: usize,
    accumulate: bool,
) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    if m * k * n >= GEMM_THRESHOLD {
        gemm(
            m,
            k,
            n,
            a,
            (1, m as isize),
            b,
            (n as isize, 1),
            c,
            accumulate,
        );
        return;
    }
    if !accumulate {
        c.fill(0.0);
    }
    for p in 0..k {
        let bp = &b[p * n..(p + 1) * n];
        for (i, &av) in a[p * m..(p + 1) * m].iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            axpy(av, bp, &mut c[i * n..(i + 1) * n]);
        }
    }
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Dot product with four independent partial sums (fixed order, so the
/// result is reproducible while still allowing vectorisation).
#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let xc = x.chunks_exact(4);
    let yc = y.chunks_exact(4);
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        for l in 0..4 {
            acc[l] += a[l] * b[l];
        }
    }
    let mut tail = 0.0;
    for (a, b) in xr.iter().zip(yr) {
        tail += a * b;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    c: &mut [f64],
    accumulate: bool,
) {
    let beta = if accumulate { 1.0 } else { 0.0 };
    // SAFETY: the slices hold exactly the m×k, k×n and m×n elements addressed
    // by the given strides (checked by the callers' debug assertions).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
