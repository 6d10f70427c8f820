//! SVD-based minimum-norm solve of a square system without forming U or V.
//!
//! The matrix is reduced to upper bidiagonal form with Householder reflectors
//! (left reflectors are applied to the right-hand side as they are built,
//! right reflectors are kept). The bidiagonal is diagonalized by implicitly
//! shifted QR sweeps; left rotations are again applied to the right-hand side
//! and right rotations are logged. The solution `V Σ⁺ Uᵀ b` is then formed by
//! replaying the log and the stored reflectors onto `Σ⁺ Uᵀ b`.

use crate::error::{Error, Result};

const MAX_SWEEPS_PER_VALUE: usize = 75;

pub(crate) struct MinNormSolution {
    /// `p × nrhs`, column-major.
    pub beta: Vec<f64>,
    #[allow(dead_code)]
    pub rank: usize,
    #[allow(dead_code)]
    pub singular_values: Vec<f64>,
}

enum RightOp {
    /// Plane rotation of coordinates `(j, j + 1)`.
    Rot { j: usize, c: f64, s: f64 },
    Negate(usize),
}

struct Reflector {
    /// First coordinate the reflector acts on; `v[0]` is implicitly 1.
    offset: usize,
    v: Vec<f64>,
    tau: f64,
}

/// Turns `x` into a Householder vector (with `x[0] = 1`) and returns
/// `(tau, beta)` such that `(I − τ v vᵀ) x_in = (beta, 0, …, 0)`.
fn householder(x: &mut [f64]) -> (f64, f64) {
    let alpha = x[0];
    let tail_sq: f64 = x[1..].iter().map(|v| v * v).sum();
    if tail_sq == 0.0 {
        x[0] = 1.0;
        return (0.0, alpha);
    }
    let norm = (alpha * alpha + tail_sq).sqrt();
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    for v in &mut x[1..] {
        *v *= scale;
    }
    x[0] = 1.0;
    (tau, beta)
}

#[inline]
fn apply_reflector(v: &[f64], tau: f64, y: &mut [f64]) {
    let s: f64 = v.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
    let f = tau * s;
    for (yi, vi) in y.iter_mut().zip(v) {
        *yi -= f * vi;
    }
}

/// Applies the plane rotation `(y, z) -> (c y + s z, c z − s y)` to rows
/// `r1` and `r2` of every column of the column-major `p`-row matrix `w`.
#[inline]
fn rotate_rows(w: &mut [f64], p: usize, r1: usize, r2: usize, c: f64, s: f64) {
    for col in w.chunks_exact_mut(p) {
        let (y, z) = (col[r1], col[r2]);
        col[r1] = y * c + z * s;
        col[r2] = z * c - y * s;
    }
}

/// Solves `min ‖A β − b‖` with minimum `‖β‖` for a square `p×p` matrix stored
/// column-major in `a` (destroyed), for each column of the column-major
/// `p × nrhs` matrix `b` (overwritten). Singular values `≤ scale · σ_max`
/// count as zero.
pub(crate) fn min_norm_solve(
    a: &mut [f64],
    p: usize,
    b: &mut [f64],
    scale: f64,
) -> Result<MinNormSolution> {
    debug_assert_eq!(a.len(), p * p);
    debug_assert_eq!(b.len() % p, 0);

    let mut diag = vec![0.0; p];
    // sup[i] couples diag[i - 1] and diag[i]; sup[0] stays zero.
    let mut sup = vec![0.0; p];
    let mut right = Vec::with_capacity(p.saturating_sub(1));
    let mut row_buf = vec![0.0; p];
    let mut work = vec![0.0; p];

    for i in 0..p {
        let (head, tail) = a.split_at_mut((i + 1) * p);
        let col = &mut head[i * p + i..(i + 1) * p];
        let (tau, beta) = householder(col);
        diag[i] = beta;
        if tau != 0.0 {
            let v = &*col;
            for j in 0..(p - i - 1) {
                let cj = &mut tail[j * p + i..(j + 1) * p];
                apply_reflector(v, tau, cj);
            }
            for col in b.chunks_exact_mut(p) {
                apply_reflector(v, tau, &mut col[i..]);
            }
        }

        if i + 1 < p {
            let n = p - i - 1;
            let v = &mut row_buf[..n];
            for (k, j) in (i + 1..p).enumerate() {
                v[k] = a[i + j * p];
            }
            let (tau, beta) = householder(v);
            sup[i + 1] = beta;
            if tau != 0.0 {
                // Rows i+1.., columns i+1..: A -= τ (A v) vᵀ, column by column.
                let w = &mut work[..n];
                w.fill(0.0);
                for (k, j) in (i + 1..p).enumerate() {
                    let cj = &a[j * p + i + 1..(j + 1) * p];
                    let vk = v[k];
                    for (wr, &x) in w.iter_mut().zip(cj) {
                        *wr += vk * x;
                    }
                }
                for (k, j) in (i + 1..p).enumerate() {
                    let f = tau * v[k];
                    let cj = &mut a[j * p + i + 1..(j + 1) * p];
                    for (x, &wr) in cj.iter_mut().zip(w.iter()) {
                        *x -= f * wr;
                    }
                }
            }
            right.push(Reflector { offset: i + 1, v: v.to_vec(), tau });
        }
    }

    let log = diagonalize(&mut diag, &mut sup, b, p)?;

    let sigma_max = diag.iter().cloned().fold(0.0, f64::max);
    let tol = scale * sigma_max;
    let rank = diag.iter().filter(|&&s| s > tol).count();
    for z in b.chunks_exact_mut(p) {
        for (zi, &s) in z.iter_mut().zip(&diag) {
            *zi = if s > tol { *zi / s } else { 0.0 };
        }
        for op in log.iter().rev() {
            match *op {
                RightOp::Rot { j, c, s } => {
                    let (x, y) = (z[j], z[j + 1]);
                    z[j] = c * x - s * y;
                    z[j + 1] = s * x + c * y;
                }
                RightOp::Negate(k) => z[k] = -z[k],
            }
        }
        for r in right.iter().rev() {
            if r.tau != 0.0 {
                apply_reflector(&r.v, r.tau, &mut z[r.offset..]);
            }
        }
    }

    Ok(MinNormSolution { beta: b.to_vec(), rank, singular_values: diag })
}

/// Implicit-shift QR on the bidiagonal `(diag, sup)`. Left rotations are
/// applied to the columns of `w` (which hold `Uᵀb`), right rotations are
/// returned.
fn diagonalize(diag: &mut [f64], sup: &mut [f64], w: &mut [f64], rows: usize) -> Result<Vec<RightOp>> {
    let p = diag.len();
    let mut log = Vec::new();
    let anorm = diag
        .iter()
        .zip(sup.iter())
        .map(|(d, e)| d.abs() + e.abs())
        .fold(0.0, f64::max);
    let negligible = |x: f64| x.abs() + anorm == anorm;

    for k in (0..p).rev() {
        let mut sweeps = 0;
        loop {
            // Locate the start `l` of the unreduced block ending at k.
            let mut l = k;
            let mut cancel = false;
            loop {
                if negligible(sup[l]) {
                    break;
                }
                // sup[0] == 0, so l >= 1 here.
                if negligible(diag[l - 1]) {
                    cancel = true;
                    break;
                }
                l -= 1;
            }

            if cancel {
                // diag[l - 1] is negligible: chase sup[l..=k] out with left rotations.
                let nm = l - 1;
                let (mut c, mut s) = (0.0, 1.0);
                for i in l..=k {
                    let f = s * sup[i];
                    sup[i] *= c;
                    if negligible(f) {
                        break;
                    }
                    let g = diag[i];
                    let h = f.hypot(g);
                    diag[i] = h;
                    c = g / h;
                    s = -f / h;
                    rotate_rows(w, rows, nm, i, c, s);
                }
            }

            let z = diag[k];
            if l == k {
                if z < 0.0 {
                    diag[k] = -z;
                    log.push(RightOp::Negate(k));
                }
                break;
            }

            sweeps += 1;
            if sweeps > MAX_SWEEPS_PER_VALUE {
                return Err(Error::NumericFailure(format!(
                    "bidiagonal SVD did not converge for singular value {k}"
                )));
            }

            // Wilkinson-style shift from the trailing 2x2 block.
            let mut x = diag[l];
            let nm = k - 1;
            let mut y = diag[nm];
            let mut g = sup[nm];
            let mut h = sup[k];
            let mut f = ((y - z) * (y + z) + (g - h) * (g + h)) / (2.0 * h * y);
            g = f.hypot(1.0);
            f = ((x - z) * (x + z) + h * ((y / (f + g.copysign(f))) - h)) / x;

            let (mut c, mut s) = (1.0, 1.0);
            for j in l..=nm {
                let i = j + 1;
                g = sup[i];
                y = diag[i];
                h = s * g;
                g *= c;
                let mut zz = f.hypot(h);
                sup[j] = zz;
                c = f / zz;
                s = h / zz;
                f = x * c + g * s;
                g = g * c - x * s;
                h = y * s;
                y *= c;
                log.push(RightOp::Rot { j, c, s });
                zz = f.hypot(h);
                diag[j] = zz;
                if zz != 0.0 {
                    c = f / zz;
                    s = h / zz;
                }
                f = c * g + s * y;
                x = c * y - s * g;
                rotate_rows(w, rows, j, i, c, s);
            }
            sup[l] = 0.0;
            sup[k] = f;
            diag[k] = x;
        }
    }
    Ok(log)
}
