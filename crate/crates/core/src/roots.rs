//! Low-level complex root finding.
//!
//! Polynomial roots come from the eigenvalues of the companion matrix,
//! computed with a shifted QR iteration on the (already upper-Hessenberg)
//! companion form, and are then polished by Newton steps on the polynomial.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const MAX_QR_SWEEPS: usize = 200;

/// Eigenvalues of an upper-Hessenberg complex matrix given as rows.
///
/// Entries below the first subdiagonal are ignored. Single-shift QR with
/// Wilkinson shifts and Givens rotations; O(n^3) per eigenvalue, meant for
/// the tiny matrices this crate needs.
pub fn hessenberg_eigenvalues(h: &[Vec<C64>]) -> Result<Vec<C64>> {
    let n = h.len();
    let mut a: Vec<Vec<C64>> = h.to_vec();
    let mut eig = vec![C64::new(0.0, 0.0); n];
    if n == 0 {
        return Ok(eig);
    }
    let mut hi = n - 1;
    let mut iter = 0usize;
    loop {
        if hi == 0 {
            eig[0] = a[0][0];
            break;
        }
        // locate the start of the unreduced block ending at `hi`
        let mut lo = hi;
        while lo > 0 {
            let sub = a[lo][lo - 1].norm();
            let diag = a[lo][lo].norm() + a[lo - 1][lo - 1].norm();
            if sub <= f64::EPSILON * diag || sub < f64::MIN_POSITIVE {
                a[lo][lo - 1] = C64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = a[hi][hi];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > MAX_QR_SWEEPS {
            return Err(Error::NoConvergence);
        }

        let shift = if iter.is_multiple_of(11) {
            // exceptional shift to break cycles
            a[hi][hi] + C64::new(a[hi][hi - 1].norm(), 0.0)
        } else {
            wilkinson_shift(a[hi - 1][hi - 1], a[hi - 1][hi], a[hi][hi - 1], a[hi][hi])
        };

        for k in lo..=hi {
            a[k][k] -= shift;
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let x = a[k][k];
            let y = a[k + 1][k];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (C64::new(1.0, 0.0), C64::new(0.0, 0.0))
            } else {
                (x / r, y / r)
            };
            for j in k..=hi {
                let top = a[k][j];
                let bot = a[k + 1][j];
                a[k][j] = c.conj() * top + s.conj() * bot;
                a[k + 1][j] = -s * top + c * bot;
            }
            rotations.push((c, s));
        }
        for (offset, (c, s)) in rotations.into_iter().enumerate() {
            let k = lo + offset;
            let last_row = (k + 2).min(hi);
            for row in a.iter_mut().take(last_row + 1).skip(lo) {
                let left = row[k];
                let right = row[k + 1];
                row[k] = left * c + right * s;
                row[k + 1] = -left * s.conj() + right * c.conj();
            }
        }
        for k in lo..=hi {
            a[k][k] += shift;
        }
    }
    Ok(eig)
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = 0.5 * (a + d);
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    let e1 = half_tr + disc;
    let e2 = half_tr - disc;
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// Evaluates a polynomial and its derivative by Horner's rule.
///
/// `coeffs[k]` multiplies z^k.
pub fn horner(coeffs: &[C64], z: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of a polynomial via companion-matrix eigenvalues and Newton polish.
///
/// `coeffs[k]` multiplies z^k; the leading coefficient must be nonzero.
pub fn polynomial_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let degree = coeffs.len().saturating_sub(1);
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[degree];
    if lead.norm() == 0.0 {
        return Err(Error::InvalidArgument("leading coefficient is zero".into()));
    }
    let monic: Vec<C64> = coeffs.iter().map(|&c| c / lead).collect();

    // companion matrix: first row holds -c_{n-1}, ..., -c_0, ones below the diagonal
    let mut comp = vec![vec![C64::new(0.0, 0.0); degree]; degree];
    for j in 0..degree {
        comp[0][j] = -monic[degree - 1 - j];
    }
    for i in 1..degree {
        comp[i][i - 1] = C64::new(1.0, 0.0);
    }
    let mut roots = hessenberg_eigenvalues(&comp)?;
    for z in roots.iter_mut() {
        *z = newton_polish(|w| horner(&monic, w), *z, 1e-15, 30);
    }
    Ok(roots)
}

/// Newton iteration that keeps the best iterate seen.
///
/// `eval` returns (value, derivative). Stops once the step is below
/// `rel_step` relative to |z| or after `max_iter` steps.
pub fn newton_polish<F>(eval: F, z0: C64, rel_step: f64, max_iter: usize) -> C64
where
    F: Fn(C64) -> (C64, C64),
{
    let mut z = z0;
    let (mut fz, mut dfz) = eval(z);
    let mut best = (fz.norm(), z);
    for _ in 0..max_iter {
        if dfz.norm() == 0.0 || fz.norm() == 0.0 {
            break;
        }
        let step = fz / dfz;
        z -= step;
        let next = eval(z);
        fz = next.0;
        dfz = next.1;
        if fz.norm() < best.0 {
            best = (fz.norm(), z);
        }
        if step.norm() <= rel_step * z.norm().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    best.1
}

/// Characteristic polynomial det(zI − A) by the Faddeev–LeVerrier recursion.
///
/// Returns coefficients with `result[k]` multiplying z^k (monic, length n+1).
pub fn characteristic_polynomial(a: &[Vec<C64>]) -> Vec<C64> {
    let n = a.len();
    let zero = C64::new(0.0, 0.0);
    let mut coeffs = vec![zero; n + 1];
    coeffs[n] = C64::new(1.0, 0.0);
    let mut m = vec![vec![zero; n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = vec![vec![zero; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = zero;
                for l in 0..n {
                    acc += a[i][l] * m[l][j];
                }
                next[i][j] = acc;
            }
            next[i][i] += coeffs[n - k + 1];
        }
        m = next;
        let mut tr = zero;
        for i in 0..n {
            for l in 0..n {
                tr += a[i][l] * m[l][i];
            }
        }
        coeffs[n - k] = -tr / k as f64;
    }
    coeffs
}

/// Sort key shared by every root list in the crate: descending real part,
/// then descending imaginary part. Real parts closer than `tie` count as equal.
pub fn sort_descending(values: &mut [C64], tie: f64) {
    values.sort_by(|x, y| y.re.total_cmp(&x.re));
    // reorder near-ties by imaginary part with adjacent swaps
    let n = values.len();
    for _ in 0..n {
        let mut swapped = false;
        for i in 1..n {
            let (x, y) = (values[i - 1], values[i]);
            if (x.re - y.re).abs() <= tie && y.im > x.im {
                values.swap(i - 1, i);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
}

/// Pairs each entry of `reference` with a distinct entry of `candidates`,
/// minimizing the largest pairing distance. Returns `perm` such that
/// `candidates[perm[i]]` is matched to `reference[i]`, and that distance.
pub fn match_nearest(reference: &[C64; 4], candidates: &[C64; 4]) -> ([usize; 4], f64) {
    let mut best_perm = [0, 1, 2, 3];
    let mut best = (f64::INFINITY, f64::INFINITY);
    for perm in permutations4() {
        let mut worst = 0.0_f64;
        let mut total = 0.0_f64;
        for i in 0..4 {
            let d = (reference[i] - candidates[perm[i]]).norm();
            worst = worst.max(d);
            total += d;
        }
        if (worst, total) < best {
            best = (worst, total);
            best_perm = perm;
        }
    }
    (best_perm, best.0)
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let mut seen = [false; 4];
                    if p.iter().all(|&i| !std::mem::replace(&mut seen[i], true)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}
