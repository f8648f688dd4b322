//! All roots of low-degree real polynomials.
//!
//! Roots come from the eigenvalues of the companion matrix and are then
//! polished by a few Newton steps on the polynomial itself. Coefficients are
//! stored lowest degree first.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// `p(x)` by Horner's rule.
pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

pub fn eval_complex(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

pub fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect()
}

/// Product of two polynomials.
pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn max_coeff(coeffs: &[f64]) -> f64 {
    coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
}

/// Drops leading coefficients that are negligible against the largest one.
fn trimmed(coeffs: &[f64]) -> &[f64] {
    let scale = max_coeff(coeffs);
    let mut n = coeffs.len();
    while n > 0 && coeffs[n - 1].abs() <= 1e-14 * scale {
        n -= 1;
    }
    &coeffs[..n]
}

fn polish(coeffs: &[f64], dcoeffs: &[f64], mut z: Complex64) -> Complex64 {
    let mut best = eval_complex(coeffs, z).norm();
    for _ in 0..8 {
        let d = eval_complex(dcoeffs, z);
        if d.norm() == 0.0 {
            break;
        }
        let next = z - eval_complex(coeffs, z) / d;
        let r = eval_complex(coeffs, next).norm();
        if !(r < best) {
            break;
        }
        best = r;
        z = next;
    }
    z
}

/// All complex roots, with multiplicity. A polynomial whose leading
/// coefficients vanish is solved at its actual degree; the zero polynomial and
/// nonzero constants have no roots.
pub fn all_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let c = trimmed(coeffs);
    if c.len() <= 1 {
        return Vec::new();
    }
    // exact zero roots
    let zeros = c.iter().take_while(|v| **v == 0.0).count();
    let c_nz = &c[zeros..];
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    let deg = c_nz.len() - 1;
    match deg {
        0 => {}
        1 => roots.push(Complex64::new(-c_nz[0] / c_nz[1], 0.0)),
        2 => {
            let (a, b, cc) = (c_nz[2], c_nz[1], c_nz[0]);
            let disc = b * b - 4.0 * a * cc;
            if disc >= 0.0 {
                let sign = if b >= 0.0 { 1.0 } else { -1.0 };
                let q = -0.5 * (b + sign * disc.sqrt());
                if q == 0.0 {
                    roots.extend([Complex64::new(0.0, 0.0); 2]);
                } else {
                    roots.push(Complex64::new(q / a, 0.0));
                    roots.push(Complex64::new(cc / q, 0.0));
                }
            } else {
                let re = -b / (2.0 * a);
                let im = (-disc).sqrt() / (2.0 * a.abs());
                roots.push(Complex64::new(re, im));
                roots.push(Complex64::new(re, -im));
            }
        }
        _ => {
            let lead = c_nz[deg];
            let mut m = DMatrix::<f64>::zeros(deg, deg);
            for i in 1..deg {
                m[(i, i - 1)] = 1.0;
            }
            for i in 0..deg {
                m[(i, deg - 1)] = -c_nz[i] / lead;
            }
            let dc = derivative(c_nz);
            roots.extend(m.complex_eigenvalues().iter().map(|z| polish(c_nz, &dc, *z)));
        }
    }
    roots
}

/// Real roots under the acceptance rule used across the crate: the imaginary
/// part must satisfy `|Im| <= 1e-8 (1 + |Re|)` and the backward error
/// `|p(Re)| <= 1e-10 * max|coeff|`. Each accepted root is polished by real
/// Newton steps. Sorted ascending, multiplicity kept.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let scale = max_coeff(coeffs);
    let dc = derivative(coeffs);
    let mut out: Vec<f64> = all_roots(coeffs)
        .into_iter()
        .filter(|z| z.im.abs() <= 1e-8 * (1.0 + z.re.abs()))
        .map(|z| {
            let mut x = z.re;
            let mut best = eval(coeffs, x).abs();
            for _ in 0..8 {
                let d = eval(&dc, x);
                if d == 0.0 {
                    break;
                }
                let next = x - eval(coeffs, x) / d;
                let r = eval(coeffs, next).abs();
                if !(r < best) {
                    break;
                }
                best = r;
                x = next;
            }
            x
        })
        .filter(|x| eval(coeffs, *x).abs() <= 1e-10 * scale)
        .collect();
    out.sort_by(|a, b| a.total_cmp(b));
    out
}
