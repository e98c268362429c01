//! Regenerates the rational Chebyshev tables in `tables/`.
//!
//! Carathéodory–Fejér approximation of `e^x` on `(-∞, 0]`: the interval is
//! mapped to the unit circle by `x = s (w - 1)/(w + 1)` (here `s = 9`), the
//! Chebyshev coefficients of the transplanted function are sampled with a
//! length-1024 DFT, and the rational approximant of type `(d, d)` is read off
//! the `d`-th singular pair of the `K × K` Hankel matrix of those coefficients
//! (`K = 75`). The poles are the roots of the singular vector polynomial that
//! lie outside the unit disc, mapped back to the `x` plane.
//!
//! The constant term of the approximant (of order `10^{-d}`) is dropped, so
//! the stored form is the strictly proper `Σ r_i / (x - s_i)`.
//!
//! Usage: `cargo run --release --example cf_tables -- <out-dir>`

use std::f64::consts::PI;
use std::fmt::Write as _;

use faer::Mat;
use nalgebra::Complex;
use qsylv::linalg::{sym_eig, DenseMatrix};

type C64 = Complex<f64>;

const NF: usize = 1024;
const K: usize = 75;
const SCALE: f64 = 9.0;

/// Σ_k c[k] z^k by Horner's rule.
fn polyval(c: &[C64], z: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &ck| acc * z + ck)
}

/// Forward DFT, `X_j = Σ_k x_k e^{-2πi jk/N}`.
fn dft(x: &[C64]) -> Vec<C64> {
    let n = x.len();
    (0..n)
        .map(|j| {
            x.iter()
                .enumerate()
                .map(|(k, &xk)| xk * C64::from_polar(1.0, -2.0 * PI * ((j * k) % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

/// Roots of `Σ_k c[k] z^k` via the companion matrix, polished by Newton.
fn roots(c: &[f64]) -> Vec<C64> {
    let deg = c.len() - 1;
    let lead = c[deg];
    let comp = Mat::<f64>::from_fn(deg, deg, |i, j| {
        if i == 0 {
            -c[deg - 1 - j] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let cc: Vec<C64> = c.iter().map(|&x| C64::new(x, 0.0)).collect();
    let dc: Vec<C64> = (1..=deg).map(|k| cc[k] * k as f64).collect();
    comp.eigenvalues()
        .expect("companion eigenvalues")
        .into_iter()
        .map(|z| {
            let mut z = C64::new(z.re, z.im);
            for _ in 0..5 {
                let dz = polyval(&cc, z) / polyval(&dc, z);
                if !dz.re.is_finite() || !dz.im.is_finite() {
                    break;
                }
                z -= dz;
            }
            z
        })
        .collect()
}

/// Monic polynomial with the given roots, coefficients lowest degree first.
fn poly_from_roots(r: &[C64]) -> Vec<C64> {
    let mut p = vec![C64::new(1.0, 0.0)];
    for &z in r {
        let mut q = vec![C64::new(0.0, 0.0); p.len() + 1];
        for (k, &pk) in p.iter().enumerate() {
            q[k + 1] += pk;
            q[k] -= pk * z;
        }
        p = q;
    }
    p
}

/// Poles and residues of the degree-`d` approximant.
fn cf(d: usize) -> (Vec<C64>, Vec<C64>) {
    let w: Vec<C64> = (0..NF).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / NF as f64)).collect();
    let f: Vec<C64> = w
        .iter()
        .map(|wk| C64::new((SCALE * (wk.re - 1.0) / (wk.re + 1.0 + 1e-16)).exp(), 0.0))
        .collect();
    let c: Vec<f64> = dft(&f).iter().map(|z| z.re / NF as f64).collect();
    let fw: Vec<C64> = {
        let ck: Vec<C64> = c[..=K].iter().map(|&x| C64::new(x, 0.0)).collect();
        w.iter().map(|&z| polyval(&ck, z)).collect()
    };

    // The Hankel matrix is symmetric: singular pairs come from its eigenpairs.
    let h = DenseMatrix::from_fn(K, K, |i, j| if i + j < K { c[1 + i + j] } else { 0.0 });
    let (lambda, q) = sym_eig(&h).expect("Hankel eigendecomposition");
    let mut order: Vec<usize> = (0..K).collect();
    order.sort_by(|&a, &b| lambda[b].abs().total_cmp(&lambda[a].abs()));
    let idx = order[d];
    let s = lambda[idx].abs();
    let v: Vec<f64> = q.column(idx).iter().copied().collect();
    let u: Vec<f64> = v.iter().map(|&x| x * lambda[idx].signum()).rev().collect();

    let pad = |x: &[f64]| {
        let mut out: Vec<C64> = x.iter().map(|&t| C64::new(t, 0.0)).collect();
        out.resize(NF, C64::new(0.0, 0.0));
        out
    };
    let (fu, fv) = (dft(&pad(&u)), dft(&pad(&v)));
    let rt: Vec<C64> = (0..NF).map(|j| fw[j] - w[j].powu(K as u32) * s * fu[j] / fv[j]).collect();

    // roots of v(z) = v[0] z^{K-1} + ... + v[K-1]
    let vc: Vec<f64> = v.iter().rev().copied().collect();
    let mut qj: Vec<C64> = roots(&vc).into_iter().filter(|z| z.norm() > 1.0).collect();
    assert_eq!(qj.len(), d, "expected {d} roots outside the unit disc");
    qj.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let qc = poly_from_roots(&qj);
    let pt: Vec<C64> = (0..NF).map(|j| rt[j] * polyval(&qc, w[j])).collect();
    let ptc: Vec<C64> = dft(&pt)[..=d].iter().map(|z| C64::new(z.re / NF as f64, 0.0)).collect();

    let mut poles = Vec::with_capacity(d);
    let mut residues = Vec::with_capacity(d);
    for (k, &qk) in qj.iter().enumerate() {
        let denom: C64 = qj.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &qj)| qk - qj).product();
        let ck = polyval(&ptc, qk) / denom;
        let zk = (qk - 1.0).powu(2) / (qk + 1.0).powu(2) * SCALE;
        poles.push(zk);
        residues.push(ck * zk * 4.0 / (qk * qk - 1.0));
    }
    symmetrize(&mut poles, &mut residues);
    (poles, residues)
}

/// Forces exact conjugate-pair closure: the upper-half-plane member of each
/// pair is kept and mirrored.
fn symmetrize(poles: &mut [C64], residues: &mut [C64]) {
    let n = poles.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| poles[a].re.total_cmp(&poles[b].re).then(poles[b].im.total_cmp(&poles[a].im)));
    let (p, r): (Vec<C64>, Vec<C64>) = order.iter().map(|&i| (poles[i], residues[i])).unzip();
    for k in (0..n).step_by(2) {
        let (a, b) = (k, k + 1);
        assert!(p[a].im > 0.0 && (p[a] - p[b].conj()).norm() < 1e-6 * p[a].norm());
        let pole = (p[a] + p[b].conj()) * 0.5;
        let res = (r[a] + r[b].conj()) * 0.5;
        poles[a] = pole;
        poles[b] = pole.conj();
        residues[a] = res;
        residues[b] = res.conj();
    }
}

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "crates/core/tables".to_owned());
    for d in [8, 12, 14, 16] {
        let (poles, residues) = cf(d);
        let mut out = format!("{d}\n");
        for (s, r) in poles.iter().zip(&residues) {
            writeln!(out, "{:.16e} {:.16e} {:.16e} {:.16e}", s.re, s.im, r.re, r.im).unwrap();
        }
        let err = (0..1000)
            .map(|i| {
                let x = -(10f64).powf(-8.0 + 16.0 * i as f64 / 999.0);
                let r: C64 = poles.iter().zip(&residues).map(|(&s, &r)| r / (C64::new(x, 0.0) - s)).sum();
                (r.re - x.exp()).abs()
            })
            .fold(0.0, f64::max);
        eprintln!("d = {d}: max error on [-1e8, -1e-8] = {err:.2e}");
        let path = format!("{dir}/cf_exp_{d}.txt");
        std::fs::write(&path, out).expect("write table");
    }
}
