//! Matrix exponentials in HODLR arithmetic.
//!
//! Two strategies are provided:
//!
//! - [`expm_pade`]: diagonal Padé approximant with scaling and squaring. The
//!   cost grows with `log₂ ‖H‖₂` through the squaring phase.
//! - [`expm_chebyshev`]: the best uniform rational approximant of `e^x` on
//!   `(-∞, 0]`, evaluated as a sum of shifted inverses. Accuracy is uniform in
//!   `t`, and the cost does not depend on `‖H‖`.
//!
//! [`choose_strategy`] picks between them from `t·‖H‖₂`.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{Complex, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hodlr::{HodlrConfig, HodlrMatrix, LowRank};
use crate::linalg::DenseMatrix;
use crate::par;
use crate::{Error, Result};

/// Default crossover for [`choose_strategy`].
pub const DEFAULT_CROSSOVER: f64 = 64.0;

/// Degrees for which a table ships with the crate.
pub const TABLE_DEGREES: [usize; 4] = [8, 12, 14, 16];

/// Poles and residues of `e^x ≈ Σ r_i / (x − s_i)` on `(-∞, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevExpTable {
    poles: Vec<Complex<f64>>,
    residues: Vec<Complex<f64>>,
}

impl ChebyshevExpTable {
    /// One of the bundled tables (`d` ∈ [`TABLE_DEGREES`]), validated on load.
    pub fn builtin(d: usize) -> Result<Self> {
        let text = match d {
            8 => include_str!("../tables/cf_exp_8.txt"),
            12 => include_str!("../tables/cf_exp_12.txt"),
            14 => include_str!("../tables/cf_exp_14.txt"),
            16 => include_str!("../tables/cf_exp_16.txt"),
            _ => {
                return Err(Error::invalid(format!(
                    "no rational Chebyshev table of degree {d} (available: {TABLE_DEGREES:?})"
                )))
            }
        };
        let table = Self::parse(text)?;
        table.validate()?;
        Ok(table)
    }

    /// Parses the text format: a line with `d`, then `d` lines
    /// `Re(s) Im(s) Re(r) Im(r)`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let d: usize = lines
            .next()
            .and_then(|l| l.parse().ok())
            .ok_or_else(|| Error::invalid("table: missing degree line"))?;
        let mut poles = Vec::with_capacity(d);
        let mut residues = Vec::with_capacity(d);
        for (k, line) in lines.enumerate() {
            let v: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::invalid(format!("table line {}: {e}", k + 2)))?;
            if v.len() != 4 {
                return Err(Error::invalid(format!("table line {}: expected 4 numbers", k + 2)));
            }
            poles.push(Complex::new(v[0], v[1]));
            residues.push(Complex::new(v[2], v[3]));
        }
        if poles.len() != d || d == 0 {
            return Err(Error::invalid(format!("table: header says {d} poles, found {}", poles.len())));
        }
        let table = ChebyshevExpTable { poles, residues };
        table.check_conjugate_closure()?;
        Ok(table)
    }

    fn check_conjugate_closure(&self) -> Result<()> {
        for (s, r) in self.poles.iter().zip(&self.residues) {
            if s.im == 0.0 {
                if r.im != 0.0 {
                    return Err(Error::invalid("table: real pole with complex residue"));
                }
                continue;
            }
            let paired = self.poles.iter().zip(&self.residues).any(|(t, q)| *t == s.conj() && *q == r.conj());
            if !paired {
                return Err(Error::invalid(format!("table: pole {s} has no conjugate partner")));
            }
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.poles.len()
    }

    pub fn poles(&self) -> &[Complex<f64>] {
        &self.poles
    }

    pub fn residues(&self) -> &[Complex<f64>] {
        &self.residues
    }

    /// The approximant at a real point.
    pub fn eval(&self, x: f64) -> f64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(&s, &r)| (r / (Complex::new(x, 0.0) - s)).re)
            .sum()
    }

    /// Uniform error bound accepted at load time. The best approximation error
    /// behaves like `9.28903^{-d}` (Halphen's constant); the slack covers the
    /// approximant being near-best and roundoff in the evaluation.
    pub fn error_bound(&self) -> f64 {
        2.0 * 9.28903f64.powi(-(self.degree() as i32)) + 1e-13
    }

    /// Max deviation from `e^x` on 1000 log-spaced points of `[-10⁸, -10⁻⁸]`.
    pub fn max_error(&self) -> f64 {
        (0..1000)
            .map(|i| {
                let x = -(10f64).powf(-8.0 + 16.0 * i as f64 / 999.0);
                (self.eval(x) - x.exp()).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Fails if [`max_error`](Self::max_error) exceeds [`error_bound`](Self::error_bound).
    pub fn validate(&self) -> Result<()> {
        let err = self.max_error();
        if err > self.error_bound() {
            return Err(Error::Numerical(format!(
                "rational Chebyshev table of degree {} has error {err:e} (bound {:e})",
                self.degree(),
                self.error_bound()
            )));
        }
        Ok(())
    }
}

/// Diagonal Padé approximant settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PadeConfig {
    pub degree: usize,
}

impl Default for PadeConfig {
    fn default() -> Self {
        PadeConfig { degree: 13 }
    }
}

/// Coefficients `c_k` of the `(d, d)` Padé numerator; the denominator has
/// coefficients `(-1)^k c_k`.
fn pade_coefficients(d: usize) -> Vec<f64> {
    let mut c = vec![1.0; d + 1];
    for k in 1..=d {
        c[k] = c[k - 1] * (d + 1 - k) as f64 / (k * (2 * d + 1 - k)) as f64;
    }
    c
}

/// `e^H` by the `(d, d)` Padé approximant with scaling and squaring.
///
/// `H` is scaled by `2^{-k}` with `k = max(0, ⌈log₂ ‖H‖₂⌉)`, the approximant
/// `q(X)^{-1} p(X)` is evaluated with Horner's rule in `X²`, and the result is
/// squared `k` times. All products are truncated at `cfg.threshold`.
pub fn expm_pade(h: &HodlrMatrix, cfg: &HodlrConfig, pade: &PadeConfig) -> Result<HodlrMatrix> {
    cfg.validate()?;
    if h.rows() != h.cols() {
        return Err(Error::invalid("expm: matrix must be square"));
    }
    if pade.degree == 0 {
        return Err(Error::invalid("expm: Padé degree must be at least 1"));
    }
    let trunc = cfg.truncation();
    let norm = h.two_norm_estimate();
    if !norm.is_finite() {
        return Err(Error::invalid("expm: matrix has non-finite entries"));
    }
    let squarings = squaring_count(norm);
    let x = h.scaled(0.5f64.powi(squarings as i32));
    let c = pade_coefficients(pade.degree);

    // p(X) = E + O, q(X) = E − O with E, O the even and odd parts.
    let y = x.multiply(&x, &trunc)?;
    let horner = |coef: &mut dyn Iterator<Item = f64>| -> Result<HodlrMatrix> {
        let coef: Vec<f64> = coef.collect();
        let mut acc = x.identity_like().scaled(*coef.last().unwrap());
        for &ck in coef.iter().rev().skip(1) {
            acc = y.multiply(&acc, &trunc)?;
            acc.shift_diagonal(ck);
        }
        Ok(acc)
    };
    let even = horner(&mut c.iter().copied().step_by(2))?;
    let odd = if pade.degree >= 1 {
        x.multiply(&horner(&mut c.iter().copied().skip(1).step_by(2))?, &trunc)?
    } else {
        x.zeros_like()
    };
    let p = even.add(&odd, &trunc)?;
    let q = even.sub(&odd, &trunc)?;
    let qinv = q.inverse(&trunc).map_err(|e| match e {
        Error::Singular { .. } => Error::Numerical("expm: Padé denominator is singular".into()),
        other => other,
    })?;
    let mut r = qinv.multiply(&p, &trunc)?;
    for _ in 0..squarings {
        r = r.multiply(&r, &trunc)?;
    }
    Ok(r)
}

/// `max(0, ⌈log₂ norm⌉)`.
pub fn squaring_count(norm: f64) -> u32 {
    if norm <= 1.0 {
        0
    } else {
        norm.log2().ceil() as u32
    }
}

static POLE_SOLVES: AtomicU64 = AtomicU64::new(0);

/// Number of shifted solves performed by [`expm_chebyshev`] so far in this
/// process (each conjugate pair counts once).
pub fn pole_solves() -> u64 {
    POLE_SOLVES.load(Ordering::Relaxed)
}

/// Cheap positive-definiteness probe: positive diagonal and positive
/// Rayleigh quotients for a few fixed pseudo-random vectors.
pub(crate) fn probe_spd(h: &HodlrMatrix) -> Result<()> {
    if let Some((i, d)) = h.diagonal().iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
        return Err(Error::invalid(format!("matrix is not positive definite (diagonal entry {i} is {d})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5bd);
    for _ in 0..4 {
        let x = DVector::from_fn(h.rows(), |_, _| rng.random_range(-1.0..1.0));
        let rq = x.dot(&h.matvec(&x));
        if !(rq > 0.0) {
            return Err(Error::invalid(format!("matrix is not positive definite (Rayleigh quotient {rq:e})")));
        }
    }
    Ok(())
}

/// `e^{-tH}` for symmetric positive definite `H` by the rational Chebyshev
/// approximant in `table`.
///
/// Each conjugate pole pair `(s, s̄)` needs one complex shifted inverse
/// `(−tH − sI)^{-1}`. That inverse is computed in real arithmetic on the
/// interleaved `2n × 2n` HODLR matrix representing `−tH − sI`, with each
/// complex entry stored as a 2×2 block. The pair contributes
/// `2·Re(r (−tH − sI)^{-1})`. Pairs are independent and may run concurrently.
/// The sum is accumulated in table order.
pub fn expm_chebyshev(t: f64, h: &HodlrMatrix, table: &ChebyshevExpTable, cfg: &HodlrConfig) -> Result<HodlrMatrix> {
    expm_chebyshev_with(t, h, table, cfg, cfg!(feature = "parallel"))
}

pub(crate) fn expm_chebyshev_with(
    t: f64,
    h: &HodlrMatrix,
    table: &ChebyshevExpTable,
    cfg: &HodlrConfig,
    parallel: bool,
) -> Result<HodlrMatrix> {
    cfg.validate()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!("expm_chebyshev: t must be positive, got {t}")));
    }
    if h.rows() != h.cols() {
        return Err(Error::invalid("expm: matrix must be square"));
    }
    probe_spd(h)?;
    let trunc = cfg.truncation();
    let y = h.scaled(-t);

    // one representative per conjugate pair (upper half plane) plus real poles
    let terms: Vec<(Complex<f64>, Complex<f64>, f64)> = table
        .poles
        .iter()
        .zip(&table.residues)
        .filter(|(s, _)| s.im >= 0.0)
        .map(|(&s, &r)| (s, r, if s.im > 0.0 { 2.0 } else { 1.0 }))
        .collect();

    let parts = par::map_indexed(terms.len(), parallel, |k| -> Result<HodlrMatrix> {
        let (s, r, mult) = terms[k];
        POLE_SOLVES.fetch_add(1, Ordering::Relaxed);
        if s.im == 0.0 {
            let mut shifted = y.clone();
            shifted.shift_diagonal(-s.re);
            return Ok(shifted.inverse(&trunc)?.scaled(mult * r.re));
        }
        let w = lift(&y, -s.re, s.im);
        let winv = w.inverse(&trunc)?;
        let p = extract(&winv, 0).recompress(&trunc);
        let q = extract(&winv, 1).recompress(&trunc);
        p.scaled(mult * r.re).add_scaled(-mult * r.im, &q, &trunc)
    });
    let mut acc = h.zeros_like();
    for part in parts {
        acc = acc.add(&part?, &trunc)?;
    }
    Ok(acc)
}

/// Interleaved real form of `Y + shift·I − i·b·I`: entry `(i, j)` becomes the
/// 2×2 block `[[a, −β], [β, a]]` representing the complex number `a + iβ`.
fn lift(y: &HodlrMatrix, shift: f64, b: f64) -> HodlrMatrix {
    match y {
        HodlrMatrix::Leaf(d) => {
            let m = d.nrows();
            let mut out = DenseMatrix::zeros(2 * m, 2 * m);
            for j in 0..m {
                for i in 0..m {
                    let a = d[(i, j)] + if i == j { shift } else { 0.0 };
                    out[(2 * i, 2 * j)] = a;
                    out[(2 * i + 1, 2 * j + 1)] = a;
                }
                out[(2 * j, 2 * j + 1)] = b;
                out[(2 * j + 1, 2 * j)] = -b;
            }
            HodlrMatrix::Leaf(out)
        }
        HodlrMatrix::Node(nd) => HodlrMatrix::node(
            lift(&nd.a11, shift, b),
            lift_lowrank(&nd.a12),
            lift_lowrank(&nd.a21),
            lift(&nd.a22, shift, b),
        ),
    }
}

/// `U Vᵀ ↦ (U ⊗ I₂)(V ⊗ I₂)ᵀ`.
fn lift_lowrank(lr: &LowRank) -> LowRank {
    let kron = |f: &DenseMatrix| {
        let mut out = DenseMatrix::zeros(2 * f.nrows(), 2 * f.ncols());
        for j in 0..f.ncols() {
            for i in 0..f.nrows() {
                out[(2 * i, 2 * j)] = f[(i, j)];
                out[(2 * i + 1, 2 * j + 1)] = f[(i, j)];
            }
        }
        out
    };
    LowRank::new(kron(&lr.u), kron(&lr.v))
}

/// Real (`parity = 0`) or imaginary (`parity = 1`) part of a lifted matrix:
/// the entries at rows `2i + parity`, columns `2j`.
fn extract(w: &HodlrMatrix, parity: usize) -> HodlrMatrix {
    let rows = |f: &DenseMatrix, p: usize| {
        DenseMatrix::from_fn(f.nrows() / 2, f.ncols(), |i, k| f[(2 * i + p, k)])
    };
    match w {
        HodlrMatrix::Leaf(d) => {
            let m = d.nrows() / 2;
            HodlrMatrix::Leaf(DenseMatrix::from_fn(m, m, |i, j| d[(2 * i + parity, 2 * j)]))
        }
        HodlrMatrix::Node(nd) => HodlrMatrix::node(
            extract(&nd.a11, parity),
            LowRank::new(rows(&nd.a12.u, parity), rows(&nd.a12.v, 0)),
            LowRank::new(rows(&nd.a21.u, parity), rows(&nd.a21.v, 0)),
            extract(&nd.a22, parity),
        ),
    }
}

/// Which exponential evaluation to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpStrategy {
    Pade,
    Chebyshev,
}

/// Padé when `t·‖H‖₂ ≤ crossover` (inclusive), rational Chebyshev otherwise.
pub fn choose_strategy(t: f64, two_norm: f64, crossover: f64) -> ExpStrategy {
    if t * two_norm <= crossover {
        ExpStrategy::Pade
    } else {
        ExpStrategy::Chebyshev
    }
}

/// `e^{-tH}` by the strategy [`choose_strategy`] selects.
pub fn expm_neg(
    t: f64,
    h: &HodlrMatrix,
    two_norm: f64,
    table: &ChebyshevExpTable,
    cfg: &HodlrConfig,
    crossover: f64,
) -> Result<HodlrMatrix> {
    match choose_strategy(t, two_norm, crossover) {
        ExpStrategy::Pade => expm_pade(&h.scaled(-t), cfg, &PadeConfig::default()),
        ExpStrategy::Chebyshev => expm_chebyshev_with(t, h, table, cfg, false),
    }
}
