//! Brute-force evolution of a quadratic generator as a dense operator in a
//! truncated number basis.
//!
//! Used as ground truth for the moment engine on one to three modes. The
//! quadrature operators and quadratic forms are sparse; the evolved operator
//! `μ` is dense.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::SVD;

use crate::error::{Error, Result};
use crate::generator::GeneratorSpec;
use crate::linalg::omega_c;
use crate::{CMatrix, CVector, C64};

/// Largest supported matrix side `dim_per_mode^n_modes`.
pub const MAX_SIDE: usize = 4096;
/// Largest supported number of modes.
pub const MAX_MODES: usize = 3;

/// A dense operator on `n_modes` modes, each truncated to `dim_per_mode`
/// number states. Mode 0 is the most significant tensor factor.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    dim_per_mode: usize,
    n_modes: usize,
    pub matrix: CMatrix,
}

fn side(dim: usize, n_modes: usize) -> Result<usize> {
    if dim < 2 {
        return Err(Error::InvalidParameter(format!("truncation dim must be at least 2, got {dim}")));
    }
    if n_modes == 0 || n_modes > MAX_MODES {
        return Err(Error::InvalidParameter(format!(
            "the oracle supports 1 to {MAX_MODES} modes, got {n_modes}"
        )));
    }
    let mut total: usize = 1;
    for _ in 0..n_modes {
        total = total.saturating_mul(dim);
    }
    if total > MAX_SIDE {
        return Err(Error::DimensionCapExceeded { dim: total, cap: MAX_SIDE });
    }
    Ok(total)
}

impl TruncatedOperator {
    pub fn new(dim_per_mode: usize, n_modes: usize, matrix: CMatrix) -> Result<Self> {
        let s = side(dim_per_mode, n_modes)?;
        if matrix.shape() != (s, s) {
            return Err(Error::DimensionMismatch(format!(
                "operator is {:?}, expected {s}x{s}",
                matrix.shape()
            )));
        }
        Ok(Self { dim_per_mode, n_modes, matrix })
    }

    /// The projector on the multimode vacuum.
    pub fn vacuum(dim_per_mode: usize, n_modes: usize) -> Result<Self> {
        let s = side(dim_per_mode, n_modes)?;
        let mut matrix = CMatrix::zeros(s, s);
        matrix[(0, 0)] = C64::new(1.0, 0.0);
        Ok(Self { dim_per_mode, n_modes, matrix })
    }

    pub fn dim_per_mode(&self) -> usize {
        self.dim_per_mode
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn side(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diagonal().iter().sum()
    }

    /// Largest diagonal weight on the top two number states of any mode,
    /// relative to `|Tr μ|`.
    pub fn leakage(&self) -> f64 {
        let tr = self.trace().norm();
        let dim = self.dim_per_mode;
        let mut worst = 0.0f64;
        for k in 0..self.n_modes {
            let stride = dim.pow((self.n_modes - 1 - k) as u32);
            let top: f64 = (0..self.side())
                .filter(|i| (i / stride) % dim >= dim - 2)
                .map(|i| self.matrix[(i, i)].norm())
                .sum();
            worst = worst.max(top);
        }
        if tr > 0.0 {
            worst / tr
        } else {
            f64::INFINITY
        }
    }
}

/// Sparse square matrix stored as sorted, deduplicated triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    side: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOperator {
    fn from_triplets(side: usize, mut entries: Vec<(usize, usize, C64)>) -> Self {
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|e| e.2 != C64::new(0.0, 0.0));
        Self { side, entries: merged }
    }

    fn zero(side: usize) -> Self {
        Self { side, entries: Vec::new() }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.side, self.side);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    fn scaled(&self, s: C64) -> Self {
        Self::from_triplets(self.side, self.entries.iter().map(|&(r, c, v)| (r, c, v * s)).collect())
    }

    fn plus(&self, other: &Self) -> Self {
        let mut e = self.entries.clone();
        e.extend_from_slice(&other.entries);
        Self::from_triplets(self.side, e)
    }

    fn product(&self, other: &Self) -> Self {
        let mut starts = vec![other.entries.len(); other.side + 1];
        for (k, e) in other.entries.iter().enumerate().rev() {
            starts[e.0] = k;
        }
        for r in (0..other.side).rev() {
            starts[r] = starts[r].min(starts[r + 1]);
        }
        let mut out = Vec::new();
        for &(i, k, a) in &self.entries {
            for &(_, j, b) in &other.entries[starts[k]..starts[k + 1]] {
                out.push((i, j, a * b));
            }
        }
        Self::from_triplets(self.side, out)
    }

    /// `out += S·m`.
    fn left_mul_add(&self, m: &CMatrix, out: &mut CMatrix) {
        let n = self.side;
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        for j in 0..n {
            let col = j * n;
            for &(r, c, v) in &self.entries {
                dst[col + r] += v * src[col + c];
            }
        }
    }

    /// `out += m·S`.
    fn right_mul_add(&self, m: &CMatrix, out: &mut CMatrix) {
        let n = self.side;
        let src = m.as_slice();
        let dst = out.as_mut_slice();
        for &(r, c, v) in &self.entries {
            let (from, to) = (r * n, c * n);
            for i in 0..n {
                dst[to + i] += src[from + i] * v;
            }
        }
    }

    /// `Tr[S·m]`.
    fn trace_with(&self, m: &CMatrix) -> C64 {
        self.entries.iter().map(|&(r, c, v)| v * m[(c, r)]).sum()
    }
}

/// Truncated quadratures `(x̂_1, p̂_1, …, x̂_n, p̂_n)` with `[x̂, p̂] = i`
/// away from the top number state.
pub fn build_quadrature_ops(dim: usize, n_modes: usize) -> Result<Vec<SparseOperator>> {
    let s = side(dim, n_modes)?;
    let inv_sqrt2 = core::f64::consts::FRAC_1_SQRT_2;
    let mut ops = Vec::with_capacity(2 * n_modes);
    for k in 0..n_modes {
        let stride = dim.pow((n_modes - 1 - k) as u32);
        let mut x = Vec::new();
        let mut p = Vec::new();
        for i in 0..s {
            let level = (i / stride) % dim;
            if level + 1 < dim {
                // ⟨level|a|level+1⟩ = √(level+1)
                let j = i + stride;
                let amp = libm::sqrt((level + 1) as f64) * inv_sqrt2;
                x.push((i, j, C64::new(amp, 0.0)));
                x.push((j, i, C64::new(amp, 0.0)));
                p.push((i, j, C64::new(0.0, -amp)));
                p.push((j, i, C64::new(0.0, amp)));
            }
        }
        ops.push(SparseOperator::from_triplets(s, x));
        ops.push(SparseOperator::from_triplets(s, p));
    }
    Ok(ops)
}

/// Truncation and step-certification settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub dim_per_mode: usize,
    /// Halving the step must change `Tr μ` by less than this.
    pub trace_tol: f64,
    pub leakage_limit: f64,
    pub initial_step: f64,
    pub max_doublings: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { dim_per_mode: 25, trace_tol: 1e-8, leakage_limit: 1e-6, initial_step: 0.02, max_doublings: 10 }
    }
}

/// The superoperator `μ ↦ {Â,μ} + [Ĉ,μ] + Σ 𝕂_mn r̂_m μ r̂_n − c0 μ`.
#[derive(Debug, Clone)]
pub struct TruncatedGenerator {
    left: SparseOperator,
    right: SparseOperator,
    quads: Vec<SparseOperator>,
    sandwiches: Vec<SparseOperator>,
    constant: C64,
}

impl TruncatedGenerator {
    pub fn new(g: &GeneratorSpec, dim: usize) -> Result<Self> {
        let n = g.n_modes();
        let quads = build_quadrature_ops(dim, n)?;
        let s = quads[0].side();
        let om = omega_c(n);
        let form = |q: &CMatrix, lin: &CVector| -> SparseOperator {
            let mut acc = SparseOperator::zero(s);
            let coeffs: CVector = om.transpose() * lin;
            for i in 0..2 * n {
                for j in 0..2 * n {
                    if q[(i, j)] != C64::new(0.0, 0.0) {
                        acc = acc.plus(&quads[i].product(&quads[j]).scaled(q[(i, j)] * 0.5));
                    }
                }
                if coeffs[i] != C64::new(0.0, 0.0) {
                    acc = acc.plus(&quads[i].scaled(coeffs[i]));
                }
            }
            acc
        };
        let a_hat = form(&g.anti, &g.anti_linear);
        let c_hat = form(&g.comm, &g.comm_linear);
        let left = a_hat.plus(&c_hat);
        let right = a_hat.plus(&c_hat.scaled(C64::new(-1.0, 0.0)));
        let sandwiches = (0..2 * n)
            .map(|m| {
                (0..2 * n).fold(SparseOperator::zero(s), |acc, k| {
                    let w = g.sandwich[(m, k)];
                    if w == C64::new(0.0, 0.0) {
                        acc
                    } else {
                        acc.plus(&quads[k].scaled(w))
                    }
                })
            })
            .collect();
        Ok(Self { left, right, quads, sandwiches, constant: g.constant })
    }

    pub fn apply(&self, mu: &CMatrix, out: &mut CMatrix) {
        out.copy_from(mu);
        *out *= -self.constant;
        self.left.left_mul_add(mu, out);
        self.right.right_mul_add(mu, out);
        let s = mu.nrows();
        let mut tmp = CMatrix::zeros(s, s);
        for (r, k) in self.quads.iter().zip(&self.sandwiches) {
            if k.nnz() == 0 {
                continue;
            }
            tmp.fill(C64::new(0.0, 0.0));
            r.left_mul_add(mu, &mut tmp);
            k.right_mul_add(&tmp, out);
        }
    }

    fn rk4(&self, mu0: &CMatrix, t: f64, steps: usize) -> CMatrix {
        let h = t / steps as f64;
        let s = mu0.nrows();
        let mut mu = mu0.clone();
        let (mut k1, mut k2, mut k3, mut k4, mut stage) = (
            CMatrix::zeros(s, s),
            CMatrix::zeros(s, s),
            CMatrix::zeros(s, s),
            CMatrix::zeros(s, s),
            CMatrix::zeros(s, s),
        );
        for _ in 0..steps {
            self.apply(&mu, &mut k1);
            stage.copy_from(&mu);
            axpy(&mut stage, C64::new(h * 0.5, 0.0), &k1);
            self.apply(&stage, &mut k2);
            stage.copy_from(&mu);
            axpy(&mut stage, C64::new(h * 0.5, 0.0), &k2);
            self.apply(&stage, &mut k3);
            stage.copy_from(&mu);
            axpy(&mut stage, C64::new(h, 0.0), &k3);
            self.apply(&stage, &mut k4);
            axpy(&mut mu, C64::new(h / 6.0, 0.0), &k1);
            axpy(&mut mu, C64::new(h / 3.0, 0.0), &k2);
            axpy(&mut mu, C64::new(h / 3.0, 0.0), &k3);
            axpy(&mut mu, C64::new(h / 6.0, 0.0), &k4);
        }
        mu
    }
}

fn axpy(y: &mut CMatrix, a: C64, x: &CMatrix) {
    for (yi, xi) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yi += a * xi;
    }
}

/// Evolves `μ0` to time `t` under `g`, doubling the RK4 step count until
/// `Tr μ` is stable to `cfg.trace_tol`.
pub fn evolve_truncated(
    g: &GeneratorSpec,
    mu0: &TruncatedOperator,
    t: f64,
    cfg: &OracleConfig,
) -> Result<TruncatedOperator> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("evolution time must be finite and nonnegative, got {t}")));
    }
    if mu0.n_modes() != g.n_modes() {
        return Err(Error::DimensionMismatch(format!(
            "operator has {} modes, generator has {}",
            mu0.n_modes(),
            g.n_modes()
        )));
    }
    if t == 0.0 {
        return Ok(mu0.clone());
    }
    let gen = TruncatedGenerator::new(g, mu0.dim_per_mode())?;
    let mut steps = libm::ceil(t / cfg.initial_step).max(4.0) as usize;
    let mut prev = gen.rk4(&mu0.matrix, t, steps);
    for _ in 0..cfg.max_doublings {
        steps *= 2;
        let next = gen.rk4(&mu0.matrix, t, steps);
        let prev_tr: C64 = prev.diagonal().iter().sum();
        let next_tr: C64 = next.diagonal().iter().sum();
        let delta = (next_tr - prev_tr).norm();
        if delta < cfg.trace_tol && next_tr.re.is_finite() {
            let out = TruncatedOperator { matrix: next, ..mu0.clone() };
            let leakage = out.leakage();
            if !(leakage < cfg.leakage_limit) {
                return Err(Error::TruncationInsufficient { leakage, limit: cfg.leakage_limit });
            }
            return Ok(out);
        }
        prev = next;
    }
    Err(Error::ToleranceFailure { t, step: t / steps as f64 })
}

/// `(Tr μ, d, σ)` of the normalized operator `ν = μ / Tr μ`.
pub fn moments_from_operator(mu: &TruncatedOperator) -> Result<(C64, CVector, CMatrix)> {
    let tr = mu.trace();
    if tr.norm() == 0.0 || !tr.re.is_finite() {
        return Err(Error::ZeroTrace);
    }
    let nu = &mu.matrix / tr;
    let quads = build_quadrature_ops(mu.dim_per_mode(), mu.n_modes())?;
    let n = quads.len();
    let d = CVector::from_iterator(n, quads.iter().map(|r| r.trace_with(&nu)));
    let mut sigma = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let anti = quads[i].product(&quads[j]).plus(&quads[j].product(&quads[i]));
            let v = anti.trace_with(&nu) - d[i] * d[j] * 2.0;
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    Ok((tr, d, sigma))
}

/// `‖μ‖₁`, the sum of singular values.
pub fn trace_norm_truncated(mu: &TruncatedOperator) -> f64 {
    SVD::new(mu.matrix.clone(), false, false).singular_values.iter().sum()
}
