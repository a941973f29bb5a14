//! Bargmann invariants of monitored-output states and the replica series
//! for their QFI under inefficient detection.
//!
//! `B(Θ) = Tr[Ξ(θ_1)⋯Ξ(θ_M)]` is the trace of a replica GME. The QFI
//! approximants are
//!
//! ```text
//! Q_N = Σ_{m=0}^{N} (−1)^m C(N+1, m+1) f_m / Λ^{m+1},   Λ = 2 √Tr Ξ²
//! f_m = Σ_{l=0}^{m} D_l^m ∂_α∂_β Tr[Ξ(α)^{l+1} Ξ(β)^{m−l+1}]
//! D_l^m = 2 C(m, l) − C(m, l+1) − C(m, l−1)
//! ```

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::{evolve, GaussianMomentState, IntegratorConfig};
use crate::error::{Error, Result};
use crate::generator::replica_generator;
use crate::metrology::FdConfig;
use crate::model::QuadraticModel;
use crate::C64;

/// Default cap on the number of replicas in one invariant.
pub const DEFAULT_REPLICA_CAP: usize = 24;

/// Parameters `Θ = (θ_1, …, θ_M)` of a cyclic product, `M ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaAssignment {
    thetas: Vec<f64>,
}

impl ReplicaAssignment {
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        if thetas.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a replica assignment needs at least 2 entries, got {}",
                thetas.len()
            )));
        }
        Ok(Self { thetas })
    }

    /// `α` repeated `p` times followed by `β` repeated `q` times.
    pub fn blocks(alpha: f64, p: usize, beta: f64, q: usize) -> Result<Self> {
        let mut thetas = vec![alpha; p];
        thetas.extend(core::iter::repeat(beta).take(q));
        Self::new(thetas)
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// The same assignment rotated left by `k`.
    pub fn rotated(&self, k: usize) -> Self {
        let mut thetas = self.thetas.clone();
        let len = thetas.len();
        thetas.rotate_left(k % len);
        Self { thetas }
    }
}

/// Settings shared by the replica computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicaSettings {
    pub max_replicas: usize,
    pub integrator: IntegratorConfig,
    /// Mixed-partial step; default `1e-2`.
    pub fd: FdConfig,
}

impl Default for ReplicaSettings {
    fn default() -> Self {
        Self {
            max_replicas: DEFAULT_REPLICA_CAP,
            integrator: IntegratorConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..IntegratorConfig::default() },
            fd: FdConfig::with_step(1e-2),
        }
    }
}

/// `Tr[Ξ(θ_1)⋯Ξ(θ_M)]` at time `t`, from product-vacuum initial replicas.
pub fn bargmann_invariant(
    model: &QuadraticModel,
    assignment: &ReplicaAssignment,
    t: f64,
    settings: &ReplicaSettings,
) -> Result<C64> {
    if assignment.len() > settings.max_replicas {
        return Err(Error::ReplicaCapExceeded { requested: assignment.len(), cap: settings.max_replicas });
    }
    let co = replica_generator(model, assignment.thetas())?.coefficients()?;
    let vacuum = GaussianMomentState::vacuum(co.n_modes());
    let traj = evolve(&vacuum, &co, &[t], &settings.integrator)?;
    Ok(traj.last().trace())
}

fn purity_to_lambda(b: C64) -> Result<f64> {
    if !(b.re > 0.0) || b.im.abs() > 1e-9 * (1.0 + b.re.abs()) {
        return Err(Error::InvalidPurity { re: b.re, im: b.im });
    }
    Ok(2.0 * libm::sqrt(b.re))
}

/// `Λ(θ) = 2 √Tr[Ξ(θ)²]`.
pub fn lambda_purity(model: &QuadraticModel, theta: f64, t: f64, settings: &ReplicaSettings) -> Result<f64> {
    let b = bargmann_invariant(model, &ReplicaAssignment::new(vec![theta, theta])?, t, settings)?;
    purity_to_lambda(b)
}

/// `C(n, k)`, zero outside `0 ≤ k ≤ n`.
pub fn binomial(n: i64, k: i64) -> i128 {
    if n < 0 || k < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i128 / (i + 1) as i128;
    }
    acc
}

/// `D_l^m = 2 C(m, l) − C(m, l+1) − C(m, l−1)`.
pub fn dlm_coefficient(m: u32, l: i64) -> i128 {
    let m = m as i64;
    2 * binomial(m, l) - binomial(m, l + 1) - binomial(m, l - 1)
}

/// The distinct Bargmann invariants needed for the approximants up to a
/// given order, and how to combine them.
///
/// Patterns are deduplicated using cyclicity, so
/// `(α^p, β^q)` and `(β^q, α^p)` share one evaluation. Evaluate
/// [`ReplicaPlan::patterns`] in any order (for instance in parallel) and
/// pass the results back in the same order to [`ReplicaPlan::assemble`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaPlan {
    max_order: usize,
    step: f64,
    patterns: Vec<ReplicaAssignment>,
    keys: Vec<(usize, i8, usize, i8)>,
    purity: usize,
    /// `corners[m][l]` = pattern indices for `(+,+), (+,−), (−,+), (−,−)`.
    corners: Vec<Vec<[usize; 4]>>,
}

impl ReplicaPlan {
    pub fn new(theta: f64, max_order: usize, fd: &FdConfig, max_replicas: usize) -> Result<Self> {
        let needed = max_order + 2;
        if needed > max_replicas {
            return Err(Error::ReplicaCapExceeded { requested: needed, cap: max_replicas });
        }
        let step = fd.effective_step(theta)?;
        let mut plan = Self {
            max_order,
            step,
            patterns: Vec::new(),
            keys: Vec::new(),
            purity: 0,
            corners: Vec::with_capacity(max_order + 1),
        };
        plan.purity = plan.intern(theta, step, (2, 0, 0, 0));
        for m in 0..=max_order {
            let mut row = Vec::with_capacity(m + 1);
            for l in 0..=m {
                let (p, q) = (l + 1, m - l + 1);
                let mut idx = [0usize; 4];
                for (c, (sa, sb)) in [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)].into_iter().enumerate() {
                    idx[c] = plan.intern(theta, step, canonical(p, sa, q, sb));
                }
                row.push(idx);
            }
            plan.corners.push(row);
        }
        Ok(plan)
    }

    fn intern(&mut self, theta: f64, step: f64, key: (usize, i8, usize, i8)) -> usize {
        if let Some(i) = self.keys.iter().position(|k| *k == key) {
            return i;
        }
        let (p, sa, q, sb) = key;
        let at = |s: i8| theta + s as f64 * step;
        let assignment = ReplicaAssignment::blocks(at(sa), p, at(sb), q).expect("at least two replicas");
        self.keys.push(key);
        self.patterns.push(assignment);
        self.patterns.len() - 1
    }

    pub fn patterns(&self) -> &[ReplicaAssignment] {
        &self.patterns
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// `Λ` and `f_0, …, f_max_order` from evaluated invariants.
    pub fn series_terms(&self, values: &[C64]) -> Result<(f64, Vec<f64>)> {
        if values.len() != self.patterns.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} invariants for {} patterns",
                values.len(),
                self.patterns.len()
            )));
        }
        let lambda = purity_to_lambda(values[self.purity])?;
        let h2 = 4.0 * self.step * self.step;
        let mut f = Vec::with_capacity(self.max_order + 1);
        for (m, row) in self.corners.iter().enumerate() {
            let mut total = C64::new(0.0, 0.0);
            for (l, idx) in row.iter().enumerate() {
                let [pp, pm, mp, mm] = idx.map(|i| values[i]);
                let mixed = (pp - pm - mp + mm) / h2;
                total += mixed * dlm_coefficient(m as u32, l as i64) as f64;
            }
            if total.im.abs() > 1e-6 {
                return Err(Error::ImaginaryResidue { what: "replica series term", value: total.im });
            }
            f.push(total.re);
        }
        Ok((lambda, f))
    }

    /// `Q_N` for each requested order `N ≤ max_order`.
    pub fn assemble(&self, values: &[C64], orders: &[usize]) -> Result<Vec<f64>> {
        let (lambda, f) = self.series_terms(values)?;
        orders
            .iter()
            .map(|&n| {
                if n > self.max_order {
                    return Err(Error::InvalidParameter(format!(
                        "order {n} exceeds the planned maximum {}",
                        self.max_order
                    )));
                }
                Ok(approximant(&f, lambda, n))
            })
            .collect()
    }
}

fn canonical(p: usize, sa: i8, q: usize, sb: i8) -> (usize, i8, usize, i8) {
    if sa == sb {
        return (p + q, sa, 0, sa);
    }
    // cyclic rotation swaps the two blocks
    if (p, sa) <= (q, sb) {
        (p, sa, q, sb)
    } else {
        (q, sb, p, sa)
    }
}

fn approximant(f: &[f64], lambda: f64, n: usize) -> f64 {
    (0..=n)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let c = binomial(n as i64 + 1, m as i64 + 1) as f64;
            sign * c * f[m] / libm::pow(lambda, m as f64 + 1.0)
        })
        .sum()
}

/// Approximants `Q_N` of the monitored-output QFI for each requested order,
/// evaluated sequentially.
pub fn replica_qfi_series(
    model: &QuadraticModel,
    theta: f64,
    t: f64,
    orders: &[usize],
    settings: &ReplicaSettings,
) -> Result<Vec<f64>> {
    let max_order = orders.iter().copied().max().unwrap_or(0);
    let plan = ReplicaPlan::new(theta, max_order, &settings.fd, settings.max_replicas)?;
    let values = plan
        .patterns()
        .iter()
        .map(|a| bargmann_invariant(model, a, t, settings))
        .collect::<Result<Vec<_>>>()?;
    plan.assemble(&values, orders)
}

pub fn replica_qfi_approximant(
    model: &QuadraticModel,
    theta: f64,
    t: f64,
    order: usize,
    settings: &ReplicaSettings,
) -> Result<f64> {
    Ok(replica_qfi_series(model, theta, t, &[order], settings)?[0])
}
