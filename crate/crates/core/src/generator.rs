//! Quadratic GME generators and their moment-equation coefficients.
//!
//! A generator acts as `μ̇ = {Â, μ} + [Ĉ, μ] + Σ 𝕂_mn r̂_m μ r̂_n`, with
//! `Â = ½ r̂ᵀ𝔸r̂ + 𝕒ᵀΩr̂` and `Ĉ = ½ r̂ᵀℂr̂ + 𝕔ᵀΩr̂`. A constant rate `c0`
//! may be added to `ξ̇` (equivalently `μ̇ ∋ −c0 μ`).

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{
    complexify, concat_vectors, direct_sum, enforce_antisymmetric, enforce_symmetric, omega_c,
    skew, sym, I,
};
use crate::model::{ModelPoint, QuadraticModel};
use crate::{CMatrix, CVector, RMatrix, RVector, C64};

const COEFF_SYMMETRY_TOL: f64 = 1e-12;

/// The data `(𝔸, ℂ, 𝕂, 𝕒, 𝕔, c0)` of a quadratic generator on `n_modes` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    n_modes: usize,
    /// Quadratic form of the anticommutator part, `𝔸`.
    pub anti: CMatrix,
    /// Quadratic form of the commutator part, `ℂ` (kept symmetric).
    pub comm: CMatrix,
    /// Sandwich form `𝕂`, acting as `Σ 𝕂_mn r̂_m μ r̂_n`.
    pub sandwich: CMatrix,
    /// Linear part of the anticommutator, `𝕒`.
    pub anti_linear: CVector,
    /// Linear part of the commutator, `𝕔`.
    pub comm_linear: CVector,
    /// Constant rate added to `ξ̇`.
    pub constant: C64,
}

impl GeneratorSpec {
    /// Checks dimensions and symmetrizes `ℂ`.
    ///
    /// The antisymmetric part of `ℂ` only shifts `Ĉ` by a scalar, which drops
    /// out of the commutator, so symmetrizing is exact.
    pub fn new(
        n_modes: usize,
        anti: CMatrix,
        comm: CMatrix,
        sandwich: CMatrix,
        anti_linear: CVector,
        comm_linear: CVector,
        constant: C64,
    ) -> Result<Self> {
        let dim = 2 * n_modes;
        if n_modes == 0 {
            return Err(Error::DimensionMismatch("generator needs at least one mode".to_string()));
        }
        for (what, m) in [("anti", &anti), ("comm", &comm), ("sandwich", &sandwich)] {
            if m.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!(
                    "{what} matrix is {:?}, expected {dim}x{dim}",
                    m.shape()
                )));
            }
        }
        for (what, v) in [("anti_linear", &anti_linear), ("comm_linear", &comm_linear)] {
            if v.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "{what} vector has length {}, expected {dim}",
                    v.len()
                )));
            }
        }
        let comm = sym(&comm);
        Ok(Self { n_modes, anti, comm, sandwich, anti_linear, comm_linear, constant })
    }

    /// The all-zero generator.
    pub fn zero(n_modes: usize) -> Self {
        let dim = 2 * n_modes;
        Self {
            n_modes,
            anti: CMatrix::zeros(dim, dim),
            comm: CMatrix::zeros(dim, dim),
            sandwich: CMatrix::zeros(dim, dim),
            anti_linear: CVector::zeros(dim),
            comm_linear: CVector::zeros(dim),
            constant: C64::new(0.0, 0.0),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        2 * self.n_modes
    }

    pub fn coefficients(&self) -> Result<MomentCoefficients> {
        coefficients_from_generator(self)
    }
}

/// Coefficients of the closed moment equations
///
/// ```text
/// σ̇ = σQσ + Aσ + σAᵀ + D
/// ḋ = Ad + σQd − σΩa + ic
/// ξ̇ = −dᵀQd − ½tr[σQ] − ½tr[WΩ] − 2aᵀΩd + c0
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCoefficients {
    /// `A`
    pub drift: CMatrix,
    /// `D`, symmetric.
    pub diffusion: CMatrix,
    /// `Q`, symmetric; the quadratic term of the Riccati flow.
    pub riccati: CMatrix,
    /// `W`, antisymmetric; enters `ξ̇` only.
    pub trace_form: CMatrix,
    /// `a`
    pub anti_linear: CVector,
    /// `c`
    pub comm_linear: CVector,
    /// `c0`
    pub constant: C64,
}

impl MomentCoefficients {
    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    pub fn n_modes(&self) -> usize {
        self.dim() / 2
    }

    /// Builds coefficients directly, enforcing the symmetry of `D`, `Q` and
    /// the antisymmetry of `W`.
    pub fn new(
        drift: CMatrix,
        mut diffusion: CMatrix,
        mut riccati: CMatrix,
        mut trace_form: CMatrix,
        anti_linear: CVector,
        comm_linear: CVector,
        constant: C64,
    ) -> Result<Self> {
        let dim = drift.nrows();
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::DimensionMismatch(format!("odd or empty dimension {dim}")));
        }
        for m in [&drift, &diffusion, &riccati, &trace_form] {
            if m.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!(
                    "coefficient matrix is {:?}, expected {dim}x{dim}",
                    m.shape()
                )));
            }
        }
        if anti_linear.len() != dim || comm_linear.len() != dim {
            return Err(Error::DimensionMismatch(format!("coefficient vectors must have length {dim}")));
        }
        enforce_symmetric(&mut diffusion, COEFF_SYMMETRY_TOL, "D")?;
        enforce_symmetric(&mut riccati, COEFF_SYMMETRY_TOL, "Q")?;
        enforce_antisymmetric(&mut trace_form, COEFF_SYMMETRY_TOL, "W")?;
        Ok(Self { drift, diffusion, riccati, trace_form, anti_linear, comm_linear, constant })
    }
}

/// `A = Ω(iℂ + i·Skew𝕂)`, `D = Ω·Sym[𝕂−𝔸]·Ωᵀ`, `Q = Sym[𝕂+𝔸]`, `W = i·Skew[𝕂−𝔸]`.
pub fn coefficients_from_generator(g: &GeneratorSpec) -> Result<MomentCoefficients> {
    let om = omega_c(g.n_modes);
    let drift = &om * ((&g.comm + skew(&g.sandwich)) * I);
    let diffusion = &om * sym(&(&g.sandwich - &g.anti)) * om.transpose();
    let riccati = sym(&(&g.sandwich + &g.anti));
    let trace_form = skew(&(&g.sandwich - &g.anti)) * I;
    MomentCoefficients::new(
        drift,
        diffusion,
        riccati,
        trace_form,
        g.anti_linear.clone(),
        g.comm_linear.clone(),
        g.constant,
    )
}

/// Weights of the counted jump channels, one per monitored row.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingSpec {
    pub weights: Vec<f64>,
}

impl CountingSpec {
    pub fn new(weights: Vec<f64>) -> Self {
        Self { weights }
    }

    /// Every monitored channel counted with weight one.
    pub fn unit(n_channels: usize) -> Self {
        Self { weights: alloc::vec![1.0; n_channels] }
    }

    pub fn is_integer(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite() && libm::round(*w) == *w)
    }
}

/// Homodyne-type measurement: current weights and local-oscillator phases.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusiveSpec {
    pub weights: Vec<f64>,
    pub phases: Vec<f64>,
}

impl DiffusiveSpec {
    pub fn new(weights: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if weights.len() != phases.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights but {} phases",
                weights.len(),
                phases.len()
            )));
        }
        Ok(Self { weights, phases })
    }
}

fn gram(l: &CMatrix) -> CMatrix {
    l.adjoint() * l
}

/// `ℂ = −iℍ`, `𝕔 = −i𝕙`, `𝕒 = 0`, `𝕂 = (𝕃†𝕃)ᵀ`, `𝔸 = −𝕃†𝕃`.
pub fn lindblad_generator(hamiltonian: &RMatrix, drive: &RVector, jumps: &CMatrix) -> Result<GeneratorSpec> {
    let dim = hamiltonian.nrows();
    if dim % 2 != 0 || hamiltonian.ncols() != dim || drive.len() != dim {
        return Err(Error::DimensionMismatch("inconsistent Hamiltonian and drive".to_string()));
    }
    if jumps.nrows() > 0 && jumps.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "jump rows have {} columns, expected {dim}",
            jumps.ncols()
        )));
    }
    let dev = crate::linalg::max_asymmetry_real(hamiltonian);
    if dev > 1e-12 {
        return Err(Error::AsymmetricHamiltonian(dev));
    }
    let g = if jumps.nrows() == 0 { CMatrix::zeros(dim, dim) } else { gram(jumps) };
    GeneratorSpec::new(
        dim / 2,
        -&g,
        complexify(hamiltonian) * (-I),
        g.transpose(),
        CVector::zeros(dim),
        drive.map(|x| C64::new(x, 0.0)) * (-I),
        C64::new(0.0, 0.0),
    )
}

/// Lindblad generator of a model point, with all jump channels.
pub fn lindblad_at(point: &ModelPoint) -> Result<GeneratorSpec> {
    lindblad_generator(&point.hamiltonian, &point.drive, &point.all_jumps())
}

/// Two-sided master equation: left dynamics at `θ1`, right dynamics at `θ2`.
///
/// Its trace is the overlap of the joint system–environment states, so it
/// uses every jump channel.
pub fn tsme_generator(model: &QuadraticModel, theta1: f64, theta2: f64) -> Result<GeneratorSpec> {
    let p1 = model.at(theta1)?;
    let p2 = model.at(theta2)?;
    let dim = 2 * model.n_modes();
    let (l1, l2) = (p1.all_jumps(), p2.all_jumps());
    let (g1, g2) = (gram(&l1), gram(&l2));
    let half = C64::new(0.5, 0.0);
    let h_plus = complexify(&(&p1.hamiltonian + &p2.hamiltonian)) * half;
    let h_minus = complexify(&(&p1.hamiltonian - &p2.hamiltonian)) * half;
    let g_plus = (&g1 + &g2) * half;
    let g_minus = (&g1 - &g2) * half;
    let sandwich = if l1.nrows() == 0 { CMatrix::zeros(dim, dim) } else { (l2.adjoint() * &l1).transpose() };
    let d1 = p1.drive.map(|x| C64::new(x, 0.0));
    let d2 = p2.drive.map(|x| C64::new(x, 0.0));
    GeneratorSpec::new(
        model.n_modes(),
        &h_minus * (-I) - &g_plus,
        &h_plus * (-I) - g_minus,
        sandwich,
        (&d1 - &d2) * (-I * 0.5),
        (&d1 + &d2) * (-I * 0.5),
        C64::new(0.0, 0.0),
    )
}

/// Lindblad generator with the monitored jumps tilted by `e^{iλw_k}`.
pub fn tilted_jump_generator(
    model: &QuadraticModel,
    theta: f64,
    counting: &CountingSpec,
    lambda: f64,
) -> Result<GeneratorSpec> {
    let p = model.at(theta)?;
    if counting.weights.len() != p.monitored.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} counting weights for {} monitored channels",
            counting.weights.len(),
            p.monitored.nrows()
        )));
    }
    let mut g = lindblad_at(&p)?;
    let dim = g.dim();
    let mut tilted = CMatrix::zeros(dim, dim);
    for (k, w) in counting.weights.iter().enumerate() {
        let row = p.monitored.row(k);
        let phase = C64::from_polar(1.0, lambda * w);
        tilted += row.adjoint() * row * phase;
    }
    if p.unmonitored.nrows() > 0 {
        tilted += gram(&p.unmonitored);
    }
    g.sandwich = tilted.transpose();
    Ok(g)
}

/// Lindblad generator tilted for the time-integrated homodyne current
/// `Σ w_k I_k`, with the Gaussian constant carried as `c0 = λ²Σw²/2`.
pub fn tilted_diffusive_generator(
    model: &QuadraticModel,
    theta: f64,
    spec: &DiffusiveSpec,
    lambda: f64,
) -> Result<GeneratorSpec> {
    let p = model.at(theta)?;
    let n_mon = p.monitored.nrows();
    if spec.weights.len() != n_mon || spec.phases.len() != n_mon {
        return Err(Error::DimensionMismatch(format!(
            "diffusive spec has {} weights and {} phases for {} monitored channels",
            spec.weights.len(),
            spec.phases.len(),
            n_mon
        )));
    }
    let mut g = lindblad_at(&p)?;
    let dim = g.dim();
    let mut f = CVector::zeros(dim);
    let mut gv = CVector::zeros(dim);
    for k in 0..n_mon {
        let row = p.monitored.row(k).transpose();
        let w = spec.weights[k];
        f += &row * C64::from_polar(w, -spec.phases[k]);
        gv += row.map(|z| z.conj()) * C64::from_polar(w, spec.phases[k]);
    }
    let om = omega_c(p.n_modes);
    let scale = I * (lambda / 2.0);
    g.comm_linear += &om * (&f - &gv) * scale;
    g.anti_linear = &om * (&f + &gv) * scale;
    let w2: f64 = spec.weights.iter().map(|w| w * w).sum();
    g.constant = C64::new(lambda * lambda / 2.0 * w2, 0.0);
    Ok(g)
}

/// Replica generator whose trace gives `Tr[Ξ(θ_1)⋯Ξ(θ_M)]`, the cyclic
/// product of monitored-output states.
pub fn replica_generator(model: &QuadraticModel, thetas: &[f64]) -> Result<GeneratorSpec> {
    let copies = thetas.len();
    if copies < 2 {
        return Err(Error::InvalidParameter(format!(
            "replica generator needs at least 2 copies, got {copies}"
        )));
    }
    let points = thetas.iter().map(|&t| model.at(t)).collect::<Result<Vec<_>>>()?;
    if points[0].monitored.nrows() != 1 {
        return Err(Error::InvalidParameter(format!(
            "replica generator needs exactly one monitored channel, model has {}",
            points[0].monitored.nrows()
        )));
    }
    let b = 2 * model.n_modes();
    let total = b * copies;
    let comm_blocks: Vec<CMatrix> = points.iter().map(|p| complexify(&p.hamiltonian) * (-I)).collect();
    let anti_blocks: Vec<CMatrix> = points
        .iter()
        .map(|p| {
            let mut m = -gram(&p.monitored);
            if p.unmonitored.nrows() > 0 {
                m -= gram(&p.unmonitored);
            }
            m
        })
        .collect();
    let drives: Vec<CVector> = points.iter().map(|p| p.drive.map(|x| C64::new(x, 0.0)) * (-I)).collect();
    let mut sandwich = CMatrix::zeros(total, total);
    for (alpha, p) in points.iter().enumerate() {
        if p.unmonitored.nrows() > 0 {
            sandwich.view_mut((alpha * b, alpha * b), (b, b)).copy_from(&gram(&p.unmonitored).transpose());
        }
        let next = (alpha + 1) % copies;
        let block = (p.monitored.adjoint() * &points[next].monitored).transpose();
        let mut view = sandwich.view_mut((next * b, alpha * b), (b, b));
        view += &block;
    }
    GeneratorSpec::new(
        model.n_modes() * copies,
        direct_sum(anti_blocks.iter()),
        direct_sum(comm_blocks.iter()),
        sandwich,
        CVector::zeros(total),
        concat_vectors(drives.iter()),
        C64::new(0.0, 0.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::opo_model;
    use core::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() < tol)
    }

    fn opo_lindblad(chi: f64) -> MomentCoefficients {
        let m = opo_model(0.0, chi, 1.0, 1.0).unwrap();
        lindblad_at(&m.at(0.0).unwrap()).unwrap().coefficients().unwrap()
    }

    #[test]
    fn opo_lindblad_drift_and_diffusion() {
        let co = opo_lindblad(0.2);
        let drift = CMatrix::from_row_slice(2, 2, &[c(-0.7, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.3, 0.0)]);
        assert!(close(&co.drift, &drift, 1e-15));
        assert!(close(&co.diffusion, &CMatrix::identity(2, 2), 1e-15));
        assert!(co.riccati.iter().all(|z| z.norm() < 1e-15));
        assert!(co.trace_form.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn opo_lindblad_drift_with_detuning() {
        let m = opo_model(0.5, 0.2, 1.0, 1.0).unwrap();
        let co = lindblad_at(&m.at(0.0).unwrap()).unwrap().coefficients().unwrap();
        let drift = CMatrix::from_row_slice(2, 2, &[c(-0.7, 0.0), c(0.5, 0.0), c(-0.5, 0.0), c(-0.3, 0.0)]);
        assert!(close(&co.drift, &drift, 1e-15));
    }

    #[test]
    fn lindblad_sandwich_form() {
        let m = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
        let g = lindblad_at(&m.at(0.0).unwrap()).unwrap();
        let expect = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.0, -0.5), c(0.0, 0.5), c(0.5, 0.0)]);
        assert!(close(&g.sandwich, &expect, 1e-15));
        assert_eq!(g.sandwich.transpose(), -&g.anti);
    }

    #[test]
    fn lindblad_general_reduction() {
        let h = RMatrix::from_row_slice(4, 4, &[
            0.3, 0.1, 0.0, 0.2, 0.1, -0.4, 0.05, 0.0, 0.0, 0.05, 0.7, -0.1, 0.2, 0.0, -0.1, 0.2,
        ]);
        let l = CMatrix::from_row_slice(2, 4, &[
            c(0.3, 0.1), c(0.0, 0.4), c(-0.2, 0.0), c(0.1, 0.1),
            c(0.0, 0.2), c(0.5, 0.0), c(0.1, -0.3), c(0.0, 0.0),
        ]);
        let g = lindblad_generator(&h, &RVector::zeros(4), &l).unwrap();
        let co = g.coefficients().unwrap();
        let om = omega_c(2);
        let ll = l.adjoint() * &l;
        let drift = &om * (complexify(&h) + ll.map(|z| c(z.im, 0.0)));
        let diff = &om * ll.map(|z| c(2.0 * z.re, 0.0)) * om.transpose();
        assert!(close(&co.drift, &drift, 1e-14));
        assert!(close(&co.diffusion, &diff, 1e-14));
        assert!(co.riccati.iter().all(|z| z.norm() < 1e-15));
        assert!(co.trace_form.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn zero_generator_gives_zero_coefficients() {
        let co = GeneratorSpec::zero(2).coefficients().unwrap();
        for m in [&co.drift, &co.diffusion, &co.riccati, &co.trace_form] {
            assert!(m.iter().all(|z| *z == c(0.0, 0.0)));
        }
    }

    #[test]
    fn empty_jumps_pure_hamiltonian() {
        let g = lindblad_generator(&RMatrix::identity(2, 2), &RVector::zeros(2), &CMatrix::zeros(0, 2)).unwrap();
        assert!(g.sandwich.iter().all(|z| *z == c(0.0, 0.0)));
        assert!(g.anti.iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn tsme_diagonal_equals_lindblad() {
        let m = opo_model(0.3, 0.2, 1.0, 1.0).unwrap();
        let t = tsme_generator(&m, 0.1, 0.1).unwrap().coefficients().unwrap();
        let l = lindblad_at(&m.at(0.1).unwrap()).unwrap().coefficients().unwrap();
        assert!(close(&t.drift, &l.drift, 1e-15));
        assert!(close(&t.diffusion, &l.diffusion, 1e-15));
        assert!(close(&t.riccati, &l.riccati, 1e-15));
        assert!(t.anti_linear.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn tsme_frequency_estimation_matrices() {
        let (kappa, chi, eps) = (1.0, 0.2, 0.1);
        let m = opo_model(0.0, chi, kappa, 1.0).unwrap();
        let co = tsme_generator(&m, 0.0, eps).unwrap().coefficients().unwrap();
        let id = CMatrix::identity(2, 2);
        assert!(close(&co.riccati, &(&id * c(0.0, eps / 2.0)), 1e-15));
        assert!(close(&co.diffusion, &(&id * c(kappa, -eps / 2.0)), 1e-15));
        assert!(co.trace_form.iter().all(|z| z.norm() < 1e-15));
        let w = eps / 2.0;
        let drift = CMatrix::from_row_slice(2, 2, &[
            c(-chi - kappa / 2.0, 0.0), c(w, 0.0), c(-w, 0.0), c(chi - kappa / 2.0, 0.0),
        ]);
        assert!(close(&co.drift, &drift, 1e-15));
    }

    #[test]
    fn tilt_zero_is_lindblad_and_periodic() {
        let m = opo_model(0.2, 0.2, 1.0, 0.7).unwrap();
        let cs = CountingSpec::unit(1);
        let l = lindblad_at(&m.at(0.0).unwrap()).unwrap();
        assert_eq!(tilted_jump_generator(&m, 0.0, &cs, 0.0).unwrap(), l);
        let a = tilted_jump_generator(&m, 0.0, &cs, 0.4).unwrap();
        let b = tilted_jump_generator(&m, 0.0, &cs, 0.4 + 2.0 * PI).unwrap();
        assert!(close(&a.sandwich, &b.sandwich, 1e-14));
    }

    #[test]
    fn tilt_pi_flips_sandwich() {
        let m = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
        let g = tilted_jump_generator(&m, 0.0, &CountingSpec::unit(1), PI).unwrap();
        let co = g.coefficients().unwrap();
        assert!(close(&g.sandwich, &g.anti.transpose(), 1e-15));
        assert!(close(&co.riccati, &(CMatrix::identity(2, 2) * c(-1.0, 0.0)), 1e-15));
    }

    #[test]
    fn tilted_matches_closed_coefficients() {
        let m = opo_model(0.3, 0.2, 1.0, 1.0).unwrap();
        let p = m.at(0.0).unwrap();
        let lam = 0.9;
        let g = tilted_jump_generator(&m, 0.0, &CountingSpec::unit(1), lam).unwrap();
        let co = g.coefficients().unwrap();
        let om = omega_c(1);
        let ll = gram(&p.monitored);
        let re_ll = ll.map(|z| c(z.re, 0.0));
        let im_ll = ll.map(|z| c(z.im, 0.0));
        let k = &g.sandwich;
        let drift = &om * (complexify(&p.hamiltonian) + skew(k) * I);
        let diff = &om * (sym(k) + &re_ll) * om.transpose();
        let q = sym(k) - &re_ll;
        let w = skew(k) * I - im_ll;
        assert!(close(&co.drift, &drift, 1e-15));
        assert!(close(&co.diffusion, &diff, 1e-15));
        assert!(close(&co.riccati, &q, 1e-15));
        assert!(close(&co.trace_form, &w, 1e-15));
    }

    #[test]
    fn tilt_rejects_weight_mismatch() {
        let m = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
        let r = tilted_jump_generator(&m, 0.0, &CountingSpec::new(alloc::vec![1.0, 1.0]), 0.1);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn diffusive_zero_lambda_is_lindblad() {
        let m = opo_model(0.2, 0.2, 1.0, 0.8).unwrap();
        let spec = DiffusiveSpec::new(alloc::vec![1.0], alloc::vec![0.3]).unwrap();
        let g = tilted_diffusive_generator(&m, 0.0, &spec, 0.0).unwrap();
        assert_eq!(g, lindblad_at(&m.at(0.0).unwrap()).unwrap());
    }

    #[test]
    fn diffusive_zero_phase_has_no_commutator_shift() {
        // at φ = 0, 𝕗 − 𝕘 = 2i·Im ℓ: only the part of the jump row along p̂ survives
        let h = RMatrix::identity(2, 2);
        let row = CMatrix::from_row_slice(1, 2, &[c(0.7, 0.0), c(0.0, 0.0)]);
        let m = QuadraticModel::new(
            "x-jump",
            1,
            move |_| h.clone(),
            |_| RVector::zeros(2),
            move |_| row.clone(),
            |_| CMatrix::zeros(0, 2),
        )
        .unwrap();
        let spec = DiffusiveSpec::new(alloc::vec![1.0], alloc::vec![0.0]).unwrap();
        let g = tilted_diffusive_generator(&m, 0.0, &spec, 0.1).unwrap();
        assert!(g.comm_linear.iter().all(|z| z.norm() < 1e-15));
        assert!(g.anti_linear.iter().any(|z| z.norm() > 1e-3));
        assert!((g.constant - c(0.005, 0.0)).norm() < 1e-16);
    }

    #[test]
    fn replica_block_structure() {
        let m = opo_model(0.0, 0.2, 1.0, 0.6).unwrap();
        let thetas = [0.0, 0.1, 0.2, 0.3];
        let g = replica_generator(&m, &thetas).unwrap();
        assert_eq!(g.dim(), 8);
        let mut nonzero = 0;
        for bi in 0..4 {
            for bj in 0..4 {
                let blk = g.sandwich.view((2 * bi, 2 * bj), (2, 2));
                let nz = blk.iter().any(|z| z.norm() > 0.0);
                let expected = bi == bj || bi == (bj + 1) % 4;
                assert_eq!(nz, expected, "block ({bi},{bj})");
                nonzero += nz as usize;
                if bi != bj {
                    assert!(g.anti.view((2 * bi, 2 * bj), (2, 2)).iter().all(|z| z.norm() == 0.0));
                }
            }
        }
        assert_eq!(nonzero, 8);
        assert!(g.anti_linear.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn replica_rejects_bad_input() {
        let m = opo_model(0.0, 0.2, 1.0, 1.0).unwrap();
        assert!(replica_generator(&m, &[0.0]).is_err());
        let two = QuadraticModel::new(
            "two",
            1,
            |_| RMatrix::identity(2, 2),
            |_| RVector::zeros(2),
            |_| CMatrix::from_element(2, 2, c(0.1, 0.0)),
            |_| CMatrix::zeros(0, 2),
        )
        .unwrap();
        assert!(replica_generator(&two, &[0.0, 0.0]).is_err());
    }
}
