//! Dormand–Prince 5(4) with FSAL and 4th-order dense output, on flat
//! complex state vectors.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::C64;

use super::IntegratorConfig;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const MAX_STEPS: usize = 50_000_000;

/// Adaptive stepper; owns the current point and the dense-output
/// polynomial of the last accepted step.
pub(crate) struct Dopri5<F> {
    rhs: F,
    cfg: IntegratorConfig,
    t: f64,
    y: Vec<C64>,
    h: f64,
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
    t_old: f64,
    h_old: f64,
    cont: [Vec<C64>; 5],
    steps: usize,
}

impl<F: FnMut(&[C64], &mut [C64])> Dopri5<F> {
    pub(crate) fn new(mut rhs: F, cfg: IntegratorConfig, t0: f64, y0: Vec<C64>) -> Self {
        let n = y0.len();
        let mut k1 = vec![C64::new(0.0, 0.0); n];
        rhs(&y0, &mut k1);
        let zeros = || vec![C64::new(0.0, 0.0); n];
        let mut s = Self {
            rhs,
            cfg,
            t: t0,
            y: y0,
            h: 0.0,
            k: [k1, zeros(), zeros(), zeros(), zeros(), zeros(), zeros()],
            tmp: zeros(),
            y_new: zeros(),
            t_old: t0,
            h_old: 0.0,
            cont: [zeros(), zeros(), zeros(), zeros(), zeros()],
            steps: 0,
        };
        s.h = s.initial_step();
        s
    }

    pub(crate) fn t(&self) -> f64 {
        self.t
    }

    pub(crate) fn y(&self) -> &[C64] {
        &self.y
    }

    /// Derivative at the current point.
    pub(crate) fn dy(&self) -> &[C64] {
        &self.k[0]
    }

    fn scale(&self, a: C64, b: C64) -> f64 {
        self.cfg.abs_tol + self.cfg.rel_tol * a.norm().max(b.norm())
    }

    fn initial_step(&mut self) -> f64 {
        let n = self.y.len().max(1) as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for (y, f) in self.y.iter().zip(&self.k[0]) {
            let sk = self.cfg.abs_tol + self.cfg.rel_tol * y.norm();
            d0 += y.norm_sqr() / (sk * sk);
            d1 += f.norm_sqr() / (sk * sk);
        }
        d0 = libm::sqrt(d0 / n);
        d1 = libm::sqrt(d1 / n);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(self.cfg.max_step);
        for i in 0..self.y.len() {
            self.tmp[i] = self.y[i] + self.k[0][i] * h0;
        }
        let mut f1 = vec![C64::new(0.0, 0.0); self.y.len()];
        (self.rhs)(&self.tmp, &mut f1);
        let mut d2 = 0.0;
        for i in 0..self.y.len() {
            let sk = self.cfg.abs_tol + self.cfg.rel_tol * self.y[i].norm();
            d2 += (f1[i] - self.k[0][i]).norm_sqr() / (sk * sk);
        }
        d2 = libm::sqrt(d2 / n) / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { libm::pow(0.01 / dm, 0.2) };
        (100.0 * h0).min(h1).min(self.cfg.max_step)
    }

    fn stage(&mut self, h: f64, coeffs: &[(usize, f64)], out: usize) {
        for i in 0..self.y.len() {
            let mut acc = self.y[i];
            for &(j, a) in coeffs {
                acc += self.k[j][i] * (h * a);
            }
            self.tmp[i] = acc;
        }
        let (tmp, k) = (&self.tmp, &mut self.k[out]);
        (self.rhs)(tmp, k);
    }

    /// Takes one accepted step, never passing `t_stop`.
    pub(crate) fn advance(&mut self, t_stop: f64) -> Result<()> {
        let mut reject = false;
        loop {
            self.steps += 1;
            if self.steps > MAX_STEPS {
                return Err(Error::ToleranceFailure { t: self.t, step: self.h });
            }
            let remaining = t_stop - self.t;
            let mut h = self.h.min(self.cfg.max_step);
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if !(h > 1e-14 * self.t.abs().max(1.0)) {
                return Err(Error::ToleranceFailure { t: self.t, step: h });
            }
            self.stage(h, &[(0, A21)], 1);
            self.stage(h, &[(0, A31), (1, A32)], 2);
            self.stage(h, &[(0, A41), (1, A42), (2, A43)], 3);
            self.stage(h, &[(0, A51), (1, A52), (2, A53), (3, A54)], 4);
            self.stage(h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], 5);
            for i in 0..self.y.len() {
                self.y_new[i] = self.y[i]
                    + (self.k[0][i] * A71
                        + self.k[2][i] * A73
                        + self.k[3][i] * A74
                        + self.k[4][i] * A75
                        + self.k[5][i] * A76)
                        * h;
            }
            {
                let (y_new, k) = (&self.y_new, &mut self.k[6]);
                (self.rhs)(y_new, k);
            }
            let mut acc = 0.0;
            let mut finite = true;
            for i in 0..self.y.len() {
                let e = (self.k[0][i] * E1
                    + self.k[2][i] * E3
                    + self.k[3][i] * E4
                    + self.k[4][i] * E5
                    + self.k[5][i] * E6
                    + self.k[6][i] * E7)
                    * h;
                let r = e.norm() / self.scale(self.y[i], self.y_new[i]);
                finite &= r.is_finite();
                acc += r * r;
            }
            let err = if finite { libm::sqrt(acc / self.y.len().max(1) as f64) } else { f64::INFINITY };
            if err <= 1.0 {
                let fac = if err == 0.0 {
                    FAC_MAX
                } else {
                    (SAFETY * libm::pow(err, -0.2)).clamp(FAC_MIN, FAC_MAX)
                };
                let fac = if reject { fac.min(1.0) } else { fac };
                self.finish_step(h);
                self.t = if last { t_stop } else { self.t + h };
                self.h = h * fac;
                if let Some(limit) = self.blown_up() {
                    return Err(Error::RiccatiBlowup { t: self.t, limit });
                }
                return Ok(());
            }
            reject = true;
            let fac = if err.is_finite() {
                (SAFETY * libm::pow(err, -0.2)).clamp(FAC_MIN, 1.0)
            } else {
                FAC_MIN
            };
            self.h = h * fac;
        }
    }

    fn finish_step(&mut self, h: f64) {
        for i in 0..self.y.len() {
            let y0 = self.y[i];
            let y1 = self.y_new[i];
            let r2 = y1 - y0;
            let r3 = self.k[0][i] * h - r2;
            let r4 = r2 - self.k[6][i] * h - r3;
            let r5 = (self.k[0][i] * D1
                + self.k[2][i] * D3
                + self.k[3][i] * D4
                + self.k[4][i] * D5
                + self.k[5][i] * D6
                + self.k[6][i] * D7)
                * h;
            self.cont[0][i] = y0;
            self.cont[1][i] = r2;
            self.cont[2][i] = r3;
            self.cont[3][i] = r4;
            self.cont[4][i] = r5;
        }
        self.t_old = self.t;
        self.h_old = h;
        core::mem::swap(&mut self.y, &mut self.y_new);
        self.k.swap(0, 6);
    }

    fn blown_up(&self) -> Option<f64> {
        let limit = self.cfg.blowup_norm;
        let bad = self.y.iter().any(|z| !(z.norm() <= limit));
        bad.then_some(limit)
    }

    /// Dense output inside the last accepted step.
    pub(crate) fn dense(&self, t: f64, out: &mut [C64]) {
        if self.h_old == 0.0 || t == self.t {
            out.copy_from_slice(&self.y);
            return;
        }
        let th = (t - self.t_old) / self.h_old;
        let th1 = 1.0 - th;
        for (i, o) in out.iter_mut().enumerate() {
            let c = &self.cont;
            *o = c[0][i] + (c[1][i] + (c[2][i] + (c[3][i] + c[4][i] * th1) * th) * th1) * th;
        }
    }
}
