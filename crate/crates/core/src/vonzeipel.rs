//! Averaging operators, the mean Hamiltonian `K0 + J2 K1 + J2² K2` and the
//! generating series `S = P·q + J2 S1 + J2² S2`.
//!
//! `S1` is closed form. `S2` has no usable closed form; it is tabulated on a
//! uniform `(l, g)` grid and integrated spectrally in `l`.

use std::f64::consts::TAU;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::elements::{true_to_mean, Momenta, PhysicalModel};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hamiltonian::{AnomalyPoint, SeriesHamiltonian};
use crate::quadrature::GaussLegendre;

/// Trapezoidal averaging over an angle torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusAverage {
    /// Nodes per angle.
    pub nodes: usize,
    pub exec: Exec,
}

impl Default for TorusAverage {
    fn default() -> Self {
        TorusAverage {
            nodes: 256,
            exec: Exec::default(),
        }
    }
}

impl TorusAverage {
    pub fn new(nodes: usize) -> Self {
        TorusAverage {
            nodes,
            ..Default::default()
        }
    }

    pub fn with_exec(self, exec: Exec) -> Self {
        TorusAverage { exec, ..self }
    }

    /// Secular part: the mean of `f` over the `dim`-torus.
    pub fn secular<F>(&self, dim: usize, f: F) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let n = self.nodes;
        let total = n.pow(dim as u32);
        let step = TAU / n as f64;
        self.exec.sum(total, |mut idx| {
            let mut q = [0.0; 8];
            for slot in q.iter_mut().take(dim) {
                *slot = step * (idx % n) as f64;
                idx /= n;
            }
            f(&q[..dim])
        }) / total as f64
    }

    /// Periodic part `f(q) - sec(f)`.
    pub fn periodic<F>(&self, dim: usize, f: F, q: &[f64]) -> f64
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        f(q) - self.secular(dim, &f)
    }

    /// Mean over the mean anomaly, computed as an integral in true anomaly with
    /// `dl = dν / (η (a/r)²)`. `f` receives the anomaly point and the
    /// branch-consistent mean anomaly.
    pub fn anomaly_average<F>(&self, big_l: f64, big_g: f64, f: F) -> f64
    where
        F: Fn(&AnomalyPoint, f64) -> f64 + Sync + Send,
    {
        let n = self.nodes;
        self.exec.sum(n, |k| {
            let nu = TAU * k as f64 / n as f64;
            let pt = AnomalyPoint::from_true(big_l, big_g, nu);
            let l = true_to_mean(nu, pt.e);
            f(&pt, l) / (pt.eta * pt.rho * pt.rho)
        }) / n as f64
    }

    /// Mean over `(l, g)`, with the `l` direction integrated in true anomaly.
    pub fn anomaly_torus_average<F>(&self, big_l: f64, big_g: f64, f: F) -> f64
    where
        F: Fn(&AnomalyPoint, f64, f64) -> f64 + Sync + Send,
    {
        let n = self.nodes;
        let pts: Vec<(AnomalyPoint, f64)> = (0..n)
            .map(|k| {
                let nu = TAU * k as f64 / n as f64;
                let pt = AnomalyPoint::from_true(big_l, big_g, nu);
                (pt, true_to_mean(nu, pt.e))
            })
            .collect();
        self.exec.sum(n * n, |idx| {
            let (pt, l) = &pts[idx % n];
            let g = TAU * (idx / n) as f64 / n as f64;
            f(pt, *l, g) / (pt.eta * pt.rho * pt.rho)
        }) / (n * n) as f64
    }
}

/// The angle-free mean Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanHamiltonian {
    pub mu: f64,
    pub radius: f64,
}

impl MeanHamiltonian {
    pub fn new(model: &PhysicalModel) -> Self {
        MeanHamiltonian {
            mu: model.mu,
            radius: model.radius,
        }
    }

    pub fn k0(&self, m: &Momenta) -> f64 {
        self.mu * self.mu / (2.0 * m.big_l * m.big_l)
    }

    pub fn grad_k0(&self, m: &Momenta) -> [f64; 3] {
        [-self.mu * self.mu / m.big_l.powi(3), 0.0, 0.0]
    }

    fn mu4r2(&self) -> f64 {
        self.mu.powi(4) * self.radius * self.radius
    }

    /// `mu^4 R^2 (3H² - G²) / (4 L³ G⁵)`.
    pub fn k1(&self, m: &Momenta) -> f64 {
        let (l, g, h) = (m.big_l, m.big_g, m.big_h);
        self.mu4r2() * (3.0 * h * h - g * g) / (4.0 * l.powi(3) * g.powi(5))
    }

    pub fn grad_k1(&self, m: &Momenta) -> [f64; 3] {
        let (l, g, h) = (m.big_l, m.big_g, m.big_h);
        let c = self.mu4r2() / (4.0 * l.powi(3));
        [
            -3.0 * self.k1(m) / l,
            c * (3.0 * g * g - 15.0 * h * h) / g.powi(6),
            c * 6.0 * h / g.powi(5),
        ]
    }

    fn k2_prefactor(&self) -> f64 {
        3.0 * self.mu.powi(6) * self.radius.powi(4) / 128.0
    }

    /// The `(l, g)` average of `H̄`:
    /// `3 mu^6 R^4 N(L, G, H) / (128 G^11 L^5)`.
    pub fn k2(&self, m: &Momenta) -> f64 {
        let (l, g, _) = (m.big_l, m.big_g, m.big_h);
        self.k2_prefactor() * k2_numerator(m) / (g.powi(11) * l.powi(5))
    }

    pub fn grad_k2(&self, m: &Momenta) -> [f64; 3] {
        let (l, g, h) = (m.big_l, m.big_g, m.big_h);
        let (g2, g3, g4, g5) = (g * g, g.powi(3), g.powi(4), g.powi(5));
        let (h2, h3, h4) = (h * h, h.powi(3), h.powi(4));
        let l2 = l * l;
        let n = k2_numerator(m);
        let n_l = 4.0 * g5 - 10.0 * g4 * l - 24.0 * g3 * h2 + 20.0 * g2 * h2 * l + 36.0 * g * h4
            + 70.0 * h4 * l;
        let n_g = 30.0 * g5 + 20.0 * g4 * l - 72.0 * g3 * h2 - 20.0 * g3 * l2
            - 72.0 * g2 * h2 * l
            + 10.0 * g * h4
            + 20.0 * g * h2 * l2
            + 36.0 * h4 * l;
        let n_h = -36.0 * g4 * h - 48.0 * g3 * h * l + 20.0 * g2 * h3 + 20.0 * g2 * h * l2
            + 144.0 * g * h3 * l
            + 140.0 * h3 * l2;
        let c = self.k2_prefactor() / (g.powi(11) * l.powi(5));
        [
            c * (n_l - 5.0 * n / l),
            c * (n_g - 11.0 * n / g),
            c * n_h,
        ]
    }

    /// `K0 + j2 K1 (+ j2² K2)`.
    pub fn value(&self, m: &Momenta, j2: f64, second_order: bool) -> f64 {
        let k2 = if second_order { self.k2(m) } else { 0.0 };
        self.k0(m) + j2 * self.k1(m) + j2 * j2 * k2
    }

    pub fn gradient(&self, m: &Momenta, j2: f64, second_order: bool) -> [f64; 3] {
        let g0 = self.grad_k0(m);
        let g1 = self.grad_k1(m);
        let g2 = if second_order {
            self.grad_k2(m)
        } else {
            [0.0; 3]
        };
        std::array::from_fn(|k| g0[k] + j2 * g1[k] + j2 * j2 * g2[k])
    }
}

fn k2_numerator(m: &Momenta) -> f64 {
    let (l, g, h) = (m.big_l, m.big_g, m.big_h);
    let (g2, h2, l2) = (g * g, h * h, l * l);
    let h4 = h2 * h2;
    5.0 * g.powi(6) + 4.0 * g.powi(5) * l - 18.0 * g.powi(4) * h2 - 5.0 * g.powi(4) * l2
        - 24.0 * g.powi(3) * h2 * l
        + 5.0 * g2 * h4
        + 10.0 * g2 * h2 * l2
        + 36.0 * g * h4 * l
        + 35.0 * h4 * l2
}

/// `S1` and its partials.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct S1Partials {
    pub value: f64,
    pub d_big_l: f64,
    pub d_big_g: f64,
    pub d_big_h: f64,
    pub d_l: f64,
    pub d_g: f64,
}

/// Evaluators for the generating series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratingSeries {
    pub ham: SeriesHamiltonian,
    /// `(l, g)` grid used to tabulate `S2`.
    pub s2_grid: (usize, usize),
    pub exec: Exec,
}

impl GeneratingSeries {
    pub fn new(model: &PhysicalModel) -> Self {
        GeneratingSeries {
            ham: SeriesHamiltonian::new(model),
            s2_grid: (64, 16),
            exec: Exec::default(),
        }
    }

    pub fn with_exec(self, exec: Exec) -> Self {
        GeneratingSeries { exec, ..self }
    }

    pub fn with_s2_grid(self, n_l: usize, n_g: usize) -> Self {
        GeneratingSeries {
            s2_grid: (n_l, n_g),
            ..self
        }
    }

    pub fn mean_hamiltonian(&self) -> MeanHamiltonian {
        MeanHamiltonian {
            mu: self.ham.mu,
            radius: self.ham.radius,
        }
    }

    /// `S0 = P·q`.
    pub fn s0(&self, p: &[f64; 3], q: &[f64; 3]) -> f64 {
        p.iter().zip(q).map(|(a, b)| a * b).sum()
    }

    pub fn s1(&self, m: &Momenta, l: f64, g: f64) -> Result<f64> {
        let pt = AnomalyPoint::from_mean(m.big_l, m.big_g, l)?;
        Ok(self.s1_at(m, l, g, &pt))
    }

    fn s1_k(&self, m: &Momenta) -> f64 {
        self.ham.mu * self.ham.mu * self.ham.radius * self.ham.radius / (4.0 * m.big_g.powi(5))
    }

    /// `(l - ν - e sin ν, T)` where `T` collects the `2g` harmonics.
    fn s1_pieces(l: f64, g: f64, pt: &AnomalyPoint) -> (f64, f64) {
        let (e, nu) = (pt.e, pt.nu);
        let w = l - nu - e * nu.sin();
        let t = 1.5 * (2.0 * g + 2.0 * nu).sin()
            + 1.5 * e * (2.0 * g + nu).sin()
            + 0.5 * e * (2.0 * g + 3.0 * nu).sin();
        (w, t)
    }

    pub fn s1_at(&self, m: &Momenta, l: f64, g: f64, pt: &AnomalyPoint) -> f64 {
        let (gg, hh) = (m.big_g * m.big_g, m.big_h * m.big_h);
        let (w, t) = Self::s1_pieces(l, g, pt);
        self.s1_k(m) * ((gg - 3.0 * hh) * w + (gg - hh) * t)
    }

    pub fn s1_partials(&self, m: &Momenta, l: f64, g: f64) -> Result<S1Partials> {
        let pt = AnomalyPoint::from_mean(m.big_l, m.big_g, l)?;
        self.s1_partials_at(m, l, g, &pt)
    }

    pub fn s1_partials_at(
        &self,
        m: &Momenta,
        l: f64,
        g: f64,
        pt: &AnomalyPoint,
    ) -> Result<S1Partials> {
        let (big_l, big_g, big_h) = (m.big_l, m.big_g, m.big_h);
        let (gg, hh) = (big_g * big_g, big_h * big_h);
        let (e, nu) = (pt.e, pt.nu);
        let k = self.s1_k(m);
        let (w, t) = Self::s1_pieces(l, g, pt);
        let value = k * ((gg - 3.0 * hh) * w + (gg - hh) * t);

        let phi = 2.0 * g + 2.0 * nu;
        let (a1, a3) = (2.0 * g + nu, 2.0 * g + 3.0 * nu);
        let (snu, cnu) = nu.sin_cos();
        let rho3 = pt.rho.powi(3);
        let (de_dl, de_dg) = pt.de_dmomenta(big_l)?;

        let dw_de = -pt.dnu_de * (1.0 + e * cnu) - snu;
        let dt_de = 1.5 * a1.sin()
            + 0.5 * a3.sin()
            + (3.0 * phi.cos() + 1.5 * e * a1.cos() + 1.5 * e * a3.cos()) * pt.dnu_de;
        let z = (gg - 3.0 * hh) * dw_de + (gg - hh) * dt_de;

        let eta3 = pt.eta.powi(3);
        let mu2r2 = self.ham.mu * self.ham.mu * self.ham.radius * self.ham.radius;
        Ok(S1Partials {
            value,
            d_big_l: k * z * de_dl,
            d_big_g: -5.0 * value / big_g + k * 2.0 * big_g * (w + t) + k * z * de_dg,
            d_big_h: k * (-6.0 * big_h * w - 2.0 * big_h * t),
            d_l: mu2r2 / (4.0 * big_l.powi(3) * gg)
                * ((3.0 * hh - gg) * (rho3 - 1.0 / eta3) + 3.0 * (gg - hh) * rho3 * phi.cos()),
            d_g: k * (gg - hh) * (3.0 * phi.cos() + 3.0 * e * a1.cos() + e * a3.cos()),
        })
    }

    /// `H̄ = ½ H0''(L) S1_l² + H1_L S1_l + H1_G S1_g`, the angle-dependent
    /// second-order term.
    pub fn hbar(&self, m: &Momenta, l: f64, g: f64) -> Result<f64> {
        let pt = AnomalyPoint::from_mean(m.big_l, m.big_g, l)?;
        self.hbar_at(m, l, g, &pt)
    }

    pub fn hbar_at(&self, m: &Momenta, l: f64, g: f64, pt: &AnomalyPoint) -> Result<f64> {
        let s1 = self.s1_partials_at(m, l, g, pt)?;
        let h1 = self.ham.h1_partials_at(m, g, pt)?;
        Ok(0.5 * self.ham.d2h0(m.big_l) * s1.d_l * s1.d_l
            + h1.d_big_l * s1.d_l
            + h1.d_big_g * s1.d_g)
    }

    /// `H̄` assembled as `H̄0 + H̄3 (a/r)³ + H̄6 (a/r)⁶` plus the terms coming from
    /// the dependence of `ν` and `a/r` on the eccentricity. Independent of
    /// [`Self::hbar`] except for the closed form of `S1`.
    pub fn hbar_closed_form(&self, m: &Momenta, l: f64, g: f64) -> Result<f64> {
        let pt = AnomalyPoint::from_mean(m.big_l, m.big_g, l)?;
        let (hbar0, hbar3, hbar6) = self.hbar_coefficients(m, g, &pt);
        let base = hbar0 + hbar3 * pt.rho.powi(3) + hbar6 * pt.rho.powi(6);

        let (big_l, big_g, big_h) = (m.big_l, m.big_g, m.big_h);
        let (gg, hh) = (big_g * big_g, big_h * big_h);
        let (e, nu) = (pt.e, pt.nu);
        if e < crate::elements::DELAUNAY_SINGULAR {
            return Err(Error::domain("eccentricity too small for the second-order terms"));
        }
        let phi = 2.0 * g + 2.0 * nu;
        let bracket = (3.0 * hh - gg) + 3.0 * (gg - hh) * phi.cos();
        let c = self.ham.mu.powi(4) * self.ham.radius.powi(2) / (4.0 * big_l.powi(6) * gg);
        let s1 = self.s1_partials_at(m, l, g, &pt)?;
        let rho = pt.rho;
        let d_de = 3.0 * rho.powi(4) * nu.cos() * bracket
            - 6.0 * (gg - hh) * rho.powi(3) * nu.sin() * (2.0 + e * nu.cos()) * phi.sin()
                / (pt.eta * pt.eta);
        let coupling = big_g / (big_l * big_l * e) * (big_g * s1.d_l / big_l - s1.d_g);
        Ok(base + c * coupling * d_de)
    }

    /// Coefficients of `1`, `(a/r)³` and `(a/r)⁶` in `H̄` when the `H1`
    /// partials are taken with `ν` and `a/r` frozen.
    pub fn hbar_coefficients(&self, m: &Momenta, g: f64, pt: &AnomalyPoint) -> (f64, f64, f64) {
        let (l, gm, h) = (m.big_l, m.big_g, m.big_h);
        let e = pt.e;
        let nu = pt.nu;
        let s2 = (g + nu).sin().powi(2);
        let c2 = (2.0 * (g + nu)).cos();
        let (c1, c3) = ((2.0 * g + nu).cos(), (2.0 * g + 3.0 * nu).cos());
        let (g2, h2) = (gm * gm, h * h);
        let (g4, h4) = (g2 * g2, h2 * h2);
        let k = self.ham.mu.powi(6) * self.ham.radius.powi(4);

        let hbar0 = 3.0 * k * (g2 - 3.0 * h2).powi(2) / (32.0 * gm.powi(10) * l.powi(4));
        let hbar3 = -3.0 * k / (16.0 * gm.powi(8) * l.powi(7))
            * (12.0 * e * g2 * h2 * l * s2 * c1 + 4.0 * e * g2 * h2 * l * s2 * c3
                - 12.0 * e * h4 * l * s2 * c1
                - 4.0 * e * h4 * l * s2 * c3
                + 3.0 * gm.powi(5) * c2
                - 12.0 * gm.powi(3) * h2 * c2
                + 12.0 * g2 * h2 * l * s2 * c2
                + 9.0 * gm * h4 * c2
                - 12.0 * h4 * l * s2 * c2
                - gm.powi(5)
                + 6.0 * gm.powi(3) * h2
                - 9.0 * gm * h4);
        let hbar6 = -9.0 * k / (32.0 * g4 * l.powi(10))
            * (9.0 * g4 * c2 * c2 - 6.0 * g4 * c2 - 18.0 * g2 * h2 * c2 * c2 + 24.0 * g2 * h2 * c2
                + 9.0 * h4 * c2 * c2
                - 18.0 * h4 * c2
                + g4
                - 6.0 * g2 * h2
                + 9.0 * h4);
        (hbar0, hbar3, hbar6)
    }

    /// Tabulates `S2` at fixed momenta.
    pub fn s2_table(&self, m: &Momenta) -> Result<S2Table> {
        S2Table::build(self, m)
    }

    /// `S2` tables at `m` and at the shifted momenta needed for `∂S2/∂P`.
    pub fn s2_slice(&self, m: &Momenta) -> Result<S2Slice> {
        S2Slice::build(self, m)
    }

    /// One-off `S2` evaluation; builds a table each call.
    pub fn s2(&self, m: &Momenta, l: f64, g: f64) -> Result<f64> {
        Ok(self.s2_table(m)?.value(l, g))
    }
}

/// Truncated 2-D Fourier series in `(l, g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct S2Table {
    /// Largest retained `|j|` (in `l`) and `|k|` (in `g`).
    jmax: usize,
    kmax: usize,
    /// `S2` coefficients, row-major in `(j + jmax, k + kmax)`.
    coeffs: Vec<Complex64>,
    /// Coefficients of `H̄` itself, same layout.
    hbar_coeffs: Vec<Complex64>,
}

impl S2Table {
    fn build(series: &GeneratingSeries, m: &Momenta) -> Result<Self> {
        let (n_l, n_g) = series.s2_grid;
        if n_l < 4 || n_g < 2 {
            return Err(Error::Usage(format!("S2 grid {n_l}x{n_g} is too small")));
        }
        let w1 = series.ham.dh0(m.big_l);
        if w1.abs() < 1e-12 {
            return Err(Error::Resonance(w1.abs()));
        }
        let rows: Vec<Vec<f64>> = series.exec.try_map(n_l, |j| {
            let l = TAU * j as f64 / n_l as f64;
            let pt = AnomalyPoint::from_mean(m.big_l, m.big_g, l)?;
            (0..n_g)
                .map(|k| series.hbar_at(m, l, TAU * k as f64 / n_g as f64, &pt))
                .collect::<Result<Vec<f64>>>()
        })?;

        let mut data: Vec<Complex64> = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        let mut planner = FftPlanner::new();
        let fft_g = planner.plan_fft_forward(n_g);
        for row in data.chunks_mut(n_g) {
            fft_g.process(row);
        }
        let fft_l = planner.plan_fft_forward(n_l);
        let mut col = vec![Complex64::default(); n_l];
        for k in 0..n_g {
            for j in 0..n_l {
                col[j] = data[j * n_g + k];
            }
            fft_l.process(&mut col);
            for j in 0..n_l {
                data[j * n_g + k] = col[j];
            }
        }

        // drop the Nyquist rows so the series stays real
        let jmax = (n_l - 1) / 2;
        let kmax = (n_g - 1) / 2;
        let (nj, nk) = (2 * jmax + 1, 2 * kmax + 1);
        let scale = 1.0 / (n_l * n_g) as f64;
        let mut coeffs = vec![Complex64::default(); nj * nk];
        let mut hbar_coeffs = vec![Complex64::default(); nj * nk];
        for (a, j) in (-(jmax as isize)..=jmax as isize).enumerate() {
            for (b, k) in (-(kmax as isize)..=kmax as isize).enumerate() {
                let jj = j.rem_euclid(n_l as isize) as usize;
                let kk = k.rem_euclid(n_g as isize) as usize;
                let c = data[jj * n_g + kk] * scale;
                hbar_coeffs[a * nk + b] = c;
                if j != 0 {
                    // w1 ∂S2/∂l = -c  ⇒  s = -c / (w1 i j)
                    coeffs[a * nk + b] = -c / Complex64::new(0.0, w1 * j as f64);
                }
            }
        }
        Ok(S2Table {
            jmax,
            kmax,
            coeffs,
            hbar_coeffs,
        })
    }

    fn sum(&self, coeffs: &[Complex64], l: f64, g: f64) -> (f64, f64, f64) {
        let nk = 2 * self.kmax + 1;
        let eg: Vec<Complex64> = (0..nk)
            .map(|b| Complex64::from_polar(1.0, (b as f64 - self.kmax as f64) * g))
            .collect();
        let (mut v, mut dl, mut dg) = (0.0, 0.0, 0.0);
        for (a, row) in coeffs.chunks(nk).enumerate() {
            let j = a as f64 - self.jmax as f64;
            let el = Complex64::from_polar(1.0, j * l);
            let mut acc = Complex64::default();
            let mut acc_k = Complex64::default();
            for (b, c) in row.iter().enumerate() {
                let t = c * eg[b];
                acc += t;
                acc_k += t * (b as f64 - self.kmax as f64);
            }
            let acc = acc * el;
            let acc_k = acc_k * el;
            v += acc.re;
            dl -= j * acc.im;
            dg -= acc_k.im;
        }
        (v, dl, dg)
    }

    pub fn value(&self, l: f64, g: f64) -> f64 {
        self.sum(&self.coeffs, l, g).0
    }

    /// `(S2, ∂S2/∂l, ∂S2/∂g)`.
    pub fn eval(&self, l: f64, g: f64) -> (f64, f64, f64) {
        self.sum(&self.coeffs, l, g)
    }

    /// Trigonometric interpolant of `H̄`.
    pub fn hbar(&self, l: f64, g: f64) -> f64 {
        self.sum(&self.hbar_coeffs, l, g).0
    }

    /// Grid mean of `H̄`, a quadrature estimate of `K2`.
    pub fn hbar_mean(&self) -> f64 {
        let nk = 2 * self.kmax + 1;
        self.hbar_coeffs[self.jmax * nk + self.kmax].re
    }

    /// The part of `H̄` that depends on `g` alone. It cannot be removed by an
    /// `l`-antiderivative and is left out of `S2`.
    pub fn long_period(&self, g: f64) -> f64 {
        let nk = 2 * self.kmax + 1;
        let row = &self.hbar_coeffs[self.jmax * nk..(self.jmax + 1) * nk];
        row.iter()
            .enumerate()
            .filter(|(b, _)| *b != self.kmax)
            .map(|(b, c)| (c * Complex64::from_polar(1.0, (b as f64 - self.kmax as f64) * g)).re)
            .sum()
    }
}

/// `S2` tables at momenta `P` and at `P ± h e_k`, `P ± h/2 e_k`, giving
/// Richardson-extrapolated momentum partials.
#[derive(Debug, Clone, PartialEq)]
pub struct S2Slice {
    pub momenta: Momenta,
    pub base: S2Table,
    steps: [f64; 3],
    /// `[k][0..4]` = tables at `+h, -h, +h/2, -h/2` along momentum `k`.
    shifted: Vec<[S2Table; 4]>,
}

impl S2Slice {
    fn build(series: &GeneratingSeries, m: &Momenta) -> Result<Self> {
        let (l, g, h) = (m.big_l, m.big_g, m.big_h);
        // steps scale with the distance to the circular / equatorial edges
        let steps = [
            (0.02 * (l - g)).min(1e-3 * l),
            (0.02 * (l - g)).min(1e-3 * l),
            (0.02 * (g - h.abs())).min(1e-3 * g),
        ];
        if steps.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Numeric(format!(
                "degenerate momentum step for S2 partials: {steps:?}"
            )));
        }
        let base = S2Table::build(series, m)?;
        let mut shifted = Vec::with_capacity(3);
        for (k, &hk) in steps.iter().enumerate() {
            let at = |d: f64| {
                let mut p = m.to_array();
                p[k] += d;
                S2Table::build(series, &Momenta::from_array(p))
            };
            shifted.push([at(hk)?, at(-hk)?, at(0.5 * hk)?, at(-0.5 * hk)?]);
        }
        Ok(S2Slice {
            momenta: *m,
            base,
            steps,
            shifted,
        })
    }

    /// `[∂S2/∂L, ∂S2/∂G, ∂S2/∂H]` at `(l, g)`.
    pub fn momentum_partials(&self, l: f64, g: f64) -> [f64; 3] {
        std::array::from_fn(|k| {
            let t = &self.shifted[k];
            let h = self.steps[k];
            let d1 = (t[0].value(l, g) - t[1].value(l, g)) / (2.0 * h);
            let d2 = (t[2].value(l, g) - t[3].value(l, g)) / h;
            (4.0 * d2 - d1) / 3.0
        })
    }
}

/// Solves `w·∂Σ/∂q = -f` for a zero-mean periodic `f` by integrating along
/// the straight line through `q` in the direction of `w`:
/// `Σ(q) = -(s/|w|) ∫_0^1 f(q - (1-t) s ŵ) dt`, `s = ŵ·q`.
pub fn solve_homological_generic<F>(w: &[f64], f: F, q: &[f64], rule: &GaussLegendre) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if w.len() != q.len() {
        return Err(Error::Usage(format!(
            "frequency has {} components but q has {}",
            w.len(),
            q.len()
        )));
    }
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm >= 1e-12) {
        return Err(Error::Resonance(norm));
    }
    let what: Vec<f64> = w.iter().map(|x| x / norm).collect();
    let s: f64 = what.iter().zip(q).map(|(a, b)| a * b).sum();
    let mut buf = vec![0.0; q.len()];
    let integral = rule.integrate(0.0, 1.0, |t| {
        for ((b, qi), wi) in buf.iter_mut().zip(q).zip(&what) {
            *b = qi - (1.0 - t) * s * wi;
        }
        f(&buf)
    });
    Ok(-s / norm * integral)
}
