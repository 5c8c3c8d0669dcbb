//! The J2 Hamiltonian in Delaunay variables and the Cartesian zonal field.
//!
//! Sign convention: `H0 = +mu^2 / (2 L^2)` and `H1 = -U / J2`, i.e. the
//! series Hamiltonian is the negative of the physical energy. The angle rates
//! of the Kepler problem are therefore `-dH/dp`, which is how
//! [`crate::propagator::mean_rates`] consumes the mean Hamiltonian.

use nalgebra::Vector3;

use crate::elements::{
    a_over_r, eccentricity_from_momenta, mean_to_true, DelaunayState, Momenta, PhysicalModel,
    DELAUNAY_SINGULAR,
};
use crate::error::{Error, Result};

/// Anomaly kinematics at a point of the orbit, with the partials needed to
/// differentiate at fixed mean anomaly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnomalyPoint {
    pub e: f64,
    /// `G / L = sqrt(1 - e²)`.
    pub eta: f64,
    pub nu: f64,
    /// `a / r`.
    pub rho: f64,
    /// `∂ν/∂e` at fixed mean anomaly.
    pub dnu_de: f64,
    /// `∂ν/∂l = (G/L) (a/r)²`.
    pub dnu_dl: f64,
}

impl AnomalyPoint {
    pub fn from_mean(big_l: f64, big_g: f64, l: f64) -> Result<Self> {
        let e = eccentricity_from_momenta(big_l, big_g);
        Ok(Self::from_true(big_l, big_g, mean_to_true(l, e)?))
    }

    pub fn from_true(big_l: f64, big_g: f64, nu: f64) -> Self {
        let e = eccentricity_from_momenta(big_l, big_g);
        let eta = big_g / big_l;
        let (s, c) = nu.sin_cos();
        let rho = a_over_r(nu, e);
        AnomalyPoint {
            e,
            eta,
            nu,
            rho,
            dnu_de: s * (2.0 + e * c) / (eta * eta),
            dnu_dl: rho * rho * eta,
        }
    }

    /// `∂e/∂L` and `∂e/∂G`. Singular on circular orbits.
    pub fn de_dmomenta(&self, big_l: f64) -> Result<(f64, f64)> {
        if self.e < DELAUNAY_SINGULAR {
            return Err(Error::domain(format!(
                "eccentricity {} too small for Delaunay partials",
                self.e
            )));
        }
        let k = 1.0 / (big_l * self.e);
        Ok((self.eta * self.eta * k, -self.eta * k))
    }
}

/// `H1` together with its partials at fixed `(l, g)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct H1Partials {
    pub value: f64,
    pub d_big_l: f64,
    pub d_big_g: f64,
    pub d_big_h: f64,
    pub d_l: f64,
    pub d_g: f64,
}

/// Evaluator for `H = H0(L) + J2 H1(L, G, H, l, g)`; holds only `mu` and `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesHamiltonian {
    pub mu: f64,
    pub radius: f64,
}

impl SeriesHamiltonian {
    pub fn new(model: &PhysicalModel) -> Self {
        SeriesHamiltonian {
            mu: model.mu,
            radius: model.radius,
        }
    }

    pub fn h0(&self, big_l: f64) -> f64 {
        self.mu * self.mu / (2.0 * big_l * big_l)
    }

    pub fn dh0(&self, big_l: f64) -> f64 {
        -self.mu * self.mu / big_l.powi(3)
    }

    pub fn d2h0(&self, big_l: f64) -> f64 {
        3.0 * self.mu * self.mu / big_l.powi(4)
    }

    /// The J2² coefficient of the Hamiltonian, identically zero for this problem.
    pub fn h2(&self, _state: &DelaunayState) -> f64 {
        0.0
    }

    fn h1_prefactor(&self, m: &Momenta) -> f64 {
        let mu2 = self.mu * self.mu;
        mu2 * mu2 * self.radius * self.radius / (4.0 * m.big_l.powi(6) * m.big_g * m.big_g)
    }

    pub fn h1(&self, state: &DelaunayState) -> Result<f64> {
        let pt = AnomalyPoint::from_mean(state.big_l, state.big_g, state.l)?;
        Ok(self.h1_at(&state.momenta(), state.g, &pt))
    }

    pub fn h1_at(&self, m: &Momenta, g: f64, pt: &AnomalyPoint) -> f64 {
        let (gg, hh) = (m.big_g * m.big_g, m.big_h * m.big_h);
        let bracket = (3.0 * hh - gg) + 3.0 * (gg - hh) * (2.0 * g + 2.0 * pt.nu).cos();
        self.h1_prefactor(m) * pt.rho.powi(3) * bracket
    }

    pub fn h1_partials(&self, state: &DelaunayState) -> Result<H1Partials> {
        let pt = AnomalyPoint::from_mean(state.big_l, state.big_g, state.l)?;
        self.h1_partials_at(&state.momenta(), state.g, &pt)
    }

    /// Analytic partials; the momentum derivatives carry the implicit
    /// dependence of `ν` and `a/r` on `e(L, G)` at fixed mean anomaly.
    pub fn h1_partials_at(&self, m: &Momenta, g: f64, pt: &AnomalyPoint) -> Result<H1Partials> {
        let (de_dl, de_dg) = pt.de_dmomenta(m.big_l)?;
        let (big_g, big_h) = (m.big_g, m.big_h);
        let (gg, hh) = (big_g * big_g, big_h * big_h);
        let c = self.h1_prefactor(m);
        let phi = 2.0 * g + 2.0 * pt.nu;
        let (sphi, cphi) = phi.sin_cos();
        let (snu, cnu) = pt.nu.sin_cos();
        let rho = pt.rho;
        let rho2 = rho * rho;
        let rho3 = rho2 * rho;

        let bracket = (3.0 * hh - gg) + 3.0 * (gg - hh) * cphi;
        let bracket_phi = -6.0 * (gg - hh) * sphi;
        let value = c * rho3 * bracket;

        // d(a/r)/de at fixed l collapses to cos ν (a/r)²
        let d_de = c * (3.0 * rho2 * rho2 * cnu * bracket + rho3 * bracket_phi * pt.dnu_de);
        let drho_dnu = -pt.e * snu / (pt.eta * pt.eta);

        Ok(H1Partials {
            value,
            d_big_l: -6.0 * value / m.big_l + d_de * de_dl,
            d_big_g: -2.0 * value / big_g
                + c * rho3 * (-2.0 * big_g + 6.0 * big_g * cphi)
                + d_de * de_dg,
            d_big_h: c * rho3 * 6.0 * big_h * (1.0 - cphi),
            d_l: c * (3.0 * rho2 * drho_dnu * bracket + rho3 * bracket_phi) * pt.dnu_dl,
            d_g: c * rho3 * bracket_phi,
        })
    }

    /// Average of `H1` over the angles: `mu^4 R^2 (3H² - G²) / (4 L³ G⁵)`.
    pub fn h1_secular(&self, m: &Momenta) -> f64 {
        let mu2 = self.mu * self.mu;
        mu2 * mu2 * self.radius * self.radius * (3.0 * m.big_h * m.big_h - m.big_g * m.big_g)
            / (4.0 * m.big_l.powi(3) * m.big_g.powi(5))
    }

    pub fn h1_periodic(&self, state: &DelaunayState) -> Result<f64> {
        Ok(self.h1(state)? - self.h1_secular(&state.momenta()))
    }

    pub fn h1_periodic_at(&self, m: &Momenta, g: f64, pt: &AnomalyPoint) -> f64 {
        self.h1_at(m, g, pt) - self.h1_secular(m)
    }
}

/// Legendre polynomials `P_0..=P_n` and their derivatives at `x`.
pub fn legendre(nmax: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; nmax + 1];
    let mut dp = vec![0.0; nmax + 1];
    p[0] = 1.0;
    if nmax >= 1 {
        p[1] = x;
        dp[1] = 1.0;
    }
    for n in 2..=nmax {
        let nf = n as f64;
        p[n] = ((2.0 * nf - 1.0) * x * p[n - 1] - (nf - 1.0) * p[n - 2]) / nf;
        dp[n] = x * dp[n - 1] + nf * p[n - 1];
    }
    (p, dp)
}

fn check_position(r: &Vector3<f64>, model: &PhysicalModel, nmax: usize) -> Result<f64> {
    if nmax < 2 {
        return Err(Error::domain(format!("zonal degree must be at least 2, got {nmax}")));
    }
    let rn = r.norm();
    if !(rn > 0.5 * model.radius) {
        return Err(Error::domain(format!(
            "position radius {rn} km is inside the body guard {} km",
            0.5 * model.radius
        )));
    }
    Ok(rn)
}

fn zonal(model: &PhysicalModel, n: usize) -> f64 {
    model.zonal.get(n - 2).copied().unwrap_or(0.0)
}

/// `U(r) = Σ_{n=2}^{nmax} (mu/r) J_n (R/r)^n P_n(sin β)`.
pub fn zonal_potential(r: &Vector3<f64>, model: &PhysicalModel, nmax: usize) -> Result<f64> {
    let rn = check_position(r, model, nmax)?;
    let (p, _) = legendre(nmax, r.z / rn);
    let ratio = model.radius / rn;
    Ok((2..=nmax)
        .map(|n| zonal(model, n) * ratio.powi(n as i32) * p[n])
        .sum::<f64>()
        * model.mu
        / rn)
}

/// `∇U`.
pub fn zonal_gradient(
    r: &Vector3<f64>,
    model: &PhysicalModel,
    nmax: usize,
) -> Result<Vector3<f64>> {
    let rn = check_position(r, model, nmax)?;
    let rhat = r / rn;
    let s = rhat.z;
    let (p, dp) = legendre(nmax, s);
    let ratio = model.radius / rn;
    // ∇s = (ẑ - s r̂) / r
    let grad_s = (Vector3::z() - s * rhat) / rn;
    let mut radial = 0.0;
    let mut lat = 0.0;
    for n in 2..=nmax {
        let k = zonal(model, n) * ratio.powi(n as i32);
        radial -= (n as f64 + 1.0) * k * p[n] / rn;
        lat += k * dp[n];
    }
    Ok(model.mu / rn * (radial * rhat + lat * grad_s))
}

/// Total acceleration `-mu r / |r|³ - ∇U`.
pub fn acceleration(r: &Vector3<f64>, model: &PhysicalModel, nmax: usize) -> Result<Vector3<f64>> {
    let rn = r.norm();
    let kepler = -model.mu / (rn * rn * rn) * r;
    Ok(kepler - zonal_gradient(r, model, nmax)?)
}

/// Physical specific energy `v²/2 - mu/|r| + U`.
pub fn energy(
    r: &Vector3<f64>,
    v: &Vector3<f64>,
    model: &PhysicalModel,
    nmax: usize,
) -> Result<f64> {
    Ok(0.5 * v.norm_squared() - model.mu / r.norm() + zonal_potential(r, model, nmax)?)
}
