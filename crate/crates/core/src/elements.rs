//! Orbital element sets and the two-body kinematics that connect them.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EARTH_MU: f64 = 398_600.4418;
pub const EARTH_RADIUS: f64 = 6378.137;
pub const EARTH_J2: f64 = 1.082_626_68e-3;

/// Below this eccentricity (or sine of inclination) the Delaunay angles g, h
/// are undefined and conversions are refused.
pub const DELAUNAY_SINGULAR: f64 = 1e-8;

const KEPLER_MAX_ITER: usize = 50;
const KEPLER_RESIDUAL: f64 = 1e-13;

/// Reduces an angle to `[0, 2π)`.
pub fn normalize_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Force-model constants: gravitational parameter, equatorial radius and the
/// zonal coefficients `zonal[k] = J_{k+2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalModel {
    pub mu: f64,
    pub radius: f64,
    #[serde(default)]
    pub zonal: Vec<f64>,
}

impl PhysicalModel {
    pub fn new(mu: f64, radius: f64, zonal: Vec<f64>) -> Result<Self> {
        let model = PhysicalModel { mu, radius, zonal };
        model.validate()?;
        Ok(model)
    }

    /// Earth with J2 only.
    pub fn earth() -> Self {
        PhysicalModel {
            mu: EARTH_MU,
            radius: EARTH_RADIUS,
            zonal: vec![EARTH_J2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::domain(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::domain(format!("radius must be positive, got {}", self.radius)));
        }
        if let Some(j) = self.zonal.iter().find(|j| !(j.abs() < 1.0)) {
            return Err(Error::domain(format!("zonal coefficient {j} out of range")));
        }
        Ok(())
    }

    pub fn j2(&self) -> f64 {
        self.zonal.first().copied().unwrap_or(0.0)
    }

    /// Copy of the model with J2 replaced and higher zonals dropped.
    pub fn with_j2(&self, j2: f64) -> Self {
        PhysicalModel {
            mu: self.mu,
            radius: self.radius,
            zonal: vec![j2],
        }
    }
}

impl Default for PhysicalModel {
    fn default() -> Self {
        Self::earth()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerianElements {
    /// Semi-major axis [km].
    pub a: f64,
    pub e: f64,
    pub i: f64,
    pub raan: f64,
    pub argp: f64,
    pub mean_anom: f64,
}

impl KeplerianElements {
    /// Validates the element set and normalizes the three angles.
    pub fn new(a: f64, e: f64, i: f64, raan: f64, argp: f64, mean_anom: f64) -> Result<Self> {
        let el = KeplerianElements {
            a,
            e,
            i,
            raan: normalize_angle(raan),
            argp: normalize_angle(argp),
            mean_anom: normalize_angle(mean_anom),
        };
        el.validate()?;
        Ok(el)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::domain(format!("semi-major axis must be positive, got {}", self.a)));
        }
        if !(0.0..1.0).contains(&self.e) {
            return Err(Error::domain(format!("eccentricity must lie in [0, 1), got {}", self.e)));
        }
        if !(0.0..=PI).contains(&self.i) {
            return Err(Error::domain(format!("inclination must lie in [0, pi], got {}", self.i)));
        }
        Ok(())
    }

    pub fn true_anomaly(&self) -> Result<f64> {
        mean_to_true(self.mean_anom, self.e)
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.a, self.e, self.i, self.raan, self.argp, self.mean_anom]
    }
}

/// Delaunay action-angle variables. Momenta `(L, G, H)` in km²/s, angles
/// `(l, g, h)` = (mean anomaly, argument of pericenter, node longitude).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelaunayState {
    pub big_l: f64,
    pub big_g: f64,
    pub big_h: f64,
    pub l: f64,
    pub g: f64,
    pub h: f64,
}

impl DelaunayState {
    /// Validated constructor; angles are normalized to `[0, 2π)`.
    pub fn new(big_l: f64, big_g: f64, big_h: f64, l: f64, g: f64, h: f64) -> Result<Self> {
        let d = DelaunayState { big_l, big_g, big_h, l, g, h }.normalized();
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let (ll, gg, hh) = (self.big_l, self.big_g, self.big_h);
        if !(ll > 0.0) || !ll.is_finite() {
            return Err(Error::domain(format!("L must be positive, got {ll}")));
        }
        if !(gg > 0.0 && gg <= ll) {
            return Err(Error::domain(format!("G must satisfy 0 < G <= L, got G = {gg}, L = {ll}")));
        }
        if hh.abs() > gg {
            return Err(Error::domain(format!("|H| must not exceed G, got H = {hh}, G = {gg}")));
        }
        Ok(())
    }

    /// Array layout `(p, q) = (L, G, H, l, g, h)`.
    pub fn to_array(&self) -> [f64; 6] {
        [self.big_l, self.big_g, self.big_h, self.l, self.g, self.h]
    }

    /// Inverse of [`to_array`](Self::to_array); no validation or normalization.
    pub fn from_array(v: [f64; 6]) -> Self {
        DelaunayState {
            big_l: v[0],
            big_g: v[1],
            big_h: v[2],
            l: v[3],
            g: v[4],
            h: v[5],
        }
    }

    pub fn momenta(&self) -> Momenta {
        Momenta::new(self.big_l, self.big_g, self.big_h)
    }

    pub fn normalized(&self) -> Self {
        DelaunayState {
            l: normalize_angle(self.l),
            g: normalize_angle(self.g),
            h: normalize_angle(self.h),
            ..*self
        }
    }

    pub fn eccentricity(&self) -> f64 {
        eccentricity_from_momenta(self.big_l, self.big_g)
    }
}

/// The three Delaunay momenta on their own, i.e. the arguments of every
/// angle-free function (secular parts, mean Hamiltonian).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Momenta {
    pub big_l: f64,
    pub big_g: f64,
    pub big_h: f64,
}

impl Momenta {
    pub fn new(big_l: f64, big_g: f64, big_h: f64) -> Self {
        Momenta { big_l, big_g, big_h }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.big_l, self.big_g, self.big_h]
    }

    pub fn from_array(p: [f64; 3]) -> Self {
        Momenta::new(p[0], p[1], p[2])
    }

    pub fn eccentricity(&self) -> f64 {
        eccentricity_from_momenta(self.big_l, self.big_g)
    }

    pub fn with_angles(&self, l: f64, g: f64, h: f64) -> DelaunayState {
        DelaunayState {
            big_l: self.big_l,
            big_g: self.big_g,
            big_h: self.big_h,
            l,
            g,
            h,
        }
    }
}

/// `e = sqrt(1 - G²/L²)`, written to avoid cancellation for small `e`.
pub fn eccentricity_from_momenta(big_l: f64, big_g: f64) -> f64 {
    (((big_l - big_g) * (big_l + big_g)).max(0.0)).sqrt() / big_l
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianState {
    pub r: Vector3<f64>,
    pub v: Vector3<f64>,
}

impl CartesianState {
    pub fn new(r: Vector3<f64>, v: Vector3<f64>) -> Self {
        CartesianState { r, v }
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.r.x, self.r.y, self.r.z, self.v.x, self.v.y, self.v.z]
    }

    pub fn from_array(y: &[f64; 6]) -> Self {
        CartesianState {
            r: Vector3::new(y[0], y[1], y[2]),
            v: Vector3::new(y[3], y[4], y[5]),
        }
    }
}

fn check_ecc(e: f64) -> Result<()> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::domain(format!("eccentricity must lie in [0, 1), got {e}")));
    }
    Ok(())
}

/// Solves Kepler's equation `E - e sin E = M` for the eccentric anomaly.
///
/// Newton iteration seeded at `M + e sin M` inside the bracket
/// `[M - e, M + e]`, bisecting whenever a step leaves it. The result is on the
/// same 2π branch as `M`.
pub fn kepler_solve(mean_anom: f64, e: f64) -> Result<f64> {
    check_ecc(e)?;
    if !mean_anom.is_finite() {
        return Err(Error::domain("mean anomaly is not finite"));
    }
    let turns = (mean_anom / TAU).round();
    let m = mean_anom - turns * TAU;
    if e == 0.0 {
        return Ok(mean_anom);
    }

    let (mut lo, mut hi) = (m - e, m + e);
    let mut ecc_anom = m + e * m.sin();
    for _ in 0..KEPLER_MAX_ITER {
        let f = ecc_anom - e * ecc_anom.sin() - m;
        if f == 0.0 {
            break;
        }
        if f > 0.0 {
            hi = ecc_anom;
        } else {
            lo = ecc_anom;
        }
        let mut next = ecc_anom - f / (1.0 - e * ecc_anom.cos());
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - ecc_anom).abs();
        ecc_anom = next;
        if step <= 4.0 * f64::EPSILON * ecc_anom.abs().max(1.0) {
            break;
        }
    }

    let residual = ecc_anom - e * ecc_anom.sin() - m;
    if residual.abs() > KEPLER_RESIDUAL {
        return Err(Error::KeplerFailure {
            mean_anomaly: mean_anom,
            eccentricity: e,
        });
    }
    Ok(ecc_anom + turns * TAU)
}

// ν - E and E - ν written with β = e / (1 + sqrt(1 - e²)), which keeps the
// result continuous across branches.
fn beta(e: f64) -> f64 {
    e / (1.0 + (1.0 - e * e).sqrt())
}

pub fn eccentric_to_true(ecc_anom: f64, e: f64) -> f64 {
    let b = beta(e);
    let (s, c) = ecc_anom.sin_cos();
    ecc_anom + 2.0 * (b * s / (1.0 - b * c)).atan()
}

pub fn true_to_eccentric(nu: f64, e: f64) -> f64 {
    let b = beta(e);
    let (s, c) = nu.sin_cos();
    nu - 2.0 * (b * s / (1.0 + b * c)).atan()
}

pub fn eccentric_to_mean(ecc_anom: f64, e: f64) -> f64 {
    ecc_anom - e * ecc_anom.sin()
}

pub fn mean_to_true(mean_anom: f64, e: f64) -> Result<f64> {
    Ok(eccentric_to_true(kepler_solve(mean_anom, e)?, e))
}

pub fn true_to_mean(nu: f64, e: f64) -> f64 {
    eccentric_to_mean(true_to_eccentric(nu, e), e)
}

/// `a / r = (1 + e cos ν) / (1 - e²)`.
pub fn a_over_r(nu: f64, e: f64) -> f64 {
    (1.0 + e * nu.cos()) / (1.0 - e * e)
}

pub fn kep_to_delaunay(el: &KeplerianElements, model: &PhysicalModel) -> Result<DelaunayState> {
    el.validate()?;
    if el.e < DELAUNAY_SINGULAR {
        return Err(Error::domain(format!(
            "eccentricity {} below {DELAUNAY_SINGULAR}: argument of pericenter undefined",
            el.e
        )));
    }
    if el.i.sin() < DELAUNAY_SINGULAR {
        return Err(Error::domain(format!(
            "inclination {} is equatorial: node longitude undefined",
            el.i
        )));
    }
    let big_l = (model.mu * el.a).sqrt();
    let big_g = big_l * (1.0 - el.e * el.e).sqrt();
    let big_h = big_g * el.i.cos();
    DelaunayState::new(big_l, big_g, big_h, el.mean_anom, el.argp, el.raan)
}

pub fn delaunay_to_kep(d: &DelaunayState, model: &PhysicalModel) -> Result<KeplerianElements> {
    d.validate()?;
    let e = d.eccentricity();
    if e < DELAUNAY_SINGULAR {
        return Err(Error::domain(format!(
            "eccentricity {e} below {DELAUNAY_SINGULAR}: argument of pericenter undefined"
        )));
    }
    let cos_i = (d.big_h / d.big_g).clamp(-1.0, 1.0);
    if (1.0 - cos_i * cos_i).sqrt() < DELAUNAY_SINGULAR {
        return Err(Error::domain("equatorial orbit: node longitude undefined"));
    }
    KeplerianElements::new(d.big_l * d.big_l / model.mu, e, cos_i.acos(), d.h, d.g, d.l)
}

fn perifocal_to_inertial(raan: f64, i: f64, argp: f64) -> [Vector3<f64>; 2] {
    let (so, co) = raan.sin_cos();
    let (si, ci) = i.sin_cos();
    let (sw, cw) = argp.sin_cos();
    let p = Vector3::new(co * cw - so * sw * ci, so * cw + co * sw * ci, sw * si);
    let q = Vector3::new(-co * sw - so * cw * ci, -so * sw + co * cw * ci, cw * si);
    [p, q]
}

pub fn kep_to_cartesian(el: &KeplerianElements, model: &PhysicalModel) -> Result<CartesianState> {
    el.validate()?;
    let nu = el.true_anomaly()?;
    let p = el.a * (1.0 - el.e * el.e);
    let (s, c) = nu.sin_cos();
    let r = p / (1.0 + el.e * c);
    let vs = (model.mu / p).sqrt();
    let [pv, qv] = perifocal_to_inertial(el.raan, el.i, el.argp);
    Ok(CartesianState {
        r: pv * (r * c) + qv * (r * s),
        v: pv * (-vs * s) + qv * (vs * (el.e + c)),
    })
}

/// Inverse of [`kep_to_cartesian`]. Circular orbits get `argp = 0` (the
/// anomaly is then measured from the node) and equatorial orbits get
/// `raan = 0` (node line taken along the x axis).
pub fn cartesian_to_kep(state: &CartesianState, model: &PhysicalModel) -> Result<KeplerianElements> {
    const TINY: f64 = 1e-12;
    let mu = model.mu;
    let (r, v) = (state.r, state.v);
    let rn = r.norm();
    if !(rn > 0.0) {
        return Err(Error::domain("zero position vector"));
    }
    let hvec = r.cross(&v);
    let hn = hvec.norm();
    if hn <= TINY * rn * v.norm() {
        return Err(Error::domain("rectilinear orbit: r x v vanishes"));
    }
    let energy = 0.5 * v.norm_squared() - mu / rn;
    if !(energy < 0.0) {
        return Err(Error::domain("orbit is not elliptical"));
    }
    let a = -mu / (2.0 * energy);
    let evec = ((v.norm_squared() - mu / rn) * r - r.dot(&v) * v) / mu;
    let e = evec.norm();
    if e >= 1.0 {
        return Err(Error::domain(format!("eccentricity {e} is not elliptical")));
    }

    let hhat = hvec / hn;
    let i = hhat.z.clamp(-1.0, 1.0).acos();
    let node = Vector3::z().cross(&hvec);
    let (raan, n_hat) = if node.norm() > TINY * hn {
        let n_hat = node.normalize();
        (n_hat.y.atan2(n_hat.x), n_hat)
    } else {
        (0.0, Vector3::x())
    };
    let m_hat = hhat.cross(&n_hat);
    let in_plane = |u: &Vector3<f64>| u.dot(&m_hat).atan2(u.dot(&n_hat));

    let arg_lat = in_plane(&r);
    let argp = if e > TINY { in_plane(&evec) } else { 0.0 };
    let nu = arg_lat - argp;
    let mean_anom = true_to_mean(normalize_angle(nu), e);
    KeplerianElements::new(a, e, i, raan, argp, mean_anom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn model() -> PhysicalModel {
        PhysicalModel::earth()
    }

    #[test]
    fn kepler_trivial_cases() {
        assert_eq!(kepler_solve(0.0, 0.5).unwrap(), 0.0);
        assert_relative_eq!(kepler_solve(PI, 0.3).unwrap(), PI, epsilon = 1e-15);
    }

    #[test]
    fn kepler_matches_fixed_point_oracle() {
        // E_{k+1} = M + e sin E_k, contraction for e = 0.1.
        let (m, e) = (1.0, 0.1);
        let mut ecc = m;
        for _ in 0..200 {
            ecc = m + e * f64::sin(ecc);
        }
        let solved = kepler_solve(m, e).unwrap();
        assert!((solved - ecc).abs() < 1e-13);
        assert!((solved - 1.0886).abs() < 5e-5);
    }

    #[test]
    fn kepler_keeps_branch() {
        let m = 5.0 * TAU + 0.4;
        let ecc = kepler_solve(m, 0.6).unwrap();
        assert!((ecc - 5.0 * TAU).abs() < PI);
        assert!((ecc - 0.6 * ecc.sin() - m).abs() < 1e-13);
        let ecc = kepler_solve(-3.0, 0.2).unwrap();
        assert!((ecc - 0.2 * ecc.sin() + 3.0).abs() < 1e-13);
    }

    #[test]
    fn kepler_rejects_bad_eccentricity() {
        assert!(matches!(kepler_solve(1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(kepler_solve(1.0, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn kepler_residual_sweep() {
        for ie in 0..=90 {
            let e = ie as f64 * 0.01;
            for im in 0..400 {
                let m = im as f64 * TAU / 400.0;
                let ecc = kepler_solve(m, e).unwrap();
                assert!((ecc - e * ecc.sin() - m).abs() <= 1e-13, "e={e} M={m}");
            }
        }
    }

    #[test]
    fn true_anomaly_cases() {
        assert_eq!(eccentric_to_true(0.0, 0.7), 0.0);
        assert_relative_eq!(eccentric_to_true(PI, 0.7), PI, epsilon = 1e-15);
        let ecc = kepler_solve(1.0, 0.1).unwrap();
        let nu = eccentric_to_true(ecc, 0.1);
        assert!((nu - 1.1795).abs() < 1e-4);
        // r cos ν = a (cos E - e), r = a (1 - e cos E), a = 1
        let r = 1.0 - 0.1 * ecc.cos();
        assert_relative_eq!(r * nu.cos(), ecc.cos() - 0.1, epsilon = 1e-14);
        assert_relative_eq!(r * nu.sin(), (1.0f64 - 0.01).sqrt() * ecc.sin(), epsilon = 1e-14);
    }

    #[test]
    fn half_angle_relation_holds() {
        for k in 0..50 {
            let ecc = -3.0 + 0.12 * k as f64;
            let e = 0.45;
            let nu = eccentric_to_true(ecc, e);
            let lhs = (nu / 2.0).tan();
            let rhs = ((1.0 + e) / (1.0 - e)).sqrt() * (ecc / 2.0).tan();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-11);
            assert_relative_eq!(true_to_eccentric(nu, e), ecc, epsilon = 1e-13);
        }
    }

    #[test]
    fn a_over_r_cases() {
        assert_eq!(a_over_r(1.234, 0.0), 1.0);
        assert_relative_eq!(a_over_r(0.0, 0.1), 1.1 / 0.99, epsilon = 1e-15);
        assert_relative_eq!(a_over_r(PI, 0.1), 0.9 / 0.99, epsilon = 1e-15);
        // r = a(1 - e cos E) at the apocenter E = π
        assert_relative_eq!(1.0 / a_over_r(PI, 0.1), 1.0 + 0.1, epsilon = 1e-15);
    }

    #[test]
    fn dnu_dl_matches_delaunay_rate() {
        let (big_l, big_g) = (1.0, 0.8);
        let e = eccentricity_from_momenta(big_l, big_g);
        for k in 0..20 {
            let l = 0.3 * k as f64;
            let h = 1e-4;
            let f = |x: f64| mean_to_true(x, e).unwrap();
            let d1 = (f(l + h) - f(l - h)) / (2.0 * h);
            let d2 = (f(l + 2.0 * h) - f(l - 2.0 * h)) / (4.0 * h);
            let fd = (4.0 * d1 - d2) / 3.0;
            let nu = f(l);
            let rho = a_over_r(nu, e);
            assert_relative_eq!(fd, big_g / big_l * rho * rho, max_relative = 1e-8);
        }
    }

    #[test]
    fn delaunay_examples() {
        let el = KeplerianElements::new(7000.0, 0.01, 0.5, 1.0, 2.0, 3.0).unwrap();
        let d = kep_to_delaunay(&el, &model()).unwrap();
        let big_l = (EARTH_MU * 7000.0f64).sqrt();
        assert_relative_eq!(d.big_l, big_l, max_relative = 1e-15);
        assert_relative_eq!(d.big_g, big_l * 0.9999f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(d.big_h, d.big_g * 0.5f64.cos(), max_relative = 1e-15);
        assert_eq!((d.l, d.g, d.h), (3.0, 2.0, 1.0));

        // circular and equatorial orbits are rejected rather than fudged
        let circ = KeplerianElements::new(7000.0, 0.0, 0.5, 1.0, 2.0, 3.0).unwrap();
        assert!(matches!(kep_to_delaunay(&circ, &model()), Err(Error::Domain(_))));
        let eq = KeplerianElements::new(7000.0, 0.1, 0.0, 1.0, 2.0, 3.0).unwrap();
        assert!(kep_to_delaunay(&eq, &model()).is_err());
        let d = DelaunayState::new(5.0, 5.0, 4.0, 0.0, 0.0, 0.0).unwrap();
        assert!(delaunay_to_kep(&d, &model()).is_err());
    }

    #[test]
    fn element_validation() {
        assert!(KeplerianElements::new(-1.0, 0.1, 0.1, 0.0, 0.0, 0.0).is_err());
        assert!(KeplerianElements::new(7000.0, 1.0, 0.1, 0.0, 0.0, 0.0).is_err());
        assert!(KeplerianElements::new(7000.0, 0.1, 4.0, 0.0, 0.0, 0.0).is_err());
        let el = KeplerianElements::new(7000.0, 0.1, 0.1, -1.0, 7.0, 100.0).unwrap();
        assert!(el.raan >= 0.0 && el.raan < TAU);
        assert!(el.argp >= 0.0 && el.argp < TAU);
        assert!(DelaunayState::new(1.0, 1.5, 0.1, 0.0, 0.0, 0.0).is_err());
        assert!(DelaunayState::new(1.0, 0.5, 0.6, 0.0, 0.0, 0.0).is_err());
        assert!(PhysicalModel::new(-1.0, 1.0, vec![]).is_err());
        assert!(PhysicalModel::new(1.0, 1.0, vec![1.5]).is_err());
    }

    #[test]
    fn circular_position_radius() {
        let el = KeplerianElements::new(7000.0, 0.0, 0.3, 0.2, 0.0, 0.0).unwrap();
        let c = kep_to_cartesian(&el, &model()).unwrap();
        assert_relative_eq!(c.r.norm(), 7000.0, max_relative = 1e-15);
    }

    #[test]
    fn cartesian_round_trip_example() {
        let el = KeplerianElements::new(7000.0, 0.05, 0.3, 1.0, 2.0, 0.7).unwrap();
        let c = kep_to_cartesian(&el, &model()).unwrap();
        let back = cartesian_to_kep(&c, &model()).unwrap();
        let c2 = kep_to_cartesian(&back, &model()).unwrap();
        for (x, y) in c.to_array().iter().zip(c2.to_array()) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
        for (x, y) in el.to_array().iter().zip(back.to_array()) {
            assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn cartesian_rejects_rectilinear() {
        let c = CartesianState::new(Vector3::new(7000.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0));
        assert!(matches!(cartesian_to_kep(&c, &model()), Err(Error::Domain(_))));
    }

    fn admissible() -> impl Strategy<Value = KeplerianElements> {
        (
            6600.0..42000.0f64,
            1e-4..0.9f64,
            0.01..3.13f64,
            0.0..TAU,
            0.0..TAU,
            0.0..TAU,
        )
            .prop_map(|(a, e, i, o, w, m)| KeplerianElements::new(a, e, i, o, w, m).unwrap())
    }

    fn angle_diff(x: f64, y: f64) -> f64 {
        let d = (x - y).rem_euclid(TAU);
        d.min(TAU - d)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn delaunay_round_trip(el in admissible()) {
            let d = kep_to_delaunay(&el, &model()).unwrap();
            let back = delaunay_to_kep(&d, &model()).unwrap();
            prop_assert!((back.a - el.a).abs() <= 1e-12 * el.a);
            // e comes back through sqrt(1 - G²/L²), conditioned like eps / e
            prop_assert!((back.e - el.e).abs() <= 1e-12 * el.e + 4.0 * f64::EPSILON / el.e);
            prop_assert!((back.i - el.i).abs() <= 1e-12);
            prop_assert!(angle_diff(back.raan, el.raan) <= 1e-12);
            prop_assert!(angle_diff(back.argp, el.argp) <= 1e-12);
            prop_assert!(angle_diff(back.mean_anom, el.mean_anom) <= 1e-12);
        }

        #[test]
        fn cartesian_round_trip(el in admissible()) {
            let m = model();
            let c = kep_to_cartesian(&el, &m).unwrap();
            // vis-viva
            let rn = c.r.norm();
            let lhs = c.v.norm_squared();
            let rhs = m.mu * (2.0 / rn - 1.0 / el.a);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
            let back = cartesian_to_kep(&c, &m).unwrap();
            let c2 = kep_to_cartesian(&back, &m).unwrap();
            let scale_r = rn;
            let scale_v = c.v.norm();
            prop_assert!((c.r - c2.r).norm() <= 1e-10 * scale_r);
            prop_assert!((c.v - c2.v).norm() <= 1e-10 * scale_v);
        }
    }
}
