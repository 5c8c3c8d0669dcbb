//! Mean-element propagation, the full analytic pipeline, the Cartesian
//! reference integrator and ephemeris comparison.

use nalgebra::Vector3;
use serde::Serialize;

use crate::elements::{
    cartesian_to_kep, delaunay_to_kep, kep_to_cartesian, kep_to_delaunay, normalize_angle,
    CartesianState, DelaunayState, KeplerianElements, Momenta, PhysicalModel, DELAUNAY_SINGULAR,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::hamiltonian::{acceleration, energy};
use crate::integrator::Rkf78;
use crate::transform::{unwrap_near, CanonicalMap, Order};
use crate::vonzeipel::MeanHamiltonian;

/// Angle rates of the mean variables; the mean momenta are constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanRates {
    pub l_dot: f64,
    pub g_dot: f64,
    pub h_dot: f64,
}

/// Rates `-∂K/∂P` of the mean Hamiltonian. The minus sign converts the
/// series Hamiltonian (minus the physical energy) into the physical flow, so
/// that `J2 = 0` gives the Kepler mean motion `mu²/L³`.
pub fn mean_rates(m: &Momenta, model: &PhysicalModel, order: Order) -> MeanRates {
    let grad = MeanHamiltonian::new(model).gradient(m, model.j2(), order.is_second());
    MeanRates {
        l_dot: -grad[0],
        g_dot: -grad[1],
        h_dot: -grad[2],
    }
}

pub fn advance_mean(mean0: &DelaunayState, rates: &MeanRates, t: f64) -> DelaunayState {
    DelaunayState {
        l: normalize_angle(mean0.l + rates.l_dot * t),
        g: normalize_angle(mean0.g + rates.g_dot * t),
        h: normalize_angle(mean0.h + rates.h_dot * t),
        ..*mean0
    }
}

pub fn propagate_mean(mean0: &DelaunayState, t: f64, model: &PhysicalModel, order: Order) -> DelaunayState {
    advance_mean(mean0, &mean_rates(&mean0.momenta(), model, order), t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub kep: KeplerianElements,
    pub cart: CartesianState,
    /// `None` when the orbit is circular or equatorial to within the Delaunay
    /// singularity threshold.
    pub delaunay: Option<DelaunayState>,
}

/// Time-ordered samples of one trajectory in all three representations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ephemeris {
    samples: Vec<Sample>,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::Usage("empty time grid".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times[0] < 0.0 {
        return Err(Error::Usage("times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage("times must be strictly increasing".into()));
    }
    Ok(())
}

fn singular(kep: &KeplerianElements) -> bool {
    kep.e < DELAUNAY_SINGULAR || kep.i.sin() < DELAUNAY_SINGULAR
}

impl Ephemeris {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
        check_times(&times)?;
        Ok(Ephemeris { samples })
    }

    pub fn from_cartesian(times: &[f64], states: &[CartesianState], model: &PhysicalModel) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::Usage("time and state counts differ".into()));
        }
        let samples = times
            .iter()
            .zip(states)
            .map(|(&t, cart)| {
                let kep = cartesian_to_kep(cart, model)?;
                let delaunay = if singular(&kep) {
                    None
                } else {
                    Some(kep_to_delaunay(&kep, model)?)
                };
                Ok(Sample {
                    t,
                    kep,
                    cart: *cart,
                    delaunay,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Largest disagreement between the stored representations: position
    /// relative to `|r|`, and Delaunay vs elements relative to `L` / absolute
    /// in angles.
    pub fn consistency(&self, model: &PhysicalModel) -> Result<f64> {
        let mut worst = 0.0f64;
        for s in &self.samples {
            let c = kep_to_cartesian(&s.kep, model)?;
            worst = worst.max((c.r - s.cart.r).norm() / s.cart.r.norm());
            worst = worst.max((c.v - s.cart.v).norm() / s.cart.v.norm());
            if let Some(d) = s.delaunay {
                let k = delaunay_to_kep(&d, model)?;
                worst = worst.max((k.a - s.kep.a).abs() / s.kep.a);
                worst = worst.max((k.e - s.kep.e).abs());
                worst = worst.max((k.i - s.kep.i).abs());
                for (x, y) in [(k.raan, s.kep.raan), (k.argp, s.kep.argp), (k.mean_anom, s.kep.mean_anom)] {
                    worst = worst.max((unwrap_near(x, y) - y).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Osculating elements → mean elements → linear mean flow → osculating
/// state at each time. Only `J2` of the model enters the theory.
pub fn propagate_analytic(
    osc0: &KeplerianElements,
    times: &[f64],
    model: &PhysicalModel,
    order: Order,
    exec: Exec,
) -> Result<Ephemeris> {
    check_times(times)?;
    model.validate()?;
    let map = CanonicalMap::new(model, order)?;
    let map = CanonicalMap {
        series: map.series.with_exec(exec),
        ..map
    };
    let osc = kep_to_delaunay(osc0, model)?;
    let mean0 = map.osculating_to_mean(&osc)?;
    let rates = mean_rates(&mean0.momenta(), model, order);
    let ctx = map.prepare(&mean0.momenta())?;
    let samples = exec.try_map(times.len(), |k| {
        let t = times[k];
        let mean = advance_mean(&mean0, &rates, t);
        let d = map.mean_to_osculating_with(&mean, &ctx)?.state;
        let kep = delaunay_to_kep(&d, model)?;
        let cart = kep_to_cartesian(&kep, model)?;
        Ok(Sample {
            t,
            kep,
            cart,
            delaunay: Some(d),
        })
    })?;
    Ephemeris::new(samples)
}

/// Reference trajectory together with its conservation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub ephemeris: Ephemeris,
    /// `max |E(t) - E(0)| / |E(0)|` over accepted steps.
    pub energy_drift: f64,
    /// `max |Hz(t) - Hz(0)| / |h|` with `h = r × v` at the start.
    pub hz_drift: f64,
    pub steps: usize,
}

/// Integrates `r'' = -mu r/|r|³ - ∇U` from `cart0` at `t = 0`.
pub fn propagate_oracle(
    cart0: &CartesianState,
    times: &[f64],
    model: &PhysicalModel,
    nmax: usize,
) -> Result<OracleRun> {
    check_times(times)?;
    model.validate()?;
    let rk = Rkf78::default();
    let rhs = |_t: f64, y: &[f64; 6]| -> Result<[f64; 6]> {
        let r = Vector3::new(y[0], y[1], y[2]);
        let a = acceleration(&r, model, nmax)?;
        Ok([y[3], y[4], y[5], a.x, a.y, a.z])
    };
    let e0 = energy(&cart0.r, &cart0.v, model, nmax)?;
    let h0 = cart0.r.cross(&cart0.v);
    let hz0 = h0.z;
    let (mut de, mut dhz) = (0.0f64, 0.0f64);
    let mut bad_energy = None;
    let observer = |_t: f64, y: &[f64; 6]| {
        let c = CartesianState::from_array(y);
        match energy(&c.r, &c.v, model, nmax) {
            Ok(e) => de = de.max(((e - e0) / e0).abs()),
            Err(err) => bad_energy = Some(err),
        }
        dhz = dhz.max((c.r.cross(&c.v).z - hz0).abs() / h0.norm());
    };
    let (states, stats) = rk.integrate(rhs, 0.0, cart0.to_array(), times, observer)?;
    if let Some(err) = bad_energy {
        return Err(err);
    }
    let carts: Vec<CartesianState> = states.iter().map(CartesianState::from_array).collect();
    Ok(OracleRun {
        ephemeris: Ephemeris::from_cartesian(times, &carts, model)?,
        energy_drift: de,
        hz_drift: dhz,
        steps: stats.accepted,
    })
}

/// Two-body propagation of osculating elements, for reference.
pub fn propagate_kepler(el: &KeplerianElements, times: &[f64], model: &PhysicalModel) -> Result<Ephemeris> {
    check_times(times)?;
    let n = (model.mu / el.a.powi(3)).sqrt();
    let carts = times
        .iter()
        .map(|&t| {
            let mut k = *el;
            k.mean_anom = normalize_angle(el.mean_anom + n * t);
            kep_to_cartesian(&k, model)
        })
        .collect::<Result<Vec<_>>>()?;
    Ephemeris::from_cartesian(times, &carts, model)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub max_position_error: f64,
    pub rms_position_error: f64,
    /// Per sample `|Δa|, |Δe|, |Δi|, |ΔΩ|, |Δω|, |ΔM|` with angles wrapped.
    pub element_errors: Vec<[f64; 6]>,
    pub max_element_errors: [f64; 6],
    /// Peak-to-peak range of `(L, G, H)` in each ephemeris.
    pub momenta_range: [[f64; 3]; 2],
}

pub fn compare(a: &Ephemeris, b: &Ephemeris) -> Result<Metrics> {
    if a.len() != b.len() || a.samples.iter().zip(&b.samples).any(|(x, y)| x.t != y.t) {
        return Err(Error::Usage("ephemerides are on different time grids".into()));
    }
    let mut max_pos = 0.0f64;
    let mut sum_sq = 0.0;
    let mut element_errors = Vec::with_capacity(a.len());
    let mut max_el = [0.0f64; 6];
    for (x, y) in a.samples.iter().zip(&b.samples) {
        let d = (x.cart.r - y.cart.r).norm();
        max_pos = max_pos.max(d);
        sum_sq += d * d;
        let (p, q) = (x.kep.to_array(), y.kep.to_array());
        let err: [f64; 6] = std::array::from_fn(|k| {
            if k < 3 {
                (p[k] - q[k]).abs()
            } else {
                (unwrap_near(p[k], q[k]) - q[k]).abs()
            }
        });
        for k in 0..6 {
            max_el[k] = max_el[k].max(err[k]);
        }
        element_errors.push(err);
    }
    Ok(Metrics {
        max_position_error: max_pos,
        rms_position_error: if a.is_empty() { 0.0 } else { (sum_sq / a.len() as f64).sqrt() },
        element_errors,
        max_element_errors: max_el,
        momenta_range: [momenta_range(a), momenta_range(b)],
    })
}

fn momenta_range(e: &Ephemeris) -> [f64; 3] {
    range3(e.samples.iter().filter_map(|s| s.delaunay.map(|d| d.momenta())))
}

fn range3(it: impl Iterator<Item = Momenta>) -> [f64; 3] {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for m in it {
        for (k, v) in m.to_array().into_iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    std::array::from_fn(|k| if hi[k] >= lo[k] { hi[k] - lo[k] } else { 0.0 })
}

/// Settings for the `J2`-halving experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalvingConfig {
    pub orbits: f64,
    pub samples_per_orbit: usize,
    /// Number of `J2` levels, each half the previous one.
    pub levels: usize,
    pub order: Order,
    /// Order of the map used to extract mean momenta from the oracle.
    pub flatness_order: Order,
    pub exec: Exec,
}

impl Default for HalvingConfig {
    fn default() -> Self {
        HalvingConfig {
            orbits: 10.0,
            samples_per_orbit: 20,
            levels: 3,
            order: Order::Second,
            flatness_order: Order::First,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalvingRow {
    pub j2: f64,
    pub max_position_error: f64,
    /// Peak-to-peak range of the mean momenta recovered from the oracle.
    pub mean_momenta_range: [f64; 3],
    pub oracle_energy_drift: f64,
}

/// Uniform grid over `orbits` Kepler periods of `el`.
pub fn orbit_grid(el: &KeplerianElements, model: &PhysicalModel, orbits: f64, samples_per_orbit: usize) -> Vec<f64> {
    let period = std::f64::consts::TAU * (el.a.powi(3) / model.mu).sqrt();
    let n = (orbits * samples_per_orbit as f64).round() as usize;
    (1..=n).map(|k| k as f64 * orbits * period / n as f64).collect()
}

/// Runs analytic-vs-oracle comparisons at `J2, J2/2, J2/4, …`.
pub fn halving_experiment(
    el0: &KeplerianElements,
    model: &PhysicalModel,
    cfg: &HalvingConfig,
) -> Result<Vec<HalvingRow>> {
    let times = orbit_grid(el0, model, cfg.orbits, cfg.samples_per_orbit);
    let cart0 = kep_to_cartesian(el0, model)?;
    cfg.exec.try_map(cfg.levels, |k| {
        let j2 = model.j2() / f64::from(1u32 << k);
        let m = model.with_j2(j2);
        let analytic = propagate_analytic(el0, &times, &m, cfg.order, Exec::Sequential)?;
        let oracle = propagate_oracle(&cart0, &times, &m, 2)?;
        let metrics = compare(&analytic, &oracle.ephemeris)?;
        let map = CanonicalMap::new(&m, cfg.flatness_order)?;
        let means = oracle
            .ephemeris
            .samples()
            .iter()
            .map(|s| {
                let d = s.delaunay.ok_or_else(|| Error::domain("oracle state is Delaunay-singular"))?;
                Ok(map.osculating_to_mean(&d)?.momenta())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HalvingRow {
            j2,
            max_position_error: metrics.max_position_error,
            mean_momenta_range: range3(means.into_iter()),
            oracle_energy_drift: oracle.energy_drift,
        })
    })
}

/// Successive ratios `x[k] / x[k+1]`.
pub fn successive_ratios(values: &[f64]) -> Vec<f64> {
    values.windows(2).map(|w| w[0] / w[1]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::EARTH_J2;
    use std::f64::consts::TAU;

    fn leo() -> KeplerianElements {
        KeplerianElements::new(7000.0, 0.01, 0.5, 0.3, 1.2, 2.1).unwrap()
    }

    #[test]
    fn kepler_limit_rates() {
        let model = PhysicalModel::earth().with_j2(0.0);
        let m = kep_to_delaunay(&leo(), &model).unwrap().momenta();
        let r = mean_rates(&m, &model, Order::Second);
        assert_eq!(r.l_dot, model.mu * model.mu / m.big_l.powi(3));
        assert_eq!((r.g_dot, r.h_dot), (0.0, 0.0));
        let n = (model.mu / 7000f64.powi(3)).sqrt();
        assert!((r.l_dot - n).abs() < 1e-15 * n * 10.0);
    }

    #[test]
    fn node_rate_parity_and_sign() {
        let model = PhysicalModel::earth();
        let el = |i: f64| kep_to_delaunay(&KeplerianElements::new(7000.0, 0.01, i, 0.0, 0.0, 0.0).unwrap(), &model).unwrap();
        for order in [Order::First, Order::Second] {
            let a = mean_rates(&el(0.5).momenta(), &model, order);
            let b = mean_rates(&el(std::f64::consts::PI - 0.5).momenta(), &model, order);
            assert!((a.h_dot + b.h_dot).abs() < 1e-12 * a.h_dot.abs());
            // prograde orbits regress
            assert!(a.h_dot < 0.0);
        }
        // classical first-order node rate -3/2 n J2 (R/p)² cos i
        let m = el(0.5).momenta();
        let n = (model.mu / 7000f64.powi(3)).sqrt();
        let p = 7000.0 * (1.0 - 1e-4);
        let expect = -1.5 * n * EARTH_J2 * (model.radius / p).powi(2) * 0.5f64.cos();
        let got = mean_rates(&m, &model, Order::First).h_dot;
        assert!((got - expect).abs() < 1e-12 * expect.abs(), "{got} vs {expect}");
    }

    #[test]
    fn rates_match_finite_differences_of_k() {
        let model = PhysicalModel::earth();
        let mh = MeanHamiltonian::new(&model);
        let m = kep_to_delaunay(&KeplerianElements::new(7500.0, 0.1, 1.0, 0.0, 0.0, 0.0).unwrap(), &model)
            .unwrap()
            .momenta();
        let r = mean_rates(&m, &model, Order::Second);
        let p = m.to_array();
        let rates = [r.l_dot, r.g_dot, r.h_dot];
        for k in 0..3 {
            let h = 1e-4 * (m.big_l - m.big_g);
            let fd = crate::quadrature::richardson_derivative(
                |x| {
                    let mut q = p;
                    q[k] = x;
                    let m = Momenta::from_array(q);
                    let j2 = model.j2();
                    j2 * mh.k1(&m) + j2 * j2 * mh.k2(&m)
                },
                p[k],
                h,
            );
            let kepler = if k == 0 { -mh.grad_k0(&m)[0] } else { 0.0 };
            let perturbed = rates[k] - kepler;
            assert!((-fd - perturbed).abs() <= 1e-9 * perturbed.abs(), "{k}: {} vs {perturbed}", -fd);
        }
    }

    #[test]
    fn mean_flow_properties() {
        let model = PhysicalModel::earth();
        let st = kep_to_delaunay(&leo(), &model).unwrap();
        assert_eq!(propagate_mean(&st, 0.0, &model, Order::Second), st);
        let (t1, t2) = (1234.5, 987.25);
        let a = propagate_mean(&st, t1 + t2, &model, Order::Second);
        let b = propagate_mean(&propagate_mean(&st, t1, &model, Order::Second), t2, &model, Order::Second);
        for (x, y) in a.to_array().iter().zip(b.to_array()) {
            assert!((unwrap_near(*x, y) - y).abs() < 1e-12 * y.abs().max(1.0));
        }
        let kep = model.with_j2(0.0);
        let n = mean_rates(&st.momenta(), &kep, Order::First).l_dot;
        let back = propagate_mean(&st, TAU / n, &kep, Order::First);
        assert!((unwrap_near(back.l, st.l) - st.l).abs() < 1e-12);
    }

    #[test]
    fn analytic_reduces_to_kepler() {
        let model = PhysicalModel::earth().with_j2(0.0);
        let times: Vec<f64> = (1..=20).map(|k| 300.0 * k as f64).collect();
        let a = propagate_analytic(&leo(), &times, &model, Order::Second, Exec::default()).unwrap();
        let k = propagate_kepler(&leo(), &times, &model).unwrap();
        let m = compare(&a, &k).unwrap();
        assert!(m.max_position_error < 1e-10 * 7000.0, "{}", m.max_position_error);
        assert!(a.consistency(&model).unwrap() < 1e-9);
    }

    #[test]
    fn oracle_closes_a_kepler_orbit() {
        let model = PhysicalModel::earth().with_j2(0.0);
        let el = leo();
        let period = TAU * (el.a.powi(3) / model.mu).sqrt();
        let cart0 = kep_to_cartesian(&el, &model).unwrap();
        let run = propagate_oracle(&cart0, &[period], &model, 2).unwrap();
        let end = run.ephemeris.samples()[0].cart;
        assert!((end.r - cart0.r).norm() / cart0.r.norm() < 1e-9);
        assert!((end.v - cart0.v).norm() / cart0.v.norm() < 1e-9);
    }

    #[test]
    fn compare_properties() {
        let model = PhysicalModel::earth().with_j2(0.0);
        let times: Vec<f64> = (1..=10).map(|k| 100.0 * k as f64).collect();
        let a = propagate_kepler(&leo(), &times, &model).unwrap();
        let zero = compare(&a, &a).unwrap();
        assert_eq!(zero.max_position_error, 0.0);
        assert_eq!(zero.max_element_errors, [0.0; 6]);
        let mut shifted = leo();
        shifted.mean_anom += 0.01;
        let b = propagate_kepler(&shifted, &times, &model).unwrap();
        let ab = compare(&a, &b).unwrap();
        let ba = compare(&b, &a).unwrap();
        assert!(ab.max_position_error > 1.0);
        assert_eq!(ab.max_position_error, ba.max_position_error);
        let c = propagate_kepler(&leo(), &times[..5], &model).unwrap();
        assert!(matches!(compare(&a, &c), Err(Error::Usage(_))));
    }

    #[test]
    fn bad_time_grids() {
        let model = PhysicalModel::earth();
        assert!(propagate_kepler(&leo(), &[], &model).is_err());
        assert!(propagate_kepler(&leo(), &[2.0, 1.0], &model).is_err());
    }
}
