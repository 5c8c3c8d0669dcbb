//! Named property checks with residuals and tolerances, as run by the
//! `verify` command.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::elements::{kep_to_delaunay, kepler_solve, DelaunayState, KeplerianElements, Momenta, PhysicalModel};
use crate::error::Result;
use crate::exec::Exec;
use crate::quadrature::{richardson_derivative, GaussLegendre};
use crate::symplectic::{block_identities, generator::random_symplectic, is_symplectic, symplectic_inverse};
use crate::transform::{unwrap_near, CanonicalMap, Direction, Order};
use crate::vonzeipel::{solve_homological_generic, GeneratingSeries, TorusAverage};

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub model: PhysicalModel,
    /// Replaces every default tolerance when set.
    pub tolerance: Option<f64>,
    pub exec: Exec,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 1,
            model: PhysicalModel::earth(),
            tolerance: None,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub results: Vec<PropertyResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.results.iter().filter(|r| !r.passed).map(|r| r.name).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.results {
            let _ = writeln!(
                s,
                "{:<6} {:<24} residual={:.3e} tol={:.1e}",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                r.residual,
                r.tolerance
            );
        }
        s
    }
}

type Check = fn(&VerifyConfig, &mut ChaCha8Rng) -> Result<f64>;

/// `(name, default tolerance, check)`.
pub const PROPERTIES: &[(&str, f64, Check)] = &[
    ("kepler_residual", 1e-13, kepler_residual),
    ("operator_algebra", 1e-12, operator_algebra),
    ("h1_partials", 1e-7, h1_partials),
    ("k1_average", 1e-10, k1_average),
    ("s1_pde", 1e-9, s1_pde),
    ("hbar_routes", 1e-8, hbar_routes),
    ("k2_average", 1e-8, k2_average),
    ("s2_pde", 1e-7, s2_pde),
    ("generic_homological", 1e-8, generic_homological),
    ("map_identity_j2_zero", 0.0, map_identity),
    ("map_round_trip", 1e-9, map_round_trip),
    ("map_symplectic", 1e-6, map_symplectic),
    ("symplectic_identities", 1e-8, symplectic_identities),
];

/// Runs every property; errors inside a check count as failures with an
/// infinite residual.
pub fn run_suite(cfg: &VerifyConfig) -> Report {
    let results = PROPERTIES
        .iter()
        .enumerate()
        .map(|(k, &(name, tol, check))| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(k as u64));
            let residual = check(cfg, &mut rng).unwrap_or(f64::INFINITY);
            let tolerance = cfg.tolerance.unwrap_or(tol);
            PropertyResult {
                name,
                residual,
                tolerance,
                passed: residual <= tolerance,
            }
        })
        .collect();
    Report { results }
}

fn random_elements(rng: &mut ChaCha8Rng) -> KeplerianElements {
    KeplerianElements::new(
        rng.random_range(6800.0..9000.0),
        rng.random_range(0.02..0.2),
        rng.random_range(0.2..2.9),
        rng.random_range(0.0..TAU),
        rng.random_range(0.0..TAU),
        rng.random_range(0.0..TAU),
    )
    .expect("admissible by construction")
}

fn random_state(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<DelaunayState> {
    kep_to_delaunay(&random_elements(rng), &cfg.model)
}

fn series(cfg: &VerifyConfig) -> GeneratingSeries {
    GeneratingSeries::new(&cfg.model).with_exec(cfg.exec)
}

fn kepler_residual(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (m, e) = (rng.random_range(0.0..TAU), rng.random_range(0.0..0.9));
        let big_e = kepler_solve(m, e)?;
        worst = worst.max((big_e - e * big_e.sin() - m).abs());
    }
    Ok(worst)
}

fn operator_algebra(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    let avg = TorusAverage::new(16).with_exec(cfg.exec);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let terms: Vec<(f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.random_range(-3i32..=3) as f64,
                    rng.random_range(-3i32..=3) as f64,
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let c0 = rng.random_range(-1.0..1.0);
        let f = |q: &[f64]| {
            c0 + terms
                .iter()
                .map(|(a, b, x, y)| {
                    let ph = a * q[0] + b * q[1];
                    x * ph.cos() + y * ph.sin()
                })
                .sum::<f64>()
        };
        worst = worst.max(operator_algebra_residual(&avg, 2, &f));
    }
    Ok(worst)
}

/// Largest violation of `sec∘sec = sec`, `per∘per = per`, `sec∘per = 0` and
/// `per∘sec = 0` for `f`, checked at a few points.
pub fn operator_algebra_residual<F>(avg: &TorusAverage, dim: usize, f: &F) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let sec_f = avg.secular(dim, f);
    let per = |q: &[f64]| f(q) - sec_f;
    let sec_const = |_: &[f64]| sec_f;
    let mut worst = (avg.secular(dim, sec_const) - sec_f).abs();
    worst = worst.max(avg.secular(dim, per).abs());
    let points: [[f64; 3]; 3] = [[0.1, 0.7, 1.3], [2.9, 4.1, 0.2], [5.5, 1.9, 3.3]];
    for q in &points {
        let q = &q[..dim];
        worst = worst.max((avg.periodic(dim, per, q) - per(q)).abs());
        worst = worst.max(avg.periodic(dim, sec_const, q).abs());
    }
    worst
}

fn h1_partials(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = series(cfg);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let st = random_state(cfg, rng)?;
        let an = s.ham.h1_partials(&st)?;
        let exact = [an.d_big_l, an.d_big_g, an.d_big_h, an.d_l, an.d_g];
        let base = st.to_array();
        let steps = [
            1e-3 * (st.big_l - st.big_g),
            1e-3 * (st.big_l - st.big_g),
            1e-3 * (st.big_g - st.big_h.abs()),
            1e-3,
            1e-3,
        ];
        for k in 0..5 {
            let fd = richardson_derivative(
                |x| {
                    let mut v = base;
                    v[k] = x;
                    s.ham.h1(&DelaunayState::from_array(v)).unwrap_or(f64::NAN)
                },
                base[k],
                steps[k],
            );
            let scale = if k < 3 { an.value.abs() / (st.big_l - st.big_g) } else { an.value.abs() };
            worst = worst.max((fd - exact[k]).abs() / scale);
        }
    }
    Ok(worst)
}

fn k1_average(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = series(cfg);
    let avg = TorusAverage::new(128).with_exec(cfg.exec);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let m = random_state(cfg, rng)?.momenta();
        let q = avg.anomaly_torus_average(m.big_l, m.big_g, |pt, _, g| s.ham.h1_at(&m, g, pt));
        let k1 = s.mean_hamiltonian().k1(&m);
        worst = worst.max((q - k1).abs() / k1.abs().max(1e-300));
    }
    Ok(worst)
}

fn s1_pde(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = series(cfg);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let m = random_state(cfg, rng)?.momenta();
        worst = worst.max(s1_pde_residual(&s, &m, 8)?);
    }
    Ok(worst)
}

/// `max |H0'(L) S1_l + per(H1)| / max(1, |per H1|)` over an `n×n` grid.
pub fn s1_pde_residual(s: &GeneratingSeries, m: &Momenta, n: usize) -> Result<f64> {
    let w1 = s.ham.dh0(m.big_l);
    let k1 = s.mean_hamiltonian().k1(m);
    let rows = s.exec.try_map(n * n, |idx| {
        let l = TAU * (idx % n) as f64 / n as f64;
        let g = TAU * (idx / n) as f64 / n as f64;
        let p = s.s1_partials(m, l, g)?;
        let per = s.ham.h1(&m.with_angles(l, g, 0.0))? - k1;
        Ok((w1 * p.d_l + per).abs() / per.abs().max(1.0))
    })?;
    Ok(rows.into_iter().fold(0.0, f64::max))
}

fn hbar_routes(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = series(cfg);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let m = random_state(cfg, rng)?.momenta();
        let (l, g) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
        let a = s.hbar(&m, l, g)?;
        let b = s.hbar_closed_form(&m, l, g)?;
        worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1e-300));
    }
    Ok(worst)
}

fn k2_average(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = series(cfg);
    let avg = TorusAverage::new(128).with_exec(cfg.exec);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let m = random_state(cfg, rng)?.momenta();
        let q = avg.anomaly_torus_average(m.big_l, m.big_g, |pt, l, g| s.hbar_at(&m, l, g, pt).unwrap_or(f64::NAN));
        let k2 = s.mean_hamiltonian().k2(&m);
        worst = worst.max((q - k2).abs() / k2.abs());
    }
    Ok(worst)
}

fn s2_pde(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = series(cfg);
    let avg = TorusAverage::new(128).with_exec(cfg.exec);
    let mut worst = 0.0f64;
    for _ in 0..2 {
        let m = random_state(cfg, rng)?.momenta();
        let table = s.s2_table(&m)?;
        let w1 = s.ham.dh0(m.big_l);
        for _ in 0..4 {
            let (l, g) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
            let l_mean = avg.anomaly_average(m.big_l, m.big_g, |pt, ll| s.hbar_at(&m, ll, g, pt).unwrap_or(f64::NAN));
            let per = s.hbar(&m, l, g)? - l_mean;
            let (_, dl, _) = table.eval(l, g);
            worst = worst.max((w1 * dl + per).abs() / per.abs().max(1.0));
        }
    }
    Ok(worst)
}

fn generic_homological(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    let s = series(cfg);
    let rule = GaussLegendre::new(96);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let st = random_state(cfg, rng)?;
        worst = worst.max(generic_vs_closed_form(&s, &st, &rule)?);
    }
    Ok(worst)
}

/// `|∂Σ/∂l - ∂S1/∂l|` relative to `max(1, |∂S1/∂l|)`, where `Σ` solves the
/// homological equation for `per(H1)` with the generic line integral.
pub fn generic_vs_closed_form(s: &GeneratingSeries, st: &DelaunayState, rule: &GaussLegendre) -> Result<f64> {
    let m = st.momenta();
    let w = [s.ham.dh0(m.big_l), 0.0, 0.0];
    let k1 = s.mean_hamiltonian().k1(&m);
    let f = |q: &[f64]| s.ham.h1(&m.with_angles(q[0], q[1], q[2])).map_or(f64::NAN, |v| v - k1);
    let sigma = |l: f64| solve_homological_generic(&w, f, &[l, st.g, st.h], rule).unwrap_or(f64::NAN);
    let d_sigma = richardson_derivative(sigma, st.l, 1e-3);
    let exact = s.s1_partials(&m, st.l, st.g)?.d_l;
    Ok((d_sigma - exact).abs() / exact.abs().max(1.0))
}

fn map_identity(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    let map = CanonicalMap::with_j2(&cfg.model, 0.0, Order::Second)?;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let st = random_state(cfg, rng)?;
        let a = map.mean_to_osculating(&st)?;
        let b = map.osculating_to_mean(&st)?;
        for (x, y) in a.to_array().iter().chain(&b.to_array()).zip(st.to_array().iter().cycle()) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

fn state_distance(a: &DelaunayState, b: &DelaunayState) -> f64 {
    let (x, y) = (a.to_array(), b.to_array());
    (0..6)
        .map(|k| {
            if k < 3 {
                (x[k] - y[k]).abs() / y[0]
            } else {
                (unwrap_near(x[k], y[k]) - y[k]).abs()
            }
        })
        .fold(0.0, f64::max)
}

fn map_round_trip(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    let map = CanonicalMap::new(&cfg.model, Order::Second)?.with_series(series(cfg));
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let mean = random_state(cfg, rng)?;
        let back = map.osculating_to_mean(&map.mean_to_osculating(&mean)?)?;
        worst = worst.max(state_distance(&back, &mean));
    }
    Ok(worst)
}

fn map_symplectic(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    let map = CanonicalMap::new(&cfg.model, Order::Second)?.with_series(series(cfg));
    let mut worst = 0.0f64;
    for _ in 0..2 {
        let mean = random_state(cfg, rng)?;
        let jac = map.map_jacobian(&mean, Direction::MeanToOsculating)?;
        worst = worst.max(is_symplectic(&jac, 0.0).residual);
    }
    Ok(worst)
}

fn symplectic_identities(_: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let m = random_symplectic(3, rng)?;
        worst = worst.max(block_identities(&m).max());
        let inv = symplectic_inverse(&m)?;
        let prod = m.matrix() * inv.matrix();
        worst = worst.max((prod - nalgebra::DMatrix::<f64>::identity(6, 6)).amax());
    }
    Ok(worst)
}
