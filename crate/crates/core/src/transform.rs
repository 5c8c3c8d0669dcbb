//! The mean ↔ osculating canonical map generated by
//! `S(P, q) = P·q + J2 S1(P, q) + J2² S2(P, q)` through `p = ∂S/∂q`,
//! `Q = ∂S/∂P`.
//!
//! State vectors are ordered `(L, G, H, l, g, h)`. Angles are carried
//! unwrapped through the Newton iterations and normalized on output.

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::elements::{DelaunayState, Momenta, PhysicalModel};
use crate::error::{Error, Result};
use crate::hamiltonian::AnomalyPoint;
use crate::symplectic::{fd_jacobian, BlockMatrix2N};
use crate::vonzeipel::{GeneratingSeries, S2Slice};

/// Largest `|J2|` accepted by the map.
pub const J2_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Order {
    First,
    Second,
}

impl Order {
    pub fn from_int(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(Error::Usage(format!("theory order must be 1 or 2, got {n}"))),
        }
    }

    pub fn as_int(self) -> u8 {
        match self {
            Order::First => 1,
            Order::Second => 2,
        }
    }

    pub fn is_second(self) -> bool {
        self == Order::Second
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    MeanToOsculating,
    OsculatingToMean,
}

/// Second-order data that depends on the mean momenta only. Reused along a
/// mean trajectory, where the momenta are constant.
#[derive(Debug, Clone)]
pub struct MeanContext {
    pub momenta: Momenta,
    slice: Option<S2Slice>,
}

/// Result of a map evaluation together with the Newton iteration count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapOutcome {
    pub state: DelaunayState,
    /// Output minus input, angles unwrapped, computed without cancellation.
    pub displacement: [f64; 6],
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalMap {
    pub series: GeneratingSeries,
    pub j2: f64,
    pub order: Order,
    /// Newton tolerance on the variables (absolute on angles, relative on momenta).
    pub tol: f64,
    pub max_iter: usize,
}

impl CanonicalMap {
    pub fn new(model: &PhysicalModel, order: Order) -> Result<Self> {
        model.validate()?;
        Self::with_j2(model, model.j2(), order)
    }

    pub fn with_j2(model: &PhysicalModel, j2: f64, order: Order) -> Result<Self> {
        if !(j2.abs() < J2_LIMIT) {
            return Err(Error::domain(format!("|J2| = {j2} exceeds the map limit {J2_LIMIT}")));
        }
        Ok(CanonicalMap {
            series: GeneratingSeries::new(model),
            j2,
            order,
            tol: 1e-12,
            max_iter: 25,
        })
    }

    pub fn with_series(self, series: GeneratingSeries) -> Self {
        CanonicalMap { series, ..self }
    }

    fn second(&self) -> bool {
        self.order.is_second() && self.j2 != 0.0
    }

    pub fn prepare(&self, m: &Momenta) -> Result<MeanContext> {
        let slice = if self.second() {
            Some(self.series.s2_slice(m)?)
        } else {
            None
        };
        Ok(MeanContext { momenta: *m, slice })
    }

    /// `∂(S - P·q)/∂q` restricted to `(l, g)`.
    fn dq(&self, m: &Momenta, l: f64, g: f64, s2: Option<(f64, f64)>) -> Result<[f64; 2]> {
        let p = self.series.s1_partials(m, l, g)?;
        let j = self.j2;
        let (s2l, s2g) = s2.unwrap_or((0.0, 0.0));
        Ok([j * p.d_l + j * j * s2l, j * p.d_g + j * j * s2g])
    }

    /// `∂(S - P·q)/∂P`.
    fn dp(&self, m: &Momenta, l: f64, g: f64, slice: Option<&S2Slice>) -> Result<[f64; 3]> {
        let pt = AnomalyPoint::from_mean(m.big_l, m.big_g, l)?;
        let p = self.series.s1_partials_at(m, l, g, &pt)?;
        let j = self.j2;
        let s2 = slice.map_or([0.0; 3], |s| s.momentum_partials(l, g));
        Ok([
            j * p.d_big_l + j * j * s2[0],
            j * p.d_big_g + j * j * s2[1],
            j * p.d_big_h + j * j * s2[2],
        ])
    }

    pub fn mean_to_osculating(&self, mean: &DelaunayState) -> Result<DelaunayState> {
        Ok(self.mean_to_osculating_stats(mean)?.state)
    }

    pub fn mean_to_osculating_stats(&self, mean: &DelaunayState) -> Result<MapOutcome> {
        if self.j2 == 0.0 {
            mean.validate()?;
            return Ok(MapOutcome {
                state: *mean,
                displacement: [0.0; 6],
                iterations: 0,
            });
        }
        let ctx = self.prepare(&mean.momenta())?;
        self.mean_to_osculating_with(mean, &ctx)
    }

    /// Mean → osculating with precomputed second-order data; `ctx` must have
    /// been prepared at `mean.momenta()`.
    pub fn mean_to_osculating_with(&self, mean: &DelaunayState, ctx: &MeanContext) -> Result<MapOutcome> {
        mean.validate()?;
        if self.j2 == 0.0 {
            return Ok(MapOutcome {
                state: *mean,
                displacement: [0.0; 6],
                iterations: 0,
            });
        }
        if ctx.momenta != mean.momenta() {
            return Err(Error::Usage("mean context prepared at different momenta".into()));
        }
        let m = mean.momenta();
        let slice = ctx.slice.as_ref();
        let target = Vector2::new(mean.l, mean.g);
        let residual = |q: &Vector2<f64>| -> Result<Vector2<f64>> {
            let d = self.dp(&m, q[0], q[1], slice)?;
            Ok(Vector2::new(q[0] + d[0], q[1] + d[1]) - target)
        };

        let mut q = target;
        let mut iterations = 0;
        loop {
            let r = residual(&q)?;
            let h = 1e-6;
            let mut jac = Matrix2::zeros();
            for k in 0..2 {
                let mut qp = q;
                let mut qm = q;
                qp[k] += h;
                qm[k] -= h;
                let col = (residual(&qp)? - residual(&qm)?) / (2.0 * h);
                jac.set_column(k, &col);
            }
            let step = jac
                .lu()
                .solve(&r)
                .ok_or_else(|| Error::MapFailure("singular angle Jacobian".into()))?;
            q -= step;
            iterations += 1;
            if step.amax() <= self.tol * q.amax().max(1.0) {
                break;
            }
            if iterations >= self.max_iter || !q.iter().all(|x| x.is_finite()) {
                return Err(Error::MapFailure(format!(
                    "angle Newton did not converge in {iterations} iterations (last step {:e})",
                    step.amax()
                )));
            }
        }

        let (l, g) = (q[0], q[1]);
        let s2q = match slice {
            Some(s) => {
                let (_, dl, dg) = s.base.eval(l, g);
                Some((dl, dg))
            }
            None => None,
        };
        let dq = self.dq(&m, l, g, s2q)?;
        let dp = self.dp(&m, l, g, slice)?;
        let osc = DelaunayState {
            big_l: m.big_l + dq[0],
            big_g: m.big_g + dq[1],
            big_h: m.big_h,
            l,
            g,
            h: mean.h - dp[2],
        };
        osc.validate()
            .map_err(|e| Error::MapFailure(format!("osculating state left the domain: {e}")))?;
        Ok(MapOutcome {
            state: osc.normalized(),
            displacement: [dq[0], dq[1], 0.0, l - mean.l, g - mean.g, -dp[2]],
            iterations,
        })
    }

    pub fn osculating_to_mean(&self, osc: &DelaunayState) -> Result<DelaunayState> {
        Ok(self.osculating_to_mean_stats(osc)?.state)
    }

    pub fn osculating_to_mean_stats(&self, osc: &DelaunayState) -> Result<MapOutcome> {
        osc.validate()?;
        if self.j2 == 0.0 {
            return Ok(MapOutcome {
                state: *osc,
                displacement: [0.0; 6],
                iterations: 0,
            });
        }
        let (l, g) = (osc.l, osc.g);
        let target = Vector2::new(osc.big_l, osc.big_g);
        let momenta = |x: &Vector2<f64>| Momenta::new(x[0], x[1], osc.big_h);
        let check = |x: &Vector2<f64>| -> Result<()> {
            if !(x[0] > 0.0 && x[1] > 0.0 && x[1] < x[0] && osc.big_h.abs() <= x[1]) {
                return Err(Error::MapFailure(format!(
                    "momentum Newton left the domain at L = {}, G = {}",
                    x[0], x[1]
                )));
            }
            Ok(())
        };
        let first = |x: &Vector2<f64>| -> Result<Vector2<f64>> {
            check(x)?;
            let d = self.dq(&momenta(x), l, g, None)?;
            Ok(Vector2::new(x[0] + d[0], x[1] + d[1]) - target)
        };
        let full = |x: &Vector2<f64>| -> Result<Vector2<f64>> {
            if !self.second() {
                return first(x);
            }
            check(x)?;
            let m = momenta(x);
            let (_, dl, dg) = self.series.s2_table(&m)?.eval(l, g);
            let d = self.dq(&m, l, g, Some((dl, dg)))?;
            Ok(Vector2::new(x[0] + d[0], x[1] + d[1]) - target)
        };

        let mut x = target;
        let mut iterations = 0;
        loop {
            let r = full(&x)?;
            // Jacobian of the first-order residual; the J2² part only slows
            // convergence to linear with a tiny rate
            let h = 1e-5 * (x[0] - x[1]).min(1e-3 * x[0]);
            let mut jac = Matrix2::zeros();
            for k in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[k] += h;
                xm[k] -= h;
                let col = (first(&xp)? - first(&xm)?) / (2.0 * h);
                jac.set_column(k, &col);
            }
            let step = jac
                .lu()
                .solve(&r)
                .ok_or_else(|| Error::MapFailure("singular momentum Jacobian".into()))?;
            x -= step;
            iterations += 1;
            if step.amax() <= self.tol * x.amax() {
                break;
            }
            if iterations >= self.max_iter || !x.iter().all(|v| v.is_finite()) {
                return Err(Error::MapFailure(format!(
                    "momentum Newton did not converge in {iterations} iterations (last step {:e})",
                    step.amax()
                )));
            }
        }
        check(&x)?;
        let m = momenta(&x);
        let ctx = self.prepare(&m)?;
        let s2q = ctx.slice.as_ref().map(|s| {
            let (_, dl, dg) = s.base.eval(l, g);
            (dl, dg)
        });
        // at the solution P - p = -∂(S - P·q)/∂q, which avoids differencing L
        let dq = self.dq(&m, l, g, s2q)?;
        let dp = self.dp(&m, l, g, ctx.slice.as_ref())?;
        let mean = DelaunayState {
            big_l: m.big_l,
            big_g: m.big_g,
            big_h: m.big_h,
            l: l + dp[0],
            g: g + dp[1],
            h: osc.h + dp[2],
        };
        Ok(MapOutcome {
            state: mean.normalized(),
            displacement: [-dq[0], -dq[1], 0.0, dp[0], dp[1], dp[2]],
            iterations,
        })
    }

    /// Finite-difference Jacobian of the map in the given direction, taken
    /// with steps `1e-6 max(1, |x|)` and one Richardson extrapolation. The
    /// differences are applied to the displacement `out - in`, so the
    /// rounding of the large momenta does not enter.
    pub fn map_jacobian(&self, at: &DelaunayState, direction: Direction) -> Result<BlockMatrix2N> {
        at.validate()?;
        let f = |x: &[f64]| -> Result<Vec<f64>> {
            let st = DelaunayState::from_array(x.try_into().expect("six coordinates"));
            let out = match direction {
                Direction::MeanToOsculating => self.mean_to_osculating_stats(&st)?,
                Direction::OsculatingToMean => self.osculating_to_mean_stats(&st)?,
            };
            Ok(out.displacement.to_vec())
        };
        let jac = fd_jacobian(f, &at.to_array(), 1e-6)? + DMatrix::<f64>::identity(6, 6);
        BlockMatrix2N::new(jac)
    }

    /// Transforms a perturbing force `f = (f_p, f_q)` acting on the osculating
    /// variables into the force acting on the mean variables:
    /// `F_P = q_Qᵗ f_p - p_Qᵗ f_q`, `F_Q = -q_Pᵗ f_p + p_Pᵗ f_q`, with the
    /// blocks of `∂(p, q)/∂(P, Q)` evaluated at the mean state.
    pub fn transform_force(&self, osc: &DelaunayState, f: &[f64; 6]) -> Result<[f64; 6]> {
        let mean = self.osculating_to_mean(osc)?;
        let jac = self.map_jacobian(&mean, Direction::MeanToOsculating)?;
        Ok(transform_force_with(&jac, f))
    }
}

/// The force transformation for a given Jacobian `∂(p, q)/∂(P, Q)`.
pub fn transform_force_with(jac: &BlockMatrix2N, f: &[f64; 6]) -> [f64; 6] {
    let n = jac.n();
    let f1 = DMatrix::from_column_slice(n, 1, &f[..n]);
    let f2 = DMatrix::from_column_slice(n, 1, &f[n..]);
    let (p_p, p_q, q_p, q_q) = (jac.a(), jac.b(), jac.c(), jac.d());
    let big_f1 = q_q.transpose() * &f1 - p_q.transpose() * &f2;
    let big_f2 = -(q_p.transpose() * &f1) + p_p.transpose() * &f2;
    let mut out = [0.0; 6];
    out[..n].copy_from_slice(big_f1.as_slice());
    out[n..].copy_from_slice(big_f2.as_slice());
    out
}

/// The representative of `x` (mod 2π) closest to `reference`.
pub fn unwrap_near(x: f64, reference: f64) -> f64 {
    use std::f64::consts::TAU;
    x - TAU * ((x - reference) / TAU).round()
}
