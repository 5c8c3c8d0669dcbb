//! Symplectic matrices in `(p, q)` ordering with `J = [[0, -I], [I, 0]]`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::quadrature::fd_step;

/// A `2N×2N` matrix viewed as blocks `[[A, B], [C, D]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix2N {
    m: DMatrix<f64>,
    n: usize,
}

impl BlockMatrix2N {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() % 2 != 0 || m.nrows() == 0 {
            return Err(Error::Usage(format!(
                "expected a non-empty 2N×2N matrix, got {}×{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows() / 2;
        Ok(BlockMatrix2N { m, n })
    }

    pub fn from_blocks(
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        c: &DMatrix<f64>,
        d: &DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        for blk in [a, b, c, d] {
            if blk.nrows() != n || blk.ncols() != n {
                return Err(Error::Usage("blocks must all be N×N".into()));
            }
        }
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(a);
        m.view_mut((0, n), (n, n)).copy_from(b);
        m.view_mut((n, 0), (n, n)).copy_from(c);
        m.view_mut((n, n), (n, n)).copy_from(d);
        Ok(BlockMatrix2N { m, n })
    }

    pub fn identity(n: usize) -> Self {
        BlockMatrix2N {
            m: DMatrix::identity(2 * n, 2 * n),
            n,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn a(&self) -> DMatrix<f64> {
        self.m.view((0, 0), (self.n, self.n)).into_owned()
    }

    pub fn b(&self) -> DMatrix<f64> {
        self.m.view((0, self.n), (self.n, self.n)).into_owned()
    }

    pub fn c(&self) -> DMatrix<f64> {
        self.m.view((self.n, 0), (self.n, self.n)).into_owned()
    }

    pub fn d(&self) -> DMatrix<f64> {
        self.m.view((self.n, self.n), (self.n, self.n)).into_owned()
    }

    pub fn transpose(&self) -> Self {
        BlockMatrix2N {
            m: self.m.transpose(),
            n: self.n,
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Usage("block sizes differ".into()));
        }
        Ok(BlockMatrix2N {
            m: &self.m * &other.m,
            n: self.n,
        })
    }
}

/// `J = [[0, -I], [I, 0]]`.
pub fn symplectic_form(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k, n + k)] = -1.0;
        j[(n + k, k)] = 1.0;
    }
    j
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticCheck {
    pub symplectic: bool,
    /// `max |M J Mᵗ - J|`.
    pub residual: f64,
}

pub fn is_symplectic(m: &BlockMatrix2N, tol: f64) -> SymplecticCheck {
    let j = symplectic_form(m.n);
    let residual = max_abs(&(&m.m * &j * m.m.transpose() - &j));
    SymplecticCheck {
        symplectic: residual <= tol,
        residual,
    }
}

/// Residuals (max-abs) of the block identities of a symplectic matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockResiduals {
    /// `A Bᵗ - B Aᵗ`
    pub ab_t: f64,
    /// `C Dᵗ - D Cᵗ`
    pub cd_t: f64,
    /// `A Dᵗ - B Cᵗ - I`
    pub ad_t_bc_t: f64,
    /// `Aᵗ C - Cᵗ A`
    pub at_c: f64,
    /// `Bᵗ D - Dᵗ B`
    pub bt_d: f64,
    /// `Aᵗ D - Cᵗ B - I`
    pub at_d_ct_b: f64,
}

impl BlockResiduals {
    /// Worst residual of the identities built from `M J Mᵗ = J`.
    pub fn rows(&self) -> f64 {
        self.ab_t.max(self.cd_t).max(self.ad_t_bc_t)
    }

    /// Worst residual of the identities built from `Mᵗ J M = J`.
    pub fn columns(&self) -> f64 {
        self.at_c.max(self.bt_d).max(self.at_d_ct_b)
    }

    pub fn max(&self) -> f64 {
        self.rows().max(self.columns())
    }
}

pub fn block_identities(m: &BlockMatrix2N) -> BlockResiduals {
    let (a, b, c, d) = (m.a(), m.b(), m.c(), m.d());
    let id = DMatrix::<f64>::identity(m.n, m.n);
    BlockResiduals {
        ab_t: max_abs(&(&a * b.transpose() - &b * a.transpose())),
        cd_t: max_abs(&(&c * d.transpose() - &d * c.transpose())),
        ad_t_bc_t: max_abs(&(&a * d.transpose() - &b * c.transpose() - &id)),
        at_c: max_abs(&(a.transpose() * &c - c.transpose() * &a)),
        bt_d: max_abs(&(b.transpose() * &d - d.transpose() * &b)),
        at_d_ct_b: max_abs(&(a.transpose() * &d - c.transpose() * &b - &id)),
    }
}

/// `M⁻¹ = -J Mᵗ J = [[Dᵗ, -Bᵗ], [-Cᵗ, Aᵗ]]`, refusing inputs that are not
/// symplectic to within `1e-8`.
pub fn symplectic_inverse(m: &BlockMatrix2N) -> Result<BlockMatrix2N> {
    symplectic_inverse_with_tol(m, 1e-8)
}

pub fn symplectic_inverse_with_tol(m: &BlockMatrix2N, tol: f64) -> Result<BlockMatrix2N> {
    let check = is_symplectic(m, tol);
    if !check.symplectic {
        return Err(Error::domain(format!(
            "matrix is not symplectic: residual {:e} exceeds {tol:e}",
            check.residual
        )));
    }
    BlockMatrix2N::from_blocks(
        &m.d().transpose(),
        &(-m.b().transpose()),
        &(-m.c().transpose()),
        &m.a().transpose(),
    )
}

/// Whether `M M1` is symplectic to within `tol`.
pub fn product_closure(m: &BlockMatrix2N, m1: &BlockMatrix2N, tol: f64) -> bool {
    m.mul(m1).is_ok_and(|p| is_symplectic(&p, tol).symplectic)
}

/// Central-difference Jacobian with one Richardson step. Coordinate `k` uses
/// the step `fd_step(x[k], rel)`.
pub fn fd_jacobian<F>(f: F, x: &[f64], rel: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let steps: Vec<f64> = x.iter().map(|&xi| fd_step(xi, rel)).collect();
    fd_jacobian_with_steps(f, x, &steps)
}

pub fn fd_jacobian_with_steps<F>(f: F, x: &[f64], steps: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let f0 = f(x)?;
    let mut jac = DMatrix::zeros(f0.len(), x.len());
    let mut xp = x.to_vec();
    for (k, &h) in steps.iter().enumerate() {
        if !(h > 0.0) || x[k] + 0.5 * h == x[k] {
            return Err(Error::Numeric(format!("finite-difference step underflow at coordinate {k}")));
        }
        let mut eval = |d: f64| {
            xp[k] = x[k] + d;
            let v = f(&xp);
            xp[k] = x[k];
            v
        };
        let (p1, m1, p2, m2) = (eval(h)?, eval(-h)?, eval(0.5 * h)?, eval(-0.5 * h)?);
        for i in 0..f0.len() {
            let d1 = (p1[i] - m1[i]) / (2.0 * h);
            let d2 = (p2[i] - m2[i]) / h;
            jac[(i, k)] = (4.0 * d2 - d1) / 3.0;
        }
    }
    Ok(jac)
}

/// Random symplectic matrices from near-identity generating functions
/// `S(P, q) = P·q + ε T(q) Π(P)` with a trigonometric polynomial `T` and a
/// quadratic `Π`.
pub mod generator {
    use super::*;
    use rand::Rng;

    #[derive(Debug, Clone)]
    pub struct RandomGenerator {
        pub n: usize,
        pub eps: f64,
        /// `(wave vector, cos amplitude, sin amplitude)`.
        modes: Vec<(Vec<f64>, f64, f64)>,
        lin: Vec<f64>,
        quad: DMatrix<f64>,
        constant: f64,
    }

    impl RandomGenerator {
        pub fn random<R: Rng>(n: usize, rng: &mut R) -> Self {
            Self::with_eps(n, 1e-2, rng)
        }

        pub fn with_eps<R: Rng>(n: usize, eps: f64, rng: &mut R) -> Self {
            let modes = (0..3)
                .map(|_| {
                    let k = (0..n).map(|_| rng.random_range(-2i32..=2) as f64).collect();
                    (k, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                })
                .collect();
            let lin = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let raw = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let quad = 0.5 * (&raw + raw.transpose());
            RandomGenerator {
                n,
                eps,
                modes,
                lin,
                quad,
                constant: rng.random_range(-1.0..1.0),
            }
        }

        /// `T`, `∇T`, `∇²T` at `q`.
        fn trig(&self, q: &[f64]) -> (f64, Vec<f64>, DMatrix<f64>) {
            let n = self.n;
            let (mut t, mut grad, mut hess) = (0.0, vec![0.0; n], DMatrix::zeros(n, n));
            for (k, a, b) in &self.modes {
                let phase: f64 = k.iter().zip(q).map(|(x, y)| x * y).sum();
                let (s, c) = phase.sin_cos();
                t += a * c + b * s;
                let d1 = -a * s + b * c;
                let d2 = -a * c - b * s;
                for i in 0..n {
                    grad[i] += d1 * k[i];
                    for j in 0..n {
                        hess[(i, j)] += d2 * k[i] * k[j];
                    }
                }
            }
            (t, grad, hess)
        }

        /// `Π`, `∇Π`, `∇²Π` at `p`.
        fn poly(&self, p: &[f64]) -> (f64, Vec<f64>, DMatrix<f64>) {
            let pv = nalgebra::DVector::from_column_slice(p);
            let qp = &self.quad * &pv;
            let value = self.constant
                + self.lin.iter().zip(p).map(|(a, b)| a * b).sum::<f64>()
                + 0.5 * pv.dot(&qp);
            let grad = (0..self.n).map(|i| self.lin[i] + qp[i]).collect();
            (value, grad, self.quad.clone())
        }

        /// Exact Jacobian `∂(P, Q)/∂(p, q)` of the generated map at `(P, q)`.
        pub fn jacobian(&self, big_p: &[f64], q: &[f64]) -> Result<BlockMatrix2N> {
            let n = self.n;
            let eps = self.eps;
            let (t, tq, tqq) = self.trig(q);
            let (pi, pp, ppp) = self.poly(big_p);
            let id = DMatrix::<f64>::identity(n, n);
            // S_qP[i][j] = T_qi Π_Pj
            let s_qp = DMatrix::from_fn(n, n, |i, j| tq[i] * pp[j]);
            let a = &id + eps * &s_qp;
            let b = eps * pi * tqq;
            let c = eps * t * ppp;
            let d = &id + eps * s_qp.transpose();
            let a_inv = a
                .try_inverse()
                .ok_or_else(|| Error::Numeric("generator block is singular".into()))?;
            let cai = &c * &a_inv;
            BlockMatrix2N::from_blocks(&a_inv, &(-(&a_inv * &b)), &cai, &(d - &cai * &b))
        }

        /// Random evaluation point for [`Self::jacobian`].
        pub fn random_matrix<R: Rng>(&self, rng: &mut R) -> Result<BlockMatrix2N> {
            let p: Vec<f64> = (0..self.n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q: Vec<f64> = (0..self.n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
            self.jacobian(&p, &q)
        }
    }

    /// A random symplectic `2N×2N` matrix.
    pub fn random_symplectic<R: Rng>(n: usize, rng: &mut R) -> Result<BlockMatrix2N> {
        RandomGenerator::random(n, rng).random_matrix(rng)
    }
}
