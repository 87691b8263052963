//! Quantitative checks of the embedding family: pointwise discrete gradients,
//! inf-sup constants, the pressure-Poisson identity, the spectrum of the
//! semi-discrete operator and convergence on an analytic standing wave.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::assembly::{velocity_element_blocks, Operators, VelocityMassSolver};
use crate::linalg::{generalized_symmetric_eigenvalues, BlockDiagonalInverse};
use crate::mesh::Mesh;
use crate::model::{Model, ModelParams, SolverKind, StandingWave, State};
use crate::spaces::{integrate, l2_error, l2_error_vector, Continuity, ElementPair, PairKind};
use crate::{Error, Result};

/// Size limit for dense elevation-space eigenproblems.
pub const DENSE_H_LIMIT: usize = 2000;
/// Size limit for the dense spectrum of the full system.
pub const DENSE_SYSTEM_LIMIT: usize = 4000;

/// `‖q - ∇η‖_L2` with `q = M_u⁻¹ G η` the discrete gradient.
pub fn pointwise_gradient_error(pair: &ElementPair, ops: &Operators, eta: &[f64]) -> Result<f64> {
    let solver = VelocityMassSolver::new(pair, ops)?;
    let q = solver.solve(&ops.gradient.mul_vec(eta));
    let h = &pair.h;
    let err = integrate(pair.mesh(), 8, |e, xi, _| {
        let g = h.gradient(eta, e, xi);
        let v = pair.v.evaluate(&q, e, xi);
        (v[0] - g[0]) * (v[0] - g[0]) + (v[1] - g[1]) * (v[1] - g[1])
    })?;
    Ok(libm::sqrt(err))
}

/// `‖∇η‖_L2`, evaluated elementwise.
pub fn gradient_l2_norm(pair: &ElementPair, eta: &[f64]) -> Result<f64> {
    let h = &pair.h;
    let s = integrate(pair.mesh(), 8, |e, xi, _| {
        let g = h.gradient(eta, e, xi);
        g[0] * g[0] + g[1] * g[1]
    })?;
    Ok(libm::sqrt(s))
}

fn check_dense(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::TooLarge { size: n, limit });
    }
    Ok(())
}

/// `Gᵀ M_u⁻¹ G`: sparse through the element blocks when `V` is
/// discontinuous, dense column solves otherwise.
pub fn composed_poisson(pair: &ElementPair, ops: &Operators) -> Result<DMatrix<f64>> {
    match pair.v.continuity() {
        Continuity::Discontinuous => {
            let inv = BlockDiagonalInverse::new(&ops.mass_u, velocity_element_blocks(pair))?;
            Ok(inv.congruence(&ops.gradient).to_dense())
        }
        Continuity::Continuous => {
            let nh = pair.h.ndof();
            check_dense(nh, DENSE_H_LIMIT)?;
            let solver = VelocityMassSolver::new(pair, ops)?;
            let mut out = DMatrix::zeros(nh, nh);
            let mut e = alloc::vec![0.0; nh];
            for j in 0..nh {
                e[j] = 1.0;
                let x = solver.solve(&ops.gradient.mul_vec(&e));
                let col = ops.gradient.mul_transpose_vec(&x);
                for (i, v) in col.into_iter().enumerate() {
                    out[(i, j)] = v;
                }
                e[j] = 0.0;
            }
            Ok(out)
        }
    }
}

fn constant_mode(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0)
}

/// Smallest generalized eigenvalue of `(K, M_η)` on mean-zero functions.
pub fn laplacian_min_eig(pair: &ElementPair, ops: &Operators) -> Result<f64> {
    check_dense(pair.h.ndof(), DENSE_H_LIMIT)?;
    let ev = generalized_symmetric_eigenvalues(&ops.stiffness.to_dense(), &ops.mass_eta.to_dense(), Some(&constant_mode(pair.h.ndof())))?;
    ev.first().copied().ok_or_else(|| Error::Eigen("empty spectrum".into()))
}

/// Discrete inf-sup constant: square root of the smallest generalized
/// eigenvalue of `(Gᵀ M_u⁻¹ G, M_η)` with constants deflated.
pub fn infsup_constant(pair: &ElementPair, ops: &Operators) -> Result<f64> {
    check_dense(pair.h.ndof(), DENSE_H_LIMIT)?;
    let s = composed_poisson(pair, ops)?;
    let ev = generalized_symmetric_eigenvalues(&s, &ops.mass_eta.to_dense(), Some(&constant_mode(pair.h.ndof())))?;
    let min = ev.first().copied().ok_or_else(|| Error::Eigen("empty spectrum".into()))?;
    Ok(libm::sqrt(min.max(0.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfSupReport {
    pub pair: String,
    /// Longest edge of each mesh.
    pub h: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda_min: Vec<f64>,
}

impl InfSupReport {
    /// `max β / min β` over the mesh sequence.
    pub fn beta_spread(&self) -> f64 {
        let max = self.beta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.beta.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }

    /// Smallest `β - sqrt(λ_min)` over the sequence.
    pub fn min_margin(&self) -> f64 {
        self.beta
            .iter()
            .zip(&self.lambda_min)
            .map(|(b, l)| b - libm::sqrt(*l))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn infsup_study(kind: PairKind, meshes: &[Arc<Mesh>]) -> Result<InfSupReport> {
    let mut report = InfSupReport {
        pair: kind.name().into(),
        h: Vec::new(),
        beta: Vec::new(),
        lambda_min: Vec::new(),
    };
    for mesh in meshes {
        let pair = ElementPair::new(kind, mesh.clone())?;
        let ops = Operators::assemble(&pair)?;
        report.h.push(mesh.max_edge_length());
        report.beta.push(infsup_constant(&pair, &ops)?);
        report.lambda_min.push(laplacian_min_eig(&pair, &ops)?);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonCheck {
    /// `‖Gᵀ M_u⁻¹ G - K‖_max`
    pub discrepancy: f64,
    /// `‖K‖_max`
    pub stiffness_max: f64,
}

impl PoissonCheck {
    pub fn relative(&self) -> f64 {
        self.discrepancy / self.stiffness_max
    }
}

pub fn poisson_sparsity_check(pair: &ElementPair, ops: &Operators) -> Result<PoissonCheck> {
    let s = composed_poisson(pair, ops)?;
    let k = ops.stiffness.to_dense();
    let discrepancy = (&s - &k).amax();
    Ok(PoissonCheck {
        discrepancy,
        stiffness_max: k.amax(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub pair: String,
    /// Imaginary parts of the eigenvalues, ascending.
    pub omegas: Vec<f64>,
    /// `max |Re μ|`
    pub max_real: f64,
    /// `max |μ|`
    pub max_abs: f64,
    /// Eigenvalues with `|μ| < 1e-10 max |μ|`.
    pub zero_modes: usize,
    /// Elevation DOFs off the boundary.
    pub interior_h_dofs: usize,
    /// Largest `‖B x‖_∞ / (‖B‖_∞ ‖x‖_∞)` over random balanced states.
    pub balanced_residual: f64,
}

impl SpectrumReport {
    /// Smallest `|ω|` among the non-zero modes.
    pub fn min_nonzero_frequency(&self) -> Option<f64> {
        let cut = 1e-10 * self.max_abs;
        self.omegas.iter().map(|w| libm::fabs(*w)).filter(|w| *w >= cut).fold(None, |m, w| match m {
            None => Some(w),
            Some(m) => Some(f64::min(m, w)),
        })
    }
}

/// Dense block operator `B = [[-f C, -g G], [g Gᵀ, 0]]` and the energy mass
/// `blockdiag(M_u, (g/D) M_η)`; `B` is skew, so `M⁻¹ B` is skew-adjoint in
/// the energy inner product.
pub fn block_operators(ops: &Operators, params: &ModelParams) -> (DMatrix<f64>, DMatrix<f64>) {
    let nu = ops.mass_u.nrows();
    let n = nu + ops.mass_eta.nrows();
    let mut b = DMatrix::zeros(n, n);
    let mut m = DMatrix::zeros(n, n);
    for (i, j, v) in ops.coriolis.triplets() {
        b[(i, j)] -= params.f * v;
    }
    for (i, j, v) in ops.gradient.triplets() {
        b[(i, nu + j)] -= params.g * v;
        b[(nu + j, i)] += params.g * v;
    }
    for (i, j, v) in ops.mass_u.triplets() {
        m[(i, j)] += v;
    }
    let s = params.g / params.dbar;
    for (i, j, v) in ops.mass_eta.triplets() {
        m[(nu + i, nu + j)] += s * v;
    }
    (b, m)
}

pub fn compute_spectrum(model: &Model, balanced_samples: usize) -> Result<SpectrumReport> {
    let (pair, ops, params) = (&model.pair, &model.ops, &model.params);
    let n = pair.v.ndof() + pair.h.ndof();
    check_dense(n, DENSE_SYSTEM_LIMIT)?;
    let (b, m) = block_operators(ops, params);
    let l = m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?.l();
    let li = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    let s = &li * &b * li.transpose();
    let mu = s.complex_eigenvalues();
    let max_abs = mu.iter().map(|z| libm::hypot(z.re, z.im)).fold(0.0, f64::max);
    let max_real = mu.iter().map(|z| libm::fabs(z.re)).fold(0.0, f64::max);
    let zero_modes = mu.iter().filter(|z| libm::hypot(z.re, z.im) < 1e-10 * max_abs).count();
    let mut omegas: Vec<f64> = mu.iter().map(|z| z.im).collect();
    omegas.sort_by(f64::total_cmp);

    let b_norm = (0..n).map(|i| b.row(i).iter().map(|v| libm::fabs(*v)).sum::<f64>()).fold(0.0, f64::max);
    let mut balanced_residual: f64 = 0.0;
    if pair.is_embedding() && params.f > 0.0 {
        for seed in 0..balanced_samples as u64 {
            let st = model.random_balanced_state(seed)?;
            let x = DVector::from_iterator(n, st.u.coeffs.iter().chain(&st.eta.coeffs).copied());
            let r = (&b * &x).amax();
            balanced_residual = balanced_residual.max(r / (b_norm * x.amax()));
        }
    }
    Ok(SpectrumReport {
        pair: pair.name().into(),
        omegas,
        max_real,
        max_abs,
        zero_modes,
        interior_h_dofs: pair.h.ndof() - pair.h.boundary_dofs().len(),
        balanced_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub pair: String,
    pub h: Vec<f64>,
    pub dt: Vec<f64>,
    pub err_eta: Vec<f64>,
    pub err_u: Vec<f64>,
    /// L2 interpolation error of the initial elevation.
    pub initial_err_eta: Vec<f64>,
    pub order_eta: f64,
    pub order_u: f64,
}

/// Least-squares slope of `log e` against `log h`.
pub fn observed_order(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| libm::log(*v)).collect();
    let ys: Vec<f64> = e.iter().map(|v| libm::log(*v)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Runs the `f = 0` standing wave to `t_final` on each mesh with
/// `dt ≈ h²/10` and reports L2 errors and observed orders.
pub fn convergence_study(kind: PairKind, meshes: &[Arc<Mesh>], g: f64, dbar: f64, t_final: f64) -> Result<ConvergenceReport> {
    let wave = StandingWave { g, dbar };
    let mut report = ConvergenceReport {
        pair: kind.name().into(),
        h: Vec::new(),
        dt: Vec::new(),
        err_eta: Vec::new(),
        err_u: Vec::new(),
        initial_err_eta: Vec::new(),
        order_eta: 0.0,
        order_u: 0.0,
    };
    for mesh in meshes {
        let h = mesh.max_edge_length();
        let nsteps = libm::ceil(t_final / (h * h / 10.0)) as usize;
        let dt = t_final / nsteps as f64;
        let params = ModelParams { f: 0.0, g, dbar, dt, nsteps };
        let pair = ElementPair::new(kind, mesh.clone())?;
        let model = Model::new(pair, params, SolverKind::Direct)?;
        let eta0 = model.pair.h.interpolate(|x| wave.eta(x, 0.0));
        let u0 = model.pair.v.interpolate(|x| wave.u(x, 0.0));
        let initial = State::from_coeffs(&model.pair, u0, eta0)?;
        report.initial_err_eta.push(l2_error(&model.pair.h, &initial.eta.coeffs, |x| wave.eta(x, 0.0))?);
        let mut state = initial;
        for _ in 0..nsteps {
            state = model.step(&state)?;
        }
        let t = state.time;
        report.err_eta.push(l2_error(&model.pair.h, &state.eta.coeffs, |x| wave.eta(x, t))?);
        report.err_u.push(l2_error_vector(&model.pair.v, &state.u.coeffs, |x| wave.u(x, t))?);
        report.h.push(h);
        report.dt.push(dt);
    }
    if report.h.len() >= 2 {
        report.order_eta = observed_order(&report.h, &report.err_eta);
        report.order_u = observed_order(&report.h, &report.err_u);
    }
    Ok(report)
}
