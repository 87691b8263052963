//! Linear rotating shallow-water model: balanced initial states and
//! implicit-midpoint time stepping of
//!
//! ```text
//! M_u du/dt + f C u = -g G η
//! M_η dη/dt        = D Gᵀ u
//! ```

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{norm_inf, FieldVector, Operators, SpaceTag, VelocityMassSolver};
use crate::linalg::{bicgstab, BandedLu, BlockDiagonalInverse};
use crate::mesh::Point;
use crate::spaces::{Continuity, ElementPair, VectorSpace};
use crate::sparse::{SparseOperator, Symmetry, TripletBuilder};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Coriolis parameter.
    pub f: f64,
    /// Gravitational acceleration.
    pub g: f64,
    /// Mean layer depth.
    pub dbar: f64,
    pub dt: f64,
    pub nsteps: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            f: 10.0,
            g: 1.0,
            dbar: 1.0,
            dt: 0.01,
            nsteps: 1000,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} = {v}")));
        if !(self.f >= 0.0) || !self.f.is_finite() {
            return bad("f", self.f);
        }
        if !(self.g > 0.0) || !self.g.is_finite() {
            return bad("g", self.g);
        }
        if !(self.dbar > 0.0) || !self.dbar.is_finite() {
            return bad("dbar", self.dbar);
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad("dt", self.dt);
        }
        Ok(())
    }

    /// Same parameters with a different (possibly negative) timestep. Used for
    /// time reversal; skips the `dt > 0` validation.
    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }
}

/// Unit length and velocity scales: `f = 1/Ro`, `g = 1/Fr^2`, `D = 1`.
pub fn params_from_ro_fr(ro: f64, fr: f64) -> Result<ModelParams> {
    if !(ro > 0.0) || !(fr > 0.0) {
        return Err(Error::InvalidParameter(format!("Ro = {ro}, Fr = {fr} must be positive")));
    }
    Ok(ModelParams {
        f: 1.0 / ro,
        g: 1.0 / (fr * fr),
        dbar: 1.0,
        ..ModelParams::default()
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: FieldVector,
    pub eta: FieldVector,
    pub time: f64,
}

impl State {
    pub fn zeros(pair: &ElementPair) -> Self {
        Self {
            u: FieldVector::zeros(pair, SpaceTag::Velocity),
            eta: FieldVector::zeros(pair, SpaceTag::Elevation),
            time: 0.0,
        }
    }

    pub fn from_coeffs(pair: &ElementPair, u: Vec<f64>, eta: Vec<f64>) -> Result<Self> {
        Ok(Self {
            u: FieldVector::new(pair, SpaceTag::Velocity, u)?,
            eta: FieldVector::new(pair, SpaceTag::Elevation, eta)?,
            time: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverKind {
    Direct,
    /// BiCGStab on the block system; `max_iter` defaults to `10 * ndof`.
    Iterative { tol: f64, max_iter: Option<usize> },
}

impl SolverKind {
    pub const DEFAULT_TOL: f64 = 1e-12;

    pub fn iterative() -> Self {
        Self::Iterative {
            tol: Self::DEFAULT_TOL,
            max_iter: None,
        }
    }
}

/// Factorized implicit-midpoint system for one `(pair, params, mesh)`.
#[derive(Debug, Clone)]
enum StepSystem {
    /// Discontinuous velocity: eliminate `u` blockwise, factor the elevation
    /// Schur complement.
    Schur {
        a_inv: BlockDiagonalInverse,
        schur: BandedLu,
    },
    /// Full block system with the elevation rows scaled by `g / D`.
    Full(BandedLu),
    Iterative {
        matrix: SparseOperator,
        tol: f64,
        max_iter: usize,
    },
}

/// One record of the diagnostics time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    /// `‖Gᵀ u‖_∞`
    pub div_inf: f64,
    pub eta_drift: f64,
    pub u_drift: f64,
}

/// Assembled model for one pair and parameter set.
#[derive(Debug, Clone)]
pub struct Model {
    pub pair: ElementPair,
    pub ops: Operators,
    pub params: ModelParams,
    mass_solver: VelocityMassSolver,
    system: StepSystem,
}

impl Model {
    pub fn new(pair: ElementPair, params: ModelParams, solver: SolverKind) -> Result<Self> {
        params.validate()?;
        let ops = Operators::assemble(&pair)?;
        Self::with_operators(pair, ops, params, solver)
    }

    pub fn with_operators(pair: ElementPair, ops: Operators, params: ModelParams, solver: SolverKind) -> Result<Self> {
        if !(params.dt != 0.0 && params.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {}", params.dt)));
        }
        let mass_solver = VelocityMassSolver::new(&pair, &ops)?;
        let system = build_system(&pair, &ops, &params, solver)?;
        Ok(Self {
            pair,
            ops,
            params,
            mass_solver,
            system,
        })
    }

    /// Same model with a new timestep (refactorizes the step system).
    pub fn with_dt(&self, dt: f64, solver: SolverKind) -> Result<Self> {
        Self::with_operators(self.pair.clone(), self.ops.clone(), self.params.with_dt(dt), solver)
    }

    pub fn energy(&self, state: &State) -> f64 {
        let mu = self.ops.mass_u.mul_vec(&state.u.coeffs);
        let me = self.ops.mass_eta.mul_vec(&state.eta.coeffs);
        let ku: f64 = state.u.coeffs.iter().zip(&mu).map(|(a, b)| a * b).sum();
        let pe: f64 = state.eta.coeffs.iter().zip(&me).map(|(a, b)| a * b).sum();
        0.5 * ku + 0.5 * self.params.g / self.params.dbar * pe
    }

    /// `f C u + g G η`, the residual of the discrete balance relation.
    pub fn balance_residual(&self, u: &[f64], eta: &[f64]) -> Vec<f64> {
        let cu = self.ops.coriolis.mul_vec(u);
        let ge = self.ops.gradient.mul_vec(eta);
        cu.iter().zip(&ge).map(|(c, g)| self.params.f * c + self.params.g * g).collect()
    }

    /// `Gᵀ u`, the divergence integral against every elevation test function.
    pub fn divergence(&self, u: &[f64]) -> Vec<f64> {
        self.ops.gradient.mul_transpose_vec(u)
    }

    /// Discrete gradient `q = M_u⁻¹ G η`.
    pub fn discrete_gradient(&self, eta: &[f64]) -> Vec<f64> {
        self.mass_solver.solve(&self.ops.gradient.mul_vec(eta))
    }

    pub fn solve_velocity_mass(&self, b: &[f64]) -> Vec<f64> {
        self.mass_solver.solve(b)
    }

    /// Random elevation: boundary DOFs zero, interior DOFs iid uniform in
    /// `[-1, 1]`.
    pub fn random_eta(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = &self.pair.h;
        (0..h.ndof())
            .map(|i| {
                let r = 2.0 * rng.random::<f64>() - 1.0;
                if h.is_boundary_dof(i) {
                    0.0
                } else {
                    r
                }
            })
            .collect()
    }

    /// Balanced state from a given elevation, by pointwise evaluation of
    /// `u = (g/f) (∇η)⊥` at the velocity DOFs. Needs both embedding conditions.
    pub fn balanced_state_from_eta(&self, eta: Vec<f64>) -> Result<State> {
        if !self.pair.is_embedding() {
            return Err(Error::NotEmbedding(self.pair.name().into()));
        }
        if self.params.f == 0.0 {
            return Err(Error::InvalidParameter("balanced states need f > 0".into()));
        }
        let scale = self.params.g / self.params.f;
        let h = &self.pair.h;
        let u = self.pair.v.interpolate_elementwise(|e, xi, _| {
            let g = h.gradient(&eta, e, xi);
            [-scale * g[1], scale * g[0]]
        });
        State::from_coeffs(&self.pair, u, eta)
    }

    /// Unbalanced state with every coefficient iid uniform in `[-1, 1]`.
    pub fn random_state(&self, seed: u64) -> State {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect() };
        let u = draw(self.pair.v.ndof());
        let eta = draw(self.pair.h.ndof());
        State {
            u: FieldVector {
                space: SpaceTag::Velocity,
                coeffs: u,
            },
            eta: FieldVector {
                space: SpaceTag::Elevation,
                coeffs: eta,
            },
            time: 0.0,
        }
    }

    pub fn random_balanced_state(&self, seed: u64) -> Result<State> {
        self.balanced_state_from_eta(self.random_eta(seed))
    }

    /// Velocity balancing `η` in the `M_u` inner product: solves
    /// `f C u = -g G η`, i.e. `u = (g/f) q⊥` with `q = M_u⁻¹ G η`.
    pub fn project_balanced(&self, eta: &[f64]) -> Result<Vec<f64>> {
        if self.params.f == 0.0 {
            return Err(Error::InvalidParameter("projection is singular for f = 0".into()));
        }
        let q = self.discrete_gradient(eta);
        let scale = self.params.g / self.params.f;
        Ok(VectorSpace::perp(&q).into_iter().map(|v| scale * v).collect())
    }

    pub fn step(&self, state: &State) -> Result<State> {
        let p = &self.params;
        let half = 0.5 * p.dt;
        let u = &state.u.coeffs;
        let eta = &state.eta.coeffs;
        let ops = &self.ops;
        let mu = ops.mass_u.mul_vec(u);
        let cu = ops.coriolis.mul_vec(u);
        let ge = ops.gradient.mul_vec(eta);
        let gtu = ops.gradient.mul_transpose_vec(u);
        let me = ops.mass_eta.mul_vec(eta);
        let r_u: Vec<f64> = (0..u.len()).map(|i| mu[i] - half * p.f * cu[i] - half * p.g * ge[i]).collect();
        let r_eta: Vec<f64> = (0..eta.len()).map(|i| me[i] + half * p.dbar * gtu[i]).collect();

        let (u_new, eta_new) = match &self.system {
            StepSystem::Schur { a_inv, schur } => {
                let ar = a_inv.apply(&r_u);
                let gt_ar = ops.gradient.mul_transpose_vec(&ar);
                let rhs: Vec<f64> = r_eta.iter().zip(&gt_ar).map(|(r, d)| r + half * p.dbar * d).collect();
                let eta_new = schur.solve(&rhs);
                let ge_new = ops.gradient.mul_vec(&eta_new);
                let ru2: Vec<f64> = r_u.iter().zip(&ge_new).map(|(r, g)| r - half * p.g * g).collect();
                (a_inv.apply(&ru2), eta_new)
            }
            StepSystem::Full(lu) => {
                let x = lu.solve(&stack_rhs(&r_u, &r_eta, p));
                split(x, u.len())
            }
            StepSystem::Iterative { matrix, tol, max_iter } => {
                let rhs = stack_rhs(&r_u, &r_eta, p);
                let x0: Vec<f64> = u.iter().chain(eta.iter()).copied().collect();
                let (x, _) = bicgstab(matrix, &rhs, &x0, *tol, *max_iter)?;
                split(x, u.len())
            }
        };
        Ok(State {
            u: FieldVector {
                space: SpaceTag::Velocity,
                coeffs: u_new,
            },
            eta: FieldVector {
                space: SpaceTag::Elevation,
                coeffs: eta_new,
            },
            time: state.time + p.dt,
        })
    }

    pub fn record(&self, step: usize, state: &State, initial: &State) -> StepRecord {
        StepRecord {
            step,
            time: state.time,
            energy: self.energy(state),
            div_inf: norm_inf(&self.divergence(&state.u.coeffs)),
            eta_drift: relative_drift(&state.eta.coeffs, &initial.eta.coeffs),
            u_drift: relative_drift(&state.u.coeffs, &initial.u.coeffs),
        }
    }

    /// Advances `nsteps` steps from `initial`, reporting every state
    /// (including the initial one as step 0) to `observer`. Returns the
    /// diagnostics series and the final state.
    pub fn run(
        &self,
        initial: &State,
        nsteps: usize,
        observer: &mut dyn FnMut(&StepRecord, &State),
    ) -> Result<(Vec<StepRecord>, State)> {
        if nsteps == 0 {
            return Err(Error::InvalidParameter("nsteps must be at least 1".into()));
        }
        let mut records = Vec::with_capacity(nsteps + 1);
        let rec = self.record(0, initial, initial);
        observer(&rec, initial);
        records.push(rec);
        let mut state = initial.clone();
        for step in 1..=nsteps {
            state = self.step(&state)?;
            let rec = self.record(step, &state, initial);
            observer(&rec, &state);
            records.push(rec);
        }
        Ok((records, state))
    }
}

/// `max_i |x_i - x0_i| / max_i |x0_i|`, or the absolute change when `x0 = 0`.
pub fn relative_drift(x: &[f64], x0: &[f64]) -> f64 {
    let diff = x.iter().zip(x0).fold(0.0f64, |m, (a, b)| m.max(libm::fabs(a - b)));
    let base = norm_inf(x0);
    if base > 0.0 {
        diff / base
    } else {
        diff
    }
}

fn stack_rhs(r_u: &[f64], r_eta: &[f64], p: &ModelParams) -> Vec<f64> {
    let s = p.g / p.dbar;
    r_u.iter().copied().chain(r_eta.iter().map(|r| s * r)).collect()
}

fn split(mut x: Vec<f64>, nu: usize) -> (Vec<f64>, Vec<f64>) {
    let eta = x.split_off(nu);
    (x, eta)
}

/// `[M_u + (dt/2) f C, (dt/2) g G; -(dt/2) g Gᵀ, (g/D) M_η]`: the implicit
/// side of the midpoint rule with the elevation rows scaled by `g / D`, which
/// makes its symmetric part positive definite.
fn full_matrix(ops: &Operators, p: &ModelParams) -> SparseOperator {
    let half = 0.5 * p.dt;
    let nu = ops.mass_u.nrows();
    let n = nu + ops.mass_eta.nrows();
    let mut t = TripletBuilder::with_capacity(n, n, ops.mass_u.nnz() + ops.coriolis.nnz() + 2 * ops.gradient.nnz() + ops.mass_eta.nnz());
    for (i, j, v) in ops.mass_u.triplets() {
        t.push(i, j, v);
    }
    for (i, j, v) in ops.coriolis.triplets() {
        t.push(i, j, half * p.f * v);
    }
    for (i, j, v) in ops.gradient.triplets() {
        t.push(i, nu + j, half * p.g * v);
        t.push(nu + j, i, -half * p.g * v);
    }
    let s = p.g / p.dbar;
    for (i, j, v) in ops.mass_eta.triplets() {
        t.push(nu + i, nu + j, s * v);
    }
    t.build(Symmetry::General)
}

fn build_system(pair: &ElementPair, ops: &Operators, p: &ModelParams, solver: SolverKind) -> Result<StepSystem> {
    let half = 0.5 * p.dt;
    match solver {
        SolverKind::Iterative { tol, max_iter } => {
            let matrix = full_matrix(ops, p);
            let max_iter = max_iter.unwrap_or(10 * matrix.nrows());
            Ok(StepSystem::Iterative { matrix, tol, max_iter })
        }
        SolverKind::Direct if pair.v.continuity() == Continuity::Discontinuous => {
            let a = ops.mass_u.add_scaled(1.0, &ops.coriolis, half * p.f);
            let a_inv = BlockDiagonalInverse::new(&a, crate::assembly::velocity_element_blocks(pair))?;
            let coupling = a_inv.congruence(&ops.gradient);
            let schur = ops.mass_eta.add_scaled(1.0, &coupling, half * half * p.g * p.dbar);
            Ok(StepSystem::Schur {
                a_inv,
                schur: BandedLu::factor(&schur)?,
            })
        }
        SolverKind::Direct => Ok(StepSystem::Full(BandedLu::factor(&full_matrix(ops, p))?)),
    }
}

/// Exact standing-wave solution for `f = 0` on the unit square:
/// `η = cos(πx) cos(πy) cos(ωt)`,
/// `u = (gπ/ω) (sin(πx) cos(πy), cos(πx) sin(πy)) sin(ωt)`, `ω = π sqrt(2 g D)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandingWave {
    pub g: f64,
    pub dbar: f64,
}

impl StandingWave {
    pub fn omega(&self) -> f64 {
        core::f64::consts::PI * libm::sqrt(2.0 * self.g * self.dbar)
    }

    pub fn eta(&self, x: Point, t: f64) -> f64 {
        use core::f64::consts::PI;
        libm::cos(PI * x[0]) * libm::cos(PI * x[1]) * libm::cos(self.omega() * t)
    }

    pub fn u(&self, x: Point, t: f64) -> [f64; 2] {
        use core::f64::consts::PI;
        let w = self.omega();
        let a = self.g * PI / w * libm::sin(w * t);
        [
            a * libm::sin(PI * x[0]) * libm::cos(PI * x[1]),
            a * libm::cos(PI * x[0]) * libm::sin(PI * x[1]),
        ]
    }
}
