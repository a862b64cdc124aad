//! Gradient-flow evolution, Newton polishing and linear stability of equilibria.

use std::fmt;

use crate::assembly::{energy, reaction_jacobian, reaction_load, DiscreteOperators};
use crate::error::{check_len, invalid, Error, Result};
use crate::linalg::{largest_eigenpair, symmetric_pencil_eigen, BandLu, CsrMatrix, EnvelopeCholesky, Ordering};
use crate::scalar::{norm2, norm_inf, Real};

/// Relative per-step energy slack.
pub const ENERGY_SLACK: f64 = 1e-10;
/// Allowed overshoot of the invariant box `[−1, 1]`.
pub const BOX_SLACK: f64 = 0.01;
pub const IS_CONSTANT_TOLERANCE: f64 = 1e-6;
/// Largest vertex count handled by the dense stability solve.
pub const DENSE_STABILITY_LIMIT: usize = 1000;
pub const NEWTON_MAX_ITERATIONS: usize = 100;

/// `min(0.1, 0.25/λ)`.
pub fn default_dt<T: Real>(lambda: T) -> T {
    T::lit(0.1).min(T::lit(0.25) / lambda)
}

/// `‖Ku − λF(u)‖₂`.
pub fn stationarity_residual<T: Real>(u: &[T], lambda: T, ops: &DiscreteOperators<T>) -> T {
    norm2(&residual_vector(u, lambda, ops))
}

fn residual_vector<T: Real>(u: &[T], lambda: T, ops: &DiscreteOperators<T>) -> Vec<T> {
    let ku = ops.k.mul_vec(u);
    let f = reaction_load(u, ops);
    ku.iter().zip(&f).map(|(&a, &b)| a - lambda * b).collect()
}

/// Implicit diffusion, explicit boundary reaction: `(M + ΔtK)u⁺ = Mu + ΔtλF(u)`.
pub struct ImexStepper<'a, T: Real> {
    ops: &'a DiscreteOperators<T>,
    lambda: T,
    dt: T,
    system: CsrMatrix<T>,
    factor: EnvelopeCholesky<T>,
    /// Relative residual of the most recent linear solve.
    pub last_solve_residual: T,
}

impl<'a, T: Real> ImexStepper<'a, T> {
    pub fn new(ops: &'a DiscreteOperators<T>, lambda: T, dt: T) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(invalid(format!("dt = {dt} must be positive")));
        }
        let system = CsrMatrix::linear_combination(T::one(), &ops.m, dt, &ops.k);
        let factor = EnvelopeCholesky::factor(&system)
            .map_err(|e| Error::Assembly(format!("M + dt K is not positive definite: {e}")))?;
        Ok(Self { ops, lambda, dt, system, factor, last_solve_residual: T::zero() })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn step(&mut self, u: &[T]) -> Vec<T> {
        let mut rhs = self.ops.m.mul_vec(u);
        let f = reaction_load(u, self.ops);
        let s = self.dt * self.lambda;
        for (r, fi) in rhs.iter_mut().zip(f) {
            *r += s * fi;
        }
        let next = self.factor.solve(&rhs);
        let ax = self.system.mul_vec(&next);
        let res: Vec<T> = ax.iter().zip(&rhs).map(|(&a, &b)| a - b).collect();
        self.last_solve_residual = norm2(&res) / norm2(&rhs).max(T::tiny());
        next
    }
}

pub fn imex_step<T: Real>(u: &[T], dt: T, lambda: T, ops: &DiscreteOperators<T>) -> Result<Vec<T>> {
    check_len(ops.n(), u.len())?;
    Ok(ImexStepper::new(ops, lambda, dt)?.step(u))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveResult<T> {
    pub u: Vec<T>,
    pub steps: usize,
    pub residual: T,
    /// `E(u₀), E(u¹), …`.
    pub energy_trace: Vec<T>,
    pub converged: bool,
    /// Step size in use at the end (smaller than requested after halvings).
    pub dt: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions<T> {
    pub dt: T,
    pub tol: T,
    pub max_steps: usize,
}

/// Fixed-step evolution; fails with [`Error::StepSize`] on an energy increase
/// or a box violation.
pub fn evolve<T: Real>(u0: &[T], lambda: T, opts: EvolveOptions<T>, ops: &DiscreteOperators<T>) -> Result<EvolveResult<T>> {
    check_len(ops.n(), u0.len())?;
    let mut stepper = ImexStepper::new(ops, lambda, opts.dt)?;
    let mut state = EvolveState::new(u0, lambda, ops)?;
    while state.steps < opts.max_steps {
        let next = stepper.step(&state.u);
        state.check_box(&next)?;
        let e = state.check_energy(&next, lambda, ops)?;
        if state.accept(next, e, opts) {
            break;
        }
    }
    Ok(state.finish(lambda, ops, opts.dt))
}

/// Like [`evolve`], but halves `Δt` (up to 20 times) and retries the step
/// whenever it would be rejected. With a consistent mass matrix small steps
/// do not restore the maximum principle for rough data, so box violations
/// can persist.
pub fn evolve_adaptive<T: Real>(
    u0: &[T],
    lambda: T,
    opts: EvolveOptions<T>,
    ops: &DiscreteOperators<T>,
) -> Result<EvolveResult<T>> {
    check_len(ops.n(), u0.len())?;
    let mut dt = opts.dt;
    let mut stepper = ImexStepper::new(ops, lambda, dt)?;
    let mut state = EvolveState::new(u0, lambda, ops)?;
    let mut halvings = 0;
    while state.steps < opts.max_steps {
        let next = stepper.step(&state.u);
        match state.check_box(&next).and_then(|_| state.check_energy(&next, lambda, ops)) {
            Ok(e) => {
                if state.accept(next, e, EvolveOptions { dt, ..opts }) {
                    break;
                }
            }
            Err(Error::StepSize { .. }) if halvings < 20 => {
                halvings += 1;
                dt *= T::lit(0.5);
                stepper = ImexStepper::new(ops, lambda, dt)?;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(state.finish(lambda, ops, dt))
}

/// Implicit Euler continuation toward a steady state. Each step solves
/// `M(v − u)/τ + Kv − λF(v) = 0` by Newton and doubles `τ` on success; a step
/// whose inner solve stalls or whose energy rises is retried at `τ/4`.
/// Reaches weakly stable equilibria (slowly drifting fronts) in a few dozen
/// steps where explicit-reaction stepping needs ~1/σ time units.
/// `converged` reports `‖Ku − λF(u)‖ < tol`.
pub fn relax_implicit<T: Real>(
    u0: &[T],
    lambda: T,
    tau0: T,
    tol: T,
    max_steps: usize,
    ops: &DiscreteOperators<T>,
) -> Result<EvolveResult<T>> {
    if !(tau0 > T::zero()) {
        return Err(invalid("initial pseudo time step must be positive"));
    }
    let mut state = EvolveState::new(u0, lambda, ops)?;
    let ordering = Ordering::rcm(&ops.k);
    let mut tau = tau0;
    let mut residual = stationarity_residual(&state.u, lambda, ops);
    let mut attempts = 0;
    while residual >= tol && state.steps < max_steps && attempts < 4 * max_steps {
        attempts += 1;
        let stepped = implicit_euler_step(&state.u, lambda, tau, &ordering, ops)?;
        let accepted = match stepped {
            Some(v) => state.check_energy(&v, lambda, ops).ok().map(|e| (v, e)),
            None => None,
        };
        match accepted {
            Some((v, e)) => {
                state.u = v;
                state.energy = e;
                state.trace.push(e);
                state.steps += 1;
                residual = stationarity_residual(&state.u, lambda, ops);
                tau *= T::lit(2.0);
            }
            None => {
                tau *= T::lit(0.25);
                if tau < tau0 * T::lit(1e-6) {
                    break;
                }
            }
        }
    }
    state.converged = residual < tol;
    Ok(state.finish(lambda, ops, tau))
}

fn implicit_euler_step<T: Real>(
    u: &[T],
    lambda: T,
    tau: T,
    ordering: &Ordering,
    ops: &DiscreteOperators<T>,
) -> Result<Option<Vec<T>>> {
    let mu = ops.m.mul_vec(u);
    let inv_tau = T::one() / tau;
    let scale = norm2(&residual_vector(u, lambda, ops)).max(T::one());
    let tol = T::lit(1e-13) * scale;
    let mut v = u.to_vec();
    for _ in 0..12 {
        let mv = ops.m.mul_vec(&v);
        let g: Vec<T> = residual_vector(&v, lambda, ops)
            .iter()
            .zip(mv.iter().zip(&mu))
            .map(|(&r, (&a, &b))| (a - b) * inv_tau + r)
            .collect();
        let gn = norm2(&g);
        if !gn.is_finite() {
            return Ok(None);
        }
        if gn < tol {
            return Ok(Some(v));
        }
        let jb = reaction_jacobian(&v, ops);
        let jac = CsrMatrix::linear_combination(T::one(), &ops.k, -lambda, &jb);
        let system = CsrMatrix::linear_combination(inv_tau, &ops.m, T::one(), &jac);
        let lu = match BandLu::factor_with(&system, ordering.clone()) {
            Ok(lu) => lu,
            Err(Error::Singular(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let s = lu.solve(&g);
        v.iter_mut().zip(&s).for_each(|(x, &d)| *x -= d);
    }
    Ok(None)
}

/// Result of [`settle`]: flow, continuation, then Newton polish.
#[derive(Clone, Debug, PartialEq)]
pub struct Settled<T> {
    pub u: Vec<T>,
    pub residual: T,
    pub flow_steps: usize,
    pub relax_steps: usize,
    pub newton_iterations: usize,
    /// Energy after every accepted flow and continuation step.
    pub energy_trace: Vec<T>,
}

/// Drives `u0` to an equilibrium: adaptive IMEX flow to `opts.tol`, then
/// Newton to `polish_tol`. When the flow stalls or Newton fails from its end
/// state, implicit continuation runs first.
pub fn settle<T: Real>(
    u0: &[T],
    lambda: T,
    opts: EvolveOptions<T>,
    polish_tol: T,
    ops: &DiscreteOperators<T>,
) -> Result<Settled<T>> {
    let flow = evolve_adaptive(u0, lambda, opts, ops)?;
    let mut trace = flow.energy_trace;
    let mut relax_steps = 0;
    let direct = if flow.converged { newton_stationary(&flow.u, lambda, polish_tol, ops).ok() } else { None };
    let polished = match direct {
        Some(p) => p,
        None => {
            let relaxed = relax_implicit(&flow.u, lambda, flow.dt.max(T::one()), T::lit(1e-8), 200, ops)?;
            relax_steps = relaxed.steps;
            trace.extend_from_slice(&relaxed.energy_trace[1..]);
            newton_stationary(&relaxed.u, lambda, polish_tol, ops)?
        }
    };
    Ok(Settled {
        u: polished.u,
        residual: polished.residual,
        flow_steps: flow.steps,
        relax_steps,
        newton_iterations: polished.iterations,
        energy_trace: trace,
    })
}

struct EvolveState<T> {
    u: Vec<T>,
    energy: T,
    trace: Vec<T>,
    steps: usize,
    boxed: bool,
    converged: bool,
}

impl<T: Real> EvolveState<T> {
    fn new(u0: &[T], lambda: T, ops: &DiscreteOperators<T>) -> Result<Self> {
        if u0.iter().any(|v| !v.is_finite()) {
            return Err(invalid("initial field is not finite"));
        }
        let e = energy(u0, lambda, ops)?;
        let boxed = u0.iter().all(|v| v.abs() <= T::one());
        Ok(Self { u: u0.to_vec(), energy: e, trace: vec![e], steps: 0, boxed, converged: false })
    }

    fn check_box(&self, next: &[T]) -> Result<()> {
        if self.boxed {
            let peak = norm_inf(next);
            if !(peak <= T::one() + T::lit(BOX_SLACK)) {
                return Err(Error::StepSize {
                    step: self.steps + 1,
                    detail: format!("|u| reached {peak}, leaving the invariant box"),
                });
            }
        }
        Ok(())
    }

    fn check_energy(&self, next: &[T], lambda: T, ops: &DiscreteOperators<T>) -> Result<T> {
        let e = energy(next, lambda, ops)?;
        let slack = T::lit(ENERGY_SLACK) * self.energy.abs().max(T::tiny());
        if !(e <= self.energy + slack) {
            return Err(Error::StepSize { step: self.steps + 1, detail: format!("energy rose from {} to {e}", self.energy) });
        }
        Ok(e)
    }

    /// Returns true once stationary.
    fn accept(&mut self, next: Vec<T>, e: T, opts: EvolveOptions<T>) -> bool {
        let change = self.u.iter().zip(&next).fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        let scale = T::one() + norm_inf(&next);
        self.u = next;
        self.energy = e;
        self.trace.push(e);
        self.steps += 1;
        self.converged = change / opts.dt < opts.tol * scale;
        self.converged
    }

    fn finish(self, lambda: T, ops: &DiscreteOperators<T>, dt: T) -> EvolveResult<T> {
        let residual = stationarity_residual(&self.u, lambda, ops);
        EvolveResult {
            u: self.u,
            steps: self.steps,
            residual,
            energy_trace: self.trace,
            converged: self.converged,
            dt,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOutcome<T> {
    pub u: Vec<T>,
    pub iterations: usize,
    pub residual: T,
    /// Diagonal regularizations applied along the way.
    pub regularized_solves: usize,
}

/// Newton failure carrying the last iterate.
#[derive(Debug)]
pub struct NewtonFailure<T> {
    pub last: Vec<T>,
    pub residual: T,
    pub error: Error,
}

impl<T: Real> fmt::Display for NewtonFailure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl<T: Real> std::error::Error for NewtonFailure<T> {}

impl<T> From<NewtonFailure<T>> for Error {
    fn from(f: NewtonFailure<T>) -> Self {
        f.error
    }
}

/// Damped Newton on `Ku = λF(u)` with Jacobian `K − λJ_F(u)`.
pub fn newton_stationary<T: Real>(
    u0: &[T],
    lambda: T,
    tol: T,
    ops: &DiscreteOperators<T>,
) -> std::result::Result<NewtonOutcome<T>, NewtonFailure<T>> {
    let fail = |last: Vec<T>, residual: T, error: Error| NewtonFailure { last, residual, error };
    if let Err(e) = check_len(ops.n(), u0.len()) {
        return Err(fail(u0.to_vec(), T::lit(f64::NAN), e));
    }
    let ordering = Ordering::rcm(&ops.k);
    let mut u = u0.to_vec();
    let mut r = residual_vector(&u, lambda, ops);
    let mut rn = norm2(&r);
    let mut regularized = 0;
    for it in 0..NEWTON_MAX_ITERATIONS {
        if rn < tol {
            return Ok(NewtonOutcome { u, iterations: it, residual: rn, regularized_solves: regularized });
        }
        let jb = reaction_jacobian(&u, ops);
        let jac = CsrMatrix::linear_combination(T::one(), &ops.k, -lambda, &jb);
        let lu = match BandLu::factor_with(&jac, ordering.clone()) {
            Ok(lu) => lu,
            Err(Error::Singular(_)) => {
                let scale = jac.diagonal().iter().fold(T::zero(), |s, d| s + d.abs()) / T::from_usize_lossy(ops.n());
                regularized += 1;
                match BandLu::factor_with(&jac.shift_diagonal(T::lit(1e-12) * scale), ordering.clone()) {
                    Ok(lu) => lu,
                    Err(e) => return Err(fail(u, rn, e)),
                }
            }
            Err(e) => return Err(fail(u, rn, e)),
        };
        let step = lu.solve(&r);
        let mut alpha = T::one();
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<T> = u.iter().zip(&step).map(|(&x, &s)| x - alpha * s).collect();
            let rt = residual_vector(&trial, lambda, ops);
            let rtn = norm2(&rt);
            if rtn < rn {
                accepted = Some((trial, rt, rtn));
                break;
            }
            alpha *= T::lit(0.5);
        }
        match accepted {
            Some((trial, rt, rtn)) => {
                u = trial;
                r = rt;
                rn = rtn;
            }
            None => {
                // stagnation at round-off level counts as converged
                if rn < tol {
                    break;
                }
                return Err(fail(
                    u,
                    rn,
                    Error::NonConvergence { iterations: it + 1, residual: rn.as_f64() },
                ));
            }
        }
    }
    if rn < tol {
        return Ok(NewtonOutcome { u, iterations: NEWTON_MAX_ITERATIONS, residual: rn, regularized_solves: regularized });
    }
    Err(fail(u, rn, Error::NonConvergence { iterations: NEWTON_MAX_ITERATIONS, residual: rn.as_f64() }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StabilityMethod {
    Dense,
    ShiftInvertLanczos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport<T> {
    pub sigma_max: T,
    pub classification: Stability,
    pub is_constant: bool,
    /// `‖Aψ − σMψ‖ / ‖Aψ‖` for the top pair.
    pub residual: T,
    pub eps_stab: T,
    pub method: StabilityMethod,
    /// Stationarity defect of the input; above `1e−8` the report is advisory.
    pub stationarity_residual: T,
    pub eigenvector: Vec<T>,
}

/// `1e−8·max(1, λ)`.
pub fn stability_epsilon<T: Real>(lambda: T) -> T {
    T::lit(1e-8) * lambda.max(T::one())
}

pub fn is_constant<T: Real>(u: &[T]) -> bool {
    let mean = u.iter().fold(T::zero(), |s, &x| s + x) / T::from_usize_lossy(u.len().max(1));
    u.iter().all(|&x| (x - mean).abs() <= T::lit(IS_CONSTANT_TOLERANCE))
}

/// Top of the spectrum of `σMψ = (−K + λJ_F(u))ψ`.
pub fn stability_spectrum<T: Real>(u: &[T], lambda: T, ops: &DiscreteOperators<T>) -> Result<StabilityReport<T>> {
    check_len(ops.n(), u.len())?;
    let jb = reaction_jacobian(u, ops);
    let a = CsrMatrix::linear_combination(-T::one(), &ops.k, lambda, &jb);
    let n = ops.n();
    let (sigma_max, vector, method) = if n <= DENSE_STABILITY_LIMIT {
        let eig = symmetric_pencil_eigen(&a.to_dense(), &ops.m.to_dense())?;
        let v: Vec<T> = eig.vectors.column(n - 1).iter().copied().collect();
        (eig.values[n - 1], v, StabilityMethod::Dense)
    } else {
        let shift = lambda * ops.perimeter / ops.area;
        let top = largest_eigenpair(&a, &ops.m, shift, T::lit(1e-10))?;
        (top.value, top.vector, StabilityMethod::ShiftInvertLanczos)
    };
    let av = a.mul_vec(&vector);
    let mv = ops.m.mul_vec(&vector);
    let r: Vec<T> = av.iter().zip(&mv).map(|(&x, &y)| x - sigma_max * y).collect();
    let residual = norm2(&r) / norm2(&av).max(T::tiny());
    let eps_stab = stability_epsilon(lambda);
    let classification = if sigma_max < -eps_stab {
        Stability::Stable
    } else if sigma_max > eps_stab {
        Stability::Unstable
    } else {
        Stability::Marginal
    };
    Ok(StabilityReport {
        sigma_max,
        classification,
        is_constant: is_constant(u),
        residual,
        eps_stab,
        method,
        stationarity_residual: stationarity_residual(u, lambda, ops),
        eigenvector: vector,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EquilibriumClass {
    ConstantStable,
    Pattern,
    UnstableEquilibrium,
    Marginal,
}

impl EquilibriumClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EquilibriumClass::ConstantStable => "constant_stable",
            EquilibriumClass::Pattern => "pattern",
            EquilibriumClass::UnstableEquilibrium => "unstable_equilibrium",
            EquilibriumClass::Marginal => "marginal",
        }
    }
}

impl fmt::Display for EquilibriumClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn classify<T: Real>(report: &StabilityReport<T>) -> EquilibriumClass {
    match (report.classification, report.is_constant) {
        (Stability::Stable, true) => EquilibriumClass::ConstantStable,
        (Stability::Stable, false) => EquilibriumClass::Pattern,
        (Stability::Unstable, _) => EquilibriumClass::UnstableEquilibrium,
        (Stability::Marginal, _) => EquilibriumClass::Marginal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::geometry::DomainSpec;
    use crate::meshing::mesh_domain;

    fn disk(h: f64) -> DiscreteOperators<f64> {
        assemble(&mesh_domain(&DomainSpec::disk(1.0), h).unwrap().1).unwrap()
    }

    #[test]
    fn constant_equilibria_are_preserved() {
        let ops = disk(0.2);
        let n = ops.n();
        for c in [1.0, 0.0, -1.0] {
            let next = imex_step(&vec![c; n], 0.1, 2.0, &ops).unwrap();
            assert!(next.iter().all(|v| (v - c).abs() < 1e-13));
        }
    }

    #[test]
    fn small_constant_grows() {
        let ops = disk(0.2);
        let n = ops.n();
        let u = vec![0.05; n];
        let next = imex_step(&u, 0.1, 1.0, &ops).unwrap();
        let b1 = ops.b.mul_vec(&vec![1.0; n]);
        let mean = |v: &[f64]| v.iter().zip(&b1).map(|(a, b)| a * b).sum::<f64>();
        assert!(mean(&next) > mean(&u));
    }

    #[test]
    fn ones_converge_immediately() {
        let ops = disk(0.2);
        let n = ops.n();
        let opts = EvolveOptions { dt: 0.1, tol: 1e-6, max_steps: 10 };
        let res = evolve(&vec![1.0; n], 3.0, opts, &ops).unwrap();
        assert!(res.converged && res.steps == 1 && res.residual < 1e-12);
        let newton = newton_stationary(&vec![1.0; n], 3.0, 1e-10, &ops).unwrap();
        assert_eq!(newton.iterations, 0);
        let zero = newton_stationary(&vec![0.0; n], 3.0, 1e-10, &ops).unwrap();
        assert!(zero.u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn disk_small_constant_flows_to_one() {
        let ops = disk(0.2);
        let n = ops.n();
        let opts = EvolveOptions { dt: default_dt(1.0), tol: 1e-6, max_steps: 20_000 };
        let res = evolve(&vec![0.1; n], 1.0, opts, &ops).unwrap();
        assert!(res.converged);
        assert!(res.u.iter().all(|v| (v - 1.0).abs() < 1e-4));
        assert!(res.energy_trace.windows(2).all(|w| w[1] <= w[0] + 1e-10 * w[0].abs()));
        let polished = newton_stationary(&res.u, 1.0, 1e-10, &ops).unwrap();
        assert!(polished.iterations <= 10);
        let rep = stability_spectrum(&polished.u, 1.0, &ops).unwrap();
        assert_eq!(classify(&rep), EquilibriumClass::ConstantStable);
    }

    #[test]
    fn analytic_stability_signs() {
        let ops = disk(0.25);
        let n = ops.n();
        let lambda = 2.0;
        let one = stability_spectrum(&vec![1.0; n], lambda, &ops).unwrap();
        assert_eq!(one.classification, Stability::Stable);
        assert!(one.residual < 1e-8);
        let minus = stability_spectrum(&vec![-1.0; n], lambda, &ops).unwrap();
        assert!((minus.sigma_max - one.sigma_max).abs() < 1e-12 * one.sigma_max.abs());
        let zero = stability_spectrum(&vec![0.0; n], lambda, &ops).unwrap();
        assert_eq!(classify(&zero), EquilibriumClass::UnstableEquilibrium);
        assert!(zero.sigma_max >= lambda * ops.perimeter / ops.area * (1.0 - 1e-12));
    }

    #[test]
    fn lanczos_route_matches_dense() {
        let ops = disk(0.05);
        assert!(ops.n() > DENSE_STABILITY_LIMIT);
        let n = ops.n();
        let rep = stability_spectrum(&vec![1.0; n], 1.5, &ops).unwrap();
        assert_eq!(rep.method, StabilityMethod::ShiftInvertLanczos);
        assert!(rep.residual < 1e-8, "{}", rep.residual);
        let zero = stability_spectrum(&vec![0.0; n], 1.5, &ops).unwrap();
        assert!(zero.sigma_max >= 1.5 * ops.perimeter / ops.area * (1.0 - 1e-10));
    }

    #[test]
    fn odd_symmetry_of_the_flow() {
        let ops = disk(0.2);
        let u0: Vec<f64> = (0..ops.n()).map(|i| ((i as f64) * 0.37).sin() * 0.8).collect();
        let neg: Vec<f64> = u0.iter().map(|v| -v).collect();
        let opts = EvolveOptions { dt: 0.05, tol: 1e-6, max_steps: 200 };
        let a = evolve(&u0, 1.0, opts, &ops).unwrap();
        let b = evolve(&neg, 1.0, opts, &ops).unwrap();
        assert!(a.u.iter().zip(&b.u).all(|(x, y)| (x + y).abs() < 1e-10));
    }

    #[test]
    fn energy_increase_is_a_step_size_error() {
        let ops = disk(0.2);
        let mesh = mesh_domain(&DomainSpec::disk(1.0f64), 0.2).unwrap().1;
        let u0: Vec<f64> = mesh.vertices().iter().map(|p| 0.9 * (2.0 * p.x).sin()).collect();
        let opts = EvolveOptions { dt: 50.0, tol: 1e-12, max_steps: 50 };
        match evolve(&u0, 40.0, opts, &ops) {
            Err(Error::StepSize { .. }) => {}
            other => panic!("expected a step-size error, got {other:?}"),
        }
        let adaptive = evolve_adaptive(&u0, 40.0, opts, &ops).unwrap();
        assert!(adaptive.dt < 50.0);
    }

    #[test]
    fn settle_reaches_drifting_front() {
        let (_, mesh) = mesh_domain(&DomainSpec::stadium(1.0f64, 10.0), 0.25).unwrap();
        let ops = assemble(&mesh).unwrap();
        // front well off centre; the flow alone drifts it at rate ~1e-4
        let u0: Vec<f64> = mesh.vertices().iter().map(|p: &nalgebra::Point2<f64>| 0.9 * (p.x - 2.0).tanh()).collect();
        let opts = EvolveOptions { dt: 0.1, tol: 1e-6, max_steps: 500 };
        let out = settle(&u0, 1.0, opts, 1e-10, &ops).unwrap();
        assert!(out.residual < 1e-10);
        assert!(out.relax_steps > 0);
        assert!(out.energy_trace.windows(2).all(|w| w[1] <= w[0] + 1e-10 * w[0].abs()));
    }
}
