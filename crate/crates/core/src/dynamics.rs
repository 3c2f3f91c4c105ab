//! Right-hand sides of the field equations and the RK4 integrator.
//!
//! Every evolution mode is a method-of-lines system on the periodic grid:
//!
//! * canonical:  ∂₀Φ = η⁰[(1+a)P − η³∂₃Φ],  ∂₀P = η⁰[−κ²(1+a)Φ − η³∂₃P]
//! * linear:     ∂₀Φ = η⁰[s·κ(1+a)ZΦ − η³∂₃Φ],  P locked to s·κZΦ
//! * Maxwell:    ∂₀A = E,  ∂₀E = ∂₃²A + source
//!
//! where P = (c/K)Π is the stored reduced momentum and s = ±1 picks case I/II.

use std::f64::consts::PI;

use crate::algebra::{build_a, EtaSet, FourVector, Matrix8, Spinor8, ZStructure};
use crate::error::{DiracError, Result};
use crate::lattice::{kappa_z_phi, second_derivative, spatial_derivative, Case, FieldState, GridSpec, ModeTag, PhysicalParams};
use crate::observables::{self, CurrentKind, DiagnosticsRecord};

/// Static external potential profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExternalProfile {
    /// The same A^α at every site.
    Constant(FourVector),
    /// A^component(x³) = amplitude·sin(2π·mode_number·x³/L).
    StandingSine {
        amplitude: f64,
        mode_number: i64,
        component: usize,
    },
}

impl ExternalProfile {
    pub fn fill(&self, grid: &GridSpec) -> Result<Vec<FourVector>> {
        match *self {
            ExternalProfile::Constant(v) => Ok(vec![v; grid.n_sites]),
            ExternalProfile::StandingSine {
                amplitude,
                mode_number,
                component,
            } => {
                if component >= 4 {
                    return Err(DiracError::IndexOutOfRange {
                        index: component,
                        bound: 4,
                    });
                }
                let k = grid.wavenumber(mode_number);
                Ok((0..grid.n_sites)
                    .map(|i| {
                        let mut v = FourVector::ZERO;
                        v[component] = amplitude * (k * grid.position(i)).sin();
                        v
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvolutionMode {
    /// Canonical equations with A = 0 held fixed.
    Free,
    /// Canonical equations in a static external potential.
    External(ExternalProfile),
    /// Linear case-I/II equations sourcing Maxwell with the reduced current.
    CoupledLinear(Case),
    /// Canonical equations sourcing Maxwell with the general current.
    CoupledNonlinear,
}

impl EvolutionMode {
    pub fn tag(&self) -> ModeTag {
        match self {
            EvolutionMode::Free => ModeTag::Free,
            EvolutionMode::External(_) => ModeTag::External,
            EvolutionMode::CoupledLinear(Case::I) => ModeTag::CoupledLinearI,
            EvolutionMode::CoupledLinear(Case::II) => ModeTag::CoupledLinearII,
            EvolutionMode::CoupledNonlinear => ModeTag::CoupledNonlinear,
        }
    }

    /// Current whose charge the mode conserves.
    pub fn current_kind(&self) -> CurrentKind {
        match self {
            EvolutionMode::CoupledLinear(_) => CurrentKind::Case,
            _ => CurrentKind::General,
        }
    }

    /// Whether the potential evolves under the sourced wave equation.
    pub fn potential(&self) -> Potential {
        match self {
            EvolutionMode::Free | EvolutionMode::External(_) => Potential::Frozen,
            _ => Potential::Dynamic,
        }
    }
}

/// Whether A and E are held fixed or evolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Potential {
    Frozen,
    Dynamic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub d_phi: Vec<Spinor8>,
    pub d_pi: Vec<Spinor8>,
    pub d_a: Vec<FourVector>,
    pub d_e: Vec<FourVector>,
}

impl StateDerivative {
    fn zero_potential(n: usize) -> (Vec<FourVector>, Vec<FourVector>) {
        (vec![FourVector::ZERO; n], vec![FourVector::ZERO; n])
    }

    pub fn is_finite(&self) -> bool {
        self.d_phi.iter().all(Spinor8::is_finite)
            && self.d_pi.iter().all(Spinor8::is_finite)
            && self.d_a.iter().all(FourVector::is_finite)
            && self.d_e.iter().all(FourVector::is_finite)
    }
}

/// (1 + a)v.
#[inline]
pub(crate) fn one_plus_a(a: &Matrix8, v: &Spinor8) -> Spinor8 {
    *v + a.apply(v)
}

pub(crate) fn a_matrices(state: &FieldState, params: &PhysicalParams, eta: &EtaSet) -> Vec<Matrix8> {
    let ek = params.e_over_k();
    state.a.iter().map(|av| build_a(av, ek, eta)).collect()
}

/// Linear case equations: DΦ = s·κ(1+a)ZΦ with s = +1 (case I) or −1 (case II).
/// Case II is evaluated as case I with −Z, so the two agree bit for bit.
pub fn rhs_linear(
    state: &FieldState,
    case: Case,
    potential: Potential,
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
    z: &ZStructure,
) -> Result<StateDerivative> {
    state.check_finite()?;
    let z = match case {
        Case::I => *z,
        Case::II => z.negated(),
    };
    let kappa = params.kappa();
    let e0 = eta.get(0);
    let e3 = eta.get(3);
    let a_mats = a_matrices(state, params, eta);
    let dphi3 = spatial_derivative(&state.phi, grid.dx);
    let mut d_phi = Vec::with_capacity(state.n_sites());
    let mut d_pi = Vec::with_capacity(state.n_sites());
    for i in 0..state.n_sites() {
        let drive = one_plus_a(&a_mats[i], &kappa_z_phi(&z, &state.phi[i], kappa));
        let dp = e0.apply(&(drive - e3.apply(&dphi3[i])));
        d_pi.push(kappa_z_phi(&z, &dp, kappa));
        d_phi.push(dp);
    }
    let (d_a, d_e) = match potential {
        Potential::Frozen => StateDerivative::zero_potential(state.n_sites()),
        Potential::Dynamic => {
            let source = maxwell_source_case(state, params, eta);
            rhs_maxwell(state, &source, grid)
        }
    };
    Ok(StateDerivative { d_phi, d_pi, d_a, d_e })
}

/// General canonical equations for (Φ, P).
pub fn rhs_canonical(
    state: &FieldState,
    potential: Potential,
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
) -> Result<StateDerivative> {
    state.check_finite()?;
    let kappa2 = params.kappa() * params.kappa();
    let e0 = eta.get(0);
    let e3 = eta.get(3);
    let a_mats = a_matrices(state, params, eta);
    let dphi3 = spatial_derivative(&state.phi, grid.dx);
    let dpi3 = spatial_derivative(&state.pi, grid.dx);
    let mut d_phi = Vec::with_capacity(state.n_sites());
    let mut d_pi = Vec::with_capacity(state.n_sites());
    for i in 0..state.n_sites() {
        let a = &a_mats[i];
        d_phi.push(e0.apply(&(one_plus_a(a, &state.pi[i]) - e3.apply(&dphi3[i]))));
        let mass = one_plus_a(a, &state.phi[i]) * (-kappa2);
        d_pi.push(e0.apply(&(mass - e3.apply(&dpi3[i]))));
    }
    let (d_a, d_e) = match potential {
        Potential::Frozen => StateDerivative::zero_potential(state.n_sites()),
        Potential::Dynamic => {
            let source = maxwell_source_general(state, params, eta)?;
            rhs_maxwell(state, &source, grid)
        }
    };
    Ok(StateDerivative { d_phi, d_pi, d_a, d_e })
}

/// ∂₀A = E, ∂₀E = ∂₃²A + source.
pub fn rhs_maxwell(
    state: &FieldState,
    source: &[FourVector],
    grid: &GridSpec,
) -> (Vec<FourVector>, Vec<FourVector>) {
    let lap = second_derivative(&state.a, grid.dx);
    let d_e = lap.iter().zip(source).map(|(l, s)| *l + *s).collect();
    (state.e.clone(), d_e)
}

/// 8πeκ² Φ̄η^αΦ, the source once the momentum is locked to a case.
pub fn maxwell_source_case(state: &FieldState, params: &PhysicalParams, eta: &EtaSet) -> Vec<FourVector> {
    observables::current_case(state, params, eta)
        .into_iter()
        .map(|j| j * (4.0 * PI))
        .collect()
}

/// 4πe[κ²Φ̄η^αΦ + Ψ̄η^αΨ/(1−a²) − 2(e/K)A^α Ψ̄(1−a)Ψ/(1−a²)²] with Ψ = (1+a)P.
pub fn maxwell_source_general(
    state: &FieldState,
    params: &PhysicalParams,
    eta: &EtaSet,
) -> Result<Vec<FourVector>> {
    Ok(observables::current_general(state, params, eta)?
        .into_iter()
        .map(|j| j * (4.0 * PI))
        .collect())
}

/// Mode dispatch for the right-hand side.
pub fn rhs(
    state: &FieldState,
    mode: &EvolutionMode,
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
    z: &ZStructure,
) -> Result<StateDerivative> {
    match mode {
        EvolutionMode::CoupledLinear(case) => rhs_linear(state, *case, Potential::Dynamic, grid, params, eta, z),
        _ => rhs_canonical(state, mode.potential(), grid, params, eta),
    }
}

fn axpy(state: &FieldState, h: f64, k: &StateDerivative) -> FieldState {
    let add_s = |x: &[Spinor8], d: &[Spinor8]| x.iter().zip(d).map(|(x, d)| *x + *d * h).collect();
    let add_v = |x: &[FourVector], d: &[FourVector]| x.iter().zip(d).map(|(x, d)| *x + *d * h).collect();
    FieldState {
        t: state.t + h,
        phi: add_s(&state.phi, &k.d_phi),
        pi: add_s(&state.pi, &k.d_pi),
        a: add_v(&state.a, &k.d_a),
        e: add_v(&state.e, &k.d_e),
        mode: state.mode,
    }
}

/// One classical RK4 step of size `dt` (which may be negative).
pub fn step_rk4_dt(
    state: &FieldState,
    mode: &EvolutionMode,
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
    z: &ZStructure,
    dt: f64,
) -> Result<FieldState> {
    let k1 = rhs(state, mode, grid, params, eta, z)?;
    let k2 = rhs(&axpy(state, 0.5 * dt, &k1), mode, grid, params, eta, z)?;
    let k3 = rhs(&axpy(state, 0.5 * dt, &k2), mode, grid, params, eta, z)?;
    let k4 = rhs(&axpy(state, dt, &k3), mode, grid, params, eta, z)?;

    let w = dt / 6.0;
    let combine_s = |x: &[Spinor8], a: &[Spinor8], b: &[Spinor8], c: &[Spinor8], d: &[Spinor8]| -> Vec<Spinor8> {
        (0..x.len())
            .map(|i| x[i] + (a[i] + (b[i] + c[i]) * 2.0 + d[i]) * w)
            .collect()
    };
    let combine_v =
        |x: &[FourVector], a: &[FourVector], b: &[FourVector], c: &[FourVector], d: &[FourVector]| -> Vec<FourVector> {
            (0..x.len())
                .map(|i| x[i] + (a[i] + (b[i] + c[i]) * 2.0 + d[i]) * w)
                .collect()
        };
    let next = FieldState {
        t: state.t + dt,
        phi: combine_s(&state.phi, &k1.d_phi, &k2.d_phi, &k3.d_phi, &k4.d_phi),
        pi: combine_s(&state.pi, &k1.d_pi, &k2.d_pi, &k3.d_pi, &k4.d_pi),
        a: combine_v(&state.a, &k1.d_a, &k2.d_a, &k3.d_a, &k4.d_a),
        e: combine_v(&state.e, &k1.d_e, &k2.d_e, &k3.d_e, &k4.d_e),
        mode: mode.tag(),
    };
    next.check_finite()?;
    Ok(next)
}

/// One RK4 step of the grid's `dt`.
pub fn step_rk4(
    state: &FieldState,
    mode: &EvolutionMode,
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
    z: &ZStructure,
) -> Result<FieldState> {
    step_rk4_dt(state, mode, grid, params, eta, z, grid.dt)
}

/// Diagnostics at `state`, using one step back and one step forward for the
/// continuity residual.
pub fn sample_diagnostics(
    state: &FieldState,
    mode: &EvolutionMode,
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
    z: &ZStructure,
) -> Result<DiagnosticsRecord> {
    let prev = step_rk4_dt(state, mode, grid, params, eta, z, -grid.dt)?;
    let next = step_rk4_dt(state, mode, grid, params, eta, z, grid.dt)?;
    observables::diagnostics_record(state, [&prev, &next], mode.current_kind(), grid, params, eta, z)
}

/// Runs `n_steps` RK4 steps, sampling diagnostics at step 0 and every
/// `sample_every` steps.
#[allow(clippy::too_many_arguments)]
pub fn evolve(
    state: &FieldState,
    mode: &EvolutionMode,
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
    z: &ZStructure,
    n_steps: usize,
    sample_every: usize,
) -> Result<(FieldState, Vec<DiagnosticsRecord>)> {
    if n_steps == 0 {
        return Err(DiracError::Validation("n_steps must be at least 1".into()));
    }
    if sample_every == 0 {
        return Err(DiracError::Validation("sample_every must be at least 1".into()));
    }
    let mut current = state.clone();
    current.mode = mode.tag();
    let mut records = vec![sample_diagnostics(&current, mode, grid, params, eta, z)?];
    for step in 1..=n_steps {
        current = step_rk4(&current, mode, grid, params, eta, z).map_err(|e| match e {
            DiracError::NonFinite { site, .. } => DiracError::NonFinite { site, step: Some(step) },
            other => other,
        })?;
        if step % sample_every == 0 {
            records.push(sample_diagnostics(&current, mode, grid, params, eta, z)?);
        }
    }
    Ok((current, records))
}
