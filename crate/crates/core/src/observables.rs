//! Currents, energy and Lagrangian densities, equation residuals and the
//! per-sample diagnostics record.
//!
//! All reductions run sequentially in site order so results are
//! reproducible bit for bit.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::algebra::{bar, build_a, a_squared_scalar, EtaSet, FourVector, Matrix8, Spinor8, ZStructure};
use crate::dynamics::{self, one_plus_a, Potential};
use crate::error::{DiracError, Result};
use crate::lattice::{spatial_derivative, xy_transform, Case, FieldState, GridSpec, PhysicalParams};

/// |1 − a²| below this is treated as the interaction singularity.
pub const SINGULARITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurrentKind {
    /// 2ceκ² Φ̄η^αΦ, valid once the momentum is locked to case I or II.
    Case,
    /// The full current built from Φ, Ψ and A.
    General,
}

/// 1 − a² at a site, or the singularity error.
fn regular_denominator(a_vec: &FourVector, params: &PhysicalParams, site: usize) -> Result<f64> {
    let a2 = a_squared_scalar(a_vec, params.e_over_k());
    let denom = 1.0 - a2;
    if denom.abs() < SINGULARITY_TOL {
        return Err(DiracError::Singular { site, a_squared: a2 });
    }
    Ok(denom)
}

/// Φ̄η^αΦ for α = 0..3.
fn bilinear_vector(s: &Spinor8, eta: &EtaSet) -> FourVector {
    let sb = bar(s, eta);
    FourVector(std::array::from_fn(|alpha| sb.dot(&eta.get(alpha).apply(s))))
}

pub fn current_case(state: &FieldState, params: &PhysicalParams, eta: &EtaSet) -> Vec<FourVector> {
    let coeff = 2.0 * params.e() * params.kappa() * params.kappa();
    state.phi.iter().map(|phi| bilinear_vector(phi, eta) * coeff).collect()
}

/// Ψ = (1 + a)(c/K)Π at every site.
pub fn psi_from_momentum(state: &FieldState, params: &PhysicalParams, eta: &EtaSet) -> Vec<Spinor8> {
    dynamics::a_matrices(state, params, eta)
        .iter()
        .zip(&state.pi)
        .map(|(a, p)| one_plus_a(a, p))
        .collect()
}

pub fn current_general(state: &FieldState, params: &PhysicalParams, eta: &EtaSet) -> Result<Vec<FourVector>> {
    let e = params.e();
    let ek = params.e_over_k();
    let kappa2 = params.kappa() * params.kappa();
    let mut out = Vec::with_capacity(state.n_sites());
    for i in 0..state.n_sites() {
        let av = &state.a[i];
        let denom = regular_denominator(av, params, i)?;
        let a = build_a(av, ek, eta);
        let psi = one_plus_a(&a, &state.pi[i]);
        let phi_term = bilinear_vector(&state.phi[i], eta) * kappa2;
        let psi_term = bilinear_vector(&psi, eta) * (1.0 / denom);
        let psi_bar = bar(&psi, eta);
        let scalar = psi_bar.dot(&(psi - a.apply(&psi))) / (denom * denom);
        let a_term = *av * (2.0 * ek * scalar);
        out.push((phi_term + psi_term - a_term) * e);
    }
    Ok(out)
}

pub fn current(state: &FieldState, kind: CurrentKind, params: &PhysicalParams, eta: &EtaSet) -> Result<Vec<FourVector>> {
    match kind {
        CurrentKind::Case => Ok(current_case(state, params, eta)),
        CurrentKind::General => current_general(state, params, eta),
    }
}

/// Q = Σ j⁰ dx.
pub fn charge(
    state: &FieldState,
    kind: CurrentKind,
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
) -> Result<f64> {
    Ok(current(state, kind, params, eta)?.iter().map(|j| j[0]).sum::<f64>() * grid.dx)
}

/// H = (c²/K)Π̄(1+a)Π − cΠ̄η³∂₃Φ − c∂₃Φ̄η³Π + Kκ²Φ̄(1+a)Φ per site.
pub fn hamiltonian_density(state: &FieldState, grid: &GridSpec, params: &PhysicalParams, eta: &EtaSet) -> Vec<f64> {
    let k_energy = params.k_energy();
    let kappa2 = params.kappa() * params.kappa();
    let e3 = eta.get(3);
    let a_mats = dynamics::a_matrices(state, params, eta);
    let dphi3 = spatial_derivative(&state.phi, grid.dx);
    (0..state.n_sites())
        .map(|i| {
            let a = &a_mats[i];
            let momentum = state.momentum(i, params);
            let momentum_bar = bar(&momentum, eta);
            let kinetic = momentum_bar.dot(&one_plus_a(a, &momentum)) / k_energy;
            let gradient_1 = momentum_bar.dot(&e3.apply(&dphi3[i]));
            let gradient_2 = bar(&dphi3[i], eta).dot(&e3.apply(&momentum));
            let mass = k_energy * kappa2 * bar(&state.phi[i], eta).dot(&one_plus_a(a, &state.phi[i]));
            kinetic - gradient_1 - gradient_2 + mass
        })
        .collect()
}

/// K[Ψ̄(1−a)Ψ/(1−a²) − κ²Φ̄(1+a)Φ] per site.
pub fn lagrangian_di_density(state: &FieldState, params: &PhysicalParams, eta: &EtaSet) -> Result<Vec<f64>> {
    let k_energy = params.k_energy();
    let kappa2 = params.kappa() * params.kappa();
    let ek = params.e_over_k();
    (0..state.n_sites())
        .map(|i| {
            let denom = regular_denominator(&state.a[i], params, i)?;
            let a = build_a(&state.a[i], ek, eta);
            let psi = one_plus_a(&a, &state.pi[i]);
            let kinetic = bar(&psi, eta).dot(&(psi - a.apply(&psi))) / denom;
            let mass = kappa2 * bar(&state.phi[i], eta).dot(&one_plus_a(&a, &state.phi[i]));
            Ok(k_energy * (kinetic - mass))
        })
        .collect()
}

/// (1/8π)(−½F_{μν}F^{μν}) with only ∂₀ and ∂₃ nonzero:
/// (E¹)² + (E²)² + (E³ + ∂₃A⁰)² − (∂₃A¹)² − (∂₃A²)², over 8π.
pub fn lagrangian_em_density(state: &FieldState, grid: &GridSpec) -> Vec<f64> {
    let da = spatial_derivative(&state.a, grid.dx);
    state
        .e
        .iter()
        .zip(&da)
        .map(|(e, d)| {
            let f03 = e[3] + d[0];
            (e[1] * e[1] + e[2] * e[2] + f03 * f03 - d[1] * d[1] - d[2] * d[2]) / (8.0 * PI)
        })
        .collect()
}

/// max |E⁰ + ∂₃A³|.
pub fn gauge_residual(state: &FieldState, grid: &GridSpec) -> f64 {
    let da = spatial_derivative(&state.a, grid.dx);
    state
        .e
        .iter()
        .zip(&da)
        .map(|(e, d)| (e[0] + d[3]).abs())
        .fold(0.0, f64::max)
}

/// max over sites of |∂₀j⁰ + ∂₃j³| at the middle of three equally spaced
/// current samples.
pub fn continuity_residual(window: [&[FourVector]; 3], grid: &GridSpec, dt: f64) -> f64 {
    let dj3 = spatial_derivative(window[1], grid.dx);
    (0..window[1].len())
        .map(|i| ((window[2][i][0] - window[0][i][0]) / (2.0 * dt) + dj3[i][3]).abs())
        .fold(0.0, f64::max)
}

/// ∂₀Φ from the canonical equation, the default time derivative for the
/// case-equation residuals.
pub fn canonical_phi_rate(
    state: &FieldState,
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
) -> Result<Vec<Spinor8>> {
    Ok(dynamics::rhs_canonical(state, Potential::Frozen, grid, params, eta)?.d_phi)
}

/// Residual fields of DΦ − sκ(1+a)ZΦ = 0 and DZΦ + sκ(1+a)Φ = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseResiduals {
    pub phi_equation: Vec<Spinor8>,
    pub zphi_equation: Vec<Spinor8>,
    pub r_phi: f64,
    pub r_zphi: f64,
}

/// Residuals of the case-I (s = +1) or case-II (s = −1) equations given ∂₀Φ.
/// ∂₀(ZΦ) is taken as Z∂₀Φ and ∂₃(ZΦ) by the stencil applied to ZΦ.
pub fn residual_case_equations(
    state: &FieldState,
    phi_rate: &[Spinor8],
    z: &ZStructure,
    case: Case,
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
) -> CaseResiduals {
    let s = case.sign();
    let kappa = params.kappa();
    let e0 = eta.get(0);
    let e3 = eta.get(3);
    let a_mats = dynamics::a_matrices(state, params, eta);
    let zphi: Vec<Spinor8> = state.phi.iter().map(|p| z.apply(p)).collect();
    let dphi3 = spatial_derivative(&state.phi, grid.dx);
    let dzphi3 = spatial_derivative(&zphi, grid.dx);
    let mut phi_equation = Vec::with_capacity(state.n_sites());
    let mut zphi_equation = Vec::with_capacity(state.n_sites());
    for i in 0..state.n_sites() {
        let a = &a_mats[i];
        let d_phi = e0.apply(&phi_rate[i]) + e3.apply(&dphi3[i]);
        phi_equation.push(d_phi - one_plus_a(a, &zphi[i]) * (s * kappa));
        let d_zphi = e0.apply(&z.apply(&phi_rate[i])) + e3.apply(&dzphi3[i]);
        zphi_equation.push(d_zphi + one_plus_a(a, &state.phi[i]) * (s * kappa));
    }
    let max = |f: &[Spinor8]| f.iter().map(Spinor8::max_abs).fold(0.0, f64::max);
    CaseResiduals {
        r_phi: max(&phi_equation),
        r_zphi: max(&zphi_equation),
        phi_equation,
        zphi_equation,
    }
}

/// Residual of the Lagrange equation for Φ,
/// D[(1−a)/(1−a²)·DΦ] + κ²(1+a)Φ, at the middle of three states spaced by
/// `h` in time. Time derivatives are centered differences; spatial ones use
/// the fourth-order stencil.
pub fn residual_lagrange_phi(
    window: [&FieldState; 3],
    h: f64,
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
) -> Result<f64> {
    let [s0, s1, s2] = window;
    let n = s1.n_sites();
    let kappa2 = params.kappa() * params.kappa();
    let ek = params.e_over_k();
    let e0 = eta.get(0);
    let e3 = eta.get(3);

    let inverse_factor = |s: &FieldState| -> Result<Vec<Matrix8>> {
        (0..n)
            .map(|i| {
                let denom = regular_denominator(&s.a[i], params, i)?;
                let a = build_a(&s.a[i], ek, eta);
                Ok((Matrix8::identity() - a) * (1.0 / denom))
            })
            .collect()
    };
    let m0 = inverse_factor(s0)?;
    let m1 = inverse_factor(s1)?;
    let m2 = inverse_factor(s2)?;
    let dm3 = spatial_derivative(&m1, grid.dx);

    let d3_0 = spatial_derivative(&s0.phi, grid.dx);
    let d3_1 = spatial_derivative(&s1.phi, grid.dx);
    let d3_2 = spatial_derivative(&s2.phi, grid.dx);
    let d33 = spatial_derivative(&d3_1, grid.dx);

    let mut worst = 0.0f64;
    for i in 0..n {
        let phi_t = (s2.phi[i] - s0.phi[i]) * (0.5 / h);
        let phi_tt = (s2.phi[i] - s1.phi[i] * 2.0 + s0.phi[i]) * (1.0 / (h * h));
        let phi_t3 = (d3_2[i] - d3_0[i]) * (0.5 / h);

        let psi = e0.apply(&phi_t) + e3.apply(&d3_1[i]);
        let psi_t = e0.apply(&phi_tt) + e3.apply(&phi_t3);
        let psi_3 = e0.apply(&phi_t3) + e3.apply(&d33[i]);

        let dm0 = (m2[i] - m0[i]) * (0.5 / h);
        let b_t = dm0.apply(&psi) + m1[i].apply(&psi_t);
        let b_3 = dm3[i].apply(&psi) + m1[i].apply(&psi_3);

        let a = build_a(&s1.a[i], ek, eta);
        let r = e0.apply(&b_t) + e3.apply(&b_3) + one_plus_a(&a, &s1.phi[i]) * kappa2;
        worst = worst.max(r.max_abs());
    }
    Ok(worst)
}

/// One row of the diagnostics file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub q: f64,
    pub h_total: f64,
    pub l_di_total: f64,
    pub l_em_total: f64,
    pub gauge_norm: f64,
    pub x_norm: f64,
    pub y_norm: f64,
    pub continuity_norm: f64,
}

pub const DIAGNOSTICS_HEADER: &str = "t,Q,H_total,L_DI_total,L_em_total,gauge_norm,x_norm,y_norm,continuity_norm";

impl DiagnosticsRecord {
    pub fn fields(&self) -> [f64; 9] {
        [
            self.t,
            self.q,
            self.h_total,
            self.l_di_total,
            self.l_em_total,
            self.gauge_norm,
            self.x_norm,
            self.y_norm,
            self.continuity_norm,
        ]
    }

    pub fn csv_line(&self) -> String {
        let mut line = String::new();
        for (k, v) in self.fields().iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            write!(line, "{v:e}").expect("write to String");
        }
        line
    }

    pub fn parse_csv_line(line: &str) -> Result<Self> {
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| DiracError::Validation(format!("bad diagnostics line: {e}")))?;
        if v.len() != 9 {
            return Err(DiracError::Validation(format!("expected 9 columns, got {}", v.len())));
        }
        Ok(DiagnosticsRecord {
            t: v[0],
            q: v[1],
            h_total: v[2],
            l_di_total: v[3],
            l_em_total: v[4],
            gauge_norm: v[5],
            x_norm: v[6],
            y_norm: v[7],
            continuity_norm: v[8],
        })
    }
}

/// Renders records with the header row.
pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

/// Builds the record at `state`; `neighbors` are the states one step before
/// and after, used for the continuity residual.
pub fn diagnostics_record(
    state: &FieldState,
    neighbors: [&FieldState; 2],
    kind: CurrentKind,
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
    z: &ZStructure,
) -> Result<DiagnosticsRecord> {
    let j_prev = current(neighbors[0], kind, params, eta)?;
    let j_mid = current(state, kind, params, eta)?;
    let j_next = current(neighbors[1], kind, params, eta)?;
    let dt = neighbors[1].t - state.t;
    let xy = xy_transform(state, z, params);
    Ok(DiagnosticsRecord {
        t: state.t,
        q: j_mid.iter().map(|j| j[0]).sum::<f64>() * grid.dx,
        h_total: hamiltonian_density(state, grid, params, eta).iter().sum::<f64>() * grid.dx,
        l_di_total: lagrangian_di_density(state, params, eta)?.iter().sum::<f64>() * grid.dx,
        l_em_total: lagrangian_em_density(state, grid).iter().sum::<f64>() * grid.dx,
        gauge_norm: gauge_residual(state, grid),
        x_norm: xy.max_x_norm(),
        y_norm: xy.max_y_norm(),
        continuity_norm: continuity_residual([&j_prev, &j_mid, &j_next], grid, dt),
    })
}
