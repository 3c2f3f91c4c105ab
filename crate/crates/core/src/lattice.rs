//! Periodic one-dimensional grid along x³, field states, initial data and
//! the case-I/II constraint maps.
//!
//! Units are natural (c = ħ = 1), so K = κ. The stored momentum is the
//! reduced momentum `(c/K) Π_{Φ+}`; the canonical Π is `K * pi`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::algebra::{plane_wave_mode, EtaSet, FourVector, Spinor8, ZStructure};
use crate::error::{DiracError, Result};

pub const MIN_SITES: usize = 8;
pub const DEFAULT_CFL: f64 = 0.5;
/// Default resolution for the conservation checks. RK4 loses amplitude at
/// a rate ~(ω·dt)⁶/72 per step, so dt is kept well below the CFL bound.
pub const DEFAULT_DX: f64 = 0.1;
pub const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_sites: usize,
    pub dx: f64,
    pub dt: f64,
}

impl GridSpec {
    /// Checks the grid against the CFL guard `dt ≤ cfl_factor · dx`.
    pub fn new(n_sites: usize, dx: f64, dt: f64, cfl_factor: f64) -> Result<Self> {
        if n_sites < MIN_SITES {
            return Err(DiracError::Validation(format!(
                "n_sites must be at least {MIN_SITES}, got {n_sites}"
            )));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(DiracError::Validation(format!("dx must be positive, got {dx}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(DiracError::Validation(format!("dt must be positive, got {dt}")));
        }
        if !(cfl_factor > 0.0 && cfl_factor <= 1.0) {
            return Err(DiracError::Validation(format!(
                "cfl_factor must lie in (0, 1], got {cfl_factor}"
            )));
        }
        if dt > cfl_factor * dx * (1.0 + 1e-12) {
            return Err(DiracError::Validation(format!(
                "dt = {dt} violates the CFL guard dt <= {cfl_factor} * dx = {}",
                cfl_factor * dx
            )));
        }
        Ok(GridSpec { n_sites, dx, dt })
    }

    /// `n_sites` at the default resolution.
    pub fn default_resolution(n_sites: usize) -> Result<Self> {
        GridSpec::new(n_sites, DEFAULT_DX, DEFAULT_DT, DEFAULT_CFL)
    }

    pub fn length(&self) -> f64 {
        self.n_sites as f64 * self.dx
    }

    pub fn position(&self, site: usize) -> f64 {
        site as f64 * self.dx
    }

    /// Wavenumber 2π·m/L of an integer mode.
    pub fn wavenumber(&self, mode_number: i64) -> f64 {
        2.0 * PI * mode_number as f64 / self.length()
    }

    pub fn with_dt(&self, dt: f64) -> GridSpec {
        GridSpec { dt, ..*self }
    }
}

/// κ = mc/ħ, coupling e and energy scale K = mc², with K = κ in natural units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    kappa: f64,
    e: f64,
    k_energy: f64,
}

impl PhysicalParams {
    pub fn new(kappa: f64, e: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(DiracError::Validation(format!("kappa must be positive, got {kappa}")));
        }
        if !e.is_finite() {
            return Err(DiracError::Validation("coupling e must be finite".into()));
        }
        Ok(PhysicalParams {
            kappa,
            e,
            k_energy: kappa,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn e(&self) -> f64 {
        self.e
    }

    /// K = mc².
    pub fn k_energy(&self) -> f64 {
        self.k_energy
    }

    pub fn e_over_k(&self) -> f64 {
        self.e / self.k_energy
    }
}

/// The two linear solution families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    I,
    II,
}

impl Case {
    /// +1 for case I, −1 for case II.
    pub fn sign(self) -> f64 {
        match self {
            Case::I => 1.0,
            Case::II => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeTag {
    #[serde(rename = "free")]
    Free,
    #[serde(rename = "external")]
    External,
    #[serde(rename = "coupled-linear-I")]
    CoupledLinearI,
    #[serde(rename = "coupled-linear-II")]
    CoupledLinearII,
    #[serde(rename = "coupled-nonlinear")]
    CoupledNonlinear,
}

impl fmt::Display for ModeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModeTag::Free => "free",
            ModeTag::External => "external",
            ModeTag::CoupledLinearI => "coupled-linear-I",
            ModeTag::CoupledLinearII => "coupled-linear-II",
            ModeTag::CoupledNonlinear => "coupled-nonlinear",
        };
        f.write_str(s)
    }
}

/// Lattice field configuration at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    /// Φ per site.
    pub phi: Vec<Spinor8>,
    /// Reduced momentum (c/K)Π_{Φ+} per site.
    pub pi: Vec<Spinor8>,
    /// A^α per site.
    pub a: Vec<FourVector>,
    /// ∂₀A^α per site.
    pub e: Vec<FourVector>,
    pub mode: ModeTag,
}

impl FieldState {
    pub fn zeros(n_sites: usize, mode: ModeTag) -> Self {
        FieldState {
            t: 0.0,
            phi: vec![Spinor8::ZERO; n_sites],
            pi: vec![Spinor8::ZERO; n_sites],
            a: vec![FourVector::ZERO; n_sites],
            e: vec![FourVector::ZERO; n_sites],
            mode,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.phi.len()
    }

    /// Canonical momentum Π_{Φ+} = (K/c)·pi at a site.
    pub fn momentum(&self, site: usize, params: &PhysicalParams) -> Spinor8 {
        self.pi[site] * params.k_energy()
    }

    /// First site holding a non-finite value, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        (0..self.n_sites()).find(|&i| {
            !(self.phi[i].is_finite()
                && self.pi[i].is_finite()
                && self.a[i].is_finite()
                && self.e[i].is_finite())
        })
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.first_non_finite() {
            Some(site) => Err(DiracError::NonFinite { site, step: None }),
            None => Ok(()),
        }
    }

    /// Cyclic relabeling: site i of the result is site (i + shift) mod n.
    pub fn rotated(&self, shift: usize) -> FieldState {
        fn rot<T: Clone>(v: &[T], shift: usize) -> Vec<T> {
            let mut v = v.to_vec();
            if !v.is_empty() {
                let n = v.len();
                v.rotate_left(shift % n);
            }
            v
        }
        FieldState {
            t: self.t,
            phi: rot(&self.phi, shift),
            pi: rot(&self.pi, shift),
            a: rot(&self.a, shift),
            e: rot(&self.e, shift),
            mode: self.mode,
        }
    }
}

/// X = (c/K)Π − ZκΦ and Y = (c/K)Π + ZκΦ per site.
#[derive(Debug, Clone, PartialEq)]
pub struct XYFields {
    pub x_field: Vec<Spinor8>,
    pub y_field: Vec<Spinor8>,
}

impl XYFields {
    pub fn max_x_norm(&self) -> f64 {
        self.x_field.iter().map(Spinor8::norm).fold(0.0, f64::max)
    }

    pub fn max_y_norm(&self) -> f64 {
        self.y_field.iter().map(Spinor8::norm).fold(0.0, f64::max)
    }

    /// Inverse map: returns ((c/K)Π, Φ) per site, via (c/K)Π = (X + Y)/2 and
    /// κΦ = Z(X − Y)/2.
    pub fn reconstruct(&self, z: &ZStructure, params: &PhysicalParams) -> (Vec<Spinor8>, Vec<Spinor8>) {
        let kappa = params.kappa();
        self.x_field
            .iter()
            .zip(&self.y_field)
            .map(|(x, y)| {
                let pi = (*x + *y) * 0.5;
                let phi = z.apply(&((*x - *y) * 0.5)) * (1.0 / kappa);
                (pi, phi)
            })
            .unzip()
    }
}

/// κ·(ZΦ); the one place this product is formed so that constraint maps and
/// the X/Y transform agree bit for bit.
#[inline]
pub fn kappa_z_phi(z: &ZStructure, phi: &Spinor8, kappa: f64) -> Spinor8 {
    z.apply(phi) * kappa
}

/// Phase of a case-I solution exp(b·Z·(ωt − kx)) for branch b.
fn branch_phase(branch: i8, omega: f64, k: f64, x: f64, t: f64) -> f64 {
    branch as f64 * (omega * t - k * x)
}

/// Exact case-I plane-wave solution Φ(t, x³) = A·exp(b·Z(ωt − kx³))χ on the grid.
pub fn plane_wave_solution(
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
    z: &ZStructure,
    mode_number: i64,
    branch: i8,
    amplitude: f64,
    t: f64,
) -> Result<Vec<Spinor8>> {
    check_mode_number(grid, mode_number)?;
    let k = grid.wavenumber(mode_number);
    let mode = plane_wave_mode(eta, z, k, branch, params.kappa())?;
    Ok((0..grid.n_sites)
        .map(|i| {
            let theta = branch_phase(branch, mode.omega, k, grid.position(i), t);
            z.exp_apply(theta, &mode.chi) * amplitude
        })
        .collect())
}

fn check_mode_number(grid: &GridSpec, mode_number: i64) -> Result<()> {
    if mode_number.unsigned_abs() as usize >= grid.n_sites / 2 {
        return Err(DiracError::Validation(format!(
            "mode number {mode_number} is not resolved on {} sites",
            grid.n_sites
        )));
    }
    Ok(())
}

/// Case-I plane wave at t = 0 with Π locked by (c/K)Π = ZκΦ.
pub fn init_plane_wave(
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
    z: &ZStructure,
    mode_number: i64,
    branch: i8,
    amplitude: f64,
) -> Result<FieldState> {
    let phi = plane_wave_solution(grid, params, eta, z, mode_number, branch, amplitude, 0.0)?;
    let mut state = FieldState::zeros(grid.n_sites, ModeTag::Free);
    state.phi = phi;
    Ok(enforce_case(state, z, Case::I, params))
}

/// Gaussian wave packet with a plane-wave carrier, Π locked to case I.
#[allow(clippy::too_many_arguments)]
pub fn init_gaussian(
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
    z: &ZStructure,
    center: f64,
    width: f64,
    carrier_k: f64,
    amplitude: f64,
    branch: i8,
) -> Result<FieldState> {
    if !(width >= 4.0 * grid.dx) {
        return Err(DiracError::Validation(format!(
            "gaussian width {width} is below 4*dx = {}",
            4.0 * grid.dx
        )));
    }
    let mode = plane_wave_mode(eta, z, carrier_k, branch, params.kappa())?;
    let length = grid.length();
    let mut state = FieldState::zeros(grid.n_sites, ModeTag::Free);
    for (i, phi) in state.phi.iter_mut().enumerate() {
        let x = grid.position(i);
        let d = (x - center + 0.5 * length).rem_euclid(length) - 0.5 * length;
        let envelope = (-(d * d) / (2.0 * width * width)).exp();
        let theta = branch_phase(branch, mode.omega, carrier_k, x, 0.0);
        *phi = z.exp_apply(theta, &mode.chi) * (amplitude * envelope);
    }
    Ok(enforce_case(state, z, Case::I, params))
}

/// Locks the momentum to the case constraint: case I sets (c/K)Π = ZκΦ
/// (X = 0), case II sets (c/K)Π = −ZκΦ (Y = 0).
pub fn enforce_case(mut state: FieldState, z: &ZStructure, case: Case, params: &PhysicalParams) -> FieldState {
    let kappa = params.kappa();
    for (pi, phi) in state.pi.iter_mut().zip(&state.phi) {
        let w = kappa_z_phi(z, phi, kappa);
        *pi = match case {
            Case::I => w,
            Case::II => -w,
        };
    }
    state
}

/// Sets E⁰ = −∂₃A³ so that G = ∂₀A⁰ + ∂₃A³ vanishes at the current time.
pub fn impose_lorenz_gauge(mut state: FieldState, grid: &GridSpec) -> FieldState {
    let da = spatial_derivative(&state.a, grid.dx);
    for (e, d) in state.e.iter_mut().zip(&da) {
        e[0] = -d[3];
    }
    state
}

pub fn xy_transform(state: &FieldState, z: &ZStructure, params: &PhysicalParams) -> XYFields {
    let kappa = params.kappa();
    let (x_field, y_field) = state
        .pi
        .iter()
        .zip(&state.phi)
        .map(|(pi, phi)| {
            let w = kappa_z_phi(z, phi, kappa);
            (*pi - w, *pi + w)
        })
        .unzip();
    XYFields { x_field, y_field }
}

// ---------------------------------------------------------------------------
// Periodic finite differences

/// Per-site value the stencils can act on.
pub trait SiteValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}

impl<T> SiteValue for T where T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

#[inline]
fn wrap(i: usize, offset: isize, n: usize) -> usize {
    (i as isize + offset).rem_euclid(n as isize) as usize
}

/// Fourth-order central first derivative
/// (−f[i+2] + 8f[i+1] − 8f[i−1] + f[i−2]) / (12 dx) with periodic indices.
pub fn spatial_derivative<T: SiteValue>(field: &[T], dx: f64) -> Vec<T> {
    let n = field.len();
    assert!(n >= 5, "stencil needs at least 5 sites");
    let inv = 1.0 / (12.0 * dx);
    (0..n)
        .map(|i| {
            let fm2 = field[wrap(i, -2, n)];
            let fm1 = field[wrap(i, -1, n)];
            let fp1 = field[wrap(i, 1, n)];
            let fp2 = field[wrap(i, 2, n)];
            ((fm2 - fp2) + (fp1 - fm1) * 8.0) * inv
        })
        .collect()
}

/// Fourth-order central second derivative
/// (−f[i+2] + 16f[i+1] − 30f[i] + 16f[i−1] − f[i−2]) / (12 dx²).
pub fn second_derivative<T: SiteValue>(field: &[T], dx: f64) -> Vec<T> {
    let n = field.len();
    assert!(n >= 5, "stencil needs at least 5 sites");
    let inv = 1.0 / (12.0 * dx * dx);
    (0..n)
        .map(|i| {
            let f0 = field[i];
            let fm2 = field[wrap(i, -2, n)];
            let fm1 = field[wrap(i, -1, n)];
            let fp1 = field[wrap(i, 1, n)];
            let fp2 = field[wrap(i, 2, n)];
            (((fp1 - f0) + (fm1 - f0)) * 16.0 - ((fp2 - f0) + (fm2 - f0))) * inv
        })
        .collect()
}
