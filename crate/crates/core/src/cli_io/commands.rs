//! Command implementations. Each returns a textual report and an exit status;
//! `main` only prints and exits.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::{rngs::StdRng, Rng, SeedableRng};

use crate::algebra::{
    a_squared_scalar, build_a, commutant_basis, complex_structure_generators, find_z, EtaSet, FourVector, Matrix8,
    ZStructure, METRIC, Z_TOL,
};
use crate::dynamics::{evolve, step_rk4, EvolutionMode};
use crate::error::{DiracError, Result};
use crate::lattice::{plane_wave_solution, Case, FieldState, GridSpec, PhysicalParams};
use crate::observables::{current_case, current_general, diagnostics_csv, lagrangian_di_density};

use super::config::{InitialCondition, RunConfig};
use super::snapshot::write_snapshot;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub text: String,
    pub exit_code: i32,
}

impl Report {
    fn new(text: String, passed: bool) -> Self {
        Report {
            text,
            exit_code: if passed { EXIT_OK } else { EXIT_CHECK_FAILED },
        }
    }

    pub fn passed(&self) -> bool {
        self.exit_code == EXIT_OK
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

// ---------------------------------------------------------------------------
// algebra-verify

pub const RANDOM_A_CHECKS: usize = 100;
pub const A_SQUARE_TOL: f64 = 1e-12;

pub fn cmd_algebra_verify(eta: &EtaSet) -> Report {
    let mut out = String::new();
    let mut all_ok = true;

    writeln!(out, "metric g^{{ab}}:").unwrap();
    for alpha in 0..4 {
        let row: Vec<String> = (0..4)
            .map(|beta| format!("{:>3}", if alpha == beta { METRIC[alpha] } else { 0 }))
            .collect();
        writeln!(out, "  [{}]", row.join(" ")).unwrap();
    }

    writeln!(out, "anticommutators {{eta^a, eta^b}} = 2 g^ab I (exact integer arithmetic):").unwrap();
    let violations = eta.clifford_violations();
    for alpha in 0..4 {
        for beta in alpha..4 {
            let ok = !violations.contains(&(alpha, beta));
            all_ok &= ok;
            let expected = if alpha == beta { 2 * METRIC[alpha] } else { 0 };
            writeln!(out, "  ({alpha},{beta})  expected {expected:>2} I  {}", verdict(ok)).unwrap();
        }
    }

    let transpose_bad = eta.transpose_relation_violations();
    for j in 1..4 {
        let ok = !transpose_bad.contains(&j);
        all_ok &= ok;
        writeln!(out, "eta^0 (eta^{j})^T = eta^{j} eta^0: {}", verdict(ok)).unwrap();
    }

    let mut rng = StdRng::seed_from_u64(0x5eed_0001);
    let mut worst = 0.0f64;
    for _ in 0..RANDOM_A_CHECKS {
        let av = FourVector(std::array::from_fn(|_| rng.gen_range(-2.0..2.0)));
        let ek = rng.gen_range(-2.0..2.0);
        let a = build_a(&av, ek, eta);
        worst = worst.max((a * a - Matrix8::identity().scale(a_squared_scalar(&av, ek))).max_abs());
    }
    let ok = worst <= A_SQUARE_TOL;
    all_ok &= ok;
    writeln!(
        out,
        "a^2 = (e/K)^2 A_m A^m I over {RANDOM_A_CHECKS} random draws: max residual {worst:.3e}  {}",
        verdict(ok)
    )
    .unwrap();

    let basis = commutant_basis(eta);
    let ok = basis.len() == 4;
    all_ok &= ok;
    writeln!(out, "commutant dimension: {}  {}", basis.len(), verdict(ok)).unwrap();

    let n_gen = complex_structure_generators(eta).len();
    if n_gen == 0 {
        all_ok = false;
        writeln!(out, "complex structures: none found  FAIL").unwrap();
    }
    for index in 0..n_gen {
        match find_z(eta, index) {
            Ok(z) => {
                let r = z.residuals(eta);
                let ok = r.max() <= Z_TOL;
                all_ok &= ok;
                writeln!(
                    out,
                    "Z[{index}]: |[Z,eta]| {:.3e}  |Z^2+I| {:.3e}  |Z^T+Z| {:.3e}  |Z^T Z-I| {:.3e}  {}",
                    r.commutator,
                    r.square,
                    r.antisymmetry,
                    r.orthogonality,
                    verdict(ok)
                )
                .unwrap();
            }
            Err(e) => {
                all_ok = false;
                writeln!(out, "Z[{index}]: {e}  FAIL").unwrap();
            }
        }
    }
    writeln!(out, "result: {}", if all_ok { "PASS" } else { "FAIL" }).unwrap();
    Report::new(out, all_ok)
}

// ---------------------------------------------------------------------------
// find-z

pub fn cmd_find_z(eta: &EtaSet, index: usize) -> Result<Report> {
    let z = find_z(eta, index)?;
    let mut out = String::new();
    writeln!(out, "Z[{index}] =").unwrap();
    for row in z.matrix().0.iter() {
        let cells: Vec<String> = row.iter().map(|x| format!("{:>10.6}", x + 0.0)).collect();
        writeln!(out, "  [{}]", cells.join(" ")).unwrap();
    }
    let r = z.residuals(eta);
    let e3_comm = z.matrix().commutator(eta.get(3)).max_abs();
    writeln!(out, "|Z^2 + I|      = {:.3e}", r.square).unwrap();
    writeln!(out, "|Z^T + Z|      = {:.3e}", r.antisymmetry).unwrap();
    writeln!(out, "|[Z, eta^3]|   = {:.3e}", e3_comm).unwrap();
    writeln!(out, "max |[Z, eta]| = {:.3e}", r.commutator).unwrap();
    Ok(Report::new(out, r.max() <= Z_TOL))
}

// ---------------------------------------------------------------------------
// dispersion

pub const DISPERSION_TOL: f64 = 1e-3;
pub const DISPERSION_MAX_KDX: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionRow {
    pub mode_number: i64,
    pub k: f64,
    pub k_dx: f64,
    pub omega_measured: f64,
    pub omega_exact: f64,
    pub rel_error: f64,
}

/// Upward and downward zero crossings of a sampled signal, located by linear
/// interpolation between samples.
pub fn zero_crossings(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..values.len() {
        let (v0, v1) = (values[i - 1], values[i]);
        if v0 == 0.0 {
            out.push(times[i - 1]);
        } else if v0 * v1 < 0.0 {
            let frac = v0 / (v0 - v1);
            out.push(times[i - 1] + frac * (times[i] - times[i - 1]));
        }
    }
    out
}

/// Angular frequency from the mean spacing of zero crossings (half periods).
pub fn frequency_from_crossings(crossings: &[f64]) -> Option<f64> {
    if crossings.len() < 3 {
        return None;
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    Some(PI * (crossings.len() - 1) as f64 / span)
}

/// Evolves a free case-I plane wave and times the oscillation of its
/// largest-amplitude component at `site`.
#[allow(clippy::too_many_arguments)]
pub fn measure_frequency(
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
    z: &ZStructure,
    mode_number: i64,
    branch: i8,
    periods: f64,
    site: usize,
) -> Result<DispersionRow> {
    if site >= grid.n_sites {
        return Err(DiracError::IndexOutOfRange {
            index: site,
            bound: grid.n_sites,
        });
    }
    let mut state = crate::lattice::init_plane_wave(grid, params, eta, z, mode_number, branch, 1.0)?;
    let k = grid.wavenumber(mode_number);
    let omega_exact = crate::algebra::mass_shell_omega(k, params.kappa());
    let phi0 = state.phi[site];
    let zphi0 = z.apply(&phi0);
    let component = (0..8)
        .max_by(|&a, &b| {
            let amp = |c: usize| phi0[c].hypot(zphi0[c]);
            amp(a).total_cmp(&amp(b))
        })
        .expect("eight components");

    let n_steps = (periods * 2.0 * PI / omega_exact / grid.dt).ceil() as usize + 1;
    let mode = EvolutionMode::Free;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut values = Vec::with_capacity(n_steps + 1);
    times.push(state.t);
    values.push(state.phi[site][component]);
    for _ in 0..n_steps {
        state = step_rk4(&state, &mode, grid, params, eta, z)?;
        times.push(state.t);
        values.push(state.phi[site][component]);
    }
    let crossings = zero_crossings(&times, &values);
    let omega_measured = frequency_from_crossings(&crossings)
        .ok_or_else(|| DiracError::Validation("too few zero crossings; increase periods".into()))?;
    Ok(DispersionRow {
        mode_number,
        k,
        k_dx: k.abs() * grid.dx,
        omega_measured,
        omega_exact,
        rel_error: (omega_measured - omega_exact).abs() / omega_exact,
    })
}

pub fn dispersion_table(cfg: &RunConfig, eta: &EtaSet) -> Result<Vec<DispersionRow>> {
    let prepared = cfg.prepare(eta)?;
    if prepared.mode != EvolutionMode::Free {
        return Err(DiracError::Validation("dispersion requires mode = \"free\"".into()));
    }
    let branch = match cfg.initial {
        InitialCondition::PlaneWave { branch, .. } | InitialCondition::Gaussian { branch, .. } => branch,
        InitialCondition::Snapshot { .. } => 1,
    };
    if !(cfg.dispersion.periods >= 1.0) {
        return Err(DiracError::Validation("dispersion.periods must be at least 1".into()));
    }
    cfg.dispersion
        .mode_numbers
        .iter()
        .map(|&m| {
            measure_frequency(
                &prepared.grid,
                &prepared.params,
                eta,
                &prepared.z,
                m,
                branch,
                cfg.dispersion.periods,
                cfg.dispersion.site,
            )
        })
        .collect()
}

pub fn cmd_dispersion(cfg: &RunConfig, eta: &EtaSet) -> Result<Report> {
    let rows = dispersion_table(cfg, eta)?;
    let mut out = String::from("mode      k           k*dx       omega_measured     omega_exact        rel_error\n");
    let mut ok = true;
    for r in &rows {
        let checked = r.k_dx <= DISPERSION_MAX_KDX;
        let pass = !checked || r.rel_error <= DISPERSION_TOL;
        ok &= pass;
        writeln!(
            out,
            "{:>4}  {:>10.6}  {:>10.6}  {:>17.12}  {:>17.12}  {:>10.3e}  {}",
            r.mode_number,
            r.k,
            r.k_dx,
            r.omega_measured,
            r.omega_exact,
            r.rel_error,
            if checked { verdict(pass) } else { "unchecked (k*dx > 0.2)" }
        )
        .unwrap();
    }
    Ok(Report::new(out, ok))
}

// ---------------------------------------------------------------------------
// evolve

pub fn cmd_evolve(cfg: &RunConfig, eta: &EtaSet, out_dir: &Path) -> Result<Report> {
    cfg.check_run_length()?;
    let prepared = cfg.prepare(eta)?;
    let initial = cfg.initial_state(&prepared, eta)?;
    let (final_state, records) = evolve(
        &initial,
        &prepared.mode,
        &prepared.grid,
        &prepared.params,
        eta,
        &prepared.z,
        cfg.n_steps,
        cfg.sample_every,
    )?;
    std::fs::create_dir_all(out_dir)?;
    let diag_path = out_dir.join(&cfg.output.diagnostics);
    let snap_path = out_dir.join(&cfg.output.snapshot);
    std::fs::write(&diag_path, diagnostics_csv(&records))?;
    write_snapshot(&snap_path, &final_state, &prepared.grid, &prepared.params, cfg.z_index)?;
    let last = records.last().expect("at least the initial record");
    let first = &records[0];
    let mut out = String::new();
    writeln!(out, "mode {} ran {} steps to t = {}", prepared.mode.tag(), cfg.n_steps, final_state.t).unwrap();
    writeln!(out, "charge       {:.12e} -> {:.12e}", first.q, last.q).unwrap();
    writeln!(out, "H_total      {:.12e} -> {:.12e}", first.h_total, last.h_total).unwrap();
    writeln!(out, "max x_norm   {:.3e}", records.iter().map(|r| r.x_norm).fold(0.0, f64::max)).unwrap();
    writeln!(out, "max gauge    {:.3e}", records.iter().map(|r| r.gauge_norm).fold(0.0, f64::max)).unwrap();
    writeln!(out, "diagnostics  {}", diag_path.display()).unwrap();
    writeln!(out, "snapshot     {}", snap_path.display()).unwrap();
    Ok(Report::new(out, true))
}

// ---------------------------------------------------------------------------
// reduce-check

pub const REDUCE_LAGRANGIAN_TOL: f64 = 1e-10;
pub const REDUCE_CURRENT_TOL: f64 = 1e-10;
pub const REDUCE_STEP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionGaps {
    /// max |L_DI density|
    pub lagrangian: f64,
    /// max |j_general − j_case| / max |j_case|
    pub current: f64,
    /// max componentwise gap between one linear-I step and one canonical step
    pub step: f64,
    /// max componentwise gap between linear-II with Z and linear-I with −Z
    pub case_swap: f64,
}

impl ReductionGaps {
    pub fn passes(&self) -> [bool; 4] {
        [
            self.lagrangian <= REDUCE_LAGRANGIAN_TOL,
            self.current <= REDUCE_CURRENT_TOL,
            self.step <= REDUCE_STEP_TOL,
            self.case_swap == 0.0,
        ]
    }
}

pub fn max_state_gap(a: &FieldState, b: &FieldState) -> f64 {
    let s = a
        .phi
        .iter()
        .zip(&b.phi)
        .chain(a.pi.iter().zip(&b.pi))
        .map(|(x, y)| (*x - *y).max_abs())
        .fold(0.0, f64::max);
    let v = a
        .a
        .iter()
        .zip(&b.a)
        .chain(a.e.iter().zip(&b.e))
        .map(|(x, y)| (*x - *y).max_abs())
        .fold(0.0, f64::max);
    s.max(v)
}

/// Reduction gaps measured on `state`, which should be a case-I state.
pub fn reduction_gaps(
    state: &FieldState,
    grid: &GridSpec,
    params: &PhysicalParams,
    eta: &EtaSet,
    z: &ZStructure,
) -> Result<ReductionGaps> {
    let lagrangian = lagrangian_di_density(state, params, eta)?
        .iter()
        .fold(0.0f64, |m, x| m.max(x.abs()));
    let jg = current_general(state, params, eta)?;
    let jc = current_case(state, params, eta);
    let scale = jc.iter().map(FourVector::max_abs).fold(0.0, f64::max);
    let gap = jg.iter().zip(&jc).map(|(a, b)| (*a - *b).max_abs()).fold(0.0, f64::max);
    let current = if scale > 0.0 { gap / scale } else { gap };

    let linear = step_rk4(state, &EvolutionMode::CoupledLinear(Case::I), grid, params, eta, z)?;
    let canonical = step_rk4(state, &EvolutionMode::CoupledNonlinear, grid, params, eta, z)?;
    let step = max_state_gap(&linear, &canonical);

    let case2 = step_rk4(state, &EvolutionMode::CoupledLinear(Case::II), grid, params, eta, z)?;
    let case1_neg = step_rk4(state, &EvolutionMode::CoupledLinear(Case::I), grid, params, eta, &z.negated())?;
    let case_swap = max_state_gap(&case2, &case1_neg);
    Ok(ReductionGaps {
        lagrangian,
        current,
        step,
        case_swap,
    })
}

/// Case-I state from the config, with `[reduce].perturbation` added to one
/// momentum component per site.
pub fn reduce_state(cfg: &RunConfig, eta: &EtaSet) -> Result<(super::config::Prepared, FieldState)> {
    let prepared = cfg.prepare(eta)?;
    let mut state = cfg.initial_state(&prepared, eta)?;
    state = crate::lattice::enforce_case(state, &prepared.z, Case::I, &prepared.params);
    let eps = cfg.reduce.perturbation;
    if eps != 0.0 {
        for (i, p) in state.pi.iter_mut().enumerate() {
            p[i % 8] += eps;
        }
    }
    Ok((prepared, state))
}

pub fn cmd_reduce_check(cfg: &RunConfig, eta: &EtaSet) -> Result<Report> {
    let (prepared, state) = reduce_state(cfg, eta)?;
    let gaps = reduction_gaps(&state, &prepared.grid, &prepared.params, eta, &prepared.z)?;
    let pass = gaps.passes();
    let mut out = String::new();
    writeln!(out, "(a) max |L_DI density|                      {:.3e}  (tol {REDUCE_LAGRANGIAN_TOL:e})  {}", gaps.lagrangian, verdict(pass[0])).unwrap();
    writeln!(out, "(b) max relative general/case current gap   {:.3e}  (tol {REDUCE_CURRENT_TOL:e})  {}", gaps.current, verdict(pass[1])).unwrap();
    writeln!(out, "(c) max linear-I vs canonical step gap      {:.3e}  (tol {REDUCE_STEP_TOL:e})  {}", gaps.step, verdict(pass[2])).unwrap();
    writeln!(out, "(d) linear-II(Z) vs linear-I(-Z) step gap   {:.3e}  (bitwise)      {}", gaps.case_swap, verdict(pass[3])).unwrap();
    Ok(Report::new(out, pass.iter().all(|p| *p)))
}

// ---------------------------------------------------------------------------
// convergence

pub const CONVERGENCE_MIN_ORDER: f64 = 3.8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n_sites: usize,
    pub dx: f64,
    pub dt: f64,
    pub error: f64,
    /// Order against the previous (coarser) row.
    pub observed_order: Option<f64>,
}

/// Max-norm error of a free plane wave against the exact solution after
/// evolving to `t_final`, for each resolution in turn on a fixed domain
/// with dt ∝ dx.
#[allow(clippy::too_many_arguments)]
pub fn plane_wave_convergence(
    length: f64,
    cfl: f64,
    resolutions: &[usize],
    t_final: f64,
    params: &PhysicalParams,
    eta: &EtaSet,
    z: &ZStructure,
    mode_number: i64,
    branch: i8,
    amplitude: f64,
) -> Result<Vec<ConvergenceRow>> {
    if resolutions.len() < 2 {
        return Err(DiracError::Validation("convergence needs at least two resolutions".into()));
    }
    if !(t_final > 0.0) {
        return Err(DiracError::Validation("t_final must be positive".into()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in resolutions {
        let dx = length / n as f64;
        let n_steps = (t_final / (cfl * dx)).ceil() as usize;
        let dt = t_final / n_steps as f64;
        let grid = GridSpec::new(n, dx, dt, cfl)?;
        let mut state = crate::lattice::init_plane_wave(&grid, params, eta, z, mode_number, branch, amplitude)?;
        for _ in 0..n_steps {
            state = step_rk4(&state, &EvolutionMode::Free, &grid, params, eta, z)?;
        }
        let exact = plane_wave_solution(&grid, params, eta, z, mode_number, branch, amplitude, t_final)?;
        let error = state
            .phi
            .iter()
            .zip(&exact)
            .map(|(a, b)| (*a - *b).max_abs())
            .fold(0.0, f64::max);
        let observed_order = rows
            .last()
            .map(|prev| (prev.error / error).ln() / (prev.dx / dx).ln());
        rows.push(ConvergenceRow {
            n_sites: n,
            dx,
            dt,
            error,
            observed_order,
        });
    }
    Ok(rows)
}

pub fn convergence_table(cfg: &RunConfig, eta: &EtaSet) -> Result<Vec<ConvergenceRow>> {
    let prepared = cfg.prepare(eta)?;
    if !matches!(prepared.mode, EvolutionMode::Free) {
        return Err(DiracError::Validation("convergence requires mode = \"free\"".into()));
    }
    let InitialCondition::PlaneWave {
        mode_number,
        branch,
        amplitude,
    } = cfg.initial
    else {
        return Err(DiracError::Validation("convergence requires a plane-wave initial condition".into()));
    };
    let grid = prepared.grid;
    plane_wave_convergence(
        grid.length(),
        grid.dt / grid.dx,
        &cfg.convergence.resolutions,
        cfg.convergence.t_final,
        &prepared.params,
        eta,
        &prepared.z,
        mode_number,
        branch,
        amplitude,
    )
}

pub fn cmd_convergence(cfg: &RunConfig, eta: &EtaSet) -> Result<Report> {
    let rows = convergence_table(cfg, eta)?;
    let mut out = String::from("n_sites   dx            dt            error         observed_order\n");
    let mut ok = true;
    for r in &rows {
        let order = match r.observed_order {
            Some(p) => {
                ok &= p >= CONVERGENCE_MIN_ORDER;
                format!("{p:.4}")
            }
            None => "-".into(),
        };
        writeln!(out, "{:>7}   {:.6e}  {:.6e}  {:.6e}  {order}", r.n_sites, r.dx, r.dt, r.error).unwrap();
    }
    Ok(Report::new(out, ok))
}

/// Exit code for an error returned by a command.
pub fn error_exit_code(e: &DiracError) -> i32 {
    e.exit_code()
}

