//! Independent check of the extended-space pipeline by direct propagation
//! over one period.
//!
//! The monodromy operator `U(T)` is built from midpoint matrix exponentials,
//! so it is unitary up to rounding. Its eigenphases give quasi-energies, the
//! propagated eigenvectors give Floquet modes through a discrete Fourier
//! transform, and average energies come from Simpson averages of
//! `⟨Ψ(t)|H(t)|Ψ(t)⟩` along the trajectory.

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::linalg::{expm_hermitian, fold, hermitian_eigen, simpson, unitarity_drift, unitary_eigen};
use crate::linalg::wrapped_distance;
use crate::model::{eval_at_time, FourierHamiltonian};
use crate::sambe::{quasi_energy_functional, residual_norm, EigenTriplet, FloquetMode, Spectrum, SpectrumMetadata};
use crate::{CMatrix, CVector, FloquetError, Result, C64};

/// Largest accepted `1 - |⟨Ψ(T)|Ψ(0)⟩|` for a trajectory treated as periodic.
pub const PERIODICITY_TOL: f64 = 1e-6;
/// Tail weight above which [`PropagatedMode::truncated`] is set.
pub const TAIL_WARN: f64 = 1e-6;

/// Integration scheme. Only one is offered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Integrator {
    /// `U ← exp(-i·H(t + δt/2)·δt)·U`, second order.
    #[default]
    MidpointExponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub steps_per_period: usize,
    pub integrator: Integrator,
    pub unitarity_tol: f64,
    /// Also propagate with twice the steps and report the eigenphase change.
    pub richardson: bool,
    /// Quasi-energy tolerance for eigenphase-degenerate groups; `None` means `1e-7·ω`.
    pub tol_deg: Option<f64>,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            steps_per_period: 4096,
            integrator: Integrator::MidpointExponential,
            unitarity_tol: 1e-12,
            richardson: false,
            tol_deg: None,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps_per_period < 64 || self.steps_per_period % 2 != 0 {
            return Err(FloquetError::InvalidArgument(format!(
                "steps_per_period must be even and at least 64, got {}",
                self.steps_per_period
            )));
        }
        if !(self.unitarity_tol > 0.0) {
            return Err(FloquetError::InvalidArgument(
                "unitarity tolerance must be positive".into(),
            ));
        }
        if let Some(t) = self.tol_deg {
            if !(t > 0.0) {
                return Err(FloquetError::InvalidArgument(
                    "degeneracy tolerance must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn tol_deg_for(&self, omega: f64) -> f64 {
        self.tol_deg.unwrap_or(1e-7 * omega)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyResult {
    pub monodromy: CMatrix,
    /// `θ_n ∈ [0, 2π)` with eigenvalues `e^{-iθ_n}`.
    pub eigenphases: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `eigenphases`.
    pub eigenvectors: CMatrix,
    pub drift: f64,
    /// Largest eigenphase quasi-energy change when the steps are doubled.
    pub richardson_change: Option<f64>,
}

impl MonodromyResult {
    /// `θ_n / T` folded into `[0, ω)`.
    pub fn quasi_energies(&self, omega: f64) -> Vec<f64> {
        let period = 2.0 * std::f64::consts::PI / omega;
        self.eigenphases
            .iter()
            .map(|th| fold(th / period, omega))
            .collect()
    }
}

fn step_unitaries(h: &FourierHamiltonian, steps: usize) -> Result<Vec<CMatrix>> {
    let dt = h.period() / steps as f64;
    (0..steps)
        .into_par_iter()
        .map(|j| expm_hermitian(&eval_at_time(h, (j as f64 + 0.5) * dt), dt).map(polish_unitary))
        .collect()
}

/// One Newton-Schulz step `U(3 - U†U)/2`, removing the rounding drift of a
/// single exponential before thousands of them are multiplied.
fn polish_unitary(u: CMatrix) -> CMatrix {
    let n = u.nrows();
    let gram = u.adjoint() * &u;
    let corr = CMatrix::identity(n, n) * C64::new(1.5, 0.0) - gram * C64::new(0.5, 0.0);
    u * corr
}

/// Ordered product `S_{N-1}···S_0`, multiplied as a balanced tree so rounding
/// grows with `log N` rather than `N`.
fn monodromy_from_steps(h: &FourierHamiltonian, steps: &[CMatrix]) -> CMatrix {
    match steps.len() {
        0 => CMatrix::identity(h.dim(), h.dim()),
        1 => steps[0].clone(),
        n => {
            let (early, late) = steps.split_at(n / 2);
            monodromy_from_steps(h, late) * monodromy_from_steps(h, early)
        }
    }
}

fn eigenphases_of(u: &CMatrix, cluster_tol: f64) -> Result<(Vec<f64>, CMatrix)> {
    let (values, vectors) = unitary_eigen(u, cluster_tol)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    let phases = values
        .iter()
        .map(|z| {
            let th = (-z.arg()).rem_euclid(two_pi);
            if two_pi - th <= 1e-14 {
                0.0
            } else {
                th
            }
        })
        .collect();
    Ok((phases, vectors))
}

fn monodromy_with_steps(
    h: &FourierHamiltonian,
    config: &PropagationConfig,
    steps: &[CMatrix],
) -> Result<MonodromyResult> {
    let u = monodromy_from_steps(h, steps);
    let drift = unitarity_drift(&u);
    if drift > config.unitarity_tol {
        return Err(FloquetError::UnitarityDrift {
            drift,
            tolerance: config.unitarity_tol,
        });
    }
    let cluster = h.period() * config.tol_deg_for(h.omega());
    let (eigenphases, eigenvectors) = eigenphases_of(&u, cluster)?;
    Ok(MonodromyResult {
        monodromy: u,
        eigenphases,
        eigenvectors,
        drift,
        richardson_change: None,
    })
}

/// One-period propagator and its eigen-decomposition.
pub fn propagate_period(h: &FourierHamiltonian, config: &PropagationConfig) -> Result<MonodromyResult> {
    config.validate()?;
    let steps = step_unitaries(h, config.steps_per_period)?;
    let mut out = monodromy_with_steps(h, config, &steps)?;
    if config.richardson {
        let fine_steps = step_unitaries(h, 2 * config.steps_per_period)?;
        let fine = monodromy_with_steps(h, config, &fine_steps)?;
        let omega = h.omega();
        let coarse_eps = out.quasi_energies(omega);
        let fine_eps = fine.quasi_energies(omega);
        let change = coarse_eps
            .iter()
            .map(|a| {
                fine_eps
                    .iter()
                    .map(|b| wrapped_distance(*a, *b, omega))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        out.richardson_change = Some(change);
    }
    Ok(out)
}

/// `Ψ(t_j)` for `j = 0..=N` on the uniform grid.
fn trajectory(steps: &[CMatrix], initial: &CVector) -> Vec<CVector> {
    let mut out = Vec::with_capacity(steps.len() + 1);
    out.push(initial.clone());
    for s in steps {
        let next = s * out.last().expect("non-empty");
        out.push(next);
    }
    out
}

/// `(1/T)∫⟨Ψ(t)|H(t)|Ψ(t)⟩dt` by Simpson's rule over `N + 1` equally spaced
/// samples covering one period.
///
/// The samples must describe a periodic ray: `|⟨Ψ(T)|Ψ(0)⟩|` within
/// [`PERIODICITY_TOL`] of one.
pub fn time_averaged_energy(h: &FourierHamiltonian, samples: &[CVector]) -> Result<f64> {
    let n = samples.len().saturating_sub(1);
    if n == 0 {
        return Err(FloquetError::InvalidArgument("trajectory needs samples".into()));
    }
    let first = &samples[0];
    let last = &samples[n];
    let norm = first.norm() * last.norm();
    let mismatch = if norm > 0.0 {
        1.0 - first.dotc(last).norm() / norm
    } else {
        1.0
    };
    if mismatch > PERIODICITY_TOL {
        return Err(FloquetError::NonPeriodic { mismatch });
    }
    let dt = h.period() / n as f64;
    let values: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(j, psi)| {
            let hm = eval_at_time(h, j as f64 * dt);
            psi.dotc(&(hm * psi)).re / psi.norm_squared()
        })
        .collect();
    Ok(simpson(&values, dt)? / h.period())
}

/// Time average of a Floquet mode sampled on `steps` intervals.
pub fn mode_time_average(h: &FourierHamiltonian, mode: &FloquetMode, steps: usize) -> Result<f64> {
    let dt = h.period() / steps as f64;
    let samples: Vec<CVector> = (0..=steps)
        .map(|j| mode.at_time(j as f64 * dt, h.omega()))
        .collect();
    time_averaged_energy(h, &samples)
}

/// A Floquet mode recovered from a propagated eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatedMode {
    pub mode: FloquetMode,
    /// `θ/T` folded into `[0, ω)`.
    pub quasi_energy: f64,
    /// Fourier weight outside the retained window, relative to the total.
    pub tail_weight: f64,
    pub truncated: bool,
    pub avg_energy: f64,
}

fn extract_mode(
    h: &FourierHamiltonian,
    traj: &[CVector],
    quasi_energy: f64,
    truncation: usize,
) -> Result<PropagatedMode> {
    let n = traj.len() - 1;
    let d = h.dim();
    let dt = h.period() / n as f64;
    let avg_energy = time_averaged_energy(h, traj)?;

    // Φ(t_j) = e^{iεt_j}Ψ(t_j), one FFT per basis component.
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut spectra: Vec<Vec<C64>> = (0..d)
        .map(|a| {
            (0..n)
                .map(|j| traj[j][a] * C64::from_polar(1.0, quasi_energy * j as f64 * dt))
                .collect()
        })
        .collect();
    for s in &mut spectra {
        fft.process(s);
        for z in s.iter_mut() {
            *z /= n as f64;
        }
    }
    let index = |m: i64| m.rem_euclid(n as i64) as usize;
    let half = (n / 2) as i64;
    let weight = |m: i64| spectra.iter().map(|s| s[index(m)].norm_sqr()).sum::<f64>();
    let harmonics = (-half + 1)..=half;
    let total: f64 = harmonics.clone().map(weight).sum();
    let centroid: f64 = harmonics.clone().map(|m| m as f64 * weight(m)).sum::<f64>() / total;
    let centre = centroid.round() as i64;

    let m_max = truncation as i64;
    let mut mode = FloquetMode::zeros(d, truncation);
    for m in -m_max..=m_max {
        let src = m + centre;
        let mut block = mode.block_mut(m);
        for a in 0..d {
            block[a] = spectra[a][index(src)];
        }
    }
    let kept = mode.norm_sq();
    let tail_weight = ((total - kept) / total).max(0.0);
    Ok(PropagatedMode {
        mode: mode.normalized().phase_fixed(),
        quasi_energy,
        tail_weight,
        truncated: tail_weight > TAIL_WARN,
        avg_energy,
    })
}

/// Propagates an eigenvector of `U(T)` over one period and Fourier-analyzes
/// `Φ(t) = e^{iεt}Ψ(t)` into harmonics `|m| ≤ truncation`, centred on the
/// replica whose weight centroid is nearest zero.
pub fn mode_from_propagation(
    h: &FourierHamiltonian,
    initial: &CVector,
    eigenphase: f64,
    truncation: usize,
    config: &PropagationConfig,
) -> Result<PropagatedMode> {
    config.validate()?;
    if initial.len() != h.dim() {
        return Err(FloquetError::DimensionMismatch(format!(
            "initial state has {} entries, model dim is {}",
            initial.len(),
            h.dim()
        )));
    }
    let steps = step_unitaries(h, config.steps_per_period)?;
    let eps = fold(eigenphase / h.period(), h.omega());
    let init = initial / C64::new(initial.norm(), 0.0);
    extract_mode(h, &trajectory(&steps, &init), eps, truncation)
}

/// `E_ij = (1/T)∫⟨Ψ_i(t)|H(t)|Ψ_j(t)⟩dt` by Simpson's rule.
fn averaged_energy_matrix(h: &FourierHamiltonian, trajs: &[Vec<CVector>]) -> Result<CMatrix> {
    let k = trajs.len();
    let n = trajs[0].len() - 1;
    let dt = h.period() / n as f64;
    let hams: Vec<CMatrix> = (0..=n).map(|j| eval_at_time(h, j as f64 * dt)).collect();
    let mut out = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let (re, im): (Vec<f64>, Vec<f64>) = (0..=n)
                .map(|t| {
                    let z = trajs[i][t].dotc(&(&hams[t] * &trajs[j][t]));
                    (z.re, z.im)
                })
                .unzip();
            out[(i, j)] = C64::new(simpson(&re, dt)?, simpson(&im, dt)?) / h.period();
        }
    }
    Ok((&out + out.adjoint()).map(|z| z * 0.5))
}

/// Eigentriplets from propagation alone, on the harmonic window `|m| ≤ truncation`.
///
/// Eigenphase-degenerate eigenvectors are rotated into the eigenbasis of the
/// time-averaged energy matrix restricted to their group.
pub fn solve(h: &FourierHamiltonian, truncation: usize, config: &PropagationConfig) -> Result<Spectrum> {
    config.validate()?;
    let omega = h.omega();
    let tol = config.tol_deg_for(omega);
    let steps = step_unitaries(h, config.steps_per_period)?;
    let mono = monodromy_with_steps(h, config, &steps)?;
    let eps = mono.quasi_energies(omega);

    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&a, &b| eps[a].total_cmp(&eps[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if wrapped_distance(eps[*g.last().unwrap()], eps[i], omega) <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    if groups.len() > 1 {
        let first = groups[0][0];
        let last = *groups.last().unwrap().last().unwrap();
        if wrapped_distance(eps[first], eps[last], omega) <= tol {
            let tail = groups.pop().unwrap();
            groups[0].splice(0..0, tail);
        }
    }

    let mut triplets = Vec::with_capacity(h.dim());
    for group in groups {
        let eps_g = eps[group[0]];
        let vectors: Vec<CVector> = group
            .iter()
            .map(|&i| mono.eigenvectors.column(i).into_owned())
            .collect();
        let (ebar_values, vectors) = if group.len() == 1 {
            (vec![f64::NAN], vectors)
        } else {
            let trajs: Vec<Vec<CVector>> = vectors.iter().map(|v| trajectory(&steps, v)).collect();
            let block = averaged_energy_matrix(h, &trajs)?;
            let (values, rot) = hermitian_eigen(&block)?;
            let rotated = (0..group.len())
                .map(|j| {
                    let mut acc = CVector::zeros(h.dim());
                    for (i, v) in vectors.iter().enumerate() {
                        acc += v * rot[(i, j)];
                    }
                    acc
                })
                .collect();
            (values, rotated)
        };
        for (j, v) in vectors.iter().enumerate() {
            let member_eps = if group.len() == 1 { eps_g } else { eps[group[j]] };
            let pm = extract_mode(h, &trajectory(&steps, v), member_eps, truncation)?;
            let lambda = quasi_energy_functional(&pm.mode, h)?;
            let degenerate = ebar_values
                .iter()
                .enumerate()
                .any(|(k, x)| k != j && (x - ebar_values[j]).abs() <= tol);
            triplets.push(EigenTriplet {
                centroid: pm.mode.centroid(),
                residual: residual_norm(h, &pm.mode, lambda),
                quasi_energy: pm.quasi_energy,
                avg_energy: pm.avg_energy,
                ebar_degenerate: degenerate,
                mode: pm.mode,
            });
        }
    }
    Ok(Spectrum::new(
        triplets,
        SpectrumMetadata {
            solver: "monodromy".into(),
            dim: h.dim(),
            omega,
            truncation,
            tol_deg: tol,
            max_residual: 0.0,
            model_hash: h.content_hash(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_model, ModelSpec};
    use std::collections::BTreeMap;

    fn static_model(e0: f64, e1: f64, omega: f64) -> FourierHamiltonian {
        builtin_model(&ModelSpec::new("static").with("e0", e0).with("e1", e1).with("omega", omega)).unwrap()
    }

    fn circular() -> FourierHamiltonian {
        builtin_model(&ModelSpec::new("two_level_circular")).unwrap()
    }

    /// `U(T) = e^{-iπσz}·e^{-iH'T}` with `H' = ((Δ-ω)/2)σz + (V/2)σx`.
    fn rotating_frame_monodromy(delta: f64, v: f64, omega: f64) -> CMatrix {
        let t = 2.0 * std::f64::consts::PI / omega;
        let hp = CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new((delta - omega) / 2.0, 0.0),
                C64::new(v / 2.0, 0.0),
                C64::new(v / 2.0, 0.0),
                C64::new(-(delta - omega) / 2.0, 0.0),
            ],
        );
        let frame = CMatrix::from_diagonal(&CVector::from_vec(vec![
            C64::from_polar(1.0, -std::f64::consts::PI),
            C64::from_polar(1.0, std::f64::consts::PI),
        ]));
        frame * expm_hermitian(&hp, t).unwrap()
    }

    #[test]
    fn config_validation() {
        let mut c = PropagationConfig::default();
        assert!(c.validate().is_ok());
        c.steps_per_period = 32;
        assert!(c.validate().is_err());
        c.steps_per_period = 65;
        assert!(c.validate().is_err());
        c = PropagationConfig {
            unitarity_tol: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn static_monodromy_is_diagonal_phases() {
        let h = static_model(0.0, 1.0, 0.7);
        let r = propagate_period(&h, &PropagationConfig::default()).unwrap();
        let t = h.period();
        assert!((r.monodromy[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((r.monodromy[(1, 1)] - C64::from_polar(1.0, -t)).norm() < 1e-12);
        assert!(r.monodromy[(0, 1)].norm() < 1e-14);
        let mut eps = r.quasi_energies(0.7);
        eps.sort_by(f64::total_cmp);
        assert!(eps[0].abs() < 1e-12);
        assert!((eps[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let h = FourierHamiltonian::new(3, 1.0, BTreeMap::from([(0, CMatrix::zeros(3, 3))])).unwrap();
        let r = propagate_period(&h, &PropagationConfig::default()).unwrap();
        assert!((r.monodromy.clone() - CMatrix::identity(3, 3)).norm() < 1e-15);
        assert!(r.eigenphases.iter().all(|&th| th == 0.0));
    }

    #[test]
    fn circular_monodromy_matches_rotating_frame() {
        let h = circular();
        let r = propagate_period(&h, &PropagationConfig::default()).unwrap();
        let exact = rotating_frame_monodromy(1.0, 0.4, 1.5);
        assert!((r.monodromy.clone() - exact).norm() < 1e-7);
        let mut eps = r.quasi_energies(1.5);
        eps.sort_by(f64::total_cmp);
        assert!((eps[0] - 0.429844).abs() < 1e-6);
        assert!((eps[1] - 1.070156).abs() < 1e-6);
        assert!(r.drift <= 1e-12);
    }

    #[test]
    fn step_doubling_moves_quasi_energies_little() {
        for name in crate::model::BUILTIN_MODELS {
            let h = builtin_model(&ModelSpec::new(name)).unwrap();
            let cfg = PropagationConfig {
                richardson: true,
                ..Default::default()
            };
            let r = propagate_period(&h, &cfg).unwrap();
            let change = r.richardson_change.unwrap();
            assert!(change <= 1e-8, "{name}: {change:e}");
        }
    }

    #[test]
    fn static_modes_sit_in_one_block() {
        let h = static_model(0.0, 1.0, 0.7);
        let s = solve(&h, 4, &PropagationConfig::default()).unwrap();
        for t in &s.triplets {
            let nonzero = t
                .mode
                .harmonic_range()
                .filter(|&m| t.mode.block(m).norm() > 1e-9)
                .count();
            assert_eq!(nonzero, 1);
        }
        assert!((s.triplets[0].avg_energy).abs() < 1e-12);
        assert!((s.triplets[1].avg_energy - 1.0).abs() < 1e-12);
        assert!((s.triplets[1].quasi_energy - 0.3).abs() < 1e-12);
    }

    #[test]
    fn circular_modes_have_two_harmonics() {
        let h = circular();
        let s = solve(&h, 8, &PropagationConfig::default()).unwrap();
        for t in &s.triplets {
            let blocks: Vec<i64> = t
                .mode
                .harmonic_range()
                .filter(|&m| t.mode.block(m).norm() > 1e-6)
                .collect();
            assert_eq!(blocks.len(), 2, "{blocks:?}");
            assert_eq!(blocks[1] - blocks[0], 1);
        }
        assert!((s.triplets[0].avg_energy + 0.265496).abs() < 1e-6);
        assert!((s.triplets[0].quasi_energy - 1.070156).abs() < 1e-6);
        assert!((s.triplets[1].avg_energy - 0.265496).abs() < 1e-6);
    }

    #[test]
    fn propagated_mode_reports_tail() {
        let h = circular();
        let r = propagate_period(&h, &PropagationConfig::default()).unwrap();
        let v = r.eigenvectors.column(0).into_owned();
        let pm = mode_from_propagation(&h, &v, r.eigenphases[0], 0, &PropagationConfig::default()).unwrap();
        assert!(pm.truncated);
        let pm = mode_from_propagation(&h, &v, r.eigenphases[0], 6, &PropagationConfig::default()).unwrap();
        assert!(!pm.truncated);
        assert!(pm.tail_weight < 1e-12);
    }

    #[test]
    fn static_eigenstate_time_average() {
        let h = static_model(-0.25, 1.5, 0.7);
        let steps = 64;
        let dt = h.period() / steps as f64;
        let samples: Vec<CVector> = (0..=steps)
            .map(|j| CVector::from_vec(vec![C64::new(0.0, 0.0), C64::from_polar(1.0, -1.5 * j as f64 * dt)]))
            .collect();
        assert!((time_averaged_energy(&h, &samples).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn superposition_time_average_and_periodicity() {
        let steps = 128;
        let make = |omega: f64| {
            let h = static_model(0.0, 1.0, omega);
            let dt = h.period() / steps as f64;
            let s = std::f64::consts::FRAC_1_SQRT_2;
            let samples: Vec<CVector> = (0..=steps)
                .map(|j| CVector::from_vec(vec![C64::new(s, 0.0), C64::from_polar(s, -(j as f64) * dt)]))
                .collect();
            time_averaged_energy(&h, &samples)
        };
        assert!((make(1.0).unwrap() - 0.5).abs() < 1e-14);
        assert!(matches!(make(0.7), Err(FloquetError::NonPeriodic { .. })));
    }

    #[test]
    fn degenerate_static_pair_is_split_by_average_energy() {
        let h = static_model(0.0, 1.0, 0.5);
        let s = solve(&h, 4, &PropagationConfig::default()).unwrap();
        assert!(s.triplets.iter().all(|t| t.quasi_energy.abs() < 1e-10));
        assert!(s.triplets[0].avg_energy.abs() < 1e-10);
        assert!((s.triplets[1].avg_energy - 1.0).abs() < 1e-10);
    }

    #[test]
    fn drift_beyond_tolerance_aborts() {
        let h = circular();
        let cfg = PropagationConfig {
            unitarity_tol: 1e-30,
            ..Default::default()
        };
        assert!(matches!(
            propagate_period(&h, &cfg),
            Err(FloquetError::UnitarityDrift { .. })
        ));
    }
}
