//! Extended-space (Sambe) construction and the eigentriplet pipeline.
//!
//! The pipeline is: [`build_sambe`] → [`diagonalize`] →
//! [`select_representatives`] → [`group_degeneracies`] →
//! [`average_energy_block`] / [`resolve_degeneracies`]. [`solve`] runs all of
//! it, optionally choosing the harmonic cutoff by doubling.

mod mode;

pub use mode::{
    apply_floquet, apply_hamiltonian, average_energy_functional, quasi_energy_functional,
    replica_overlap, residual_norm, FloquetMode, NORM_TOL,
};

use serde::{Deserialize, Serialize};

use crate::linalg::{fold, hermitian_eigen, wrapped_difference, wrapped_distance};
use crate::model::FourierHamiltonian;
use crate::{CMatrix, CVector, FloquetError, Result, C64};

/// Default degeneracy tolerance relative to `ω`.
pub const DEFAULT_TOL_DEG_REL: f64 = 1e-8;
/// Quasi-energy change between `M` and `2M` accepted by the doubling rule.
pub const TRUNCATION_CONVERGENCE_TOL: f64 = 1e-9;
/// Largest cutoff tried by the doubling rule.
pub const MAX_AUTO_TRUNCATION: usize = 64;

/// Size-`(2M+1)·d` Hermitian matrix with blocks `H_{m-m'} + mω·δ_{mm'}`,
/// rows and columns ordered by harmonic `m = -M..=M`, then by basis state.
pub fn build_sambe(h: &FourierHamiltonian, truncation: usize) -> Result<CMatrix> {
    let required = h.max_harmonic().max(1);
    if truncation < required {
        return Err(FloquetError::TruncationTooSmall {
            requested: truncation,
            required,
        });
    }
    let d = h.dim();
    let m_max = truncation as i64;
    let n = (2 * truncation + 1) * d;
    let mut s = CMatrix::zeros(n, n);
    for m in -m_max..=m_max {
        for mp in -m_max..=m_max {
            let Some(block) = h.harmonic((m - mp) as i32) else {
                continue;
            };
            let r0 = (m + m_max) as usize * d;
            let c0 = (mp + m_max) as usize * d;
            s.view_mut((r0, c0), (d, d)).copy_from(block);
        }
        let r0 = (m + m_max) as usize * d;
        for a in 0..d {
            s[(r0 + a, r0 + a)] += C64::new(m as f64 * h.omega(), 0.0);
        }
    }
    Ok(s)
}

/// One eigenvalue/eigenvector of the extended-space matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEigenpair {
    pub value: f64,
    pub vector: CVector,
}

/// Full spectrum of a Hermitian matrix, ascending, with a residual check of
/// `‖Sv - λv‖ ≤ 1e-10·‖S‖` on every pair.
pub fn diagonalize(s: &CMatrix) -> Result<Vec<RawEigenpair>> {
    let (values, vectors) = hermitian_eigen(s)?;
    let scale = values
        .iter()
        .map(|v| v.abs())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(values.len());
    for (i, &value) in values.iter().enumerate() {
        let vector = vectors.column(i).into_owned();
        let residual = (s * &vector - vector.map(|z| z * value)).norm();
        if residual > 1e-10 * scale {
            return Err(FloquetError::EigenSolver {
                dim: s.nrows(),
                norm: scale,
                detail: format!("residual {residual:e} for eigenvalue {value}"),
            });
        }
        out.push(RawEigenpair { value, vector });
    }
    Ok(out)
}

/// A physical state picked from its replica family.
#[derive(Debug, Clone, PartialEq)]
pub struct Representative {
    pub mode: FloquetMode,
    /// Quasi-energy folded into `[0, ω)`.
    pub quasi_energy: f64,
    /// Extended-space eigenvalue of this particular replica.
    pub eigenvalue: f64,
    pub centroid: f64,
}

/// Runs of consecutive sorted eigenvalues closer than `tol`.
fn raw_clusters(raw: &[RawEigenpair], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=raw.len() {
        if i == raw.len() || raw[i].value - raw[i - 1].value > tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Picks one replica per physical state: `d` modes with quasi-energies folded
/// into `[0, ω)`, each the family member whose Fourier-weight centroid is
/// nearest zero.
///
/// Inside a cluster of equal eigenvalues the basis is first rotated to
/// diagonalize the centroid operator, so mixtures of different replica
/// families are separated before the centroids are compared.
pub fn select_representatives(
    raw: &[RawEigenpair],
    h: &FourierHamiltonian,
    truncation: usize,
    tol_deg: f64,
) -> Result<Vec<Representative>> {
    let d = h.dim();
    let omega = h.omega();
    let mut candidates: Vec<(f64, FloquetMode)> = Vec::with_capacity(raw.len());
    for cluster in raw_clusters(raw, tol_deg) {
        let modes: Vec<FloquetMode> = raw[cluster.clone()]
            .iter()
            .map(|p| FloquetMode::new(d, truncation, p.vector.clone()))
            .collect::<Result<_>>()?;
        let value = raw[cluster.start].value;
        if modes.len() == 1 {
            candidates.push((value, modes.into_iter().next().unwrap()));
            continue;
        }
        let k = modes.len();
        let centroid_op = CMatrix::from_fn(k, k, |i, j| {
            modes[i]
                .harmonic_range()
                .map(|m| modes[i].block(m).dotc(&modes[j].block(m)) * m as f64)
                .sum()
        });
        let (_, rot) = hermitian_eigen(&centroid_op)?;
        for (offset, mode) in rotate(&modes, &rot).into_iter().enumerate() {
            candidates.push((raw[cluster.start + offset].value, mode));
        }
    }

    let mut order: Vec<usize> = (0..candidates.len()).collect();
    let centroids: Vec<f64> = candidates.iter().map(|(_, m)| m.centroid()).collect();
    order.sort_by(|&a, &b| {
        centroids[a]
            .abs()
            .total_cmp(&centroids[b].abs())
            .then(a.cmp(&b))
    });

    let family_tol = (1e-6 * omega).max(tol_deg);
    let mut picked: Vec<usize> = Vec::with_capacity(d);
    for &j in &order {
        if picked.len() == d {
            break;
        }
        let (lambda_j, ref mode_j) = candidates[j];
        let mut captured = 0.0;
        for &i in &picked {
            let (lambda_i, ref mode_i) = candidates[i];
            if wrapped_distance(fold(lambda_i, omega), fold(lambda_j, omega), omega) > family_tol {
                continue;
            }
            let k = ((lambda_j - lambda_i) / omega).round() as i64;
            captured += mode_i.shifted(k).inner(mode_j).norm_sqr();
        }
        if captured < 0.5 {
            picked.push(j);
        }
    }
    if picked.len() < d {
        return Err(FloquetError::TooFewFamilies {
            found: picked.len(),
            expected: d,
            truncation,
        });
    }

    let mut reps: Vec<Representative> = picked
        .into_iter()
        .map(|j| {
            let (eigenvalue, ref mode) = candidates[j];
            let mode = mode.normalized().phase_fixed();
            Representative {
                quasi_energy: fold(eigenvalue, omega),
                eigenvalue,
                centroid: mode.centroid(),
                mode,
            }
        })
        .collect();
    reps.sort_by(|a, b| {
        a.quasi_energy
            .total_cmp(&b.quasi_energy)
            .then(a.eigenvalue.total_cmp(&b.eigenvalue))
    });
    Ok(reps)
}

/// `out_j = Σ_i rot[i, j]·modes_i`.
fn rotate(modes: &[FloquetMode], rot: &CMatrix) -> Vec<FloquetMode> {
    let (d, trunc) = (modes[0].dim(), modes[0].truncation());
    (0..rot.ncols())
        .map(|j| {
            let mut acc = CVector::zeros(modes[0].coeffs().len());
            for (i, mode) in modes.iter().enumerate() {
                acc += mode.coeffs() * rot[(i, j)];
            }
            FloquetMode::new(d, trunc, acc).expect("rotation preserves shape")
        })
        .collect()
}

/// States sharing a quasi-energy, brought to a common replica.
#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateGroup {
    /// Indices into the representative list.
    pub members: Vec<usize>,
    /// Shared quasi-energy in `[0, ω)`.
    pub quasi_energy: f64,
    /// Extended-space eigenvalue of the common replica.
    pub eigenvalue: f64,
    /// Member modes shifted into the common replica, in `members` order,
    /// on a window widened by the largest shift.
    pub modes: Vec<FloquetMode>,
    /// Cutoff of the resolved output modes.
    pub truncation: usize,
}

impl DegenerateGroup {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The group with its basis replaced by `Φ'_j = Σ_i C_ij Φ_i`.
    pub fn rotated(&self, c: &CMatrix) -> Self {
        Self {
            modes: rotate(&self.modes, c),
            ..self.clone()
        }
    }
}

/// Transitive clustering of quasi-energies within `tol_deg`, with the zone
/// boundary wrapped so values near `0` and near `ω` can share a group.
pub fn group_degeneracies(
    reps: &[Representative],
    omega: f64,
    tol_deg: f64,
) -> Vec<DegenerateGroup> {
    let n = reps.len();
    if n == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        reps[a]
            .quasi_energy
            .total_cmp(&reps[b].quasi_energy)
            .then(a.cmp(&b))
    });
    // Runs of consecutive sorted values; the last run may join the first.
    let mut runs: Vec<Vec<usize>> = vec![vec![order[0]]];
    for w in order.windows(2) {
        let gap = reps[w[1]].quasi_energy - reps[w[0]].quasi_energy;
        if gap <= tol_deg {
            runs.last_mut().unwrap().push(w[1]);
        } else {
            runs.push(vec![w[1]]);
        }
    }
    if runs.len() > 1 {
        let first = reps[order[0]].quasi_energy;
        let last = reps[order[n - 1]].quasi_energy;
        if wrapped_distance(first, last, omega) <= tol_deg {
            let tail = runs.pop().unwrap();
            let mut merged = tail;
            merged.extend(runs[0].iter().copied());
            runs[0] = merged;
        }
    }

    runs.into_iter()
        .map(|members| {
            let reference = *members
                .iter()
                .min_by(|&&a, &&b| {
                    reps[a]
                        .centroid
                        .abs()
                        .total_cmp(&reps[b].centroid.abs())
                        .then(a.cmp(&b))
                })
                .unwrap();
            let base = &reps[reference];
            let shifts: Vec<i64> = members
                .iter()
                .map(|&i| ((base.eigenvalue - reps[i].eigenvalue) / omega).round() as i64)
                .collect();
            // Widen the window so aligned replicas keep all their weight.
            let truncation = base.mode.truncation();
            let widened = truncation + shifts.iter().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0);
            let modes = members
                .iter()
                .zip(&shifts)
                .map(|(&i, &k)| reps[i].mode.with_truncation(widened).shifted(k))
                .collect();
            let mean_offset = members
                .iter()
                .map(|&i| wrapped_difference(reps[i].quasi_energy, base.quasi_energy, omega))
                .sum::<f64>()
                / members.len() as f64;
            DegenerateGroup {
                truncation,
                quasi_energy: fold(base.quasi_energy + mean_offset, omega),
                eigenvalue: base.eigenvalue,
                members,
                modes,
            }
        })
        .collect()
}

/// `H̄_ij = Σ_{m,m'} ⟨φ_i^(m)|H_{m-m'}|φ_j^(m')⟩` over the group members.
pub fn average_energy_block(group: &DegenerateGroup, h: &FourierHamiltonian) -> CMatrix {
    let k = group.len();
    let applied: Vec<CVector> = group
        .modes
        .iter()
        .map(|m| apply_hamiltonian(h, m))
        .collect();
    let mut block = CMatrix::from_fn(k, k, |i, j| group.modes[i].coeffs().dotc(&applied[j]));
    // Symmetrize away rounding so the block is exactly Hermitian.
    block = (&block + block.adjoint()).map(|z| z * 0.5);
    block
}

/// A resolved Floquet state `(Φ, ε, Ē)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenTriplet {
    pub mode: FloquetMode,
    /// Quasi-energy in `[0, ω)`.
    pub quasi_energy: f64,
    /// One-period average energy.
    pub avg_energy: f64,
    /// `‖(H^F - ε)Φ‖` for the stored replica.
    pub residual: f64,
    /// Fourier-weight centroid of the stored replica.
    pub centroid: f64,
    /// Set when the average energy is itself degenerate within the state's
    /// quasi-energy group; the order inside such ties is by
    /// [`FloquetMode::dominant_index`].
    #[serde(default)]
    pub ebar_degenerate: bool,
}

/// Provenance for a [`Spectrum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetadata {
    /// `"sambe"`, `"monodromy"` or `"variational"`.
    pub solver: String,
    pub dim: usize,
    pub omega: f64,
    /// Harmonic cutoff `M`.
    pub truncation: usize,
    pub tol_deg: f64,
    pub max_residual: f64,
    pub model_hash: String,
}

/// Eigentriplets ordered by average energy (ties: quasi-energy, then
/// dominant coefficient index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub metadata: SpectrumMetadata,
    pub triplets: Vec<EigenTriplet>,
}

impl Spectrum {
    /// Sorts the triplets into the documented order.
    pub fn new(mut triplets: Vec<EigenTriplet>, mut metadata: SpectrumMetadata) -> Self {
        order_triplets(&mut triplets, metadata.tol_deg);
        metadata.max_residual = triplets.iter().map(|t| t.residual).fold(0.0, f64::max);
        Self { metadata, triplets }
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn ground(&self) -> &EigenTriplet {
        &self.triplets[0]
    }

    pub fn quasi_energies(&self) -> Vec<f64> {
        self.triplets.iter().map(|t| t.quasi_energy).collect()
    }

    pub fn avg_energies(&self) -> Vec<f64> {
        self.triplets.iter().map(|t| t.avg_energy).collect()
    }
}

fn order_triplets(triplets: &mut [EigenTriplet], tie_tol: f64) {
    triplets.sort_by(|a, b| a.avg_energy.total_cmp(&b.avg_energy));
    let mut start = 0;
    while start < triplets.len() {
        let mut end = start + 1;
        while end < triplets.len()
            && triplets[end].avg_energy - triplets[end - 1].avg_energy <= tie_tol
        {
            end += 1;
        }
        if end - start > 1 {
            triplets[start..end].sort_by(|a, b| {
                a.quasi_energy
                    .total_cmp(&b.quasi_energy)
                    .then(a.mode.dominant_index().cmp(&b.mode.dominant_index()))
            });
        }
        start = end;
    }
}

/// Diagonalizes each group's average-energy block and rotates the members
/// into its eigenbasis. Every output mode is renormalized, moved to the
/// replica with centroid nearest zero and phase-fixed.
pub fn resolve_degeneracies(
    groups: &[DegenerateGroup],
    h: &FourierHamiltonian,
    tol_deg: f64,
) -> Result<Vec<EigenTriplet>> {
    let omega = h.omega();
    let mut out = Vec::new();
    for group in groups {
        let (values, modes) = if group.len() == 1 {
            (vec![f64::NAN], group.modes.clone())
        } else {
            let block = average_energy_block(group, h);
            let (values, rot) = hermitian_eigen(&block)?;
            (values, rotate(&group.modes, &rot))
        };
        for (i, mode) in modes.into_iter().enumerate() {
            let (mode, _) = mode.normalized().recentered();
            let mode = mode.with_truncation(group.truncation).normalized().phase_fixed();
            let eigenvalue = quasi_energy_functional(&mode, h)?;
            let avg_energy = average_energy_functional(&mode, h)?;
            let degenerate = group.len() > 1
                && values
                    .iter()
                    .enumerate()
                    .any(|(j, v)| j != i && (v - values[i]).abs() <= tol_deg);
            out.push(EigenTriplet {
                quasi_energy: fold(eigenvalue, omega),
                avg_energy,
                residual: residual_norm(h, &mode, eigenvalue),
                centroid: mode.centroid(),
                ebar_degenerate: degenerate,
                mode,
            });
        }
    }
    Ok(out)
}

/// Harmonic cutoff policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Truncation {
    /// Double `M` until every quasi-energy moves by less than `1e-9` between
    /// `M` and `2M`; the smaller cutoff is used.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub truncation: Truncation,
    /// Absolute degeneracy tolerance; `None` means `1e-8·ω`.
    pub tol_deg: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            truncation: Truncation::Auto,
            tol_deg: None,
        }
    }
}

impl SolveOptions {
    pub fn fixed(truncation: usize) -> Self {
        Self {
            truncation: Truncation::Fixed(truncation),
            tol_deg: None,
        }
    }

    pub fn tol_deg_for(&self, omega: f64) -> f64 {
        self.tol_deg.unwrap_or(DEFAULT_TOL_DEG_REL * omega)
    }
}

/// Full pipeline at a fixed cutoff.
pub fn solve_fixed(h: &FourierHamiltonian, truncation: usize, tol_deg: f64) -> Result<Spectrum> {
    let s = build_sambe(h, truncation)?;
    let raw = diagonalize(&s)?;
    let reps = select_representatives(&raw, h, truncation, tol_deg)?;
    let groups = group_degeneracies(&reps, h.omega(), tol_deg);
    let triplets = resolve_degeneracies(&groups, h, tol_deg)?;
    Ok(Spectrum::new(
        triplets,
        SpectrumMetadata {
            solver: "sambe".into(),
            dim: h.dim(),
            omega: h.omega(),
            truncation,
            tol_deg,
            max_residual: 0.0,
            model_hash: h.content_hash(),
        },
    ))
}

/// Largest distance from a quasi-energy in `a` to its nearest partner in `b`.
pub fn quasi_energy_shift(a: &Spectrum, b: &Spectrum) -> f64 {
    let omega = a.metadata.omega;
    a.triplets
        .iter()
        .map(|ta| {
            b.triplets
                .iter()
                .map(|tb| wrapped_distance(ta.quasi_energy, tb.quasi_energy, omega))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Smallest doubling cutoff certified against its double.
pub fn certify_truncation(h: &FourierHamiltonian, tol_deg: f64) -> Result<(usize, Spectrum)> {
    let mut m = h.max_harmonic().max(4);
    let mut current = solve_fixed(h, m, tol_deg)?;
    let mut change = f64::INFINITY;
    while 2 * m <= MAX_AUTO_TRUNCATION {
        let next = solve_fixed(h, 2 * m, tol_deg)?;
        change = quasi_energy_shift(&current, &next).max(quasi_energy_shift(&next, &current));
        if change < TRUNCATION_CONVERGENCE_TOL {
            return Ok((m, current));
        }
        m *= 2;
        current = next;
    }
    Err(FloquetError::TruncationNotConverged {
        max_truncation: m,
        last_change: change,
    })
}

/// Eigentriplets of `h` under the given options.
pub fn solve(h: &FourierHamiltonian, opts: &SolveOptions) -> Result<Spectrum> {
    let tol_deg = opts.tol_deg_for(h.omega());
    match opts.truncation {
        Truncation::Fixed(m) => solve_fixed(h, m, tol_deg),
        Truncation::Auto => certify_truncation(h, tol_deg).map(|(_, s)| s),
    }
}

/// `H̄_ij = ⟪Φ_i|H|Φ_j⟫` over all states of a spectrum, before any
/// quasi-energy projection.
pub fn unprojected_average_energy_matrix(spectrum: &Spectrum, h: &FourierHamiltonian) -> CMatrix {
    let modes: Vec<&FloquetMode> = spectrum.triplets.iter().map(|t| &t.mode).collect();
    let applied: Vec<CVector> = modes.iter().map(|m| apply_hamiltonian(h, m)).collect();
    let n = modes.len();
    CMatrix::from_fn(n, n, |i, j| modes[i].coeffs().dotc(&applied[j]))
}

/// Zeroes entries between states of different quasi-energy (within `tol`).
pub fn project_to_quasi_energy_blocks(matrix: &CMatrix, spectrum: &Spectrum, tol: f64) -> CMatrix {
    let omega = spectrum.metadata.omega;
    let eps = spectrum.quasi_energies();
    CMatrix::from_fn(matrix.nrows(), matrix.ncols(), |i, j| {
        if wrapped_distance(eps[i], eps[j], omega) <= tol {
            matrix[(i, j)]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `diag(e^{-iε_n T})` over a spectrum.
pub fn translation_phase_matrix(spectrum: &Spectrum) -> CMatrix {
    let period = 2.0 * std::f64::consts::PI / spectrum.metadata.omega;
    let eps = spectrum.quasi_energies();
    CMatrix::from_fn(eps.len(), eps.len(), |i, j| {
        if i == j {
            C64::from_polar(1.0, -eps[i] * period)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}
