//! Average-energy ordering and truncation of a resolved spectrum, and the
//! perturbation-tracking experiment that contrasts quasi-energy-only labels
//! with `(ε, Ē)` labels.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_eigen, wrapped_distance};
use crate::model::{builtin_model, FourierHamiltonian, ModelSpec};
use crate::sambe::{replica_overlap, solve, EigenTriplet, FloquetMode, SolveOptions, Spectrum};
use crate::{CMatrix, FloquetError, Result, C64};

/// How many of the lowest-`Ē` states to retain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Keep {
    Count(usize),
    /// Every state with `Ē ≤` the threshold.
    Threshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSpectrum {
    /// Prefix of the spectrum order; the ground state comes first.
    pub retained: Vec<EigenTriplet>,
    pub keep: Keep,
    pub discarded: usize,
    /// `Ē` of the first discarded state minus that of the last retained one.
    pub gap: Option<f64>,
    /// Replica shifts used when expanding states on the retained set.
    pub max_shift: i64,
}

impl TruncatedSpectrum {
    /// Weight of `mode` on every replica `|k| ≤ max_shift` of each retained state.
    fn weights(&self, mode: &FloquetMode) -> Vec<f64> {
        self.retained
            .iter()
            .map(|t| {
                let base = t.mode.with_truncation(mode.truncation());
                (-self.max_shift..=self.max_shift)
                    .map(|k| base.shifted(k).inner(mode).norm_sqr())
                    .sum()
            })
            .collect()
    }

    /// `1 - Σ|c|²` for a normalized mode expanded on the retained states.
    pub fn discarded_weight(&self, mode: &FloquetMode) -> f64 {
        1.0 - self.weights(mode).iter().sum::<f64>() / mode.norm_sq()
    }

    /// `Σ|c_a|²Ē_a / Σ|c_a|²` over the retained states.
    pub fn average_energy_of(&self, mode: &FloquetMode) -> f64 {
        let w = self.weights(mode);
        let total: f64 = w.iter().sum();
        w.iter()
            .zip(&self.retained)
            .map(|(w, t)| w * t.avg_energy)
            .sum::<f64>()
            / total
    }
}

/// Keeps a prefix of the `Ē`-ordered spectrum.
pub fn order_and_truncate(spec: &Spectrum, keep: Keep) -> Result<TruncatedSpectrum> {
    let n = match keep {
        Keep::Count(0) => {
            return Err(FloquetError::InvalidArgument("keep count must be positive".into()));
        }
        Keep::Count(k) => k.min(spec.len()),
        Keep::Threshold(e) => {
            if !e.is_finite() {
                return Err(FloquetError::InvalidArgument("threshold must be finite".into()));
            }
            let k = spec.triplets.iter().take_while(|t| t.avg_energy <= e).count();
            if k == 0 {
                return Err(FloquetError::InvalidArgument(format!(
                    "threshold {e} lies below the ground state"
                )));
            }
            k
        }
    };
    let gap = spec
        .triplets
        .get(n)
        .map(|t| t.avg_energy - spec.triplets[n - 1].avg_energy);
    Ok(TruncatedSpectrum {
        retained: spec.triplets[..n].to_vec(),
        keep,
        discarded: spec.len() - n,
        gap,
        max_shift: (spec.metadata.truncation / 2) as i64,
    })
}

/// `|⟪Φᵃ_i|Φᵇ_j⟫|` on centroid-aligned replicas, capped at one.
pub fn overlap_matrix(a: &Spectrum, b: &Spectrum) -> Result<DMatrix<f64>> {
    if a.metadata.dim != b.metadata.dim || a.len() != b.len() {
        return Err(FloquetError::DimensionMismatch(format!(
            "spectra of {} states (dim {}) and {} states (dim {})",
            a.len(),
            a.metadata.dim,
            b.len(),
            b.metadata.dim
        )));
    }
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| {
        replica_overlap(&a.triplets[i].mode, &b.triplets[j].mode).min(1.0)
    }))
}

/// How states of the two solves were matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pairing {
    /// Position in the quasi-energy-sorted list.
    QuasiEnergyOrder,
    /// Nearest `(ε/ω, Ē/ω)` label, wrap-aware in `ε`.
    Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingRow {
    /// Index in the unperturbed spectrum.
    pub state: usize,
    pub eps0: f64,
    pub ebar0: f64,
    /// Labels of the label-paired perturbed state.
    pub eps: f64,
    pub ebar: f64,
    pub overlap_qorder: f64,
    pub overlap_label: f64,
    pub qorder_partner: usize,
    pub label_partner: usize,
    pub eps_drift: f64,
    pub ebar_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    pub perturbation: String,
    pub strength: f64,
    pub truncation: usize,
    pub pairings: Vec<Pairing>,
    pub rows: Vec<TrackingRow>,
}

impl TrackingReport {
    pub fn max_overlap(&self, pairing: Pairing) -> f64 {
        self.overlaps(pairing).fold(0.0, f64::max)
    }

    pub fn min_overlap(&self, pairing: Pairing) -> f64 {
        self.overlaps(pairing).fold(1.0, f64::min)
    }

    fn overlaps(&self, pairing: Pairing) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| match pairing {
            Pairing::QuasiEnergyOrder => r.overlap_qorder,
            Pairing::Label => r.overlap_label,
        })
    }
}

/// Indices sorted by `ε` quantized to the degeneracy tolerance; ties keep
/// spectrum order.
fn quasi_energy_order(spec: &Spectrum) -> Vec<usize> {
    let tol = spec.metadata.tol_deg.max(f64::MIN_POSITIVE);
    let mut idx: Vec<usize> = (0..spec.len()).collect();
    idx.sort_by_key(|&i| ((spec.triplets[i].quasi_energy / tol).round() as i64, i));
    idx
}

/// Greedy nearest-label assignment: `out[i]` is the partner in `b` of `a[i]`.
pub fn label_pairing(a: &Spectrum, b: &Spectrum) -> Vec<usize> {
    let omega = a.metadata.omega;
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, ta) in a.triplets.iter().enumerate() {
        for (j, tb) in b.triplets.iter().enumerate() {
            let de = wrapped_distance(ta.quasi_energy, tb.quasi_energy, omega) / omega;
            let db = (ta.avg_energy - tb.avg_energy) / omega;
            pairs.push((de.hypot(db), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut out = vec![usize::MAX; a.len()];
    let mut taken = vec![false; b.len()];
    for (_, i, j) in pairs {
        if out[i] == usize::MAX && !taken[j] {
            out[i] = j;
            taken[j] = true;
        }
    }
    out
}

/// Solves `h` and `h + strength·v` and reports how states pair up under
/// quasi-energy order and under `(ε, Ē)` labels.
pub fn perturb_and_track(
    h: &FourierHamiltonian,
    v: &FourierHamiltonian,
    strength: f64,
    opts: &SolveOptions,
) -> Result<TrackingReport> {
    if !strength.is_finite() || strength.abs() > 1e-3 * h.omega() {
        return Err(FloquetError::InvalidArgument(format!(
            "perturbation strength {strength} outside |s| ≤ 1e-3·ω"
        )));
    }
    let perturbed = h.perturbed(v, strength)?;
    let base = solve(h, opts)?;
    let moved = solve(&perturbed, opts)?;
    if base.metadata.truncation != moved.metadata.truncation {
        return Err(FloquetError::TruncationMismatch {
            unperturbed: base.metadata.truncation,
            perturbed: moved.metadata.truncation,
        });
    }
    let overlaps = overlap_matrix(&base, &moved)?;
    let q0 = quasi_energy_order(&base);
    let q1 = quasi_energy_order(&moved);
    let mut qorder = vec![0; base.len()];
    for (pos, &i) in q0.iter().enumerate() {
        qorder[i] = q1[pos];
    }
    let label = label_pairing(&base, &moved);
    let omega = h.omega();
    let rows = (0..base.len())
        .map(|i| {
            let t0 = &base.triplets[i];
            let tl = &moved.triplets[label[i]];
            TrackingRow {
                state: i,
                eps0: t0.quasi_energy,
                ebar0: t0.avg_energy,
                eps: tl.quasi_energy,
                ebar: tl.avg_energy,
                overlap_qorder: overlaps[(i, qorder[i])],
                overlap_label: overlaps[(i, label[i])],
                qorder_partner: qorder[i],
                label_partner: label[i],
                eps_drift: wrapped_distance(t0.quasi_energy, tl.quasi_energy, omega),
                ebar_drift: (t0.avg_energy - tl.avg_energy).abs(),
            }
        })
        .collect();
    Ok(TrackingReport {
        perturbation: format!("strength {strength:e} along model {}", &v.content_hash()[..12]),
        strength,
        truncation: base.metadata.truncation,
        pairings: vec![Pairing::QuasiEnergyOrder, Pairing::Label],
        rows,
    })
}

/// Static levels `{0, 1}` at `ω = 0.5`, so both states share `ε = 0`, pushed
/// apart by `v = diag(-1, +1)` at strength `1e-6·ω`. The perturbed
/// quasi-energies straddle the zone edge, so sorting by `ε` swaps the pair
/// while the `Ē` labels stay pinned.
pub fn contrast_fixture() -> Result<(FourierHamiltonian, FourierHamiltonian, f64)> {
    let h = builtin_model(&ModelSpec::new("static").with("e0", 0.0).with("e1", 1.0).with("omega", 0.5))?;
    let v = diagonal_static(&[-1.0, 1.0], h.omega())?;
    let strength = 1e-6 * h.omega();
    Ok((h, v, strength))
}

pub fn run_contrast_fixture() -> Result<TrackingReport> {
    let (h, v, strength) = contrast_fixture()?;
    perturb_and_track(&h, &v, strength, &SolveOptions::default())
}

/// Time-independent diagonal model.
pub fn diagonal_static(levels: &[f64], omega: f64) -> Result<FourierHamiltonian> {
    let n = levels.len();
    let h0 = CMatrix::from_fn(n, n, |r, c| if r == c { C64::new(levels[r], 0.0) } else { C64::new(0.0, 0.0) });
    FourierHamiltonian::new(n, omega, BTreeMap::from([(0, h0)]))
}

/// One row of the truncation-sanity experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationPoint {
    pub keep: usize,
    pub value: f64,
    pub error: f64,
    pub discarded_weight: f64,
}

/// Eight-site driven ring; the static ground state (in the `m = 0` block) is
/// expanded on the `k` lowest-`Ē` states for `k = 1, 2, 4, 8` and its
/// average energy compared with the full-basis value.
pub fn truncation_sanity_fixture() -> Result<Vec<TruncationPoint>> {
    let h = builtin_model(&ModelSpec::new("driven_ring").with("L", 8.0))?;
    let spec = solve(&h, &SolveOptions::default())?;
    let h0 = h.harmonic(0).cloned().expect("ring has a static part");
    let (_, vecs) = hermitian_eigen(&h0)?;
    let probe = FloquetMode::from_block(h.dim(), spec.metadata.truncation, 0, &vecs.column(0).into_owned())?;
    let full = order_and_truncate(&spec, Keep::Count(spec.len()))?.average_energy_of(&probe);
    let mut out = Vec::new();
    let mut k = 1;
    while k <= spec.len() {
        let t = order_and_truncate(&spec, Keep::Count(k))?;
        let value = t.average_energy_of(&probe);
        out.push(TruncationPoint {
            keep: k,
            value,
            error: (value - full).abs(),
            discarded_weight: t.discarded_weight(&probe),
        });
        k *= 2;
    }
    Ok(out)
}
