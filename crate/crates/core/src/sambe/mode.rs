//! Floquet modes as truncated Fourier block vectors, and the quadratic
//! forms evaluated on them.

use serde::{Deserialize, Serialize};

use crate::model::FourierHamiltonian;
use crate::{CVector, FloquetError, Result, C64};

/// Accepted deviation of `⟪Φ|Φ⟫` from one for the functionals.
pub const NORM_TOL: f64 = 1e-8;

/// `Φ(t) = Σ_{m=-M}^{M} φ^(m) e^{imωt}`, stored block by block from `m = -M`.
///
/// The inner product `⟪Φ|Φ'⟫ = (1/T)∫⟨Φ(t)|Φ'(t)⟩dt` is the plain sum over
/// blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModeRepr", into = "ModeRepr")]
pub struct FloquetMode {
    dim: usize,
    truncation: usize,
    coeffs: CVector,
}

impl FloquetMode {
    pub fn new(dim: usize, truncation: usize, coeffs: CVector) -> Result<Self> {
        if dim == 0 || coeffs.len() != (2 * truncation + 1) * dim {
            return Err(FloquetError::DimensionMismatch(format!(
                "expected {} coefficients for dim {dim} and M={truncation}, got {}",
                (2 * truncation + 1) * dim,
                coeffs.len()
            )));
        }
        Ok(Self {
            dim,
            truncation,
            coeffs,
        })
    }

    pub fn zeros(dim: usize, truncation: usize) -> Self {
        Self {
            dim,
            truncation,
            coeffs: CVector::zeros((2 * truncation + 1) * dim),
        }
    }

    /// A mode living entirely in harmonic block `m`.
    pub fn from_block(dim: usize, truncation: usize, m: i64, state: &CVector) -> Result<Self> {
        let mut mode = Self::zeros(dim, truncation);
        if state.len() != dim || m.unsigned_abs() as usize > truncation {
            return Err(FloquetError::DimensionMismatch(format!(
                "block m={m} with {} entries does not fit dim {dim}, M={truncation}",
                state.len()
            )));
        }
        mode.block_mut(m).copy_from(state);
        Ok(mode)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn coeffs(&self) -> &CVector {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> CVector {
        self.coeffs
    }

    /// Harmonic indices in storage order.
    pub fn harmonic_range(&self) -> std::ops::RangeInclusive<i64> {
        -(self.truncation as i64)..=self.truncation as i64
    }

    fn offset(&self, m: i64) -> usize {
        (m + self.truncation as i64) as usize * self.dim
    }

    pub fn block(&self, m: i64) -> nalgebra::DVectorView<'_, C64> {
        self.coeffs.rows(self.offset(m), self.dim)
    }

    pub fn block_mut(&mut self, m: i64) -> nalgebra::DVectorViewMut<'_, C64> {
        let off = self.offset(m);
        self.coeffs.rows_mut(off, self.dim)
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.norm_squared()
    }

    pub fn normalized(&self) -> Self {
        let n = self.coeffs.norm();
        let mut out = self.clone();
        if n > 0.0 {
            out.coeffs /= C64::new(n, 0.0);
        }
        out
    }

    /// `⟪self|other⟫` over the harmonics both modes store.
    pub fn inner(&self, other: &FloquetMode) -> C64 {
        assert_eq!(self.dim, other.dim, "mode dimensions differ");
        let common = self.truncation.min(other.truncation) as i64;
        (-common..=common)
            .map(|m| self.block(m).dotc(&other.block(m)))
            .sum()
    }

    /// `Σ_m m·‖φ^(m)‖² / ⟪Φ|Φ⟫`.
    pub fn centroid(&self) -> f64 {
        let total = self.norm_sq();
        if total == 0.0 {
            return 0.0;
        }
        self.harmonic_range()
            .map(|m| m as f64 * self.block(m).norm_squared())
            .sum::<f64>()
            / total
    }

    /// Weight in the outermost blocks `|m| = M`.
    pub fn edge_weight(&self) -> f64 {
        let m = self.truncation as i64;
        if m == 0 {
            return self.norm_sq();
        }
        self.block(m).norm_squared() + self.block(-m).norm_squared()
    }

    /// `e^{ikωt}Φ(t)`: block `m` moves to `m + k`; blocks pushed past `±M` are dropped.
    pub fn shifted(&self, k: i64) -> Self {
        let mut out = Self::zeros(self.dim, self.truncation);
        let m_max = self.truncation as i64;
        for m in self.harmonic_range() {
            let target = m + k;
            if target.abs() <= m_max {
                out.block_mut(target).copy_from(&self.block(m));
            }
        }
        out
    }

    /// The same mode on a different harmonic cutoff (zero-padded or cut).
    pub fn with_truncation(&self, truncation: usize) -> Self {
        let mut out = Self::zeros(self.dim, truncation);
        let common = self.truncation.min(truncation) as i64;
        for m in -common..=common {
            out.block_mut(m).copy_from(&self.block(m));
        }
        out
    }

    /// `Φ(t)` in the instantaneous Hilbert space.
    pub fn at_time(&self, t: f64, omega: f64) -> CVector {
        let mut out = CVector::zeros(self.dim);
        for m in self.harmonic_range() {
            let phase = C64::from_polar(1.0, m as f64 * omega * t);
            out += self.block(m).map(|z| z * phase);
        }
        out
    }

    /// Storage index of the largest-magnitude coefficient; near-ties go to the
    /// lowest index.
    pub fn dominant_index(&self) -> usize {
        let max = self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        self.coeffs
            .iter()
            .position(|z| z.norm() >= max * (1.0 - 1e-9))
            .unwrap_or(0)
    }

    /// Global phase fixed so the dominant coefficient is real and positive.
    pub fn phase_fixed(&self) -> Self {
        let idx = self.dominant_index();
        let z = self.coeffs[idx];
        let mut out = self.clone();
        if z.norm() > 0.0 {
            let phase = z.conj() / z.norm();
            out.coeffs *= phase;
        }
        out
    }

    /// Representation with centroid in `[-1/2, 1/2]`; returns the shift used.
    pub fn recentered(&self) -> (Self, i64) {
        let k = -self.centroid().round() as i64;
        (self.shifted(k), k)
    }
}

#[derive(Serialize, Deserialize)]
struct ModeRepr {
    dim: usize,
    truncation: usize,
    /// Real parts, one row per harmonic from `-M` to `M`.
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl From<FloquetMode> for ModeRepr {
    fn from(mode: FloquetMode) -> Self {
        let rows = |f: fn(&C64) -> f64| {
            mode.harmonic_range()
                .map(|m| mode.block(m).iter().map(f).collect())
                .collect()
        };
        ModeRepr {
            dim: mode.dim,
            truncation: mode.truncation,
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

impl TryFrom<ModeRepr> for FloquetMode {
    type Error = FloquetError;

    fn try_from(r: ModeRepr) -> Result<Self> {
        let blocks = 2 * r.truncation + 1;
        let ok = r.re.len() == blocks
            && r.im.len() == blocks
            && r.re.iter().chain(&r.im).all(|row| row.len() == r.dim);
        if !ok {
            return Err(FloquetError::DimensionMismatch(
                "mode coefficient rows do not match dim and truncation".into(),
            ));
        }
        let coeffs = CVector::from_iterator(
            blocks * r.dim,
            r.re.iter()
                .zip(&r.im)
                .flat_map(|(re, im)| re.iter().zip(im).map(|(&a, &b)| C64::new(a, b))),
        );
        FloquetMode::new(r.dim, r.truncation, coeffs)
    }
}

/// `(HΦ)^(m) = Σ_k H_k φ^(m-k)` restricted to the mode's harmonic window.
pub fn apply_hamiltonian(h: &FourierHamiltonian, mode: &FloquetMode) -> CVector {
    let mut out = FloquetMode::zeros(mode.dim(), mode.truncation());
    let m_max = mode.truncation() as i64;
    for (&k, hk) in h.harmonics() {
        let k = k as i64;
        for m in mode.harmonic_range() {
            let src = m - k;
            if src.abs() <= m_max {
                let contrib = hk * mode.block(src);
                let mut dst = out.block_mut(m);
                dst += contrib;
            }
        }
    }
    out.into_coeffs()
}

/// `(H - i∂t)Φ`, i.e. the truncated extended-space matrix times the mode.
pub fn apply_floquet(h: &FourierHamiltonian, mode: &FloquetMode) -> CVector {
    let mut out = apply_hamiltonian(h, mode);
    let d = mode.dim();
    let m_max = mode.truncation() as i64;
    for m in mode.harmonic_range() {
        let off = (m + m_max) as usize * d;
        let shift = C64::new(m as f64 * h.omega(), 0.0);
        for a in 0..d {
            out[off + a] += shift * mode.coeffs()[off + a];
        }
    }
    out
}

fn check_normalized(mode: &FloquetMode) -> Result<()> {
    let n = mode.norm_sq();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(FloquetError::Unnormalized(n));
    }
    Ok(())
}

fn check_dims(h: &FourierHamiltonian, mode: &FloquetMode) -> Result<()> {
    if h.dim() != mode.dim() {
        return Err(FloquetError::DimensionMismatch(format!(
            "mode dim {} vs model dim {}",
            mode.dim(),
            h.dim()
        )));
    }
    Ok(())
}

/// `ε[Φ] = ⟪Φ|H - i∂t|Φ⟫ = Σ ⟨φ^(m)|H_{m-m'}|φ^(m')⟩ + Σ mω‖φ^(m)‖²`.
pub fn quasi_energy_functional(mode: &FloquetMode, h: &FourierHamiltonian) -> Result<f64> {
    check_dims(h, mode)?;
    check_normalized(mode)?;
    Ok(mode.coeffs().dotc(&apply_floquet(h, mode)).re)
}

/// `Ē_cal[Φ] = (1/T)∫⟨Φ(t)|H(t)|Φ(t)⟩dt = Σ ⟨φ^(m)|H_{m-m'}|φ^(m')⟩`.
pub fn average_energy_functional(mode: &FloquetMode, h: &FourierHamiltonian) -> Result<f64> {
    check_dims(h, mode)?;
    check_normalized(mode)?;
    Ok(mode.coeffs().dotc(&apply_hamiltonian(h, mode)).re)
}

/// `‖(H^F - ε)Φ‖` with the truncated extended-space operator.
pub fn residual_norm(h: &FourierHamiltonian, mode: &FloquetMode, eigenvalue: f64) -> f64 {
    let hf = apply_floquet(h, mode);
    (hf - mode.coeffs().map(|z| z * eigenvalue)).norm()
}

/// Replica-aware overlap `|⟪shift_k(a)|b⟫|`, with `k` the shift bringing the
/// weight centroid of `a` nearest that of `b`. The shift is done on a
/// widened window so no weight of `a` is lost.
pub fn replica_overlap(a: &FloquetMode, b: &FloquetMode) -> f64 {
    let k = (b.centroid() - a.centroid()).round() as i64;
    let widened = a.truncation() + k.unsigned_abs() as usize;
    a.with_truncation(widened).shifted(k).inner(b).norm()
}
