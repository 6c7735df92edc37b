//! Time-periodic Hamiltonians stored as finite Fourier series.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CMatrix, FloquetError, Result, C64};

/// Absolute tolerance for the `H_{-m} = H_m^dag` pairing check, scaled by the
/// largest matrix entry.
const HERMITICITY_TOL: f64 = 1e-14;

/// `H(t) = Σ_m H_m e^{imωt}` with ħ = 1 and period `T = 2π/ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierHamiltonian {
    dim: usize,
    omega: f64,
    harmonics: BTreeMap<i32, CMatrix>,
}

impl FourierHamiltonian {
    /// Builds a Hamiltonian and rejects anything [`validate`] would flag.
    pub fn new(dim: usize, omega: f64, harmonics: BTreeMap<i32, CMatrix>) -> Result<Self> {
        let h = Self::from_parts_unchecked(dim, omega, harmonics);
        let report = validate(&h);
        if report.passed() {
            Ok(h)
        } else {
            Err(FloquetError::InvalidModel(report.violations.join(", ")))
        }
    }

    /// Builds a Hermitian drive from `H_0` and the non-negative harmonics:
    /// `H_0` is symmetrized and every `H_{-m}` is set to `H_m^dag`.
    pub fn from_nonnegative(
        omega: f64,
        h0: CMatrix,
        positive: impl IntoIterator<Item = (i32, CMatrix)>,
    ) -> Result<Self> {
        let dim = h0.nrows();
        let mut harmonics = BTreeMap::new();
        let sym = (&h0 + h0.adjoint()).map(|z| z * 0.5);
        harmonics.insert(0, sym);
        for (m, hm) in positive {
            if m <= 0 {
                return Err(FloquetError::InvalidModel(format!(
                    "expected a positive harmonic index, got {m}"
                )));
            }
            harmonics.insert(-m, hm.adjoint());
            harmonics.insert(m, hm);
        }
        Self::new(dim, omega, harmonics)
    }

    /// No checks; pair with [`validate`].
    pub fn from_parts_unchecked(
        dim: usize,
        omega: f64,
        harmonics: BTreeMap<i32, CMatrix>,
    ) -> Self {
        Self {
            dim,
            omega,
            harmonics,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn harmonics(&self) -> &BTreeMap<i32, CMatrix> {
        &self.harmonics
    }

    pub fn harmonic(&self, m: i32) -> Option<&CMatrix> {
        self.harmonics.get(&m)
    }

    /// Largest stored `|m|`.
    pub fn max_harmonic(&self) -> usize {
        self.harmonics
            .keys()
            .map(|m| m.unsigned_abs() as usize)
            .max()
            .unwrap_or(0)
    }

    /// `self + strength·other`; both must share `dim` and `ω`.
    pub fn perturbed(&self, other: &FourierHamiltonian, strength: f64) -> Result<Self> {
        if self.dim != other.dim || self.omega != other.omega {
            return Err(FloquetError::DimensionMismatch(format!(
                "perturbation has dim {} and omega {}, model has dim {} and omega {}",
                other.dim, other.omega, self.dim, self.omega
            )));
        }
        let mut harmonics = self.harmonics.clone();
        for (&m, hm) in &other.harmonics {
            let scaled = hm.map(|z| z * strength);
            harmonics
                .entry(m)
                .and_modify(|acc| *acc += &scaled)
                .or_insert(scaled);
        }
        Self::new(self.dim, self.omega, harmonics)
    }

    /// The same drive with a different frequency.
    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(self.dim, omega, self.harmonics.clone())
    }

    /// SHA-256 over a canonical byte encoding of `dim`, `ω` and the harmonics.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.dim as u64).to_le_bytes());
        hasher.update(self.omega.to_le_bytes());
        for (m, hm) in &self.harmonics {
            hasher.update(m.to_le_bytes());
            for r in 0..hm.nrows() {
                for c in 0..hm.ncols() {
                    hasher.update(hm[(r, c)].re.to_le_bytes());
                    hasher.update(hm[(r, c)].im.to_le_bytes());
                }
            }
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Outcome of [`validate`]; an empty violation list certifies `H(t)^dag = H(t)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `ω > 0`, `dim ≥ 1`, square `dim×dim` harmonics and `H_{-m} = H_m^dag`.
pub fn validate(h: &FourierHamiltonian) -> ValidationReport {
    let mut violations = Vec::new();
    if !(h.omega > 0.0 && h.omega.is_finite()) {
        violations.push("omega".to_string());
    }
    if h.dim == 0 {
        violations.push("dim".to_string());
    }
    let mut shape_ok = BTreeMap::new();
    for (&m, hm) in &h.harmonics {
        let ok = hm.nrows() == h.dim && hm.ncols() == h.dim;
        if !ok {
            violations.push(format!("dimension(m={m})"));
        }
        if hm.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            violations.push(format!("finite(m={m})"));
        }
        shape_ok.insert(m, ok);
    }
    for (&m, hm) in &h.harmonics {
        if m < 0 || !shape_ok[&m] {
            continue;
        }
        let scale = hm.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let partner = h.harmonics.get(&-m);
        let paired = match partner {
            Some(p) if shape_ok[&-m] => hm
                .iter()
                .zip(p.adjoint().iter())
                .all(|(a, b)| (a - b).norm() <= HERMITICITY_TOL * scale),
            Some(_) => true, // already reported as a dimension violation
            None => hm.iter().all(|z| z.norm() == 0.0),
        };
        if !paired {
            violations.push(format!("hermiticity(m={m})"));
        }
    }
    for (&m, hm) in &h.harmonics {
        if m < 0 && !h.harmonics.contains_key(&-m) && hm.iter().any(|z| z.norm() != 0.0) {
            violations.push(format!("hermiticity(m={})", -m));
        }
    }
    ValidationReport { violations }
}

/// `H(t) = Σ_m H_m e^{imωt}`.
pub fn eval_at_time(h: &FourierHamiltonian, t: f64) -> CMatrix {
    let mut out = CMatrix::zeros(h.dim, h.dim);
    for (&m, hm) in &h.harmonics {
        let phase = C64::from_polar(1.0, m as f64 * h.omega * t);
        out += hm.map(|z| z * phase);
    }
    out
}

/// Named built-in model plus numeric parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl ModelSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }
}

/// Names accepted by [`builtin_model`].
pub const BUILTIN_MODELS: [&str; 4] = [
    "static",
    "two_level_circular",
    "two_level_linear",
    "driven_ring",
];

struct Params<'a> {
    model: &'a str,
    given: &'a BTreeMap<String, f64>,
    allowed: Vec<String>,
}

impl<'a> Params<'a> {
    fn new(spec: &'a ModelSpec) -> Self {
        Self {
            model: &spec.name,
            given: &spec.params,
            allowed: Vec::new(),
        }
    }

    fn get(&mut self, key: &str, default: f64) -> Result<f64> {
        self.allowed.push(key.to_string());
        let v = self.given.get(key).copied().unwrap_or(default);
        if !v.is_finite() {
            return Err(domain(key, "must be finite"));
        }
        Ok(v)
    }

    fn positive(&mut self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key, default)?;
        if v <= 0.0 {
            return Err(domain(key, "must be positive"));
        }
        Ok(v)
    }

    fn finish(self) -> Result<()> {
        for key in self.given.keys() {
            if !self.allowed.iter().any(|a| a == key) {
                return Err(domain(
                    key,
                    &format!("not a parameter of `{}`", self.model),
                ));
            }
        }
        Ok(())
    }
}

fn domain(name: &str, reason: &str) -> FloquetError {
    FloquetError::ParameterDomain {
        name: name.to_string(),
        reason: reason.to_string(),
    }
}

fn pauli() -> (CMatrix, CMatrix, CMatrix) {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let sx = CMatrix::from_row_slice(2, 2, &[z, one, one, z]);
    let sy = CMatrix::from_row_slice(2, 2, &[z, -i, i, z]);
    let sz = CMatrix::from_row_slice(2, 2, &[one, z, z, -one]);
    (sx, sy, sz)
}

fn scaled(m: &CMatrix, s: f64) -> CMatrix {
    m.map(|z| z * s)
}

/// Resolves a [`ModelSpec`] into a Hamiltonian.
///
/// | model | parameters (defaults) |
/// |---|---|
/// | `static` | `omega` (0.7), levels `e0, e1, …` (0, 1) |
/// | `two_level_circular` | `Delta` (1), `V` (0.4), `omega` (1.5) |
/// | `two_level_linear` | `Delta` (1), `V` (0.4), `omega` (1.5) |
/// | `driven_ring` | `L` (4), `J` (1), `V` (0.5), `omega` (2.5), `flux` (0.3) |
///
/// `two_level_circular` is `(Δ/2)σz + (V/2)(σx cos ωt + σy sin ωt)`,
/// `two_level_linear` is `(Δ/2)σz + V σx cos ωt`, and `driven_ring` is an
/// `L`-site ring with hopping `J e^{i·flux/L}` and on-site drive
/// `V cos(2πj/L) cos ωt`. Zero drive amplitudes store no harmonics.
pub fn builtin_model(spec: &ModelSpec) -> Result<FourierHamiltonian> {
    let mut p = Params::new(spec);
    let h = match spec.name.as_str() {
        "static" => {
            let omega = p.positive("omega", 0.7)?;
            // Levels e0, e1, ...; two levels {0, 1} when none are given, e0 and
            // e1 default to 0 and 1, higher ones must be given without gaps.
            let count = spec
                .params
                .keys()
                .filter_map(|k| k.strip_prefix('e')?.parse::<usize>().ok())
                .map(|i| i + 1)
                .max()
                .unwrap_or(2);
            let mut levels = Vec::with_capacity(count);
            for i in 0..count {
                let key = format!("e{i}");
                if i >= 2 && !spec.params.contains_key(&key) {
                    return Err(domain(&key, "missing level between given ones"));
                }
                levels.push(p.get(&key, i as f64)?);
            }
            p.finish()?;
            let diag = CMatrix::from_fn(levels.len(), levels.len(), |r, c| {
                if r == c {
                    C64::new(levels[r], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            FourierHamiltonian::from_nonnegative(omega, diag, [])?
        }
        "two_level_circular" => {
            let delta = p.get("Delta", 1.0)?;
            let v = p.get("V", 0.4)?;
            let omega = p.positive("omega", 1.5)?;
            p.finish()?;
            let (sx, sy, sz) = pauli();
            let h0 = scaled(&sz, delta / 2.0);
            // (V/2)(σx cos + σy sin) = (V/4)(σx - iσy) e^{iωt} + h.c.
            let h1 = (&sx - sy.map(|z| z * C64::new(0.0, 1.0))).map(|z| z * (v / 4.0));
            let drive = if v != 0.0 { vec![(1, h1)] } else { vec![] };
            FourierHamiltonian::from_nonnegative(omega, h0, drive)?
        }
        "two_level_linear" => {
            let delta = p.get("Delta", 1.0)?;
            let v = p.get("V", 0.4)?;
            let omega = p.positive("omega", 1.5)?;
            p.finish()?;
            let (sx, _, sz) = pauli();
            let h0 = scaled(&sz, delta / 2.0);
            let drive = if v != 0.0 {
                vec![(1, scaled(&sx, v / 2.0))]
            } else {
                vec![]
            };
            FourierHamiltonian::from_nonnegative(omega, h0, drive)?
        }
        "driven_ring" => {
            let l = p.get("L", 4.0)?;
            let j = p.get("J", 1.0)?;
            let v = p.get("V", 0.5)?;
            let omega = p.positive("omega", 2.5)?;
            let flux = p.get("flux", 0.3)?;
            p.finish()?;
            if l.fract() != 0.0 || !(2.0..=512.0).contains(&l) {
                return Err(domain("L", "must be an integer in [2, 512]"));
            }
            let sites = l as usize;
            let mut h0 = CMatrix::zeros(sites, sites);
            let hop = C64::from_polar(-j, flux / l);
            for s in 0..sites {
                let next = (s + 1) % sites;
                h0[(next, s)] += hop;
                h0[(s, next)] += hop.conj();
            }
            let onsite = CMatrix::from_fn(sites, sites, |r, c| {
                if r == c {
                    C64::new(0.5 * v * (2.0 * PI * r as f64 / l).cos(), 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            let drive = if v != 0.0 { vec![(1, onsite)] } else { vec![] };
            FourierHamiltonian::from_nonnegative(omega, h0, drive)?
        }
        other => return Err(FloquetError::UnknownModel(other.to_string())),
    };
    Ok(h)
}

/// One harmonic in the model JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicEntry {
    pub m: i32,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Model JSON: explicit harmonics or a built-in with parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelFile {
    Builtin {
        builtin: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Explicit {
        dim: usize,
        omega: f64,
        harmonics: Vec<HarmonicEntry>,
    },
}

impl ModelFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Resolves to a validated Hamiltonian. A harmonic given only for `m` gets
    /// its `-m` partner filled in as the conjugate transpose.
    pub fn resolve(&self) -> Result<FourierHamiltonian> {
        match self {
            ModelFile::Builtin { builtin, params } => builtin_model(&ModelSpec {
                name: builtin.clone(),
                params: params.clone(),
            }),
            ModelFile::Explicit {
                dim,
                omega,
                harmonics,
            } => {
                let mut map = BTreeMap::new();
                for entry in harmonics {
                    let mat = entry_matrix(entry, *dim)?;
                    if map.insert(entry.m, mat).is_some() {
                        return Err(FloquetError::InvalidModel(format!(
                            "harmonic m={} listed twice",
                            entry.m
                        )));
                    }
                }
                let missing: Vec<(i32, CMatrix)> = map
                    .iter()
                    .filter(|(m, _)| !map.contains_key(&-**m))
                    .map(|(m, hm)| (-*m, hm.adjoint()))
                    .collect();
                map.extend(missing);
                FourierHamiltonian::new(*dim, *omega, map)
            }
        }
    }

    pub fn from_hamiltonian(h: &FourierHamiltonian) -> Self {
        ModelFile::Explicit {
            dim: h.dim(),
            omega: h.omega(),
            harmonics: h
                .harmonics()
                .iter()
                .map(|(&m, hm)| HarmonicEntry {
                    m,
                    re: (0..hm.nrows())
                        .map(|r| (0..hm.ncols()).map(|c| hm[(r, c)].re).collect())
                        .collect(),
                    im: (0..hm.nrows())
                        .map(|r| (0..hm.ncols()).map(|c| hm[(r, c)].im).collect())
                        .collect(),
                })
                .collect(),
        }
    }
}

fn entry_matrix(entry: &HarmonicEntry, dim: usize) -> Result<CMatrix> {
    let shape_ok = entry.re.len() == dim
        && entry.im.len() == dim
        && entry.re.iter().chain(&entry.im).all(|row| row.len() == dim);
    if !shape_ok {
        return Err(FloquetError::InvalidModel(format!("dimension(m={})", entry.m)));
    }
    Ok(CMatrix::from_fn(dim, dim, |r, c| {
        C64::new(entry.re[r][c], entry.im[r][c])
    }))
}
