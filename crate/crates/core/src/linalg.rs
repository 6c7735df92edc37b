//! Small dense linear-algebra helpers shared by the solvers.

use crate::{CMatrix, CVector, FloquetError, Result, C64};

fn to_faer(m: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted
/// ascending and eigenvectors as matching columns.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(FloquetError::DimensionMismatch(format!(
            "eigensolver needs a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let eig = to_faer(m)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| FloquetError::EigenSolver {
            dim: n,
            norm: m.norm(),
            detail: format!("{e:?}"),
        })?;
    let (s, u) = (eig.S(), eig.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].re.total_cmp(&s[b].re));
    let values = order.iter().map(|&i| s[i].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| u[(r, order[c])]);
    Ok((values, vectors))
}

/// Eigen-decomposition of a unitary matrix: eigenvalues on the unit circle
/// and an orthonormal set of eigenvectors (columns). Vectors belonging to
/// eigenvalues closer than `cluster_tol` are re-orthonormalized together.
pub fn unitary_eigen(u: &CMatrix, cluster_tol: f64) -> Result<(Vec<C64>, CMatrix)> {
    let n = u.nrows();
    let eig = to_faer(u).eigen().map_err(|e| FloquetError::EigenSolver {
        dim: n,
        norm: u.norm(),
        detail: format!("{e:?}"),
    })?;
    let (s, vecs) = (eig.S(), eig.U());
    let values: Vec<C64> = (0..n).map(|i| s[i]).collect();
    let mut columns: Vec<CVector> = (0..n)
        .map(|c| CVector::from_fn(n, |r, _| vecs[(r, c)]))
        .collect();
    // Modified Gram-Schmidt inside each cluster of nearby eigenvalues.
    let mut done = vec![false; n];
    for i in 0..n {
        if done[i] {
            continue;
        }
        let cluster: Vec<usize> = (i..n)
            .filter(|&j| !done[j] && (values[j] - values[i]).norm() <= cluster_tol)
            .collect();
        for (pos, &j) in cluster.iter().enumerate() {
            for &k in &cluster[..pos] {
                let proj = columns[k].dotc(&columns[j]);
                let prev = columns[k].clone();
                columns[j] -= prev * proj;
            }
            let norm = columns[j].norm();
            columns[j] /= C64::new(norm, 0.0);
            done[j] = true;
        }
    }
    let vectors = CMatrix::from_fn(n, n, |r, c| columns[c][r]);
    Ok((values, vectors))
}

/// `exp(-i·h·dt)` for Hermitian `h`, unitary up to rounding.
pub fn expm_hermitian(h: &CMatrix, dt: f64) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(h)?;
    let phases = CVector::from_iterator(
        values.len(),
        values.iter().map(|&e| C64::from_polar(1.0, -e * dt)),
    );
    let scaled = CMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| {
        vectors[(r, c)] * phases[c]
    });
    Ok(scaled * vectors.adjoint())
}

/// Composite Simpson rule over equally spaced samples (even number of intervals).
pub fn simpson(samples: &[f64], step: f64) -> Result<f64> {
    let intervals = samples.len().saturating_sub(1);
    if intervals == 0 || intervals % 2 != 0 {
        return Err(FloquetError::InvalidArgument(format!(
            "Simpson rule needs an even number of intervals, got {intervals}"
        )));
    }
    let mut acc = samples[0] + samples[intervals];
    for (i, v) in samples.iter().enumerate().take(intervals).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    Ok(acc * step / 3.0)
}

/// Fold an energy into the quasi-energy zone `[0, ω)`.
///
/// Values within `1e-12·ω` below the upper edge snap to zero so that exact
/// zone boundaries do not come back as `ω - ulp`.
pub fn fold(energy: f64, omega: f64) -> f64 {
    let r = energy.rem_euclid(omega);
    if omega - r <= 1e-12 * omega {
        0.0
    } else {
        r
    }
}

/// Signed distance `a - b` reduced to `(-ω/2, ω/2]`.
pub fn wrapped_difference(a: f64, b: f64, omega: f64) -> f64 {
    let d = (a - b).rem_euclid(omega);
    if d > 0.5 * omega {
        d - omega
    } else {
        d
    }
}

/// Distance between two quasi-energies on the zone circle.
pub fn wrapped_distance(a: f64, b: f64, omega: f64) -> f64 {
    wrapped_difference(a, b, omega).abs()
}

/// Largest deviation of `u^dag u` from the identity, entrywise.
pub fn unitarity_drift(u: &CMatrix) -> f64 {
    let prod = u.adjoint() * u;
    let n = prod.nrows();
    let mut worst = 0.0_f64;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((prod[(r, c)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Hermiticity defect `max |m - m^dag|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}
