use std::collections::BTreeMap;

use proptest::prelude::*;

use floquet::linalg::{fold, hermiticity_defect, simpson, wrapped_distance};
use floquet::model::{eval_at_time, validate};
use floquet::sambe::{
    average_energy_functional, build_sambe, project_to_quasi_energy_blocks, quasi_energy_functional,
    replica_overlap, translation_phase_matrix, unprojected_average_energy_matrix,
};
use floquet::{solve, CMatrix, CVector, FloquetMode, FourierHamiltonian, SolveOptions, Truncation, C64};

fn complex_entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0_f64, -1.0..1.0_f64), n)
}

fn matrix(dim: usize, entries: &[(f64, f64)]) -> CMatrix {
    CMatrix::from_fn(dim, dim, |r, c| {
        let (re, im) = entries[r * dim + c];
        C64::new(re, im)
    })
}

/// Random Hermitian drive with `dim ≤ 3` and up to two harmonics.
fn drive() -> impl Strategy<Value = FourierHamiltonian> {
    (1usize..=3, 1usize..=2, 0.6..3.0_f64).prop_flat_map(|(dim, harmonics, omega)| {
        (Just(dim), Just(omega), prop::collection::vec(complex_entries(dim * dim), harmonics + 1)).prop_map(
            |(dim, omega, blocks)| {
                let h0 = matrix(dim, &blocks[0]);
                let drive: Vec<(i32, CMatrix)> = blocks[1..]
                    .iter()
                    .enumerate()
                    .map(|(i, b)| (i as i32 + 1, matrix(dim, b).map(|z| z * 0.4)))
                    .collect();
                FourierHamiltonian::from_nonnegative(omega, h0, drive).unwrap()
            },
        )
    })
}

fn mode(dim: usize, truncation: usize) -> impl Strategy<Value = FloquetMode> {
    complex_entries(dim * (2 * truncation + 1)).prop_filter_map("nonzero", move |v| {
        let coeffs = CVector::from_iterator(v.len(), v.into_iter().map(|(re, im)| C64::new(re, im)));
        (coeffs.norm() > 1e-3).then(|| FloquetMode::new(dim, truncation, coeffs).unwrap().normalized())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn drives_are_hermitian_at_all_times(h in drive(), t in 0.0..20.0_f64) {
        prop_assert!(validate(&h).passed());
        let ht = eval_at_time(&h, t);
        prop_assert!(hermiticity_defect(&ht) <= 1e-14 * (1.0 + ht.norm()));
    }

    #[test]
    fn extended_space_matrix_is_hermitian(h in drive(), m in 1usize..6) {
        let s = build_sambe(&h, m.max(h.max_harmonic())).unwrap();
        prop_assert!(hermiticity_defect(&s) == 0.0);
    }

    #[test]
    fn quasi_energy_splits_into_average_energy_and_centroid(
        (h, phi) in drive().prop_flat_map(|h| { let d = h.dim(); (Just(h), mode(d, 3)) })
    ) {
        let eps = quasi_energy_functional(&phi, &h).unwrap();
        let ebar = average_energy_functional(&phi, &h).unwrap();
        prop_assert!((eps - ebar - h.omega() * phi.centroid()).abs() <= 1e-12);
    }

    #[test]
    fn harmonic_shift_moves_quasi_energy_by_whole_quanta(
        (h, phi) in drive().prop_flat_map(|h| { let d = h.dim(); (Just(h), mode(d, 3)) }),
        k in -4i64..=4,
    ) {
        let shifted = phi.with_truncation(3 + k.unsigned_abs() as usize).shifted(k);
        let de = quasi_energy_functional(&shifted, &h).unwrap() - quasi_energy_functional(&phi, &h).unwrap();
        prop_assert!((de - k as f64 * h.omega()).abs() <= 1e-12);
        let db = average_energy_functional(&shifted, &h).unwrap() - average_energy_functional(&phi, &h).unwrap();
        prop_assert!(db.abs() <= 1e-12);
    }

    #[test]
    fn replica_overlap_is_bounded(a in mode(2, 3), b in mode(2, 3), k in -3i64..=3) {
        let o = replica_overlap(&a, &b);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&o));
        let same = replica_overlap(&a, &a.with_truncation(3 + k.unsigned_abs() as usize).shifted(k));
        prop_assert!((same - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn fold_lands_in_the_zone(e in -1e3..1e3_f64, omega in 0.1..10.0_f64) {
        let f = fold(e, omega);
        prop_assert!((0.0..omega).contains(&f));
        prop_assert!(wrapped_distance(f, e, omega) <= 1e-9 * (1.0 + e.abs()));
    }

    #[test]
    fn simpson_integrates_cubics_exactly(c in prop::array::uniform4(-2.0..2.0_f64), n in 1usize..20) {
        let steps = 2 * n;
        let dt = 1.0 / steps as f64;
        let f = |x: f64| c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x;
        let samples: Vec<f64> = (0..=steps).map(|i| f(i as f64 * dt)).collect();
        let exact = c[0] + c[1] / 2.0 + c[2] / 3.0 + c[3] / 4.0;
        prop_assert!((simpson(&samples, dt).unwrap() - exact).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn resolved_spectra_satisfy_the_triplet_invariants(h in drive()) {
        let opts = SolveOptions { truncation: Truncation::Fixed(12.max(h.max_harmonic())), tol_deg: None };
        let s = solve(&h, &opts).unwrap();
        prop_assert_eq!(s.len(), h.dim());
        for w in s.triplets.windows(2) {
            prop_assert!(w[0].avg_energy <= w[1].avg_energy);
        }
        for t in &s.triplets {
            prop_assert!((0.0..h.omega()).contains(&t.quasi_energy));
            prop_assert!((t.mode.norm_sq() - 1.0).abs() <= 1e-12);
        }
        let full = unprojected_average_energy_matrix(&s, &h);
        let projected = project_to_quasi_energy_blocks(&full, &s, s.metadata.tol_deg);
        let phase = translation_phase_matrix(&s);
        prop_assert!((&projected * &phase - &phase * &projected).norm() <= 1e-12);
        prop_assert!(hermiticity_defect(&projected) <= 1e-12);
    }

    #[test]
    fn spectra_round_trip_through_json(levels in prop::collection::vec(-3.0..3.0_f64, 1..4), omega in 0.3..2.0_f64) {
        let n = levels.len();
        let h0 = CMatrix::from_fn(n, n, |r, c| if r == c { C64::new(levels[r], 0.0) } else { C64::new(0.0, 0.0) });
        let h = FourierHamiltonian::new(n, omega, BTreeMap::from([(0, h0)])).unwrap();
        let s = solve(&h, &SolveOptions::fixed(2)).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: floquet::Spectrum = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, s);
    }
}
