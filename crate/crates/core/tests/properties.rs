use gsp_persistence::bounds::{
    fejer_constant, fejer_variance, find_split, log_iid_positivity_bound, log_product_positivity,
};
use gsp_persistence::covariance::{holder_constant, increment_variance};
use gsp_persistence::persistence::{decay_fit, orthant_probability, read_estimates_csv, write_estimates_csv, EstimateMethod};
use gsp_persistence::{covariance, gram, Atom, Band, DualDomain, HoleEstimate, SpectralMeasure, SymmetricInterval, Tabulated};
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::f64::consts::PI;

fn band_strategy(max_hi: f64) -> impl Strategy<Value = Band> {
    (0.0..max_hi, 0.01..2.0f64, 0.05..3.0f64).prop_map(move |(lo, width, h)| Band::new(lo, (lo + width).min(max_hi + 2.0), h))
}

fn measure_strategy(max_hi: f64) -> impl Strategy<Value = SpectralMeasure> {
    (
        prop::collection::vec(band_strategy(max_hi), 1..4),
        prop::collection::vec((0.0..max_hi, 0.01..1.5f64), 0..3),
    )
        .prop_map(|(bands, atoms)| {
            let atoms = atoms.into_iter().map(|(l, w)| Atom::new(l, w)).collect();
            SpectralMeasure::new(DualDomain::RealTime, bands, atoms, vec![]).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interval_mass_is_symmetric(rho in measure_strategy(5.0), lo in -8.0..8.0f64, len in 0.0..6.0f64) {
        let hi = lo + len;
        prop_assert_eq!(rho.interval_mass(lo, hi).unwrap(), rho.interval_mass(-hi, -lo).unwrap());
    }

    #[test]
    fn decompose_conserves_mass(h in 0.5..3.0f64, extra in prop::collection::vec(band_strategy(4.0), 0..3), frac in 0.0..1.0f64, half in 0.1..3.0f64) {
        let mut bands = vec![Band::new(0.0, 3.0, h)];
        bands.extend(extra);
        let rho = SpectralMeasure::new(DualDomain::RealTime, bands, vec![], vec![]).unwrap();
        let (part, rest) = rho.decompose(frac * h, SymmetricInterval::centred(half)).unwrap();
        let total = rho.total_mass();
        prop_assert!(((part.total_mass() + rest.total_mass()) - total).abs() <= 1e-12 * total);
        prop_assert!(rest.bands().iter().all(|b| b.height >= 0.0));
    }

    #[test]
    fn fold_reproduces_lattice_covariance(rho in measure_strategy(9.0), k in prop::sample::select(vec![2u32, 3, 5])) {
        let folded = rho.fold(k).unwrap();
        for j in 0..12 {
            let a = covariance(&folded, f64::from(j));
            let b = covariance(&rho, f64::from(k * j));
            prop_assert!((a - b).abs() < 1e-10, "j = {j}: {a} vs {b}");
        }
    }

    #[test]
    fn origin_regularity_monotone(rho in measure_strategy(4.0), a in 0.05..4.0f64, shrink in 0.05..1.0f64) {
        let wide = rho.verify_origin_regularity(a).unwrap();
        let narrow = rho.verify_origin_regularity(a * shrink).unwrap();
        prop_assert!(narrow.m >= wide.m);
        prop_assert!(narrow.upper <= wide.upper);
    }

    #[test]
    fn covariance_even_and_bounded(rho in measure_strategy(6.0), t in -200.0..200.0f64) {
        let r0 = covariance(&rho, 0.0);
        let r = covariance(&rho, t);
        prop_assert!((r - covariance(&rho, -t)).abs() <= 1e-14 * r0.max(1.0));
        prop_assert!(r.abs() <= r0 * (1.0 + 1e-12));
    }

    #[test]
    fn tabulated_band_matches_closed_form(lo in 0.0..3.0f64, width in 0.1..3.0f64, h in 0.1..2.0f64, t in 0.0..80.0f64, nodes in 2usize..40) {
        let hi = lo + width;
        let band = SpectralMeasure::band(DualDomain::RealTime, lo, hi, h).unwrap();
        let table = Tabulated::from_fn(lo, hi, nodes, |_| h).unwrap();
        let tab = SpectralMeasure::tabulated(DualDomain::RealTime, table).unwrap();
        let (a, b) = (covariance(&band, t), covariance(&tab, t));
        prop_assert!((a - b).abs() <= 1e-8 * band.total_mass(), "{a} vs {b}");
    }

    #[test]
    fn gram_psd_before_jitter(rho in measure_strategy(4.0), points in prop::collection::btree_set(0u32..4000, 1..64)) {
        let pts: Vec<f64> = points.into_iter().map(|p| f64::from(p) * 0.01).collect();
        let g = gram(&rho, &pts).unwrap();
        let ev = g.min_eigenvalue.unwrap();
        prop_assert!(ev >= -1e-10 * g.r0, "min eigenvalue {ev}");
        for i in 0..g.dim() {
            prop_assert_eq!(g.entries[(i, i)], g.r0 + g.jitter_applied);
            for j in 0..i {
                prop_assert_eq!(g.entries[(i, j)], g.entries[(j, i)]);
            }
        }
    }

    #[test]
    fn increments_obey_holder_bound(rho in measure_strategy(4.0), delta in 0.1..1.9f64, s in 0.0..50.0f64, t in 0.0..50.0f64) {
        let c = holder_constant(&rho, delta).unwrap();
        let d2 = increment_variance(&rho, s, t);
        prop_assert!(d2 <= c * (t - s).abs().powf(delta) * (1.0 + 1e-9) + 1e-12 * rho.total_mass());
    }

    #[test]
    fn product_never_exceeds_iid_bound(b in prop::collection::vec(-5.0..5.0f64, 1..80), sigma in 0.1..4.0f64, slack in 1e-9..2.0f64) {
        let q = b.iter().sum::<f64>() / b.len() as f64 + slack;
        let exact = log_product_positivity(&b, sigma).unwrap();
        let bound = log_iid_positivity_bound(q, sigma, b.len() as u32).unwrap();
        prop_assert!(exact <= bound + 1e-12 * bound.abs());
    }

    #[test]
    fn fejer_variance_dominated(lo in 0.2..2.0f64, width in 0.1..3.0f64, h in 0.1..2.0f64, atom in 0.2..5.0f64) {
        let a = lo.min(atom);
        let mu = SpectralMeasure::new(DualDomain::RealTime, vec![Band::new(lo, lo + width, h)], vec![Atom::new(atom, 0.3)], vec![]).unwrap();
        let c0 = fejer_constant(&mu, a, 0.0).unwrap().c0;
        for n in [1u32, 2, 3, 5, 8, 13, 50, 200, 1000] {
            prop_assert!(f64::from(n) * fejer_variance(&mu, n).unwrap() <= c0);
        }
    }

    #[test]
    fn split_is_sound(path in prop::collection::vec(-3.0..3.0f64, 48), q in -1.0..2.0f64) {
        let (res, k, n) = (3usize, 4u32, 16u32);
        let mean = path.iter().sum::<f64>() / path.len() as f64;
        match find_split(&path, res, k, q, n) {
            Ok(s) => {
                let offset = (s.l * res as f64).round() as usize;
                let avg = (0..4).map(|j| path[j * 12 + offset]).sum::<f64>() / 4.0;
                prop_assert!(avg < q);
            }
            Err(_) => prop_assert!(mean >= q - 1e-12),
        }
    }

    #[test]
    fn identity_orthant_exact(n in 1usize..40, seed in any::<u64>()) {
        let cov = DMatrix::identity(n, n);
        let est = orthant_probability(&cov, &vec![0.0; n], &vec![f64::INFINITY; n], 16, seed).unwrap();
        prop_assert!((est.log_p - n as f64 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn decay_fit_recovers_linear_rate(theta in 0.01..3.0f64, b in -2.0..2.0f64, count in 3usize..12) {
        let est: Vec<HoleEstimate> = (1..=count)
            .map(|n| HoleEstimate { n: n as f64, grid_step: 1.0, log_h: -(theta * n as f64 + b), std_err: 0.05, method: EstimateMethod::ExactOracle, n_samples: 0, seed: 0 })
            .collect();
        let fit = decay_fit(&est).unwrap();
        prop_assert!((fit.theta - theta).abs() < 1e-9);
        prop_assert!(fit.r_squared > 1.0 - 1e-9);
    }

    #[test]
    fn estimate_csv_round_trip(rows in prop::collection::vec((0.0..100.0f64, -50.0..0.0f64, 0.0..1.0f64, any::<u64>()), 0..10)) {
        let est: Vec<HoleEstimate> = rows
            .into_iter()
            .map(|(n, log_h, se, seed)| HoleEstimate { n, grid_step: 0.25, log_h, std_err: se, method: EstimateMethod::SequentialConditioning, n_samples: 7, seed })
            .collect();
        let mut buf = Vec::new();
        write_estimates_csv(&est, &mut buf).unwrap();
        prop_assert_eq!(read_estimates_csv(buf.as_slice()).unwrap(), est);
    }
}

#[test]
fn fold_of_remark_band_is_uniform() {
    for k in [2u32, 3, 4] {
        let kf = f64::from(k);
        for l in 1..=k {
            let lf = f64::from(l);
            let rho = SpectralMeasure::band(DualDomain::RealTime, (2.0 * lf - 1.0) * PI / kf, 2.0 * lf * PI / kf, 1.0).unwrap();
            let folded = rho.fold(k).unwrap();
            for x in [0.1, 1.0, 2.0, 3.0] {
                assert!((folded.density_at(x) - 1.0 / kf).abs() < 1e-12);
            }
        }
    }
}
