mod common;

use common::{max_abs, max_diff};
use mbsim_core::experiments::truncation_decay_of;
use mbsim_core::integrate::{random_band_scalar, random_band_vector_free};
use mbsim_core::spectral::ops::LpBlockIndex;
use mbsim_core::spectral::{
    bessel_potential, curl, divergence, forward_transform, gradient, leray_project, lp_block, norm, partial, truncate,
    truncate_vector, Field, NormSpec,
};
use mbsim_core::{Grid, SpectralScalar};
use proptest::prelude::*;

fn scalar(dim: usize, n: usize, samples: &[f64]) -> SpectralScalar {
    forward_transform(Grid::new(dim, n).unwrap(), samples).unwrap()
}

fn samples(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

fn close(a: &SpectralScalar, b: &SpectralScalar, rel: f64) -> bool {
    max_diff(a.coeffs(), b.coeffs()) <= rel * max_abs(a.coeffs()).max(max_abs(b.coeffs())).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operators_preserve_hermitian_symmetry(x in samples(256), s in -2.0f64..3.0, r in 0.5f64..5.0) {
        let f = scalar(2, 16, &x);
        prop_assert_eq!(f.hermitian_defect(), 0.0);
        prop_assert!(bessel_potential(&f, s).hermitian_defect() <= 1e-15 * f.max_abs_coeff() * 1e3);
        prop_assert_eq!(truncate(&f, r).unwrap().hermitian_defect(), 0.0);
        prop_assert_eq!(partial(&f, 1).hermitian_defect(), 0.0);
    }

    #[test]
    fn bessel_potentials_compose(x in samples(256), s in -2.0f64..2.0, t in -2.0f64..2.0) {
        let f = scalar(2, 16, &x);
        let lhs = bessel_potential(&bessel_potential(&f, t), s);
        let rhs = bessel_potential(&f, s + t);
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }

    #[test]
    fn truncation_is_an_orthogonal_projection(x in samples(256), y in samples(256), r in 0.5f64..5.0) {
        let f = scalar(2, 16, &x);
        let g = scalar(2, 16, &y);
        let pf = truncate(&f, r).unwrap();
        prop_assert_eq!(&truncate(&pf, r).unwrap(), &pf);
        let a = pf.inner(&g);
        let b = f.inner(&truncate(&g, r).unwrap());
        prop_assert!((a - b).abs() <= 1e-13 * (f.l2_sq() * g.l2_sq()).sqrt());
    }

    #[test]
    fn leray_projection_is_idempotent(seed in 0u64..1000) {
        let grid = Grid::new(3, 8).unwrap();
        let v = random_band_vector_free(grid, 1.0, 2.5, seed, 0);
        let p = leray_project(&v);
        let pp = leray_project(&p);
        for (a, b) in p.components().iter().zip(pp.components()) {
            prop_assert!(close(a, b, 1e-14));
        }
        let div = divergence(&p);
        prop_assert!(div.max_abs_coeff() <= 1e-14 * p.components()[0].max_abs_coeff().max(1e-300) * 10.0);
    }

    #[test]
    fn littlewood_paley_blocks_partition(x in samples(1024)) {
        let f = scalar(2, 32, &x);
        let blocks: Vec<SpectralScalar> = LpBlockIndex::all_for(f.grid()).into_iter().map(|j| lp_block(&f, j)).collect();
        let mut sum = SpectralScalar::zeros(f.grid());
        for b in &blocks {
            sum = sum.add(b);
        }
        prop_assert_eq!(&sum, &f);
        for i in 0..blocks.len() {
            for j in (i + 1)..blocks.len() {
                prop_assert_eq!(blocks[i].inner(&blocks[j]), 0.0);
            }
        }
    }

    #[test]
    fn curl_annihilates_gradients_and_divergence_annihilates_curls(x in samples(512)) {
        let f = scalar(3, 8, &x);
        let g = gradient(&f);
        match curl(&g) {
            Field::Vector(c) => {
                for comp in c.components() {
                    prop_assert!(comp.max_abs_coeff() <= 1e-14 * f.max_abs_coeff() * 10.0);
                }
            }
            Field::Scalar(_) => prop_assert!(false, "curl in 3D must be a vector"),
        }
        let v = random_band_vector_free(f.grid(), 1.0, 2.5, x.len() as u64, 3);
        match curl(&v) {
            Field::Vector(c) => prop_assert!(divergence(&c).max_abs_coeff() <= 1e-13),
            Field::Scalar(_) => prop_assert!(false, "curl in 3D must be a vector"),
        }
    }

    #[test]
    fn interpolation_inequality_holds(x in samples(256), s in 0.5f64..4.0, frac in 0.0f64..1.0) {
        let f = scalar(2, 16, &x);
        let (lhs, rhs) = mbsim_core::diagnostics::probes::probe_interpolation(&f, frac * s, s).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn truncation_error_decays_at_the_predicted_rate(seed in 0u64..1000, k in 0.5f64..3.0) {
        let grid = Grid::new(2, 32).unwrap();
        let f = random_band_scalar(grid, 2.0, 10.0, seed, 0);
        let report = truncation_decay_of(&f, 1.0, k, &[1.5, 3.0, 6.0]).unwrap();
        prop_assert!(report.bound_holds);
    }

    #[test]
    fn besov_and_bmo_are_dominated_by_linf(x in samples(1024)) {
        let f = scalar(2, 32, &x);
        let linf = norm(&f, NormSpec::Linf).unwrap();
        let besov = norm(&f, NormSpec::Besov0InfInf).unwrap();
        let bmo = norm(&f, NormSpec::BmoApprox).unwrap();
        let blocks = LpBlockIndex::all_for(f.grid()).len() as f64;
        prop_assert!(besov <= blocks * linf * (1.0 + 1e-12));
        prop_assert!(bmo <= 2.0 * linf * (1.0 + 1e-12));
    }

    #[test]
    fn truncating_a_vector_truncates_each_component(seed in 0u64..1000, r in 0.5f64..3.0) {
        let v = random_band_vector_free(Grid::new(2, 16).unwrap(), 1.0, 5.0, seed, 1);
        let tv = truncate_vector(&v, r).unwrap();
        for (a, b) in tv.components().iter().zip(v.components()) {
            prop_assert_eq!(a, &truncate(b, r).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn norms_do_not_depend_on_worker_count(x in samples(4096)) {
        let f = scalar(2, 64, &x);
        let specs = [NormSpec::L2, NormSpec::Hs(1.5), NormSpec::Lp(4.0), NormSpec::Linf, NormSpec::Besov0InfInf, NormSpec::BmoApprox];
        let eval = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| specs.iter().map(|s| norm(&f, *s).unwrap().to_bits()).collect::<Vec<u64>>())
        };
        prop_assert_eq!(eval(1), eval(3));
    }
}
