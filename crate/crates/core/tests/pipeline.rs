use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

use rproj_core::analysis::{concentration_counts, finitary_check, BoundForm, FinitaryOptions};
use rproj_core::energy::{projected_energies, TruncatedEnergyParams};
use rproj_core::pointcloud::{
    generate, read_cloud, verify_regularity, write_cloud, CantorAxis, GeneratorKind, GeneratorSpec,
};
use rproj_core::sampling::{rng, sample_annulus};
use rproj_core::{
    factor_map, project, FamilySpec, ParamVector, Point, PointCloud, ProjectionFamily,
};

fn custom_family(m: usize, seed: u64) -> ProjectionFamily {
    let mut r = rng(seed);
    let mut l = DMatrix::<f64>::identity(m, m);
    let mut a = DMatrix::<f64>::zeros(m, m);
    for v in l.iter_mut() {
        *v += 0.3 * r.gen_range(-1.0..1.0);
    }
    for v in a.iter_mut() {
        *v = r.gen_range(-1.0..1.0);
    }
    let q = a.transpose() * &a + DMatrix::identity(m, m) * 0.5;
    ProjectionFamily::new(l, q).unwrap()
}

proptest! {
    #[test]
    fn projection_along_rays_is_a_quadratic_in_s(
        seed in 0u64..1000,
        coords in prop::collection::vec(-1.0f64..1.0, 5),
        t in prop::collection::vec(-2.0f64..2.0, 3),
        s in -3.0f64..3.0,
    ) {
        let fam = custom_family(3, seed);
        let x = Point::from_coords(coords).unwrap();
        let t = ParamVector(t);
        let f = factor_map(&fam, &t, &x).unwrap();
        let direct = project(&fam, &t.scaled(s), &x).unwrap();
        let via_factor = f[0] + s * f[1] + s * s * f[2];
        let scale = f[0].abs() + (s * f[1]).abs() + (s * s * f[2]).abs();
        prop_assert!((direct - via_factor).abs() <= 1e-13 * scale.max(1.0));
    }
}

#[test]
fn every_generator_meets_its_claimed_constant() {
    let specs = [
        GeneratorKind::CantorProduct {
            n: 3,
            axes: vec![
                CantorAxis {
                    axis: 1,
                    ratio: 0.25,
                    level: 5,
                },
                CantorAxis {
                    axis: 2,
                    ratio: 1.0 / 3.0,
                    level: 4,
                },
            ],
        },
        GeneratorKind::UniformSegment {
            direction: vec![0.0, 1.0, -1.0, 2.0],
            count: 700,
        },
        GeneratorKind::AlphaRegularRandom {
            n: 4,
            alpha: 0.5,
            level: 10,
        },
        GeneratorKind::FiniteGrid {
            n: 3,
            axes: vec![0, 2],
            per_axis: 20,
        },
        GeneratorKind::KernelHyperplane {
            family: FamilySpec::Standard { n: 3 },
            t0: vec![1.5],
            c: 0.25,
            count: 500,
        },
    ];
    for (i, kind) in specs.into_iter().enumerate() {
        let spec = GeneratorSpec {
            delta0: 2f64.powi(-9),
            kind,
        };
        let cloud = generate(&spec, i as u64).unwrap();
        let rep = verify_regularity(&cloud, 0);
        assert!(
            rep.passes,
            "{:?}: worst ratio {} vs claimed {}",
            spec.kind, rep.worst_ratio, rep.claimed_c
        );
    }
}

#[test]
fn cloud_file_round_trip_is_exact() {
    let spec = GeneratorSpec {
        delta0: 2f64.powi(-10),
        kind: GeneratorKind::AlphaRegularRandom {
            n: 5,
            alpha: 0.7,
            level: 8,
        },
    };
    let cloud = generate(&spec, 17).unwrap();
    let mut buf = Vec::new();
    write_cloud(&cloud, &mut buf).unwrap();
    let back = read_cloud(buf.as_slice()).unwrap();
    assert_eq!(back.points(), cloud.points());
    assert_eq!(back.delta0(), cloud.delta0());
    assert_eq!(back.claimed_alpha(), cloud.claimed_alpha());
    assert_eq!(back.claimed_c(), cloud.claimed_c());
}

#[test]
fn projected_energy_matches_direct_double_sum() {
    let mut r = rng(9);
    let points: Vec<Point> = (0..120)
        .map(|_| {
            Point::new(
                r.gen_range(-0.25..0.25),
                &[r.gen_range(-0.25..0.25), r.gen_range(-0.25..0.25)],
                r.gen_range(-0.25..0.25),
            )
        })
        .collect();
    let cloud = PointCloud::new(points, 2f64.powi(-8), 1.0, 100.0).unwrap();
    let fam = ProjectionFamily::standard(2);
    let params = TruncatedEnergyParams::new(0.8, cloud.delta0()).unwrap();
    let t = ParamVector(vec![1.1, -0.7]);
    let got = projected_energies(&cloud, &fam, &params, &t).unwrap();
    let images: Vec<[f64; 3]> = cloud
        .points()
        .iter()
        .map(|p| factor_map(&fam, &t, p).unwrap())
        .collect();
    let n = images.len() as f64;
    for (i, a) in images.iter().enumerate() {
        let expected: f64 = images
            .iter()
            .map(|b| {
                let d =
                    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
                d.max(cloud.delta0()).powf(-0.8) / n
            })
            .sum();
        assert!(
            (got[i] - expected).abs() <= 1e-12 * expected,
            "{i}: {} vs {expected}",
            got[i]
        );
    }
}

#[test]
fn restricted_counts_only_see_survivors() {
    let spec = GeneratorSpec {
        delta0: 2f64.powi(-8),
        kind: GeneratorKind::UniformSegment {
            direction: vec![1.0, 0.0, 0.0],
            count: 256,
        },
    };
    let cloud = generate(&spec, 0).unwrap();
    let fam = ProjectionFamily::standard(1);
    let t = ParamVector(vec![1.3]);
    let keep: Vec<usize> = (0..cloud.len()).step_by(2).collect();
    let rep = concentration_counts(&cloud, &fam, &t, 2f64.powi(-5), Some(&keep)).unwrap();
    let values: Vec<f64> = keep
        .iter()
        .map(|&i| project(&fam, &t, cloud.point(i)).unwrap())
        .collect();
    assert_eq!(rep.per_point_counts.len(), keep.len());
    for (k, &(i, c)) in rep.per_point_counts.iter().enumerate() {
        assert_eq!(i, keep[k]);
        let brute = values
            .iter()
            .filter(|v| (*v - values[k]).abs() <= 2f64.powi(-5))
            .count();
        assert_eq!(c, brute);
    }
}

#[test]
fn literal_bound_is_never_stricter_than_the_scaled_one() {
    let spec = GeneratorSpec {
        delta0: 2f64.powi(-10),
        kind: GeneratorKind::AlphaRegularRandom {
            n: 3,
            alpha: 0.6,
            level: 11,
        },
    };
    let cloud = generate(&spec, 5).unwrap();
    let fam = ProjectionFamily::standard(1);
    let ts = sample_annulus(1, 40, 6);
    let opts = |bound_form| FinitaryOptions {
        alpha: 0.6,
        c: cloud.claimed_c(),
        a_emp: 1.0,
        bound_form,
        seed: Some(6),
    };
    for delta in [2f64.powi(-10), 2f64.powi(-7), 2f64.powi(-4)] {
        let scaled = finitary_check(
            &cloud,
            &fam,
            delta,
            0.005,
            &ts,
            &opts(BoundForm::EpsilonScaled),
        )
        .unwrap();
        let literal =
            finitary_check(&cloud, &fam, delta, 0.005, &ts, &opts(BoundForm::Literal)).unwrap();
        assert!(literal.bound_used >= scaled.bound_used);
        assert!(literal.exceptional_fraction <= scaled.exceptional_fraction);
        assert_eq!(
            scaled.literal_exceptional_fraction,
            literal.exceptional_fraction
        );
    }
}
