use cut_gen::{
    generate_pair_with_params, generate_shell_pair, generate_solid_pair, sample_cut_spec,
    CutError, CutFamily, CutSpec, GenParams, PartDomain, ShapeType, Side,
};
use cut_gen::pose::uniform_rotation;
use mesh_kernel::{bundled, Bvh, PointKdTree, SurfaceSampler, TriMesh};
use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_params() -> GenParams {
    GenParams {
        points_per_part: 128,
        sdf_samples_per_part: 500,
        dense_boundary_points: 2_000,
        volume_mc_samples: 10_000,
    }
}

fn scaled_cube(sx: f64, sy: f64, sz: f64) -> TriMesh {
    let cube = bundled::cube();
    let vertices = cube
        .vertices()
        .iter()
        .map(|v| Point3::new(v.x * sx, v.y * sy, v.z * sz))
        .collect();
    TriMesh::new(vertices, cube.faces().to_vec()).unwrap()
}

#[test]
fn solid_halves_of_cube_satisfy_membership_and_shape() {
    let cube = bundled::cube();
    let bvh = Bvh::build(&cube);
    let spec = CutSpec::Planar { a: 0.0, b: 0.0, c: 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let record = generate_solid_pair(&cube, &bvh, spec, &mut rng).unwrap();

    assert_eq!(record.parts[0].side, Side::A);
    assert_eq!(record.parts[1].side, Side::B);
    assert!((0.25..=0.75).contains(&record.volume_fraction_a));
    assert!((record.volume_fraction_a - 0.5).abs() < 0.02);

    for part in &record.parts {
        assert_eq!(part.points.len(), 1024);
        assert_eq!(part.normals.len(), 1024);
        assert_eq!(part.sdf.len(), 40_000);
        assert_eq!(part.gt_rotation, nalgebra::UnitQuaternion::identity());
        for n in &part.normals {
            assert!((n.norm() - 1.0).abs() < 1e-9);
        }
        // The stored cloud is zero-centered.
        let mean = part.points.iter().map(|p| p.coords).sum::<Vector3<f64>>()
            / part.points.len() as f64;
        assert!(mean.norm() < 1e-9, "cloud centroid {mean:?}");

        let domain = PartDomain::new(&bvh, record.cut, part.side, ShapeType::Solid);
        let zsign = match part.side {
            Side::A => 1.0,
            Side::B => -1.0,
        };
        for p in &part.points {
            let q = p + part.gt_translation;
            assert!(
                domain.contains(&q, 1e-6),
                "residual {} at {q:?}",
                domain.membership_residual(&q)
            );
            // For the symmetric planar cut, part A points live on the upper
            // half surface or the z = 0 disk, part B mirrored.
            assert!(zsign * q.z >= -1e-9, "{q:?} on wrong side");
            let sd = bvh.signed_distance(&q);
            assert!(
                sd.abs() < 1e-9 || q.z.abs() < 1e-9,
                "point neither on surface (sd {sd}) nor on the cut plane ({q:?})"
            );
        }
    }
}

#[test]
fn ground_truth_poses_reassemble_clouds() {
    let sphere = bundled::icosphere();
    let bvh = Bvh::build(&sphere);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let spec = sample_cut_spec(CutFamily::Sine, &mut rng);
    let record = generate_solid_pair(&sphere, &bvh, spec, &mut rng).unwrap();

    for part in &record.parts {
        let domain = PartDomain::new(&bvh, record.cut, part.side, ShapeType::Solid);
        // Rotating the stored cloud and applying the matching ground-truth
        // pose must land every point back in the assembled configuration.
        for k in 0..5 {
            let mut pose_rng = ChaCha8Rng::seed_from_u64(100 + k);
            let rot = uniform_rotation(&mut pose_rng);
            let mut worst: f64 = 0.0;
            for p in &part.points {
                let rotated = rot * p;
                let assembled = rot.inverse() * rotated + part.gt_translation;
                let reference = p + part.gt_translation;
                worst = worst.max((assembled - reference).norm());
            }
            assert!(worst < 1e-9, "reassembly residual {worst}");
        }
        for p in &part.points {
            let q = p + part.gt_translation;
            assert!(domain.contains(&q, 1e-6));
        }
    }

    // Parts are disjoint: no point of one part sits strictly inside the
    // other part's region (interface points lie on the shared boundary).
    for (own, other) in [(0, 1), (1, 0)] {
        let other_domain =
            PartDomain::new(&bvh, record.cut, record.parts[other].side, ShapeType::Solid);
        for p in &record.parts[own].points {
            let q = p + record.parts[own].gt_translation;
            assert!(
                other_domain.membership_residual(&q) > -1e-6,
                "{q:?} is interior to the other part"
            );
        }
    }
}

#[test]
fn assembled_union_covers_fresh_surface_resample() {
    // The two assembled clouds together must trace the whole object. The
    // union also contains interface points that are interior to the object,
    // so the comparison is one-sided: every fresh surface sample should be
    // near some union point. At 1,024 points per part the mean gap is about
    // 0.03; the max over 2,048 fresh samples is a max-of-gaps statistic that
    // is not bounded by 0.05 at this density, so the mean is asserted.
    let cube = bundled::cube();
    let bvh = Bvh::build(&cube);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let spec = sample_cut_spec(CutFamily::Parabolic, &mut rng);
    let record = generate_solid_pair(&cube, &bvh, spec, &mut rng).unwrap();

    let mut union = Vec::with_capacity(2048);
    for part in &record.parts {
        for p in &part.points {
            union.push(p + part.gt_translation);
        }
    }
    let tree = PointKdTree::new(&union);

    let sampler = SurfaceSampler::new(&cube);
    let mut total = 0.0;
    let n_fresh = 2048;
    for _ in 0..n_fresh {
        let s = sampler.sample(&mut rng);
        total += tree.nearest_distance(&s.position);
    }
    let mean = total / n_fresh as f64;
    assert!(mean < 0.05, "mean coverage distance {mean}");
}

#[test]
fn accepted_ratios_stay_in_bounds_across_seeds_and_families() {
    let meshes = [("cube", bundled::cube()), ("icosphere", bundled::icosphere())];
    let params = small_params();
    let mut generated = 0usize;
    for (name, mesh) in &meshes {
        let bvh = Bvh::build(mesh);
        for family in CutFamily::ALL {
            for seed in 0..10u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(40 + seed);
                let spec = sample_cut_spec(family, &mut rng);
                let record = generate_pair_with_params(
                    mesh,
                    &bvh,
                    spec,
                    ShapeType::Solid,
                    &params,
                    &mut rng,
                )
                .unwrap_or_else(|e| panic!("{name}/{}/{seed}: {e}", family.name()));
                assert!(
                    (0.25..=0.75).contains(&record.volume_fraction_a),
                    "{name}/{}/{seed}: ratio {}",
                    family.name(),
                    record.volume_fraction_a
                );
                generated += 1;
            }
        }
    }
    assert_eq!(generated, 100);
}

#[test]
fn generation_is_deterministic_under_seed() {
    let cube = bundled::cube();
    let bvh = Bvh::build(&cube);
    let params = small_params();
    let make = || {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let spec = sample_cut_spec(CutFamily::Square, &mut rng);
        generate_pair_with_params(&cube, &bvh, spec, ShapeType::Solid, &params, &mut rng).unwrap()
    };
    let a = make();
    let b = make();
    assert_eq!(format!("{:?}", a.cut), format!("{:?}", b.cut));
    assert_eq!(a.volume_fraction_a.to_bits(), b.volume_fraction_a.to_bits());
    for k in 0..2 {
        let (pa, pb) = (&a.parts[k], &b.parts[k]);
        assert_eq!(pa.points.len(), pb.points.len());
        for (x, y) in pa.points.iter().zip(&pb.points) {
            assert_eq!(x.coords.map(f64::to_bits), y.coords.map(f64::to_bits));
        }
        for (x, y) in pa.sdf.iter().zip(&pb.sdf) {
            assert_eq!(x.point.coords.map(f64::to_bits), y.point.coords.map(f64::to_bits));
            assert_eq!(x.sd.to_bits(), y.sd.to_bits());
        }
        assert_eq!(
            pa.gt_translation.map(f64::to_bits),
            pb.gt_translation.map(f64::to_bits)
        );
    }
}

#[test]
fn shell_pair_on_sphere_has_correct_strata() {
    let sphere = bundled::icosphere();
    let bvh = Bvh::build(&sphere);
    let spec = CutSpec::Planar { a: 0.0, b: 0.0, c: 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let record = generate_shell_pair(&sphere, &bvh, spec, &mut rng).unwrap();

    // The icosphere is a polyhedron: its facet planes sag below the sphere
    // by up to `sag`, so offset radii spread over [0.45 - sag, 0.45].
    let sag = 0.5
        - (0..sphere.faces().len())
            .map(|f| {
                let [a, _, _] = sphere.face_vertices(f);
                a.coords.dot(&sphere.face_normal(f)).abs()
            })
            .fold(f64::INFINITY, f64::min);
    assert!(sag > 0.0 && sag < 3e-3, "unexpected facet sag {sag}");

    for part in &record.parts {
        let domain = PartDomain::new(&bvh, record.cut, part.side, ShapeType::Shell);
        let (mut n_outer, mut n_inner, mut n_band) = (0usize, 0usize, 0usize);
        for p in &part.points {
            let q = p + part.gt_translation;
            assert!(domain.contains(&q, 1e-6));
            let sd = bvh.signed_distance(&q);
            assert!(
                (-0.05 - 1e-3..=1e-3).contains(&sd),
                "point outside the shell band: sd {sd}"
            );
            if q.z.abs() < 1e-9 {
                // Interface stratum: the z = 0 annulus between the shells.
                let rho = (q.x * q.x + q.y * q.y).sqrt();
                assert!(rho > 0.45 - sag - 1e-6 && rho < 0.5 + 1e-9, "band radius {rho}");
                n_band += 1;
            } else if sd <= -0.05 + 1e-6 {
                // Inner offset stratum: traced to the -0.05 level set.
                let r = q.coords.norm();
                assert!(
                    r > 0.45 - sag - 1e-5 && r < 0.45 + 1e-5,
                    "inner offset radius {r}"
                );
                n_inner += 1;
            } else if sd.abs() < 1e-9 {
                let r = q.coords.norm();
                assert!(r > 0.5 - sag - 1e-5 && r < 0.5 + 1e-9, "outer radius {r}");
                n_outer += 1;
            } else {
                panic!("point in no stratum: sd {sd}");
            }
        }
        // Outer and inner strata use the same area estimate, so their
        // allocations match up to rounding; the band is the small remainder.
        assert!((n_outer as i64 - n_inner as i64).abs() <= 1, "{n_outer} vs {n_inner}");
        assert!(n_band > 0 && n_band < n_outer);
        assert_eq!(n_outer + n_inner + n_band, 1024);
    }
}

#[test]
fn sdf_supervision_matches_analytic_half_cube() {
    let cube = bundled::cube();
    let bvh = Bvh::build(&cube);
    let spec = CutSpec::Planar { a: 0.0, b: 0.0, c: 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let record = generate_solid_pair(&cube, &bvh, spec, &mut rng).unwrap();

    // Part A of the symmetric planar cut is exactly the upper half box.
    let center = Vector3::new(0.0, 0.0, 0.25);
    let half = Vector3::new(0.5, 0.5, 0.25);
    let box_sdf = |q: &Point3<f64>| {
        let d = Vector3::new(
            (q.x - center.x).abs() - half.x,
            (q.y - center.y).abs() - half.y,
            (q.z - center.z).abs() - half.z,
        );
        let outside = Vector3::new(d.x.max(0.0), d.y.max(0.0), d.z.max(0.0)).norm();
        outside + d.x.max(d.y).max(d.z).min(0.0)
    };

    let part = &record.parts[0];
    assert_eq!(part.side, Side::A);
    let mut abs_err_sum = 0.0;
    let mut max_err: f64 = 0.0;
    let mut near_boundary = 0usize;
    for s in &part.sdf {
        let q = s.point + part.gt_translation;
        let reference = box_sdf(&q);
        let err = (s.sd - reference).abs();
        abs_err_sum += err;
        max_err = max_err.max(err);
        if reference.abs() > 0.02 {
            assert_eq!(
                s.sd < 0.0,
                reference < 0.0,
                "sign mismatch at {q:?}: sd {} vs analytic {reference}",
                s.sd
            );
        }
        if s.sd.abs() <= 0.1 {
            near_boundary += 1;
        }
    }
    let n = part.sdf.len() as f64;
    assert!(abs_err_sum / n < 0.01, "mean error {}", abs_err_sum / n);
    assert!(max_err < 0.05, "max error {max_err}");
    assert!(
        near_boundary as f64 / n >= 0.95,
        "only {} of {} samples within 0.1 of the boundary",
        near_boundary,
        part.sdf.len()
    );
}

#[test]
fn sdf_probe_of_half_cube_interior_is_minus_quarter() {
    // Independent construction of the dense boundary for the upper half
    // cube: side-A surface samples plus uniform samples of the z = 0 disk,
    // mixed three to one like the areas (3.0 vs 1.0).
    let cube = bundled::cube();
    let bvh = Bvh::build(&cube);
    let spec = CutSpec::Planar { a: 0.0, b: 0.0, c: 0.0 };
    let domain = PartDomain::new(&bvh, spec, Side::A, ShapeType::Solid);

    let sampler = SurfaceSampler::new(&cube);
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let mut dense = Vec::with_capacity(30_000);
    while dense.len() < 22_500 {
        let s = sampler.sample(&mut rng);
        if s.position.z > 0.0 {
            dense.push(s.position);
        }
    }
    while dense.len() < 30_000 {
        let x = rng.random_range(-0.5..0.5);
        let y = rng.random_range(-0.5..0.5);
        dense.push(Point3::new(x, y, 0.0));
    }
    let tree = PointKdTree::new(&dense);

    // Deep interior probe: distance 0.25 from both the cut plane and the
    // top face, sign negative because the probe is inside the part.
    let probe = Point3::new(0.0, 0.0, 0.25);
    assert!(domain.is_inside(&probe));
    let sd = -tree.nearest_distance(&probe);
    assert!((sd + 0.25).abs() < 0.01, "probe sd {sd}");

    // A fresh boundary point is within the dense-set spacing of zero.
    let fresh = loop {
        let s = sampler.sample(&mut rng);
        if s.position.z > 0.0 {
            break s.position;
        }
    };
    assert!(tree.nearest_distance(&fresh) < 0.02);

    // Samples produced through the public path agree with the analytic
    // distance at the probe's scale.
    let samples = cut_gen::sdf_samples_for_part(&domain, &dense, 2_000, &mut rng);
    assert_eq!(samples.len(), 2_000);
    for s in &samples {
        assert_eq!(s.sd < 0.0, domain.is_inside(&s.point), "sign disagrees with predicate");
    }
}

#[test]
fn thin_geometry_cannot_host_a_shell() {
    // A slab only 0.06 deep has no -0.05 level set; shell tracing must fail
    // with the dedicated error rather than emit bogus points.
    let slab = scaled_cube(1.0, 0.6, 0.06);
    let bvh = Bvh::build(&slab);
    let spec = CutSpec::Planar { a: 0.0, b: 0.0, c: 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let err = generate_pair_with_params(
        &slab,
        &bvh,
        spec,
        ShapeType::Shell,
        &small_params(),
        &mut rng,
    )
    .unwrap_err();
    assert!(matches!(err, CutError::ShellTooThin { .. }), "got {err}");
}

#[test]
fn unnormalized_mesh_is_rejected() {
    let big = scaled_cube(2.0, 2.0, 2.0);
    let bvh = Bvh::build(&big);
    let spec = CutSpec::Planar { a: 0.0, b: 0.0, c: 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(92);
    let err = generate_pair_with_params(
        &big,
        &bvh,
        spec,
        ShapeType::Solid,
        &small_params(),
        &mut rng,
    )
    .unwrap_err();
    assert!(matches!(err, CutError::NotNormalized { .. }), "got {err}");
}
