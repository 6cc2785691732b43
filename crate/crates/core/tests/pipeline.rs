use fireray_core::cloud::{
    ball_aggregate, default_planes, farthest_point_sample, load_cloud, normalize_cloud,
    partition_view, write_xyz_ascii, ViewPlane,
};
use fireray_core::objective::{l_sparks, UtilizationReport};
use fireray_core::predictor::predict_kappa;
use fireray_core::raster::{pixel_owners, render_view};
use fireray_core::scenes::{preset, synth_room};
use fireray_core::{
    Axis, ColorMode, ImageSize, Palette, PointCloud, PredictorConfig, PredictorWeights, RayParams,
    RngStream, Side,
};

fn two_wall() -> PointCloud {
    normalize_cloud(&synth_room(&preset("two-wall").unwrap()).unwrap()).unwrap()
}

fn label_pixels(cloud: &PointCloud, plane: &ViewPlane, ray: &RayParams, label: usize) -> usize {
    let subset = partition_view(cloud, plane);
    pixel_owners(cloud, &subset, plane, ray, ImageSize::default())
        .unwrap()
        .into_iter()
        .flatten()
        .filter(|&i| cloud.point(i).label == Some(label))
        .count()
}

#[test]
fn curved_rays_reveal_the_occluded_wall() {
    let cloud = two_wall();
    let plane = ViewPlane::facing(1, Axis::X, Side::Positive);
    let straight = label_pixels(&cloud, &plane, &RayParams::straight(), 2);
    let curved = label_pixels(
        &cloud,
        &plane,
        &RayParams::new(-1.2, 1.2, -5.0, 5.0).unwrap(),
        2,
    );
    // Unoccluded, the rear panel spans 0.4 x 0.4 of the unit frame.
    let unoccluded = 0.16 * (224.0 * 224.0);
    assert!(
        (straight as f64) < 0.5 * unoccluded,
        "straight rays show {straight} rear pixels"
    );
    assert!(
        curved > 2 * straight,
        "curved {curved} vs straight {straight}"
    );
}

#[test]
fn file_round_trip_preserves_the_scene() {
    let raw = synth_room(&preset("room").unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("room.xyz");
    std::fs::write(&path, write_xyz_ascii(&raw)).unwrap();
    let loaded = load_cloud(&path).unwrap();
    assert_eq!(loaded.len(), raw.len());
    for (a, b) in loaded.points().iter().zip(raw.points()) {
        assert_eq!(a.position, b.position);
        assert_eq!(a.label, b.label);
    }
    assert_eq!(write_xyz_ascii(&loaded), write_xyz_ascii(&raw));
}

#[test]
fn per_plane_reports_sum_into_sparks() {
    let cloud = normalize_cloud(&synth_room(&preset("room").unwrap()).unwrap()).unwrap();
    let size = ImageSize::square(96).unwrap();
    let palette = Palette::default();
    let mut reports = Vec::new();
    for plane in default_planes(6).unwrap() {
        let subset = partition_view(&cloud, &plane);
        let ray = RayParams::new(0.7, -0.4, -5.0, 5.0).unwrap();
        let img = render_view(
            &cloud,
            &subset,
            &plane,
            &ray,
            size,
            ColorMode::Semantic,
            &palette,
        )
        .unwrap();
        reports.push(UtilizationReport::from_image(plane.id, &img, 0.8, ray).unwrap());
    }
    let sum: f64 = reports.iter().filter_map(|r| r.reg_value).sum();
    assert_eq!(l_sparks(&reports), sum);
    assert!(reports.iter().all(|r| r.u_space > 0.0 && r.u_space <= 1.0));
}

#[test]
fn predictor_pipeline_is_bounded_and_deterministic() {
    let cloud = two_wall();
    let weights = PredictorWeights::random(21, 1.0);
    let cfg = PredictorConfig::default();
    for plane in default_planes(4).unwrap() {
        let subset = partition_view(&cloud, &plane);
        let centers = farthest_point_sample(&cloud, &subset, cfg.centers).unwrap();
        let balls = ball_aggregate(&cloud, &subset, &centers, cfg.radius).unwrap();
        assert_eq!(balls.len(), cfg.centers);
        assert!(balls.iter().all(|b| b.member_count >= 1));

        let a = predict_kappa(&cloud, &plane, &weights, &cfg, None).unwrap();
        let b = predict_kappa(&cloud, &plane, &weights, &cfg, None).unwrap();
        assert_eq!(a, b);
        let mut s1 = RngStream::derived(5, &[plane.id as u64]);
        let mut s2 = RngStream::derived(5, &[plane.id as u64]);
        let m1 = predict_kappa(&cloud, &plane, &weights, &cfg, Some(&mut s1)).unwrap();
        let m2 = predict_kappa(&cloud, &plane, &weights, &cfg, Some(&mut s2)).unwrap();
        assert_eq!(m1, m2);
        for k in [a.kappa_h(), a.kappa_w(), m1.kappa_h(), m1.kappa_w()] {
            assert!((-5.0..=5.0).contains(&k));
        }
    }
}

/// Share of rear-wall points whose pixel is taken by a front-wall point.
fn hidden_rear_share(cloud: &PointCloud, plane: &ViewPlane, ray: &RayParams) -> f64 {
    let size = ImageSize::default();
    let subset = partition_view(cloud, plane);
    let owners = pixel_owners(cloud, &subset, plane, ray, size).unwrap();
    let rear: Vec<usize> = subset
        .iter()
        .copied()
        .filter(|&i| cloud.point(i).label == Some(2))
        .collect();
    let hidden = rear
        .iter()
        .filter(|&&i| {
            let cell =
                fireray_core::projection::project_point(cloud.point(i), plane, ray, size).cell;
            match cell {
                Some((r, c)) => {
                    owners[r * size.width + c].is_some_and(|o| cloud.point(o).label == Some(1))
                }
                None => false,
            }
        })
        .count();
    hidden as f64 / rear.len() as f64
}

#[test]
fn straight_rays_hide_most_of_the_rear_wall() {
    let cloud = two_wall();
    let plane = ViewPlane::facing(1, Axis::X, Side::Positive);
    let straight = hidden_rear_share(&cloud, &plane, &RayParams::straight());
    assert!(straight >= 0.5, "only {straight:.3} of rear points hidden");
    let bent = RayParams::new(1.5, 0.0, -5.0, 5.0).unwrap();
    let exposed = hidden_rear_share(&cloud, &plane, &bent);
    assert!(
        exposed < straight - 0.2,
        "height bend leaves {exposed:.3} hidden"
    );

    let palette = Palette::default();
    let subset = partition_view(&cloud, &plane);
    let scores: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0]
        .iter()
        .map(|&kh| {
            let ray = RayParams::new(kh, 0.0, -5.0, 5.0).unwrap();
            fireray_core::fireworks::score_ray(
                &cloud,
                &subset,
                &plane,
                &ray,
                ImageSize::default(),
                0.8,
                &palette,
            )
            .unwrap()
            .u_space
        })
        .collect();
    assert!(scores.iter().any(|&s| s != scores[2]), "{scores:?}");
}

#[test]
fn best_sweep_cell_is_curved() {
    let cloud = two_wall();
    let plane = ViewPlane::facing(1, Axis::X, Side::Positive);
    let subset = partition_view(&cloud, &plane);
    let grid = fireray_core::scenes::linspace(-5.0, 5.0, 11).unwrap();
    let rows = fireray_core::scenes::sweep_grid(
        &cloud,
        &subset,
        &plane,
        &grid,
        &grid,
        (-5.0, 5.0),
        ImageSize::default(),
        0.8,
        &Palette::default(),
    )
    .unwrap();
    assert_eq!(rows.len(), 121);
    let best: Vec<_> = rows.iter().filter(|r| r.best).collect();
    assert_eq!(best.len(), 1);
    assert!((best[0].kappa_h, best[0].kappa_w) != (0.0, 0.0));
    let straight = rows
        .iter()
        .find(|r| r.kappa_h == 0.0 && r.kappa_w == 0.0)
        .unwrap();
    assert!(best[0].u_space > straight.u_space);
}
