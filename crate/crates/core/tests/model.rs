use num_complex::Complex64;
use surfmimo::analysis::{capacity, from_db, map_rate, McsTable, Phy};
use surfmimo::channel::{
    build_mimo, csi, impulse_response, AirMultipath, ChannelModel, CouplingConstants, Estimator, TermMask,
};
use surfmimo::experiments::{
    aggregate_capacity, pulse_profile, share_sim, throughput_sweep, AggregationPlan, LinkMode, LinkSettings,
    PulseProfile, PulseSettings, SceneTemplate, SharingConfig, SharingPair, FOOT_M,
};
use surfmimo::geometry::{Obstacle, ObstacleKind, Point2, Rect};
use surfmimo::propagation::{db20, FrequencyBand};

const C: f64 = 299_792_458.0;

fn quiet(mut t: SceneTemplate) -> SceneTemplate {
    let m = t.surface.material.clone().with_refl_coeff(0.0).unwrap();
    let c = CouplingConstants {
        c1: 0.0,
        c2: 0.0,
        c3: 0.0,
        near_field_coupling: 0.0,
        ..*m.coupling()
    };
    t.surface.material = m.with_coupling(c).unwrap();
    t
}

fn mask(surface: bool, air: bool) -> ChannelModel {
    ChannelModel {
        terms: TermMask { surface, air },
        ..ChannelModel::default()
    }
}

#[test]
fn single_path_csi_is_flat() {
    let band = FrequencyBand::wifi_2g4(1, 40e6).unwrap();
    // Attenuation slope of the spraypaint rows between 2.4 and 5 GHz, in Np/m/Hz.
    let slope = (0.60 - 0.50) / 2.6e9;
    for ft in [1.0, 8.0, 16.0] {
        let d = ft * FOOT_M;
        for mode in [LinkMode::SurfaceSiso, LinkMode::Siso] {
            let scene = quiet(SceneTemplate::spraypaint()).scene(mode, d).unwrap();
            let m = csi(&scene, &band, 114, &ChannelModel::default()).unwrap();
            let mags: Vec<f64> = m.iter().map(|x| x.entries[(0, 0)].norm()).collect();
            let hi = mags.iter().copied().fold(0.0, f64::max);
            let lo = mags.iter().copied().fold(f64::INFINITY, f64::min);
            let bound = (slope * 40e6 * d).exp() * (1.0 + 1e-12);
            assert!(hi / lo <= bound, "{mode} at {ft} ft: {}", hi / lo);
        }
    }
}

#[test]
fn one_subcarrier_is_the_center_matrix() {
    let scene = SceneTemplate::cloth()
        .scene(LinkMode::Surface3x3, 4.0 * FOOT_M)
        .unwrap();
    let band = FrequencyBand::wifi_2g4(11, 20e6).unwrap();
    let model = ChannelModel::default().with_grid(16);
    let m = csi(&scene, &band, 1, &model).unwrap();
    assert_eq!(m.len(), 1);
    assert_eq!(m[0], build_mimo(&scene, band.center_hz(), &model).unwrap());
}

#[test]
fn csi_spread_grows_with_distance() {
    let s = LinkSettings::wifi_2g4_ht40();
    let t = SceneTemplate::spraypaint();
    let var: Vec<f64> = [1.0, 8.0, 16.0]
        .iter()
        .map(|ft| {
            let scene = t.scene(LinkMode::Surface2x2, ft * FOOT_M).unwrap();
            let db: Vec<f64> = csi(&scene, &s.band, 114, &s.model)
                .unwrap()
                .iter()
                .map(|m| db20(m.entries[(0, 0)]))
                .collect();
            let mean = db.iter().sum::<f64>() / db.len() as f64;
            db.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / db.len() as f64
        })
        .collect();
    assert!(var[0] < var[1] && var[1] < var[2], "{var:?}");
}

#[test]
fn surface_power_at_16_ft() {
    let scene = SceneTemplate::spraypaint()
        .scene(LinkMode::SurfaceSiso, 16.0 * FOOT_M)
        .unwrap();
    let h = build_mimo(&scene, 2.437e9, &ChannelModel::default()).unwrap();
    let rx = -3.0 + db20(h.entries[(0, 0)]);
    assert!(rx >= -70.0, "{rx} dBm");
}

#[test]
fn lower_bands_reach_further() {
    let scene = quiet(SceneTemplate::spraypaint())
        .scene(LinkMode::SurfaceSiso, 8.0 * FOOT_M)
        .unwrap();
    let p: Vec<f64> = [0.915e9, 2.437e9, 5.2e9]
        .iter()
        .map(|&f| db20(build_mimo(&scene, f, &ChannelModel::default()).unwrap().entries[(0, 0)]))
        .collect();
    assert!(p[0] > p[1] && p[1] > p[2], "{p:?}");
}

#[test]
fn masks_degenerate_to_single_medium() {
    let t = SceneTemplate::spraypaint();
    let d = 6.0 * FOOT_M;
    let f = 2.437e9;
    let two = t.scene(LinkMode::Surface2x2, d).unwrap();

    let air_only = build_mimo(&two, f, &mask(false, true)).unwrap();
    let siso = build_mimo(&t.scene(LinkMode::Siso, d).unwrap(), f, &ChannelModel::default()).unwrap();
    assert_eq!(air_only.entries[(1, 1)], siso.entries[(0, 0)]);
    assert_eq!(air_only.entries[(0, 0)], Complex64::new(0.0, 0.0));
    assert_eq!(air_only.entries[(0, 1)], Complex64::new(0.0, 0.0));

    let surface_only = build_mimo(&two, f, &mask(true, false)).unwrap();
    let surf = build_mimo(&t.scene(LinkMode::SurfaceSiso, d).unwrap(), f, &mask(true, false)).unwrap();
    assert_eq!(surface_only.entries[(0, 0)], surf.entries[(0, 0)]);
    assert_eq!(surface_only.entries[(1, 1)], Complex64::new(0.0, 0.0));
    assert_eq!(surface_only.entries[(1, 0)], Complex64::new(0.0, 0.0));
}

#[test]
fn without_surface_terms_mimo_rate_is_siso_rate() {
    let t = SceneTemplate::spraypaint();
    let table = McsTable::builtin();
    let ds: Vec<f64> = [1.0, 5.0, 12.0].iter().map(|f| f * FOOT_M).collect();
    let mut off = LinkSettings::wifi_2g4_ht40();
    off.model.terms.surface = false;
    let mimo = throughput_sweep(&t, &ds, LinkMode::Surface2x2, &off, &table).unwrap();
    let siso = throughput_sweep(&t, &ds, LinkMode::Siso, &LinkSettings::wifi_2g4_ht40(), &table).unwrap();
    for (a, b) in mimo.iter().zip(&siso) {
        assert_eq!(a.result.phy_rate_bps, b.result.phy_rate_bps);
    }
}

#[test]
fn separation_leaves_the_surface_entry_alone() {
    let t = SceneTemplate::spraypaint();
    let model = ChannelModel::default().with_grid(16);
    let a = build_mimo(
        &t.clone()
            .with_separation(0.01)
            .scene(LinkMode::Surface2x2, 2.0)
            .unwrap(),
        2.437e9,
        &model,
    )
    .unwrap();
    let b = build_mimo(
        &t.with_separation(0.06).scene(LinkMode::Surface2x2, 2.0).unwrap(),
        2.437e9,
        &model,
    )
    .unwrap();
    assert_eq!(a.entries[(0, 0)], b.entries[(0, 0)]);
}

#[test]
fn monte_carlo_matches_the_grid_on_average() {
    // Small surface so fine grids are cheap references.
    let mut t = SceneTemplate::cloth();
    t.surface.width_m = 1.0;
    t.surface.height_m = 0.5;
    t.lane_y_m = 0.25;
    let scene = t.scene(LinkMode::SurfaceSiso, 0.8).unwrap();
    let f = 2.437e9;
    let direct = build_mimo(&scene, f, &mask(true, false)).unwrap().entries[(0, 0)];
    let integral = |model: &ChannelModel| build_mimo(&scene, f, model).unwrap().entries[(0, 0)] - direct;
    let reference = integral(&ChannelModel::default().with_grid(128));
    let grid_err = (integral(&ChannelModel::default().with_grid(64)) - reference).norm();

    // The integrand oscillates, so single estimates are noisy; the mean over
    // independent seeds must agree with the grid to within its standard error.
    let runs = 48;
    let estimates: Vec<Complex64> = (0..runs)
        .map(|seed| {
            integral(&ChannelModel {
                estimator: Estimator::MonteCarlo { samples: 20_000, seed },
                ..ChannelModel::default()
            })
        })
        .collect();
    let mean = estimates.iter().sum::<Complex64>() / runs as f64;
    let var = estimates.iter().map(|e| (e - mean).norm_sqr()).sum::<f64>() / (runs - 1) as f64;
    let se = (var / runs as f64).sqrt();
    let gap = (mean - reference).norm();
    assert!(
        gap <= 4.0 * se + grid_err,
        "gap {gap:e}, standard error {se:e}, grid error {grid_err:e}"
    );
    // and the spread shrinks like 1/sqrt(samples)
    let spread = |samples: usize| {
        let e: Vec<Complex64> = (100..116)
            .map(|seed| {
                integral(&ChannelModel {
                    estimator: Estimator::MonteCarlo { samples, seed },
                    ..ChannelModel::default()
                })
            })
            .collect();
        let m = e.iter().sum::<Complex64>() / e.len() as f64;
        (e.iter().map(|x| (x - m).norm_sqr()).sum::<f64>() / (e.len() - 1) as f64).sqrt()
    };
    let ratio = spread(2_000) / spread(32_000);
    assert!((2.0..8.0).contains(&ratio), "spread ratio {ratio}");
}

#[test]
fn obstacle_keeps_the_peak_within_6_db() {
    let clear = SceneTemplate::cloth();
    let mut blocked = clear.clone();
    let d = 5.0 * FOOT_M;
    let y = clear.lane_y_m;
    for kind in [ObstacleKind::Metal, ObstacleKind::Plastic, ObstacleKind::Wood] {
        blocked.obstacles = vec![Obstacle {
            footprint: Rect::from([d / 2.0 - 0.05, y - 0.1, d / 2.0 + 0.05, y + 0.1]),
            kind,
            perturbation_db: kind.default_perturbation_db(),
        }];
        let run = |t: &SceneTemplate| {
            let scene = t.scene(LinkMode::SurfaceSiso, d).unwrap();
            pulse_profile(&scene, 0, 0, &ChannelModel::default(), &PulseSettings::default()).unwrap()
        };
        let (a, b) = (run(&clear), run(&blocked));
        let changed = a
            .response
            .taps
            .iter()
            .zip(&b.response.taps)
            .any(|(x, y)| x.amplitude != y.amplitude);
        assert!(changed, "{kind:?} changed no tap");
        let peak = |p: &PulseProfile| p.samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
        let ratio_db = 20.0 * (peak(&a) / peak(&b)).log10();
        assert!(ratio_db.abs() <= 6.0, "{kind:?}: {ratio_db} dB");
    }
}

#[test]
fn cloth_delay_spread_is_bounded() {
    for ft in [1.0, 5.0, 9.0] {
        let scene = SceneTemplate::cloth()
            .scene(LinkMode::SurfaceSiso, ft * FOOT_M)
            .unwrap();
        let r = impulse_response(0, 0, &scene, 2.4e9, 1e9, &ChannelModel::default()).unwrap();
        let s = r.rms_delay_spread_s();
        assert!(s > 0.0 && s <= 300e-9, "{ft} ft: {s}");
        assert!(r.taps.len() > 1);
        assert!(r.taps.windows(2).all(|w| w[0].delay_s < w[1].delay_s));
    }
}

/// `J0` from its power series, independent of the library's Bessel routine.
fn j0_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= -(x * x / 4.0) / (k as f64 * k as f64);
        sum += term;
    }
    sum
}

#[test]
fn close_air_antennas_lose_multiplexing() {
    let f = 2.437e9;
    let lambda = C / f;
    let runs = 400u64;
    let measure = |spacing: f64| {
        let mut t = SceneTemplate::spraypaint();
        t.air_spacing_m = spacing;
        let scene = t.scene(LinkMode::AirMimo, 3.0 * FOOT_M).unwrap();
        let (mut cap, mut cross, mut p0, mut p1) = (0.0, Complex64::new(0.0, 0.0), 0.0, 0.0);
        let los = build_mimo(&scene, f, &ChannelModel::default()).unwrap().entries;
        for seed in 0..runs {
            let model = ChannelModel {
                air_multipath: Some(AirMultipath {
                    k_factor_db: -30.0,
                    seed,
                }),
                ..ChannelModel::default()
            };
            let h = build_mimo(&scene, f, &model).unwrap().entries;
            let p = h.iter().map(|z| z.norm_sqr()).sum::<f64>() / 4.0;
            cap += capacity(&h.map(|z| z / p.sqrt()), from_db(20.0)).unwrap();
            // Scattered parts of two entries that share a receive antenna.
            let (a, b) = (h[(0, 0)] / los[(0, 0)].norm(), h[(0, 1)] / los[(0, 1)].norm());
            cross += a * b.conj();
            p0 += a.norm_sqr();
            p1 += b.norm_sqr();
        }
        (cap / runs as f64, cross.norm() / (p0 * p1).sqrt())
    };
    let (wide, corr_wide) = measure(lambda / 2.0);
    let (close, corr_close) = measure(lambda / 10.0);
    assert!(close < 0.9 * wide, "{close} vs {wide}");
    let want = j0_series(2.0 * std::f64::consts::PI / 10.0).abs();
    assert!((corr_close - want).abs() < 0.1, "{corr_close} vs {want}");
    assert!(corr_wide < corr_close);
}

#[test]
fn two_streams_double_the_rate() {
    let table = McsTable::builtin();
    let class = table.class(Phy::Ht, 40).unwrap();
    for esnr in [5.0, 12.0, 20.0, 35.0] {
        assert_eq!(map_rate(esnr, class, 2), 2.0 * map_rate(esnr, class, 1));
    }
    assert_eq!(map_rate(-50.0, class, 2), 0.0);
}

#[test]
fn aggregate_is_the_sum_of_chains() {
    let s = LinkSettings::wifi_2g4_ht40();
    let table = McsTable::builtin();
    for plan in [AggregationPlan::scenario1(), AggregationPlan::scenario2()] {
        let r = aggregate_capacity(
            &plan,
            &SceneTemplate::cloth(),
            7.0 * FOOT_M,
            &s.model,
            s.tx_power_dbm,
            &s.noise,
            1.0,
            &table,
        )
        .unwrap();
        let sum: f64 = r.chains.iter().map(|c| c.rate_bps).sum();
        assert_eq!(r.total_bps, sum);
        assert_eq!(r.chains.len(), plan.chains.len());
    }
}

#[test]
fn ambient_traffic_takes_its_share() {
    let pair = |channel, y| SharingPair {
        client: Point2::new(0.1, y),
        ap: Point2::new(1.0, y),
        channel,
    };
    let cfg = SharingConfig {
        pairs: vec![pair(1, 0.1), pair(11, 0.2)],
        ambient_busy_fraction: 0.4,
    };
    for o in share_sim(&cfg, &[7e7, 7e7], 100_000, 3).unwrap() {
        assert!((o.throughput_bps / o.solo_bps - 0.6).abs() < 0.01, "{o:?}");
    }
}
