use safenav::harness::report::{evaluate, run_report, to_json};
use safenav::harness::scenario::{load_scene, save_scene};
use safenav::harness::{generate_scenes, load_scenes, save_scene_set, AgentConfig, Recipe};
use safenav::Error;

fn clean(c: AgentConfig) -> AgentConfig {
    AgentConfig { dynamic_p: 0.0, ..c }
}

#[test]
fn scene_sets_roundtrip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for recipe in [Recipe::open(3), Recipe::traps(3), Recipe::furniture(3)] {
        let scenes = generate_scenes(&recipe, 2).unwrap();
        let sub = dir.path().join(&recipe.name);
        let paths = save_scene_set(&sub, &scenes).unwrap();
        assert_eq!(paths.len(), 3);
        let back = load_scenes(&sub).unwrap();
        assert_eq!(back.len(), scenes.len());
        for (a, b) in scenes.iter().zip(&back) {
            assert_eq!(a.id(), b.id());
            assert_eq!(a.grid(), b.grid());
            assert_eq!(a.start(), b.start());
            assert_eq!(a.goal(), b.goal());
            assert_eq!(a.geodesic_field(), b.geodesic_field());
        }
        assert_eq!(load_scenes(&paths[1]).unwrap()[0].id(), scenes[1].id());
    }
    let scenes = generate_scenes(&Recipe::open(1), 2).unwrap();
    save_scene(&dir.path().join("open/copy.json"), &scenes[0]).unwrap();
    assert!(matches!(load_scenes(&dir.path().join("open")), Err(Error::Config(_))));
    std::fs::write(dir.path().join("broken.json"), "{\"id\": 3}").unwrap();
    assert!(load_scene(&dir.path().join("broken.json")).is_err());
    assert!(matches!(load_scene(&dir.path().join("absent.json")), Err(Error::Io { .. })));
}

#[test]
fn worker_count_does_not_change_reports() {
    let scenes = generate_scenes(&Recipe::traps(6), 4).unwrap();
    let config = AgentConfig::safe().with_noise(0.2);
    let one = to_json(&run_report(&scenes, &config, 3, 1).unwrap()).unwrap();
    let many = to_json(&run_report(&scenes, &config, 3, 4).unwrap()).unwrap();
    assert_eq!(one, many);
    let mut reversed = scenes.clone();
    reversed.reverse();
    assert_eq!(one, to_json(&run_report(&reversed, &config, 3, 2).unwrap()).unwrap());
}

#[test]
fn rate_ordering_on_every_suite() {
    for recipe in [Recipe::open(8), Recipe::traps(8), Recipe::furniture(8)] {
        let scenes = generate_scenes(&recipe, 9).unwrap();
        for config in [AgentConfig::safe(), AgentConfig::baseline().with_noise(0.3), AgentConfig::jps()] {
            let m = evaluate(&scenes, &config, 1, 2).unwrap().metrics().unwrap();
            assert!(m.spl <= m.sr && m.sr <= m.osr, "{} {m:?}", recipe.name);
            for v in [m.osr, m.sr, m.spl, m.wc, m.nc, m.p_o, m.dc_sr.unwrap()] {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}

#[test]
fn oracle_heatmap_never_emits_colliding_waypoints() {
    for recipe in [Recipe::open(10), Recipe::traps(10)] {
        let scenes = generate_scenes(&recipe, 6).unwrap();
        for mask in [false, true] {
            let c = AgentConfig {
                mask,
                ..clean(AgentConfig::baseline())
            };
            let e = evaluate(&scenes, &c, 2, 2).unwrap();
            assert_eq!(e.metrics().unwrap().wc, 0.0, "{} mask={mask}", recipe.name);
        }
    }
}

#[test]
fn heatmap_spill_produces_waypoint_collisions() {
    let scenes = generate_scenes(&Recipe::traps(10), 6).unwrap();
    let e = evaluate(&scenes, &clean(AgentConfig::baseline().with_noise(0.3)), 2, 2).unwrap();
    assert!(e.metrics().unwrap().wc > 0.0);
}

#[test]
fn separate_dynamic_pass() {
    let scenes = generate_scenes(&Recipe::open(5), 1).unwrap();
    let e = evaluate(&scenes, &AgentConfig::safe(), 1, 1).unwrap();
    assert_eq!(e.clean.len(), 5);
    assert_eq!(e.dynamic.len(), 5);
    assert!(e.clean.iter().all(|r| r.count(safenav::control::CollisionKind::Dynamic) == 0));
    let rows = e.rows();
    assert!(rows.iter().all(|r| r.dynamic_success.is_some()));
    let none = evaluate(&scenes, &clean(AgentConfig::safe()), 1, 1).unwrap();
    assert!(none.dynamic.is_empty() && none.metrics().unwrap().dc_sr.is_none());
}
