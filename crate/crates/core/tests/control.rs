use safenav::control::{navigate_leg, CollisionKind, ControllerConfig, LegOutcome, LegRequest};
use safenav::scene::{Action, OccupancyGrid, Point2D, Pose, Scene};

/// A block whose upper-left corner clips the agent's disc on the direct
/// line; a 30° left deflection clears it.
fn corner_scene() -> Scene {
    let mut g = OccupancyGrid::new(100, 100, 0.05).unwrap();
    g.add_border(2);
    g.fill_rect(Point2D::new(2.0, 0.5), Point2D::new(2.6, 2.3), None);
    Scene::new("corner", g, Pose::new(1.0, 2.45, 0.0), Point2D::new(3.5, 2.45)).unwrap()
}

#[test]
fn deflection_escapes_corner() {
    let s = corner_scene();
    let target = Point2D::new(3.5, 2.45);
    let config = ControllerConfig {
        tryout_enabled: true,
        ..ControllerConfig::default()
    };
    let leg = navigate_leg(&s, s.start(), LegRequest::to(target), &config).unwrap();
    assert_eq!(leg.outcome, LegOutcome::Arrived, "{:?}", leg.actions);
    let collisions: Vec<_> = leg.events.iter().filter(|e| e.kind == CollisionKind::Navigation).collect();
    assert_eq!(collisions.len(), config.stuck_threshold);

    // Three blocked forwards, two left turns, then the deflected forward.
    let first = collisions[0].step - 1;
    let after = &leg.actions[first..first + 6];
    assert_eq!(after, [Action::Forward, Action::Forward, Action::Forward, Action::TurnLeft, Action::TurnLeft, Action::Forward]);
    let deflected = leg.poses[first + 5];
    assert!((deflected.heading() - 30.0).abs() < 1e-9);
    assert_ne!(deflected.position(), leg.poses[first + 4].position());
    // Nothing blocks after the deflection, so the counter never trips again.
    assert!(collisions.iter().all(|e| e.step <= first + 3));
    assert!(leg.pose.position().distance(&target) < config.arrival_radius);
}

#[test]
fn same_corner_blocks_without_tryout() {
    let s = corner_scene();
    let leg = navigate_leg(&s, s.start(), LegRequest::to(Point2D::new(3.5, 2.45)), &ControllerConfig::default()).unwrap();
    assert_eq!(leg.outcome, LegOutcome::Blocked);
    assert_eq!(leg.events.len(), 3);
}

#[test]
fn seeded_deflection_order_is_reproducible() {
    let s = corner_scene();
    let config = ControllerConfig {
        tryout_enabled: true,
        tryout_shuffle_seed: Some(4),
        ..ControllerConfig::default()
    };
    let a = navigate_leg(&s, s.start(), LegRequest::to(Point2D::new(3.5, 2.45)), &config).unwrap();
    let b = navigate_leg(&s, s.start(), LegRequest::to(Point2D::new(3.5, 2.45)), &config).unwrap();
    assert_eq!(a, b);
}
