use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rrt_eta::dynamics::{
    adaptive_sample, finite_difference_jacobian, fk_planar_arm, steer, steer_exact_steps,
    step_double_integrator, Bounds, ConnectConfig, DoubleIntegrator, IkCache, PlanarArm,
    SingleIntegrator, SystemModel, Unicycle, IK_TOL,
};
use rrt_eta::formula::{parse_formula, Predicate, RegionHint};

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

fn double_integrator() -> DoubleIntegrator {
    DoubleIntegrator::new(
        Bounds::new(vec![0.0, 0.0, -1.5, -1.5], vec![7.0, 7.0, 1.5, 1.5]).unwrap(),
        Bounds::new(vec![-1.0; 2], vec![1.0; 2]).unwrap(),
        1.0,
    )
    .unwrap()
}

fn arm3() -> PlanarArm {
    PlanarArm::new(
        vec![1.0, 0.8, 0.6],
        Bounds::new(vec![-2.8; 3], vec![2.8; 3]).unwrap(),
        Bounds::new(vec![-0.3; 3], vec![0.3; 3]).unwrap(),
        1.0,
    )
    .unwrap()
}

fn unicycle() -> Unicycle {
    Unicycle::new([0.0, 0.0], [4.0, 4.0], 1.0).unwrap()
}

fn lipschitz_holds(sys: &dyn SystemModel, rng: &mut ChaCha8Rng) {
    let l = sys.lipschitz().expect("declared constant");
    for _ in 0..10_000 {
        let (q1, q2) = (sys.sample_state(rng), sys.sample_state(rng));
        let (u1, u2) = (
            sys.control_bounds().sample(rng),
            sys.control_bounds().sample(rng),
        );
        let lhs = norm(
            sys.step(&q1, &u1)
                .iter()
                .zip(sys.step(&q2, &u2))
                .map(|(a, b)| a - b),
        );
        let rhs = l * norm(
            q1.iter()
                .zip(&q2)
                .chain(u1.iter().zip(&u2))
                .map(|(a, b)| a - b),
        );
        assert!(lhs <= rhs + 1e-9, "{}: {lhs} > {rhs}", sys.name());
    }
}

#[test]
fn lipschitz_certificates() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    lipschitz_holds(&double_integrator(), &mut rng);
    let plane = SingleIntegrator::new(
        Bounds::new(vec![0.0; 2], vec![5.0; 2]).unwrap(),
        Bounds::new(vec![-1.0; 2], vec![1.0; 2]).unwrap(),
        0.5,
    )
    .unwrap();
    lipschitz_holds(&plane, &mut rng);
}

#[test]
fn double_integrator_examples() {
    // Zero acceleration drifts in a straight line.
    let s = step_double_integrator(&[1.0, 2.0, 0.5, -0.25], &[0.0, 0.0], 2.0);
    assert_eq!(s, vec![2.0, 1.5, 0.5, -0.25]);
    // Acceleration changes velocity first, position only on the next step.
    let s = step_double_integrator(&[1.0, 1.0, 0.0, 0.0], &[0.5, -0.5], 1.0);
    assert_eq!(s, vec![1.0, 1.0, 0.5, -0.5]);
}

#[test]
fn jacobians_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let systems: Vec<Box<dyn SystemModel>> = vec![
        Box::new(double_integrator()),
        Box::new(unicycle()),
        Box::new(arm3()),
    ];
    for sys in &systems {
        for _ in 0..200 {
            let q = sys.sample_state(&mut rng);
            let u = sys.control_bounds().sample(&mut rng);
            let (j, fd) = (
                sys.jacobian(&q, &u),
                finite_difference_jacobian(sys.as_ref(), &q, &u),
            );
            let scale = fd.norm().max(1.0);
            assert!((j - fd).norm() / scale < 1e-5, "{}", sys.name());
        }
    }
}

#[test]
fn steer_composes_over_random_controls() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sys = unicycle();
    for _ in 0..200 {
        let q = vec![2.0, 2.0, rng.gen_range(-3.0..3.0), 0.0, 0.0];
        let u = vec![rng.gen_range(-0.05..0.05), rng.gen_range(-1.0..1.0)];
        let (a, b) = (rng.gen_range(0..4), rng.gen_range(0..4));
        let whole = steer(&sys, &q, &u, a + b).unwrap();
        let parts = steer(&sys, &steer(&sys, &q, &u, a).unwrap(), &u, b).unwrap();
        assert_eq!(whole, parts);
    }
}

#[test]
fn unicycle_cannot_slide_sideways_in_one_step() {
    let sys = unicycle();
    let q0 = [2.0, 2.0, 0.0, 0.0, 0.0];
    let qf = [2.0, 2.3, 0.0, 0.0, 0.0];
    let cfg = ConnectConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    assert!(steer_exact_steps(&sys, &q0, &qf, 1, &cfg, &mut rng).is_none());
    // Exhaustive grid over 𝒰: one step never moves the position at all.
    for i in 0..=20 {
        for k in 0..=20 {
            let u = [-0.3 + 0.03 * i as f64, -1.0 + 0.1 * k as f64];
            let s = sys.step(&q0, &u);
            assert!((s[1] - qf[1]).abs() > cfg.epsilon);
        }
    }
}

#[test]
fn double_integrator_connects_within_envelope() {
    let sys = double_integrator();
    let cfg = ConnectConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let q0 = vec![rng.gen_range(2.0..5.0), rng.gen_range(2.0..5.0), 0.0, 0.0];
        // Reached by three steps of a constant acceleration that keeps |v| ≤ 1.5.
        let a = [rng.gen_range(-0.45..0.45), rng.gen_range(-0.45..0.45)];
        let qf = steer(&sys, &q0, &a, 3).unwrap();
        let seg = steer_exact_steps(&sys, &q0, &qf, 3, &cfg, &mut rng).expect("reachable");
        let end = seg.states.last().unwrap();
        assert!(norm(end.iter().zip(&qf).map(|(a, b)| a - b)) <= cfg.epsilon);
    }
}

#[test]
fn fk_matches_hand_trigonometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let links = [1.0, 0.8, 0.6];
    for _ in 0..1000 {
        let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (a1, a2, a3) = (q[0], q[0] + q[1], q[0] + q[1] + q[2]);
        let x = a1.cos() + 0.8 * a2.cos() + 0.6 * a3.cos();
        let y = a1.sin() + 0.8 * a2.sin() + 0.6 * a3.sin();
        let p = fk_planar_arm(&q, &links);
        assert!((p[0] - x).abs() < 1e-12 && (p[1] - y).abs() < 1e-12 && (p[2] - a3).abs() < 1e-12);
    }
}

fn region_formula(arm: &PlanarArm, min: [f64; 2], max: [f64; 2]) -> rrt_eta::formula::Formula {
    let n = arm.n_joints();
    let mut coeffs = vec![0.0; n + 3];
    coeffs[n] = 1.0;
    let p = Predicate::affine("in_region", coeffs, 0.0, min[0]).with_hint(RegionHint::Box {
        axes: vec![n, n + 1],
        min: min.to_vec(),
        max: max.to_vec(),
    });
    let table = [("in_region".to_string(), p)].into_iter().collect();
    parse_formula("F[0,10](in_region)", &table).unwrap()
}

#[test]
fn ik_cache_warms_up_on_one_region() {
    let arm = arm3();
    let phi = region_formula(&arm, [1.2, 0.8], [1.28, 0.88]);
    let cache = IkCache::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let s = adaptive_sample(&phi, 3, &arm, &cache, &mut rng).expect("reachable region");
        assert!(arm.consistency_error(&s) <= 1e-9);
        assert!(arm.joint_bounds().contains(&s[..3]));
    }
    // Failed IK attempts retry with another lookup.
    assert!(cache.hits() + cache.misses() >= 500);
    assert!(cache.hit_rate() >= 0.8, "hit rate {}", cache.hit_rate());
    for (pose, q) in cache.entries() {
        let p = fk_planar_arm(&q, arm.links());
        assert!(((p[0] - pose.x).powi(2) + (p[1] - pose.y).powi(2)).sqrt() <= IK_TOL);
    }
}

#[test]
fn adaptive_sample_branches() {
    let arm = arm3();
    let phi = region_formula(&arm, [1.2, 0.8], [1.28, 0.88]);
    let cache = IkCache::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // Outside the window no workspace predicate is active: joint-space branch.
    let s = adaptive_sample(&phi, 11, &arm, &cache, &mut rng).unwrap();
    assert!(arm.consistency_error(&s) <= 1e-9);
    assert_eq!(cache.hits() + cache.misses(), 0);
    // Inside the window the pose lands in the hinted box.
    let s = adaptive_sample(&phi, 4, &arm, &cache, &mut rng).unwrap();
    assert!(
        (1.2 - 1e-3..=1.28 + 1e-3).contains(&s[3]) && (0.8 - 1e-3..=0.88 + 1e-3).contains(&s[4])
    );
    assert_eq!(cache.misses(), 1);
}
