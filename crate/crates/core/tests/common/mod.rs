#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rrt_eta::formula::{Expr, Formula, Node, NodeId, Predicate};
use rrt_eta::monitor::Interval;
use rrt_eta::robustness::{agm_and, agm_or};

pub const STATE_DIM: usize = 2;

pub fn random_predicate(rng: &mut ChaCha8Rng, k: usize) -> Predicate {
    let coeffs = (0..STATE_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Predicate::affine(
        format!("p{k}"),
        coeffs,
        rng.gen_range(-0.2..0.2),
        rng.gen_range(-0.3..0.3),
    )
    .with_scale(rng.gen_range(0.2..1.0))
}

/// Random positive-normal-form expression with temporal nesting depth at most
/// `depth` and horizon at most `budget`.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: usize, budget: usize, k: &mut usize) -> Expr {
    let leaf = depth == 0 || rng.gen_bool(0.2);
    if leaf {
        *k += 1;
        return match rng.gen_range(0..20) {
            0 => Expr::True,
            1 => Expr::False,
            _ => Expr::pred(random_predicate(rng, *k)),
        };
    }
    match rng.gen_range(0..4) {
        0 | 1 => {
            let n = rng.gen_range(2..=3);
            let cs = (0..n)
                .map(|_| random_expr(rng, depth - 1, budget, k))
                .collect();
            if rng.gen_bool(0.5) {
                Expr::and(cs)
            } else {
                Expr::or(cs)
            }
        }
        _ if budget >= 1 => {
            let b = rng.gen_range(1..=budget.min(6));
            let a = rng.gen_range(0..b);
            let child = random_expr(rng, depth - 1, budget - b, k);
            if rng.gen_bool(0.5) {
                Expr::globally(a, b, child)
            } else {
                Expr::finally(a, b, child)
            }
        }
        _ => {
            *k += 1;
            Expr::pred(random_predicate(rng, *k))
        }
    }
}

pub fn random_formula(rng: &mut ChaCha8Rng, depth: usize, max_horizon: usize) -> Formula {
    let mut k = 0;
    let f = Formula::new(random_expr(rng, depth, max_horizon, &mut k)).unwrap();
    assert!(f.horizon() <= max_horizon);
    f
}

/// Random trajectory sample. Wide enough that predicates saturate at ±1 now
/// and then.
pub fn random_state(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..STATE_DIM).map(|_| rng.gen_range(-1.5..1.5)).collect()
}

/// Non-incremental interval semantics: evaluates the prefix from scratch,
/// treating unobserved predicate samples as [−1, 1]. Counts node visits.
pub fn batch_interval(prefix: &[Vec<f64>], phi: &Formula, visits: &mut u64) -> Interval {
    eval(prefix, phi, phi.root(), 0, visits)
}

fn eval(prefix: &[Vec<f64>], phi: &Formula, id: NodeId, k: usize, visits: &mut u64) -> Interval {
    *visits += 1;
    let agg = |ivs: Vec<Interval>, and: bool| {
        let lo: Vec<f64> = ivs.iter().map(|i| i.lo).collect();
        let hi: Vec<f64> = ivs.iter().map(|i| i.hi).collect();
        if and {
            Interval::new(agm_and(&lo).unwrap(), agm_and(&hi).unwrap())
        } else {
            Interval::new(agm_or(&lo).unwrap(), agm_or(&hi).unwrap())
        }
    };
    match phi.node(id) {
        Node::True => Interval::singleton(1.0),
        Node::False => Interval::singleton(-1.0),
        Node::Pred(p) => match prefix.get(k) {
            Some(s) => Interval::singleton(p.raw_robustness(s).clamp(-1.0, 1.0)),
            None => Interval::FULL,
        },
        Node::And(cs) | Node::Or(cs) => {
            let ivs = cs
                .iter()
                .map(|&c| eval(prefix, phi, c, k, visits))
                .collect();
            agg(ivs, matches!(phi.node(id), Node::And(_)))
        }
        Node::Globally { a, b, child } | Node::Finally { a, b, child } => {
            let ivs = (k + a..=k + b)
                .map(|j| eval(prefix, phi, *child, j, visits))
                .collect();
            agg(ivs, matches!(phi.node(id), Node::Globally { .. }))
        }
    }
}
