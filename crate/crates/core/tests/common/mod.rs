//! Shared fixtures: small random systems and the invariant checks used by
//! both the property suites and the acceptance run.
#![allow(dead_code)]

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twostep::model::{leader_step, selective_coefficients, simulate};
use twostep::{AgentPopulation, InfluenceMatrix, LeaderPopulation, MessageDistribution, PreferenceCoeffs};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Admissible coefficients, with the degenerate pair mixed in.
pub fn prefs() -> impl Strategy<Value = PreferenceCoeffs> {
    prop_oneof![
        1 => Just(PreferenceCoeffs::degenerate()),
        1 => (1.0001..6.0f64).prop_map(|b| PreferenceCoeffs::new(1.0, b).unwrap()),
        4 => (0.5001..=1.0f64, 1.0001..6.0f64).prop_map(|(a, b)| PreferenceCoeffs::new(a, b).unwrap()),
    ]
}

pub fn random_stochastic<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>() + 1e-3);
    for mut row in m.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    m
}

/// A small heterogeneous system: random opinions, stubbornness, agent
/// weights and dense influence matrices.
#[derive(Debug, Clone)]
pub struct System {
    pub dist: MessageDistribution,
    pub leaders: LeaderPopulation,
    pub agents: AgentPopulation,
}

pub fn random_system(p: usize, q: usize, prefs: PreferenceCoeffs, seed: u64) -> System {
    let mut r = rng(seed);
    let dist = MessageDistribution::new(r.random_range(0.3..4.0), r.random_range(0.3..4.0)).unwrap();
    let m0: Vec<f64> = (0..p).map(|_| r.random()).collect();
    let sigma: Vec<f64> = (0..p).map(|_| r.random()).collect();
    let x0: Vec<f64> = (0..q).map(|_| r.random()).collect();
    let (mut rho, mut pi, mut theta) = (vec![], vec![], vec![]);
    for _ in 0..q {
        let e: [f64; 3] = [r.random::<f64>() + 1e-3, r.random(), r.random()];
        let s: f64 = e.iter().sum();
        rho.push(e[0] / s);
        pi.push(e[1] / s);
        theta.push((1.0 - e[0] / s - e[1] / s).max(0.0));
    }
    let w = InfluenceMatrix::dense("w", random_stochastic(q, q, &mut r)).unwrap();
    let u = InfluenceMatrix::dense("u", random_stochastic(q, p, &mut r)).unwrap();
    System {
        dist,
        leaders: LeaderPopulation::new(m0, sigma, prefs).unwrap(),
        agents: AgentPopulation::new(x0, rho, pi, theta, w, u).unwrap(),
    }
}

pub fn system() -> impl Strategy<Value = System> {
    (1usize..6, 1usize..6, prefs(), any::<u64>()).prop_map(|(p, q, pr, seed)| random_system(p, q, pr, seed))
}

/// Messages, optionally with some exact copies of `m` planted.
pub fn opinion_and_messages() -> impl Strategy<Value = (f64, Vec<f64>)> {
    (0.0..=1.0f64, prop::collection::vec(0.0..=1.0f64, 1..40), 0usize..4).prop_map(|(m, mut msgs, copies)| {
        let len = msgs.len();
        for k in 0..copies.min(len) {
            msgs[(k * 7) % len] = m;
        }
        (m, msgs)
    })
}

pub fn check_simplex(m: f64, msgs: &[f64], prefs: PreferenceCoeffs) -> Result<(), TestCaseError> {
    let g = selective_coefficients(m, msgs, prefs);
    prop_assert_eq!(g.len(), msgs.len());
    prop_assert!(g.iter().all(|&x| x >= 0.0 && x.is_finite()), "negative weight {:?}", g);
    let sum: f64 = g.iter().sum();
    prop_assert!((sum - 1.0).abs() <= 1e-12, "sum {}", sum);
    let exact = msgs.iter().filter(|&&s| s == m).count();
    if exact > 0 && prefs.alpha() < 1.0 {
        for (s, w) in msgs.iter().zip(&g) {
            let want = if *s == m { 1.0 / exact as f64 } else { 0.0 };
            prop_assert!((w - want).abs() <= 1e-15, "exact-match share {} != {}", w, want);
        }
    }
    Ok(())
}

pub fn check_closure(sys: &System, steps: usize, sources: usize, seed: u64) -> Result<(), TestCaseError> {
    let traj = simulate(&sys.dist, &sys.leaders, &sys.agents, sources, steps, seed).unwrap();
    for v in traj.leader_opinions.iter().chain(&traj.agent_opinions).flatten() {
        prop_assert!((0.0..=1.0).contains(v), "opinion {} left [0, 1]", v);
    }
    Ok(())
}

pub fn check_determinism(sys: &System, steps: usize, sources: usize, seed: u64) -> Result<(), TestCaseError> {
    let a = simulate(&sys.dist, &sys.leaders, &sys.agents, sources, steps, seed).unwrap();
    let b = simulate(&sys.dist, &sys.leaders, &sys.agents, sources, steps, seed).unwrap();
    prop_assert_eq!(a.leader_opinions, b.leader_opinions);
    prop_assert_eq!(a.agent_opinions, b.agent_opinions);
    Ok(())
}

fn permute<T: Copy>(v: &[T], perm: &[usize]) -> Vec<T> {
    perm.iter().map(|&i| v[i]).collect()
}

/// Relabelling leaders and agents relabels the trajectory; reordering the
/// messages of a step leaves every leader update unchanged.
pub fn check_equivariance(sys: &System, steps: usize, sources: usize, seed: u64) -> Result<(), TestCaseError> {
    let mut r = rng(seed ^ 0x5eed);
    let (p, q) = (sys.leaders.len(), sys.agents.len());
    let mut lp: Vec<usize> = (0..p).collect();
    let mut ap: Vec<usize> = (0..q).collect();
    lp.shuffle(&mut r);
    ap.shuffle(&mut r);

    let leaders = LeaderPopulation::new(
        permute(sys.leaders.initial(), &lp),
        permute(sys.leaders.sigma(), &lp),
        sys.leaders.prefs(),
    )
    .unwrap();
    let w = sys.agents.w().to_dense();
    let u = sys.agents.u().to_dense();
    let agents = AgentPopulation::new(
        permute(sys.agents.initial(), &ap),
        permute(sys.agents.rho(), &ap),
        permute(sys.agents.pi(), &ap),
        permute(sys.agents.theta(), &ap),
        InfluenceMatrix::dense("w", DMatrix::from_fn(q, q, |i, j| w[(ap[i], ap[j])])).unwrap(),
        InfluenceMatrix::dense("u", DMatrix::from_fn(q, p, |i, j| u[(ap[i], lp[j])])).unwrap(),
    )
    .unwrap();

    let base = simulate(&sys.dist, &sys.leaders, &sys.agents, sources, steps, seed).unwrap();
    let moved = simulate(&sys.dist, &leaders, &agents, sources, steps, seed).unwrap();
    for t in 0..=steps {
        for (i, &src) in lp.iter().enumerate() {
            let (a, b) = (moved.leader_opinions[t][i], base.leader_opinions[t][src]);
            prop_assert!((a - b).abs() <= 1e-12, "leader {} at t={}: {} vs {}", i, t, a, b);
        }
        for (i, &src) in ap.iter().enumerate() {
            let (a, b) = (moved.agent_opinions[t][i], base.agent_opinions[t][src]);
            prop_assert!((a - b).abs() <= 1e-12, "agent {} at t={}: {} vs {}", i, t, a, b);
        }
    }

    let msgs = sys.dist.sample(sources, &mut r);
    let mut shuffled = msgs.clone();
    shuffled.shuffle(&mut r);
    let m_prev = base.leader_opinions[steps.min(1)].clone();
    let a = leader_step(&sys.leaders, &m_prev, &msgs).unwrap();
    let b = leader_step(&sys.leaders, &m_prev, &shuffled).unwrap();
    for (x, y) in a.iter().zip(&b) {
        prop_assert!((x - y).abs() <= 1e-12, "message order changed an update: {} vs {}", x, y);
    }
    Ok(())
}

pub fn run_params() -> impl Strategy<Value = (usize, usize, u64)> {
    (1usize..5, 1usize..25, any::<u64>())
}

/// Largest |fixed point - closed form| over the sigma x alpha x beta x m0
/// grid with uniform messages, and the grid point where it occurs.
pub fn oracle_grid_max_gap() -> (f64, [f64; 4]) {
    use twostep::steady_state::{leader_ss_fixed_point, modified_stubbornness};
    use twostep::Constants;
    let dist = MessageDistribution::uniform();
    let mut worst = (0.0, [0.0; 4]);
    for s in 1..=9 {
        let sigma = s as f64 / 10.0;
        for alpha in [0.6, 0.8, 1.0] {
            for beta in [1.5, 2.0, 3.0, 4.0] {
                let prefs = PreferenceCoeffs::new(alpha, beta).unwrap();
                let z = modified_stubbornness(sigma, prefs, Constants::default()).unwrap();
                for m0 in [0.1, 0.5, 0.9] {
                    let fixed = leader_ss_fixed_point(sigma, m0, &dist, prefs, 1e-12).unwrap();
                    let closed = z * m0 + (1.0 - z) * dist.mean();
                    let gap = (fixed - closed).abs();
                    if gap > worst.0 {
                        worst = (gap, [sigma, alpha, beta, m0]);
                    }
                }
            }
        }
    }
    worst
}

/// Worst agent steady-state residual over `configs` random dense systems
/// of up to `max_q` agents.
pub fn max_agent_residual(configs: u64, max_q: usize) -> f64 {
    use twostep::steady_state::{agent_ss, agent_ss_residual};
    (0..configs)
        .map(|k| {
            let mut r = rng(1000 + k);
            let p = r.random_range(1..=max_q);
            let q = r.random_range(1..=max_q);
            let sys = random_system(p, q, PreferenceCoeffs::degenerate(), k);
            let leader_ss: Vec<f64> = (0..p).map(|_| r.random()).collect();
            let x = agent_ss(&sys.agents, &leader_ss).unwrap();
            agent_ss_residual(&sys.agents, &leader_ss, &x)
        })
        .fold(0.0, f64::max)
}
