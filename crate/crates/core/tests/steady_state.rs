mod common;

use approx::assert_abs_diff_eq;
use common::*;
use twostep::calibration::{solve_w_beta, FitGrid};
use twostep::model::simulate;
use twostep::steady_state::*;
use twostep::{AgentPopulation, InfluenceMatrix, LeaderPopulation, MessageDistribution, PreferenceCoeffs};

fn prefs(a: f64, b: f64) -> PreferenceCoeffs {
    PreferenceCoeffs::new(a, b).unwrap()
}

#[test]
fn fixed_point_tracks_closed_form_on_grid() {
    let (gap, at) = oracle_grid_max_gap();
    assert!(gap <= 0.05, "gap {gap} at sigma, alpha, beta, m0 = {at:?}");
}

#[test]
fn fixed_point_reference_example() {
    let dist = MessageDistribution::uniform();
    let fixed = leader_ss_fixed_point(0.5, 0.1, &dist, prefs(1.0, 2.0), 1e-12).unwrap();
    let leaders = LeaderPopulation::new(vec![0.1], vec![0.5], prefs(1.0, 2.0)).unwrap();
    let closed = leader_ss_analytic(&leaders, 0.5, Constants::default()).unwrap()[0];
    assert!((fixed - closed).abs() <= 0.05, "{fixed} vs {closed}");
}

#[test]
fn exponent_at_reference_beta() {
    let fit = solve_w_beta(&MessageDistribution::uniform(), 2.0, &FitGrid::default()).unwrap();
    assert!((fit.w - 1.0 / 1.18).abs() <= 0.03, "w = {}", fit.w);
}

#[test]
fn linear_solve_residual_small() {
    let worst = max_agent_residual(100, 120);
    assert!(worst <= 1e-10, "residual {worst}");
}

#[test]
fn iterative_path_above_dense_limit() {
    let sys = random_system(5, 2100, prefs(1.0, 2.0), 3);
    let leader_ss = vec![0.2, 0.4, 0.6, 0.8, 1.0];
    let x = agent_ss(&sys.agents, &leader_ss).unwrap();
    assert!(agent_ss_residual(&sys.agents, &leader_ss, &x) <= 1e-10);
    assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn closed_form_agrees_with_linear_solve() {
    let q = 50;
    let mut r = rng(9);
    let x0: Vec<f64> = (0..q).map(|_| rand::Rng::random(&mut r)).collect();
    let (rho, pi, theta) = (0.25, 0.45, 0.3);
    let agents = AgentPopulation::new(
        x0.clone(),
        vec![rho; q],
        vec![pi; q],
        vec![theta; q],
        InfluenceMatrix::uniform(q, q),
        InfluenceMatrix::uniform(q, 4),
    )
    .unwrap();
    let m = [0.1, 0.3, 0.6, 0.7];
    let x = agent_ss(&agents, &m).unwrap();
    let x0_mean = x0.iter().sum::<f64>() / q as f64;
    let m_mean = m.iter().sum::<f64>() / 4.0;
    for i in 0..q {
        let c = agent_ss_scalar_closed_form(rho, pi, theta, x0[i], x0_mean, m_mean).unwrap();
        assert_abs_diff_eq!(c, x[i], epsilon = 1e-10);
    }
}

/// Time-averaged simulated leaders sit on the large-n fixed point.
#[test]
fn simulation_matches_fixed_point() {
    for (k, (a, b)) in [(1.0, 2.0), (0.8, 3.0), (0.6, 1.5), (1.0, 1.0)].into_iter().enumerate() {
        let sys = random_system(30, 5, prefs(a, b), 40 + k as u64);
        let traj = simulate(&sys.dist, &sys.leaders, &sys.agents, 1000, 100, k as u64).unwrap();
        let sim = traj.leader_tail_mean(20);
        let fixed = leader_ss_fixed_point_all(&sys.leaders, &sys.dist, 1e-12).unwrap();
        for (i, (s, f)) in sim.iter().zip(&fixed).enumerate() {
            assert!((s - f).abs() <= 0.03, "alpha={a} beta={b} leader {i}: sim {s} fixed {f}");
        }
    }
}

#[test]
fn beta_sample_mean() {
    let mut r = rng(5);
    let v = MessageDistribution::new(2.0, 5.0).unwrap().sample(100_000, &mut r);
    assert!((sample_stats(&v).unwrap().mean - 2.0 / 7.0).abs() <= 0.01);
}

fn regime(sigma: f64, alpha: f64, beta: f64, mu: f64) -> ScalarRegime {
    ScalarRegime {
        sigma,
        rho: 0.2,
        theta: 0.4,
        prefs: prefs(alpha, beta),
        mu,
        m0: SampleStats { mean: 2.0 / 7.0, variance: 10.0 / 392.0 },
        x0: SampleStats { mean: 5.0 / 7.0, variance: 10.0 / 392.0 },
        constants: Constants::default(),
    }
}

#[test]
fn predicted_leader_mean_is_linear_in_mu() {
    let means: Vec<f64> = (1..10)
        .map(|k| predicted_stats(&regime(0.5, 0.8, 3.0, k as f64 / 10.0)).unwrap().0.mean)
        .collect();
    for w in means.windows(3) {
        assert_abs_diff_eq!(w[2] - w[1], w[1] - w[0], epsilon = 1e-12);
    }
}

#[test]
fn predicted_leader_variance_monotone() {
    let var = |a, b| predicted_stats(&regime(0.5, a, b, 0.5)).unwrap().0.variance;
    let betas = [1.1, 1.5, 2.0, 3.0, 4.0, 4.9];
    assert!(betas.windows(2).all(|w| var(0.8, w[1]) >= var(0.8, w[0])));
    let alphas = [0.55, 0.6, 0.7, 0.8, 0.9, 1.0];
    assert!(alphas.windows(2).all(|w| var(w[1], 2.0) <= var(w[0], 2.0)));
}

#[test]
fn predicted_agent_variance_scales_with_rho_squared() {
    for rho in [0.1, 0.3, 0.5, 0.9] {
        let r = ScalarRegime { rho, theta: (1.0 - rho) / 2.0, ..regime(0.5, 1.0, 2.0, 0.5) };
        let (_, agents) = predicted_stats(&r).unwrap();
        assert_abs_diff_eq!(agents.variance, rho * rho * r.x0.variance, epsilon = 1e-15);
    }
}

#[test]
fn stubbornness_endpoints() {
    // sigma = 0 forgets the initial opinion, sigma = 1 keeps it
    let (lead0, _) = predicted_stats(&regime(0.0, 1.0, 1.0, 0.5)).unwrap();
    let (lead1, _) = predicted_stats(&regime(1.0, 1.0, 1.0, 0.5)).unwrap();
    assert_abs_diff_eq!(lead0.mean, 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(lead1.mean, 2.0 / 7.0, epsilon = 1e-15);
}
