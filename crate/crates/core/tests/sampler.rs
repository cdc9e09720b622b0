mod common;

use common::{hyper, small_instance};
use moreau_slab::diagnostics::batch_means_stderr;
use moreau_slab::envelope::{surrogate_envelope, EnvelopePoint};
use moreau_slab::oracle::{quad_posterior, tv_discrete, QuadOptions, Which};
use moreau_slab::sampler::*;
use moreau_slab::{HyperState, InclusionMask};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_state(rng: &mut ChaCha8Rng, d: usize, phi: HyperState) -> ChainState {
    let delta = InclusionMask::from_bits((0..d).map(|_| rng.random::<bool>()).collect());
    let theta = (0..d).map(|_| 1.5 * rng.sample::<f64, _>(StandardNormal)).collect();
    ChainState { delta, theta, phi, iter: 0 }
}

#[test]
fn delta_logits_match_target_differences() {
    let model = small_instance(2, 40, 6);
    let gamma = model.gamma_from_rule(0.25).unwrap();
    let kernel = Kernel::new(&model, gamma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let phi = hyper(&model, rng.random_range(0.05..0.95), rng.random_range(0.5..4.0), rng.random_range(0.1..1.0));
        let st = random_state(&mut rng, 6, phi);
        let cap = f64::INFINITY;
        let (_, g) = model.value_grad(&st.theta);
        let logits = kernel.delta_logits(&st.theta, &st.phi, &g).unwrap();
        for j in 0..6 {
            let mut on = st.clone();
            on.delta.set(j, true);
            let mut off = st.clone();
            off.delta.set(j, false);
            let diff = kernel.log_target(&on, cap).unwrap() - kernel.log_target(&off, cap).unwrap();
            assert!((logits[j] - diff).abs() < 1e-9, "j={j}: {} vs {diff}", logits[j]);
        }
    }
}

#[test]
fn inactive_proposal_is_the_surrogate_conditional() {
    let model = small_instance(4, 30, 4);
    let gamma = model.gamma_from_rule(0.25).unwrap();
    let kernel = Kernel::new(&model, gamma).unwrap();
    let phi = hyper(&model, 0.3, 2.0, 0.6);
    let ctx = kernel.context(&phi, f64::INFINITY).unwrap();
    let delta: InclusionMask = "1010".parse().unwrap();
    let base = vec![0.7, 0.0, -1.2, 0.0];
    let prop = kernel.inactive_proposal(&base, &delta, &phi).unwrap();
    let mut offset = None;
    for a in -10..=10 {
        for b in -10..=10 {
            let u = [a as f64 * 0.03, b as f64 * 0.03];
            let mut theta = base.clone();
            theta[1] = u[0];
            theta[3] = u[1];
            let s = -surrogate_envelope(&ctx, &model, &theta, &delta).unwrap();
            let c = s - kernel.inactive_log_density(&prop, &u);
            let c0 = *offset.get_or_insert(c);
            assert!((c - c0).abs() < 1e-8, "{c} vs {c0}");
        }
    }
}

#[test]
fn detailed_balance_ratios() {
    let model = small_instance(6, 30, 4);
    let gamma = model.gamma_from_rule(0.25).unwrap();
    let kernel = Kernel::new(&model, gamma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let cap = 1e6;
    for _ in 0..1000 {
        let phi = hyper(&model, 0.4, rng.random_range(0.5..3.0), 0.7);
        let ctx = kernel.context(&phi, cap).unwrap();
        let x = random_state(&mut rng, 4, phi);
        let mut y = x.clone();
        for t in y.theta.iter_mut() {
            *t += 0.3 * rng.sample::<f64, _>(StandardNormal);
        }
        let lx = kernel.log_target(&x, cap).unwrap();
        let ly_full = |s: &ChainState| kernel.log_target(s, cap).unwrap();
        let ep = |s: &ChainState| EnvelopePoint::evaluate(&ctx, &model, &s.theta, &s.delta);
        let epx = ep(&x);

        let active = x.delta.active();
        if !active.is_empty() {
            let mut ya = x.clone();
            for &k in &active {
                ya.theta[k] = y.theta[k];
            }
            let epya = ep(&ya);
            let xa: Vec<f64> = active.iter().map(|&k| x.theta[k]).collect();
            let yav: Vec<f64> = active.iter().map(|&k| ya.theta[k]).collect();
            let dx = kernel.mala_drift(&ctx, DriftKind::Capped, &x.theta, &epx, &active);
            let dy = kernel.mala_drift(&ctx, DriftKind::Capped, &ya.theta, &epya, &active);
            let h = gamma;
            let fwd = kernel.mala_log_ratio(h, (&epx, &xa, &dx), (&epya, &yav, &dy));
            let bwd = kernel.mala_log_ratio(h, (&epya, &yav, &dy), (&epx, &xa, &dx));
            let want = ly_full(&ya) - lx + kernel.mala_log_proposal(h, &yav, &dy, &xa) - kernel.mala_log_proposal(h, &xa, &dx, &yav);
            assert!((fwd + bwd).abs() < 1e-9);
            assert!((fwd - want).abs() < 1e-9 * (1.0 + want.abs()));
        }

        let inactive = x.delta.inactive();
        if !inactive.is_empty() {
            let mut yc = x.clone();
            for &k in &inactive {
                yc.theta[k] = y.theta[k];
            }
            let prop = kernel.inactive_proposal(&x.theta, &x.delta, &phi).unwrap();
            let epyc = ep(&yc);
            let uo: Vec<f64> = inactive.iter().map(|&k| x.theta[k]).collect();
            let un: Vec<f64> = inactive.iter().map(|&k| yc.theta[k]).collect();
            let fwd = kernel.inactive_log_ratio(&prop, (&epx, &uo), (&epyc, &un));
            let bwd = kernel.inactive_log_ratio(&prop, (&epyc, &un), (&epx, &uo));
            let want = ly_full(&yc) - lx + kernel.inactive_log_density(&prop, &uo) - kernel.inactive_log_density(&prop, &un);
            assert!((fwd + bwd).abs() < 1e-9);
            assert!((fwd - want).abs() < 1e-9 * (1.0 + want.abs()));
            // same ratio through the surrogate gap h̃ - h_γ
            let gap = |s: &ChainState, e: &EnvelopePoint| surrogate_envelope(&ctx, &model, &s.theta, &s.delta).unwrap() - e.value;
            let via_gap = gap(&yc, &epyc) - gap(&x, &epx);
            assert!((fwd - via_gap).abs() < 1e-9 * (1.0 + fwd.abs()), "{fwd} vs {via_gap}");
        }
    }
}

#[test]
fn q_draws_have_beta_moments() {
    let model = small_instance(8, 30, 5);
    let gamma = model.gamma_from_rule(0.25).unwrap();
    let kernel = Kernel::new(&model, gamma).unwrap();
    let phi = hyper(&model, 0.5, 1.0, 1.0);
    let init = ChainState { delta: "11000".parse().unwrap(), theta: vec![0.0; 5], phi, iter: 0 };
    let mut chain = Chain::new(&kernel, SamplerConfig { seed: 5, ..Default::default() }, init).unwrap();
    let n = 20_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| {
            chain.update_q().unwrap();
            chain.state.phi.q
        })
        .collect();
    let (a, b) = (3.0, 5.0 + 5f64.powf(2.0) - 2.0);
    let mean = a / (a + b);
    let var = a * b / ((a + b).powi(2) * (a + b + 1.0));
    let m = draws.iter().sum::<f64>() / n as f64;
    assert!((m - mean).abs() < 4.0 * (var / n as f64).sqrt(), "{m} vs {mean}");
}

#[test]
fn identical_seeds_give_identical_traces() {
    let model = small_instance(12, 30, 4);
    let gamma = model.gamma_from_rule(0.25).unwrap();
    let kernel = Kernel::new(&model, gamma).unwrap();
    let phi = hyper(&model, 0.5, 1.0, 0.9);
    let cfg = SamplerConfig { iterations: 400, burn_in: 100, seed: 77, ..Default::default() };
    let run = || {
        let mut sink = VecSink::default();
        let s = run_chain(&kernel, &cfg, ChainState::zeros(4, phi), &mut sink).unwrap();
        (serde_json::to_string(&sink.0).unwrap(), format!("{:?}", s.theta_mean))
    };
    assert_eq!(run(), run());
    let other = SamplerConfig { seed: 78, ..cfg.clone() };
    let mut sink = VecSink::default();
    run_chain(&kernel, &other, ChainState::zeros(4, phi), &mut sink).unwrap();
    let a = run().0;
    assert_ne!(serde_json::to_string(&sink.0).unwrap(), a);
}

#[test]
fn rwm_rate_adapts_toward_target() {
    let model = small_instance(14, 40, 5);
    let gamma = model.gamma_from_rule(0.25).unwrap();
    let kernel = Kernel::new(&model, gamma).unwrap();
    let phi = hyper(&model, 0.5, 2.0, 0.8);
    let cfg = SamplerConfig { iterations: 6000, burn_in: 1000, seed: 3, ..Default::default() };
    let s = run_chain(&kernel, &cfg, ChainState::zeros(5, phi), &mut NullSink).unwrap();
    let r = s.acc_rwm.rate().unwrap();
    assert!((0.15..0.45).contains(&r), "rwm rate {r}");
    let m = s.acc_mala.rate().unwrap();
    assert!(m > 0.2, "mala rate {m}");
}

#[test]
fn short_chain_tracks_quadrature_in_two_dimensions() {
    let model = small_instance(31, 30, 2);
    let gamma = model.gamma_from_rule(0.25).unwrap();
    let kernel = Kernel::new(&model, gamma).unwrap();
    let phi = hyper(&model, 0.5, 2.0, 0.8);
    let quad = quad_posterior(&model, &phi, Some(gamma), Which::MyApprox, &QuadOptions::default()).unwrap();
    let cfg = SamplerConfig { iterations: 42_000, burn_in: 2_000, fixed_phi: true, seed: 1, ..Default::default() };
    let mut sink = VecSink::default();
    run_chain(&kernel, &cfg, ChainState::zeros(2, phi), &mut sink).unwrap();
    let kept: Vec<&TraceRecord> = sink.0.iter().filter(|r| r.iter > 2000).collect();
    let mut freq = vec![0.0; 4];
    for r in &kept {
        freq[r.delta.code() as usize] += 1.0 / kept.len() as f64;
    }
    let tv = tv_discrete(&freq, &quad.delta_probs_by_code()).unwrap();
    assert!(tv < 0.05, "tv {tv}: {freq:?} vs {:?}", quad.delta_probs_by_code());
    let mean = quad.theta_mean();
    for j in 0..2 {
        let series: Vec<f64> = kept.iter().map(|r| r.theta[j]).collect();
        let m = series.iter().sum::<f64>() / series.len() as f64;
        let se = batch_means_stderr(&series).unwrap();
        assert!((m - mean[j]).abs() < 4.0 * se, "coord {j}: {m} vs {} (se {se})", mean[j]);
    }
}
