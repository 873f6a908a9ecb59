use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use skysnn_core::seed::stream_rng;
use skysnn_core::snn::{
    build_topology, build_topology_with_inputs, canonical_raster, encode_poisson_rates, stdp_update, AdaptiveThreshold,
    BitMatrix, DeviceConfig, DeviceLayout, Dynamics, Layer, LifParams, PlasticityEvent, PreTraces, SkyrmionMapping,
    StdpParams, StepInputs, ThetaParams, MNIST_INPUTS,
};
use skysnn_core::{Error, Network, NetworkParams, WeightMatrix};

fn if_network(n_input: usize, n_exc: usize, bits: &BitMatrix, threshold: u32) -> Network {
    let params = NetworkParams {
        exc: LifParams {
            v_rest: -65.0,
            v_reset: -65.0,
            v_thresh_base: -65.0 + threshold as f64,
            refractory: 0.0,
            ..LifParams::excitatory()
        },
        inh_to_exc_weight: 1.0,
        dynamics: Dynamics::IntegrateFire { leak: false },
        unit_epsp_mv: Some(1.0),
        ..NetworkParams::default()
    };
    Network::new(
        build_topology_with_inputs(n_input, n_exc).unwrap(),
        WeightMatrix::from_bits(bits, 1.0),
        AdaptiveThreshold::new(n_exc, &ThetaParams::default()),
        params,
    )
    .unwrap()
}

#[test]
fn mnist_topology_counts() {
    let t = build_topology(100).unwrap();
    assert_eq!(t.n_input, MNIST_INPUTS);
    assert_eq!(t.input_edges(), 78_400);
    assert_eq!(t.exc_to_inh_edges(), 100);
    assert_eq!(t.inh_to_exc_edges(), 9_900);
    assert!(!t.inhibits(3, 3));
    assert!(t.inhibits(3, 4));
    assert!(build_topology(0).is_err());
}

#[test]
fn device_delays_shift_but_keep_spike_counts() {
    let bits = BitMatrix::from_vec(2, 1, vec![true, true]).unwrap();
    let net = if_network(2, 1, &bits, 3);
    let inputs = StepInputs::from_nested(vec![vec![0], vec![1], vec![0], vec![], vec![], vec![]]);
    let reference = net.run_reference(&inputs, 0, 0.5, true).unwrap();
    let run = net.run_skyrmion(&DeviceConfig::default(), &inputs, 0, 0.5, true).unwrap();
    assert_eq!(reference.exc_counts, vec![1]);
    assert_eq!(run.outcome.exc_counts, vec![1]);
    let t_ref = reference.records[0].time_ms;
    let t_dev = run.outcome.records.iter().find(|r| r.layer == Layer::Exc).unwrap().time_ms;
    assert!(t_dev > t_ref, "{t_dev} vs {t_ref}");
    assert!(run.ledger.total_fj() > 0.0);
}

#[test]
fn zero_delay_layout_matches_reference_with_inhibition() {
    let bits = BitMatrix::from_vec(1, 3, vec![true, true, false]).unwrap();
    let net = if_network(1, 3, &bits, 2);
    let inputs = StepInputs::from_nested(vec![vec![0]; 12]);
    let dev = DeviceConfig {
        layout: DeviceLayout::zero_delay(),
        ..DeviceConfig::default()
    };
    let mut a = net.run_reference(&inputs, 4, 0.5, true).unwrap().records;
    let mut b = net.run_skyrmion(&dev, &inputs, 4, 0.5, true).unwrap().outcome.records;
    canonical_raster(&mut a);
    canonical_raster(&mut b);
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn skyrmion_mode_needs_binary_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let net = Network::new(
        build_topology_with_inputs(4, 2).unwrap(),
        WeightMatrix::random(4, 2, 1.0, 0.7, &mut rng),
        AdaptiveThreshold::new(2, &ThetaParams::default()),
        NetworkParams::default(),
    )
    .unwrap();
    let err = SkyrmionMapping::from_network(&net).unwrap_err();
    assert!(matches!(err, Error::Config { ref key, .. } if key == "weights"));
}

#[test]
fn network_rejects_mismatched_shapes() {
    let w = WeightMatrix::zeros(5, 3, 1.0);
    let r = Network::new(
        build_topology_with_inputs(4, 3).unwrap(),
        w,
        AdaptiveThreshold::new(3, &ThetaParams::default()),
        NetworkParams::default(),
    );
    assert!(r.is_err());
}

proptest! {
    #[test]
    fn poisson_encoding_is_seed_deterministic(seed in any::<u64>(), px in prop::collection::vec(any::<u8>(), 1..20)) {
        let a = encode_poisson_rates(&px, 0.25, 100.0, &mut stream_rng(seed, 2, 0));
        let b = encode_poisson_rates(&px, 0.25, 100.0, &mut stream_rng(seed, 2, 0));
        prop_assert_eq!(&a, &b);
        for (train, &p) in a.trains.iter().zip(&px) {
            if p == 0 {
                prop_assert!(train.is_empty());
            }
            prop_assert!(train.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(train.iter().all(|&t| (0.0..100.0).contains(&t)));
        }
    }

    #[test]
    fn stdp_keeps_weights_in_bounds(
        seed in any::<u64>(),
        eta in 0.001f64..1.0,
        x_tar in 0.0f64..1.0,
        mu in 0.0f64..2.0,
        n_events in 1usize..200,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = WeightMatrix::random(6, 3, 1.0, 1.0, &mut rng);
        let mut traces = PreTraces::new(6, 20.0);
        let p = StdpParams { eta, x_tar, mu_exp: mu, ..StdpParams::default() };
        let mut t = 0.0;
        let events: Vec<_> = (0..n_events)
            .map(|_| {
                t += rng.random_range(0.0..3.0);
                if rng.random_bool(0.7) {
                    PlasticityEvent::Pre { input: rng.random_range(0..6), t }
                } else {
                    PlasticityEvent::Post { exc: rng.random_range(0..3), t }
                }
            })
            .collect();
        stdp_update(&mut w, &mut traces, &events, &p);
        prop_assert!(w.all_finite());
        prop_assert!(w.within_bounds());
    }

    #[test]
    fn potentiation_only_touches_the_firing_column(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = WeightMatrix::random(5, 3, 1.0, 0.5, &mut rng);
        let before = w.clone();
        let mut traces = PreTraces::new(5, 20.0);
        let events = [
            PlasticityEvent::Pre { input: 0, t: 1.0 },
            PlasticityEvent::Pre { input: 3, t: 2.0 },
            PlasticityEvent::Post { exc: 1, t: 2.5 },
        ];
        stdp_update(&mut w, &mut traces, &events, &StdpParams::default());
        for i in 0..5 {
            prop_assert_eq!(w.get(i, 0), before.get(i, 0));
            prop_assert_eq!(w.get(i, 2), before.get(i, 2));
        }
        prop_assert!(w.get(0, 1) > before.get(0, 1));
        prop_assert!(w.get(3, 1) > before.get(3, 1));
        prop_assert!(w.get(1, 1) <= before.get(1, 1));
    }

    #[test]
    fn reference_run_is_pure(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws: Vec<bool> = (0..12).map(|_| rng.random_bool(0.5)).collect();
        let bits = BitMatrix::from_vec(4, 3, draws).unwrap();
        let net = if_network(4, 3, &bits, rng.random_range(1..4));
        let steps: Vec<Vec<u32>> = (0..20)
            .map(|_| (0..4).filter(|_| rng.random_bool(0.3)).collect())
            .collect();
        let inputs = StepInputs::from_nested(steps);
        let a = net.run_reference(&inputs, 2, 0.5, true).unwrap();
        let b = net.run_reference(&inputs, 2, 0.5, true).unwrap();
        prop_assert_eq!(a, b);
    }
}
