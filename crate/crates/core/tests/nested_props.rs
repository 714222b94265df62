use pilattice::nested::summarize;
use pilattice::rng::trial_rng;
use pilattice::{ChannelState, DecoderKind, DecoderOptions, NestedConfig, NestedLatticeCode};
use proptest::prelude::*;

fn config(tower: Vec<u64>, n: usize, m_c: Vec<usize>, m_f: Vec<usize>, seed: u64) -> NestedConfig {
    NestedConfig {
        tower,
        n,
        m_c,
        m_f,
        power: 1.0,
        seed,
        full_rank: true,
    }
}

fn small_code() -> impl Strategy<Value = NestedLatticeCode> {
    (any::<u64>(), 0usize..3).prop_map(|(seed, shape)| {
        let cfg = match shape {
            0 => config(vec![3, 5], 2, vec![1, 1], vec![2, 2], seed),
            1 => config(vec![2, 3], 3, vec![1, 1], vec![2, 3], seed),
            _ => config(vec![5], 2, vec![0], vec![1], seed),
        };
        cfg.build().unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn coarse_lattice_sits_inside_fine(code in small_code()) {
        for p in code.coarse().coset_representatives().unwrap() {
            prop_assert!(code.fine().contains(&p.0));
        }
        let ratio = code.coarse().volume().unwrap() / code.fine().volume().unwrap();
        prop_assert!((ratio - code.quotient_size().unwrap() as f64).abs() < 1e-6 * ratio);
    }

    #[test]
    fn dithered_encoding_roundtrips_without_noise(code in small_code(), seed in any::<u64>()) {
        let ch = ChannelState::new(code.power(), 0.0).unwrap();
        let mut rng = trial_rng(seed, 0, 0);
        let messages = code.messages().unwrap();
        for i in 0..8 {
            let msg = &messages[(seed as usize).wrapping_add(i * 7) % messages.len()];
            let u = code.dither_sample(&mut rng).unwrap();
            let x = code.encode(msg, &u).unwrap();
            let again = code.coarse().mod_lattice(&x).unwrap();
            for (a, b) in x.iter().zip(&again) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            let obs = code.mmse_receive(&x, &ch, &u).unwrap();
            let got = code.decode(&obs, &ch, DecoderKind::Msd, &DecoderOptions::default()).unwrap();
            prop_assert_eq!(&got, msg);
        }
    }

    #[test]
    fn distinct_messages_have_distinct_leaders(code in small_code()) {
        let messages = code.messages().unwrap();
        let mut leaders: Vec<Vec<i64>> = messages.iter().map(|m| code.coset_leader(m).unwrap().0).collect();
        leaders.sort();
        leaders.dedup();
        prop_assert_eq!(leaders.len(), messages.len());
        prop_assert_eq!(messages.len(), code.quotient_size().unwrap());
    }
}

#[test]
fn channel_quantities() {
    let ch = ChannelState::new(4.0, 1.0).unwrap();
    assert!((ch.alpha - 0.8).abs() < 1e-12);
    assert!((ch.sigma_eq2 - 0.8).abs() < 1e-12);
    let ch = ChannelState::new(1.0, 1.0).unwrap();
    assert!((ch.alpha - 0.5).abs() < 1e-12);
    assert!((ch.sigma_eq2 - 0.5).abs() < 1e-12);
}

#[test]
fn simulation_is_reproducible() {
    let code = config(vec![3, 5], 2, vec![1, 1], vec![2, 2], 1).build().unwrap();
    let ch = ChannelState::from_snr_db(0.0478, 12.0).unwrap();
    let opts = DecoderOptions::default();
    let a = code.simulate(&ch, DecoderKind::Msd, &opts, 500, 9, 0).unwrap();
    let b = code.simulate(&ch, DecoderKind::Msd, &opts, 500, 9, 0).unwrap();
    assert_eq!(a, b);
    let c = code.simulate(&ch, DecoderKind::Msd, &opts, 500, 9, 1).unwrap();
    assert_ne!(a, c);
    let (wer, eq, se) = summarize(&a);
    assert!(wer > 0.0 && wer < 1.0);
    assert!((eq - ch.sigma_eq2).abs() < 4.0 * se);
}
