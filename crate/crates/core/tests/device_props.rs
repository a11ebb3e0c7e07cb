use memdie::device::{self, DeviceParams, MemristorState, PulseKind, PulseSpec};
use memdie::SimRng;
use proptest::prelude::*;

fn formed(params: &DeviceParams, seed: u64) -> (MemristorState, SimRng) {
    let mut rng = SimRng::new(seed);
    let mut d = device::sample_fresh_device(params, &mut rng).unwrap();
    device::apply_pulse(&mut d, params, &PulseSpec::form(3.3, 1e-6), &mut rng).unwrap();
    (d, rng)
}

fn arb_pulse() -> impl Strategy<Value = PulseSpec> {
    prop_oneof![
        (1.8f64..3.0, 1e-8f64..1e-5).prop_map(|(v, t)| PulseSpec::set(v, t)),
        (0.9f64..3.0, 1e-8f64..1e-5).prop_map(|(v, t)| PulseSpec::reset(v, t)),
        (-0.5f64..0.5, 1e-8f64..1e-5).prop_map(|(v, t)| PulseSpec::read(v, t)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn identical_seed_and_sequence_give_identical_trajectory(
        seed in any::<u64>(),
        pulses in proptest::collection::vec(arb_pulse(), 1..40),
    ) {
        let params = DeviceParams::default();
        let run = || {
            let (mut d, mut rng) = formed(&params, seed);
            let mut trajectory = Vec::new();
            for p in &pulses {
                device::apply_pulse(&mut d, &params, p, &mut rng).unwrap();
                trajectory.push(d.clone());
            }
            trajectory
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn reset_train_is_monotone_noise_off(
        seed in any::<u64>(),
        volts in 0.9f64..2.5,
        width in 1e-8f64..1e-5,
        n in 1usize..300,
    ) {
        let params = DeviceParams::noiseless();
        let (mut d, mut rng) = formed(&params, seed);
        let mut g = device::conductance(&d, &params);
        for _ in 0..n {
            let w = d.w;
            device::apply_pulse(&mut d, &params, &PulseSpec::reset(volts, width), &mut rng).unwrap();
            prop_assert!(d.w <= w);
            let g2 = device::conductance(&d, &params);
            prop_assert!(g2 <= g);
            g = g2;
        }
    }

    #[test]
    fn set_beats_strong_reset_for_every_d2d_factor(d2d in 0.05f64..20.0) {
        let params = DeviceParams::noiseless();
        let mut rng = SimRng::new(1);
        let mut d = MemristorState { d2d_factor: d2d, ..MemristorState::formed_ideal(0.3) };
        device::apply_pulse(&mut d, &params, &PulseSpec::set(2.0, 1e-6), &mut rng).unwrap();
        let g_set = device::conductance(&d, &params);
        device::apply_pulse(&mut d, &params, &PulseSpec::reset(2.5, 1e-6), &mut rng).unwrap();
        let g_reset = device::conductance(&d, &params);
        prop_assert!(g_set > g_reset, "{} vs {}", g_set, g_reset);
    }

    #[test]
    fn half_degradation_crossing_within_one_decade_of_budget(limit in 1_000u64..1_000_000_000) {
        // First cycle count with degradation > 0.5, by bisection on the
        // monotone curve.
        let (mut lo, mut hi) = (0u64, 20 * limit);
        prop_assert!(device::degradation_curve(hi, limit) > 0.5);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if device::degradation_curve(mid, limit) > 0.5 { hi = mid } else { lo = mid }
        }
        prop_assert!(hi >= limit && hi <= 10 * limit, "crossing at {} for limit {}", hi, limit);
    }

    #[test]
    fn sub_threshold_pulses_leave_state(
        seed in any::<u64>(),
        v in -0.899f64..0.899,
        width in 1e-9f64..1e-3,
        kind in prop_oneof![Just(PulseKind::Set), Just(PulseKind::Reset), Just(PulseKind::Form)],
    ) {
        let params = DeviceParams::default();
        let (mut d, mut rng) = formed(&params, seed);
        if kind == PulseKind::Form {
            // A fresh device for forming attempts.
            d = device::sample_fresh_device(&params, &mut rng).unwrap();
        }
        let before = (d.w, d.formed, d.cycle_count);
        let pulse = PulseSpec { kind, amplitude: v, width };
        device::apply_pulse(&mut d, &params, &pulse, &mut rng).unwrap();
        prop_assert_eq!(before, (d.w, d.formed, d.cycle_count));
    }
}

#[test]
fn default_endurance_budgets_stay_in_range() {
    let params = DeviceParams::default();
    let mut rng = SimRng::new(8);
    for _ in 0..10_000 {
        let d = device::sample_fresh_device(&params, &mut rng).unwrap();
        assert!((1_000..=1_000_000_000).contains(&d.endurance_limit), "{}", d.endurance_limit);
    }
}
