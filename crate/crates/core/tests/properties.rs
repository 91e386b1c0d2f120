mod common;

use hawkes_epi::analysis::{extinction_slope, scan_r0, ScanAxis, ScanParam, TimeSeries};
use hawkes_epi::model::{compute_r0, extinction_exponent, human_persistence, MarkMean};
use hawkes_epi::rng::stream_rng;
use hawkes_epi::simulator::{apply_jumps, diffusion, drift};
use hawkes_epi::{EventLog, HawkesChannel, MarkDistribution, ModelParams, State, StructuralBounds};
use proptest::prelude::*;

fn channel() -> impl Strategy<Value = HawkesChannel> {
    (1e-3..2.0f64, 0.0..0.95f64, 0.1..5.0f64, 0.2..3.0f64, 0.5..5.0f64).prop_map(|(l0, ratio, beta, mean, cap)| {
        HawkesChannel::new(l0, ratio * beta, beta, MarkDistribution::new(mean, cap).unwrap()).unwrap()
    })
}

fn event_times() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..50.0f64, 0..40).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    })
}

fn state() -> impl Strategy<Value = State> {
    (prop::array::uniform6(0.0..1e4f64), 1.0..1e4f64, 1.0..1e4f64)
        .prop_map(|(a, s_h, s_r)| State::new(s_h + a[0], a[1], a[2], a[3], s_r + a[4], a[5]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn simulated_logs_are_well_formed(ch in channel(), seed in any::<u64>()) {
        let log = ch.simulate(2, 100.0, &mut stream_rng(seed, 0, 2)).unwrap();
        prop_assert!(log.times().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(log.times().iter().all(|&t| t > 0.0 && t <= 100.0));
        let cap = ch.marks().cap();
        prop_assert!(log.marks().iter().all(|&m| m > 0.0 && m <= cap));
    }

    #[test]
    fn intensity_decays_between_events(ch in channel(), times in event_times(), s in 0.0..60.0f64, gap in 0.0..10.0f64) {
        let t = s + gap;
        let log = EventLog::new(2, times.clone(), vec![1.0; times.len()]).unwrap();
        prop_assume!(!times.iter().any(|&x| x >= s && x < t));
        let full_s = ch.intensity_at(&log, s).unwrap();
        let lt = ch.intensity_at(&log, t).unwrap() - ch.lambda0();
        let expected = (full_s - ch.lambda0()) * (-ch.beta() * gap).exp();
        // Relative to the intensity itself: subtracting λ0 cancels digits.
        prop_assert!((lt - expected).abs() <= 1e-12 * full_s);
    }

    #[test]
    fn recursive_intensity_matches_naive_sum(ch in channel(), times in event_times(), query in prop::collection::vec(0.0..60.0f64, 1..20)) {
        let mut query = query;
        query.sort_by(f64::total_cmp);
        let log = EventLog::new(1, times.clone(), vec![0.5; times.len()]).unwrap();
        let fast = ch.intensity_path(&log, &query).unwrap();
        for (t, v) in query.iter().zip(fast) {
            let naive = ch.lambda0()
                + ch.alpha() * times.iter().filter(|&&x| x < *t).map(|x| (-ch.beta() * (t - x)).exp()).sum::<f64>();
            prop_assert!((v - naive).abs() <= 1e-12 * naive.max(1.0));
        }
    }

    #[test]
    fn compensator_is_nondecreasing(ch in channel(), times in event_times(), a in 0.0..60.0f64, b in 0.0..60.0f64) {
        let log = EventLog::new(1, times.clone(), vec![1.0; times.len()]).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(ch.compensator(&log, lo).unwrap() <= ch.compensator(&log, hi).unwrap());
    }

    #[test]
    fn expected_intensity_approaches_stationary_mean(ch in channel(), s in 0.0..20.0f64, d in 0.0..20.0f64) {
        prop_assume!(ch.alpha() > 0.0);
        let a = ch.expected_intensity(s).unwrap();
        let b = ch.expected_intensity(s + d).unwrap();
        prop_assert!(b >= a - 1e-15 * a);
        prop_assert!(b <= ch.stationary_intensity() * (1.0 + 1e-12));
    }

    #[test]
    fn log_growth_is_between_zero_and_mean(mean in 0.05..5.0f64, caps in 0.05..30.0f64) {
        // Beyond ~35 means the truncated tail is below f64 resolution.
        let marks = MarkDistribution::new(mean, caps * mean).unwrap();
        let l2 = marks.mean_log_growth();
        prop_assert!(0.0 < l2 && l2 < marks.mean_truncated());
        prop_assert!(marks.mean_truncated() < marks.mean());
    }

    #[test]
    fn r0_monotone_in_transmission_and_removal(which in 0usize..10, scale in 1.0..10.0f64, jumps in any::<bool>(), truncated in any::<bool>()) {
        let mut base = ModelParams::baseline();
        if !jumps {
            base = base.without_jumps();
        }
        if truncated {
            base.mark_mean = MarkMean::Truncated;
        }
        let r0 = compute_r0(&base).unwrap();
        let mut up = base;
        // Indices 0..=4 should not decrease R0 when scaled up; 5..=9 should not increase it.
        let increasing = which < 5;
        match which {
            0 => up.eta1 *= scale,
            1 => up.eta2 *= scale,
            2 => up.eta3 *= scale,
            3 => up = ScanParam::Lambda0Joint.apply(&base, base.channel(2).lambda0() * scale + 1e-6).unwrap(),
            4 => {
                let marks = *base.channel(2).marks();
                let bigger = MarkDistribution::new(marks.mean() * scale, marks.cap() * scale).unwrap();
                up.channels[1] = base.channels[1].with_marks(bigger);
            }
            5 => up.p = (base.p * scale).min(1.0),
            6 => up.mu_h *= scale,
            7 => up.mu_r *= scale,
            8 => up.delta_h *= scale,
            _ => up.delta_r *= scale,
        }
        let r1 = compute_r0(&up).unwrap();
        if increasing {
            prop_assert!(r1 >= r0, "param {which}: {r0} -> {r1}");
        } else {
            prop_assert!(r1 <= r0, "param {which}: {r0} -> {r1}");
        }
    }

    #[test]
    fn exponent_shares_sign_with_r0_minus_one(eta3 in 0.0..1e-2f64, p in 0.0..1.0f64, lambda0 in 0.0..1e-3f64) {
        let params = ScanParam::Lambda0Joint
            .apply(&ModelParams { eta3, p, ..ModelParams::baseline() }, lambda0)
            .unwrap();
        let r0 = compute_r0(&params).unwrap();
        let ex = extinction_exponent(&params).unwrap();
        prop_assert_eq!(ex.signum() * (r0 - 1.0).signum() >= 0.0, true);
        prop_assert_eq!(ex == 0.0, r0 == 1.0);
    }

    #[test]
    fn threshold_functions_are_pure(eta2 in 0.0..1e-3f64, sigma3 in 0.0..1.0f64) {
        let mut params = ModelParams { eta2, ..ModelParams::baseline() };
        params.sigma[2] = sigma3;
        let b = StructuralBounds::default();
        let h1 = human_persistence(&params, &b).unwrap();
        let h2 = human_persistence(&params, &b).unwrap();
        prop_assert_eq!(h1.lambda_h.to_bits(), h2.lambda_h.to_bits());
        prop_assert_eq!(compute_r0(&params).unwrap().to_bits(), compute_r0(&params).unwrap().to_bits());
    }

    #[test]
    fn drift_matches_written_out_system(x in state()) {
        let params = ModelParams::baseline();
        let lib = drift(&x, &params).unwrap();
        let oracle = common::skeleton_rhs(&params, &x.to_array());
        for k in 0..6 {
            prop_assert!((lib[k] - oracle[k]).abs() <= 1e-12 * oracle[k].abs().max(1e-12));
        }
    }

    #[test]
    fn sigma2_noise_moves_susceptibles_and_infected_oppositely(x in state(), dw in -1.0..1.0f64) {
        let mut params = ModelParams::baseline();
        params.sigma = [0.0, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let mut w = [0.0; 8];
        w[1] = dw;
        let d = diffusion(&x, &params, &w).unwrap();
        prop_assert!((d[0] + d[1]).abs() <= 1e-12 * d[0].abs().max(1e-300));
        prop_assert!(d[2..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn jumps_touch_one_human_compartment(x in state(), channel in 1usize..=4, marks in prop::collection::vec(1e-6..3.0f64, 0..5)) {
        let y = apply_jumps(&x, channel, &marks).unwrap();
        let (a, b) = (x.to_array(), y.to_array());
        for k in 0..6 {
            if k == channel - 1 {
                let factor: f64 = marks.iter().map(|m| 1.0 + m).product();
                prop_assert!((b[k] - a[k] * factor).abs() <= 1e-12 * (a[k] * factor).max(1e-300));
            } else {
                prop_assert_eq!(a[k], b[k]);
            }
        }
        prop_assert_eq!(a[4], b[4]);
        prop_assert_eq!(a[5], b[5]);
    }

    #[test]
    fn time_average_is_linear(
        f in prop::collection::vec(-1e3..1e3f64, 21),
        g in prop::collection::vec(-1e3..1e3f64, 21),
        a in -10.0..10.0f64,
        b in -10.0..10.0f64,
        t0 in 0.0..9.0f64,
    ) {
        let grid: Vec<f64> = (0..21).map(|k| k as f64 * 0.5).collect();
        let combo: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let avg = |v: &[f64]| TimeSeries::new(grid.clone(), v.to_vec()).unwrap().time_average(t0).unwrap();
        let lhs = avg(&combo);
        let rhs = a * avg(&f) + b * avg(&g);
        let scale = 1e4 * (a.abs() + b.abs()).max(1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn slope_is_scale_invariant(v in prop::collection::vec(1e-3..1e3f64, 10..40), c in 1e-6..1e6f64) {
        let grid: Vec<f64> = (0..v.len()).map(|k| k as f64).collect();
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        let s1 = extinction_slope(&TimeSeries::new(grid.clone(), v).unwrap(), 0.5, 0.0).unwrap();
        let s2 = extinction_slope(&TimeSeries::new(grid, scaled).unwrap(), 0.5, 0.0).unwrap();
        prop_assert!((s1 - s2).abs() <= 1e-10 * s1.abs().max(1e-3));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scan_cells_equal_direct_r0(px in 0usize..9, py in 0usize..9, n in 2usize..6) {
        prop_assume!(px != py);
        let params = ModelParams::baseline();
        let range = |p: ScanParam| match p {
            ScanParam::P => (0.0, 1.0),
            ScanParam::Alpha2 | ScanParam::Alpha3 => (0.0, 0.9),
            ScanParam::Lambda0Joint => (0.0, 1e-3),
            ScanParam::Eta1PlusEta2 => (0.0, 1e-5),
            _ => (1e-4, 1e-2),
        };
        let (x, y) = (ScanParam::ALL[px], ScanParam::ALL[py]);
        let ax = ScanAxis::linspace(x, range(x).0, range(x).1, n).unwrap();
        let ay = ScanAxis::linspace(y, range(y).0, range(y).1, n + 1).unwrap();
        let grid = scan_r0(&params, &ax, &ay).unwrap();
        for (ix, &xv) in ax.values.iter().enumerate() {
            for (iy, &yv) in ay.values.iter().enumerate() {
                let direct = compute_r0(&y.apply(&x.apply(&params, xv).unwrap(), yv).unwrap()).unwrap();
                prop_assert_eq!(grid.at(ix, iy).to_bits(), direct.to_bits());
            }
        }
        for &(cx, cy) in &grid.contour {
            let on_x = ax.values.iter().position(|&v| v == cx);
            let on_y = ay.values.iter().position(|&v| v == cy);
            prop_assert!(on_x.is_some() || on_y.is_some());
        }
    }
}
