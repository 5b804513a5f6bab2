//! Property tests for the numeric invariants.

use proptest::prelude::*;

use femtoq::agent::{power_level, reward_rf1, PowerLevelBands};
use femtoq::metrics::jain_index;
use femtoq::qlearn::{argmax_lowest, q_update, LearningParams, QTable};
use femtoq::radio::{
    dbm_to_linear_mw, linear_mw_to_dbm, macro_capacity, ChannelMatrix, PowerAllocation,
};

proptest! {
    /// With rewards confined to [r_min, r_max], every table entry stays
    /// inside [min(0, r_min), max(0, r_max)] / (1 - gamma) no matter the
    /// update sequence.
    #[test]
    fn q_values_stay_bounded(
        steps in proptest::collection::vec(
            (0usize..4, 0usize..3, -2.0f64..3.0, 0usize..4), 1..400),
        alpha in 0.05f64..1.0,
        gamma in 0.0f64..0.95,
    ) {
        let params = LearningParams { alpha, gamma, epsilon: 0.0, epsilon_active_fraction: 0.8 };
        let (r_min, r_max) = (-2.0f64, 3.0f64);
        let lo = r_min.min(0.0) / (1.0 - gamma);
        let hi = r_max.max(0.0) / (1.0 - gamma);
        let mut table = QTable::zeros(4, 3);
        for (s, a, r, s2) in steps {
            q_update(&mut table, s, a, r, s2, &params).unwrap();
            for v in table.values() {
                prop_assert!((lo - 1e-9..=hi + 1e-9).contains(v), "value {v} outside [{lo}, {hi}]");
            }
        }
    }

    /// Adding a constant to a row never moves its argmax.
    #[test]
    fn argmax_shift_invariance(
        row in proptest::collection::vec(-1e6f64..1e6, 1..32),
        shift in -1e6f64..1e6,
    ) {
        let base = argmax_lowest(&row);
        let shifted: Vec<f64> = row.iter().map(|v| v + shift).collect();
        prop_assert_eq!(argmax_lowest(&shifted), base);
    }

    /// Jain's index stays in [1/n, 1] for nonnegative inputs and is scale
    /// invariant.
    #[test]
    fn jain_bounds_and_scale(
        values in proptest::collection::vec(0.0f64..1e6, 1..24),
        scale in 1e-3f64..1e3,
    ) {
        let f = jain_index(&values).unwrap();
        prop_assert!(f >= 1.0 / values.len() as f64 - 1e-12);
        prop_assert!(f <= 1.0 + 1e-12);
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        prop_assert!((jain_index(&scaled).unwrap() - f).abs() < 1e-9);
    }

    /// The three power-level predicates partition [0, inf): exactly one
    /// holds for any total, and the bucketing matches it.
    #[test]
    fn power_level_partition(total in 0.0f64..1e7) {
        let bands = PowerLevelBands::default();
        let low = dbm_to_linear_mw(bands.low_dbm);
        let high = dbm_to_linear_mw(bands.high_dbm);
        let memberships = [total < low, (low..=high).contains(&total), total > high];
        prop_assert_eq!(memberships.iter().filter(|m| **m).count(), 1);
        prop_assert!(memberships[power_level(total, &bands) as usize]);
    }

    /// Smaller |C_o - target| means strictly larger RF1 reward.
    #[test]
    fn rf1_orders_by_deviation(a in 0.0f64..12.0, b in 0.0f64..12.0) {
        let target = 6.0;
        let (da, db) = ((a - target).abs(), (b - target).abs());
        prop_assume!((da - db).abs() > 1e-9);
        let (ra, rb) = (reward_rf1(a, true, target), reward_rf1(b, true, target));
        if da < db {
            prop_assert!(ra > rb);
        } else {
            prop_assert!(ra < rb);
        }
    }

    /// dBm -> mW -> dBm round trips tightly, and capacity computed from
    /// converted powers matches the linear mirror.
    #[test]
    fn unit_consistency(dbm in -40.0f64..45.0) {
        let mw = dbm_to_linear_mw(dbm);
        prop_assert!((linear_mw_to_dbm(mw) - dbm).abs() < 1e-10);

        let ch = ChannelMatrix::from_gains(
            1, 1, 2.0, 1e-5, vec![1e-6], vec![1e-6], vec![1e-4],
        ).unwrap();
        let mut pa = PowerAllocation::new(1, 1, -20.0, 15.0, 43.0);
        pa.set_femto_dbm(0, 0, dbm);
        let from_mirror = macro_capacity(&ch, &pa, 1e-7, 0);
        // Recompute the interference from the dBm field by hand.
        let interference = 1e-6 * dbm_to_linear_mw(pa.femto_dbm(0, 0));
        let signal = 1e-5 * pa.macro_linear(0);
        let by_hand = (1.0 + signal / (interference + 1e-7)).log2();
        prop_assert!((from_mirror - by_hand).abs() / by_hand.max(1e-300) < 1e-12);
    }

    /// Capacity is monotone: increasing an interferer's power never raises
    /// the macro capacity.
    #[test]
    fn interference_monotonicity(p1 in -20.0f64..15.0, bump in 0.1f64..20.0) {
        let ch = ChannelMatrix::from_gains(
            1, 1, 2.0, 1e-5, vec![1e-6], vec![2e-6], vec![1e-4],
        ).unwrap();
        let mut pa = PowerAllocation::new(1, 1, p1, 15.0, 43.0);
        let before = macro_capacity(&ch, &pa, 1e-7, 0);
        pa.set_femto_dbm(0, 0, p1 + bump);
        let after = macro_capacity(&ch, &pa, 1e-7, 0);
        prop_assert!(after < before);
    }
}
