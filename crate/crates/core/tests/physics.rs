use cohabitat::comfort::{comfort_table, discomfort, pmv, ComfortEnv, PmvInput};
use cohabitat::thermo::{apply_th_action, newton_step, rh_from_temp, temp_from_rh, tick, AmbientState, ThAction, ThermalGrid};
use proptest::prelude::*;

fn input(ta: f64, rh: f64, met: f64, clo: f64) -> PmvInput {
    PmvInput { air_temp: ta, radiant_temp: ta, air_speed: 0.0, rel_humidity: rh, met, clo }
}

fn action() -> impl Strategy<Value = ThAction> {
    prop::sample::select(ThAction::ALL.to_vec())
}

proptest! {
    #[test]
    fn newton_converges_monotonically(t0 in 10.0f64..40.0, target in 15.0f64..30.0, k in 0.01f64..3.0) {
        let mut t = t0;
        let mut gap = (t - target).abs();
        for _ in 0..50 {
            let next = newton_step(t, target, k);
            let g = (next - target).abs();
            prop_assert!(g <= gap + 1e-12);
            // Never overshoots the target.
            prop_assert!((next - target) * (t0 - target) >= -1e-12);
            gap = g;
            t = next;
        }
    }

    #[test]
    fn magnus_round_trip(t in 5.0f64..40.0, dew in -5.0f64..5.0) {
        let rh = rh_from_temp(t, dew).unwrap();
        prop_assert!((temp_from_rh(rh, dew).unwrap() - t).abs() <= 1e-9);
    }

    #[test]
    fn magnus_rh_falls_with_temperature(t in 5.0f64..39.0, dt in 0.01f64..1.0) {
        prop_assert!(rh_from_temp(t + dt, 4.0).unwrap() < rh_from_temp(t, 4.0).unwrap());
    }

    #[test]
    fn setpoints_stay_on_grid(ti in 0usize..16, ri in 0usize..9, actions in prop::collection::vec(action(), 0..40)) {
        let g = ThermalGrid::default();
        let mut s = AmbientState::at_grid_point(&g, ti, ri);
        for a in actions {
            s = tick(apply_th_action(s, a, &g), &g);
            prop_assert_eq!(g.snap_temp(s.temp_setpoint), s.temp_setpoint);
            prop_assert_eq!(g.snap_rh(s.rh_setpoint), s.rh_setpoint);
            prop_assert!(s.temp >= g.t_min - 1e-9 && s.temp <= g.t_max + 1e-9);
            prop_assert!(s.rh >= g.rh_min - 1e-9 && s.rh <= g.rh_max + 1e-9);
            prop_assert!(s.t_idx < g.n_temp() && s.rh_idx < g.n_rh());
        }
    }

    #[test]
    fn pmv_bounded(ta in 10.0f64..40.0, rh in 1.0f64..100.0, met in 0.8f64..3.0, clo in 0.0f64..2.0, v in 0.0f64..1.0) {
        let p = pmv(&PmvInput { air_temp: ta, radiant_temp: ta, air_speed: v, rel_humidity: rh, met, clo }).unwrap();
        prop_assert!((-3.0..=3.0).contains(&p));
    }

    #[test]
    fn pmv_monotone_in_temperature_and_humidity(
        ta in 15.0f64..29.5, rh in 30.0f64..69.0, met in 1.0f64..1.9, clo in prop::sample::select(vec![0.36, 0.5, 0.67])
    ) {
        let base = pmv(&input(ta, rh, met, clo)).unwrap();
        prop_assert!(pmv(&input(ta + 0.5, rh, met, clo)).unwrap() >= base);
        prop_assert!(pmv(&input(ta, rh + 1.0, met, clo)).unwrap() >= base);
    }

    #[test]
    fn discomfort_is_even(x in -3.0f64..3.0, band in 0.01f64..1.0) {
        prop_assert_eq!(discomfort(x, band), discomfort(-x, band));
        prop_assert!(discomfort(x, band) >= 0.0);
    }

    #[test]
    fn wider_band_never_shrinks_table(met in 1.0f64..1.9, narrow in 0.05f64..0.5, extra in 0.0f64..0.5) {
        let env = ComfortEnv::default();
        let g = ThermalGrid::default();
        let a = comfort_table(&env.profile([met; 3], narrow), met, 0.5, &g).unwrap();
        let b = comfort_table(&env.profile([met; 3], narrow + extra), met, 0.5, &g).unwrap();
        prop_assert!(a.iter().all(|c| b.iter().any(|d| d.temp == c.temp && d.rh == c.rh)));
    }
}

#[test]
fn edge_moves_are_no_ops() {
    let g = ThermalGrid::default();
    let top = AmbientState::at_grid_point(&g, g.n_temp() - 1, g.n_rh() - 1);
    assert_eq!(apply_th_action(top, ThAction::TempUp, &g), top);
    assert_eq!(apply_th_action(top, ThAction::HumUp, &g), top);
    let bottom = AmbientState::at_grid_point(&g, 0, 0);
    assert_eq!(apply_th_action(bottom, ThAction::TempDown, &g), bottom);
    assert_eq!(apply_th_action(bottom, ThAction::HumDown, &g), bottom);
}

#[test]
fn temp_up_shifts_humidity_by_magnus_difference() {
    let g = ThermalGrid::default();
    let s = AmbientState::at_grid_point(&g, 5, 4);
    assert_eq!((s.temp_setpoint, s.rh_setpoint), (20.0, 50.0));
    let n = apply_th_action(s, ThAction::TempUp, &g);
    let delta = rh_from_temp(21.0, 4.0).unwrap() - rh_from_temp(20.0, 4.0).unwrap();
    assert_eq!(n.temp_setpoint, 21.0);
    assert_eq!(n.rh_setpoint, g.snap_rh(50.0 + delta));
}
