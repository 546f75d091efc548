//! Zone specific-humidity balance advected by the airflow solution.
//!
//! Humidity is a passive tracer here: it rides on the converged air flows
//! and zone moisture gains but does not feed back into densities, and walls
//! and furniture do not buffer any vapour.

use nalgebra::{DMatrix, DVector};

use crate::airflow::AirflowSolution;
use crate::constants::{AIR_DENSITY, ATM_PRESSURE};
use crate::model::BuildingModel;

/// Upper clamp on zone specific humidity, kg water / kg dry air.
pub const MAX_SPECIFIC_HUMIDITY: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct MoistureState {
    /// kg water / kg dry air, per zone.
    pub w: Vec<f64>,
}

impl MoistureState {
    pub fn uniform(zones: usize, w: f64) -> Self {
        MoistureState {
            w: vec![w; zones],
        }
    }
}

/// Saturation vapour pressure over liquid water, Pa (Magnus fit).
pub fn saturation_pressure_pa(dry_bulb_c: f64) -> f64 {
    610.94 * (17.625 * dry_bulb_c / (dry_bulb_c + 243.04)).exp()
}

/// Specific humidity of outdoor air from dry bulb and relative humidity.
pub fn outdoor_specific_humidity(dry_bulb_c: f64, rh_pct: f64) -> f64 {
    let vapour = rh_pct / 100.0 * saturation_pressure_pa(dry_bulb_c);
    0.622 * vapour / (ATM_PRESSURE - vapour)
}

/// Relative humidity (%) a zone at the given temperature and specific
/// humidity reports; reverse of [`outdoor_specific_humidity`].
pub fn relative_humidity_pct(dry_bulb_c: f64, w: f64) -> f64 {
    let vapour = w * ATM_PRESSURE / (0.622 + w);
    (vapour / saturation_pressure_pa(dry_bulb_c) * 100.0).clamp(0.0, 100.0)
}

/// Advances every zone's specific humidity by one implicit step.
///
/// Balance per zone: ρV·dw/dt = Σ ṁ_in·(w_source − w) + G, with mass
/// outflow equal to total inflow per the converged airflow. All zones step
/// together so interzone advection is implicit too. Out-of-range results
/// are clamped with a logged warning.
pub fn step_moisture(
    state: &MoistureState,
    model: &BuildingModel,
    airflow: &AirflowSolution,
    gains_kg_s: &[f64],
    outdoor_w: f64,
    dt_s: f64,
) -> MoistureState {
    let n = model.zones.len();
    let exchanges = airflow.zone_exchanges(model);
    let mut matrix = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for i in 0..n {
        let storage = AIR_DENSITY * model.zones[i].volume / dt_s;
        let exchange = &exchanges[i];
        matrix[(i, i)] = storage + exchange.total_in_kg_s();
        for &(j, mass) in &exchange.from_zones {
            matrix[(i, j)] -= mass;
        }
        rhs[i] = storage * state.w[i] + exchange.from_outdoor_kg_s * outdoor_w + gains_kg_s[i];
    }
    let solution = matrix
        .lu()
        .solve(&rhs)
        .expect("moisture system is strictly diagonally dominant");
    let w = solution
        .iter()
        .map(|&w| {
            if !(0.0..=MAX_SPECIFIC_HUMIDITY).contains(&w) {
                log::warn!("zone specific humidity {w:.4} kg/kg clamped to [0, {MAX_SPECIFIC_HUMIDITY}]");
                w.clamp(0.0, MAX_SPECIFIC_HUMIDITY)
            } else {
                w
            }
        })
        .collect();
    MoistureState { w }
}

/// Worst per-zone water balance residual of a step, kg/s; the conservation
/// check mirrors the implicit balance with the post-step humidities.
pub fn water_balance_residual(
    model: &BuildingModel,
    airflow: &AirflowSolution,
    before: &MoistureState,
    after: &MoistureState,
    gains_kg_s: &[f64],
    outdoor_w: f64,
    dt_s: f64,
) -> f64 {
    let exchanges = airflow.zone_exchanges(model);
    let mut worst: f64 = 0.0;
    for i in 0..model.zones.len() {
        let storage = AIR_DENSITY * model.zones[i].volume / dt_s * (after.w[i] - before.w[i]);
        let exchange = &exchanges[i];
        let mut advected = exchange.from_outdoor_kg_s * (outdoor_w - after.w[i]);
        for &(j, mass) in &exchange.from_zones {
            advected += mass * (after.w[j] - after.w[i]);
        }
        worst = worst.max((storage - advected - gains_kg_s[i]).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airflow::AirflowSolution;
    use crate::fixtures;
    use approx::assert_relative_eq;

    #[test]
    fn psychrometric_reference_points() {
        assert_eq!(outdoor_specific_humidity(30.0, 0.0), 0.0);
        let humid = outdoor_specific_humidity(30.0, 100.0);
        assert!((humid - 0.0273).abs() / 0.0273 < 0.02, "w = {humid}");
        let mild = outdoor_specific_humidity(25.0, 50.0);
        assert!((mild - 0.0099).abs() / 0.0099 < 0.02, "w = {mild}");
    }

    #[test]
    fn relative_humidity_round_trip() {
        for &(t, rh) in &[(30.0, 80.0), (22.0, 55.0), (27.0, 95.0)] {
            let w = outdoor_specific_humidity(t, rh);
            assert_relative_eq!(relative_humidity_pct(t, w), rh, epsilon = 1e-9);
        }
    }

    #[test]
    fn isolated_zone_keeps_humidity() {
        let model = fixtures::single_wall_box();
        let airflow = AirflowSolution::still(&model, &[25.0]);
        let state = MoistureState::uniform(1, 0.011);
        let next = step_moisture(&state, &model, &airflow, &[0.0], 0.015, 3600.0);
        assert_relative_eq!(next.w[0], 0.011, epsilon = 1e-15);
    }

    #[test]
    fn mixing_approaches_inflow_humidity_monotonically() {
        let model = fixtures::single_wall_box();
        let mut airflow = AirflowSolution::still(&model, &[25.0]);
        airflow.imposed_outdoor_kg_s[0] = 0.05;
        let mut state = MoistureState::uniform(1, 0.008);
        let mut previous = state.w[0];
        for _ in 0..200 {
            state = step_moisture(&state, &model, &airflow, &[0.0], 0.012, 3600.0);
            assert!(state.w[0] >= previous - 1e-15 && state.w[0] <= 0.012 + 1e-12);
            previous = state.w[0];
        }
        assert_relative_eq!(state.w[0], 0.012, epsilon = 1e-9);
    }

    #[test]
    fn steady_state_with_gain() {
        let model = fixtures::single_wall_box();
        let mut airflow = AirflowSolution::still(&model, &[25.0]);
        airflow.imposed_outdoor_kg_s[0] = 0.04;
        let gain = 1.5e-5;
        let mut state = MoistureState::uniform(1, 0.010);
        for _ in 0..400 {
            state = step_moisture(&state, &model, &airflow, &[gain], 0.011, 3600.0);
        }
        let expected = 0.011 + gain / 0.04;
        assert!((state.w[0] - expected).abs() < 1e-6, "w = {}", state.w[0]);
    }

    #[test]
    fn step_conserves_water() {
        let model = fixtures::individual_light();
        let zones = model.zones.len();
        let mut airflow = AirflowSolution::still(&model, &vec![26.0; zones]);
        for inflow in &mut airflow.imposed_outdoor_kg_s {
            *inflow = 0.02;
        }
        let gains = vec![5.0e-6; zones];
        let before = MoistureState::uniform(zones, 0.009);
        let after = step_moisture(&before, &model, &airflow, &gains, 0.014, 3600.0);
        let residual =
            water_balance_residual(&model, &airflow, &before, &after, &gains, 0.014, 3600.0);
        assert!(residual < 1e-9, "residual {residual:.3e}");
    }

    #[test]
    fn humidity_stays_in_source_hull_without_gains() {
        let model = fixtures::individual_light();
        let zones = model.zones.len();
        let mut airflow = AirflowSolution::still(&model, &vec![26.0; zones]);
        for inflow in &mut airflow.imposed_outdoor_kg_s {
            *inflow = 0.03;
        }
        let gains = vec![0.0; zones];
        let mut state = MoistureState {
            w: (0..zones).map(|i| 0.006 + 0.002 * i as f64).collect(),
        };
        let (lo, hi) = (0.006_f64, 0.006 + 0.002 * (zones - 1) as f64);
        let outdoor = 0.010;
        for _ in 0..50 {
            state = step_moisture(&state, &model, &airflow, &gains, outdoor, 3600.0);
            for &w in &state.w {
                assert!(w >= lo.min(outdoor) - 1e-12 && w <= hi.max(outdoor) + 1e-12);
            }
        }
    }
}
