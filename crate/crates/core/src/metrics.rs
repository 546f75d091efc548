//! Comfort and energy criteria computed from hourly simulation series.

use serde::Serialize;

/// Hours of day forming the daytime comfort window, 7h00-19h00.
pub const DAY_HOURS: [usize; 12] = [7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18];
/// Hours of day forming the night comfort window, 20h00-06h00.
pub const NIGHT_HOURS: [usize; 10] = [20, 21, 22, 23, 0, 1, 2, 3, 4, 5];

/// Default length of the hot wet season, days (November through April).
pub const DEFAULT_SEASON_DAYS: u32 = 181;

/// Operative comfort temperature blending air and radiant exchanges.
pub fn resultant_temperature(t_air_c: f64, t_radiant_c: f64) -> f64 {
    0.55 * t_air_c + 0.45 * t_radiant_c
}

/// Area-weighted mean of interior surface temperatures; `None` for an empty
/// enclosure.
pub fn mean_radiant(surfaces: &[(f64, f64)]) -> Option<f64> {
    let total_area: f64 = surfaces.iter().map(|(a, _)| a).sum();
    if surfaces.is_empty() || total_area <= 0.0 {
        return None;
    }
    Some(surfaces.iter().map(|(a, t)| a * t).sum::<f64>() / total_area)
}

/// Daily comfort and cooling-energy criteria of one zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriteriaSummary {
    /// Mean resultant temperature over the day window, °C.
    pub day_resultant_c: f64,
    /// Mean resultant temperature over the night window, °C.
    pub night_resultant_c: f64,
    /// Peak hourly resultant temperature, °C.
    pub max_resultant_c: f64,
    /// Peak sensible cooling power, W.
    pub max_power_w: f64,
    /// Peak cooling power per floor area, W/m².
    pub max_power_w_m2: f64,
    /// Cooling energy over the day, kWh (thermal).
    pub daily_energy_kwh: f64,
    /// Daily energy extrapolated over the season, kWh (thermal).
    pub seasonal_energy_kwh: f64,
}

/// Condenses 24 hourly resultant temperatures and cooling powers into the
/// per-zone criteria.
///
/// The day window covers hours 7-18, the night window 20-23 and 0-5; daily
/// energy is the trapezoidal integral of power over the periodic day and
/// the seasonal figure scales it by the season length.
pub fn summarize(
    resultant_c: &[f64],
    power_w: &[f64],
    floor_area_m2: f64,
    season_days: u32,
) -> CriteriaSummary {
    assert_eq!(resultant_c.len(), 24, "one value per hour of day expected");
    assert_eq!(power_w.len(), 24, "one value per hour of day expected");
    let mean_over = |hours: &[usize]| {
        hours.iter().map(|&h| resultant_c[h]).sum::<f64>() / hours.len() as f64
    };
    let max_resultant = resultant_c.iter().copied().fold(f64::MIN, f64::max);
    let max_power = power_w.iter().copied().fold(0.0_f64, f64::max);
    let daily_wh: f64 = (0..24)
        .map(|h| (power_w[h] + power_w[(h + 1) % 24]) / 2.0)
        .sum();
    let daily_energy_kwh = daily_wh / 1000.0;
    CriteriaSummary {
        day_resultant_c: mean_over(&DAY_HOURS),
        night_resultant_c: mean_over(&NIGHT_HOURS),
        max_resultant_c: max_resultant,
        max_power_w: max_power,
        max_power_w_m2: if floor_area_m2 > 0.0 {
            max_power / floor_area_m2
        } else {
            0.0
        },
        daily_energy_kwh,
        seasonal_energy_kwh: daily_energy_kwh * f64::from(season_days),
    }
}
