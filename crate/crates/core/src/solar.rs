//! Sun position, irradiance on tilted surfaces and overhang shading.
//!
//! Positions come from the Spencer Fourier fit of the solar declination and
//! the standard hour-angle geometry; no atmospheric refraction. Beam and
//! diffuse irradiance are projected on arbitrarily tilted surfaces with an
//! isotropic sky and a uniform ground reflectance.

use serde::Serialize;

/// Sun direction in horizon coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SunPosition {
    /// Degrees above the horizon, negative at night.
    pub altitude_deg: f64,
    /// Degrees clockwise from North.
    pub azimuth_deg: f64,
}

/// Solar declination in degrees for a day of year (1-365).
pub fn declination_deg(day_of_year: u32) -> f64 {
    let g = 2.0 * std::f64::consts::PI * f64::from(day_of_year - 1) / 365.0;
    let d = 0.006918 - 0.399912 * g.cos() + 0.070257 * g.sin() - 0.006758 * (2.0 * g).cos()
        + 0.000907 * (2.0 * g).sin()
        - 0.002697 * (3.0 * g).cos()
        + 0.00148 * (3.0 * g).sin();
    d.to_degrees()
}

/// Sun position for a solar hour (fractional, 12.0 = solar noon).
pub fn solar_position(day_of_year: u32, solar_hour: f64, latitude_deg: f64) -> SunPosition {
    let lat = latitude_deg.to_radians();
    let decl = declination_deg(day_of_year).to_radians();
    let hour_angle = (15.0 * (solar_hour - 12.0)).to_radians();

    let sin_alt = lat.sin() * decl.sin() + lat.cos() * decl.cos() * hour_angle.cos();
    let altitude = sin_alt.clamp(-1.0, 1.0).asin();

    let cos_alt = altitude.cos();
    let azimuth = if cos_alt.abs() < 1e-12 {
        0.0
    } else {
        let sin_az = -decl.cos() * hour_angle.sin() / cos_alt;
        let cos_az = (decl.sin() - sin_alt * lat.sin()) / (cos_alt * lat.cos());
        sin_az
            .atan2(cos_az.clamp(-1.0, 1.0))
            .to_degrees()
            .rem_euclid(360.0)
    };

    SunPosition {
        altitude_deg: altitude.to_degrees(),
        azimuth_deg: azimuth,
    }
}

/// Irradiance components falling on a tilted surface, W/m².
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct IncidentIrradiance {
    pub direct_wm2: f64,
    pub diffuse_wm2: f64,
    pub ground_wm2: f64,
}

impl IncidentIrradiance {
    pub fn total(&self) -> f64 {
        self.direct_wm2 + self.diffuse_wm2 + self.ground_wm2
    }
}

/// Cosine of the beam incidence angle on a tilted surface, unclamped.
pub fn incidence_cosine(sun: SunPosition, surface_azimuth_deg: f64, tilt_deg: f64) -> f64 {
    let alt = sun.altitude_deg.to_radians();
    let tilt = tilt_deg.to_radians();
    let az_diff = (sun.azimuth_deg - surface_azimuth_deg).to_radians();
    alt.sin() * tilt.cos() + alt.cos() * tilt.sin() * az_diff.cos()
}

/// Splits beam-normal and horizontal-diffuse irradiance onto a tilted plane.
///
/// Direct is the beam projected on the surface normal (zero when the sun is
/// below the horizon or behind the surface); diffuse uses the isotropic sky
/// view factor (1+cos β)/2; the ground contribution reflects global
/// horizontal irradiance with the site albedo and the complementary view
/// factor.
pub fn incident_irradiance(
    sun: SunPosition,
    dni_wm2: f64,
    dhi_wm2: f64,
    surface_azimuth_deg: f64,
    tilt_deg: f64,
    ground_albedo: f64,
) -> IncidentIrradiance {
    let tilt = tilt_deg.to_radians();
    let cos_theta = incidence_cosine(sun, surface_azimuth_deg, tilt_deg);
    let direct = if sun.altitude_deg > 0.0 {
        dni_wm2 * cos_theta.max(0.0)
    } else {
        0.0
    };
    let diffuse = dhi_wm2 * (1.0 + tilt.cos()) / 2.0;
    let global_horizontal = dhi_wm2 + dni_wm2 * sun.altitude_deg.to_radians().sin().max(0.0);
    let ground = global_horizontal * ground_albedo * (1.0 - tilt.cos()) / 2.0;
    IncidentIrradiance {
        direct_wm2: direct,
        diffuse_wm2: diffuse,
        ground_wm2: ground,
    }
}

/// Fraction of a vertical element's height shaded by a horizontal overhang.
///
/// The shadow cast on the facade plane has depth d·tan(profile angle); the
/// first `gap_a` metres below the overhang are above the protected element,
/// so only the remainder shades it. Returns 0 when the sun is behind the
/// facade or below the horizon, 1 when the shadow covers the whole element.
pub fn overhang_shading_fraction(
    sun: SunPosition,
    element_azimuth_deg: f64,
    depth_d: f64,
    height_h: f64,
    gap_a: f64,
) -> f64 {
    if sun.altitude_deg <= 0.0 || depth_d <= 0.0 {
        return 0.0;
    }
    let gamma = angle_difference_deg(sun.azimuth_deg, element_azimuth_deg);
    if gamma.abs() >= 90.0 {
        return 0.0;
    }
    let profile_tan = sun.altitude_deg.to_radians().tan() / gamma.to_radians().cos();
    let shadow = depth_d * profile_tan;
    ((shadow - gap_a).clamp(0.0, height_h)) / height_h
}

/// Signed shortest angular difference a-b in degrees, in (-180, 180].
pub fn angle_difference_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cooper_declination_deg(day: u32) -> f64 {
        23.45 * (360.0 * (284.0 + f64::from(day)) / 365.0).to_radians().sin()
    }

    #[test]
    fn equinox_noon_tropical_site() {
        let sun = solar_position(80, 12.0, -21.0);
        assert_relative_eq!(sun.altitude_deg, 69.0659, epsilon = 1e-3);
        assert_relative_eq!(sun.azimuth_deg, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn december_noon_sun_near_zenith_south_of_site() {
        let sun = solar_position(355, 12.0, -21.0);
        assert_relative_eq!(sun.altitude_deg, 87.5801, epsilon = 1e-3);
        assert_relative_eq!(sun.azimuth_deg, 180.0, epsilon = 1e-6);
    }

    #[test]
    fn declination_stays_close_to_cooper_fit() {
        // The two published fits disagree by up to 1.4 degrees across the
        // year; this is a sanity cross-check, not a precision claim.
        for day in (1..=365).step_by(7) {
            let delta = (declination_deg(day) - cooper_declination_deg(day)).abs();
            assert!(delta < 1.5, "day {day}: spencer vs cooper differ by {delta}");
        }
    }

    #[test]
    fn morning_sun_rises_east_sets_west() {
        let morning = solar_position(80, 8.0, -21.0);
        let evening = solar_position(80, 16.0, -21.0);
        assert!(morning.azimuth_deg > 45.0 && morning.azimuth_deg < 135.0);
        assert!(evening.azimuth_deg > 225.0 && evening.azimuth_deg < 315.0);
        assert_relative_eq!(morning.altitude_deg, evening.altitude_deg, epsilon = 1e-9);
    }

    #[test]
    fn night_altitude_is_negative() {
        let sun = solar_position(80, 0.0, -21.0);
        assert!(sun.altitude_deg < 0.0);
    }

    #[test]
    fn east_wall_sees_no_beam_under_northern_sun() {
        let sun = SunPosition {
            altitude_deg: 69.0,
            azimuth_deg: 0.0,
        };
        let irr = incident_irradiance(sun, 800.0, 0.0, 90.0, 90.0, 0.0);
        assert!(irr.direct_wm2.abs() < 1e-9);
    }

    #[test]
    fn north_wall_beam_under_northern_sun() {
        let sun = SunPosition {
            altitude_deg: 69.0,
            azimuth_deg: 0.0,
        };
        let irr = incident_irradiance(sun, 800.0, 0.0, 0.0, 90.0, 0.0);
        assert_relative_eq!(irr.direct_wm2, 286.6944, epsilon = 1e-3);
    }

    #[test]
    fn horizontal_surface_collects_full_sky_diffuse() {
        let sun = SunPosition {
            altitude_deg: 45.0,
            azimuth_deg: 0.0,
        };
        let flat = incident_irradiance(sun, 0.0, 200.0, 0.0, 0.0, 0.5);
        assert_relative_eq!(flat.diffuse_wm2, 200.0, epsilon = 1e-12);
        assert_relative_eq!(flat.ground_wm2, 0.0, epsilon = 1e-12);
        let wall = incident_irradiance(sun, 0.0, 200.0, 0.0, 90.0, 0.5);
        assert_relative_eq!(wall.diffuse_wm2, 100.0, epsilon = 1e-12);
        assert_relative_eq!(wall.ground_wm2, 50.0, epsilon = 1e-12);
    }

    #[test]
    fn below_horizon_kills_beam_only() {
        let sun = SunPosition {
            altitude_deg: -5.0,
            azimuth_deg: 90.0,
        };
        let irr = incident_irradiance(sun, 100.0, 10.0, 90.0, 90.0, 0.2);
        assert_eq!(irr.direct_wm2, 0.0);
        assert!(irr.diffuse_wm2 > 0.0);
    }

    #[test]
    fn overhang_shades_high_sun_fully() {
        let sun = SunPosition {
            altitude_deg: 75.0,
            azimuth_deg: 0.0,
        };
        let f = overhang_shading_fraction(sun, 0.0, 0.8, 1.2, 0.0);
        assert_relative_eq!(f, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn overhang_ignores_sun_behind_facade() {
        let sun = SunPosition {
            altitude_deg: 30.0,
            azimuth_deg: 180.0,
        };
        assert_eq!(overhang_shading_fraction(sun, 0.0, 1.0, 1.0, 0.0), 0.0);
    }

    #[test]
    fn overhang_gap_offsets_shadow() {
        let sun = SunPosition {
            altitude_deg: 45.0,
            azimuth_deg: 0.0,
        };
        // tan 45 = 1: a 0.6 m overhang casts a 0.6 m shadow; 0.2 m is used
        // up by the gap, leaving 0.4 of a 1.0 m window shaded.
        let f = overhang_shading_fraction(sun, 0.0, 0.6, 1.0, 0.2);
        assert_relative_eq!(f, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn angle_difference_wraps() {
        assert_relative_eq!(angle_difference_deg(350.0, 10.0), -20.0, epsilon = 1e-12);
        assert_relative_eq!(angle_difference_deg(10.0, 350.0), 20.0, epsilon = 1e-12);
        assert_relative_eq!(angle_difference_deg(180.0, 0.0), 180.0, epsilon = 1e-12);
    }
}
