//! Hourly weather ingestion and the artificial multi-day wind sequences.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Compass bearings used by the wind sequences, degrees clockwise from North.
pub const NORTH_DEG: f64 = 0.0;
pub const EAST_DEG: f64 = 90.0;
pub const SOUTH_EAST_DEG: f64 = 135.0;

/// (speed m/s, direction deg) imposed on each day of the wind study.
pub const WIND_STUDY_DAYS: [(f64, f64); 7] = [
    (0.0, NORTH_DEG),
    (1.0, SOUTH_EAST_DEG),
    (5.0, SOUTH_EAST_DEG),
    (1.0, EAST_DEG),
    (5.0, EAST_DEG),
    (1.0, NORTH_DEG),
    (5.0, NORTH_DEG),
];

pub const WEATHER_COLUMNS: [&str; 7] = [
    "hour",
    "dry_bulb_C",
    "rh_pct",
    "dni_wm2",
    "dhi_wm2",
    "wind_ms",
    "wind_dir_deg",
];

#[derive(Debug, Error)]
pub enum WeatherError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: malformed CSV: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: header must be exactly {expected:?}, found {found:?}")]
    Header {
        path: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{path} line {line}: field {field}: {message}")]
    Field {
        path: String,
        line: u64,
        field: &'static str,
        message: String,
    },
    #[error("{path}: length must be a multiple of 24, found {len} records")]
    Length { path: String, len: usize },
}

/// One hour of boundary conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    /// Hour of day, 0-23.
    pub hour_index: u8,
    /// °C
    pub dry_bulb: f64,
    /// %, 0-100
    pub relative_humidity: f64,
    /// Beam normal irradiance, W/m².
    pub direct_normal: f64,
    /// Diffuse horizontal irradiance, W/m².
    pub diffuse_horizontal: f64,
    /// m/s
    pub wind_speed: f64,
    /// Direction the wind comes from, degrees clockwise from North, [0, 360).
    pub wind_direction: f64,
}

/// Whole-day (or multi-day) hourly sequence; immutable after load.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeatherSequence {
    pub source: String,
    pub records: Vec<WeatherRecord>,
}

impl WeatherSequence {
    pub fn days(&self) -> usize {
        self.records.len() / 24
    }

    pub fn day(&self, day: usize) -> &[WeatherRecord] {
        &self.records[day * 24..(day + 1) * 24]
    }
}

/// Loads and checks an hourly weather CSV.
///
/// The header must match [`WEATHER_COLUMNS`] exactly; the record count must
/// be a positive multiple of 24 and every field must pass its physical range
/// check. Errors carry the line number and the offending column.
pub fn load_weather(path: &Path) -> Result<WeatherSequence, WeatherError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| WeatherError::Io {
        path: display.clone(),
        source,
    })?;
    parse_weather(&text, &display)
}

pub fn parse_weather(text: &str, source_name: &str) -> Result<WeatherSequence, WeatherError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|source| WeatherError::Csv {
            path: source_name.to_string(),
            source,
        })?
        .iter()
        .map(str::to_string)
        .collect();
    if headers != WEATHER_COLUMNS {
        return Err(WeatherError::Header {
            path: source_name.to_string(),
            expected: WEATHER_COLUMNS.iter().map(|s| s.to_string()).collect(),
            found: headers,
        });
    }

    let mut records = Vec::new();
    for (index, row) in reader.records().enumerate() {
        let row = row.map_err(|source| WeatherError::Csv {
            path: source_name.to_string(),
            source,
        })?;
        let line = row
            .position()
            .map(|p| p.line())
            .unwrap_or(index as u64 + 2);
        let field_err = |field: &'static str, message: String| WeatherError::Field {
            path: source_name.to_string(),
            line,
            field,
            message,
        };
        let parse = |col: usize, field: &'static str| -> Result<f64, WeatherError> {
            row.get(col)
                .ok_or_else(|| field_err(field, "missing".into()))?
                .parse::<f64>()
                .map_err(|e| field_err(field, e.to_string()))
        };

        let hour = parse(0, "hour")?;
        if hour.fract() != 0.0 || !(0.0..24.0).contains(&hour) {
            return Err(field_err("hour", format!("must be an integer in 0-23, found {hour}")));
        }
        if hour as usize != index % 24 {
            return Err(field_err(
                "hour",
                format!("expected {} at record {}, found {hour}", index % 24, index + 1),
            ));
        }
        let record = WeatherRecord {
            hour_index: hour as u8,
            dry_bulb: parse(1, "dry_bulb_C")?,
            relative_humidity: parse(2, "rh_pct")?,
            direct_normal: parse(3, "dni_wm2")?,
            diffuse_horizontal: parse(4, "dhi_wm2")?,
            wind_speed: parse(5, "wind_ms")?,
            wind_direction: parse(6, "wind_dir_deg")?,
        };
        if !(0.0..=100.0).contains(&record.relative_humidity) {
            return Err(field_err(
                "rh_pct",
                format!("must be in [0, 100], found {}", record.relative_humidity),
            ));
        }
        if record.direct_normal < 0.0 {
            return Err(field_err("dni_wm2", "must be >= 0".into()));
        }
        if record.diffuse_horizontal < 0.0 {
            return Err(field_err("dhi_wm2", "must be >= 0".into()));
        }
        if record.wind_speed < 0.0 {
            return Err(field_err("wind_ms", "must be >= 0".into()));
        }
        if !(0.0..360.0).contains(&record.wind_direction) {
            return Err(field_err("wind_dir_deg", "must be in [0, 360)".into()));
        }
        records.push(record);
    }

    if records.is_empty() || records.len() % 24 != 0 {
        return Err(WeatherError::Length {
            path: source_name.to_string(),
            len: records.len(),
        });
    }
    Ok(WeatherSequence {
        source: source_name.to_string(),
        records,
    })
}

/// Replicates one base day seven times, overwriting only the wind fields
/// with the scripted calm/trade-wind combinations of [`WIND_STUDY_DAYS`].
pub fn build_wind_study(base_day: &[WeatherRecord]) -> Result<WeatherSequence, WeatherError> {
    if base_day.len() != 24 {
        return Err(WeatherError::Length {
            path: "wind study base day".into(),
            len: base_day.len(),
        });
    }
    let mut records = Vec::with_capacity(24 * WIND_STUDY_DAYS.len());
    for &(speed, direction) in &WIND_STUDY_DAYS {
        for base in base_day {
            records.push(WeatherRecord {
                wind_speed: speed,
                wind_direction: direction,
                ..*base
            });
        }
    }
    Ok(WeatherSequence {
        source: "wind study".into(),
        records,
    })
}

/// Serialises a sequence back to the canonical CSV layout.
pub fn write_weather_csv(seq: &WeatherSequence) -> String {
    let mut out = String::from("hour, dry_bulb_C, rh_pct, dni_wm2, dhi_wm2, wind_ms, wind_dir_deg\n");
    for r in &seq.records {
        out.push_str(&format!(
            "{}, {}, {}, {}, {}, {}, {}\n",
            r.hour_index,
            r.dry_bulb,
            r.relative_humidity,
            r.direct_normal,
            r.diffuse_horizontal,
            r.wind_speed,
            r.wind_direction
        ));
    }
    out
}
