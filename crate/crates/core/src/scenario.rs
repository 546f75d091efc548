//! Experiment runner: turns a building, weather and a mode into the set of
//! deterministic text artifacts the command line writes to disk.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::airflow::AirflowError;
use crate::ecodom::{self, RuleError, RuleSet, Verdict};
use crate::metrics::{CriteriaSummary, DAY_HOURS, NIGHT_HOURS};
use crate::model::{BuildingModel, LinkKind, ModelError};
use crate::sim::{DayOutput, RunOutput, SimConfig, Simulator, VentilationMode, ZoneDaySeries};
use crate::thermal::ThermalError;
use crate::weather::{self, WeatherError, WeatherRecord, WeatherSequence, WIND_STUDY_DAYS};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Weather(#[from] WeatherError),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl ScenarioError {
    /// Whether the failure is a solver non-convergence rather than bad input.
    pub fn is_convergence_failure(&self) -> bool {
        matches!(
            self,
            ScenarioError::Thermal(
                ThermalError::Airflow(AirflowError::NonConvergence { .. })
                    | ThermalError::Residual { .. }
                    | ThermalError::Singular
            )
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioMode {
    /// Free-float or conditioned hourly simulation of the weather file.
    Simulate,
    /// Seven synthetic wind days on the first weather day.
    WindStudy,
    /// Grid of exterior × interior permeability ratios.
    Sweep {
        exterior: Vec<f64>,
        interior: Vec<f64>,
    },
    /// Base versus improved dwelling with per-measure attribution.
    Compare,
    /// Prescription compliance check.
    Check,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub building: PathBuf,
    pub weather: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub improved: Option<PathBuf>,
    pub mode: ScenarioMode,
    /// key=value knobs applied to the model and run configuration.
    pub overrides: Vec<(String, f64)>,
    pub season_days: Option<u32>,
}

/// One output file: name and full contents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn new(name: &str, contents: String) -> Self {
        Artifact {
            name: name.to_string(),
            contents,
        }
    }
}

/// Formats with a fixed number of significant digits, deterministically.
pub fn format_sig(value: f64, digits: u32) -> String {
    if value == 0.0 || !value.is_finite() {
        return if value == 0.0 {
            "0".to_string()
        } else {
            value.to_string()
        };
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
    format!("{value:.decimals$}")
}

fn sig6(value: f64) -> String {
    format_sig(value, 6)
}

/// Permeability bounds the sweep accepts, as opening/wall area ratios.
pub const SWEEP_RATIO_RANGE: (f64, f64) = (0.15, 0.40);

/// Current opening-to-wall-area ratios of a dwelling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PermeabilityRatios {
    /// Openable exterior opening area over exterior wall area.
    pub exterior: f64,
    /// Openable interzone opening area over partition wall area.
    pub interior: f64,
}

pub fn permeability_ratios(model: &BuildingModel) -> PermeabilityRatios {
    let mut ext_open = 0.0;
    let mut int_open = 0.0;
    for link in &model.links {
        if let LinkKind::LargeOpening {
            width,
            height,
            openable: true,
            ..
        } = link.kind
        {
            if link.is_exterior() {
                ext_open += width * height;
            } else {
                int_open += width * height;
            }
        }
    }
    let mut ext_wall = 0.0;
    let mut partition = 0.0;
    for surface in &model.surfaces {
        match surface.boundary {
            crate::model::Boundary::Exterior if !surface.is_roof() => ext_wall += surface.area,
            crate::model::Boundary::Adjacent { .. } => partition += surface.area,
            _ => {}
        }
    }
    PermeabilityRatios {
        exterior: if ext_wall > 0.0 { ext_open / ext_wall } else { 0.0 },
        interior: if partition > 0.0 {
            int_open / partition
        } else {
            0.0
        },
    }
}

/// Rescales the widths of openable openings so the dwelling hits the target
/// permeability ratios.
pub fn scale_permeability(
    model: &BuildingModel,
    target_exterior: f64,
    target_interior: f64,
) -> Result<BuildingModel, ScenarioError> {
    let current = permeability_ratios(model);
    if current.exterior <= 0.0 {
        return Err(ScenarioError::Invalid(
            "the dwelling has no openable exterior openings to scale".into(),
        ));
    }
    if current.interior <= 0.0 {
        return Err(ScenarioError::Invalid(
            "the dwelling has no openable interior openings to scale".into(),
        ));
    }
    let ext_factor = target_exterior / current.exterior;
    let int_factor = target_interior / current.interior;
    let mut scaled = model.clone();
    for link in &mut scaled.links {
        let factor = if link.is_exterior() {
            ext_factor
        } else {
            int_factor
        };
        if let LinkKind::LargeOpening {
            width,
            openable: true,
            ..
        } = &mut link.kind
        {
            *width *= factor;
        }
    }
    Ok(scaled)
}

fn normalize_ratio(value: f64) -> f64 {
    if value > 1.0 {
        value / 100.0
    } else {
        value
    }
}

/// Applies one configuration override; unknown keys are input errors.
pub fn apply_override(
    config: &mut SimConfig,
    model: &mut BuildingModel,
    key: &str,
    value: f64,
) -> Result<(), ScenarioError> {
    let positive = |value: f64, key: &str| -> Result<f64, ScenarioError> {
        if value > 0.0 {
            Ok(value)
        } else {
            Err(ScenarioError::Invalid(format!("{key} must be positive")))
        }
    };
    match key {
        "h_in" => config.thermal.films.h_in = positive(value, key)?,
        "h_out_base" => config.thermal.films.h_out_base = positive(value, key)?,
        "h_out_wind" => {
            if value < 0.0 {
                return Err(ScenarioError::Invalid("h_out_wind must be ≥ 0".into()));
            }
            config.thermal.films.h_out_wind = value;
        }
        "substeps" => config.substeps = positive(value, key)? as usize,
        "nodes_per_layer" => config.thermal.nodes_per_layer = positive(value, key)? as usize,
        "day_of_year" => {
            let day = value as u32;
            if !(1..=366).contains(&day) {
                return Err(ScenarioError::Invalid("day_of_year must be 1-366".into()));
            }
            config.day_of_year = day;
        }
        "season_days" => config.season_days = positive(value, key)? as u32,
        "warmup_cycles" => config.warmup_max_cycles = positive(value, key)? as usize,
        "ach" => {
            if value < 0.0 {
                return Err(ScenarioError::Invalid("ach must be ≥ 0".into()));
            }
            config.ventilation = VentilationMode::fixed_uniform(model, value);
        }
        "cd" => config.airflow.cd_override = Some(positive(value, key)?),
        _ => {
            if let Some(angle) = key.strip_prefix("cp.") {
                let angle: f64 = angle.parse().map_err(|_| {
                    ScenarioError::Invalid(format!("bad pressure-coefficient key {key:?}"))
                })?;
                let mut points = config.airflow.cp_table.points().to_vec();
                match points.iter_mut().find(|(a, _)| (*a - angle).abs() < 1e-9) {
                    Some(point) => point.1 = value,
                    None => points.push((angle, value)),
                }
                config.airflow.cp_table =
                    crate::airflow::CpTable::from_points(points).ok_or_else(|| {
                        ScenarioError::Invalid("pressure-coefficient table became invalid".into())
                    })?;
            } else {
                return Err(ScenarioError::Invalid(format!("unknown override {key:?}")));
            }
        }
    }
    Ok(())
}

fn build_config(scenario: &Scenario, model: &mut BuildingModel) -> Result<SimConfig, ScenarioError> {
    let mut config = SimConfig::default();
    if let Some(days) = scenario.season_days {
        config.season_days = days;
    }
    for (key, value) in &scenario.overrides {
        apply_override(&mut config, model, key, *value)?;
    }
    Ok(config)
}

fn load_weather(scenario: &Scenario) -> Result<WeatherSequence, ScenarioError> {
    let path = scenario
        .weather
        .as_ref()
        .ok_or_else(|| ScenarioError::Invalid("this mode needs --weather".into()))?;
    Ok(weather::load_weather(path)?)
}

/// Runs a scenario end to end, returning the artifacts in write order.
pub fn run(scenario: &Scenario) -> Result<Vec<Artifact>, ScenarioError> {
    let mut model = BuildingModel::from_file(&scenario.building)?;
    let config = build_config(scenario, &mut model)?;
    match &scenario.mode {
        ScenarioMode::Simulate => {
            let sequence = load_weather(scenario)?;
            run_simulate(&model, &sequence, &config)
        }
        ScenarioMode::WindStudy => {
            let sequence = load_weather(scenario)?;
            run_wind_study(&model, sequence.day(0), &config)
        }
        ScenarioMode::Sweep { exterior, interior } => {
            let sequence = load_weather(scenario)?;
            run_sweep(&model, sequence.day(0), &config, exterior, interior)
        }
        ScenarioMode::Compare => {
            let improved_path = scenario
                .improved
                .as_ref()
                .ok_or_else(|| ScenarioError::Invalid("compare needs --improved".into()))?;
            let improved = BuildingModel::from_file(improved_path)?;
            let sequence = load_weather(scenario)?;
            run_compare(&model, &improved, sequence.day(0), &config)
        }
        ScenarioMode::Check => {
            let rules_dir = scenario
                .rules
                .as_ref()
                .ok_or_else(|| ScenarioError::Invalid("check needs --rules".into()))?;
            let rules = RuleSet::load_dir(rules_dir)?;
            run_check(&model, &rules)
        }
    }
}

pub fn run_simulate(
    model: &BuildingModel,
    sequence: &WeatherSequence,
    config: &SimConfig,
) -> Result<Vec<Artifact>, ScenarioError> {
    let sim = Simulator::new(model, config.clone());
    let output = if sequence.days() == 1 {
        sim.run_periodic_day(sequence.day(0))?
    } else {
        let days: Vec<&[WeatherRecord]> = (0..sequence.days()).map(|d| sequence.day(d)).collect();
        sim.run_sequence(&days)?
    };
    Ok(vec![
        Artifact::new("series.csv", series_csv(&output)),
        Artifact::new("summary.txt", summary_text(model, &output, config)),
        Artifact::new("run_log.txt", run_log(&output)),
    ])
}

pub fn run_wind_study(
    model: &BuildingModel,
    base_day: &[WeatherRecord],
    config: &SimConfig,
) -> Result<Vec<Artifact>, ScenarioError> {
    let sequence = weather::build_wind_study(base_day)?;
    let runs: Result<Vec<RunOutput>, ThermalError> = (0..sequence.days())
        .into_par_iter()
        .map(|d| {
            let sim = Simulator::new(model, config.clone());
            sim.run_periodic_day(sequence.day(d))
        })
        .collect();
    let runs = runs?;

    let mut series = String::from("hour, zone, T_air, T_mr, T_res, w, ACH, cooling_W\n");
    for (day_index, run) in runs.iter().enumerate() {
        push_day_rows(&mut series, run.last_day(), day_index * 24);
    }

    let mut table = String::from("day, wind_ms, wind_dir_deg, zone, mean_ACH\n");
    for (day_index, run) in runs.iter().enumerate() {
        let (speed, direction) = WIND_STUDY_DAYS[day_index];
        for zone in &run.last_day().zones {
            table.push_str(&format!(
                "{day_index}, {}, {}, {}, {}\n",
                sig6(speed),
                sig6(direction),
                zone.zone,
                sig6(zone.mean_ach()),
            ));
        }
    }

    let mut log = String::new();
    for (day_index, run) in runs.iter().enumerate() {
        log.push_str(&format!("day {day_index}\n"));
        log.push_str(&run_log(run));
    }
    Ok(vec![
        Artifact::new("series.csv", series),
        Artifact::new("ach_table.csv", table),
        Artifact::new("run_log.txt", log),
    ])
}

/// One cell of the permeability grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepCell {
    pub exterior_ratio: f64,
    pub interior_ratio: f64,
    /// Volume-weighted mean air change rate over the day, vol/h.
    pub mean_ach: f64,
    /// Floor-area-weighted night resultant temperature, °C.
    pub night_resultant_c: f64,
}

pub fn sweep_grid(
    model: &BuildingModel,
    day: &[WeatherRecord],
    config: &SimConfig,
    exterior: &[f64],
    interior: &[f64],
) -> Result<Vec<SweepCell>, ScenarioError> {
    let exterior: Vec<f64> = exterior.iter().map(|&v| normalize_ratio(v)).collect();
    let interior: Vec<f64> = interior.iter().map(|&v| normalize_ratio(v)).collect();
    let (lo, hi) = SWEEP_RATIO_RANGE;
    for &ratio in exterior.iter().chain(&interior) {
        if !(lo..=hi).contains(&ratio) {
            return Err(ScenarioError::Invalid(format!(
                "permeability ratio {ratio} outside the {lo}-{hi} study range"
            )));
        }
    }
    if exterior.is_empty() || interior.is_empty() {
        return Err(ScenarioError::Invalid(
            "sweep needs at least one exterior and one interior ratio".into(),
        ));
    }
    let cells: Vec<(f64, f64)> = exterior
        .iter()
        .flat_map(|&e| interior.iter().map(move |&i| (e, i)))
        .collect();
    cells
        .into_par_iter()
        .map(|(ext, int)| {
            let scaled = scale_permeability(model, ext, int)?;
            let sim = Simulator::new(&scaled, config.clone());
            let run = sim.run_periodic_day(day)?;
            let day_out = run.last_day();
            Ok(SweepCell {
                exterior_ratio: ext,
                interior_ratio: int,
                mean_ach: volume_weighted_mean_ach(&scaled, day_out),
                night_resultant_c: building_night_resultant(&scaled, day_out),
            })
        })
        .collect()
}

pub fn run_sweep(
    model: &BuildingModel,
    day: &[WeatherRecord],
    config: &SimConfig,
    exterior: &[f64],
    interior: &[f64],
) -> Result<Vec<Artifact>, ScenarioError> {
    let cells = sweep_grid(model, day, config, exterior, interior)?;
    let mut csv = String::from("ext_pct, int_pct, mean_ACH, night_resultant_C\n");
    for cell in &cells {
        csv.push_str(&format!(
            "{}, {}, {}, {}\n",
            sig6(cell.exterior_ratio * 100.0),
            sig6(cell.interior_ratio * 100.0),
            sig6(cell.mean_ach),
            sig6(cell.night_resultant_c),
        ));
    }
    let log = format!(
        "permeability sweep: {} cells over exterior × interior opening ratios\n",
        cells.len()
    );
    Ok(vec![
        Artifact::new("sweep.csv", csv),
        Artifact::new("run_log.txt", log),
    ])
}

/// Envelope or ventilation upgrade copied from the improved dwelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Roof,
    Walls,
    Windows,
    Ventilation,
}

pub const ALL_MEASURES: [Measure; 4] = [
    Measure::Roof,
    Measure::Walls,
    Measure::Windows,
    Measure::Ventilation,
];

impl Measure {
    pub fn label(self) -> &'static str {
        match self {
            Measure::Roof => "roof",
            Measure::Walls => "walls",
            Measure::Windows => "windows",
            Measure::Ventilation => "ventilation",
        }
    }
}

fn import_construction(target: &mut BuildingModel, source: &BuildingModel, name: &str) -> String {
    let imported = format!("imp__{name}");
    if target.construction(&imported).is_some() {
        return imported;
    }
    let construction = source
        .construction(name)
        .expect("validated improved model")
        .clone();
    let mut renamed = construction;
    renamed.name = imported.clone();
    for layer in &mut renamed.layers {
        let material_name = format!("imp__{}", layer.material);
        if target.material(&material_name).is_none() {
            let mut material = source
                .material(&layer.material)
                .expect("validated improved model")
                .clone();
            material.name = material_name.clone();
            target.materials.push(material);
        }
        layer.material = material_name;
    }
    target.constructions.push(renamed);
    imported
}

/// Applies one measure family of the improved dwelling onto the base,
/// matching surfaces, glazings and links by id.
pub fn apply_measure(
    base: &BuildingModel,
    improved: &BuildingModel,
    measure: Measure,
) -> BuildingModel {
    let mut model = base.clone();
    match measure {
        Measure::Roof | Measure::Walls => {
            let want_roof = measure == Measure::Roof;
            let updates: Vec<_> = model
                .surfaces
                .iter()
                .enumerate()
                .filter_map(|(index, surface)| {
                    let counterpart = improved.surface(&surface.id)?;
                    (surface.is_roof() == want_roof
                        && matches!(surface.boundary, crate::model::Boundary::Exterior))
                    .then(|| {
                        (
                            index,
                            counterpart.construction.clone(),
                            counterpart.overhang,
                        )
                    })
                })
                .collect();
            for (index, construction, overhang) in updates {
                let imported = import_construction(&mut model, improved, &construction);
                model.surfaces[index].construction = imported;
                model.surfaces[index].overhang = overhang;
            }
        }
        Measure::Windows => {
            for glazing in &mut model.glazings {
                let Some(counterpart) = improved.glazings.iter().find(|g| g.id == glazing.id)
                else {
                    continue;
                };
                glazing.overhang = counterpart.overhang;
                glazing.shading_multiplier = counterpart.shading_multiplier;
                glazing.solar_transmittance = counterpart.solar_transmittance;
                glazing.u_value = counterpart.u_value;
            }
        }
        Measure::Ventilation => {
            model.links = improved.links.clone();
        }
    }
    model
}

/// Floor-area-weighted day resultant temperature of the whole dwelling.
pub fn building_day_resultant(model: &BuildingModel, day: &DayOutput) -> f64 {
    weighted_resultant(model, day, &DAY_HOURS)
}

/// Floor-area-weighted night resultant temperature of the whole dwelling.
pub fn building_night_resultant(model: &BuildingModel, day: &DayOutput) -> f64 {
    weighted_resultant(model, day, &NIGHT_HOURS)
}

fn weighted_resultant(model: &BuildingModel, day: &DayOutput, hours: &[usize]) -> f64 {
    let mut total_area = 0.0;
    let mut sum = 0.0;
    for (zone, series) in model.zones.iter().zip(&day.zones) {
        let mean: f64 =
            hours.iter().map(|&h| series.t_res[h]).sum::<f64>() / hours.len() as f64;
        sum += mean * zone.floor_area;
        total_area += zone.floor_area;
    }
    sum / total_area
}

fn volume_weighted_mean_ach(model: &BuildingModel, day: &DayOutput) -> f64 {
    let mut total_volume = 0.0;
    let mut sum = 0.0;
    for (zone, series) in model.zones.iter().zip(&day.zones) {
        sum += series.mean_ach() * zone.volume;
        total_volume += zone.volume;
    }
    sum / total_volume
}

/// Cooling energy over the night comfort window, thermal kWh.
pub fn night_cooling_kwh(series: &ZoneDaySeries) -> f64 {
    NIGHT_HOURS
        .iter()
        .map(|&h| series.cooling_w[h])
        .sum::<f64>()
        / 1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureAttribution {
    pub measure: Measure,
    /// Day-resultant reduction this measure alone achieves, K.
    pub delta_day_resultant_k: f64,
    /// Share of the summed one-at-a-time reductions, percent.
    pub share_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareOutcome {
    pub base_day_resultant_c: f64,
    pub improved_day_resultant_c: f64,
    pub base_night_resultant_c: f64,
    pub improved_night_resultant_c: f64,
    pub base_criteria: Vec<(String, CriteriaSummary)>,
    pub improved_criteria: Vec<(String, CriteriaSummary)>,
    pub base_night_cooling_kwh: f64,
    pub improved_night_cooling_kwh: f64,
    pub attribution: Vec<MeasureAttribution>,
}

pub fn compare_dwellings(
    base: &BuildingModel,
    improved: &BuildingModel,
    day: &[WeatherRecord],
    config: &SimConfig,
) -> Result<CompareOutcome, ScenarioError> {
    let run_one = |model: &BuildingModel| -> Result<(RunOutput, f64), ScenarioError> {
        let run = Simulator::new(model, config.clone()).run_periodic_day(day)?;
        let day_res = building_day_resultant(model, run.last_day());
        Ok((run, day_res))
    };
    let (base_run, base_day_res) = run_one(base)?;
    let (improved_run, improved_day_res) = run_one(improved)?;

    let toggled: Result<Vec<f64>, ScenarioError> = ALL_MEASURES
        .par_iter()
        .map(|&measure| {
            let model = apply_measure(base, improved, measure);
            let violations = model.validate();
            if !violations.is_empty() {
                return Err(ScenarioError::Invalid(format!(
                    "measure {}: {violations:?}",
                    measure.label()
                )));
            }
            let (_, day_res) = run_one(&model)?;
            Ok(base_day_res - day_res)
        })
        .collect();
    let deltas = toggled?;
    let total: f64 = deltas.iter().sum();
    let attribution = ALL_MEASURES
        .iter()
        .zip(&deltas)
        .map(|(&measure, &delta)| MeasureAttribution {
            measure,
            delta_day_resultant_k: delta,
            share_pct: if total.abs() > 1e-9 {
                delta / total * 100.0
            } else {
                0.0
            },
        })
        .collect();

    let criteria = |model: &BuildingModel, run: &RunOutput| {
        model
            .zones
            .iter()
            .zip(&run.last_day().zones)
            .map(|(zone, series)| {
                (
                    zone.id.clone(),
                    series.criteria(zone.floor_area, config.season_days),
                )
            })
            .collect::<Vec<_>>()
    };
    let night_kwh = |run: &RunOutput| -> f64 {
        run.last_day().zones.iter().map(night_cooling_kwh).sum()
    };

    Ok(CompareOutcome {
        base_day_resultant_c: base_day_res,
        improved_day_resultant_c: improved_day_res,
        base_night_resultant_c: building_night_resultant(base, base_run.last_day()),
        improved_night_resultant_c: building_night_resultant(improved, improved_run.last_day()),
        base_criteria: criteria(base, &base_run),
        improved_criteria: criteria(improved, &improved_run),
        base_night_cooling_kwh: night_kwh(&base_run),
        improved_night_cooling_kwh: night_kwh(&improved_run),
        attribution,
    })
}

pub fn run_compare(
    base: &BuildingModel,
    improved: &BuildingModel,
    day: &[WeatherRecord],
    config: &SimConfig,
) -> Result<Vec<Artifact>, ScenarioError> {
    let outcome = compare_dwellings(base, improved, day, config)?;

    let mut text = String::new();
    text.push_str("case comparison (typical-day periodic regime)\n");
    text.push_str(&format!(
        "day resultant:   base {} °C, improved {} °C, delta {} K\n",
        sig6(outcome.base_day_resultant_c),
        sig6(outcome.improved_day_resultant_c),
        sig6(outcome.base_day_resultant_c - outcome.improved_day_resultant_c),
    ));
    text.push_str(&format!(
        "night resultant: base {} °C, improved {} °C, delta {} K\n",
        sig6(outcome.base_night_resultant_c),
        sig6(outcome.improved_night_resultant_c),
        sig6(outcome.base_night_resultant_c - outcome.improved_night_resultant_c),
    ));
    text.push_str(&format!(
        "night cooling:   base {} kWh, improved {} kWh\n",
        sig6(outcome.base_night_cooling_kwh),
        sig6(outcome.improved_night_cooling_kwh),
    ));
    text.push_str("\nper-zone criteria (base | improved)\n");
    for ((zone, base_c), (_, improved_c)) in
        outcome.base_criteria.iter().zip(&outcome.improved_criteria)
    {
        text.push_str(&format!(
            "{zone}: day {} | {} °C; night {} | {} °C; max power {} | {} W\n",
            sig6(base_c.day_resultant_c),
            sig6(improved_c.day_resultant_c),
            sig6(base_c.night_resultant_c),
            sig6(improved_c.night_resultant_c),
            sig6(base_c.max_power_w),
            sig6(improved_c.max_power_w),
        ));
    }
    text.push_str(
        "\nattribution: one measure at a time applied to the base dwelling;\n\
         shares normalized to the sum of the single-measure reductions\n",
    );

    let mut attribution = String::from("measure, day_resultant_delta_K, share_pct\n");
    for entry in &outcome.attribution {
        attribution.push_str(&format!(
            "{}, {}, {}\n",
            entry.measure.label(),
            sig6(entry.delta_day_resultant_k),
            sig6(entry.share_pct),
        ));
    }

    Ok(vec![
        Artifact::new("compare.txt", text),
        Artifact::new("attribution.csv", attribution),
    ])
}

pub fn run_check(model: &BuildingModel, rules: &RuleSet) -> Result<Vec<Artifact>, ScenarioError> {
    let report = ecodom::evaluate(model, rules);
    let json = serde_json::to_string_pretty(&report)
        .expect("compliance report serializes")
        + "\n";
    Ok(vec![
        Artifact::new("compliance.txt", compliance_text(&report)),
        Artifact::new("compliance.json", json),
    ])
}

pub fn compliance_text(report: &ecodom::ComplianceReport) -> String {
    let mut text = format!("compliance report: {}\n\n", report.dwelling);
    let verdict_tag = |v: Verdict| match v {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::NotApplicable => "  - ",
    };
    for result in &report.results {
        let mut line = format!("[{}] {}", verdict_tag(result.verdict), result.rule_id);
        if let (Some(measured), Some(required)) = (result.measured, result.required) {
            line.push_str(&format!(
                " (measured {}, required {})",
                sig6(measured),
                sig6(required)
            ));
        }
        if !result.detail.is_empty() {
            line.push_str(&format!("; {}", result.detail));
        }
        text.push_str(&line);
        text.push('\n');
    }
    let (pass, fail, na) = report.counts();
    text.push_str(&format!(
        "\n{pass} passed, {fail} failed, {na} not applicable\n"
    ));
    for note in &report.notes {
        text.push_str(&format!("note: {note}\n"));
    }
    text
}

fn push_day_rows(out: &mut String, day: &DayOutput, hour_offset: usize) {
    let hours = day.zones.first().map_or(0, |z| z.t_air.len());
    for hour in 0..hours {
        for zone in &day.zones {
            out.push_str(&format!(
                "{}, {}, {}, {}, {}, {}, {}, {}\n",
                hour_offset + hour,
                zone.zone,
                sig6(zone.t_air[hour]),
                sig6(zone.t_mr[hour]),
                sig6(zone.t_res[hour]),
                sig6(zone.w[hour]),
                sig6(zone.ach[hour]),
                sig6(zone.cooling_w[hour]),
            ));
        }
    }
}

pub fn series_csv(output: &RunOutput) -> String {
    let mut csv = String::from("hour, zone, T_air, T_mr, T_res, w, ACH, cooling_W\n");
    for day in &output.days {
        push_day_rows(&mut csv, day, day.day_index * 24);
    }
    csv
}

pub fn summary_text(model: &BuildingModel, output: &RunOutput, config: &SimConfig) -> String {
    let day = output.last_day();
    let conditioned = model
        .zones
        .iter()
        .any(|z| !matches!(z.conditioning, crate::model::Conditioning::None));
    let mut text = format!(
        "dwelling: {}\nmode: {}\nseason days: {}\n",
        model.name,
        if conditioned { "conditioned" } else { "free-float" },
        config.season_days,
    );
    text.push_str(
        "comfort windows: day covers hours 07-18 inclusive, night hours 20-05;\n\
         the 19h00 boundary sample belongs to neither window\n\n",
    );
    for (zone, series) in model.zones.iter().zip(&day.zones) {
        let criteria = series.criteria(zone.floor_area, config.season_days);
        text.push_str(&format!(
            "zone {}\n  day resultant      {} °C\n  night resultant    {} °C\n  \
             max resultant      {} °C\n  max power          {} W ({} W/m²)\n  \
             daily energy       {} kWh\n  seasonal energy    {} kWh\n  mean ACH           {} vol/h\n",
            zone.id,
            sig6(criteria.day_resultant_c),
            sig6(criteria.night_resultant_c),
            sig6(criteria.max_resultant_c),
            sig6(criteria.max_power_w),
            sig6(criteria.max_power_w_m2),
            sig6(criteria.daily_energy_kwh),
            sig6(criteria.seasonal_energy_kwh),
            sig6(series.mean_ach()),
        ));
    }
    text.push_str(&format!(
        "\nwhole dwelling: day resultant {} °C, night resultant {} °C\n",
        sig6(building_day_resultant(model, day)),
        sig6(building_night_resultant(model, day)),
    ));
    text
}

pub fn run_log(output: &RunOutput) -> String {
    let d = &output.diagnostics;
    format!(
        "warm-up cycles: {} ({})\ncoupling iterations: {}\nhours without coupling convergence: {}\n\
         max thermal residual: {} W\nmax airflow residual: {} kg/s\nmax moisture residual: {} kg/s\n",
        d.warmup_cycles,
        if d.warmup_converged { "settled" } else { "cap reached" },
        d.coupling_iterations,
        d.unconverged_hours,
        format_sig(d.max_thermal_residual_w, 3),
        format_sig(d.max_airflow_residual_kg_s, 3),
        format_sig(d.max_moisture_residual_kg_s, 3),
    )
}
