//! ECODOM prescription engine: checks a dwelling against the rule families
//! for siting, roof and wall solar protection, window shading, natural
//! ventilation, water heating and air conditioning.
//!
//! Quantitative lookup tables (required overhang ratios, insulation
//! thicknesses, collector areas, tank capacities) live in editable JSON
//! files so they can be revised without touching code; fixed scalar
//! thresholds (permeability ratios, COP floors, the siting fraction) are
//! part of the rule definitions here. Evaluation is pure and ordered, so a
//! given dwelling and rule set always produce the identical report.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::BuildingModel;
use crate::solar::angle_difference_deg;

/// Exterior permeability floor for each cross-ventilation facade.
pub const CROSS_VENT_MIN_RATIO: f64 = 0.25;
/// Loft opening area over roof area floor for a ventilated roof.
pub const ROOF_VENT_MIN_RATIO: f64 = 0.15;
/// Strict lower bound on the shaded perimeter fraction.
pub const SITING_MIN_FRACTION: f64 = 0.75;
/// Minimum width of the shading strip, m.
pub const SITING_MIN_WIDTH_M: f64 = 3.0;
/// Minimum cooling efficiency per unit type.
pub const MIN_COP_WINDOW: f64 = 2.5;
pub const MIN_COP_SPLIT: f64 = 3.0;
/// Mechanically controlled air renewal for conditioned rooms, m³/h.
pub const MIN_MECHANICAL_RENEWAL_M3H: f64 = 25.0;
/// Solar water heating: minimum conventional annual production, kWh/m²·yr.
pub const SOLAR_WH_MIN_KWH_M2: f64 = 700.0;
/// Solar storage bounds, litres per m² of collector.
pub const SOLAR_WH_STORAGE_L_M2: (f64, f64) = (60.0, 120.0);
/// Surfaces absorbing at most this are light-coloured.
pub const LIGHT_COLOR_MAX_ABSORPTIVITY: f64 = 0.4;
/// Surfaces absorbing at most this (and above light) are medium.
pub const MEDIUM_COLOR_MAX_ABSORPTIVITY: f64 = 0.7;
/// Facades at least this far apart in azimuth count as opposing.
pub const OPPOSING_FACADE_MIN_DEG: f64 = 135.0;

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("rule table {table}: {message}")]
    Invalid { table: String, message: String },
}

/// Compass quadrant of a facade's outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationClass {
    North,
    East,
    South,
    West,
}

impl OrientationClass {
    pub fn of_azimuth(azimuth_deg: f64) -> Self {
        let a = azimuth_deg.rem_euclid(360.0);
        if !(45.0..315.0).contains(&a) {
            OrientationClass::North
        } else if a < 135.0 {
            OrientationClass::East
        } else if a < 225.0 {
            OrientationClass::South
        } else {
            OrientationClass::West
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorClass {
    Light,
    Medium,
    Dark,
}

impl ColorClass {
    pub fn of_absorptivity(alpha: f64) -> Self {
        if alpha <= LIGHT_COLOR_MAX_ABSORPTIVITY {
            ColorClass::Light
        } else if alpha <= MEDIUM_COLOR_MAX_ABSORPTIVITY {
            ColorClass::Medium
        } else {
            ColorClass::Dark
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InertiaClass {
    Light,
    Heavy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoftClass {
    Ventilated,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Siting,
    Roof,
    Walls,
    Windows,
    Ventilation,
    WaterHeater,
    AirConditioning,
}

/// What a table row's `required` value means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Overhang depth over protected height (walls).
    DOverH,
    /// Overhang depth over gap-adjusted height (windows).
    DOver2aH,
    /// Insulating layer thickness, cm.
    InsulationCm,
    /// Solar collector area, m².
    CollectorM2,
    /// Storage tank capacity, litres.
    CapacityL,
}

/// One requirement row; absent keys match any element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation: Option<OrientationClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub color: Option<ColorClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<InertiaClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loft: Option<LoftClass>,
    /// Dwelling size in main rooms, for sizing tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rooms: Option<u32>,
    pub required: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    pub id: String,
    pub family: Family,
    pub citation: String,
    pub quantity: Quantity,
    pub rows: Vec<RuleRow>,
}

impl RuleTable {
    fn validate(&self) -> Result<(), RuleError> {
        let mut keys = HashSet::new();
        for row in &self.rows {
            if row.required < 0.0 {
                return Err(RuleError::Invalid {
                    table: self.id.clone(),
                    message: "required values must be ≥ 0".into(),
                });
            }
            let key = (row.orientation, row.color, row.inertia, row.loft, row.rooms);
            if !keys.insert(key) {
                return Err(RuleError::Invalid {
                    table: self.id.clone(),
                    message: format!("duplicate row key {key:?}"),
                });
            }
        }
        Ok(())
    }
}

/// All loaded tables, ordered by id for reproducible reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleSet {
    pub tables: Vec<RuleTable>,
}

impl RuleSet {
    pub fn new(mut tables: Vec<RuleTable>) -> Result<Self, RuleError> {
        tables.sort_by(|a, b| a.id.cmp(&b.id));
        for table in &tables {
            table.validate()?;
        }
        Ok(RuleSet { tables })
    }

    /// Loads every `*.json` table in a directory.
    pub fn load_dir(dir: &Path) -> Result<Self, RuleError> {
        let mut tables = Vec::new();
        let entries = std::fs::read_dir(dir).map_err(|source| RuleError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        paths.sort();
        for path in paths {
            let text = std::fs::read_to_string(&path).map_err(|source| RuleError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let table: RuleTable =
                serde_json::from_str(&text).map_err(|source| RuleError::Parse {
                    path: path.display().to_string(),
                    source,
                })?;
            tables.push(table);
        }
        RuleSet::new(tables)
    }

    fn family_tables(&self, family: Family) -> impl Iterator<Item = &RuleTable> {
        self.tables.iter().filter(move |t| t.family == family)
    }
}

/// Compliance declarations that do not follow from the thermal geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ComplianceMeta {
    /// Dwelling size in main rooms, keys the sizing tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwelling_rooms: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub siting: Option<SitingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_ventilation: Option<CrossVentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roof_vent: Option<RoofVentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub water_heater: Option<WaterHeaterSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub air_conditioning: Option<AcSpec>,
    /// Ceiling fan wiring provision per principal room.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fan_wiring: Vec<FanWiring>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SitingSpec {
    /// Fraction of the perimeter shaded by vegetation or neighbouring
    /// structures, 0-1.
    pub protected_fraction: f64,
    /// Width of the protective strip, m.
    pub protection_width_m: f64,
}

/// Opening areas of the two cross-ventilation facades of the principal
/// rooms: So = exterior openings, Si = interior openings on the flow path,
/// Sp = facade wall area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossVentSpec {
    pub so1_m2: f64,
    pub so2_m2: f64,
    pub si1_m2: f64,
    pub si2_m2: f64,
    pub sp1_m2: f64,
    pub sp2_m2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facade1_azimuth_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facade2_azimuth_deg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoofVentSpec {
    /// Total loft ventilation opening area, m².
    pub opening_area_m2: f64,
    pub roof_area_m2: f64,
}

impl RoofVentSpec {
    pub fn ratio(&self) -> f64 {
        self.opening_area_m2 / self.roof_area_m2
    }

    pub fn loft_class(&self) -> LoftClass {
        if self.ratio() >= ROOF_VENT_MIN_RATIO {
            LoftClass::Ventilated
        } else {
            LoftClass::Closed
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaterHeaterSpec {
    Solar {
        annual_kwh_per_m2: f64,
        storage_l_per_m2: f64,
        collector_area_m2: f64,
    },
    Electric {
        certified: bool,
        instant: bool,
        three_position_switch: bool,
        capacity_l: f64,
    },
    Gas {
        certified: bool,
        flue_outlet: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcUnitKind {
    Window,
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcSpec {
    pub unit: AcUnitKind,
    pub cop: f64,
    /// Mechanically controlled air renewal of the conditioned rooms, m³/h.
    pub mechanical_renewal_m3h: f64,
    pub maintenance_contract: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanWiring {
    pub room: String,
    pub ceiling_supply: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleResult {
    pub rule_id: String,
    pub family: Family,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required: Option<f64>,
    pub citation: String,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl RuleResult {
    fn new(rule_id: &str, family: Family, verdict: Verdict, citation: &str) -> Self {
        RuleResult {
            rule_id: rule_id.to_string(),
            family,
            verdict,
            measured: None,
            required: None,
            citation: citation.to_string(),
            detail: String::new(),
        }
    }

    fn with_values(mut self, measured: f64, required: f64) -> Self {
        self.measured = Some(measured);
        self.required = Some(required);
        self
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplianceReport {
    pub dwelling: String,
    pub results: Vec<RuleResult>,
    /// Interpretation choices a reviewer should know about.
    pub notes: Vec<String>,
}

impl ComplianceReport {
    pub fn verdict_of(&self, rule_id: &str) -> Option<Verdict> {
        self.results
            .iter()
            .find(|r| r.rule_id == rule_id)
            .map(|r| r.verdict)
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for r in &self.results {
            match r.verdict {
                Verdict::Pass => counts.0 += 1,
                Verdict::Fail => counts.1 += 1,
                Verdict::NotApplicable => counts.2 += 1,
            }
        }
        counts
    }
}

fn pass_if(condition: bool) -> Verdict {
    if condition {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Shade protection of the building plot itself.
pub fn check_siting(spec: Option<&SitingSpec>) -> Vec<RuleResult> {
    let citation = "Dwelling siting: the perimeter must be shaded over more than \
                    three quarters of its length by a strip at least 3 m wide";
    match spec {
        None => vec![RuleResult::new(
            "siting.protection",
            Family::Siting,
            Verdict::NotApplicable,
            citation,
        )
        .with_detail("no siting declaration")],
        Some(s) => {
            let ok = s.protected_fraction > SITING_MIN_FRACTION
                && s.protection_width_m >= SITING_MIN_WIDTH_M;
            vec![RuleResult::new(
                "siting.protection",
                Family::Siting,
                pass_if(ok),
                citation,
            )
            .with_values(s.protected_fraction, SITING_MIN_FRACTION)
            .with_detail(format!(
                "protected fraction {:.3} (strictly above {:.2} required), strip width {:.2} m (>= {:.1} m)",
                s.protected_fraction, SITING_MIN_FRACTION, s.protection_width_m, SITING_MIN_WIDTH_M
            ))]
        }
    }
}

/// Natural cross ventilation of the principal rooms.
pub fn check_cross_ventilation(spec: Option<&CrossVentSpec>) -> Vec<RuleResult> {
    let p_citation = "Cross ventilation: exterior openings of each principal facade \
                      must reach a quarter of the mean facade area";
    let si_citation = "Cross ventilation: interior openings on the flow path must not \
                       choke the smaller exterior opening";
    let facade_citation =
        "Cross ventilation: principal rooms must open on at least two opposing facades";
    let Some(s) = spec else {
        return ["ventilation.cross.p1", "ventilation.cross.p2"]
            .iter()
            .map(|id| {
                RuleResult::new(id, Family::Ventilation, Verdict::NotApplicable, p_citation)
                    .with_detail("no cross-ventilation declaration")
            })
            .chain(["ventilation.cross.si1", "ventilation.cross.si2"].iter().map(|id| {
                RuleResult::new(id, Family::Ventilation, Verdict::NotApplicable, si_citation)
                    .with_detail("no cross-ventilation declaration")
            }))
            .chain(std::iter::once(
                RuleResult::new(
                    "ventilation.cross.facades",
                    Family::Ventilation,
                    Verdict::NotApplicable,
                    facade_citation,
                )
                .with_detail("no cross-ventilation declaration"),
            ))
            .collect();
    };

    let sp = (s.sp1_m2 + s.sp2_m2) / 2.0;
    let p1 = s.so1_m2 / sp;
    let p2 = s.so2_m2 / sp;
    let smaller_exterior = s.so1_m2.min(s.so2_m2);
    let mut results = vec![
        RuleResult::new(
            "ventilation.cross.p1",
            Family::Ventilation,
            pass_if(p1 >= CROSS_VENT_MIN_RATIO),
            p_citation,
        )
        .with_values(p1, CROSS_VENT_MIN_RATIO),
        RuleResult::new(
            "ventilation.cross.p2",
            Family::Ventilation,
            pass_if(p2 >= CROSS_VENT_MIN_RATIO),
            p_citation,
        )
        .with_values(p2, CROSS_VENT_MIN_RATIO),
        RuleResult::new(
            "ventilation.cross.si1",
            Family::Ventilation,
            pass_if(s.si1_m2 >= smaller_exterior),
            si_citation,
        )
        .with_values(s.si1_m2, smaller_exterior),
        RuleResult::new(
            "ventilation.cross.si2",
            Family::Ventilation,
            pass_if(s.si2_m2 >= smaller_exterior),
            si_citation,
        )
        .with_values(s.si2_m2, smaller_exterior),
    ];
    results.push(match (s.facade1_azimuth_deg, s.facade2_azimuth_deg) {
        (Some(a), Some(b)) => {
            let separation = angle_difference_deg(a, b).abs();
            RuleResult::new(
                "ventilation.cross.facades",
                Family::Ventilation,
                pass_if(separation >= OPPOSING_FACADE_MIN_DEG),
                facade_citation,
            )
            .with_values(separation, OPPOSING_FACADE_MIN_DEG)
        }
        _ => RuleResult::new(
            "ventilation.cross.facades",
            Family::Ventilation,
            Verdict::NotApplicable,
            facade_citation,
        )
        .with_detail("facade azimuths not declared"),
    });
    results
}

/// Loft ventilation of the roof space.
pub fn check_roof_vent(spec: Option<&RoofVentSpec>) -> Vec<RuleResult> {
    let citation = "Roof ventilation: loft opening area must reach 15% of the roof area, \
                    spread uniformly";
    match spec {
        None => vec![RuleResult::new(
            "ventilation.roof_vent",
            Family::Ventilation,
            Verdict::NotApplicable,
            citation,
        )
        .with_detail("no loft declaration")],
        Some(s) => vec![RuleResult::new(
            "ventilation.roof_vent",
            Family::Ventilation,
            pass_if(s.ratio() >= ROOF_VENT_MIN_RATIO),
            citation,
        )
        .with_values(s.ratio(), ROOF_VENT_MIN_RATIO)],
    }
}

/// Ceiling fan wiring provision of the principal rooms.
pub fn check_fan_wiring(wiring: &[FanWiring]) -> Vec<RuleResult> {
    let citation = "Ceiling fans: each principal room needs a dedicated ceiling \
                    supply point for an air fan";
    if wiring.is_empty() {
        return vec![RuleResult::new(
            "ventilation.fans",
            Family::Ventilation,
            Verdict::NotApplicable,
            citation,
        )
        .with_detail("no rooms declared")];
    }
    let missing: Vec<&str> = wiring
        .iter()
        .filter(|w| !w.ceiling_supply)
        .map(|w| w.room.as_str())
        .collect();
    let result = RuleResult::new(
        "ventilation.fans",
        Family::Ventilation,
        pass_if(missing.is_empty()),
        citation,
    );
    vec![if missing.is_empty() {
        result.with_detail(format!("{} rooms wired", wiring.len()))
    } else {
        result.with_detail(format!("missing supply in: {}", missing.join(", ")))
    }]
}

/// Direct measurements of one envelope element against the lookup tables.
struct Element {
    label: String,
    orientation: OrientationClass,
    color: Option<ColorClass>,
    inertia: InertiaClass,
    d_over_h: f64,
    d_over_2a_h: f64,
    insulation_cm: f64,
    is_roof: bool,
    is_window: bool,
}

impl Element {
    fn measure(&self, quantity: Quantity) -> Option<f64> {
        match quantity {
            Quantity::DOverH => Some(self.d_over_h),
            Quantity::DOver2aH => Some(self.d_over_2a_h),
            Quantity::InsulationCm => Some(self.insulation_cm),
            Quantity::CollectorM2 | Quantity::CapacityL => None,
        }
    }

    fn matches(&self, row: &RuleRow, loft: Option<LoftClass>) -> Option<bool> {
        if let Some(o) = row.orientation {
            if o != self.orientation {
                return Some(false);
            }
        }
        if let Some(c) = row.color {
            match self.color {
                Some(own) if own == c => {}
                Some(_) => return Some(false),
                None => return Some(false),
            }
        }
        if let Some(i) = row.inertia {
            if i != self.inertia {
                return Some(false);
            }
        }
        if let Some(l) = row.loft {
            match loft {
                Some(own) if own == l => {}
                Some(_) => return Some(false),
                // A loft-keyed row cannot be decided without the declaration.
                None => return None,
            }
        }
        if row.rooms.is_some() {
            return Some(false);
        }
        Some(true)
    }
}

fn collect_elements(model: &BuildingModel) -> Vec<Element> {
    let inertia = match model.structure_class {
        crate::model::StructureClass::Light => InertiaClass::Light,
        crate::model::StructureClass::Heavy => InertiaClass::Heavy,
    };
    let mut elements = Vec::new();
    for surface in &model.surfaces {
        if !matches!(surface.boundary, crate::model::Boundary::Exterior) {
            continue;
        }
        let construction = model.construction(&surface.construction).unwrap();
        elements.push(Element {
            label: format!("surface {}", surface.id),
            orientation: OrientationClass::of_azimuth(surface.azimuth),
            color: Some(ColorClass::of_absorptivity(construction.exterior_absorptivity)),
            inertia,
            d_over_h: surface.overhang.map_or(0.0, |o| o.ratio_d_h()),
            d_over_2a_h: surface.overhang.map_or(0.0, |o| o.ratio_d_2a_h()),
            insulation_cm: model.insulation_thickness_cm(construction),
            is_roof: surface.is_roof(),
            is_window: false,
        });
    }
    for glazing in &model.glazings {
        let host = model.surface(&glazing.host_surface).unwrap();
        if !matches!(host.boundary, crate::model::Boundary::Exterior) {
            continue;
        }
        elements.push(Element {
            label: format!("glazing {}", glazing.id),
            orientation: OrientationClass::of_azimuth(host.azimuth),
            color: None,
            inertia,
            d_over_h: glazing.overhang.map_or(0.0, |o| o.ratio_d_h()),
            d_over_2a_h: glazing.overhang.map_or(0.0, |o| o.ratio_d_2a_h()),
            insulation_cm: 0.0,
            is_roof: false,
            is_window: true,
        });
    }
    elements
}

fn family_of_element(element: &Element) -> Family {
    if element.is_window {
        Family::Windows
    } else if element.is_roof {
        Family::Roof
    } else {
        Family::Walls
    }
}

/// Envelope solar protection: overhangs, insulation and window shading
/// against the lookup tables, with overhang-or-insulation treated as
/// alternative paths for opaque elements.
pub fn check_solar_protection(model: &BuildingModel, rules: &RuleSet) -> Vec<RuleResult> {
    let loft = model
        .compliance
        .as_ref()
        .and_then(|c| c.roof_vent.as_ref())
        .map(|r| r.loft_class());
    let elements = collect_elements(model);

    // An element is protected when any same-family row it matches is met;
    // rows of different quantities form the alternative paths.
    let protected: Vec<bool> = elements
        .iter()
        .map(|element| {
            let family = family_of_element(element);
            rules.family_tables(family).any(|table| {
                table.rows.iter().any(|row| {
                    element.matches(row, loft) == Some(true)
                        && element
                            .measure(table.quantity)
                            .is_some_and(|m| m >= row.required)
                })
            })
        })
        .collect();

    let mut results = Vec::new();
    for family in [Family::Roof, Family::Walls, Family::Windows] {
        for table in rules.family_tables(family) {
            for (index, row) in table.rows.iter().enumerate() {
                let rule_id = format!("{}.{index:02}", table.id);
                let mut matched = Vec::new();
                let mut undecidable = false;
                for (e_idx, element) in elements.iter().enumerate() {
                    if family_of_element(element) != family {
                        continue;
                    }
                    match element.matches(row, loft) {
                        Some(true) => matched.push(e_idx),
                        Some(false) => {}
                        None => undecidable = true,
                    }
                }
                let result = if matched.is_empty() {
                    let detail = if undecidable {
                        "matching element present but loft ventilation state undeclared"
                    } else {
                        "no matching element"
                    };
                    RuleResult::new(&rule_id, family, Verdict::NotApplicable, &table.citation)
                        .with_detail(detail)
                } else {
                    let worst = matched
                        .iter()
                        .filter_map(|&i| elements[i].measure(table.quantity))
                        .fold(f64::MAX, f64::min);
                    let all_protected = matched.iter().all(|&i| protected[i]);
                    let failing: Vec<&str> = matched
                        .iter()
                        .filter(|&&i| !protected[i])
                        .map(|&i| elements[i].label.as_str())
                        .collect();
                    let mut result = RuleResult::new(
                        &rule_id,
                        family,
                        pass_if(all_protected),
                        &table.citation,
                    )
                    .with_values(worst, row.required);
                    if !failing.is_empty() {
                        result = result.with_detail(format!("unprotected: {}", failing.join(", ")));
                    } else if worst < row.required {
                        result = result.with_detail("met through an alternative protection path");
                    }
                    result
                };
                results.push(result);
            }
        }
    }
    results
}

/// Water heating per heater kind plus the sizing tables.
pub fn check_water_heating(
    spec: Option<&WaterHeaterSpec>,
    dwelling_rooms: Option<u32>,
    rules: &RuleSet,
) -> Vec<RuleResult> {
    let mut results = Vec::new();
    match spec {
        None => {
            results.push(
                RuleResult::new(
                    "water_heater.declared",
                    Family::WaterHeater,
                    Verdict::NotApplicable,
                    "Water heating: a compliant heater must be declared",
                )
                .with_detail("no water heater declaration"),
            );
        }
        Some(WaterHeaterSpec::Solar {
            annual_kwh_per_m2,
            storage_l_per_m2,
            ..
        }) => {
            results.push(
                RuleResult::new(
                    "water_heater.solar.production",
                    Family::WaterHeater,
                    pass_if(*annual_kwh_per_m2 >= SOLAR_WH_MIN_KWH_M2),
                    "Solar water heating: conventional annual production of at least \
                     700 kWh per square metre of collector",
                )
                .with_values(*annual_kwh_per_m2, SOLAR_WH_MIN_KWH_M2),
            );
            let (lo, hi) = SOLAR_WH_STORAGE_L_M2;
            results.push(
                RuleResult::new(
                    "water_heater.solar.storage",
                    Family::WaterHeater,
                    pass_if((lo..=hi).contains(storage_l_per_m2)),
                    "Solar water heating: storage between 60 and 120 litres per square \
                     metre of collector",
                )
                .with_values(*storage_l_per_m2, lo)
                .with_detail(format!("allowed range {lo:.0}-{hi:.0} L/m²")),
            );
        }
        Some(WaterHeaterSpec::Electric {
            certified,
            instant,
            three_position_switch,
            ..
        }) => {
            results.push(
                RuleResult::new(
                    "water_heater.electric.certified",
                    Family::WaterHeater,
                    pass_if(*certified),
                    "Electric water heating: the appliance must carry the conformity mark",
                )
                .with_detail(if *certified { "certified" } else { "not certified" }),
            );
            results.push(
                RuleResult::new(
                    "water_heater.electric.storage_type",
                    Family::WaterHeater,
                    pass_if(!*instant),
                    "Electric water heating: instant heaters are excluded",
                )
                .with_detail(if *instant {
                    "instant heater"
                } else {
                    "storage heater"
                }),
            );
            results.push(
                RuleResult::new(
                    "water_heater.electric.switch",
                    Family::WaterHeater,
                    pass_if(*three_position_switch),
                    "Electric water heating: a three-position off-peak switch is required",
                )
                .with_detail(if *three_position_switch {
                    "switch present"
                } else {
                    "switch missing"
                }),
            );
        }
        Some(WaterHeaterSpec::Gas { certified, flue_outlet }) => {
            results.push(
                RuleResult::new(
                    "water_heater.gas.certified",
                    Family::WaterHeater,
                    pass_if(*certified),
                    "Gas water heating: the appliance must carry the conformity mark",
                )
                .with_detail(if *certified { "certified" } else { "not certified" }),
            );
            results.push(
                RuleResult::new(
                    "water_heater.gas.flue",
                    Family::WaterHeater,
                    pass_if(*flue_outlet),
                    "Gas water heating: combustion products must vent through a flue",
                )
                .with_detail(if *flue_outlet {
                    "flue outlet present"
                } else {
                    "flue outlet missing"
                }),
            );
        }
    }

    for table in rules.family_tables(Family::WaterHeater) {
        for (index, row) in table.rows.iter().enumerate() {
            let rule_id = format!("{}.{index:02}", table.id);
            let applicable = dwelling_rooms.is_some() && row.rooms == dwelling_rooms;
            let measured = match (table.quantity, spec) {
                (Quantity::CollectorM2, Some(WaterHeaterSpec::Solar { collector_area_m2, .. })) => {
                    Some(*collector_area_m2)
                }
                (Quantity::CapacityL, Some(WaterHeaterSpec::Electric { capacity_l, .. })) => {
                    Some(*capacity_l)
                }
                _ => None,
            };
            let result = match (applicable, measured) {
                (true, Some(m)) => RuleResult::new(
                    &rule_id,
                    Family::WaterHeater,
                    pass_if(m >= row.required),
                    &table.citation,
                )
                .with_values(m, row.required),
                (true, None) => RuleResult::new(
                    &rule_id,
                    Family::WaterHeater,
                    Verdict::NotApplicable,
                    &table.citation,
                )
                .with_detail("heater kind does not use this sizing table"),
                (false, _) => RuleResult::new(
                    &rule_id,
                    Family::WaterHeater,
                    Verdict::NotApplicable,
                    &table.citation,
                )
                .with_detail("dwelling size does not select this row"),
            };
            results.push(result);
        }
    }
    results
}

/// Optional air-conditioning package.
pub fn check_ac_option(spec: Option<&AcSpec>) -> Vec<RuleResult> {
    let cop_citation = "Air conditioning: cooling efficiency of at least 2.5 for window \
                        units and 3.0 for split systems";
    let renewal_citation = "Air conditioning: mechanically controlled air renewal of \
                            25 m³/h per conditioned room";
    let maintenance_citation = "Air conditioning: a maintenance contract must be in place";
    let Some(s) = spec else {
        return vec![
            RuleResult::new(
                "air_conditioning.cop",
                Family::AirConditioning,
                Verdict::NotApplicable,
                cop_citation,
            )
            .with_detail("no air conditioning declared"),
            RuleResult::new(
                "air_conditioning.renewal",
                Family::AirConditioning,
                Verdict::NotApplicable,
                renewal_citation,
            )
            .with_detail("no air conditioning declared"),
            RuleResult::new(
                "air_conditioning.maintenance",
                Family::AirConditioning,
                Verdict::NotApplicable,
                maintenance_citation,
            )
            .with_detail("no air conditioning declared"),
        ];
    };
    let min_cop = match s.unit {
        AcUnitKind::Window => MIN_COP_WINDOW,
        AcUnitKind::Split => MIN_COP_SPLIT,
    };
    vec![
        RuleResult::new(
            "air_conditioning.cop",
            Family::AirConditioning,
            pass_if(s.cop >= min_cop),
            cop_citation,
        )
        .with_values(s.cop, min_cop),
        RuleResult::new(
            "air_conditioning.renewal",
            Family::AirConditioning,
            pass_if(s.mechanical_renewal_m3h >= MIN_MECHANICAL_RENEWAL_M3H),
            renewal_citation,
        )
        .with_values(s.mechanical_renewal_m3h, MIN_MECHANICAL_RENEWAL_M3H),
        RuleResult::new(
            "air_conditioning.maintenance",
            Family::AirConditioning,
            pass_if(s.maintenance_contract),
            maintenance_citation,
        )
        .with_detail(if s.maintenance_contract {
            "contract present"
        } else {
            "contract missing"
        }),
    ]
}

/// Evaluates every rule family and returns the ordered report.
pub fn evaluate(model: &BuildingModel, rules: &RuleSet) -> ComplianceReport {
    let meta = model.compliance.clone().unwrap_or_default();
    let mut results = Vec::new();
    results.extend(check_siting(meta.siting.as_ref()));
    results.extend(check_solar_protection(model, rules));
    results.extend(check_roof_vent(meta.roof_vent.as_ref()));
    results.extend(check_cross_ventilation(meta.cross_ventilation.as_ref()));
    results.extend(check_fan_wiring(&meta.fan_wiring));
    results.extend(check_water_heating(
        meta.water_heater.as_ref(),
        meta.dwelling_rooms,
        rules,
    ));
    results.extend(check_ac_option(meta.air_conditioning.as_ref()));

    ComplianceReport {
        dwelling: model.name.clone(),
        results,
        notes: vec![
            "interior openings are compared against the smaller of the two exterior openings"
                .to_string(),
            "overhang and insulation count as alternative protection paths for opaque elements"
                .to_string(),
        ],
    }
}
