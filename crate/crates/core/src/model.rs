//! Building description: zones, layered constructions, surfaces, glazing,
//! airflow links and site data.
//!
//! A [`BuildingModel`] is the geometric and physical ground truth consumed by
//! every other module. Models are loaded from a JSON document that mirrors the
//! structs below field-for-field (see `schema/building.schema.json`), then
//! checked by [`validate`]. All types are immutable after validation and safe
//! to share read-only across concurrent scenario runs.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ecodom::ComplianceMeta;

#[derive(Debug, Error)]
pub enum ModelError {
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
    #[error("model {name:?} is invalid:\n{}", format_violations(violations))]
    Invalid {
        name: String,
        violations: Vec<Violation>,
    },
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// One broken invariant, naming the offending entity and the rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

/// Homogeneous material with constant thermal properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    /// W/(m·K)
    pub conductivity: f64,
    /// kg/m³
    pub density: f64,
    /// J/(kg·K)
    pub specific_heat: f64,
}

/// One slab of a construction, exterior side first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub material: String,
    /// m
    pub thickness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Construction {
    pub name: String,
    /// Ordered exterior-first.
    pub layers: Vec<Layer>,
    /// Solar absorptivity of the exterior face (surface colour), 0-1.
    pub exterior_absorptivity: f64,
    /// Longwave emissivity of the exterior face, 0-1.
    pub exterior_emissivity: f64,
}

/// Horizontal overhang protecting a wall or window.
///
/// `depth_d` is the horizontal projection, `height_h` the height of the
/// protected element and `gap_a` the vertical offset between the overhang and
/// the top of the protected element (0 for walls).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverhangGeometry {
    pub depth_d: f64,
    pub height_h: f64,
    #[serde(default)]
    pub gap_a: f64,
}

impl OverhangGeometry {
    /// d/h, the wall-protection ratio.
    pub fn ratio_d_h(&self) -> f64 {
        self.depth_d / self.height_h
    }

    /// d/(2a+h), the window-protection ratio (equals d/h when the gap is 0).
    pub fn ratio_d_2a_h(&self) -> f64 {
        self.depth_d / (2.0 * self.gap_a + self.height_h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Boundary {
    /// Exposed to outdoor air and sun.
    Exterior,
    /// Shared with another zone of the model.
    Adjacent { zone: String },
    /// Ground contact, treated as adiabatic.
    Ground,
}

/// Opaque envelope or partition element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub id: String,
    /// m²
    pub area: f64,
    /// Outward normal, degrees clockwise from North.
    pub azimuth: f64,
    /// Degrees from horizontal: 0 = flat roof, 90 = wall, 180 = floor facing down.
    pub tilt: f64,
    pub construction: String,
    pub boundary: Boundary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overhang: Option<OverhangGeometry>,
    /// Zone this surface belongs to (its interior side).
    pub interior_zone: String,
}

impl Surface {
    /// Roofs are surfaces tilted up to 45 degrees from horizontal; anything
    /// steeper counts as a wall.
    pub fn is_roof(&self) -> bool {
        self.tilt <= 45.0
    }
}

/// Transparent aperture hosted on a surface; inherits its azimuth and tilt.
///
/// Conduction through glazing is a single U·A path between zone air and
/// outdoor air (no thermal mass); solar transmission feeds the zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Glazing {
    pub id: String,
    pub host_surface: String,
    /// m²
    pub area: f64,
    /// Normal solar transmittance, 0-1.
    pub solar_transmittance: f64,
    /// W/(m²·K), air-to-air.
    pub u_value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overhang: Option<OverhangGeometry>,
    /// Extra solar reduction by venetian blinds or strip devices, 0-1
    /// (1 = no device).
    #[serde(default = "one")]
    pub shading_multiplier: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Conditioning {
    #[default]
    None,
    /// Idealised cooling clamping zone air at the setpoint while scheduled.
    InfinitePower {
        setpoint_c: f64,
        /// Hours of day (0-23) during which the clamp is active.
        on_hours: Vec<u8>,
    },
}

impl Conditioning {
    pub fn active_at(&self, hour: usize) -> Option<f64> {
        match self {
            Conditioning::None => None,
            Conditioning::InfinitePower {
                setpoint_c,
                on_hours,
            } => on_hours
                .contains(&((hour % 24) as u8))
                .then_some(*setpoint_c),
        }
    }
}

/// Hourly internal charges of a zone over one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSchedule {
    /// W, per hour of day.
    pub sensible_w: [f64; 24],
    /// kg/s of water vapour, per hour of day.
    pub moisture_kg_s: [f64; 24],
    /// Occupant count, per hour of day.
    pub occupants: [f64; 24],
}

impl GainSchedule {
    pub fn zero() -> Self {
        GainSchedule {
            sensible_w: [0.0; 24],
            moisture_kg_s: [0.0; 24],
            occupants: [0.0; 24],
        }
    }
}

impl Default for GainSchedule {
    fn default() -> Self {
        Self::zero()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    /// m³
    pub volume: f64,
    /// m²
    pub floor_area: f64,
    #[serde(default)]
    pub internal_gains: GainSchedule,
    #[serde(default)]
    pub conditioning: Conditioning,
    /// Declares a zone as intentionally disconnected from the link graph.
    #[serde(default)]
    pub sealed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LinkKind {
    /// Small leakage path, ṁ = C·ΔPⁿ.
    Crack {
        /// kg/(s·Paⁿ) at reference density 1.2 kg/m³.
        flow_coefficient: f64,
        /// Flow exponent, 0.5 (orifice) to 1.0 (laminar).
        exponent: f64,
    },
    /// Door or window sized aperture with height-resolved pressure.
    LargeOpening {
        /// m
        width: f64,
        /// m
        height: f64,
        discharge_coefficient: f64,
        /// A panel occupants operate: such apertures participate in
        /// permeability scaling and are shut during hours when a zone on
        /// either side is being conditioned.
        #[serde(default)]
        openable: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LinkEnd {
    /// Outdoor side; the facade azimuth selects the wind pressure coefficient.
    Exterior { facade_azimuth: f64 },
    Zone { zone: String },
}

impl LinkEnd {
    pub fn zone_id(&self) -> Option<&str> {
        match self {
            LinkEnd::Zone { zone } => Some(zone),
            LinkEnd::Exterior { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirflowLink {
    pub id: String,
    pub kind: LinkKind,
    pub from: LinkEnd,
    pub to: LinkEnd,
    /// Height of the link centre above the pressure datum (ground), m.
    pub mid_height: f64,
}

impl AirflowLink {
    pub fn is_exterior(&self) -> bool {
        matches!(self.from, LinkEnd::Exterior { .. }) || matches!(self.to, LinkEnd::Exterior { .. })
    }

    pub fn is_interzone(&self) -> bool {
        !self.is_exterior()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    /// Degrees, south negative.
    pub latitude_deg: f64,
    /// Degrees, east positive.
    pub longitude_deg: f64,
    /// Ground reflectance for the tilted-surface solar model, 0-1.
    pub ground_albedo: f64,
}

/// Reporting metadata only; thermal inertia emerges from the layer data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureClass {
    Light,
    Heavy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingModel {
    pub name: String,
    pub site: Site,
    pub structure_class: StructureClass,
    pub materials: Vec<Material>,
    pub constructions: Vec<Construction>,
    pub zones: Vec<Zone>,
    pub surfaces: Vec<Surface>,
    #[serde(default)]
    pub glazings: Vec<Glazing>,
    #[serde(default)]
    pub links: Vec<AirflowLink>,
    /// Prescription-check declarations (opening areas per facade, water
    /// heater, AC, siting); absent for pure simulation models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compliance: Option<ComplianceMeta>,
}

impl BuildingModel {
    pub fn from_file(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let model: BuildingModel =
            serde_json::from_str(&text).map_err(|source| ModelError::Parse {
                path: path.display().to_string(),
                source,
            })?;
        let violations = validate(&model);
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(ModelError::Invalid {
                name: model.name,
                violations,
            })
        }
    }

    pub fn material(&self, name: &str) -> Option<&Material> {
        self.materials.iter().find(|m| m.name == name)
    }

    pub fn construction(&self, name: &str) -> Option<&Construction> {
        self.constructions.iter().find(|c| c.name == name)
    }

    pub fn zone(&self, id: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.id == id)
    }

    pub fn zone_index(&self, id: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.id == id)
    }

    pub fn surface(&self, id: &str) -> Option<&Surface> {
        self.surfaces.iter().find(|s| s.id == id)
    }

    pub fn surface_index(&self, id: &str) -> Option<usize> {
        self.surfaces.iter().position(|s| s.id == id)
    }

    /// Glazed area hosted on the given surface, m².
    pub fn glazed_area_on(&self, surface_id: &str) -> f64 {
        self.glazings
            .iter()
            .filter(|g| g.host_surface == surface_id)
            .map(|g| g.area)
            .sum()
    }

    /// Opaque area of a surface once its glazing is subtracted, m².
    pub fn opaque_area(&self, surface: &Surface) -> f64 {
        (surface.area - self.glazed_area_on(&surface.id)).max(0.0)
    }

    /// Conduction U-value of a construction without surface films, W/(m²·K).
    pub fn construction_conductance(&self, construction: &Construction) -> f64 {
        let resistance: f64 = construction
            .layers
            .iter()
            .filter_map(|l| {
                self.material(&l.material)
                    .map(|m| l.thickness / m.conductivity)
            })
            .sum();
        if resistance > 0.0 {
            1.0 / resistance
        } else {
            f64::INFINITY
        }
    }

    /// Method form of [`validate`].
    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }

    /// Thickness in cm of layers made of insulating material
    /// (conductivity ≤ 0.065 W/m·K).
    pub fn insulation_thickness_cm(&self, construction: &Construction) -> f64 {
        construction
            .layers
            .iter()
            .filter_map(|l| {
                self.material(&l.material)
                    .filter(|m| m.conductivity <= 0.065)
                    .map(|_| l.thickness * 100.0)
            })
            .sum()
    }
}

/// Checks every type invariant and reference of a model.
///
/// Violations are data, not failures: an empty list means the model is
/// simulation-ready and every accessor used by the solvers is total.
pub fn validate(model: &BuildingModel) -> Vec<Violation> {
    let mut v: Vec<Violation> = Vec::new();
    let mut push = |entity: &str, rule: String| {
        v.push(Violation {
            entity: entity.to_string(),
            rule,
        });
    };

    if !(-90.0..=90.0).contains(&model.site.latitude_deg) {
        push("site", "latitude must be in [-90, 90]".into());
    }
    if !(0.0..=1.0).contains(&model.site.ground_albedo) {
        push("site", "ground_albedo must be in [0, 1]".into());
    }

    let mut material_names = HashSet::new();
    for m in &model.materials {
        let entity = format!("material {}", m.name);
        if !material_names.insert(m.name.clone()) {
            push(&entity, "duplicate material name".into());
        }
        for (value, field) in [
            (m.conductivity, "conductivity"),
            (m.density, "density"),
            (m.specific_heat, "specific_heat"),
        ] {
            if !(value > 0.0) {
                push(&entity, format!("{field} must be strictly positive"));
            }
        }
    }

    let mut construction_names = HashSet::new();
    for c in &model.constructions {
        let entity = format!("construction {}", c.name);
        if !construction_names.insert(c.name.clone()) {
            push(&entity, "duplicate construction name".into());
        }
        if c.layers.is_empty() {
            push(&entity, "must have at least one layer".into());
        }
        for layer in &c.layers {
            if !(layer.thickness > 0.0) {
                push(&entity, format!("layer {} thickness must be > 0", layer.material));
            }
            if model.material(&layer.material).is_none() {
                push(&entity, format!("unknown material {:?}", layer.material));
            }
        }
        if !(0.0..=1.0).contains(&c.exterior_absorptivity) {
            push(&entity, "exterior_absorptivity must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&c.exterior_emissivity) {
            push(&entity, "exterior_emissivity must be in [0, 1]".into());
        }
    }

    let mut zone_ids = HashSet::new();
    for z in &model.zones {
        let entity = format!("zone {}", z.id);
        if !zone_ids.insert(z.id.clone()) {
            push(&entity, "duplicate zone id".into());
        }
        if !(z.volume > 0.0) {
            push(&entity, "volume must be > 0".into());
        }
        if !(z.floor_area > 0.0) {
            push(&entity, "floor_area must be > 0".into());
        }
        if z.internal_gains.sensible_w.iter().any(|&g| g < 0.0)
            || z.internal_gains.moisture_kg_s.iter().any(|&g| g < 0.0)
            || z.internal_gains.occupants.iter().any(|&g| g < 0.0)
        {
            push(&entity, "internal gains must be non-negative".into());
        }
        if let Conditioning::InfinitePower { on_hours, .. } = &z.conditioning {
            if on_hours.iter().any(|&h| h > 23) {
                push(&entity, "conditioning on_hours must be in 0-23".into());
            }
        }
    }

    let mut surface_ids = HashSet::new();
    for s in &model.surfaces {
        let entity = format!("surface {}", s.id);
        if !surface_ids.insert(s.id.clone()) {
            push(&entity, "duplicate surface id".into());
        }
        if !(s.area > 0.0) {
            push(&entity, "area must be > 0".into());
        }
        if !(0.0..360.0).contains(&s.azimuth) {
            push(&entity, "azimuth must be in [0, 360)".into());
        }
        if !(0.0..=180.0).contains(&s.tilt) {
            push(&entity, "tilt must be in [0, 180]".into());
        }
        if model.construction(&s.construction).is_none() {
            push(&entity, format!("unknown construction {:?}", s.construction));
        }
        if model.zone(&s.interior_zone).is_none() {
            push(&entity, format!("unknown interior zone {:?}", s.interior_zone));
        }
        if let Boundary::Adjacent { zone } = &s.boundary {
            if model.zone(zone).is_none() {
                push(&entity, format!("unknown adjacent zone {:?}", zone));
            } else if *zone == s.interior_zone {
                push(&entity, "adjacent zone must differ from interior zone".into());
            }
        }
        if let Some(o) = &s.overhang {
            check_overhang(&entity, o, &mut push);
        }
    }

    let mut glazing_ids = HashSet::new();
    for g in &model.glazings {
        let entity = format!("glazing {}", g.id);
        if !glazing_ids.insert(g.id.clone()) {
            push(&entity, "duplicate glazing id".into());
        }
        if !(g.area > 0.0) {
            push(&entity, "area must be > 0".into());
        }
        match model.surface(&g.host_surface) {
            None => push(&entity, format!("unknown host surface {:?}", g.host_surface)),
            Some(host) => {
                if g.area > host.area {
                    push(&entity, "area must not exceed host surface area".into());
                }
            }
        }
        if !(0.0..=1.0).contains(&g.solar_transmittance) {
            push(&entity, "solar_transmittance must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&g.shading_multiplier) {
            push(&entity, "shading_multiplier must be in [0, 1]".into());
        }
        if !(g.u_value > 0.0) {
            push(&entity, "u_value must be > 0".into());
        }
        if let Some(o) = &g.overhang {
            check_overhang(&entity, o, &mut push);
        }
    }

    // Total glazing per surface must fit inside the surface.
    for s in &model.surfaces {
        let glazed = model.glazed_area_on(&s.id);
        if glazed > s.area + 1e-9 {
            push(
                &format!("surface {}", s.id),
                format!("glazed area {glazed:.3} m² exceeds surface area {:.3} m²", s.area),
            );
        }
    }

    let mut link_ids = HashSet::new();
    for l in &model.links {
        let entity = format!("link {}", l.id);
        if !link_ids.insert(l.id.clone()) {
            push(&entity, "duplicate link id".into());
        }
        match &l.kind {
            LinkKind::Crack {
                flow_coefficient,
                exponent,
            } => {
                if !(*flow_coefficient > 0.0) {
                    push(&entity, "flow_coefficient must be > 0".into());
                }
                if !(0.5..=1.0).contains(exponent) {
                    push(&entity, "exponent must be in [0.5, 1.0]".into());
                }
            }
            LinkKind::LargeOpening {
                width,
                height,
                discharge_coefficient,
                ..
            } => {
                if !(*width > 0.0) {
                    push(&entity, "width must be > 0".into());
                }
                if !(*height > 0.0) {
                    push(&entity, "height must be > 0".into());
                }
                if !(*discharge_coefficient > 0.0 && *discharge_coefficient <= 1.0) {
                    push(&entity, "discharge_coefficient must be in (0, 1]".into());
                }
            }
        }
        for end in [&l.from, &l.to] {
            if let LinkEnd::Zone { zone } = end {
                if model.zone(zone).is_none() {
                    push(&entity, format!("unknown zone {zone:?}"));
                }
            }
        }
        match (&l.from, &l.to) {
            (LinkEnd::Exterior { .. }, LinkEnd::Exterior { .. }) => {
                push(&entity, "from and to cannot both be exterior".into());
            }
            (LinkEnd::Zone { zone: a }, LinkEnd::Zone { zone: b }) if a == b => {
                push(&entity, "from and to must differ".into());
            }
            _ => {}
        }
    }

    // Every zone must be reachable from outdoors through the link graph, or
    // be explicitly flagged sealed.
    let reachable = zones_reachable_from_exterior(model);
    for z in &model.zones {
        if !z.sealed && !reachable.contains(z.id.as_str()) {
            push(
                &format!("zone {}", z.id),
                "not reachable from exterior through the link graph and not flagged sealed".into(),
            );
        }
    }

    v
}

fn check_overhang(entity: &str, o: &OverhangGeometry, push: &mut impl FnMut(&str, String)) {
    if o.depth_d < 0.0 {
        push(entity, "overhang depth_d must be >= 0".into());
    }
    if !(o.height_h > 0.0) {
        push(entity, "overhang height_h must be > 0".into());
    }
    if o.gap_a < 0.0 {
        push(entity, "overhang gap_a must be >= 0".into());
    }
}

fn zones_reachable_from_exterior(model: &BuildingModel) -> HashSet<&str> {
    let mut adjacency: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut frontier: VecDeque<&str> = VecDeque::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for l in &model.links {
        match (l.from.zone_id(), l.to.zone_id()) {
            (Some(a), Some(b)) => {
                adjacency.entry(a).or_default().push(b);
                adjacency.entry(b).or_default().push(a);
            }
            (Some(z), None) | (None, Some(z)) => {
                if seen.insert(z) {
                    frontier.push_back(z);
                }
            }
            (None, None) => {}
        }
    }
    while let Some(z) = frontier.pop_front() {
        if let Some(neighbours) = adjacency.get(z) {
            for n in neighbours {
                if seen.insert(n) {
                    frontier.push_back(n);
                }
            }
        }
    }
    seen
}
