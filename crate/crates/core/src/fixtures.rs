//! Reference dwellings, design days, rule tables and the compliance corpus.
//!
//! Everything here is generated in code and mirrored to the `fixtures/`
//! directory by [`write_all`]; a test guards against drift so the checked-in
//! files always match these constructors.

use std::path::Path;

use crate::ecodom::{
    AcSpec, AcUnitKind, ColorClass, ComplianceMeta, CrossVentSpec, FanWiring, Family, InertiaClass,
    LoftClass, OrientationClass, Quantity, RoofVentSpec, RuleRow, RuleSet, RuleTable, SitingSpec,
    Verdict, WaterHeaterSpec,
};
use crate::model::{
    AirflowLink, Boundary, BuildingModel, Conditioning, Construction, Glazing, Layer, LinkEnd,
    LinkKind, Material, OverhangGeometry, Site, StructureClass, Surface, Zone,
};
use crate::weather::{write_weather_csv, WeatherRecord, WeatherSequence};

fn material(name: &str, k: f64, rho: f64, c: f64) -> Material {
    Material {
        name: name.to_string(),
        conductivity: k,
        density: rho,
        specific_heat: c,
    }
}

fn palette() -> Vec<Material> {
    vec![
        material("steel_sheet", 50.0, 7800.0, 450.0),
        material("plasterboard", 0.25, 900.0, 1000.0),
        material("concrete", 1.75, 2300.0, 920.0),
        material("polystyrene", 0.04, 25.0, 1400.0),
        material("timber", 0.14, 500.0, 1600.0),
    ]
}

fn construction(name: &str, layers: &[(&str, f64)], absorptivity: f64) -> Construction {
    Construction {
        name: name.to_string(),
        layers: layers
            .iter()
            .map(|&(material, thickness)| Layer {
                material: material.to_string(),
                thickness,
            })
            .collect(),
        exterior_absorptivity: absorptivity,
        exterior_emissivity: 0.9,
    }
}

fn zone(id: &str, volume: f64, floor_area: f64) -> Zone {
    Zone {
        id: id.to_string(),
        volume,
        floor_area,
        internal_gains: Default::default(),
        conditioning: Conditioning::None,
        sealed: false,
    }
}

#[allow(clippy::too_many_arguments)]
fn surface(
    id: &str,
    area: f64,
    azimuth: f64,
    tilt: f64,
    construction: &str,
    boundary: Boundary,
    interior_zone: &str,
) -> Surface {
    Surface {
        id: id.to_string(),
        area,
        azimuth,
        tilt,
        construction: construction.to_string(),
        boundary,
        overhang: None,
        interior_zone: interior_zone.to_string(),
    }
}

fn glazing(id: &str, host: &str, area: f64) -> Glazing {
    Glazing {
        id: id.to_string(),
        host_surface: host.to_string(),
        area,
        solar_transmittance: 0.85,
        u_value: 5.8,
        overhang: None,
        shading_multiplier: 1.0,
    }
}

fn opening(
    id: &str,
    width: f64,
    height: f64,
    cd: f64,
    from: LinkEnd,
    to: LinkEnd,
    mid_height: f64,
) -> AirflowLink {
    AirflowLink {
        id: id.to_string(),
        kind: LinkKind::LargeOpening {
            width,
            height,
            discharge_coefficient: cd,
            openable: true,
        },
        from,
        to,
        mid_height,
    }
}

fn crack(id: &str, coefficient: f64, from: LinkEnd, to: LinkEnd, mid_height: f64) -> AirflowLink {
    AirflowLink {
        id: id.to_string(),
        kind: LinkKind::Crack {
            flow_coefficient: coefficient,
            exponent: 0.65,
        },
        from,
        to,
        mid_height,
    }
}

fn exterior(azimuth: f64) -> LinkEnd {
    LinkEnd::Exterior {
        facade_azimuth: azimuth,
    }
}

fn in_zone(id: &str) -> LinkEnd {
    LinkEnd::Zone {
        zone: id.to_string(),
    }
}

fn reunion_site() -> Site {
    Site {
        latitude_deg: -20.9,
        longitude_deg: 55.5,
        ground_albedo: 0.2,
    }
}

/// Minimal one-zone calibration box: a sealed 30 m³ room under a 10 m² flat
/// concrete roof, used by the conduction and moisture unit checks.
pub fn single_wall_box() -> BuildingModel {
    let model = BuildingModel {
        name: "single_wall_box".to_string(),
        site: reunion_site(),
        structure_class: StructureClass::Heavy,
        materials: vec![material("concrete", 1.75, 2300.0, 920.0)],
        constructions: vec![construction("concrete_slab", &[("concrete", 0.2)], 0.6)],
        zones: vec![Zone {
            sealed: true,
            ..zone("box", 30.0, 10.0)
        }],
        surfaces: vec![surface(
            "roof",
            10.0,
            0.0,
            0.0,
            "concrete_slab",
            Boundary::Exterior,
            "box",
        )],
        glazings: vec![],
        links: vec![],
        compliance: None,
    };
    debug_assert!(model.validate().is_empty());
    model
}

/// Shared three-zone plan: a living room flanked by two bedrooms, with
/// north/south openings through the living room and east windows in the
/// bedrooms.
fn three_zone_shell(
    name: &str,
    structure: StructureClass,
    roof_construction: &str,
    wall_construction: &str,
    partition_construction: &str,
    floor_construction: &str,
) -> BuildingModel {
    let surfaces = vec![
        surface("living_north_wall", 15.0, 0.0, 90.0, wall_construction, Boundary::Exterior, "living"),
        surface("living_west_wall", 12.5, 270.0, 90.0, wall_construction, Boundary::Exterior, "living"),
        surface("living_south_wall", 15.0, 180.0, 90.0, wall_construction, Boundary::Exterior, "living"),
        surface("living_roof", 30.0, 0.0, 5.0, roof_construction, Boundary::Exterior, "living"),
        surface("living_floor", 30.0, 0.0, 180.0, floor_construction, Boundary::Ground, "living"),
        surface(
            "living_bed1_partition",
            10.0,
            90.0,
            90.0,
            partition_construction,
            Boundary::Adjacent {
                zone: "bed1".to_string(),
            },
            "living",
        ),
        surface(
            "living_bed2_partition",
            10.0,
            90.0,
            90.0,
            partition_construction,
            Boundary::Adjacent {
                zone: "bed2".to_string(),
            },
            "living",
        ),
        surface("bed1_north_wall", 7.5, 0.0, 90.0, wall_construction, Boundary::Exterior, "bed1"),
        surface("bed1_east_wall", 10.0, 90.0, 90.0, wall_construction, Boundary::Exterior, "bed1"),
        surface("bed1_roof", 12.0, 0.0, 5.0, roof_construction, Boundary::Exterior, "bed1"),
        surface("bed1_floor", 12.0, 0.0, 180.0, floor_construction, Boundary::Ground, "bed1"),
        surface("bed2_south_wall", 7.5, 180.0, 90.0, wall_construction, Boundary::Exterior, "bed2"),
        surface("bed2_east_wall", 10.0, 90.0, 90.0, wall_construction, Boundary::Exterior, "bed2"),
        surface("bed2_roof", 12.0, 0.0, 5.0, roof_construction, Boundary::Exterior, "bed2"),
        surface("bed2_floor", 12.0, 0.0, 180.0, floor_construction, Boundary::Ground, "bed2"),
    ];
    let glazings = vec![
        glazing("living_north_win", "living_north_wall", 2.0),
        glazing("living_south_win", "living_south_wall", 2.0),
        glazing("bed1_east_win", "bed1_east_wall", 1.2),
        glazing("bed2_east_win", "bed2_east_wall", 1.2),
    ];
    let links = vec![
        opening("living_north_door", 0.9, 2.0, 0.65, exterior(0.0), in_zone("living"), 1.0),
        opening("living_south_opening", 1.0, 1.0, 0.6, in_zone("living"), exterior(180.0), 1.5),
        opening("bed1_door", 0.8, 2.0, 0.65, in_zone("living"), in_zone("bed1"), 1.0),
        opening("bed2_door", 0.8, 2.0, 0.65, in_zone("living"), in_zone("bed2"), 1.0),
        opening("bed1_east_opening", 0.8, 1.0, 0.6, in_zone("bed1"), exterior(90.0), 1.5),
        opening("bed2_east_opening", 0.8, 1.0, 0.6, in_zone("bed2"), exterior(90.0), 1.5),
        crack("living_crack_north", 0.0008, exterior(0.0), in_zone("living"), 1.0),
        crack("living_crack_south", 0.0008, in_zone("living"), exterior(180.0), 1.0),
        crack("bed1_crack", 0.0005, exterior(90.0), in_zone("bed1"), 1.0),
        crack("bed2_crack", 0.0005, exterior(90.0), in_zone("bed2"), 1.0),
    ];
    BuildingModel {
        name: name.to_string(),
        site: reunion_site(),
        structure_class: structure,
        materials: palette(),
        constructions: vec![],
        zones: vec![
            zone("living", 75.0, 30.0),
            zone("bed1", 30.0, 12.0),
            zone("bed2", 30.0, 12.0),
        ],
        surfaces,
        glazings,
        links,
        compliance: None,
    }
}

fn overhang(d: f64, h: f64, a: f64) -> Option<OverhangGeometry> {
    Some(OverhangGeometry {
        depth_d: d,
        height_h: h,
        gap_a: a,
    })
}

fn bad_compliance_meta() -> ComplianceMeta {
    ComplianceMeta {
        dwelling_rooms: Some(3),
        siting: Some(SitingSpec {
            protected_fraction: 0.5,
            protection_width_m: 2.0,
        }),
        cross_ventilation: Some(CrossVentSpec {
            so1_m2: 3.8,
            so2_m2: 3.0,
            si1_m2: 1.6,
            si2_m2: 1.6,
            sp1_m2: 22.5,
            sp2_m2: 22.5,
            facade1_azimuth_deg: Some(0.0),
            facade2_azimuth_deg: Some(180.0),
        }),
        roof_vent: Some(RoofVentSpec {
            opening_area_m2: 4.2,
            roof_area_m2: 42.0,
        }),
        water_heater: Some(WaterHeaterSpec::Electric {
            certified: true,
            instant: true,
            three_position_switch: false,
            capacity_l: 150.0,
        }),
        air_conditioning: None,
        fan_wiring: vec![
            FanWiring {
                room: "living".to_string(),
                ceiling_supply: true,
            },
            FanWiring {
                room: "bed1".to_string(),
                ceiling_supply: false,
            },
            FanWiring {
                room: "bed2".to_string(),
                ceiling_supply: false,
            },
        ],
    }
}

fn good_compliance_meta() -> ComplianceMeta {
    ComplianceMeta {
        dwelling_rooms: Some(3),
        siting: Some(SitingSpec {
            protected_fraction: 0.8,
            protection_width_m: 3.0,
        }),
        cross_ventilation: Some(CrossVentSpec {
            so1_m2: 5.7,
            so2_m2: 5.7,
            si1_m2: 5.7,
            si2_m2: 5.7,
            sp1_m2: 22.5,
            sp2_m2: 22.5,
            facade1_azimuth_deg: Some(0.0),
            facade2_azimuth_deg: Some(180.0),
        }),
        roof_vent: Some(RoofVentSpec {
            opening_area_m2: 7.6,
            roof_area_m2: 42.0,
        }),
        water_heater: Some(WaterHeaterSpec::Solar {
            annual_kwh_per_m2: 750.0,
            storage_l_per_m2: 90.0,
            collector_area_m2: 4.0,
        }),
        air_conditioning: Some(AcSpec {
            unit: AcUnitKind::Split,
            cop: 3.2,
            mechanical_renewal_m3h: 75.0,
            maintenance_contract: true,
        }),
        fan_wiring: vec![
            FanWiring {
                room: "living".to_string(),
                ceiling_supply: true,
            },
            FanWiring {
                room: "bed1".to_string(),
                ceiling_supply: true,
            },
            FanWiring {
                room: "bed2".to_string(),
                ceiling_supply: true,
            },
        ],
    }
}

/// Badly designed light-structure dwelling: dark bare sheet roof, unshaded
/// medium-coloured walls and windows, small openings, instant water heater.
pub fn individual_light() -> BuildingModel {
    let mut model = three_zone_shell(
        "individual_light",
        StructureClass::Light,
        "roof_sheet_dark",
        "wall_timber",
        "partition_board",
        "slab_floor",
    );
    model.constructions = vec![
        construction("roof_sheet_dark", &[("steel_sheet", 0.001), ("plasterboard", 0.012)], 0.9),
        construction("wall_timber", &[("timber", 0.02), ("plasterboard", 0.012)], 0.55),
        construction("partition_board", &[("plasterboard", 0.05)], 0.5),
        construction("slab_floor", &[("concrete", 0.10)], 0.6),
    ];
    // A token, far-too-shallow eave so protection monotonicity has a
    // starting point to deepen.
    if let Some(s) = model.surfaces.iter_mut().find(|s| s.id == "living_north_wall") {
        s.overhang = overhang(0.3, 2.5, 0.0);
    }
    if let Some(g) = model.glazings.iter_mut().find(|g| g.id == "living_north_win") {
        g.overhang = overhang(0.3, 1.2, 0.1);
    }
    model.compliance = Some(bad_compliance_meta());
    debug_assert!(model.validate().is_empty());
    model
}

/// The same dwelling with the full prescription package applied: light
/// colours, roof and wall insulation, deep overhangs, enlarged openings,
/// solar water heater.
pub fn individual_light_improved() -> BuildingModel {
    let mut model = three_zone_shell(
        "individual_light_improved",
        StructureClass::Light,
        "roof_sheet_insulated",
        "wall_timber_protected",
        "partition_board",
        "slab_floor",
    );
    model.constructions = vec![
        construction(
            "roof_sheet_insulated",
            &[("steel_sheet", 0.001), ("polystyrene", 0.05), ("plasterboard", 0.012)],
            0.3,
        ),
        construction(
            "wall_timber_protected",
            &[("timber", 0.02), ("polystyrene", 0.04), ("plasterboard", 0.012)],
            0.35,
        ),
        construction("partition_board", &[("plasterboard", 0.05)], 0.5),
        construction("slab_floor", &[("concrete", 0.10)], 0.6),
    ];
    apply_protection_package(&mut model);
    enlarge_openings(&mut model);
    model.compliance = Some(good_compliance_meta());
    debug_assert!(model.validate().is_empty());
    model
}

/// Badly designed heavy-structure dwelling: bare dark concrete everywhere.
pub fn individual_heavy() -> BuildingModel {
    let mut model = three_zone_shell(
        "individual_heavy",
        StructureClass::Heavy,
        "roof_slab_dark",
        "wall_concrete",
        "partition_concrete",
        "slab_floor",
    );
    model.constructions = vec![
        construction("roof_slab_dark", &[("concrete", 0.12)], 0.9),
        construction("wall_concrete", &[("concrete", 0.15)], 0.55),
        construction("partition_concrete", &[("concrete", 0.10)], 0.5),
        construction("slab_floor", &[("concrete", 0.10)], 0.6),
    ];
    let mut meta = bad_compliance_meta();
    meta.water_heater = Some(WaterHeaterSpec::Gas {
        certified: false,
        flue_outlet: false,
    });
    model.compliance = Some(meta);
    debug_assert!(model.validate().is_empty());
    model
}

/// Heavy dwelling with the prescription package: shaded light-coloured
/// walls with inside insulation that decouples the hot mass from the
/// rooms, which matters most when a bedroom is conditioned at night.
pub fn individual_heavy_improved() -> BuildingModel {
    let mut model = three_zone_shell(
        "individual_heavy_improved",
        StructureClass::Heavy,
        "roof_slab_insulated",
        "wall_concrete_insulated",
        "partition_concrete",
        "slab_floor",
    );
    model.constructions = vec![
        construction(
            "roof_slab_insulated",
            &[("polystyrene", 0.05), ("concrete", 0.12)],
            0.3,
        ),
        construction(
            "wall_concrete_insulated",
            &[("concrete", 0.15), ("polystyrene", 0.03)],
            0.35,
        ),
        construction("partition_concrete", &[("concrete", 0.10)], 0.5),
        construction("slab_floor", &[("concrete", 0.10)], 0.6),
    ];
    apply_protection_package(&mut model);
    enlarge_openings(&mut model);
    let mut meta = good_compliance_meta();
    meta.water_heater = Some(WaterHeaterSpec::Electric {
        certified: true,
        instant: false,
        three_position_switch: true,
        capacity_l: 200.0,
    });
    model.compliance = Some(meta);
    debug_assert!(model.validate().is_empty());
    model
}

/// Deep eaves on every exterior wall and code-exact window overhangs.
fn apply_protection_package(model: &mut BuildingModel) {
    for surface in &mut model.surfaces {
        if !matches!(surface.boundary, Boundary::Exterior) || surface.is_roof() {
            continue;
        }
        let depth = match OrientationClass::of_azimuth(surface.azimuth) {
            OrientationClass::North => 0.75,
            OrientationClass::East | OrientationClass::West => 1.0,
            OrientationClass::South => 0.5,
        };
        surface.overhang = overhang(depth, 2.5, 0.0);
    }
    for glazing in &mut model.glazings {
        let host_azimuth = model
            .surfaces
            .iter()
            .find(|s| s.id == glazing.host_surface)
            .map(|s| s.azimuth)
            .unwrap_or(0.0);
        let depth = match OrientationClass::of_azimuth(host_azimuth) {
            OrientationClass::North => 0.75,
            OrientationClass::East | OrientationClass::West => 0.9,
            OrientationClass::South => 0.45,
        };
        glazing.overhang = overhang(depth, 1.2, 0.15);
    }
}

/// Wider doors and window openings for night flushing.
fn enlarge_openings(model: &mut BuildingModel) {
    for link in &mut model.links {
        if let LinkKind::LargeOpening { width, .. } = &mut link.kind {
            *width *= 1.5;
        }
    }
}

/// Clone with an infinite-power cooling clamp on one zone over the night
/// schedule.
pub fn with_night_conditioning(model: &BuildingModel, zone_id: &str, setpoint_c: f64) -> BuildingModel {
    let mut model = model.clone();
    let zone = model
        .zones
        .iter_mut()
        .find(|z| z.id == zone_id)
        .expect("known zone");
    zone.conditioning = Conditioning::InfinitePower {
        setpoint_c,
        on_hours: (20..24).chain(0..6).collect(),
    };
    model
}

fn day_from_arrays(
    dry_bulb: [f64; 24],
    rh: [f64; 24],
    dni: [f64; 24],
    dhi: [f64; 24],
    wind: [f64; 24],
    wind_dir: f64,
) -> Vec<WeatherRecord> {
    (0..24)
        .map(|h| WeatherRecord {
            hour_index: h as u8,
            dry_bulb: dry_bulb[h],
            relative_humidity: rh[h],
            direct_normal: dni[h],
            diffuse_horizontal: dhi[h],
            wind_speed: wind[h],
            wind_direction: wind_dir,
        })
        .collect()
}

/// Synthesized hot-season coastal design day: warm night staying at or
/// above 26 °C, 31.5 °C afternoon peak, light breeze strengthening with
/// the sea breeze after midday.
pub fn typical_day() -> Vec<WeatherRecord> {
    let dry_bulb = [
        27.0, 26.8, 26.6, 26.4, 26.2, 26.0, 26.2, 26.8, 27.6, 28.5, 29.4, 30.2, 30.9, 31.4, 31.5,
        31.2, 30.6, 29.8, 29.0, 28.4, 28.0, 27.7, 27.4, 27.2,
    ];
    let rh = [
        80.0, 81.0, 82.0, 83.0, 84.0, 85.0, 83.0, 78.0, 73.0, 68.0, 64.0, 61.0, 59.0, 58.0, 58.0,
        59.0, 61.0, 64.0, 68.0, 72.0, 75.0, 77.0, 78.0, 79.0,
    ];
    let dni = [
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 150.0, 400.0, 600.0, 720.0, 800.0, 840.0, 840.0, 800.0,
        720.0, 600.0, 400.0, 150.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ];
    let dhi = [
        0.0, 0.0, 0.0, 0.0, 0.0, 30.0, 80.0, 120.0, 160.0, 190.0, 210.0, 220.0, 220.0, 210.0,
        190.0, 160.0, 120.0, 80.0, 30.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ];
    let wind = [
        1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.2, 1.6, 2.0, 2.5, 3.0, 3.3, 3.5, 3.5, 3.4, 3.2, 2.8, 2.4,
        2.0, 1.6, 1.3, 1.1, 1.0, 1.0,
    ];
    day_from_arrays(dry_bulb, rh, dni, dhi, wind, 30.0)
}

/// Constant conditions all day, handy for equilibrium checks.
pub fn constant_day(dry_bulb_c: f64, rh_pct: f64, wind_ms: f64) -> Vec<WeatherRecord> {
    day_from_arrays(
        [dry_bulb_c; 24],
        [rh_pct; 24],
        [0.0; 24],
        [0.0; 24],
        [wind_ms; 24],
        0.0,
    )
}

/// Steady 1 m/s northerly breeze at mild temperature: the reference
/// condition of the permeability study.
pub fn breeze_day() -> Vec<WeatherRecord> {
    constant_day(28.0, 70.0, 1.0)
}

fn row(
    orientation: Option<OrientationClass>,
    color: Option<ColorClass>,
    inertia: Option<InertiaClass>,
    loft: Option<LoftClass>,
    rooms: Option<u32>,
    required: f64,
) -> RuleRow {
    RuleRow {
        orientation,
        color,
        inertia,
        loft,
        rooms,
        required,
    }
}

/// The quantitative prescription tables, synthesized to exercise every
/// lookup dimension; the numeric cells are editable data, not code.
pub fn rule_tables() -> Vec<RuleTable> {
    use ColorClass::{Dark, Light, Medium};
    use OrientationClass::{East, North, South, West};
    let orient_rows = |required: [(ColorClass, f64); 3], orientation: OrientationClass| {
        required
            .into_iter()
            .map(move |(color, req)| row(Some(orientation), Some(color), None, None, None, req))
    };
    vec![
        RuleTable {
            id: "roof_protection".to_string(),
            family: Family::Roof,
            citation: "Roof solar protection: minimum insulation thickness by loft \
                       ventilation state and roof colour"
                .to_string(),
            quantity: Quantity::InsulationCm,
            rows: vec![
                row(None, Some(Light), None, Some(LoftClass::Ventilated), None, 2.0),
                row(None, Some(Medium), None, Some(LoftClass::Ventilated), None, 4.0),
                row(None, Some(Dark), None, Some(LoftClass::Ventilated), None, 5.0),
                row(None, Some(Light), None, Some(LoftClass::Closed), None, 4.0),
                row(None, Some(Medium), None, Some(LoftClass::Closed), None, 6.0),
                row(None, Some(Dark), None, Some(LoftClass::Closed), None, 8.0),
            ],
        },
        RuleTable {
            id: "wall_overhangs".to_string(),
            family: Family::Walls,
            citation: "Wall solar protection by horizontal overhang: minimum \
                       depth-to-height ratio by orientation and colour"
                .to_string(),
            quantity: Quantity::DOverH,
            rows: orient_rows([(Light, 0.3), (Medium, 0.5), (Dark, 0.7)], North)
                .chain(orient_rows([(Light, 0.4), (Medium, 0.6), (Dark, 0.8)], East))
                .chain(orient_rows([(Light, 0.0), (Medium, 0.2), (Dark, 0.4)], South))
                .chain(orient_rows([(Light, 0.4), (Medium, 0.6), (Dark, 0.8)], West))
                .collect(),
        },
        RuleTable {
            id: "wall_insulation".to_string(),
            family: Family::Walls,
            citation: "Wall solar protection by insulation: minimum thickness by \
                       colour and structural inertia"
                .to_string(),
            quantity: Quantity::InsulationCm,
            rows: vec![
                row(None, Some(Light), Some(InertiaClass::Light), None, None, 2.0),
                row(None, Some(Medium), Some(InertiaClass::Light), None, None, 3.0),
                row(None, Some(Dark), Some(InertiaClass::Light), None, None, 4.0),
                row(None, Some(Light), Some(InertiaClass::Heavy), None, None, 1.0),
                row(None, Some(Medium), Some(InertiaClass::Heavy), None, None, 2.0),
                row(None, Some(Dark), Some(InertiaClass::Heavy), None, None, 3.0),
            ],
        },
        RuleTable {
            id: "window_shading".to_string(),
            family: Family::Windows,
            citation: "Window solar protection: minimum overhang depth over \
                       gap-adjusted height by orientation"
                .to_string(),
            quantity: Quantity::DOver2aH,
            rows: vec![
                row(Some(North), None, None, None, None, 0.5),
                row(Some(East), None, None, None, None, 0.6),
                row(Some(South), None, None, None, None, 0.3),
                row(Some(West), None, None, None, None, 0.6),
            ],
        },
        RuleTable {
            id: "solar_water_heater".to_string(),
            family: Family::WaterHeater,
            citation: "Solar water heating: minimum collector area by dwelling size"
                .to_string(),
            quantity: Quantity::CollectorM2,
            rows: vec![
                row(None, None, None, None, Some(1), 2.0),
                row(None, None, None, None, Some(2), 3.0),
                row(None, None, None, None, Some(3), 4.0),
                row(None, None, None, None, Some(4), 4.5),
                row(None, None, None, None, Some(5), 5.0),
            ],
        },
        RuleTable {
            id: "electric_water_heater".to_string(),
            family: Family::WaterHeater,
            citation: "Electric storage water heating: minimum tank capacity by \
                       dwelling size"
                .to_string(),
            quantity: Quantity::CapacityL,
            rows: vec![
                row(None, None, None, None, Some(1), 100.0),
                row(None, None, None, None, Some(2), 150.0),
                row(None, None, None, None, Some(3), 200.0),
                row(None, None, None, None, Some(4), 250.0),
                row(None, None, None, None, Some(5), 300.0),
            ],
        },
    ]
}

pub fn rule_set() -> RuleSet {
    RuleSet::new(rule_tables()).expect("fixture tables are valid")
}

/// One hand-marked compliance example.
pub struct CorpusCase {
    pub name: String,
    pub model: BuildingModel,
    /// Rules this case pins down, with the expected verdicts.
    pub expected: Vec<(String, Verdict)>,
}

fn case(
    name: &str,
    mutate: impl FnOnce(&mut BuildingModel),
    expected: &[(&str, Verdict)],
) -> CorpusCase {
    let mut model = individual_light();
    model.name = name.to_string();
    mutate(&mut model);
    debug_assert!(model.validate().is_empty(), "corpus case {name}");
    CorpusCase {
        name: name.to_string(),
        model,
        expected: expected
            .iter()
            .map(|&(id, verdict)| (id.to_string(), verdict))
            .collect(),
    }
}

fn meta_of(model: &mut BuildingModel) -> &mut ComplianceMeta {
    model.compliance.get_or_insert_with(Default::default)
}

/// Hand-marked dwellings spanning pass, fail and boundary behaviour of
/// every rule family.
pub fn compliance_corpus() -> Vec<CorpusCase> {
    use Verdict::{Fail, NotApplicable, Pass};
    let mut cases = Vec::new();

    cases.push(case(
        "cross_vent_quarter_exact",
        |m| {
            meta_of(m).cross_ventilation = Some(CrossVentSpec {
                so1_m2: 2.75,
                so2_m2: 2.75,
                si1_m2: 2.75,
                si2_m2: 2.75,
                sp1_m2: 11.0,
                sp2_m2: 11.0,
                facade1_azimuth_deg: Some(0.0),
                facade2_azimuth_deg: Some(180.0),
            });
        },
        &[
            ("ventilation.cross.p1", Pass),
            ("ventilation.cross.p2", Pass),
            ("ventilation.cross.si1", Pass),
            ("ventilation.cross.si2", Pass),
            ("ventilation.cross.facades", Pass),
        ],
    ));
    cases.push(case(
        "cross_vent_just_under",
        |m| {
            meta_of(m).cross_ventilation = Some(CrossVentSpec {
                so1_m2: 2.6,
                so2_m2: 2.75,
                si1_m2: 2.75,
                si2_m2: 2.75,
                sp1_m2: 11.0,
                sp2_m2: 11.0,
                facade1_azimuth_deg: Some(0.0),
                facade2_azimuth_deg: Some(180.0),
            });
        },
        &[
            ("ventilation.cross.p1", Fail),
            ("ventilation.cross.p2", Pass),
            ("ventilation.cross.si1", Pass),
        ],
    ));
    cases.push(case(
        "cross_vent_choked_interior",
        |m| {
            meta_of(m).cross_ventilation = Some(CrossVentSpec {
                so1_m2: 3.0,
                so2_m2: 3.0,
                si1_m2: 0.0,
                si2_m2: 3.0,
                sp1_m2: 11.0,
                sp2_m2: 11.0,
                facade1_azimuth_deg: Some(0.0),
                facade2_azimuth_deg: Some(180.0),
            });
        },
        &[
            ("ventilation.cross.p1", Pass),
            ("ventilation.cross.si1", Fail),
            ("ventilation.cross.si2", Pass),
        ],
    ));
    cases.push(case(
        "cross_vent_same_side",
        |m| {
            let meta = meta_of(m);
            let mut spec = meta.cross_ventilation.unwrap();
            spec.facade1_azimuth_deg = Some(0.0);
            spec.facade2_azimuth_deg = Some(90.0);
            meta.cross_ventilation = Some(spec);
        },
        &[("ventilation.cross.facades", Fail)],
    ));
    cases.push(case(
        "roof_vent_fifteen_percent",
        |m| {
            meta_of(m).roof_vent = Some(RoofVentSpec {
                opening_area_m2: 15.0,
                roof_area_m2: 100.0,
            });
        },
        &[("ventilation.roof_vent", Pass)],
    ));
    cases.push(case(
        "roof_vent_just_under",
        |m| {
            meta_of(m).roof_vent = Some(RoofVentSpec {
                opening_area_m2: 14.9,
                roof_area_m2: 100.0,
            });
        },
        &[("ventilation.roof_vent", Fail)],
    ));
    cases.push(case(
        "siting_three_quarters_exact",
        |m| {
            meta_of(m).siting = Some(SitingSpec {
                protected_fraction: 0.75,
                protection_width_m: 3.0,
            });
        },
        &[("siting.protection", Fail)],
    ));
    cases.push(case(
        "siting_protected",
        |m| {
            meta_of(m).siting = Some(SitingSpec {
                protected_fraction: 0.8,
                protection_width_m: 3.0,
            });
        },
        &[("siting.protection", Pass)],
    ));
    cases.push(case(
        "siting_narrow_strip",
        |m| {
            meta_of(m).siting = Some(SitingSpec {
                protected_fraction: 0.8,
                protection_width_m: 2.9,
            });
        },
        &[("siting.protection", Fail)],
    ));
    cases.push(case(
        "roof_dark_closed_bare",
        |_| {},
        &[("roof_protection.05", Fail), ("roof_protection.00", NotApplicable)],
    ));
    {
        let mut model = individual_light_improved();
        model.name = "roof_light_vented_insulated".to_string();
        cases.push(CorpusCase {
            name: model.name.clone(),
            model,
            expected: vec![
                ("roof_protection.00".to_string(), Pass),
                ("roof_protection.05".to_string(), NotApplicable),
                ("wall_overhangs.00".to_string(), Pass),
                ("window_shading.00".to_string(), Pass),
                ("window_shading.01".to_string(), Pass),
                ("window_shading.02".to_string(), Pass),
                ("window_shading.03".to_string(), NotApplicable),
                ("water_heater.solar.production".to_string(), Pass),
                ("water_heater.solar.storage".to_string(), Pass),
                ("solar_water_heater.02".to_string(), Pass),
                ("electric_water_heater.02".to_string(), NotApplicable),
                ("air_conditioning.cop".to_string(), Pass),
                ("air_conditioning.renewal".to_string(), Pass),
                ("air_conditioning.maintenance".to_string(), Pass),
                ("ventilation.fans".to_string(), Pass),
                ("siting.protection".to_string(), Pass),
            ],
        });
    }
    cases.push(case(
        "wall_deep_eaves",
        |m| {
            for surface in &mut m.surfaces {
                if matches!(surface.boundary, Boundary::Exterior) && !surface.is_roof() {
                    surface.overhang = overhang(2.5, 2.5, 0.0);
                }
            }
        },
        &[
            ("wall_overhangs.01", Pass),
            ("wall_overhangs.04", Pass),
            ("wall_overhangs.07", Pass),
            ("wall_overhangs.10", Pass),
        ],
    ));
    cases.push(case(
        "wall_dark_unprotected",
        |m| {
            for surface in &mut m.surfaces {
                surface.overhang = None;
            }
            for construction in &mut m.constructions {
                construction.exterior_absorptivity = 0.9;
            }
        },
        &[
            ("wall_overhangs.02", Fail),
            ("wall_overhangs.05", Fail),
            ("wall_overhangs.08", Fail),
            ("wall_overhangs.11", Fail),
            ("wall_insulation.02", Fail),
            ("wall_insulation.00", NotApplicable),
        ],
    ));
    cases.push(case(
        "wall_insulated_instead_of_shaded",
        |m| {
            for surface in &mut m.surfaces {
                surface.overhang = None;
            }
            for construction in &mut m.constructions {
                if construction.name == "wall_timber" {
                    construction
                        .layers
                        .insert(1, Layer {
                            material: "polystyrene".to_string(),
                            thickness: 0.03,
                        });
                }
            }
        },
        &[
            ("wall_insulation.01", Pass),
            ("wall_overhangs.01", Pass),
            ("wall_overhangs.04", Pass),
        ],
    ));
    cases.push(case(
        "window_boundary_equal",
        |m| {
            for glazing in &mut m.glazings {
                // d/(2a+h) = 0.75/(0.3+1.2) = 0.5 on every window.
                glazing.overhang = overhang(0.75, 1.2, 0.15);
            }
        },
        &[("window_shading.00", Pass), ("window_shading.02", Pass)],
    ));
    cases.push(case(
        "window_unshaded",
        |m| {
            for glazing in &mut m.glazings {
                glazing.overhang = None;
            }
        },
        &[
            ("window_shading.00", Fail),
            ("window_shading.01", Fail),
            ("window_shading.02", Fail),
            ("window_shading.03", NotApplicable),
        ],
    ));
    cases.push(case(
        "wh_solar_low_production",
        |m| {
            meta_of(m).water_heater = Some(WaterHeaterSpec::Solar {
                annual_kwh_per_m2: 650.0,
                storage_l_per_m2: 90.0,
                collector_area_m2: 4.0,
            });
        },
        &[
            ("water_heater.solar.production", Fail),
            ("water_heater.solar.storage", Pass),
            ("solar_water_heater.02", Pass),
        ],
    ));
    cases.push(case(
        "wh_solar_thin_storage",
        |m| {
            meta_of(m).water_heater = Some(WaterHeaterSpec::Solar {
                annual_kwh_per_m2: 750.0,
                storage_l_per_m2: 50.0,
                collector_area_m2: 4.0,
            });
        },
        &[("water_heater.solar.storage", Fail)],
    ));
    cases.push(case(
        "wh_solar_oversized_storage",
        |m| {
            meta_of(m).water_heater = Some(WaterHeaterSpec::Solar {
                annual_kwh_per_m2: 750.0,
                storage_l_per_m2: 130.0,
                collector_area_m2: 4.0,
            });
        },
        &[("water_heater.solar.storage", Fail)],
    ));
    cases.push(case(
        "wh_solar_small_collector",
        |m| {
            meta_of(m).water_heater = Some(WaterHeaterSpec::Solar {
                annual_kwh_per_m2: 750.0,
                storage_l_per_m2: 90.0,
                collector_area_m2: 3.5,
            });
        },
        &[("solar_water_heater.02", Fail), ("solar_water_heater.00", NotApplicable)],
    ));
    cases.push(case(
        "wh_electric_instant",
        |_| {},
        &[
            ("water_heater.electric.storage_type", Fail),
            ("water_heater.electric.switch", Fail),
            ("water_heater.electric.certified", Pass),
            ("electric_water_heater.02", Fail),
        ],
    ));
    cases.push(case(
        "wh_electric_compliant",
        |m| {
            meta_of(m).water_heater = Some(WaterHeaterSpec::Electric {
                certified: true,
                instant: false,
                three_position_switch: true,
                capacity_l: 200.0,
            });
        },
        &[
            ("water_heater.electric.storage_type", Pass),
            ("water_heater.electric.switch", Pass),
            ("electric_water_heater.02", Pass),
        ],
    ));
    cases.push(case(
        "wh_gas_no_flue",
        |m| {
            meta_of(m).water_heater = Some(WaterHeaterSpec::Gas {
                certified: true,
                flue_outlet: false,
            });
        },
        &[
            ("water_heater.gas.certified", Pass),
            ("water_heater.gas.flue", Fail),
            ("electric_water_heater.02", NotApplicable),
        ],
    ));
    cases.push(case(
        "ac_window_cop_boundary",
        |m| {
            meta_of(m).air_conditioning = Some(AcSpec {
                unit: AcUnitKind::Window,
                cop: 2.5,
                mechanical_renewal_m3h: 25.0,
                maintenance_contract: true,
            });
        },
        &[
            ("air_conditioning.cop", Pass),
            ("air_conditioning.renewal", Pass),
            ("air_conditioning.maintenance", Pass),
        ],
    ));
    cases.push(case(
        "ac_split_below_three",
        |m| {
            meta_of(m).air_conditioning = Some(AcSpec {
                unit: AcUnitKind::Split,
                cop: 2.8,
                mechanical_renewal_m3h: 75.0,
                maintenance_contract: true,
            });
        },
        &[("air_conditioning.cop", Fail)],
    ));
    cases.push(case(
        "ac_split_stale_air",
        |m| {
            meta_of(m).air_conditioning = Some(AcSpec {
                unit: AcUnitKind::Split,
                cop: 3.5,
                mechanical_renewal_m3h: 0.0,
                maintenance_contract: true,
            });
        },
        &[
            ("air_conditioning.cop", Pass),
            ("air_conditioning.renewal", Fail),
        ],
    ));
    cases.push(case(
        "fans_partially_wired",
        |_| {},
        &[("ventilation.fans", Fail)],
    ));
    cases.push(case(
        "fans_fully_wired",
        |m| {
            for wiring in &mut meta_of(m).fan_wiring {
                wiring.ceiling_supply = true;
            }
        },
        &[("ventilation.fans", Pass)],
    ));
    cases.push(case(
        "undeclared_everything",
        |m| {
            m.compliance = None;
        },
        &[
            ("siting.protection", NotApplicable),
            ("ventilation.roof_vent", NotApplicable),
            ("ventilation.cross.p1", NotApplicable),
            ("ventilation.fans", NotApplicable),
            ("water_heater.declared", NotApplicable),
            ("air_conditioning.cop", NotApplicable),
        ],
    ));
    cases
}

fn write_pretty<T: serde::Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("fixture serializes");
    text.push('\n');
    std::fs::write(path, text)
}

/// Writes every fixture to `<dir>/{buildings,weather,rules,compliance}`.
pub fn write_all(dir: &Path) -> std::io::Result<()> {
    let buildings = dir.join("buildings");
    let weather = dir.join("weather");
    let rules = dir.join("rules");
    let compliance = dir.join("compliance");
    for sub in [&buildings, &weather, &rules, &compliance] {
        std::fs::create_dir_all(sub)?;
    }

    write_pretty(&buildings.join("single_wall_box.json"), &single_wall_box())?;
    write_pretty(&buildings.join("individual_light.json"), &individual_light())?;
    write_pretty(
        &buildings.join("individual_light_improved.json"),
        &individual_light_improved(),
    )?;
    write_pretty(&buildings.join("individual_heavy.json"), &individual_heavy())?;
    write_pretty(
        &buildings.join("individual_heavy_improved.json"),
        &individual_heavy_improved(),
    )?;

    for (file, records) in [("typical_day.csv", typical_day()), ("breeze_1ms.csv", breeze_day())] {
        let seq = WeatherSequence {
            source: file.to_string(),
            records,
        };
        std::fs::write(weather.join(file), write_weather_csv(&seq))?;
    }

    for table in rule_tables() {
        write_pretty(&rules.join(format!("{}.json", table.id)), &table)?;
    }

    let mut expected = Vec::new();
    for case in compliance_corpus() {
        write_pretty(&compliance.join(format!("{}.json", case.name)), &case.model)?;
        expected.push(serde_json::json!({
            "dwelling": case.name,
            "verdicts": case
                .expected
                .iter()
                .map(|(id, v)| serde_json::json!({ "rule": id, "verdict": v }))
                .collect::<Vec<_>>(),
        }));
    }
    write_pretty(&compliance.join("expected_verdicts.json"), &expected)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecodom;

    #[test]
    fn all_dwellings_validate() {
        for model in [
            single_wall_box(),
            individual_light(),
            individual_light_improved(),
            individual_heavy(),
            individual_heavy_improved(),
        ] {
            assert_eq!(model.validate(), Vec::new(), "{}", model.name);
        }
    }

    #[test]
    fn corpus_is_large_and_valid() {
        let corpus = compliance_corpus();
        assert!(corpus.len() >= 20, "only {} corpus cases", corpus.len());
        for case in &corpus {
            assert_eq!(case.model.validate(), Vec::new(), "{}", case.name);
            assert!(!case.expected.is_empty(), "{} pins nothing", case.name);
        }
    }

    #[test]
    fn corpus_verdicts_match_hand_marks() {
        let rules = rule_set();
        for case in compliance_corpus() {
            let report = ecodom::evaluate(&case.model, &rules);
            for (rule_id, expected) in &case.expected {
                let got = report.verdict_of(rule_id);
                assert_eq!(
                    got,
                    Some(*expected),
                    "{}: rule {} expected {:?}, got {:?}",
                    case.name,
                    rule_id,
                    expected,
                    got
                );
            }
        }
    }

    #[test]
    fn improved_dwellings_pass_where_bad_ones_fail() {
        let rules = rule_set();
        let bad = ecodom::evaluate(&individual_light(), &rules);
        let good = ecodom::evaluate(&individual_light_improved(), &rules);
        let (_, bad_fail, _) = bad.counts();
        let (_, good_fail, _) = good.counts();
        assert!(bad_fail >= 5, "bad dwelling only fails {bad_fail} rules");
        assert_eq!(good_fail, 0, "improved dwelling must fully comply: {good:#?}");
    }

    #[test]
    fn typical_day_shape() {
        let day = typical_day();
        assert_eq!(day.len(), 24);
        let max = day.iter().map(|r| r.dry_bulb).fold(f64::MIN, f64::max);
        let min = day.iter().map(|r| r.dry_bulb).fold(f64::MAX, f64::min);
        assert_eq!(max, 31.5);
        assert_eq!(min, 26.0);
        // Warm nights: ventilation during the conditioning schedule is
        // never free cooling below a 26 °C setpoint.
        assert!(day.iter().all(|r| r.dry_bulb >= 26.0));
        assert!(day.iter().all(|r| (0.0..=1000.0).contains(&r.direct_normal)));
    }

    #[test]
    fn checked_in_fixtures_match_generators() {
        let generated = tempfile::tempdir().unwrap();
        write_all(generated.path()).unwrap();
        let repo = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
        let mut compared = 0;
        for sub in ["buildings", "weather", "rules", "compliance"] {
            let dir = generated.path().join(sub);
            for entry in std::fs::read_dir(&dir).unwrap() {
                let path = entry.unwrap().path();
                let name = path.file_name().unwrap();
                let checked_in = repo.join(sub).join(name);
                let fresh = std::fs::read_to_string(&path).unwrap();
                let existing = std::fs::read_to_string(&checked_in).unwrap_or_else(|_| {
                    panic!("missing fixture file {}", checked_in.display())
                });
                assert_eq!(
                    fresh,
                    existing,
                    "fixture drift in {}",
                    checked_in.display()
                );
                compared += 1;
            }
        }
        assert!(compared >= 30, "only {compared} fixture files compared");
    }
}
