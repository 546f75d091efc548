//! Nodal thermal model: capacitance/conductance network over wall cells and
//! zone air volumes, stepped with a fully implicit scheme.
//!
//! Walls are discretized into finite-volume cells along their thickness;
//! each zone's air is one capacitive node. Each hour the conductance matrix
//! and source vector are rebuilt from weather, sun and the converged airflow
//! solution, then the linear system (C/dt − A)·T' = (C/dt)·T + B advances
//! the state unconditionally stably. Zone coupling alternates airflow and
//! thermal solves until air temperatures settle.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::airflow::{AirflowError, AirflowSolution};
use crate::constants::{AIR_CP, AIR_DENSITY};
use crate::model::{Boundary, BuildingModel};
use crate::solar::{incident_irradiance, overhang_shading_fraction, SunPosition};
use crate::weather::WeatherRecord;

#[derive(Debug, Error)]
pub enum ThermalError {
    #[error("singular thermal system (zero-capacitance disconnected node?)")]
    Singular,
    #[error("thermal solve residual {residual:.3e} W exceeds bound {bound:.3e} W")]
    Residual { residual: f64, bound: f64 },
    #[error(transparent)]
    Airflow(#[from] AirflowError),
}

/// Linearized combined (convective + radiative) surface film exchange.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FilmCoefficients {
    /// Interior film, W/(m²·K).
    pub h_in: f64,
    /// Exterior film at zero wind, W/(m²·K).
    pub h_out_base: f64,
    /// Exterior film wind slope, W/(m²·K) per m/s.
    pub h_out_wind: f64,
}

impl FilmCoefficients {
    pub fn h_out(&self, wind_speed_ms: f64) -> f64 {
        self.h_out_base + self.h_out_wind * wind_speed_ms
    }
}

impl Default for FilmCoefficients {
    fn default() -> Self {
        FilmCoefficients {
            h_in: 8.3,
            h_out_base: 17.0,
            h_out_wind: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermalConfig {
    pub films: FilmCoefficients,
    pub nodes_per_layer: usize,
    /// Coupling convergence threshold on zone air temperatures, K.
    pub coupling_tolerance_k: f64,
    pub max_coupling_iterations: usize,
    /// Link flows changing less than this between iterations are considered
    /// frozen, ending the coupling loop.
    pub flow_freeze_kg_s: f64,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        ThermalConfig {
            films: FilmCoefficients::default(),
            nodes_per_layer: 3,
            coupling_tolerance_k: 0.01,
            max_coupling_iterations: 50,
            flow_freeze_kg_s: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Wall cell: (surface index, cell index, exterior side first).
    Wall { surface: usize, cell: usize },
    Air { zone: usize },
}

/// Per-surface slice of the node vector plus the fixed half-cell face
/// resistances that combine with the (possibly wind-dependent) films.
#[derive(Debug, Clone)]
pub struct SurfaceNodes {
    /// Node ids exterior→interior; empty when the surface is fully glazed.
    pub node_ids: Vec<usize>,
    /// K/W from the first cell centre to the exterior face.
    pub exterior_half_resistance: f64,
    /// K/W from the last cell centre to the interior face.
    pub interior_half_resistance: f64,
    /// Opaque (glazing-free) area, m².
    pub area: f64,
}

/// Static discretization of a building: node identities, capacitances and
/// the temperature-independent inter-cell conductances.
#[derive(Debug, Clone)]
pub struct NodeLayout {
    pub nodes: Vec<NodeKind>,
    /// J/K per node.
    pub capacitance: Vec<f64>,
    pub air_node_of_zone: Vec<usize>,
    pub surfaces: Vec<SurfaceNodes>,
    /// (node, node, W/K) couplings internal to wall stacks.
    internal_couplings: Vec<(usize, usize, f64)>,
}

impl NodeLayout {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    /// °C per node, layout order.
    pub temps: Vec<f64>,
    /// Simulation clock, hours from run start.
    pub time_hours: f64,
}

impl ThermalState {
    pub fn uniform(layout: &NodeLayout, temp_c: f64) -> Self {
        ThermalState {
            temps: vec![temp_c; layout.len()],
            time_hours: 0.0,
        }
    }

    pub fn zone_air_temps(&self, layout: &NodeLayout) -> Vec<f64> {
        layout
            .air_node_of_zone
            .iter()
            .map(|&n| self.temps[n])
            .collect()
    }
}

/// Splits every construction layer of every surface into equal cells and
/// lumps zone air into single nodes.
pub fn discretize(model: &BuildingModel, nodes_per_layer: usize) -> NodeLayout {
    assert!(nodes_per_layer >= 1);
    let mut nodes = Vec::new();
    let mut capacitance = Vec::new();
    let mut surfaces = Vec::new();
    let mut internal = Vec::new();

    for (s_idx, surface) in model.surfaces.iter().enumerate() {
        let area = model.opaque_area(surface);
        let construction = model
            .construction(&surface.construction)
            .expect("validated model");
        let mut node_ids = Vec::new();
        let mut exterior_half = 0.0;
        let mut interior_half = 0.0;
        if area > 1e-9 {
            // Walk layers exterior→interior, one resistance entry per cell
            // boundary; half-cell resistances accumulate across layer joints.
            let mut prev: Option<(usize, f64)> = None; // (node id, half-res to its face)
            for layer in &construction.layers {
                let material = model.material(&layer.material).expect("validated model");
                let dx = layer.thickness / nodes_per_layer as f64;
                let cell_c = material.density * material.specific_heat * dx * area;
                let half_res = dx / (2.0 * material.conductivity * area);
                for _ in 0..nodes_per_layer {
                    let id = nodes.len();
                    nodes.push(NodeKind::Wall {
                        surface: s_idx,
                        cell: node_ids.len(),
                    });
                    capacitance.push(cell_c);
                    match prev {
                        None => exterior_half = half_res,
                        Some((prev_id, prev_half)) => {
                            internal.push((prev_id, id, 1.0 / (prev_half + half_res)));
                        }
                    }
                    node_ids.push(id);
                    prev = Some((id, half_res));
                }
            }
            interior_half = prev.map(|(_, h)| h).unwrap_or(0.0);
        }
        surfaces.push(SurfaceNodes {
            node_ids,
            exterior_half_resistance: exterior_half,
            interior_half_resistance: interior_half,
            area,
        });
    }

    let mut air_node_of_zone = Vec::with_capacity(model.zones.len());
    for (z_idx, zone) in model.zones.iter().enumerate() {
        let id = nodes.len();
        nodes.push(NodeKind::Air { zone: z_idx });
        capacitance.push(AIR_DENSITY * AIR_CP * zone.volume);
        air_node_of_zone.push(id);
    }

    NodeLayout {
        nodes,
        capacitance,
        air_node_of_zone,
        surfaces,
        internal_couplings: internal,
    }
}

/// One hour's linear system [C]dT/dt = [A]T + B.
#[derive(Debug, Clone)]
pub struct NodalSystem {
    /// J/K diagonal.
    pub capacitance: DVector<f64>,
    /// W/K coupling matrix; diagonal carries the negative row totals
    /// including exchanges with known temperatures.
    pub coupling: DMatrix<f64>,
    /// W source vector, including known-temperature exchange terms.
    pub source: DVector<f64>,
}

impl NodalSystem {
    /// Net heat input a node sees at the given temperatures, W.
    pub fn flux_at(&self, temps: &[f64]) -> DVector<f64> {
        let t = DVector::from_column_slice(temps);
        &self.coupling * t + &self.source
    }
}

/// Builds the conductance matrix and source vector for one hour.
///
/// Couplings: wall-cell conduction, film exchanges to zone air and outdoor
/// air, glazing U·A paths, and one-directional ṁ·c_p advection along the
/// converged air flows. Sources: absorbed exterior solar (beam shaded by
/// overhangs), transmitted solar deposited on zone floors, and scheduled
/// internal gains.
pub fn assemble(
    model: &BuildingModel,
    layout: &NodeLayout,
    airflow: &AirflowSolution,
    weather: &WeatherRecord,
    sun: SunPosition,
    hour_of_day: usize,
    config: &ThermalConfig,
) -> NodalSystem {
    let n = layout.len();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    let h_out = config.films.h_out(weather.wind_speed);
    let albedo = model.site.ground_albedo;

    let couple = |a: &mut DMatrix<f64>, i: usize, j: usize, g: f64| {
        a[(i, i)] -= g;
        a[(i, j)] += g;
        a[(j, j)] -= g;
        a[(j, i)] += g;
    };
    let known = |a: &mut DMatrix<f64>, b: &mut DVector<f64>, i: usize, g: f64, t: f64| {
        a[(i, i)] -= g;
        b[i] += g * t;
    };

    for &(i, j, g) in &layout.internal_couplings {
        couple(&mut a, i, j, g);
    }

    for (surface, nodes) in model.surfaces.iter().zip(&layout.surfaces) {
        if nodes.node_ids.is_empty() {
            continue;
        }
        let first = nodes.node_ids[0];
        let last = *nodes.node_ids.last().unwrap();
        let area = nodes.area;
        let air_in = layout.air_node_of_zone[model.zone_index(&surface.interior_zone).unwrap()];
        let g_interior =
            1.0 / (nodes.interior_half_resistance + 1.0 / (config.films.h_in * area));
        couple(&mut a, last, air_in, g_interior);

        match &surface.boundary {
            Boundary::Exterior => {
                let g_exterior =
                    1.0 / (nodes.exterior_half_resistance + 1.0 / (h_out * area));
                known(&mut a, &mut b, first, g_exterior, weather.dry_bulb);

                let construction = model.construction(&surface.construction).unwrap();
                let irradiance = incident_irradiance(
                    sun,
                    weather.direct_normal,
                    weather.diffuse_horizontal,
                    surface.azimuth,
                    surface.tilt,
                    albedo,
                );
                let shaded = surface.overhang.map_or(0.0, |o| {
                    overhang_shading_fraction(sun, surface.azimuth, o.depth_d, o.height_h, o.gap_a)
                });
                let effective = irradiance.direct_wm2 * (1.0 - shaded)
                    + irradiance.diffuse_wm2
                    + irradiance.ground_wm2;
                b[first] += construction.exterior_absorptivity * effective * area;
            }
            Boundary::Adjacent { zone } => {
                let air_far = layout.air_node_of_zone[model.zone_index(zone).unwrap()];
                let g_far =
                    1.0 / (nodes.exterior_half_resistance + 1.0 / (config.films.h_in * area));
                couple(&mut a, first, air_far, g_far);
            }
            Boundary::Ground => {}
        }
    }

    for glazing in &model.glazings {
        let host_idx = model.surface_index(&glazing.host_surface).unwrap();
        let host = &model.surfaces[host_idx];
        let zone_idx = model.zone_index(&host.interior_zone).unwrap();
        let air = layout.air_node_of_zone[zone_idx];
        match &host.boundary {
            Boundary::Exterior => {
                known(
                    &mut a,
                    &mut b,
                    air,
                    glazing.u_value * glazing.area,
                    weather.dry_bulb,
                );
                let irradiance = incident_irradiance(
                    sun,
                    weather.direct_normal,
                    weather.diffuse_horizontal,
                    host.azimuth,
                    host.tilt,
                    albedo,
                );
                let shaded = glazing.overhang.map_or(0.0, |o| {
                    overhang_shading_fraction(sun, host.azimuth, o.depth_d, o.height_h, o.gap_a)
                });
                let transmitted = glazing.area
                    * glazing.solar_transmittance
                    * glazing.shading_multiplier
                    * (irradiance.direct_wm2 * (1.0 - shaded)
                        + irradiance.diffuse_wm2
                        + irradiance.ground_wm2);
                deposit_on_floor(model, layout, zone_idx, transmitted, &mut b, air);
            }
            Boundary::Adjacent { zone } => {
                let air_far = layout.air_node_of_zone[model.zone_index(zone).unwrap()];
                couple(&mut a, air, air_far, glazing.u_value * glazing.area);
            }
            Boundary::Ground => {}
        }
    }

    let exchanges = airflow.zone_exchanges(model);
    for (zone_idx, (zone, exchange)) in model.zones.iter().zip(&exchanges).enumerate() {
        let air = layout.air_node_of_zone[zone_idx];
        b[air] += zone.internal_gains.sensible_w[hour_of_day % 24];
        if exchange.from_outdoor_kg_s > 0.0 {
            known(
                &mut a,
                &mut b,
                air,
                exchange.from_outdoor_kg_s * AIR_CP,
                weather.dry_bulb,
            );
        }
        for &(source_zone, mass) in &exchange.from_zones {
            // One-directional advection: this zone's balance gains
            // ṁ·c_p·(T_src − T_this); the source zone is not touched here.
            let g = mass * AIR_CP;
            let source_air = layout.air_node_of_zone[source_zone];
            a[(air, air)] -= g;
            a[(air, source_air)] += g;
        }
    }

    NodalSystem {
        capacitance: DVector::from_vec(layout.capacitance.clone()),
        coupling: a,
        source: b,
    }
}

/// Drops transmitted solar on the interior face of the zone's floor
/// surfaces, area-weighted; zones without a discretized floor absorb it
/// straight into the air node.
fn deposit_on_floor(
    model: &BuildingModel,
    layout: &NodeLayout,
    zone_idx: usize,
    power_w: f64,
    b: &mut DVector<f64>,
    air_node: usize,
) {
    if power_w <= 0.0 {
        return;
    }
    let zone_id = &model.zones[zone_idx].id;
    let floors: Vec<(usize, f64)> = model
        .surfaces
        .iter()
        .enumerate()
        .filter(|(i, s)| {
            s.interior_zone == *zone_id
                && s.tilt >= 135.0
                && !layout.surfaces[*i].node_ids.is_empty()
        })
        .map(|(i, _)| (i, layout.surfaces[i].area))
        .collect();
    let total_area: f64 = floors.iter().map(|(_, a)| a).sum();
    if total_area <= 0.0 {
        b[air_node] += power_w;
        return;
    }
    for (surface_idx, area) in floors {
        let node = *layout.surfaces[surface_idx].node_ids.last().unwrap();
        b[node] += power_w * area / total_area;
    }
}

fn solve_linear(
    matrix: &DMatrix<f64>,
    rhs: &DVector<f64>,
) -> Result<DVector<f64>, ThermalError> {
    let lu = matrix.clone().lu();
    let mut solution = lu.solve(rhs).ok_or(ThermalError::Singular)?;
    // Iterative refinement pushes the residual to the floating-point floor;
    // the per-node conservation checks demand well under a microwatt even
    // when the right-hand side reaches 1e5 W.
    let bound = (1e-9 * rhs.amax()).clamp(1e-15, 1e-6);
    let mut residual = (rhs - matrix * &solution).amax();
    for _ in 0..4 {
        if residual <= bound {
            break;
        }
        let correction_rhs = rhs - matrix * &solution;
        match lu.solve(&correction_rhs) {
            Some(correction) => solution += correction,
            None => break,
        }
        residual = (rhs - matrix * &solution).amax();
    }
    if residual > bound {
        return Err(ThermalError::Residual { residual, bound });
    }
    Ok(solution)
}

/// Advances the state by one implicit step: (C/dt − A)·T' = (C/dt)·T + B.
pub fn step_implicit(
    system: &NodalSystem,
    state: &ThermalState,
    dt_s: f64,
) -> Result<(ThermalState, f64), ThermalError> {
    let (new_state, _, residual) = step_with_clamps(system, state, dt_s, &[])?;
    Ok((new_state, residual))
}

/// Implicit step with selected nodes held at fixed temperatures.
///
/// Clamps model idealised cooling: a clamped node's equation is replaced by
/// T' = setpoint and the heat that the clamp had to remove is recovered from
/// the unmodified balance. Clamps that would demand heating (free-float
/// colder than setpoint) are released and the step re-solved, so the device
/// only ever cools. Returns (state, clamp powers ≥ 0 as cooling W per
/// requested clamp, worst unclamped-node balance residual W).
pub fn step_with_clamps(
    system: &NodalSystem,
    state: &ThermalState,
    dt_s: f64,
    clamps: &[(usize, f64)],
) -> Result<(ThermalState, Vec<f64>, f64), ThermalError> {
    assert!(dt_s > 0.0);
    let n = system.capacitance.len();
    let t_old = DVector::from_column_slice(&state.temps);
    let c_over_dt = &system.capacitance / dt_s;

    let base_matrix = {
        let mut m = -system.coupling.clone();
        for i in 0..n {
            m[(i, i)] += c_over_dt[i];
        }
        m
    };
    let base_rhs = c_over_dt.component_mul(&t_old) + &system.source;

    let mut active: Vec<(usize, f64)> = clamps.to_vec();
    loop {
        let mut matrix = base_matrix.clone();
        let mut rhs = base_rhs.clone();
        for &(node, setpoint) in &active {
            for j in 0..n {
                matrix[(node, j)] = 0.0;
            }
            matrix[(node, node)] = 1.0;
            rhs[node] = setpoint;
        }
        let solution = solve_linear(&matrix, &rhs)?;

        // Power each clamp injects; positive would mean heating.
        let flux = system.flux_at(solution.as_slice());
        let mut released = false;
        let mut powers = vec![0.0; clamps.len()];
        let mut retained = Vec::with_capacity(active.len());
        for &(node, setpoint) in &active {
            let injected = c_over_dt[node] * (setpoint - t_old[node]) - flux[node];
            if injected > 1e-9 {
                released = true;
            } else {
                retained.push((node, setpoint));
                if let Some(k) = clamps.iter().position(|&(c, _)| c == node) {
                    powers[k] = -injected;
                }
            }
        }
        if released {
            active = retained;
            continue;
        }

        let mut residual: f64 = 0.0;
        for i in 0..n {
            if active.iter().any(|&(node, _)| node == i) {
                continue;
            }
            let r = c_over_dt[i] * (solution[i] - t_old[i]) - flux[i];
            residual = residual.max(r.abs());
        }
        let new_state = ThermalState {
            temps: solution.as_slice().to_vec(),
            time_hours: state.time_hours + dt_s / 3600.0,
        };
        return Ok((new_state, powers, residual));
    }
}

/// Outcome of one coupled airflow/thermal hour.
#[derive(Debug, Clone)]
pub struct CoupleOutcome {
    pub state: ThermalState,
    pub airflow: AirflowSolution,
    /// Sensible cooling injected per zone, W, ≥ 0.
    pub cooling_w: Vec<f64>,
    /// Thermal solves performed.
    pub iterations: usize,
    pub converged: bool,
    /// Worst per-node energy balance residual of the final step, W.
    pub max_residual_w: f64,
}

/// Alternates airflow and thermal solves within one time step until zone
/// air temperatures stop moving.
///
/// Every thermal solve restarts from the same begin-of-step state; only the
/// airflow boundary conditions change between iterations. When consecutive
/// airflow solutions agree to within the freeze tolerance the loop ends
/// early, so buildings whose flows cannot react to temperature (sealed or
/// imposed ventilation) cost exactly one thermal solve.
#[allow(clippy::too_many_arguments)]
pub fn couple_zones(
    model: &BuildingModel,
    layout: &NodeLayout,
    state: &ThermalState,
    weather: &WeatherRecord,
    sun: SunPosition,
    hour_of_day: usize,
    config: &ThermalConfig,
    dt_s: f64,
    airflow_for: &mut dyn FnMut(&[f64]) -> Result<AirflowSolution, AirflowError>,
) -> Result<CoupleOutcome, ThermalError> {
    let clamps: Vec<(usize, f64)> = model
        .zones
        .iter()
        .enumerate()
        .filter_map(|(i, zone)| {
            zone.conditioning
                .active_at(hour_of_day)
                .map(|setpoint| (layout.air_node_of_zone[i], setpoint))
        })
        .collect();

    let mut guess = state.zone_air_temps(layout);
    let mut previous: Option<CoupleOutcome> = None;
    let mut iterations = 0;

    loop {
        let airflow = airflow_for(&guess)?;
        let frozen = previous
            .as_ref()
            .is_some_and(|prev| flows_frozen(&prev.airflow, &airflow, config.flow_freeze_kg_s));
        if frozen {
            let mut outcome = previous.unwrap();
            outcome.converged = true;
            return Ok(outcome);
        }

        let system = assemble(model, layout, &airflow, weather, sun, hour_of_day, config);
        let (new_state, clamp_powers, residual) =
            step_with_clamps(&system, state, dt_s, &clamps)?;
        iterations += 1;

        let mut cooling = vec![0.0; model.zones.len()];
        for (k, &(node, _)) in clamps.iter().enumerate() {
            let zone = layout
                .air_node_of_zone
                .iter()
                .position(|&n| n == node)
                .unwrap();
            cooling[zone] = clamp_powers[k];
        }

        let new_air = new_state.zone_air_temps(layout);
        let moved = guess
            .iter()
            .zip(&new_air)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let outcome = CoupleOutcome {
            state: new_state,
            airflow,
            cooling_w: cooling,
            iterations,
            converged: previous.is_some() && moved < config.coupling_tolerance_k,
            max_residual_w: residual,
        };
        if outcome.converged {
            return Ok(outcome);
        }
        if iterations >= config.max_coupling_iterations {
            log::warn!(
                "zone coupling not converged after {iterations} iterations \
                 (last air-temperature move {moved:.4} K)"
            );
            return Ok(outcome);
        }
        guess = new_air;
        previous = Some(outcome);
    }
}

fn flows_frozen(a: &AirflowSolution, b: &AirflowSolution, tol: f64) -> bool {
    a.link_flows.len() == b.link_flows.len()
        && a.link_flows
            .iter()
            .zip(&b.link_flows)
            .all(|(x, y)| (x.net_kg_s() - y.net_kg_s()).abs() < tol)
        && a.imposed_outdoor_kg_s == b.imposed_outdoor_kg_s
}

/// Interior face temperature of every surface seen from its interior zone,
/// °C: the film-weighted blend of the innermost cell and the zone air.
pub fn interior_face_temps(
    model: &BuildingModel,
    layout: &NodeLayout,
    state: &ThermalState,
    films: &FilmCoefficients,
) -> Vec<Option<f64>> {
    model
        .surfaces
        .iter()
        .zip(&layout.surfaces)
        .map(|(surface, nodes)| {
            let last = *nodes.node_ids.last()?;
            let air = layout.air_node_of_zone[model.zone_index(&surface.interior_zone).unwrap()];
            let g_node = 1.0 / nodes.interior_half_resistance.max(1e-12);
            let g_film = films.h_in * nodes.area;
            Some((state.temps[last] * g_node + state.temps[air] * g_film) / (g_node + g_film))
        })
        .collect()
}

/// (area, face temperature) of every surface enclosing a zone, including
/// the far faces of partitions whose interior zone is the neighbour.
pub fn zone_enclosure_temps(
    model: &BuildingModel,
    layout: &NodeLayout,
    state: &ThermalState,
    films: &FilmCoefficients,
    zone_index: usize,
) -> Vec<(f64, f64)> {
    let zone_id = &model.zones[zone_index].id;
    let mut result = Vec::new();
    for (surface, nodes) in model.surfaces.iter().zip(&layout.surfaces) {
        if nodes.node_ids.is_empty() {
            continue;
        }
        if surface.interior_zone == *zone_id {
            let last = *nodes.node_ids.last().unwrap();
            let air = layout.air_node_of_zone[zone_index];
            let g_node = 1.0 / nodes.interior_half_resistance.max(1e-12);
            let g_film = films.h_in * nodes.area;
            result.push((
                nodes.area,
                (state.temps[last] * g_node + state.temps[air] * g_film) / (g_node + g_film),
            ));
        } else if let Boundary::Adjacent { zone } = &surface.boundary {
            if zone == zone_id {
                let first = nodes.node_ids[0];
                let air = layout.air_node_of_zone[zone_index];
                let g_node = 1.0 / nodes.exterior_half_resistance.max(1e-12);
                let g_film = films.h_in * nodes.area;
                result.push((
                    nodes.area,
                    (state.temps[first] * g_node + state.temps[air] * g_film) / (g_node + g_film),
                ));
            }
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airflow::{AirflowConfig, solve_network};
    use crate::fixtures;
    use crate::model::{AirflowLink, LinkEnd, LinkKind, Site, StructureClass, Zone};
    use approx::assert_relative_eq;

    fn dark_sun() -> SunPosition {
        SunPosition {
            altitude_deg: -10.0,
            azimuth_deg: 0.0,
        }
    }

    fn calm(dry_bulb: f64) -> WeatherRecord {
        WeatherRecord {
            hour_index: 0,
            dry_bulb,
            relative_humidity: 60.0,
            direct_normal: 0.0,
            diffuse_horizontal: 0.0,
            wind_speed: 0.0,
            wind_direction: 0.0,
        }
    }

    #[test]
    fn discretize_cell_capacitances() {
        let model = fixtures::single_wall_box();
        let layout = discretize(&model, 2);
        // 0.2 m concrete layer, 10 m², 2 cells: each 2300·920·0.1·10 J/K.
        let wall_caps: Vec<f64> = layout
            .nodes
            .iter()
            .zip(&layout.capacitance)
            .filter(|(kind, _)| matches!(kind, NodeKind::Wall { surface: 0, .. }))
            .map(|(_, &c)| c)
            .collect();
        assert_eq!(wall_caps.len(), 2);
        for c in wall_caps {
            assert_relative_eq!(c, 2_116_000.0, epsilon = 1e-6);
        }
        let air_cap = layout.capacitance[layout.air_node_of_zone[0]];
        assert_relative_eq!(air_cap, 1.2 * 1006.0 * 30.0, epsilon = 1e-9);
    }

    #[test]
    fn one_node_per_layer_counts() {
        let model = fixtures::single_wall_box();
        let layout = discretize(&model, 1);
        let wall_nodes = layout
            .nodes
            .iter()
            .filter(|k| matches!(k, NodeKind::Wall { .. }))
            .count();
        assert_eq!(wall_nodes, model.surfaces.len());
    }

    #[test]
    fn equilibrium_assembly_is_flux_free() {
        let model = fixtures::single_wall_box();
        let layout = discretize(&model, 2);
        let weather = calm(25.0);
        let airflow = AirflowSolution::still(&model, &[25.0]);
        let system = assemble(
            &model,
            &layout,
            &airflow,
            &weather,
            dark_sun(),
            3,
            &ThermalConfig::default(),
        );
        let flux = system.flux_at(&vec![25.0; layout.len()]);
        assert!(flux.amax() < 1e-9, "flux {:.3e}", flux.amax());
    }

    #[test]
    fn exterior_solar_source_term() {
        let mut model = fixtures::single_wall_box();
        model.constructions[0].exterior_absorptivity = 0.4;
        let layout = discretize(&model, 2);
        // Zenith sun normal to the flat roof, beam only.
        let sun = SunPosition {
            altitude_deg: 90.0,
            azimuth_deg: 0.0,
        };
        let mut weather = calm(25.0);
        weather.direct_normal = 500.0;
        let airflow = AirflowSolution::still(&model, &[25.0]);
        let system = assemble(
            &model,
            &layout,
            &airflow,
            &weather,
            sun,
            12,
            &ThermalConfig::default(),
        );
        let dark = assemble(
            &model,
            &layout,
            &airflow,
            &calm(25.0),
            dark_sun(),
            12,
            &ThermalConfig::default(),
        );
        // The exterior node source also carries the film coupling to outdoor
        // air; difference against a sunless assembly isolates absorbed solar.
        let first = layout.surfaces[0].node_ids[0];
        assert_relative_eq!(
            system.source[first] - dark.source[first],
            0.4 * 500.0 * 10.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn advection_gain_term() {
        let model = fixtures::single_wall_box();
        let layout = discretize(&model, 2);
        let weather = calm(30.0);
        let mut airflow = AirflowSolution::still(&model, &[25.0]);
        airflow.imposed_outdoor_kg_s[0] = 0.05;
        let system = assemble(
            &model,
            &layout,
            &airflow,
            &weather,
            dark_sun(),
            3,
            &ThermalConfig::default(),
        );
        let mut temps = vec![30.0; layout.len()];
        temps[layout.air_node_of_zone[0]] = 25.0;
        let air = layout.air_node_of_zone[0];
        // Isolate the ventilation term: compare against the same state with
        // no flow.
        let still = AirflowSolution::still(&model, &[25.0]);
        let system_still = assemble(
            &model,
            &layout,
            &still,
            &weather,
            dark_sun(),
            3,
            &ThermalConfig::default(),
        );
        let gain = system.flux_at(&temps)[air] - system_still.flux_at(&temps)[air];
        assert_relative_eq!(gain, 0.05 * 1006.0 * 5.0, epsilon = 1e-9);
    }

    fn single_node_system(c: f64, g: f64, t_fixed: f64) -> NodalSystem {
        NodalSystem {
            capacitance: DVector::from_vec(vec![c]),
            coupling: DMatrix::from_vec(1, 1, vec![-g]),
            source: DVector::from_vec(vec![g * t_fixed]),
        }
    }

    #[test]
    fn implicit_step_closed_form() {
        let system = single_node_system(1e5, 100.0, 30.0);
        let state = ThermalState {
            temps: vec![20.0],
            time_hours: 0.0,
        };
        let (next, residual) = step_implicit(&system, &state, 3600.0).unwrap();
        assert_relative_eq!(next.temps[0], (20.0 + 3.6 * 30.0) / 4.6, epsilon = 1e-9);
        assert!(residual < 1e-6);
        assert_relative_eq!(next.time_hours, 1.0);
    }

    #[test]
    fn implicit_step_fixed_point() {
        let system = single_node_system(1e5, 100.0, 20.0);
        let state = ThermalState {
            temps: vec![20.0],
            time_hours: 0.0,
        };
        let (next, _) = step_implicit(&system, &state, 3600.0).unwrap();
        assert_relative_eq!(next.temps[0], 20.0, epsilon = 1e-12);
    }

    #[test]
    fn implicit_step_long_dt_asymptote() {
        let system = single_node_system(1e5, 100.0, 30.0);
        let mut state = ThermalState {
            temps: vec![20.0],
            time_hours: 0.0,
        };
        let mut previous = 20.0;
        for dt in [3600.0, 36_000.0, 360_000.0, 3_600_000.0] {
            let (next, _) = step_implicit(&system, &state, dt).unwrap();
            assert!(next.temps[0] > previous && next.temps[0] < 30.0 + 1e-9);
            previous = next.temps[0];
            state = next;
        }
        assert!((previous - 30.0).abs() < 0.01);
    }

    #[test]
    fn maximum_principle_cooldown() {
        let model = fixtures::single_wall_box();
        let layout = discretize(&model, 3);
        let weather = calm(25.0);
        let airflow = AirflowSolution::still(&model, &[35.0]);
        let mut state = ThermalState::uniform(&layout, 35.0);
        let mut worst = 10.0;
        for _ in 0..100 {
            let system = assemble(
                &model,
                &layout,
                &airflow,
                &weather,
                dark_sun(),
                3,
                &ThermalConfig::default(),
            );
            let (next, _) = step_implicit(&system, &state, 3600.0).unwrap();
            let new_worst = next
                .temps
                .iter()
                .fold(0.0_f64, |m, &t| m.max((t - 25.0).abs()));
            assert!(new_worst <= worst + 1e-12);
            worst = new_worst;
            state = next;
        }
        assert!(worst < 0.05, "still {worst} K from exterior after 100 h");
    }

    #[test]
    fn clamp_balances_steady_gains() {
        let mut system = single_node_system(36_216.0, 50.0, 25.0);
        system.source[0] += 500.0;
        let state = ThermalState {
            temps: vec![25.0],
            time_hours: 0.0,
        };
        let (next, powers, _) = step_with_clamps(&system, &state, 3600.0, &[(0, 25.0)]).unwrap();
        assert_relative_eq!(next.temps[0], 25.0, epsilon = 1e-12);
        assert_relative_eq!(powers[0], 500.0, epsilon = 1e-9);
    }

    #[test]
    fn clamp_releases_when_heating_needed() {
        // Boundary at 20°C pulls the node below the 25°C setpoint.
        let system = single_node_system(36_216.0, 50.0, 20.0);
        let state = ThermalState {
            temps: vec![24.0],
            time_hours: 0.0,
        };
        let (next, powers, _) = step_with_clamps(&system, &state, 3600.0, &[(0, 25.0)]).unwrap();
        assert!(next.temps[0] < 24.0);
        assert_eq!(powers[0], 0.0);
    }

    fn two_zone_stack_model() -> BuildingModel {
        BuildingModel {
            name: "stack pair".into(),
            site: Site {
                latitude_deg: -21.0,
                longitude_deg: 55.5,
                ground_albedo: 0.2,
            },
            structure_class: StructureClass::Light,
            materials: Vec::new(),
            constructions: Vec::new(),
            zones: vec![
                Zone {
                    id: "warm".into(),
                    volume: 40.0,
                    floor_area: 16.0,
                    internal_gains: Default::default(),
                    conditioning: Default::default(),
                    sealed: false,
                },
                Zone {
                    id: "cool".into(),
                    volume: 40.0,
                    floor_area: 16.0,
                    internal_gains: Default::default(),
                    conditioning: Default::default(),
                    sealed: false,
                },
            ],
            surfaces: Vec::new(),
            glazings: Vec::new(),
            links: vec![
                AirflowLink {
                    id: "door".into(),
                    kind: LinkKind::LargeOpening {
                        width: 0.9,
                        height: 2.0,
                        discharge_coefficient: 0.78,
                        openable: true,
                    },
                    from: LinkEnd::Zone {
                        zone: "warm".into(),
                    },
                    to: LinkEnd::Zone {
                        zone: "cool".into(),
                    },
                    mid_height: 1.0,
                },
                AirflowLink {
                    id: "crack_warm".into(),
                    kind: LinkKind::Crack {
                        flow_coefficient: 0.002,
                        exponent: 0.65,
                    },
                    from: LinkEnd::Exterior {
                        facade_azimuth: 0.0,
                    },
                    to: LinkEnd::Zone {
                        zone: "warm".into(),
                    },
                    mid_height: 0.5,
                },
                AirflowLink {
                    id: "crack_cool".into(),
                    kind: LinkKind::Crack {
                        flow_coefficient: 0.002,
                        exponent: 0.65,
                    },
                    from: LinkEnd::Zone {
                        zone: "cool".into(),
                    },
                    to: LinkEnd::Exterior {
                        facade_azimuth: 180.0,
                    },
                    mid_height: 1.5,
                },
            ],
            compliance: None,
        }
    }

    #[test]
    fn coupling_matches_fine_explicit_cosimulation() {
        let model = two_zone_stack_model();
        let layout = discretize(&model, 1);
        let weather = calm(25.0);
        let config = ThermalConfig::default();
        let airflow_config = AirflowConfig::default();
        let mut start = ThermalState::uniform(&layout, 25.0);
        start.temps[layout.air_node_of_zone[0]] = 30.0;
        start.temps[layout.air_node_of_zone[1]] = 20.0;

        // March the implicit coupling over the hour in 60 s steps; single
        // backward-Euler steps are stable but first-order, so matching the
        // fine oracle needs the same total time at a comparable resolution.
        let mut implicit_state = start.clone();
        for _ in 0..60 {
            let outcome = couple_zones(
                &model,
                &layout,
                &implicit_state,
                &weather,
                dark_sun(),
                0,
                &config,
                60.0,
                &mut |temps| solve_network(&model, temps, &weather, &airflow_config),
            )
            .unwrap();
            assert!(outcome.converged);
            implicit_state = outcome.state;
        }

        // Explicit co-simulation at 1 s steps as an independent oracle.
        let mut temps = start.temps.clone();
        for _ in 0..3600 {
            let air: Vec<f64> = layout
                .air_node_of_zone
                .iter()
                .map(|&n| temps[n])
                .collect();
            let airflow = solve_network(&model, &air, &weather, &airflow_config).unwrap();
            let system = assemble(&model, &layout, &airflow, &weather, dark_sun(), 0, &config);
            let flux = system.flux_at(&temps);
            for i in 0..temps.len() {
                temps[i] += flux[i] / system.capacitance[i];
            }
        }
        for (idx, &node) in layout.air_node_of_zone.iter().enumerate() {
            let implicit = implicit_state.temps[node];
            let explicit = temps[node];
            assert!(
                (implicit - explicit).abs() < 0.05,
                "zone {idx}: implicit {implicit:.3} vs explicit {explicit:.3}"
            );
        }
    }

    #[test]
    fn sealed_building_couples_in_one_iteration() {
        let mut model = two_zone_stack_model();
        model.links.clear();
        for zone in &mut model.zones {
            zone.sealed = true;
        }
        let layout = discretize(&model, 1);
        let weather = calm(25.0);
        let mut start = ThermalState::uniform(&layout, 25.0);
        start.temps[layout.air_node_of_zone[0]] = 30.0;
        let outcome = couple_zones(
            &model,
            &layout,
            &start,
            &weather,
            dark_sun(),
            0,
            &ThermalConfig::default(),
            3600.0,
            &mut |temps| Ok(AirflowSolution::still(&model, temps)),
        )
        .unwrap();
        assert!(outcome.converged);
        assert_eq!(outcome.iterations, 1);
    }

    #[test]
    fn isothermal_building_stays_isothermal() {
        let model = two_zone_stack_model();
        let layout = discretize(&model, 1);
        let weather = calm(25.0);
        let airflow_config = AirflowConfig::default();
        let start = ThermalState::uniform(&layout, 25.0);
        let outcome = couple_zones(
            &model,
            &layout,
            &start,
            &weather,
            dark_sun(),
            0,
            &ThermalConfig::default(),
            3600.0,
            &mut |temps| solve_network(&model, temps, &weather, &airflow_config),
        )
        .unwrap();
        for &t in &outcome.state.temps {
            assert_relative_eq!(t, 25.0, epsilon = 1e-9);
        }
    }
}
