//! Zone pressure network: wind and buoyancy driven mass flows through
//! cracks and doorway-sized openings.
//!
//! Every zone carries one unknown pressure, defined relative to outdoor
//! static pressure at ground level. Link equations translate pressure
//! differences into mass flows: a power law for cracks, a height-resolved
//! bidirectional orifice integral for large openings. Newton iteration with
//! an analytic Jacobian and damped steps drives the per-zone mass imbalance
//! below tolerance; the solver is deterministic (fixed zero initial guess)
//! and a pure function of its inputs, so scenario sweeps can run it
//! concurrently without coordination.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{air_density_at, AIR_DENSITY, GRAVITY};
use crate::model::{AirflowLink, BuildingModel, LinkEnd, LinkKind};
use crate::solar::angle_difference_deg;
use crate::weather::WeatherRecord;

/// Below this pressure difference the crack power law switches to its linear
/// secant so the Jacobian stays bounded through the zero crossing.
pub const CRACK_EPS_PA: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum AirflowError {
    #[error(
        "pressure network failed to converge after {iterations} iterations \
         (worst zone residual {worst_residual:.3e} kg/s)"
    )]
    NonConvergence {
        iterations: usize,
        worst_residual: f64,
    },
    #[error("singular Jacobian in pressure network solve")]
    Singular,
}

/// Facade pressure coefficient as a piecewise-linear function of wind
/// incidence angle (0° = wind normal to the facade, 180° = opposite face).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpTable {
    /// (incidence deg, Cp) knots, sorted by angle, covering [0, 180].
    points: Vec<(f64, f64)>,
}

impl CpTable {
    /// Typical low-rise values: suction past 60-70° incidence, mild
    /// recovery on the far face.
    pub fn default_low_rise() -> Self {
        CpTable {
            points: vec![(0.0, 0.70), (90.0, -0.50), (180.0, -0.30)],
        }
    }

    pub fn from_points(mut points: Vec<(f64, f64)>) -> Option<Self> {
        if points.len() < 2 {
            return None;
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.first().map(|p| p.0) != Some(0.0) || points.last().map(|p| p.0) != Some(180.0) {
            return None;
        }
        Some(CpTable { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn cp(&self, incidence_deg: f64) -> f64 {
        let x = incidence_deg.abs().clamp(0.0, 180.0);
        let mut prev = self.points[0];
        for &(angle, value) in &self.points[1..] {
            if x <= angle {
                let span = angle - prev.0;
                if span <= 0.0 {
                    return value;
                }
                let t = (x - prev.0) / span;
                return prev.1 + t * (value - prev.1);
            }
            prev = (angle, value);
        }
        prev.1
    }
}

impl Default for CpTable {
    fn default() -> Self {
        Self::default_low_rise()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirflowConfig {
    pub cp_table: CpTable,
    /// Replaces every large-opening discharge coefficient when set.
    pub cd_override: Option<f64>,
    pub crack_eps_pa: f64,
    pub max_iterations: usize,
    /// Residual at which iteration stops.
    pub residual_target_kg_s: f64,
    /// Residual above which the solve is reported failed.
    pub residual_limit_kg_s: f64,
}

impl Default for AirflowConfig {
    fn default() -> Self {
        AirflowConfig {
            cp_table: CpTable::default(),
            cd_override: None,
            crack_eps_pa: CRACK_EPS_PA,
            max_iterations: 100,
            residual_target_kg_s: 1e-12,
            residual_limit_kg_s: 1e-6,
        }
    }
}

/// Facade surface pressure from wind, Pa, relative to ground-level static.
///
/// Dynamic pressure uses the reference air density; the uncertainty of Cp
/// values dwarfs the few-percent density variation with temperature.
pub fn wind_pressure(
    facade_azimuth_deg: f64,
    wind_speed_ms: f64,
    wind_from_deg: f64,
    cp_table: &CpTable,
) -> f64 {
    let incidence = angle_difference_deg(facade_azimuth_deg, wind_from_deg).abs();
    0.5 * AIR_DENSITY * cp_table.cp(incidence) * wind_speed_ms * wind_speed_ms
}

/// Signed crack mass flow, kg/s, positive in the direction of positive ΔP.
pub fn crack_flow(
    flow_coefficient: f64,
    exponent: f64,
    dp_pa: f64,
    upstream_density: f64,
    eps_pa: f64,
) -> f64 {
    let coeff = flow_coefficient * (upstream_density / AIR_DENSITY);
    if dp_pa.abs() < eps_pa {
        dp_pa * coeff * eps_pa.powf(exponent - 1.0)
    } else {
        dp_pa.signum() * coeff * dp_pa.abs().powf(exponent)
    }
}

/// d(crack_flow)/d(ΔP), kg/(s·Pa).
pub fn crack_flow_derivative(
    flow_coefficient: f64,
    exponent: f64,
    dp_pa: f64,
    upstream_density: f64,
    eps_pa: f64,
) -> f64 {
    let coeff = flow_coefficient * (upstream_density / AIR_DENSITY);
    if dp_pa.abs() < eps_pa {
        coeff * eps_pa.powf(exponent - 1.0)
    } else {
        coeff * exponent * dp_pa.abs().powf(exponent - 1.0)
    }
}

/// Height-resolved bidirectional flow through a doorway-sized opening.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaltonFlow {
    /// From→to component, kg/s, ≥ 0.
    pub forward_kg_s: f64,
    /// To→from component, kg/s, ≥ 0.
    pub reverse_kg_s: f64,
    /// Height of the neutral plane above the opening bottom, m, when the
    /// pressure difference changes sign within the opening.
    pub neutral_height_m: Option<f64>,
    /// d(forward − reverse)/d(P_from − P_to), kg/(s·Pa).
    pub d_net_d_dp: f64,
}

impl WaltonFlow {
    pub fn net_kg_s(&self) -> f64 {
        self.forward_kg_s - self.reverse_kg_s
    }
}

/// Evaluates the two counter-flows through a large vertical opening.
///
/// Each side's pressure decreases hydrostatically with height at its own
/// ideal-gas density, so the cross-opening difference varies linearly in z;
/// where it changes sign a neutral plane splits the opening into two
/// opposed orifice sheets, each integrated in closed form. Pressures are
/// given at the ground datum; the opening spans mid_height ± height/2.
pub fn large_opening_flow(
    width: f64,
    height: f64,
    discharge_coefficient: f64,
    mid_height: f64,
    p_from_datum: f64,
    p_to_datum: f64,
    t_from_c: f64,
    t_to_c: f64,
) -> WaltonFlow {
    let rho_from = air_density_at(t_from_c);
    let rho_to = air_density_at(t_to_c);
    let d = p_from_datum - p_to_datum;
    let slope = (rho_from - rho_to) * GRAVITY;
    let z_bottom = mid_height - height / 2.0;
    let z_top = mid_height + height / 2.0;
    let cd_w = discharge_coefficient * width;

    if slope.abs() * height < 1e-9 {
        // Uniform pressure difference over the whole opening.
        let dp = d - slope * mid_height;
        let rho_up = if dp >= 0.0 { rho_from } else { rho_to };
        let area = width * height;
        let (flow, deriv) = if dp.abs() < CRACK_EPS_PA {
            let secant =
                discharge_coefficient * area * (2.0 * rho_up * CRACK_EPS_PA).sqrt() / CRACK_EPS_PA;
            (dp * secant, secant)
        } else {
            let magnitude = discharge_coefficient * area * (2.0 * rho_up * dp.abs()).sqrt();
            (
                dp.signum() * magnitude,
                discharge_coefficient * area * (2.0 * rho_up).sqrt() * 0.5 / dp.abs().sqrt(),
            )
        };
        return WaltonFlow {
            forward_kg_s: flow.max(0.0),
            reverse_kg_s: (-flow).max(0.0),
            neutral_height_m: None,
            d_net_d_dp: deriv,
        };
    }

    // ΔP(z) = d − slope·z; clamp at the opening edges and integrate
    // Cd·W·√(2ρ·ΔP) over each same-sign segment.
    let dp_bottom = d - slope * z_bottom;
    let dp_top = d - slope * z_top;

    let segment = |lo: f64, hi: f64, rho: f64| -> (f64, f64) {
        let (p_hi, p_lo) = (lo.max(hi), lo.min(hi));
        let flow = cd_w * (2.0 * rho).sqrt() * 2.0 / (3.0 * slope.abs())
            * (p_hi * p_hi.sqrt() - p_lo * p_lo.sqrt());
        let deriv = cd_w * (2.0 * rho).sqrt() / slope.abs() * (p_hi.sqrt() - p_lo.sqrt());
        (flow, deriv)
    };

    let (forward, d_forward) = segment(dp_bottom.max(0.0), dp_top.max(0.0), rho_from);
    let (reverse, d_reverse) = segment((-dp_bottom).max(0.0), (-dp_top).max(0.0), rho_to);

    let neutral = {
        let z_n = d / slope;
        (z_bottom < z_n && z_n < z_top).then(|| z_n - z_bottom)
    };

    WaltonFlow {
        forward_kg_s: forward,
        reverse_kg_s: reverse,
        neutral_height_m: neutral,
        d_net_d_dp: d_forward + d_reverse,
    }
}

/// Converged flow state of the whole network for one hour.
#[derive(Debug, Clone, PartialEq)]
pub struct AirflowSolution {
    /// Zone reference pressures at ground datum, Pa; 0 for sealed zones.
    pub zone_pressures: Vec<f64>,
    /// Zone air densities at solve temperatures, kg/m³.
    pub zone_densities: Vec<f64>,
    /// Per model link, in model order.
    pub link_flows: Vec<LinkFlow>,
    /// Net mass imbalance per zone, kg/s.
    pub zone_residuals: Vec<f64>,
    pub iterations: usize,
    /// Imposed outdoor-air inflow per zone (ventilation bypass), kg/s.
    pub imposed_outdoor_kg_s: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkFlow {
    /// From→to component, ≥ 0.
    pub forward_kg_s: f64,
    /// To→from component, ≥ 0.
    pub reverse_kg_s: f64,
    /// Set for large openings with an interior neutral plane, m above the
    /// opening bottom.
    pub neutral_height_m: Option<f64>,
}

impl LinkFlow {
    pub fn net_kg_s(&self) -> f64 {
        self.forward_kg_s - self.reverse_kg_s
    }
}

/// Where the air entering a zone comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowSource {
    Outdoor,
    Zone(usize),
}

/// Aggregated directed flows of one zone.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZoneExchange {
    pub from_outdoor_kg_s: f64,
    /// (source zone index, kg/s), ascending zone index.
    pub from_zones: Vec<(usize, f64)>,
    pub outflow_kg_s: f64,
}

impl ZoneExchange {
    pub fn total_in_kg_s(&self) -> f64 {
        self.from_outdoor_kg_s + self.from_zones.iter().map(|(_, m)| m).sum::<f64>()
    }
}

impl AirflowSolution {
    /// Zero-flow solution for a building with every path closed.
    pub fn still(model: &BuildingModel, zone_temps: &[f64]) -> Self {
        AirflowSolution {
            zone_pressures: vec![0.0; model.zones.len()],
            zone_densities: zone_temps.iter().map(|&t| air_density_at(t)).collect(),
            link_flows: Vec::new(),
            zone_residuals: vec![0.0; model.zones.len()],
            iterations: 0,
            imposed_outdoor_kg_s: vec![0.0; model.zones.len()],
        }
    }

    /// Ventilation bypass: each zone receives the given outdoor air-change
    /// rate (vol/h) with a balancing exfiltration, no interzone flow.
    pub fn fixed_air_changes(model: &BuildingModel, ach_per_zone: &[f64]) -> Self {
        let imposed = model
            .zones
            .iter()
            .zip(ach_per_zone)
            .map(|(z, &ach)| ach * z.volume * AIR_DENSITY / 3600.0)
            .collect();
        AirflowSolution {
            zone_pressures: vec![0.0; model.zones.len()],
            zone_densities: vec![AIR_DENSITY; model.zones.len()],
            link_flows: Vec::new(),
            zone_residuals: vec![0.0; model.zones.len()],
            iterations: 0,
            imposed_outdoor_kg_s: imposed,
        }
    }

    pub fn worst_residual_kg_s(&self) -> f64 {
        self.zone_residuals.iter().fold(0.0, |w, r| w.max(r.abs()))
    }

    /// Aggregates link flows into per-zone directed exchanges.
    pub fn zone_exchanges(&self, model: &BuildingModel) -> Vec<ZoneExchange> {
        let mut exchanges = vec![ZoneExchange::default(); model.zones.len()];
        let mut add_in = |zone: usize, source: FlowSource, mass: f64| {
            if mass <= 0.0 {
                return;
            }
            match source {
                FlowSource::Outdoor => exchanges[zone].from_outdoor_kg_s += mass,
                FlowSource::Zone(j) => {
                    let from = &mut exchanges[zone].from_zones;
                    match from.binary_search_by_key(&j, |&(z, _)| z) {
                        Ok(i) => from[i].1 += mass,
                        Err(i) => from.insert(i, (j, mass)),
                    }
                }
            }
        };
        for (link, flow) in model.links.iter().zip(&self.link_flows) {
            let a = link.from.zone_id().and_then(|z| model.zone_index(z));
            let b = link.to.zone_id().and_then(|z| model.zone_index(z));
            let source_a = a.map_or(FlowSource::Outdoor, FlowSource::Zone);
            let source_b = b.map_or(FlowSource::Outdoor, FlowSource::Zone);
            if let Some(b) = b {
                add_in(b, source_a, flow.forward_kg_s);
            }
            if let Some(a) = a {
                add_in(a, source_b, flow.reverse_kg_s);
            }
        }
        for (link, flow) in model.links.iter().zip(&self.link_flows) {
            if let Some(a) = link.from.zone_id().and_then(|z| model.zone_index(z)) {
                exchanges[a].outflow_kg_s += flow.forward_kg_s;
            }
            if let Some(b) = link.to.zone_id().and_then(|z| model.zone_index(z)) {
                exchanges[b].outflow_kg_s += flow.reverse_kg_s;
            }
        }
        for (exchange, &imposed) in exchanges.iter_mut().zip(&self.imposed_outdoor_kg_s) {
            exchange.from_outdoor_kg_s += imposed;
            exchange.outflow_kg_s += imposed;
        }
        exchanges
    }

    /// Air changes of one zone, vol/h: volumetric inflow over zone volume.
    pub fn air_changes(&self, model: &BuildingModel, zone_index: usize) -> f64 {
        let exchange = &self.zone_exchanges(model)[zone_index];
        exchange.total_in_kg_s() / self.zone_densities[zone_index] * 3600.0
            / model.zones[zone_index].volume
    }

    pub fn air_changes_all(&self, model: &BuildingModel) -> Vec<f64> {
        self.zone_exchanges(model)
            .iter()
            .enumerate()
            .map(|(i, exchange)| {
                exchange.total_in_kg_s() / self.zone_densities[i] * 3600.0 / model.zones[i].volume
            })
            .collect()
    }

    /// Human-readable solve summary for debugging.
    pub fn dump(&self, model: &BuildingModel) -> String {
        let mut out = String::new();
        out.push_str(&format!("iterations: {}\n", self.iterations));
        for (zone, (&p, &r)) in model
            .zones
            .iter()
            .zip(self.zone_pressures.iter().zip(&self.zone_residuals))
        {
            out.push_str(&format!(
                "zone {:<16} P = {:+.5} Pa  residual = {:+.3e} kg/s\n",
                zone.id, p, r
            ));
        }
        for (link, flow) in model.links.iter().zip(&self.link_flows) {
            out.push_str(&format!(
                "link {:<16} fwd = {:.5} kg/s  rev = {:.5} kg/s  neutral = {:?}\n",
                link.id, flow.forward_kg_s, flow.reverse_kg_s, flow.neutral_height_m
            ));
        }
        out
    }
}

enum NodeRef {
    Zone(usize),
    Exterior { pressure: f64 },
}

struct LinkEval<'a> {
    link: &'a AirflowLink,
    a: NodeRef,
    b: NodeRef,
}

/// Solves the pressure network for one hour of boundary conditions.
///
/// Zones with no attached links keep pressure 0 and zero flow; everything
/// else enters the Newton system. The fixed zero initial guess and ordered
/// assembly make repeated solves on identical inputs bit-identical.
pub fn solve_network(
    model: &BuildingModel,
    zone_temps: &[f64],
    weather: &WeatherRecord,
    config: &AirflowConfig,
) -> Result<AirflowSolution, AirflowError> {
    let exterior: Vec<f64> = model
        .links
        .iter()
        .map(|link| {
            facade_azimuth(link).map_or(0.0, |az| {
                wind_pressure(az, weather.wind_speed, weather.wind_direction, &config.cp_table)
            })
        })
        .collect();
    solve_with_boundary(model, zone_temps, &exterior, weather.dry_bulb, config)
}

fn facade_azimuth(link: &AirflowLink) -> Option<f64> {
    match (&link.from, &link.to) {
        (LinkEnd::Exterior { facade_azimuth }, _) | (_, LinkEnd::Exterior { facade_azimuth }) => {
            Some(*facade_azimuth)
        }
        _ => None,
    }
}

fn solve_with_boundary(
    model: &BuildingModel,
    zone_temps: &[f64],
    exterior_pressure_per_link: &[f64],
    outdoor_temp_c: f64,
    config: &AirflowConfig,
) -> Result<AirflowSolution, AirflowError> {
    let n_zones = model.zones.len();
    let zone_densities: Vec<f64> = zone_temps.iter().map(|&t| air_density_at(t)).collect();
    let outdoor_density = air_density_at(outdoor_temp_c);

    let evals: Vec<LinkEval> = model
        .links
        .iter()
        .zip(exterior_pressure_per_link)
        .map(|(link, &ext_p)| {
            let resolve = |end: &LinkEnd| match end {
                LinkEnd::Zone { zone } => NodeRef::Zone(model.zone_index(zone).unwrap()),
                LinkEnd::Exterior { .. } => NodeRef::Exterior { pressure: ext_p },
            };
            LinkEval {
                link,
                a: resolve(&link.from),
                b: resolve(&link.to),
            }
        })
        .collect();

    // Only zones that touch a link carry an unknown pressure.
    let mut has_link = vec![false; n_zones];
    for eval in &evals {
        if let NodeRef::Zone(i) = eval.a {
            has_link[i] = true;
        }
        if let NodeRef::Zone(i) = eval.b {
            has_link[i] = true;
        }
    }
    let active: Vec<usize> = (0..n_zones).filter(|&i| has_link[i]).collect();
    let eq_of_zone: Vec<Option<usize>> = {
        let mut map = vec![None; n_zones];
        for (eq, &zone) in active.iter().enumerate() {
            map[zone] = Some(eq);
        }
        map
    };

    let mut pressures = vec![0.0; n_zones];
    let mut iterations = 0;

    if !active.is_empty() {
        let n = active.len();
        let residual_of = |pressures: &[f64]| -> DVector<f64> {
            let mut r = DVector::zeros(n);
            for eval in &evals {
                let (net, _) = eval_link(
                    eval,
                    pressures,
                    &zone_densities,
                    zone_temps,
                    outdoor_density,
                    outdoor_temp_c,
                    config,
                );
                if let NodeRef::Zone(i) = eval.a {
                    if let Some(eq) = eq_of_zone[i] {
                        r[eq] -= net;
                    }
                }
                if let NodeRef::Zone(i) = eval.b {
                    if let Some(eq) = eq_of_zone[i] {
                        r[eq] += net;
                    }
                }
            }
            r
        };

        let mut residual = residual_of(&pressures);
        let mut worst = residual.amax();
        let mut stagnant = 0;
        while worst > config.residual_target_kg_s && iterations < config.max_iterations {
            iterations += 1;
            let mut jacobian = DMatrix::zeros(n, n);
            for eval in &evals {
                let (_, d_net) = eval_link(
                    eval,
                    &pressures,
                    &zone_densities,
                    zone_temps,
                    outdoor_density,
                    outdoor_temp_c,
                    config,
                );
                let a_eq = match eval.a {
                    NodeRef::Zone(i) => eq_of_zone[i],
                    NodeRef::Exterior { .. } => None,
                };
                let b_eq = match eval.b {
                    NodeRef::Zone(i) => eq_of_zone[i],
                    NodeRef::Exterior { .. } => None,
                };
                // net = f(P_a − P_b): residual_a loses net, residual_b gains it.
                if let Some(ia) = a_eq {
                    jacobian[(ia, ia)] -= d_net;
                    if let Some(ib) = b_eq {
                        jacobian[(ia, ib)] += d_net;
                    }
                }
                if let Some(ib) = b_eq {
                    jacobian[(ib, ib)] -= d_net;
                    if let Some(ia) = a_eq {
                        jacobian[(ib, ia)] += d_net;
                    }
                }
            }

            let step = jacobian
                .lu()
                .solve(&residual)
                .ok_or(AirflowError::Singular)?;

            // Backtracking line search on the infinity norm.
            let mut lambda = 1.0;
            loop {
                let mut trial = pressures.clone();
                for (eq, &zone) in active.iter().enumerate() {
                    trial[zone] -= lambda * step[eq];
                }
                let trial_residual = residual_of(&trial);
                let trial_worst = trial_residual.amax();
                if trial_worst < worst || lambda < 1.0 / 64.0 {
                    stagnant = if trial_worst > worst * 0.5 { stagnant + 1 } else { 0 };
                    pressures = trial;
                    residual = trial_residual;
                    worst = trial_worst;
                    break;
                }
                lambda /= 2.0;
            }
            log::debug!(
                "airflow iteration {iterations}: worst residual {worst:.3e} kg/s (damping {lambda})"
            );
            // Settle for an acceptable residual once progress has stalled,
            // typically at the floating-point floor of a tough network.
            if stagnant >= 3 && worst < config.residual_limit_kg_s {
                break;
            }
        }

        if worst > config.residual_limit_kg_s {
            return Err(AirflowError::NonConvergence {
                iterations,
                worst_residual: worst,
            });
        }
    }

    let mut link_flows = Vec::with_capacity(evals.len());
    let mut zone_residuals = vec![0.0; n_zones];
    for eval in &evals {
        let flow = link_detail(
            eval,
            &pressures,
            &zone_densities,
            zone_temps,
            outdoor_density,
            outdoor_temp_c,
            config,
        );
        let net = flow.net_kg_s();
        if let NodeRef::Zone(i) = eval.a {
            zone_residuals[i] -= net;
        }
        if let NodeRef::Zone(i) = eval.b {
            zone_residuals[i] += net;
        }
        link_flows.push(flow);
    }

    Ok(AirflowSolution {
        zone_pressures: pressures,
        zone_densities,
        link_flows,
        zone_residuals,
        iterations,
        imposed_outdoor_kg_s: vec![0.0; n_zones],
    })
}

fn end_state(
    node: &NodeRef,
    pressures: &[f64],
    zone_densities: &[f64],
    zone_temps: &[f64],
    outdoor_density: f64,
    outdoor_temp_c: f64,
) -> (f64, f64, f64) {
    match node {
        NodeRef::Zone(i) => (pressures[*i], zone_densities[*i], zone_temps[*i]),
        NodeRef::Exterior { pressure } => (*pressure, outdoor_density, outdoor_temp_c),
    }
}

fn eval_link(
    eval: &LinkEval,
    pressures: &[f64],
    zone_densities: &[f64],
    zone_temps: &[f64],
    outdoor_density: f64,
    outdoor_temp_c: f64,
    config: &AirflowConfig,
) -> (f64, f64) {
    let (p_a, rho_a, t_a) = end_state(
        &eval.a,
        pressures,
        zone_densities,
        zone_temps,
        outdoor_density,
        outdoor_temp_c,
    );
    let (p_b, rho_b, t_b) = end_state(
        &eval.b,
        pressures,
        zone_densities,
        zone_temps,
        outdoor_density,
        outdoor_temp_c,
    );
    match &eval.link.kind {
        LinkKind::Crack {
            flow_coefficient,
            exponent,
        } => {
            let h = eval.link.mid_height;
            let dp = (p_a - rho_a * GRAVITY * h) - (p_b - rho_b * GRAVITY * h);
            let rho_up = if dp >= 0.0 { rho_a } else { rho_b };
            (
                crack_flow(*flow_coefficient, *exponent, dp, rho_up, config.crack_eps_pa),
                crack_flow_derivative(*flow_coefficient, *exponent, dp, rho_up, config.crack_eps_pa),
            )
        }
        LinkKind::LargeOpening {
            width,
            height,
            discharge_coefficient,
            ..
        } => {
            let cd = config.cd_override.unwrap_or(*discharge_coefficient);
            let walton =
                large_opening_flow(*width, *height, cd, eval.link.mid_height, p_a, p_b, t_a, t_b);
            (walton.net_kg_s(), walton.d_net_d_dp)
        }
    }
}

fn link_detail(
    eval: &LinkEval,
    pressures: &[f64],
    zone_densities: &[f64],
    zone_temps: &[f64],
    outdoor_density: f64,
    outdoor_temp_c: f64,
    config: &AirflowConfig,
) -> LinkFlow {
    let (p_a, rho_a, t_a) = end_state(
        &eval.a,
        pressures,
        zone_densities,
        zone_temps,
        outdoor_density,
        outdoor_temp_c,
    );
    let (p_b, rho_b, t_b) = end_state(
        &eval.b,
        pressures,
        zone_densities,
        zone_temps,
        outdoor_density,
        outdoor_temp_c,
    );
    match &eval.link.kind {
        LinkKind::Crack {
            flow_coefficient,
            exponent,
        } => {
            let h = eval.link.mid_height;
            let dp = (p_a - rho_a * GRAVITY * h) - (p_b - rho_b * GRAVITY * h);
            let rho_up = if dp >= 0.0 { rho_a } else { rho_b };
            let net = crack_flow(*flow_coefficient, *exponent, dp, rho_up, config.crack_eps_pa);
            LinkFlow {
                forward_kg_s: net.max(0.0),
                reverse_kg_s: (-net).max(0.0),
                neutral_height_m: None,
            }
        }
        LinkKind::LargeOpening {
            width,
            height,
            discharge_coefficient,
            ..
        } => {
            let cd = config.cd_override.unwrap_or(*discharge_coefficient);
            let walton =
                large_opening_flow(*width, *height, cd, eval.link.mid_height, p_a, p_b, t_a, t_b);
            LinkFlow {
                forward_kg_s: walton.forward_kg_s,
                reverse_kg_s: walton.reverse_kg_s,
                neutral_height_m: walton.neutral_height_m,
            }
        }
    }
}

/// Largest relative mismatch between the analytic Jacobian and a central
/// finite-difference probe at a randomized safe pressure state.
///
/// Test support for solver verification; not part of the simulation API.
#[doc(hidden)]
pub fn jacobian_fd_max_rel_error(
    model: &BuildingModel,
    zone_temps: &[f64],
    weather: &WeatherRecord,
    config: &AirflowConfig,
    probe_pressures: &[f64],
    step_pa: f64,
) -> f64 {
    let exterior: Vec<f64> = model
        .links
        .iter()
        .map(|link| {
            facade_azimuth(link).map_or(0.0, |az| {
                wind_pressure(az, weather.wind_speed, weather.wind_direction, &config.cp_table)
            })
        })
        .collect();
    let zone_densities: Vec<f64> = zone_temps.iter().map(|&t| air_density_at(t)).collect();
    let outdoor_density = air_density_at(weather.dry_bulb);
    let evals: Vec<LinkEval> = model
        .links
        .iter()
        .zip(&exterior)
        .map(|(link, &ext_p)| {
            let resolve = |end: &LinkEnd| match end {
                LinkEnd::Zone { zone } => NodeRef::Zone(model.zone_index(zone).unwrap()),
                LinkEnd::Exterior { .. } => NodeRef::Exterior { pressure: ext_p },
            };
            LinkEval {
                link,
                a: resolve(&link.from),
                b: resolve(&link.to),
            }
        })
        .collect();

    let n = model.zones.len();
    let residual_of = |pressures: &[f64]| -> Vec<f64> {
        let mut r = vec![0.0; n];
        for eval in &evals {
            let (net, _) = eval_link(
                eval,
                pressures,
                &zone_densities,
                zone_temps,
                outdoor_density,
                weather.dry_bulb,
                config,
            );
            if let NodeRef::Zone(i) = eval.a {
                r[i] -= net;
            }
            if let NodeRef::Zone(i) = eval.b {
                r[i] += net;
            }
        }
        r
    };

    let mut analytic = vec![vec![0.0; n]; n];
    for eval in &evals {
        let (_, d_net) = eval_link(
            eval,
            probe_pressures,
            &zone_densities,
            zone_temps,
            outdoor_density,
            weather.dry_bulb,
            config,
        );
        let a = match eval.a {
            NodeRef::Zone(i) => Some(i),
            NodeRef::Exterior { .. } => None,
        };
        let b = match eval.b {
            NodeRef::Zone(i) => Some(i),
            NodeRef::Exterior { .. } => None,
        };
        if let Some(ia) = a {
            analytic[ia][ia] -= d_net;
            if let Some(ib) = b {
                analytic[ia][ib] += d_net;
            }
        }
        if let Some(ib) = b {
            analytic[ib][ib] -= d_net;
            if let Some(ia) = a {
                analytic[ib][ia] += d_net;
            }
        }
    }

    let mut worst: f64 = 0.0;
    for k in 0..n {
        let mut plus = probe_pressures.to_vec();
        plus[k] += step_pa;
        let mut minus = probe_pressures.to_vec();
        minus[k] -= step_pa;
        let r_plus = residual_of(&plus);
        let r_minus = residual_of(&minus);
        for i in 0..n {
            let fd = (r_plus[i] - r_minus[i]) / (2.0 * step_pa);
            let denom = fd.abs().max(1e-9);
            worst = worst.max((analytic[i][k] - fd).abs() / denom);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Site, StructureClass, Zone};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bare_model(zones: Vec<Zone>, links: Vec<AirflowLink>) -> BuildingModel {
        BuildingModel {
            name: "test".into(),
            site: Site {
                latitude_deg: -21.0,
                longitude_deg: 55.5,
                ground_albedo: 0.2,
            },
            structure_class: StructureClass::Light,
            materials: Vec::new(),
            constructions: Vec::new(),
            zones,
            surfaces: Vec::new(),
            glazings: Vec::new(),
            links,
            compliance: None,
        }
    }

    fn zone(id: &str, volume: f64) -> Zone {
        Zone {
            id: id.into(),
            volume,
            floor_area: volume / 2.5,
            internal_gains: Default::default(),
            conditioning: Default::default(),
            sealed: false,
        }
    }

    fn crack(id: &str, from: LinkEnd, to: LinkEnd, c: f64, n: f64, h: f64) -> AirflowLink {
        AirflowLink {
            id: id.into(),
            kind: LinkKind::Crack {
                flow_coefficient: c,
                exponent: n,
            },
            from,
            to,
            mid_height: h,
        }
    }

    fn still_air(speed: f64, direction: f64, dry_bulb: f64) -> WeatherRecord {
        WeatherRecord {
            hour_index: 0,
            dry_bulb,
            relative_humidity: 60.0,
            direct_normal: 0.0,
            diffuse_horizontal: 0.0,
            wind_speed: speed,
            wind_direction: direction,
        }
    }

    #[test]
    fn cp_interpolation() {
        let table = CpTable::default();
        assert_relative_eq!(table.cp(0.0), 0.70);
        assert_relative_eq!(table.cp(90.0), -0.50);
        assert_relative_eq!(table.cp(180.0), -0.30);
        assert_relative_eq!(table.cp(45.0), 0.10);
        assert_relative_eq!(table.cp(135.0), -0.40);
    }

    #[test]
    fn wind_pressure_examples() {
        let table = CpTable::default();
        assert_eq!(wind_pressure(0.0, 0.0, 0.0, &table), 0.0);
        let unit = CpTable::from_points(vec![(0.0, 1.0), (180.0, 1.0)]).unwrap();
        assert_relative_eq!(wind_pressure(0.0, 1.0, 0.0, &unit), 0.6, epsilon = 1e-12);
        assert_relative_eq!(wind_pressure(0.0, 5.0, 0.0, &table), 10.5, epsilon = 1e-12);
        assert_relative_eq!(wind_pressure(90.0, 5.0, 0.0, &table), -7.5, epsilon = 1e-12);
    }

    #[test]
    fn crack_flow_examples() {
        assert_eq!(crack_flow(0.001, 0.65, 0.0, 1.2, CRACK_EPS_PA), 0.0);
        assert_relative_eq!(
            crack_flow(0.001, 0.65, 1.0, 1.2, CRACK_EPS_PA),
            0.001,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            crack_flow(0.001, 0.65, -1.0, 1.2, CRACK_EPS_PA),
            -0.001,
            epsilon = 1e-15
        );
    }

    #[test]
    fn crack_secant_is_continuous() {
        let eps = CRACK_EPS_PA;
        let just_below = crack_flow(0.001, 0.65, eps * (1.0 - 1e-9), 1.2, eps);
        let just_above = crack_flow(0.001, 0.65, eps * (1.0 + 1e-9), 1.2, eps);
        assert_relative_eq!(just_below, just_above, max_relative = 1e-6);
    }

    #[test]
    fn large_opening_no_potential() {
        let walton = large_opening_flow(0.9, 2.0, 0.78, 1.0, 0.0, 0.0, 25.0, 25.0);
        assert_eq!(walton.forward_kg_s, 0.0);
        assert_eq!(walton.reverse_kg_s, 0.0);
        assert_eq!(walton.neutral_height_m, None);
    }

    #[test]
    fn large_opening_isothermal_one_pascal() {
        let temp = 20.0;
        let walton = large_opening_flow(0.9, 2.0, 0.78, 1.0, 1.0, 0.0, temp, temp);
        let rho = air_density_at(temp);
        let closed_form = 0.78 * 0.9 * 2.0 * (2.0 * rho * 1.0).sqrt();
        assert_relative_eq!(walton.forward_kg_s, closed_form, epsilon = 1e-12);
        assert_eq!(walton.reverse_kg_s, 0.0);
        assert!((walton.forward_kg_s - 2.17).abs() < 0.02);
    }

    fn strip_oracle(
        width: f64,
        height: f64,
        cd: f64,
        mid_height: f64,
        d: f64,
        t_from: f64,
        t_to: f64,
        strips: usize,
    ) -> (f64, f64) {
        let rho_from = air_density_at(t_from);
        let rho_to = air_density_at(t_to);
        let slope = (rho_from - rho_to) * GRAVITY;
        let dz = height / strips as f64;
        let mut forward = 0.0;
        let mut reverse = 0.0;
        for k in 0..strips {
            let z = mid_height - height / 2.0 + (k as f64 + 0.5) * dz;
            let dp = d - slope * z;
            if dp > 0.0 {
                forward += cd * width * dz * (2.0 * rho_from * dp).sqrt();
            } else {
                reverse += cd * width * dz * (2.0 * rho_to * -dp).sqrt();
            }
        }
        (forward, reverse)
    }

    #[test]
    fn large_opening_stack_counterflow() {
        // Door centred on the datum, warm side 30°C, cold side 20°C, equal
        // datum pressures: neutral plane at geometric mid-height.
        let walton = large_opening_flow(0.9, 2.0, 0.78, 0.0, 0.0, 0.0, 30.0, 20.0);
        let neutral = walton.neutral_height_m.expect("counterflow expected");
        assert!((neutral - 1.0).abs() / 1.0 < 0.02, "neutral at {neutral}");
        let (oracle_fwd, oracle_rev) = strip_oracle(0.9, 2.0, 0.78, 0.0, 0.0, 30.0, 20.0, 1000);
        assert!((walton.forward_kg_s - oracle_fwd).abs() / oracle_fwd < 0.01);
        assert!((walton.reverse_kg_s - oracle_rev).abs() / oracle_rev < 0.01);
    }

    #[test]
    fn large_opening_counterflows_vanish_iff_balanced() {
        let balanced = large_opening_flow(0.9, 2.0, 0.78, 1.0, 0.5, 0.5, 24.0, 24.0);
        assert_eq!(balanced.forward_kg_s, 0.0);
        assert_eq!(balanced.reverse_kg_s, 0.0);
        // Door centred on the datum: any density difference puts the neutral
        // plane inside the opening and both directions flow.
        let unbalanced = large_opening_flow(0.9, 2.0, 0.78, 0.0, 0.0, 0.0, 24.0, 23.9);
        assert!(unbalanced.forward_kg_s > 0.0 && unbalanced.reverse_kg_s > 0.0);
    }

    fn one_zone_two_facades(exponent: f64) -> BuildingModel {
        bare_model(
            vec![zone("room", 30.0)],
            vec![
                crack(
                    "windward",
                    LinkEnd::Exterior {
                        facade_azimuth: 0.0,
                    },
                    LinkEnd::Zone {
                        zone: "room".into(),
                    },
                    0.002,
                    exponent,
                    0.0,
                ),
                crack(
                    "leeward",
                    LinkEnd::Zone {
                        zone: "room".into(),
                    },
                    LinkEnd::Exterior {
                        facade_azimuth: 90.0,
                    },
                    0.002,
                    exponent,
                    0.0,
                ),
            ],
        )
    }

    #[test]
    fn two_orifice_midpoint_pressure() {
        let model = one_zone_two_facades(0.5);
        let weather = still_air(5.0, 0.0, 21.0);
        let solution =
            solve_network(&model, &[21.0], &weather, &AirflowConfig::default()).unwrap();
        assert_relative_eq!(solution.zone_pressures[0], 1.5, epsilon = 1e-8);
        let inflow = solution.link_flows[0].net_kg_s();
        let outflow = solution.link_flows[1].net_kg_s();
        assert_relative_eq!(inflow, outflow, epsilon = 1e-8);
        let rho = air_density_at(21.0);
        let closed_form = 0.002 * (rho / AIR_DENSITY) * (10.5_f64 - 1.5).sqrt();
        assert_relative_eq!(inflow, closed_form, epsilon = 1e-8);
        assert!(solution.worst_residual_kg_s() < 1e-9);
    }

    #[test]
    fn sealed_network_is_all_zero() {
        let mut model = bare_model(vec![zone("a", 30.0)], Vec::new());
        model.zones[0].sealed = true;
        let weather = still_air(5.0, 0.0, 25.0);
        let solution =
            solve_network(&model, &[25.0], &weather, &AirflowConfig::default()).unwrap();
        assert_eq!(solution.zone_pressures, vec![0.0]);
        assert!(solution.link_flows.is_empty());
        assert_eq!(solution.air_changes(&model, 0), 0.0);
    }

    fn three_zone_chain() -> BuildingModel {
        bare_model(
            vec![zone("a", 30.0), zone("b", 40.0), zone("c", 25.0)],
            vec![
                crack(
                    "in",
                    LinkEnd::Exterior {
                        facade_azimuth: 0.0,
                    },
                    LinkEnd::Zone { zone: "a".into() },
                    0.003,
                    0.6,
                    1.5,
                ),
                AirflowLink {
                    id: "door_ab".into(),
                    kind: LinkKind::LargeOpening {
                        width: 0.9,
                        height: 2.0,
                        discharge_coefficient: 0.78,
                        openable: true,
                    },
                    from: LinkEnd::Zone { zone: "a".into() },
                    to: LinkEnd::Zone { zone: "b".into() },
                    mid_height: 1.0,
                },
                AirflowLink {
                    id: "door_bc".into(),
                    kind: LinkKind::LargeOpening {
                        width: 0.8,
                        height: 2.0,
                        discharge_coefficient: 0.78,
                        openable: true,
                    },
                    from: LinkEnd::Zone { zone: "b".into() },
                    to: LinkEnd::Zone { zone: "c".into() },
                    mid_height: 1.0,
                },
                crack(
                    "out",
                    LinkEnd::Zone { zone: "c".into() },
                    LinkEnd::Exterior {
                        facade_azimuth: 180.0,
                    },
                    0.003,
                    0.6,
                    1.5,
                ),
            ],
        )
    }

    #[test]
    fn chain_converges_and_is_order_independent() {
        let model = three_zone_chain();
        let temps = [26.0, 27.5, 25.5];
        let weather = still_air(3.0, 0.0, 24.0);
        let config = AirflowConfig::default();
        let solution = solve_network(&model, &temps, &weather, &config).unwrap();
        assert!(solution.worst_residual_kg_s() < 1e-6);

        let mut reordered = model.clone();
        reordered.zones.rotate_left(1);
        let temps_reordered = [27.5, 25.5, 26.0];
        let second = solve_network(&reordered, &temps_reordered, &weather, &config).unwrap();
        for (i, link) in model.links.iter().enumerate() {
            let j = reordered.links.iter().position(|l| l.id == link.id).unwrap();
            assert_relative_eq!(
                solution.link_flows[i].net_kg_s(),
                second.link_flows[j].net_kg_s(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn boundary_sign_flip_negates_flows() {
        let model = one_zone_two_facades(0.65);
        let config = AirflowConfig::default();
        let boundary = [4.0, -2.0];
        let negated = [-4.0, 2.0];
        let base = solve_with_boundary(&model, &[21.0], &boundary, 21.0, &config).unwrap();
        let flipped = solve_with_boundary(&model, &[21.0], &negated, 21.0, &config).unwrap();
        for (a, b) in base.link_flows.iter().zip(&flipped.link_flows) {
            assert_relative_eq!(a.net_kg_s(), -b.net_kg_s(), epsilon = 1e-9);
        }
        assert_relative_eq!(
            base.zone_pressures[0],
            -flipped.zone_pressures[0],
            epsilon = 1e-9
        );
    }

    #[test]
    fn air_change_arithmetic() {
        let model = bare_model(vec![zone("a", 30.0)], Vec::new());
        let mut solution = AirflowSolution::still(&model, &[21.0]);
        solution.zone_densities[0] = 1.2;
        solution.imposed_outdoor_kg_s[0] = 0.01;
        assert_relative_eq!(solution.air_changes(&model, 0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fixed_air_changes_round_trip() {
        let model = bare_model(vec![zone("a", 30.0), zone("b", 45.0)], Vec::new());
        let solution = AirflowSolution::fixed_air_changes(&model, &[5.0, 1.0]);
        assert_relative_eq!(solution.air_changes(&model, 0), 5.0, epsilon = 1e-12);
        assert_relative_eq!(solution.air_changes(&model, 1), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn doubling_orifice_areas_doubles_air_changes() {
        let model = one_zone_two_facades(0.5);
        let mut doubled = model.clone();
        for link in &mut doubled.links {
            if let LinkKind::Crack {
                flow_coefficient, ..
            } = &mut link.kind
            {
                *flow_coefficient *= 2.0;
            }
        }
        let weather = still_air(4.0, 0.0, 24.0);
        let config = AirflowConfig::default();
        let base = solve_network(&model, &[24.0], &weather, &config).unwrap();
        let big = solve_network(&doubled, &[24.0], &weather, &config).unwrap();
        let ratio = big.air_changes(&doubled, 0) / base.air_changes(&model, 0);
        assert!((ratio - 2.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn analytic_jacobian_matches_finite_differences() {
        let model = three_zone_chain();
        let temps = [26.0, 27.5, 25.5];
        let weather = still_air(3.0, 0.0, 24.0);
        let probe = [1.0, -0.5, 0.7];
        let worst = jacobian_fd_max_rel_error(
            &model,
            &temps,
            &weather,
            &AirflowConfig::default(),
            &probe,
            1e-4,
        );
        assert!(worst < 1e-4, "jacobian mismatch {worst}");
    }

    #[test]
    fn nonconvergence_is_reported() {
        let model = one_zone_two_facades(0.5);
        let weather = still_air(5.0, 0.0, 21.0);
        let config = AirflowConfig {
            max_iterations: 0,
            ..AirflowConfig::default()
        };
        let err = solve_network(&model, &[21.0], &weather, &config).unwrap_err();
        assert!(matches!(err, AirflowError::NonConvergence { .. }));
    }

    proptest! {
        #[test]
        fn crack_flow_is_odd(dp in -50.0_f64..50.0, n in 0.5_f64..1.0) {
            let plus = crack_flow(0.001, n, dp, 1.2, CRACK_EPS_PA);
            let minus = crack_flow(0.001, n, -dp, 1.2, CRACK_EPS_PA);
            prop_assert!((plus + minus).abs() < 1e-15);
        }

        #[test]
        fn wind_speed_scales_orifice_flows(k in 0.5_f64..3.0) {
            let model = one_zone_two_facades(0.5);
            let config = AirflowConfig::default();
            let base = solve_network(&model, &[24.0], &still_air(2.0, 0.0, 24.0), &config).unwrap();
            let scaled =
                solve_network(&model, &[24.0], &still_air(2.0 * k, 0.0, 24.0), &config).unwrap();
            for (a, b) in base.link_flows.iter().zip(&scaled.link_flows) {
                let ratio = b.net_kg_s() / a.net_kg_s();
                prop_assert!((ratio - k).abs() / k < 0.005, "ratio {ratio} vs k {k}");
            }
        }

        #[test]
        fn walton_forward_monotone_in_pressure(d in -2.0_f64..2.0) {
            let lo = large_opening_flow(0.9, 2.0, 0.78, 1.0, d, 0.0, 28.0, 22.0);
            let hi = large_opening_flow(0.9, 2.0, 0.78, 1.0, d + 0.1, 0.0, 28.0, 22.0);
            prop_assert!(hi.net_kg_s() >= lo.net_kg_s() - 1e-12);
            prop_assert!(lo.forward_kg_s >= 0.0 && lo.reverse_kg_s >= 0.0);
        }
    }
}
