//! Room geometry, POI layouts, stopping patterns, and the experiment grid.

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::exposure::EpidemicSpec;
use crate::geometry::Vec2;
use crate::rng::derive_seed;
use crate::runner::PopulationSpec;

/// Margin POI grids must keep from every wall.
pub const POI_WALL_MARGIN_M: f64 = 1.0;
/// Tolerance on uniform nearest-neighbor spacing.
pub const SPACING_TOLERANCE_M: f64 = 1e-9;

/// Rectangular room with an entrance and an exit on opposite walls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub width: f64,
    pub depth: f64,
    pub entrance: Vec2,
    pub exit: Vec2,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Wall {
    West,
    East,
    South,
    North,
}

impl RoomSpec {
    /// Room with the entrance centered on the west wall and the exit
    /// centered on the east wall.
    pub fn new(width: f64, depth: f64) -> Result<Self> {
        Self::with_doors(
            width,
            depth,
            Vec2::new(0.0, depth / 2.0),
            Vec2::new(width, depth / 2.0),
        )
    }

    pub fn with_doors(width: f64, depth: f64, entrance: Vec2, exit: Vec2) -> Result<Self> {
        if width <= 0.0 || depth <= 0.0 {
            return Err(Error::Config("room dimensions must be positive".into()));
        }
        let room = RoomSpec {
            width,
            depth,
            entrance,
            exit,
        };
        let entry_wall = room
            .wall_of(entrance)
            .ok_or_else(|| Error::Config("entrance must lie on a wall".into()))?;
        let exit_wall = room
            .wall_of(exit)
            .ok_or_else(|| Error::Config("exit must lie on a wall".into()))?;
        let opposite = matches!(
            (entry_wall, exit_wall),
            (Wall::West, Wall::East)
                | (Wall::East, Wall::West)
                | (Wall::South, Wall::North)
                | (Wall::North, Wall::South)
        );
        if !opposite {
            return Err(Error::Config("entrance and exit must be on opposite walls".into()));
        }
        Ok(room)
    }

    fn wall_of(&self, p: Vec2) -> Option<Wall> {
        let on_y = (0.0..=self.depth).contains(&p.y);
        let on_x = (0.0..=self.width).contains(&p.x);
        if p.x == 0.0 && on_y {
            Some(Wall::West)
        } else if p.x == self.width && on_y {
            Some(Wall::East)
        } else if p.y == 0.0 && on_x {
            Some(Wall::South)
        } else if p.y == self.depth && on_x {
            Some(Wall::North)
        } else {
            None
        }
    }

    pub fn area(&self) -> f64 {
        self.width * self.depth
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.width / 2.0, self.depth / 2.0)
    }

    /// Strictly inside the walls.
    pub fn contains(&self, p: Vec2) -> bool {
        p.x > 0.0 && p.x < self.width && p.y > 0.0 && p.y < self.depth
    }

    /// Whether a body of the given radius is pressed into the opening of
    /// width `2 * half_width` around `door` (reaching the wall there counts
    /// as crossing the door).
    pub fn door_crossing(&self, door: Vec2, position: Vec2, radius: f64, half_width: f64) -> bool {
        let (wall_gap, along) = if door.x == 0.0 {
            (position.x, (position.y - door.y).abs())
        } else if door.x == self.width {
            (self.width - position.x, (position.y - door.y).abs())
        } else if door.y == 0.0 {
            (position.y, (position.x - door.x).abs())
        } else {
            (self.depth - position.y, (position.x - door.x).abs())
        };
        wall_gap <= radius + 0.05 && along <= half_width
    }
}

/// POI positions with uniform nearest-neighbor spacing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoiLayout {
    pub points: Vec<Vec2>,
    pub n_crowding: usize,
    pub spacing: f64,
}

impl PoiLayout {
    /// Validates the uniform-spacing simplification: every point's
    /// nearest-neighbor distance must match within tolerance.
    pub fn uniform(points: Vec<Vec2>, room: &RoomSpec) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Config(
                "a POI layout needs at least 2 points for a defined spacing".into(),
            ));
        }
        for p in &points {
            if !room.contains(*p) {
                return Err(Error::Config(format!(
                    "POI ({}, {}) not strictly inside the room",
                    p.x, p.y
                )));
            }
        }
        let nn = nearest_neighbor_distances(&points);
        if nn.contains(&0.0) {
            return Err(Error::Config("coincident POIs".into()));
        }
        let spacing = nn[0];
        for &d in &nn {
            if (d - spacing).abs() > SPACING_TOLERANCE_M {
                return Err(Error::Config(format!(
                    "nearest-neighbor distances not uniform: {d} vs {spacing}"
                )));
            }
        }
        Ok(PoiLayout {
            n_crowding: points.len(),
            points,
            spacing,
        })
    }

    pub fn shortest_distance(&self) -> f64 {
        self.spacing
    }
}

fn nearest_neighbor_distances(points: &[Vec2]) -> Vec<f64> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| p.dist(*q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Shortest distance from any POI to its nearest POI.
pub fn shortest_poi_distance(points: &[Vec2]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Config(
            "shortest POI distance undefined for fewer than 2 POIs".into(),
        ));
    }
    Ok(nearest_neighbor_distances(points)
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Arranges a √n × √n square grid with the given nearest-neighbor spacing,
/// centered in the room.
pub fn build_poi_grid(n_pois: usize, spacing: f64, room: &RoomSpec) -> Result<PoiLayout> {
    if n_pois < 2 {
        return Err(Error::Config(
            "POI grids need at least 2 points (nearest-neighbor spacing is undefined for 1)".into(),
        ));
    }
    let side = (n_pois as f64).sqrt().round() as usize;
    if side * side != n_pois {
        return Err(Error::Config(format!("{n_pois} POIs is not a perfect square")));
    }
    if spacing <= 0.0 {
        return Err(Error::Config("POI spacing must be positive".into()));
    }
    let extent = (side - 1) as f64 * spacing;
    let margin_x = (room.width - extent) / 2.0;
    let margin_y = (room.depth - extent) / 2.0;
    if margin_x < POI_WALL_MARGIN_M {
        return Err(Error::Config(format!(
            "grid does not fit: x wall margin {margin_x:.3} m < {POI_WALL_MARGIN_M} m"
        )));
    }
    if margin_y < POI_WALL_MARGIN_M {
        return Err(Error::Config(format!(
            "grid does not fit: y wall margin {margin_y:.3} m < {POI_WALL_MARGIN_M} m"
        )));
    }
    let mut points = Vec::with_capacity(n_pois);
    for j in 0..side {
        for i in 0..side {
            points.push(Vec2::new(
                margin_x + i as f64 * spacing,
                margin_y + j as f64 * spacing,
            ));
        }
    }
    PoiLayout::uniform(points, room)
}

/// Labels each scene in a same-`n_crowding` group: 0 when its shortest POI
/// distance is below the group mean (centralized), 1 otherwise (dispersed).
pub fn classify_crowding_distribution(group: &[PoiLayout]) -> Result<Vec<u8>> {
    if group.is_empty() {
        return Err(Error::Grouping("empty scene group".into()));
    }
    let n = group[0].n_crowding;
    if group.iter().any(|l| l.n_crowding != n) {
        return Err(Error::Grouping(
            "scene group mixes different crowding counts".into(),
        ));
    }
    let mean: f64 =
        group.iter().map(PoiLayout::shortest_distance).sum::<f64>() / group.len() as f64;
    Ok(group
        .iter()
        .map(|l| u8::from(l.shortest_distance() >= mean))
        .collect())
}

/// Stops per visit and the (uniform) duration of each stop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingPattern {
    pub n_stopping: u32,
    pub t_stopping_s: f64,
}

impl StoppingPattern {
    pub fn new(n_stopping: u32, t_stopping_s: f64) -> Result<Self> {
        if n_stopping < 1 {
            return Err(Error::Config("n_stopping must be at least 1".into()));
        }
        if t_stopping_s <= 0.0 {
            return Err(Error::Config("t_stopping must be positive".into()));
        }
        Ok(StoppingPattern {
            n_stopping,
            t_stopping_s,
        })
    }

    /// Total stop duration: `n_stopping * t_stopping`.
    pub fn total_stop_duration(&self) -> f64 {
        self.n_stopping as f64 * self.t_stopping_s
    }
}

/// One experimental configuration (scenario × replicate) ready to run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario_id: usize,
    pub replicate: u32,
    pub room: RoomSpec,
    pub layout: PoiLayout,
    /// 0 = centralized, 1 = dispersed, relative to the scene group.
    pub d_crowding: u8,
    pub pattern: StoppingPattern,
    pub t_total_stop_s: f64,
    pub population: PopulationSpec,
    pub epidemic: EpidemicSpec,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if (self.t_total_stop_s - self.pattern.total_stop_duration()).abs() > 1e-9 {
            return Err(Error::Config(
                "t_total_stop must equal n_stopping * t_stopping".into(),
            ));
        }
        if self.pattern.total_stop_duration() > self.population.dwell_s {
            return Err(Error::Config(format!(
                "total stop duration {} s exceeds dwell {} s",
                self.pattern.total_stop_duration(),
                self.population.dwell_s
            )));
        }
        self.epidemic.validate()?;
        Ok(())
    }
}

/// Expands an experiment config into one spec per scenario (replicate 0).
pub fn enumerate_scenarios(config: &ExperimentConfig) -> Result<Vec<ScenarioSpec>> {
    expand(config, 1)
}

/// Expands an experiment config into every (scenario, replicate) run, each
/// with its own derived seed.
pub fn enumerate_runs(config: &ExperimentConfig) -> Result<Vec<ScenarioSpec>> {
    expand(config, config.replicates)
}

fn expand(config: &ExperimentConfig, replicates: u32) -> Result<Vec<ScenarioSpec>> {
    config.validate()?;
    let room = config.room()?;
    let population = config.population.resolve(config.epidemic.rho)?;
    let epidemic = config.epidemic.resolve()?;

    // Build layouts, then label crowding distribution within groups of equal
    // POI count.
    let layouts: Vec<PoiLayout> = config
        .poi_setups
        .iter()
        .map(|s| build_poi_grid(s.n_pois, s.spacing_m, &room))
        .collect::<Result<_>>()?;
    let mut labels = vec![0u8; layouts.len()];
    let mut counts: Vec<usize> = layouts.iter().map(|l| l.n_crowding).collect();
    counts.sort_unstable();
    counts.dedup();
    for count in counts {
        let members: Vec<usize> = (0..layouts.len())
            .filter(|&i| layouts[i].n_crowding == count)
            .collect();
        let group: Vec<PoiLayout> = members.iter().map(|&i| layouts[i].clone()).collect();
        let group_labels = classify_crowding_distribution(&group)?;
        for (&i, &label) in members.iter().zip(&group_labels) {
            labels[i] = label;
        }
    }
    for (setup, &computed) in config.poi_setups.iter().zip(&labels) {
        if let Some(declared) = setup.label {
            if declared != computed {
                return Err(Error::Config(format!(
                    "POI setup ({} POIs, {} m) declared label {declared} but classifies as {computed}",
                    setup.n_pois, setup.spacing_m
                )));
            }
        }
    }

    let mut specs = Vec::new();
    let mut scenario_id = 0;
    for (layout, &d_crowding) in layouts.iter().zip(&labels) {
        for &n in &config.n_stopping {
            for &t in &config.t_stopping_s {
                let pattern = StoppingPattern::new(n, t)?;
                if pattern.total_stop_duration() > population.dwell_s {
                    return Err(Error::Config(format!(
                        "pattern {n}x{t}s exceeds dwell {} s",
                        population.dwell_s
                    )));
                }
                for replicate in 0..replicates {
                    specs.push(ScenarioSpec {
                        scenario_id,
                        replicate,
                        room,
                        layout: layout.clone(),
                        d_crowding,
                        pattern,
                        t_total_stop_s: pattern.total_stop_duration(),
                        population: population.clone(),
                        epidemic: epidemic.clone(),
                        seed: derive_seed(config.base_seed, &[scenario_id as u64, replicate as u64]),
                    });
                }
                scenario_id += 1;
            }
        }
    }
    Ok(specs)
}
