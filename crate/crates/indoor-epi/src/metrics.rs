//! Personal spaces via room-bounded Voronoi cells and the spatio-temporal
//! distribution indicator (standard deviation of cell areas).

use crate::config::SigmaReduction;
use crate::dynamics::TrajectoryLog;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::scenario::RoomSpec;

/// Personal-space areas of everyone in the room at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct VoronoiSample {
    pub time_s: f64,
    /// Current occupant count P.
    pub occupancy: usize,
    /// (agent id, cell area in m²) per occupant.
    pub areas: Vec<(usize, f64)>,
}

/// Clips each occupant's Voronoi cell to the room rectangle and returns the
/// cell areas. Exactly coincident positions are separated by a deterministic
/// 1e-9 m nudge first.
pub fn compute_personal_spaces(
    occupants: &[(usize, Vec2)],
    room: &RoomSpec,
    time_s: f64,
) -> Result<VoronoiSample> {
    if occupants.is_empty() {
        return Err(Error::EmptySample);
    }
    let sites = deduplicate(occupants);
    let areas = sites
        .iter()
        .enumerate()
        .map(|(i, &(id, site))| {
            let mut cell = rectangle(room);
            for (j, &(_, other)) in sites.iter().enumerate() {
                if i != j {
                    cell = clip_closer_half_plane(&cell, site, other);
                    if cell.is_empty() {
                        break;
                    }
                }
            }
            (id, polygon_area(&cell))
        })
        .collect();
    Ok(VoronoiSample {
        time_s,
        occupancy: sites.len(),
        areas,
    })
}

fn deduplicate(occupants: &[(usize, Vec2)]) -> Vec<(usize, Vec2)> {
    let mut sites: Vec<(usize, Vec2)> = occupants.to_vec();
    for i in 0..sites.len() {
        // Count duplicates among the original positions, then nudge.
        let bumps = (0..i).filter(|&j| occupants[j].1 == occupants[i].1).count();
        if bumps > 0 {
            sites[i].1.x += bumps as f64 * 1e-9;
        }
    }
    sites
}

fn rectangle(room: &RoomSpec) -> Vec<Vec2> {
    vec![
        Vec2::new(0.0, 0.0),
        Vec2::new(room.width, 0.0),
        Vec2::new(room.width, room.depth),
        Vec2::new(0.0, room.depth),
    ]
}

/// Sutherland-Hodgman clip keeping the half-plane of points no farther from
/// `site` than from `other` (the perpendicular-bisector side of `site`).
fn clip_closer_half_plane(polygon: &[Vec2], site: Vec2, other: Vec2) -> Vec<Vec2> {
    let mid = (site + other) * 0.5;
    let normal = other - site;
    let signed = |p: Vec2| (p - mid).dot(normal);

    let mut out = Vec::with_capacity(polygon.len() + 1);
    for k in 0..polygon.len() {
        let current = polygon[k];
        let next = polygon[(k + 1) % polygon.len()];
        let (dc, dn) = (signed(current), signed(next));
        if dc <= 0.0 {
            out.push(current);
        }
        if (dc < 0.0 && dn > 0.0) || (dc > 0.0 && dn < 0.0) {
            let t = dc / (dc - dn);
            out.push(current + (next - current) * t);
        }
    }
    out
}

fn polygon_area(polygon: &[Vec2]) -> f64 {
    if polygon.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for k in 0..polygon.len() {
        let a = polygon[k];
        let b = polygon[(k + 1) % polygon.len()];
        twice += a.x * b.y - b.x * a.y;
    }
    twice.abs() / 2.0
}

/// Population standard deviation of personal spaces, with the mean taken as
/// room area over occupancy.
pub fn sample_stddev(sample: &VoronoiSample, room: &RoomSpec) -> f64 {
    let p = sample.occupancy as f64;
    let mean = room.area() / p;
    let ss: f64 = sample.areas.iter().map(|(_, a)| (a - mean).powi(2)).sum();
    (ss / p).sqrt()
}

/// Personal-space deviation sampled every `stride_s` over the run, reduced
/// to one value per scenario. Ticks with fewer than two occupants are
/// skipped; if none qualify the indicator is undefined.
pub fn scenario_space_indicator(
    trajectories: &TrajectoryLog,
    room: &RoomSpec,
    stride_s: f64,
    reduction: SigmaReduction,
) -> Result<f64> {
    if stride_s <= 0.0 {
        return Err(Error::Argument("stride must be positive".into()));
    }
    let stride_steps = (stride_s / trajectories.dt).round().max(1.0) as u64;
    let last = trajectories.last_step();
    let mut sigmas = Vec::new();
    let mut tick = 0;
    while tick <= last {
        let occupants = trajectories.occupants_at(tick);
        if occupants.len() >= 2 {
            let sample = compute_personal_spaces(&occupants, room, tick as f64 * trajectories.dt)?;
            sigmas.push(sample_stddev(&sample, room));
        }
        tick += stride_steps;
    }
    if sigmas.is_empty() {
        return Err(Error::IndicatorUndefined);
    }
    Ok(match reduction {
        SigmaReduction::Mean => sigmas.iter().sum::<f64>() / sigmas.len() as f64,
        SigmaReduction::Median => {
            sigmas.sort_by(f64::total_cmp);
            let mid = sigmas.len() / 2;
            if sigmas.len() % 2 == 1 {
                sigmas[mid]
            } else {
                (sigmas[mid - 1] + sigmas[mid]) / 2.0
            }
        }
    })
}

/// Brute-force nearest-site cell areas on a raster grid. Test oracle;
/// exported for the acceptance suite.
pub fn rasterized_areas(sites: &[(usize, Vec2)], room: &RoomSpec, resolution_m: f64) -> Vec<(usize, f64)> {
    let nx = (room.width / resolution_m).round() as usize;
    let ny = (room.depth / resolution_m).round() as usize;
    let pixel = (room.width / nx as f64) * (room.depth / ny as f64);
    let mut acc = vec![0.0f64; sites.len()];
    for gy in 0..ny {
        let y = (gy as f64 + 0.5) * room.depth / ny as f64;
        for gx in 0..nx {
            let x = (gx as f64 + 0.5) * room.width / nx as f64;
            let p = Vec2::new(x, y);
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (k, &(_, s)) in sites.iter().enumerate() {
                let d = (p - s).norm_sq();
                if d < best_d {
                    best_d = d;
                    best = k;
                }
            }
            acc[best] += pixel;
        }
    }
    sites.iter().zip(acc).map(|(&(id, _), a)| (id, a)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{AgentTrack, Role};
    use proptest::prelude::*;

    fn room22() -> RoomSpec {
        RoomSpec::new(22.0, 22.0).unwrap()
    }

    #[test]
    fn lone_occupant_owns_the_room() {
        let sample =
            compute_personal_spaces(&[(0, Vec2::new(3.0, 17.0))], &room22(), 0.0).unwrap();
        assert_eq!(sample.occupancy, 1);
        assert!((sample.areas[0].1 - 484.0).abs() < 1e-9);
        assert_eq!(sample_stddev(&sample, &room22()), 0.0);
    }

    #[test]
    fn mirror_pair_splits_evenly() {
        let sample = compute_personal_spaces(
            &[(0, Vec2::new(7.0, 11.0)), (1, Vec2::new(15.0, 11.0))],
            &room22(),
            0.0,
        )
        .unwrap();
        for &(_, a) in &sample.areas {
            assert!((a - 242.0).abs() < 1e-9, "area {a}");
        }
    }

    #[test]
    fn uniform_grid_gives_equal_cells() {
        let room = room22();
        let k = 4;
        let mut occupants = Vec::new();
        for j in 0..k {
            for i in 0..k {
                occupants.push((
                    occupants.len(),
                    Vec2::new(
                        (i as f64 + 0.5) * room.width / k as f64,
                        (j as f64 + 0.5) * room.depth / k as f64,
                    ),
                ));
            }
        }
        let sample = compute_personal_spaces(&occupants, &room, 0.0).unwrap();
        let expected = room.area() / (k * k) as f64;
        for &(_, a) in &sample.areas {
            assert!((a - expected).abs() < 1e-9);
        }
        // And the rasterized oracle agrees within 0.5%.
        let oracle = rasterized_areas(&occupants, &room, 0.01);
        for (&(_, a), &(_, o)) in sample.areas.iter().zip(&oracle) {
            assert!((a - o).abs() / o < 0.005, "clip {a} vs raster {o}");
        }
        assert!(sample_stddev(&sample, &room) < 1e-9);
    }

    #[test]
    fn duplicate_positions_are_separated() {
        let p = Vec2::new(11.0, 11.0);
        let sample = compute_personal_spaces(&[(0, p), (1, p), (2, p)], &room22(), 0.0).unwrap();
        let total: f64 = sample.areas.iter().map(|(_, a)| a).sum();
        assert!((total - 484.0).abs() / 484.0 < 1e-6);
        for &(_, a) in &sample.areas {
            assert!(a > 0.0);
        }
    }

    #[test]
    fn stddev_from_known_areas() {
        // Two sites whose bisector cuts at x = 252/22 give areas {252, 232}.
        let xb = 252.0 / 22.0;
        let sample = compute_personal_spaces(
            &[(0, Vec2::new(xb - 1.0, 11.0)), (1, Vec2::new(xb + 1.0, 11.0))],
            &room22(),
            0.0,
        )
        .unwrap();
        let sigma = sample_stddev(&sample, &room22());
        assert!((sigma - 10.0).abs() < 1e-9, "sigma {sigma}");

        // Areas {100, 384}: mean 242, deviation 142.
        let xb = 100.0 / 22.0;
        let sample = compute_personal_spaces(
            &[(0, Vec2::new(xb - 1.0, 11.0)), (1, Vec2::new(xb + 1.0, 11.0))],
            &room22(),
            0.0,
        )
        .unwrap();
        let mut areas: Vec<f64> = sample.areas.iter().map(|(_, a)| *a).collect();
        areas.sort_by(f64::total_cmp);
        assert!((areas[0] - 100.0).abs() < 1e-9 && (areas[1] - 384.0).abs() < 1e-9);
        assert!((sample_stddev(&sample, &room22()) - 142.0).abs() < 1e-9);
    }

    #[test]
    fn clustering_raises_the_deviation() {
        let room = room22();
        let mut uniform = Vec::new();
        for j in 0..3 {
            for i in 0..3 {
                uniform.push((
                    uniform.len(),
                    Vec2::new(
                        (i as f64 + 0.5) * room.width / 3.0,
                        (j as f64 + 0.5) * room.depth / 3.0,
                    ),
                ));
            }
        }
        let mut clustered = Vec::new();
        for j in 0..3 {
            for i in 0..3 {
                clustered.push((
                    clustered.len(),
                    Vec2::new(1.0 + i as f64 * 0.8, 1.0 + j as f64 * 0.8),
                ));
            }
        }
        let su = compute_personal_spaces(&uniform, &room, 0.0).unwrap();
        let sc = compute_personal_spaces(&clustered, &room, 0.0).unwrap();
        assert!(sample_stddev(&sc, &room) > sample_stddev(&su, &room));
    }

    #[test]
    fn empty_room_is_an_empty_sample() {
        assert!(matches!(
            compute_personal_spaces(&[], &room22(), 0.0),
            Err(Error::EmptySample)
        ));
    }

    fn synthetic_two_tick_log() -> TrajectoryLog {
        // Positions chosen so the two sampled ticks have sigma 10 and 20.
        let dt = 0.04;
        let first = 252.0 / 22.0;
        let second = 262.0 / 22.0;
        let steps = 1600usize;
        let make = |offset: f64| -> Vec<Vec2> {
            (0..steps)
                .map(|k| {
                    let x = if k < 800 { first } else { second };
                    Vec2::new(x + offset, 11.0)
                })
                .collect()
        };
        TrajectoryLog {
            dt,
            tracks: vec![
                AgentTrack {
                    id: 0,
                    role: Role::Susceptible,
                    enter_step: 500,
                    positions: make(-1.0),
                },
                AgentTrack {
                    id: 1,
                    role: Role::Susceptible,
                    enter_step: 500,
                    positions: make(1.0),
                },
            ],
        }
    }

    #[test]
    fn indicator_averages_tick_deviations() {
        // Ticks at steps 0 (empty), 1000 (sigma 10), 2000 (sigma 20).
        let log = synthetic_two_tick_log();
        let got =
            scenario_space_indicator(&log, &room22(), 40.0, SigmaReduction::Mean).unwrap();
        assert!((got - 15.0).abs() < 1e-9, "indicator {got}");
    }

    #[test]
    fn indicator_single_tick_is_that_tick() {
        let mut log = synthetic_two_tick_log();
        for t in &mut log.tracks {
            t.positions.truncate(800);
        }
        let got =
            scenario_space_indicator(&log, &room22(), 40.0, SigmaReduction::Mean).unwrap();
        assert!((got - 10.0).abs() < 1e-9);
    }

    #[test]
    fn indicator_undefined_without_pairs() {
        let log = TrajectoryLog {
            dt: 0.04,
            tracks: vec![AgentTrack {
                id: 0,
                role: Role::Susceptible,
                enter_step: 0,
                positions: vec![Vec2::new(1.0, 1.0); 100],
            }],
        };
        assert!(matches!(
            scenario_space_indicator(&log, &room22(), 40.0, SigmaReduction::Mean),
            Err(Error::IndicatorUndefined)
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn areas_partition_the_room(
            seeds in proptest::collection::vec((0.2f64..21.8, 0.2f64..21.8), 2..30)
        ) {
            let room = room22();
            let occupants: Vec<(usize, Vec2)> = seeds
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| (i, Vec2::new(x, y)))
                .collect();
            let sample = compute_personal_spaces(&occupants, &room, 0.0).unwrap();
            let total: f64 = sample.areas.iter().map(|(_, a)| a).sum();
            prop_assert!((total - room.area()).abs() / room.area() < 1e-6);
            for &(_, a) in &sample.areas {
                prop_assert!(a > 0.0);
            }
        }

        #[test]
        fn stddev_is_permutation_invariant(
            seeds in proptest::collection::vec((0.2f64..21.8, 0.2f64..21.8), 3..12),
            rotate in 0usize..12,
        ) {
            let room = room22();
            let occupants: Vec<(usize, Vec2)> = seeds
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| (i, Vec2::new(x, y)))
                .collect();
            let mut permuted = occupants.clone();
            let len = permuted.len();
            permuted.rotate_left(rotate % len);
            let a = sample_stddev(&compute_personal_spaces(&occupants, &room, 0.0).unwrap(), &room);
            let b = sample_stddev(&compute_personal_spaces(&permuted, &room, 0.0).unwrap(), &room);
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
