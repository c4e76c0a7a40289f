//! Cough emission and exposure-risk accumulation.
//!
//! Infectors emit coughs at exponentially distributed intervals; each cough
//! leaves a stationary field at its emission point, described per distance
//! band by a fitted Gaussian time profile. Susceptible agents accumulate the
//! field value once per simulation step over their dwell window.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::config::GapLaw;
use crate::dynamics::{Role, TrajectoryLog};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// One distance band of the cough field: `[lo, hi)` in meters and the
/// Gaussian time-profile parameters (peak mass, peak time, width).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneRow {
    pub s: f64,
    pub lo: f64,
    pub hi: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Fitted Gaussian parameters for the nine representative distance planes.
/// Mirrored in `data/cough_planes.csv` for auditability.
pub const PLANE_TABLE: [PlaneRow; 9] = [
    PlaneRow { s: 0.1, lo: 0.0, hi: 0.2, a: 3.793e-6, b: 0.100, c: 0.030 },
    PlaneRow { s: 0.3, lo: 0.2, hi: 0.4, a: 3.337e-6, b: 0.140, c: 0.034 },
    PlaneRow { s: 0.5, lo: 0.4, hi: 0.6, a: 2.075e-6, b: 0.180, c: 0.096 },
    PlaneRow { s: 0.7, lo: 0.6, hi: 0.8, a: 8.738e-7, b: 0.220, c: 0.284 },
    PlaneRow { s: 0.9, lo: 0.8, hi: 1.0, a: 6.720e-7, b: 0.220, c: 0.360 },
    PlaneRow { s: 1.1, lo: 1.0, hi: 1.2, a: 4.455e-7, b: 0.300, c: 0.410 },
    PlaneRow { s: 1.3, lo: 1.2, hi: 1.4, a: 1.632e-7, b: 0.340, c: 0.763 },
    PlaneRow { s: 1.5, lo: 1.4, hi: 1.6, a: 5.821e-8, b: 0.340, c: 0.882 },
    PlaneRow { s: 1.7, lo: 1.6, hi: 1.7, a: 5.475e-10, b: 0.380, c: 1.971 },
];

/// Distance bands as shipped: nine rows partitioning `[0, 1.7]` m.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneTable {
    pub rows: Vec<PlaneRow>,
}

impl Default for PlaneTable {
    fn default() -> Self {
        PlaneTable {
            rows: PLANE_TABLE.to_vec(),
        }
    }
}

impl PlaneTable {
    /// Maximum distance covered by any band (the infectious range).
    pub fn max_range(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.hi)
    }

    /// Parses the CSV mirror (columns `s,lo,hi,a,b,c`, header row).
    pub fn from_csv(path: &std::path::Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<PlaneRow>() {
            rows.push(rec?);
        }
        if rows.is_empty() {
            return Err(Error::Config("plane table file has no rows".into()));
        }
        Ok(PlaneTable { rows })
    }
}

/// Epidemic parameters for one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpidemicSpec {
    /// Mean gap between an infector's coughs, seconds.
    pub mean_cough_interval_s: f64,
    #[serde(default)]
    pub cough_gap_law: GapLaw,
    /// Upper bound of the uniform infectious-duration law, seconds.
    pub max_infectious_s: f64,
    /// Cut-line for high exposure risk, micrograms.
    pub alpha_ug: f64,
    /// New cases per high-risk individual.
    pub beta: f64,
    /// Population down-scaling proportion.
    pub rho: f64,
    #[serde(default)]
    pub planes: PlaneTable,
}

impl EpidemicSpec {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_ug <= 0.0 {
            return Err(Error::Config("alpha must be positive".into()));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::Config("beta must be in (0, 1]".into()));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::Config("rho must be in (0, 1]".into()));
        }
        if self.mean_cough_interval_s <= 0.0 || self.max_infectious_s < 0.0 {
            return Err(Error::Config("cough timing parameters must be positive".into()));
        }
        Ok(())
    }
}

/// One cough emission.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoughEvent {
    pub infector: usize,
    pub index: usize,
    /// Emission time, seconds.
    pub start_s: f64,
    /// Infector position at the emission step (the field stays here).
    pub origin: Vec2,
    /// Sampled infectious duration, seconds.
    pub infectious_s: f64,
}

/// Accumulated exposure per agent. Infector entries stay at zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExposureLedger {
    entries: Vec<(usize, Role, f64)>,
}

impl ExposureLedger {
    pub fn exposure(&self, agent: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == agent).map(|e| e.2)
    }

    pub fn susceptible_exposures(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries
            .iter()
            .filter(|e| e.1 == Role::Susceptible)
            .map(|e| e.2)
    }

    pub fn susceptible_count(&self) -> usize {
        self.entries.iter().filter(|e| e.1 == Role::Susceptible).count()
    }

    /// Sums two ledgers entry-wise (agents must match).
    pub fn merged(&self, other: &ExposureLedger) -> ExposureLedger {
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| {
                debug_assert_eq!(a.0, b.0);
                (a.0, a.1, a.2 + b.2)
            })
            .collect();
        ExposureLedger { entries }
    }
}

/// Draws the cough schedule for one infector over its in-room interval.
///
/// Gaps are i.i.d. with the configured mean and law; each cough's
/// infectious duration is uniform on `[0, max_infectious_s]`. The origin is
/// the infector's position at the emission step.
pub fn schedule_coughs<R: Rng>(
    track_positions: &[Vec2],
    infector: usize,
    enter_s: f64,
    dt: f64,
    spec: &EpidemicSpec,
    rng: &mut R,
) -> Vec<CoughEvent> {
    let mut events = Vec::new();
    if track_positions.is_empty() {
        return events;
    }
    let exit_s = enter_s + track_positions.len() as f64 * dt;
    let exponential = Exp::new(1.0 / spec.mean_cough_interval_s).expect("positive rate");
    let mut draw_gap = |rng: &mut R| match spec.cough_gap_law {
        GapLaw::Exponential => exponential.sample(rng),
        GapLaw::Fixed => spec.mean_cough_interval_s,
    };
    let mut t = enter_s + draw_gap(rng);
    let mut index = 0;
    while t < exit_s {
        let step_in_track = ((t - enter_s) / dt).floor() as usize;
        let origin = track_positions[step_in_track.min(track_positions.len() - 1)];
        events.push(CoughEvent {
            infector,
            index,
            start_s: t,
            origin,
            infectious_s: rng.random_range(0.0..=spec.max_infectious_s),
        });
        index += 1;
        t += draw_gap(rng);
    }
    events
}

/// Looks up the distance band containing `distance`. `Ok(None)` means the
/// distance is beyond the infectious range (zero exposure).
pub fn plane_params(table: &PlaneTable, distance: f64) -> Result<Option<PlaneRow>> {
    if distance < 0.0 {
        return Err(Error::Argument(format!("negative distance {distance}")));
    }
    for row in &table.rows {
        let inside = if row.hi >= table.max_range() {
            distance >= row.lo && distance <= row.hi
        } else {
            distance >= row.lo && distance < row.hi
        };
        if inside {
            return Ok(Some(*row));
        }
    }
    Ok(None)
}

/// Field value of one cough at `distance` meters and `t_interval` seconds
/// after emission. Zero beyond the infectious duration or range.
pub fn instantaneous_exposure(
    table: &PlaneTable,
    distance: f64,
    t_interval: f64,
    cough: &CoughEvent,
) -> f64 {
    if t_interval < 0.0 || t_interval > cough.infectious_s {
        return 0.0;
    }
    match plane_params(table, distance) {
        Ok(Some(row)) => {
            let z = (t_interval - row.b) / row.c;
            row.a * (-z * z).exp()
        }
        _ => 0.0,
    }
}

/// Accumulates per-susceptible exposure over every simulation step of the
/// agent's dwell window, summing all still-infectious coughs of infectors
/// currently in the room. `sample_stride` keeps every n-th step (default 1).
pub fn accumulate_exposure(
    trajectories: &TrajectoryLog,
    coughs: &[CoughEvent],
    spec: &EpidemicSpec,
    dwell_s: f64,
    sample_stride: usize,
) -> ExposureLedger {
    let dt = trajectories.dt;
    let stride = sample_stride.max(1);
    let max_range = spec.planes.max_range();

    // Sorted by start time for windowed scans.
    let mut sorted: Vec<&CoughEvent> = coughs.iter().collect();
    sorted.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));

    let mut entries = Vec::with_capacity(trajectories.tracks.len());
    for track in &trajectories.tracks {
        if track.role == Role::Infector {
            entries.push((track.id, track.role, 0.0));
            continue;
        }
        let mut total = 0.0;
        let dwell_steps = (dwell_s / dt).round() as u64;
        let mut lo = 0;
        for (k, pos) in track.positions.iter().enumerate() {
            let step = track.enter_step + k as u64;
            if step > track.enter_step + dwell_steps {
                break;
            }
            if k % stride != 0 {
                continue;
            }
            let t = step as f64 * dt;
            // Advance past coughs that can no longer be infectious.
            while lo < sorted.len() && sorted[lo].start_s + spec.max_infectious_s < t {
                lo += 1;
            }
            for cough in &sorted[lo..] {
                if cough.start_s > t {
                    break;
                }
                let t_interval = t - cough.start_s;
                if t_interval > cough.infectious_s {
                    continue;
                }
                if !trajectories.in_room_at(cough.infector, step) {
                    continue;
                }
                let d = pos.dist(cough.origin);
                if d > max_range {
                    continue;
                }
                total += instantaneous_exposure(&spec.planes, d, t_interval, cough);
            }
        }
        entries.push((track.id, track.role, total));
    }
    ExposureLedger { entries }
}

/// Number of susceptibles whose exposure strictly exceeds the cut-line.
pub fn count_high_risk(ledger: &ExposureLedger, alpha_ug: f64) -> usize {
    ledger
        .susceptible_exposures()
        .filter(|&e| e > alpha_ug)
        .count()
}

/// Predicted new cases: simulation-scale `beta * c_risk`, and the same value
/// scaled back to the real population by `1 / rho`.
pub fn predict_new_cases(c_risk: usize, beta: f64, rho: f64) -> (f64, f64) {
    let sim = beta * c_risk as f64;
    (sim, sim / rho)
}

/// Mean exposure over susceptibles only.
pub fn average_exposure(ledger: &ExposureLedger) -> Result<f64> {
    let n = ledger.susceptible_count();
    if n == 0 {
        return Err(Error::UndefinedAverage);
    }
    Ok(ledger.susceptible_exposures().sum::<f64>() / n as f64)
}

/// Rounds real-world totals down to simulation scale.
pub fn scale_population(real_total: u64, real_infectors: u64, rho: f64) -> Result<(u64, u64)> {
    if real_total == 0 || real_infectors == 0 {
        return Err(Error::Argument("population counts must be positive".into()));
    }
    let sim_total = (real_total as f64 * rho).round() as u64;
    let sim_infectors = (real_infectors as f64 * rho).round() as u64;
    Ok((sim_total, sim_infectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::AgentTrack;
    use crate::rng::rng_from;

    fn spec() -> EpidemicSpec {
        EpidemicSpec {
            mean_cough_interval_s: 15.0,
            cough_gap_law: GapLaw::Exponential,
            max_infectious_s: 15.0,
            alpha_ug: 7.0,
            beta: 6.2e-4,
            rho: 4.0738e-5,
            planes: PlaneTable::default(),
        }
    }

    fn static_track(id: usize, role: Role, pos: Vec2, steps: usize) -> AgentTrack {
        AgentTrack {
            id,
            role,
            enter_step: 0,
            positions: vec![pos; steps],
        }
    }

    #[test]
    fn plane_rows_partition_range() {
        let table = PlaneTable::default();
        let mut edge = 0.0;
        for row in &table.rows {
            assert_eq!(row.lo, edge);
            assert!(row.hi > row.lo);
            edge = row.hi;
        }
        assert_eq!(edge, 1.7);
    }

    #[test]
    fn plane_lookup_matches_table() {
        let table = PlaneTable::default();
        let row = plane_params(&table, 0.05).unwrap().unwrap();
        assert_eq!((row.a, row.b, row.c), (3.793e-6, 0.100, 0.030));
        let row = plane_params(&table, 0.25).unwrap().unwrap();
        assert_eq!((row.a, row.b, row.c), (3.337e-6, 0.140, 0.034));
        assert!(plane_params(&table, 1.75).unwrap().is_none());
        assert!(plane_params(&table, -0.1).is_err());
    }

    #[test]
    fn boundary_distances_map_half_open() {
        let table = PlaneTable::default();
        // 0.2 belongs to the second band, not the first.
        assert_eq!(plane_params(&table, 0.2).unwrap().unwrap().s, 0.3);
        // The closing edge 1.7 still belongs to the last band.
        assert_eq!(plane_params(&table, 1.7).unwrap().unwrap().s, 1.7);
    }

    #[test]
    fn peak_exposure_equals_amplitude() {
        let table = PlaneTable::default();
        let cough = CoughEvent {
            infector: 0,
            index: 0,
            start_s: 0.0,
            origin: Vec2::ZERO,
            infectious_s: 15.0,
        };
        let e = instantaneous_exposure(&table, 0.05, 0.100, &cough);
        assert!((e - 3.793e-6).abs() / 3.793e-6 < 1e-15);
        // One width past the peak: amplitude / e.
        let e = instantaneous_exposure(&table, 0.05, 0.130, &cough);
        let expected = 3.793e-6 * (-1.0f64).exp();
        assert!((e - expected).abs() / expected < 1e-12);
        // Outside the infectious window.
        assert_eq!(instantaneous_exposure(&table, 0.05, 15.5, &cough), 0.0);
    }

    #[test]
    fn accumulation_matches_direct_summation() {
        // One static susceptible 0.05 m from a single cough origin; oracle is
        // a direct sum of the Gaussian over the step grid.
        let dt = 0.04;
        let steps = 500;
        let spec = spec();
        let traj = TrajectoryLog {
            dt,
            tracks: vec![
                static_track(0, Role::Infector, Vec2::ZERO, steps),
                static_track(1, Role::Susceptible, Vec2::new(0.05, 0.0), steps),
            ],
        };
        let cough = CoughEvent {
            infector: 0,
            index: 0,
            start_s: 0.0,
            origin: Vec2::ZERO,
            infectious_s: 15.0,
        };
        let ledger = accumulate_exposure(&traj, &[cough], &spec, steps as f64 * dt, 1);

        let (a, b, c) = (3.793e-6, 0.100, 0.030);
        let mut oracle = 0.0;
        for k in 0..steps {
            let t = k as f64 * dt;
            if t <= 15.0 {
                let z: f64 = (t - b) / c;
                oracle += a * (-z * z).exp();
            }
        }
        let got = ledger.exposure(1).unwrap();
        assert!((got - oracle).abs() / oracle < 1e-12, "{got} vs {oracle}");
        assert_eq!(ledger.exposure(0).unwrap(), 0.0);
    }

    #[test]
    fn out_of_range_and_no_infector_cases() {
        let dt = 0.04;
        let spec = spec();
        let traj = TrajectoryLog {
            dt,
            tracks: vec![
                static_track(0, Role::Infector, Vec2::ZERO, 100),
                static_track(1, Role::Susceptible, Vec2::new(5.0, 0.0), 100),
            ],
        };
        let cough = CoughEvent {
            infector: 0,
            index: 0,
            start_s: 0.0,
            origin: Vec2::ZERO,
            infectious_s: 15.0,
        };
        let ledger = accumulate_exposure(&traj, &[cough], &spec, 4.0, 1);
        assert_eq!(ledger.exposure(1).unwrap(), 0.0);

        let empty = accumulate_exposure(&traj, &[], &spec, 4.0, 1);
        assert_eq!(empty.exposure(1).unwrap(), 0.0);
    }

    #[test]
    fn exposure_is_additive_over_cough_sets() {
        let dt = 0.04;
        let spec = spec();
        let traj = TrajectoryLog {
            dt,
            tracks: vec![
                static_track(0, Role::Infector, Vec2::ZERO, 800),
                static_track(1, Role::Susceptible, Vec2::new(0.3, 0.0), 800),
            ],
        };
        let c1 = CoughEvent {
            infector: 0,
            index: 0,
            start_s: 1.0,
            origin: Vec2::ZERO,
            infectious_s: 10.0,
        };
        let c2 = CoughEvent {
            infector: 0,
            index: 1,
            start_s: 14.0,
            origin: Vec2::new(0.1, 0.0),
            infectious_s: 8.0,
        };
        let both = accumulate_exposure(&traj, &[c1, c2], &spec, 32.0, 1);
        let first = accumulate_exposure(&traj, &[c1], &spec, 32.0, 1);
        let second = accumulate_exposure(&traj, &[c2], &spec, 32.0, 1);
        let sum = first.merged(&second);
        let (a, b) = (both.exposure(1).unwrap(), sum.exposure(1).unwrap());
        // Identical to summation reordering.
        assert!((a - b).abs() <= 1e-12 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn cough_schedule_statistics() {
        // 25 min in room at mean gap 15 s: about 100 coughs, all durations
        // within [0, 15].
        let spec = spec();
        let positions = vec![Vec2::new(1.0, 1.0); (1500.0_f64 / 0.04) as usize];
        let mut counts = Vec::new();
        for seed in 0..40 {
            let mut rng = rng_from(seed);
            let events = schedule_coughs(&positions, 0, 0.0, 0.04, &spec, &mut rng);
            for e in &events {
                assert!((0.0..=15.0).contains(&e.infectious_s));
                assert!(e.start_s >= 0.0 && e.start_s < 1500.0);
            }
            counts.push(events.len() as f64);
        }
        let mean = counts.iter().sum::<f64>() / counts.len() as f64;
        assert!((mean - 100.0).abs() < 10.0, "mean cough count {mean}");
    }

    #[test]
    fn no_in_room_time_means_no_coughs() {
        let spec = spec();
        let mut rng = rng_from(1);
        let events = schedule_coughs(&[], 0, 0.0, 0.04, &spec, &mut rng);
        assert!(events.is_empty());
    }

    #[test]
    fn fixed_gap_law_coughs_on_the_dot() {
        let mut spec = spec();
        spec.cough_gap_law = GapLaw::Fixed;
        let positions = vec![Vec2::ZERO; (100.0_f64 / 0.04) as usize];
        let mut rng = rng_from(4);
        let events = schedule_coughs(&positions, 0, 0.0, 0.04, &spec, &mut rng);
        assert_eq!(events.len(), 6);
        for (k, e) in events.iter().enumerate() {
            assert!((e.start_s - 15.0 * (k + 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn high_risk_count_is_strict() {
        let ledger = ExposureLedger {
            entries: vec![
                (0, Role::Susceptible, 8.0),
                (1, Role::Susceptible, 6.0),
                (2, Role::Susceptible, 7.5),
            ],
        };
        assert_eq!(count_high_risk(&ledger, 7.0), 2);
        let exactly = ExposureLedger {
            entries: vec![(0, Role::Susceptible, 7.0)],
        };
        assert_eq!(count_high_risk(&exactly, 7.0), 0);
        assert_eq!(count_high_risk(&ExposureLedger::default(), 7.0), 0);
    }

    #[test]
    fn new_case_prediction_is_linear() {
        assert_eq!(predict_new_cases(0, 6.2e-4, 4.0738e-5), (0.0, 0.0));
        let (sim, scaled) = predict_new_cases(1000, 6.2e-4, 4.0738e-5);
        assert!((sim - 0.62).abs() < 1e-12);
        assert!((scaled - 0.62 / 4.0738e-5).abs() / scaled < 1e-12);
        let (a, _) = predict_new_cases(3, 0.0, 1.0);
        assert_eq!(a, 0.0);
        // Linearity in c_risk.
        let (s1, _) = predict_new_cases(7, 6.2e-4, 1.0);
        let (s2, _) = predict_new_cases(5, 6.2e-4, 1.0);
        let (s3, _) = predict_new_cases(12, 6.2e-4, 1.0);
        assert!((s1 + s2 - s3).abs() < 1e-15);
    }

    #[test]
    fn average_excludes_infectors() {
        let ledger = ExposureLedger {
            entries: vec![
                (0, Role::Susceptible, 2.0),
                (1, Role::Susceptible, 4.0),
                (2, Role::Susceptible, 6.0),
                (3, Role::Infector, 0.0),
            ],
        };
        assert_eq!(average_exposure(&ledger).unwrap(), 4.0);
        let infectors_only = ExposureLedger {
            entries: vec![(0, Role::Infector, 0.0)],
        };
        assert!(matches!(
            average_exposure(&infectors_only),
            Err(Error::UndefinedAverage)
        ));
    }

    #[test]
    fn population_scaling_round_trips_reported_counts() {
        let (total, inf) = scale_population(257_177_921, 1_759_672, 4.0738e-5).unwrap();
        assert_eq!(total, 10_477);
        assert_eq!(inf, 72);
        let (t, i) = scale_population(100, 10, 1.0).unwrap();
        assert_eq!((t, i), (100, 10));
    }
}
