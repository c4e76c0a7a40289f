//! Entry scheduling: exponential arrival gaps and evenly interleaved
//! infectors.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::config::GapLaw;
use crate::error::{Error, Result};
use crate::runner::PopulationSpec;

use super::Role;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSlot {
    pub agent: usize,
    pub role: Role,
    pub enter_time_s: f64,
}

/// Arrival order, times, and roles for one scenario run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntrySchedule {
    pub arrivals: Vec<ArrivalSlot>,
}

impl EntrySchedule {
    pub fn len(&self) -> usize {
        self.arrivals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrivals.is_empty()
    }

    pub fn infector_count(&self) -> usize {
        self.arrivals.iter().filter(|a| a.role == Role::Infector).count()
    }
}

/// Draws arrival times with i.i.d. gaps (mean `mean_entry_gap_s`, law per
/// config) and assigns infector roles every `floor(total / infectors)`
/// positions so the susceptible run length between adjacent infectors is
/// constant.
pub fn build_entry_schedule<R: Rng>(
    population: &PopulationSpec,
    rng: &mut R,
) -> Result<EntrySchedule> {
    let total = population.sim_total;
    let infectors = population.sim_infectors;
    if infectors > total {
        return Err(Error::Config(format!(
            "{infectors} infectors exceed population of {total}"
        )));
    }

    let infector_positions = infector_positions(total, infectors);
    let exponential = Exp::new(1.0 / population.mean_entry_gap_s)
        .map_err(|e| Error::Config(format!("bad entry gap: {e}")))?;
    let mut draw_gap = |rng: &mut R| match population.entry_gap_law {
        GapLaw::Exponential => exponential.sample(rng),
        GapLaw::Fixed => population.mean_entry_gap_s,
    };

    let mut arrivals = Vec::with_capacity(total);
    let mut t = 0.0;
    for agent in 0..total {
        t += draw_gap(rng);
        let role = if infector_positions.contains(&(agent + 1)) {
            Role::Infector
        } else {
            Role::Susceptible
        };
        arrivals.push(ArrivalSlot {
            agent,
            role,
            enter_time_s: t,
        });
    }
    Ok(EntrySchedule { arrivals })
}

/// 1-indexed sequence positions of infectors: the j-th infector sits at
/// `j*p - floor(p/2)` with period `p = floor(total / infectors)`.
fn infector_positions(total: usize, infectors: usize) -> Vec<usize> {
    if infectors == 0 {
        return Vec::new();
    }
    let period = total / infectors;
    (1..=infectors).map(|j| j * period - period / 2).collect()
}
