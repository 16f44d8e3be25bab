//! Seeded synthetic calendars drawn from a known event DAG.
//!
//! Root events start spontaneously with a yearly onset probability. Every
//! occurrence of a cause event schedules its effects after a discrete
//! waiting time `G >= 0` with `P(G > g) = (1 - p)^((g + 1) * exp(beta . x))`,
//! where `x` are the person's covariates in the cause year. This is the
//! grouped-time form of a proportional-hazards model with a geometric
//! baseline, so Cox fits on the elaborated pairs recover `beta`.

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Deserializer, Serialize};

use super::{
    AgeGroups, Event, GeneralAttributes, PersonCalendar, YearRecord, MAX_CARS, MAX_CHILDREN,
    MAX_CITY_SIZE, MAX_DISTANCE, MAX_RELOCATIONS, YEARS,
};
use crate::error::{Error, Result};

/// Covariates an edge may weight, evaluated on the cause-year state.
pub const BETA_KEYS: [&str; 11] = [
    "gender",
    "nationality",
    "relocations",
    "city_size",
    "age_group",
    "owns_home",
    "distance_to_work",
    "rides_car",
    "cars",
    "children",
    "married",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventSpec {
    pub name: Event,
    /// Yearly probability of a spontaneous first occurrence.
    pub onset_p: f64,
}

impl<'de> Deserialize<'de> for EventSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Name(Event),
            Full {
                name: Event,
                #[serde(default)]
                onset_p: f64,
            },
        }
        Ok(match Repr::deserialize(deserializer)? {
            Repr::Name(name) => EventSpec { name, onset_p: 0.0 },
            Repr::Full { name, onset_p } => EventSpec { name, onset_p },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub from: Event,
    pub to: Event,
    pub geometric_p: f64,
    /// Log-hazard ratio per unit of each named covariate.
    #[serde(default)]
    pub beta: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CovariateMarginals {
    pub gender: f64,
    pub nationality: f64,
    /// Probability of owning a home at the start and after each move.
    pub owns_home: f64,
    /// Probability of commuting by car while owning one.
    pub rides_car: f64,
    /// Weights over relocation counts 0..=9.
    pub relocations: Vec<f64>,
    /// Weights over city size classes 0..=7.
    pub city_size: Vec<f64>,
    /// Weights over the car count in the first year, 0..=2.
    pub initial_cars: Vec<f64>,
    /// Inclusive range of ages in the first calendar year.
    pub start_age: (u32, u32),
    /// Commute distances are drawn uniformly from 0..=max_distance.
    pub max_distance: u32,
}

impl Default for CovariateMarginals {
    fn default() -> Self {
        CovariateMarginals {
            gender: 0.5,
            nationality: 0.3,
            owns_home: 0.4,
            rides_car: 0.6,
            relocations: vec![4.0, 3.0, 2.0, 1.0, 1.0, 0.5, 0.5, 0.25, 0.25, 0.25],
            city_size: vec![1.0; 8],
            initial_cars: vec![0.5, 0.35, 0.15],
            start_age: (18, 36),
            max_distance: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthSpec {
    pub events: Vec<EventSpec>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub covariates: CovariateMarginals,
    #[serde(default)]
    pub seed: u64,
}

impl GroundTruthSpec {
    /// Check the ground truth and return the event processing order (a topological
    /// order of the edge DAG, ties broken by event order).
    pub fn validate(&self) -> Result<Vec<Event>> {
        let declared: BTreeSet<Event> = self.events.iter().map(|e| e.name).collect();
        if declared.len() != self.events.len() {
            return Err(Error::config("duplicate event in spec"));
        }
        for e in &self.events {
            if !(0.0..=1.0).contains(&e.onset_p) {
                return Err(Error::config(format!(
                    "onset_p of {} outside [0,1]",
                    e.name
                )));
            }
        }
        let mut seen = BTreeSet::new();
        for edge in &self.edges {
            let label = format!("{}->{}", edge.from, edge.to);
            if !declared.contains(&edge.from) || !declared.contains(&edge.to) {
                return Err(Error::config(format!(
                    "edge {label} uses an undeclared event"
                )));
            }
            if edge.from == edge.to {
                return Err(Error::config(format!("edge {label} is a self-loop")));
            }
            if !seen.insert((edge.from, edge.to)) {
                return Err(Error::config(format!("edge {label} listed twice")));
            }
            if !(edge.geometric_p > 0.0 && edge.geometric_p <= 1.0) {
                return Err(Error::config(format!(
                    "edge {label}: geometric_p must be in (0,1]"
                )));
            }
            for (key, &b) in &edge.beta {
                if !BETA_KEYS.contains(&key.as_str()) {
                    return Err(Error::config(format!(
                        "edge {label}: unknown covariate '{key}'"
                    )));
                }
                if !b.is_finite() {
                    return Err(Error::config(format!(
                        "edge {label}: beta for {key} is not finite"
                    )));
                }
            }
        }
        let m = &self.covariates;
        for (name, p) in [
            ("gender", m.gender),
            ("nationality", m.nationality),
            ("owns_home", m.owns_home),
            ("rides_car", m.rides_car),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!(
                    "covariate probability {name} outside [0,1]"
                )));
            }
        }
        for (name, w, len) in [
            ("relocations", &m.relocations, MAX_RELOCATIONS as usize + 1),
            ("city_size", &m.city_size, MAX_CITY_SIZE as usize + 1),
            ("initial_cars", &m.initial_cars, MAX_CARS as usize + 1),
        ] {
            if w.is_empty() || w.len() > len || WeightedIndex::new(w).is_err() {
                return Err(Error::config(format!("invalid weights for {name}")));
            }
        }
        if m.start_age.0 > m.start_age.1 || m.max_distance > MAX_DISTANCE {
            return Err(Error::config("invalid start_age or max_distance"));
        }
        self.topological_order()
    }

    fn topological_order(&self) -> Result<Vec<Event>> {
        let mut indegree: BTreeMap<Event, usize> =
            self.events.iter().map(|e| (e.name, 0)).collect();
        for edge in &self.edges {
            *indegree.get_mut(&edge.to).unwrap() += 1;
        }
        let mut ready: BTreeSet<Event> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&e, _)| e)
            .collect();
        let mut order = Vec::with_capacity(indegree.len());
        while let Some(e) = ready.pop_first() {
            order.push(e);
            for edge in self.edges.iter().filter(|edge| edge.from == e) {
                let d = indegree.get_mut(&edge.to).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(edge.to);
                }
            }
        }
        if order.len() != indegree.len() {
            return Err(Error::config("event graph contains a cycle"));
        }
        Ok(order)
    }
}

fn covariate_value(
    key: &str,
    general: &GeneralAttributes,
    rec: &YearRecord,
    groups: &AgeGroups,
) -> f64 {
    match key {
        "gender" => f64::from(u8::from(general.gender)),
        "nationality" => f64::from(u8::from(general.nationality)),
        "relocations" => f64::from(general.relocations),
        "city_size" => f64::from(general.city_size),
        "age_group" => f64::from(groups.group_of(rec.age)),
        "owns_home" => f64::from(u8::from(rec.owns_home)),
        "distance_to_work" => f64::from(rec.distance_to_work),
        "rides_car" => f64::from(u8::from(rec.rides_car)),
        "cars" => f64::from(rec.cars),
        "children" => f64::from(rec.children),
        "married" => f64::from(u8::from(rec.married)),
        _ => unreachable!("beta keys are validated"),
    }
}

/// Waiting time with per-year hazard `1 - (1 - p)^risk`; `None` when the
/// hazard underflows to zero.
fn waiting_time(rng: &mut ChaCha8Rng, p: f64, risk: f64) -> Option<u64> {
    let q = if p >= 1.0 {
        1.0
    } else {
        -(risk * (-p).ln_1p()).exp_m1()
    };
    if q <= 0.0 || !q.is_finite() {
        return None;
    }
    Some(Geometric::new(q.min(1.0)).ok()?.sample(rng))
}

/// Draw `n_persons` calendars. Output depends only on the ground truth (including
/// its seed) and `n_persons`.
pub fn generate_synthetic(spec: &GroundTruthSpec, n_persons: usize) -> Result<Vec<PersonCalendar>> {
    if n_persons == 0 {
        return Err(Error::config("n_persons must be at least 1"));
    }
    let order = spec.validate()?;
    let groups = AgeGroups::default();
    let m = &spec.covariates;
    let relocations = WeightedIndex::new(&m.relocations).expect("validated");
    let city_size = WeightedIndex::new(&m.city_size).expect("validated");
    let initial_cars = WeightedIndex::new(&m.initial_cars).expect("validated");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut out = Vec::with_capacity(n_persons);
    for person in 0..n_persons {
        let general = GeneralAttributes {
            gender: rng.random_bool(m.gender),
            nationality: rng.random_bool(m.nationality),
            relocations: relocations.sample(&mut rng) as u8,
            city_size: city_size.sample(&mut rng) as u8,
        };
        let start_age = rng.random_range(m.start_age.0..=m.start_age.1);
        let cars = initial_cars.sample(&mut rng) as u8;
        let mut state = YearRecord {
            age: start_age,
            owns_home: rng.random_bool(m.owns_home),
            cars,
            distance_to_work: rng.random_range(0..=m.max_distance),
            rides_car: cars > 0 && rng.random_bool(m.rides_car),
            ..YearRecord::default()
        };

        let mut pending = [[false; 5]; YEARS];
        for ev in &spec.events {
            if ev.onset_p > 0.0 {
                if let Some(g) = waiting_time(&mut rng, ev.onset_p, 1.0) {
                    if (g as usize) < YEARS {
                        pending[g as usize][ev.name.index()] = true;
                    }
                }
            }
        }

        let mut years = Vec::with_capacity(YEARS);
        for t in 0..YEARS {
            state.age = start_age + t as u32;
            for e in Event::ALL {
                state.set(e, false);
            }
            let married_at_start = state.married;
            for &event in &order {
                if !pending[t][event.index()] {
                    continue;
                }
                let happens = match event {
                    Event::ChildBirth => state.children < MAX_CHILDREN,
                    Event::Wedding => !married_at_start,
                    Event::Divorce => married_at_start,
                    Event::NewCar | Event::Moving => true,
                };
                if !happens {
                    continue;
                }
                state.set(event, true);
                match event {
                    Event::NewCar => {
                        state.cars = (state.cars + 1).min(MAX_CARS);
                        state.rides_car = rng.random_bool(m.rides_car);
                    }
                    Event::Moving => {
                        state.distance_to_work = rng.random_range(0..=m.max_distance);
                        state.owns_home = rng.random_bool(m.owns_home);
                    }
                    Event::ChildBirth => state.children += 1,
                    Event::Wedding => state.married = true,
                    Event::Divorce => state.married = false,
                }
                for edge in spec.edges.iter().filter(|e| e.from == event) {
                    let eta: f64 = edge
                        .beta
                        .iter()
                        .map(|(k, b)| b * covariate_value(k, &general, &state, &groups))
                        .sum();
                    if let Some(gap) = waiting_time(&mut rng, edge.geometric_p, eta.exp()) {
                        let target = t as u64 + gap;
                        if target < YEARS as u64 {
                            pending[target as usize][edge.to.index()] = true;
                        }
                    }
                }
            }
            years.push(state);
        }
        out.push(PersonCalendar {
            person_id: (person + 1).to_string(),
            years,
            general,
        });
    }
    Ok(out)
}
