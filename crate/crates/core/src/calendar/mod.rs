//! Person-year life-course calendars.
//!
//! A calendar is a fixed 20-year grid per person: time-dependent state
//! attributes, yearly event flags and a block of time-constant attributes.

mod csv_io;
mod synthetic;

pub use csv_io::{
    read_calendars, read_calendars_from, write_calendars, write_calendars_to, CALENDAR_HEADER,
};
pub use synthetic::{generate_synthetic, CovariateMarginals, EdgeSpec, EventSpec, GroundTruthSpec};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of yearly records every calendar carries.
pub const YEARS: usize = 20;

pub const MAX_CARS: u8 = 2;
pub const MAX_CHILDREN: u8 = 3;
pub const MAX_DISTANCE: u32 = 100;
pub const MAX_RELOCATIONS: u8 = 9;
pub const MAX_CITY_SIZE: u8 = 7;

/// Life events recorded in the calendar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    NewCar,
    Moving,
    ChildBirth,
    Wedding,
    Divorce,
}

impl Event {
    pub const ALL: [Event; 5] = [
        Event::NewCar,
        Event::Moving,
        Event::ChildBirth,
        Event::Wedding,
        Event::Divorce,
    ];

    /// Events that take part in causal discovery (divorce is too rare there).
    pub const DISCOVERY: [Event; 4] = [
        Event::NewCar,
        Event::Moving,
        Event::ChildBirth,
        Event::Wedding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Event::NewCar => "new_car",
            Event::Moving => "moving",
            Event::ChildBirth => "child_birth",
            Event::Wedding => "wedding",
            Event::Divorce => "divorce",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Event {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Event::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::data(format!("unknown event name '{s}'")))
    }
}

/// Time-constant attributes of a person.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GeneralAttributes {
    pub gender: bool,
    /// `false` = German, `true` = other.
    pub nationality: bool,
    pub relocations: u8,
    pub city_size: u8,
}

/// One year of a calendar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct YearRecord {
    pub age: u32,
    pub owns_home: bool,
    pub cars: u8,
    pub distance_to_work: u32,
    pub rides_car: bool,
    pub children: u8,
    pub married: bool,
    pub new_car: bool,
    pub moving: bool,
    pub child_birth: bool,
    pub wedding: bool,
    pub divorce: bool,
}

impl YearRecord {
    pub fn has(&self, event: Event) -> bool {
        match event {
            Event::NewCar => self.new_car,
            Event::Moving => self.moving,
            Event::ChildBirth => self.child_birth,
            Event::Wedding => self.wedding,
            Event::Divorce => self.divorce,
        }
    }

    pub fn set(&mut self, event: Event, value: bool) {
        match event {
            Event::NewCar => self.new_car = value,
            Event::Moving => self.moving = value,
            Event::ChildBirth => self.child_birth = value,
            Event::Wedding => self.wedding = value,
            Event::Divorce => self.divorce = value,
        }
    }

    /// True if any of `events` is flagged this year.
    pub fn any_of(&self, events: &[Event]) -> bool {
        events.iter().any(|&e| self.has(e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonCalendar {
    pub person_id: String,
    pub years: Vec<YearRecord>,
    pub general: GeneralAttributes,
}

impl PersonCalendar {
    /// 0-based indices of the years in which `event` is flagged.
    pub fn occurrences(&self, event: Event) -> impl Iterator<Item = usize> + '_ {
        self.years
            .iter()
            .enumerate()
            .filter(move |(_, y)| y.has(event))
            .map(|(i, _)| i)
    }
}

/// Which calendar rule a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Length,
    AgeStep,
    Domain,
    CarsDecrease,
    ChildrenDecrease,
    Marriage,
    Divorce,
    ChildBirth,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// 1-based year index, absent for whole-calendar rules.
    pub year: Option<usize>,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.year {
            Some(y) => write!(f, "year {y}: {:?}: {}", self.rule, self.detail),
            None => write!(f, "{:?}: {}", self.rule, self.detail),
        }
    }
}

/// Check every calendar invariant; an empty list means the calendar is valid.
pub fn validate_calendar(cal: &PersonCalendar) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |year: Option<usize>, rule: Rule, detail: String| {
        out.push(Violation { year, rule, detail })
    };

    if cal.years.len() != YEARS {
        push(
            None,
            Rule::Length,
            format!("expected {YEARS} year records, found {}", cal.years.len()),
        );
    }

    let g = &cal.general;
    if g.relocations > MAX_RELOCATIONS {
        push(
            None,
            Rule::Domain,
            format!("relocations {} > {MAX_RELOCATIONS}", g.relocations),
        );
    }
    if g.city_size > MAX_CITY_SIZE {
        push(
            None,
            Rule::Domain,
            format!("city_size {} > {MAX_CITY_SIZE}", g.city_size),
        );
    }

    for (i, y) in cal.years.iter().enumerate() {
        let idx = Some(i + 1);
        if y.cars > MAX_CARS {
            push(idx, Rule::Domain, format!("cars {} > {MAX_CARS}", y.cars));
        }
        if y.children > MAX_CHILDREN {
            push(
                idx,
                Rule::Domain,
                format!("children {} > {MAX_CHILDREN}", y.children),
            );
        }
        if y.distance_to_work > MAX_DISTANCE {
            push(
                idx,
                Rule::Domain,
                format!("distance_to_work {} > {MAX_DISTANCE}", y.distance_to_work),
            );
        }
    }

    for (i, pair) in cal.years.windows(2).enumerate() {
        let (prev, cur) = (&pair[0], &pair[1]);
        let idx = Some(i + 2);
        if cur.age != prev.age + 1 {
            push(
                idx,
                Rule::AgeStep,
                format!("age {} follows {}", cur.age, prev.age),
            );
        }
        if cur.cars < prev.cars {
            push(
                idx,
                Rule::CarsDecrease,
                format!("cars {} -> {}", prev.cars, cur.cars),
            );
        }
        if cur.children < prev.children {
            push(
                idx,
                Rule::ChildrenDecrease,
                format!("children {} -> {}", prev.children, cur.children),
            );
        }
        if !prev.married && cur.married && !cur.wedding {
            push(idx, Rule::Marriage, "married without a wedding".into());
        }
        if prev.married && !cur.married && !cur.divorce {
            push(idx, Rule::Divorce, "unmarried without a divorce".into());
        }
        if cur.child_birth {
            let expected = (prev.children + 1).min(MAX_CHILDREN);
            if cur.children != expected {
                push(
                    idx,
                    Rule::ChildBirth,
                    format!(
                        "child birth but children {} -> {}",
                        prev.children, cur.children
                    ),
                );
            }
        }
    }
    out
}

/// Closed age intervals used to bucket age into a categorical covariate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgeGroups(pub Vec<(u32, u32)>);

impl Default for AgeGroups {
    fn default() -> Self {
        AgeGroups(vec![(18, 21), (22, 27), (28, 35), (36, 45), (46, 55)])
    }
}

impl AgeGroups {
    pub fn new(bounds: Vec<(u32, u32)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::config("age groups must not be empty"));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if lo > hi {
                return Err(Error::config(format!("age group [{lo},{hi}] is reversed")));
            }
            if i > 0 && lo != bounds[i - 1].1 + 1 {
                return Err(Error::config("age groups must be contiguous and ascending"));
            }
        }
        Ok(AgeGroups(bounds))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Group index of `age`; ages outside the covered range fall into the
    /// first or last group.
    pub fn group_of(&self, age: u32) -> u8 {
        let idx = self
            .0
            .iter()
            .position(|&(lo, hi)| age >= lo && age <= hi)
            .unwrap_or(if age < self.0[0].0 {
                0
            } else {
                self.0.len() - 1
            });
        idx as u8
    }

    pub fn label(&self, group: u8) -> String {
        let (lo, hi) = self.0[group as usize];
        format!("[{lo},{hi}]")
    }
}

/// The person shown as the worked example of the calendar layout: wedding in
/// year 7, first child in year 8, first car in year 9.
pub fn example_person() -> PersonCalendar {
    let distance = [0, 0, 8, 7, 7, 5, 5, 5, 5, 5, 5, 7, 7, 7, 7, 7, 7, 7, 7, 7];
    let years = (0..YEARS)
        .map(|i| {
            let year = i + 1;
            YearRecord {
                age: 18 + i as u32,
                owns_home: true,
                cars: u8::from(year >= 9),
                distance_to_work: distance[i],
                rides_car: false,
                children: u8::from(year >= 8),
                married: year >= 7,
                new_car: year == 9,
                moving: false,
                child_birth: year == 8,
                wedding: year == 7,
                divorce: false,
            }
        })
        .collect();
    PersonCalendar {
        person_id: "1".into(),
        years,
        general: GeneralAttributes::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_person_is_valid() {
        assert!(validate_calendar(&example_person()).is_empty());
    }

    #[test]
    fn marriage_without_wedding_is_flagged() {
        let mut cal = example_person();
        cal.years[6].wedding = false;
        let v = validate_calendar(&cal);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::Marriage);
        assert_eq!(v[0].year, Some(7));
    }

    #[test]
    fn short_calendar_is_flagged() {
        let mut cal = example_person();
        cal.years.pop();
        let v = validate_calendar(&cal);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::Length);
        assert_eq!(v[0].year, None);
    }

    #[test]
    fn decreasing_counts_and_bad_births_are_flagged() {
        let mut cal = example_person();
        cal.years[12].cars = 0;
        let rules: Vec<Rule> = validate_calendar(&cal).iter().map(|v| v.rule).collect();
        assert!(rules.contains(&Rule::CarsDecrease));

        let mut cal = example_person();
        cal.years[7].children = 0;
        let rules: Vec<Rule> = validate_calendar(&cal).iter().map(|v| v.rule).collect();
        assert!(rules.contains(&Rule::ChildBirth));

        let mut cal = example_person();
        cal.years[3].distance_to_work = 150;
        let v = validate_calendar(&cal);
        assert_eq!(v[0].rule, Rule::Domain);
        assert_eq!(v[0].year, Some(4));
    }

    #[test]
    fn births_at_the_children_cap_keep_the_count() {
        let mut cal = example_person();
        for y in cal.years.iter_mut() {
            y.children = 3;
            y.child_birth = false;
        }
        cal.years[10].child_birth = true;
        assert!(validate_calendar(&cal).is_empty());
    }

    #[test]
    fn age_groups_bucket_and_clamp() {
        let groups = AgeGroups::default();
        assert_eq!(groups.group_of(18), 0);
        assert_eq!(groups.group_of(21), 0);
        assert_eq!(groups.group_of(22), 1);
        assert_eq!(groups.group_of(40), 3);
        assert_eq!(groups.group_of(55), 4);
        assert_eq!(groups.group_of(70), 4);
        assert_eq!(groups.group_of(10), 0);
        assert!(AgeGroups::new(vec![(18, 21), (23, 30)]).is_err());
    }

    #[test]
    fn event_names_round_trip() {
        for e in Event::ALL {
            assert_eq!(e.name().parse::<Event>().unwrap(), e);
        }
        assert!("promotion".parse::<Event>().is_err());
    }
}
