use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calendar::{AgeGroups, Event, PersonCalendar, YEARS};
use crate::error::{Error, Result};

/// Duration assigned to records whose effect never occurs in the window.
pub const CENSORED_DURATION: u32 = YEARS as u32;

/// Transition value for events that have not happened by the cause year.
pub const NEVER_HAPPENED: i32 = -(YEARS as i32 - 1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateKind {
    Categorical,
    Discrete,
}

/// Every snapshot covariate with its measurement type, in column order.
pub const SNAPSHOT_FIELDS: [(&str, CovariateKind); 21] = [
    ("gender", CovariateKind::Categorical),
    ("nationality", CovariateKind::Categorical),
    ("relocations", CovariateKind::Discrete),
    ("city_size", CovariateKind::Discrete),
    ("age_group", CovariateKind::Categorical),
    ("owns_home", CovariateKind::Categorical),
    ("distance_to_work", CovariateKind::Discrete),
    ("rides_car", CovariateKind::Categorical),
    ("cars", CovariateKind::Categorical),
    ("children", CovariateKind::Categorical),
    ("married", CovariateKind::Categorical),
    ("tr_new_car", CovariateKind::Discrete),
    ("tr_moving", CovariateKind::Discrete),
    ("tr_child_birth", CovariateKind::Discrete),
    ("tr_wedding", CovariateKind::Discrete),
    ("tr_divorce", CovariateKind::Discrete),
    ("ind_new_car", CovariateKind::Categorical),
    ("ind_moving", CovariateKind::Categorical),
    ("ind_child_birth", CovariateKind::Categorical),
    ("ind_wedding", CovariateKind::Categorical),
    ("ind_divorce", CovariateKind::Categorical),
];

/// Covariates of one person read in the year the cause event occurs.
///
/// `transition[e]` is minus the number of years since event `e` last
/// happened at or before the cause year (0 if in the cause year itself,
/// [`NEVER_HAPPENED`] if never); `indicator[e]` records whether it happened.
/// Both arrays are indexed by [`Event::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovariateSnapshot {
    pub gender: u8,
    pub nationality: u8,
    pub relocations: u8,
    pub city_size: u8,
    pub age_group: u8,
    pub owns_home: u8,
    pub distance_to_work: u32,
    pub rides_car: u8,
    pub cars: u8,
    pub children: u8,
    pub married: u8,
    pub transition: [i32; 5],
    pub indicator: [u8; 5],
}

impl CovariateSnapshot {
    pub fn get(&self, name: &str) -> Option<i32> {
        let v = match name {
            "gender" => self.gender.into(),
            "nationality" => self.nationality.into(),
            "relocations" => self.relocations.into(),
            "city_size" => self.city_size.into(),
            "age_group" => self.age_group.into(),
            "owns_home" => self.owns_home.into(),
            "distance_to_work" => self.distance_to_work as i32,
            "rides_car" => self.rides_car.into(),
            "cars" => self.cars.into(),
            "children" => self.children.into(),
            "married" => self.married.into(),
            _ => {
                let (prefix, event) = name.split_once('_')?;
                let e: Event = event.parse().ok()?;
                match prefix {
                    "tr" => self.transition[e.index()],
                    "ind" => self.indicator[e.index()].into(),
                    _ => return None,
                }
            }
        };
        Some(v)
    }

    pub fn set(&mut self, name: &str, value: i32) -> Result<()> {
        let small = |v: i32| {
            u8::try_from(v)
                .map_err(|_| Error::data(format!("value {v} out of range for covariate {name}")))
        };
        match name {
            "gender" => self.gender = small(value)?,
            "nationality" => self.nationality = small(value)?,
            "relocations" => self.relocations = small(value)?,
            "city_size" => self.city_size = small(value)?,
            "age_group" => self.age_group = small(value)?,
            "owns_home" => self.owns_home = small(value)?,
            "distance_to_work" => {
                self.distance_to_work = u32::try_from(value)
                    .map_err(|_| Error::data(format!("negative distance {value}")))?
            }
            "rides_car" => self.rides_car = small(value)?,
            "cars" => self.cars = small(value)?,
            "children" => self.children = small(value)?,
            "married" => self.married = small(value)?,
            _ => {
                let unknown = || Error::data(format!("unknown covariate '{name}'"));
                let (prefix, event) = name.split_once('_').ok_or_else(unknown)?;
                let e: Event = event.parse().map_err(|_| unknown())?;
                match prefix {
                    "tr" => self.transition[e.index()] = value,
                    "ind" => self.indicator[e.index()] = small(value)?,
                    _ => return Err(unknown()),
                }
            }
        }
        Ok(())
    }

    /// Values in [`SNAPSHOT_FIELDS`] order.
    pub fn values(&self) -> Vec<i32> {
        SNAPSHOT_FIELDS
            .iter()
            .map(|(n, _)| self.get(n).expect("known field"))
            .collect()
    }
}

/// Read the covariate snapshot of `cal` at 0-based year `year`.
pub fn snapshot_at(cal: &PersonCalendar, year: usize, groups: &AgeGroups) -> CovariateSnapshot {
    let rec = &cal.years[year];
    let g = &cal.general;
    let mut transition = [NEVER_HAPPENED; 5];
    let mut indicator = [0u8; 5];
    for e in Event::ALL {
        if let Some(last) = (0..=year).rev().find(|&y| cal.years[y].has(e)) {
            transition[e.index()] = -((year - last) as i32);
            indicator[e.index()] = 1;
        }
    }
    CovariateSnapshot {
        gender: g.gender.into(),
        nationality: g.nationality.into(),
        relocations: g.relocations,
        city_size: g.city_size,
        age_group: groups.group_of(rec.age),
        owns_home: rec.owns_home.into(),
        distance_to_work: rec.distance_to_work,
        rides_car: rec.rides_car.into(),
        cars: rec.cars,
        children: rec.children,
        married: rec.married.into(),
        transition,
        indicator,
    }
}

/// One cause occurrence followed (or not) by the effect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TteRecord {
    pub person_id: String,
    pub cause: Event,
    pub effect: Event,
    pub duration: u32,
    pub observed: bool,
    pub covariates: CovariateSnapshot,
}

pub fn extract_tte(cals: &[PersonCalendar], cause: Event, effect: Event) -> Result<Vec<TteRecord>> {
    extract_tte_with(cals, cause, effect, &AgeGroups::default())
}

/// One record per occurrence of `cause`. The duration runs to the first
/// `effect` at or after the cause year; if there is none before the window
/// ends the record is censored with duration [`CENSORED_DURATION`].
pub fn extract_tte_with(
    cals: &[PersonCalendar],
    cause: Event,
    effect: Event,
    groups: &AgeGroups,
) -> Result<Vec<TteRecord>> {
    if cause == effect {
        return Err(Error::config(format!("cause and effect are both {cause}")));
    }
    let mut out = Vec::new();
    for cal in cals {
        for c in cal.occurrences(cause) {
            let hit = (c..cal.years.len()).find(|&y| cal.years[y].has(effect));
            let (duration, observed) = match hit {
                Some(y) => ((y - c) as u32, true),
                None => (CENSORED_DURATION, false),
            };
            out.push(TteRecord {
                person_id: cal.person_id.clone(),
                cause,
                effect,
                duration,
                observed,
                covariates: snapshot_at(cal, c, groups),
            });
        }
    }
    Ok(out)
}

fn tte_header() -> Vec<&'static str> {
    let mut h = vec!["person_id", "cause", "effect", "duration", "observed"];
    h.extend(SNAPSHOT_FIELDS.iter().map(|(n, _)| *n));
    h
}

pub fn write_tte(records: &[TteRecord], path: impl AsRef<Path>) -> Result<()> {
    write_tte_to(records, File::create(path)?)
}

pub fn write_tte_to(records: &[TteRecord], writer: impl Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(tte_header())?;
    for r in records {
        let mut row = vec![
            r.person_id.clone(),
            r.cause.to_string(),
            r.effect.to_string(),
            r.duration.to_string(),
            u8::from(r.observed).to_string(),
        ];
        row.extend(r.covariates.values().iter().map(i32::to_string));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_tte(path: impl AsRef<Path>) -> Result<Vec<TteRecord>> {
    read_tte_from(File::open(path)?)
}

pub fn read_tte_from(reader: impl Read) -> Result<Vec<TteRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = tte_header();
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", expected.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |col: &str, v: &str| Error::Parse {
            line,
            message: format!("column {col}: invalid value '{v}'"),
        };
        let int = |i: usize| -> Result<i64> {
            rec[i]
                .parse::<i64>()
                .map_err(|_| parse_err(expected[i], &rec[i]))
        };
        let cause: Event = rec[1].parse().map_err(|_| parse_err("cause", &rec[1]))?;
        let effect: Event = rec[2].parse().map_err(|_| parse_err("effect", &rec[2]))?;
        let duration = int(3)?;
        let observed = int(4)?;
        if !(0..=CENSORED_DURATION as i64).contains(&duration) || !(0..=1).contains(&observed) {
            return Err(parse_err(
                "duration/observed",
                &format!("{duration}/{observed}"),
            ));
        }
        let mut cov = CovariateSnapshot {
            gender: 0,
            nationality: 0,
            relocations: 0,
            city_size: 0,
            age_group: 0,
            owns_home: 0,
            distance_to_work: 0,
            rides_car: 0,
            cars: 0,
            children: 0,
            married: 0,
            transition: [0; 5],
            indicator: [0; 5],
        };
        for (k, (name, _)) in SNAPSHOT_FIELDS.iter().enumerate() {
            let i = 5 + k;
            let v = int(i)?;
            let v = i32::try_from(v).map_err(|_| parse_err(name, &rec[i]))?;
            cov.set(name, v).map_err(|_| parse_err(name, &rec[i]))?;
        }
        out.push(TteRecord {
            person_id: rec[0].to_string(),
            cause,
            effect,
            duration: duration as u32,
            observed: observed == 1,
            covariates: cov,
        });
    }
    Ok(out)
}
