use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GeneralAttributes, PersonCalendar, YearRecord, MAX_CARS, MAX_CHILDREN, YEARS};
use crate::error::{Error, Result};

pub const CALENDAR_HEADER: &str = "person_id,year_idx,age,owns_home,cars,distance_to_work,rides_car,children,married,new_car,moving,child_birth,wedding,divorce,gender,nationality,relocations,city_size";

#[derive(Debug, Serialize, Deserialize)]
struct CalendarRow {
    person_id: String,
    year_idx: usize,
    age: u32,
    owns_home: u8,
    cars: u8,
    distance_to_work: u32,
    rides_car: u8,
    children: u8,
    married: u8,
    new_car: u8,
    moving: u8,
    child_birth: u8,
    wedding: u8,
    divorce: u8,
    gender: u8,
    nationality: u8,
    relocations: u8,
    city_size: u8,
}

fn flag(value: u8, column: &str, line: u64) -> Result<bool> {
    match value {
        0 => Ok(false),
        1 => Ok(true),
        v => Err(Error::Parse {
            line,
            message: format!("column {column} must be 0 or 1, got {v}"),
        }),
    }
}

fn csv_line(err: &csv::Error) -> u64 {
    err.position().map(|p| p.line()).unwrap_or(0)
}

pub fn read_calendars(path: impl AsRef<Path>) -> Result<Vec<PersonCalendar>> {
    read_calendars_from(File::open(path)?)
}

/// Parse long-format calendar CSV. Rows may arrive in any order; output is
/// grouped by person in order of first appearance with years sorted.
pub fn read_calendars_from(reader: impl Read) -> Result<Vec<PersonCalendar>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut people: Vec<(PersonCalendar, Vec<usize>)> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();

    let headers = rdr.headers()?.clone();
    for result in rdr.records() {
        let record = result.map_err(|e| Error::Parse {
            line: csv_line(&e),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: CalendarRow = record
            .deserialize(Some(&headers))
            .map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
        if row.year_idx < 1 || row.year_idx > YEARS {
            return Err(Error::Parse {
                line,
                message: format!("year_idx {} outside [1,{YEARS}]", row.year_idx),
            });
        }
        let mut cars = row.cars;
        if cars > MAX_CARS {
            log::warn!("line {line}: cars {cars} clamped to {MAX_CARS}");
            cars = MAX_CARS;
        }
        let mut children = row.children;
        if children > MAX_CHILDREN {
            log::warn!("line {line}: children {children} clamped to {MAX_CHILDREN}");
            children = MAX_CHILDREN;
        }
        let record = YearRecord {
            age: row.age,
            owns_home: flag(row.owns_home, "owns_home", line)?,
            cars,
            distance_to_work: row.distance_to_work,
            rides_car: flag(row.rides_car, "rides_car", line)?,
            children,
            married: flag(row.married, "married", line)?,
            new_car: flag(row.new_car, "new_car", line)?,
            moving: flag(row.moving, "moving", line)?,
            child_birth: flag(row.child_birth, "child_birth", line)?,
            wedding: flag(row.wedding, "wedding", line)?,
            divorce: flag(row.divorce, "divorce", line)?,
        };
        let general = GeneralAttributes {
            gender: flag(row.gender, "gender", line)?,
            nationality: flag(row.nationality, "nationality", line)?,
            relocations: row.relocations,
            city_size: row.city_size,
        };

        let slot = *index.entry(row.person_id.clone()).or_insert_with(|| {
            people.push((
                PersonCalendar {
                    person_id: row.person_id.clone(),
                    years: Vec::new(),
                    general,
                },
                Vec::new(),
            ));
            people.len() - 1
        });
        let (cal, year_ids) = &mut people[slot];
        if cal.general != general {
            return Err(Error::Parse {
                line,
                message: format!(
                    "general attributes of person {} differ between rows",
                    row.person_id
                ),
            });
        }
        if year_ids.contains(&row.year_idx) {
            return Err(Error::Parse {
                line,
                message: format!(
                    "duplicate row for person {} year {}",
                    row.person_id, row.year_idx
                ),
            });
        }
        year_ids.push(row.year_idx);
        cal.years.push(record);
    }

    Ok(people
        .into_iter()
        .map(|(mut cal, year_ids)| {
            let mut paired: Vec<(usize, YearRecord)> =
                year_ids.into_iter().zip(cal.years).collect();
            paired.sort_by_key(|(y, _)| *y);
            cal.years = paired.into_iter().map(|(_, r)| r).collect();
            cal
        })
        .collect())
}

pub fn write_calendars(cals: &[PersonCalendar], path: impl AsRef<Path>) -> Result<()> {
    write_calendars_to(cals, File::create(path)?)
}

pub fn write_calendars_to(cals: &[PersonCalendar], writer: impl Write) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    wtr.write_record(CALENDAR_HEADER.split(','))?;
    for cal in cals {
        let g = &cal.general;
        for (i, y) in cal.years.iter().enumerate() {
            wtr.serialize(CalendarRow {
                person_id: cal.person_id.clone(),
                year_idx: i + 1,
                age: y.age,
                owns_home: y.owns_home.into(),
                cars: y.cars,
                distance_to_work: y.distance_to_work,
                rides_car: y.rides_car.into(),
                children: y.children,
                married: y.married.into(),
                new_car: y.new_car.into(),
                moving: y.moving.into(),
                child_birth: y.child_birth.into(),
                wedding: y.wedding.into(),
                divorce: y.divorce.into(),
                gender: g.gender.into(),
                nationality: g.nationality.into(),
                relocations: g.relocations,
                city_size: g.city_size,
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}
