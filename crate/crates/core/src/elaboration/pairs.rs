use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calendar::{Event, PersonCalendar};
use crate::error::{Error, Result};

pub const PAIR_HEADER: [&str; 11] = [
    "id",
    "new_car",
    "moving",
    "child_birth",
    "wedding",
    "married",
    "children",
    "new_car_next",
    "moving_next",
    "child_birth_next",
    "wedding_next",
];

/// Events of one event-bearing year, the state in that year and the events
/// of the next event-bearing year. Flags are indexed by [`Event::DISCOVERY`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventPairObservation {
    pub current: [bool; 4],
    pub married: bool,
    pub children: u8,
    pub next: [bool; 4],
}

fn flags(cal: &PersonCalendar, year: usize) -> [bool; 4] {
    Event::DISCOVERY.map(|e| cal.years[year].has(e))
}

/// One observation per event-bearing year that has a later event-bearing
/// year. The last event year of each person is dropped.
pub fn extract_pair_observations(cals: &[PersonCalendar]) -> Vec<EventPairObservation> {
    let mut out = Vec::new();
    for cal in cals {
        let event_years: Vec<usize> = (0..cal.years.len())
            .filter(|&y| cal.years[y].any_of(&Event::DISCOVERY))
            .collect();
        for w in event_years.windows(2) {
            let (cur, next) = (w[0], w[1]);
            out.push(EventPairObservation {
                current: flags(cal, cur),
                married: cal.years[cur].married,
                children: cal.years[cur].children,
                next: flags(cal, next),
            });
        }
    }
    out
}

/// Column names (without `id`) and integer-coded columns for discovery.
pub fn pair_table(obs: &[EventPairObservation]) -> (Vec<String>, Vec<Vec<u8>>) {
    let names = PAIR_HEADER[1..].iter().map(|s| s.to_string()).collect();
    let mut cols: Vec<Vec<u8>> = (0..10).map(|_| Vec::with_capacity(obs.len())).collect();
    for o in obs {
        let row = row_values(o);
        for (c, v) in cols.iter_mut().zip(row) {
            c.push(v);
        }
    }
    (names, cols)
}

fn row_values(o: &EventPairObservation) -> [u8; 10] {
    let mut row = [0u8; 10];
    for i in 0..4 {
        row[i] = o.current[i].into();
        row[6 + i] = o.next[i].into();
    }
    row[4] = o.married.into();
    row[5] = o.children;
    row
}

pub fn write_pair_observations(obs: &[EventPairObservation], path: impl AsRef<Path>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(File::create(path)?);
    write_pairs(obs, &mut wtr)
}

fn write_pairs<W: Write>(obs: &[EventPairObservation], wtr: &mut csv::Writer<W>) -> Result<()> {
    wtr.write_record(PAIR_HEADER)?;
    for (i, o) in obs.iter().enumerate() {
        let mut rec = vec![(i + 1).to_string()];
        rec.extend(row_values(o).iter().map(|v| v.to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_pair_observations(path: impl AsRef<Path>) -> Result<Vec<EventPairObservation>> {
    read_pairs(File::open(path)?)
}

fn read_pairs(reader: impl Read) -> Result<Vec<EventPairObservation>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(PAIR_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", PAIR_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let mut vals = [0u8; 10];
        for (i, v) in vals.iter_mut().enumerate() {
            let field = &rec[i + 1];
            *v = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!(
                    "column {}: '{field}' is not a small integer",
                    PAIR_HEADER[i + 1]
                ),
            })?;
            if i != 5 && *v > 1 {
                return Err(Error::Parse {
                    line,
                    message: format!("column {} must be 0 or 1", PAIR_HEADER[i + 1]),
                });
            }
        }
        out.push(EventPairObservation {
            current: [vals[0] == 1, vals[1] == 1, vals[2] == 1, vals[3] == 1],
            married: vals[4] == 1,
            children: vals[5],
            next: [vals[6] == 1, vals[7] == 1, vals[8] == 1, vals[9] == 1],
        });
    }
    Ok(out)
}
