use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use super::discover::{discover, edge_pairs, DiscoveryOutcome};
use super::report::{
    averaged_csv, conditioned_csv, cumhazard_csv, ecdf_csv, emit_edge_map, survival_csv,
    EdgeCurves, FitReport, FitRow, RunMetadata,
};
use super::{Algorithm, PipelineConfig};
use crate::calendar::{generate_synthetic, read_calendars, write_calendars, Event, PersonCalendar};
use crate::cox::{average_survival_lenient, c_index, conditioned_curves, fit_cox, CoxModel};
use crate::discovery::MixedGraph;
use crate::elaboration::{
    extract_pair_observations, extract_tte_with, stratified_split, write_pair_observations,
    TteRecord,
};
use crate::error::{Error, Result};
use crate::univariate::{ecdf_survival, km_fit, na_fit};

/// Covariates the per-level curves are conditioned on.
pub const CONDITIONED_COVARIATES: [&str; 5] =
    ["age_group", "nationality", "children", "cars", "owns_home"];

/// Load the configured calendars or generate them from the synthetic spec.
pub fn load_calendars(cfg: &PipelineConfig) -> Result<Vec<PersonCalendar>> {
    match (&cfg.input, &cfg.synthetic) {
        (Some(path), _) => read_calendars(path),
        (None, Some(spec)) => {
            let mut spec = spec.clone();
            spec.seed = cfg.seed;
            generate_synthetic(&spec, cfg.n_persons)
        }
        (None, None) => Err(Error::config("config needs either input or synthetic")),
    }
}

/// A fitted pair with its train and test concordance.
pub struct PairFit {
    pub model: CoxModel,
    pub c_index_train: f64,
    pub c_index_test: f64,
}

fn scores(model: &CoxModel, records: &[TteRecord]) -> Vec<f64> {
    records
        .iter()
        .map(|r| model.linear_predictor(&model.schema.encode_row_lenient(&r.covariates).0))
        .collect()
}

fn concordance(model: &CoxModel, records: &[TteRecord]) -> Result<f64> {
    let d: Vec<f64> = records.iter().map(|r| r.duration as f64).collect();
    let o: Vec<bool> = records.iter().map(|r| r.observed).collect();
    c_index(&scores(model, records), &d, &o)
}

/// Split, fit on the training part and score both parts. Test records with
/// categorical levels unseen in training are scored at the reference level.
pub fn fit_pair(records: &[TteRecord], train_frac: f64, l2: f64, seed: u64) -> Result<PairFit> {
    let split = stratified_split(records, train_frac, seed)?;
    let model = fit_cox(&split.train, l2)?;
    let c_index_train = concordance(&model, &split.train)?;
    let c_index_test = if split.test.is_empty() {
        return Err(Error::data("test split is empty"));
    } else {
        concordance(&model, &split.test)?
    };
    Ok(PairFit {
        model,
        c_index_train,
        c_index_test,
    })
}

struct PairOutput {
    row: FitRow,
    curves: Option<EdgeCurves>,
    files: Vec<(PathBuf, String)>,
}

fn pair_stem(cause: Event, effect: Event) -> String {
    format!("{cause}__{effect}")
}

fn run_pair(
    cals: &[PersonCalendar],
    cause: Event,
    effect: Event,
    cfg: &PipelineConfig,
) -> PairOutput {
    let stem = pair_stem(cause, effect);
    let mut files = Vec::new();
    let mut row = FitRow {
        cause,
        effect,
        sample_size: 0,
        c_index_train: None,
        c_index_test: None,
        status: String::new(),
    };
    let records = match extract_tte_with(cals, cause, effect, &cfg.age_groups) {
        Ok(r) => r,
        Err(e) => {
            row.status = format!("failed: {e}");
            return PairOutput {
                row,
                curves: None,
                files,
            };
        }
    };
    row.sample_size = records.len();
    if records.is_empty() {
        row.status = format!("failed: {cause} never occurs");
        return PairOutput {
            row,
            curves: None,
            files,
        };
    }

    let d: Vec<f64> = records.iter().map(|r| r.duration as f64).collect();
    let o: Vec<bool> = records.iter().map(|r| r.observed).collect();
    let km = km_fit(&d, &o).expect("non-empty durations");
    let na = na_fit(&d, &o).expect("non-empty durations");
    files.push((
        PathBuf::from(format!("curves/{stem}_km.csv")),
        survival_csv(&km),
    ));
    files.push((
        PathBuf::from(format!("curves/{stem}_na.csv")),
        cumhazard_csv(&na),
    ));
    let curves = Some(EdgeCurves::from_fits(&km, &na));

    match fit_pair(&records, cfg.train_frac, cfg.l2, cfg.seed) {
        Ok(fit) => {
            row.c_index_train = Some(fit.c_index_train);
            row.c_index_test = Some(fit.c_index_test);
            row.status = "ok".into();
            match fit.model.to_json() {
                Ok(json) => files.push((PathBuf::from(format!("models/{stem}.json")), json + "\n")),
                Err(e) => warn!("{stem}: model not serialized: {e}"),
            }
            match average_survival_lenient(&fit.model, &records) {
                Ok(avg) => files.push((
                    PathBuf::from(format!("curves/{stem}_avg.csv")),
                    averaged_csv(&avg),
                )),
                Err(e) => warn!("{stem}: averaged curve failed: {e}"),
            }
            for cov in CONDITIONED_COVARIATES {
                match conditioned_curves(&fit.model, &records, cov) {
                    Ok(c) => files.push((
                        PathBuf::from(format!("curves/{stem}_cond_{cov}.csv")),
                        conditioned_csv(&c),
                    )),
                    Err(e) => warn!("{stem}: curves conditioned on {cov} failed: {e}"),
                }
            }
        }
        Err(e) => {
            row.status = format!("failed: {e}");
        }
    }
    PairOutput { row, curves, files }
}

fn write(out: &Path, rel: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = out.join(rel);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn write_graph(out: &Path, stem: &str, g: &MixedGraph) -> Result<()> {
    write(out, format!("{stem}.json"), &(g.to_json()? + "\n"))?;
    write(out, format!("{stem}.dot"), &g.to_dot())
}

/// Report pairs: every events-graph edge, then configured extra pairs that
/// are not already edges.
pub fn report_pairs(events: &MixedGraph, extra: &[(Event, Event)]) -> Result<Vec<(Event, Event)>> {
    let mut pairs = edge_pairs(events)?;
    for p in extra {
        if !pairs.contains(p) {
            pairs.push(*p);
        }
    }
    Ok(pairs)
}

/// Run every stage and write all products under `out_dir`.
pub fn run_pipeline(cfg: &PipelineConfig, out_dir: &Path) -> Result<FitReport> {
    cfg.validate()?;
    let config_hash = cfg.hash()?;
    fs::create_dir_all(out_dir)?;

    let cals = load_calendars(cfg).map_err(|e| e.in_stage("load"))?;
    info!("loaded {} calendars", cals.len());
    if cfg.synthetic.is_some() {
        write_calendars(&cals, out_dir.join("calendars.csv")).map_err(|e| e.in_stage("load"))?;
    }

    let obs = extract_pair_observations(&cals);
    write_pair_observations(&obs, out_dir.join("pairs.csv"))
        .map_err(|e| e.in_stage("elaborate"))?;
    info!("{} event-pair observations", obs.len());

    let outcome: DiscoveryOutcome = discover(&obs, cfg.algorithm, cfg.alpha, cfg.bic_penalty)
        .map_err(|e| e.in_stage("discover"))?;
    let emit = |stage| move |e: Error| e.in_stage(stage);
    if let Some(g) = &outcome.pc {
        write_graph(out_dir, "graph_pc", g).map_err(emit("discover"))?;
    }
    if let Some(g) = &outcome.ges {
        write_graph(out_dir, "graph_ges", g).map_err(emit("discover"))?;
    }
    write_graph(out_dir, "events_graph", &outcome.events).map_err(emit("discover"))?;
    if let Some(same) = outcome.same_mec {
        info!("PC and GES in the same equivalence class: {same}");
    }

    let meta = RunMetadata {
        seed: cfg.seed,
        config_hash,
        algorithm: match cfg.algorithm {
            Algorithm::Pc => "pc",
            Algorithm::Ges => "ges",
            Algorithm::Both => "both",
        }
        .into(),
        graph: "events_graph.json".into(),
        same_mec: outcome.same_mec,
        persons: cals.len(),
        pair_observations: obs.len(),
    };
    fit_and_report(&cals, &outcome.events, cfg, meta, out_dir)
}

/// Fit every report pair of `events` and write curves, models, the edge
/// map, age histograms and the report itself.
pub fn fit_and_report(
    cals: &[PersonCalendar],
    events: &MixedGraph,
    cfg: &PipelineConfig,
    metadata: RunMetadata,
    out_dir: &Path,
) -> Result<FitReport> {
    let emit = |stage| move |e: Error| e.in_stage(stage);
    let pairs = report_pairs(events, &cfg.extra_pairs).map_err(emit("fit"))?;
    let outputs: Vec<PairOutput> = pairs
        .par_iter()
        .map(|&(c, e)| run_pair(cals, c, e, cfg))
        .collect();

    let mut rows = Vec::with_capacity(outputs.len());
    let mut edge_curves = BTreeMap::new();
    for (out, (c, e)) in outputs.into_iter().zip(&pairs) {
        for (rel, text) in &out.files {
            write(out_dir, rel, text).map_err(emit("report"))?;
        }
        if let Some(curves) = out.curves {
            edge_curves.insert((c.to_string(), e.to_string()), curves);
        }
        if out.row.status != "ok" {
            warn!("{c} -> {e}: {}", out.row.status);
        }
        rows.push(out.row);
    }

    // the edge map covers the graph edges that have data
    let mut mapped = events.clone();
    mapped
        .directed
        .retain(|(a, b)| edge_curves.contains_key(&(a.clone(), b.clone())));
    mapped.undirected.retain(|(a, b)| {
        edge_curves.contains_key(&(a.clone(), b.clone()))
            && edge_curves.contains_key(&(b.clone(), a.clone()))
    });
    write(
        out_dir,
        "edge_map.csv",
        &emit_edge_map(&mapped, &edge_curves).map_err(emit("report"))?,
    )
    .map_err(emit("report"))?;

    for event in Event::ALL {
        let ages: Vec<u32> = cals
            .iter()
            .flat_map(|cal| {
                cal.occurrences(event)
                    .map(|y| cal.years[y].age)
                    .collect::<Vec<_>>()
            })
            .collect();
        if ages.is_empty() {
            info!("no {event} occurrences; ecdf skipped");
            continue;
        }
        let (hist, curve) = ecdf_survival(&ages).map_err(emit("report"))?;
        write(
            out_dir,
            format!("ecdf/{event}.csv"),
            &ecdf_csv(&hist, &curve),
        )
        .map_err(emit("report"))?;
    }

    let report = FitReport { rows, metadata };
    write(out_dir, "report.csv", &report.to_csv()).map_err(emit("report"))?;
    write(out_dir, "report.json", &report.to_json()?).map_err(emit("report"))?;
    Ok(report)
}
