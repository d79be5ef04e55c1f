//! The four batch commands and their file formats.

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ModelConfig, RunConfig};
use crate::engine::{thermal_observables, thermal_observables_scan, Axis, ThermalObservableResult, WignerGrid};
use crate::error::{Error, Result};
use crate::models::{HamiltonianModel, Kerr, Nelson};
use crate::quadrature::{morse_grid, nelson_grid, radial_cutoff, radial_grid, MidpointGrid, NelsonMap};
use crate::reference::{
    classical_averages, classify_orbit, fd_eigensolver_2d, morse_spectrum, poincare_section, section_accessible_area,
    spectrum_thermal_averages, OrbitFootprint, PoincareSection, Spectrum,
};
use crate::symbols::normal_form_spectrum;

/// Batch command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Observables,
    Wigner,
    Poincare,
    Spectrum,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Observables => "observables",
            Command::Wigner => "wigner",
            Command::Poincare => "poincare",
            Command::Spectrum => "spectrum",
        }
    }

    /// Extension of the primary output file.
    pub fn extension(self) -> &'static str {
        match self {
            Command::Wigner => "json",
            _ => "csv",
        }
    }
}

/// Rendered files of one run: the primary file and suffixed companions.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub primary: String,
    /// `(suffix, contents)`; written next to the primary file as
    /// `<stem>_<suffix>.csv`.
    pub companions: Vec<(String, String)>,
}

/// Run-level facts embedded in every output file.
struct Metadata<'a> {
    command: Command,
    config: &'a RunConfig,
    threads: usize,
    extra: Vec<(&'static str, Value)>,
}

impl Metadata<'_> {
    fn to_json(&self) -> Value {
        let mut map = serde_json::Map::new();
        map.insert("program".into(), json!(env!("CARGO_PKG_NAME")));
        map.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        map.insert("command".into(), json!(self.command.name()));
        map.insert("seed".into(), json!(self.config.seed));
        map.insert("threads".into(), json!(self.threads));
        map.insert("config".into(), serde_json::to_value(self.config).expect("configuration serializes"));
        for (k, v) in &self.extra {
            map.insert((*k).into(), v.clone());
        }
        Value::Object(map)
    }

    fn csv_header(&self) -> String {
        let mut out = format!("# program: {} {}\n", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"));
        out += &format!("# command: {}\n", self.command.name());
        out += &format!("# seed: {}\n", self.config.seed);
        out += &format!("# threads: {}\n", self.threads);
        out += &format!("# config: {}\n", self.config.to_json());
        for (k, v) in &self.extra {
            out += &format!("# {k}: {v}\n");
        }
        out
    }
}

fn csv_table(meta: &Metadata, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 records");
    meta.csv_header() + &body
}

/// Quantum spectrum of the configured model with a description of its source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumReference {
    pub spectrum: Spectrum,
    pub source: &'static str,
}

/// Closed-form spectrum (harmonic, Kerr: `levels` lowest; Morse: all bound
/// levels) or finite-difference levels for Nelson.
pub fn quantum_reference(cfg: &RunConfig, levels: usize) -> Result<QuantumReference> {
    let hbar = cfg.hbar;
    Ok(match cfg.model {
        ModelConfig::Harmonic { omega } => QuantumReference {
            spectrum: Spectrum::new((0..levels).map(|n| hbar * omega * (n as f64 + 0.5)).collect(), true),
            source: "closed form hbar omega (n + 1/2)",
        },
        ModelConfig::Kerr { omega0, chi } => {
            let k = Kerr::new(omega0, chi, hbar)?;
            QuantumReference {
                spectrum: normal_form_spectrum(|a| k.quantum_g(a), levels - 1, hbar),
                source: "closed form G(hbar (n + 1/2))",
            }
        }
        ModelConfig::Morse { chi } => {
            QuantumReference { spectrum: morse_spectrum(chi, hbar)?, source: "closed form bound Morse levels" }
        }
        ModelConfig::Nelson { mu } => {
            let n = Nelson::new(mu, hbar)?;
            let fd = cfg.quantum.fd;
            QuantumReference {
                spectrum: fd_eigensolver_2d(|x, y| n.potential(x, y), &fd.grid(), hbar, fd.levels)?,
                source: "finite differences",
            }
        }
    })
}

fn radial_omega(model: &ModelConfig) -> Option<f64> {
    match *model {
        ModelConfig::Harmonic { omega } => Some(omega),
        ModelConfig::Kerr { omega0, .. } => Some(omega0),
        _ => None,
    }
}

/// Midpoint grid for the semiclassical (`semiclassical = true`) or classical
/// thermal weight at `theta`.
pub fn midpoint_grid(cfg: &RunConfig, model: &dyn HamiltonianModel, theta: f64, semiclassical: bool) -> Result<MidpointGrid> {
    let g = &cfg.grid;
    if let Some(omega0) = radial_omega(&cfg.model) {
        let cutoff = radial_cutoff(model, omega0, theta, semiclassical, g.radial_efolds)?;
        return radial_grid(cutoff, g.radial_nodes, g.radial_angles);
    }
    match cfg.model {
        ModelConfig::Morse { chi } => morse_grid(chi, cfg.hbar, g.morse_n_p, g.morse_n_q),
        ModelConfig::Nelson { mu } => {
            let map = if semiclassical {
                NelsonMap::semiclassical(mu, theta, cfg.hbar)
            } else {
                NelsonMap::classical(mu, theta, cfg.hbar)
            };
            nelson_grid(&map, &g.nelson.spec(cfg.seed))
        }
        _ => unreachable!("radial models handled above"),
    }
}

/// One row of the observables table; columns that were not computed are NaN.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableRow {
    pub theta: f64,
    pub e_sc: f64,
    pub e_qm: f64,
    pub e_cl: f64,
    pub c_sc: f64,
    pub c_qm: f64,
    pub c_cl: f64,
    pub discarded_fraction: f64,
    pub negative_heat: bool,
    /// Seconds spent on the semiclassical column; NaN unless timing is on.
    pub wall_time: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservablesReport {
    pub rows: Vec<ObservableRow>,
    pub semiclassical_nodes: usize,
    pub classical_nodes: usize,
    pub quantum_levels: usize,
    pub quantum_source: Option<&'static str>,
}

fn blank_row(theta: f64) -> ObservableRow {
    ObservableRow {
        theta,
        e_sc: f64::NAN,
        e_qm: f64::NAN,
        e_cl: f64::NAN,
        c_sc: f64::NAN,
        c_qm: f64::NAN,
        c_cl: f64::NAN,
        discarded_fraction: f64::NAN,
        negative_heat: false,
        wall_time: f64::NAN,
        reason: String::new(),
    }
}

fn add_reason(row: &mut ObservableRow, why: String) {
    if !row.reason.is_empty() {
        row.reason.push_str("; ");
    }
    row.reason.push_str(&why);
}

fn fill_semiclassical(row: &mut ObservableRow, r: Result<ThermalObservableResult>) {
    match r {
        Ok(r) => {
            row.e_sc = r.mean_energy;
            row.c_sc = r.specific_heat;
            row.discarded_fraction = r.discarded_fraction;
            row.negative_heat = r.negative_specific_heat;
        }
        Err(e) => {
            if let Error::AllTrajectoriesDiscarded { discarded_fraction, .. } = e {
                row.discarded_fraction = discarded_fraction;
            }
            add_reason(row, format!("semiclassical: {e}"));
        }
    }
}

/// Semiclassical, quantum and classical mean energy and heat capacity at
/// every configured thermal time.
pub fn observables(cfg: &RunConfig) -> Result<ObservablesReport> {
    cfg.validate()?;
    let thetas = cfg.thetas()?;
    let model = cfg.model.build(cfg.hbar)?;
    let timing = cfg.record_timing;
    let mut rows: Vec<ObservableRow> = thetas.iter().map(|&t| blank_row(t)).collect();
    let mut report = ObservablesReport {
        rows: Vec::new(),
        semiclassical_nodes: 0,
        classical_nodes: 0,
        quantum_levels: 0,
        quantum_source: None,
    };

    if cfg.method.semiclassical() {
        if matches!(cfg.model, ModelConfig::Morse { .. }) {
            // Fixed grid: propagate each midpoint once through every theta.
            let start = Instant::now();
            let grid = midpoint_grid(cfg, model.as_ref(), thetas[0], true)?;
            report.semiclassical_nodes = grid.len();
            let results = thermal_observables_scan(model.as_ref(), &thetas, &grid, &cfg.propagation)?;
            let per_theta = start.elapsed().as_secs_f64() / thetas.len() as f64;
            for (row, r) in rows.iter_mut().zip(results) {
                fill_semiclassical(row, r);
                if timing {
                    row.wall_time = per_theta;
                }
            }
        } else {
            for row in rows.iter_mut() {
                let start = Instant::now();
                let r = midpoint_grid(cfg, model.as_ref(), row.theta, true).and_then(|grid| {
                    report.semiclassical_nodes = grid.len();
                    thermal_observables(model.as_ref(), row.theta, &grid, &cfg.propagation)
                });
                fill_semiclassical(row, r);
                if timing {
                    row.wall_time = start.elapsed().as_secs_f64();
                }
            }
        }
    }

    if cfg.method.quantum() {
        match quantum_reference(cfg, cfg.quantum.levels) {
            Ok(q) => {
                let trusted = if q.spectrum.is_truncated() {
                    q.spectrum.trusted_theta(cfg.hbar, cfg.quantum.tail)
                } else {
                    0.0
                };
                for row in rows.iter_mut() {
                    match spectrum_thermal_averages(&q.spectrum, row.theta, cfg.hbar) {
                        Ok(a) => {
                            row.e_qm = a.mean_energy;
                            row.c_qm = a.specific_heat;
                            if row.theta < trusted {
                                add_reason(row, format!("quantum: truncated spectrum, trusted for theta >= {trusted:.4}"));
                            }
                        }
                        Err(e) => add_reason(row, format!("quantum: {e}")),
                    }
                }
                report.quantum_levels = q.spectrum.len();
                report.quantum_source = Some(q.source);
            }
            Err(e) => rows.iter_mut().for_each(|row| add_reason(row, format!("quantum: {e}"))),
        }
    }

    if cfg.method.classical() {
        for row in rows.iter_mut() {
            let r = midpoint_grid(cfg, model.as_ref(), row.theta, false).and_then(|grid| {
                report.classical_nodes = grid.len();
                classical_averages(model.as_ref(), row.theta, &grid)
            });
            match r {
                Ok(a) => {
                    row.e_cl = a.mean_energy;
                    row.c_cl = a.specific_heat;
                }
                Err(e) => add_reason(row, format!("classical: {e}")),
            }
        }
    }

    report.rows = rows;
    Ok(report)
}

/// Shortest round-trip decimal, with an exponent for very large or small
/// magnitudes.
fn num(v: f64) -> String {
    if v.is_finite() {
        serde_json::to_string(&v).expect("finite floats serialize")
    } else {
        format!("{v}")
    }
}

fn render_observables(cfg: &RunConfig, threads: usize, report: &ObservablesReport) -> String {
    let max_discard = report.rows.iter().map(|r| r.discarded_fraction).filter(|d| d.is_finite()).fold(0.0, f64::max);
    let meta = Metadata {
        command: Command::Observables,
        config: cfg,
        threads,
        extra: vec![
            ("semiclassical_nodes", json!(report.semiclassical_nodes)),
            ("classical_nodes", json!(report.classical_nodes)),
            ("quantum_levels", json!(report.quantum_levels)),
            ("quantum_source", json!(report.quantum_source)),
            ("max_discarded_fraction", json!(max_discard)),
        ],
    };
    let header = [
        "theta",
        "E_sc",
        "E_qm",
        "E_cl",
        "c_sc",
        "c_qm",
        "c_cl",
        "discarded_fraction",
        "negative_heat",
        "wall_time",
        "reason",
    ];
    let rows = report.rows.iter().map(|r| {
        vec![
            num(r.theta),
            num(r.e_sc),
            num(r.e_qm),
            num(r.e_cl),
            num(r.c_sc),
            num(r.c_qm),
            num(r.c_cl),
            num(r.discarded_fraction),
            r.negative_heat.to_string(),
            num(r.wall_time),
            r.reason.clone(),
        ]
    });
    csv_table(&meta, &header, rows)
}

/// Normalized Wigner grid of a one-dof model at `wigner.theta`.
pub fn wigner(cfg: &RunConfig) -> Result<WignerGrid> {
    cfg.validate()?;
    let model = cfg.model.build(cfg.hbar)?;
    if model.dof() != 1 {
        return Err(Error::Config("the wigner command needs a one-degree-of-freedom model".into()));
    }
    let w = &cfg.wigner;
    WignerGrid::compute(model.as_ref(), w.theta, &w.p.points(), &w.q.points(), &cfg.propagation, &cfg.newton)
}

fn render_wigner(cfg: &RunConfig, threads: usize, grid: &WignerGrid) -> RunOutput {
    let cells = grid.p.len() * grid.q.len();
    let meta = |extra: Vec<(&'static str, Value)>| Metadata { command: Command::Wigner, config: cfg, threads, extra };
    let counts = vec![
        ("grid_points", json!(cells)),
        ("unreachable_points", json!(grid.unreachable_count)),
        ("unreachable_fraction", json!(grid.unreachable_count as f64 / cells as f64)),
    ];
    let doc = json!({
        "metadata": meta(counts.clone()).to_json(),
        "theta": grid.theta,
        "p": grid.p,
        "q": grid.q,
        "values": grid.values,
        "reachable": grid.reachable,
    });
    let primary = serde_json::to_string(&doc).expect("grid serializes") + "\n";
    let companions = [(Axis::P, "p"), (Axis::Q, "q")]
        .into_iter()
        .map(|(axis, name)| {
            let (coords, dens) = grid.marginal(axis);
            let mut extra = counts.clone();
            extra.push(("marginal", json!(name)));
            let rows = coords.iter().zip(&dens).map(|(c, d)| vec![num(*c), num(*d)]);
            (format!("marginal_{name}"), csv_table(&meta(extra), &[name, "density"], rows))
        })
        .collect();
    RunOutput { primary, companions }
}

/// Surface of section with the footprint class of every orbit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareReport {
    pub section: PoincareSection,
    pub footprints: Vec<OrbitFootprint>,
    pub accessible_area: f64,
}

pub fn poincare(cfg: &RunConfig) -> Result<PoincareReport> {
    cfg.validate()?;
    let ModelConfig::Nelson { mu } = cfg.model else {
        return Err(Error::Config("the poincare command needs the nelson model".into()));
    };
    let model = Nelson::new(mu, cfg.hbar)?;
    let opts = cfg.poincare.options(cfg.seed);
    let section = poincare_section(&model, &opts)?;
    let accessible_area = section_accessible_area(&model, opts.energy);
    let footprints = (0..opts.n_trajectories).map(|id| classify_orbit(&section.trajectory(id), accessible_area)).collect();
    Ok(PoincareReport { section, footprints, accessible_area })
}

fn render_poincare(cfg: &RunConfig, threads: usize, report: &PoincareReport) -> String {
    let orbits: Vec<Value> = report
        .footprints
        .iter()
        .enumerate()
        .map(|(id, f)| {
            let (x, p_x) = report.section.initial_conditions[id];
            json!({"traj_id": id, "x0": x, "p_x0": p_x, "class": f.class, "hull_fraction": f.hull_fraction, "dimension": f.dimension})
        })
        .collect();
    let meta = Metadata {
        command: Command::Poincare,
        config: cfg,
        threads,
        extra: vec![
            ("trajectories", json!(report.footprints.len())),
            ("crossings", json!(report.section.crossings.len())),
            ("accessible_area", json!(report.accessible_area)),
            ("orbits", Value::Array(orbits)),
        ],
    };
    let rows = report.section.crossings.iter().map(|c| vec![c.traj_id.to_string(), num(c.x), num(c.p_x)]);
    csv_table(&meta, &["traj_id", "x", "p_x"], rows)
}

fn render_spectrum(cfg: &RunConfig, threads: usize, q: &QuantumReference) -> String {
    let meta = Metadata {
        command: Command::Spectrum,
        config: cfg,
        threads,
        extra: vec![
            ("source", json!(q.source)),
            ("levels", json!(q.spectrum.len())),
            ("truncated", json!(q.spectrum.is_truncated())),
        ],
    };
    let rows = q.spectrum.energies().iter().enumerate().map(|(n, e)| vec![n.to_string(), num(*e)]);
    csv_table(&meta, &["n", "energy"], rows)
}

/// Runs `command` on a thread pool of `cfg.threads` workers and renders its
/// files.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    let threads = pool.current_num_threads();
    pool.install(|| {
        Ok(match command {
            Command::Observables => {
                RunOutput { primary: render_observables(cfg, threads, &observables(cfg)?), companions: vec![] }
            }
            Command::Wigner => render_wigner(cfg, threads, &wigner(cfg)?),
            Command::Poincare => RunOutput { primary: render_poincare(cfg, threads, &poincare(cfg)?), companions: vec![] },
            Command::Spectrum => {
                let q = quantum_reference(cfg, cfg.spectrum.levels)?;
                RunOutput { primary: render_spectrum(cfg, threads, &q), companions: vec![] }
            }
        })
    })
}
