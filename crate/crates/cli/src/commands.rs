//! One function per subcommand; each returns the rendered output.

use std::path::PathBuf;

use serde_json::{json, Map, Value};

use bogolib::bogoliubov::{excitation_spectrum, ScatteringLengthChoice, SpectrumReport};
use bogolib::ed::{compare_at, ComparisonReport};
use bogolib::fock::basis::BasisCache;
use bogolib::fock::identity::{verify_identity, IdentityName, IdentityOptions, IdentityReport, IdentityStatus};
use bogolib::fock::named::OperatorContext;
use bogolib::scattering::{continuum_scattering_length, solve_scattering_equation, truncate_phi};
use bogolib::{Error, LatticeVector};

use crate::config::{parse_sector, Format, RunConfig};
use crate::output::{fmt_f64, json_document, num, opt_cell, opt_num, plain_csv, CsvTable};
use crate::CliError;

/// Rendered output plus whether every check passed.
pub struct Rendered {
    pub text: String,
    pub ok: bool,
}

impl Rendered {
    fn ok(text: String) -> Self {
        Rendered { text, ok: true }
    }
}

pub fn scattering(cfg: &RunConfig, format: Format) -> Result<Rendered, CliError> {
    let lattice = cfg.lattice();
    let ns = cfg.particle_list();
    let a_cont = continuum_scattering_length(&cfg.potential(ns[0])?, cfg.scattering.tol)?;
    let mut rows = Vec::new();
    for &n in &ns {
        let sol = solve_scattering_equation(&lattice, &cfg.potential(n)?, cfg.scattering.tol)?;
        let sol = truncate_phi(sol, cfg.bogoliubov.alpha);
        let b = sol.bounds();
        rows.push((n, sol.alpha, sol.a_n, sol.residual_sup, b.phi_l1, b.phi_tilde_l2));
    }
    let k = lattice.cutoff();
    let text = match format {
        Format::Csv => {
            let mut t = CsvTable::new(&["N", "K", "alpha", "a_N", "a_continuum", "residual_sup", "phi_l1", "phi_tilde_l2"]);
            for (n, alpha, a_n, res, l1, l2) in &rows {
                t.push(vec![n.to_string(), k.to_string(), fmt_f64(*alpha), fmt_f64(*a_n), fmt_f64(a_cont), fmt_f64(*res), fmt_f64(*l1), fmt_f64(*l2)]);
            }
            t.render("scattering", cfg)?
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(n, alpha, a_n, res, l1, l2)| {
                    json!({"N": n, "K": k, "alpha": num(*alpha), "a_N": num(*a_n), "a_continuum": num(a_cont),
                           "residual_sup": num(*res), "phi_l1": num(*l1), "phi_tilde_l2": num(*l2)})
                })
                .collect();
            let mut body = Map::new();
            body.insert("rows".into(), Value::Array(rows));
            json_document("scattering", cfg, body)
        }
    };
    Ok(Rendered::ok(text))
}

/// Scattering length selected by `bogoliubov.a_choice` at `gp.N`.
fn chosen_length(cfg: &RunConfig) -> Result<f64, CliError> {
    let spec = cfg.potential(cfg.gp.n)?;
    Ok(match ScatteringLengthChoice::from(cfg.bogoliubov.a_choice) {
        ScatteringLengthChoice::Box => solve_scattering_equation(&cfg.lattice(), &spec, cfg.scattering.tol)?.a_n,
        ScatteringLengthChoice::Continuum => continuum_scattering_length(&spec, cfg.scattering.tol)?,
    })
}

fn level_members(r: &SpectrumReport<f64>, first: usize, degeneracy: usize) -> Vec<String> {
    r.excitations[first..first + degeneracy].iter().map(|e| e.occupation_string()).collect()
}

pub fn spectrum(cfg: &RunConfig, format: Format) -> Result<Rendered, CliError> {
    let a = chosen_length(cfg)?;
    let choice = ScatteringLengthChoice::from(cfg.bogoliubov.a_choice);
    let r = excitation_spectrum(a, choice, &cfg.lattice(), cfg.spectrum.max_energy, cfg.spectrum.budget)?;
    let levels = r.levels();
    let text = match format {
        Format::Csv => {
            let mut t = CsvTable::new(&["level_index", "energy", "degeneracy", "occupations"]);
            for (i, l) in levels.iter().enumerate() {
                t.push(vec![i.to_string(), fmt_f64(l.energy), l.degeneracy.to_string(), level_members(&r, l.first, l.degeneracy).join(" | ")]);
            }
            t.render("spectrum", cfg)?
        }
        Format::Json => {
            let rows: Vec<Value> = levels
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    json!({"level_index": i, "energy": num(l.energy), "degeneracy": l.degeneracy,
                           "occupations": level_members(&r, l.first, l.degeneracy)})
                })
                .collect();
            let mut body = Map::new();
            body.insert("a_choice".into(), json!(choice.label()));
            body.insert("a".into(), num(a));
            body.insert("max_energy".into(), num(r.max_energy));
            body.insert("complete_below".into(), num(r.tail_estimate));
            body.insert("levels".into(), Value::Array(rows));
            json_document("spectrum", cfg, body)
        }
    };
    Ok(Rendered::ok(text))
}

/// `all` or a single identity name.
pub fn parse_identities(s: &str) -> Result<Vec<IdentityName>, CliError> {
    if s == "all" {
        return Ok(IdentityName::ALL.to_vec());
    }
    s.parse::<IdentityName>().map(|n| vec![n]).map_err(|e| CliError::Config(e.to_string()))
}

enum Outcome {
    Done(IdentityReport),
    Refused(String),
    Errored(String),
}

pub fn verify(cfg: &RunConfig, names: &[IdentityName], format: Format) -> Result<Rendered, CliError> {
    let n = cfg.gp.n;
    let sector = parse_sector(&cfg.verify.sector)?;
    let ctx = OperatorContext::prepare(&cfg.lattice(), &cfg.potential(n)?, cfg.bogoliubov.alpha, Some(cfg.verify.cutoff), cfg.scattering.tol)?;
    let cache = BasisCache::new(ctx.modes.clone(), cfg.ed.basis_budget);
    let opts = IdentityOptions { particles: n, sector, tol: cfg.verify.tol };
    let outcomes: Vec<(IdentityName, Outcome)> = names
        .iter()
        .map(|&name| {
            let o = match verify_identity(name, &ctx, &cache, &opts) {
                Ok(r) => Outcome::Done(r),
                Err(e @ Error::CutoffUnsafe(_)) => Outcome::Refused(e.to_string()),
                Err(e) => Outcome::Errored(e.to_string()),
            };
            (name, o)
        })
        .collect();
    let ok = outcomes.iter().all(|(_, o)| matches!(o, Outcome::Done(r) if r.status == IdentityStatus::Pass));
    let text = match format {
        Format::Json => {
            let mut ids = Map::new();
            for (name, o) in &outcomes {
                let v = match o {
                    Outcome::Done(r) => {
                        let violation = r.first_violation.as_ref().map_or(Value::Null, |v| {
                            json!({"piece": v.piece, "row": v.row_state, "col": v.col_state, "lhs": num(v.lhs), "rhs": num(v.rhs)})
                        });
                        json!({"status": r.status.as_str(), "max_dev": num(r.max_dev), "tol": num(r.tol), "basis_dims": r.basis_dims,
                               "scale": num(r.scale), "pieces": r.pieces, "first_violation": violation})
                    }
                    Outcome::Refused(m) => json!({"status": "refused", "max_dev": null, "basis_dims": [], "message": m}),
                    Outcome::Errored(m) => json!({"status": "error", "max_dev": null, "basis_dims": [], "message": m}),
                };
                ids.insert(name.as_str().into(), v);
            }
            let mut body = Map::new();
            body.insert("particles".into(), json!(n));
            body.insert("sector".into(), json!(sector.to_string()));
            body.insert("identities".into(), Value::Object(ids));
            json_document("verify", cfg, body)
        }
        Format::Csv => {
            let mut t = CsvTable::new(&["identity", "status", "max_dev", "tol", "basis_dims", "scale", "message"]);
            for (name, o) in &outcomes {
                let row = match o {
                    Outcome::Done(r) => vec![
                        r.status.as_str().to_string(),
                        fmt_f64(r.max_dev),
                        fmt_f64(r.tol),
                        r.basis_dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(";"),
                        fmt_f64(r.scale),
                        String::new(),
                    ],
                    Outcome::Refused(m) => vec!["refused".into(), String::new(), fmt_f64(cfg.verify.tol), String::new(), String::new(), m.clone()],
                    Outcome::Errored(m) => vec!["error".into(), String::new(), fmt_f64(cfg.verify.tol), String::new(), String::new(), m.clone()],
                };
                let mut full = vec![name.as_str().to_string()];
                full.extend(row);
                t.push(full);
            }
            t.render("verify", cfg)?
        }
    };
    Ok(Rendered { text, ok })
}

const SWEEP_HEADER: [&str; 10] = ["N", "sector", "level", "ed_gap", "predicted", "occupations", "rel_dev", "depletion", "e0_per_particle", "fourpi_aN"];

fn sweep_rows(reports: &[ComparisonReport]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for r in reports {
        let tail = [fmt_f64(r.depletion.n_plus), fmt_f64(r.ground.e0_per_particle), fmt_f64(r.ground.fourpi_an)];
        let mut ground = vec![r.particles.to_string(), LatticeVector::ZERO.to_string(), "0".into(), fmt_f64(0.0), fmt_f64(0.0), String::new(), String::new()];
        ground.extend(tail.iter().cloned());
        out.push(ground);
        for row in &r.rows {
            let mut v = vec![
                r.particles.to_string(),
                row.sector.to_string(),
                row.level.to_string(),
                fmt_f64(row.ed_gap),
                opt_cell(row.predicted),
                row.occupations.clone().unwrap_or_default(),
                opt_cell(row.rel_dev),
            ];
            v.extend(tail.iter().cloned());
            out.push(v);
        }
    }
    out
}

fn report_json(r: &ComparisonReport) -> Value {
    let rows: Vec<Value> = r
        .rows
        .iter()
        .map(|x| {
            json!({"sector": x.sector.to_string(), "level": x.level, "ed_gap": num(x.ed_gap), "predicted": opt_num(x.predicted),
                   "occupations": x.occupations, "rel_dev": opt_num(x.rel_dev), "matched": x.predicted.is_some()})
        })
        .collect();
    json!({
        "N": r.particles,
        "a_N": num(r.a_n),
        "sectors": r.sectors.iter().map(|(s, d)| json!({"sector": s.to_string(), "dim": d})).collect::<Vec<_>>(),
        "ground": {
            "ed_energy": num(r.ground.ed_energy),
            "predicted": num(r.ground.predicted),
            "e0_per_particle": num(r.ground.e0_per_particle),
            "fourpi_aN": num(r.ground.fourpi_an),
            "lhy_deviation": num(r.ground.lhy_deviation),
        },
        "depletion": {"n_plus": num(r.depletion.n_plus), "condensate_fraction": num(r.depletion.condensate_fraction)},
        "e1_gap": r.e1_gap.map_or(Value::Null, |(g, e, d)| json!({"ed_gap": num(g), "epsilon": num(e), "rel_dev": num(d)})),
        "trial_overlap": opt_num(r.trial_overlap),
        "levels": rows,
    })
}

/// Shared by `ed` and `sweep`.
pub fn exact_diagonalization(command: &str, cfg: &RunConfig, format: Format) -> Result<Rendered, CliError> {
    let sweep = cfg.sweep_config()?;
    let reports: Vec<ComparisonReport> = sweep.particles.iter().map(|&n| compare_at(&sweep, n)).collect::<Result<_, _>>()?;
    let text = match format {
        Format::Csv => {
            let mut t = CsvTable::new(&SWEEP_HEADER);
            for r in sweep_rows(&reports) {
                t.push(r);
            }
            t.render(command, cfg)?
        }
        Format::Json => {
            let mut body = Map::new();
            body.insert("runs".into(), Value::Array(reports.iter().map(report_json).collect()));
            json_document(command, cfg, body)
        }
    };
    Ok(Rendered::ok(text))
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        Value::Array(a) if a.iter().any(|x| x.is_object() || x.is_array()) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, out);
            }
        }
        Value::Array(a) => out.push((prefix.into(), a.iter().map(scalar).collect::<Vec<_>>().join(";"))),
        x => out.push((prefix.into(), scalar(x))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

/// Long-format table `source, command, record, field, value` over prior outputs.
pub fn report(inputs: &[PathBuf]) -> Result<String, CliError> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    for path in inputs {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read `{}`: {e}", path.display())))?;
        let source = path.display().to_string();
        if text.trim_start().starts_with('{') {
            let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{source}: {e}")))?;
            let command = v.get("command").map(scalar).unwrap_or_default();
            let mut fields = Vec::new();
            if let Value::Object(m) = &v {
                for (k, x) in m.iter().filter(|(k, _)| *k != "config" && *k != "command") {
                    flatten(k, x, &mut fields);
                }
            }
            for (k, x) in fields {
                rows.push(vec![source.clone(), command.clone(), String::new(), k, x]);
            }
        } else {
            let command = text
                .lines()
                .find_map(|l| l.strip_prefix("# command: "))
                .map(str::to_string)
                .ok_or_else(|| CliError::Config(format!("{source}: not a bogolib output")))?;
            let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
            let header = rdr.headers().map_err(|e| CliError::Config(format!("{source}: {e}")))?.clone();
            for (i, rec) in rdr.records().enumerate() {
                let rec = rec.map_err(|e| CliError::Config(format!("{source}: {e}")))?;
                for (h, x) in header.iter().zip(rec.iter()) {
                    rows.push(vec![source.clone(), command.clone(), i.to_string(), h.into(), x.into()]);
                }
            }
        }
    }
    let mut out = format!("# command: report\n# bogolib_version: {}\n", crate::output::VERSION);
    out.push_str(&plain_csv(&["source", "command", "record", "field", "value"], &rows)?);
    Ok(out)
}
