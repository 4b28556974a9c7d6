use llep_core::bethe::{self, energy, Parity};
use llep_core::cycles::{self, CycleStatus};
use llep_core::exceptional::{find_ep_with, ExceptionalPoint};
use llep_core::holonomy::{chain_contour, ep_keyhole, m_chain_analytic, m_n_analytic, HolonomyMatrix};
use llep_core::io::{fmt_f64, CsvTable, ExportRecord};
use llep_core::{build_sheet, gauge_connection, max_abs, overlap_connection_oracle, CMatrix, ComplexPath, Error, RunConfig};
use num_complex::Complex64;
use serde_json::{json, Value};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;

pub struct Outcome {
    pub record: ExportRecord,
    pub code: u8,
    pub notes: Vec<String>,
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_)
            | Error::Domain(_)
            | Error::InvalidPath(_)
            | Error::Truncation(_)
            | Error::ParityMismatch { .. }
            | Error::Parse(_) => EXIT_USAGE,
            _ => EXIT_SOLVER,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<Outcome, Failure>;

fn ok(record: ExportRecord) -> CmdResult {
    Ok(Outcome {
        record,
        code: 0,
        notes: Vec::new(),
    })
}

fn c64(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn matrix_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| c64(m[(i, j)])).collect()))
            .collect(),
    )
}

fn row(cells: impl IntoIterator<Item = String>) -> Vec<String> {
    cells.into_iter().collect()
}

pub fn solve(cfg: &RunConfig, n: usize, g: f64, kbar: Option<i64>) -> CmdResult {
    let s = bethe::solve_k_real_with(n, g, &cfg.solver())?;
    let mut columns = vec!["n", "g", "re_k", "im_k", "relative_residual", "bound"];
    let mut cells = vec![
        n.to_string(),
        fmt_f64(g),
        fmt_f64(s.k.re),
        fmt_f64(s.k.im),
        fmt_f64(bethe::relative_residual(Parity::of(n), s.g, s.k)),
        bethe::is_bound(n, g).to_string(),
    ];
    if let Some(kb) = kbar {
        let e = energy(kb, &s)?.energy;
        columns.extend(["kbar", "re_energy", "im_energy"]);
        cells.extend([kb.to_string(), fmt_f64(e.re), fmt_f64(e.im)]);
    }
    let mut t = CsvTable::new(columns);
    t.push(cells)?;
    ok(ExportRecord::table("solve", &cfg.hash(), t))
}

fn find(cfg: &RunConfig, n: usize) -> llep_core::Result<ExceptionalPoint> {
    find_ep_with(n, cfg.ep_search_radius, cfg.ep_search_starts)
}

pub fn eps(cfg: &RunConfig, n_max: usize) -> CmdResult {
    let levels: Vec<usize> = (2..=n_max).filter(|&n| Parity::of(n) == cfg.parity).collect();
    if levels.is_empty() {
        return Err(Failure {
            code: EXIT_USAGE,
            message: format!("no excited {} levels up to {n_max}", cfg.parity.name()),
        });
    }
    let mut t = CsvTable::new([
        "n", "n_b", "re_g", "im_g", "re_k", "im_k", "residual_f", "residual_r", "status",
    ]);
    let mut notes = Vec::new();
    for n in levels {
        match find(cfg, n) {
            Ok(ep) => {
                let (f, r) = ep.residuals();
                t.push(row([
                    n.to_string(),
                    ep.n_b.to_string(),
                    fmt_f64(ep.g_ep.re),
                    fmt_f64(ep.g_ep.im),
                    fmt_f64(ep.k_ep.re),
                    fmt_f64(ep.k_ep.im),
                    fmt_f64(f),
                    fmt_f64(r),
                    "ok".into(),
                ]))?;
            }
            Err(e) => {
                notes.push(format!("n={n}: {e}"));
                let blank = String::new;
                t.push(row([
                    n.to_string(),
                    cfg.parity.ground().to_string(),
                    blank(),
                    blank(),
                    blank(),
                    blank(),
                    blank(),
                    blank(),
                    "failed".into(),
                ]))?;
            }
        }
    }
    let code = if notes.is_empty() { 0 } else { EXIT_SOLVER };
    Ok(Outcome {
        record: ExportRecord::table("eps", &cfg.hash(), t),
        code,
        notes,
    })
}

pub fn sheet(cfg: &RunConfig, n: usize, cuts: bool) -> CmdResult {
    let sheet = build_sheet(n, &cfg.grid())?;
    let notes: Vec<String> = if sheet.is_complete() {
        Vec::new()
    } else {
        vec!["some columns stop at a branch point; their lower cells are empty".into()]
    };
    let t = if cuts {
        let mut t = CsvTable::new(["re_g", "im_lo", "im_hi"]);
        for c in &sheet.cut_segments {
            t.push(row([fmt_f64(c.re), fmt_f64(c.im_lo), fmt_f64(c.im_hi)]))?;
        }
        t
    } else {
        let g = &sheet.grid;
        let mut t = CsvTable::new(["re_g", "im_g", "re_k", "im_k", "re_sqrt_r", "im_sqrt_r"]);
        for i in 0..g.n_im {
            for j in 0..g.n_re {
                let at = g.g(i, j);
                let mut cells = vec![fmt_f64(at.re), fmt_f64(at.im)];
                match sheet.level_at(i, j) {
                    Some(l) => cells.extend([
                        fmt_f64(l.k().re),
                        fmt_f64(l.k().im),
                        fmt_f64(l.sqrt_r.re),
                        fmt_f64(l.sqrt_r.im),
                    ]),
                    None => cells.extend(std::iter::repeat_n(String::new(), 4)),
                }
                t.push(cells)?;
            }
        }
        t
    };
    Ok(Outcome {
        record: ExportRecord::table(if cuts { "sheet-cuts" } else { "sheet" }, &cfg.hash(), t),
        code: 0,
        notes,
    })
}

#[derive(Debug, Clone, Copy)]
pub enum Contour {
    EpLoop(usize),
    Chain(usize),
    NEp(usize),
    Empty,
}

fn ep_json(ep: &ExceptionalPoint) -> Value {
    json!({ "n": ep.n, "n_b": ep.n_b, "g_ep": c64(ep.g_ep), "k_ep": c64(ep.k_ep) })
}

pub fn holonomy(cfg: &RunConfig, g0: f64, contour: Contour) -> CmdResult {
    let trunc = cfg.truncation()?;
    let parity = cfg.parity;
    let spec = cfg.keyhole();
    let chain_eps = |m: usize| -> llep_core::Result<Vec<ExceptionalPoint>> {
        (1..=m).map(|i| find(cfg, parity.level(i))).collect()
    };
    // The closed form needs every visited level inside the window; without it
    // the transport still runs and the permutation may come out inconclusive.
    let (kind, eps, path, reference): (&str, Vec<ExceptionalPoint>, ComplexPath, Option<HolonomyMatrix>) = match contour {
        Contour::EpLoop(n) => {
            if Parity::of(n) != parity {
                return Err(Failure {
                    code: EXIT_USAGE,
                    message: format!("level {n} is not in the {} family; pass --parity", parity.name()),
                });
            }
            let ep = find(cfg, n)?;
            let path = ep_keyhole(g0, &ep, &spec)?;
            ("ep-loop", vec![ep], path, m_n_analytic(n, &trunc).ok())
        }
        Contour::Chain(m) => {
            let eps = chain_eps(m)?;
            let path = chain_contour(g0, &eps, &spec)?;
            ("chain", eps, path, m_chain_analytic(m, &trunc).ok())
        }
        Contour::NEp(count) => {
            let eps = chain_eps(count)?;
            let path = cycles::n_ep_contour_with(g0, count, parity, &spec)?;
            ("n-ep", eps, path, m_chain_analytic(count, &trunc).ok())
        }
        Contour::Empty => (
            "empty",
            Vec::new(),
            ComplexPath::point(Complex64::new(g0, 0.0)),
            m_chain_analytic(0, &trunc).ok(),
        ),
    };
    let path = path.with_steps(cfg.max_step, cfg.min_step)?;
    let (res, h) = cycles::contour_permutation_with(&path, &trunc, &cfg.transport())?;
    let deviation = reference.as_ref().map(|r| h.max_abs_diff(&r.matrix));
    let diag = h.diagnostics.as_ref();
    let doc = json!({
        "contour": {
            "kind": kind,
            "g0": g0,
            "eps": eps.iter().map(ep_json).collect::<Vec<_>>(),
            "segments": path.segment_count(),
            "length": path.length(),
        },
        "parity": parity.name(),
        "levels": trunc.levels(),
        "ordering": format!("{:?}", h.ordering),
        "matrix": matrix_json(&h.matrix),
        "closed_form": reference.as_ref().map(|r| matrix_json(&r.matrix)),
        "max_deviation": deviation,
        "permutation": res.permutation,
        "status": res.status,
        "diagnostics": {
            "accepted_steps": diag.map(|d| d.accepted_steps),
            "rejected_steps": diag.map(|d| d.rejected_steps),
            "leakage": diag.map(|d| d.leakage),
        },
        "warnings": h.warnings,
    });
    let code = if res.status == CycleStatus::Inconclusive { EXIT_INCONCLUSIVE } else { 0 };
    Ok(Outcome {
        record: ExportRecord::document("holonomy", &cfg.hash(), doc),
        code,
        notes: h.warnings.clone(),
    })
}

pub fn cycle(cfg: &RunConfig, g0: f64, kbar: Option<i64>) -> CmdResult {
    let trunc = cfg.truncation()?;
    let kbar = kbar.unwrap_or(cfg.parity.ground() as i64);
    let res = cycles::hermitian_cycle_with(g0, &trunc, kbar, &cfg.solver())?;
    let code = if res.status == CycleStatus::Inconclusive { EXIT_INCONCLUSIVE } else { 0 };
    let doc = serde_json::to_value(&res).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: e.to_string(),
    })?;
    Ok(Outcome {
        record: ExportRecord::document("cycle", &cfg.hash(), doc),
        code,
        notes: Vec::new(),
    })
}

pub fn oracle_check(cfg: &RunConfig, g_re: f64, g_im: f64, tolerance: f64) -> CmdResult {
    let trunc = cfg.truncation()?;
    let g = Complex64::new(g_re, g_im);
    let kbar = cfg.parity.ground() as i64;
    let closed = gauge_connection(g, &trunc)?;
    let oracle = overlap_connection_oracle(cfg.parity, cfg.n_levels, g, kbar, &cfg.oracle())?;
    let deviation = max_abs(&(&closed - &oracle));
    let agrees = deviation <= tolerance;
    let doc = json!({
        "g": c64(g),
        "parity": cfg.parity.name(),
        "levels": trunc.levels(),
        "closed_form": matrix_json(&closed),
        "oracle": matrix_json(&oracle),
        "max_deviation": deviation,
        "tolerance": tolerance,
        "agrees": agrees,
    });
    Ok(Outcome {
        record: ExportRecord::document("oracle-check", &cfg.hash(), doc),
        code: if agrees { 0 } else { EXIT_SOLVER },
        notes: if agrees {
            Vec::new()
        } else {
            vec![format!("closed form and oracle differ by {deviation:e}")]
        },
    })
}
