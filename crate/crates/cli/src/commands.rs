use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use charkin_core::charfn::convert_ordering;
use charkin_core::classical::{hbar_scan, to_density};
use charkin_core::evolution::{evolve, EvolveConfig, RhsMethod, KAPPA_GRID, KAPPA_STAR};
use charkin_core::fock::{
    density_to_charfn, oracle_rhs_exact, oracle_time_derivative, FockDensity,
};
use charkin_core::io::{write_monitor_csv, Dump, DumpTag};
use charkin_core::wigner::to_wigner;
use charkin_core::{CharField, Error, Ordering, PhaseGrid};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{build_method, Format, OracleReference, RunConfig, Setup};
use crate::failure::Failure;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST: &str = "manifest.json";
pub const MONITORS: &str = "monitors.csv";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub t: f64,
    pub file: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub code_version: String,
    pub kappa_star: f64,
    pub kappa_grid: f64,
    pub config: RunConfig,
    pub steps: usize,
    pub dt_bound: f64,
    pub truncation_warning: bool,
    pub monitors: String,
    pub snapshots: Vec<SnapshotEntry>,
}

pub struct Outcome {
    pub summary: serde_json::Value,
}

fn save_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::numerical(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn save_field(
    dir: &Path,
    stem: &str,
    field: &CharField,
    formats: &[Format],
) -> Result<String, Failure> {
    let dump = Dump::from_charfield(field);
    let bin = format!("{stem}.bin");
    dump.save(&dir.join(&bin))?;
    if formats.contains(&Format::Csv) {
        dump.save_csv(&dir.join(format!("{stem}.csv")))?;
    }
    Ok(bin)
}

pub fn cmd_evolve(cfg: &RunConfig, out: &Path) -> Result<Outcome, Failure> {
    let setup = Setup::build(cfg)?;
    fs::create_dir_all(out)?;
    let ec = EvolveConfig {
        dt: cfg.evolve.dt,
        t_final: cfg.evolve.t_final,
        cadence: cfg.evolve.cadence,
        tolerances: cfg.evolve.tolerances,
    };
    let traj = match evolve(&setup.initial, setup.rhs.as_ref(), &ec) {
        Ok(t) => t,
        Err(Error::MonitorBreach {
            t,
            what,
            value,
            tolerance,
            snapshot,
        }) => {
            let mut f = Failure::from(Error::MonitorBreach {
                t,
                what,
                value,
                tolerance,
                snapshot: None,
            });
            if let Some(field) = snapshot {
                let file = save_field(out, "breach", &field, &cfg.output.formats)?;
                f.detail["snapshot"] = json!(out.join(file));
            }
            return Err(f);
        }
        Err(e) => return Err(e.into()),
    };
    let mut snapshots = Vec::with_capacity(traj.snapshots.len());
    for (k, s) in traj.snapshots.iter().enumerate() {
        let file = save_field(out, &format!("snap_{k:05}"), &s.field, &cfg.output.formats)?;
        snapshots.push(SnapshotEntry { t: s.t, file });
    }
    let reports: Vec<_> = traj.snapshots.iter().map(|s| s.monitors).collect();
    write_monitor_csv(BufWriter::new(File::create(out.join(MONITORS))?), &reports)?;
    let manifest = Manifest {
        command: "evolve".into(),
        code_version: CODE_VERSION.into(),
        kappa_star: KAPPA_STAR,
        kappa_grid: KAPPA_GRID,
        config: cfg.clone(),
        steps: traj.steps,
        dt_bound: traj.dt_bound,
        truncation_warning: setup.truncation_warning,
        monitors: MONITORS.into(),
        snapshots,
    };
    save_json(&out.join(MANIFEST), &manifest)?;
    Ok(Outcome {
        summary: json!({
            "status": "ok",
            "command": "evolve",
            "out": out,
            "snapshots": traj.snapshots.len(),
            "steps": traj.steps,
            "max_normalization_drift": traj.max_normalization_drift(),
            "max_hermiticity": traj.max_hermiticity(),
            "truncation_warning": setup.truncation_warning,
        }),
    })
}

pub fn load_manifest(dir: &Path) -> Result<Manifest, Failure> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Distance {
    pub t: f64,
    pub l2: f64,
    pub linf: f64,
}

/// `‖a − b‖` in the continuum L2 norm (cell-volume weighted) and L∞.
pub fn distance(a: &CharField, b: &CharField) -> Result<(f64, f64), Failure> {
    if !a.grid().same_geometry(b.grid()) {
        return Err(Failure::config("runs use different grids"));
    }
    let mut sq = 0.0;
    let mut inf = 0.0f64;
    for (x, y) in a.data().iter().zip(b.data()) {
        let d = (x - y).norm();
        sq += d * d;
        inf = inf.max(d);
    }
    Ok(((sq * a.grid().cell_volume()).sqrt(), inf))
}

pub fn cmd_compare(
    a: &Path,
    b: &Path,
    out: Option<&Path>,
) -> Result<(Vec<Distance>, Outcome), Failure> {
    let ma = load_manifest(a)?;
    let mb = load_manifest(b)?;
    if ma.snapshots.len() != mb.snapshots.len() {
        return Err(Failure::config(format!(
            "runs hold {} and {} snapshots",
            ma.snapshots.len(),
            mb.snapshots.len()
        )));
    }
    let mut rows = Vec::with_capacity(ma.snapshots.len());
    for (sa, sb) in ma.snapshots.iter().zip(&mb.snapshots) {
        if (sa.t - sb.t).abs() > 1e-9 * sa.t.abs().max(1.0) {
            return Err(Failure::config(format!(
                "snapshot times differ: {} vs {}",
                sa.t, sb.t
            )));
        }
        let fa = Dump::load(&a.join(&sa.file))?.into_charfield()?;
        let fb = Dump::load(&b.join(&sb.file))?.into_charfield()?;
        let (l2, linf) = distance(&fa, &fb)?;
        rows.push(Distance { t: sa.t, l2, linf });
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_distances(
            BufWriter::new(File::create(dir.join("compare.csv"))?),
            &rows,
        )?;
    }
    let max_l2 = rows.iter().map(|r| r.l2).fold(0.0, f64::max);
    let max_linf = rows.iter().map(|r| r.linf).fold(0.0, f64::max);
    Ok((
        rows,
        Outcome {
            summary: json!({"status": "ok", "command": "compare", "max_l2": max_l2, "max_linf": max_linf}),
        },
    ))
}

pub fn write_distances<W: Write>(mut w: W, rows: &[Distance]) -> Result<(), Failure> {
    writeln!(w, "t,l2,linf")?;
    for r in rows {
        writeln!(w, "{:.17e},{:.17e},{:.17e}", r.t, r.l2, r.linf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_hbar_scan(cfg: &RunConfig, hbars: &[f64], out: &Path) -> Result<Outcome, Failure> {
    if cfg.evolve.ordering != Ordering::Symmetric {
        return Err(Failure::config(
            "hbar-scan requires evolve.ordering symmetric",
        ));
    }
    if hbars.is_empty() {
        return Err(Failure::config("hbar-scan needs at least one ħ value"));
    }
    let grid = PhaseGrid::new(&cfg.grid_spec()?)?;
    let symbol = cfg.phase_symbol()?;
    let (field, _) = crate::config::initial_field(cfg, &grid, Ordering::Symmetric)?;
    let scan = hbar_scan(&field, &symbol, hbars)?;
    fs::create_dir_all(out)?;
    let mut w = BufWriter::new(File::create(out.join("hbar_scan.csv"))?);
    writeln!(w, "hbar,defect")?;
    for (h, d) in scan.hbars.iter().zip(&scan.defects) {
        writeln!(w, "{h:.17e},{d:.17e}")?;
    }
    w.flush()?;
    Ok(Outcome {
        summary: json!({
            "status": "ok",
            "command": "hbar-scan",
            "out": out,
            "hbars": scan.hbars,
            "defects": scan.defects,
            "ratios": scan.ratios,
            "orders": scan.orders,
        }),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    pub method: RhsMethod,
    pub relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn cmd_oracle_check(cfg: &RunConfig, out: &Path) -> Result<Outcome, Failure> {
    let ordering = cfg.evolve.ordering;
    if !ordering.is_quantum() {
        return Err(Failure::config("oracle-check needs a quantum ordering"));
    }
    let h = cfg
        .quantum_hamiltonian()?
        .ok_or_else(|| Failure::config("oracle-check needs a quantum Hamiltonian"))?;
    if cfg.grid.n != 1 {
        return Err(Failure::config("oracle-check is single-mode (grid.N = 1)"));
    }
    let grid = PhaseGrid::new(&cfg.grid_spec()?)?;
    let n_max = cfg.oracle.n_max;
    let rho = FockDensity::from_state(&cfg.state, n_max)?;
    let op = h.to_fock(n_max)?;
    let initial = density_to_charfn(&rho, &grid, ordering)?;
    let reference = match cfg.oracle.reference {
        OracleReference::FiniteDifference => {
            oracle_time_derivative(&rho, &op, &grid, ordering, cfg.oracle.tau)?
        }
        OracleReference::Commutator => oracle_rhs_exact(&rho, &op, &grid, ordering)?,
    };
    let methods = if cfg.oracle.methods.is_empty() {
        vec![cfg.evolve.method]
    } else {
        cfg.oracle.methods.clone()
    };
    let mut results = Vec::new();
    for m in methods {
        let rhs = build_method(cfg, &grid, ordering, m)?;
        let err = rhs.eval(&initial.field)?.relative_l2(&reference);
        let tol = cfg.oracle.tolerances.get(m);
        results.push(OracleResult {
            method: m,
            relative_error: err,
            tolerance: tol,
            pass: err <= tol,
        });
    }
    fs::create_dir_all(out)?;
    let mut w = BufWriter::new(File::create(out.join("oracle_check.csv"))?);
    writeln!(w, "method,relative_error,tolerance,pass")?;
    for r in &results {
        let name = serde_json::to_value(r.method).map_err(|e| Failure::numerical(e.to_string()))?;
        writeln!(
            w,
            "{},{:.17e},{:.17e},{}",
            name.as_str().unwrap_or("?"),
            r.relative_error,
            r.tolerance,
            r.pass
        )?;
    }
    w.flush()?;
    let report = json!({
        "command": "oracle-check",
        "out": out,
        "n_max": n_max,
        "outside_validity": initial.outside_validity,
        "results": results,
    });
    if results.iter().any(|r| !r.pass) {
        return Err(Failure::numerical("oracle tolerance exceeded").with_detail(report));
    }
    let mut summary = report;
    summary["status"] = json!("ok");
    Ok(Outcome { summary })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvertTarget {
    Same,
    Ordering(Ordering),
    Wigner,
}

impl std::str::FromStr for ConvertTarget {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "same" => Ok(ConvertTarget::Same),
            "normal" => Ok(ConvertTarget::Ordering(Ordering::Normal)),
            "symmetric" => Ok(ConvertTarget::Ordering(Ordering::Symmetric)),
            "antinormal" => Ok(ConvertTarget::Ordering(Ordering::Antinormal)),
            "wigner" => Ok(ConvertTarget::Wigner),
            other => Err(format!("unknown target {other:?}")),
        }
    }
}

pub fn cmd_convert(
    input: &Path,
    to: ConvertTarget,
    format: Format,
    output: Option<&Path>,
) -> Result<Outcome, Failure> {
    let dump = Dump::load(input)?;
    let converted = match (to, dump.tag) {
        (ConvertTarget::Same, _) => dump,
        (ConvertTarget::Ordering(o), DumpTag::Char(_)) => {
            Dump::from_charfield(&convert_ordering(&dump.into_charfield()?, o)?)
        }
        (ConvertTarget::Wigner, DumpTag::Char(Ordering::Classical)) => {
            Dump::from_wigner(&to_density(&dump.into_charfield()?)?)
        }
        (ConvertTarget::Wigner, DumpTag::Char(_)) => {
            let sym = convert_ordering(&dump.into_charfield()?, Ordering::Symmetric)?;
            Dump::from_wigner(&to_wigner(&sym)?)
        }
        (ConvertTarget::Wigner, DumpTag::Wigner) => dump,
        (ConvertTarget::Ordering(_), DumpTag::Wigner) => {
            return Err(Failure::config("a Wigner dump converts only to csv"));
        }
    };
    let ext = match format {
        Format::Bin => "bin",
        Format::Csv => "csv",
    };
    let path: PathBuf = match output {
        Some(p) => p.to_path_buf(),
        None => {
            let stem = input
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("field");
            input.with_file_name(format!("{stem}_{}.{ext}", converted.tag.name()))
        }
    };
    if path == input {
        return Err(Failure::config("conversion would overwrite its input"));
    }
    match format {
        Format::Bin => converted.save(&path)?,
        Format::Csv => converted.save_csv(&path)?,
    }
    Ok(Outcome {
        summary: json!({"status": "ok", "command": "convert", "output": path, "tag": converted.tag.name()}),
    })
}
