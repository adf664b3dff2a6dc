//! Subcommand bodies. Each returns tables and summaries; writing is separate
//! so that invalid input never leaves partial output behind.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::penalty::{FieldStrength, Penalty, SpinMode};
use crate::scf::{reference_b0_solve, scf_solve, ScfConfig, ScfResult};

use super::config::RunConfig;
use super::table::{num, Table};
use super::verify::Check;

/// Build identifier stamped into every table.
pub const BUILD: &str = env!("MAGSLAB_GIT_DESCRIBE");

fn stamp(t: &mut Table, b: f64, spin: SpinMode) {
    t.meta("build", BUILD).meta("b", num(b)).meta("spin", spin.is_spin());
}

fn stamp_run(t: &mut Table, cfg: &ScfConfig) {
    stamp(t, cfg.b.value(), cfg.spin);
    let g = cfg.profile.grid();
    t.meta("nu", num(cfg.profile.nu()))
        .meta("grid_length", num(g.length()))
        .meta("grid_npoints", g.npoints());
}

/// `F` with its bounds and one-sided slopes on `steps` equispaced points of
/// `[0, g_max]`, plus the exact points where `F` meets each bound.
pub fn penalty_table(b: f64, g_max: f64, steps: usize, spin: SpinMode) -> Result<(Table, Table)> {
    if steps < 2 {
        return Err(Error::Config(format!("`steps` must be at least 2, got {steps}")));
    }
    if !(g_max.is_finite() && g_max > 0.0) {
        return Err(Error::Config(format!("`g-max` must be finite and > 0, got {g_max}")));
    }
    let field = FieldStrength::new(b).map_err(|e| Error::Config(format!("`b`: {e}")))?;
    if field.is_zero() {
        return Err(Error::Config("`b` must be > 0 for a penalty table".into()));
    }
    let p = Penalty::new(field, spin);
    let mut table = Table::new([
        "g[1/area]",
        "F[energy/area]",
        "lower_bound[energy/area]",
        "upper_bound[energy/area]",
        "f_minus[energy]",
        "f_plus[energy]",
    ]);
    stamp(&mut table, b, spin);
    for i in 0..steps {
        let g = g_max * i as f64 / (steps - 1) as f64;
        let s = p.subdiff(g)?;
        let (lo, hi) = p.bounds(g);
        table.push_numbers(&[g, s.value, lo, hi, s.left_slope, s.right_slope]);
    }

    let mut touch = Table::new(["g[1/area]", "F[energy/area]", "bound[energy/area]", "which"]);
    stamp(&mut touch, b, spin);
    let unit = field.level_density();
    // Spinless: lower at k·u, upper at (k+½)·u. Spin: lower at (2k−1)·u, upper at 2k·u.
    let (lower_at, upper_at): (Box<dyn Fn(u64) -> f64>, Box<dyn Fn(u64) -> f64>) = match spin {
        SpinMode::Spinless => (
            Box::new(move |k| k as f64 * unit),
            Box::new(move |k| (k as f64 + 0.5) * unit),
        ),
        SpinMode::Zeeman => (
            Box::new(move |k| (2 * k + 1) as f64 * unit),
            Box::new(move |k| (2 * k) as f64 * unit),
        ),
    };
    let mut points: Vec<(f64, &str)> = Vec::new();
    for k in 0.. {
        let (a, c) = (lower_at(k), upper_at(k));
        if a > g_max && c > g_max {
            break;
        }
        if a <= g_max {
            points.push((a, "lower"));
        }
        if c <= g_max {
            points.push((c, "upper"));
        }
    }
    points.sort_by(|x, y| x.0.total_cmp(&y.0));
    for (g, which) in points {
        let (lo, hi) = p.bounds(g);
        let bound = if which == "lower" { lo } else { hi };
        touch.push(vec![num(g), num(p.value(g)?), num(bound), which.to_string()]);
    }
    Ok((table, touch))
}

/// Every output file of one solve.
pub struct SolveBundle {
    pub summary: String,
    pub density: Table,
    pub orbitals: Table,
    pub bands: Table,
    pub history: Table,
}

impl SolveBundle {
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("summary.txt"), &self.summary)?;
        self.density.write(&dir.join("density.tsv"))?;
        self.orbitals.write(&dir.join("orbitals.tsv"))?;
        self.bands.write(&dir.join("bands.tsv"))?;
        self.history.write(&dir.join("history.tsv"))
    }
}

pub fn solve_bundle(cfg: &ScfConfig, r: &ScfResult) -> SolveBundle {
    let grid = *cfg.profile.grid();
    let e = &r.energy;
    let lines: Vec<(&str, String)> = vec![
        ("build", BUILD.to_string()),
        ("b", num(cfg.b.value())),
        ("nu", num(cfg.profile.nu())),
        ("spin", cfg.spin.is_spin().to_string()),
        ("grid_length", num(grid.length())),
        ("grid_npoints", grid.npoints().to_string()),
        ("nbands", r.nbands.to_string()),
        ("converged", r.converged.to_string()),
        ("iterations", r.iterations.to_string()),
        ("lambda", num(r.lambda)),
        ("energy_total", num(e.total)),
        ("energy_kinetic", num(e.kinetic)),
        ("energy_penalty", num(e.penalty)),
        ("energy_hartree", num(e.hartree)),
        ("objective", num(r.objective)),
        ("residual_occupation", num(r.residual.occupation)),
        ("residual_commutator", num(r.residual.commutator)),
        ("rank", r.state.rank().to_string()),
        ("trace", num(r.state.trace())),
    ];
    let summary: String = lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();

    let mut density = Table::new(["x[length]", "rho[1/volume]", "mu[1/volume]", "phi[energy]"]);
    stamp_run(&mut density, cfg);
    for i in 0..grid.npoints() {
        density.push_numbers(&[
            grid.node(i),
            r.density.values()[i],
            cfg.profile.mu().values()[i],
            r.potential.values()[i],
        ]);
    }

    let occ = r.state.occupations();
    let mut cols = vec!["x[length]".to_string()];
    cols.extend((0..occ.len()).map(|j| format!("psi_{j}[1/sqrt(length)]")));
    let mut orbitals = Table::new(cols);
    stamp_run(&mut orbitals, cfg);
    orbitals.meta(
        "occupations",
        occ.iter().map(|&g| num(g)).collect::<Vec<_>>().join(" "),
    );
    for i in 0..grid.npoints() {
        let mut row = vec![grid.node(i)];
        row.extend(r.state.orbitals().iter().map(|psi| psi.values()[i]));
        orbitals.push_numbers(&row);
    }

    let mut bands = Table::new(["index", "epsilon[energy]", "occupation[1/area]"]);
    stamp_run(&mut bands, cfg);
    bands.meta("lambda", num(r.lambda));
    for (j, (eps, g)) in r.eigenvalues.iter().zip(&r.band_occupations).enumerate() {
        bands.push_numbers(&[j as f64, *eps, *g]);
    }

    let mut history = Table::new([
        "iteration",
        "energy[energy/area]",
        "objective[energy/area]",
        "density_change[1/area]",
        "residual[energy]",
    ]);
    stamp_run(&mut history, cfg);
    for h in &r.history {
        history.push_numbers(&[
            h.iteration as f64,
            h.energy,
            h.objective,
            h.density_change,
            h.residual,
        ]);
    }
    SolveBundle {
        summary,
        density,
        orbitals,
        bands,
        history,
    }
}

/// One row of a field sweep.
pub struct SweepEntry {
    pub b: f64,
    pub reference: bool,
    pub outcome: Result<ScfResult>,
    pub config: ScfConfig,
}

/// Solves at every `b` (in parallel) and at `b = 0` with the reference
/// solver; entries come back sorted by `b`, the reference first.
pub fn sweep(run: &RunConfig, bs: &[f64]) -> Result<Vec<SweepEntry>> {
    if bs.is_empty() {
        return Err(Error::Config("empty b list".into()));
    }
    // Validate everything up front so bad input fails before any solve.
    let mut jobs = vec![(0.0, true, run.scf_config(Some(0.0))?)];
    let mut sorted = bs.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    for &b in &sorted {
        if b != 0.0 {
            jobs.push((b, false, run.scf_config(Some(b))?));
        }
    }
    let entries = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .into_iter()
            .map(|(b, reference, config)| {
                s.spawn(move || {
                    let outcome = if reference {
                        reference_b0_solve(&config)
                    } else {
                        scf_solve(&config)
                    };
                    SweepEntry {
                        b,
                        reference,
                        outcome,
                        config,
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect::<Vec<_>>()
    });
    Ok(entries)
}

pub fn sweep_table(entries: &[SweepEntry]) -> Table {
    let mut t = Table::new([
        "b[field]",
        "total[energy/area]",
        "kinetic[energy/area]",
        "penalty[energy/area]",
        "hartree[energy/area]",
        "lambda[energy]",
        "rank",
        "iterations",
        "converged",
        "status",
    ]);
    if let Some(first) = entries.first() {
        let cfg = &first.config;
        let g = cfg.profile.grid();
        t.meta("build", BUILD)
            .meta("nu", num(cfg.profile.nu()))
            .meta("spin", cfg.spin.is_spin())
            .meta("grid_length", num(g.length()))
            .meta("grid_npoints", g.npoints());
    }
    for e in entries {
        let status = if e.reference { "reference" } else { "ok" };
        let row = match &e.outcome {
            Ok(r) => vec![
                num(e.b),
                num(r.energy.total),
                num(r.energy.kinetic),
                num(r.energy.penalty),
                num(r.energy.hartree),
                num(r.lambda),
                r.state.rank().to_string(),
                r.iterations.to_string(),
                r.converged.to_string(),
                status.to_string(),
            ],
            Err(err) => {
                let mut row = vec![num(e.b)];
                row.extend(std::iter::repeat_n("NaN".to_string(), 5));
                row.extend(["0".to_string(), "0".to_string(), "false".to_string()]);
                row.push(format!("error: {}", err.to_string().replace(['\t', '\n'], " ")));
                row
            }
        };
        t.push(row);
    }
    t
}

/// Directory of the per-`b` outputs of a sweep.
pub fn sweep_dir(out: &Path, e: &SweepEntry) -> PathBuf {
    if e.reference {
        out.join("b_reference")
    } else {
        out.join(format!("b_{}", e.b))
    }
}

pub fn verify_table(checks: &[Check], seed: u64) -> Table {
    let mut t = Table::new(["suite", "property", "samples", "max_error", "tolerance", "result"]);
    t.meta("build", BUILD).meta("seed", seed);
    for c in checks {
        t.push(vec![
            c.suite.to_string(),
            c.property.clone(),
            c.samples.to_string(),
            num(c.max_error),
            num(c.tolerance),
            if c.passed() { "pass" } else { "FAIL" }.to_string(),
        ]);
    }
    t
}
