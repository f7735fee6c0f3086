use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use rayon::ThreadPool;

use crate::imex::{
    characteristic_initial_data, CharacteristicBasis, Grid, GridField, ImexStepper, RunResult,
    REFERENCE_MODE,
};
use crate::models::{catalog_names, splitting_by_name, FluxSplitting, ModelError, SplittingKind};
use crate::modeq::{
    cfl_bounds, closed_form_real_parts, discrete_symbol, max_stable_ratio, resolve_alpha,
    stability_scan, SchemeParams,
};
use crate::smallmat::eig;

use super::config::{
    resolve, Command, CommandKind, CommonArgs, InitData, RunConfig, StepSize, DEFAULT_A,
};
use super::csv::{format_num, write_atomic, Cell, Table};
use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    /// At least one simulation crossed the blow-up threshold.
    BlowUp,
}

/// Only the prototype has closed-form CFL bounds.
const BOUNDS_SPLITTING: &str = "prototype";

pub fn run_command(
    cmd: &Command,
    pool: &ThreadPool,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<Outcome, CliError> {
    let (kind, common, extra): (_, &CommonArgs, Vec<(&str, Option<String>)>) = match cmd {
        Command::Catalog => return catalog(stdout),
        Command::Scan(c) => (CommandKind::Scan, c, vec![]),
        Command::Analyze(c) => (CommandKind::Analyze, c, vec![]),
        Command::Simulate(s) => (
            CommandKind::Simulate,
            &s.common,
            vec![("init", s.init.clone()), ("blowup", s.blowup.clone())],
        ),
        Command::Symbol(s) => (
            CommandKind::Symbol,
            &s.common,
            vec![("ntheta", s.ntheta.clone())],
        ),
    };
    let cfg = resolve(kind, common, &extra)?;
    let sp = splitting_by_name(&cfg.splitting, cfg.a)?;
    let eps = eps_values(&sp, &cfg)?;
    match kind {
        CommandKind::Scan => {
            let table = scan(&sp, &cfg, &eps, pool)?;
            emit(&table, cfg.out.as_deref(), stdout)?;
            Ok(Outcome::Completed)
        }
        CommandKind::Analyze => {
            let table = analyze(&sp, &cfg, &eps, pool, stderr)?;
            emit(&table, cfg.out.as_deref(), stdout)?;
            Ok(Outcome::Completed)
        }
        CommandKind::Symbol => {
            let table = symbol(&sp, &cfg, &eps, pool, stderr)?;
            emit(&table, cfg.out.as_deref(), stdout)?;
            Ok(Outcome::Completed)
        }
        CommandKind::Simulate => simulate(&sp, &cfg, &eps, pool, stderr),
    }
}

/// Explicit ε values must lie in the splitting's domain; the default grid
/// is clipped to it.
fn eps_values(sp: &FluxSplitting, cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let domain = sp.domain();
    if cfg.eps_given {
        if let Some(&bad) = cfg.eps.iter().find(|&&e| !domain.contains(e)) {
            return Err(ModelError::EpsOutOfDomain {
                eps: bad,
                splitting: sp.name().to_string(),
            }
            .into());
        }
        return Ok(cfg.eps.clone());
    }
    let eps: Vec<f64> = cfg
        .eps
        .iter()
        .copied()
        .filter(|&e| domain.contains(e))
        .collect();
    if eps.is_empty() {
        return Err(CliError::Config {
            field: "eps".into(),
            reason: format!(
                "default grid has no point inside the domain of {}",
                sp.name()
            ),
        });
    }
    Ok(eps)
}

fn emit(table: &Table, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = table.render();
    match out {
        Some(path) => write_atomic(path, &text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn params_at(sp: &FluxSplitting, cfg: &RunConfig, eps: f64) -> Result<SchemeParams, CliError> {
    let m = sp.at(eps)?;
    let (alpha_hat, alpha_tilde) = resolve_alpha(&cfg.alpha, &m)?;
    let dt = cfg
        .dt(sp.system().advective_speed())
        .expect("time step is set for every command but scan");
    Ok(SchemeParams::new(cfg.dx, dt, alpha_hat, alpha_tilde)?)
}

fn par_rows<T: Send>(
    pool: &ThreadPool,
    eps: &[f64],
    f: impl Fn(f64) -> Result<T, CliError> + Sync + Send,
) -> Result<Vec<T>, CliError> {
    pool.install(|| eps.par_iter().map(|&e| f(e)).collect())
}

fn catalog(stdout: &mut dyn Write) -> Result<Outcome, CliError> {
    let mut t = Table::new(["name", "kind", "dim", "eps_upper", "upper_inclusive"]);
    for name in catalog_names() {
        let sp = splitting_by_name(name, DEFAULT_A)?;
        let kind = match sp.kind() {
            SplittingKind::Characteristic => "characteristic",
            SplittingKind::General => "general",
        };
        let d = sp.domain();
        t.push(vec![
            (*name).into(),
            kind.into(),
            sp.dim().into(),
            d.upper.into(),
            if d.upper_inclusive { "true" } else { "false" }.into(),
        ]);
    }
    emit(&t, None, stdout)?;
    Ok(Outcome::Completed)
}

fn scan(
    sp: &FluxSplitting,
    cfg: &RunConfig,
    eps: &[f64],
    pool: &ThreadPool,
) -> Result<Table, CliError> {
    let speed = sp.system().advective_speed();
    let nu_hi = cfg.step.map(|s| match s {
        StepSize::Nu(nu) => nu,
        StepSize::Dt(dt) => speed * dt / cfg.dx,
    });
    let rows = par_rows(pool, eps, |e| {
        let m = sp.at(e)?;
        let (ah, at) = resolve_alpha(&cfg.alpha, &m)?;
        let nu_max = max_stable_ratio(sp, e, cfg.dx, &cfg.alpha, nu_hi, cfg.k_max)?;
        let nu1 = (ah + at) / speed;
        let bounds = if sp.name() == BOUNDS_SPLITTING {
            Some(cfl_bounds(speed, e, ah, at)?)
        } else {
            None
        };
        Ok(vec![
            e.into(),
            nu_max.into(),
            nu1.into(),
            bounds.map(|b| b.nu2).into(),
            bounds.map(|b| b.phi).into(),
            bounds.map(|b| b.psi).into(),
            ah.into(),
            at.into(),
        ])
    })?;
    let mut t = Table::new([
        "eps",
        "nu_max_numeric",
        "nu1",
        "nu2",
        "phi",
        "psi",
        "alpha_hat",
        "alpha_tilde",
    ]);
    rows.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

fn analyze(
    sp: &FluxSplitting,
    cfg: &RunConfig,
    eps: &[f64],
    pool: &ThreadPool,
    stderr: &mut dyn Write,
) -> Result<Table, CliError> {
    let d = sp.dim();
    let closed = sp.kind() == SplittingKind::Characteristic;
    let mut header = vec!["eps".to_string(), "k".to_string()];
    for i in 1..=d {
        header.push(format!("re_mu_{i}"));
        header.push(format!("im_mu_{i}"));
    }
    if closed {
        header.extend((1..=d).map(|i| format!("cf_re_mu_{i}")));
    }
    let blocks = par_rows(pool, eps, |e| {
        let p = params_at(sp, cfg, e)?;
        let report = stability_scan(sp, e, &p, cfg.k_max)?;
        let data = if closed { sp.at(e)?.char_data } else { None };
        let mut rows = Vec::with_capacity(report.k_list.len());
        for (&k, spec) in report.k_list.iter().zip(&report.spectra) {
            let mut row: Vec<Cell> = vec![e.into(), k.into()];
            for z in &spec.values {
                row.push(z.re.into());
                row.push(z.im.into());
            }
            if closed {
                match &data {
                    Some(data) => {
                        let mut cf = closed_form_real_parts(data, &p, k);
                        cf.sort_by(f64::total_cmp);
                        row.extend(cf.into_iter().map(Cell::from));
                    }
                    None => row.extend((0..d).map(|_| Cell::Empty)),
                }
            }
            rows.push(row);
        }
        let summary = format!(
            "eps={} max_re={} verdict={} witness_k={}",
            format_num(e),
            format_num(report.max_real_overall),
            report.verdict.as_str(),
            report.witness_k
        );
        Ok((rows, summary))
    })?;
    let mut t = Table::new(header);
    for (rows, summary) in blocks {
        rows.into_iter().for_each(|r| t.push(r));
        let _ = writeln!(stderr, "{summary}");
    }
    Ok(t)
}

/// `n` angles from 0 to π inclusive.
fn theta_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| std::f64::consts::PI * i as f64 / (n - 1) as f64)
        .collect()
}

fn symbol(
    sp: &FluxSplitting,
    cfg: &RunConfig,
    eps: &[f64],
    pool: &ThreadPool,
    stderr: &mut dyn Write,
) -> Result<Table, CliError> {
    let thetas = theta_grid(cfg.ntheta);
    let blocks = par_rows(pool, eps, |e| {
        let p = params_at(sp, cfg, e)?;
        let radii = thetas
            .iter()
            .map(|&th| {
                let g = discrete_symbol(sp, e, &p, th)?;
                let spec = eig(&g).map_err(crate::modeq::ModeqError::from)?;
                Ok(spec.values.iter().map(|z| z.norm()).fold(0.0, f64::max))
            })
            .collect::<Result<Vec<f64>, CliError>>()?;
        let max = radii.iter().copied().fold(0.0, f64::max);
        let summary = format!(
            "eps={} max_radius={} reference={}",
            format_num(e),
            format_num(max),
            format_num(1.0 + 10.0 * p.dt)
        );
        Ok((radii, summary))
    })?;
    let mut t = Table::new(["eps", "theta", "radius"]);
    for (&e, (radii, summary)) in eps.iter().zip(blocks) {
        for (&th, r) in thetas.iter().zip(radii) {
            t.push(vec![e.into(), th.into(), r.into()]);
        }
        let _ = writeln!(stderr, "{summary}");
    }
    Ok(t)
}

/// Profile and history paths for `n` simulations written under `out`:
/// `out` and `<stem>.l2.<ext>` for one run, `<stem>-eps-<i>.<ext>` and
/// `<stem>-eps-<i>.l2.<ext>` (1-based `i`) for several.
pub fn simulate_paths(out: &Path, n: usize) -> Vec<(PathBuf, PathBuf)> {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = out
        .extension()
        .map(|s| format!(".{}", s.to_string_lossy()))
        .unwrap_or_default();
    let with = |name: String| out.with_file_name(name);
    if n == 1 {
        return vec![(out.to_path_buf(), with(format!("{stem}.l2{ext}")))];
    }
    (1..=n)
        .map(|i| {
            (
                with(format!("{stem}-eps-{i}{ext}")),
                with(format!("{stem}-eps-{i}.l2{ext}")),
            )
        })
        .collect()
}

struct SimOutput {
    profile: Table,
    history: Table,
    result: RunResult,
}

fn simulate_one(sp: &FluxSplitting, cfg: &RunConfig, eps: f64) -> Result<SimOutput, CliError> {
    let grid = Grid::with_dx(cfg.dx)?;
    let p = params_at(sp, cfg, eps)?;
    let stepper = ImexStepper::new(sp, eps, p, grid)?;
    let basis = CharacteristicBasis::new(sp, eps)?;
    let d = sp.dim();
    let initial = match cfg.init {
        InitData::Zero => GridField::zeros(grid, d),
        InitData::Reference => {
            let mut c = vec![Complex64::new(0.0, 0.0); d];
            c[0] = Complex64::new(1.0, 0.0);
            characteristic_initial_data(&basis, grid, &[(REFERENCE_MODE, c)])?
        }
    };
    let result = stepper.run(&initial, cfg.t_final, cfg.blowup)?;
    let w = basis.to_characteristic(&result.final_field);

    let mut header = vec!["x".to_string()];
    header.extend((1..=d).map(|i| format!("u{i}")));
    header.push("w1".into());
    let mut profile = Table::new(header);
    for (j, x) in grid.centers().enumerate() {
        let mut row: Vec<Cell> = vec![x.into()];
        row.extend(result.final_field.cell(j).iter().map(|&v| Cell::from(v)));
        row.push(w.cell(j)[0].into());
        profile.push(row);
    }
    let mut history = Table::new(["step", "t", "l2"]);
    for (n, &l2) in result.l2_history.iter().enumerate() {
        history.push(vec![n.into(), (n as f64 * p.dt).into(), l2.into()]);
    }
    Ok(SimOutput {
        profile,
        history,
        result,
    })
}

fn simulate(
    sp: &FluxSplitting,
    cfg: &RunConfig,
    eps: &[f64],
    pool: &ThreadPool,
    stderr: &mut dyn Write,
) -> Result<Outcome, CliError> {
    let out = cfg.out.as_deref().ok_or_else(|| CliError::Config {
        field: "out".into(),
        reason: "simulate writes a profile and an L2 history; an output path is required".into(),
    })?;
    let runs = par_rows(pool, eps, |e| simulate_one(sp, cfg, e))?;
    let mut outcome = Outcome::Completed;
    for ((profile_path, history_path), (&e, run)) in simulate_paths(out, eps.len())
        .into_iter()
        .zip(eps.iter().zip(runs))
    {
        for (path, table) in [(&profile_path, &run.profile), (&history_path, &run.history)] {
            write_atomic(path, &table.render()).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
        }
        let r = &run.result;
        let _ = writeln!(
            stderr,
            "eps={} steps={}/{} growth={} blew_up={}",
            format_num(e),
            r.steps_taken,
            r.steps_planned,
            format_num(r.growth),
            r.blew_up
        );
        if r.blew_up {
            outcome = Outcome::BlowUp;
        }
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_grid_includes_endpoints() {
        let t = theta_grid(5);
        assert_eq!(t[0], 0.0);
        assert_eq!(t[4], std::f64::consts::PI);
    }

    #[test]
    fn path_naming() {
        let one = simulate_paths(Path::new("/tmp/run.csv"), 1);
        assert_eq!(one[0].0, PathBuf::from("/tmp/run.csv"));
        assert_eq!(one[0].1, PathBuf::from("/tmp/run.l2.csv"));
        let many = simulate_paths(Path::new("out/run.csv"), 2);
        assert_eq!(many[1].0, PathBuf::from("out/run-eps-2.csv"));
        assert_eq!(many[1].1, PathBuf::from("out/run-eps-2.l2.csv"));
    }
}
