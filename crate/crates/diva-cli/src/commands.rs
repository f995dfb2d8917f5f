//! Subcommand implementations.

use crate::config::{parse_list, pick, FileConfig};
use crate::output::{cell, header, info, write_file, VERSION};
use crate::CommonArgs;
use diva_core::functionals::FunctionalSpec;
use diva_core::models::{build_hubbard, parse_fcidump, LatticeSpec};
use diva_core::oracle::fci_ground_state;
use diva_core::rdm::{
    frobenius_distance, idempotent_decompose, read_snapshot, RdmError, Spin, TOL_INTEGER,
};
use diva_core::soft::{soft_diva_run, vxc_extract, SoftConfig};
use diva_core::solver::{diva_run, DivaConfig, DivaMode, DivaOutcome};
use rayon::prelude::*;
use serde_json::json;
use std::fmt::Write as _;
use std::path::PathBuf;

const EXIT_OK: i32 = 0;
const EXIT_FLAGS: i32 = 2;
const EXIT_NOT_CONVERGED: i32 = 3;
const EXIT_NOT_REPRESENTABLE: i32 = 4;

struct Ctx {
    file: FileConfig,
    output_dir: PathBuf,
    format: String,
    seed: u64,
    diva: DivaConfig,
    fd_step: Option<f64>,
}

fn build_ctx(common: &CommonArgs) -> Result<Ctx, String> {
    let file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let output_dir = pick(
        &common.output_dir,
        &file,
        "output-dir",
        PathBuf::from("diva-out"),
    )?;
    let format = pick(&common.format, &file, "format", "csv".to_string())?;
    let seed = pick(&common.seed, &file, "seed", 0u64)?;
    let jobs = pick(&common.jobs, &file, "jobs", 0usize)?;
    if jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let diva = DivaConfig {
        energy_tol: pick(&common.energy_tol, &file, "energy-tol", 1e-8)?,
        rdm_tol: pick(&common.rdm_tol, &file, "rdm-tol", 1e-5)?,
        max_iters: pick(&common.max_iters, &file, "max-iters", 500)?,
        ..DivaConfig::default()
    };
    let fd_step = match common.fd_step {
        Some(v) => Some(v),
        None => file.get::<f64>("fd-step")?,
    };
    Ok(Ctx {
        file,
        output_dir,
        format,
        seed,
        diva,
        fd_step,
    })
}

fn functional_spec(name: &str, fd_step: Option<f64>) -> Result<FunctionalSpec, String> {
    let mut spec = match name {
        "mueller" => FunctionalSpec::mueller(),
        "tp" => FunctionalSpec::tows_pastor(),
        "hf" => FunctionalSpec::hartree_fock(),
        other => return Err(format!("unknown functional `{other}`")),
    };
    if let Some(h) = fd_step {
        spec.fd_step = h;
    }
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

fn mode_of(name: &str) -> Result<DivaMode, String> {
    match name {
        "mono" => Ok(DivaMode::Mono),
        "multi" => Ok(DivaMode::Multi),
        other => Err(format!("unknown mode `{other}`")),
    }
}

fn tolerances_line(cfg: &DivaConfig, spec: &FunctionalSpec) -> String {
    format!(
        "energy_tol={:.3e} rdm_tol={:.3e} bracket_tol={:.3e} fd_step={:.3e} max_iters={}",
        cfg.energy_tol, cfg.rdm_tol, cfg.bracket_tol, spec.fd_step, cfg.max_iters
    )
}

#[allow(clippy::too_many_arguments)]
pub fn hubbard_scan(
    common: CommonArgs,
    sites: Option<usize>,
    t: Option<f64>,
    u_list: Option<String>,
    fillings: Option<String>,
    open: bool,
    functional: Option<String>,
    mode: Option<String>,
) -> i32 {
    let run = || -> Result<i32, String> {
        let ctx = build_ctx(&common)?;
        let sites = pick(&sites, &ctx.file, "sites", 50usize)?;
        let t = pick(&t, &ctx.file, "t", 1.0f64)?;
        let u_list = parse_list(&pick(&u_list, &ctx.file, "u-list", "1,4,8".into())?)?;
        let fillings = parse_list(&pick(
            &fillings,
            &ctx.file,
            "fillings",
            "0.2,0.6,1.0,1.4,1.8".into(),
        )?)?;
        let functional = pick(&functional, &ctx.file, "functional", "tp".into())?;
        let fspec = functional_spec(&functional, ctx.fd_step)?;
        let mode = mode_of(&pick(&mode, &ctx.file, "mode", "mono".into())?)?;
        let cfg = DivaConfig { mode, ..ctx.diva };
        let flags = format!(
            "--sites {sites} --t {t} --u-list {} --fillings {} --functional {functional} --mode {mode:?}{}",
            u_list.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            fillings.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            if open { " --open" } else { "" }
        );

        let mut all_converged = true;
        for &u in &u_list {
            info(&format!("hubbard scan U = {u}"));
            let rows: Vec<Result<(f64, f64, usize, bool, Option<f64>), String>> = fillings
                .par_iter()
                .map(|&n| {
                    let spec = LatticeSpec {
                        n_sites: sites,
                        hopping: t,
                        coulomb: u,
                        periodic: !open,
                        filling: n,
                    };
                    let model = build_hubbard(&spec).map_err(|e| e.to_string())?;
                    let out = diva_run(&model, &fspec, &cfg, None).map_err(|e| e.to_string())?;
                    let oracle_col = fci_ground_state(&model)
                        .ok()
                        .map(|f| f.energy / sites as f64);
                    Ok((
                        n,
                        out.report.total / sites as f64,
                        out.iterations,
                        out.converged(),
                        oracle_col,
                    ))
                })
                .collect();

            let mut body = String::new();
            let mut json_rows = Vec::new();
            for row in rows {
                let (n, e, iters, converged, oracle_col) = row?;
                all_converged &= converged;
                if ctx.format == "csv" {
                    let _ = writeln!(
                        body,
                        "{},{},{},{},{}",
                        cell(n),
                        cell(e),
                        iters,
                        converged,
                        oracle_col.map(cell).unwrap_or_default()
                    );
                } else {
                    json_rows.push(json!({
                        "filling": n,
                        "e_per_site": e,
                        "iterations": iters,
                        "converged": converged,
                        "e_fci_per_site": oracle_col,
                    }));
                }
            }
            let head = header("hubbard-scan", &flags, &tolerances_line(&cfg, &fspec), ctx.seed);
            let name_tag = format!("{u}").replace('.', "p");
            if ctx.format == "csv" {
                let content = format!(
                    "{head}# u: {u}\nfilling,e_per_site,iterations,converged,e_fci_per_site\n{body}"
                );
                let path = write_file(&ctx.output_dir, &format!("hubbard_scan_u{name_tag}.csv"), &content)
                    .map_err(|e| e.to_string())?;
                info(&format!("wrote {}", path.display()));
            } else {
                let doc = json!({
                    "schema": format!("diva/{VERSION}"),
                    "command": "hubbard-scan",
                    "flags": flags,
                    "seed": ctx.seed,
                    "u": u,
                    "rows": json_rows,
                });
                let path = write_file(
                    &ctx.output_dir,
                    &format!("hubbard_scan_u{name_tag}.json"),
                    &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()),
                )
                .map_err(|e| e.to_string())?;
                info(&format!("wrote {}", path.display()));
            }
        }
        Ok(if all_converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
    };
    run().unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_FLAGS
    })
}

pub fn momentum(
    common: CommonArgs,
    sites: Option<usize>,
    t: Option<f64>,
    u_list: Option<String>,
    filling: Option<f64>,
    functional: Option<String>,
    mode: Option<String>,
) -> i32 {
    let run = || -> Result<i32, String> {
        let ctx = build_ctx(&common)?;
        let sites = pick(&sites, &ctx.file, "sites", 50usize)?;
        let t = pick(&t, &ctx.file, "t", 1.0f64)?;
        let u_list = parse_list(&pick(&u_list, &ctx.file, "u-list", "1,4,8".into())?)?;
        let filling = pick(&filling, &ctx.file, "filling", 1.0f64)?;
        let functional = pick(&functional, &ctx.file, "functional", "tp".into())?;
        let fspec = functional_spec(&functional, ctx.fd_step)?;
        let mode = mode_of(&pick(&mode, &ctx.file, "mode", "mono".into())?)?;
        let cfg = DivaConfig { mode, ..ctx.diva };
        let flags = format!(
            "--sites {sites} --t {t} --u-list {} --filling {filling} --functional {functional} --mode {mode:?}",
            u_list.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        );

        let mut all_converged = true;
        for &u in &u_list {
            let spec = LatticeSpec {
                n_sites: sites,
                hopping: t,
                coulomb: u,
                periodic: true,
                filling,
            };
            let model = build_hubbard(&spec).map_err(|e| e.to_string())?;
            let out = diva_run(&model, &fspec, &cfg, None).map_err(|e| e.to_string())?;
            all_converged &= out.converged();
            let etas = diva_core::models::bloch_occupations(&out.gamma, &spec)
                .map_err(|e| e.to_string())?;
            let total: f64 = etas.iter().map(|(_, e)| e).sum();
            info(&format!(
                "U = {u}: sum eta(k) = {total:.6} (electrons per spin {})",
                spec.electrons_per_spin().unwrap_or(0)
            ));
            let head = header("momentum", &flags, &tolerances_line(&cfg, &fspec), ctx.seed);
            let name_tag = format!("{u}").replace('.', "p");
            let mut body = String::new();
            for (k, e) in &etas {
                let _ = writeln!(body, "{},{}", cell(*k), cell(*e));
            }
            let content = format!("{head}# u: {u}\n# converged: {}\nk,eta\n{body}", out.converged());
            let path = write_file(&ctx.output_dir, &format!("momentum_u{name_tag}.csv"), &content)
                .map_err(|e| e.to_string())?;
            info(&format!("wrote {}", path.display()));
        }
        Ok(if all_converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
    };
    run().unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_FLAGS
    })
}

#[allow(clippy::too_many_arguments)]
pub fn vxc(
    common: CommonArgs,
    sites: Option<usize>,
    t: Option<f64>,
    u_list: Option<String>,
    fillings: Option<String>,
    functional: Option<String>,
    mixing: Option<f64>,
    max_outer: Option<usize>,
) -> i32 {
    let run = || -> Result<i32, String> {
        let ctx = build_ctx(&common)?;
        let sites = pick(&sites, &ctx.file, "sites", 100usize)?;
        let t = pick(&t, &ctx.file, "t", 1.0f64)?;
        let u_list = parse_list(&pick(&u_list, &ctx.file, "u-list", "4,8".into())?)?;
        let fillings = parse_list(&pick(
            &fillings,
            &ctx.file,
            "fillings",
            "0.1,0.3,0.5,0.7,0.9,0.98,1.02".into(),
        )?)?;
        let functional = pick(&functional, &ctx.file, "functional", "tp".into())?;
        // the potential update differentiates across the half-filling kink;
        // the wider default step keeps its noise under the outer threshold
        let fspec = functional_spec(&functional, ctx.fd_step.or(Some(1e-3)))?;
        let soft_cfg = SoftConfig {
            diva: ctx.diva,
            max_outer: pick(&max_outer, &ctx.file, "max-outer", 50usize)?,
            mixing: pick(&mixing, &ctx.file, "mixing", 1.0f64)?,
            diagonal_side: None, // set per filling inside vxc_extract
        };
        let flags = format!(
            "--sites {sites} --t {t} --u-list {} --fillings {} --functional {functional}",
            u_list.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            fillings.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        );

        let mut all_converged = true;
        for &u in &u_list {
            info(&format!("vxc extraction U = {u}"));
            let base = LatticeSpec {
                n_sites: sites,
                hopping: t,
                coulomb: u,
                periodic: true,
                filling: 1.0,
            };
            let table = vxc_extract(&fspec, &base, &fillings, &soft_cfg);
            // gauge: shift the whole table so v_xc vanishes at the smallest
            // converged filling
            let shift = table
                .rows
                .iter()
                .position(|r| r.converged)
                .map(|i| table.mean_vxc(i))
                .unwrap_or(0.0);
            let head = header("vxc", &flags, &tolerances_line(&ctx.diva, &fspec), ctx.seed);
            let mut body = String::new();
            for row in &table.rows {
                all_converged &= row.converged;
                for (site, v) in row.v_xc.iter().enumerate() {
                    let _ = writeln!(
                        body,
                        "{},{},{},{},{}",
                        cell(row.filling),
                        site,
                        cell(v - shift),
                        row.converged,
                        row.outer_iterations
                    );
                }
            }
            let name_tag = format!("{u}").replace('.', "p");
            let content = format!(
                "{head}# u: {u}\n# functional: {}\n# hartree_convention: {}\n# gauge: v_xc({}) = 0\nfilling,site,v_xc,converged,outer_iterations\n{body}",
                table.functional,
                table.hartree_convention,
                table.rows.first().map(|r| r.filling).unwrap_or(0.0),
            );
            let path = write_file(&ctx.output_dir, &format!("vxc_u{name_tag}.csv"), &content)
                .map_err(|e| e.to_string())?;
            info(&format!("wrote {}", path.display()));
        }
        Ok(if all_converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
    };
    run().unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_FLAGS
    })
}

pub fn molecule(
    common: CommonArgs,
    fcidump: PathBuf,
    algorithm: Option<String>,
    functional: Option<String>,
    no_oracle: bool,
) -> i32 {
    let run = || -> Result<i32, String> {
        let ctx = build_ctx(&common)?;
        let algorithm = pick(&algorithm, &ctx.file, "algorithm", "multi".into())?;
        let functional = pick(&functional, &ctx.file, "functional", "mueller".into())?;
        let fspec = functional_spec(&functional, ctx.fd_step)?;

        let mut inputs: Vec<PathBuf> = if fcidump.is_dir() {
            let mut v: Vec<PathBuf> = std::fs::read_dir(&fcidump)
                .map_err(|e| format!("cannot read {}: {e}", fcidump.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.extension()
                        .map(|x| x == "fcidump" || x == "FCIDUMP")
                        .unwrap_or(false)
                })
                .collect();
            v.sort();
            v
        } else {
            vec![fcidump.clone()]
        };
        if inputs.is_empty() {
            return Err(format!("no *.fcidump files under {}", fcidump.display()));
        }
        inputs.sort();

        let flags = format!(
            "--fcidump {} --algorithm {algorithm} --functional {functional}",
            fcidump.display()
        );
        let mut worst = EXIT_OK;
        let results: Vec<Result<(PathBuf, serde_json::Value, bool), String>> = inputs
            .par_iter()
            .map(|path| {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
                let model = parse_fcidump(&text).map_err(|e| e.to_string())?;
                let n = model.n_spatial;
                let (outcome, soft_state): (DivaOutcome, Option<serde_json::Value>) =
                    match algorithm.as_str() {
                        "mono" => (
                            diva_run(&model, &fspec, &ctx.diva, None).map_err(|e| e.to_string())?,
                            None,
                        ),
                        "multi" => (
                            diva_run(
                                &model,
                                &fspec,
                                &DivaConfig {
                                    mode: DivaMode::Multi,
                                    ..ctx.diva
                                },
                                None,
                            )
                            .map_err(|e| e.to_string())?,
                            None,
                        ),
                        "soft" => {
                            let soft_cfg = SoftConfig {
                                diva: DivaConfig {
                                    mode: DivaMode::Multi,
                                    ..ctx.diva
                                },
                                ..SoftConfig::default()
                            };
                            let out = soft_diva_run(&model, &fspec, &soft_cfg, &vec![0.0; n])
                                .map_err(|e| e.to_string())?;
                            let state = json!({
                                "v_hxc": out.state.v_hxc,
                                "mu_pks": out.state.mu_pks,
                                "n_pks": out.state.n_pks,
                                "outer_iterations": out.state.iteration,
                            });
                            (
                                DivaOutcome {
                                    gamma: out.gamma,
                                    report: out.report,
                                    trace: out.inner_trace,
                                    termination: out.termination,
                                    iterations: out.state.iteration,
                                    degenerate_start: false,
                                },
                                Some(state),
                            )
                        }
                        other => return Err(format!("unknown algorithm `{other}`")),
                    };
                let oracle_block = if no_oracle {
                    None
                } else {
                    fci_ground_state(&model).ok().map(|f| {
                        json!({
                            "energy": f.energy,
                            "dimension": f.dimension,
                            "rdm_distance": frobenius_distance(&f.one_rdm, &outcome.gamma).ok(),
                        })
                    })
                };
                let doc = json!({
                    "schema": format!("diva/{VERSION}"),
                    "command": "molecule",
                    "flags": flags,
                    "seed": ctx.seed,
                    "input": path.display().to_string(),
                    "algorithm": algorithm,
                    "functional": functional,
                    "energy": outcome.report.total,
                    "one_body": outcome.report.one_body,
                    "interaction": outcome.report.interaction,
                    "mu": outcome.report.mu,
                    "converged": outcome.converged(),
                    "iterations": outcome.iterations,
                    "no_occupations": [
                        outcome.gamma.spectral(Spin::Up).occupations,
                        outcome.gamma.spectral(Spin::Down).occupations,
                    ],
                    "site_occupations": diva_core::rdm::site_occupations(&outcome.gamma),
                    "soft_state": soft_state,
                    "fci": oracle_block,
                    "trace": outcome.trace,
                });
                Ok((path.clone(), doc, outcome.converged()))
            })
            .collect();

        for result in results {
            let (path, doc, converged) = result?;
            if !converged {
                worst = EXIT_NOT_CONVERGED;
            }
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "input".into());
            let out = write_file(
                &ctx.output_dir,
                &format!("molecule_{stem}_{algorithm}.json"),
                &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()),
            )
            .map_err(|e| e.to_string())?;
            info(&format!("wrote {}", out.display()));
        }
        Ok(worst)
    };
    run().unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_FLAGS
    })
}

pub fn decompose(common: CommonArgs, input: PathBuf, tol_integer: Option<f64>) -> i32 {
    let run = || -> Result<i32, String> {
        let ctx = build_ctx(&common)?;
        let tol = pick(&tol_integer, &ctx.file, "tol-integer", TOL_INTEGER)?;
        let file = std::fs::File::open(&input)
            .map_err(|e| format!("cannot open {}: {e}", input.display()))?;
        let gamma = read_snapshot(&mut std::io::BufReader::new(file)).map_err(|e| e.to_string())?;
        match idempotent_decompose(&gamma, tol) {
            Ok(decomp) => {
                let rec = decomp.reconstruct().map_err(|e| e.to_string())?;
                let err = frobenius_distance(&rec, &gamma).map_err(|e| e.to_string())?;
                println!("members: {}", decomp.len());
                println!("reconstruction_error: {err:.3e}");
                println!("weights:");
                for (i, (w, m)) in decomp.weights.iter().zip(&decomp.members).enumerate() {
                    println!(
                        "  {:3}  z = {:.12}  trace = ({:.3}, {:.3})",
                        i,
                        w,
                        m.trace(Spin::Up),
                        m.trace(Spin::Down)
                    );
                }
                Ok(EXIT_OK)
            }
            Err(RdmError::NotRepresentable { pseudo_distance }) => {
                eprintln!("input is not ensemble representable (pseudo-distance {pseudo_distance:.3e})");
                Ok(EXIT_NOT_REPRESENTABLE)
            }
            Err(e) => Err(e.to_string()),
        }
    };
    run().unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_FLAGS
    })
}
