//! Experiment drivers: seeded deterministic runs producing the CSV and JSON
//! artifacts for each experiment family.

use std::path::PathBuf;
use std::time::Instant;

use serde_json::{json, Value};

use gapsim::coefficients::{splitting_decay_scan, clustering_estimate};
use gapsim::exec::run_tasks;
use gapsim::gaussian::{build_spectrum, PathSampler, NEG_EIG_TOL};
use gapsim::kernels::Kernel;
use gapsim::pointprocess::{
    atoms_from_gaps, factorial_moment_test, gumbel_uniform_tests, scaling_law_check,
    simulate_window_runs, WindowRun,
};
use gapsim::rng::stage;
use gapsim::scaling::{
    build_table, estimate_g_curve_batches, estimate_lambda_curve_batches, fit_theta_asymptotics,
    ScalingTable, ThetaFit, N_BATCHES,
};
use gapsim::zeros::find_zeros;
use gapsim::{Error, Result};

use crate::config::{as_map, render, Config, Experiment};
use crate::output::{ci_json, fmt_f64, write_json, CsvWriter};

pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

/// Execute the configured experiment and write its artifacts plus a
/// run manifest. Fixed seeds give byte-identical CSVs for any worker count.
pub fn run(config: &Config) -> Result<RunArtifacts> {
    let started = Instant::now();
    std::fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::Param(format!("cannot create out dir {}: {e}", config.out_dir.display())))?;
    let kernel = Kernel::parse(&config.kernel_spec)?;
    let mut artifacts = match config.experiment {
        Experiment::Rice => run_rice(config, &kernel)?,
        Experiment::Scaling => run_scaling(config, &kernel)?,
        Experiment::Poisson => run_poisson(config, &kernel)?,
        Experiment::Splitting => run_splitting(config, &kernel)?,
        Experiment::Clustering => run_clustering(config, &kernel)?,
    };

    let resolved = config.out_dir.join("config.resolved");
    crate::output::write_atomic(&resolved, render(config).as_bytes())?;
    artifacts.files.push(resolved);

    let manifest = json!({
        "config": as_map(config),
        "git_describe": git_describe(),
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": started.elapsed().as_secs_f64(),
        "streams": {
            "scheme": "chacha8(master_seed, stage, task); tasks fixed by config, not workers",
            "master_seed": config.seed,
        },
        "summary": artifacts.summary.clone(),
    });
    let manifest_path = config.out_dir.join("manifest.json");
    write_json(&manifest_path, &manifest)?;
    artifacts.files.push(manifest_path);
    Ok(artifacts)
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}

fn run_rice(config: &Config, kernel: &Kernel) -> Result<RunArtifacts> {
    let spacing = kernel.default_spacing(config.grid_factor);
    let n_grid = (config.path_units / spacing).ceil() as usize + 1;
    let units = (n_grid - 1) as f64 * spacing;
    let spec = std::sync::Arc::new(build_spectrum(kernel, n_grid, spacing, NEG_EIG_TOL)?);
    let refine_tol = spacing * 1e-6;
    let seed = config.seed;
    let counts: Vec<u64> = run_tasks(config.workers, config.n_paths, |t| {
        let mut sampler = PathSampler::new(spec.clone(), 0.0, seed, stage::RICE, t);
        let path = sampler.sample();
        find_zeros(&path, refine_tol).expect("valid tol").zeros.len() as u64
    });

    let mut csv = CsvWriter::create(config.out_dir.join("rice.csv"), &["path_id", "units", "zeros"]);
    for (t, &c) in counts.iter().enumerate() {
        csv.row(&[t.to_string(), fmt_f64(units), c.to_string()]);
    }
    let csv_path = csv.finish()?;

    let total_zeros: u64 = counts.iter().sum();
    let total_units = units * config.n_paths as f64;
    let rates: Vec<f64> = counts.iter().map(|&c| c as f64 / units).collect();
    let est = gapsim::stats::batch_means(&batch_collapse(&rates, N_BATCHES))?;
    let summary = json!({
        "kernel": kernel.name(),
        "n_paths": config.n_paths,
        "units_per_path": units,
        "zeros_total": total_zeros,
        "intensity_hat": total_zeros as f64 / total_units,
        "intensity_ci": ci_json(&est),
        "rice_intensity": kernel.rice_intensity(),
    });
    let sum_path = config.out_dir.join("rice_summary.json");
    write_json(&sum_path, &summary)?;
    Ok(RunArtifacts { out_dir: config.out_dir.clone(), files: vec![csv_path, sum_path], summary })
}

/// Collapse per-unit values into `n_batches` interleaved batch means.
fn batch_collapse(values: &[f64], n_batches: usize) -> Vec<f64> {
    let b = n_batches.min(values.len()).max(1);
    (0..b)
        .map(|i| {
            let vals: Vec<f64> = values.iter().copied().skip(i).step_by(b).collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect()
}

fn default_r_max(kernel: &Kernel) -> f64 {
    10.0 / kernel.rice_intensity()
}

struct TableSet {
    full: ScalingTable,
    half_a: ScalingTable,
    half_b: ScalingTable,
    fit: ThetaFit,
    fit_a: ThetaFit,
    fit_b: ThetaFit,
}

fn estimate_tables(
    config: &Config,
    kernel: &Kernel,
    r_max: f64,
    g_paths: u64,
    lambda_draws: u64,
) -> Result<TableSet> {
    let g = estimate_g_curve_batches(
        kernel, r_max, g_paths, config.seed, config.workers, config.grid_factor,
    )?;
    let l = estimate_lambda_curve_batches(
        kernel, r_max, lambda_draws, config.seed, config.workers, config.grid_factor,
    )?;
    let all: Vec<usize> = (0..N_BATCHES).collect();
    let evens: Vec<usize> = (0..N_BATCHES).step_by(2).collect();
    let odds: Vec<usize> = (1..N_BATCHES).step_by(2).collect();
    let full = build_table(&g.curve(&all)?, &l.curve(&all)?)?;
    let half_a = build_table(&g.curve(&evens)?, &l.curve(&evens)?)?;
    let half_b = build_table(&g.curve(&odds)?, &l.curve(&odds)?)?;
    let fit = fit_theta_asymptotics(&full, kernel)?;
    let fit_a = fit_theta_asymptotics(&half_a, kernel)?;
    let fit_b = fit_theta_asymptotics(&half_b, kernel)?;
    Ok(TableSet { full, half_a, half_b, fit, fit_a, fit_b })
}

fn table_csv(path: PathBuf, table: &ScalingTable) -> Result<PathBuf> {
    let mut csv = CsvWriter::create(
        path,
        &["r", "G_hat", "G_lo", "G_hi", "lambda_hat", "lambda_lo", "lambda_hi", "theta_hat"],
    );
    for j in 0..table.r_grid.len() {
        let theta = if j < table.reliable_len { table.theta[j] } else { f64::NAN };
        csv.row(&[
            fmt_f64(table.r_grid[j]),
            fmt_f64(table.gap[j].value),
            fmt_f64(table.gap[j].lo),
            fmt_f64(table.gap[j].hi),
            fmt_f64(table.lambda[j].value),
            fmt_f64(table.lambda[j].lo),
            fmt_f64(table.lambda[j].hi),
            fmt_f64(theta),
        ]);
    }
    csv.finish()
}

fn fit_json(fit: &ThetaFit) -> Value {
    json!({
        "zeta_hat": fit.zeta_hat,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "residual_trend": fit.residual_trend,
        "n_points": fit.n_points,
        "anomalous_regressor": fit.anomalous,
    })
}

fn run_scaling(config: &Config, kernel: &Kernel) -> Result<RunArtifacts> {
    let r_max = config.r_max.unwrap_or_else(|| default_r_max(kernel));
    let tables = estimate_tables(config, kernel, r_max, config.n_paths, config.n_paths)?;
    let table = &tables.full;
    let csv_path = table_csv(config.out_dir.join("scaling.csv"), table)?;

    let last = table.last_fit_index();
    let theta_logg_ratio = table.theta[last] / (-table.gap[last].value.ln());
    let zeta_split_rel = (tables.fit_a.zeta_hat - tables.fit_b.zeta_hat).abs()
        / tables.fit.zeta_hat.abs().max(f64::MIN_POSITIVE);
    let summary = json!({
        "kernel": kernel.name(),
        "r_max": r_max,
        "n_paths": config.n_paths,
        "lambda0": ci_json(&table.lambda[0]),
        "rice_intensity": kernel.rice_intensity(),
        "reliable_r_max": table.r_range().1,
        "theta_range": { "lo": table.theta_range().0, "hi": table.theta_range().1 },
        "max_iso_shift_ci_units": table.max_iso_shift,
        "fit": fit_json(&tables.fit),
        "fit_split_a": fit_json(&tables.fit_a),
        "fit_split_b": fit_json(&tables.fit_b),
        "zeta_split_rel_diff": zeta_split_rel,
        "theta_over_neglog_g_at_r": { "r": table.r_grid[last], "ratio": theta_logg_ratio },
        "zeta_predicted": kernel.zeta_predicted()?.map(Value::from).unwrap_or(Value::Null),
    });
    let sum_path = config.out_dir.join("scaling_summary.json");
    write_json(&sum_path, &summary)?;
    Ok(RunArtifacts { out_dir: config.out_dir.clone(), files: vec![csv_path, sum_path], summary })
}

/// Pilot-fit extrapolation to choose a lambda-table depth covering
/// `log(max R) + 6` in theta, clamped to sane multiples of the mean gap.
fn auto_table_r_max(config: &Config, kernel: &Kernel, max_window: f64) -> Result<f64> {
    let pilot_r = default_r_max(kernel);
    let g = estimate_g_curve_batches(
        kernel, pilot_r, 20_000, config.seed ^ 0x9e3779b9, config.workers, config.grid_factor,
    )?;
    let l = estimate_lambda_curve_batches(
        kernel, pilot_r, 100_000, config.seed ^ 0x9e3779b9, config.workers, config.grid_factor,
    )?;
    let table = build_table(&g.full_curve()?, &l.full_curve()?)?;
    let target = max_window.ln() + 6.0;
    let fake_window = target.exp();
    let r = gapsim::scaling::predicted_largest_gap(&table, kernel, fake_window)?;
    Ok((1.2 * r).max(pilot_r))
}

fn run_poisson(config: &Config, kernel: &Kernel) -> Result<RunArtifacts> {
    let mut windows = config.windows.clone();
    windows.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max_window = *windows.last().unwrap();
    let r_max = match config.r_max {
        Some(r) => r,
        None => auto_table_r_max(config, kernel, max_window)?,
    };
    let tables = estimate_tables(
        config,
        kernel,
        r_max,
        (config.table_paths / 2).max(1_000),
        config.table_paths,
    )?;

    let mut files = Vec::new();
    files.push(table_csv(config.out_dir.join("scaling.csv"), &tables.full)?);

    let mut runs_csv = CsvWriter::create(
        config.out_dir.join("runs.csv"),
        &["run_id", "R", "L_R", "Z_R", "n_zeros", "seed"],
    );
    let mut zeros_csv = config.dump_zeros.then(|| {
        CsvWriter::create(
            config.out_dir.join("zeros.csv"),
            &["path_id", "z", "gap_to_next"],
        )
    });

    let mut window_summaries = Vec::new();
    let mut groups: Vec<(f64, Vec<gapsim::pointprocess::ExtremeSample>)> = Vec::new();
    for (w_idx, &window) in windows.iter().enumerate() {
        let runs = simulate_window_runs(
            kernel,
            &tables.full,
            window,
            config.n_runs,
            config.seed,
            (w_idx as u64) << 32,
            config.workers,
            config.grid_factor,
        )?;
        for run in &runs {
            runs_csv.row(&[
                run.run_id.to_string(),
                fmt_f64(window),
                fmt_f64(run.extreme.l_r),
                fmt_f64(run.extreme.z_r),
                run.n_zeros.to_string(),
                format!("{}:{}:{}", run.extreme.seed.master_seed, run.extreme.seed.stage, run.extreme.seed.task),
            ]);
            if let Some(csv) = zeros_csv.as_mut() {
                for &(z, gap) in &run.gaps {
                    csv.row(&[run.run_id.to_string(), fmt_f64(z), fmt_f64(gap)]);
                }
            }
        }
        window_summaries.push(window_battery(&runs, window, &tables)?);
        groups.push((window, runs.iter().map(|r| r.extreme).collect()));
    }
    files.push(runs_csv.finish()?);
    if let Some(csv) = zeros_csv {
        files.push(csv.finish()?);
    }

    let scaling_rows: Value = if groups.len() >= 2 {
        let rows = scaling_law_check(&groups, kernel, Some(tables.fit.zeta_hat))?;
        Value::from(
            rows.iter()
                .map(|r| {
                    json!({
                        "R": r.window,
                        "median_stat": r.median_stat,
                        "iqr": r.iqr,
                        "target": r.target,
                        "n_runs": r.n_runs,
                    })
                })
                .collect::<Vec<_>>(),
        )
    } else {
        Value::Null
    };

    let summary = json!({
        "kernel": kernel.name(),
        "n_runs": config.n_runs,
        "table_r_max": r_max,
        "table_paths": config.table_paths,
        "fit": fit_json(&tables.fit),
        "windows": window_summaries,
        "scaling_law": scaling_rows,
    });
    let sum_path = config.out_dir.join("poisson_summary.json");
    write_json(&sum_path, &summary)?;
    files.push(sum_path);
    Ok(RunArtifacts { out_dir: config.out_dir.clone(), files, summary })
}

/// The per-window statistical battery, reported under the full-sample theta
/// table and both split-sample tables.
fn window_battery(runs: &[WindowRun], window: f64, tables: &TableSet) -> Result<Value> {
    let n_runs = runs.len();
    let extremes: Vec<gapsim::pointprocess::ExtremeSample> =
        runs.iter().map(|r| r.extreme).collect();
    let zeros_total: u64 = runs.iter().map(|r| r.n_zeros).sum();

    let battery = |table: &ScalingTable, label: &str| -> Result<Value> {
        let atom_sets: Vec<_> = runs
            .iter()
            .map(|r| atoms_from_gaps(&r.gaps, window, table))
            .collect::<Result<Vec<_>>>()?;
        let sentinels: usize = atom_sets.iter().map(|a| a.sentinel_count).sum();
        // the moment and KS tests have minimum run counts; below them the
        // summary records null instead of aborting the whole run
        let mut moments = Vec::new();
        for a in [0.0, 1.0] {
            for k in [1u32, 2] {
                match factorial_moment_test(&atom_sets, k, (0.0, 1.0), (a, f64::INFINITY)) {
                    Ok(m) => moments.push(json!({
                        "k": k,
                        "a": a,
                        "m_hat": ci_json(&m.m_hat),
                        "poisson_target": m.poisson_target,
                    })),
                    Err(Error::InsufficientData { .. }) => moments.push(Value::Null),
                    Err(e) => return Err(e),
                }
            }
        }
        let ks_json = match gumbel_uniform_tests(&extremes, table) {
            Ok(ks) => json!({
                "ks_gumbel": { "d": ks.ks_gumbel_d, "p": ks.ks_gumbel_p },
                "ks_uniform": { "d": ks.ks_uniform_d, "p": ks.ks_uniform_p },
                "corr_location_size": ks.corr_location_size,
                "n_used": ks.n_used,
                "excluded_no_zeros": ks.excluded_no_zeros,
                "excluded_out_of_range": ks.excluded_out_of_range,
            }),
            Err(Error::InsufficientData { .. }) => Value::Null,
            Err(e) => return Err(e),
        };
        Ok(json!({
            "table": label,
            "sentinel_atoms": sentinels,
            "factorial_moments": moments,
            "extreme_value_tests": ks_json,
        }))
    };

    Ok(json!({
        "R": window,
        "n_runs": n_runs,
        "zeros_total": zeros_total,
        "zeros_per_unit": zeros_total as f64 / (window * n_runs as f64),
        "full": battery(&tables.full, "full")?,
        "split_a": battery(&tables.half_a, "split_a")?,
        "split_b": battery(&tables.half_b, "split_b")?,
    }))
}

fn run_splitting(config: &Config, kernel: &Kernel) -> Result<RunArtifacts> {
    let rows = splitting_decay_scan(
        kernel,
        config.split_r,
        &config.split_s,
        config.split_k,
        config.n_paths,
        config.seed,
        config.workers,
        config.grid_factor,
    )?;
    let mut csv = CsvWriter::create(
        config.out_dir.join("splitting.csv"),
        &["kernel", "k", "r", "s", "ratio", "ratio_lo", "ratio_hi", "Kbar_s"],
    );
    let mut rows_json = Vec::new();
    for row in &rows {
        csv.row(&[
            kernel.name(),
            config.split_k.to_string(),
            fmt_f64(config.split_r),
            fmt_f64(row.s),
            fmt_f64(row.estimate.ratio),
            fmt_f64(row.estimate.lo),
            fmt_f64(row.estimate.hi),
            fmt_f64(row.kbar),
        ]);
        let (dev, dev_lo, dev_hi) = row.estimate.abs_deviation();
        rows_json.push(json!({
            "s": row.s,
            "ratio": row.estimate.ratio,
            "ratio_lo": row.estimate.lo,
            "ratio_hi": row.estimate.hi,
            "abs_dev": dev,
            "abs_dev_lo": dev_lo,
            "abs_dev_hi": dev_hi,
            "kbar": row.kbar,
            "joint_count": row.estimate.joint_count,
        }));
    }
    let csv_path = csv.finish()?;
    let summary = json!({
        "kernel": kernel.name(),
        "k": config.split_k,
        "r": config.split_r,
        "n_paths": config.n_paths,
        "rows": rows_json,
    });
    let sum_path = config.out_dir.join("splitting_summary.json");
    write_json(&sum_path, &summary)?;
    Ok(RunArtifacts { out_dir: config.out_dir.clone(), files: vec![csv_path, sum_path], summary })
}

fn run_clustering(config: &Config, kernel: &Kernel) -> Result<RunArtifacts> {
    let mut csv = CsvWriter::create(
        config.out_dir.join("clustering.csv"),
        &["kernel", "r", "probe_id", "phi_hat", "lo", "hi", "G_hat_r", "kappa_hat"],
    );
    let mut reports = Vec::new();
    for &r in &config.cluster_r {
        let rep = clustering_estimate(
            kernel, r, config.n_paths, config.seed, config.workers, config.grid_factor,
        )?;
        for probe in &rep.probes {
            csv.row(&[
                kernel.name(),
                fmt_f64(r),
                probe.id.to_string(),
                fmt_f64(probe.joint.value),
                fmt_f64(probe.joint.lo),
                fmt_f64(probe.joint.hi),
                fmt_f64(rep.g_r.value),
                fmt_f64(rep.kappa.value),
            ]);
        }
        reports.push(json!({
            "r": r,
            "phi_hat": ci_json(&rep.phi_hat),
            "phi_probe": rep.phi_probe_id,
            "g_r": ci_json(&rep.g_r),
            "g_2r": ci_json(&rep.g_2r),
            "kappa": ci_json(&rep.kappa),
            "probes": rep.probes.iter().map(|p| json!({
                "id": p.id,
                "joint": ci_json(&p.joint),
            })).collect::<Vec<_>>(),
        }));
    }
    let csv_path = csv.finish()?;
    let summary = json!({
        "kernel": kernel.name(),
        "n_paths": config.n_paths,
        "reports": reports,
    });
    let sum_path = config.out_dir.join("clustering_summary.json");
    write_json(&sum_path, &summary)?;
    Ok(RunArtifacts { out_dir: config.out_dir.clone(), files: vec![csv_path, sum_path], summary })
}
