use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use manifold_boundary::chisq::DegreesOfFreedom;
use manifold_boundary::hypothesis::mu_max;
use manifold_boundary::{
    generate, run_test, select_k, KSelectionTrace, ManifoldSpec, PointCloud, Rule, TestConfig,
};

use crate::args::{
    Cli, Command, ExperimentArgs, FlagArgs, GenerateArgs, KArgs, RuleName, SelectArgs, TestArgs,
};
use crate::error::CliError;
use crate::experiment::{run_experiment, ExperimentPlan, KPolicy};
use crate::io::{emit_json, format_coord, read_points_file, write_json_file, write_points_file};
use crate::report::{GenerateSidecar, SelectionReport, TestReport, SCHEMA_VERSION};

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Test(a) => cmd_test(&a),
        Command::SelectK(a) => cmd_select_k(&a),
        Command::Experiment(a) => cmd_experiment(&a),
        Command::FlagBoundary(a) => cmd_flag_boundary(&a),
    }
}

/// `points.csv` -> `points.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let p = out.with_extension("json");
    if p == out {
        out.with_extension("sidecar.json")
    } else {
        p
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<(), CliError> {
    let kind = a.shape.kind(&a.kind)?;
    let spec = ManifoldSpec::new(kind, a.n, a.seed);
    let (cloud, ground_truth) = generate(&spec)?;
    write_points_file(&a.out, &cloud)?;
    let sidecar = GenerateSidecar {
        schema: SCHEMA_VERSION,
        spec,
        seed: a.seed,
        ground_truth,
    };
    let side = sidecar_path(&a.out);
    write_json_file(&side, &sidecar)?;
    eprintln!(
        "wrote {} points of {} to {} (sidecar {})",
        cloud.len(),
        kind.label(),
        a.out.display(),
        side.display()
    );
    Ok(())
}

fn dof(dprime: usize) -> Result<DegreesOfFreedom, CliError> {
    Ok(DegreesOfFreedom::new(
        u32::try_from(dprime).unwrap_or(u32::MAX),
    )?)
}

fn rule(name: RuleName, lambda: f64, mu: Option<f64>, dprimes: &[usize]) -> Result<Rule, CliError> {
    Ok(match name {
        RuleName::Threshold => Rule::Threshold,
        RuleName::Consistent => {
            let mu = match mu {
                Some(m) => m,
                None => {
                    let mut m = f64::INFINITY;
                    for &d in dprimes {
                        m = m.min(mu_max(dof(d)?));
                    }
                    m
                }
            };
            Rule::Consistent { lambda, mu }
        }
    })
}

fn resolve_k(cloud: &PointCloud, k: &KArgs) -> Result<(usize, Option<KSelectionTrace>), CliError> {
    if k.auto_k {
        let trace = select_k(cloud, k.grid.as_deref())?;
        for (kk, why) in &trace.failures {
            eprintln!("k = {kk} skipped: {why}");
        }
        Ok((trace.chosen_k, Some(trace)))
    } else {
        let kk =
            k.k.ok_or_else(|| CliError::input("either --k or --auto-k is required"))?;
        Ok((kk, None))
    }
}

pub fn cmd_test(a: &TestArgs) -> Result<(), CliError> {
    let cloud = read_points_file(&a.input, a.dprime)?;
    let (k, selection) = resolve_k(&cloud, &a.k)?;
    let config = TestConfig {
        rule: rule(a.rule, a.lambda, a.mu, &[a.dprime])?,
        flag_level: a.flag_level,
        ..TestConfig::threshold(a.alpha, k)
    };
    let outcome = run_test(&cloud, &config)?;
    for s in outcome
        .statistic
        .summaries
        .iter()
        .filter(|s| s.degenerate_spectrum)
    {
        eprintln!(
            "warning: point {} has a degenerate local spectrum; d' may be wrong",
            s.point_index
        );
    }
    eprintln!(
        "n = {}, k = {k}, Delta = {:.6}, threshold = {:.6}, p-value bound = {:.4e}, reject = {}",
        cloud.len(),
        outcome.statistic.big_delta,
        outcome.threshold,
        outcome.p_value_bound,
        outcome.reject
    );
    let report = TestReport::new(&cloud, &config, &outcome, selection);
    emit_json(a.out.as_deref(), &report)
}

pub fn cmd_select_k(a: &SelectArgs) -> Result<(), CliError> {
    let cloud = read_points_file(&a.input, a.dprime)?;
    let trace = select_k(&cloud, a.grid.as_deref())?;
    for c in &trace.candidates {
        eprintln!(
            "k = {:>4}  d_chi2 = {:.6}  p-value bound = {:.4e}  scored = {}",
            c.k, c.d_chi2, c.p_value_bound, c.scored_points
        );
    }
    for (k, why) in &trace.failures {
        eprintln!("k = {k:>4}  failed: {why}");
    }
    eprintln!("chosen k = {}", trace.chosen_k);
    let report = SelectionReport {
        schema: SCHEMA_VERSION,
        n: cloud.len(),
        dprime: cloud.intrinsic_dim(),
        trace,
    };
    emit_json(a.out.as_deref(), &report)
}

pub fn experiment_plan(a: &ExperimentArgs) -> Result<ExperimentPlan, CliError> {
    let kinds = a
        .kind
        .iter()
        .map(|name| a.shape.kind(name))
        .collect::<Result<Vec<_>, _>>()?;
    let dprimes: Vec<usize> = kinds.iter().map(|k| k.intrinsic_dim()).collect();
    let k_policy = if a.auto_k {
        KPolicy::Auto {
            calibration: a.calibration,
        }
    } else {
        KPolicy::Fixed(a.k.clone().unwrap_or_default())
    };
    let plan = ExperimentPlan {
        kinds,
        sample_sizes: a.n.clone(),
        k_policy,
        replications: a.replications,
        alpha: a.alpha,
        rule: rule(a.rule, a.lambda, a.mu, &dprimes)?,
        base_seed: a.seed,
    };
    plan.validate()?;
    Ok(plan)
}

pub fn cmd_experiment(a: &ExperimentArgs) -> Result<(), CliError> {
    let plan = experiment_plan(a)?;
    let report = run_experiment(&plan, a.jobs)?;
    for c in &report.cells {
        let k = c.k.map(|k| k.to_string()).unwrap_or_else(|| "NA".into());
        eprintln!(
            "{} n = {} k = {k}: {}/{} rejected, {} completed, {:.2} s{}",
            c.kind,
            c.n,
            c.rejections,
            c.replications,
            c.completed,
            c.wall_time_secs,
            c.error
                .as_deref()
                .map(|e| format!(" ({e})"))
                .unwrap_or_default()
        );
    }
    if let Some(path) = &a.table {
        std::fs::write(path, report.table_csv(&plan)).map_err(|e| CliError::io(path, e))?;
    }
    emit_json(a.out.as_deref(), &report)
}

pub fn cmd_flag_boundary(a: &FlagArgs) -> Result<(), CliError> {
    let cloud = read_points_file(&a.input, a.dprime)?;
    let (k, _) = resolve_k(&cloud, &a.k)?;
    let config = TestConfig {
        flag_level: a.flag_level,
        ..TestConfig::threshold(0.05, k)
    };
    let outcome = run_test(&cloud, &config)?;
    let flagged = &outcome.boundary_points;
    eprintln!(
        "k = {k}: {} of {} points flagged",
        flagged.len(),
        cloud.len()
    );

    let mut idx = String::from("index\n");
    for i in flagged {
        idx.push_str(&i.to_string());
        idx.push('\n');
    }
    match &a.out {
        Some(p) => std::fs::write(p, idx).map_err(|e| CliError::io(p, e))?,
        None => print!("{idx}"),
    }

    if let Some(path) = &a.plot {
        let mut mark = vec![false; cloud.len()];
        for &i in flagged {
            mark[i] = true;
        }
        let f = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut w = BufWriter::new(f);
        let mut line = String::new();
        for j in 1..=cloud.ambient_dim() {
            line.push_str(&format!("x{j},"));
        }
        line.push_str("delta,flagged\n");
        for (i, s) in outcome.statistic.summaries.iter().enumerate() {
            for &x in cloud.point(i) {
                line.push_str(&format_coord(x));
                line.push(',');
            }
            line.push_str(&format_coord(s.delta));
            line.push_str(if mark[i] { ",1\n" } else { ",0\n" });
        }
        w.write_all(line.as_bytes())
            .map_err(|e| CliError::io(path, e))?;
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}
