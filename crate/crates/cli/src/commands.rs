use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bstc::data::{gearys_c, load_adjacency, load_panel, morans_i, standardize, AdjacencyGraph, PanelData, PanelSchema};
use bstc::model_metrics::{one_step_ahead, waic, write_metrics_csv, MetricReport};
use bstc::partition::{
    minimize_binder, minimize_gvi, posterior_similarity_matrix, read_partition_csv, write_partition_csv,
    JointEntropyScale, Partition,
};
use bstc::sampler::{run_chains, ChainConfig, ChainOutput};
use bstc::simulate::{simulate_dataset, write_simulation, SimulationSpec};
use bstc::BstcError;

use crate::args::{Cli, Command, ExploreArgs, FitArgs, GviScale, Loss, MetricsArgs, SamplerArgs, SimulateArgs, SummarizeArgs};
use crate::manifest::RunManifest;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<BstcError> for CliError {
    fn from(e: BstcError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(cli: Cli, argv: &[String]) -> Result<()> {
    match cli.command {
        Command::Fit(a) => fit(a, argv),
        Command::Simulate(a) => simulate(a, argv),
        Command::Summarize(a) => summarize(a, argv),
        Command::Metrics(a) => metrics(a, argv),
        Command::Explore(a) => explore(a, argv),
    }
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Validation(format!("{} line {}: expected key = value, got {line:?}", path.display(), n + 1))
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Defaults, then the preset, the config file, the dedicated flags and
/// finally `--set` overrides.
fn resolve_config(s: &SamplerArgs) -> Result<ChainConfig> {
    let mut config = if s.multi_chain_preset { ChainConfig::multi_chain_preset() } else { ChainConfig::default() };
    if let Some(path) = &s.config {
        for (k, v) in read_config_file(path)? {
            config
                .set(&k, &v)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        }
    }
    let flags = [
        ("seed", s.seed.map(|v| v.to_string())),
        ("iterations", s.iterations.map(|v| v.to_string())),
        ("burn_in", s.burn_in.map(|v| v.to_string())),
        ("thin", s.thin.map(|v| v.to_string())),
        ("chains", s.chains.map(|v| v.to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            config.set(k, &v)?;
        }
    }
    for kv in &s.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        config.set(k, v)?;
    }
    config.validate()?;
    Ok(config)
}

struct LoadedPanel {
    data: PanelData,
    graph: AdjacencyGraph,
}

#[allow(clippy::too_many_arguments)]
fn load_inputs(
    panel: &Path,
    adj: &Path,
    unit: &str,
    time: &str,
    response: &str,
    predictors: &Option<Vec<String>>,
    scale: bool,
    manifest: &mut RunManifest,
    out_dir: Option<&Path>,
) -> Result<LoadedPanel> {
    let schema = PanelSchema {
        unit: unit.into(),
        time: time.into(),
        response: response.into(),
        predictors: predictors.clone(),
    };
    let mut data = load_panel(panel, &schema)?;
    let graph = load_adjacency(adj, &data.unit_ids)?;
    manifest.add_input("panel", panel).map_err(|e| io_error(panel, e))?;
    manifest.add_input("adjacency", adj).map_err(|e| io_error(adj, e))?;
    if scale {
        let (scaled, scaling) = standardize(&data)?;
        data = scaled;
        if let Some(dir) = out_dir {
            let names: Vec<String> =
                std::iter::once(response.to_string()).chain(data.predictor_names.iter().cloned()).collect();
            let mut text = String::from("variable,mean,sd\n");
            for (k, name) in names.iter().enumerate() {
                text.push_str(&format!("{name},{},{}\n", scaling.means[k], scaling.sds[k]));
            }
            let path = dir.join("scaling.csv");
            fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        }
    }
    Ok(LoadedPanel { data, graph })
}

fn pin_partition(config: &mut ChainConfig, path: &Path, data: &PanelData, manifest: &mut RunManifest) -> Result<()> {
    let p = read_partition_csv(path, &data.unit_ids)?;
    manifest.add_input("fixed_partition", path).map_err(|e| io_error(path, e))?;
    config.fixed_partition = Some(p.labels().to_vec());
    Ok(())
}

fn fit(a: FitArgs, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("fit", argv);
    let mut config = resolve_config(&a.sampler)?;
    fs::create_dir_all(&a.out).map_err(|e| io_error(&a.out, e))?;
    let p = &a.panel;
    let LoadedPanel { data, graph } = load_inputs(
        &p.panel,
        &p.adj,
        &p.unit_col,
        &p.time_col,
        &p.response_col,
        &p.predictors,
        p.standardize,
        &mut manifest,
        Some(&a.out),
    )?;
    if let Some(path) = &a.sampler.fixed_partition {
        pin_partition(&mut config, path, &data, &mut manifest)?;
    }
    log::info!("fitting {} units x {} times with {} chain(s)", data.n_units(), data.n_times(), config.n_chains);
    let out = run_chains(&data, &graph, &config)?;
    out.write_dir(&a.out)?;

    let mut ks: Vec<(usize, usize)> = out.k_counts().into_iter().collect();
    ks.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    let draws = out.n_draws() as f64;
    println!("stored {} draws in {}", out.n_draws(), a.out.display());
    for (k, c) in ks.iter().take(5) {
        println!("  K = {k}: {:.3}", *c as f64 / draws);
    }

    manifest.seed = Some(config.seed);
    manifest.config = config.to_pairs();
    if let Some(fixed) = &config.fixed_partition {
        manifest.config.push(("fixed_partition".into(), fixed.iter().map(|l| (l + 1).to_string()).collect::<Vec<_>>().join(",")));
    }
    manifest.duration = start.elapsed();
    let path = a.out.join("manifest");
    manifest.write_atomic(&path).map_err(|e| io_error(&path, e))
}

fn simulate(a: SimulateArgs, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("simulate", argv);
    let mut spec = match a.preset {
        crate::args::Preset::Grid7 => SimulationSpec::grid7(a.seed),
    };
    if let Some(path) = &a.tiling {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        spec = spec.with_tiling(&text)?;
        manifest.add_input("tiling", path).map_err(|e| io_error(path, e))?;
    }
    if let Some(t) = a.times {
        spec.n_times = t;
    }
    let sim = simulate_dataset(&spec)?;
    write_simulation(&a.out, &sim)?;
    println!(
        "simulated {} units x {} times, {} clusters, in {}",
        spec.n_units(),
        spec.n_times,
        spec.n_clusters(),
        a.out.display()
    );
    manifest.seed = Some(a.seed);
    manifest.config = vec![
        ("preset".into(), "grid7".into()),
        ("grid".into(), format!("{}x{}", spec.grid_rows, spec.grid_cols)),
        ("n_times".into(), spec.n_times.to_string()),
        ("p".into(), spec.p.to_string()),
        ("rho".into(), spec.rho.to_string()),
        ("sigma2".into(), spec.sigma2.to_string()),
        ("tau2".into(), spec.tau2.to_string()),
    ];
    manifest.duration = start.elapsed();
    let path = a.out.join("manifest");
    manifest.write_atomic(&path).map_err(|e| io_error(&path, e))
}

fn summarize(a: SummarizeArgs, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("summarize", argv);
    let out = ChainOutput::read_dir(&a.draws)?;
    manifest.add_input("draws", &a.draws).map_err(|e| io_error(&a.draws, e))?;
    let draws = out.partitions();
    let estimate: Partition = match a.loss {
        Loss::Binder => {
            let sim = posterior_similarity_matrix(&draws)?;
            minimize_binder(&sim, &draws, a.a, a.b)?
        }
        Loss::Gvi => {
            let scale = match a.gvi_scale {
                GviScale::Sum => JointEntropyScale::Sum,
                GviScale::Mean => JointEntropyScale::Mean,
            };
            minimize_gvi(&draws, a.a, a.b, scale)?
        }
    };
    let path = a.out.clone().unwrap_or_else(|| a.draws.join("partition.csv"));
    write_partition_csv(&path, &out.unit_ids, &estimate)?;
    if let Some(sim_path) = &a.similarity {
        let sim = posterior_similarity_matrix(&draws)?;
        let mut text = std::iter::once("unit".to_string()).chain(out.unit_ids.iter().cloned()).collect::<Vec<_>>().join(",");
        text.push('\n');
        for i in 0..sim.n() {
            text.push_str(&out.unit_ids[i]);
            for j in 0..sim.n() {
                text.push_str(&format!(",{}", sim.get(i, j)));
            }
            text.push('\n');
        }
        fs::write(sim_path, text).map_err(|e| io_error(sim_path, e))?;
    }
    println!("estimated partition: K = {}, sizes {:?} -> {}", estimate.k(), estimate.sizes(), path.display());

    manifest.config = vec![
        ("loss".into(), format!("{:?}", a.loss).to_lowercase()),
        ("a".into(), a.a.to_string()),
        ("b".into(), a.b.to_string()),
        ("gvi_scale".into(), format!("{:?}", a.gvi_scale).to_lowercase()),
    ];
    manifest.duration = start.elapsed();
    let mpath = sidecar(&path);
    manifest.write_atomic(&mpath).map_err(|e| io_error(&mpath, e))
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest");
    path.with_file_name(name)
}

fn metrics(a: MetricsArgs, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("metrics", argv);
    if a.draws.is_none() && a.t0.is_none() {
        return Err(CliError::Validation("metrics needs --draws, --t0 or both".into()));
    }
    let mut report = MetricReport::default();
    if let Some(dir) = &a.draws {
        let out = ChainOutput::read_dir(dir)?;
        manifest.add_input("draws", dir).map_err(|e| io_error(dir, e))?;
        report.waic = Some(waic(&out.loglik)?);
    }
    if let Some(t0) = a.t0 {
        let (panel, adj) = (a.panel.as_ref().unwrap(), a.adj.as_ref().unwrap());
        let mut config = resolve_config(&a.sampler)?;
        let LoadedPanel { data, graph } = load_inputs(
            panel,
            adj,
            &a.unit_col,
            &a.time_col,
            &a.response_col,
            &a.predictors,
            a.standardize,
            &mut manifest,
            None,
        )?;
        if let Some(path) = &a.sampler.fixed_partition {
            pin_partition(&mut config, path, &data, &mut manifest)?;
        }
        report.one_step = Some(one_step_ahead(&data, &graph, &config, t0)?);
        manifest.seed = Some(config.seed);
        manifest.config = config.to_pairs();
        manifest.config.push(("t0".into(), t0.to_string()));
    }
    write_metrics_csv(&a.out, &report)?;
    print!("{}", report.summary());
    manifest.duration = start.elapsed();
    let mpath = sidecar(&a.out);
    manifest.write_atomic(&mpath).map_err(|e| io_error(&mpath, e))
}

fn explore(a: ExploreArgs, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let mut manifest = RunManifest::new("explore", argv);
    let p = &a.panel;
    let LoadedPanel { data, graph } = load_inputs(
        &p.panel,
        &p.adj,
        &p.unit_col,
        &p.time_col,
        &p.response_col,
        &p.predictors,
        p.standardize,
        &mut manifest,
        None,
    )?;
    let mut rows: Vec<(String, f64, f64)> = Vec::new();
    for (t, label) in data.times.iter().enumerate() {
        let v: Vec<f64> = data.y.column(t).iter().copied().collect();
        rows.push((label.clone(), morans_i(&v, &graph)?, gearys_c(&v, &graph)?));
    }
    let avg: Vec<f64> = data.y.row_iter().map(|r| r.mean()).collect();
    rows.push(("mean".into(), morans_i(&avg, &graph)?, gearys_c(&avg, &graph)?));

    let mut text = String::from("time,morans_i,gearys_c\n");
    println!("{:>8} {:>10} {:>10}", "time", "moran_i", "geary_c");
    for (t, i, c) in &rows {
        text.push_str(&format!("{t},{i},{c}\n"));
        println!("{t:>8} {i:>10.4} {c:>10.4}");
    }
    manifest.duration = start.elapsed();
    if let Some(path) = &a.out {
        fs::write(path, text).map_err(|e| io_error(path, e))?;
        let mpath = sidecar(path);
        manifest.write_atomic(&mpath).map_err(|e| io_error(&mpath, e))?;
    }
    Ok(())
}
