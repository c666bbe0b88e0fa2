//! Command-line driver for the lattice fluctuation-interaction solver.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use casimir::config::{Checkpoint, CsvWriter, RunConfig, RunManifest};
use casimir::error::{Error, Result};
use casimir::experiments::{
    default_fit_window, fit_power_law, height_ladder, run_crossover_sweep, run_rough_ensemble,
    run_surface_realization, run_torque_sweep, separation_ladder,
};
use casimir::lattice::Lattice;
use casimir::materials::{DielectricModel, MaterialMap};
use casimir::operators::{assemble_curl, assemble_da, assemble_dg, discrete_gradient};
use casimir::quadrature::{build_grid, select_alpha, SceneSummary, WaveOperator};
use casimir::scenes::{flat_surface, DiskPairScene};

#[derive(Parser)]
#[command(
    name = "casimir",
    about = "Fluctuation-induced interaction energies on periodic Yee lattices",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Interaction energy of two quadrant-patterned disks vs rotation angle (3D).
    Torque3d(CommonArgs),
    /// Pair interaction vs separation for a list of dielectric poles (2D).
    Crossover2d(CommonArgs),
    /// Probe above an ensemble of random solid-on-solid surfaces (2D).
    Rough2d(CommonArgs),
    /// Probe above a flat half-space: the baseline surface curve (2D).
    Flat2d(CommonArgs),
    /// Cross-check the sparse solver against dense references; exits nonzero on failure.
    Validate,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration; omitted = experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 = all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Reuse checkpointed (key, node) values from a previous run.
    #[arg(long)]
    resume: bool,
    /// Quadrature node count.
    #[arg(long)]
    ng: Option<usize>,
    /// Frequency scale for the quadrature substitution.
    #[arg(long)]
    alpha: Option<f64>,
    /// Base RNG seed for ensembles.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Torque3d(args) => cmd_torque3d(load_config(&args, "torque3d")?),
        Command::Crossover2d(args) => cmd_crossover2d(load_config(&args, "crossover2d")?),
        Command::Rough2d(args) => cmd_rough2d(load_config(&args, "rough2d")?),
        Command::Flat2d(args) => cmd_flat2d(load_config(&args, "flat2d")?),
        Command::Validate => cmd_validate(),
    }
}

fn default_config(experiment: &str) -> RunConfig {
    let extents = if experiment == "torque3d" {
        vec![25, 25, 25]
    } else {
        vec![256, 256]
    };
    let text = format!("experiment = \"{experiment}\"\nextents = {extents:?}\n");
    RunConfig::from_toml(&text).expect("defaults are valid")
}

fn load_config(args: &CommonArgs, experiment: &str) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => default_config(experiment),
    };
    if cfg.experiment != experiment {
        return Err(Error::InvalidConfig(format!(
            "config is for '{}' but the '{experiment}' subcommand was invoked",
            cfg.experiment
        )));
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.to_string_lossy().into_owned();
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    if args.resume {
        cfg.resume = true;
    }
    if let Some(ng) = args.ng {
        cfg.ng = ng;
    }
    if args.alpha.is_some() {
        cfg.alpha = args.alpha;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    warn_if_heavy(&cfg);
    Ok(cfg)
}

/// Rough memory estimate for one factorization at this scale; paper-scale
/// boxes need far more than a desk machine has.
fn warn_if_heavy(cfg: &RunConfig) {
    let volume: usize = cfg.extents.iter().product();
    let dim = cfg.extents.len();
    let n = if dim == 3 { 3 * volume } else { volume } as f64;
    // Empirical fill per column from the dissection ordering: ~35 in 2D,
    // ~n^(1/3) * 30 in 3D.
    let fill = if dim == 3 { n * n.powf(1.0 / 3.0) * 30.0 } else { n * 35.0 };
    let bytes = fill * 16.0;
    if bytes > 8e9 {
        log::warn!(
            "estimated factor size {:.1} GiB per frequency node; this configuration \
             is beyond desk scale and may exhaust memory",
            bytes / 1024f64.powi(3)
        );
    }
}

fn lattice_from(cfg: &RunConfig) -> Result<Lattice> {
    match cfg.extents.as_slice() {
        [x, y] => Lattice::new_2d(*x, *y),
        [x, y, z] => Lattice::new_3d(*x, *y, *z),
        _ => Err(Error::InvalidConfig("extents must have 2 or 3 entries".into())),
    }
}

/// Particle/surface material from the config: constant epsilon, or a
/// single pole at `omega0_over_c * c` with the same zero-frequency value.
fn material_from(cfg: &RunConfig, omega0_over_c: Option<f64>) -> DielectricModel {
    match omega0_over_c {
        Some(w) => DielectricModel::single_pole(cfg.epsilon - 1.0, w * cfg.c),
        None => DielectricModel::constant(cfg.epsilon),
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

// ---------------------------------------------------------------------------

fn cmd_torque3d(cfg: RunConfig) -> Result<()> {
    let t0 = Instant::now();
    let lat = lattice_from(&cfg)?;
    let out = Path::new(&cfg.out_dir);
    let scene = DiskPairScene {
        diameter: cfg.disk_diameter,
        thickness: cfg.disk_thickness,
        gap: cfg.disk_gap,
        eps_a: DielectricModel::constant(cfg.eps_a),
        eps_b: DielectricModel::constant(cfg.eps_b),
        theta: 0.0,
    };
    let angles: Vec<f64> = if cfg.angles.is_empty() {
        (0..=4).map(|i| i as f64 * std::f64::consts::PI / 8.0).collect()
    } else {
        cfg.angles.clone()
    };
    let alpha = cfg.alpha.unwrap_or_else(|| {
        select_alpha(&SceneSummary {
            separation: Some(cfg.disk_gap as f64),
            min_pole: None,
            c: cfg.c,
        })
    });
    let grid = build_grid(alpha, cfg.ng)?;
    let checkpoint = Checkpoint::open(&out.join("torque_checkpoint.jsonl"), cfg.resume)?;
    log::info!(
        "torque sweep: {} angles, {} nodes, alpha {alpha:.4e}",
        angles.len(),
        grid.len()
    );
    let curve = run_torque_sweep(&lat, &scene, &angles, &grid, cfg.c, Some(&checkpoint))?;

    let mut csv = CsvWriter::create(
        &out.join("torque_curve.csv"),
        &[
            format!("alpha = {alpha}"),
            format!("ng = {}", cfg.ng),
            format!("extents = {:?}", cfg.extents),
        ],
        &["theta", "F_self", "F_both", "U"],
    )?;
    for i in 0..curve.angles.len() {
        csv.row(&[
            fmt(curve.angles[i]),
            fmt(curve.f_self[i]),
            fmt(curve.f_both[i]),
            fmt(curve.u[i]),
        ])?;
    }
    let mut tq = CsvWriter::create(
        &out.join("torque.csv"),
        &["finite-difference torque -dU/dtheta at interval midpoints".into()],
        &["theta_mid", "torque"],
    )?;
    for (mid, t) in curve.torque() {
        tq.row(&[fmt(mid), fmt(t)])?;
    }

    let mut manifest = RunManifest::new(&cfg);
    manifest.alpha_used.insert("torque".into(), alpha);
    manifest
        .counters
        .insert("full_factorizations".into(), curve.factorizations as u64);
    manifest
        .timings_seconds
        .insert("total".into(), t0.elapsed().as_secs_f64());
    for (theta, msg) in &curve.failed {
        manifest
            .notes
            .push(format!("angle {theta:.6} aborted: {msg}"));
    }
    manifest.write(&out.join("manifest.json"))?;
    println!(
        "torque3d: {} angles in {:.1} s -> {}",
        curve.angles.len(),
        t0.elapsed().as_secs_f64(),
        out.join("torque_curve.csv").display()
    );
    Ok(())
}

fn cmd_crossover2d(cfg: RunConfig) -> Result<()> {
    let t0 = Instant::now();
    let lat = lattice_from(&cfg)?;
    let out = Path::new(&cfg.out_dir);
    let l = cfg.extents[0];
    let d_steps = if cfg.separations.is_empty() {
        separation_ladder(l)
    } else {
        cfg.separations.clone()
    };
    let runs: Vec<(String, Option<f64>)> = if cfg.omega0.is_empty() {
        vec![("const".to_string(), None)]
    } else {
        cfg.omega0
            .iter()
            .map(|&w| (format!("w0c_{w:.4e}"), Some(w)))
            .collect()
    };
    let checkpoint = Checkpoint::open(&out.join("crossover_checkpoint.jsonl"), cfg.resume)?;
    let mut manifest = RunManifest::new(&cfg);
    let mut fits = CsvWriter::create(
        &out.join("crossover_fits.csv"),
        &["log-log power-law fits of U(r)".into()],
        &["label", "exponent", "amplitude", "stderr", "points"],
    )?;
    for (label, w0) in runs {
        let model = material_from(&cfg, w0);
        let curve = run_crossover_sweep(
            &lat,
            model,
            &label,
            &d_steps,
            cfg.ng,
            cfg.alpha,
            cfg.c,
            Some(&checkpoint),
        )?;
        let mut csv = CsvWriter::create(
            &out.join(format!("crossover_{label}.csv")),
            &[
                format!("alpha = {}", curve.alpha),
                format!("ng = {}", cfg.ng),
                format!("model = {model:?}"),
            ],
            &["r", "U", "U_scaled"],
        )?;
        for i in 0..curve.separations.len() {
            csv.row(&[
                fmt(curve.separations[i]),
                fmt(curve.energies[i]),
                fmt(curve.scaled[i]),
            ])?;
        }
        let points: Vec<(f64, f64)> = curve
            .separations
            .iter()
            .copied()
            .zip(curve.energies.iter().copied())
            .collect();
        let window = cfg
            .fit_window
            .map(|w| (w[0], w[1]))
            .unwrap_or_else(|| default_fit_window(&curve.separations));
        match fit_power_law(&points, window) {
            Ok(fit) => {
                fits.row(&[
                    label.clone(),
                    fmt(fit.exponent),
                    fmt(fit.amplitude),
                    fmt(fit.stderr),
                    fit.points_used.to_string(),
                ])?;
                println!("{label}: U ~ r^{:.3} (+/- {:.3})", fit.exponent, fit.stderr);
            }
            Err(e) => manifest.notes.push(format!("{label}: fit skipped: {e}")),
        }
        manifest.alpha_used.insert(label.clone(), curve.alpha);
        let prev = manifest
            .counters
            .get("bulk_factorizations")
            .copied()
            .unwrap_or(0);
        manifest
            .counters
            .insert("bulk_factorizations".into(), prev + curve.factorizations as u64);
    }
    manifest
        .timings_seconds
        .insert("total".into(), t0.elapsed().as_secs_f64());
    manifest.write(&out.join("manifest.json"))?;
    println!(
        "crossover2d: done in {:.1} s -> {}",
        t0.elapsed().as_secs_f64(),
        out.display()
    );
    Ok(())
}

fn surface_heights(cfg: &RunConfig) -> Vec<usize> {
    if cfg.separations.is_empty() {
        let l = cfg.extents[1];
        height_ladder(4, (l / 8).max(8))
    } else {
        cfg.separations.clone()
    }
}

fn cmd_rough2d(cfg: RunConfig) -> Result<()> {
    let t0 = Instant::now();
    let lat = lattice_from(&cfg)?;
    let out = Path::new(&cfg.out_dir);
    let heights = surface_heights(&cfg);
    let model = material_from(&cfg, cfg.omega0.first().copied());
    let checkpoint = Checkpoint::open(&out.join("rough_checkpoint.jsonl"), cfg.resume)?;
    log::info!(
        "rough ensemble: {} realizations, {} heights, ng {}",
        cfg.realizations,
        heights.len(),
        cfg.ng
    );
    let res = run_rough_ensemble(
        &lat,
        model,
        model,
        &heights,
        cfg.realizations,
        cfg.seed,
        cfg.ng,
        cfg.alpha,
        cfg.c,
        Some(&checkpoint),
    )?;

    let mut csv = CsvWriter::create(
        &out.join("rough_curve.csv"),
        &[
            format!("alpha = {}", res.alpha),
            format!("effective_realizations = {}", res.effective),
            format!("attempted_realizations = {}", res.attempted),
        ],
        &["r", "U_mean", "sigma_u", "U_flat", "delta_U"],
    )?;
    for i in 0..heights.len() {
        csv.row(&[
            fmt(heights[i] as f64),
            fmt(res.mean[i]),
            fmt(res.sigma[i]),
            fmt(res.u_flat[i]),
            fmt(res.delta_u[i]),
        ])?;
    }
    let mut per = CsvWriter::create(
        &out.join("rough_realizations.csv"),
        &["per-realization probe energies".into()],
        &["seed", "r", "U"],
    )?;
    for (seed, us) in &res.per_realization {
        for (i, &u) in us.iter().enumerate() {
            per.row(&[seed.to_string(), fmt(heights[i] as f64), fmt(u)])?;
        }
    }

    let mut fits = CsvWriter::create(
        &out.join("rough_fits.csv"),
        &["log-log fits of ensemble statistics vs r".into()],
        &["quantity", "exponent", "amplitude", "stderr", "points"],
    )?;
    let rs: Vec<f64> = heights.iter().map(|&h| h as f64).collect();
    let window = cfg
        .fit_window
        .map(|w| (w[0], w[1]))
        .unwrap_or((rs[0], *rs.last().unwrap() + 1e-9));
    let mut manifest = RunManifest::new(&cfg);
    for (name, values) in [("sigma_u", &res.sigma), ("delta_U", &res.delta_u)] {
        let pts: Vec<(f64, f64)> = rs.iter().copied().zip(values.iter().copied()).collect();
        match fit_power_law(&pts, window) {
            Ok(fit) => {
                fits.row(&[
                    name.to_string(),
                    fmt(fit.exponent),
                    fmt(fit.amplitude),
                    fmt(fit.stderr),
                    fit.points_used.to_string(),
                ])?;
                println!("{name} ~ r^{:.3} (+/- {:.3})", fit.exponent, fit.stderr);
            }
            Err(e) => manifest.notes.push(format!("{name}: fit skipped: {e}")),
        }
    }

    manifest.seeds = res.seeds.clone();
    manifest.alpha_used.insert("rough".into(), res.alpha);
    manifest
        .counters
        .insert("bulk_factorizations".into(), res.factorizations as u64);
    manifest
        .counters
        .insert("effective_realizations".into(), res.effective as u64);
    for (seed, msg) in &res.skipped {
        manifest.notes.push(format!("seed {seed} skipped: {msg}"));
    }
    manifest
        .timings_seconds
        .insert("total".into(), t0.elapsed().as_secs_f64());
    manifest.write(&out.join("manifest.json"))?;
    println!(
        "rough2d: {}/{} realizations in {:.1} s -> {}",
        res.effective,
        res.attempted,
        t0.elapsed().as_secs_f64(),
        out.display()
    );
    Ok(())
}

fn cmd_flat2d(cfg: RunConfig) -> Result<()> {
    let t0 = Instant::now();
    let lat = lattice_from(&cfg)?;
    let out = Path::new(&cfg.out_dir);
    let heights = surface_heights(&cfg);
    let model = material_from(&cfg, cfg.omega0.first().copied());
    let l = cfg.extents[0];
    let alpha = cfg.alpha.unwrap_or_else(|| {
        let lo = *heights.first().unwrap() as f64;
        let hi = *heights.last().unwrap() as f64;
        select_alpha(&SceneSummary {
            separation: Some((lo * hi).sqrt()),
            min_pole: model.pole_frequency(),
            c: cfg.c,
        })
    });
    let grid = build_grid(alpha, cfg.ng)?;
    let checkpoint = Checkpoint::open(&out.join("flat_checkpoint.jsonl"), cfg.resume)?;
    let scene = flat_surface(l, model);
    let (u, facts) = run_surface_realization(
        &lat,
        &scene,
        model,
        &heights,
        &grid,
        cfg.c,
        Some((&checkpoint, "flat")),
    )?;

    let mut csv = CsvWriter::create(
        &out.join("flat_curve.csv"),
        &[format!("alpha = {alpha}"), format!("ng = {}", cfg.ng)],
        &["r", "U"],
    )?;
    for (i, &h) in heights.iter().enumerate() {
        csv.row(&[fmt(h as f64), fmt(u[i])])?;
    }
    let pts: Vec<(f64, f64)> = heights.iter().map(|&h| h as f64).zip(u.iter().copied()).collect();
    let window = cfg
        .fit_window
        .map(|w| (w[0], w[1]))
        .unwrap_or((pts[0].0, pts.last().unwrap().0 + 1e-9));
    let mut manifest = RunManifest::new(&cfg);
    match fit_power_law(&pts, window) {
        Ok(fit) => println!("flat surface: U ~ r^{:.3} (+/- {:.3})", fit.exponent, fit.stderr),
        Err(e) => manifest.notes.push(format!("fit skipped: {e}")),
    }
    manifest.alpha_used.insert("flat".into(), alpha);
    manifest
        .counters
        .insert("bulk_factorizations".into(), facts as u64);
    manifest
        .timings_seconds
        .insert("total".into(), t0.elapsed().as_secs_f64());
    manifest.write(&out.join("manifest.json"))?;
    println!(
        "flat2d: done in {:.1} s -> {}",
        t0.elapsed().as_secs_f64(),
        out.join("flat_curve.csv").display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------

/// Dense cross-check suite: each check prints one pass/fail line; the
/// command exits nonzero if any fails. Runs in well under five minutes.
fn cmd_validate() -> Result<()> {
    let mut all_ok = true;
    let mut check = |name: &str, result: std::result::Result<(), String>| {
        match result {
            Ok(()) => println!("PASS {name}"),
            Err(msg) => {
                println!("FAIL {name}: {msg}");
                all_ok = false;
            }
        }
    };

    check("curl adjointness (2D/3D)", validate_adjointness());
    check("curl of gradient vanishes", validate_gauge());
    check("sparse vs dense log-determinant", validate_logdet());
    check("Schur complement determinant identity", validate_schur());
    check("free energy antisymmetry", validate_antisymmetry());
    check("quadrature polynomial exactness", validate_quadrature());

    if all_ok {
        println!("all checks passed");
        Ok(())
    } else {
        Err(Error::InvalidConfig("validation failed".into()))
    }
}

fn validate_adjointness() -> std::result::Result<(), String> {
    for lat in [
        Lattice::new_2d(6, 5).unwrap(),
        Lattice::new_3d(4, 5, 4).unwrap(),
    ] {
        let curl = assemble_curl(&lat);
        let ct = curl.transpose();
        for c in 0..curl.ncols {
            for p in curl.colptr[c]..curl.colptr[c + 1] {
                let r = curl.rowind[p];
                let v = curl.values[p];
                if (ct.get(c, r) - v).abs() > 0.0 {
                    return Err(format!("transpose mismatch at ({r}, {c})"));
                }
            }
        }
    }
    Ok(())
}

fn validate_gauge() -> std::result::Result<(), String> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    for lat in [
        Lattice::new_2d(6, 6).unwrap(),
        Lattice::new_3d(4, 4, 5).unwrap(),
    ] {
        let curl = assemble_curl(&lat);
        let phi: Vec<f64> = (0..lat.sites()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = discrete_gradient(&lat, &phi);
        let cg = curl.matvec(&g);
        let max = cg.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        if max > 1e-12 {
            return Err(format!("curl(grad phi) reaches {max:.3e}"));
        }
    }
    Ok(())
}

fn validate_logdet() -> std::result::Result<(), String> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let lat = Lattice::new_2d(8, 8).unwrap();
    for trial in 0..5 {
        let mut map = MaterialMap::vacuum(lat);
        let links: Vec<casimir::lattice::LinkId> = (0..lat.links())
            .filter(|_| rng.gen_bool(0.3))
            .map(casimir::lattice::LinkId)
            .collect();
        if !links.is_empty() {
            map = map
                .stamp_links(&links, DielectricModel::constant(rng.gen_range(1.0..10.0)))
                .map_err(|e| e.to_string())?;
        }
        for op in [
            assemble_da(&lat, &map, 0.7, 1.0),
            assemble_dg(&lat, &map, 0.7, 1.0),
        ] {
            let op = op.map_err(|e| e.to_string())?;
            let sparse = casimir::linalg::sparse_logdet(&op).map_err(|e| e.to_string())?;
            let dense = casimir::oracle::dense_logdet_sparse(&op).map_err(|e| e.to_string())?;
            let rel = (sparse - dense).abs() / dense.abs().max(1.0);
            if rel > 1e-8 {
                return Err(format!("trial {trial}: relative error {rel:.3e}"));
            }
        }
    }
    Ok(())
}

fn validate_schur() -> std::result::Result<(), String> {
    use casimir::linalg::{schur_complement, SchurPlan};
    let lat = Lattice::new_2d(8, 8).unwrap();
    let map = MaterialMap::vacuum(lat);
    let dg = assemble_dg(&lat, &map, 0.5, 1.0).map_err(|e| e.to_string())?;
    let retained: Vec<usize> = (0..8).map(|i| i * 7).collect();
    let plan = SchurPlan::retaining(dg.nrows, &retained).map_err(|e| e.to_string())?;
    let res = schur_complement(&dg, &plan).map_err(|e| e.to_string())?;
    let total = res.x_factor.logdet() + res.s.logdet().map_err(|e| e.to_string())?;
    let direct = casimir::linalg::sparse_logdet(&dg).map_err(|e| e.to_string())?;
    let rel = (total - direct).abs() / direct.abs().max(1.0);
    if rel > 1e-8 {
        return Err(format!("relative error {rel:.3e}"));
    }
    Ok(())
}

fn validate_antisymmetry() -> std::result::Result<(), String> {
    use casimir::quadrature::free_energy_difference;
    use casimir::scenes::particle_footprint;
    let lat = Lattice::new_2d(16, 16).unwrap();
    let model = DielectricModel::constant(4.0);
    let base = MaterialMap::vacuum(lat);
    let a = base
        .stamp_links(&particle_footprint(&lat, [2, 2]).map_err(|e| e.to_string())?, model)
        .map_err(|e| e.to_string())?;
    let b = base
        .stamp_links(&particle_footprint(&lat, [8, 8]).map_err(|e| e.to_string())?, model)
        .map_err(|e| e.to_string())?;
    let grid = build_grid(0.5, 8).map_err(|e| e.to_string())?;
    let uab = free_energy_difference(&a, &b, &grid, WaveOperator::MagneticPotential, 1.0)
        .map_err(|e| e.to_string())?;
    let uba = free_energy_difference(&b, &a, &grid, WaveOperator::MagneticPotential, 1.0)
        .map_err(|e| e.to_string())?;
    if uab != -uba {
        return Err(format!("U(a,b) = {uab:.6e} but U(b,a) = {uba:.6e}"));
    }
    Ok(())
}

fn validate_quadrature() -> std::result::Result<(), String> {
    use casimir::quadrature::gauss_legendre_unit;
    let (z, w) = gauss_legendre_unit(12);
    // Exact for polynomials up to degree 23.
    for k in [0usize, 5, 11, 23] {
        let integral: f64 = z.iter().zip(&w).map(|(&z, &w)| w * z.powi(k as i32)).sum();
        let exact = 1.0 / (k as f64 + 1.0);
        if (integral - exact).abs() > 1e-13 {
            return Err(format!("degree {k}: {integral} vs {exact}"));
        }
    }
    Ok(())
}
