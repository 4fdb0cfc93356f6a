use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cte_core::baseline::{bresson_decompose, DEFAULT_BETA};
use cte_core::color::{decompose_color, MultiChannelImage};
use cte_core::grid::gradient_magnitude;
use cte_core::io::{load_image, save_image};
use cte_core::metrics::average_channel_metrics;
use cte_core::multiscale::multiscale_decompose;
use cte_core::noise::add_gaussian_noise;
use cte_core::report::{ImageReport, QualityMetrics, RunReport, ScaleReport};
use cte_core::visualize::RenderMode;
use cte_core::{decompose, GChoice, LambdaMode, MuMode, ScalarField, SolverConfig};

/// Cartoon / texture / edge decomposition of 8-bit images.
#[derive(Parser)]
#[command(name = "cte", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a gray or RGB image into u, v and w.
    Decompose {
        #[command(flatten)]
        mu: MuArgs,
        #[command(flatten)]
        solver: SolverArgs,
        input: PathBuf,
    },
    /// Fixed edge-indicator TV-L1 splitting.
    Baseline {
        #[arg(long, default_value_t = DEFAULT_BETA)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[command(flatten)]
        solver: SolverArgs,
        input: PathBuf,
    },
    /// Repeated decomposition of residuals with mu0 * ratio^i.
    Multiscale {
        #[arg(long, default_value_t = 5)]
        levels: usize,
        #[arg(long, default_value_t = 0.5)]
        mu0: f64,
        #[arg(long, default_value_t = 2.0)]
        ratio: f64,
        #[command(flatten)]
        solver: SolverArgs,
        input: PathBuf,
    },
    /// Add seeded Gaussian noise to a clean image, decompose it and score the cartoon.
    DenoiseBench {
        /// Noise standard deviation on the [0, 255] scale.
        #[arg(long, default_value_t = 30.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Clean reference image.
        #[arg(long = "ref")]
        reference: PathBuf,
        #[command(flatten)]
        mu: MuArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Where to write the noisy image (default: <out-dir>/<ref stem>_noisy.png).
        noisy_output: Option<PathBuf>,
    },
    /// PSNR and MSSIM of two images on the [0, 255] scale.
    Metrics { a: PathBuf, b: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum MuChoice {
    Constant,
    Mu1,
    Mu2,
    Mu3,
}

#[derive(Clone, Copy, ValueEnum)]
enum GArg {
    Rational,
    Exp,
    Tvreg,
}

#[derive(Args)]
struct MuArgs {
    #[arg(long = "mu-mode", value_enum, default_value = "constant")]
    mode: MuChoice,
    /// Fidelity value for `--mu-mode constant`.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
}

impl MuArgs {
    fn mode(&self) -> MuMode {
        match self.mode {
            MuChoice::Constant => MuMode::Constant { value: self.mu },
            MuChoice::Mu1 => MuMode::mu1(),
            MuChoice::Mu2 => MuMode::Mu2,
            MuChoice::Mu3 => MuMode::mu3(),
        }
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-2)]
    theta: f64,
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "rational")]
    g: GArg,
    #[arg(long = "inner-iters", default_value_t = 30)]
    inner_iters: usize,
    #[arg(long = "max-outer", default_value_t = 500)]
    max_outer: usize,
    #[arg(long = "out-dir", default_value = ".")]
    out_dir: PathBuf,
}

impl SolverArgs {
    fn config(&self, mu_mode: MuMode) -> Result<SolverConfig> {
        let config = SolverConfig {
            theta: self.theta,
            epsilon: self.epsilon,
            inner_iters: self.inner_iters,
            g_choice: match self.g {
                GArg::Rational => GChoice::Rational,
                GArg::Exp => GChoice::Exponential,
                GArg::Tvreg => GChoice::TvRegularized,
            },
            mu_mode,
            lambda_mode: LambdaMode::Constant(self.lambda),
            max_outer: self.max_outer,
            ..Default::default()
        };
        config.validate()?;
        Ok(config)
    }
}

struct Components {
    u: Vec<ScalarField>,
    v: Vec<ScalarField>,
    w: Vec<ScalarField>,
    energy_trace: Vec<Vec<f64>>,
    iterations: usize,
    converged: bool,
}

fn run_decompose(f: &MultiChannelImage, config: &SolverConfig) -> Result<Components> {
    let results = if f.channel_count() == 1 {
        vec![decompose(&f.channels()[0], config)?]
    } else {
        decompose_color(f, config)?
    };
    Ok(Components {
        iterations: results[0].iterations,
        converged: results.iter().all(|r| r.converged),
        u: results.iter().map(|r| r.u.clone()).collect(),
        v: results.iter().map(|r| r.v.clone()).collect(),
        w: results.iter().map(|r| r.w.clone()).collect(),
        energy_trace: results.into_iter().map(|r| r.energy_trace).collect(),
    })
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".to_string())
}

fn image(channels: Vec<ScalarField>) -> MultiChannelImage {
    MultiChannelImage::new(channels).expect("channels come from one input image")
}

/// Writes `<stem>_u.png`, `<stem>_v.png`, `<stem>_w.png` and returns their paths.
fn write_components(c: &Components, out_dir: &Path, stem: &str) -> Result<Vec<String>> {
    let rescale = RenderMode::Rescale { range: None };
    let mut outputs = Vec::new();
    for (name, fields, mode) in [
        ("u", &c.u, RenderMode::Cartoon),
        ("v", &c.v, rescale),
        ("w", &c.w, rescale),
    ] {
        let path = out_dir.join(format!("{stem}_{name}.png"));
        save_image(&image(fields.clone()), &path, mode)?;
        outputs.push(path.display().to_string());
    }
    Ok(outputs)
}

fn image_report(input: &Path, f: &MultiChannelImage, c: &Components, seconds: f64) -> ImageReport {
    let (width, height) = f.dims();
    ImageReport {
        input: input.display().to_string(),
        width,
        height,
        channels: f.channel_count(),
        iterations: c.iterations,
        converged: c.converged,
        wall_time_s: seconds,
        energy_trace: c.energy_trace.clone(),
        ..Default::default()
    }
}

fn quality(u: &MultiChannelImage, reference: &MultiChannelImage) -> Result<QualityMetrics> {
    let scale = |img: &MultiChannelImage| img.map_channels(|c| c.map(|v| v * 255.0));
    let (psnr_db, mssim) = average_channel_metrics(&scale(u), &scale(reference), 255.0)?;
    Ok(QualityMetrics { psnr_db, mssim })
}

fn load(path: &Path) -> Result<MultiChannelImage> {
    load_image(path).with_context(|| format!("cannot load {}", path.display()))
}

fn finish(mut report: RunReport, image: ImageReport, out_dir: &Path, stem: &str) -> Result<()> {
    let path = out_dir.join(format!("{stem}_report.json"));
    println!(
        "{}: {} iterations, converged={}, report {}",
        image.input,
        image.iterations,
        image.converged,
        path.display()
    );
    report.images.push(image);
    report.write(&path)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Decompose { mu, solver, input } => {
            let config = solver.config(mu.mode())?;
            let f = load(&input)?;
            let start = Instant::now();
            let c = run_decompose(&f, &config)?;
            let seconds = start.elapsed().as_secs_f64();
            let stem = stem(&input);
            let mut img = image_report(&input, &f, &c, seconds);
            img.outputs = write_components(&c, &solver.out_dir, &stem)?;
            finish(RunReport::new("decompose", &config), img, &solver.out_dir, &stem)
        }
        Command::Baseline {
            beta,
            mu,
            solver,
            input,
        } => {
            let config = solver.config(MuMode::Constant { value: mu })?;
            let f = load(&input)?;
            let start = Instant::now();
            let mut results = Vec::new();
            for channel in f.channels() {
                results.push(bresson_decompose(channel, beta, mu, &config)?);
            }
            let seconds = start.elapsed().as_secs_f64();
            let c = Components {
                iterations: results.iter().map(|r| r.iterations).max().unwrap_or(0),
                converged: results.iter().all(|r| r.converged),
                u: results.iter().map(|r| r.u.clone()).collect(),
                v: results.iter().map(|r| r.v.clone()).collect(),
                w: f.channels().iter().map(gradient_magnitude).collect(),
                energy_trace: results.into_iter().map(|r| r.energy_trace).collect(),
            };
            let stem = stem(&input);
            let mut img = image_report(&input, &f, &c, seconds);
            img.outputs = write_components(&c, &solver.out_dir, &stem)?;
            let mut report = RunReport::new("baseline", &config);
            report.params.insert("beta".into(), beta.into());
            finish(report, img, &solver.out_dir, &stem)
        }
        Command::Multiscale {
            levels,
            mu0,
            ratio,
            solver,
            input,
        } => {
            let config = solver.config(MuMode::Constant { value: mu0 })?;
            let f = load(&input)?;
            let start = Instant::now();
            let runs = f
                .channels()
                .iter()
                .map(|ch| multiscale_decompose(ch, levels, mu0, ratio, &config))
                .collect::<cte_core::Result<Vec<_>>>()?;
            let seconds = start.elapsed().as_secs_f64();
            let stem = stem(&input);

            let rescale = RenderMode::Rescale { range: None };
            let mut outputs = Vec::new();
            let mut scales = Vec::new();
            for i in 0..levels {
                let layer = |pick: fn(&cte_core::multiscale::ScaleLayer) -> &ScalarField| {
                    image(runs.iter().map(|r| pick(&r.layers[i]).clone()).collect())
                };
                for (name, img) in [
                    ("u", layer(|l| &l.u)),
                    ("v", layer(|l| &l.v)),
                    ("w", layer(|l| &l.w)),
                ] {
                    let path = solver.out_dir.join(format!("{stem}_{name}{i}.png"));
                    save_image(&img, &path, rescale)?;
                    outputs.push(path.display().to_string());
                }
                let residual: f64 = runs
                    .iter()
                    .map(|r| r.residuals[i + 1].norm_l2().powi(2))
                    .sum();
                scales.push(ScaleReport {
                    mu: runs[0].layers[i].mu,
                    iterations: runs.iter().map(|r| r.layers[i].iterations).max().unwrap_or(0),
                    converged: runs.iter().all(|r| r.layers[i].converged),
                    residual_l2: residual.sqrt(),
                });
            }

            let last = levels - 1;
            let c = Components {
                u: runs.iter().map(|r| r.cumulative_cartoon(last)).collect(),
                v: runs
                    .iter()
                    .map(|r| {
                        let total = r.cumulative(last);
                        total
                            .zip_map(&r.cumulative_cartoon(last), |a, b| a - b)
                            .expect("same dims")
                    })
                    .collect(),
                w: runs.iter().map(|r| r.layers[0].w.clone()).collect(),
                energy_trace: Vec::new(),
                iterations: scales.iter().map(|s| s.iterations).sum(),
                converged: scales.iter().all(|s| s.converged),
            };
            let mut img = image_report(&input, &f, &c, seconds);
            img.outputs = write_components(&c, &solver.out_dir, &stem)?;
            img.outputs.extend(outputs);
            img.scales = scales;
            let mut report = RunReport::new("multiscale", &config);
            report.params.insert("levels".into(), levels.into());
            report.params.insert("mu0".into(), mu0.into());
            report.params.insert("ratio".into(), ratio.into());
            finish(report, img, &solver.out_dir, &stem)
        }
        Command::DenoiseBench {
            sigma,
            seed,
            reference,
            mu,
            solver,
            noisy_output,
        } => {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                bail!("--sigma must be >= 0, got {sigma}");
            }
            let config = solver.config(mu.mode())?;
            let clean = load(&reference)?;
            let noisy = add_gaussian_noise(&clean, sigma, seed);
            let noisy_path = noisy_output
                .unwrap_or_else(|| solver.out_dir.join(format!("{}_noisy.png", stem(&reference))));
            save_image(&noisy, &noisy_path, RenderMode::Cartoon)?;

            let start = Instant::now();
            let c = run_decompose(&noisy, &config)?;
            let seconds = start.elapsed().as_secs_f64();
            let stem = stem(&noisy_path);
            let mut img = image_report(&noisy_path, &noisy, &c, seconds);
            img.noisy_metrics = Some(quality(&noisy, &clean)?);
            img.metrics = Some(quality(&image(c.u.clone()), &clean)?);
            img.outputs = vec![noisy_path.display().to_string()];
            img.outputs.extend(write_components(&c, &solver.out_dir, &stem)?);
            let (n, d) = (img.noisy_metrics.unwrap(), img.metrics.unwrap());
            println!(
                "noisy PSNR {:.2} dB MSSIM {:.4}; cartoon PSNR {:.2} dB MSSIM {:.4}",
                n.psnr_db, n.mssim, d.psnr_db, d.mssim
            );
            let mut report = RunReport::new("denoise-bench", &config);
            report.params.insert("sigma".into(), sigma.into());
            report.params.insert("seed".into(), seed.into());
            report
                .params
                .insert("reference".into(), reference.display().to_string().into());
            finish(report, img, &solver.out_dir, &stem)
        }
        Command::Metrics { a, b } => {
            let (x, y) = (load(&a)?, load(&b)?);
            let q = quality(&x, &y)?;
            println!("{}", serde_json::to_string(&q)?);
            Ok(())
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("CTE_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .with_context(|| format!("CTE_THREADS must be a non-negative integer, got {value:?}"))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global()
        .context("cannot configure the thread pool")?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
