use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use fsi_core::assets::{bundled_corpus, bundled_ordering, bundled_scene};
use fsi_core::io::{load_luma, read_scene, write_gray, write_gray8};
use fsi_core::metrics::{finest_resolvable, render_usaf_chart, ElementResolution, UsafChart};
use fsi_core::rng::derive_seed;
use fsi_core::{
    acquire_spectrum, binarize_pattern, circular_mask, full_mask, gaussian_random_mask,
    ingest_corpus, phase_shift_set, psnr, radial_mask, reconstruct_cs, reconstruct_ift, ssim,
    HalfPlaneMap, ImportanceOrder, NoiseModel, PartialSpectrum, RealField, SamplingMask,
    SceneImage, SsimParams, Strategy,
};
use log::info;
use rayon::prelude::*;

use crate::args::*;
use crate::config::{ConfigFile, RunConfig};
use crate::montage::montage;

pub fn run(cli: Cli) -> Result<()> {
    let (cfg, file) = RunConfig::resolve(&cli.global)?;
    match cli.command {
        Command::Importance(ImportanceCommand::Build(a)) => importance_build(cfg, a),
        Command::Mask(MaskCommand::Gen(a)) => mask_gen(cfg.with_mask(&a.mask)?, a),
        Command::Pattern(PatternCommand::Export(a)) => pattern_export(cfg.with_mask(&a.mask)?, a),
        Command::Simulate(a) => {
            let cfg = cfg
                .with_scene(&a.scene)
                .with_mask(&a.mask)?
                .with_noise(a.noise_sigma);
            simulate(cfg, a)
        }
        Command::Reconstruct(a) => {
            let cfg = cfg.with_method(a.method).with_solver(&a.solver);
            reconstruct(cfg, a)
        }
        Command::Evaluate(a) => evaluate(cfg.with_scene(&a.scene), a),
        Command::Compare(a) => compare(cfg, &file, a),
        Command::Pipeline(a) => {
            let cfg = cfg
                .with_scene(&a.scene)
                .with_mask(&a.mask)?
                .with_method(a.method)
                .with_noise(a.noise_sigma)
                .with_solver(&a.solver);
            pipeline(cfg)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn ensure_parent(path: &Path) -> Result<()> {
    drop(create(path)?);
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn ordering(cfg: &RunConfig) -> Result<Arc<ImportanceOrder>> {
    let order = match &cfg.ordering {
        Some(p) => Arc::new(
            ImportanceOrder::read_csv(open(p)?)
                .with_context(|| format!("reading {}", p.display()))?,
        ),
        None => bundled_ordering(cfg.size)?,
    };
    if order.n() != cfg.size {
        bail!("ordering is for n={} but size is {}", order.n(), cfg.size);
    }
    Ok(order)
}

fn build_mask(cfg: &RunConfig, strategy: Strategy) -> Result<SamplingMask> {
    let n = cfg.size;
    Ok(match strategy {
        Strategy::GaussianRandom => gaussian_random_mask(
            ordering(cfg)?.as_ref(),
            cfg.eta,
            derive_seed(cfg.seed, "mask"),
        )?,
        Strategy::Circular => circular_mask(n, cfg.eta)?,
        Strategy::Radial => radial_mask(n, cfg.eta)?,
        Strategy::Full => full_mask(n)?,
    })
}

fn mask_from(cfg: &RunConfig, mask_file: Option<&Path>) -> Result<SamplingMask> {
    match mask_file {
        Some(p) => {
            let mask = SamplingMask::read_csv(open(p)?)
                .with_context(|| format!("reading {}", p.display()))?;
            if mask.n() != cfg.size {
                bail!("mask is for n={} but size is {}", mask.n(), cfg.size);
            }
            Ok(mask)
        }
        None => {
            cfg.validate()?;
            build_mask(cfg, cfg.strategy)
        }
    }
}

fn noise(cfg: &RunConfig) -> Result<NoiseModel> {
    Ok(NoiseModel::gaussian(
        cfg.noise_sigma,
        derive_seed(cfg.seed, "noise"),
    )?)
}

/// The image being imaged, plus its chart geometry when it is a chart.
struct Reference {
    scene: SceneImage,
    chart: Option<UsafChart>,
}

fn reference(cfg: &RunConfig) -> Result<Reference> {
    match cfg.target {
        Target::Usaf => {
            let chart = render_usaf_chart(cfg.size, cfg.chart_scale)?;
            Ok(Reference {
                scene: chart.image.clone(),
                chart: Some(chart),
            })
        }
        Target::Scene => {
            let scene = match &cfg.scene {
                Some(p) => {
                    read_scene(p).with_context(|| format!("reading scene {}", p.display()))?
                }
                None => bundled_scene(cfg.size)?,
            };
            if scene.width() != cfg.size {
                bail!(
                    "scene is {0}x{0} but size is {1}; pass --size {0}",
                    scene.width(),
                    cfg.size
                );
            }
            Ok(Reference { scene, chart: None })
        }
    }
}

fn accounting(mask: &SamplingMask) -> String {
    let map_len = HalfPlaneMap::new(mask.n()).map(|m| m.len()).unwrap_or(0);
    format!(
        "{} {} of {} half-plane coefficients marked ({:.2}%), {} measurements",
        mask.strategy.as_str(),
        mask.marked_count(),
        map_len,
        100.0 * mask.marked_count() as f64 / map_len.max(1) as f64,
        3 * mask.marked_count()
    )
}

fn recover(cfg: &RunConfig, partial: &PartialSpectrum, method: Method) -> Result<RealField> {
    Ok(match method {
        Method::Ift => reconstruct_ift(partial)?,
        Method::Cs => {
            let r = reconstruct_cs(partial, &cfg.solver)?;
            info!(
                "cs: {} iterations, tv {:.4}, fidelity residual {:.2e}{}",
                r.iterations_used,
                r.objective_trace.last().copied().unwrap_or(f64::NAN),
                r.final_fidelity_residual,
                if r.stalled { ", stalled" } else { "" }
            );
            r.image
        }
    })
}

/// One line of an evaluation report.
struct EvalRow {
    method: String,
    strategy: String,
    eta: Option<f64>,
    seed: u64,
    marked: Option<usize>,
    ssim: f64,
    psnr: f64,
    elements: Vec<ElementResolution>,
}

fn score(reference: &Reference, image: &RealField) -> Result<(f64, f64, Vec<ElementResolution>)> {
    let truth = reference.scene.field();
    if !image.same_shape(truth) {
        bail!(
            "image is {}x{} but the reference is {}x{}",
            image.width(),
            image.height(),
            truth.width(),
            truth.height()
        );
    }
    let s = ssim(image, truth, &SsimParams::default())?;
    let p = psnr(image, truth)?;
    let elements = match &reference.chart {
        Some(chart) => chart.evaluate(image)?,
        None => Vec::new(),
    };
    Ok((s, p, elements))
}

fn write_report(path: &Path, rows: &[EvalRow]) -> Result<()> {
    let mut out = create(path)?;
    let mut header = String::from(
        "method,strategy,eta,seed,marked,measurements,ssim,psnr,finest_resolvable_group,finest_resolvable_element",
    );
    if let Some(first) = rows.first() {
        for e in &first.elements {
            write!(
                header,
                ",g{0}e{1}_v_contrast,g{0}e{1}_h_contrast",
                e.group, e.element
            )?;
        }
    }
    writeln!(out, "{header}")?;
    for r in rows {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let psnr = if r.psnr.is_infinite() {
            "inf".to_string()
        } else {
            format!("{:.6}", r.psnr)
        };
        let finest = finest_resolvable(&r.elements);
        let mut line = format!(
            "{},{},{},{},{},{},{:.6},{},{},{}",
            r.method,
            r.strategy,
            opt(r.eta.map(|e| e.to_string())),
            r.seed,
            opt(r.marked.map(|m| m.to_string())),
            opt(r.marked.map(|m| (3 * m).to_string())),
            r.ssim,
            psnr,
            opt(finest.map(|e| e.group.to_string())),
            opt(finest.map(|e| e.element.to_string())),
        );
        for e in &r.elements {
            write!(
                line,
                ",{:.6},{:.6}",
                e.vertical.contrast, e.horizontal.contrast
            )?;
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn importance_build(cfg: RunConfig, a: ImportanceBuildArgs) -> Result<()> {
    let n = cfg.size;
    let corpus = match &a.corpus {
        Some(dir) => {
            ingest_corpus(dir, n).with_context(|| format!("reading corpus {}", dir.display()))?
        }
        None => bundled_corpus(n)?,
    };
    let order = ImportanceOrder::from_corpus(&corpus, n)?;
    let path = a
        .out
        .unwrap_or_else(|| cfg.out_dir.join(format!("importance_{n}.csv")));
    let mut out = create(&path)?;
    order.write_csv(&mut out)?;
    out.flush()?;
    info!(
        "{} blocks from {} files, corpus {}; wrote {}",
        corpus.blocks.len(),
        corpus.files_used,
        &corpus.content_hash[..12.min(corpus.content_hash.len())],
        path.display()
    );
    Ok(())
}

fn write_mask(mask: &SamplingMask, prefix: &Path) -> Result<()> {
    let png = prefix.with_extension("png");
    ensure_parent(&png)?;
    mask.write_png(&png)?;
    let mut out = create(&prefix.with_extension("csv"))?;
    mask.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn mask_gen(cfg: RunConfig, a: MaskGenArgs) -> Result<()> {
    let mask = mask_from(&cfg, None)?;
    let prefix = a.out.unwrap_or_else(|| cfg.out_dir.join("mask"));
    write_mask(&mask, &prefix)?;
    info!("{}", accounting(&mask));
    info!(
        "wrote {}.png and {}.csv",
        prefix.display(),
        prefix.display()
    );
    Ok(())
}

fn pattern_export(cfg: RunConfig, a: PatternExportArgs) -> Result<()> {
    let mask = mask_from(&cfg, a.mask_file.as_deref())?;
    let n = mask.n();
    let map = HalfPlaneMap::new(n)?;
    let dir = a.out.unwrap_or_else(|| cfg.out_dir.join("patterns"));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let entries: Vec<(usize, usize)> = mask
        .sequence()
        .take(a.limit.unwrap_or(usize::MAX))
        .collect();

    entries
        .par_iter()
        .enumerate()
        .try_for_each(|(i, &(_, index))| -> Result<()> {
            let set = phase_shift_set(n, map.entry(index))?;
            for (s, pattern) in set.patterns.iter().enumerate() {
                let stem = format!("p{:06}", 3 * i + s);
                write_gray(&dir.join(format!("{stem}.pgm")), &pattern.values)?;
                if a.binary {
                    let packed = binarize_pattern(pattern).to_packed()?;
                    fs::write(dir.join(format!("{stem}.fsib")), packed)?;
                }
            }
            Ok(())
        })?;

    let mut manifest = create(&dir.join("manifest.csv"))?;
    writeln!(manifest, "index,k,u,v,step")?;
    for (i, &(label, index)) in entries.iter().enumerate() {
        let f = map.entry(index);
        for s in 0..3 {
            writeln!(
                manifest,
                "{},{},{},{},{}",
                3 * i + s,
                label,
                f.u,
                f.v,
                s + 1
            )?;
        }
    }
    manifest.flush()?;
    info!("{}", accounting(&mask));
    info!("wrote {} patterns to {}", 3 * entries.len(), dir.display());
    Ok(())
}

fn simulate(cfg: RunConfig, a: SimulateArgs) -> Result<()> {
    cfg.validate()?;
    let reference = reference(&cfg)?;
    let mask = mask_from(&cfg, a.mask_file.as_deref())?;
    let partial = acquire_spectrum(&reference.scene, &mask, &noise(&cfg)?)?;
    let path = a.out.unwrap_or_else(|| cfg.out_dir.join("spectrum.csv"));
    let mut out = create(&path)?;
    partial.write_csv(&mut out)?;
    out.flush()?;
    info!("{}", accounting(&mask));
    info!("wrote {}", path.display());
    Ok(())
}

fn reconstruct(cfg: RunConfig, a: ReconstructArgs) -> Result<()> {
    cfg.solver.validate()?;
    let partial = PartialSpectrum::read_csv(open(&a.input)?)
        .with_context(|| format!("reading {}", a.input.display()))?;
    let image = recover(&cfg, &partial, cfg.method)?;
    let path = a.out.unwrap_or_else(|| {
        cfg.out_dir
            .join(format!("recon_{}.png", cfg.method.as_str()))
    });
    ensure_parent(&path)?;
    write_gray(&path, &image)?;
    info!("{}", accounting(partial.mask()));
    info!("wrote {}", path.display());
    Ok(())
}

fn evaluate(cfg: RunConfig, a: EvaluateArgs) -> Result<()> {
    let image = load_luma(&a.image).with_context(|| format!("reading {}", a.image.display()))?;
    let mut cfg = cfg;
    if a.scene.scene.is_none() && cfg.target == Target::Scene && cfg.scene.is_none() {
        cfg.size = image.width();
    }
    let reference = reference(&cfg)?;
    let (ssim, psnr, elements) = score(&reference, &image)?;
    let row = EvalRow {
        method: a.method.map(|m| m.as_str().to_string()).unwrap_or_default(),
        strategy: a.strategy.unwrap_or_default(),
        eta: a.eta,
        seed: cfg.seed,
        marked: None,
        ssim,
        psnr,
        elements,
    };
    let path = a.out.unwrap_or_else(|| cfg.out_dir.join("metrics.csv"));
    write_report(&path, std::slice::from_ref(&row))?;
    info!(
        "ssim {ssim:.4}, psnr {psnr:.2} dB; wrote {}",
        path.display()
    );
    Ok(())
}

fn label(strategy: Strategy, method: Method) -> String {
    format!("{}+{}", strategy.as_str(), method.as_str())
}

fn compare(cfg: RunConfig, file: &ConfigFile, a: CompareArgs) -> Result<()> {
    let mut cfg = cfg
        .with_scene(&a.scene)
        .with_noise(a.noise_sigma)
        .with_solver(&a.solver);
    if let Some(e) = a.eta {
        cfg.eta = e;
    }
    if let Some(o) = a.ordering {
        cfg.ordering = Some(o);
    }
    let strategies: Vec<Strategy> = match a.strategies {
        Some(list) => list
            .iter()
            .map(|s| s.trim().parse())
            .collect::<Result<_, _>>()?,
        None => match file.get::<String>("strategies")? {
            Some(s) => s
                .split(',')
                .map(|s| s.trim().parse())
                .collect::<Result<_, _>>()?,
            None => vec![
                Strategy::GaussianRandom,
                Strategy::Circular,
                Strategy::Radial,
            ],
        },
    };
    let methods: Vec<Method> = match a.methods {
        Some(m) => m,
        None => match file.get::<String>("methods")? {
            Some(s) => s
                .split(',')
                .map(|m| m.trim().parse().map_err(anyhow::Error::msg))
                .collect::<Result<_>>()?,
            None => vec![Method::Ift, Method::Cs],
        },
    };
    if strategies.is_empty() || methods.is_empty() {
        bail!("compare needs at least one strategy and one method");
    }
    for &s in &strategies {
        RunConfig {
            strategy: s,
            ..cfg.clone()
        }
        .validate()?;
    }

    let reference = reference(&cfg)?;
    let noise = noise(&cfg)?;
    let spectra: Vec<PartialSpectrum> = strategies
        .par_iter()
        .map(|&s| -> Result<PartialSpectrum> {
            let mask = build_mask(&cfg, s)?;
            Ok(acquire_spectrum(&reference.scene, &mask, &noise)?)
        })
        .collect::<Result<_>>()?;
    for p in &spectra {
        info!("{}", accounting(p.mask()));
    }

    let cells: Vec<(usize, Method)> = (0..strategies.len())
        .flat_map(|i| methods.iter().map(move |&m| (i, m)))
        .collect();
    let results: Vec<(RealField, EvalRow)> = cells
        .par_iter()
        .map(|&(i, method)| -> Result<(RealField, EvalRow)> {
            let image = recover(&cfg, &spectra[i], method)?;
            let (ssim, psnr, elements) = score(&reference, &image)?;
            let row = EvalRow {
                method: method.as_str().to_string(),
                strategy: strategies[i].as_str().to_string(),
                eta: Some(cfg.eta),
                seed: cfg.seed,
                marked: Some(spectra[i].mask().marked_count()),
                ssim,
                psnr,
                elements,
            };
            Ok((image, row))
        })
        .collect::<Result<_>>()?;

    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let mut tiles = Vec::with_capacity(results.len());
    let mut rows = Vec::with_capacity(results.len());
    for ((i, method), (image, row)) in cells.iter().zip(results) {
        let name = label(strategies[*i], *method);
        write_gray(
            &cfg.out_dir.join(format!(
                "recon_{}_{}.png",
                strategies[*i].as_str(),
                method.as_str()
            )),
            &image,
        )?;
        info!("{name}: ssim {:.4}", row.ssim);
        tiles.push((name, image));
        rows.push(row);
    }
    write_report(&cfg.out_dir.join("compare.csv"), &rows)?;
    write_gray8(&cfg.out_dir.join("montage.png"), &montage(&tiles))?;
    info!(
        "wrote compare.csv and montage.png to {}",
        cfg.out_dir.display()
    );
    Ok(())
}

fn pipeline(cfg: RunConfig) -> Result<()> {
    cfg.validate()?;
    let reference = reference(&cfg)?;
    let mask = build_mask(&cfg, cfg.strategy)?;
    info!("{}", accounting(&mask));
    let out_dir: PathBuf = cfg.out_dir.clone();
    write_mask(&mask, &out_dir.join("mask"))?;

    let partial = acquire_spectrum(&reference.scene, &mask, &noise(&cfg)?)?;
    let mut out = create(&out_dir.join("spectrum.csv"))?;
    partial.write_csv(&mut out)?;
    out.flush()?;

    let image = recover(&cfg, &partial, cfg.method)?;
    write_gray(&out_dir.join("recon.png"), &image)?;
    write_gray(&out_dir.join("recon.pgm"), &image)?;
    if let Some(chart) = &reference.chart {
        let mut geo = create(&out_dir.join("chart.csv"))?;
        chart.write_geometry_csv(&mut geo)?;
        geo.flush()?;
    }

    let (ssim, psnr, elements) = score(&reference, &image)?;
    let row = EvalRow {
        method: cfg.method.as_str().to_string(),
        strategy: cfg.strategy.as_str().to_string(),
        eta: Some(cfg.eta),
        seed: cfg.seed,
        marked: Some(mask.marked_count()),
        ssim,
        psnr,
        elements,
    };
    write_report(&out_dir.join("metrics.csv"), std::slice::from_ref(&row))?;
    if let Some(f) = finest_resolvable(&row.elements) {
        info!(
            "finest resolvable element: group {} element {}",
            f.group, f.element
        );
    }
    info!(
        "ssim {ssim:.4}, psnr {psnr:.2} dB; outputs in {}",
        out_dir.display()
    );
    Ok(())
}
