use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cloudmorph::cluster::{assign_to_centroids, constrained_kmeans, ClusterManifest};
use cloudmorph::datagen::{gen_dataset, gen_design, write_dataset, DesignKind, DesignParams};
use cloudmorph::density::style_source_with_noise;
use cloudmorph::metrics::{chamfer, emd_exact, sinkhorn_divergence, SinkhornParams};
use cloudmorph::{
    export_svg, load_auto, normalize_unit_cube, pca_fit, store_auto, BlendRun, Embedder, ExternalEmbedder, OtEmbedder,
    PcaModel, RngSeed, SvgOptions,
};

use crate::{
    BlendArgs, CliError, ClusterArgs, ClusterCount, Command, DesignName, EmbedderArgs, EmbedderKind, ExportSvgArgs,
    FitPcaArgs, GenDatasetArgs, GenDesignArgs, MetricsArgs, Norm, OutputArgs, StyleSampleArgs, StyleTransferArgs,
};

type Outcome = Result<(), CliError>;

pub fn execute(command: Command) -> Outcome {
    match command {
        Command::Cluster(a) => cluster(a),
        Command::Blend(a) => blend(a),
        Command::StyleTransfer(a) => style_transfer(a),
        Command::StyleSample(a) => style_sample(a),
        Command::Metrics(a) => metrics(a),
        Command::GenDataset(a) => dataset(a),
        Command::GenDesign(a) => design(a),
        Command::ExportSvg(a) => svg(a),
        Command::FitPca(a) => fit_pca(a),
    }
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

fn cluster_count(count: &ClusterCount, n: usize) -> Result<usize, CliError> {
    if let Some(k) = count.k {
        if k == 0 {
            return Err(CliError::Usage("--k must be positive".into()));
        }
        return Ok(k);
    }
    if count.cluster_size == 0 {
        return Err(CliError::Usage("--cluster-size must be positive".into()));
    }
    if !n.is_multiple_of(count.cluster_size) {
        return Err(CliError::Data(format!(
            "{n} points cannot be split into clusters of {}; pass --k or --cluster-size",
            count.cluster_size
        )));
    }
    Ok(n / count.cluster_size)
}

fn check_lambdas(lambdas: &[f64]) -> Outcome {
    match lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        Some(l) => Err(CliError::Usage(format!("--lambda must lie in [0, 1], got {l}"))),
        None => Ok(()),
    }
}

/// Clusters are computed and written in the unit-cube frame used by the
/// blending pipelines.
fn cluster(a: ClusterArgs) -> Outcome {
    let (cloud, _) = normalize_unit_cube(&load_auto(&a.input)?);
    let set = match &a.centroids {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let manifest: ClusterManifest = text.parse()?;
            if cloud.len() != manifest.k * manifest.m {
                return Err(CliError::Data(format!(
                    "{} has {} points but the manifest describes {} clusters of {}",
                    a.input.display(),
                    cloud.len(),
                    manifest.k,
                    manifest.m
                )));
            }
            assign_to_centroids(&cloud, &manifest.centroids)?
        }
        None => {
            let k = cluster_count(&a.count, cloud.len())?;
            constrained_kmeans(&cloud, k, RngSeed(a.seed), a.max_iters)?
        }
    };
    set.write_dir(&a.out_dir)?;
    println!(
        "{} clusters of {} points, {} iterations, objective {}",
        set.k(),
        set.m(),
        set.iterations,
        set.objective
    );
    Ok(())
}

fn embedder(args: &EmbedderArgs, m: usize) -> Result<Box<dyn Embedder>, CliError> {
    let model = |what: &str| -> Result<PcaModel, CliError> {
        let path = args
            .pca_model
            .as_ref()
            .ok_or_else(|| CliError::Usage(format!("--embedder {what} requires --pca-model")))?;
        Ok(PcaModel::load(path)?)
    };
    let e: Box<dyn Embedder> = match args.embedder {
        EmbedderKind::Ot => Box::new(OtEmbedder::new(m)?),
        EmbedderKind::Pca => Box::new(model("pca")?),
        EmbedderKind::External => {
            let dir = args
                .latent_dir
                .as_ref()
                .ok_or_else(|| CliError::Usage("--embedder external requires --latent-dir".into()))?;
            let mut ext = ExternalEmbedder::new(model("external")?);
            ext.load_dir(dir)?;
            Box::new(ext)
        }
    };
    if e.input_size() != m {
        return Err(CliError::Data(format!(
            "embedder expects clusters of {} points, but clusters have {m}",
            e.input_size()
        )));
    }
    Ok(e)
}

fn write_outputs(run: &BlendRun, prefix: &str, out: &OutputArgs) -> Outcome {
    create_dir(&out.out_dir)?;
    for (lambda, cloud) in run.lambdas.iter().zip(&run.outputs) {
        let path = out.out_dir.join(format!("{prefix}_{lambda}.ply"));
        store_auto(cloud, &path)?;
        if out.svg {
            export_svg(
                cloud,
                out.svg_axis.index(),
                path.with_extension("svg"),
                &SvgOptions::default(),
            )?;
        }
        println!("lambda {lambda}: {} points -> {}", cloud.len(), path.display());
    }
    Ok(())
}

fn blend(a: BlendArgs) -> Outcome {
    check_lambdas(&a.lambda)?;
    let (x, y) = (load_auto(&a.a)?, load_auto(&a.b)?);
    let k = cluster_count(&a.count, x.len())?;
    if !x.len().is_multiple_of(k) {
        return Err(CliError::Data(format!(
            "{} points cannot form {k} equal clusters",
            x.len()
        )));
    }
    let e = embedder(&a.embedder, x.len() / k)?;
    let seed = RngSeed(a.seed);
    let run = if a.naive_match {
        let seed_b = RngSeed(a.seed_b.unwrap_or(a.seed));
        cloudmorph::naive_match_blend(&x, &y, &a.lambda, k, e.as_ref(), seed, seed_b)?
    } else {
        cloudmorph::blend_sweep(&x, &y, &a.lambda, k, e.as_ref(), seed)?
    };
    write_outputs(&run, "blend", &a.output)
}

fn style_transfer(a: StyleTransferArgs) -> Outcome {
    check_lambdas(&a.lambda)?;
    let (x, design) = (load_auto(&a.input)?, load_auto(&a.design)?);
    let k = cluster_count(&a.count, x.len())?;
    if !x.len().is_multiple_of(k) {
        return Err(CliError::Data(format!(
            "{} points cannot form {k} equal clusters",
            x.len()
        )));
    }
    let e = embedder(&a.embedder, x.len() / k)?;
    let run = cloudmorph::style_transfer_pipeline(&x, &design, &a.lambda, k, e.as_ref(), a.bandwidth, RngSeed(a.seed))?;
    write_outputs(&run.blend, "style", &a.output)?;
    let path = a.output.out_dir.join("style_source.ply");
    store_auto(&run.style_source, &path)?;
    if a.output.svg {
        export_svg(
            &run.style_source,
            a.output.svg_axis.index(),
            path.with_extension("svg"),
            &SvgOptions::default(),
        )?;
    }
    Ok(())
}

/// Samples are drawn in the input's unit-cube frame and written back in its
/// original coordinates.
fn style_sample(a: StyleSampleArgs) -> Outcome {
    let (x, design) = (load_auto(&a.input)?, load_auto(&a.design)?);
    let (xn, transform) = normalize_unit_cube(&x);
    let design = if design.within_unit_cube() {
        design
    } else {
        normalize_unit_cube(&design).0
    };
    let sample = style_source_with_noise(&xn, &design, a.bandwidth, a.noise, RngSeed(a.seed))?;
    store_auto(&transform.invert(&sample), &a.out)?;
    println!("{} points -> {}", sample.len(), a.out.display());
    Ok(())
}

fn metrics(a: MetricsArgs) -> Outcome {
    let (x, y) = (load_auto(&a.a)?, load_auto(&a.b)?);
    let mut rows: Vec<(&str, f64, f64)> = Vec::new();
    let scale = |v: f64| match a.emd_norm {
        Norm::Sum => v * x.len() as f64,
        Norm::Mean => v,
    };

    let t = Instant::now();
    let c = chamfer(&x, &y);
    rows.push(("chamfer", c, t.elapsed().as_secs_f64()));
    if !a.no_sinkhorn {
        let params = SinkhornParams {
            blur: a.blur,
            scaling: a.scaling,
            max_iters: a.max_iters,
            tolerance: a.tolerance,
        };
        let t = Instant::now();
        let out = sinkhorn_divergence(&x, &y, &params)?;
        if !out.converged {
            eprintln!(
                "warning: sinkhorn did not converge within {} iterations",
                out.iterations
            );
        }
        // Sinkhorn is per unit mass; totals refer to the first cloud's size.
        rows.push(("sinkhorn", scale(out.value), t.elapsed().as_secs_f64()));
    }
    if a.exact_emd {
        let t = Instant::now();
        let (total, _) = emd_exact(&x, &y)?;
        let value = match a.emd_norm {
            Norm::Sum => total,
            Norm::Mean => total / x.len() as f64,
        };
        rows.push(("emd", value, t.elapsed().as_secs_f64()));
    }

    if a.csv {
        println!("metric,value,seconds");
        for (name, value, secs) in rows {
            println!("{name},{value},{secs:.6}");
        }
    } else {
        for (name, value, secs) in rows {
            println!("{name:<10} {value:<24} {secs:.3}s");
        }
    }
    Ok(())
}

fn dataset(a: GenDatasetArgs) -> Outcome {
    if a.count == 0 || a.points == 0 {
        return Err(CliError::Usage("--count and --points must be positive".into()));
    }
    let entries = gen_dataset(a.count, a.points, RngSeed(a.seed))?;
    write_dataset(&entries, &a.out_dir)?;
    println!(
        "{} clouds of {} points -> {}",
        entries.len(),
        a.points,
        a.out_dir.display()
    );
    Ok(())
}

fn design(a: GenDesignArgs) -> Outcome {
    let kind = match a.kind {
        DesignName::Stripes => DesignKind::Stripes,
        DesignName::Porous => DesignKind::Porous,
        DesignName::Cuts => DesignKind::Cuts,
    };
    let seed = RngSeed(a.seed);
    let mut params = DesignParams::default_for(kind, seed.derive(0));
    if let DesignParams::Stripes { period, thickness, .. } = &mut params {
        if let Some(p) = a.period {
            *period = p;
        }
        if let Some(t) = a.thickness {
            *thickness = t;
        }
    } else if a.period.is_some() || a.thickness.is_some() {
        return Err(CliError::Usage("--period and --thickness apply to stripes only".into()));
    }
    let cloud = gen_design(&params, a.points, seed.derive(1))?;
    create_dir(&a.out_dir)?;
    let name = format!("design_{}.ply", kind.name());
    store_auto(&cloud, a.out_dir.join(&name))?;
    let manifest = format!("{name} {} seed={} {params}\n", kind.name(), a.seed);
    let path = a.out_dir.join("manifest.txt");
    fs::write(&path, manifest).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    println!("{} points -> {}", cloud.len(), a.out_dir.join(name).display());
    Ok(())
}

fn svg(a: ExportSvgArgs) -> Outcome {
    let cloud = load_auto(&a.input)?;
    let options = SvgOptions {
        size: a.size,
        radius: a.radius,
        ..SvgOptions::default()
    };
    let valid = a.size > 2.0 * options.margin && a.radius > 0.0;
    if !valid {
        return Err(CliError::Usage(format!(
            "--size must exceed {} and --radius must be positive",
            2.0 * options.margin
        )));
    }
    export_svg(&cloud, a.axis.index(), &a.out, &options)?;
    Ok(())
}

fn fit_pca(a: FitPcaArgs) -> Outcome {
    let mut paths: Vec<PathBuf> = fs::read_dir(&a.clusters)
        .map_err(|e| CliError::Data(format!("{}: {e}", a.clusters.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "ply"))
        .collect();
    paths.sort();
    let clusters = paths.iter().map(load_auto).collect::<cloudmorph::Result<Vec<_>>>()?;
    let model = pca_fit(&clusters, a.dim)?;
    model.save(&a.out)?;
    println!(
        "fitted {} directions on {} clusters of {} points -> {}",
        a.dim,
        clusters.len(),
        model.cluster_size(),
        a.out.display()
    );
    Ok(())
}
