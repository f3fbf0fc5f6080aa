//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p cloudmorph --test acceptance`.

mod common;

use std::time::Instant;

use cloudmorph::cluster::assignment_cost;
use cloudmorph::datagen::{
    bridge, gen_dataset, gen_design, gen_shape, wall_slab, wall_slab_block, DesignKind, DesignParams, ShapeKind,
    ShapeParams,
};
use cloudmorph::density::{Density, DEFAULT_BANDWIDTH, DEFAULT_NOISE};
use cloudmorph::{
    blend_pipeline, chamfer, cluster_assignment, constrained_kmeans, emd_exact, export_svg, kde_evaluate, load_auto,
    multiset_eq, naive_match_blend, sinkhorn_divergence, store_auto, style_transfer_pipeline, OtEmbedder, Point3,
    PointCloud, RngSeed, SinkhornParams, SvgOptions,
};
use common::{best_labeling, chamfer_brute, crossing_split_seeds, emd_brute, four_blobs, random_cloud};
use rand::Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(secs: f64, limit: f64) -> Result<(), String> {
    ensure(secs < limit, || format!("took {secs:.2}s, limit {limit}s"))
}

fn balanced_clustering() -> Check {
    let start = Instant::now();
    let mut rng = RngSeed(1).rng();
    for trial in 0..50u64 {
        let k = rng.random_range(1..=3usize);
        let m = rng.random_range(1..=12 / k);
        let n = k * m;
        let points = random_cloud(n, 10_000 + trial);
        let centroids = random_cloud(k, 20_000 + trial).into_points();
        let a = cluster_assignment(&points, &centroids, m).map_err(|e| e.to_string())?;
        for h in 0..k {
            ensure(a.members(h).len() == m, || {
                format!("instance {trial}: cluster {h} is unbalanced")
            })?;
        }
        let got = assignment_cost(&points, &a, &centroids);
        let (best, _) = best_labeling(&points, &centroids);
        ensure(got == best, || {
            format!("instance {trial} (n={n}, k={k}): cost {got} vs optimum {best}")
        })?;
    }
    let secs = start.elapsed().as_secs_f64();
    within_time(secs, 5.0)?;
    Ok(format!("50 instances optimal, {secs:.2}s"))
}

fn kmeans_convergence() -> Check {
    let mut rng = RngSeed(2).rng();
    let mut worst_iters = 0;
    for trial in 0..20u64 {
        let k = rng.random_range(1..=8usize);
        let m = rng.random_range(1..=4096 / k);
        let points = random_cloud(k * m, 30_000 + trial);
        let set = constrained_kmeans(&points, k, RngSeed(trial), 100).map_err(|e| e.to_string())?;
        for (i, w) in set.objective_trace.windows(2).enumerate() {
            ensure(w[1] <= w[0] + 1e-9, || {
                format!("instance {trial}: objective rose at round {}", i + 2)
            })?;
        }
        ensure(set.iterations <= 100, || {
            format!("instance {trial}: {} rounds", set.iterations)
        })?;
        worst_iters = worst_iters.max(set.iterations);
    }
    Ok(format!("20 instances monotone, at most {worst_iters} rounds"))
}

fn exact_emd() -> Check {
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let x = random_cloud(6, 40_000 + 2 * trial);
        let y = random_cloud(6, 40_001 + 2 * trial);
        let (got, _) = emd_exact(&x, &y).map_err(|e| e.to_string())?;
        let (best, _) = emd_brute(&x, &y);
        worst = worst.max((got - best).abs());
        ensure((got - best).abs() <= 1e-9, || format!("pair {trial}: {got} vs {best}"))?;
    }
    for trial in 0..100u64 {
        let c: Vec<PointCloud> = (0..3).map(|i| random_cloud(6, 50_000 + 3 * trial + i)).collect();
        let d = |a: usize, b: usize| emd_exact(&c[a], &c[b]).unwrap().0;
        ensure((d(0, 1) - d(1, 0)).abs() <= 1e-9, || {
            format!("triple {trial}: asymmetric")
        })?;
        ensure(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-9, || {
            format!("triple {trial}: triangle inequality")
        })?;
    }
    Ok(format!(
        "100 pairs, max deviation {worst:.1e}; 100 triples satisfy the axioms"
    ))
}

fn sinkhorn_fidelity() -> Check {
    let start = Instant::now();
    let params = SinkhornParams {
        blur: 1e-3,
        scaling: 0.9,
        ..SinkhornParams::default()
    };
    let mut worst_rel = 0.0f64;
    let mut worst_self = 0.0f64;
    for trial in 0..20u64 {
        let x = random_cloud(64, 60_000 + 2 * trial);
        let y = random_cloud(64, 60_001 + 2 * trial);
        let exact = emd_exact(&x, &y).map_err(|e| e.to_string())?.0 / 64.0;
        let s = sinkhorn_divergence(&x, &y, &params).map_err(|e| e.to_string())?.value;
        worst_rel = worst_rel.max(((s - exact) / exact).abs());
        let own = sinkhorn_divergence(&x, &x, &params).map_err(|e| e.to_string())?.value;
        worst_self = worst_self.max(own.abs());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst_rel < 0.05, || format!("relative error {worst_rel:.3e}"))?;
    ensure(worst_self <= 1e-7, || format!("self divergence {worst_self:.1e}"))?;
    within_time(secs, 60.0)?;
    Ok(format!(
        "max relative error {worst_rel:.2e}, max self divergence {worst_self:.1e}, {secs:.1}s"
    ))
}

fn chamfer_exact() -> Check {
    let mut rng = RngSeed(3).rng();
    for trial in 0..50u64 {
        let (n, m) = (rng.random_range(1..=512), rng.random_range(1..=512));
        let x = random_cloud(n, 70_000 + 2 * trial);
        let y = random_cloud(m, 70_001 + 2 * trial);
        let got = chamfer(&x, &y);
        ensure(got == chamfer_brute(&x, &y), || {
            format!("pair {trial} ({n}x{m}) differs from brute force")
        })?;
        ensure(got == chamfer(&y, &x), || format!("pair {trial}: asymmetric"))?;
        ensure(chamfer(&x, &x) == 0.0, || {
            format!("pair {trial}: non-zero self distance")
        })?;
    }
    Ok("50 pairs equal brute force exactly".into())
}

fn self_blend_identity() -> Check {
    let start = Instant::now();
    let x = random_cloud(4096, 4);
    for k in [1, 4, 16] {
        let e = OtEmbedder::new(4096 / k).map_err(|e| e.to_string())?;
        for lambda in [0.0, 0.25, 0.5, 1.0] {
            let out = blend_pipeline(&x, &x, lambda, k, &e, RngSeed(5)).map_err(|e| e.to_string())?;
            ensure(multiset_eq(&out, &x, 1e-9), || {
                format!("k={k}, lambda={lambda}: output differs from X")
            })?;
        }
    }
    let identity_secs = start.elapsed().as_secs_f64();

    let blobs = four_blobs(16, 13);
    let (seed_lr, seed_bt) = crossing_split_seeds(&blobs);
    let e = OtEmbedder::new(32).map_err(|e| e.to_string())?;
    let reference = blend_pipeline(&blobs, &blobs, 0.5, 2, &e, RngSeed(seed_lr)).map_err(|e| e.to_string())?;
    let naive = naive_match_blend(&blobs, &blobs, &[0.5], 2, &e, RngSeed(seed_lr), RngSeed(seed_bt))
        .map_err(|e| e.to_string())?;
    let (total, _) = emd_exact(&naive.outputs[0], &reference).map_err(|e| e.to_string())?;
    let per_point = total / blobs.len() as f64;
    ensure(per_point >= 0.2, || {
        format!("naive matching EMD per point {per_point:.3} < 0.2")
    })?;
    Ok(format!(
        "12 self blends exact ({identity_secs:.1}s); naive matching EMD per point {per_point:.3}"
    ))
}

fn style_endpoints() -> Check {
    let thickness = 0.05;
    let x = wall_slab(4096, thickness, RngSeed(6)).map_err(|e| e.to_string())?;
    let design = gen_design(
        &DesignParams::default_for(DesignKind::Stripes, RngSeed(7)),
        65_536,
        RngSeed(8),
    )
    .map_err(|e| e.to_string())?;
    let e = OtEmbedder::new(2048).map_err(|e| e.to_string())?;
    let run = style_transfer_pipeline(&x, &design, &[1.0, 0.0], 2, &e, DEFAULT_BANDWIDTH, RngSeed(9))
        .map_err(|e| e.to_string())?;
    ensure(multiset_eq(&run.blend.outputs[0], &x, 1e-9), || {
        "lambda=1 does not reproduce X".into()
    })?;
    ensure(multiset_eq(&run.blend.outputs[1], &run.style_source, 1e-9), || {
        "lambda=0 does not reproduce the style source".into()
    })?;
    let slab = wall_slab_block(thickness);
    let bound = 3.0 * DEFAULT_BANDWIDTH + 3.0 * DEFAULT_NOISE;
    let near = run.style_source.iter().filter(|&&p| slab.distance(p) <= bound).count();
    let share = near as f64 / run.style_source.len() as f64;
    ensure(share >= 0.99, || {
        format!("only {:.2}% of the style source near X", 100.0 * share)
    })?;
    Ok(format!(
        "endpoints exact; {:.2}% of the style source within {bound} of X",
        100.0 * share
    ))
}

fn kde_accuracy() -> Check {
    ensure(DEFAULT_BANDWIDTH == 0.01, || {
        format!("default bandwidth is {DEFAULT_BANDWIDTH}")
    })?;
    let source = random_cloud(2000, 10);
    let density = Density::new(source.clone(), DEFAULT_BANDWIDTH).map_err(|e| e.to_string())?;
    let sigma2 = DEFAULT_BANDWIDTH * DEFAULT_BANDWIDTH;
    let norm = (2.0 * std::f64::consts::PI * sigma2).powf(-1.5) / source.len() as f64;
    let mut worst = 0.0f64;
    for q in random_cloud(1000, 11).iter() {
        let direct: f64 = source
            .iter()
            .map(|p| (-p.dist2(*q) / (2.0 * sigma2)).exp())
            .sum::<f64>()
            * norm;
        let fast = kde_evaluate(&density, *q);
        let rel = if direct == 0.0 {
            fast.abs()
        } else {
            ((fast - direct) / direct).abs()
        };
        worst = worst.max(rel);
    }
    ensure(worst <= 1e-12, || format!("relative error {worst:.1e}"))?;
    Ok(format!("1000 queries, max relative error {worst:.1e}; bandwidth 0.01"))
}

fn dataset_generators() -> Check {
    let center = Point3::splat(0.5);
    let binomial_ok = |count: usize, n: usize, p: f64| {
        let n = n as f64;
        (count as f64 - n * p).abs() <= 3.0 * (n * p * (1.0 - p)).sqrt()
    };
    let err = |e: cloudmorph::Error| e.to_string();

    let sphere = gen_shape(
        &ShapeParams::Spheres {
            center,
            radii: vec![0.4],
        },
        10_000,
        RngSeed(1),
    )
    .map_err(err)?;
    ensure(sphere.iter().all(|p| (p.dist(center) - 0.4).abs() <= 1e-9), || {
        "sphere point off the shell".into()
    })?;

    let boxes = vec![Point3::new(0.2, 0.3, 0.1), Point3::new(0.45, 0.4, 0.35)];
    let cuboids = gen_shape(
        &ShapeParams::Cuboids {
            center,
            half_extents: boxes.clone(),
        },
        10_000,
        RngSeed(2),
    )
    .map_err(err)?;
    let on_face = |p: &Point3| {
        boxes.iter().any(|h| {
            let inside = (0..3).all(|a| (p.axis(a) - 0.5).abs() <= h.axis(a) + 1e-9);
            inside && (0..3).any(|a| ((p.axis(a) - 0.5).abs() - h.axis(a)).abs() <= 1e-9)
        })
    };
    ensure(cuboids.iter().all(on_face), || "cuboid point off every face".into())?;

    let shells = gen_shape(
        &ShapeParams::Spheres {
            center,
            radii: vec![0.2, 0.4],
        },
        20_000,
        RngSeed(3),
    )
    .map_err(err)?;
    let inner = shells.iter().filter(|p| (p.dist(center) - 0.2).abs() <= 1e-9).count();
    ensure(binomial_ok(inner, 20_000, 0.2), || {
        format!("inner shell holds {inner} of 20000 points")
    })?;

    let uniform = gen_design(&DesignParams::Porous { voids: vec![] }, 16_000, RngSeed(4)).map_err(err)?;
    let mut octants = [0usize; 8];
    for p in uniform.iter() {
        octants[(p.x >= 0.5) as usize + 2 * (p.y >= 0.5) as usize + 4 * (p.z >= 0.5) as usize] += 1;
    }
    ensure(octants.iter().all(|&c| binomial_ok(c, 16_000, 0.125)), || {
        format!("octant counts {octants:?}")
    })?;

    let (vc, vr) = (Point3::new(0.3, 0.6, 0.5), 0.2);
    let porous = gen_design(&DesignParams::Porous { voids: vec![(vc, vr)] }, 10_000, RngSeed(5)).map_err(err)?;
    ensure(porous.iter().all(|p| p.dist(vc) >= vr), || {
        "point inside the void".into()
    })?;

    let (period, thickness) = (0.125, 0.05);
    let stripes = DesignParams::Stripes {
        axis: 0,
        period,
        thickness,
        wave_axis: 1,
        amplitude: 0.0,
        wavelength: 0.25,
    };
    let cloud = gen_design(&stripes, 10_000, RngSeed(6)).map_err(err)?;
    ensure(
        cloud.iter().all(|p| p.x - (p.x / period).floor() * period < thickness),
        || "stripe point outside its slab".into(),
    )?;
    let mut rng = RngSeed(7).rng();
    let kept = (0..100_000)
        .filter(|_| stripes.contains(Point3::new(rng.random(), rng.random(), rng.random())))
        .count();
    ensure(binomial_ok(kept, 100_000, thickness / period), || {
        format!("stripes keep {kept} of 100000")
    })?;

    let start = Instant::now();
    let corpus = gen_dataset(40, 4096, RngSeed(8)).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    within_time(secs, 30.0)?;
    for kind in ShapeKind::ALL {
        ensure(corpus.iter().any(|e| e.params.kind() == kind), || {
            format!("no {} cloud", kind.name())
        })?;
    }
    ensure(
        corpus
            .iter()
            .all(|e| e.cloud.len() == 4096 && e.cloud.within_unit_cube()),
        || "corpus cloud with wrong size or outside the cube".into(),
    )?;
    Ok(format!(
        "surface, void and stripe checks pass; 40x4096 corpus in {secs:.2}s"
    ))
}

fn desk_demo() -> Check {
    let err = |e: cloudmorph::Error| e.to_string();
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let x = bridge(16_384, RngSeed(20)).map_err(err)?;
    let design = gen_design(
        &DesignParams::default_for(DesignKind::Stripes, RngSeed(21)),
        65_536,
        RngSeed(22),
    )
    .map_err(err)?;
    let m = 2048;
    let k = x.len() / m;
    let e = OtEmbedder::new(m).map_err(err)?;
    let lambdas = [0.0, 0.5, 1.0];
    let run = style_transfer_pipeline(&x, &design, &lambdas, k, &e, DEFAULT_BANDWIDTH, RngSeed(23)).map_err(err)?;
    for (lambda, out) in lambdas.iter().zip(&run.blend.outputs) {
        let ply = dir.path().join(format!("bridge_{lambda}.ply"));
        let svg = ply.with_extension("svg");
        store_auto(out, &ply).map_err(err)?;
        export_svg(out, 1, &svg, &SvgOptions::default()).map_err(err)?;
        let back = load_auto(&ply).map_err(err)?;
        ensure(back.len() == 16_384, || {
            format!("{} holds {} points", ply.display(), back.len())
        })?;
        let text = std::fs::read_to_string(&svg).map_err(|e| e.to_string())?;
        let markers = text.matches("<circle").count();
        ensure(text.starts_with("<svg") && markers == 16_384, || {
            format!("{} has {markers} markers", svg.display())
        })?;
    }
    let secs = start.elapsed().as_secs_f64();
    within_time(secs, 120.0)?;
    Ok(format!("k={k}, 3 outputs of 16384 points as PLY and SVG in {secs:.1}s"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("balanced assignment matches exhaustive search", balanced_clustering),
        ("balanced k-means objective is monotone", kmeans_convergence),
        ("exact EMD matches permutations, metric axioms", exact_emd),
        ("Sinkhorn divergence tracks exact EMD", sinkhorn_fidelity),
        ("Chamfer distance matches brute force", chamfer_exact),
        ("self blend is the identity, naive matching is not", self_blend_identity),
        ("style transfer endpoints and support", style_endpoints),
        ("KDE matches direct summation", kde_accuracy),
        ("dataset and design generators", dataset_generators),
        ("bridge style transfer demo", desk_demo),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
