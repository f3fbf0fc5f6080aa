//! Inputs shared by the benchmarks.

use cloudmorph::datagen::{gen_design, DesignKind, DesignParams};
use cloudmorph::{Point3, PointCloud, RngSeed};
use rand::Rng;

/// `n` points drawn uniformly from the unit cube.
pub fn uniform_cloud(n: usize, seed: u64) -> PointCloud {
    let mut rng = RngSeed(seed).rng();
    PointCloud::new(
        (0..n)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect(),
    )
    .expect("finite coordinates")
}

pub fn stripes(n: usize, seed: u64) -> PointCloud {
    let params = DesignParams::default_for(DesignKind::Stripes, RngSeed(seed));
    gen_design(&params, n, RngSeed(seed + 1)).expect("default stripes are valid")
}
