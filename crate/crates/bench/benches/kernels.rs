use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dirtyfcm_core::pmc::{PmcEngine, Policy};
use dirtyfcm_core::problem::Model;
use dirtyfcm_core::spacetree::{flood_fill_default, SpaceTree};
use dirtyfcm_core::studies::fixtures::{self, PlateWithHole};
use dirtyfcm_core::studies::PlateStudyConfig;
use dirtyfcm_core::{Aabb, Point};

fn sphere_domain() -> (dirtyfcm_core::mesh_io::TriangleSoup, Aabb) {
    let soup = fixtures::icosphere(Point::new(0.5, 0.5, 0.5), 0.4, 3);
    (soup, Aabb::new(Point::new(-0.13, -0.17, -0.11), Point::new(1.19, 1.21, 1.17)))
}

fn tree_build(c: &mut Criterion) {
    let (soup, domain) = sphere_domain();
    for depth in [5, 6] {
        c.bench_function(&format!("tree_build_fill/depth{depth}"), |b| {
            b.iter(|| flood_fill_default(SpaceTree::build(&soup, domain, depth).unwrap()).unwrap())
        });
    }
}

fn classify(c: &mut Criterion) {
    let (soup, domain) = sphere_domain();
    let engine = PmcEngine::new(flood_fill_default(SpaceTree::build(&soup, domain, 5).unwrap()).unwrap(), &soup);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let points: Vec<Point> = (0..4096).map(|_| Point::new(rng.gen(), rng.gen(), rng.gen())).collect();
    c.bench_function("pmc_classify/4096", |b| {
        b.iter(|| points.iter().map(|p| engine.classify(p, Policy::default())).count())
    });
    c.bench_function("pmc_vote_batch/4096", |b| b.iter(|| engine.vote_batch(&points)));
}

fn assembly(c: &mut Criterion) {
    let config = PlateStudyConfig::reduced();
    let soup = PlateWithHole::default().soup();
    let model = Model::new(config.problem(2), &soup).unwrap();
    c.bench_function("assemble/plate_p2", |b| b.iter(|| model.system(Policy::default())));
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(10);
    targets = tree_build, classify, assembly
}
criterion_main!(kernels);
