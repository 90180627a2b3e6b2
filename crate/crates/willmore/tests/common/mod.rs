#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use willmore::mesh::build_torus;
use willmore::{TriangleMesh, Vec3};

/// Torus with profile `(√2, 1)` pushed through `p ↦ (x(1+0.2z), y(1+0.2z), z)`.
pub fn egg_torus(n: usize) -> TriangleMesh {
    build_torus(2f64.sqrt(), 1.0, n, n)
        .unwrap()
        .map_vertices(|p| Vec3::new(p.x * (1.0 + 0.2 * p.z), p.y * (1.0 + 0.2 * p.z), p.z))
}

pub fn clifford_torus(n: usize) -> TriangleMesh {
    build_torus(2f64.sqrt(), 1.0, n, n).unwrap()
}

/// Smooth seeded scalar field `sin(a x + 2b y z + c z² + 0.3)`.
pub fn smooth_field(mesh: &TriangleMesh, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b, c): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    mesh.vertices.iter().map(|p| (a * p.x + 2.0 * b * p.y * p.z + c * p.z * p.z + 0.3).sin()).collect()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn geom(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}
