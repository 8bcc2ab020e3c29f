//! Procedural scenes for tests, benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math::Vec3;
use crate::raster::{Raster, Rgb32};
use crate::shading::SceneAssets;

/// Flat gray scene at constant depth, facing the camera, fully masked.
pub fn flat_scene(w: usize, h: usize, depth: f32) -> SceneAssets {
    SceneAssets::new(
        Raster::filled(w, h, [0.5; 3]),
        Raster::filled(w, h, depth),
        Raster::filled(w, h, [0.0, 0.0, 1.0]),
        Raster::filled(w, h, [0.5; 3]),
        Raster::filled(w, h, [0.0; 3]),
        Raster::filled(w, h, true),
    )
    .expect("valid flat scene")
}

/// Centered elliptical mask with semi-axes as fractions of the image size.
pub fn ellipse_mask(w: usize, h: usize, fx: f64, fy: f64) -> Raster<bool> {
    let (cx, cy) = (0.5 * w as f64, 0.5 * h as f64);
    let (a, b) = (fx * w as f64, fy * h as f64);
    Raster::from_fn(w, h, |x, y| {
        let u = (x as f64 + 0.5 - cx) / a;
        let v = (y as f64 + 0.5 - cy) / b;
        u * u + v * v <= 1.0
    })
}

/// Flat scene with a centered elliptical face mask and neutral materials.
pub fn flat_face_scene(w: usize, h: usize) -> SceneAssets {
    let mut s = flat_scene(w, h, 0.0);
    s.mask = ellipse_mask(w, h, 0.3, 0.38);
    s
}

/// A domed "face" on a background plane. `seed` perturbs the size, position
/// and skin tone.
pub fn face_scene(w: usize, h: usize, seed: u64) -> SceneAssets {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let short = w.min(h) as f64;
    let cx = 0.5 * w as f64 + rng.random_range(-0.04..0.04) * w as f64;
    let cy = 0.5 * h as f64 + rng.random_range(-0.04..0.04) * h as f64;
    let a = rng.random_range(0.24..0.32) * w as f64;
    let b = rng.random_range(0.32..0.40) * h as f64;
    let relief = rng.random_range(0.18..0.28) * short;
    let background = 0.5 * short;
    let skin: Rgb32 = [
        rng.random_range(0.70..0.90),
        rng.random_range(0.50..0.65),
        rng.random_range(0.40..0.55),
    ];
    let key = Vec3::new(-0.5, -0.3, 0.8).try_normalize().unwrap();

    let mut depth = Vec::with_capacity(w * h);
    let mut normals = Vec::with_capacity(w * h);
    let mut image = Vec::with_capacity(w * h);
    let mut albedo = Vec::with_capacity(w * h);
    let mut specular = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let dx = x as f64 + 0.5 - cx;
            let dy = y as f64 + 0.5 - cy;
            let u2 = (dx / a).powi(2) + (dy / b).powi(2);
            if u2 < 1.0 {
                let root = (1.0 - u2).max(1e-3).sqrt();
                depth.push((background - relief * (1.0 - u2).sqrt()) as f32);
                // Height z = relief * sqrt(1 - u2); normal ~ (-dz/dx, -dz/dy, 1).
                let gx = -relief * dx / (a * a * root);
                let gy = -relief * dy / (b * b * root);
                let n = Vec3::new(-gx, -gy, 1.0).try_normalize().unwrap();
                normals.push([n.x as f32, n.y as f32, n.z as f32]);
                let shade = (0.35 + 0.55 * n.dot(key).max(0.0)) as f32;
                image.push(skin.map(|c| (c * shade).clamp(0.0, 1.0)));
                albedo.push(skin);
                specular.push([0.15; 3]);
                mask.push(u2 < 0.85);
            } else {
                depth.push(background as f32);
                normals.push([0.0, 0.0, 1.0]);
                let g = 0.3 + 0.2 * (y as f32 / h as f32);
                image.push([g, g, g * 1.1]);
                albedo.push([0.4; 3]);
                specular.push([0.05; 3]);
                mask.push(false);
            }
        }
    }
    fn r<P>(w: usize, h: usize, v: Vec<P>) -> Raster<P> {
        Raster::from_vec(w, h, v).expect("w * h pixels")
    }
    SceneAssets::new(r(w, h, image), r(w, h, depth), r(w, h, normals), r(w, h, albedo), r(w, h, specular), r(w, h, mask))
        .expect("valid synthetic face")
}
