#![allow(dead_code)]

use matid::em::MaterialParams;
use matid::scene::{Facet, Point, Scene, Trajectory, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn palette() -> Vec<MaterialParams> {
    vec![MaterialParams::wood(), MaterialParams::plaster(), MaterialParams::glass()]
}

/// Rectangle centred at `c` spanning `a` and `b` (half extents included in the vectors).
fn rect(id: &str, c: Point, a: Vector, b: Vector, material: &str) -> Facet {
    let v = vec![c - a - b, c + a - b, c + a + b, c - a + b];
    Facet::new(id, v, material, 0.1).expect("random rectangle is valid")
}

fn tilt(rng: &mut ChaCha8Rng, v: Vector, max_rad: f64) -> Vector {
    let axis = Vector::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let axis = if axis.norm() < 1e-3 { Vector::x() } else { axis.normalize() };
    let angle = rng.random_range(-max_rad..max_rad);
    nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle) * v
}

/// A corner of a room: a floor, two walls and optionally a ceiling, each slightly tilted
/// and randomly sized, with materials drawn from `materials`.
pub struct RandomRoom {
    pub scene: Scene,
    pub truth: Vec<(String, String)>,
}

pub fn random_room(seed: u64, facets: usize, materials: &[&str]) -> RandomRoom {
    assert!((1..=4).contains(&facets));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut truth = Vec::new();
    let specs: [(&str, Point, Vector, Vector); 4] = [
        ("floor", Point::new(3.0, 3.0, 0.0), Vector::new(1.0, 0.0, 0.0), Vector::new(0.0, 1.0, 0.0)),
        ("wall_x", Point::new(0.0, 3.0, 1.5), Vector::new(0.0, 1.0, 0.0), Vector::new(0.0, 0.0, 1.0)),
        ("wall_y", Point::new(3.0, 0.0, 1.5), Vector::new(0.0, 0.0, 1.0), Vector::new(1.0, 0.0, 0.0)),
        ("ceiling", Point::new(3.0, 3.0, 3.5), Vector::new(0.0, 1.0, 0.0), Vector::new(1.0, 0.0, 0.0)),
    ];
    for (id, c, a, b) in specs.into_iter().take(facets) {
        let material = materials[rng.random_range(0..materials.len())];
        let shift = Vector::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
        let a = tilt(&mut rng, a, 0.2);
        // Re-orthogonalize so the rectangle stays planar.
        let b = (b - a * a.dot(&b)).normalize();
        let (ha, hb) = (rng.random_range(2.0..4.0), rng.random_range(2.0..4.0));
        out.push(rect(id, c + shift, a * ha, b * hb, material));
        truth.push((id.to_string(), material.to_string()));
    }
    RandomRoom { scene: Scene::new(out).expect("distinct ids"), truth }
}

pub fn random_point(rng: &mut ChaCha8Rng) -> Point {
    Point::new(rng.random_range(0.8..5.0), rng.random_range(0.8..5.0), rng.random_range(0.4..3.0))
}

/// Independent specular-path finder: minimizes the unfolded path length over
/// points on the facet planes by coarse grid search followed by a shrinking
/// pattern search. The length is convex in the in-plane coordinates, so the
/// minimizer is the specular path whenever one exists.
pub fn shortest_path(scene: &Scene, seq: &[usize], tx: Point, rx: Point) -> Vec<Point> {
    let k = seq.len();
    let frames: Vec<(Point, Vector, Vector, [f64; 4])> = seq
        .iter()
        .map(|&i| {
            let f = &scene.facets()[i];
            let (o, u, w) = f.frame();
            let (mut lo_u, mut hi_u, mut lo_w, mut hi_w) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for v in f.vertices() {
                let (a, b) = ((v - o).dot(&u), (v - o).dot(&w));
                lo_u = lo_u.min(a);
                hi_u = hi_u.max(a);
                lo_w = lo_w.min(b);
                hi_w = hi_w.max(b);
            }
            let (pu, pw) = (0.5 * (hi_u - lo_u), 0.5 * (hi_w - lo_w));
            (o, u, w, [lo_u - pu, hi_u + pu, lo_w - pw, hi_w + pw])
        })
        .collect();
    let points = |x: &[f64]| -> Vec<Point> { (0..k).map(|i| frames[i].0 + frames[i].1 * x[2 * i] + frames[i].2 * x[2 * i + 1]).collect() };
    let length = |x: &[f64]| -> f64 {
        let p = points(x);
        let mut total = (p[0] - tx).norm() + (rx - p[k - 1]).norm();
        for w in p.windows(2) {
            total += (w[1] - w[0]).norm();
        }
        total
    };

    let dims = 2 * k;
    let per_dim: usize = match k {
        1 => 41,
        2 => 13,
        _ => 7,
    };
    let bounds: Vec<(f64, f64)> =
        (0..dims).map(|d| (frames[d / 2].3[2 * (d % 2)], frames[d / 2].3[2 * (d % 2) + 1])).collect();
    let mut best = vec![0.0; dims];
    let mut best_len = f64::INFINITY;
    let mut idx = vec![0usize; dims];
    let mut x = vec![0.0; dims];
    loop {
        for d in 0..dims {
            let (lo, hi) = bounds[d];
            x[d] = lo + (hi - lo) * idx[d] as f64 / (per_dim - 1) as f64;
        }
        let l = length(&x);
        if l < best_len {
            best_len = l;
            best.clone_from(&x);
        }
        let mut d = 0;
        loop {
            if d == dims {
                break;
            }
            idx[d] += 1;
            if idx[d] < per_dim {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == dims {
            break;
        }
    }

    let mut h: Vec<f64> = bounds.iter().map(|(lo, hi)| (hi - lo) / (per_dim - 1) as f64).collect();
    let offsets = 3usize.pow(dims as u32);
    while h.iter().cloned().fold(0.0, f64::max) > 1e-8 {
        let mut moved = false;
        let center = best.clone();
        for code in 0..offsets {
            let mut c = code;
            for d in 0..dims {
                x[d] = center[d] + h[d] * ((c % 3) as f64 - 1.0);
                c /= 3;
            }
            let l = length(&x);
            if l < best_len - 1e-15 {
                best_len = l;
                best.clone_from(&x);
                moved = true;
            }
        }
        if !moved {
            h.iter_mut().for_each(|v| *v *= 0.5);
        }
    }
    points(&best)
}

/// Distance from `p` (on the facet plane) to the polygon boundary, negative outside.
pub fn inside_margin(f: &Facet, p: &Point) -> f64 {
    let v = f.vertices();
    let n = f.normal();
    (0..v.len())
        .map(|i| {
            let e = v[(i + 1) % v.len()] - v[i];
            let inward = n.cross(&e).normalize();
            (p - v[i]).dot(&inward)
        })
        .fold(f64::INFINITY, f64::min)
}

pub enum OracleVerdict {
    Valid(Vec<Point>),
    Invalid,
    /// Too close to a polygon edge or a facet plane to call.
    Borderline,
}

/// Whether the oracle's shortest path for `seq` is a valid, unobstructed reflection path.
///
/// Any specular path is a stationary point of the convex length function, so a
/// minimizer that clearly breaks a condition rules the sequence out. So does a
/// minimizer with two reflection points merged on the line where planes meet:
/// a genuine path would be a second, distinct minimizer, which a strictly
/// bent path rules out.
pub fn oracle_path(scene: &Scene, seq: &[usize], tx: Point, rx: Point) -> OracleVerdict {
    const MARGIN: f64 = 1e-4;
    let pts = shortest_path(scene, seq, tx, rx);
    if pts.windows(2).any(|w| (w[1] - w[0]).norm() < MARGIN) {
        return OracleVerdict::Invalid;
    }
    let mut chain = vec![tx];
    chain.extend_from_slice(&pts);
    chain.push(rx);
    let mut borderline = false;
    for (j, &fi) in seq.iter().enumerate() {
        let f = &scene.facets()[fi];
        let (before, after) = (f.signed_distance(&chain[j]), f.signed_distance(&chain[j + 2]));
        if before.abs() < MARGIN || after.abs() < MARGIN {
            borderline = true;
        } else if before * after < 0.0 {
            return OracleVerdict::Invalid;
        }
        let m = inside_margin(f, &pts[j]);
        if m < -MARGIN {
            return OracleVerdict::Invalid;
        } else if m < MARGIN {
            borderline = true;
        }
    }
    for leg in chain.windows(2) {
        for f in scene.facets() {
            let (da, db) = (f.signed_distance(&leg[0]), f.signed_distance(&leg[1]));
            if da * db >= 0.0 {
                continue;
            }
            let t = da / (da - db);
            let len = (leg[1] - leg[0]).norm();
            if t * len < MARGIN || (1.0 - t) * len < MARGIN {
                continue;
            }
            let p = leg[0] + (leg[1] - leg[0]) * t;
            let m = inside_margin(f, &p);
            if m.abs() < MARGIN {
                borderline = true;
            } else if m > 0.0 {
                return OracleVerdict::Invalid;
            }
        }
    }
    if borderline {
        OracleVerdict::Borderline
    } else {
        OracleVerdict::Valid(pts)
    }
}

/// All facet sequences of length 1..=max with no facet repeated back to back.
pub fn sequences(n: usize, max: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut frontier = out.clone();
    for _ in 1..max {
        let mut next = Vec::new();
        for s in &frontier {
            for i in 0..n {
                if *s.last().unwrap() != i {
                    let mut t = s.clone();
                    t.push(i);
                    next.push(t);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

pub fn facet_indices(t: &Trajectory) -> Vec<usize> {
    t.hops.iter().map(|h| h.facet_index).collect()
}

fn reflect(v: Vector, n: Vector) -> Vector {
    v - n * (2.0 * v.dot(&n))
}

/// Largest violation of the reflection law, plane membership and reported angle along `t`.
pub fn specular_residual(scene: &Scene, t: &Trajectory) -> f64 {
    let chain = t.vertices();
    let mut worst: f64 = 0.0;
    for (j, hop) in t.hops.iter().enumerate() {
        let f = &scene.facets()[hop.facet_index];
        let n = f.normal();
        let d_in = (chain[j + 1] - chain[j]).normalize();
        let d_out = (chain[j + 2] - chain[j + 1]).normalize();
        worst = worst.max((reflect(d_in, n) - d_out).norm());
        worst = worst.max(f.signed_distance(&hop.point).abs());
        worst = worst.max((d_in.dot(&n).abs().min(1.0).acos() - hop.theta_i).abs());
        if !f.contains(&hop.point) {
            worst = worst.max(1.0);
        }
    }
    worst
}
