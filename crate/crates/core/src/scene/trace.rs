//! Image-method specular tracing.
//!
//! For an ordered facet sequence `F1..Fk` the transmitter is mirrored
//! successively across each facet plane. The reflection points are then
//! recovered backwards: the line from the receiver to the last image crosses
//! `Fk` at the last reflection point, the line from that point to the previous
//! image crosses `Fk-1`, and so on. A sequence is kept only if every crossing
//! lies inside its polygon and no leg is blocked by another facet.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use super::facet::{Point, Vector};
use super::Scene;
use crate::error::{Error, Result};

pub const MAX_BOUNCES: usize = 4;

/// Legs ignore facet hits closer than this to either endpoint.
pub const OCCLUSION_EPS: f64 = 1e-6;

/// Minimum distance of an endpoint or image from a facet plane for the reflection to count.
const PLANE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Hop {
    pub point: Point,
    pub facet_id: String,
    pub facet_index: usize,
    /// Incident angle in radians, in `[0, π/2)`.
    pub theta_i: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub tx: Point,
    pub rx: Point,
    pub hops: Vec<Hop>,
    /// Leg lengths from TX through each reflection point to RX.
    pub segment_lengths: Vec<f64>,
    pub total_length: f64,
}

impl Trajectory {
    pub fn bounces(&self) -> usize {
        self.hops.len()
    }

    /// TX, each reflection point, RX.
    pub fn vertices(&self) -> Vec<Point> {
        std::iter::once(self.tx).chain(self.hops.iter().map(|h| h.point)).chain(std::iter::once(self.rx)).collect()
    }

    pub fn facet_ids(&self) -> Vec<&str> {
        self.hops.iter().map(|h| h.facet_id.as_str()).collect()
    }
}

/// Angle between the reversed incoming direction and the surface normal.
///
/// Either orientation of the normal is accepted. Grazing incidence returns the
/// largest `f64` below `π/2`.
pub fn incident_angle(direction: &Vector, normal: &Vector) -> Result<f64> {
    for (name, v) in [("direction", direction), ("normal", normal)] {
        if !((v.norm() - 1.0).abs() <= 1e-9) {
            return Err(Error::invalid(format!("{name} must be a unit vector (norm {})", v.norm())));
        }
    }
    let along = direction.dot(normal).abs();
    let across = direction.cross(normal).norm();
    let theta = across.atan2(along);
    Ok(if theta >= FRAC_PI_2 { FRAC_PI_2.next_down() } else { theta })
}

fn validate_endpoint(scene: &Scene, name: &str, p: &Point) -> Result<()> {
    if !p.iter().all(|c| c.is_finite()) {
        return Err(Error::invalid(format!("{name} has non-finite coordinates")));
    }
    if let Some(b) = scene.bounds() {
        if !b.contains(p) {
            return Err(Error::invalid(format!("{name} ({}, {}, {}) lies outside the scene bounds", p.x, p.y, p.z)));
        }
    }
    Ok(())
}

/// All specular trajectories from `tx` to `rx` with 1 to `max_bounces` reflections,
/// sorted by bounce count, then length, then facet sequence.
pub fn trace(scene: &Scene, tx: Point, rx: Point, max_bounces: usize) -> Result<Vec<Trajectory>> {
    if !(1..=MAX_BOUNCES).contains(&max_bounces) {
        return Err(Error::invalid(format!("max_bounces must be in 1..={MAX_BOUNCES}, got {max_bounces}")));
    }
    validate_endpoint(scene, "tx", &tx)?;
    validate_endpoint(scene, "rx", &rx)?;
    if (tx - rx).norm() <= OCCLUSION_EPS {
        return Err(Error::invalid("tx and rx coincide"));
    }

    let n = scene.facets().len();
    let mut found: Vec<(Vec<usize>, Trajectory)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|first| {
            let mut out = Vec::new();
            let mut seq = vec![first];
            let mut images = vec![scene.facets()[first].mirror(&tx)];
            extend(scene, &tx, &rx, max_bounces, &mut seq, &mut images, &mut out);
            out
        })
        .collect();

    found.sort_by(|(sa, a), (sb, b)| {
        a.bounces()
            .cmp(&b.bounces())
            .then(a.total_length.partial_cmp(&b.total_length).unwrap_or(Ordering::Equal))
            .then_with(|| sa.cmp(sb))
    });
    Ok(found.into_iter().map(|(_, t)| t).collect())
}

fn extend(
    scene: &Scene,
    tx: &Point,
    rx: &Point,
    max_bounces: usize,
    seq: &mut Vec<usize>,
    images: &mut Vec<Point>,
    out: &mut Vec<(Vec<usize>, Trajectory)>,
) {
    if let Some(t) = resolve(scene, tx, rx, seq, images) {
        out.push((seq.clone(), t));
    }
    if seq.len() == max_bounces {
        return;
    }
    let last = *seq.last().expect("sequence is never empty");
    let image = *images.last().expect("one image per facet");
    for next in 0..scene.facets().len() {
        if next == last {
            continue;
        }
        let facet = &scene.facets()[next];
        // An image on the plane itself cannot produce a reflection.
        if facet.signed_distance(&image).abs() <= PLANE_EPS {
            continue;
        }
        seq.push(next);
        images.push(facet.mirror(&image));
        extend(scene, tx, rx, max_bounces, seq, images, out);
        seq.pop();
        images.pop();
    }
}

fn resolve(scene: &Scene, tx: &Point, rx: &Point, seq: &[usize], images: &[Point]) -> Option<Trajectory> {
    let k = seq.len();
    let mut points = vec![Point::origin(); k];
    let mut target = *rx;
    for j in (0..k).rev() {
        let facet = &scene.facets()[seq[j]];
        let (dt, di) = (facet.signed_distance(&target), facet.signed_distance(&images[j]));
        // Target and image must sit strictly on opposite sides of the plane.
        if !(dt * di < 0.0) || dt.abs() <= PLANE_EPS || di.abs() <= PLANE_EPS {
            return None;
        }
        let t = dt / (dt - di);
        let p = target + (images[j] - target) * t;
        if !facet.contains(&p) {
            return None;
        }
        points[j] = p;
        target = p;
    }

    let mut vertices = Vec::with_capacity(k + 2);
    vertices.push(*tx);
    vertices.extend_from_slice(&points);
    vertices.push(*rx);

    let mut segment_lengths = Vec::with_capacity(k + 1);
    for leg in vertices.windows(2) {
        let len = (leg[1] - leg[0]).norm();
        if len <= OCCLUSION_EPS {
            return None;
        }
        if scene.facets().iter().any(|f| f.segment_hit(&leg[0], &leg[1], OCCLUSION_EPS).is_some()) {
            return None;
        }
        segment_lengths.push(len);
    }

    let mut hops = Vec::with_capacity(k);
    for j in 0..k {
        let facet = &scene.facets()[seq[j]];
        let incoming = (vertices[j + 1] - vertices[j]).normalize();
        let theta_i = incident_angle(&incoming, &facet.normal()).ok()?;
        hops.push(Hop { point: points[j], facet_id: facet.id().to_string(), facet_index: seq[j], theta_i });
    }
    let total_length = segment_lengths.iter().sum();
    Some(Trajectory { tx: *tx, rx: *rx, hops, segment_lengths, total_length })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    use super::*;
    use crate::scene::Facet;

    fn floor(z: f64, id: &str) -> Facet {
        Facet::quad(id, [[-10.0, -10.0, z], [10.0, -10.0, z], [10.0, 10.0, z], [-10.0, 10.0, z]], "wood", 0.05).unwrap()
    }

    #[test]
    fn incident_angle_cases() {
        let n = Vector::new(0.0, 0.0, 1.0);
        assert_eq!(incident_angle(&Vector::new(0.0, 0.0, -1.0), &n).unwrap(), 0.0);
        let d = Vector::new(1.0, 0.0, -1.0) / SQRT_2;
        assert!((incident_angle(&d, &n).unwrap() - FRAC_PI_4).abs() < 1e-15);
        let grazing = incident_angle(&Vector::new(1.0, 0.0, 0.0), &n).unwrap();
        assert!(grazing < FRAC_PI_2 && grazing > FRAC_PI_2 - 1e-12);
        let almost = Vector::new(1.0, 0.0, -1e-9).normalize();
        assert!(incident_angle(&almost, &n).unwrap() < FRAC_PI_2);
        assert!(incident_angle(&Vector::new(2.0, 0.0, 0.0), &n).is_err());
    }

    #[test]
    fn single_floor_bounce() {
        let scene = Scene::new(vec![floor(0.0, "floor")]).unwrap();
        let out = trace(&scene, Point::new(0.0, 0.0, 1.0), Point::new(2.0, 0.0, 1.0), 2).unwrap();
        assert_eq!(out.len(), 1);
        let t = &out[0];
        assert!((t.hops[0].point - Point::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((t.hops[0].theta_i - FRAC_PI_4).abs() < 1e-12);
        assert!((t.total_length - 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn floor_then_ceiling() {
        let scene = Scene::new(vec![floor(0.0, "floor"), floor(2.0, "ceiling")]).unwrap();
        let out = trace(&scene, Point::new(0.0, 0.0, 1.0), Point::new(4.0, 0.0, 1.0), 2).unwrap();
        let fc = out.iter().find(|t| t.facet_ids() == ["floor", "ceiling"]).unwrap();
        assert!((fc.hops[0].point - Point::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((fc.hops[1].point - Point::new(3.0, 0.0, 2.0)).norm() < 1e-12);
        for h in &fc.hops {
            assert!((h.theta_i - FRAC_PI_4).abs() < 1e-12);
        }
        assert!((fc.total_length - 4.0 * SQRT_2).abs() < 1e-12);
        // Two single bounces come first.
        assert_eq!(out.iter().take_while(|t| t.bounces() == 1).count(), 2);
    }

    #[test]
    fn blocked_reflection() {
        let plate =
            Facet::quad("plate", [[0.4, -0.1, 0.5], [0.6, -0.1, 0.5], [0.6, 0.1, 0.5], [0.4, 0.1, 0.5]], "glass", 0.01)
                .unwrap();
        let open = Scene::new(vec![floor(0.0, "floor")]).unwrap();
        assert_eq!(trace(&open, Point::new(0.0, 0.0, 1.0), Point::new(2.0, 0.0, 1.0), 1).unwrap().len(), 1);
        // The plate sits across the TX leg at (0.5, 0, 0.5) and misses its own mirror path.
        let scene = Scene::new(vec![floor(0.0, "floor"), plate]).unwrap();
        let out = trace(&scene, Point::new(0.0, 0.0, 1.0), Point::new(2.0, 0.0, 1.0), 1).unwrap();
        assert!(out.is_empty(), "{out:?}");
    }

    #[test]
    fn rejects_bad_requests() {
        let scene = Scene::new(vec![floor(0.0, "floor")]).unwrap();
        let p = Point::new(0.0, 0.0, 1.0);
        assert!(trace(&scene, p, p, 1).is_err());
        assert!(trace(&scene, p, Point::new(1.0, 0.0, 1.0), 0).is_err());
        assert!(trace(&scene, p, Point::new(1.0, 0.0, 1.0), 5).is_err());
    }
}
