use std::f64::consts::TAU;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

pub type Point = Point3<f64>;
pub type Vector = Vector3<f64>;

pub const UNKNOWN_MATERIAL: &str = "unknown";

const COPLANAR_TOL: f64 = 1e-9;
const MIN_AREA: f64 = 1e-12;

/// A planar convex polygon with a material label.
///
/// Vertices run counter-clockwise around the normal, which is derived from the
/// vertex order. Both sides reflect.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    id: String,
    vertices: Vec<Point>,
    material: String,
    thickness_m: f64,
    normal: Vector,
    offset: f64,
    area: f64,
}

fn is_token(s: &str) -> bool {
    !s.is_empty() && !s.contains([',', '|', '#']) && !s.chars().any(char::is_whitespace)
}

impl Facet {
    pub fn new(id: impl Into<String>, vertices: Vec<Point>, material: impl Into<String>, thickness_m: f64) -> Result<Self> {
        let id = id.into();
        let err = |message: String| Error::Scene { facet: id.clone(), message };
        if !is_token(&id) {
            return Err(err("facet id must be a non-empty token without ',' '|' '#' or whitespace".into()));
        }
        if vertices.len() < 3 {
            return Err(err(format!("needs at least 3 vertices, got {}", vertices.len())));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(err("non-finite vertex coordinate".into()));
        }
        if !(thickness_m.is_finite() && thickness_m >= 0.0) {
            return Err(err(format!("thickness must be >= 0 m, got {thickness_m}")));
        }

        // Newell's method: the summed cross products give twice the vector area.
        let n = vertices.len();
        let mut area_vec = Vector::zeros();
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            area_vec += a.coords.cross(&b.coords);
        }
        let area = 0.5 * area_vec.norm();
        if !(area > MIN_AREA) {
            return Err(err(format!("degenerate polygon (area {area:e} m²)")));
        }
        let normal = area_vec / area_vec.norm();
        let offset = normal.dot(&vertices[0].coords);
        for (i, v) in vertices.iter().enumerate() {
            let dist = normal.dot(&v.coords) - offset;
            if dist.abs() > COPLANAR_TOL {
                return Err(err(format!("vertex {i} is {dist:e} m off the facet plane")));
            }
        }

        let mut turning = 0.0;
        for i in 0..n {
            let e0 = vertices[(i + 1) % n] - vertices[i];
            let e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
            if e0.norm() == 0.0 {
                return Err(err(format!("repeated vertex {}", (i + 1) % n)));
            }
            let cross = e0.cross(&e1).dot(&normal);
            if cross < -1e-12 * e0.norm() * e1.norm() {
                return Err(err(format!("not convex at vertex {}", (i + 1) % n)));
            }
            turning += cross.atan2(e0.dot(&e1));
        }
        if (turning - TAU).abs() > 1e-6 {
            return Err(err("self-intersecting polygon".into()));
        }

        let material = material.into();
        let material = if material.trim().is_empty() { UNKNOWN_MATERIAL.to_string() } else { material.trim().to_string() };
        if !is_token(&material) {
            return Err(err(format!("material {material:?} must be a token without ',' '|' '#' or whitespace")));
        }
        Ok(Self { id, vertices, material, thickness_m, normal, offset, area })
    }

    /// Axis-aligned rectangle helper: corners `a`, `b`, `c`, `d` in order.
    pub fn quad(id: &str, corners: [[f64; 3]; 4], material: &str, thickness_m: f64) -> Result<Self> {
        Self::new(id, corners.iter().map(|c| Point::new(c[0], c[1], c[2])).collect(), material, thickness_m)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn material(&self) -> &str {
        &self.material
    }

    pub fn is_material_known(&self) -> bool {
        self.material != UNKNOWN_MATERIAL
    }

    pub fn thickness_m(&self) -> f64 {
        self.thickness_m
    }

    /// Unit normal; vertices wind counter-clockwise around it.
    pub fn normal(&self) -> Vector {
        self.normal
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Signed distance of `p` from the facet plane along the normal.
    pub fn signed_distance(&self, p: &Point) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }

    /// Mirror image of `p` across the facet plane.
    pub fn mirror(&self, p: &Point) -> Point {
        p - self.normal * (2.0 * self.signed_distance(p))
    }

    /// Whether a point on the facet plane lies inside the polygon (boundary included).
    pub fn contains(&self, p: &Point) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let edge = b - a;
            let rel = p - a;
            edge.cross(&rel).dot(&self.normal) >= -1e-12 * edge.norm().max(1.0) * rel.norm().max(1.0)
        })
    }

    /// Orthonormal in-plane axes anchored at the first vertex.
    pub fn frame(&self) -> (Point, Vector, Vector) {
        let u = (self.vertices[1] - self.vertices[0]).normalize();
        let w = self.normal.cross(&u);
        (self.vertices[0], u, w)
    }

    pub fn centroid(&self) -> Point {
        let sum = self.vertices.iter().fold(Vector::zeros(), |acc, v| acc + v.coords);
        Point::from(sum / self.vertices.len() as f64)
    }

    /// Intersection of the open segment `a → b` with the polygon, as the segment
    /// parameter, ignoring hits within `eps` meters of either endpoint.
    pub fn segment_hit(&self, a: &Point, b: &Point, eps: f64) -> Option<f64> {
        let (da, db) = (self.signed_distance(a), self.signed_distance(b));
        if da * db >= 0.0 {
            return None;
        }
        let t = da / (da - db);
        let len = (b - a).norm();
        if t * len <= eps || (1.0 - t) * len <= eps {
            return None;
        }
        let p = a + (b - a) * t;
        self.contains(&p).then_some(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Facet {
        Facet::quad("sq", [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]], "wood", 0.02).unwrap()
    }

    #[test]
    fn plane_from_winding() {
        let f = square();
        assert_eq!(f.normal(), Vector::new(0.0, 0.0, 1.0));
        assert!((f.area() - 1.0).abs() < 1e-15);
        assert_eq!(f.mirror(&Point::new(0.3, 0.2, 2.0)), Point::new(0.3, 0.2, -2.0));
    }

    #[test]
    fn containment_includes_boundary() {
        let f = square();
        assert!(f.contains(&Point::new(0.5, 0.5, 0.0)));
        assert!(f.contains(&Point::new(1.0, 0.5, 0.0)));
        assert!(!f.contains(&Point::new(1.01, 0.5, 0.0)));
    }

    #[test]
    fn rejects_invalid_polygons() {
        let concave = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(2.0, 0.0, 0.0),
            Point::new(1.0, 0.5, 0.0),
            Point::new(2.0, 2.0, 0.0),
            Point::new(0.0, 2.0, 0.0),
        ];
        let e = Facet::new("c", concave, "wood", 0.0).unwrap_err();
        assert!(e.to_string().contains("not convex"), "{e}");

        let bent = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(1.0, 1.0, 1e-6),
            Point::new(0.0, 1.0, 0.0),
        ];
        assert!(Facet::new("b", bent, "wood", 0.0).unwrap_err().to_string().contains("off the facet plane"));

        let line = vec![Point::new(0.0, 0.0, 0.0), Point::new(1.0, 0.0, 0.0), Point::new(2.0, 0.0, 0.0)];
        assert!(Facet::new("l", line, "wood", 0.0).is_err());
        assert!(Facet::new("two", vec![Point::origin(), Point::new(1.0, 0.0, 0.0)], "wood", 0.0).is_err());

        // Pentagram: every turn has the same sign but the boundary winds twice.
        let star: Vec<Point> = (0..5)
            .map(|k| {
                let a = f64::from(k) * 4.0 * std::f64::consts::PI / 5.0;
                Point::new(a.cos(), a.sin(), 0.0)
            })
            .collect();
        assert!(Facet::new("star", star, "glass", 0.0).is_err());
    }

    #[test]
    fn segment_hits() {
        let f = square();
        let a = Point::new(0.5, 0.5, 1.0);
        assert!(f.segment_hit(&a, &Point::new(0.5, 0.5, -1.0), 1e-6).is_some());
        assert!(f.segment_hit(&a, &Point::new(3.0, 0.5, -1.0), 1e-6).is_none());
        assert!(f.segment_hit(&a, &Point::new(0.5, 0.5, 0.0), 1e-6).is_none());
        assert!(f.segment_hit(&a, &Point::new(0.5, 0.5, 0.5), 1e-6).is_none());
    }

    #[test]
    fn blank_material_is_unknown() {
        let f = Facet::quad("u", [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]], " ", 0.0).unwrap();
        assert!(!f.is_material_known());
    }

    #[test]
    fn ids_and_materials_are_csv_safe() {
        let c = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(Facet::quad("a,b", c, "wood", 0.0).is_err());
        assert!(Facet::quad("north wall", c, "wood", 0.0).is_err());
        assert!(Facet::quad("w", c, "red|brick", 0.0).is_err());
    }
}
