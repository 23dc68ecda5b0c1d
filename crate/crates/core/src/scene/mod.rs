//! Polygon scenes, JSON loading and image-method tracing.
//!
//! Scene files are UTF-8 JSON:
//!
//! ```json
//! {
//!   "units": "m",
//!   "bounds": {"min": [0, 0, 0], "max": [20, 15, 7]},
//!   "facets": [
//!     {"id": "floor", "vertices": [[0,0,0],[20,0,0],[20,15,0],[0,15,0]],
//!      "material": "wood", "thickness_m": 0.05}
//!   ]
//! }
//! ```
//!
//! `bounds` is optional. Without it the scene accepts transmitters and receivers anywhere.
//! An optional `"placement": {"tx": [[x,y,z], ...], "rx": [...]}` stores default
//! transmitter and receiver positions.

mod facet;
mod trace;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use facet::{Facet, Point, Vector, UNKNOWN_MATERIAL};
pub use trace::{incident_angle, trace, Hop, Trajectory, MAX_BOUNCES, OCCLUSION_EPS};

use crate::error::{Error, Result};
use crate::settling::SettlingTable;

const BOUNDS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - BOUNDS_TOL && p[i] <= self.max[i] + BOUNDS_TOL)
    }

    fn around<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        Some(it.fold(Self { min: first, max: first }, |b, p| Self { min: b.min.inf(p), max: b.max.sup(p) }))
    }
}

/// Transmitter and receiver positions stored with a scene.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Placement {
    pub tx: Vec<Point>,
    pub rx: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    facets: Vec<Facet>,
    hull: Aabb,
    bounds: Option<Aabb>,
    placement: Option<Placement>,
}

impl Scene {
    pub fn new(facets: Vec<Facet>) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &facets {
            if !seen.insert(f.id()) {
                return Err(Error::Scene { facet: f.id().to_string(), message: "duplicate facet id".into() });
            }
        }
        let hull = Aabb::around(facets.iter().flat_map(|f| f.vertices()))
            .ok_or_else(|| Error::Scene { facet: "-".into(), message: "scene has no facets".into() })?;
        Ok(Self { facets, hull, bounds: None, placement: None })
    }

    /// Restricts transmitter and receiver positions to `bounds`, which must enclose every facet.
    pub fn with_bounds(mut self, bounds: Aabb) -> Result<Self> {
        if (0..3).any(|i| !(bounds.min[i] <= bounds.max[i])) {
            return Err(Error::Scene { facet: "-".into(), message: "bounds min exceeds max".into() });
        }
        if let Some(f) = self.facets.iter().find(|f| !f.vertices().iter().all(|v| bounds.contains(v))) {
            return Err(Error::Scene { facet: f.id().to_string(), message: "facet extends outside the scene bounds".into() });
        }
        if let Some(p) = &self.placement {
            if let Some(q) = p.tx.iter().chain(&p.rx).find(|q| !bounds.contains(q)) {
                return Err(Error::invalid(format!("placement ({}, {}, {}) lies outside the scene bounds", q.x, q.y, q.z)));
            }
        }
        self.bounds = Some(bounds);
        Ok(self)
    }

    pub fn with_placement(mut self, placement: Placement) -> Result<Self> {
        for q in placement.tx.iter().chain(&placement.rx) {
            if !q.iter().all(|c| c.is_finite()) {
                return Err(Error::invalid("placement has non-finite coordinates"));
            }
            if self.bounds.is_some_and(|b| !b.contains(q)) {
                return Err(Error::invalid(format!("placement ({}, {}, {}) lies outside the scene bounds", q.x, q.y, q.z)));
            }
        }
        self.placement = Some(placement);
        Ok(self)
    }

    pub fn placement(&self) -> Option<&Placement> {
        self.placement.as_ref()
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facet(&self, id: &str) -> Option<&Facet> {
        self.facets.iter().find(|f| f.id() == id)
    }

    /// Explicit bounds, if any.
    pub fn bounds(&self) -> Option<&Aabb> {
        self.bounds.as_ref()
    }

    /// Bounding box of all facet vertices.
    pub fn hull(&self) -> &Aabb {
        &self.hull
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SceneFile =
            serde_json::from_str(text).map_err(|e| Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        if file.units != "m" {
            return Err(Error::parse("units", format!("only meters are supported, got {:?}", file.units)));
        }
        let facets = file
            .facets
            .into_iter()
            .map(|f| {
                let vertices = f.vertices.iter().map(|v| Point::new(v[0], v[1], v[2])).collect();
                Facet::new(f.id, vertices, f.material.unwrap_or_else(|| UNKNOWN_MATERIAL.to_string()), f.thickness_m)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut scene = Scene::new(facets)?;
        if let Some(b) = file.bounds {
            scene = scene.with_bounds(Aabb { min: Point::from(b.min), max: Point::from(b.max) })?;
        }
        if let Some(p) = file.placement {
            let points = |v: Vec<[f64; 3]>| v.into_iter().map(Point::from).collect();
            scene = scene.with_placement(Placement { tx: points(p.tx), rx: points(p.rx) })?;
        }
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        let file = SceneFile {
            units: "m".into(),
            bounds: self.bounds.map(|b| BoundsFile { min: b.min.coords.into(), max: b.max.coords.into() }),
            facets: self
                .facets
                .iter()
                .map(|f| FacetFile {
                    id: f.id().to_string(),
                    vertices: f.vertices().iter().map(|v| [v.x, v.y, v.z]).collect(),
                    material: Some(f.material().to_string()),
                    thickness_m: f.thickness_m(),
                })
                .collect(),
            placement: self.placement.as_ref().map(|p| {
                let arrays = |v: &[Point]| v.iter().map(|q| [q.x, q.y, q.z]).collect();
                PlacementFile { tx: arrays(&p.tx), rx: arrays(&p.rx) }
            }),
        };
        serde_json::to_string_pretty(&file).expect("scene serialization cannot fail")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SceneFile {
    units: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bounds: Option<BoundsFile>,
    facets: Vec<FacetFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    placement: Option<PlacementFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlacementFile {
    #[serde(default)]
    tx: Vec<[f64; 3]>,
    #[serde(default)]
    rx: Vec<[f64; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BoundsFile {
    min: [f64; 3],
    max: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FacetFile {
    id: String,
    vertices: Vec<[f64; 3]>,
    #[serde(default)]
    material: Option<String>,
    #[serde(default)]
    thickness_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SettlingStatus {
    /// At least as thick as the settling thickness.
    Settled,
    TooThin,
    /// Material unknown or not in the settling table.
    Indeterminate,
}

/// Whether each facet is thick enough for its reflection coefficient to have settled.
pub fn check_settling(scene: &Scene, table: &SettlingTable) -> Vec<(String, SettlingStatus)> {
    scene
        .facets()
        .iter()
        .map(|f| {
            let status = match table.get(f.material()) {
                Some(h) if f.is_material_known() => {
                    if f.thickness_m() >= h {
                        SettlingStatus::Settled
                    } else {
                        SettlingStatus::TooThin
                    }
                }
                _ => SettlingStatus::Indeterminate,
            };
            (f.id().to_string(), status)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_FACETS: &str = r#"{
        "units": "m",
        "bounds": {"min": [-1, -1, 0], "max": [5, 5, 3]},
        "facets": [
            {"id": "floor", "vertices": [[0,0,0],[4,0,0],[4,4,0],[0,4,0]], "material": "wood", "thickness_m": 0.05},
            {"id": "pane", "vertices": [[0,0,1],[0,4,1],[0,4,2],[0,0,2]], "material": "glass", "thickness_m": 0.005}
        ],
        "placement": {"tx": [[1, 1, 1]], "rx": [[3, 2, 1], [2, 3, 2]]}
    }"#;

    #[test]
    fn json_round_trip() {
        let scene = Scene::from_json(TWO_FACETS).unwrap();
        assert_eq!(scene.facets().len(), 2);
        assert_eq!(scene.facet("pane").unwrap().material(), "glass");
        assert_eq!(scene.placement().unwrap().rx.len(), 2);
        let again = Scene::from_json(&scene.to_json()).unwrap();
        assert_eq!(again, scene);
    }

    #[test]
    fn loader_names_offending_facet() {
        let bad = TWO_FACETS.replace("[0,4,2],[0,0,2]", "[0,4,2],[0.1,0,2]");
        match Scene::from_json(&bad) {
            Err(Error::Scene { facet, .. }) => assert_eq!(facet, "pane"),
            other => panic!("{other:?}"),
        }
        let dup = TWO_FACETS.replace("\"pane\"", "\"floor\"");
        assert!(matches!(Scene::from_json(&dup), Err(Error::Scene { .. })));
        let outside = TWO_FACETS.replace("\"max\": [5, 5, 3]", "\"max\": [3, 5, 3]");
        assert!(matches!(Scene::from_json(&outside), Err(Error::Scene { .. })));
        assert!(matches!(Scene::from_json(&TWO_FACETS.replace("\"m\"", "\"cm\"")), Err(Error::Parse { .. })));
        assert!(matches!(Scene::from_json("{"), Err(Error::Parse { .. })));
        let far = TWO_FACETS.replace("[[1, 1, 1]]", "[[1, 1, 9]]");
        assert!(matches!(Scene::from_json(&far), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn endpoints_must_be_inside_explicit_bounds() {
        let scene = Scene::from_json(TWO_FACETS).unwrap();
        let err = trace(&scene, Point::new(1.0, 1.0, 1.0), Point::new(9.0, 1.0, 1.0), 1).unwrap_err();
        assert!(err.to_string().contains("outside"), "{err}");
    }

    #[test]
    fn settling_report() {
        let scene = Scene::new(vec![
            Facet::quad("g", [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]], "glass", 5e-3).unwrap(),
            Facet::quad("w", [[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0]], "wood", 10e-3).unwrap(),
            Facet::quad("u", [[0.0, 0.0, 2.0], [1.0, 0.0, 2.0], [1.0, 1.0, 2.0], [0.0, 1.0, 2.0]], "unknown", 1.0).unwrap(),
        ])
        .unwrap();
        let mut table = SettlingTable::new(1000.0);
        table.insert("glass", 1.4e-3);
        table.insert("wood", 21e-3);
        let report = check_settling(&scene, &table);
        assert_eq!(
            report,
            vec![
                ("g".to_string(), SettlingStatus::Settled),
                ("w".to_string(), SettlingStatus::TooThin),
                ("u".to_string(), SettlingStatus::Indeterminate)
            ]
        );
    }
}
