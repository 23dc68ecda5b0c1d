//! A bundled two-storey atrium scene for examples and end-to-end checks.
//!
//! The building is 20 m × 15 m × 7 m with wooden floors, plaster walls and
//! ceiling, a glass railing along a first-floor walkway and a glass cubicle
//! with a wooden door. Two transmitters and one receiver are placed so that a
//! two-bounce trajectory from each transmitter reflects off the same point of
//! the railing: the first near normal incidence before hitting the north wall,
//! the second at a grazing 67° before hitting the floor at 25°.

use crate::error::Result;
use crate::identify::MeasurementRecord;
use crate::scene::{trace, Aabb, Facet, Placement, Point, Scene, Trajectory, Vector};

/// The shared reflection point on the railing.
pub const SHARED_RP: [f64; 3] = [2.02, 0.5, 3.95];

pub const FREQUENCY_GHZ: f64 = 100.0;

/// Measured totals for the two trajectories through the shared point, `±1 dB`.
pub const MEASURED_RL_DB: [f64; 2] = [19.0, 21.5];
pub const UNCERTAINTY_DB: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct Atrium {
    pub scene: Scene,
    /// Railing then north wall.
    pub trajectory_1: (String, Trajectory),
    /// Railing then floor.
    pub trajectory_2: (String, Trajectory),
}

impl Atrium {
    pub fn measurements(&self) -> Vec<MeasurementRecord> {
        [&self.trajectory_1.0, &self.trajectory_2.0]
            .into_iter()
            .zip(MEASURED_RL_DB)
            .map(|(id, rl)| MeasurementRecord::new(id.clone(), rl, UNCERTAINTY_DB).expect("valid record"))
            .collect()
    }
}

fn rect(id: &str, corners: [[f64; 3]; 4], material: &str, thickness_m: f64) -> Facet {
    Facet::quad(id, corners, material, thickness_m).expect("demo facets are valid")
}

fn facets() -> Vec<Facet> {
    let (x, y, z) = (20.0, 15.0, 7.0);
    vec![
        rect("floor", [[0.0, 0.0, 0.0], [x, 0.0, 0.0], [x, y, 0.0], [0.0, y, 0.0]], "wood", 0.05),
        rect("ceiling", [[0.0, 0.0, z], [0.0, y, z], [x, y, z], [x, 0.0, z]], "plaster", 0.1),
        rect("wall_south", [[0.0, 0.0, 0.0], [0.0, 0.0, z], [x, 0.0, z], [x, 0.0, 0.0]], "plaster", 0.1),
        rect("wall_north", [[0.0, y, 0.0], [x, y, 0.0], [x, y, z], [0.0, y, z]], "plaster", 0.1),
        rect("wall_west", [[0.0, 0.0, 0.0], [0.0, y, 0.0], [0.0, y, z], [0.0, 0.0, z]], "plaster", 0.1),
        rect("wall_east", [[x, 0.0, 0.0], [x, 0.0, z], [x, y, z], [x, y, 0.0]], "plaster", 0.1),
        rect("walkway", [[0.0, 0.0, 3.5], [12.0, 0.0, 3.5], [12.0, 0.5, 3.5], [0.0, 0.5, 3.5]], "wood", 0.05),
        rect("railing", [[0.0, 0.5, 3.5], [12.0, 0.5, 3.5], [12.0, 0.5, 4.6], [0.0, 0.5, 4.6]], "glass", 0.01),
        rect("cubicle_west", [[14.0, 8.0, 0.0], [14.0, 12.0, 0.0], [14.0, 12.0, 2.5], [14.0, 8.0, 2.5]], "glass", 0.01),
        rect("cubicle_east", [[18.0, 8.0, 0.0], [18.0, 8.0, 2.5], [18.0, 12.0, 2.5], [18.0, 12.0, 0.0]], "glass", 0.01),
        rect("cubicle_north", [[14.0, 12.0, 0.0], [18.0, 12.0, 0.0], [18.0, 12.0, 2.5], [14.0, 12.0, 2.5]], "glass", 0.01),
        rect("cubicle_south", [[14.0, 8.0, 0.0], [14.0, 8.0, 2.5], [16.9, 8.0, 2.5], [16.9, 8.0, 0.0]], "glass", 0.01),
        rect("door", [[16.9, 8.0, 0.0], [16.9, 8.0, 2.5], [18.0, 8.0, 2.5], [18.0, 8.0, 0.0]], "wood", 0.04),
    ]
}

fn reflect(v: Vector, n: Vector) -> Vector {
    v - n * (2.0 * v.dot(&n))
}

/// Positions built backwards from the shared point: RX sits on the floor
/// reflection of the 67°/25° ray, and each TX on the incoming ray at the railing.
fn placement() -> Placement {
    let rp1 = Point::from(SHARED_RP);
    let (rail_n, floor_n) = (Vector::y(), Vector::z());
    let dy = 67.1_f64.to_radians().cos();
    let dz = -(25.0_f64.to_radians().cos());
    let down = Vector::new((1.0 - dy * dy - dz * dz).sqrt(), dy, dz);
    let rp3 = rp1 + down * (rp1.z / -dz);
    let rx = rp3 + reflect(down, floor_n) * 3.0;

    // Unfold the north wall at y = 15 to find the first trajectory's outgoing ray.
    let rx_image = Point::new(rx.x, 30.0 - rx.y, rx.z);
    let out1 = (rx_image - rp1).normalize();
    let tx1 = rp1 - reflect(out1, rail_n) * 5.0;
    let tx2 = rp1 - reflect(down, rail_n) * 3.0;
    Placement { tx: vec![tx1, tx2], rx: vec![rx] }
}

pub fn atrium() -> Result<Atrium> {
    let bounds = Aabb { min: Point::origin(), max: Point::new(20.0, 15.0, 7.0) };
    let scene = Scene::new(facets())?.with_bounds(bounds)?.with_placement(placement())?;
    let p = scene.placement().expect("placement set").clone();
    let find = |tx: usize, second: &str| -> Result<(String, Trajectory)> {
        let found = trace(&scene, p.tx[tx], p.rx[0], 2)?
            .into_iter()
            .enumerate()
            .find(|(_, t)| t.facet_ids() == ["railing", second])
            .expect("demo trajectory exists");
        Ok((crate::identify::trajectory_id(tx, 0, found.0), found.1))
    };
    let trajectory_1 = find(0, "wall_north")?;
    let trajectory_2 = find(1, "floor")?;
    Ok(Atrium { scene, trajectory_1, trajectory_2 })
}
