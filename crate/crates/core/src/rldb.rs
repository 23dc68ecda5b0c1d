//! Gridded reflection-loss database over (material, frequency, incident angle).
//!
//! Cells are computed from the thick-surface Fresnel model and looked up with
//! bilinear interpolation in (log-frequency, angle). Queries outside the grid
//! hull are rejected; there is no extrapolation.
//!
//! The on-disk format is a UTF-8 CSV:
//!
//! ```text
//! #version=1
//! #kappa=0
//! material,f_ghz,angle_deg,rl_db
//! wood,100,0,15.318...
//! ```
//!
//! Values are written in shortest round-trip form so that a load restores every
//! cell bit for bit.

use std::path::Path;

use rayon::prelude::*;

use crate::csvio::{parse_f64, CsvDoc};
use crate::em::{reflection_loss, MaterialParams};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const COLUMNS: [&str; 4] = ["material", "f_ghz", "angle_deg", "rl_db"];
pub const MAX_ANGLE_DEG: f64 = 89.0;

/// Default angle grid: 0° to 85° in 1° steps.
pub fn default_angles() -> Vec<f64> {
    (0..=85).map(f64::from).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RlDatabase {
    materials: Vec<String>,
    freqs: Vec<f64>,
    angles_deg: Vec<f64>,
    /// Indexed `[(material * freqs + freq) * angles + angle]`.
    rl: Vec<f64>,
    kappa: f64,
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid(format!("{name} grid is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{name} grid has non-finite values")));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid(format!("{name} grid must be strictly ascending")));
    }
    Ok(())
}

/// Lower node, upper node and weight of `x` inside `grid`, or `None` outside the hull.
fn bracket(grid: &[f64], x: f64) -> Option<(usize, usize, f64)> {
    let (first, last) = (grid[0], grid[grid.len() - 1]);
    if !(x >= first && x <= last) {
        return None;
    }
    let above = grid.partition_point(|&g| g <= x);
    if above == grid.len() {
        let i = grid.len() - 1;
        return Some((i, i, 0.0));
    }
    let (i0, i1) = (above - 1, above);
    Some((i0, i1, (x - grid[i0]) / (grid[i1] - grid[i0])))
}

impl RlDatabase {
    pub fn build(materials: &[MaterialParams], freqs: &[f64], angles_deg: &[f64], kappa: f64) -> Result<Self> {
        if materials.is_empty() {
            return Err(Error::invalid("no materials"));
        }
        for (i, m) in materials.iter().enumerate() {
            if materials[..i].iter().any(|o| o.name == m.name) {
                return Err(Error::invalid(format!("duplicate material {}", m.name)));
            }
        }
        check_grid("frequency", freqs)?;
        check_grid("angle", angles_deg)?;
        if freqs[0] <= 0.0 {
            return Err(Error::invalid("frequencies must be > 0 GHz"));
        }
        if angles_deg[0] < 0.0 || angles_deg[angles_deg.len() - 1] > MAX_ANGLE_DEG {
            return Err(Error::invalid(format!("angles must lie within [0, {MAX_ANGLE_DEG}] degrees")));
        }
        let (nf, na) = (freqs.len(), angles_deg.len());
        let rl = (0..materials.len() * nf * na)
            .into_par_iter()
            .map(|idx| {
                let (m, rest) = (idx / (nf * na), idx % (nf * na));
                let (fi, ai) = (rest / na, rest % na);
                reflection_loss(&materials[m], freqs[fi], angles_deg[ai].to_radians(), kappa)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            materials: materials.iter().map(|m| m.name.clone()).collect(),
            freqs: freqs.to_vec(),
            angles_deg: angles_deg.to_vec(),
            rl,
            kappa,
        })
    }

    pub fn materials(&self) -> &[String] {
        &self.materials
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    fn material_index(&self, material: &str) -> Result<usize> {
        self.materials
            .iter()
            .position(|m| m == material)
            .ok_or_else(|| Error::OutOfRange(format!("material {material:?} is not in the database")))
    }

    fn cell(&self, m: usize, fi: usize, ai: usize) -> f64 {
        self.rl[(m * self.freqs.len() + fi) * self.angles_deg.len() + ai]
    }

    /// Stored value at grid node indices.
    pub fn node(&self, material: &str, freq_index: usize, angle_index: usize) -> Result<f64> {
        let m = self.material_index(material)?;
        if freq_index >= self.freqs.len() || angle_index >= self.angles_deg.len() {
            return Err(Error::OutOfRange(format!("node ({freq_index}, {angle_index}) outside the grid")));
        }
        Ok(self.cell(m, freq_index, angle_index))
    }

    /// Interpolated reflection loss in dB; bilinear in (ln f, angle).
    pub fn lookup(&self, material: &str, f_ghz: f64, theta_deg: f64) -> Result<f64> {
        let m = self.material_index(material)?;
        let (f0, f1, tf) = if self.freqs.len() == 1 {
            if f_ghz != self.freqs[0] {
                return Err(Error::OutOfRange(format!("{f_ghz} GHz: database only holds {} GHz", self.freqs[0])));
            }
            (0, 0, 0.0)
        } else {
            let (lo, hi) = (self.freqs[0], self.freqs[self.freqs.len() - 1]);
            let log_grid: Vec<f64> = self.freqs.iter().map(|f| f.ln()).collect();
            let (i0, i1, _) = bracket(&self.freqs, f_ghz)
                .ok_or_else(|| Error::OutOfRange(format!("{f_ghz} GHz outside [{lo}, {hi}] GHz")))?;
            let t = if i0 == i1 || f_ghz == self.freqs[i0] {
                0.0
            } else {
                (f_ghz.ln() - log_grid[i0]) / (log_grid[i1] - log_grid[i0])
            };
            (i0, i1, t)
        };
        let (a0, a1, ta) = bracket(&self.angles_deg, theta_deg).ok_or_else(|| {
            Error::OutOfRange(format!(
                "{theta_deg}° outside [{}, {}]°",
                self.angles_deg[0],
                self.angles_deg[self.angles_deg.len() - 1]
            ))
        })?;
        let along = |fi: usize| {
            let (v0, v1) = (self.cell(m, fi, a0), self.cell(m, fi, a1));
            if ta == 0.0 {
                v0
            } else {
                (1.0 - ta) * v0 + ta * v1
            }
        };
        let lo = along(f0);
        Ok(if tf == 0.0 { lo } else { (1.0 - tf) * lo + tf * along(f1) })
    }

    pub fn to_csv(&self) -> String {
        let mut doc = CsvDoc::new(&COLUMNS).meta("version", FORMAT_VERSION).meta("kappa", self.kappa);
        for (m, name) in self.materials.iter().enumerate() {
            for (fi, f) in self.freqs.iter().enumerate() {
                for (ai, a) in self.angles_deg.iter().enumerate() {
                    doc.push_row(vec![name.clone(), f.to_string(), a.to_string(), self.cell(m, fi, ai).to_string()]);
                }
            }
        }
        doc.render()
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let doc = CsvDoc::parse(text, Some(&COLUMNS))?;
        let version = doc.get_meta("version").ok_or_else(|| Error::parse("header", "missing #version line"))?;
        if version.parse::<u32>().ok() != Some(FORMAT_VERSION) {
            return Err(Error::Version { found: version.to_string(), expected: FORMAT_VERSION });
        }
        let kappa_text = doc.get_meta("kappa").ok_or_else(|| Error::parse("header", "missing #kappa line"))?;
        let kappa = kappa_text
            .parse::<f64>()
            .map_err(|_| Error::parse("header", format!("kappa: not a number: {kappa_text:?}")))?;

        let mut rows = Vec::with_capacity(doc.rows.len());
        let (mut materials, mut freqs, mut angles) = (Vec::<String>::new(), Vec::<f64>::new(), Vec::<f64>::new());
        for (line, f) in &doc.rows {
            let freq = parse_f64(&f[1], *line, "f_ghz")?;
            let angle = parse_f64(&f[2], *line, "angle_deg")?;
            let rl = parse_f64(&f[3], *line, "rl_db")?;
            if !(rl.is_finite() && rl >= 0.0) {
                return Err(Error::parse(format!("line {line}"), format!("rl_db must be finite and >= 0, got {rl}")));
            }
            if !materials.contains(&f[0]) {
                materials.push(f[0].clone());
            }
            if !freqs.contains(&freq) {
                freqs.push(freq);
            }
            if !angles.contains(&angle) {
                angles.push(angle);
            }
            rows.push((*line, f[0].as_str(), freq, angle, rl));
        }
        if rows.is_empty() {
            return Err(Error::parse("end of input", "no data rows"));
        }
        freqs.sort_by(f64::total_cmp);
        angles.sort_by(f64::total_cmp);
        let (nf, na) = (freqs.len(), angles.len());
        let mut cells = vec![None; materials.len() * nf * na];
        for (line, name, freq, angle, rl) in rows {
            let m = materials.iter().position(|n| n == name).unwrap_or_default();
            let fi = freqs.partition_point(|&v| v < freq);
            let ai = angles.partition_point(|&v| v < angle);
            let slot = &mut cells[(m * nf + fi) * na + ai];
            if slot.is_some() {
                return Err(Error::parse(format!("line {line}"), format!("duplicate cell ({name}, {freq}, {angle})")));
            }
            *slot = Some(rl);
        }
        let missing = cells.iter().filter(|c| c.is_none()).count();
        if missing > 0 {
            return Err(Error::parse("end of input", format!("grid incomplete: {missing} cells missing (truncated file?)")));
        }
        Ok(Self { materials, freqs, angles_deg: angles, rl: cells.into_iter().flatten().collect(), kappa })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}
