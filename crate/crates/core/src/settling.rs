//! Settling thickness: the thinnest slab whose reflection coefficient stays inside a
//! dB band around the half-space value for every larger thickness.
//!
//! The slab coefficient oscillates with thickness while its envelope decays, so the
//! search is an exhaustive scan over a uniform thickness grid rather than a root find:
//! "stays inside for every larger thickness" can only be established by checking
//! each grid point up to the ceiling.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::csvio::{parse_f64, CsvDoc};
use crate::em::{
    echo_decay_length, fresnel_thick, relative_permittivity, slab_coefficient, MaterialParams, Polarization,
    SPEED_OF_LIGHT,
};
use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE_DB: f64 = 0.2;

/// Upper bound on the number of grid points a single query may evaluate.
const MAX_GRID_POINTS: usize = 50_000_000;

/// Grid step of one thirtieth of a free-space wavelength (0.01 mm at 1 THz).
pub fn default_grid_step(f_ghz: f64) -> f64 {
    SPEED_OF_LIGHT / (f_ghz * 1e9) / 30.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettlingQuery {
    pub material: MaterialParams,
    pub f_ghz: f64,
    pub theta_i: f64,
    pub tol_db: f64,
    /// Search ceiling in meters; `None` derives it from the echo decay length.
    pub h_max: Option<f64>,
    /// Thickness resolution in meters; `None` uses [`default_grid_step`].
    pub grid_step: Option<f64>,
    pub polarization: Polarization,
}

impl SettlingQuery {
    pub fn new(material: MaterialParams, f_ghz: f64) -> Self {
        Self {
            material,
            f_ghz,
            theta_i: 0.0,
            tol_db: DEFAULT_TOLERANCE_DB,
            h_max: None,
            grid_step: None,
            polarization: Polarization::Unpolarized,
        }
    }

    pub fn angle(mut self, theta_i: f64) -> Self {
        self.theta_i = theta_i;
        self
    }

    pub fn tolerance(mut self, tol_db: f64) -> Self {
        self.tol_db = tol_db;
        self
    }

    pub fn grid(mut self, step: f64, h_max: f64) -> Self {
        self.grid_step = Some(step);
        self.h_max = Some(h_max);
        self
    }

    pub fn step(mut self, step: f64) -> Self {
        self.grid_step = Some(step);
        self
    }

    pub fn polarization(mut self, pol: Polarization) -> Self {
        self.polarization = pol;
        self
    }

    /// Thickness at which the leading internal echo has shrunk to the tolerance.
    ///
    /// The slab coefficient deviates from the half-space value by roughly
    /// `|1 − r²|·exp(−h/L)` in relative amplitude, where `L` is the echo decay length.
    pub fn decay_estimate(&self) -> Result<f64> {
        let eta = relative_permittivity(&self.material, self.f_ghz)?;
        let r = fresnel_thick(eta, self.theta_i)?;
        let one = num_complex::Complex64::new(1.0, 0.0);
        let lead = (one - r.te * r.te).norm().max((one - r.tm * r.tm).norm());
        let rel = 10f64.powf(self.tol_db / 20.0) - 1.0;
        let decay = echo_decay_length(eta, self.theta_i, self.f_ghz);
        if !decay.is_finite() {
            return Err(Error::NotSettled(format!("{} at {} GHz is lossless; echoes never decay", self.material, self.f_ghz)));
        }
        Ok(decay * (lead / rel).ln().max(1.0))
    }

    fn resolve(&self) -> Result<(f64, f64)> {
        if !(self.tol_db > 0.0) {
            return Err(Error::invalid(format!("tolerance must be > 0 dB, got {}", self.tol_db)));
        }
        let step = self.grid_step.unwrap_or_else(|| default_grid_step(self.f_ghz));
        let h_max = match self.h_max {
            Some(h) => h,
            None => (4.0 * self.decay_estimate()?).max(20.0 * step),
        };
        if !(step.is_finite() && h_max.is_finite() && step > 0.0 && step < h_max) {
            return Err(Error::invalid(format!("degenerate grid: step {step} m, ceiling {h_max} m")));
        }
        if h_max / step > MAX_GRID_POINTS as f64 {
            return Err(Error::invalid(format!("grid of {:.0} points is too fine", h_max / step)));
        }
        Ok((step, h_max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settling {
    pub thickness_m: f64,
    /// Half-space coefficient in dB the band is centered on.
    pub band_center_db: f64,
    pub grid_step_m: f64,
    pub h_max_m: f64,
}

/// Smallest grid thickness from which the slab coefficient remains inside
/// `band_center ± tol_db` for every grid point up to the ceiling.
pub fn settling_thickness(q: &SettlingQuery) -> Result<Settling> {
    let (step, h_max) = q.resolve()?;
    let eta = relative_permittivity(&q.material, q.f_ghz)?;
    let center = fresnel_thick(eta, q.theta_i)?.db(q.polarization);
    let n = (h_max / step + 1e-9).floor() as usize;

    let deviations: Vec<f64> = (1..=n)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let r = slab_coefficient(eta, q.theta_i, i as f64 * step, q.f_ghz)?;
            Ok((r.db(q.polarization) - center).abs())
        })
        .collect::<Result<_>>()?;

    let last_violation = deviations.iter().rposition(|&d| !(d <= q.tol_db));
    let first_ok = match last_violation {
        None => 1,
        Some(idx) => {
            let grid_index = idx + 1;
            if 2 * grid_index >= n {
                return Err(Error::NotSettled(format!(
                    "{} at {} GHz: band ±{} dB still violated at {:.6} m (ceiling {:.6} m)",
                    q.material,
                    q.f_ghz,
                    q.tol_db,
                    grid_index as f64 * step,
                    h_max
                )));
            }
            grid_index + 1
        }
    };
    Ok(Settling { thickness_m: first_ok as f64 * step, band_center_db: center, grid_step_m: step, h_max_m: h_max })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub h_m: f64,
    /// `-inf` when the slab has zero thickness.
    pub te_db: f64,
    pub tm_db: f64,
}

/// Slab coefficients in amplitude dB over a thickness grid.
pub fn thickness_sweep(mat: &MaterialParams, f_ghz: f64, theta_i: f64, h_grid: &[f64]) -> Result<Vec<SweepPoint>> {
    if h_grid.is_empty() {
        return Err(Error::invalid("thickness grid is empty"));
    }
    if h_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("thickness grid must be strictly ascending"));
    }
    let eta = relative_permittivity(mat, f_ghz)?;
    h_grid
        .par_iter()
        .map(|&h| {
            let r = slab_coefficient(eta, theta_i, h, f_ghz)?;
            Ok(SweepPoint { h_m: h, te_db: r.te_db(), tm_db: r.tm_db() })
        })
        .collect()
}

pub const SWEEP_COLUMNS: [&str; 3] = ["h_m", "te_db", "tm_db"];

pub fn sweep_to_csv(doc: CsvDoc, points: &[SweepPoint]) -> String {
    let mut doc = CsvDoc { columns: SWEEP_COLUMNS.iter().map(|c| c.to_string()).collect(), ..doc };
    for p in points {
        doc.push_row(vec![p.h_m.to_string(), p.te_db.to_string(), p.tm_db.to_string()]);
    }
    doc.render()
}

pub fn sweep_from_csv(text: &str) -> Result<Vec<SweepPoint>> {
    let doc = CsvDoc::parse(text, Some(&SWEEP_COLUMNS))?;
    doc.rows
        .iter()
        .map(|(line, f)| {
            Ok(SweepPoint {
                h_m: parse_f64(&f[0], *line, "h_m")?,
                te_db: parse_f64(&f[1], *line, "te_db")?,
                tm_db: parse_f64(&f[2], *line, "tm_db")?,
            })
        })
        .collect()
}

/// One row of a settling-thickness table.
#[derive(Debug, Clone, PartialEq)]
pub struct SettlingRow {
    pub material: String,
    pub f_ghz: f64,
    pub theta_deg: f64,
    pub tol_db: f64,
    pub h_m: f64,
}

pub const SETTLING_COLUMNS: [&str; 5] = ["material", "f_ghz", "theta_deg", "tol_db", "h_m"];

pub fn settling_to_csv(doc: CsvDoc, rows: &[SettlingRow]) -> String {
    let mut doc = CsvDoc { columns: SETTLING_COLUMNS.iter().map(|c| c.to_string()).collect(), ..doc };
    for r in rows {
        doc.push_row(vec![
            r.material.clone(),
            r.f_ghz.to_string(),
            r.theta_deg.to_string(),
            r.tol_db.to_string(),
            r.h_m.to_string(),
        ]);
    }
    doc.render()
}

pub fn settling_from_csv(text: &str) -> Result<Vec<SettlingRow>> {
    let doc = CsvDoc::parse(text, Some(&SETTLING_COLUMNS))?;
    doc.rows
        .iter()
        .map(|(line, f)| {
            Ok(SettlingRow {
                material: f[0].clone(),
                f_ghz: parse_f64(&f[1], *line, "f_ghz")?,
                theta_deg: parse_f64(&f[2], *line, "theta_deg")?,
                tol_db: parse_f64(&f[3], *line, "tol_db")?,
                h_m: parse_f64(&f[4], *line, "h_m")?,
            })
        })
        .collect()
}

/// Settling thickness per material name at one frequency.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SettlingTable {
    pub f_ghz: f64,
    thickness: BTreeMap<String, f64>,
}

impl SettlingTable {
    pub fn new(f_ghz: f64) -> Self {
        Self { f_ghz, thickness: BTreeMap::new() }
    }

    pub fn insert(&mut self, material: impl Into<String>, h_m: f64) {
        self.thickness.insert(material.into(), h_m);
    }

    pub fn get(&self, material: &str) -> Option<f64> {
        self.thickness.get(material).copied()
    }

    /// Normal-incidence settling thickness of every material at `f_ghz`.
    pub fn compute(materials: &[MaterialParams], f_ghz: f64, tol_db: f64) -> Result<Self> {
        let mut table = Self::new(f_ghz);
        for m in materials {
            let s = settling_thickness(&SettlingQuery::new(m.clone(), f_ghz).tolerance(tol_db))?;
            table.insert(m.name.clone(), s.thickness_m);
        }
        Ok(table)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glass_1thz_default_grid() {
        // 1.4 mm reported at 0.1 mm precision.
        let s = settling_thickness(&SettlingQuery::new(MaterialParams::glass(), 1000.0)).unwrap();
        assert!((s.thickness_m - 1.4e-3).abs() <= 0.1e-3, "{s:?}");
        assert!((s.band_center_db + 7.34).abs() < 0.01);
    }

    #[test]
    fn wood_100ghz_default_grid() {
        // 21 mm reported at 1 mm precision.
        let s = settling_thickness(&SettlingQuery::new(MaterialParams::wood(), 100.0)).unwrap();
        assert!((s.thickness_m - 21e-3).abs() <= 1e-3, "{s:?}");
    }

    #[test]
    fn coarse_grid_undersamples_oscillation() {
        // A 1 mm step skips the ~1 mm interference ripple and reports too early.
        let coarse = settling_thickness(&SettlingQuery::new(MaterialParams::wood(), 100.0).grid(1e-3, 0.1)).unwrap();
        let fine = settling_thickness(&SettlingQuery::new(MaterialParams::wood(), 100.0)).unwrap();
        assert!(coarse.thickness_m < fine.thickness_m);
    }

    #[test]
    fn huge_tolerance_settles_at_first_point() {
        let q = SettlingQuery::new(MaterialParams::plaster(), 100.0).tolerance(1e9).grid(1e-3, 0.05);
        assert_eq!(settling_thickness(&q).unwrap().thickness_m, 1e-3);
    }

    #[test]
    fn low_ceiling_is_not_settled() {
        let q = SettlingQuery::new(MaterialParams::plaster(), 28.0).grid(1e-3, 0.02);
        assert!(matches!(settling_thickness(&q), Err(Error::NotSettled(_))));
    }

    #[test]
    fn degenerate_grids_rejected() {
        let base = SettlingQuery::new(MaterialParams::glass(), 1000.0);
        assert!(matches!(settling_thickness(&base.clone().grid(1e-3, 1e-3)), Err(Error::InvalidArgument(_))));
        assert!(matches!(settling_thickness(&base.clone().grid(0.0, 1e-3)), Err(Error::InvalidArgument(_))));
        assert!(matches!(settling_thickness(&base.tolerance(0.0)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn lossless_material_never_settles() {
        let m = MaterialParams::new("ideal", 4.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        assert!(matches!(settling_thickness(&SettlingQuery::new(m, 100.0)), Err(Error::NotSettled(_))));
    }

    #[test]
    fn sweep_marks_zero_thickness() {
        let pts = thickness_sweep(&MaterialParams::glass(), 1000.0, 0.0, &[0.0, 1e-3]).unwrap();
        assert_eq!(pts[0].te_db, f64::NEG_INFINITY);
        assert_eq!(pts[0].tm_db, f64::NEG_INFINITY);
        assert!(pts[1].te_db.is_finite());
        assert!(thickness_sweep(&MaterialParams::glass(), 1000.0, 0.0, &[]).is_err());
        assert!(thickness_sweep(&MaterialParams::glass(), 1000.0, 0.0, &[1e-3, 1e-3]).is_err());
    }

    #[test]
    fn csv_round_trips() {
        let pts = thickness_sweep(&MaterialParams::wood(), 28.0, 0.3, &[0.0, 1e-3, 2.5e-3]).unwrap();
        let text = sweep_to_csv(CsvDoc::default().meta("material", "wood"), &pts);
        assert_eq!(sweep_from_csv(&text).unwrap(), pts);

        let rows = vec![SettlingRow { material: "glass".into(), f_ghz: 1000.0, theta_deg: 0.0, tol_db: 0.2, h_m: 0.00142 }];
        assert_eq!(settling_from_csv(&settling_to_csv(CsvDoc::default(), &rows)).unwrap(), rows);
    }

    #[test]
    fn settling_table_lookup() {
        let t = SettlingTable::compute(&[MaterialParams::glass()], 1000.0, 0.2).unwrap();
        let h = t.get("glass").unwrap();
        assert!((h - 1.42e-3).abs() < 0.03e-3, "{h}");
        assert_eq!(t.get("wood"), None);
    }
}
