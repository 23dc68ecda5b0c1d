//! Building-material constants and the frequency-dependent complex permittivity model.
//!
//! Each material is described by four constants `a, b, c, d` so that the
//! relative permittivity at frequency `f` (GHz) is
//!
//! ```text
//! η(f) = a·f^b − j·17.98·c·f^d / f
//! ```
//!
//! where `c·f^d` is the conductivity in S/m. A surface roughness (standard
//! deviation of height, meters) is carried alongside for the optional
//! specular attenuation applied by [`super::reflection_loss`].

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Surface height standard deviation in meters.
    pub roughness_sigma: f64,
}

impl MaterialParams {
    pub fn new(name: impl Into<String>, a: f64, b: f64, c: f64, d: f64, roughness_sigma: f64) -> Result<Self> {
        let name = name.into();
        let trimmed = name.trim();
        if trimmed.is_empty() || trimmed.contains([',', '#']) || trimmed.chars().any(char::is_whitespace) {
            return Err(Error::invalid(format!("material name {name:?} must be a non-empty token without ',' '#' or whitespace")));
        }
        if ![a, b, c, d, roughness_sigma].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid(format!("material {trimmed}: constants must be finite")));
        }
        if a <= 0.0 {
            return Err(Error::invalid(format!("material {trimmed}: a must be > 0, got {a}")));
        }
        if c < 0.0 {
            return Err(Error::invalid(format!("material {trimmed}: c must be >= 0, got {c}")));
        }
        if roughness_sigma < 0.0 {
            return Err(Error::invalid(format!("material {trimmed}: roughness must be >= 0, got {roughness_sigma}")));
        }
        Ok(Self { name: trimmed.to_string(), a, b, c, d, roughness_sigma })
    }

    pub fn wood() -> Self {
        Self { name: "wood".into(), a: 1.99, b: 0.0, c: 0.0047, d: 1.0718, roughness_sigma: 0.4e-3 }
    }

    pub fn plaster() -> Self {
        Self { name: "plaster".into(), a: 2.94, b: 0.0, c: 0.0116, d: 0.7076, roughness_sigma: 0.2e-3 }
    }

    pub fn glass() -> Self {
        Self { name: "glass".into(), a: 6.27, b: 0.0, c: 0.0043, d: 1.1925, roughness_sigma: 0.0 }
    }

    /// Same material with a different roughness.
    pub fn with_roughness(mut self, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::invalid(format!("roughness must be finite and >= 0, got {sigma}")));
        }
        self.roughness_sigma = sigma;
        Ok(self)
    }

    /// Conductivity in S/m at `f_ghz`.
    pub fn conductivity(&self, f_ghz: f64) -> f64 {
        self.c * f_ghz.powf(self.d)
    }

    /// One line of the plain-text material table.
    pub fn to_table_line(&self) -> String {
        format!("{}, {}, {}, {}, {}, {}", self.name, self.a, self.b, self.c, self.d, self.roughness_sigma)
    }
}

impl fmt::Display for MaterialParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Wood, plaster and glass in that order.
pub fn builtin_materials() -> Vec<MaterialParams> {
    vec![MaterialParams::wood(), MaterialParams::plaster(), MaterialParams::glass()]
}

pub fn builtin(name: &str) -> Option<MaterialParams> {
    builtin_materials().into_iter().find(|m| m.name.eq_ignore_ascii_case(name))
}

/// A named set of materials, usually loaded from a plain-text table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialTable {
    materials: Vec<MaterialParams>,
}

impl MaterialTable {
    pub fn builtin() -> Self {
        Self { materials: builtin_materials() }
    }

    pub fn from_materials(materials: Vec<MaterialParams>) -> Result<Self> {
        let mut table = Self::default();
        for m in materials {
            table.insert(m)?;
        }
        Ok(table)
    }

    fn insert(&mut self, m: MaterialParams) -> Result<()> {
        if self.get(&m.name).is_some() {
            return Err(Error::invalid(format!("duplicate material {}", m.name)));
        }
        self.materials.push(m);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&MaterialParams> {
        self.materials.iter().find(|m| m.name == name)
    }

    pub fn materials(&self) -> &[MaterialParams] {
        &self.materials
    }

    pub fn into_materials(self) -> Vec<MaterialParams> {
        self.materials
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }

    pub fn to_table_string(&self) -> String {
        let mut out = String::from("# name, a, b, c, d, sigma_m\n");
        for m in &self.materials {
            out.push_str(&m.to_table_line());
            out.push('\n');
        }
        out
    }
}

impl FromStr for MaterialTable {
    type Err = Error;

    /// One material per line: `name, a, b, c, d, sigma_m`. Fields may be separated by
    /// commas or whitespace; blank lines and `#` comments are ignored.
    fn from_str(s: &str) -> Result<Self> {
        let mut table = Self::default();
        for (idx, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let loc = format!("line {}", idx + 1);
            let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
            if fields.len() != 6 {
                return Err(Error::parse(loc, format!("expected 6 fields (name, a, b, c, d, sigma_m), found {}", fields.len())));
            }
            let mut nums = [0.0; 5];
            for (slot, tok) in nums.iter_mut().zip(&fields[1..]) {
                *slot = tok.parse().map_err(|_| Error::parse(loc.clone(), format!("not a number: {tok:?}")))?;
            }
            let m = MaterialParams::new(fields[0], nums[0], nums[1], nums[2], nums[3], nums[4])
                .map_err(|e| Error::parse(loc.clone(), e.to_string()))?;
            table.insert(m).map_err(|e| Error::parse(loc, e.to_string()))?;
        }
        Ok(table)
    }
}

/// Relative permittivity stored as `η = real − j·imag` with `imag ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPermittivity {
    pub real: f64,
    pub imag: f64,
}

impl ComplexPermittivity {
    pub const VACUUM: Self = Self { real: 1.0, imag: 0.0 };

    pub fn new(real: f64, imag: f64) -> Result<Self> {
        if !(real.is_finite() && imag.is_finite()) || imag < 0.0 {
            return Err(Error::invalid(format!("permittivity {real} - j{imag}: need finite parts and imag >= 0")));
        }
        Ok(Self { real, imag })
    }

    pub fn lossless(real: f64) -> Self {
        Self { real, imag: 0.0 }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.real, -self.imag)
    }
}

pub fn relative_permittivity(mat: &MaterialParams, f_ghz: f64) -> Result<ComplexPermittivity> {
    if !(f_ghz.is_finite() && f_ghz > 0.0) {
        return Err(Error::invalid(format!("frequency must be > 0 GHz, got {f_ghz}")));
    }
    let real = mat.a * f_ghz.powf(mat.b);
    let imag = 17.98 * mat.c * f_ghz.powf(mat.d) / f_ghz;
    Ok(ComplexPermittivity { real, imag })
}
