//! Link-budget arithmetic: path loss, free-space loss and the reflection loss left over.

use crate::error::{Error, Result};

/// Slack allowed before a negative reflection loss is treated as inconsistent.
pub const RL_NEGATIVE_SLACK_DB: f64 = 1e-9;

/// Free-space path loss in dB, `f` in GHz and `d` in meters.
pub fn fspl(f_ghz: f64, d_m: f64) -> Result<f64> {
    if !(f_ghz.is_finite() && f_ghz > 0.0) {
        return Err(Error::invalid(format!("frequency must be > 0 GHz, got {f_ghz}")));
    }
    if !(d_m.is_finite() && d_m > 0.0) {
        return Err(Error::invalid(format!("distance must be > 0 m, got {d_m}")));
    }
    Ok(32.4 + 20.0 * f_ghz.log10() + 20.0 * d_m.log10())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// dBm
    pub p_tx: f64,
    /// dBm
    pub p_rx: f64,
    /// Total path loss, dB.
    pub pl: f64,
    /// Free-space part of `pl`, dB.
    pub fspl: f64,
    /// Reflection part of `pl`, dB.
    pub rl_total: f64,
    pub f_ghz: f64,
    /// Unfolded path length in meters.
    pub d_m: f64,
}

/// Splits the measured path loss of a reflected path into free-space and reflection parts.
pub fn extract_total_rl(p_tx: f64, p_rx: f64, f_ghz: f64, d_m: f64) -> Result<LinkBudget> {
    if !(p_tx.is_finite() && p_rx.is_finite()) {
        return Err(Error::invalid("powers must be finite"));
    }
    let fspl = fspl(f_ghz, d_m)?;
    let pl = p_tx - p_rx;
    let rl_total = pl - fspl;
    if rl_total < -RL_NEGATIVE_SLACK_DB {
        return Err(Error::InconsistentMeasurement(format!(
            "received {p_rx} dBm exceeds the free-space bound {} dBm over {d_m} m at {f_ghz} GHz",
            p_tx - fspl
        )));
    }
    Ok(LinkBudget { p_tx, p_rx, pl, fspl, rl_total: rl_total.max(0.0), f_ghz, d_m })
}

/// Received power for a path with the given total reflection loss.
pub fn received_power(p_tx: f64, rl_total: f64, f_ghz: f64, d_m: f64) -> Result<f64> {
    Ok(p_tx - fspl(f_ghz, d_m)? - rl_total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fspl_substitution() {
        assert!((fspl(100.0, 10.0).unwrap() - 92.4).abs() < 1e-12);
        assert_eq!(fspl(1.0, 1.0).unwrap(), 32.4);
        let doubled = fspl(28.0, 14.0).unwrap() - fspl(28.0, 7.0).unwrap();
        assert!((doubled - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!((doubled - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn fspl_rejects_non_positive() {
        assert!(fspl(0.0, 1.0).is_err());
        assert!(fspl(1.0, 0.0).is_err());
        assert!(fspl(1.0, -3.0).is_err());
    }

    #[test]
    fn extracts_reflection_part() {
        let lb = extract_total_rl(30.0, 30.0 - 92.4 - 14.68, 100.0, 10.0).unwrap();
        assert!((lb.rl_total - 14.68).abs() < 1e-9);
        assert!((lb.pl - lb.fspl - lb.rl_total).abs() < 1e-12);
        assert!((lb.p_tx - lb.p_rx - lb.pl).abs() < 1e-12);
    }

    #[test]
    fn lossless_reflection_limit() {
        let f = fspl(100.0, 10.0).unwrap();
        assert_eq!(extract_total_rl(20.0, 20.0 - f, 100.0, 10.0).unwrap().rl_total, 0.0);
    }

    #[test]
    fn above_free_space_is_inconsistent() {
        let err = extract_total_rl(20.0, -50.0, 100.0, 10.0).unwrap_err();
        assert!(matches!(err, Error::InconsistentMeasurement(_)));
    }

    #[test]
    fn received_power_inverts_extraction() {
        let p_rx = received_power(23.0, 19.2, 100.0, 12.5).unwrap();
        let lb = extract_total_rl(23.0, p_rx, 100.0, 12.5).unwrap();
        assert!((lb.rl_total - 19.2).abs() < 1e-9);
    }
}
