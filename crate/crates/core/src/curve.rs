//! Coverage curves: SINR CCDF values on a threshold grid.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile for binomial half-widths.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCurve {
    pub gamma_db: Vec<f64>,
    pub value: Vec<f64>,
    /// 95% half-width for Monte Carlo curves, zero for analytic ones.
    pub ci_halfwidth: Vec<f64>,
}

/// Checks that a threshold grid is non-empty, finite and strictly increasing.
pub fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::config(format!("{what} grid is empty")));
    }
    if grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::config(format!("{what} grid has non-finite entries")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(format!("{what} grid must be strictly increasing")));
    }
    Ok(())
}

impl CoverageCurve {
    pub fn analytic(gamma_db: &[f64], value: Vec<f64>) -> Self {
        CoverageCurve {
            gamma_db: gamma_db.to_vec(),
            ci_halfwidth: vec![0.0; value.len()],
            value,
        }
    }

    /// Empirical CCDF `P(SINR > gamma)` of SINR samples given in dB.
    pub fn from_sinr_samples(gamma_db: &[f64], sinr_db: &[f64]) -> Result<Self> {
        check_grid(gamma_db, "gamma")?;
        let mut sorted = sinr_db.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut value = Vec::with_capacity(gamma_db.len());
        let mut ci = Vec::with_capacity(gamma_db.len());
        for &g in gamma_db {
            let not_above = sorted.partition_point(|&s| s <= g);
            let p = (sorted.len() - not_above) as f64 / n;
            value.push(p);
            ci.push(Z95 * (p * (1.0 - p) / n).sqrt());
        }
        Ok(CoverageCurve {
            gamma_db: gamma_db.to_vec(),
            value,
            ci_halfwidth: ci,
        })
    }

    pub fn len(&self) -> usize {
        self.gamma_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma_db.is_empty()
    }

    /// Largest absolute difference to another curve on the same grid.
    pub fn sup_gap(&self, other: &CoverageCurve) -> f64 {
        self.value
            .iter()
            .zip(&other.value)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Values interpolated linearly in dB at `gamma_db`.
    pub fn at(&self, gamma_db: f64) -> f64 {
        let g = &self.gamma_db;
        if gamma_db <= g[0] {
            return self.value[0];
        }
        if gamma_db >= g[g.len() - 1] {
            return self.value[g.len() - 1];
        }
        let i = g.partition_point(|&x| x <= gamma_db) - 1;
        let t = (gamma_db - g[i]) / (g[i + 1] - g[i]);
        self.value[i] + t * (self.value[i + 1] - self.value[i])
    }

    /// Non-increasing in gamma, allowing slack of the combined half-widths.
    pub fn is_monotone(&self) -> bool {
        self.value.windows(2).zip(self.ci_halfwidth.windows(2)).all(|(v, c)| {
            v[1] <= v[0] + c[0] + c[1] + 1e-12
        })
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "gamma_db,value,ci_halfwidth")?;
        for i in 0..self.len() {
            writeln!(out, "{},{},{}", self.gamma_db[i], self.value[i], self.ci_halfwidth[i])?;
        }
        Ok(())
    }

    /// Parses the output of [`CoverageCurve::write_csv`].
    pub fn read_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some("gamma_db,value,ci_halfwidth") => {}
            other => return Err(Error::config(format!("unexpected CSV header {other:?}"))),
        }
        let mut curve = CoverageCurve {
            gamma_db: vec![],
            value: vec![],
            ci_halfwidth: vec![],
        };
        for (n, line) in lines.enumerate() {
            let fields: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::config(format!("CSV line {}: {e}", n + 2)))?;
            if fields.len() != 3 {
                return Err(Error::config(format!("CSV line {}: expected 3 fields", n + 2)));
            }
            curve.gamma_db.push(fields[0]);
            curve.value.push(fields[1]);
            curve.ci_halfwidth.push(fields[2]);
        }
        Ok(curve)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_ccdf() {
        let samples = [-5.0, 0.0, 1.0, 10.0];
        let c = CoverageCurve::from_sinr_samples(&[-200.0, 0.0, 5.0, 20.0], &samples).unwrap();
        assert_eq!(c.value, vec![1.0, 0.5, 0.25, 0.0]);
        assert_eq!(c.ci_halfwidth[0], 0.0);
        assert!(c.is_monotone());
    }

    #[test]
    fn grid_checks() {
        assert!(CoverageCurve::from_sinr_samples(&[], &[1.0]).is_err());
        assert!(CoverageCurve::from_sinr_samples(&[1.0, 1.0], &[1.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let c = CoverageCurve::from_sinr_samples(&[-3.0, 0.5, 7.25], &[0.1, 2.0, 9.0]).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let back = CoverageCurve::read_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
