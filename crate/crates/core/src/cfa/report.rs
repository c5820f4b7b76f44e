use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const CFI_MIN: f64 = 0.95;
pub const TLI_MIN: f64 = 0.95;
pub const RMSEA_MAX: f64 = 0.06;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub lhs: String,
    pub op: String,
    pub rhs: String,
    pub value: f64,
    pub se: Option<f64>,
    pub free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    /// Free-form label, e.g. the facet and builtin model name.
    pub label: String,
    pub converged: bool,
    /// No Heywood case, no out-of-range correlation, information matrix nonsingular.
    pub valid: bool,
    /// Why the solution is non-converged or invalid.
    pub issues: Vec<String>,
    pub iterations: usize,
    pub f_min: f64,
    pub chi_square: f64,
    pub df: i64,
    pub baseline_chi_square: f64,
    pub baseline_df: i64,
    pub cfi: Option<f64>,
    pub tli: Option<f64>,
    pub rmsea: Option<f64>,
    pub n: usize,
    pub n_items: usize,
    /// Ridge added to the sample covariance before fitting.
    pub ridge: Option<f64>,
    pub correlation_input: bool,
    pub estimates: Vec<Estimate>,
}

fn na(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "NA".into())
}

impl FitReport {
    /// Loading of `item` on `factor`, zero when the pair is not in the model.
    pub fn loading(&self, factor: &str, item: &str) -> f64 {
        self.estimates
            .iter()
            .find(|e| e.op == "=~" && e.lhs == factor && e.rhs == item)
            .map(|e| e.value)
            .unwrap_or(0.0)
    }

    pub fn loadings_of(&self, factor: &str) -> Vec<(String, f64)> {
        self.estimates
            .iter()
            .filter(|e| e.op == "=~" && e.lhs == factor)
            .map(|e| (e.rhs.clone(), e.value))
            .collect()
    }

    /// Item residual variances; factor variance rows are excluded.
    pub fn residual_variances(&self) -> Vec<(String, f64)> {
        let factors = self.factors();
        self.estimates
            .iter()
            .filter(|e| e.op == "~~" && e.lhs == e.rhs && !factors.contains(&e.lhs))
            .map(|e| (e.lhs.clone(), e.value))
            .collect()
    }

    pub fn factors(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in self.estimates.iter().filter(|e| e.op == "=~") {
            if !out.contains(&e.lhs) {
                out.push(e.lhs.clone());
            }
        }
        out
    }

    pub fn usable(&self) -> bool {
        self.converged && self.valid
    }

    pub fn chi_square_per_df(&self) -> Option<f64> {
        (self.df > 0).then(|| self.chi_square / self.df as f64)
    }

    /// Structured text record: summary lines followed by the parameter table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model: {}", self.model);
        let _ = writeln!(s, "label: {}", self.label);
        let _ = writeln!(s, "n: {}", self.n);
        let _ = writeln!(s, "items: {}", self.n_items);
        let _ = writeln!(s, "input: {}", if self.correlation_input { "correlation" } else { "covariance" });
        let _ = writeln!(
            s,
            "ridge: {}",
            self.ridge.map(|r| format!("{r:e}")).unwrap_or_else(|| "none".into())
        );
        let _ = writeln!(s, "converged: {}", self.converged);
        let _ = writeln!(s, "valid: {}", self.valid);
        for issue in &self.issues {
            let _ = writeln!(s, "issue: {issue}");
        }
        let _ = writeln!(s, "iterations: {}", self.iterations);
        let finite = |v: f64| Some(v).filter(|x| x.is_finite());
        let _ = writeln!(s, "f_min: {}", finite(self.f_min).map(|v| format!("{v:.6}")).unwrap_or_else(|| "NA".into()));
        let _ = writeln!(s, "chi_square: {}", na(finite(self.chi_square)));
        let _ = writeln!(s, "df: {}", self.df);
        let _ = writeln!(s, "baseline_chi_square: {}", na(finite(self.baseline_chi_square)));
        let _ = writeln!(s, "baseline_df: {}", self.baseline_df);
        let _ = writeln!(s, "cfi: {}", na(self.cfi));
        let _ = writeln!(s, "tli: {}", na(self.tli));
        let _ = writeln!(s, "rmsea: {}", na(self.rmsea));
        let _ = writeln!(s, "\nlhs\top\trhs\testimate\tse");
        for e in &self.estimates {
            let _ = writeln!(s, "{}\t{}\t{}\t{:.4}\t{}", e.lhs, e.op, e.rhs, e.value, na(e.se));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitIndices {
    pub cfi: f64,
    pub tli: f64,
    pub rmsea: f64,
}

/// CFI, TLI and RMSEA from the model and independence-baseline chi-squares.
/// Undefined (`None`) when either model has no degrees of freedom.
pub fn fit_indices(chi_square: f64, df: i64, baseline_chi_square: f64, baseline_df: i64, n: usize) -> Option<FitIndices> {
    if df <= 0 || baseline_df <= 0 || n < 2 {
        return None;
    }
    let (df, dfb) = (df as f64, baseline_df as f64);
    let excess = (chi_square - df).max(0.0);
    let denom = (baseline_chi_square - dfb).max(chi_square - df).max(0.0);
    let cfi = if denom == 0.0 { 1.0 } else { 1.0 - excess / denom };
    let tli = ((baseline_chi_square / dfb) - (chi_square / df)) / ((baseline_chi_square / dfb) - 1.0);
    let rmsea = (excess / (df * (n as f64 - 1.0))).sqrt();
    Some(FitIndices { cfi, tli, rmsea })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexFlag {
    Pass,
    Fail,
    NotAvailable(String),
}

impl IndexFlag {
    fn judge(value: Option<f64>, ok: impl Fn(f64) -> bool, reason: &str) -> IndexFlag {
        match value {
            Some(v) if v.is_finite() => {
                if ok(v) {
                    IndexFlag::Pass
                } else {
                    IndexFlag::Fail
                }
            }
            _ => IndexFlag::NotAvailable(reason.to_string()),
        }
    }

    pub fn passed(&self) -> bool {
        *self == IndexFlag::Pass
    }

    pub fn marker(&self) -> &'static str {
        match self {
            IndexFlag::Pass => "pass",
            IndexFlag::Fail => "fail",
            IndexFlag::NotAvailable(_) => "NA",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Acceptability {
    pub cfi: IndexFlag,
    pub tli: IndexFlag,
    pub rmsea: IndexFlag,
}

impl Acceptability {
    pub fn from_indices(cfi: Option<f64>, tli: Option<f64>, rmsea: Option<f64>, reason: &str) -> Self {
        Acceptability {
            cfi: IndexFlag::judge(cfi, |v| v >= CFI_MIN, reason),
            tli: IndexFlag::judge(tli, |v| v >= TLI_MIN, reason),
            rmsea: IndexFlag::judge(rmsea, |v| v <= RMSEA_MAX, reason),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.cfi.passed() && self.tli.passed() && self.rmsea.passed()
    }

    pub fn any_not_available(&self) -> bool {
        [&self.cfi, &self.tli, &self.rmsea]
            .iter()
            .any(|f| matches!(f, IndexFlag::NotAvailable(_)))
    }

    /// Human-readable reasons for every index that did not pass.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, flag) in [("CFI", &self.cfi), ("TLI", &self.tli), ("RMSEA", &self.rmsea)] {
            match flag {
                IndexFlag::Pass => {}
                IndexFlag::Fail => out.push(format!("{name} outside the acceptable range")),
                IndexFlag::NotAvailable(r) => out.push(format!("{name} not available ({r})")),
            }
        }
        out
    }
}

/// Pass/fail per index against CFI ≥ 0.95, TLI ≥ 0.95, RMSEA ≤ 0.06.
pub fn acceptability_flags(report: &FitReport) -> Acceptability {
    let reason = if !report.converged {
        "non-convergence".to_string()
    } else if !report.valid {
        format!("invalid solution: {}", report.issues.join("; "))
    } else if report.df <= 0 {
        "zero degrees of freedom".to_string()
    } else {
        "undefined".to_string()
    };
    Acceptability::from_indices(report.cfi, report.tli, report.rmsea, &reason)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit() {
        let f = fit_indices(54.0, 54, 900.0, 66, 200).unwrap();
        assert_eq!(f.cfi, 1.0);
        assert_eq!(f.rmsea, 0.0);
        assert!((f.tli - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_rmsea() {
        let f = fit_indices(100.0, 50, 20.0 * 66.0, 66, 101).unwrap();
        assert!((f.rmsea - 0.1).abs() < 1e-12);
        // CFI = 1 - 50 / (1320 - 66)
        assert!((f.cfi - (1.0 - 50.0 / 1254.0)).abs() < 1e-12);
        // TLI = (20 - 2) / (20 - 1)
        assert!((f.tli - 18.0 / 19.0).abs() < 1e-12);
    }

    #[test]
    fn zero_df_is_undefined() {
        assert!(fit_indices(0.0, 0, 100.0, 3, 50).is_none());
    }

    #[test]
    fn acceptability_thresholds() {
        let a = Acceptability::from_indices(Some(0.96), Some(0.95), Some(0.05), "");
        assert!(a.all_pass());
        let a = Acceptability::from_indices(Some(0.49), Some(0.38), Some(0.65), "");
        assert_eq!((a.cfi.clone(), a.tli.clone(), a.rmsea.clone()), (IndexFlag::Fail, IndexFlag::Fail, IndexFlag::Fail));
        let a = Acceptability::from_indices(None, None, None, "non-convergence");
        assert!(!a.all_pass());
        assert!(a.any_not_available());
        assert!(a.failures()[0].contains("non-convergence"));
    }
}
