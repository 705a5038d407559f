//! Structured run report and the terse stdout summary.

use std::fmt::Write as _;

use momsos::certify::{CertificateAttempt, CertificateBundle, HierarchyReport, OrderRecord};
use momsos::instance_file::TermSpec;
use momsos::poly::Poly;
use momsos::OracleResult;
use serde::Serialize;

/// Largest `|ρ − oracle|` reported as agreement.
pub const ORACLE_AGREEMENT_TOL: f64 = 1e-3;

#[derive(Debug, Serialize)]
pub struct InstanceInfo {
    pub path: String,
    pub name: String,
    pub dimension: usize,
    pub radius: f64,
    pub num_constraints: usize,
}

#[derive(Debug, Serialize)]
pub struct RunSettings {
    pub min_order: usize,
    pub max_order: usize,
    pub single_order: bool,
    pub tol: f64,
    pub solver_tol: f64,
    pub certify: bool,
    pub oracle: bool,
}

#[derive(Debug, Serialize)]
pub struct CertificateSummary {
    pub bounds: Vec<usize>,
    /// `None` marks a vanishing factor.
    pub degrees: Vec<Option<usize>>,
    pub ranks: Vec<usize>,
    pub residual: f64,
    pub min_gram_eigenvalue: f64,
    /// `factors[j][row][col]` as a term list.
    pub factors: Vec<Vec<Vec<Vec<TermSpec>>>>,
    pub gram_blocks: Vec<Vec<Vec<f64>>>,
}

fn terms(p: &Poly<f64>) -> Vec<TermSpec> {
    p.terms()
        .map(|(a, c)| TermSpec {
            exps: a.exponents().to_vec(),
            coef: c,
        })
        .collect()
}

impl From<&CertificateBundle> for CertificateSummary {
    fn from(b: &CertificateBundle) -> Self {
        CertificateSummary {
            bounds: b.bounds.clone(),
            degrees: b.degrees.clone(),
            ranks: b.ranks(),
            residual: b.residual,
            min_gram_eigenvalue: b.min_gram_eigenvalue,
            factors: b
                .factors
                .iter()
                .map(|l| {
                    (0..l.rows())
                        .map(|i| (0..l.cols()).map(|j| terms(l.get(i, j))).collect())
                        .collect()
                })
                .collect(),
            gram_blocks: b
                .gram_blocks
                .iter()
                .map(|g| g.row_iter().map(|r| r.iter().copied().collect()).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OracleSummary {
    #[serde(flatten)]
    pub result: OracleResult,
    /// Bound compared against: the certified value if any, else the best `ρ_n`.
    pub reference: Option<f64>,
    pub difference: Option<f64>,
    pub agrees: Option<bool>,
}

impl OracleSummary {
    pub fn new(result: OracleResult, reference: Option<f64>) -> Self {
        let difference = reference.map(|r| (r - result.value).abs());
        OracleSummary {
            result,
            reference,
            difference,
            agrees: difference.map(|d| d <= ORACLE_AGREEMENT_TOL),
        }
    }
}

#[derive(Debug, Default, Serialize)]
pub struct Timings {
    pub parse_seconds: f64,
    pub certificate_seconds: f64,
    pub hierarchy_seconds: f64,
    pub oracle_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub instance: InstanceInfo,
    pub settings: RunSettings,
    pub n_min: usize,
    pub orders: Vec<OrderRecord>,
    pub certified: bool,
    pub certified_order: Option<usize>,
    pub minimizer: Option<Vec<f64>>,
    pub value: Option<f64>,
    pub best_bound: Option<f64>,
    pub predicted_order: Option<usize>,
    pub certificate: Option<CertificateSummary>,
    pub certificate_attempts: Vec<CertificateAttempt>,
    pub certificate_note: Option<String>,
    pub oracle: Option<OracleSummary>,
    pub timings: Timings,
    pub exit_code: i32,
}

impl RunReport {
    pub fn new(instance: InstanceInfo, settings: RunSettings, h: HierarchyReport) -> Self {
        RunReport {
            instance,
            settings,
            n_min: h.n_min,
            certified: h.certified,
            certified_order: h.certified_order,
            minimizer: h.minimizer,
            value: h.value,
            best_bound: h.best_bound,
            predicted_order: h.predicted_order,
            certificate: h.certificate.as_ref().map(CertificateSummary::from),
            certificate_attempts: h.certificate_attempts,
            certificate_note: h.certificate_note,
            orders: h.orders,
            oracle: None,
            timings: Timings::default(),
            exit_code: 0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let i = &self.instance;
        let _ = writeln!(s, "instance {} (d = {}, R = {}, {} constraints)", i.name, i.dimension, i.radius, i.num_constraints);
        if self.settings.certify {
            match (&self.certificate, &self.certificate_note) {
                (Some(c), _) => {
                    let _ = writeln!(
                        s,
                        "certificate: degrees {}, residual {:.1e}, predicted order {}",
                        fmt_degrees(&c.degrees),
                        c.residual,
                        self.predicted_order.map_or("-".into(), |n| n.to_string())
                    );
                }
                (None, Some(note)) => {
                    let _ = writeln!(s, "certificate: {note}");
                }
                (None, None) => {
                    let _ = writeln!(s, "certificate: none");
                }
            }
        }
        for o in &self.orders {
            match (o.bound, &o.point, o.gap) {
                (Some(b), Some(x), Some(g)) => {
                    let _ = writeln!(
                        s,
                        "order {}: rho = {b:.9}, x = {}, gap {g:.1e}{}",
                        o.order,
                        fmt_point(x),
                        if o.exact { ", exact" } else { "" }
                    );
                }
                _ => {
                    let _ = writeln!(s, "order {}: {}", o.order, o.status);
                }
            }
        }
        match (self.certified_order, self.value, &self.minimizer) {
            (Some(n), Some(v), Some(x)) => {
                let _ = writeln!(s, "certified at order {n}: f* = {v:.9} at {}", fmt_point(x));
            }
            _ => {
                let _ = writeln!(
                    s,
                    "not certified; best bound {}",
                    self.best_bound.map_or("-".into(), |b| format!("{b:.9}"))
                );
            }
        }
        if let Some(o) = &self.oracle {
            let _ = writeln!(
                s,
                "oracle: {:.9} at {}{}",
                o.result.value,
                fmt_point(&o.result.argmin),
                o.difference.map_or(String::new(), |d| format!(" (|rho - oracle| = {d:.1e})"))
            );
        }
        s
    }
}

fn fmt_point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

fn fmt_degrees(d: &[Option<usize>]) -> String {
    let parts: Vec<String> = d
        .iter()
        .map(|a| a.map_or("0 (vanishing)".into(), |a| a.to_string()))
        .collect();
    format!("[{}]", parts.join(", "))
}
