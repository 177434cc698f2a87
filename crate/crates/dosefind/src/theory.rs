//! Allocation constants and Sequential Halving complexity for a toxicity
//! vector.

use std::fmt::Write as _;

use dosefind_core::stats::{
    allocation_constant, binary_kl, gap_profile, lower_bound_constant, mtd_index, proxy_dose, sh_error_bound,
    GapProfile,
};
use dosefind_core::{Error, Threshold};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoseTheory {
    /// One-based.
    pub dose: usize,
    pub p: f64,
    /// `None` for the MTD itself.
    pub proxy: Option<f64>,
    pub kl: Option<f64>,
    /// `1 / kl(p_k, d*_k)`; `None` where undefined.
    pub allocation_constant: Option<f64>,
    pub lower_bound_constant: Option<f64>,
    /// Why the constants are undefined, if they are.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub theta: f64,
    /// One-based.
    pub mtd: usize,
    pub doses: Vec<DoseTheory>,
    pub gaps: Option<GapProfile>,
    pub budget: Option<usize>,
    pub sh_error_bound: Option<f64>,
}

fn note(e: &Error) -> String {
    match e {
        Error::OptimalDose(_) => "mtd".into(),
        Error::DistanceTie(_) => "undefined: distance tie".into(),
        Error::OptimalOnThreshold => "undefined: mtd on threshold".into(),
        e => format!("undefined: {e}"),
    }
}

pub fn analyze(p: &[f64], theta: f64, budget: Option<usize>) -> anyhow::Result<TheoryReport> {
    let th = Threshold::new(theta)?;
    dosefind_core::ToxicityVector::new(p.to_vec())?;
    let star = mtd_index(p, th);
    let doses = (0..p.len())
        .map(|k| {
            let proxy = proxy_dose(p, th, k).ok();
            let kl = proxy.map(|d| binary_kl(p[k], d)).transpose()?;
            let alloc = allocation_constant(p, th, k);
            let lower = lower_bound_constant(p, th, k);
            Ok(DoseTheory {
                dose: k + 1,
                p: p[k],
                proxy,
                kl,
                allocation_constant: alloc.as_ref().ok().copied(),
                lower_bound_constant: lower.as_ref().ok().copied(),
                note: lower.err().map(|e| note(&e)),
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let gaps = gap_profile(p, th).ok();
    let sh = match (&gaps, budget) {
        (Some(g), Some(n)) => Some(sh_error_bound(g.h2, p.len(), n)),
        _ => None,
    };
    Ok(TheoryReport {
        theta,
        mtd: star + 1,
        doses,
        gaps,
        budget,
        sh_error_bound: sh,
    })
}

fn num(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_infinite() => "inf".into(),
        Some(v) => format!("{v:.4}"),
        None => "-".into(),
    }
}

pub fn render(r: &TheoryReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "theta = {}, MTD = dose {}", r.theta, r.mtd);
    let _ = writeln!(
        out,
        "{:>5} {:>8} {:>8} {:>10} {:>12} {:>12}  note",
        "dose", "p", "d*", "kl", "1/kl", "lower bound"
    );
    for d in &r.doses {
        let _ = writeln!(
            out,
            "{:>5} {:>8.4} {:>8} {:>10} {:>12} {:>12}  {}",
            d.dose,
            d.p,
            num(d.proxy),
            num(d.kl),
            num(d.allocation_constant),
            num(d.lower_bound_constant),
            d.note.as_deref().unwrap_or("")
        );
    }
    match &r.gaps {
        Some(g) => {
            let deltas: Vec<String> = g.deltas.iter().map(|d| format!("{d:.4}")).collect();
            let _ = writeln!(out, "gaps: [{}]", deltas.join(", "));
            let _ = writeln!(out, "H2 = {:.4}", g.h2);
            if let (Some(n), Some(b)) = (r.budget, r.sh_error_bound) {
                let _ = writeln!(out, "sequential halving error bound at n = {n}: {b:.4}");
            }
        }
        None => {
            let _ = writeln!(out, "H2 undefined: distance tie with the MTD");
        }
    }
    out
}
