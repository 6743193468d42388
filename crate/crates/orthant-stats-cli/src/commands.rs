//! Subcommand bodies. Each returns a JSON report and whether it describes
//! a failed validation or verification.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use orthant_stats::clt::{self, CltPrediction, EmpiricalClt};
use orthant_stats::frechet::{self, MeanOptions, VerifyOptions};
use orthant_stats::geodesic;
use orthant_stats::logmap;
use orthant_stats::{build_space, Error, OrthantSpace};
use serde_json::{json, Value};

use crate::input;
use crate::output::{matrix, point, real, reals};

pub struct Report {
    pub value: Value,
    pub failed: bool,
}

impl Report {
    fn ok(value: Value) -> Self {
        Report { value, failed: false }
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::AxisOutOfRange { .. } => "axis_out_of_range",
        Error::UnsupportedDimension(_) => "unsupported_dimension",
        Error::FlagViolation(_) => "flag_violation",
        Error::NotAStratum(_) => "not_a_stratum",
        Error::InvalidCoordinate { .. } => "invalid_coordinate",
        Error::PreconditionFailed(_) => "precondition_failed",
        Error::HypothesisNotMet(_) => "hypothesis_not_met",
        _ => "error",
    }
}

pub fn validate(space_path: &Path) -> Result<Report> {
    let (dim, tops) = input::read_space_file(space_path)?;
    match build_space(dim, &tops) {
        Ok(space) => Ok(Report::ok(json!({
            "valid": true,
            "ambient_dim": space.ambient_dim(),
            "max_dim": space.max_dim(),
            "num_strata": space.num_strata(),
            "maximal_orthants": to_value(&space.maximal_orthants()),
        }))),
        Err(e) => {
            let orthant = match &e {
                Error::FlagViolation(o) | Error::NotAStratum(o) => to_value(o),
                _ => Value::Null,
            };
            Ok(Report {
                value: json!({
                    "valid": false,
                    "error": { "kind": error_kind(&e), "message": e.to_string(), "orthant": orthant },
                }),
                failed: true,
            })
        }
    }
}

pub struct GeodesicArgs<'a> {
    pub space: &'a Path,
    pub from: &'a Path,
    pub to: &'a Path,
    pub t: Option<f64>,
    pub oracle: bool,
}

pub fn geodesic(args: GeodesicArgs) -> Result<Report> {
    let space = input::load_space(args.space)?;
    let x1 = input::load_point(&space, args.from)?;
    let x2 = input::load_point(&space, args.to)?;
    let g = geodesic::geodesic(&space, &x1, &x2)?;
    let breakpoints: Vec<Value> = g.breakpoints.iter().map(|(t, p)| json!({ "t": real(*t), "point": point(p) })).collect();
    let mut out = json!({
        "support": { "k": g.support.k(), "a": to_value(&g.support.a), "b": to_value(&g.support.b) },
        "length": real(g.length),
        "breakpoints": breakpoints,
    });
    if let Some(t) = args.t {
        out["t"] = real(t);
        out["point"] = point(&geodesic::eval_geodesic(&space, &x1, &x2, t)?);
    }
    if args.oracle {
        let o = geodesic::brute_force_distance(&space, &x1, &x2, space.ambient_dim())?;
        out["oracle_length"] = real(o);
    }
    Ok(Report::ok(out))
}

pub struct LogmapArgs<'a> {
    pub space: &'a Path,
    pub base: &'a Path,
    pub point: &'a Path,
    pub direction: Option<&'a Path>,
    pub derivative: bool,
}

pub fn logmap(args: LogmapArgs) -> Result<Report> {
    let space = input::load_space(args.space)?;
    let base = input::load_point(&space, args.base)?;
    let x = input::load_point(&space, args.point)?;
    let phi = logmap::translated_log(&space, &base, &x)?;
    let log = logmap::log(&space, &base, &x)?;
    let mut out = json!({
        "base_stratum": to_value(&base.support()),
        "phi": reals(phi.as_slice()),
        "log": reals(log.as_slice()),
        "in_d": logmap::in_d(&space, &base, &x)?,
    });
    let direction = match args.direction {
        Some(p) => Some(input::load_direction(&space, &base, p)?.unit()?),
        None => None,
    };
    if let Some(w) = &direction {
        let support = logmap::stabilized_support(&space, &base, w, &x)?;
        let psi = logmap::directional_limit(&space, &base, w, &x)?;
        out["direction"] = json!({ "tau": to_value(&w.tau()), "unit": reals(w.coords().as_slice()) });
        out["psi"] = reals(psi.as_slice());
        out["psi_support"] = json!({ "k": support.k(), "a": to_value(&support.a), "b": to_value(&support.b) });
        out["singular"] = json!(logmap::is_singular(&space, &base, w, &x)?);
    }
    if args.derivative {
        let m = match &direction {
            Some(w) => logmap::directional_derivative_matrix(&space, &base, &x, w)?,
            None => logmap::derivative_matrix(&space, &base, &x)?,
        };
        out["matrix"] = matrix(&m);
    }
    Ok(Report::ok(out))
}

pub struct MeanArgs<'a> {
    pub space: &'a Path,
    pub measure: &'a Path,
    pub verify_only: Option<&'a Path>,
    pub theta: Option<&'a str>,
    pub seed: u64,
    pub verify: VerifyOptions,
}

pub fn frechet_mean(args: MeanArgs) -> Result<Report> {
    let space = input::load_space(args.space)?;
    let mu = input::load_measure(&space, args.measure)?;
    let (x_star, mut out, pass) = match args.verify_only {
        Some(p) => {
            let x = input::load_point(&space, p)?;
            let cert = frechet::verify_mean_with(&space, &mu, &x, &args.verify)?;
            let value = frechet::frechet_value(&space, &mu, &x)?;
            let pass = cert.pass;
            let out = json!({
                "mode": "verify",
                "point": point(&x),
                "value": real(value),
                "certificate": to_value(&cert),
            });
            (x, out, pass)
        }
        None => {
            let opts = MeanOptions { seed: args.seed, verify: args.verify, ..MeanOptions::default() };
            let fit = frechet::frechet_mean(&space, &mu, &opts)?;
            let pass = fit.certificate.pass;
            let out = json!({
                "mode": "compute",
                "point": point(&fit.point),
                "stratum": to_value(&fit.point.support()),
                "value": real(fit.value),
                "iterations": fit.iterations,
                "certificate": to_value(&fit.certificate),
            });
            (fit.point, out, pass)
        }
    };
    if let Some(tau) = args.theta {
        let tau = input::parse_axes(tau)?;
        out["theta"] = to_value(&frechet::theta_set_with(&space, &mu, &x_star, tau, &args.verify)?);
    }
    out["pass"] = json!(pass);
    Ok(Report { value: out, failed: !pass })
}

pub fn verify_mean(space: &Path, measure: &Path, point_path: &Path, verify: VerifyOptions) -> Result<Report> {
    let space = input::load_space(space)?;
    let mu = input::load_measure(&space, measure)?;
    let x = input::load_point(&space, point_path)?;
    let cert = frechet::verify_mean_with(&space, &mu, &x, &verify)?;
    let pass = cert.pass;
    Ok(Report {
        value: json!({ "point": point(&x), "pass": pass, "certificate": to_value(&cert) }),
        failed: !pass,
    })
}

pub fn theta(space: &Path, measure: &Path, point_path: &Path, tau: &str, verify: VerifyOptions) -> Result<Report> {
    let space = input::load_space(space)?;
    let mu = input::load_measure(&space, measure)?;
    let x = input::load_point(&space, point_path)?;
    let tau = input::parse_axes(tau)?;
    let est = frechet::theta_set_with(&space, &mu, &x, tau, &verify)?;
    let mut out = to_value(&est);
    out["contiguous"] = json!(est.is_contiguous());
    Ok(Report::ok(out))
}

pub struct CltArgs<'a> {
    pub space: &'a Path,
    pub measure: &'a Path,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub predict: bool,
    pub out: Option<&'a Path>,
    pub verify: VerifyOptions,
}

fn axis_label(axes: impl Iterator<Item = usize>) -> String {
    axes.map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
}

fn write_draws(space: &OrthantSpace, emp: &EmpiricalClt, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut header = vec!["rep".to_string(), "stratum".to_string()];
    header.extend((0..space.ambient_dim()).map(|a| format!("z{a}")));
    w.write_record(&header)?;
    for d in &emp.draws {
        let mut row = vec![d.rep.to_string(), axis_label(d.stratum.iter())];
        row.extend(d.scaled.iter().map(|z| format!("{z:.16e}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn prediction_report(pred: &CltPrediction, emp: &EmpiricalClt) -> Value {
    let mut out = to_value(pred);
    out["support"] = to_value(&clt::support_frequencies(emp, pred));
    out["masses"] = match clt::piece_masses(pred) {
        Ok(masses) => Value::Array(
            masses
                .iter()
                .map(|(tau, est)| json!({ "tau": to_value(tau), "mass": real(est.value), "error": real(est.error) }))
                .collect(),
        ),
        Err(e) => json!({ "unavailable": e.to_string() }),
    };
    out
}

pub fn clt_sim(args: CltArgs) -> Result<Report> {
    let space = input::load_space(args.space)?;
    let mu = input::load_measure(&space, args.measure)?;
    let opts = MeanOptions { verify: args.verify, ..MeanOptions::default() };
    let x_star = frechet::frechet_mean(&space, &mu, &opts)?.point;
    let emp = clt::monte_carlo_with(&space, &mu, &x_star, args.n, args.reps, args.seed, &opts)?;
    if let Some(path) = args.out {
        write_draws(&space, &emp, path)?;
    }
    let mut strata: BTreeMap<String, usize> = BTreeMap::new();
    for d in &emp.draws {
        *strata.entry(d.stratum.to_string()).or_default() += 1;
    }
    let sigma_axes: Vec<usize> = x_star.support().iter().collect();
    let mut out = json!({
        "n": emp.n,
        "reps": emp.reps,
        "seed": emp.seed,
        "x_star": point(&x_star),
        "sigma": to_value(&emp.sigma),
        "strata": to_value(&strata),
        "mean_scaled": reals(&mean_scaled(&emp)),
        "covariance_sigma": to_value(&emp.covariance(&sigma_axes)),
    });
    if let Some(path) = args.out {
        out["draws"] = json!(path.display().to_string());
    }
    let mut failed = false;
    if args.predict {
        match clt::predict_with(&space, &mu, &x_star, &args.verify) {
            Ok(pred) => out["prediction"] = prediction_report(&pred, &emp),
            Err(Error::PreconditionFailed(reasons)) => {
                out["prediction"] = json!({ "preconditions_failed": reasons });
                failed = true;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Report { value: out, failed })
}

fn mean_scaled(emp: &EmpiricalClt) -> Vec<f64> {
    let dim = emp.x_star.len();
    let mut m = vec![0.0; dim];
    for d in &emp.draws {
        for (mi, z) in m.iter_mut().zip(&d.scaled) {
            *mi += z;
        }
    }
    let reps = emp.draws.len().max(1) as f64;
    m.iter().map(|x| x / reps).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_labels_are_space_separated() {
        assert_eq!(axis_label([0usize, 4].into_iter()), "0 4");
        assert_eq!(axis_label(std::iter::empty()), "");
    }
}
