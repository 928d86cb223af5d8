//! Builds lattices and families from a config and runs one experiment.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sublinear::ambiguity::{
    check_invariance, check_pasting, invariance_violation, measurability_note, pasting_violation,
    AssumptionReport, CheckConfig,
};
use sublinear::engine::{
    dpp_values, verify_esssup_representation, verify_optional_sampling, verify_tower, DERIVED_TOL,
};
use sublinear::gexp::{
    build_vol_lattice, check_d_adaptedness, estimate_volatility, example_51_scenario,
    example_52_scenario, DProcess,
};
use sublinear::sampling::{random_rectangular, random_rule_pair, random_variable};
use sublinear::{AmbiguityFamily, Lattice, RandomVariable, Status, StoppingRule};

use crate::config::{Config, Experiment, FamilyConfig, LatticeConfig, RuleConfig, SwitchConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RunStatus {
    Pass,
    Fail,
    Computed,
}

impl From<Status> for RunStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Pass => RunStatus::Pass,
            Status::Fail => RunStatus::Fail,
        }
    }
}

/// One line of the tabular output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub series: String,
    pub key: String,
    pub value: f64,
}

impl Row {
    fn new(series: &str, key: impl ToString, value: f64) -> Self {
        Row {
            series: series.into(),
            key: key.to_string(),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: RunStatus,
    pub results: Map<String, Value>,
    pub rows: Vec<Row>,
}

/// A JSON number, or `"inf"` / `"-inf"`.
pub fn num(x: f64) -> Value {
    if x == f64::INFINITY {
        Value::from("inf")
    } else if x == f64::NEG_INFINITY {
        Value::from("-inf")
    } else {
        json!(x)
    }
}

fn to_value<T: Serialize>(x: &T) -> Result<Value, CliError> {
    Ok(serde_json::to_value(x)?)
}

/// Adds a config prefix to pointers that are relative to a sub-document.
fn under(prefix: &'static str) -> impl Fn(sublinear::Error) -> CliError {
    move |e| match e {
        sublinear::Error::InvalidSpec { pointer, reason } if !pointer.starts_with("/lattice") => {
            CliError::config(format!("{prefix}{pointer}"), reason)
        }
        sublinear::Error::InvalidSpec { pointer, reason } => CliError::config(pointer, reason),
        other => CliError::Core(other),
    }
}

fn lattice_config(cfg: &Config) -> Result<&LatticeConfig, CliError> {
    let l = cfg
        .lattice
        .as_ref()
        .ok_or_else(|| CliError::config("/lattice", "this experiment needs a lattice"))?;
    if l.num_steps == 0 {
        return Err(CliError::config(
            "/lattice/K",
            "at least one step is required",
        ));
    }
    if !(l.dt > 0.0 && l.dt.is_finite()) {
        return Err(CliError::config("/lattice/dt", "dt must be positive"));
    }
    Ok(l)
}

fn process(cfg: &Config) -> Result<(DProcess, &'static str), CliError> {
    match (&cfg.vol_spec, &cfg.d_process) {
        (Some(spec), None) => {
            spec.levels().map_err(under("/vol_spec"))?;
            Ok((DProcess::constant(spec.clone()), "/vol_spec"))
        }
        (None, Some(d)) => {
            d.validate().map_err(under("/d_process"))?;
            Ok((d.clone(), "/d_process"))
        }
        (Some(_), Some(_)) => Err(CliError::config(
            "/d_process",
            "give either vol_spec or d_process, not both",
        )),
        (None, None) => Err(CliError::config(
            "/vol_spec",
            "a vol_spec or d_process is required",
        )),
    }
}

fn vol_family(cfg: &Config) -> Result<AmbiguityFamily, CliError> {
    let (p, ptr) = process(cfg)?;
    let l = lattice_config(cfg)?;
    let (_, f) = build_vol_lattice(&p, l.num_steps, l.dt).map_err(under(ptr))?;
    Ok(f.into())
}

fn families(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<Vec<AmbiguityFamily>, CliError> {
    let kind = match &cfg.family {
        Some(k) => k.clone(),
        None if cfg.vol_spec.is_some() || cfg.d_process.is_some() => FamilyConfig::Vol,
        None => {
            return Err(CliError::config(
                "/family",
                "a family (or a vol_spec / d_process) is required",
            ))
        }
    };
    match kind {
        FamilyConfig::Vol => Ok(vec![vol_family(cfg)?]),
        FamilyConfig::RandomRectangular { b, max_laws, count } => {
            let k = lattice_config(cfg)?.num_steps;
            if b < 2 {
                return Err(CliError::config(
                    "/family/b",
                    "at least two letters are required",
                ));
            }
            if max_laws == 0 {
                return Err(CliError::config(
                    "/family/max_laws",
                    "at least one law is required",
                ));
            }
            if count == 0 {
                return Err(CliError::config(
                    "/family/count",
                    "at least one family is required",
                ));
            }
            (0..count)
                .map(|_| Ok(random_rectangular(rng, k, b, max_laws)?.into()))
                .collect()
        }
        FamilyConfig::InvarianceViolation => Ok(vec![invariance_violation().into()]),
        FamilyConfig::PastingViolation => Ok(vec![pasting_violation().into()]),
    }
}

fn payoff(
    cfg: &Config,
    lattice: &Lattice,
    rng: &mut ChaCha8Rng,
) -> Result<RandomVariable, CliError> {
    match &cfg.payoff {
        Some(src) => {
            let wrap = |source| CliError::Payoff {
                pointer: "/payoff".into(),
                source,
            };
            let expr = sublinear::dsl::parse(src).map_err(wrap)?;
            expr.to_random_variable(lattice).map_err(wrap)
        }
        None => Ok(random_variable(rng, lattice, -4.0, 4.0)),
    }
}

fn required_payoff(cfg: &Config, lattice: &Lattice) -> Result<RandomVariable, CliError> {
    if cfg.payoff.is_none() {
        return Err(CliError::config(
            "/payoff",
            "this experiment needs a payoff",
        ));
    }
    let mut unused = ChaCha8Rng::seed_from_u64(0);
    payoff(cfg, lattice, &mut unused)
}

fn rule(
    r: &RuleConfig,
    lattice: &Lattice,
    pointer: &'static str,
) -> Result<StoppingRule, CliError> {
    let wrap = |e: sublinear::Error| CliError::config(pointer, e.to_string());
    match r {
        RuleConfig::Constant(j) => StoppingRule::constant(lattice, *j).map_err(wrap),
        RuleConfig::Hitting(level) => Ok(StoppingRule::hitting(lattice, *level)),
        RuleConfig::Boundary(nodes) => {
            StoppingRule::from_boundary(lattice, nodes.clone()).map_err(wrap)
        }
    }
}

fn tolerance(cfg: &Config) -> Result<f64, CliError> {
    let t = cfg.tolerance.unwrap_or(DERIVED_TOL);
    if !(t >= 0.0 && t.is_finite()) {
        return Err(CliError::config(
            "/tolerance",
            "tolerance must be finite and non-negative",
        ));
    }
    Ok(t)
}

pub fn run(cfg: &Config) -> Result<Outcome, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    match cfg.experiment {
        Experiment::Tower => tower(cfg, &mut rng),
        Experiment::Esssup => esssup(cfg, &mut rng),
        Experiment::OptionalSampling => optional_sampling(cfg, &mut rng),
        Experiment::AssumptionCheck => assumption_check(cfg, &mut rng),
        Experiment::Gexp | Experiment::RandomGexp => gexp(cfg),
        Experiment::Example51 => {
            let l = lattice_config(cfg)?;
            let r = example_51_scenario(l.num_steps, l.dt)?;
            Ok(computed([("grid", num(r.grid)), ("pair", num(r.pair))]))
        }
        Experiment::Example52 => {
            let l = lattice_config(cfg)?;
            let points = cfg.num_points.unwrap_or(5);
            if points < 2 {
                return Err(CliError::config(
                    "/num_points",
                    "at least two grid points are required",
                ));
            }
            let r = example_52_scenario(l.num_steps, l.dt, points)?;
            Ok(computed([
                ("closed", num(r.closed)),
                ("half_open", num(r.half_open)),
                ("closed_second_moment", num(r.closed_second_moment)),
                ("half_open_second_moment", num(r.half_open_second_moment)),
            ]))
        }
        Experiment::VolEstimate => vol_estimate(cfg, &mut rng),
    }
}

fn computed<const N: usize>(fields: [(&str, Value); N]) -> Outcome {
    Outcome {
        status: RunStatus::Computed,
        results: fields
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        rows: Vec::new(),
    }
}

fn tower(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<Outcome, CliError> {
    let tol = tolerance(cfg)?;
    let fams = families(cfg, rng)?;
    let mut deviation: f64 = 0.0;
    let mut dpp_deviation: Option<f64> = None;
    let mut one_sided = true;
    let mut witness = Value::Null;
    let mut triples = 0usize;
    let mut rows = Vec::new();
    for (fi, fam) in fams.iter().enumerate() {
        let l = fam.lattice().clone();
        let xi = payoff(cfg, &l, rng)?;
        let pairs = match (&cfg.sigma, &cfg.tau) {
            (Some(s), Some(t)) => vec![(rule(s, &l, "/sigma")?, rule(t, &l, "/tau")?)],
            (None, None) => {
                let n = cfg.num_pairs.unwrap_or(20);
                (0..n).map(|_| random_rule_pair(rng, &l)).collect()
            }
            (None, Some(_)) => return Err(CliError::config("/sigma", "sigma and tau go together")),
            (Some(_), None) => return Err(CliError::config("/tau", "sigma and tau go together")),
        };
        for (pi, (sigma, tau)) in pairs.iter().enumerate() {
            if !sigma.precedes(tau) {
                return Err(CliError::config(
                    "/sigma",
                    "sigma must not exceed tau on any path",
                ));
            }
            let r = verify_tower(fam, sigma, tau, &xi, cfg.max_enum())?;
            triples += 1;
            one_sided &= r.one_sided;
            if let Some(d) = r.dpp_deviation {
                dpp_deviation = Some(dpp_deviation.map_or(d, |x| x.max(d)));
            }
            if r.deviation > deviation {
                deviation = r.deviation;
                if r.deviation > tol {
                    witness = json!({
                        "family": fi,
                        "pair": pi,
                        "path": to_value(&r.witness)?,
                        "sigma": to_value(&sigma.boundary())?,
                        "tau": to_value(&tau.boundary())?,
                    });
                }
            }
            if fi == 0 && pi == 0 {
                for (i, p) in l.paths().enumerate() {
                    rows.push(Row::new("lhs", &p, r.lhs.value(i)));
                    rows.push(Row::new("rhs", &p, r.rhs.value(i)));
                }
            }
        }
    }
    let status = if deviation <= tol {
        RunStatus::Pass
    } else {
        RunStatus::Fail
    };
    let mut results = Map::new();
    results.insert("deviation".into(), num(deviation));
    results.insert(
        "dpp_deviation".into(),
        dpp_deviation.map_or(Value::Null, num),
    );
    results.insert("one_sided".into(), json!(one_sided));
    results.insert("witness".into(), witness);
    results.insert("triples".into(), json!(triples));
    results.insert("families".into(), json!(fams.len()));
    results.insert("tolerance".into(), num(tol));
    Ok(Outcome {
        status,
        results,
        rows,
    })
}

fn esssup(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<Outcome, CliError> {
    let tol = tolerance(cfg)?;
    let fams = families(cfg, rng)?;
    let mut worst: f64 = 0.0;
    let mut witness = Value::Null;
    let mut measures = 0usize;
    let mut rows = Vec::new();
    let mut status = Status::Pass;
    for (fi, fam) in fams.iter().enumerate() {
        let l = fam.lattice().clone();
        let xi = payoff(cfg, &l, rng)?;
        let tau = match &cfg.tau {
            Some(t) => rule(t, &l, "/tau")?,
            None => StoppingRule::constant(&l, 1)?,
        };
        let r = verify_esssup_representation(fam, &tau, &xi, cfg.max_enum(), tol)?;
        measures += r.per_measure.len();
        if r.status == Status::Fail && status == Status::Pass {
            status = Status::Fail;
            witness = json!({ "family": fi, "detail": to_value(&r.witness)? });
        }
        worst = worst.max(r.worst_deviation);
        if fi == 0 {
            for (i, d) in r.per_measure.iter().enumerate() {
                rows.push(Row::new("measure_deviation", i, *d));
            }
        }
    }
    let mut results = Map::new();
    results.insert("worst_deviation".into(), num(worst));
    results.insert("witness".into(), witness);
    results.insert("measures".into(), json!(measures));
    results.insert("families".into(), json!(fams.len()));
    results.insert("tolerance".into(), num(tol));
    Ok(Outcome {
        status: status.into(),
        results,
        rows,
    })
}

fn optional_sampling(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<Outcome, CliError> {
    let fams = families(cfg, rng)?;
    let mut mismatches = 0usize;
    let mut witness = Value::Null;
    for (fi, fam) in fams.iter().enumerate() {
        let l = fam.lattice().clone();
        let xi = payoff(cfg, &l, rng)?;
        let tau = match &cfg.tau {
            Some(t) => rule(t, &l, "/tau")?,
            None => StoppingRule::hitting(&l, 1.0),
        };
        let r = verify_optional_sampling(fam, &tau, &xi, cfg.max_enum())?;
        if r.mismatches > 0 && mismatches == 0 {
            witness = json!({ "family": fi, "path": to_value(&r.witness)? });
        }
        mismatches += r.mismatches;
    }
    let mut results = Map::new();
    results.insert("mismatches".into(), json!(mismatches));
    results.insert("witness".into(), witness);
    results.insert("families".into(), json!(fams.len()));
    Ok(Outcome {
        status: if mismatches == 0 {
            RunStatus::Pass
        } else {
            RunStatus::Fail
        },
        results,
        rows: Vec::new(),
    })
}

fn assumption_json(r: &AssumptionReport) -> Result<Value, CliError> {
    to_value(r)
}

fn assumption_check(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<Outcome, CliError> {
    let fams = families(cfg, rng)?;
    let check = CheckConfig {
        seed: cfg.seed(),
        max_enum: cfg.max_enum(),
        ..CheckConfig::default()
    };
    let mut status = Status::Pass;
    let mut reports = Vec::new();
    for fam in &fams {
        let inv = check_invariance(fam, &check)?;
        let pas = check_pasting(fam, &check)?;
        let mea = measurability_note(fam);
        for r in [&inv, &pas, &mea] {
            if r.status == Status::Fail {
                status = Status::Fail;
            }
        }
        reports.push(json!({
            "invariance": assumption_json(&inv)?,
            "pasting": assumption_json(&pas)?,
            "measurability": assumption_json(&mea)?,
        }));
    }
    let mut results = Map::new();
    results.insert("checks".into(), Value::Array(reports));
    results.insert("families".into(), json!(fams.len()));
    Ok(Outcome {
        status: status.into(),
        results,
        rows: Vec::new(),
    })
}

fn gexp(cfg: &Config) -> Result<Outcome, CliError> {
    if cfg.experiment == Experiment::RandomGexp && cfg.d_process.is_none() {
        return Err(CliError::config(
            "/d_process",
            "random_gexp needs a d_process",
        ));
    }
    let (p, ptr) = process(cfg)?;
    let lc = lattice_config(cfg)?;
    let (l, f) = build_vol_lattice(&p, lc.num_steps, lc.dt).map_err(under(ptr))?;
    let xi = required_payoff(cfg, &l)?;
    let values = dpp_values(&f, &xi);
    let adapted = check_d_adaptedness(&p, &l)?;
    let rows = l
        .nodes()
        .map(|n| Row::new("value", &n, values[l.node_index(&n)]))
        .collect();
    let mut results = Map::new();
    results.insert("value".into(), num(values[0]));
    results.insert("paths".into(), json!(l.num_paths()));
    results.insert(
        "levels".into(),
        Value::Array(p.all_levels()?.into_iter().map(num).collect()),
    );
    results.insert("adaptedness".into(), to_value(&adapted)?);
    Ok(Outcome {
        status: RunStatus::Computed,
        results,
        rows,
    })
}

fn vol_estimate(cfg: &Config, rng: &mut ChaCha8Rng) -> Result<Outcome, CliError> {
    let lc = lattice_config(cfg)?;
    let k = lc.num_steps;
    let sw = cfg.switch.clone().unwrap_or(SwitchConfig {
        before: 1.0,
        after: 4.0,
        at: None,
    });
    let at = sw.at.unwrap_or(k / 2);
    if at > k {
        return Err(CliError::config(
            "/switch/at",
            "switch step is past the horizon",
        ));
    }
    for (v, ptr) in [(sw.before, "/switch/before"), (sw.after, "/switch/after")] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(CliError::config(
                ptr,
                "variance rate must be finite and non-negative",
            ));
        }
    }
    let window = cfg.window.unwrap_or(4);
    if window == 0 {
        return Err(CliError::config("/window", "window must be at least 1"));
    }
    let truth: Vec<f64> = (0..k)
        .map(|j| if j < at { sw.before } else { sw.after })
        .collect();
    let est = estimate_volatility(rng, &truth, lc.dt, window)?;
    let rate_errors = est.rate_errors();
    let density_errors = est.density_errors();
    let near_switch = density_errors.iter().all(|&j| j >= at && j < at + window);
    let mut rows = Vec::new();
    for j in 0..k {
        rows.push(Row::new("truth", j + 1, est.truth[j]));
        rows.push(Row::new("rate", j + 1, est.rate[j]));
        rows.push(Row::new("density", j + 1, est.density[j]));
    }
    let mut results = Map::new();
    results.insert("switch_step".into(), json!(at));
    results.insert("window".into(), json!(window));
    results.insert("rate_errors".into(), json!(rate_errors));
    results.insert("density_errors".into(), json!(density_errors));
    results.insert("density_errors_near_switch".into(), json!(near_switch));
    Ok(Outcome {
        status: if rate_errors.is_empty() && near_switch {
            RunStatus::Pass
        } else {
            RunStatus::Fail
        },
        results,
        rows,
    })
}
