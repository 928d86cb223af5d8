//! Volatility-uncertainty instantiations.
//!
//! A variance-rate set `D` becomes a rectangular family on a lattice: at
//! each node, one law per `σ² ∈ D`, moving `±√(σ² dt)` with probability ½
//! each. Every such law has mean zero and variance exactly `σ² dt`, so each
//! selection is a martingale measure whose realized rate `(ΔB)²/dt` lies in
//! `D` on every charged path. With a [`DProcess`] the set may depend on the
//! path observed so far.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ambiguity::{RectangularFamily, Status};
use crate::engine::dpp_values;
use crate::error::{Error, Result};
use crate::measure::{realized_qv, realized_qv_from_increments, windowed_density};
use crate::pathspace::{Lattice, Node, PathId, RandomVariable};

/// Largest lattice (in paths) the volatility constructions will build.
pub const MAX_VOL_PATHS: u128 = 1 << 24;

/// Relative slack used when matching realized rates against levels.
pub const LEVEL_TOL: f64 = 1e-9;

fn invalid(pointer: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidSpec {
        pointer: pointer.into(),
        reason: reason.into(),
    }
}

/// A finite set of variance rates `σ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VolSpec {
    FiniteSet {
        values: Vec<f64>,
    },
    /// `num_points` evenly spaced levels from `lo` to `hi`, both included.
    IntervalGrid {
        lo: f64,
        hi: f64,
        num_points: usize,
    },
    /// `num_points` evenly spaced levels from `lo` towards `hi`, `hi` excluded.
    HalfOpenGrid {
        lo: f64,
        hi: f64,
        num_points: usize,
    },
}

impl VolSpec {
    pub fn finite(values: &[f64]) -> Self {
        VolSpec::FiniteSet {
            values: values.to_vec(),
        }
    }

    /// The levels, ascending and distinct. Errors carry a JSON pointer
    /// relative to the spec object.
    pub fn levels(&self) -> Result<Vec<f64>> {
        let positive = |x: f64, ptr: String| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(invalid(
                    ptr,
                    format!("variance rates must be positive and finite, got {x}"),
                ))
            }
        };
        match self {
            VolSpec::FiniteSet { values } => {
                if values.is_empty() {
                    return Err(invalid("/values", "at least one level is required"));
                }
                for (i, v) in values.iter().enumerate() {
                    positive(*v, format!("/values/{i}"))?;
                    if values[..i].contains(v) {
                        return Err(invalid(format!("/values/{i}"), "duplicate level"));
                    }
                }
                let mut out = values.clone();
                out.sort_by(|a, b| a.total_cmp(b));
                Ok(out)
            }
            VolSpec::IntervalGrid { lo, hi, num_points } => {
                positive(*lo, "/lo".into())?;
                positive(*hi, "/hi".into())?;
                if hi < lo {
                    return Err(invalid("/hi", "hi must not be below lo"));
                }
                if *num_points == 0 {
                    return Err(invalid("/num_points", "at least one point is required"));
                }
                if lo == hi {
                    return Ok(vec![*lo]);
                }
                if *num_points < 2 {
                    return Err(invalid("/num_points", "a closed grid needs both endpoints"));
                }
                let step = (hi - lo) / (*num_points - 1) as f64;
                Ok((0..*num_points)
                    .map(|i| {
                        if i + 1 == *num_points {
                            *hi
                        } else {
                            lo + step * i as f64
                        }
                    })
                    .collect())
            }
            VolSpec::HalfOpenGrid { lo, hi, num_points } => {
                positive(*lo, "/lo".into())?;
                positive(*hi, "/hi".into())?;
                if hi <= lo {
                    return Err(invalid("/hi", "hi must exceed lo"));
                }
                if *num_points == 0 {
                    return Err(invalid("/num_points", "at least one point is required"));
                }
                let step = (hi - lo) / *num_points as f64;
                Ok((0..*num_points).map(|i| lo + step * i as f64).collect())
            }
        }
    }
}

/// `G(γ) = ½ max_{σ² ∈ D} γ σ²`.
pub fn g_function(gamma: f64, spec: &VolSpec) -> Result<f64> {
    Ok(0.5
        * spec
            .levels()?
            .into_iter()
            .map(|s| gamma * s)
            .fold(f64::NEG_INFINITY, f64::max))
}

/// A path-dependent variance-rate set: the set governing the move out of a
/// node depends only on that node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum DProcess {
    Constant {
        spec: VolSpec,
    },
    /// `initial` at the root; afterwards `below` while the average realized
    /// rate of the last `window` steps (all steps if `None`) is under
    /// `threshold`, `above` otherwise.
    RealizedThreshold {
        initial: VolSpec,
        threshold: f64,
        below: VolSpec,
        above: VolSpec,
        #[serde(default)]
        window: Option<usize>,
    },
    /// Explicit per-path table: `entries[p][k]` governs step `k + 1` of
    /// path `p`, with paths numbered on the lattice that `build_vol_lattice`
    /// produces. Only usable when adapted.
    PathTable {
        entries: Vec<Vec<VolSpec>>,
    },
}

impl DProcess {
    pub fn constant(spec: VolSpec) -> Self {
        DProcess::Constant { spec }
    }

    fn specs(&self) -> Vec<(&VolSpec, String)> {
        match self {
            DProcess::Constant { spec } => vec![(spec, "/spec".into())],
            DProcess::RealizedThreshold {
                initial,
                below,
                above,
                ..
            } => vec![
                (initial, "/initial".into()),
                (below, "/below".into()),
                (above, "/above".into()),
            ],
            DProcess::PathTable { entries } => entries
                .iter()
                .enumerate()
                .flat_map(|(p, row)| {
                    row.iter()
                        .enumerate()
                        .map(move |(k, s)| (s, format!("/entries/{p}/{k}")))
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (spec, ptr) in self.specs() {
            spec.levels().map_err(|e| match e {
                Error::InvalidSpec { pointer, reason } => Error::InvalidSpec {
                    pointer: format!("{ptr}{pointer}"),
                    reason,
                },
                other => other,
            })?;
        }
        if let DProcess::RealizedThreshold {
            threshold, window, ..
        } = self
        {
            if !threshold.is_finite() {
                return Err(invalid("/threshold", "threshold must be finite"));
            }
            if *window == Some(0) {
                return Err(invalid("/window", "window must be at least 1"));
            }
        }
        if let DProcess::PathTable { entries } = self {
            if entries.is_empty() {
                return Err(invalid("/entries", "table is empty"));
            }
        }
        Ok(())
    }

    /// Every level the process can use, ascending and distinct.
    pub fn all_levels(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let mut out: Vec<f64> = Vec::new();
        for (spec, _) in self.specs() {
            for v in spec.levels()? {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out.sort_by(|a, b| a.total_cmp(b));
        Ok(out)
    }

    /// The set governing the move out of `node`.
    pub fn spec_at(&self, lattice: &Lattice, node: &Node) -> VolSpec {
        match self {
            DProcess::Constant { spec } => spec.clone(),
            DProcess::RealizedThreshold {
                initial,
                threshold,
                below,
                above,
                window,
            } => {
                if node.depth() == 0 {
                    return initial.clone();
                }
                let rate = realized_qv(lattice, node).rate;
                let w = window.unwrap_or(rate.len());
                let avg = *windowed_density(&rate, w).last().unwrap();
                if avg < *threshold {
                    below.clone()
                } else {
                    above.clone()
                }
            }
            DProcess::PathTable { entries } => {
                entries[lattice.block(node).start][node.depth()].clone()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptednessReport {
    pub status: Status,
    /// Two paths sharing the prefix of length `step` but given different
    /// sets for the move out of it.
    pub witness: Option<(PathId, PathId, usize)>,
}

/// Rule-based processes are adapted by construction; path tables are
/// scanned for entries that differ across paths sharing a prefix.
pub fn check_d_adaptedness(process: &DProcess, lattice: &Lattice) -> Result<AdaptednessReport> {
    let DProcess::PathTable { entries } = process else {
        return Ok(AdaptednessReport {
            status: Status::Pass,
            witness: None,
        });
    };
    let k = lattice.num_steps();
    if entries.len() != lattice.num_paths() || entries.iter().any(|r| r.len() != k) {
        return Err(invalid(
            "/entries",
            format!(
                "table must have {} rows of {k} entries",
                lattice.num_paths()
            ),
        ));
    }
    #[allow(clippy::needless_range_loop)]
    for step in 0..k {
        for n in lattice.nodes_at(step) {
            let block = lattice.block(&n);
            let first = &entries[block.start][step];
            if let Some(q) = block.clone().find(|&q| entries[q][step] != *first) {
                return Ok(AdaptednessReport {
                    status: Status::Fail,
                    witness: Some((lattice.path_at(block.start), lattice.path_at(q), step)),
                });
            }
        }
    }
    Ok(AdaptednessReport {
        status: Status::Pass,
        witness: None,
    })
}

fn increment(level: f64, dt: f64) -> f64 {
    (level * dt).sqrt()
}

/// The step-homogeneous alphabet `{±√(σ² dt)}` over the given levels,
/// ascending.
pub fn vol_alphabet(levels: &[f64], dt: f64) -> Vec<f64> {
    let mut out: Vec<f64> = levels.iter().rev().map(|&s| -increment(s, dt)).collect();
    out.extend(levels.iter().map(|&s| increment(s, dt)));
    out
}

/// The lattice and rectangular family generated by a variance-rate process.
pub fn build_vol_lattice(
    process: &DProcess,
    num_steps: usize,
    dt: f64,
) -> Result<(Lattice, RectangularFamily)> {
    if num_steps == 0 {
        return Err(invalid("/lattice/K", "at least one step is required"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("/lattice/dt", "dt must be positive"));
    }
    let levels = process.all_levels()?;
    let alphabet = vol_alphabet(&levels, dt);
    let paths = (alphabet.len() as u128).saturating_pow(num_steps as u32);
    if paths > MAX_VOL_PATHS {
        return Err(Error::SizeLimit {
            count: paths,
            cap: MAX_VOL_PATHS as u64,
        });
    }
    let lattice = Lattice::homogeneous(num_steps, dt, alphabet.clone())?;
    if let DProcess::PathTable { .. } = process {
        let report = check_d_adaptedness(process, &lattice)?;
        if let Some((p, q, k)) = report.witness {
            return Err(invalid(
                "/entries",
                format!("not adapted: paths {p} and {q} share a prefix of length {k}"),
            ));
        }
    }
    let b = alphabet.len();
    let n = levels.len();
    let family = RectangularFamily::from_fn(lattice.clone(), |node| {
        let spec = process.spec_at(&lattice, node);
        spec.levels()
            .expect("validated")
            .into_iter()
            .map(|s| {
                let i = levels
                    .iter()
                    .position(|x| *x == s)
                    .expect("level in alphabet");
                let mut law = vec![0.0; b];
                law[n - 1 - i] = 0.5;
                law[n + i] = 0.5;
                law
            })
            .collect()
    })?;
    Ok((lattice, family))
}

/// `sup_{P ∈ P_D} E^P[ξ]` at the root, by backward induction.
pub fn g_expectation(
    process: &DProcess,
    num_steps: usize,
    dt: f64,
    payoff: impl Fn(&Lattice, &PathId) -> f64,
) -> Result<f64> {
    let (lattice, family) = build_vol_lattice(process, num_steps, dt)?;
    let xi = RandomVariable::from_fn(&lattice, |p| payoff(&lattice, p));
    Ok(dpp_values(&family, &xi)[0])
}

/// Indicator-probability comparison between a finite grid of levels and
/// the two-point set of its extremes: the event is "every realized rate
/// equals the middle level".
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiddleVolatilityReport {
    pub grid: f64,
    pub pair: f64,
}

/// `E_0(1_A)` for `A = {â_k = 9/4 for all k}`, under the grid `{1, 9/4, 4}`
/// and under the pair `{1, 4}`.
pub fn example_51_scenario(num_steps: usize, dt: f64) -> Result<MiddleVolatilityReport> {
    let target = 2.25;
    let event = |l: &Lattice, p: &PathId| {
        let all = realized_qv(l, p)
            .rate
            .iter()
            .all(|a| (a - target).abs() <= LEVEL_TOL * target);
        if all {
            1.0
        } else {
            0.0
        }
    };
    let grid = DProcess::constant(VolSpec::finite(&[1.0, target, 4.0]));
    let pair = DProcess::constant(VolSpec::finite(&[1.0, 4.0]));
    Ok(MiddleVolatilityReport {
        grid: g_expectation(&grid, num_steps, dt, event)?,
        pair: g_expectation(&pair, num_steps, dt, event)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointReport {
    /// `E_0(1_A)` for the closed grid on `[1, 2]`.
    pub closed: f64,
    /// `E_0(1_A)` for the grid on `[1, 2)`.
    pub half_open: f64,
    /// `E_0(B_K²)` under both grids, reported for comparison.
    pub closed_second_moment: f64,
    pub half_open_second_moment: f64,
}

/// `E_0(1_A)` for `A = {realized QV at K ≥ 2·K·dt}` under a closed grid on
/// `[1, 2]` and a grid on `[1, 2)`, each with `num_points` levels.
pub fn example_52_scenario(num_steps: usize, dt: f64, num_points: usize) -> Result<EndpointReport> {
    let bound = 2.0 * num_steps as f64 * dt;
    let event = |l: &Lattice, p: &PathId| {
        let qv = *realized_qv(l, p).qv.last().unwrap();
        if qv >= bound * (1.0 - LEVEL_TOL) {
            1.0
        } else {
            0.0
        }
    };
    let square = |l: &Lattice, p: &PathId| l.value_at(p).powi(2);
    let closed = DProcess::constant(VolSpec::IntervalGrid {
        lo: 1.0,
        hi: 2.0,
        num_points,
    });
    let half_open = DProcess::constant(VolSpec::HalfOpenGrid {
        lo: 1.0,
        hi: 2.0,
        num_points,
    });
    Ok(EndpointReport {
        closed: g_expectation(&closed, num_steps, dt, event)?,
        half_open: g_expectation(&half_open, num_steps, dt, event)?,
        closed_second_moment: g_expectation(&closed, num_steps, dt, square)?,
        half_open_second_moment: g_expectation(&half_open, num_steps, dt, square)?,
    })
}

/// One simulated path with its realized rate and windowed density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolEstimate {
    /// True variance rate of each step.
    pub truth: Vec<f64>,
    pub increments: Vec<f64>,
    /// `â_k = (ΔB_k)² / dt`.
    pub rate: Vec<f64>,
    /// Trailing average of `â` over `window` steps.
    pub density: Vec<f64>,
}

impl VolEstimate {
    /// Steps (0-based) where `â` differs from the truth by more than
    /// `LEVEL_TOL` relative.
    pub fn rate_errors(&self) -> Vec<usize> {
        mismatches(&self.rate, &self.truth)
    }

    /// Steps (0-based) where the windowed density differs from the truth.
    pub fn density_errors(&self) -> Vec<usize> {
        mismatches(&self.density, &self.truth)
    }
}

fn mismatches(a: &[f64], b: &[f64]) -> Vec<usize> {
    (0..a.len())
        .filter(|&k| (a[k] - b[k]).abs() > LEVEL_TOL * b[k].abs().max(1.0))
        .collect()
}

/// Simulates `B` with increments `±√(σ²_k dt)` (fair random signs) for the
/// given per-step rates and estimates the rate back from the path.
pub fn estimate_volatility<R: Rng + ?Sized>(
    rng: &mut R,
    truth: &[f64],
    dt: f64,
    window: usize,
) -> Result<VolEstimate> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("/lattice/dt", "dt must be positive"));
    }
    if window == 0 {
        return Err(invalid("/window", "window must be at least 1"));
    }
    if let Some(i) = truth.iter().position(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(invalid(
            format!("/truth/{i}"),
            "variance rate must be finite and non-negative",
        ));
    }
    let increments: Vec<f64> = truth
        .iter()
        .map(|&s| {
            let x = increment(s, dt);
            if rng.gen_bool(0.5) {
                x
            } else {
                -x
            }
        })
        .collect();
    let rate = realized_qv_from_increments(&increments, dt).rate;
    let density = windowed_density(&rate, window);
    Ok(VolEstimate {
        truth: truth.to_vec(),
        increments,
        rate,
        density,
    })
}
