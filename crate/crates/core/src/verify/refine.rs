//! Grid-refinement study: run a hierarchy of grids with `h` halved and `dt`
//! quartered, and compare successive levels at coincident nodes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Field, VectorField};
use crate::sim::{self, InitialCondition, SimConfig};

/// Final-time state of one level.
#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub u: VectorField,
    pub x: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRecord {
    pub level: usize,
    pub h: f64,
    pub dt: f64,
    /// Averaged norm of this level's velocity minus the next finer level's,
    /// on this level's nodes. `None` on the finest level.
    pub du_norm: Option<f64>,
    /// Euclidean distance between this level's and the next finer level's
    /// particle positions.
    pub dx_norm: Option<f64>,
    /// Unweighted `Σ |Δu|²` behind `du_norm`.
    pub du_sumsq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementReport {
    /// Coarsest first.
    pub levels: Vec<LevelRecord>,
    pub order_u: Option<f64>,
    pub order_x: Option<f64>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl RefinementReport {
    fn diffs(&self, pick: impl Fn(&LevelRecord) -> Option<f64>) -> Vec<(f64, f64)> {
        self.levels
            .iter()
            .filter_map(|r| pick(r).map(|d| (r.h, d)))
            .collect()
    }

    /// `(h, ‖Δu‖)` pairs, coarsest first.
    pub fn du(&self) -> Vec<(f64, f64)> {
        self.diffs(|r| r.du_norm)
    }

    pub fn dx(&self) -> Vec<(f64, f64)> {
        self.diffs(|r| r.dx_norm)
    }

    /// Ratios of successive velocity differences, coarse over fine.
    pub fn ratios_u(&self) -> Vec<f64> {
        self.du().windows(2).map(|w| w[0].1 / w[1].1).collect()
    }

    pub fn ratios_x(&self) -> Vec<f64> {
        self.dx().windows(2).map(|w| w[0].1 / w[1].1).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,h,dt,du_norm,dX_norm,du_sumsq\n");
        for r in &self.levels {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{},{},{}",
                r.level,
                r.h,
                r.dt,
                fmt_opt(r.du_norm),
                fmt_opt(r.dx_norm),
                fmt_opt(r.du_sumsq)
            );
        }
        let order = |v: Option<f64>| v.map(|p| format!("{p:.4}")).unwrap_or_else(|| "NA".into());
        let _ = writeln!(out, "# order p_u={} p_X={}", order(self.order_u), order(self.order_x));
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Least-squares slope of `log d` against `log h`.
pub fn estimate_order(diffs: &[(f64, f64)]) -> Result<f64> {
    if diffs.len() < 2 {
        return Err(Error::param("diffs", "need at least two levels"));
    }
    for w in diffs.windows(2) {
        if w[1].0.is_nan() || w[0].0.is_nan() || w[1].0 >= w[0].0 {
            return Err(Error::param("diffs", "h must be strictly decreasing"));
        }
    }
    if let Some(&(h, d)) = diffs.iter().find(|(h, d)| !(*d > 0.0 && d.is_finite() && *h > 0.0)) {
        return Err(Error::param(
            "diffs",
            format!("difference {d} at h = {h} is not positive; outputs identical or study broken"),
        ));
    }
    let n = diffs.len() as f64;
    let xs: Vec<f64> = diffs.iter().map(|(h, _)| h.ln()).collect();
    let ys: Vec<f64> = diffs.iter().map(|(_, d)| d.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Level configurations, coarsest first. `base` is the finest level; each
/// coarser level doubles `h` and quadruples `dt`.
pub fn level_configs(base: &SimConfig, levels: usize) -> Result<Vec<SimConfig>> {
    if levels < 2 {
        return Err(Error::param("levels", format!("need at least 2, got {levels}")));
    }
    base.validate()?;
    let mut cfgs = vec![base.clone()];
    for _ in 1..levels {
        let fine = cfgs.last().expect("non-empty");
        let spec = fine.spec.coarsen()?;
        let initial = match &fine.initial {
            InitialCondition::Field(u) => InitialCondition::Field(u.restrict()?),
            other => other.clone(),
        };
        let coarse = SimConfig {
            spec,
            dt: fine.dt * 4.0,
            initial,
            ..fine.clone()
        };
        coarse.validate()?;
        cfgs.push(coarse);
    }
    cfgs.reverse();
    for cfg in &mut cfgs {
        cfg.output.dir = None;
    }
    let coarsest = &cfgs[0];
    let r = coarsest.t_end / coarsest.dt;
    if (r - r.round()).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::param(
            "t_end",
            format!("t_end = {} is not a whole number of coarsest steps (dt = {})", coarsest.t_end, coarsest.dt),
        ));
    }
    Ok(cfgs)
}

pub fn simulate_level(cfg: &SimConfig) -> Result<LevelOutcome> {
    let out = sim::run(cfg)?;
    Ok(LevelOutcome {
        u: out.final_state.u,
        x: out.final_state.x,
    })
}

pub fn refine_study(base: &SimConfig, levels: usize) -> Result<RefinementReport> {
    refine_study_with(base, levels, simulate_level)
}

/// As [`refine_study`] with a custom per-level runner. Levels run
/// concurrently.
pub fn refine_study_with<F>(base: &SimConfig, levels: usize, runner: F) -> Result<RefinementReport>
where
    F: Fn(&SimConfig) -> Result<LevelOutcome> + Sync,
{
    let cfgs = level_configs(base, levels)?;
    let runner = &runner;
    let outcomes: Vec<Result<LevelOutcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfgs
            .iter()
            .map(|cfg| scope.spawn(move || runner(cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("level runner panicked"))
            .collect()
    });
    let mut results = Vec::with_capacity(cfgs.len());
    for (cfg, outcome) in cfgs.iter().zip(outcomes) {
        let out = outcome.map_err(|e| Error::Level {
            h: cfg.spec.h(),
            dt: cfg.dt,
            source: Box::new(e),
        })?;
        if out.u.spec() != cfg.spec {
            return Err(Error::param("runner", "returned a field on the wrong grid"));
        }
        results.push(out);
    }

    let mut records = Vec::with_capacity(cfgs.len());
    for (k, cfg) in cfgs.iter().enumerate() {
        let mut rec = LevelRecord {
            level: k,
            h: cfg.spec.h(),
            dt: cfg.dt,
            du_norm: None,
            dx_norm: None,
            du_sumsq: None,
        };
        if let Some(fine) = results.get(k + 1) {
            let coarse = &results[k];
            let diff = &coarse.u - &fine.u.restrict()?;
            let sumsq: f64 = diff
                .channels()
                .iter()
                .flat_map(|c| c.values())
                .map(|v| v * v)
                .sum();
            rec.du_norm = Some(crate::grid::norm(&diff));
            rec.du_sumsq = Some(sumsq);
            rec.dx_norm = Some((coarse.x[0] - fine.x[0]).hypot(coarse.x[1] - fine.x[1]));
        }
        records.push(rec);
    }
    let mut report = RefinementReport {
        levels: records,
        order_u: None,
        order_x: None,
    };
    report.order_u = estimate_order(&report.du()).ok();
    report.order_x = estimate_order(&report.dx()).ok();
    Ok(report)
}
