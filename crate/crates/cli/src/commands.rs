use std::fmt::Write as _;

use anyhow::{Context, Result};
use symcone::extremal::{check_order_interval_segment, check_state_gauge_identity, check_strong_atomicity};
use symcone::extremal::{extremal_for_state, pure_states};
use symcone::jordan::{builtin_product, check_jb_norm_conditions, check_qj_axioms};
use symcone::maps::{verify_gauge_reversing, SAMPLE_RADIUS};
use symcone::reconstruction::{cross_validate, reconstruct, verify_reconstruction};
use symcone::report::{format_float, ReportBuilder};
use symcone::{AlgebraHandle, Error, VerificationReport};

use crate::config::{Format, RunConfig};

/// Output of a command together with its verdict.
pub struct Outcome {
    pub body: String,
    pub pass: bool,
}

/// Order intervals checked by the suite, one per leading pure state.
const SEGMENT_STATES: usize = 3;

pub fn suite(cfg: &RunConfig) -> Result<Outcome> {
    let map = cfg.require_map()?;
    let space = cfg.space()?;
    let (trials, seed, tol) = (cfg.trials, cfg.seed, cfg.tol);

    let mut report = ReportBuilder::new("suite", seed);
    report.merge("gauge", verify_gauge_reversing(map, &space, &space, trials, seed, tol));
    report.merge("reconstruction", verify_reconstruction(map, &space, trials, seed, tol));
    report.merge("extremal", check_state_gauge_identity(map, &space, trials, seed, tol));
    let g = space.sample_interior(seed.wrapping_add(1), SAMPLE_RADIUS);
    report.merge("atomicity", check_strong_atomicity(&space, map, &g, trials, seed, tol));

    let x = space.sample_interior(seed.wrapping_add(2), SAMPLE_RADIUS);
    let states = pure_states(&space, SEGMENT_STATES, seed)?;
    for (k, psi) in states.iter().take(SEGMENT_STATES).enumerate() {
        let prefix = format!("segment.{k}");
        let checked = extremal_for_state(&space, psi)
            .and_then(|p| check_order_interval_segment(&space, &x, &p, trials, seed, tol));
        match checked {
            Ok(r) => report.merge(&prefix, r),
            Err(_) => report.add_failure(format!("{prefix}.segment_deviation"), tol),
        }
    }
    Ok(render_report(report.finish(), cfg.format))
}

pub fn atomicity(cfg: &RunConfig) -> Result<Outcome> {
    let map = cfg.require_map()?;
    let space = cfg.space()?;
    let g = match &cfg.x {
        Some(_) => cfg.vector(&cfg.x, "x")?,
        None => space.sample_interior(cfg.seed.wrapping_add(1), SAMPLE_RADIUS),
    };
    space.require_interior(&g).context("--x")?;
    let report = check_strong_atomicity(&space, map, &g, cfg.trials, cfg.seed, cfg.tol);
    Ok(render_report(report, cfg.format))
}

pub fn reconstruct_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let map = cfg.require_map()?;
    let space = cfg.space()?;
    let truth = builtin_product(&cfg.cone)?;
    let recovered = match reconstruct(map, &space) {
        Ok(r) => r.product,
        Err(e) => {
            let body = match cfg.format {
                Format::Json => format!("{{\"error\":{},\"pass\":false}}", serde_json::to_string(&e.to_string())?),
                Format::Text => format!("reconstruction failed: {e}\nFAIL\n"),
            };
            return Ok(Outcome { body, pass: false });
        }
    };
    let deviation = cross_validate(&recovered, &truth)?;
    let pass = deviation <= cfg.tol;
    let body = match cfg.format {
        Format::Json => format!(
            "{{\"product\":{},\"deviation\":{},\"tolerance\":{},\"pass\":{pass}}}",
            serde_json::to_string(&recovered)?,
            format_float(deviation),
            format_float(cfg.tol),
        ),
        Format::Text => {
            let mut s = format!("recovered product on dimension {}\n", recovered.dim());
            let _ = writeln!(s, "max deviation from builtin product {deviation:.3e} (tol {:.1e})", cfg.tol);
            s.push_str(if pass { "PASS\n" } else { "FAIL\n" });
            s
        }
    };
    Ok(Outcome { body, pass })
}

pub fn algebra(cfg: &RunConfig) -> Result<Outcome> {
    let space = cfg.space()?;
    let product = match &cfg.product {
        Some(p) => p.clone(),
        None => builtin_product(&cfg.cone)?,
    };
    let alg = AlgebraHandle::new(space, product)?;
    let mut report = ReportBuilder::new("algebra", cfg.seed);
    report.merge("qj", check_qj_axioms(&alg, cfg.trials, cfg.seed, cfg.tol));
    report.merge("jb", check_jb_norm_conditions(&alg, cfg.trials, cfg.seed, cfg.tol));
    Ok(render_report(report.finish(), cfg.format))
}

pub fn gauge(cfg: &RunConfig) -> Result<Outcome> {
    let space = cfg.space()?;
    let x = cfg.vector(&cfg.x, "x")?;
    let y = cfg.vector(&cfg.y, "y")?;
    let interior = |v: &symcone::Vector, flag: &str| -> Result<()> {
        match space.require_interior(v) {
            Err(Error::NotInterior) => anyhow::bail!("--{flag} is not interior to the cone"),
            other => other.map_err(Into::into),
        }
    };
    interior(&x, "x")?;
    interior(&y, "y")?;
    let m = space.min_gauge(&x, &y)?;
    let big_m = space.max_gauge(&x, &y)?;
    let dt = space.thompson_distance(&x, &y)?;
    let body = match cfg.format {
        Format::Json => format!("{{\"m\":{m},\"M\":{big_m},\"dT\":{dt}}}"),
        Format::Text => format!("m  {m}\nM  {big_m}\ndT {dt}\n"),
    };
    Ok(Outcome { body, pass: true })
}

fn render_report(report: VerificationReport, format: Format) -> Outcome {
    let pass = report.pass();
    let body = match format {
        Format::Json => report.to_canonical_json(),
        Format::Text => report.to_text(),
    };
    Outcome { body, pass }
}

