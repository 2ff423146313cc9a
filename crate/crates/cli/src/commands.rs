use std::path::PathBuf;
use std::sync::Arc;

use fracpoin::constants::{
    local_constant, rooms_probe, sharp_constant_estimate, tau_sweep, write_rooms_csv, write_tau_csv, ConstantBreakdown,
    EstimateMethod,
};
use fracpoin::covering::{
    boman_constant, choose_m, cube_tree_covering_with_m, distance_lemma_check, john_tree_covering,
    verify_tree_covering, weight_comparability_check,
};
use fracpoin::decomposition::{
    hardy_norm_probe, orthogonal_decompose, verify_decomposition, CoveringGrid, WeightSpec,
};
use fracpoin::field::{Field, FieldFamily, Grid};
use fracpoin::functional::{
    verify_inequality, write_ratio_csv, GagliardoForm, KernelSpec, QuadratureOptions, RatioRecord, Region, RhoKind,
};
use fracpoin::geometry::Cube;
use fracpoin::io::{parse_boundary_set, parse_domain};
use fracpoin::whitney::{verify_whitney, whitney_decompose};
use fracpoin::{Domain2, Dyadic, ExactScalar, FracError, Grid2, JohnCovering2, Kernel2, Rational, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::output::{csv_preamble, emit, json_document};
use crate::{
    Cli, Command, ConstantsArgs, CoverCubeArgs, CoverJohnArgs, CoveringChoice, DecomposeArgs, EstimateArgs, Format,
    GridArgs, HardyArgs, KernelArgs, RoomsArgs, SweepArgs, VerifyArgs, WhitneyArgs,
};

/// Runs one subcommand; `Ok(false)` when a checked property fails.
pub fn run(cli: &Cli) -> Result<bool> {
    let seed = cli.seed;
    let (name, default, pass, text) = match &cli.command {
        Command::Whitney(a) => json_only("whitney", cli.format, whitney(a))?,
        Command::CoverCube(a) => json_only("cover-cube", cli.format, cover_cube(a))?,
        Command::CoverJohn(a) => json_only("cover-john", cli.format, cover_john(a))?,
        Command::Decompose(a) => json_only("decompose", cli.format, decompose(a, seed))?,
        Command::HardyProbe(a) => json_only("hardy-probe", cli.format, hardy(a, seed))?,
        Command::Constants(a) => json_only("constants", cli.format, constants(a))?,
        Command::Estimate(a) => json_only("estimate", cli.format, estimate(a, seed))?,
        Command::Verify(a) => {
            let (pass, csv, body) = verify(a, seed)?;
            ("verify", Format::Csv, pass, Rendered { csv: Some(csv), json: body })
        }
        Command::SweepTau(a) => {
            let (pass, csv, body) = sweep(a, seed)?;
            ("sweep-tau", Format::Csv, pass, Rendered { csv: Some(csv), json: body })
        }
        Command::RoomsProbe(a) => {
            let (csv, body) = rooms(a, seed)?;
            ("rooms-probe", Format::Csv, true, Rendered { csv: Some(csv), json: body })
        }
    };
    let rendered = match (cli.format.unwrap_or(default), text.csv) {
        (Format::Csv, Some(csv)) => format!("{}{}", csv_preamble(name, seed), csv),
        (Format::Csv, None) => unreachable!("json_only rejects csv"),
        (Format::Json, _) => json_document(name, seed, text.json),
    };
    emit(cli.out.as_deref(), &rendered)?;
    Ok(pass)
}

struct Rendered {
    csv: Option<String>,
    json: Value,
}

fn json_only(
    name: &'static str,
    format: Option<Format>,
    result: Result<(bool, Value)>,
) -> Result<(&'static str, Format, bool, Rendered)> {
    if format == Some(Format::Csv) {
        return Err(FracError::OutOfRange(format!("{name} only writes JSON")));
    }
    let (pass, json) = result?;
    Ok((name, Format::Json, pass, Rendered { csv: None, json }))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn domain(spec: &str) -> Result<Arc<Domain2>> {
    Ok(Arc::new(parse_domain(spec)?))
}

fn grid(domain: &Arc<Domain2>, g: &GridArgs) -> Result<Arc<Grid2>> {
    let sub = g.sub.unwrap_or(1u32.checked_shl(g.r).unwrap_or(0));
    if sub == 0 || sub > 1 << 12 {
        return Err(FracError::OutOfRange(format!("grid depth r = {} is too large", g.r)));
    }
    Ok(Arc::new(Grid::new(Arc::clone(domain), sub)?))
}

/// Finest Whitney generation whose cubes are unions of grid cells.
fn grid_generation(grid: &Grid2) -> i32 {
    grid.subdivisions().trailing_zeros() as i32
}

fn john(domain: &Arc<Domain2>, gen: i32) -> Result<JohnCovering2> {
    john_tree_covering(&whitney_decompose(domain, gen)?, None)
}

fn parse_method(text: &str) -> Result<EstimateMethod> {
    match text.split_once(':') {
        None if text == "rayleigh" => Ok(EstimateMethod::Rayleigh),
        Some(("random", b)) => Ok(EstimateMethod::RandomSearch {
            budget: b.parse().map_err(|_| FracError::Parse(format!("bad budget in '{text}'")))?,
        }),
        _ => Err(FracError::Parse(format!("unknown method '{text}' (rayleigh or random:BUDGET)"))),
    }
}

fn kernel(a: &KernelArgs, domain: &Arc<Domain2>) -> Result<Kernel2> {
    let f = || -> Result<_> { Ok(Arc::new(parse_boundary_set(domain, &a.f)?)) };
    let k = match a.kernel.as_str() {
        "main" | "weighted_main" => KernelSpec::WeightedMain {
            s: a.s,
            tau: a.tau,
            beta: a.beta,
            f: f()?,
        },
        "tau_ball" => KernelSpec::TauBall { s: a.s, tau: a.tau },
        "classical" => KernelSpec::Classical { s: a.s },
        "ponce" | "radial" => KernelSpec::RadialPonce {
            rho: a.rho.parse()?,
            beta: a.beta,
            f: f()?,
        },
        other => return Err(FracError::Parse(format!("unknown kernel '{other}'"))),
    };
    k.validate(domain)?;
    Ok(k)
}

fn boman_k(domain: &Arc<Domain2>, gen: i32) -> Result<f64> {
    Ok(boman_constant(&john(domain, gen)?).k_f64())
}

/// Closed-form constant for the kernel, when one is available, and the
/// Boman constant it used.
fn theoretical(kernel: &Kernel2, p: f64, domain: &Arc<Domain2>, gen: i32) -> Result<(Option<f64>, Option<f64>)> {
    Ok(match kernel {
        KernelSpec::WeightedMain { s, tau, beta, .. } => {
            let k = boman_k(domain, gen)?;
            (Some(ConstantBreakdown::new(2, p, *s, *tau, *beta, k)?.total), Some(k))
        }
        KernelSpec::RadialPonce { rho, beta, .. } => {
            let k = boman_k(domain, gen)?;
            (Some(ConstantBreakdown::radial(2, p, rho, *beta, k)?.total), Some(k))
        }
        KernelSpec::Classical { s } => {
            let bb = domain.bounding_box().to_f64();
            let diam = (0..2).map(|k| (bb.hi[k] - bb.lo[k]).powi(2)).sum::<f64>().sqrt();
            (Some(local_constant(2, p, *s, diam, domain.measure().to_f64())?), None)
        }
        KernelSpec::TauBall { .. } => (None, None),
    })
}

enum Source {
    Family(FieldFamily),
    Json(PathBuf),
}

impl Source {
    fn id(&self) -> String {
        match self {
            Source::Family(f) => f.id(),
            Source::Json(p) => format!("json:{}", p.display()),
        }
    }

    fn sample(&self, grid: &Arc<Grid2>) -> Result<Field<f64, 2>> {
        match self {
            Source::Family(f) => Ok(f.sample(Arc::clone(grid))),
            Source::Json(path) => {
                let v: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
                let u = Field::from_json(Arc::clone(grid.domain()), &v)?;
                if u.grid().subdivisions() != grid.subdivisions() {
                    return Err(FracError::IncompatibleGrid(format!(
                        "field {} has {} subdivisions, the run uses {}",
                        path.display(),
                        u.grid().subdivisions(),
                        grid.subdivisions()
                    )));
                }
                Field::new(Arc::clone(grid), u.values().to_vec())
            }
        }
    }

    fn resamplable(&self) -> bool {
        matches!(self, Source::Family(_))
    }
}

/// `random:COUNT` expands to COUNT band-limited fields with seeds drawn from
/// `seed`; everything else names a single field.
fn sources(items: &[String], seed: u64) -> Result<Vec<Source>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for item in items.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        if let Some(path) = item.strip_prefix("json:") {
            out.push(Source::Json(PathBuf::from(path)));
            continue;
        }
        let parts: Vec<&str> = item.split(':').collect();
        if let ["random", count] = parts.as_slice() {
            let count: usize = count
                .parse()
                .map_err(|_| FracError::Parse(format!("bad field count in '{item}'")))?;
            for _ in 0..count {
                out.push(Source::Family(FieldFamily::RandomBandLimited {
                    seed: rng.next_u64(),
                    max_freq: 4,
                }));
            }
        } else {
            out.push(Source::Family(item.parse()?));
        }
    }
    if out.is_empty() {
        return Err(FracError::OutOfRange("no fields given".into()));
    }
    Ok(out)
}

fn whitney(a: &WhitneyArgs) -> Result<(bool, Value)> {
    let d = domain(&a.domain.domain)?;
    let dec = whitney_decompose(&d, a.gen)?;
    let report = verify_whitney(&dec);
    let body = json!({
        "domain": d.name(),
        "decomposition": dec.to_json(),
        "report": to_value(&report),
    });
    Ok((report.pass, body))
}

fn cover_cube(a: &CoverCubeArgs) -> Result<(bool, Value)> {
    let side: Rational = a
        .side
        .parse()
        .map_err(|_| FracError::Parse(format!("bad cube side '{}'", a.side)))?;
    if side <= Rational::from_int(0) {
        return Err(FracError::OutOfRange("cube side must be positive".into()));
    }
    let m = match a.m {
        Some(m) => m,
        None => choose_m(a.n, a.tau)?,
    };
    match a.n {
        1 => cover_cube_n::<1>(side, m, a.tau),
        2 => cover_cube_n::<2>(side, m, a.tau),
        3 => cover_cube_n::<3>(side, m, a.tau),
        n => Err(FracError::OutOfRange(format!("dimension {n} not supported (1 to 3)"))),
    }
}

fn cover_cube_n<const N: usize>(side: Rational, m: usize, tau: f64) -> Result<(bool, Value)> {
    let cov = cube_tree_covering_with_m(&Cube::new([Rational::from_int(0); N], side), m)?;
    let report = verify_tree_covering(&cov);
    let k = boman_constant(&cov);
    let body = json!({
        "n": N,
        "tau": tau,
        "m": m,
        "covering": cov.to_json(Some(k.k_f64()), Some(report.max_eccentricity)),
        "report": to_value(&report),
    });
    Ok((report.pass, body))
}

fn cover_john(a: &CoverJohnArgs) -> Result<(bool, Value)> {
    let d = domain(&a.domain.domain)?;
    let cov = john(&d, a.gen)?;
    let report = verify_tree_covering(&cov);
    let k = boman_constant(&cov).k_f64();
    let lemma = distance_lemma_check(&cov, &d);
    let mut pass = report.pass && lemma.check.pass;
    let mut comparability = Vec::new();
    for spec in &a.f {
        let f = parse_boundary_set(&d, spec)?;
        let check = weight_comparability_check(&cov, &f, k, 4);
        pass &= check.check.pass;
        comparability.push(json!({ "F": f.label(), "check": to_value(&check) }));
    }
    let body = json!({
        "domain": d.name(),
        "covering": cov.to_json(Some(k), Some(report.max_eccentricity)),
        "report": to_value(&report),
        "distance_lemma": to_value(&lemma),
        "weight_comparability": comparability,
    });
    Ok((pass, body))
}

fn decompose(a: &DecomposeArgs, seed: u64) -> Result<(bool, Value)> {
    let d = domain(&a.domain.domain)?;
    let g = Arc::new(Grid::dyadic(Arc::clone(&d), a.r)?);
    let cg = match a.covering {
        CoveringChoice::John => CoveringGrid::new(&john(&d, a.gen)?, Arc::clone(&g))?,
        CoveringChoice::Cube => {
            let bb = d.bounding_box();
            let side = bb.extent(0);
            if (0..2).any(|k| bb.extent(k) != side) || d.measure() != side * side {
                return Err(FracError::InvalidDomain(format!("{} is not a cube", d.name())));
            }
            let q = Cube::new(bb.lo.map(|v| v.to_rational()), side.to_rational());
            CoveringGrid::new(&cube_tree_covering_with_m(&q, a.m)?, Arc::clone(&g))?
        }
    };
    let mut pass = true;
    let mut results = Vec::new();
    for src in sources(&a.fields, seed)? {
        let raw = cg.restrict(&src.sample(&g)?);
        let mean = raw.integral() / cg.covered_measure();
        let field = cg.restrict(&raw.shift(-mean));
        let res = orthogonal_decompose(&cg, &field)?;
        let report = verify_decomposition(&cg, &field, &res);
        pass &= report.pass;
        let mut entry = json!({ "field_id": src.id(), "report": to_value(&report) });
        if a.parts {
            entry["parts"] = res.to_json();
        }
        results.push(entry);
    }
    let body = json!({
        "domain": d.name(),
        "covering": match a.covering { CoveringChoice::Cube => "cube", CoveringChoice::John => "john" },
        "nodes": cg.nodes(),
        "cells": g.len(),
        "fields": results,
    });
    Ok((pass, body))
}

fn hardy(a: &HardyArgs, seed: u64) -> Result<(bool, Value)> {
    let d = domain(&a.domain.domain)?;
    let cov = john(&d, a.gen)?;
    let k = boman_constant(&cov).k_f64();
    let g = Arc::new(Grid::dyadic(Arc::clone(&d), a.r)?);
    let cg = CoveringGrid::new(&cov, g)?;
    let f = parse_boundary_set(&d, &a.f)?;
    let weight = (a.beta > 0.0).then(|| WeightSpec {
        beta: a.beta,
        f: &f,
        k,
    });
    let mut pass = true;
    let mut reports = Vec::new();
    for &q in &a.q {
        let rep = hardy_norm_probe(&cg, q, weight.as_ref(), a.trials, seed)?;
        pass &= rep.pass;
        reports.push(to_value(&rep));
    }
    let body = json!({
        "domain": d.name(),
        "K": k,
        "beta": a.beta,
        "F": f.label(),
        "reports": reports,
    });
    Ok((pass, body))
}

fn constants(a: &ConstantsArgs) -> Result<(bool, Value)> {
    let b = match &a.rho {
        Some(rho) => ConstantBreakdown::radial(a.n, a.p, &rho.parse::<RhoKind>()?, a.beta, a.k)?,
        None => ConstantBreakdown::new(a.n, a.p, a.s, a.tau, a.beta, a.k)?,
    };
    Ok((true, json!({ "breakdown": to_value(&b) })))
}

fn relative_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

struct VerifyRun<'a> {
    domain: &'a Arc<Domain2>,
    kernel: &'a Kernel2,
    p: f64,
    gen: i32,
    localized: bool,
    constant: f64,
}

impl VerifyRun<'_> {
    fn records(&self, grid: &Arc<Grid2>, rd: u32, sources: &[Source]) -> Result<Vec<RatioRecord>> {
        let form = GagliardoForm::assemble(grid, self.kernel, self.p, QuadratureOptions { diag_depth: rd })?;
        let form = if self.localized {
            let gen = self.gen.min(grid_generation(grid));
            let cg = CoveringGrid::new(&john(self.domain, gen)?, Arc::clone(grid))?;
            form.restrict(Region::Localized(&cg))?
        } else {
            form
        };
        sources
            .iter()
            .map(|s| verify_inequality(&s.sample(grid)?, self.kernel, &form, self.constant, &s.id()))
            .collect()
    }
}

fn verify(a: &VerifyArgs, seed: u64) -> Result<(bool, String, Value)> {
    let d = domain(&a.domain.domain)?;
    let kern = kernel(&a.kernel, &d)?;
    let g = grid(&d, &a.grid)?;
    let gen = a.gen;
    let (theory, k) = theoretical(&kern, a.kernel.p, &d, gen)?;
    let constant = a.constant.or(theory).unwrap_or(f64::INFINITY);
    let srcs = sources(&a.fields, seed)?;
    let run = VerifyRun {
        domain: &d,
        kernel: &kern,
        p: a.kernel.p,
        gen,
        localized: a.localized,
        constant,
    };
    let records = run.records(&g, a.grid.rd, &srcs)?;
    let pass = records.iter().all(|r| r.pass);
    let slack = median(records.iter().filter(|r| r.ratio > 0.0).map(|r| r.constant / r.ratio).collect());

    let mut refinement = Value::Null;
    if !a.no_refinement && srcs.iter().all(Source::resamplable) {
        let sub = g.subdivisions();
        let mut block = json!({});
        if sub >= 2 && sub % 2 == 0 {
            let coarse = Arc::new(Grid::new(Arc::clone(&d), sub / 2)?);
            let recs = run.records(&coarse, a.grid.rd, &srcs)?;
            let gaps: Vec<f64> = records.iter().zip(&recs).map(|(x, y)| relative_gap(x.ratio, y.ratio)).collect();
            block["grid"] = json!({
                "subdivisions": [sub, sub / 2],
                "max_relative_gap": gaps.iter().copied().fold(0.0, f64::max),
                "median_relative_gap": median(gaps),
            });
        }
        if a.grid.rd >= 1 {
            let recs = run.records(&g, a.grid.rd - 1, &srcs)?;
            let gaps: Vec<f64> = records.iter().zip(&recs).map(|(x, y)| relative_gap(x.rhs, y.rhs)).collect();
            block["diagonal"] = json!({
                "depths": [a.grid.rd, a.grid.rd - 1],
                "max_relative_gap": gaps.iter().copied().fold(0.0, f64::max),
                "median_relative_gap": median(gaps),
            });
        }
        refinement = block;
    }
    if !refinement.is_null() {
        eprintln!("refinement: {refinement}");
    }
    eprintln!(
        "verify: {} fields, {} pass, constant {constant:e}, K {}, median slack {}",
        records.len(),
        records.iter().filter(|r| r.pass).count(),
        k.map_or("n/a".to_string(), |k| k.to_string()),
        slack.map_or("n/a".to_string(), |s| format!("{s:e}"))
    );

    let mut buf = Vec::new();
    write_ratio_csv(&mut buf, &records)?;
    let body = json!({
        "domain": d.name(),
        "K": k,
        "generation": gen,
        "localized": a.localized,
        "constant": constant,
        "median_slack": slack,
        "records": to_value(&records),
        "refinement": refinement,
    });
    Ok((pass, String::from_utf8(buf).expect("CSV is UTF-8"), body))
}

fn estimate(a: &EstimateArgs, seed: u64) -> Result<(bool, Value)> {
    let d = domain(&a.domain.domain)?;
    let kern = kernel(&a.kernel, &d)?;
    let g = grid(&d, &a.grid)?;
    let (theory, k) = theoretical(&kern, a.kernel.p, &d, a.gen)?;
    let form = GagliardoForm::assemble(&g, &kern, a.kernel.p, QuadratureOptions { diag_depth: a.grid.rd })?;
    let est = sharp_constant_estimate(&form, &kern, parse_method(&a.method)?, seed)?;
    let pass = theory.is_none_or(|t| est.estimate <= t);
    let mut body = json!({
        "domain": d.name(),
        "kernel": kern.name(),
        "cells": g.len(),
        "estimate": est.estimate,
        "label": est.label(),
        "method": to_value(&est.method),
        "residual": est.residual,
        "iterations": est.iterations,
        "K": k,
        "theoretical": theory,
    });
    if a.certificate {
        body["certificate"] = est.certificate.to_json();
    }
    Ok((pass, body))
}

fn sweep(a: &SweepArgs, seed: u64) -> Result<(bool, String, Value)> {
    let d = domain(&a.domain.domain)?;
    let f = Arc::new(parse_boundary_set(&d, &a.f)?);
    let g = grid(&d, &a.grid)?;
    let k = match a.k {
        Some(k) => k,
        None => boman_k(&d, a.gen)?,
    };
    let rows = tau_sweep(
        &g,
        a.p,
        a.s,
        a.beta,
        &f,
        &a.taus,
        k,
        parse_method(&a.method)?,
        QuadratureOptions { diag_depth: a.grid.rd },
        seed,
    )?;
    let bounded = rows.iter().all(|r| r.empirical <= r.theoretical);
    let mut order: Vec<_> = rows.iter().collect();
    order.sort_by(|x, y| x.tau.total_cmp(&y.tau));
    let monotone = order.windows(2).all(|w| w[1].empirical <= w[0].empirical * (1.0 + 1e-9));
    let mut buf = Vec::new();
    write_tau_csv(&mut buf, &rows)?;
    let body = json!({
        "domain": d.name(),
        "K": k,
        "rows": to_value(&rows),
        "bounded": bounded,
        "monotone": monotone,
    });
    Ok((bounded && monotone, String::from_utf8(buf).expect("CSV is UTF-8"), body))
}

fn rooms(a: &RoomsArgs, seed: u64) -> Result<(String, Value)> {
    let len: Dyadic = a.corridor_length.parse()?;
    let h: Dyadic = a.h.parse()?;
    let rows = rooms_probe(
        a.k,
        &a.js,
        len,
        h.to_rational(),
        a.p,
        a.s,
        a.tau,
        parse_method(&a.method)?,
        QuadratureOptions { diag_depth: a.rd },
        seed,
    )?;
    let mut buf = Vec::new();
    write_rooms_csv(&mut buf, &rows)?;
    let body = json!({ "k": a.k, "tau": a.tau, "rows": to_value(&rows) });
    Ok((String::from_utf8(buf).expect("CSV is UTF-8"), body))
}
