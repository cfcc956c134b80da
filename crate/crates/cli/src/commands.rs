use std::collections::BTreeSet;
use std::path::PathBuf;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use maxrep::estimate::{self, DEstimate, ExactComparison};
use maxrep::functionals::{vk_residual, QuadratureConfig};
use maxrep::global_build::{self, BuildReport, CandidateReport};
use maxrep::local_gas::{self, cache, SigmaKind, SigmaRecord};
use maxrep::maxdim::{self, ScanOptions};
use maxrep::partitions::{self, from_step_function, to_step_function, Partition};
use maxrep::{Error, Result};

use crate::output::{num, write_atomic, Sink};
use crate::{ConstructArgs, DecomposeArgs, EstimateArgs, Format, MaxdimArgs, SigmaArgs, VerifyArgs};

/// Exhaustive identity checks beyond this `N` would take hours.
const VK_EXHAUSTIVE_CEILING: u32 = 40;

fn cache_path(flag: &Option<PathBuf>) -> Option<PathBuf> {
    std::env::var_os("MAXREP_CACHE").map(PathBuf::from).or_else(|| flag.clone())
}

fn load_cache(path: &Option<PathBuf>) -> Result<Vec<SigmaRecord>> {
    let Some(path) = path else { return Ok(Vec::new()) };
    let loaded = cache::load(path)?;
    if !loaded.quarantined.is_empty() {
        eprintln!("warning: {} record(s) in {} were quarantined", loaded.quarantined.len(), path.display());
    }
    Ok(loaded.records)
}

pub fn maxdim(args: &MaxdimArgs, sink: &Sink) -> Result<()> {
    let options = ScanOptions { checkpoint: args.checkpoint.clone(), prune_multiplier: args.prune };
    if args.prune.is_some() {
        eprintln!("note: heuristic pruning is on; the table is not certified");
    }
    let table = maxdim::d_table_with(args.n_max, &options)?;
    match sink.format {
        Format::Csv => {
            let mut bytes = Vec::new();
            maxdim::write_csv(&table, &mut bytes)?;
            sink.emit(&bytes)?;
        }
        Format::Json => sink.json(&table)?,
    }
    if let Some(n) = args.check_mckay {
        let record = match table.iter().find(|r| r.n == n) {
            Some(r) => r.clone(),
            None => maxdim::d_exact(n)?,
        };
        let (holds, margin) = maxdim::mckay_from_record(&record);
        eprintln!("mckay N={n}: holds={holds} margin={}", num(margin));
    }
    Ok(())
}

#[derive(Serialize)]
struct VkRow {
    partition: String,
    residual: f64,
}

#[derive(Serialize)]
struct VkReport {
    n: u32,
    checked: usize,
    max_abs_residual: f64,
    tolerance: f64,
    rows: Vec<VkRow>,
}

pub fn verify_vk(args: &VerifyArgs, sink: &Sink) -> Result<()> {
    if args.n == 0 {
        return Err(Error::Validation("the identity needs N ≥ 1".into()));
    }
    let partitions: Vec<Partition> = if args.exhaustive {
        if args.n > VK_EXHAUSTIVE_CEILING {
            return Err(Error::ResourceLimit {
                what: "N for an exhaustive check",
                value: args.n as u64,
                ceiling: VK_EXHAUSTIVE_CEILING as u64,
            });
        }
        let mut all = Vec::new();
        partitions::enumerate_partitions(args.n, VK_EXHAUSTIVE_CEILING, |p| all.push(p.to_vec()))?;
        all.into_iter().map(Partition::new).collect::<Result<_>>()?
    } else {
        let samples = args.samples.ok_or_else(|| Error::Validation("give --exhaustive or --samples".into()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        (0..samples).map(|_| partitions::random_partition(args.n, &mut rng)).collect::<Result<_>>()?
    };
    let cfg = QuadratureConfig::default();
    let rows: Vec<VkRow> = partitions
        .par_iter()
        .map(|p| Ok(VkRow { partition: p.to_string(), residual: vk_residual(p, &cfg)? }))
        .collect::<Result<_>>()?;
    let max_abs_residual = rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    let report = VkReport { n: args.n, checked: rows.len(), max_abs_residual, tolerance: args.tol, rows };
    let csv_rows: Vec<Vec<String>> = report.rows.iter().map(|r| vec![r.partition.clone(), num(r.residual)]).collect();
    sink.table(&["partition", "residual"], &csv_rows, &report)?;
    eprintln!("checked {} partition(s) of {}: max |residual| = {}", report.checked, args.n, num(max_abs_residual));
    if max_abs_residual > args.tol {
        return Err(Error::Invariant(format!(
            "identity residual {} exceeds tolerance {}",
            num(max_abs_residual),
            args.tol
        )));
    }
    Ok(())
}

fn sigma_rows(records: &[SigmaRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            let kind = match r.kind {
                SigmaKind::Exact => "exact",
                SigmaKind::HeuristicUpper => "heuristic_upper",
            };
            vec![
                r.n.to_string(),
                num(r.rho),
                num(r.value),
                num(r.value / r.n as f64),
                kind.to_string(),
                r.seed.to_string(),
                r.witness.to_string(),
            ]
        })
        .collect()
}

const SIGMA_HEADER: [&str; 7] = ["n", "rho", "value", "value_over_n", "kind", "seed", "witness"];

pub fn sigma(args: &SigmaArgs, sink: &Sink) -> Result<()> {
    let record = if args.heuristic {
        let seed = args.seed.ok_or_else(|| Error::Validation("--heuristic needs an explicit --seed".into()))?;
        local_gas::sigma_heuristic(args.n, args.rho, args.budget.unwrap_or(local_gas::DEFAULT_BUDGET), seed)?
    } else {
        if args.budget.is_some() {
            return Err(Error::Validation("--budget only applies with --heuristic".into()));
        }
        local_gas::sigma_exact(args.n, args.rho)?
    };
    if let Some(path) = cache_path(&args.cache) {
        cache::append(&path, std::slice::from_ref(&record))?;
    }
    sink.table(&SIGMA_HEADER, &sigma_rows(std::slice::from_ref(&record)), &record)
}

#[derive(Serialize)]
struct EstimateReport {
    estimate: DEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<ExactComparison>,
}

/// Exact tables at every grid slope, reusing cached records and appending
/// the ones computed here.
fn grid_data(grid: usize, n_exact: usize, cache: &Option<PathBuf>) -> Result<Vec<SigmaRecord>> {
    let mut records = load_cache(cache)?;
    let slopes = estimate::grid_slopes(grid);
    let fresh: Vec<Vec<SigmaRecord>> = slopes
        .par_iter()
        .map(|&rho| {
            let have: BTreeSet<usize> = records
                .iter()
                .filter(|r| r.kind == SigmaKind::Exact && (r.rho == rho || r.rho == -rho))
                .map(|r| r.n)
                .collect();
            if (1..=n_exact).all(|n| have.contains(&n)) {
                return Ok(Vec::new());
            }
            let table = local_gas::sigma_exact_table(n_exact, rho)?;
            Ok(table.into_iter().filter(|r| !have.contains(&r.n)).collect())
        })
        .collect::<Result<_>>()?;
    let fresh: Vec<SigmaRecord> = fresh.into_iter().flatten().collect();
    if let Some(path) = cache {
        if !fresh.is_empty() {
            cache::append(path, &fresh)?;
        }
    }
    records.extend(fresh);
    Ok(records)
}

pub fn estimate_d(args: &EstimateArgs, sink: &Sink) -> Result<()> {
    let cache = cache_path(&args.cache);
    let records = grid_data(args.grid, args.n_exact, &cache)?;
    let est = estimate::estimate_d(args.grid, &records)?;
    let comparison = match args.compare_n {
        Some(n) => Some(estimate::compare_with_exact(&maxdim::d_table(n)?, &est)?),
        None => None,
    };
    eprintln!("d_hat = {} in [{}, {}]", num(est.value), num(est.lower), num(est.upper));
    if let Some(c) = &comparison {
        eprintln!("fit from exact d_N (N ≥ {}): {}; difference {}", c.fit_from, num(c.fitted_d), num(c.discrepancy));
    }
    let (lo, hi) = estimate::sandwich();
    let outside = est.lower < lo || est.upper > hi;
    match sink.format {
        Format::Csv => {
            let mut bytes = Vec::new();
            estimate::write_grid_csv(&est, &mut bytes)?;
            sink.emit(&bytes)?;
        }
        Format::Json => sink.json(&EstimateReport { estimate: est.clone(), comparison })?,
    }
    if outside {
        return Err(Error::Invariant(format!(
            "bracket [{}, {}] leaves the known interval [{}, {}]",
            num(est.lower),
            num(est.upper),
            num(lo),
            num(hi)
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct ConstructReport {
    build: BuildReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    candidate: Option<CandidateReport>,
}

pub fn construct(args: &ConstructArgs, sink: &Sink) -> Result<()> {
    let build = if args.raw {
        global_build::build_near_optimizer(args.n, args.window)?
    } else {
        global_build::build_exact_area(args.n, args.window)?
    };
    let candidate = match args.d_hat {
        Some(d) if build.area > 0 => Some(global_build::evaluate_candidate(&build.f, d)?),
        _ => None,
    };
    if let Some(path) = &args.dump_parts {
        let lambda = from_step_function(&build.f)?;
        let head: Vec<String> = lambda.parts().iter().take(1000).map(u32::to_string).collect();
        let text = format!("{}\n{}\n{}\n", head.join(","), lambda.run_length(), build.f);
        write_atomic(path, text.as_bytes())?;
    }
    eprintln!(
        "area {} (target {}), Θ = {}, log dim = {}",
        build.area,
        build.n_target,
        num(build.breakdown.total),
        num(build.log_dim)
    );
    let rows: Vec<Vec<String>> = build
        .windows
        .iter()
        .map(|w| vec![w.x_start.to_string(), w.length.to_string(), num(w.rho), num(w.local_total), w.fallback.to_string()])
        .collect();
    sink.table(&["x_start", "length", "rho", "local_total", "fallback"], &rows, &ConstructReport { build, candidate })
}

pub fn decompose(args: &DecomposeArgs, sink: &Sink) -> Result<()> {
    let lambda: Partition = args.partition.parse()?;
    if lambda.is_empty() {
        return Err(Error::Validation("the partition is empty".into()));
    }
    let f = to_step_function(&lambda);
    let d = global_build::window_decomposition(&f, lambda.size(), args.window)?;
    eprintln!("sum_local = {}, global = {}, slack = {}", num(d.sum_local), num(d.global), num(d.slack));
    let rows: Vec<Vec<String>> = d
        .windows
        .iter()
        .map(|w| vec![w.x_start.to_string(), w.length.to_string(), num(w.rho), num(w.local_total)])
        .collect();
    sink.table(&["x_start", "length", "rho", "local_total"], &rows, &d)
}
