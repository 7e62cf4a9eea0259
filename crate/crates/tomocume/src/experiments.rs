//! Monte-Carlo experiments behind the result tables.
//!
//! Trial `t` draws its rates from stream `2t` and its traffic from stream
//! `2t + 1` of the master seed, so results do not depend on how trials are
//! scheduled. Smaller sample sizes use a prefix of the largest batch.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use tomocume_core::analysis::{
    negative_percentage, normalized_mse, Cell, CellEstimate, CumulantErrors, TrialRecord,
};
use tomocume_core::cumulants::{k_statistics, theoretical_cumulants, CumulantVector, SampleBatch};
use tomocume_core::simulate::{draw_rates, simulate_links, ExperimentSeed};
use tomocume_core::solvers::{IdivSolver, RateEstimate, SolverKind, TikhonovSolver};
use tomocume_core::system::{diagnostics, Epsilons, ReducedSystem, SystemDiagnostics};
use tomocume_core::tensor::IndexTuple;
use tomocume_core::topology::{
    build_routing_matrix, k_shortest_paths, nsfnet, PathSet, RoutingMatrix, Topology,
};

use crate::config::ExperimentConfig;
use crate::io::{read_topology, write_table_file};
use crate::table::MetricTable;

/// Topology, paths, routing matrix and unweighted reduced systems.
pub struct Setup {
    pub topology: Topology,
    pub paths: PathSet,
    pub routing: RoutingMatrix,
    pub systems: BTreeMap<usize, ReducedSystem>,
}

impl Setup {
    pub fn new(
        topology: Topology,
        k: usize,
        orders: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let paths = k_shortest_paths(&topology, k)?;
        let routing = build_routing_matrix(&paths)?;
        let mut systems = BTreeMap::new();
        for r in orders {
            if let std::collections::btree_map::Entry::Vacant(e) = systems.entry(r) {
                e.insert(ReducedSystem::build(&routing, r)?);
            }
        }
        Ok(Setup {
            topology,
            paths,
            routing,
            systems,
        })
    }

    pub fn from_config(
        cfg: &ExperimentConfig,
        orders: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let topology = match &cfg.topology {
            Some(p) => read_topology(p)?,
            None => nsfnet(),
        };
        Self::new(topology, cfg.k, orders)
    }

    pub fn system(&self, r: usize) -> Result<&ReducedSystem> {
        self.systems
            .get(&r)
            .ok_or_else(|| anyhow!("no reduced system of order {r}"))
    }

    pub fn diagnostics(&self, r: usize) -> Result<SystemDiagnostics> {
        Ok(diagnostics(self.system(r)?)?)
    }
}

/// Which cells a batch of trials estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub orders: Vec<usize>,
    pub samples: Vec<usize>,
    pub solvers: Vec<SolverKind>,
    /// Orders estimated from exact cumulants.
    pub theoretical: Vec<usize>,
}

impl Plan {
    fn normalized(mut self) -> Self {
        for v in [&mut self.orders, &mut self.samples, &mut self.theoretical] {
            v.sort_unstable();
            v.dedup();
        }
        self.solvers.sort();
        self.solvers.dedup();
        self
    }

    fn all_orders(&self) -> BTreeSet<usize> {
        self.orders
            .iter()
            .chain(&self.theoretical)
            .copied()
            .collect()
    }
}

pub struct TrialOutput {
    pub record: TrialRecord,
    /// Cumulant estimation errors, one entry per planned sample size.
    pub cumulant_errors: Vec<CumulantErrors>,
}

enum Engine<'a> {
    Iteration(IdivSolver<'a>),
    LeastSquares(TikhonovSolver<'a>),
}

struct Prepared<'a> {
    system: &'a ReducedSystem,
    engine: Engine<'a>,
}

fn lookup(system: &ReducedSystem, values: &BTreeMap<IndexTuple, f64>) -> Result<CumulantVector> {
    let entries = system
        .tuples()
        .into_iter()
        .map(|t| {
            values
                .get(&t)
                .map(|&v| (t, v))
                .ok_or_else(|| anyhow!("missing statistic ({t})"))
        })
        .collect::<Result<_>>()?;
    Ok(CumulantVector { entries })
}

/// Runs `cfg.trials` trials of `plan` on `setup`.
pub fn run_trials(cfg: &ExperimentConfig, setup: &Setup, plan: Plan) -> Result<Vec<TrialOutput>> {
    let plan = plan.normalized();
    let solver_cfg = cfg.solver_config();
    let top = *plan
        .all_orders()
        .iter()
        .last()
        .ok_or_else(|| anyhow!("plan has no orders"))?;
    let top_tuples = setup.system(top)?.tuples();

    // Weighted systems, one per distinct (order, weights).
    let mut keys: Vec<(usize, [u64; 3])> = Vec::new();
    let mut wanted = Vec::new();
    for (orders, theoretical) in [(&plan.orders, false), (&plan.theoretical, true)] {
        for &r in orders {
            for &s in &plan.solvers {
                let eps = cfg.epsilons_for(s, theoretical);
                wanted.push((s, r, theoretical, eps));
                let key = (r, eps.0.map(f64::to_bits));
                if !keys.contains(&key) {
                    keys.push(key);
                }
            }
        }
    }
    let weighted: Vec<ReducedSystem> = keys
        .iter()
        .map(|&(r, bits)| {
            let eps = Epsilons(bits.map(f64::from_bits));
            Ok(setup.system(r)?.apply_epsilon(eps)?)
        })
        .collect::<Result<_>>()?;
    let mut prepared: BTreeMap<(SolverKind, usize, bool), Prepared<'_>> = BTreeMap::new();
    for (s, r, theoretical, eps) in wanted {
        let idx = keys
            .iter()
            .position(|k| *k == (r, eps.0.map(f64::to_bits)))
            .unwrap_or_default();
        let system = &weighted[idx];
        let engine = match s {
            SolverKind::Iteration => Engine::Iteration(IdivSolver::new(system)?),
            SolverKind::LeastSquares => {
                Engine::LeastSquares(TikhonovSolver::new(system, cfg.gamma)?)
            }
        };
        prepared.insert((s, r, theoretical), Prepared { system, engine });
    }

    let solve = |p: &Prepared<'_>, values: &BTreeMap<IndexTuple, f64>| -> Result<RateEstimate> {
        let target = p.system.weighted_rhs(&lookup(p.system, values)?)?;
        Ok(match &p.engine {
            Engine::Iteration(e) => e.solve(&target, &solver_cfg)?,
            Engine::LeastSquares(e) => e.solve(&target, &solver_cfg)?,
        })
    };

    let a = &setup.routing;
    let run = |t: usize| -> Result<TrialOutput> {
        let seed = cfg.seed;
        let rates = draw_rates(
            a.paths(),
            cfg.rate_lo,
            cfg.rate_hi,
            ExperimentSeed::new(seed, 2 * t as u64),
        )?;
        let exact = theoretical_cumulants(rates.as_slice(), a, &top_tuples)?;
        let exact_map: BTreeMap<IndexTuple, f64> = exact.entries.iter().copied().collect();
        let mut estimates = BTreeMap::new();
        let mut cumulant_errors = Vec::with_capacity(plan.samples.len());
        if let Some(&max_n) = plan.samples.last() {
            let y = simulate_links(
                &rates,
                a,
                max_n,
                ExperimentSeed::new(seed, 2 * t as u64 + 1),
            )?;
            let dim = y.dim();
            for &n in &plan.samples {
                let batch = SampleBatch::new(dim, y.as_slice()[..n * dim].to_vec())?;
                let ks = k_statistics(&batch, &top_tuples)?;
                cumulant_errors.push(CumulantErrors::between(&ks, &exact)?);
                let values: BTreeMap<IndexTuple, f64> = ks.entries.into_iter().collect();
                for &r in &plan.orders {
                    for &s in &plan.solvers {
                        let est = solve(&prepared[&(s, r, false)], &values)?;
                        let cell = Cell {
                            solver: s,
                            r,
                            n: Some(n),
                        };
                        estimates.insert(
                            cell,
                            CellEstimate {
                                clamped: est.clamped_count(),
                                rates: est.rates,
                            },
                        );
                    }
                }
            }
        }
        for &r in &plan.theoretical {
            for &s in &plan.solvers {
                let est = solve(&prepared[&(s, r, true)], &exact_map)?;
                let cell = Cell {
                    solver: s,
                    r,
                    n: None,
                };
                estimates.insert(
                    cell,
                    CellEstimate {
                        clamped: est.clamped_count(),
                        rates: est.rates,
                    },
                );
            }
        }
        Ok(TrialOutput {
            record: TrialRecord {
                trial: t,
                truth: rates.into_inner(),
                estimates,
            },
            cumulant_errors,
        })
    };
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| run(t).with_context(|| format!("trial {t}")))
        .collect()
}

fn order_columns(orders: &[usize]) -> Vec<String> {
    orders.iter().map(|r| format!("r={r}")).collect()
}

/// Mean normalized MSE of `cell`.
pub fn mean_xi(records: &[TrialRecord], cell: Cell) -> Result<f64> {
    Ok(normalized_mse(records, cell)?.mean)
}

pub struct Tables {
    /// Per-entry cumulant estimation MSE; rows are sample sizes.
    pub cumulant_mse: MetricTable,
    /// Averaged normalized MSE per solver, with exact-cumulant and rank rows.
    pub xi: Vec<(SolverKind, MetricTable)>,
    /// Percentage of clamped least-squares estimates.
    pub negatives: Option<MetricTable>,
}

impl Tables {
    pub fn xi_for(&self, solver: SolverKind) -> Option<&MetricTable> {
        self.xi.iter().find(|(s, _)| *s == solver).map(|(_, t)| t)
    }

    pub fn files(&self) -> Vec<(String, &MetricTable)> {
        let mut out = vec![("cumulant_mse.csv".to_owned(), &self.cumulant_mse)];
        for (s, t) in &self.xi {
            out.push((format!("xi_{}.csv", s.tag()), t));
        }
        if let Some(t) = &self.negatives {
            out.push(("negative_ls.csv".to_owned(), t));
        }
        out
    }
}

pub fn compute_tables(cfg: &ExperimentConfig) -> Result<Tables> {
    let mut orders = cfg.orders.clone();
    orders.sort_unstable();
    orders.dedup();
    let setup = Setup::from_config(cfg, orders.iter().copied())?;
    let plan = Plan {
        orders: orders.clone(),
        samples: cfg.samples.clone(),
        solvers: cfg.solvers.clone(),
        theoretical: if cfg.theoretical {
            orders.clone()
        } else {
            Vec::new()
        },
    }
    .normalized();
    let outputs = run_trials(cfg, &setup, plan.clone())?;
    let records: Vec<TrialRecord> = outputs.iter().map(|o| o.record.clone()).collect();
    let columns = order_columns(&orders);

    let mut cumulant_mse = MetricTable::new("N", columns.clone());
    for (i, &n) in plan.samples.iter().enumerate() {
        let mut acc = CumulantErrors::default();
        for o in &outputs {
            acc.merge(&o.cumulant_errors[i]);
        }
        cumulant_mse.push_row(n.to_string(), orders.iter().map(|&r| acc.mse(r)).collect());
    }

    let ranks: Vec<Option<f64>> = orders
        .iter()
        .map(|&r| setup.diagnostics(r).map(|d| Some(d.rank as f64)))
        .collect::<Result<_>>()?;
    let mut xi = Vec::new();
    let mut negatives = None;
    for &s in &plan.solvers {
        let mut table = MetricTable::new("N", columns.clone());
        let mut neg = MetricTable::new("N", columns.clone());
        let mut rows: Vec<(String, Option<usize>)> = plan
            .samples
            .iter()
            .map(|&n| (n.to_string(), Some(n)))
            .collect();
        if cfg.theoretical {
            rows.push(("theoretical".to_owned(), None));
        }
        for (label, n) in rows {
            let mut values = Vec::new();
            let mut pct = Vec::new();
            for &r in &orders {
                let cell = Cell { solver: s, r, n };
                values.push(Some(mean_xi(&records, cell)?));
                pct.push(Some(negative_percentage(&records, cell)));
            }
            table.push_row(label.clone(), values);
            neg.push_row(label, pct);
        }
        table.push_row("rank", ranks.clone());
        if s == SolverKind::LeastSquares {
            negatives = Some(neg);
        }
        xi.push((s, table));
    }
    Ok(Tables {
        cumulant_mse,
        xi,
        negatives,
    })
}

/// Computes the tables and writes one CSV per table into `cfg.output`.
pub fn run_tables(cfg: &ExperimentConfig) -> Result<Tables> {
    let tables = compute_tables(cfg)?;
    fs::create_dir_all(&cfg.output)
        .with_context(|| format!("creating {}", cfg.output.display()))?;
    for (name, t) in tables.files() {
        write_table_file(&cfg.output.join(name), t)?;
    }
    Ok(tables)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub label: String,
    pub numerator: f64,
    pub denominator: f64,
    /// `None` when the denominator is below the outlier threshold.
    pub ratio: Option<f64>,
}

/// Per-path `ξᵢ²(r, N) / ξᵢ²(2, ∞)`.
pub fn compute_ratio_figure(cfg: &ExperimentConfig) -> Result<Vec<RatioRow>> {
    let s = cfg.ratio_solver;
    let r = cfg.ratio_order;
    let n = cfg.compare_samples;
    let setup = Setup::from_config(cfg, [2, r])?;
    let plan = Plan {
        orders: vec![r],
        samples: vec![n],
        solvers: vec![s],
        theoretical: vec![2],
    };
    let records: Vec<TrialRecord> = run_trials(cfg, &setup, plan)?
        .into_iter()
        .map(|o| o.record)
        .collect();
    let num = normalized_mse(
        &records,
        Cell {
            solver: s,
            r,
            n: Some(n),
        },
    )?;
    let den = normalized_mse(
        &records,
        Cell {
            solver: s,
            r: 2,
            n: None,
        },
    )?;
    Ok(setup
        .paths
        .labels()
        .into_iter()
        .zip(num.per_component.iter().zip(&den.per_component))
        .map(|(label, (&a, &b))| RatioRow {
            label,
            numerator: a,
            denominator: b,
            ratio: (b >= cfg.outlier_threshold && b > 0.0).then(|| a / b),
        })
        .collect())
}

pub fn ratio_table(rows: &[RatioRow]) -> MetricTable {
    let columns = ["numerator", "denominator", "ratio", "outlier"]
        .map(str::to_owned)
        .to_vec();
    let mut t = MetricTable::new("path", columns);
    for row in rows {
        let outlier = if row.ratio.is_none() { 1.0 } else { 0.0 };
        t.push_row(
            row.label.clone(),
            vec![
                Some(row.numerator),
                Some(row.denominator),
                row.ratio,
                Some(outlier),
            ],
        );
    }
    t
}

pub fn run_ratio_figure(cfg: &ExperimentConfig) -> Result<MetricTable> {
    let table = ratio_table(&compute_ratio_figure(cfg)?);
    fs::create_dir_all(&cfg.output)?;
    write_table_file(&cfg.output.join("ratio.csv"), &table)?;
    Ok(table)
}

/// `ξ̄²(2, N) / ξ̄²(2, ∞)` and `ξ̄²(3, N) / ξ̄²(2, ∞)` per solver; rows
/// name the numerator.
pub fn compute_comparison(cfg: &ExperimentConfig) -> Result<MetricTable> {
    let n = cfg.compare_samples;
    let setup = Setup::from_config(cfg, [2, 3])?;
    let plan = Plan {
        orders: vec![2, 3],
        samples: vec![n],
        solvers: cfg.solvers.clone(),
        theoretical: vec![2],
    }
    .normalized();
    let records: Vec<TrialRecord> = run_trials(cfg, &setup, plan.clone())?
        .into_iter()
        .map(|o| o.record)
        .collect();
    let mut table = MetricTable::new(
        "numerator",
        plan.solvers.iter().map(|s| s.tag().to_owned()).collect(),
    );
    for r in [2, 3] {
        let mut row = Vec::new();
        for &s in &plan.solvers {
            let base = mean_xi(
                &records,
                Cell {
                    solver: s,
                    r: 2,
                    n: None,
                },
            )?;
            let cell = mean_xi(
                &records,
                Cell {
                    solver: s,
                    r,
                    n: Some(n),
                },
            )?;
            row.push(Some(cell / base));
        }
        table.push_row(format!("r={r} N={n}"), row);
    }
    Ok(table)
}

pub fn run_comparison(cfg: &ExperimentConfig) -> Result<MetricTable> {
    let table = compute_comparison(cfg)?;
    fs::create_dir_all(&cfg.output)?;
    write_table_file(&cfg.output.join("comparison.csv"), &table)?;
    Ok(table)
}

/// Counting and rank diagnostics of the reduced systems for `r = 1..=max_r`.
pub fn rank_table(topology: Topology, k: usize, max_r: usize) -> Result<MetricTable> {
    if !(1..=4).contains(&max_r) {
        return Err(anyhow!("r must lie in 1..=4, got {max_r}"));
    }
    let setup = Setup::new(topology, k, 1..=max_r)?;
    let columns = [
        "links",
        "paths",
        "n_bar",
        "n_max",
        "surviving",
        "rank",
        "eig_min",
        "eig_max",
    ];
    let mut t = MetricTable::new("r", columns.map(str::to_owned).to_vec());
    for r in 1..=max_r {
        let d = setup.diagnostics(r)?;
        t.push_row(
            r.to_string(),
            [
                setup.routing.links() as f64,
                setup.routing.paths() as f64,
                d.n_bar as f64,
                d.n_max as f64,
                d.surviving as f64,
                d.rank as f64,
                d.eig_min,
                d.eig_max,
            ]
            .map(Some)
            .to_vec(),
        );
    }
    Ok(t)
}
