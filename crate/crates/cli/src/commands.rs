//! One function per subcommand, each producing a [`Table`].

use std::path::PathBuf;

use clap::{Args, ValueEnum};

use entperc::distillation::{dss_simulate, recycling_scp_three, scheme_scp, Scheme};
use entperc::percolation::{
    estimate_threshold, generate_lattice, percolation_curve, sample_bonds, Boundary, Geometry, LatticeSpec,
};
use entperc::rng::stream_rng;
use entperc::routing::{burning_route, controller_path, ghz_protocol, SingletGraph, Trace};
use entperc::strategies::{
    diamond_cep, fcc_embedding_check, hybrid_hierarchy_exact, hybrid_hierarchy_sim, locate_intervals,
    pms_strategy_report, square_protocol_prob, tree_cep, BondPair, HierarchyKind, HierarchySpec,
};
use entperc::verify::{run_suite, Suite};

use crate::output::{columns_help, Cell, Column, Table};
use crate::Failure;

macro_rules! cols {
    ($($name:literal => $doc:literal),* $(,)?) => {
        &[$(Column { name: $name, doc: $doc }),*]
    };
}

pub const VERIFY_COLUMNS: &[Column] = cols![
    "suite" => "oracle suite name",
    "draws" => "random parameter tuples drawn",
    "max_prob_error" => "largest |closed form - oracle| over outcome probabilities",
    "max_state_error" => "largest |closed form - oracle| over post-states",
    "tolerance" => "acceptance tolerance",
    "passed" => "both errors below tolerance",
];

pub const DISTILL_COLUMNS: &[Column] = cols![
    "scheme" => "distillation scheme",
    "n" => "number of copies",
    "alpha" => "Schmidt weight of each copy",
    "lambda" => "pure fraction of each copy",
    "scp" => "singlet conversion probability (estimate for sampled schemes)",
    "stderr" => "standard error; 0 for analytic schemes",
];

pub const PERCOLATE_COLUMNS: &[Column] = cols![
    "geometry" => "lattice geometry",
    "L" => "linear size",
    "p" => "bond-open probability",
    "spanning_freq" => "fraction of trials with a spanning cluster",
    "theta_hat" => "mean fraction of nodes in the largest cluster",
    "stderr" => "standard error of spanning_freq",
];

pub const THRESHOLD_COLUMNS: &[Column] = cols![
    "geometry" => "lattice geometry",
    "L" => "linear size",
    "p_hat" => "estimated threshold (median critical p over trials)",
    "ci_low" => "lower end of the 95% interval",
    "ci_high" => "upper end of the 95% interval",
    "trials" => "independent lattices sampled",
    "converged" => "interval narrower than the requested resolution",
];

pub const ROUTE_COLUMNS: &[Column] = cols![
    "protocol" => "routing protocol",
    "success" => "a singlet was established between a and b",
    "rounds" => "synchronous rounds used (0 for the central controller)",
    "messages" => "classical messages sent",
    "path_length" => "edges on the a-b path (0 on failure)",
    "path" => "nodes on the a-b path joined by '-'",
];

pub const STRATEGY_COLUMNS: &[Column] = cols![
    "alpha" => "Schmidt weight of the first edge",
    "beta" => "Schmidt weight of the second edge",
    "lambda" => "pure fraction of the first edge",
    "nu" => "pure fraction of the second edge",
    "p_cep" => "classical percolation: convert each bond, then swap",
    "p_d" => "direct swapping over non-identical pairs",
    "p_h" => "hybrid swapping",
    "p_d_star" => "direct swapping over identical pairs",
];

pub const SQUARE_COLUMNS: &[Column] = cols![
    "alpha" => "Schmidt weight of the first edge",
    "p_sq" => "hybrid square protocol success probability",
    "p_cep_tilde" => "classical success on the same square",
    "p_c" => "PCM success probability per bond",
    "alpha_hat" => "Schmidt weight after PCM",
    "alpha_tilde" => "Schmidt weight after XZ swapping two PCM outputs",
];

pub const HIERARCHY_COLUMNS: &[Column] = cols![
    "kind" => "hierarchy kind",
    "iteration" => "hierarchy iteration",
    "alpha" => "Schmidt weight of the first edge",
    "p_cep" => "classical recursion value",
    "p_hybrid_hat" => "hybrid success probability (exact or Monte Carlo)",
    "stderr" => "standard error; 0 when exact",
];

fn check(cond: bool, msg: impl Into<String>) -> Result<(), Failure> {
    if cond {
        Ok(())
    } else {
        Err(Failure::Invalid(msg.into()))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    All,
    Pcm,
    Swap,
    SpecialSwap,
    PureSwap,
    XzSwap,
}

#[derive(Debug, Args)]
#[command(after_help = columns_help(VERIFY_COLUMNS))]
pub struct VerifyArgs {
    /// Oracle suite to run.
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteArg,
    /// Random parameter tuples per suite.
    #[arg(long, default_value_t = 1000)]
    pub draws: u64,
    /// Largest accepted discrepancy.
    #[arg(long, default_value_t = entperc::verify::ORACLE_TOL)]
    pub tolerance: f64,
}

/// Returns the table and whether every suite passed.
pub fn verify(args: &VerifyArgs, seed: u64) -> Result<(Table, bool), Failure> {
    let suites: Vec<Suite> = match args.suite {
        SuiteArg::All => Suite::ALL.to_vec(),
        SuiteArg::Pcm => vec![Suite::Pcm],
        SuiteArg::Swap => vec![Suite::Swap],
        SuiteArg::SpecialSwap => vec![Suite::SpecialSwap],
        SuiteArg::PureSwap => vec![Suite::PureSwap],
        SuiteArg::XzSwap => vec![Suite::XzSwap],
    };
    let mut t = Table::new(VERIFY_COLUMNS);
    let mut ok = true;
    for s in suites {
        let mut r = run_suite(s, args.draws, seed)?;
        r.tolerance = args.tolerance;
        ok &= r.passed();
        t.push(vec![
            s.name().into(),
            r.draws.into(),
            r.max_prob_error.into(),
            r.max_state_error.into(),
            r.tolerance.into(),
            r.passed().into(),
        ]);
    }
    Ok((t, ok))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DistillScheme {
    /// Pairwise recycling, analytic.
    Recycling,
    /// Distillable-subspace scheme, analytic.
    Dss,
    /// Distillable-subspace POVM replayed in the oracle (n <= 4).
    DssPovm,
    /// Recycling with groups of three, Monte Carlo.
    RecyclingThree,
}

#[derive(Debug, Args)]
#[command(after_help = columns_help(DISTILL_COLUMNS))]
pub struct DistillArgs {
    #[arg(long, value_enum)]
    pub scheme: DistillScheme,
    /// Copy counts, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Schmidt weights, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub alpha: Vec<f64>,
    /// Pure fractions, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<f64>,
    /// Trials or shots for the sampled schemes.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
}

pub fn distill(args: &DistillArgs, seed: u64) -> Result<Table, Failure> {
    let mut t = Table::new(DISTILL_COLUMNS);
    let name = args.scheme.to_possible_value().expect("no skipped variants").get_name().to_string();
    for &n in &args.n {
        for &alpha in &args.alpha {
            for &lambda in &args.lambda {
                let (scp, stderr) = match args.scheme {
                    DistillScheme::Recycling => (scheme_scp(Scheme::Recycling, n, alpha, lambda)?, 0.0),
                    DistillScheme::Dss => (scheme_scp(Scheme::Dss, n, alpha, lambda)?, 0.0),
                    DistillScheme::DssPovm => {
                        let s = dss_simulate(n, alpha, lambda, seed, args.trials)?;
                        (s.frequency, s.stderr)
                    }
                    DistillScheme::RecyclingThree => {
                        let e = recycling_scp_three(n, alpha, lambda, seed, args.trials)?;
                        (e.estimate, e.stderr)
                    }
                };
                t.push(vec![
                    name.clone().into(),
                    n.into(),
                    alpha.into(),
                    lambda.into(),
                    scp.into(),
                    stderr.into(),
                ]);
            }
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BoundaryArg {
    Open,
    PeriodicTransverse,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Open => Boundary::Open,
            BoundaryArg::PeriodicTransverse => Boundary::PeriodicTransverse,
        }
    }
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    /// square, triangular, honeycomb, simple-cubic or fcc.
    #[arg(long)]
    pub geometry: Geometry,
    /// Linear size L.
    #[arg(long, short = 'L')]
    pub size: usize,
    #[arg(long, value_enum, default_value = "open")]
    pub boundary: BoundaryArg,
}

impl LatticeArgs {
    fn spec(&self) -> Result<LatticeSpec, Failure> {
        Ok(LatticeSpec::new(self.geometry, self.size, self.boundary.into())?)
    }
}

#[derive(Debug, Args)]
#[command(after_help = columns_help(PERCOLATE_COLUMNS))]
pub struct PercolateArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    /// Single bond-open probability.
    #[arg(long, conflicts_with = "p_grid")]
    pub p: Option<f64>,
    /// Bond-open probabilities, comma separated; default 0, 0.01, ..., 1.
    #[arg(long, value_delimiter = ',')]
    pub p_grid: Vec<f64>,
    #[arg(long, default_value_t = 400)]
    pub trials: u64,
}

pub fn percolate(args: &PercolateArgs, seed: u64) -> Result<Table, Failure> {
    let spec = args.lattice.spec()?;
    let grid: Vec<f64> = match (args.p, args.p_grid.is_empty()) {
        (Some(p), _) => vec![p],
        (None, false) => args.p_grid.clone(),
        (None, true) => (0..=100).map(|i| i as f64 / 100.0).collect(),
    };
    for &p in &grid {
        check((0.0..=1.0).contains(&p), format!("p = {p} violates 0 <= p <= 1"))?;
    }
    check(args.trials > 0, "trials must be at least 1")?;
    let mut t = Table::new(PERCOLATE_COLUMNS);
    for pt in percolation_curve(&spec, &grid, args.trials, seed)? {
        t.push(vec![
            spec.geometry.name().into(),
            spec.linear_size.into(),
            pt.p.into(),
            pt.spanning_freq.into(),
            pt.theta_hat.into(),
            pt.stderr.into(),
        ]);
    }
    Ok(t)
}

#[derive(Debug, Args)]
#[command(after_help = columns_help(THRESHOLD_COLUMNS))]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long, default_value_t = 400)]
    pub trials: u64,
    /// Target width of the confidence interval.
    #[arg(long, default_value_t = 0.001)]
    pub resolution: f64,
}

pub fn threshold(args: &ThresholdArgs, seed: u64) -> Result<Table, Failure> {
    let spec = args.lattice.spec()?;
    let e = estimate_threshold(&spec, args.trials, args.resolution, seed)?;
    let mut t = Table::new(THRESHOLD_COLUMNS);
    t.push(vec![
        e.geometry.name().into(),
        e.linear_size.into(),
        e.p_hat.into(),
        e.ci_low.into(),
        e.ci_high.into(),
        e.trials.into(),
        e.converged.into(),
    ]);
    t.note("reference_threshold", spec.geometry.threshold());
    Ok(t)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RouteProtocol {
    Controller,
    Burning,
    Ghz,
}

#[derive(Debug, Args)]
#[command(after_help = columns_help(ROUTE_COLUMNS))]
pub struct RouteArgs {
    #[arg(long, value_enum)]
    pub protocol: RouteProtocol,
    /// Edge-list file: one `u v` pair per line, `#` comments.
    #[arg(long, conflicts_with = "geometry")]
    pub edges: Option<PathBuf>,
    /// Sample the singlet graph from a lattice instead.
    #[arg(long, requires_all = ["size", "p"])]
    pub geometry: Option<Geometry>,
    #[arg(long, short = 'L')]
    pub size: Option<usize>,
    /// Bond-open probability for the sampled lattice.
    #[arg(long)]
    pub p: Option<f64>,
    /// Source node; default 0.
    #[arg(long, default_value_t = 0)]
    pub a: usize,
    /// Target node; default the last node.
    #[arg(long)]
    pub b: Option<usize>,
    /// Nodes kept in the GHZ state besides a and b, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub keep: Vec<usize>,
    /// Fold distillation requests into the burn messages.
    #[arg(long)]
    pub fused: bool,
    /// Write the operation trace as JSON for replay.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
}

fn route_graph(args: &RouteArgs, seed: u64) -> Result<SingletGraph, Failure> {
    if let Some(path) = &args.edges {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Invalid(format!("cannot read edge list {}: {e}", path.display())))?;
        let n = text
            .lines()
            .flat_map(|l| l.split('#').next().unwrap_or("").split_whitespace())
            .filter_map(|f| f.parse::<usize>().ok())
            .max()
            .map_or(0, |m| m + 1);
        let b = args.b.unwrap_or(n.saturating_sub(1));
        return Ok(SingletGraph::parse_edge_list(&text, args.a, b)?);
    }
    let (Some(geometry), Some(size), Some(p)) = (args.geometry, args.size, args.p) else {
        return Err(Failure::Invalid("route needs --edges or --geometry/--size/--p".into()));
    };
    check((0.0..=1.0).contains(&p), format!("p = {p} violates 0 <= p <= 1"))?;
    let lattice = generate_lattice(&LatticeSpec::open(geometry, size)?)?;
    let config = sample_bonds(&lattice, p, &mut stream_rng(seed, "cli.route", 0));
    let b = args.b.unwrap_or(lattice.num_nodes - 1);
    Ok(SingletGraph::from_bond_config(&lattice, &config, args.a, b)?)
}

fn path_cells(path: Option<&[usize]>) -> (Cell, Cell) {
    match path {
        Some(p) => (
            (p.len() - 1).into(),
            p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("-").into(),
        ),
        None => (0usize.into(), "".into()),
    }
}

pub fn route(args: &RouteArgs, seed: u64) -> Result<Table, Failure> {
    let graph = route_graph(args, seed)?;
    let mut t = Table::new(ROUTE_COLUMNS);
    let mut trace: Option<Trace> = None;
    match args.protocol {
        RouteProtocol::Controller => {
            let path = controller_path(&graph);
            let (len, nodes) = path_cells(path.as_deref());
            t.push(vec!["controller".into(), path.is_some().into(), 0usize.into(), 0usize.into(), len, nodes]);
        }
        RouteProtocol::Burning => {
            let r = burning_route(&graph, args.fused, seed);
            let (len, nodes) = path_cells(r.path.as_deref());
            let name = if args.fused { "burning-fused" } else { "burning" };
            t.push(vec![
                name.into(),
                r.path.is_some().into(),
                r.rounds_used.into(),
                r.messages.into(),
                len,
                nodes,
            ]);
            t.note("distillation_messages", r.distillation_messages);
            trace = r.trace;
        }
        RouteProtocol::Ghz => {
            let mut keep = vec![graph.a, graph.b];
            keep.extend(&args.keep);
            let r = ghz_protocol(&graph, &keep, seed)?;
            // the burn tree path from b back to a
            let path = r.success.then(|| {
                let mut p = vec![graph.b];
                while let Some(&up) = r.record.parent_of.get(p.last().expect("nonempty")) {
                    p.push(up);
                }
                p.reverse();
                p
            });
            let (len, nodes) = path_cells(path.as_deref());
            t.push(vec![
                "ghz".into(),
                r.success.into(),
                r.rounds_used.into(),
                r.messages.len().into(),
                len,
                nodes,
            ]);
            t.note("x_measurements", r.x_measurements);
            t.note("phase_correction", r.phase_correction);
            trace = Some(r.trace);
        }
    }
    t.note("nodes", graph.num_nodes());
    t.note("singlets", graph.edges().len());
    if let Some(path) = &args.trace_out {
        let trace = trace.ok_or_else(|| Failure::Invalid("the controller protocol records no trace".into()))?;
        let json = serde_json::to_string_pretty(&trace).expect("trace serializes");
        std::fs::write(path, json).map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(t)
}

#[derive(Debug, Args)]
pub struct BondArgs {
    /// Start of the alpha grid.
    #[arg(long, default_value_t = 0.5)]
    pub alpha_min: f64,
    /// End of the alpha grid.
    #[arg(long, default_value_t = 1.0)]
    pub alpha_max: f64,
    /// Step of the alpha grid.
    #[arg(long, default_value_t = 0.005)]
    pub alpha_step: f64,
    /// Schmidt weight of the second edge.
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Pure fraction of the first edge.
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Pure fraction of the second edge.
    #[arg(long, default_value_t = 1.0)]
    pub nu: f64,
}

impl BondArgs {
    fn grid(&self) -> Result<Vec<f64>, Failure> {
        check(
            0.0 <= self.alpha_min && self.alpha_min <= self.alpha_max && self.alpha_max <= 1.0,
            "alpha grid must satisfy 0 <= alpha-min <= alpha-max <= 1",
        )?;
        check(self.alpha_step > 0.0, "alpha-step must be positive")?;
        let n = ((self.alpha_max - self.alpha_min) / self.alpha_step + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|i| {
                let a = self.alpha_min + i as f64 * self.alpha_step;
                // drop accumulated float noise so grid values print cleanly
                ((a * 1e12).round() / 1e12).min(self.alpha_max)
            })
            .collect())
    }

    fn bond(&self, alpha: f64) -> Result<BondPair, Failure> {
        Ok(BondPair::new(alpha, self.lambda, self.beta, self.nu)?)
    }

    fn windows(&self, pred: impl Fn(f64) -> bool) -> String {
        let w = locate_intervals(pred, self.alpha_min, self.alpha_max, self.alpha_step);
        if w.is_empty() {
            return "none".into();
        }
        w.iter().map(|(lo, hi)| format!("[{lo:.6},{hi:.6}]")).collect::<Vec<_>>().join(";")
    }
}

#[derive(Debug, Args)]
#[command(after_help = columns_help(STRATEGY_COLUMNS))]
pub struct StrategyArgs {
    #[command(flatten)]
    pub bond: BondArgs,
}

pub fn strategy(args: &StrategyArgs) -> Result<Table, Failure> {
    let b = &args.bond;
    let mut t = Table::new(STRATEGY_COLUMNS);
    for alpha in b.grid()? {
        let bp = b.bond(alpha)?;
        let r = pms_strategy_report(&bp, &bp)?;
        t.push(vec![
            alpha.into(),
            b.beta.into(),
            b.lambda.into(),
            b.nu.into(),
            r.p_cep.into(),
            r.p_d.into(),
            r.p_h.into(),
            r.p_d_star.into(),
        ]);
    }
    t.note("fcc_threshold", Geometry::Fcc.threshold());
    t.note(
        "fcc_hybrid_only_window",
        b.windows(|a| {
            b.bond(a)
                .map(|bp| {
                    let f = fcc_embedding_check(&bp);
                    f.feasible_hybrid && !f.feasible_cep
                })
                .unwrap_or(false)
        }),
    );
    Ok(t)
}

#[derive(Debug, Args)]
#[command(after_help = columns_help(SQUARE_COLUMNS))]
pub struct SquareArgs {
    #[command(flatten)]
    pub bond: BondArgs,
}

pub fn square(args: &SquareArgs) -> Result<Table, Failure> {
    let b = &args.bond;
    let mut t = Table::new(SQUARE_COLUMNS);
    for alpha in b.grid()? {
        let s = square_protocol_prob(&b.bond(alpha)?);
        t.push(vec![
            alpha.into(),
            s.p_sq.into(),
            s.p_cep_tilde.into(),
            s.p_c.into(),
            s.alpha_hat.into(),
            s.alpha_tilde.into(),
        ]);
    }
    let threshold = Geometry::Triangular.threshold();
    t.note("triangular_threshold", threshold);
    t.note(
        "hybrid_only_window",
        b.windows(|a| {
            b.bond(a)
                .map(|bp| {
                    let s = square_protocol_prob(&bp);
                    s.p_sq > threshold && threshold >= s.p_cep_tilde
                })
                .unwrap_or(false)
        }),
    );
    Ok(t)
}

#[derive(Debug, Args)]
#[command(after_help = columns_help(HIERARCHY_COLUMNS))]
pub struct HierarchyArgs {
    /// diamond or tree.
    #[arg(long)]
    pub kind: HierarchyKind,
    #[arg(long)]
    pub iteration: usize,
    #[command(flatten)]
    pub bond: BondArgs,
    /// Monte Carlo trials per grid point.
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Enumerate PCM outcomes instead of sampling (at most 16 bonds).
    #[arg(long)]
    pub exact: bool,
}

pub fn hierarchy(args: &HierarchyArgs, seed: u64) -> Result<Table, Failure> {
    let mut t = Table::new(HIERARCHY_COLUMNS);
    let kind_name = match args.kind {
        HierarchyKind::Diamond => "diamond",
        HierarchyKind::Tree => "tree",
    };
    for alpha in args.bond.grid()? {
        let spec = HierarchySpec {
            kind: args.kind,
            iteration: args.iteration,
            bond: args.bond.bond(alpha)?,
        };
        let p_cep = match args.kind {
            HierarchyKind::Diamond => diamond_cep(&spec)?,
            HierarchyKind::Tree => tree_cep(&spec)?,
        };
        let (p_h, stderr) = if args.exact {
            (hybrid_hierarchy_exact(&spec)?, 0.0)
        } else {
            let e = hybrid_hierarchy_sim(&spec, seed, args.trials)?;
            (e.p_hat, e.stderr)
        };
        t.push(vec![
            kind_name.into(),
            args.iteration.into(),
            alpha.into(),
            p_cep.into(),
            p_h.into(),
            stderr.into(),
        ]);
    }
    Ok(t)
}
