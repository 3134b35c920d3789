//! `jetflag`: JSON-speaking command-line surface over the library.
//!
//! Structured inputs accept inline JSON (payload starting with `{` or
//! `[`), `-` for standard input, or a file path. Results go to standard
//! output as JSON; failures print `{"error": code, "message": text}` on
//! standard error and exit with status 1 (domain errors) or 2 (usage
//! errors, handled by the argument parser).

mod payload;
mod run;
mod svg;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "jetflag", version, about = "Jet, flag-jet and Cauchy-data calculus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multi-index combinatorics.
    Mi {
        #[command(subcommand)]
        cmd: MiCmd,
    },
    /// Symbolic expression operations.
    Expr {
        #[command(subcommand)]
        cmd: ExprCmd,
    },
    /// Jet charts and prolongation.
    Jet {
        #[command(subcommand)]
        cmd: JetCmd,
    },
    /// Involutive-plane equations of a distribution.
    Inv {
        #[command(subcommand)]
        cmd: InvCmd,
    },
    /// Flag-jet charts, transforms and projections.
    Flag {
        #[command(subcommand)]
        cmd: FlagCmd,
    },
    /// Cauchy-data coordinates, datum construction and projections.
    Cauchy {
        #[command(subcommand)]
        cmd: CauchyCmd,
    },
    /// Variational operations: Euler-Lagrange, transversality, shortest
    /// segments.
    Var {
        #[command(subcommand)]
        cmd: VarCmd,
    },
    /// Batch verification commands.
    Check {
        #[command(subcommand)]
        cmd: CheckCmd,
    },
}

#[derive(Subcommand)]
enum MiCmd {
    /// Enumerate the block partitions of a multi-index with
    /// multiplicities.
    Partitions {
        /// Dot-separated exponents, e.g. 2.0.
        #[arg(long)]
        index: String,
    },
}

#[derive(Subcommand)]
enum ExprCmd {
    /// Partial derivative of an expression.
    Diff {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        var: String,
    },
    /// Evaluate an expression in an environment.
    Eval {
        #[arg(long)]
        expr: String,
        /// JSON object binding variables to numbers (inline, path or -).
        #[arg(long)]
        env: String,
    },
}

#[derive(Subcommand)]
enum JetCmd {
    /// Prolong a graph-form section to a jet point.
    Prolong {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// JSON array of section components in x1..xn.
        #[arg(long)]
        section: String,
        /// Comma-separated base point, e.g. "0.5,-0.25".
        #[arg(long)]
        at: String,
    },
}

#[derive(Args)]
struct DistArgs {
    /// Distribution spec JSON (inline, path or -).
    #[arg(long)]
    dist: String,
    /// Plane dimension r.
    #[arg(long)]
    r: usize,
}

#[derive(Subcommand)]
enum InvCmd {
    /// Emit the involutivity equations f_i, f_ij.
    Eqs {
        #[command(flatten)]
        dist: DistArgs,
    },
    /// Evaluate the equations at a J^1 point.
    Check {
        #[command(flatten)]
        dist: DistArgs,
        /// Flat JSON object of J^1(E, r) coordinates.
        #[arg(long)]
        point: String,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Numeric differential-consequence check on seeded prolonged samples.
    Consequences {
        #[command(flatten)]
        dist: DistArgs,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct FlagChartArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
}

#[derive(Subcommand)]
enum FlagCmd {
    /// Convert between the two flag chart systems.
    Convert {
        #[command(flatten)]
        chart: FlagChartArgs,
        /// Target chart: ii (chart I -> II) or i (chart II -> I).
        #[arg(long, value_parser = ["i", "ii"])]
        to: String,
        /// Flat JSON object of chart coordinates.
        #[arg(long)]
        point: String,
    },
    /// Apply a structural projection to a point.
    Project {
        #[command(flatten)]
        chart: FlagChartArgs,
        /// flag: order k -> k-1; p: onto J^k; n: onto involutive small
        /// planes; q: from an involutive-plane point of order k onto the
        /// flag chart.
        #[arg(long, value_parser = ["flag", "p", "n", "q"])]
        map: String,
        #[arg(long)]
        point: String,
    },
    /// Dimension bookkeeping of the flag chart.
    Dims {
        #[command(flatten)]
        chart: FlagChartArgs,
    },
}

#[derive(Args)]
struct CauchyChartArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Truncation order.
    #[arg(long = "K", default_value_t = jetflag::cauchy::DEFAULT_TRUNCATION)]
    cap: usize,
}

#[derive(Subcommand)]
enum CauchyCmd {
    /// Inner derivative (u_{A,l})_B as a standard-chart expression.
    Expand {
        #[command(flatten)]
        chart: CauchyChartArgs,
        #[arg(long, default_value_t = 1)]
        alpha: usize,
        /// Spatial index A, dot-separated.
        #[arg(long, default_value = "")]
        a: String,
        #[arg(long)]
        l: u32,
        /// Derivative index B, dot-separated.
        #[arg(long, default_value = "")]
        b: String,
    },
    /// Jet coordinate u_{A,l} as an alternative-chart expression.
    Recover {
        #[command(flatten)]
        chart: CauchyChartArgs,
        #[arg(long, default_value_t = 1)]
        alpha: usize,
        #[arg(long, default_value = "")]
        a: String,
        #[arg(long)]
        l: u32,
    },
    /// Build the truncated datum of a profile spec at a base point.
    Build {
        #[command(flatten)]
        chart: CauchyChartArgs,
        /// Profile JSON {"f": expr, "g": [expr..], "h": [[expr..]..]}.
        #[arg(long)]
        profiles: String,
        /// Comma-separated spatial base point.
        #[arg(long)]
        at: String,
    },
    /// Apply the p or n projection to a standard-chart point.
    Project {
        #[command(flatten)]
        chart: CauchyChartArgs,
        #[arg(long, value_parser = ["p", "n"])]
        map: String,
        #[arg(long)]
        point: String,
    },
    /// Transversality check of two profile specs sharing (f, g).
    Transversal {
        #[command(flatten)]
        chart: CauchyChartArgs,
        #[arg(long)]
        profiles: String,
        #[arg(long)]
        profiles2: String,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum VarCmd {
    /// Euler-Lagrange expression of a first-order density f(x, y, p).
    El {
        #[arg(long)]
        f: String,
    },
    /// Closed-form transversality expression in (x, y, p, xG, yG).
    Tc {
        #[arg(long)]
        f: String,
    },
    /// Cylinder-pullback boundary expression in (xi, eta, etap).
    TcCylinder {
        #[arg(long)]
        f: String,
        /// Cylinder map JSON {"x": expr, "y": expr} in (xi, eta).
        #[arg(long)]
        phi: String,
    },
    /// Shortest segment joining two curves.
    Columbus {
        /// Curve JSON {"x": expr, "y": expr, "domain": [a, b]}.
        #[arg(long)]
        g1: String,
        #[arg(long)]
        g2: String,
        /// Initial parameters "s1,s2".
        #[arg(long)]
        init: String,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 25)]
        max_iter: usize,
        /// Optional SVG sketch of the curves and the solution segment.
        #[arg(long)]
        svg: Option<std::path::PathBuf>,
    },
}

#[derive(Subcommand)]
enum CheckCmd {
    /// Commutativity of the projection diagram on seeded random points.
    Diagram {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reserved; checks currently run serially.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Symbolic round trip between the Cauchy chart systems.
    Roundtrip {
        #[arg(long)]
        n: usize,
        /// Truncation order.
        #[arg(long = "K", default_value_t = jetflag::cauchy::DEFAULT_TRUNCATION)]
        cap: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Mi { cmd } => match cmd {
            MiCmd::Partitions { index } => run::mi_partitions(&index),
        },
        Command::Expr { cmd } => match cmd {
            ExprCmd::Diff { expr, var } => run::expr_diff(&expr, &var),
            ExprCmd::Eval { expr, env } => run::expr_eval(&expr, &env),
        },
        Command::Jet { cmd } => match cmd {
            JetCmd::Prolong { n, k, section, at } => run::jet_prolong(n, k, &section, &at),
        },
        Command::Inv { cmd } => match cmd {
            InvCmd::Eqs { dist } => run::inv_eqs(&dist.dist, dist.r),
            InvCmd::Check { dist, point, tol } => {
                run::inv_check(&dist.dist, dist.r, &point, tol)
            }
            InvCmd::Consequences {
                dist,
                samples,
                seed,
            } => run::inv_consequences(&dist.dist, dist.r, samples, seed),
        },
        Command::Flag { cmd } => match cmd {
            FlagCmd::Convert { chart, to, point } => {
                run::flag_convert(chart.n, chart.m, chart.k, &to, &point)
            }
            FlagCmd::Project { chart, map, point } => {
                run::flag_project(chart.n, chart.m, chart.k, &map, &point)
            }
            FlagCmd::Dims { chart } => run::flag_dims(chart.n, chart.m, chart.k),
        },
        Command::Cauchy { cmd } => match cmd {
            CauchyCmd::Expand {
                chart,
                alpha,
                a,
                l,
                b,
            } => run::cauchy_expand(chart.n, chart.m, chart.cap, alpha, &a, l, &b),
            CauchyCmd::Recover { chart, alpha, a, l } => {
                run::cauchy_recover(chart.n, chart.m, chart.cap, alpha, &a, l)
            }
            CauchyCmd::Build {
                chart,
                profiles,
                at,
            } => run::cauchy_build(chart.n, chart.m, chart.cap, &profiles, &at),
            CauchyCmd::Project { chart, map, point } => {
                run::cauchy_project(chart.n, chart.m, chart.cap, &map, &point)
            }
            CauchyCmd::Transversal {
                chart,
                profiles,
                profiles2,
                samples,
                seed,
            } => run::cauchy_transversal(
                chart.n, chart.m, chart.cap, &profiles, &profiles2, samples, seed,
            ),
        },
        Command::Var { cmd } => match cmd {
            VarCmd::El { f } => run::var_el(&f),
            VarCmd::Tc { f } => run::var_tc(&f),
            VarCmd::TcCylinder { f, phi } => run::var_tc_cylinder(&f, &phi),
            VarCmd::Columbus {
                g1,
                g2,
                init,
                tol,
                max_iter,
                svg,
            } => run::var_columbus(&g1, &g2, &init, tol, max_iter, svg.as_deref()),
        },
        Command::Check { cmd } => match cmd {
            CheckCmd::Diagram {
                n,
                m,
                k,
                samples,
                seed,
                jobs: _,
            } => run::check_diagram(n, m, k, samples, seed),
            CheckCmd::Roundtrip { n, cap } => run::check_roundtrip(n, cap),
        },
    };
    match result {
        Ok(json) => {
            use std::io::Write;
            // A closed pipe downstream is not an error worth panicking on.
            let _ = writeln!(std::io::stdout(), "{json}");
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(1);
        }
    }
}
