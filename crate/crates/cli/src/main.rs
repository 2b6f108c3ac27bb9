use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use parlab::report::RunReport;
use parlab::scenario::{
    exit_code_for, run_scenario, run_suite, Params, Scenario, ScenarioId, SuiteConfig,
};
use parlab_core::bits::{
    cut_bits, cut_bits_general, parse_point, point_to_string, BitArray, NumberSet, SamplingSet,
    TruthTable,
};
use parlab_core::circuit::{
    build_adder, build_equality, build_ge, build_phi_circuit, build_subpartition_circuit,
    build_subtractor, build_zero_test, Circuit, CircuitBundle,
};
use parlab_core::fepss::{
    bound_audit, fe_solve, mpss_search, pss_check, pss_from_circuit, Caps, FeStatus, PssVerdict,
};
use parlab_core::par::with_workers;
use parlab_core::paramfn::{
    phi_partition, switchable_gate, trial, GateBase, ParamBoolFn, ParameterList,
};
use parlab_core::partition::{
    enumerate_pv, gpar, par_bits, signed_sum, unique_omega, verify_uniqueness, witness_chain,
    PartitionVector, PartitionVectorSpace,
};

/// Partition functions, small circuits and exact fitting search.
#[derive(Parser)]
#[command(name = "parlab", version)]
struct Cli {
    /// Worker threads for data-parallel sweeps (0 or unset: all cores).
    #[arg(long, global = true, env = "PARLAB_WORKERS")]
    workers: Option<usize>,
    /// Directory for verification reports.
    #[arg(long, global = true, default_value = "reports")]
    out_dir: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Partition vectors.
    #[command(subcommand)]
    Pv(PvCmd),
    /// Fixed-width partition function.
    #[command(subcommand)]
    Par(ParCmd),
    /// Variable-length partition function.
    #[command(subcommand)]
    Gpar(GparCmd),
    /// Number sets split by exactly one vector.
    #[command(subcommand)]
    Unique(UniqueCmd),
    /// Prefix sub-partition chain.
    Chain {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: u32,
        /// Shuffle the vector order with this seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a trial of a parametric function over a parameter list.
    Trial(TrialArgs),
    #[command(subcommand)]
    Circuit(CircuitCmd),
    /// Fitting-extremum search.
    #[command(subcommand)]
    Fe(FeCmd),
    /// Proper sampling sets.
    #[command(subcommand)]
    Pss(PssCmd),
    /// Bound arithmetic.
    Audit {
        /// Partition vector length.
        #[arg(long)]
        n: Option<u32>,
        /// Input arity; defaults to n squared.
        #[arg(long)]
        arity: Option<u32>,
        #[arg(long, default_value_t = 0)]
        sample_size: u64,
        #[arg(long, default_value_t = 0)]
        d: u64,
    },
    /// Run verification scenarios and persist their reports.
    Verify(VerifyArgs),
    #[command(subcommand)]
    Report(ReportCmd),
}

#[derive(Subcommand)]
enum PvCmd {
    Enum {
        #[arg(long)]
        n: u32,
    },
}

#[derive(Subcommand)]
enum ParCmd {
    Eval {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        bits: String,
    },
}

#[derive(Subcommand)]
enum GparCmd {
    Eval {
        #[arg(long)]
        bits: String,
    },
}

#[derive(Subcommand)]
enum UniqueCmd {
    Build {
        #[arg(long)]
        pv: String,
    },
    Verify {
        /// Comma-separated numbers.
        #[arg(long, value_delimiter = ',')]
        omega: Vec<u64>,
        #[arg(long)]
        pv: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PhiKind {
    Partition,
    SwitchAnd,
    SwitchOr,
}

#[derive(Args)]
struct TrialArgs {
    #[arg(long, value_enum)]
    phi: PhiKind,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    /// `pv-all`, `file:<path>` or a comma-separated list of parameter strings.
    #[arg(long)]
    params: String,
    #[arg(long)]
    bits: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum CircuitKind {
    Adder,
    Subtractor,
    Ge,
    ZeroTest,
    Equality,
    Phi,
    Subpartition,
}

#[derive(Subcommand)]
enum CircuitCmd {
    Build {
        #[arg(long, value_enum)]
        kind: CircuitKind,
        #[arg(long)]
        k: u32,
        /// Number count for `phi` and `subpartition`.
        #[arg(long)]
        n: Option<u32>,
        /// Partition vector for `phi`.
        #[arg(long)]
        pv: Option<String>,
        /// Emit a single named output of a multi-output circuit.
        #[arg(long)]
        output: Option<String>,
    },
    Eval {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        bits: String,
    },
    Count {
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Args, Clone)]
struct CapArgs {
    #[arg(long)]
    gate_cap: Option<u32>,
    #[arg(long)]
    minimizer_cap: Option<usize>,
    #[arg(long)]
    node_budget: Option<u64>,
}

impl CapArgs {
    fn caps(&self) -> Caps {
        let d = Caps::default();
        Caps {
            gate_cap: self.gate_cap.unwrap_or(d.gate_cap),
            minimizer_cap: self.minimizer_cap.unwrap_or(d.minimizer_cap),
            node_budget: self.node_budget.unwrap_or(d.node_budget),
        }
    }
}

#[derive(Subcommand)]
enum FeCmd {
    Solve {
        #[arg(long)]
        samples: PathBuf,
        #[command(flatten)]
        caps: CapArgs,
    },
}

#[derive(Subcommand)]
enum PssCmd {
    Check {
        /// Array of point strings, or a sampling set whose points are used.
        #[arg(long)]
        samples: PathBuf,
        #[arg(long = "fn")]
        function: PathBuf,
        #[command(flatten)]
        caps: CapArgs,
    },
    Min {
        #[arg(long = "fn")]
        function: PathBuf,
        #[command(flatten)]
        caps: CapArgs,
    },
    FromCircuit {
        #[arg(long = "fn")]
        function: PathBuf,
        #[arg(long)]
        circuit: PathBuf,
        #[command(flatten)]
        caps: CapArgs,
    },
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, conflicts_with = "suite", required_unless_present = "suite")]
    scenario: Option<String>,
    #[arg(long)]
    suite: Option<PathBuf>,
    /// Print reports without writing them.
    #[arg(long)]
    no_persist: bool,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    n_min: Option<u32>,
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long)]
    k_max: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u32>,
    #[arg(long)]
    orders: Option<u32>,
    #[arg(long)]
    functions: Option<u32>,
    #[arg(long)]
    perturb: bool,
    #[command(flatten)]
    caps: CapArgs,
}

#[derive(Subcommand)]
enum ReportCmd {
    Show { file: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.workers {
        Some(w) if w > 0 => with_workers(w, || run(&cli)),
        _ => run(&cli),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn emit<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        // a closed pipe (`| head`) is not an error
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_pv(s: &str) -> Result<PartitionVector> {
    s.parse()
        .with_context(|| format!("bad partition vector {s:?}"))
}

fn parse_bits(s: &str) -> Result<BitArray> {
    s.parse().with_context(|| format!("bad bit string {s:?}"))
}

fn point(s: &str, arity: u32) -> Result<u64> {
    let (x, len) = parse_point(s)?;
    ensure!(len == arity, "point {s:?} has {len} bits, expected {arity}");
    Ok(x)
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.cmd {
        Cmd::Pv(PvCmd::Enum { n }) => {
            let space = enumerate_pv(*n)?;
            emit(&json!({
                "n": n,
                "count": space.count(),
                "fingerprint": space.fingerprint(),
                "vectors": space.vectors(),
            }))?;
        }
        Cmd::Par(ParCmd::Eval { k, n, bits }) => {
            let x = parse_bits(bits)?;
            let omega = cut_bits(&x, *k, *n)?;
            let value = par_bits(&x, *k, *n)?;
            emit(
                &json!({ "k": k, "n": n, "bits": x, "numbers": omega.values(), "value": value as u8 }),
            )?;
        }
        Cmd::Gpar(GparCmd::Eval { bits }) => {
            let x = parse_bits(bits)?;
            let cut = cut_bits_general(&x)?;
            let value = gpar(&x)?;
            emit(&json!({
                "length": x.len(),
                "k": cut.k,
                "n": cut.n,
                "numbers": cut.numbers.values(),
                "value": value as u8,
            }))?;
        }
        Cmd::Unique(UniqueCmd::Build { pv }) => {
            let p = parse_pv(pv)?;
            let omega = unique_omega(&p)?;
            emit(&json!({
                "pv": p,
                "omega": omega,
                "signed_sum": signed_sum(&p, &omega)?.to_string(),
                "unique": verify_uniqueness(&omega, &p)?,
            }))?;
        }
        Cmd::Unique(UniqueCmd::Verify { omega, pv }) => {
            let p = parse_pv(pv)?;
            let omega = NumberSet::from_values(omega.clone())?;
            let sum = signed_sum(&p, &omega)?;
            emit(&json!({
                "pv": p,
                "omega": omega,
                "signed_sum": sum.to_string(),
                "equal_split": sum == 0,
                "unique": verify_uniqueness(&omega, &p)?,
            }))?;
        }
        Cmd::Chain { k, n, seed } => {
            let mut space = enumerate_pv(*n)?;
            if let Some(seed) = seed {
                let mut v = space.vectors().to_vec();
                v.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
                space = PartitionVectorSpace::with_order(*n, v)?;
            }
            emit(&witness_chain(*k, *n, &space)?.report())?;
        }
        Cmd::Trial(args) => return run_trial(args),
        Cmd::Circuit(c) => run_circuit(c)?,
        Cmd::Fe(FeCmd::Solve { samples, caps }) => {
            let sv: SamplingSet = read_json(samples)?;
            let sol = fe_solve(&sv, &caps.caps())?;
            emit(&sol)?;
            return Ok(if sol.status == FeStatus::Solved { 0 } else { 2 });
        }
        Cmd::Pss(p) => return run_pss(p),
        Cmd::Audit {
            n,
            arity,
            sample_size,
            d,
        } => {
            let arity = match (arity, n) {
                (Some(a), _) => *a,
                (None, Some(n)) => n * n,
                (None, None) => bail!("audit needs --n or --arity"),
            };
            emit(&bound_audit(arity, *sample_size, *d, *n))?;
        }
        Cmd::Verify(args) => return run_verify(args, &cli.out_dir),
        Cmd::Report(ReportCmd::Show { file }) => {
            let r = RunReport::load(file)?;
            emit(&r)?;
        }
    }
    Ok(0)
}

fn run_trial(args: &TrialArgs) -> Result<u8> {
    let phi: Box<dyn ParamBoolFn> = match args.phi {
        PhiKind::Partition => {
            let (Some(k), Some(n)) = (args.k, args.n) else {
                bail!("--phi partition needs --k and --n");
            };
            Box::new(phi_partition(k, n)?)
        }
        PhiKind::SwitchAnd => Box::new(switchable_gate(GateBase::And)),
        PhiKind::SwitchOr => Box::new(switchable_gate(GateBase::Or)),
    };
    let j = phi.param_arity();
    let plist = if args.params == "pv-all" {
        ensure!(
            matches!(args.phi, PhiKind::Partition),
            "pv-all needs --phi partition"
        );
        ParameterList::from_space(&enumerate_pv(j)?)
    } else if let Some(path) = args.params.strip_prefix("file:") {
        read_json(Path::new(path))?
    } else {
        let entries = args
            .params
            .split(',')
            .map(|s| point(s.trim(), j))
            .collect::<Result<Vec<_>>>()?;
        ParameterList::new(j, entries)?
    };
    ensure!(
        plist.param_arity() == j,
        "parameter list has arity {}, expected {j}",
        plist.param_arity()
    );
    let x = point(&args.bits, phi.input_arity())?;
    let value = trial(phi.as_ref(), &plist, x)?;
    let satisfied: Vec<String> = plist
        .entries()
        .iter()
        .filter(|&&q| phi.eval(x, q))
        .map(|&q| point_to_string(q, j))
        .collect();
    emit(&json!({
        "bits": args.bits,
        "params": plist.len(),
        "satisfied_by": satisfied,
        "value": value as u8,
    }))?;
    Ok(0)
}

fn bundle_json(b: &CircuitBundle) -> Value {
    let outputs: serde_json::Map<String, Value> = b
        .names()
        .into_iter()
        .map(|name| {
            let c = b.output(name).expect("listed output");
            (
                name.to_string(),
                serde_json::to_value(c).expect("circuits serialize"),
            )
        })
        .collect();
    json!({ "arity": b.arity(), "gate_count": b.gate_count(), "outputs": outputs })
}

fn run_circuit(cmd: &CircuitCmd) -> Result<()> {
    match cmd {
        CircuitCmd::Build {
            kind,
            k,
            n,
            pv,
            output,
        } => {
            let single = |c: Circuit| -> Result<()> {
                ensure!(
                    output.is_none(),
                    "--output applies to multi-output circuits"
                );
                emit(&c)
            };
            let bundle = |b: CircuitBundle| -> Result<()> {
                match output {
                    Some(name) => emit(&b.output(name).with_context(|| {
                        format!("no output {name:?}; available: {}", b.names().join(", "))
                    })?),
                    None => emit(&bundle_json(&b)),
                }
            };
            match kind {
                CircuitKind::Adder => bundle(build_adder(*k)?)?,
                CircuitKind::Subtractor => bundle(build_subtractor(*k)?)?,
                CircuitKind::Ge => single(build_ge(*k)?)?,
                CircuitKind::ZeroTest => single(build_zero_test(*k)?)?,
                CircuitKind::Equality => single(build_equality(*k)?)?,
                CircuitKind::Phi => {
                    let p = parse_pv(pv.as_deref().context("--kind phi needs --pv")?)?;
                    let n = n.unwrap_or(p.len());
                    single(build_phi_circuit(&p, *k, n)?)?
                }
                CircuitKind::Subpartition => {
                    let n = n.context("--kind subpartition needs --n")?;
                    single(build_subpartition_circuit(
                        enumerate_pv(n)?.vectors(),
                        *k,
                        n,
                    )?)?
                }
            }
        }
        CircuitCmd::Eval { file, bits } => {
            let c: Circuit = read_json(file)?;
            let x = parse_bits(bits)?;
            let value = c.eval(x.bits())?;
            emit(&json!({ "bits": x, "value": value as u8 }))?;
        }
        CircuitCmd::Count { file } => {
            let c: Circuit = read_json(file)?;
            emit(&c.node_count())?;
        }
    }
    Ok(())
}

/// A points file: either a bare array of point strings or a sampling set.
fn read_points(path: &Path, arity: u32) -> Result<Vec<u64>> {
    let v: Value = read_json(path)?;
    if v.is_array() {
        let strings: Vec<String> = serde_json::from_value(v)?;
        strings.iter().map(|s| point(s, arity)).collect()
    } else {
        let sv: SamplingSet = serde_json::from_value(v)?;
        ensure!(
            sv.arity() == arity,
            "sampling set has arity {}, expected {arity}",
            sv.arity()
        );
        Ok(sv.points())
    }
}

fn run_pss(cmd: &PssCmd) -> Result<u8> {
    match cmd {
        PssCmd::Check {
            samples,
            function,
            caps,
        } => {
            let f: TruthTable = read_json(function)?;
            let s = read_points(samples, f.arity())?;
            let r = pss_check(&s, &f, &caps.caps())?;
            emit(&r)?;
            Ok(if r.verdict == PssVerdict::Indeterminate {
                2
            } else {
                0
            })
        }
        PssCmd::Min { function, caps } => {
            let f: TruthTable = read_json(function)?;
            let r = mpss_search(&f, &caps.caps())?;
            emit(&r)?;
            Ok(if r.size.is_some() { 0 } else { 2 })
        }
        PssCmd::FromCircuit {
            function,
            circuit,
            caps,
        } => {
            let f: TruthTable = read_json(function)?;
            let c: Circuit = read_json(circuit)?;
            let r = pss_from_circuit(&f, &c, &caps.caps())?;
            emit(&r)?;
            Ok(if r.terminated { 0 } else { 2 })
        }
    }
}

fn run_verify(args: &VerifyArgs, out_dir: &Path) -> Result<u8> {
    let out = (!args.no_persist).then_some(out_dir);
    let code = if let Some(path) = &args.suite {
        let cfg = SuiteConfig::load(path)?;
        let (summary, _) = run_suite(&cfg, out)?;
        emit(&summary)?;
        summary.exit_code()
    } else {
        let id = ScenarioId::parse(args.scenario.as_deref().expect("clap requires one"))?;
        let params = Params {
            k: args.k,
            n: args.n,
            n_min: args.n_min,
            n_max: args.n_max,
            k_max: args.k_max,
            seed: args.seed,
            samples: args.samples,
            orders: args.orders,
            functions: args.functions,
            gate_cap: args.caps.gate_cap,
            minimizer_cap: args.caps.minimizer_cap,
            node_budget: args.caps.node_budget,
            perturb: args.perturb.then_some(true),
        };
        let report = run_scenario(&Scenario {
            id,
            params,
            expectation: None,
        });
        if let Some(dir) = out {
            let path = report.persist(dir)?;
            log::info!("wrote {}", path.display());
        }
        emit(&report)?;
        exit_code_for([report.body.verdict])
    };
    Ok(code as u8)
}
