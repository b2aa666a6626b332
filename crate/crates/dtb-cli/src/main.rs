//! Command-line frontend: compute single delivery-time points, sweep
//! cache-size grids to CSV, verify optimality certificates and the
//! published corner tables, and replay synthesized schemes bit by bit.

use std::fs;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dtb_core::channel::{make_channel, ChannelParams, QMode};
use dtb_core::converse::{lb_parallel, lb_serial_lp_total};
use dtb_core::rat::{dec_string, rat, rint, Dtb, Rat};
use dtb_core::ratelp::{
    ach_parallel, ach_serial, parallel_alloc_satisfies, parallel_ltilde, parallel_rate_lp,
    serial_alloc_satisfies, serial_rate_lp, table_allocation, Corner, LpCache, TableAlloc,
};
use dtb_core::regime::{
    classify, dtb_parallel, dtb_serial, parallel_cut_terms, serial_cut_terms, thresholds,
    ClassTag, Crosslink,
};
use dtb_core::scheme::{
    synth_parallel, synth_serial_cache_only, synth_serial_with_fronthaul, Scheme, SchemeError,
};
use dtb_core::sim::{empirical_dtb, random_library, run_delivery, verify_optimality, Demand, Mode};

#[derive(Parser)]
#[command(name = "dtb-cli", about = "Delivery time per bit for a cloud- and cache-aided relay network", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one (channel, cache, fronthaul) point and report the
    /// delivery time per bit with its binding cut.
    Compute(ComputeArgs),
    /// Sweep cache sizes and fronthaul rates over one or more channels
    /// into a deterministic CSV.
    Sweep(SweepArgs),
    /// Check optimality certificates over a grid, or re-check one
    /// published corner allocation.
    Verify(VerifyArgs),
    /// Synthesize a scheme, deliver random files through it, and dump
    /// scheme + transcript + certificate.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Serial,
    Parallel,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepModeArg {
    Serial,
    Parallel,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum CornerArg {
    B1,
    B2,
    C1,
    A1,
    A2,
}

impl CornerArg {
    fn corner(self) -> Corner {
        match self {
            CornerArg::B1 => Corner::B1,
            CornerArg::B2 => Corner::B2,
            CornerArg::C1 => Corner::C1,
            CornerArg::A1 => Corner::A1Par,
            CornerArg::A2 => Corner::A2Par,
        }
    }
}

#[derive(Args)]
struct ComputeArgs {
    /// Link strengths as nd1,nd2,nd3
    #[arg(long = "n", value_parser = parse_triple)]
    n: (u32, u32, u32),
    /// Cache size as a fraction p/q in [0,1]
    #[arg(long, value_parser = parse_fraction, default_value = "0")]
    mu: Rat,
    /// Fronthaul bits per channel use
    #[arg(long, default_value_t = 0)]
    nf: u32,
    #[arg(long, value_enum)]
    mode: ModeArg,
}

#[derive(Args)]
struct SweepArgs {
    /// Link strengths as nd1,nd2,nd3; repeat for several channels
    #[arg(long = "n", value_parser = parse_triple, required = true)]
    n: Vec<(u32, u32, u32)>,
    /// Cache-size grid density: mu runs over {k/D : 0 <= k <= D}
    #[arg(long = "mu-den", default_value_t = 8)]
    mu_den: u32,
    /// Fronthaul rates, comma separated
    #[arg(long = "nf", value_delimiter = ',', default_value = "0")]
    nf: Vec<u32>,
    #[arg(long, value_enum, default_value_t = SweepModeArg::Both)]
    mode: SweepModeArg,
    /// Output CSV path
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest link strength in the certificate grid
    #[arg(long = "grid-max", default_value_t = 8)]
    grid_max: u32,
    /// Seed for the random table-oracle channels
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Re-check a single published corner instead of the grid
    #[arg(long, value_enum, ignore_case = true)]
    corner: Option<CornerArg>,
    /// Channel for --corner, as nd1,nd2,nd3
    #[arg(long = "n", value_parser = parse_triple)]
    n: Option<(u32, u32, u32)>,
    /// Fronthaul rate for --corner
    #[arg(long, default_value_t = 0)]
    nf: u32,
}

#[derive(Args)]
struct SimulateArgs {
    /// Link strengths as nd1,nd2,nd3
    #[arg(long = "n", value_parser = parse_triple)]
    n: (u32, u32, u32),
    /// Cache size as a fraction p/q in [0,1]
    #[arg(long, value_parser = parse_fraction, default_value = "0")]
    mu: Rat,
    /// Fronthaul bits per channel use
    #[arg(long, default_value_t = 0)]
    nf: u32,
    #[arg(long, value_enum, default_value_t = ModeArg::Serial)]
    mode: ModeArg,
    /// File length in bits
    #[arg(long = "L")]
    l: usize,
    /// Block count (parallel mode)
    #[arg(long = "B", default_value_t = 1)]
    b: usize,
    /// Seed for the random file library
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Write scheme, transcript, and certificate as JSON
    #[arg(long)]
    out: Option<String>,
    /// Fail instead of adjusting an indivisible file length
    #[arg(long)]
    strict: bool,
}

fn parse_triple(s: &str) -> Result<(u32, u32, u32), String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err("expected three comma-separated link strengths, e.g. 2,5,4".into());
    };
    let p = |v: &str| v.trim().parse::<u32>().map_err(|e| format!("bad link strength {v:?}: {e}"));
    Ok((p(a)?, p(b)?, p(c)?))
}

fn parse_fraction(s: &str) -> Result<Rat, String> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (
            n.trim().parse::<i64>().map_err(|e| format!("bad numerator {n:?}: {e}"))?,
            d.trim().parse::<i64>().map_err(|e| format!("bad denominator {d:?}: {e}"))?,
        ),
        None => (s.trim().parse::<i64>().map_err(|e| format!("bad fraction {s:?}: {e}"))?, 1),
    };
    if den <= 0 {
        return Err("denominator must be positive".into());
    }
    let v = rat(num, den);
    if v < rat(0, 1) || v > rat(1, 1) {
        return Err(format!("cache size {s} outside [0, 1]"));
    }
    Ok(v)
}

fn channel(n: (u32, u32, u32), nf: u32) -> Result<ChannelParams> {
    make_channel(n.0, n.1, n.2, nf, QMode::Wireless)
        .map_err(|e| anyhow!("invalid channel ({},{},{}): {e}", n.0, n.1, n.2))
}

fn dtb_cell(v: &Dtb) -> (String, String, String) {
    match v {
        Dtb::Finite(r) => (r.numer().to_string(), r.denom().to_string(), dec_string(r, 6)),
        // Projective infinity: q = 1/0. Keeps the machine columns
        // integral for points no finite-time policy can serve.
        Dtb::Unbounded => ("1".into(), "0".into(), "inf".into()),
    }
}

fn class_token(c: ClassTag) -> &'static str {
    match c {
        ClassTag::I => "I",
        ClassTag::II => "II",
        ClassTag::III => "III",
        ClassTag::IV => "IV",
    }
}

fn crosslink_token(c: Crosslink) -> &'static str {
    match c {
        Crosslink::Scl => "SCL",
        Crosslink::Wcl => "WCL",
    }
}

fn fraction_of(v: &Dtb) -> String {
    match v {
        Dtb::Finite(r) => format!("{r} (~{})", dec_string(r, 6)),
        Dtb::Unbounded => "unbounded".into(),
    }
}

fn cmd_compute(args: &ComputeArgs) -> Result<ExitCode> {
    let n = channel(args.n, args.nf)?;
    let nf = rint(args.nf as i64);
    let cls = classify(&n);
    let (value, terms) = match args.mode {
        ModeArg::Serial => (dtb_serial(&args.mu, &nf, &n), serial_cut_terms(&args.mu, &nf, &n)),
        ModeArg::Parallel => {
            (dtb_parallel(&args.mu, &nf, &n), parallel_cut_terms(&args.mu, &nf, &n))
        }
    };
    let binding = terms
        .iter()
        .find(|(_, v)| *v == value)
        .map(|(name, _)| *name)
        .expect("the maximum is one of its terms");
    let th = thresholds(&n, &nf);

    println!(
        "channel n = ({},{},{}), nf = {}, mode = {}",
        n.nd1,
        n.nd2,
        n.nd3,
        args.nf,
        match args.mode {
            ModeArg::Serial => "serial",
            ModeArg::Parallel => "parallel",
        }
    );
    println!("mu = {}", args.mu);
    println!("dtb = {}", fraction_of(&value));
    println!("class = {}, crosslink = {}", class_token(cls.class), crosslink_token(cls.crosslink));
    println!("binding term = {binding}");
    println!(
        "thresholds: floor = {}, serial corners mu' = {}, mu'' = {}, mu''' = {}",
        th.delta_lb_prime, th.mu_prime, th.mu_dprime, th.mu_tprime
    );
    println!(
        "            parallel corners mu' = {}, mu'' = {}, mu''' = {}, useful fronthaul up to nf_max = {}",
        th.mu_prime_p, th.mu_dprime_p, th.mu_tprime_p, th.nf_max
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode> {
    if args.mu_den == 0 {
        bail!("--mu-den must be at least 1");
    }
    let modes: &[Mode] = match args.mode {
        SweepModeArg::Serial => &[Mode::Serial],
        SweepModeArg::Parallel => &[Mode::Parallel],
        SweepModeArg::Both => &[Mode::Serial, Mode::Parallel],
    };
    let mut rows = Vec::new();
    for &triple in &args.n {
        for &nf_i in &args.nf {
            let n = channel(triple, nf_i)?;
            let nf = rint(nf_i as i64);
            let cls = classify(&n);
            let bottleneck = thresholds(&n, &nf).delta_lb_prime;
            for k in 0..=args.mu_den {
                let mu = rat(k as i64, args.mu_den as i64);
                for &mode in modes {
                    let value = match mode {
                        Mode::Serial => dtb_serial(&mu, &nf, &n),
                        Mode::Parallel => dtb_parallel(&mu, &nf, &n),
                    };
                    rows.push((triple, nf_i, mode, mu.clone(), value, cls, bottleneck.clone()));
                }
            }
        }
    }
    // Lexicographic by channel, fronthaul, mode, cache size.
    rows.sort_by(|a, b| {
        (a.0, a.1, mode_rank(a.2), &a.3).cmp(&(b.0, b.1, mode_rank(b.2), &b.3))
    });

    let mut out = String::new();
    out.push_str(
        "nd1,nd2,nd3,nF,mu_num,mu_den,mode,dtb_num,dtb_den,regime_class,crosslink,bottleneck_num,bottleneck_den,dtb_decimal\n",
    );
    for (triple, nf_i, mode, mu, value, cls, bottleneck) in &rows {
        let (dn, dd, dec) = dtb_cell(value);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            triple.0,
            triple.1,
            triple.2,
            nf_i,
            mu.numer(),
            mu.denom(),
            match mode {
                Mode::Serial => "Serial",
                Mode::Parallel => "Parallel",
            },
            dn,
            dd,
            class_token(cls.class),
            crosslink_token(cls.crosslink),
            bottleneck.numer(),
            bottleneck.denom(),
            dec,
        ));
    }
    fs::write(&args.out, out).with_context(|| format!("writing {}", args.out))?;
    println!("wrote {} rows to {}", rows.len(), args.out);
    Ok(ExitCode::SUCCESS)
}

fn mode_rank(m: Mode) -> u8 {
    match m {
        Mode::Serial => 0,
        Mode::Parallel => 1,
    }
}

/// Grid cache sizes for verification: eighths plus the corner values
/// that land in [0, 1].
fn mu_grid(n: &ChannelParams, nf: &Rat) -> Vec<Rat> {
    let mut mus: Vec<Rat> = (0..=8).map(|k| rat(k, 8)).collect();
    let th = thresholds(n, nf);
    for v in [th.mu_prime, th.mu_dprime, th.mu_tprime, th.mu_prime_p, th.mu_dprime_p, th.mu_tprime_p]
    {
        if v >= Rat::zero() && v <= Rat::one() {
            mus.push(v);
        }
    }
    mus.sort();
    mus.dedup();
    mus
}

fn check_table_point(corner: Corner, nf: &Rat, n: &ChannelParams) -> Result<(), String> {
    let name = corner_name(corner);
    match table_allocation(corner, nf, n) {
        Ok(TableAlloc::Serial { mu, alloc }) => {
            if !serial_alloc_satisfies(&alloc, &mu, n) {
                return Err(format!("corner {name} infeasible on {n:?}"));
            }
            if alloc.lbar != serial_rate_lp(&mu, n).lbar {
                return Err(format!("corner {name} misses the LP objective on {n:?}"));
            }
            Ok(())
        }
        Ok(TableAlloc::Parallel { nf, alloc }) => {
            let mu0 = rint(0);
            if !parallel_alloc_satisfies(&alloc, &mu0, &nf, n) {
                return Err(format!("corner {name} infeasible on {n:?} at nf={nf}"));
            }
            if alloc.ltilde != parallel_rate_lp(&mu0, &nf, n).ltilde {
                return Err(format!(
                    "corner {name} misses the LP objective on {n:?} at nf={nf}"
                ));
            }
            Ok(())
        }
        Err(e) => Err(format!("not covered: {e}")),
    }
}

fn corner_name(corner: Corner) -> &'static str {
    match corner {
        Corner::B1 => "B1",
        Corner::B2 => "B2",
        Corner::C1 => "C1",
        Corner::A1Par => "A1",
        Corner::A2Par => "A2",
    }
}

fn echo_corner(corner: Corner, nf: &Rat, n: &ChannelParams) {
    let name = corner_name(corner);
    match table_allocation(corner, nf, n) {
        Ok(TableAlloc::Serial { mu, alloc }) => {
            println!("corner {name} on ({},{},{}):", n.nd1, n.nd2, n.nd3);
            println!("  mu = {mu}, lbar = {}", alloc.lbar);
            println!(
                "  relay: l4 = {}, r2p_u = {}, l3 = {}, rin_n = {}",
                alloc.l4, alloc.r2p_u, alloc.l3, alloc.rin_n
            );
            println!(
                "  direct: rc_u = {}, rc_v = {}, rin_v = {}, r1p_w = {}, l1 = {}, l2 = {}",
                alloc.rc_u, alloc.rc_v, alloc.rin_v, alloc.r1p_w, alloc.l1, alloc.l2
            );
        }
        Ok(TableAlloc::Parallel { nf, alloc }) => {
            println!("corner {name} on ({},{},{}) at nf = {nf}:", n.nd1, n.nd2, n.nd3);
            println!("  ltilde = {}, r1p_w = {}, l1 = {}", alloc.ltilde, alloc.r1p_w, alloc.l1);
            for (i, s) in alloc.slots.iter().enumerate() {
                println!(
                    "  slot {}: r1c_u = {}, r2c_u = {}, r2p_u = {}, rin_v = {}, r1c_v = {}, r2c_v = {}, rin_n = {}, l2 = {}, l3 = {}, l4 = {}",
                    i, s.r1c_u, s.r2c_u, s.r2p_u, s.rin_v, s.r1c_v, s.r2c_v, s.rin_n, s.l2, s.l3, s.l4
                );
            }
        }
        Err(e) => println!("corner {name}: {e}"),
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode> {
    if let Some(corner_arg) = args.corner {
        let triple = args.n.ok_or_else(|| anyhow!("--corner needs --n"))?;
        let n = channel(triple, args.nf)?;
        let corner = corner_arg.corner();
        let nf = rint(args.nf as i64);
        echo_corner(corner, &nf, &n);
        return match check_table_point(corner, &nf, &n) {
            Ok(()) => {
                println!("check: feasible and attains the LP objective");
                Ok(ExitCode::SUCCESS)
            }
            Err(e) => {
                println!("check: FAIL ({e})");
                Ok(ExitCode::FAILURE)
            }
        };
    }

    let mut failures: Vec<String> = Vec::new();

    // Optimality certificates over the grid.
    let mut cache = LpCache::new();
    let mut points = 0usize;
    for a in 0..=args.grid_max {
        for b in 0..=args.grid_max {
            for c in 0..=args.grid_max {
                let Ok(n) = make_channel(a, b, c, 0, QMode::Wireless) else {
                    continue;
                };
                for nf_i in 0..=10i64 {
                    let nf = rint(nf_i);
                    for mu in mu_grid(&n, &nf) {
                        let serial = dtb_serial(&mu, &nf, &n);
                        let parallel = dtb_parallel(&mu, &nf, &n);
                        let checks = [
                            ("serial converse", lb_serial_lp_total(&mu, &nf, &n), &serial),
                            ("serial construction", ach_serial(&mut cache, &mu, &nf, &n), &serial),
                            ("parallel converse", lb_parallel(&mu, &nf, &n), &parallel),
                            ("parallel construction", ach_parallel(&mu, &nf, &n), &parallel),
                        ];
                        for (what, got, want) in checks {
                            if got != *want {
                                failures.push(format!(
                                    "{what} mismatch at n=({a},{b},{c}) nf={nf_i} mu={mu}: {got:?} vs {want:?}"
                                ));
                            }
                        }
                        points += 1;
                    }
                }
            }
        }
    }

    // Published tables on random channels.
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let corners = [Corner::B2, Corner::B1, Corner::C1, Corner::A1Par, Corner::A2Par];
    let mut table_checks = 0usize;
    for _ in 0..400 {
        let (a, b, c) =
            (rng.gen_range(0..=12u32), rng.gen_range(0..=12u32), rng.gen_range(0..=12u32));
        let Ok(n) = make_channel(a, b, c, 0, QMode::Wireless) else {
            continue;
        };
        let nf = rint(rng.gen_range(0..=12i64));
        for corner in corners {
            if table_allocation(corner, &nf, &n).is_err() {
                continue; // regime not covered by this corner
            }
            if let Err(e) = check_table_point(corner, &nf, &n) {
                failures.push(e);
            }
            table_checks += 1;
        }
    }

    if failures.is_empty() {
        println!(
            "all tight: {points} certificate points (grid max {}) and {table_checks} table allocations verified",
            args.grid_max
        );
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &failures {
            println!("FAIL: {f}");
        }
        println!("{} failures over {points} certificate points and {table_checks} table checks", failures.len());
        Ok(ExitCode::FAILURE)
    }
}

/// Synthesize for the requested mode, adjusting the file length (and
/// block count, parallel) to the synthesizer's granularity unless
/// `strict`.
fn synth_adjusted(args: &SimulateArgs, n: &ChannelParams) -> Result<Scheme> {
    let strict_err = |required: usize| {
        anyhow!(
            "file length {} is not synthesizable; the smallest valid length is {required} (rerun without --strict to auto-adjust)",
            args.l
        )
    };
    match args.mode {
        ModeArg::Serial => {
            let synth = |l: usize| {
                if n.nf == 0 {
                    synth_serial_cache_only(&args.mu, n, l)
                } else {
                    synth_serial_with_fronthaul(&args.mu, n, l)
                }
            };
            match synth(args.l) {
                Ok(s) => Ok(s),
                Err(SchemeError::IndivisibleFileSize { required }) => {
                    if args.strict {
                        return Err(strict_err(required));
                    }
                    let l = args.l.div_ceil(required) * required;
                    eprintln!(
                        "warning: L={} is not a multiple of the scheme granularity; using L={l}",
                        args.l
                    );
                    Ok(synth(l)?)
                }
                Err(e) => Err(e.into()),
            }
        }
        ModeArg::Parallel => match synth_parallel(&args.mu, n, args.l, args.b) {
            Ok(s) => Ok(s),
            Err(SchemeError::IndivisibleFileSize { required }) => {
                if args.strict {
                    return Err(strict_err(required));
                }
                let nf = rint(n.nf as i64);
                let lt = parallel_ltilde(&args.mu, &nf, n);
                let unit = (rint(required as i64) / &lt)
                    .to_integer()
                    .to_usize()
                    .expect("block granularity fits a machine word");
                let b = args.b.div_ceil(unit).max(1) * unit;
                let l = (rint(b as i64) * &lt)
                    .to_integer()
                    .to_usize()
                    .expect("payload fits a machine word");
                eprintln!(
                    "warning: (L={}, B={}) does not fit the scheme granularity; using L={l}, B={b}",
                    args.l, args.b
                );
                Ok(synth_parallel(&args.mu, n, l, b)?)
            }
            Err(e) => Err(e.into()),
        },
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let n = channel(args.n, args.nf)?;
    let nf = rint(args.nf as i64);
    let scheme = synth_adjusted(args, &n)?;
    let library = random_library(2, scheme.l, args.seed);
    let transcript = run_delivery(&scheme, &library, Demand { d1: 0, d2: 1 }, &n)
        .context("delivery replay failed")?;

    let (mode, analytic) = match args.mode {
        ModeArg::Serial => (Mode::Serial, dtb_serial(&args.mu, &nf, &n)),
        ModeArg::Parallel => (Mode::Parallel, dtb_parallel(&args.mu, &nf, &n)),
    };
    match mode {
        Mode::Serial => println!(
            "T_F={}, T_E={}, L={}, errors={}",
            transcript.t_f, transcript.t_e, scheme.l, transcript.errors
        ),
        Mode::Parallel => println!(
            "T_P={}, L={}, errors={}",
            transcript.t_p.expect("parallel transcript carries t_p"),
            scheme.l,
            transcript.errors
        ),
    }
    let emp = empirical_dtb(&transcript, scheme.l, mode);
    println!("empirical dtb = {emp} (~{})", dec_string(&emp, 6));
    println!("analytic dtb = {}", fraction_of(&analytic));

    if let Some(path) = &args.out {
        let certificate = verify_optimality(&args.mu, n.nf, &n, mode);
        let dump = serde_json::json!({
            "scheme": scheme,
            "transcript": transcript,
            "certificate": certificate,
        });
        fs::write(path, serde_json::to_string_pretty(&dump)?)
            .with_context(|| format!("writing {path}"))?;
        println!("wrote scheme, transcript, and certificate to {path}");
    }

    if transcript.errors > 0 {
        println!("DECODE FAILURE: {} bit errors", transcript.errors);
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    // Die quietly when a pager closes the pipe instead of panicking.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compute(a) => cmd_compute(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Simulate(a) => cmd_simulate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
