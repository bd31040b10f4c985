use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use num_complex::Complex64;
use pnc_core::mapper::{load_store, offline_search, online_select, save_store, SelectionResult};
use pnc_core::modem::{parse_mods, Modulation};
use pnc_core::sfs::{enumerate_sfs, reduce_image_sfs, FadeKind, SfsTable};
use pnc_core::sim::{emit_csv, render_csv, run_ber, run_mismap, ExperimentConfig, KEYS};
use pnc_core::PncError;

const WORKERS_ENV: &str = "PNC_FORGE_WORKERS";

fn flag(key: &str) -> String {
    key.replace('_', "-")
}

fn cli() -> Command {
    let experiment = |name: &'static str, about: &'static str| {
        let mut cmd = Command::new(name)
            .about(about)
            .arg(
                Arg::new("config")
                    .long("config")
                    .value_name("FILE")
                    .help("key = value config file"),
            )
            .arg(
                Arg::new("out")
                    .long("out")
                    .value_name("CSV")
                    .help("output file, stdout when absent"),
            );
        for (key, help) in KEYS {
            cmd = cmd.arg(
                Arg::new(*key)
                    .long(flag(key))
                    .alias(*key)
                    .value_name("VALUE")
                    .help(*help),
            );
        }
        cmd
    };
    Command::new("pnc-forge")
        .about("Adaptive physical-layer network coding: fade states, mapping search and link simulation")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            Command::new("sfs").subcommand_required(true).subcommand(
                Command::new("enumerate")
                    .about("List singular fade states as CSV")
                    .arg(Arg::new("mods").long("mods").required(true).value_name("A,B"))
                    .arg(
                        Arg::new("reduced")
                            .long("reduced")
                            .action(ArgAction::SetTrue)
                            .help("only class representatives"),
                    ),
            ),
        )
        .subcommand(
            Command::new("search").subcommand_required(true).subcommand(
                Command::new("offline")
                    .about("Build and save the candidate matrix store")
                    .arg(Arg::new("mods").long("mods").required(true).value_name("A,B"))
                    .arg(Arg::new("out").long("out").required(true).value_name("FILE")),
            ),
        )
        .subcommand(
            Command::new("select")
                .about("Pick mapping matrices for one channel realisation")
                .arg(Arg::new("store").long("store").required(true).value_name("FILE"))
                .arg(
                    Arg::new("h")
                        .long("h1")
                        .required(true)
                        .action(ArgAction::Append)
                        .value_name("RE,IM,RE,IM")
                        .help("channel of AP 1; repeat with --h2, --h3 ...")
                        .aliases(["h2", "h3", "h4", "h5", "h6", "h7", "h8"]),
                )
                .arg(Arg::new("sigma").long("sigma").default_value("0").value_name("STD")),
        )
        .subcommand(
            Command::new("simulate")
                .subcommand_required(true)
                .subcommand(experiment("ber", "BER sweep over the SNR grid"))
                .subcommand(experiment("mismap", "Mis-mapping probability with estimated channels")),
        )
}

fn pair(m: &ArgMatches) -> Result<[Modulation; 2], PncError> {
    let mods = parse_mods(m.get_one::<String>("mods").unwrap())?;
    match mods.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(PncError::Config {
            field: "mods".into(),
            reason: "exactly two modulations".into(),
        }),
    }
}

fn enumerate(m: &ArgMatches) -> Result<(), PncError> {
    let table: SfsTable = reduce_image_sfs(enumerate_sfs(pair(m)?))?;
    let rows = if m.get_flag("reduced") {
        table.reduced_states()
    } else {
        (0..table.all_states().len()).collect()
    };
    println!("index,re_gamma,im_gamma,witness_count,representative_index");
    for i in rows {
        let s = table.state(i);
        debug_assert!(s.kind != FadeKind::H1Erasure);
        println!(
            "{i},{},{},{},{}",
            // adding zero turns -0 into 0
            s.ratio.re + 0.0,
            s.ratio.im + 0.0,
            s.witnesses.len(),
            table.representative(i)
        );
    }
    Ok(())
}

fn search(m: &ArgMatches) -> Result<(), PncError> {
    let store = offline_search(pair(m)?);
    let out = m.get_one::<String>("out").unwrap();
    save_store(&store, out)?;
    eprintln!(
        "{} candidates for {} fade-state classes written to {out}",
        store.candidate_count(),
        store.records().len()
    );
    Ok(())
}

fn parse_channel(s: &str) -> Result<[Complex64; 2], PncError> {
    let bad = || PncError::Config {
        field: "h".into(),
        reason: format!("`{s}` is not re,im,re,im"),
    };
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [a, b, c, d] => Ok([Complex64::new(*a, *b), Complex64::new(*c, *d)]),
        _ => Err(bad()),
    }
}

fn print_selection(sel: &SelectionResult) {
    for (j, ap) in sel.per_ap.iter().enumerate() {
        println!(
            "ap {}: rows {} d_min {} nearest_sfs {} sfs_distance {}",
            j + 1,
            ap.rows(),
            ap.d_min,
            ap.sfs_index,
            ap.sfs_distance
        );
        println!("  mapping {}", ap.mapping);
    }
    println!("global {}", sel.global);
    println!("global_inverse {}", sel.global_inverse);
    println!("min_d {} sum_d {} widened {}", sel.min_d(), sel.sum_d(), sel.widened);
}

fn select(m: &ArgMatches) -> Result<(), PncError> {
    let path = m.get_one::<String>("store").unwrap();
    // a malformed store is a runtime failure, not a configuration error
    let store = load_store(path).map_err(|e| match e {
        PncError::Parse { line, reason } => PncError::IncompatibleStore(format!("{path} line {line}: {reason}")),
        e => {
            eprintln!("pnc-forge: cannot load store {path}");
            e
        }
    })?;
    let h: Vec<[Complex64; 2]> = m
        .get_many::<String>("h")
        .unwrap()
        .map(|s| parse_channel(s))
        .collect::<Result<_, _>>()?;
    let sigma: f64 = m
        .get_one::<String>("sigma")
        .unwrap()
        .parse()
        .map_err(|_| PncError::Config {
            field: "sigma".into(),
            reason: "not a number".into(),
        })?;
    print_selection(&online_select(&h, &store, sigma)?);
    Ok(())
}

fn experiment_config(m: &ArgMatches) -> Result<ExperimentConfig, PncError> {
    let env_workers = std::env::var(WORKERS_ENV).ok();
    // file, then the environment, then explicit flags
    let mut overrides: Vec<(&str, &str)> = Vec::new();
    if let Some(w) = env_workers.as_deref() {
        overrides.push(("workers", w));
    }
    for (key, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            overrides.push((key, v));
        }
    }
    let path = m.get_one::<String>("config").map(PathBuf::from);
    ExperimentConfig::load(path.as_deref(), overrides)
}

fn simulate(kind: &str, m: &ArgMatches) -> Result<(), PncError> {
    let cfg = experiment_config(m)?;
    let records = if kind == "ber" {
        run_ber(&cfg)?
    } else {
        run_mismap(&cfg)?
    };
    match m.get_one::<String>("out") {
        Some(out) => emit_csv(&records, out),
        None => {
            print!("{}", render_csv(&records)?);
            Ok(())
        }
    }
}

fn run(m: &ArgMatches) -> Result<(), PncError> {
    match m.subcommand() {
        Some(("sfs", s)) => enumerate(s.subcommand_matches("enumerate").unwrap()),
        Some(("search", s)) => search(s.subcommand_matches("offline").unwrap()),
        Some(("select", s)) => select(s),
        Some(("simulate", s)) => match s.subcommand() {
            Some((kind, e)) => simulate(kind, e),
            None => unreachable!("subcommand required"),
        },
        _ => unreachable!("subcommand required"),
    }
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    match run(&matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pnc-forge: {e}");
            match e {
                PncError::Config { .. } | PncError::Parse { .. } => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
