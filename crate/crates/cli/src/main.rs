use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use toric_dqpt::groundstate::{log_partition_function, loop_energy};
use toric_dqpt::oracle::{run_validation, ValidationOptions, MAX_ORACLE_SPINS};
use toric_dqpt::sweep::{
    run_closed_sweep, run_open_sweep, write_outputs, Pipeline, SweepConfig, SweepResult,
};
use toric_dqpt::{
    ground_state, verify_ground_state, Error, GroundStateSpec, LoopGroup, BETA_CRITICAL,
};

#[derive(Parser)]
#[command(
    name = "toric-dqpt",
    version,
    about = "Quench dynamics and entanglement of the perturbed toric code"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact ground states over the beta0 grid, checked against the dense oracle on small tori.
    GroundState(Overrides),
    /// Closed-system sweep: echo, GGM and block log-negativity.
    QuenchScan(Overrides),
    /// Open-system sweep: block log-negativity under the thermal bath.
    LindbladScan(Overrides),
    /// Cross-check the loop-sector pipeline against the dense oracle.
    Validate {
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

#[derive(Args, Clone)]
struct Overrides {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lx: Option<usize>,
    #[arg(long)]
    ly: Option<usize>,
    #[arg(long)]
    beta_min: Option<f64>,
    #[arg(long)]
    beta_max: Option<f64>,
    #[arg(long)]
    beta_step: Option<f64>,
    #[arg(long)]
    ti: Option<f64>,
    #[arg(long)]
    tf: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    bath_k: Option<f64>,
    /// B / T_E of the bath.
    #[arg(long)]
    bath_ratio: Option<f64>,
    #[arg(long)]
    ode_dt: Option<f64>,
    /// Write series_<beta0>.csv files next to the output.
    #[arg(long)]
    dump_series: bool,
    /// Report beta* from the second derivative.
    #[arg(long)]
    use_second_derivative: bool,
}

impl Overrides {
    fn resolve(&self) -> Result<SweepConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => SweepConfig::from_file(path)?,
            None => SweepConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value {
                    $field = v;
                }
            };
        }
        set!(cfg.lattice.lx, self.lx);
        set!(cfg.lattice.ly, self.ly);
        set!(cfg.beta0.min, self.beta_min);
        set!(cfg.beta0.max, self.beta_max);
        set!(cfg.beta0.step, self.beta_step);
        set!(cfg.time.ti, self.ti);
        set!(cfg.time.tf, self.tf);
        set!(cfg.time.dt, self.dt);
        set!(cfg.bath.k, self.bath_k);
        set!(cfg.bath.ratio, self.bath_ratio);
        if self.output.is_some() {
            cfg.output = self.output.clone();
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if self.ode_dt.is_some() {
            cfg.ode_dt = self.ode_dt;
        }
        cfg.dump_series |= self.dump_series;
        cfg.use_second_derivative |= self.use_second_derivative;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn ground_states(cfg: &SweepConfig) -> Result<(), Error> {
    let lat = cfg.build_lattice()?;
    let group = LoopGroup::new(&lat);
    let mut rows = Vec::new();
    for beta in cfg.beta0.points() {
        let spec = GroundStateSpec::new(beta)?;
        let psi = ground_state(&spec, &group);
        let mut row = json!({
            "beta": beta,
            "log_z": log_partition_function(&spec, &group),
            "energy": loop_energy(&psi, beta, &lat, &group),
            "identity_amplitude": psi.amps()[0].re,
        });
        if lat.num_spins() <= MAX_ORACLE_SPINS {
            let report = verify_ground_state(beta, &lat)?;
            row["fidelity"] = json!(report.fidelity);
            row["dense_energy"] = json!(report.dense_energy);
            row["degeneracy"] = json!(report.degeneracy);
            if !report.passes(1e-10) {
                return Err(Error::Numerical(format!(
                    "ground state disagrees with the oracle at beta={beta}: {report:?}"
                )));
            }
        }
        rows.push(row);
    }
    let doc = json!({
        "lattice": cfg.lattice,
        "num_spins": lat.num_spins(),
        "group_order": group.order(),
        "beta_critical": BETA_CRITICAL,
        "states": rows,
    });
    let text = serde_json::to_string_pretty(&doc)?;
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn report(result: &SweepResult, cfg: &SweepConfig, default_output: &str) -> Result<(), Error> {
    let path = cfg
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(default_output));
    write_outputs(result, &path)?;
    println!(
        "wrote {} ({} beta0 points)",
        path.display(),
        result.records.len()
    );
    let second = cfg.use_second_derivative;
    for (name, d) in [("GGM", &result.ggm), ("LN", &result.ln)] {
        if let Some(peak) = d.as_ref().and_then(|d| d.peak(second)) {
            let edge = if peak.boundary {
                " (grid boundary)"
            } else {
                ""
            };
            println!("beta* from d<{name}>/dbeta0: {:.4}{edge}", peak.beta);
        }
    }
    if !result.failures.is_empty() {
        return Err(Error::Numerical(format!(
            "{} beta0 points failed",
            result.failures.len()
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::GroundState(o) => ground_states(&o.resolve()?),
        Command::QuenchScan(o) => {
            let cfg = SweepConfig {
                pipeline: Pipeline::Closed,
                ..o.resolve()?
            };
            report(&run_closed_sweep(&cfg)?, &cfg, "quench_scan.csv")
        }
        Command::LindbladScan(o) => {
            let cfg = SweepConfig {
                pipeline: Pipeline::Open,
                ..o.resolve()?
            };
            report(&run_open_sweep(&cfg)?, &cfg, "lindblad_scan.csv")
        }
        Command::Validate { samples, seed } => {
            let checks = run_validation(ValidationOptions { samples, seed })?;
            println!(
                "{:<36} {:>6} {:>11} {:>9}  detail",
                "check", "result", "max error", "tolerance"
            );
            for c in &checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                println!(
                    "{:<36} {verdict:>6} {:>11.3e} {:>9.0e}  {}",
                    c.name, c.max_error, c.tolerance, c.detail
                );
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(Error::Numerical(format!(
                    "{failed} of {} checks failed",
                    checks.len()
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
