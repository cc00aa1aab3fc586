mod config;
mod schema;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use swarmlab::dynamics::{ParticleState, Simulator};
use swarmlab::harness::{
    convergence_study, derive_seed, hypothesis_check, lemma_suite, lipschitz_diagnostic, probe_pairs, reference_solution,
    sample_initial, stability_study,
};
use swarmlab::regions::MollifiedTable;
use swarmlab::{geom, io, transport, Error, VERSION};

use config::RunConfig;

/// Environment variable that replaces `output.dir`.
const OUTPUT_DIR_ENV: &str = "SWARMLAB_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "swarmlab", version, about = "Swarming dynamics with sensitivity regions: simulations, studies and W1 distances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML configuration; every key is optional.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Dotted-path override, e.g. `--set dynamics.dt=0.0005`. Repeatable.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the particle system and write the trajectory and diagnostics.
    Simulate(RunArgs),
    /// Mean-field convergence study against a mollified reference.
    Converge(RunArgs),
    /// Distance between two mollified runs from different initial data.
    Stability(RunArgs),
    /// Monte Carlo checks of the region hypotheses and inclusion lemmas.
    Hypcheck(RunArgs),
    /// Local Lipschitz and growth diagnostic of the mollified force field.
    Lipschitz(RunArgs),
    /// Exact W1 distance between two measure CSV files.
    W1 {
        a: PathBuf,
        b: PathBuf,
        /// Also write the optimal plan as CSV.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Print the configuration and output-file reference.
    Schema,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn schema(message: impl Into<String>) -> Self {
        Failure { code: 2, kind: "schema", message: message.into() }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure { code: 1, kind: "io", message: format!("{}: {e}", path.display()) }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match e {
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } => (2, "invalid_input"),
            Error::DegenerateMeasure(_) | Error::NonFinite { .. } | Error::Numerical(_) => (3, "numerical"),
            Error::SizeCap { .. } => (4, "size_cap"),
        };
        Failure { code, kind, message: e.to_string() }
    }
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure::schema(e.0)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let body = json!({ "error": { "kind": f.kind, "message": f.message, "exit_code": f.code } });
            eprintln!("{body}");
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cmd: Command) -> Outcome<()> {
    match cmd {
        Command::Simulate(a) => Run::open("simulate", &a)?.simulate(),
        Command::Converge(a) => Run::open("converge", &a)?.converge(),
        Command::Stability(a) => Run::open("stability", &a)?.stability(),
        Command::Hypcheck(a) => Run::open("hypcheck", &a)?.hypcheck(),
        Command::Lipschitz(a) => Run::open("lipschitz", &a)?.lipschitz(),
        Command::W1 { a, b, plan } => w1(&a, &b, plan.as_deref()),
        Command::Schema => {
            print!("{}", schema::reference());
            Ok(())
        }
    }
}

fn w1(a: &Path, b: &Path, plan_path: Option<&Path>) -> Outcome<()> {
    let mu = io::read_measure_file(a)?;
    let nu = io::read_measure_file(b)?;
    let (d, plan) = transport::w1(&mu, &nu)?;
    if let Some(p) = plan_path {
        let f = File::create(p).map_err(|e| Failure::io(p, e))?;
        io::write_plan(BufWriter::new(f), &plan)?;
    }
    println!("{d:?}");
    Ok(())
}

/// One configured run writing into its output directory.
struct Run {
    subcommand: &'static str,
    cfg: RunConfig,
    overrides: Vec<String>,
    dir: PathBuf,
    outputs: Vec<String>,
}

impl Run {
    fn open(subcommand: &'static str, args: &RunArgs) -> Outcome<Self> {
        let text = match &args.config {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Failure::io(p, e))?,
            None => String::new(),
        };
        let cfg = RunConfig::load(&text, &args.overrides)?;
        cfg.setup()?;
        let dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
        std::fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
        Ok(Run { subcommand, cfg, overrides: args.overrides.clone(), dir, outputs: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Outcome<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| Failure::io(&path, e))?;
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Outcome<()> {
        let mut w = self.create(name)?;
        let path = self.dir.join(name);
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::io(&path, e))?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| Failure::io(&path, e))
    }

    fn write_text(&mut self, name: &str, text: &str) -> Outcome<()> {
        let mut w = self.create(name)?;
        let path = self.dir.join(name);
        w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| Failure::io(&path, e))
    }

    /// Writes `summary.json` and the manifest, then prints the PASS/FAIL line.
    fn finish(mut self, summary: serde_json::Value, pass: Option<bool>) -> Outcome<()> {
        self.write_json("summary.json", &summary)?;
        let mut outputs = self.outputs.clone();
        outputs.push("manifest.json".into());
        let manifest = json!({
            "version": VERSION,
            "subcommand": self.subcommand,
            "seed": self.cfg.seed,
            "workers": self.cfg.workers,
            "overrides": self.overrides,
            "config": self.cfg.to_toml(),
            "outputs": outputs,
        });
        self.write_json("manifest.json", &manifest)?;
        match pass {
            Some(p) => println!("{} {}: {}", if p { "PASS" } else { "FAIL" }, self.subcommand, self.dir.display()),
            None => println!("{}: {}", self.subcommand, self.dir.display()),
        }
        Ok(())
    }

    fn simulate(mut self) -> Outcome<()> {
        let c = &self.cfg;
        let initial = match &c.dynamics.initial_file {
            Some(p) => ParticleState::from_measure(&io::read_measure_file(Path::new(p))?)?,
            None => sample_initial(&c.study.initial, c.dynamics.particles, derive_seed(c.seed, c.dynamics.particles as u64))?,
        };
        let setup = c.setup()?;
        let mut sim = setup.sim_config(c.dynamics.mode, c.dynamics.record_every);
        sim.seed = c.seed;
        sim.check_max_speed = c.dynamics.check_max_speed;
        let traj = Simulator::new(sim, initial.max_speed())?.run(&initial)?;
        let dim = initial.dim;
        if c.output.trajectory {
            let w = self.create("trajectory.csv")?;
            io::write_trajectory(w, &traj)?;
        }
        let w = self.create("diagnostics.csv")?;
        io::write_diagnostics(w, &traj.diagnostics, dim)?;
        let last = traj.diagnostics.last().expect("initial diagnostics");
        let summary = json!({
            "particles": initial.len(),
            "steps": traj.diagnostics.len() - 1,
            "initial_max_speed": traj.diagnostics[0].max_speed,
            "final": last,
        });
        self.finish(summary, None)
    }

    fn converge(mut self) -> Outcome<()> {
        let c = &self.cfg;
        let rep = convergence_study(&c.study.initial, &c.setup()?, &c.study.n_list, c.study.n_ref, &c.study.times, c.seed)?;
        let mut csv = String::from("study,N,t,d1,ratio\n");
        for r in &rep.rows {
            let ratio = r.ratio.map_or(String::new(), io::fmt);
            csv += &format!("converge,{},{},{},{ratio}\n", r.n, io::fmt(r.t), io::fmt(r.d1));
        }
        self.write_text("convergence.csv", &csv)?;
        let pass = rep.pass;
        self.finish(serde_json::to_value(&rep).expect("report serializes"), Some(pass))
    }

    fn stability(mut self) -> Outcome<()> {
        let c = &self.cfg;
        let rep = stability_study(&c.study.initial, &c.initial_b(), &c.setup()?, c.study.n, &c.study.times, c.seed)?;
        let mut csv = String::from("study,N,t,d1,ratio\n");
        for r in &rep.rows {
            let ratio = r.ratio.map_or(String::new(), io::fmt);
            csv += &format!("stability,{},{},{},{ratio}\n", rep.n, io::fmt(r.t), io::fmt(r.d1));
        }
        self.write_text("stability.csv", &csv)?;
        let pass = rep.pass;
        self.finish(serde_json::to_value(&rep).expect("report serializes"), Some(pass))
    }

    fn hypcheck(mut self) -> Outcome<()> {
        let c = &self.cfg;
        let h = &c.study.hypcheck;
        let vs: Vec<_> = h.v_samples.iter().map(|v| geom::from_slice(v)).collect();
        let hyp = hypothesis_check(&c.region, &vs, &h.eps_grid, h.n_samples, c.seed)?;
        let lemmas = if h.lemma_samples > 0 {
            Some(lemma_suite(&c.region, c.study.reference, h.lemma_samples, derive_seed(c.seed, 1))?)
        } else {
            None
        };
        let d = c.region.dim;
        let mut csv = String::from("study,");
        csv += &(1..=d).map(|k| format!("v{k}")).collect::<Vec<_>>().join(",");
        csv += ",eps,volume,std_err\n";
        for f in &hyp.volume_fits {
            let v: Vec<String> = f.v[..d].iter().map(|&x| io::fmt(x)).collect();
            for k in 0..f.eps.len() {
                csv += &format!("hypcheck,{},{},{},{}\n", v.join(","), io::fmt(f.eps[k]), io::fmt(f.volume[k]), io::fmt(f.std_err[k]));
            }
        }
        self.write_text("volume_fits.csv", &csv)?;
        let pass = hyp.pass && lemmas.as_ref().is_none_or(|l| l.pass);
        self.finish(json!({ "hypotheses": hyp, "lemmas": lemmas, "pass": pass }), Some(pass))
    }

    fn lipschitz(self) -> Outcome<()> {
        let c = &self.cfg;
        let setup = c.setup()?;
        let params = c.study.reference;
        let reference = reference_solution(&c.study.initial, &setup, c.study.n_ref, params, &[c.dynamics.t_end], c.seed)?;
        let snap = reference.last();
        let l = &c.study.lipschitz;
        let table = MollifiedTable::new(c.region, params, snap.max_speed() + params.eta + l.separation)?;
        let probes = probe_pairs(snap, 2 * l.probes, l.separation, derive_seed(c.seed, 2));
        let rep = lipschitz_diagnostic(&setup.force, snap, &table, &probes)?;
        let pass = rep.pass;
        let summary = json!({ "n_ref": c.study.n_ref, "t": c.dynamics.t_end, "report": rep });
        self.finish(summary, Some(pass))
    }
}
