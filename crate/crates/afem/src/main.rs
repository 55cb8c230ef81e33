use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use afem::experiments::{ailfem, goafem, lshape, poisson, Linearization, LoopConfig, Run};
use afem::geometry::{load_geometry, write_dir};
use afem_core::refinement::{refine_uniform, Strategy};
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "afem", version, about = "Adaptive finite element experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Dörfler marking parameter
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Stop once a level has this many degrees of freedom
    #[arg(long, default_value_t = 10_000)]
    max_dofs: usize,
    /// Also stop once a level has this many elements
    #[arg(long)]
    max_elements: Option<usize>,
    /// nvb1, nvb (= nvb3), nvb5, rgb or nvbedge
    #[arg(long, default_value = "nvb", value_parser = parse_strategy)]
    strategy: Strategy,
    /// Bundled geometry name or geometry directory
    #[arg(long)]
    geometry: Option<String>,
    /// CSV output file; standard output if omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Zarantonello,
    Kacanov,
    Newton,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Poisson,
    Lshape,
    Goafem,
    Ailfem,
}

#[derive(Subcommand)]
enum Command {
    /// −Δu = 1 on the unit square, P1
    Poisson {
        #[command(flatten)]
        common: Common,
    },
    /// Higher-order run on the L-shape with known singular solution
    Lshape {
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Goal-oriented run with discontinuous data
    Goafem {
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Quasilinear problem with iterative linearization
    Ailfem {
        #[arg(long, value_enum, default_value_t = Method::Zarantonello)]
        method: Method,
        /// Zarantonello damping
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Writes a geometry, optionally after uniform or adaptive refinement,
    /// as a geometry directory
    ExportMesh {
        /// Output directory
        #[arg(long)]
        dir: PathBuf,
        /// Export the final mesh of this experiment instead of a geometry
        #[arg(long, value_enum)]
        experiment: Option<Experiment>,
        #[arg(long, default_value_t = 0)]
        uniform: usize,
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long, value_enum, default_value_t = Method::Zarantonello)]
        method: Method,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[command(flatten)]
        common: Common,
    },
}

fn config(common: &Common, order: usize) -> LoopConfig {
    LoopConfig {
        theta: common.theta,
        max_dofs: common.max_dofs,
        max_elements: common.max_elements,
        strategy: common.strategy,
        order,
        geometry: common.geometry.clone(),
        ..LoopConfig::default()
    }
}

fn linearization(method: Method, delta: f64) -> Linearization {
    match method {
        Method::Zarantonello => Linearization::Zarantonello { delta },
        Method::Kacanov => Linearization::Kacanov,
        Method::Newton => Linearization::Newton,
    }
}

fn write_history(run: &Run, out: &Option<PathBuf>) -> anyhow::Result<()> {
    let writer: Box<dyn Write> = match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    run.history.write_csv(writer)?;
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let (run, out) = match cli.command {
        Command::Poisson { common } => (poisson(&config(&common, 1))?, common.out),
        Command::Lshape { order, common } => (lshape(&config(&common, order))?, common.out),
        Command::Goafem { order, common } => (goafem(&config(&common, order))?, common.out),
        Command::Ailfem { method, delta, common } => {
            if common.theta <= 0.0 || common.theta > 1.0 {
                bail!("theta must lie in (0, 1]");
            }
            (ailfem(&config(&common, 1), linearization(method, delta))?, common.out)
        }
        Command::ExportMesh {
            dir,
            experiment,
            uniform,
            order,
            method,
            delta,
            common,
        } => {
            let mut mesh = match experiment {
                None => load_geometry(common.geometry.as_deref().unwrap_or("unitsquare"))?,
                Some(e) => {
                    let config = config(&common, order);
                    let run = match e {
                        Experiment::Poisson => poisson(&config)?,
                        Experiment::Lshape => lshape(&config)?,
                        Experiment::Goafem => goafem(&config)?,
                        Experiment::Ailfem => ailfem(&config, linearization(method, delta))?,
                    };
                    if common.out.is_some() {
                        write_history(&run, &common.out)?;
                    }
                    run.mesh
                }
            };
            refine_uniform(&mut mesh, uniform, common.strategy)?;
            write_dir(&mesh, &dir)?;
            eprintln!(
                "wrote {} vertices, {} elements to {}",
                mesh.n_vertices(),
                mesh.n_elements(),
                dir.display()
            );
            return Ok(());
        }
    };
    write_history(&run, &out)
}
