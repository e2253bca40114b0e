//! Load a JSON experiment config, run its sweep on a worker pool and print
//! the rows. Any config under `examples/configs` works; the CLI runs the
//! same configs with `gpia sweep --config FILE --jobs J`.
//!
//! Usage: experiment_sweep [CONFIG] [JOBS]

use gpia::experiment::{Command, Experiment};

fn main() -> gpia::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/sweep.json").into());
    let jobs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let out = std::env::temp_dir().join(format!("gpia-sweep-{}", std::process::id()));
    let exp = Experiment::load(&path)?.with_output_dir(&out);
    println!("config hash {}", exp.config_hash());
    let manifest = exp.run(&Command::Sweep { jobs })?;
    for line in &manifest.summary {
        println!("{line}");
    }
    println!("{:.1} s, outputs {:?} in {}", manifest.wall_clock_secs, manifest.outputs, out.display());
    Ok(())
}
