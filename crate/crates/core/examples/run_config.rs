//! Runs a JSON experiment config (or a built-in recipe) and writes the CSV
//! and metadata files, like `tddgeom run`.
//!
//! cargo run --release --example run_config -- my.json
//! cargo run --release --example run_config -- --recipe fig1-isr-dl

use std::path::Path;

use tddgeom::experiment::{dump_config, load_config, recipe, resolve_out_dir, run, ExperimentConfig};

fn main() -> tddgeom::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let configs = match args.as_slice() {
        [flag, name] if flag == "--recipe" => recipe(name)?,
        [path] => vec![load_config(Path::new(path))?],
        _ => {
            let cfg = ExperimentConfig { name: "default".into(), ..ExperimentConfig::default() };
            println!("no config given, running the defaults:\n{}", dump_config(&cfg));
            vec![cfg]
        }
    };
    for cfg in configs {
        let out = run(&cfg, &resolve_out_dir(None, &cfg))?;
        println!("{} -> {}", cfg.name, out.csv.display());
        println!("{}", out.table.header.join("  "));
        for row in out.table.rows.iter().take(5) {
            println!("{row:?}");
        }
    }
    Ok(())
}
