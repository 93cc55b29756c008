//! Driving the command pipeline from code: load a JSON configuration, run a
//! design and a bounds evaluation, and keep the artifacts in a directory.
//!
//! `cargo run --example run_config -- examples/configs/scalar_oracle.json out/`

use std::path::PathBuf;

use covertlqr::cli::{cmd_bounds, cmd_design, Options, RunConfig};

fn main() -> covertlqr::Result<()> {
    let mut args = std::env::args().skip(1);
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let config = args
        .next()
        .map_or_else(|| manifest.join("examples/configs/scalar_oracle.json"), PathBuf::from);
    let out = args
        .next()
        .map_or_else(|| std::env::temp_dir().join("covertlqr-run-config"), PathBuf::from);

    let cfg = RunConfig::load(&config)?;
    let opts = Options {
        out,
        ..Options::default()
    };
    for bundle in [cmd_design(&cfg, &opts)?, cmd_bounds(&cfg, &opts)?] {
        print!("{}", bundle.summary);
        for f in &bundle.files {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}
