//! A complete run from a JSON config, as the command-line tool does it.

use oilforest::experiment::{execute, Command, ExperimentConfig};

const CONFIG: &str = r#"{
    "data": {"synth": {"dgp": {"n_rows": 1500}, "price_path": true}},
    "forest": {"n_trees": 100, "min_split_size": 10, "seed": 2022},
    "horizons": [22, 44, 66],
    "pdp": [{"features": ["covid"]}, {"features": ["vix", "ust2y"], "points": 15}],
    "output_dir": "oilforest-run"
}"#;

fn main() {
    let mut cfg: ExperimentConfig = serde_json::from_str(CONFIG).expect("valid config");
    cfg.resolve_paths(&std::env::temp_dir());
    match execute(Command::Run, &cfg) {
        Ok(files) => {
            for f in files {
                println!("{}", cfg.output_dir.join(f).display());
            }
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
