// The `cltfp` subcommands driven in-process: generate data, train, evaluate,
// ablate and plot.
//
// cargo run --release --example command_line

use cltfp::cli::run;

pub fn run_example() -> cltfp::Result<()> {
    let dir = std::env::temp_dir().join("cltfp_command_line");
    std::fs::create_dir_all(&dir).map_err(|e| cltfp::Error::io(&dir, e))?;
    let path = |name: &str| dir.join(name).to_string_lossy().into_owned();
    let config = path("run.json");
    let mut cfg = cltfp::RunConfig::desk();
    cfg.train.max_epochs = 5;
    std::fs::write(&config, cfg.to_json()).map_err(|e| cltfp::Error::io(&config, e))?;

    let steps: [Vec<String>; 6] = [
        vec!["gen-data", "--p", "6", "--days", "21", "--steps-per-day", "24", "--seed", "3", "--out", &path("flow.csv")],
        vec!["train", "--data", &path("flow.csv"), "--config", &config, "--checkpoint-out", &path("model.json"), "--history-out", &path("history.csv")],
        vec!["evaluate", "--data", &path("flow.csv"), "--checkpoint", &path("model.json"), "--report-out", &path("metrics.csv"), "--pred-out", &path("pred.csv")],
        vec!["ablate", "--data", &path("flow.csv"), "--checkpoint", &path("model.json"), "--lambda", "0.002", "--report-out", &path("ablation.csv")],
        vec!["plot", "--pred-csv", &path("pred.csv"), "--actual-csv", &path("flow.csv"), "--location", "2", "--out", &path("S003.svg")],
        vec!["grad-check", "--seed", "7"],
    ]
    .map(|args| args.into_iter().map(String::from).collect());

    for args in steps {
        println!("$ cltfp {}", args.join(" "));
        let code = run(std::iter::once("cltfp".to_string()).chain(args.clone()));
        if code != 0 {
            return Err(cltfp::Error::Validation(format!("`{}` exited with {code}", args[0])));
        }
    }
    let metrics = std::fs::read_to_string(path("metrics.csv")).map_err(|e| cltfp::Error::io(&dir, e))?;
    print!("{metrics}");
    Ok(())
}

fn main() {
    run_example().unwrap();
}
