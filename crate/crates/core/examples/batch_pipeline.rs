//! Runs the command-line stages end to end on a few phantoms in a scratch
//! directory and lists what each stage wrote.

use nullmap::formats::save_cgrid;
use nullmap::simulate::random_body_phantom;
use std::path::Path;

fn run(args: &[&str]) {
    let code = nullmap::cli::run(std::iter::once("nullmap").chain(args.iter().copied()));
    assert_eq!(code, 0, "stage {} failed", args[2]);
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let root = dir.path();
    let p = |rel: &str| root.join(rel).display().to_string();

    std::fs::create_dir(root.join("truth"))?;
    for i in 0..3 {
        let id = format!("case{i}");
        save_cgrid(
            &root.join(format!("truth/{id}.cgrid")),
            &random_body_phantom(50, 50, 1, &id),
        )?;
    }
    std::fs::write(
        root.join("config.json"),
        r#"{
  "mask": {"factor": 3},
  "noise": {"gaussian_sigma": 0.02, "phase_noise_amplitude": 0.2, "seed": 1},
  "plstv": {"max_iters": 150},
  "transform": {"min_component_area": 3},
  "sweep": {"candidates": [0.005, 0.02]}
}"#,
    )?;
    let cfg = p("config.json");
    let c = cfg.as_str();
    run(&[
        "--config",
        c,
        "simulate",
        "--input",
        &p("truth"),
        "--output",
        &p("meas"),
    ]);
    run(&[
        "--config",
        c,
        "sweep-lambda",
        "--meas",
        &p("meas"),
        "--truth",
        &p("truth"),
        "--output",
        &p("sweep"),
    ]);
    run(&[
        "--config",
        c,
        "reconstruct",
        "--method",
        "plstv",
        "--meas",
        &p("meas"),
        "--sweep",
        &p("sweep/sweep.json"),
        "--output",
        &p("recon"),
    ]);
    run(&[
        "--config",
        c,
        "halmap",
        "--recon",
        &p("recon"),
        "--truth",
        &p("truth"),
        "--meas",
        &p("meas"),
        "--output",
        &p("maps"),
    ]);
    run(&[
        "--config",
        c,
        "analyze",
        "--recon",
        &p("recon"),
        "--truth",
        &p("truth"),
        "--halmap",
        &p("maps"),
        "--output",
        &p("analysis"),
    ]);

    for stage in ["meas", "sweep", "recon", "maps", "analysis"] {
        let mut names: Vec<String> = std::fs::read_dir(root.join(stage))?
            .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
            .collect::<std::io::Result<_>>()?;
        names.sort();
        println!("{stage}/: {}", names.join(" "));
    }
    println!(
        "\n{}",
        std::fs::read_to_string(Path::new(&p("analysis")).join("ssim_table.csv"))?
    );
    Ok(())
}
