use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{ensure, Context, Result};
use csimon_core::dataset::{derive_seed, pose_inputs, walking_scenarios};
use csimon_core::dsp::pearson;
use csimon_core::features::NetInput;
use csimon_core::io::{read_pgm, read_trace, write_gray_pgm, write_pgm, write_trace};
use csimon_core::net::{
    pcs_suite, read_checkpoint, skeleton_distance, train_with_progress, write_checkpoint,
    Architecture, TrainConfig,
};
use csimon_core::respiration::track;
use csimon_core::sanitize::sanitize as sanitize_trace;
use csimon_core::sim::{render_skeleton, simulate, GroundTruth, Scenario};
use csimon_core::{PoseFigure, SUBCARRIERS};

use crate::files::{
    create_dir, format_input, index_name, list_files, read_column, read_input, require_dir,
    require_file, write, RunSummary, FIGURES_DIR, INPUTS_DIR,
};

const DISPLACEMENT_COLUMN: &str = "chest_displacement_m";

fn truth_csv(truth: &GroundTruth) -> String {
    let reflectors = truth.reflector_xy.first().map_or(0, Vec::len);
    let mut out = format!("t_s,{DISPLACEMENT_COLUMN}");
    for r in 0..reflectors {
        let _ = write!(out, ",x{r}_m,y{r}_m");
    }
    out.push('\n');
    for (i, d) in truth.chest_displacement.iter().enumerate() {
        let _ = write!(out, "{},{d:.16e}", i as f64 / truth.sample_rate_hz);
        for xy in &truth.reflector_xy[i] {
            let _ = write!(out, ",{:.16e},{:.16e}", xy[0], xy[1]);
        }
        out.push('\n');
    }
    out
}

pub fn simulate_scenario(path: &Path, seed: Option<u64>, out_dir: &Path) -> Result<()> {
    require_file(path)?;
    let mut scenario =
        Scenario::load(path).with_context(|| format!("loading scenario {}", path.display()))?;
    if let Some(seed) = seed {
        scenario.seed = derive_seed(seed, "simulate");
    }
    let (trace, truth) = simulate(&scenario)?;
    create_dir(out_dir)?;
    let mut summary = RunSummary::new("simulate", seed);
    write_trace(&trace, out_dir.join("trace.csv"))?;
    summary.artifact("trace.csv");
    write(&out_dir.join("truth.csv"), truth_csv(&truth))?;
    summary.artifact("truth.csv");
    write(&out_dir.join("scenario.toml"), scenario.to_toml())?;
    summary.artifact("scenario.toml");
    summary.result("frames", trace.len() as i64);
    summary.result("label", scenario.label.clone());
    summary.write(out_dir)?;
    println!("simulated {} frames into {}", trace.len(), out_dir.display());
    Ok(())
}

pub fn simulate_walk(duration_s: f64, seed: u64, out_dir: &Path) -> Result<()> {
    ensure!(duration_s > 0.0, "duration must be positive, got {duration_s}");
    let scenarios = walking_scenarios(seed, duration_s);
    create_dir(&out_dir.join(FIGURES_DIR))?;
    let mut summary = RunSummary::new("simulate", Some(seed));
    let mut frames = 0;
    for (r, scenario) in scenarios.iter().enumerate() {
        let (trace, truth) = simulate(scenario)?;
        let name = format!("rx{}.csv", r + 1);
        write_trace(&trace, out_dir.join(&name))?;
        summary.artifact(name);
        write(&out_dir.join(format!("rx{}.toml", r + 1)), scenario.to_toml())?;
        summary.artifact(format!("rx{}.toml", r + 1));
        if r == 0 {
            write(&out_dir.join("truth.csv"), truth_csv(&truth))?;
            summary.artifact("truth.csv");
            let figure_frames = truth.skeleton_params.iter().step_by(csimon_core::features::FRAMES_PER_FIGURE);
            for (k, params) in figure_frames.enumerate() {
                let name = format!("{FIGURES_DIR}/{}", index_name(k, "pgm"));
                write_pgm(&render_skeleton(params)?, out_dir.join(&name))?;
                summary.artifact(name);
            }
        }
        frames = trace.len();
    }
    summary.result("frames", frames as i64);
    summary.write(out_dir)?;
    println!("simulated a {duration_s} s walk ({frames} frames per receiver) into {}", out_dir.display());
    Ok(())
}

pub fn sanitize(trace_path: &Path, out_dir: &Path) -> Result<()> {
    require_file(trace_path)?;
    let trace = read_trace(trace_path).with_context(|| format!("reading {}", trace_path.display()))?;
    let streams = sanitize_trace(&trace, 0..trace.len())?;
    create_dir(out_dir)?;
    let mut csv = String::from("frame,sc,amp_first,amp_ref,rel_phase,cm_re,cm_im\n");
    for f in 0..streams.frames() {
        for k in 0..SUBCARRIERS {
            let cm = streams.cm[k][f];
            let _ = writeln!(
                csv,
                "{f},{k},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                streams.amp_first[k][f], streams.amp_ref[k][f], streams.rel_phase[k][f], cm.re, cm.im
            );
        }
    }
    write(&out_dir.join("streams.csv"), csv)?;
    let mut summary = RunSummary::new("sanitize", None);
    summary.artifact("streams.csv");
    let sel = streams.selection;
    summary.result("reference_antenna", sel.reference as i64);
    summary.result("first_antenna", sel.first as i64);
    summary.result("discarded_antenna", sel.discarded as i64);
    summary.result("gamma", streams.adjustment.gamma);
    summary.result("delta", streams.adjustment.delta);
    summary.write(out_dir)?;
    println!(
        "antennas: reference {}, first {}, discarded {}",
        sel.reference, sel.first, sel.discarded
    );
    Ok(())
}

pub fn posemap(traces: &[PathBuf], truth: Option<&Path>, stride: usize, out_dir: &Path) -> Result<()> {
    ensure!(traces.len() == 2, "posemap needs exactly two --trace files, got {}", traces.len());
    for t in traces {
        require_file(t)?;
    }
    if let Some(dir) = truth {
        require_dir(dir)?;
    }
    let rx1 = read_trace(&traces[0]).with_context(|| format!("reading {}", traces[0].display()))?;
    let rx2 = read_trace(&traces[1]).with_context(|| format!("reading {}", traces[1].display()))?;
    let samples = pose_inputs(&rx1, &rx2, stride)?;
    create_dir(&out_dir.join(INPUTS_DIR))?;
    create_dir(&out_dir.join("maps"))?;
    if truth.is_some() {
        create_dir(&out_dir.join(FIGURES_DIR))?;
    }
    let mut summary = RunSummary::new("posemap", None);
    for s in &samples {
        let name = format!("{INPUTS_DIR}/{}", index_name(s.figure_index, "csv"));
        write(&out_dir.join(&name), format_input(&s.input))?;
        summary.artifact(name);
        for (r, map) in s.maps.iter().enumerate() {
            for (channel, rows) in [("amp", &map.amp_channel), ("phase", &map.phase_channel)] {
                let name = format!("maps/{:05}_rx{}_{channel}.pgm", s.figure_index, r + 1);
                write_gray_pgm(rows, out_dir.join(&name))?;
                summary.artifact(name);
            }
        }
        if let Some(dir) = truth {
            let src = dir.join(index_name(s.figure_index, "pgm"));
            require_file(&src)?;
            let figure = read_pgm(&src).with_context(|| format!("reading {}", src.display()))?;
            let name = format!("{FIGURES_DIR}/{}", index_name(s.figure_index, "pgm"));
            write_pgm(&figure, out_dir.join(&name))?;
            summary.artifact(name);
        }
    }
    summary.result("samples", samples.len() as i64);
    summary.write(out_dir)?;
    println!("built {} network inputs into {}", samples.len(), out_dir.display());
    Ok(())
}

/// Inputs of a dataset directory with their file stems, in name order.
fn dataset_inputs(dataset: &Path) -> Result<Vec<(String, NetInput)>> {
    require_dir(dataset)?;
    let files = list_files(&dataset.join(INPUTS_DIR), "csv")?;
    ensure!(!files.is_empty(), "no inputs in {}", dataset.join(INPUTS_DIR).display());
    files
        .iter()
        .map(|p| {
            let stem = p.file_stem().expect("listed file").to_string_lossy().into_owned();
            Ok((stem, read_input(p)?))
        })
        .collect()
}

pub fn train(
    dataset: &Path,
    epochs: usize,
    lr: f64,
    batch: usize,
    seed: u64,
    architecture: Architecture,
    out_dir: &Path,
) -> Result<()> {
    let inputs = dataset_inputs(dataset)?;
    let mut pairs = Vec::with_capacity(inputs.len());
    for (stem, input) in inputs {
        let fig_path = dataset.join(FIGURES_DIR).join(format!("{stem}.pgm"));
        require_file(&fig_path)?;
        let figure = read_pgm(&fig_path).with_context(|| format!("reading {}", fig_path.display()))?;
        pairs.push((input, figure));
    }
    let config = TrainConfig {
        epochs,
        learning_rate: lr,
        batch_size: batch,
        seed: derive_seed(seed, "train"),
        architecture,
        ..TrainConfig::default()
    };
    let outcome = train_with_progress(&pairs, &config, |epoch, loss| {
        eprintln!("epoch {:>4}  loss {loss:.6}", epoch + 1);
    })?;
    create_dir(out_dir)?;
    let mut summary = RunSummary::new("train", Some(seed));
    write_checkpoint(&outcome.params, out_dir.join("checkpoint.bin"))?;
    summary.artifact("checkpoint.bin");
    let mut losses = String::from("epoch,loss\n");
    for (e, l) in outcome.epoch_losses.iter().enumerate() {
        let _ = writeln!(losses, "{},{l:.16e}", e + 1);
    }
    write(&out_dir.join("losses.csv"), losses)?;
    summary.artifact("losses.csv");
    summary.result("samples", pairs.len() as i64);
    summary.result("epochs", epochs as i64);
    if let Some(&last) = outcome.epoch_losses.last() {
        summary.result("final_loss", last);
    }
    summary.result("parameters", outcome.params.parameter_count() as i64);
    summary.write(out_dir)?;
    println!("trained on {} pairs; checkpoint in {}", pairs.len(), out_dir.display());
    Ok(())
}

pub fn infer(checkpoint: &Path, dataset: &Path, out_dir: &Path) -> Result<()> {
    require_file(checkpoint)?;
    let params = read_checkpoint(checkpoint).with_context(|| format!("reading {}", checkpoint.display()))?;
    let inputs = dataset_inputs(dataset)?;
    create_dir(&out_dir.join("predictions"))?;
    let mut summary = RunSummary::new("infer", None);
    for (stem, input) in &inputs {
        let name = format!("predictions/{stem}.pgm");
        write_pgm(&params.predict(input)?, out_dir.join(&name))?;
        summary.artifact(name);
    }
    summary.result("samples", inputs.len() as i64);
    summary.write(out_dir)?;
    println!("predicted {} figures into {}", inputs.len(), out_dir.join("predictions").display());
    Ok(())
}

fn evaluation_table(rows: &[(f64, f64)], samples: usize, mean_distance: f64) -> String {
    let mut header = format!("{:>8}", "samples");
    let mut values = format!("{samples:>8}");
    for (psi, percent) in rows {
        let label = format!("PCS@{psi}");
        let width = label.len().max(7);
        let _ = write!(header, "  {label:>width$}");
        let _ = write!(values, "  {percent:>width$.2}");
    }
    let _ = write!(header, "  {:>13}", "mean_distance");
    let _ = write!(values, "  {mean_distance:>13.2}");
    format!("{header}\n{values}\n")
}

pub fn evaluate(pred_dir: &Path, truth_dir: &Path, psi: &[f64], out_dir: &Path) -> Result<()> {
    ensure!(!psi.is_empty(), "at least one --psi value is required");
    if let Some(bad) = psi.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        anyhow::bail!("psi values must be positive, got {bad}");
    }
    require_dir(truth_dir)?;
    let files = list_files(pred_dir, "pgm")?;
    ensure!(!files.is_empty(), "no predicted figures in {}", pred_dir.display());
    let mut names = Vec::with_capacity(files.len());
    let mut preds: Vec<PoseFigure> = Vec::with_capacity(files.len());
    let mut gts: Vec<PoseFigure> = Vec::with_capacity(files.len());
    for p in &files {
        let name = p.file_name().expect("listed file").to_owned();
        let gt_path = truth_dir.join(&name);
        require_file(&gt_path)?;
        preds.push(read_pgm(p).with_context(|| format!("reading {}", p.display()))?);
        gts.push(read_pgm(&gt_path).with_context(|| format!("reading {}", gt_path.display()))?);
        names.push(name.to_string_lossy().into_owned());
    }
    let mut rows = Vec::with_capacity(psi.len());
    let mut csv = String::from("psi,pcs_percent,mean_distance,samples\n");
    let mut mean_distance = 0.0;
    for &p in psi {
        let s = pcs_suite(&preds, &gts, p)?;
        let _ = writeln!(csv, "{p},{},{},{}", s.percent, s.mean_distance, preds.len());
        rows.push((p, s.percent));
        mean_distance = s.mean_distance;
    }
    let mut distances = String::from("file,distance\n");
    for ((name, pred), gt) in names.iter().zip(&preds).zip(&gts) {
        let _ = writeln!(distances, "{name},{}", skeleton_distance(pred, gt));
    }
    let table = evaluation_table(&rows, preds.len(), mean_distance);
    create_dir(out_dir)?;
    let mut summary = RunSummary::new("evaluate", None);
    write(&out_dir.join("evaluation.csv"), &csv)?;
    summary.artifact("evaluation.csv");
    write(&out_dir.join("evaluation.txt"), &table)?;
    summary.artifact("evaluation.txt");
    write(&out_dir.join("distances.csv"), distances)?;
    summary.artifact("distances.csv");
    for (p, percent) in &rows {
        summary.result(&format!("pcs_{p}"), *percent);
    }
    summary.result("mean_distance", mean_distance);
    summary.write(out_dir)?;
    print!("{table}");
    print!("{csv}");
    Ok(())
}

pub fn breathe(trace_path: &Path, truth: Option<&Path>, out_dir: &Path) -> Result<()> {
    require_file(trace_path)?;
    if let Some(t) = truth {
        require_file(t)?;
    }
    let trace = read_trace(trace_path).with_context(|| format!("reading {}", trace_path.display()))?;
    let report = track(&trace)?;
    let curve = &report.curve;
    let fs = curve.sample_rate_hz;
    create_dir(out_dir)?;
    let mut summary = RunSummary::new("breathe", None);

    let mut csv = String::from("t_s,value\n");
    for (i, v) in curve.samples.iter().enumerate() {
        let _ = writeln!(csv, "{},{v:.16e}", i as f64 / fs);
    }
    write(&out_dir.join("curve.csv"), csv)?;
    summary.artifact("curve.csv");

    let mut csv = String::from("index,t_s\n");
    for &i in &report.apnea.peak_indices {
        let _ = writeln!(csv, "{i},{}", i as f64 / fs);
    }
    write(&out_dir.join("peaks.csv"), csv)?;
    summary.artifact("peaks.csv");

    let mut csv = String::from("start_s,end_s\n");
    for (s, e) in &report.apnea.apnea_intervals {
        let _ = writeln!(csv, "{s},{e}");
    }
    write(&out_dir.join("apnea.csv"), csv)?;
    summary.artifact("apnea.csv");

    let mut csv = String::from("source,rnr,peak_freq_hz\n");
    for c in &report.candidates {
        let _ = writeln!(csv, "{},{},{}", c.source, c.rnr, c.peak_freq_hz);
    }
    write(&out_dir.join("candidates.csv"), csv)?;
    summary.artifact("candidates.csv");

    summary.result("source", curve.source.to_string());
    summary.result("peaks", report.apnea.peak_indices.len() as i64);
    summary.result("apnea_intervals", report.apnea.apnea_intervals.len() as i64);
    match report.rate_bpm {
        Some(rate) => {
            summary.result("rate_bpm", rate);
            println!("rate: {rate:.2} bpm from {}", curve.source);
        }
        None => println!("rate: undetermined (fewer than two peaks) from {}", curve.source),
    }
    for (s, e) in &report.apnea.apnea_intervals {
        println!("apnea: {s:.2} s to {e:.2} s");
    }
    if let Some(t) = truth {
        let displacement = read_column(t, DISPLACEMENT_COLUMN)?;
        ensure!(
            displacement.len() == curve.samples.len(),
            "{} has {} rows but the trace has {} frames",
            t.display(),
            displacement.len(),
            curve.samples.len()
        );
        let r = pearson(&curve.samples, &displacement)
            .with_context(|| format!("correlating against {}", t.display()))?;
        summary.result("pearson", r);
        summary.result("pearson_abs", r.abs());
        println!("pearson: {r:.4} (|r| = {:.4})", r.abs());
    }
    summary.write(out_dir)?;
    Ok(())
}
