use std::io::Write;
use std::path::{Path, PathBuf};

use tdnnas::io::bin::write_file;
use tdnnas::io::{
    report_csv, report_markdown, report_rows, save_trajectory, Checkpoint, Config, Dtype, SpecFile,
};
use tdnnas::numcore::{streams, Rng};
use tdnnas::search::{
    derive_architecture, prepare_split, retrain, retrain_seed, run_search, default_system_id, Method,
    RunOutput, RunRecord,
};
use tdnnas::supernet::ArchWeights;
use tdnnas::tasks::{evaluate, load_dataset, save_dataset, Dataset};
use tdnnas::tdnnf::{ModelParams, Sequence};
use tdnnas::{Error, Result};

use crate::{Command, Common, DataArgs};

/// Effective configuration: the file (or defaults) with command-line
/// overrides applied, and the output directory.
fn load_config(common: &Common) -> Result<(Config, PathBuf)> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        cfg.search.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output.dir = out.clone();
    }
    cfg.validate()?;
    let out = cfg.output.dir.clone();
    Ok((cfg, out))
}

fn check_dataset(cfg: &Config, d: &Dataset, path: &Path) -> Result<()> {
    let g = cfg.geometry();
    if d.features != g.input_dim || d.classes != g.classes {
        return Err(Error::Format {
            path: path.display().to_string(),
            msg: format!(
                "dataset has {} features / {} classes, configuration expects {} / {}",
                d.features, d.classes, g.input_dim, g.classes
            ),
        });
    }
    Ok(())
}

/// Training data and optional test data: from files when given, otherwise
/// generated from the task section.
fn load_data(cfg: &Config, args: &DataArgs) -> Result<(Dataset, Option<Dataset>)> {
    let (train, test) = match &args.data {
        Some(p) => {
            let d = load_dataset(p)?;
            check_dataset(cfg, &d, p)?;
            (d, None)
        }
        None => (cfg.task.train_data()?, Some(cfg.task.test_data()?)),
    };
    let test = match &args.test {
        Some(p) => {
            let d = load_dataset(p)?;
            check_dataset(cfg, &d, p)?;
            Some(d)
        }
        None => test,
    };
    Ok((train, test))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn check_hash(found: &str, cfg: &Config, path: &Path) -> Result<()> {
    if found != cfg.hash() {
        return Err(Error::Format {
            path: path.display().to_string(),
            msg: format!(
                "written under config {found}, current config hashes to {}; \
                 pass the config.toml saved next to it",
                cfg.hash()
            ),
        });
    }
    Ok(())
}

fn model_checkpoint(params: &ModelParams, hash: &str) -> Checkpoint {
    let mut ck = Checkpoint::new(hash);
    ck.add_model(params, Dtype::F64);
    ck
}

/// Writes every artifact of a run and prints a summary.
fn write_run(cfg: &Config, out_dir: &Path, out: &mut RunOutput, stdout: &mut dyn Write) -> Result<()> {
    let hash = cfg.hash();
    write_file(&out_dir.join("config.toml"), cfg.to_toml().as_bytes())?;
    if let Some(search) = &out.search {
        let mut ck = model_checkpoint(&search.net.params, &hash);
        ck.add_arch(&search.arch);
        ck.save(&out_dir.join("supernet.ck"))?;
        if let Some(p) = &search.stage1_params {
            let mut s1 = model_checkpoint(p, &hash);
            s1.add_arch(&ArchWeights::uniform(&search.net.space));
            s1.save(&out_dir.join("stage1.ck"))?;
        }
        save_trajectory(&out_dir.join("trajectory.jsonl"), &search.trajectory, &hash)?;
        out.record.trajectory = Some("trajectory.jsonl".into());
    }
    if !out.candidates.is_empty() {
        let mut w = String::from("rank,index,architecture,params,heldout_accuracy,heldout_loss,test_accuracy\n");
        for (i, c) in out.candidates.iter().enumerate() {
            w.push_str(&format!(
                "{},{},\"{}\",{},{:.6},{:.6},{}\n",
                i + 1,
                c.index.map_or_else(String::new, |x| x.to_string()),
                tdnnas::io::format_spec(&c.spec),
                c.param_count,
                c.heldout.accuracy,
                c.heldout.mean_loss,
                c.test.as_ref().map_or_else(String::new, |m| format!("{:.6}", m.accuracy)),
            ));
        }
        write_file(&out_dir.join("candidates.csv"), w.as_bytes())?;
    }
    SpecFile::new(&out.record.spec, &hash).save(&out_dir.join("spec.json"))?;
    model_checkpoint(&out.retrained.params, &hash).save(&out_dir.join("model.ck"))?;
    out.record.save(&out_dir.join("record.json"))?;
    let r = &out.record;
    let _ = writeln!(stdout, "system:       {}", r.system);
    let _ = writeln!(stdout, "architecture: {}", r.architecture);
    let _ = writeln!(stdout, "params:       {}", r.param_count);
    let _ = writeln!(stdout, "heldout acc:  {:.4}", r.heldout.accuracy);
    if let Some(t) = r.test_accuracy() {
        let _ = writeln!(stdout, "test acc:     {t:.4}");
    }
    let _ = writeln!(stdout, "artifacts in  {}", out_dir.display());
    Ok(())
}

fn run_method(
    mut cfg: Config,
    out_dir: PathBuf,
    data: &DataArgs,
    system: Option<String>,
    stdout: &mut dyn Write,
) -> Result<()> {
    cfg.output.dir = out_dir.clone();
    let (train, test) = load_data(&cfg, data)?;
    let split = prepare_split(&train, &cfg.search)?;
    let space = cfg.search_space();
    let system = system.unwrap_or_else(|| default_system_id(&cfg.search));
    let test_seqs: Option<&[Sequence]> = test.as_ref().map(|d| d.sequences.as_slice());
    let mut out = run_search(&space, &split, test_seqs, &cfg.search, &system, &cfg.hash())?;
    write_run(&cfg, &out_dir, &mut out, stdout)
}

pub fn execute(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::GenData { common } => {
            let (mut cfg, out) = load_config(&common)?;
            if let Some(seed) = common.seed {
                cfg.task.seed = seed;
            }
            let train = cfg.task.train_data()?;
            let test = cfg.task.test_data()?;
            save_dataset(&train, &out.join("train.ds"))?;
            save_dataset(&test, &out.join("test.ds"))?;
            let _ = writeln!(
                stdout,
                "wrote {} train and {} test sequences ({} / {} supervised frames) to {}",
                train.sequences.len(),
                test.sequences.len(),
                train.supervised_frames(),
                test.supervised_frames(),
                out.display()
            );
            Ok(())
        }
        Command::Search { common, data, method, eta, system } => {
            let (mut cfg, out) = load_config(&common)?;
            if let Some(m) = method {
                cfg.search.method = m;
            }
            if let Some(e) = eta {
                cfg.search.eta = e;
            }
            cfg.validate()?;
            run_method(cfg, out, &data, system, stdout)
        }
        Command::RandomSearch { common, data, samples } => {
            let (mut cfg, out) = load_config(&common)?;
            cfg.search.method = Method::Random;
            if let Some(n) = samples {
                cfg.search.random_samples = n;
            }
            cfg.validate()?;
            run_method(cfg, out, &data, None, stdout)
        }
        Command::Enumerate { common, data, cap } => {
            let (mut cfg, out) = load_config(&common)?;
            cfg.search.method = Method::Exhaustive;
            if let Some(c) = cap {
                cfg.search.oracle_cap = c;
            }
            cfg.validate()?;
            let space = cfg.search_space();
            let size = space.size();
            if space.size_u64().map_or(true, |s| s > cfg.search.oracle_cap) {
                return Err(Error::SpaceTooLarge {
                    size: size.to_string(),
                    cap: cfg.search.oracle_cap,
                });
            }
            let _ = writeln!(stdout, "enumerating {size} candidates");
            run_method(cfg, out, &data, None, stdout)
        }
        Command::Derive { common, checkpoint } => {
            let (cfg, out) = load_config(&common)?;
            let ck = Checkpoint::load(&checkpoint)?;
            check_hash(&ck.config_hash, &cfg, &checkpoint)?;
            let space = cfg.search_space();
            let mut arch = ArchWeights::uniform(&space);
            ck.load_arch_into(&mut arch)?;
            let spec = derive_architecture(&arch, &space)?;
            let file = SpecFile::new(&spec, &cfg.hash());
            file.save(&out.join("spec.json"))?;
            let _ = writeln!(stdout, "{}", file.architecture);
            Ok(())
        }
        Command::Train { common, data, spec } => {
            let (cfg, out) = load_config(&common)?;
            let file = SpecFile::load(&spec)?;
            let spec = file.spec();
            if spec.geometry != cfg.geometry() {
                return Err(Error::InvalidConfig(format!(
                    "spec geometry {:?} does not match the configuration {:?}",
                    spec.geometry,
                    cfg.geometry()
                )));
            }
            let (train, test) = load_data(&cfg, &data)?;
            let split = prepare_split(&train, &cfg.search)?;
            let space = cfg.search_space();
            let seed = retrain_seed(&space, &spec, cfg.search.seed);
            let test_seqs: Option<&[Sequence]> = test.as_ref().map(|d| d.sequences.as_slice());
            let r = retrain(&spec, &split, test_seqs, &cfg.search, seed)?;
            let hash = cfg.hash();
            write_file(&out.join("config.toml"), cfg.to_toml().as_bytes())?;
            model_checkpoint(&r.params, &hash).save(&out.join("model.ck"))?;
            SpecFile::new(&spec, &hash).save(&out.join("spec.json"))?;
            let metrics = serde_json::json!({
                "config_hash": hash,
                "architecture": file.architecture,
                "param_count": r.param_count,
                "heldout": r.heldout,
                "test": r.test,
                "epochs": r.epochs,
            });
            write_json(&out.join("metrics.json"), &metrics)?;
            let _ = writeln!(stdout, "architecture: {}", file.architecture);
            let _ = writeln!(stdout, "params:       {}", r.param_count);
            let _ = writeln!(stdout, "heldout acc:  {:.4}", r.heldout.accuracy);
            if let Some(t) = &r.test {
                let _ = writeln!(stdout, "test acc:     {:.4}", t.accuracy);
            }
            Ok(())
        }
        Command::Eval { common, data, spec, checkpoint } => {
            let (cfg, _) = load_config(&common)?;
            let spec = SpecFile::load(&spec)?.spec();
            let ck = Checkpoint::load(&checkpoint)?;
            check_hash(&ck.config_hash, &cfg, &checkpoint)?;
            let mut params = ModelParams::init(&spec, &mut Rng::new(0, streams::INIT))?;
            ck.load_model_into(&mut params)?;
            let (train, test) = load_data(&cfg, &data)?;
            let d = test.unwrap_or(train);
            let m = evaluate(&spec, &params, &d.sequences, cfg.search.loss)?;
            let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&m).expect("metrics serialize"));
            Ok(())
        }
        Command::Report { records, out } => {
            let records = records
                .iter()
                .map(|p| RunRecord::load(p))
                .collect::<Result<Vec<_>>>()?;
            let rows = report_rows(&records);
            let dir = out.unwrap_or_else(|| PathBuf::from("."));
            write_file(&dir.join("report.csv"), report_csv(&rows)?.as_bytes())?;
            let md = report_markdown(&rows);
            write_file(&dir.join("report.md"), md.as_bytes())?;
            let _ = write!(stdout, "{md}");
            Ok(())
        }
    }
}
