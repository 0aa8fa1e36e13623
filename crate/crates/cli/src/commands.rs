use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use attrib_core::data::{gen_keyword_task, load_dataset, save_dataset, Dataset, Instance, Vocab};
use attrib_core::distill::{load_target_store, train_student, write_history_csv};
use attrib_core::eval::{
    convergence_curve_with_references, intersection_point, mean_map_mse, objective as eval_objective,
    paper_passes, reference_maps, write_curve_csv, CurveConfig, ObjectiveWeights,
};
use attrib_core::explainers::{empirical_explain_split, explain_split, read_attributions, write_attributions};
use attrib_core::fsio::write_atomic;
use attrib_core::heatmap::write_heatmaps;
use attrib_core::models::{
    evaluate, init_student_from_classifier, load_classifier, load_student, model_checksum, network_checksum,
    save_classifier, save_student, train_classifier as fit_classifier, Architecture, StudentExplainer,
};
use attrib_core::numerics::derive_seed;
use attrib_core::{AttributionMap, ExplainerSpec, Method};
use serde_json::json;

use crate::config::{RunConfig, StudentInit};
use crate::UsageError;

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name: OsString = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn load_split(cfg: &RunConfig) -> Result<(Dataset, Vec<Instance>)> {
    let path = cfg.require(&cfg.dataset, "dataset")?;
    let dataset = load_dataset(path)?;
    let mut instances = dataset.split(cfg.split).to_vec();
    if let Some(n) = cfg.limit {
        instances.truncate(n);
    }
    if instances.is_empty() {
        return Err(UsageError(format!("split {:?} of {} has no instances", cfg.split, path.display())).into());
    }
    Ok((dataset, instances))
}

fn load_maps(path: &Path) -> Result<Vec<AttributionMap>> {
    Ok(read_attributions(path)
        .with_context(|| format!("reading attributions {}", path.display()))?
        .maps)
}

pub fn gen_data(cfg: &RunConfig) -> Result<()> {
    let out = cfg.require(&cfg.out, "out")?;
    let dataset = gen_keyword_task(&cfg.data)?;
    save_dataset(&dataset, out)?;
    write_json(&with_suffix(out, ".meta.json"), &json!({ "run_config": cfg.to_value() }))?;
    println!(
        "wrote {} ({} train / {} validation / {} test, T={})",
        out.display(),
        dataset.train.len(),
        dataset.validation.len(),
        dataset.test.len(),
        dataset.seq_len
    );
    Ok(())
}

pub fn train_classifier(cfg: &RunConfig) -> Result<()> {
    let out = cfg.require(&cfg.out, "out")?;
    let dataset = load_dataset(cfg.require(&cfg.dataset, "dataset")?)?;
    let arch = Architecture {
        vocab_size: dataset.vocab.size,
        seq_len: dataset.seq_len,
        embed_dim: cfg.arch.embed_dim,
        hidden: cfg.arch.hidden.clone(),
        pooling: cfg.arch.pooling,
    };
    let (f, history) = fit_classifier(arch, 2, &dataset, &cfg.classifier)?;
    let metrics = evaluate(&f, &dataset.test)?;
    save_classifier(&f, cfg.to_value(), out)?;
    write_json(
        &with_suffix(out, ".metrics.json"),
        &json!({
            "run_config": cfg.to_value(),
            "classifier_checksum": model_checksum(&f),
            "test": metrics,
            "history": history,
        }),
    )?;
    println!(
        "test accuracy {:.4}, weighted F1 {:.4} ({} test instances)",
        metrics.accuracy,
        metrics.weighted_f1,
        dataset.test.len()
    );
    Ok(())
}

pub fn explain(cfg: &RunConfig) -> Result<()> {
    let out = cfg.require(&cfg.out, "out")?;
    let (dataset, instances) = load_split(cfg)?;
    let (maps, classifier_checksum, student_checksum) = if cfg.method == Method::Empirical {
        let student = load_student(cfg.require(&cfg.student, "student")?)?;
        let maps = empirical_explain_split(&student, &instances)?;
        (maps, String::new(), Some(network_checksum(student.network())))
    } else {
        let f = load_classifier(cfg.require(&cfg.model, "model")?)?;
        let spec = ExplainerSpec::new(cfg.method, cfg.samples)
            .with_accounting(cfg.accounting)
            .with_pad_id(dataset.vocab.pad);
        let maps = explain_split(&f, &spec, &instances, cfg.seed)?;
        (maps, model_checksum(&f), None)
    };
    let fwd: u64 = maps.iter().map(|m| m.fwd_passes).sum();
    let bwd: u64 = maps.iter().map(|m| m.bwd_passes).sum();
    let paper: u64 = maps.iter().map(paper_passes).sum();
    let mut header = json!({
        "method": cfg.method,
        "samples": if cfg.method == Method::Empirical { 0 } else { cfg.samples },
        "seed": cfg.seed,
        "classifier_checksum": classifier_checksum,
        "class_policy": "predicted",
        "count": maps.len(),
        "split": cfg.split,
        "accounting": cfg.accounting,
        "totals": {
            "fwd_passes": fwd,
            "bwd_passes": bwd,
            "passes": fwd + bwd,
            "passes_paper_accounting": paper,
        },
        "run_config": cfg.to_value(),
    });
    if let Some(sum) = student_checksum {
        header["student_checksum"] = json!(sum);
    }
    write_attributions(out, Some(header), &maps)?;
    println!(
        "explained {} instances with {}: {fwd} forward + {bwd} backward passes ({} accounting), {:.1} per instance",
        maps.len(),
        cfg.method,
        cfg.accounting,
        (fwd + bwd) as f64 / maps.len() as f64
    );
    Ok(())
}

pub fn distill(cfg: &RunConfig) -> Result<()> {
    let out = cfg.require(&cfg.out, "out")?;
    let targets_path = cfg.require(&cfg.targets, "targets")?;
    let f = load_classifier(cfg.require(&cfg.model, "model")?)?;
    let store = load_target_store(targets_path)?;
    if store.is_empty() {
        return Err(UsageError(format!("{} holds no target maps", targets_path.display())).into());
    }
    let checksum = model_checksum(&f);
    if !store.meta.classifier_checksum.is_empty() && store.meta.classifier_checksum != checksum {
        return Err(UsageError(format!(
            "{} was produced by a different classifier (checksum {}, model has {checksum})",
            targets_path.display(),
            store.meta.classifier_checksum
        ))
        .into());
    }
    let init_seed = derive_seed(cfg.seed, 2);
    let student = match cfg.student_init {
        StudentInit::Copy => init_student_from_classifier(&f, init_seed),
        StudentInit::Random => StudentExplainer::random(f.arch().clone(), init_seed)?,
    };
    let (student, history) = train_student(student, &store, &cfg.distill)?;
    save_student(&student, cfg.to_value(), out)?;
    let history_path = with_suffix(out, ".history.csv");
    write_history_csv(&history_path, &history)?;
    write_json(
        &with_suffix(&history_path, ".meta.json"),
        &json!({
            "run_config": cfg.to_value(),
            "targets": {
                "method": store.meta.method,
                "samples": store.meta.samples,
                "seed": store.meta.seed,
                "count": store.len(),
                "classifier_checksum": checksum,
            },
        }),
    )?;
    match history.iter().min_by(|a, b| a.val_mse.total_cmp(&b.val_mse)) {
        Some(best) => println!(
            "trained {} epochs; best validation MSE {:.6e} at epoch {}",
            history.len(),
            best.val_mse,
            best.epoch
        ),
        None => println!("no epochs run"),
    }
    Ok(())
}

pub fn curve(cfg: &RunConfig) -> Result<()> {
    let out = cfg.require(&cfg.out, "out")?;
    if cfg.method == Method::Empirical {
        return Err(UsageError("curves are traced for expensive explainers, not `empirical`".into()).into());
    }
    let curve_cfg = CurveConfig {
        s_reference: cfg.s_reference,
        s_values: cfg.s_values.clone(),
        seed: cfg.seed,
        repeats: cfg.repeats,
        normalization: cfg.normalization,
    };
    curve_cfg.validate()?;
    let (dataset, instances) = load_split(cfg)?;
    let f = load_classifier(cfg.require(&cfg.model, "model")?)?;
    let spec = ExplainerSpec::new(cfg.method, cfg.s_reference)
        .with_accounting(cfg.accounting)
        .with_pad_id(dataset.vocab.pad);
    let references = reference_maps(&f, &spec, &instances, &curve_cfg)?;
    let curve = convergence_curve_with_references(&f, &spec, &instances, &references, &curve_cfg)?;
    write_curve_csv(out, &curve)?;

    let mut meta = json!({
        "run_config": cfg.to_value(),
        "method": curve.method,
        "s_reference": curve.s_reference,
        "instances": instances.len(),
        "classifier_checksum": model_checksum(&f),
    });
    println!("{:>8} {:>14} {:>10}", "s", "mean_mse", "passes");
    for p in &curve.points {
        println!("{:>8} {:>14.6e} {:>10.1}", p.samples, p.mean_mse, p.passes_per_instance);
    }
    if let Some(path) = &cfg.student {
        let student = load_student(path)?;
        let empirical = empirical_explain_split(&student, &instances)?;
        let student_mse = mean_map_mse(&references, &empirical, cfg.normalization)?;
        let s_star = intersection_point(&curve, student_mse);
        meta["student_mse"] = json!(student_mse);
        meta["intersection"] = json!(s_star);
        match s_star {
            Some(s) => println!("student MSE {student_mse:.6e}; intersection at s = {s}"),
            None => println!("student MSE {student_mse:.6e}; no listed s beats the student"),
        }
    }
    write_json(&with_suffix(out, ".meta.json"), &meta)?;
    Ok(())
}

pub fn objective(cfg: &RunConfig) -> Result<()> {
    let targets = load_maps(cfg.require(&cfg.targets, "targets")?)?;
    let candidates = load_maps(cfg.require(&cfg.empirical, "empirical")?)?;
    let weights = ObjectiveWeights::new(cfg.alpha)?;
    let value = eval_objective(&targets, &candidates, weights, cfg.normalization)?;
    println!("objective {value:.17e} (alpha {}, beta {}, {} instances)", weights.alpha(), weights.beta(), targets.len());
    if let Some(out) = &cfg.out {
        write_json(
            out,
            &json!({
                "run_config": cfg.to_value(),
                "alpha": weights.alpha(),
                "beta": weights.beta(),
                "instances": targets.len(),
                "objective": value,
            }),
        )?;
    }
    Ok(())
}

pub fn render(cfg: &RunConfig) -> Result<()> {
    let out = cfg.require(&cfg.out, "out")?;
    let targets = load_maps(cfg.require(&cfg.targets, "targets")?)?;
    let empirical = load_maps(cfg.require(&cfg.empirical, "empirical")?)?;
    let vocab = match &cfg.dataset {
        Some(path) => load_dataset(path)?.vocab,
        None => Vocab::default(),
    };
    write_heatmaps(out, &targets, &empirical, &vocab)?;
    write_json(&with_suffix(out, ".meta.json"), &json!({ "run_config": cfg.to_value(), "documents": targets.len() }))?;
    println!("rendered {} heatmaps to {}", targets.len(), out.display());
    Ok(())
}
