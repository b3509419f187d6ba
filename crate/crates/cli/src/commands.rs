use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dialab::corpus::{
    build_vocabulary, corpus_stats, generate_corpus, parse_babi, parse_babi_lenient, serialize_babi, Corpus,
    CorpusConfig, SlotCatalog, Split, SplitSizes, SystemUtterances,
};
use dialab::disfluency::{augment_corpus, measure_rates, parse_sidecar, write_sidecar, AnnotatedCorpus, DisfluencyConfig, EtPolicy};
use dialab::experiment::{
    et_grid, evaluate, parse_records, run_grid, train as train_model, write_records, Dataset, GridConfig, RunKey,
    TrainConfig, TrainOutcome,
};
use dialab::fsio::write_atomic;
use dialab::model::{check_gradients, load_model, save_model, Mode, ModelConfig, Seq2Seq};
use dialab::numerics::GradCheckConfig;
use dialab::probe::{
    attention_alignment, canonical_order, collect_encoder_states, error_taxonomy, probe_slots as run_slot_probes,
    read_states, structure_report, trigger_api_calls, write_states, LabelledGrid, SlotProbeConfig, TriggerPrompt,
    DEFAULT_TAU,
};
use dialab::corpus::{tokens, Vocabulary};

use crate::config::default_data_dir;
use crate::render::{heatmap_ppm, heatmap_svg, slot_curve_svg};
use crate::*;

fn required<T>(v: Option<T>, what: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing {what}")))
}

fn input_file(p: &Path) -> Result<(), CliError> {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("input file {} does not exist", p.display())))
    }
}

fn output_path(p: &Path) -> Result<(), CliError> {
    if p.is_dir() {
        return Err(CliError::Usage(format!("output {} is a directory", p.display())));
    }
    Ok(())
}

fn output_dir(p: &Path) -> Result<(), CliError> {
    if p.exists() && !p.is_dir() {
        return Err(CliError::Usage(format!("output directory {} is a file", p.display())));
    }
    Ok(())
}

fn split_of(path: &Path) -> Split {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    Split::parse(stem)
        .or_else(|| Split::ALL.into_iter().rev().find(|s| stem.starts_with(&format!("{}_", s.name()))))
        .unwrap_or(Split::Test)
}

pub fn sidecar_path(corpus: &Path) -> PathBuf {
    corpus.with_extension("ann")
}

fn read_corpus(path: &Path) -> Result<Corpus, CliError> {
    let text = std::fs::read_to_string(path)?;
    parse_babi(&text, split_of(path)).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// A corpus with its sidecar when one exists; without one it is fluent.
fn read_annotated(path: &Path, sidecar: Option<&Path>, catalog: &SlotCatalog) -> Result<AnnotatedCorpus, CliError> {
    let surface = read_corpus(path)?;
    let default = sidecar_path(path);
    let side = sidecar.unwrap_or(&default);
    if !side.is_file() {
        if sidecar.is_some() {
            return Err(CliError::Usage(format!("annotation file {} does not exist", side.display())));
        }
        return Ok(AnnotatedCorpus::from_fluent(&surface));
    }
    let text = std::fs::read_to_string(side)?;
    parse_sidecar(&text, &surface, catalog).map_err(|e| CliError::Data(format!("{}: {e}", side.display())))
}

fn read_model(path: &Path) -> Result<(Seq2Seq<f32>, Vocabulary), CliError> {
    load_model(path).map_err(|e| match e {
        dialab::Error::Io(_) | dialab::Error::Checkpoint(_) | dialab::Error::Json(_) => {
            CliError::Data(format!("{}: {e}", path.display()))
        }
        other => other.into(),
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    Ok(write_atomic(path, text.as_bytes())?)
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    write_text(path, &s)
}

/// Training settings: the config file's `training` table, the smoke preset,
/// then individual flags.
fn train_config(m: &ModelArgs) -> TrainConfig {
    let mut c = m.training.clone().unwrap_or_else(|| if m.smoke { TrainConfig::smoke() } else { TrainConfig::default() });
    if m.smoke && m.training.is_some() {
        c.model.hidden_dim = 100;
        c.max_epochs = 3;
    }
    if let Some(v) = m.embedding_dim {
        c.model.embedding_dim = v;
    }
    if let Some(v) = m.hidden_dim {
        c.model.hidden_dim = v;
    }
    if let Some(v) = m.epochs {
        c.max_epochs = v;
    }
    if let Some(v) = m.lr {
        c.adam.lr = v;
    }
    c
}

pub fn gen(a: GenArgs) -> Result<(), CliError> {
    let out = a.out.unwrap_or_else(default_data_dir);
    let seed = required(a.seed, "--seed")?;
    output_dir(&out)?;
    let mut sizes = a.sizes.unwrap_or_default();
    if let Some(n) = a.dialogues {
        sizes = SplitSizes { train: n, dev: n, test: n, test_oov: n };
    }
    let cfg = CorpusConfig {
        seed,
        sizes,
        catalog: a.catalog.unwrap_or_default(),
        templates: a.templates.unwrap_or_default(),
    };
    let bundle = generate_corpus(&cfg)?;
    let mut columns = Vec::new();
    for split in Split::ALL {
        let corpus = bundle.get(split);
        let path = out.join(split.file_name());
        write_text(&path, &serialize_babi(corpus))?;
        println!("gen: {} dialogues -> {}", corpus.len(), path.display());
        columns.push(corpus_stats(corpus).to_tsv());
    }
    let mut table = String::from("statistic");
    for split in Split::ALL {
        let _ = write!(table, "\t{split}");
    }
    table.push('\n');
    let rows: Vec<Vec<&str>> = columns.iter().map(|c| c.lines().collect()).collect();
    for (k, line) in rows[0].iter().enumerate() {
        let key = line.split('\t').next().unwrap_or("");
        table.push_str(key);
        for col in &rows {
            let _ = write!(table, "\t{}", col[k].split('\t').nth(1).unwrap_or(""));
        }
        table.push('\n');
    }
    let vocab = build_vocabulary(&bundle.train)?;
    let _ = writeln!(table, "vocabulary_non_reserved\t{}\t\t\t", vocab.non_reserved_len());
    let stats = out.join("stats.tsv");
    write_text(&stats, &table)?;
    println!("gen: statistics -> {}", stats.display());
    Ok(())
}

pub fn augment(a: AugmentArgs) -> Result<(), CliError> {
    let input = required(a.input, "--in")?;
    let seed = required(a.seed, "--seed")?;
    input_file(&input)?;
    let out = a.out.unwrap_or_else(|| {
        let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("corpus");
        input.with_file_name(format!("{stem}_plus.txt"))
    });
    output_path(&out)?;
    if out == input {
        return Err(CliError::Usage("augment output would overwrite its input".into()));
    }
    let mut cfg = a.disfluency.unwrap_or_default();
    if let Some(p) = &a.policy {
        cfg.et_policy = EtPolicy::parse(p).ok_or_else(|| CliError::Usage(format!("unknown policy {p}; use noET, realET or fullET")))?;
    }
    let mut corpus = read_corpus(&input)?;
    if let Some(s) = &a.split {
        corpus.split = Split::parse(s).ok_or_else(|| CliError::Usage(format!("unknown split {s}")))?;
    }
    let aug = augment_corpus(&corpus, &cfg, seed)?;
    let side = sidecar_path(&out);
    write_text(&out, &serialize_babi(&aug.surface()))?;
    write_text(&side, &write_sidecar(&aug))?;
    let r = measure_rates(&aug);
    println!(
        "augment: {} dialogues ({}, {}) -> {} + {}; hesitation {:.3} restart {:.3} correction {:.3}",
        aug.dialogues.len(),
        cfg.et_policy.name(),
        aug.split,
        out.display(),
        side.display(),
        r.hesitation,
        r.restart,
        r.correction
    );
    Ok(())
}

pub fn stats(a: StatsArgs) -> Result<(), CliError> {
    let inputs = required(a.input, "--in")?;
    for p in &inputs {
        input_file(p)?;
        if a.annotations {
            input_file(&sidecar_path(p))?;
        }
    }
    for p in &inputs {
        let text = std::fs::read_to_string(p)?;
        let parse = if a.lenient { parse_babi_lenient } else { parse_babi };
        let corpus = parse(&text, split_of(p)).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
        let s = corpus_stats(&corpus);
        println!("# {}", p.display());
        print!("{}", s.to_tsv());
        if a.annotations {
            let ann = read_annotated(p, None, &SlotCatalog::default())?;
            let r = measure_rates(&ann);
            println!("hesitation_rate\t{:.4}", r.hesitation);
            println!("restart_rate\t{:.4}", r.restart);
            println!("correction_rate\t{:.4}", r.correction);
            println!("editing_term_fraction\t{:.4}", r.et_fraction);
        }
    }
    Ok(())
}

pub fn train(a: TrainArgs) -> Result<(), CliError> {
    let (tr, dev) = (required(a.train, "--train")?, required(a.dev, "--dev")?);
    let out = required(a.out, "--out")?;
    let seed = required(a.seed, "--seed")?;
    input_file(&tr)?;
    input_file(&dev)?;
    output_path(&out)?;
    if let Some(l) = &a.log {
        output_path(l)?;
    }
    let mut cfg = train_config(&a.model);
    if a.no_attention {
        cfg.model.attention = false;
    }
    let (tr_c, dev_c) = (read_corpus(&tr)?, read_corpus(&dev)?);
    println!("train: {} train / {} dev dialogues, E{} H{}, attention {}", tr_c.len(), dev_c.len(), cfg.model.embedding_dim, cfg.model.hidden_dim, cfg.model.attention);
    let outcome = train_model(&cfg, &tr_c, &dev_c, seed, |l| {
        println!("  epoch {:>2}  train {:.4}  dev {:.4}  {:.1}s", l.epoch, l.train_loss, l.dev_loss, l.seconds)
    })?;
    save_model(&out, &outcome.model, &outcome.vocabulary)?;
    if let Some(l) = &a.log {
        let mut s = String::from("epoch\ttrain_loss\tdev_loss\tseconds\n");
        for e in &outcome.log {
            let _ = writeln!(s, "{}\t{}\t{}\t{:.3}", e.epoch, e.train_loss, e.dev_loss, e.seconds);
        }
        write_text(l, &s)?;
    }
    println!("train: best epoch {} -> {}", outcome.best_epoch, out.display());
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<(), CliError> {
    let (model, test) = (required(a.model, "--model")?, required(a.test, "--test")?);
    input_file(&model)?;
    input_file(&test)?;
    for p in a.records.iter().chain(&a.report) {
        output_path(p)?;
    }
    let (m, v) = read_model(&model)?;
    let corpus = read_corpus(&test)?;
    let ev = evaluate(&m, &v, &corpus)?;
    if let Some(p) = &a.records {
        write_text(p, &write_records(&ev.records))?;
    }
    if let Some(p) = &a.report {
        write_json(p, &ev.report)?;
    }
    println!("eval: {} on {} responses", ev.report, ev.records.len());
    Ok(())
}

fn dataset(name: &str, train: &Corpus, dev: &Corpus, test: &Corpus) -> Dataset {
    Dataset { name: name.into(), train: train.clone(), dev: dev.clone(), test: test.clone() }
}

fn augmented(name: &str, fluent: [&Corpus; 3], cfg: &DisfluencyConfig, seed: u64) -> Result<Dataset, CliError> {
    let [tr, dev, te] = fluent.map(|c| augment_corpus(c, cfg, seed).map(|a| a.surface()));
    Ok(dataset(name, &tr?, &dev?, &te?))
}

pub fn grid(a: GridArgs) -> Result<(), CliError> {
    let data = a.data.unwrap_or_else(default_data_dir);
    let seeds = required(a.seeds, "--seeds")?;
    let paths = ["train.txt", "dev.txt", "test.txt"].map(|f| data.join(f));
    for p in &paths {
        input_file(p)?;
    }
    if let Some(p) = &a.out {
        output_path(p)?;
    }
    if let Some(d) = &a.models {
        output_dir(d)?;
    }
    let [tr, dev, te] = [&paths[0], &paths[1], &paths[2]].map(|p| read_corpus(p));
    let (tr, dev, te) = (tr?, dev?, te?);
    let fluent = [&tr, &dev, &te];
    let base = a.disfluency.unwrap_or_default();
    let aug_seed = a.augment_seed.unwrap_or(1);
    let cfg = GridConfig {
        train: train_config(&a.model),
        seeds,
        attention: if a.attention_only || a.et { vec![true] } else { vec![true, false] },
    };
    let models = a.models.clone();
    let mut saved = Vec::new();
    let mut on_model = |k: &RunKey, o: &TrainOutcome| {
        println!("grid: trained {} {} seed {} (best epoch {})", k.train_set, if k.attention { "attention" } else { "no attention" }, k.seed, o.best_epoch);
        if let Some(dir) = &models {
            let p = dir.join(format!("{}_{}_{}.ckpt", k.train_set, if k.attention { "att" } else { "noatt" }, k.seed));
            saved.push(save_model(&p, &o.model, &o.vocabulary));
        }
    };
    let (table, json) = if a.et {
        let sets = EtPolicy::ALL
            .into_iter()
            .map(|p| augmented(p.name(), fluent, &DisfluencyConfig { et_policy: p, ..base.clone() }, aug_seed))
            .collect::<Result<Vec<_>, _>>()?;
        let r = et_grid(&sets, &cfg, &mut on_model)?;
        (r.table(), serde_json::to_value(&r)?)
    } else {
        let sets = vec![dataset("bAbI", &tr, &dev, &te), augmented("bAbI+", fluent, &base, aug_seed)?];
        let r = run_grid(&sets, &cfg, &mut on_model)?;
        (r.table(), serde_json::to_value(&r)?)
    };
    saved.into_iter().collect::<Result<Vec<_>, _>>()?;
    print!("{table}");
    if let Some(p) = &a.out {
        write_json(p, &json)?;
        println!("grid: report -> {}", p.display());
    }
    Ok(())
}

fn probe_inputs(i: &ProbeInput) -> Result<(PathBuf, PathBuf), CliError> {
    let (m, c) = (required(i.model.clone(), "--model")?, required(i.corpus.clone(), "--corpus")?);
    input_file(&m)?;
    input_file(&c)?;
    if let Some(s) = &i.annotations {
        input_file(s)?;
    }
    Ok((m, c))
}

pub fn probe_structure(a: ProbeStructureArgs) -> Result<(), CliError> {
    for p in a.save_states.iter().chain(&a.out) {
        output_path(p)?;
    }
    let data = match &a.states {
        Some(p) => {
            input_file(p)?;
            let f = std::io::BufReader::new(std::fs::File::open(p)?);
            read_states(f).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?
        }
        None => {
            let (m, c) = probe_inputs(&a.input)?;
            let (model, vocab) = read_model(&m)?;
            let corpus = read_annotated(&c, a.input.annotations.as_deref(), &SlotCatalog::default())?;
            collect_encoder_states(&model, &vocab, &corpus)?
        }
    };
    let counts = data.label_counts();
    println!("probe-structure: {} states, label counts {:?}", data.len(), counts);
    if let Some(p) = &a.save_states {
        let mut buf = Vec::new();
        write_states(&mut buf, &data)?;
        write_atomic(p, &buf)?;
        println!("probe-structure: states -> {}", p.display());
    }
    let report = structure_report(&data, &a.probe.unwrap_or_default())?;
    print!("{report}");
    if let Some(p) = &a.out {
        write_text(p, &report.to_string())?;
    }
    Ok(())
}

pub fn probe_slots(a: ProbeSlotsArgs) -> Result<(), CliError> {
    let (m, c) = probe_inputs(&a.input)?;
    for p in a.out.iter().chain(&a.plot) {
        output_path(p)?;
    }
    let catalog = SlotCatalog::default();
    let (model, vocab) = read_model(&m)?;
    let corpus = read_annotated(&c, a.input.annotations.as_deref(), &catalog)?;
    let cfg = SlotProbeConfig {
        probe: a.probe.unwrap_or_default(),
        delay: a.delay.unwrap_or(0),
        include_unmentioned: a.include_unmentioned,
    };
    let report = run_slot_probes(&model, &vocab, &corpus, &catalog, &cfg)?;
    println!("probe-slots: delay {}", report.delay);
    print!("{report}");
    if let Some(p) = &a.out {
        write_json(p, &report)?;
    }
    if let Some(p) = &a.plot {
        write_text(p, &slot_curve_svg(&report, a.cap.unwrap_or(12)))?;
        println!("probe-slots: plot -> {}", p.display());
    }
    Ok(())
}

fn render_to(grid: &LabelledGrid, out: &Path, tau: f64) -> Result<(), CliError> {
    match out.extension().and_then(|e| e.to_str()) {
        Some("svg") => write_text(out, &heatmap_svg(grid, tau)?),
        Some("ppm") => Ok(write_atomic(out, &heatmap_ppm(grid, tau, 16)?)?),
        _ => Err(CliError::Usage(format!("{}: image output must end in .svg or .ppm", out.display()))),
    }
}

pub fn attention_map(a: AttentionMapArgs) -> Result<(), CliError> {
    let tau = a.tau.unwrap_or(DEFAULT_TAU);
    if !(0.0..=1.0).contains(&tau) {
        return Err(CliError::Usage("--tau must lie in [0, 1]".into()));
    }
    let out = required(a.out, "--out")?;
    if let Some(g) = &a.render {
        input_file(g)?;
        output_path(&out)?;
        let grid = LabelledGrid::parse(&std::fs::read_to_string(g)?).map_err(|e| CliError::Data(format!("{}: {e}", g.display())))?;
        render_to(&grid, &out, tau)?;
        println!("attention-map: {}x{} grid -> {}", grid.rows.len(), grid.cols.len(), out.display());
        return Ok(());
    }
    let (m, c) = (required(a.model, "--model")?, required(a.corpus, "--corpus")?);
    input_file(&m)?;
    input_file(&c)?;
    output_dir(&out)?;
    let catalog = SlotCatalog::default();
    let (model, vocab) = read_model(&m)?;
    let corpus = read_corpus(&c)?;
    let (matrix, dumps) = attention_alignment(&model, &vocab, &corpus, &catalog, tau)?;
    let grid = matrix.to_grid();
    write_text(&out.join("alignment.grid"), &grid.to_text())?;
    render_to(&grid, &out.join("alignment.svg"), tau)?;
    render_to(&grid, &out.join("alignment.ppm"), tau)?;
    let keep = a.dumps.unwrap_or(dumps.len()).min(dumps.len());
    for (i, d) in dumps.iter().take(keep).enumerate() {
        write_text(&out.join("dumps").join(format!("{i:05}.grid")), &d.to_text())?;
    }
    println!(
        "attention-map: {} dialogues, {}x{} alignment, {} dumps -> {}",
        dumps.len(),
        grid.rows.len(),
        grid.cols.len(),
        keep,
        out.display()
    );
    Ok(())
}

pub fn trigger(a: TriggerArgs) -> Result<(), CliError> {
    let (m, c) = probe_inputs(&a.input)?;
    if let Some(p) = &a.out {
        output_path(p)?;
    }
    let mut prompt = if a.printed_prompt { TriggerPrompt::printed() } else { TriggerPrompt::default() };
    if let Some(s) = &a.prompt_system {
        prompt.system = tokens(s);
    }
    if let Some(u) = &a.prompt_user {
        prompt.user = tokens(u);
    }
    let catalog = SlotCatalog::default();
    let (model, vocab) = read_model(&m)?;
    let corpus = read_annotated(&c, a.input.annotations.as_deref(), &catalog)?;
    let report = trigger_api_calls(&model, &vocab, &corpus, &prompt, &catalog)?;
    println!("trigger: {report}");
    if let Some(p) = &a.out {
        write_json(p, &report)?;
    }
    Ok(())
}

pub fn taxonomy(a: TaxonomyArgs) -> Result<(), CliError> {
    let records = required(a.records, "--records")?;
    input_file(&records)?;
    if let Some(p) = &a.out {
        output_path(p)?;
    }
    let recs = parse_records(&std::fs::read_to_string(&records)?).map_err(|e| CliError::Data(format!("{}: {e}", records.display())))?;
    let report = error_taxonomy(&recs, &canonical_order(&SystemUtterances::default()));
    print!("taxonomy: {report}");
    if let Some(p) = &a.out {
        write_json(p, &report)?;
    }
    Ok(())
}

pub fn gradcheck(a: GradcheckArgs) -> Result<(), CliError> {
    let tol = a.tol.unwrap_or(1e-3);
    let seed = a.seed.unwrap_or(0);
    let config = ModelConfig {
        embedding_dim: a.embedding_dim.unwrap_or(4),
        hidden_dim: a.hidden_dim.unwrap_or(5),
        vocab_size: a.vocab_size.unwrap_or(12),
        attention: !a.no_attention,
        ..Default::default()
    };
    let mode = if a.dropout { Mode::Train { seed } } else { Mode::Eval };
    let cfg = GradCheckConfig { samples: a.samples.unwrap_or(400), seed, ..Default::default() };
    let r = check_gradients(config, mode, seed, &cfg)?;
    let worst = r.worst.as_ref().map_or_else(String::new, |(n, i)| format!(" at {n}[{i}]"));
    println!("gradcheck: {} coordinates, max relative error {:.3e}{worst}", r.checked, r.max_rel_error);
    if r.max_rel_error < tol {
        Ok(())
    } else {
        Err(CliError::GradCheck(r.max_rel_error))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_follows_file_name() {
        assert_eq!(split_of(Path::new("d/dev.txt")), Split::Dev);
        assert_eq!(split_of(Path::new("d/test_oov.txt")), Split::TestOov);
        assert_eq!(split_of(Path::new("d/test_oov_plus.txt")), Split::TestOov);
        assert_eq!(split_of(Path::new("d/train_plus.txt")), Split::Train);
        assert_eq!(split_of(Path::new("other.txt")), Split::Test);
    }

    #[test]
    fn flags_override_training_table() {
        let m = ModelArgs { hidden_dim: Some(7), lr: Some(0.01), smoke: true, ..Default::default() };
        let c = train_config(&m);
        assert_eq!((c.model.hidden_dim, c.max_epochs, c.adam.lr), (7, 3, 0.01));
        assert_eq!(train_config(&ModelArgs::default()), TrainConfig::default());
    }
}
