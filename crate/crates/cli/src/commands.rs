use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chapterfn_core::analysis::{pareto_csv, pareto_data, yearly_avg_frequency, yearly_proportion};
use chapterfn_core::classic::Family;
use chapterfn_core::corpus::{
    cohen_kappa, corpus_stats, parse_corpus, to_xmlish_string, write_jsonl, AnnotationPair, CorpusFormat, ParseMode,
};
use chapterfn_core::crf::CrfTagger;
use chapterfn_core::features::{context_chi_analysis, Characteristics, Provenance, Vocabulary};
use chapterfn_core::metrics::{MetricsReport, CSV_HEADER};
use chapterfn_core::pipeline::{field_tokens, ClassicPipeline, Role, TextField, TrainedModel};
use chapterfn_core::synth::generate;
use chapterfn_core::{Article, Error, Label, Result};
use chapterfn_eval::runner::protocol_splits;
use chapterfn_eval::{
    grid, open_test, order_ablation_all, run_crf, run_rows, train_row, AnyModel, ExperimentId, ExperimentReport,
    Protocol, RowModel, RowSpec,
};
use chapterfn_neural::gradcheck::GradCheckReport;
use chapterfn_neural::suite::gradcheck_suite;
use chapterfn_neural::{Base, ContentEncoder, Direction, FusionEncoder, FusionSpec, ModelSpec};

use crate::args::{CorpusArgs, ModelArgs, NeuralArgs};
use crate::config::CliConfig;

/// Everything a subcommand needs besides its own arguments.
pub struct Ctx {
    pub cfg: CliConfig,
    pub mode: ParseMode,
    pub out: Option<PathBuf>,
}

impl Ctx {
    fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(dir)
    }

    fn header(&self, command: &str) -> String {
        format!("# command: {command}\n# seed: {}\n# config_digest: {}\n", self.cfg.seed(), self.cfg.digest())
    }

    /// Writes a CSV with the provenance comment lines in front.
    fn write_csv(&self, name: &str, command: &str, body: &str) -> Result<PathBuf> {
        let path = self.out_dir()?.join(name);
        write_file(&path, &format!("{}{body}", self.header(command)))?;
        Ok(path)
    }

    /// Files that cannot carry comments get a `.meta.json` companion.
    fn write_meta(&self, path: &Path, command: &str) -> Result<()> {
        let meta = serde_json::json!({
            "command": command,
            "seed": self.cfg.seed(),
            "config_digest": self.cfg.digest(),
        });
        let mut name = path.as_os_str().to_owned();
        name.push(".meta.json");
        write_file(Path::new(&name), &format!("{}\n", serde_json::to_string_pretty(&meta)?))
    }

    fn corpus(&self, args: &CorpusArgs) -> Result<Vec<Article>> {
        self.corpus_at(&args.input, args.format.as_deref())
    }

    fn corpus_at(&self, path: &Path, format: Option<&str>) -> Result<Vec<Article>> {
        let format = match format {
            Some(f) => f.parse::<CorpusFormat>()?,
            None => CorpusFormat::from_path(path),
        };
        let outcome = parse_corpus(path, format, self.mode)?;
        for w in &outcome.warnings {
            log::warn!("{w}");
        }
        Ok(outcome.articles)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_field(s: &str) -> Result<TextField> {
    match s {
        "title" => Ok(TextField::Title),
        "content" => Ok(TextField::Content),
        "title+content" | "titlecontent" => Ok(TextField::TitleContent),
        other => Err(Error::Config(format!("unknown field `{other}` (title, content, title+content)"))),
    }
}

fn parse_base(s: &str) -> Result<Base> {
    match s {
        "title" => Ok(Base::Title),
        "content" => Ok(Base::Content),
        "title+content" | "titlecontent" => Ok(Base::TitleContent),
        other => Err(Error::Config(format!("unknown base `{other}` (title, content, title+content)"))),
    }
}

fn parse_fusion(s: &str) -> Result<FusionEncoder> {
    match s {
        "bilstm" => Ok(FusionEncoder::Bilstm),
        "cnn" => Ok(FusionEncoder::Cnn),
        other => Err(Error::Config(format!("unknown fusion encoder `{other}` (bilstm, cnn)"))),
    }
}

fn parse_encoder(s: &str) -> Result<ContentEncoder> {
    let share = |p: &str| {
        p.parse::<f64>()
            .map_err(|_| Error::Config(format!("bad share `{p}` in encoder `{s}`")))
    };
    match s.split_once(':') {
        Some(("head+tail", p)) => Ok(ContentEncoder::HeadTail(share(p)?)),
        Some(("head", p)) => Ok(ContentEncoder::Head(share(p)?)),
        _ => match s {
            "bilstm" => Ok(ContentEncoder::Bilstm),
            "hierarchical" => Ok(ContentEncoder::Hierarchical),
            "hierarchical+attention" => Ok(ContentEncoder::HierarchicalAttention),
            other => Err(Error::Config(format!(
                "unknown encoder `{other}` (bilstm, hierarchical, hierarchical+attention, head+tail:P, head:P)"
            ))),
        },
    }
}

/// Builds a neural spec; unset flags fall back to `window` and title/both/cnn.
fn neural_spec(a: &NeuralArgs, window: usize) -> Result<ModelSpec> {
    let fusion = FusionSpec {
        window: a.window.unwrap_or(window),
        direction: Direction::parse(a.direction.as_deref().unwrap_or("both"))?,
        base: parse_base(a.base.as_deref().unwrap_or("title"))?,
        fusion_encoder: parse_fusion(a.fusion.as_deref().unwrap_or("cnn"))?,
    };
    let spec = ModelSpec::new(fusion, parse_encoder(a.encoder.as_deref().unwrap_or("hierarchical"))?);
    spec.validate()?;
    Ok(spec)
}

enum Target {
    Row(RowSpec),
    Crf,
}

fn resolve(m: &ModelArgs) -> Result<Target> {
    if let Some(exp) = &m.experiment {
        if exp == "CRF" {
            return Ok(Target::Crf);
        }
        let id = ExperimentId::parse(exp)?;
        let rows = grid(id);
        let Some(name) = &m.row else {
            return Err(Error::Config(format!("--experiment needs --row; rows of {exp}: {}", row_names(&rows))));
        };
        return rows
            .into_iter()
            .find(|r| &r.name == name)
            .map(Target::Row)
            .ok_or_else(|| Error::Config(format!("no row `{name}` in {exp}; rows: {}", row_names(&grid(id)))));
    }
    let Some(family) = m.family.as_deref() else {
        return Err(Error::Config("name a model with --family or --experiment/--row".into()));
    };
    match family {
        "crf" => Ok(Target::Crf),
        "neural" => {
            let spec = neural_spec(&m.neural, 0)?;
            Ok(Target::Row(RowSpec { name: "neural".into(), model: RowModel::Neural(spec) }))
        }
        f => {
            let family = Family::parse(f)?;
            let field = parse_field(&m.field)?;
            let characteristics = Characteristics::parse(&m.chars)?;
            let name = format!("{}({}){}", family.name(), m.field, characteristics.suffix());
            Ok(Target::Row(RowSpec { name, model: RowModel::Classic { family, field, characteristics } }))
        }
    }
}

fn row_names(rows: &[RowSpec]) -> String {
    rows.iter().map(|r| format!("`{}`", r.name)).collect::<Vec<_>>().join(", ")
}

/// Fits `target` on all of `articles`. Neural models hold out the
/// validation part of the usual split for early stopping.
fn fit(target: &Target, articles: &[Article], ctx: &Ctx) -> Result<AnyModel> {
    let cfg = &ctx.cfg.run;
    match target {
        Target::Crf => {
            let tagger = CrfTagger::train(articles, &cfg.crf)?;
            Ok(AnyModel::Classic(TrainedModel::Crf { config: cfg.features.clone(), tagger }))
        }
        Target::Row(row) => match &row.model {
            RowModel::Neural(_) => {
                let splits = protocol_splits(articles.len(), Protocol::Holdout, cfg)?;
                let (_, tr, va, te) = &splits[0];
                let mut train_idx: Vec<usize> = tr.iter().chain(te).copied().collect();
                train_idx.sort_unstable();
                let pick = |idx: &[usize]| idx.iter().map(|&i| articles[i].clone()).collect::<Vec<_>>();
                train_row(&row.model, &pick(&train_idx), &pick(va), cfg)
            }
            RowModel::Classic { .. } => train_row(&row.model, articles, &[], cfg),
        },
    }
}

fn report_csv(report: &MetricsReport, experiment: &str, fold: &str) -> String {
    format!("{CSV_HEADER}\n{}", report.csv_rows(experiment, fold))
}

pub fn synth(ctx: &Ctx, articles: Option<usize>, format: &str) -> Result<()> {
    let mut cfg = ctx.cfg.synth.clone();
    if let Some(n) = articles {
        cfg.articles = n;
    }
    let (corpus, sidecar) = generate(&cfg)?;
    let dir = ctx.out_dir()?;
    let path = match format {
        "jsonl" => {
            let p = dir.join("corpus.jsonl");
            write_jsonl(&p, &corpus)?;
            p
        }
        "xmlish" | "xml" => {
            let p = dir.join("corpus.xml");
            write_file(&p, &to_xmlish_string(&corpus))?;
            p
        }
        other => return Err(Error::Config(format!("unknown output format `{other}` (jsonl, xmlish)"))),
    };
    ctx.write_meta(&path, "synth")?;
    let side = dir.join("corpus.sidecar.json");
    write_file(&side, &format!("{}\n", serde_json::to_string_pretty(&sidecar)?))?;
    println!("wrote {} articles to {}", corpus.len(), path.display());
    println!("ground truth: {}", side.display());
    Ok(())
}

pub fn ingest(ctx: &Ctx, args: &CorpusArgs) -> Result<()> {
    let articles = ctx.corpus(args)?;
    let stem = args.input.file_stem().and_then(|s| s.to_str()).unwrap_or("corpus");
    let path = ctx.out_dir()?.join(format!("{stem}.normalized.jsonl"));
    write_jsonl(&path, &articles)?;
    ctx.write_meta(&path, "ingest")?;
    let chapters: usize = articles.iter().map(|a| a.chapters.len()).sum();
    println!("{} articles, {chapters} chapters -> {}", articles.len(), path.display());
    Ok(())
}

pub fn stats(ctx: &Ctx, args: &CorpusArgs) -> Result<()> {
    let articles = ctx.corpus(args)?;
    let s = corpus_stats(&articles, ctx.mode == ParseMode::Strict)?;
    let mut body = String::from("label,count\n");
    for l in Label::ALL {
        let _ = writeln!(body, "{l},{}", s.count(l));
    }
    let _ = writeln!(body, "unlabeled,{}", s.unlabeled);
    ctx.write_csv("stats.csv", "stats", &body)?;
    println!("articles: {}  chapters: {}", s.articles, s.chapters);
    for l in Label::ALL {
        println!("{:<14} {}", l.to_string(), s.count(l));
    }
    if s.unlabeled > 0 {
        println!("{:<14} {}", "unlabeled", s.unlabeled);
    }
    Ok(())
}

pub fn kappa(ctx: &Ctx, a: &Path, b: &Path) -> Result<()> {
    let labels = |path: &Path| -> Result<BTreeMap<(String, u32), Label>> {
        let mut out = BTreeMap::new();
        for art in ctx.corpus_at(path, None)? {
            for c in &art.chapters {
                let label = c.label.ok_or_else(|| Error::Unlabeled(vec![art.id.clone()]))?;
                out.insert((art.id.clone(), c.ordinal), label);
            }
        }
        Ok(out)
    };
    let (la, lb) = (labels(a)?, labels(b)?);
    if la.len() != lb.len() || la.keys().ne(lb.keys()) {
        return Err(Error::InvalidInput("the two annotations do not cover the same chapters".into()));
    }
    let items: Vec<(String, Label, Label)> =
        la.iter().zip(lb.values()).map(|(((id, ord), &x), &y)| (format!("{id}#{ord}"), x, y)).collect();
    let n = items.len();
    let agree = items.iter().filter(|(_, x, y)| x == y).count();
    let k = cohen_kappa(&AnnotationPair::new(items))?;
    ctx.write_csv("kappa.csv", "kappa", &format!("items,agreement,kappa\n{n},{agree},{k:.9}\n"))?;
    println!("items: {n}  agreement: {agree}  kappa: {k:.6}");
    Ok(())
}

pub fn featurize(ctx: &Ctx, args: &CorpusArgs, field: &str, chars: &str) -> Result<()> {
    let articles = ctx.corpus(args)?;
    let field = parse_field(field)?;
    let (pipeline, warnings) = ClassicPipeline::fit(&articles, field, Characteristics::parse(chars)?, &ctx.cfg.run.features)?;
    for w in warnings {
        log::warn!("{w}");
    }
    let mut vocab = String::from("block,term,doc_freq,idf\n");
    for (part, v) in field.parts().iter().zip(pipeline.vocabs()) {
        for (i, term) in v.terms().iter().enumerate() {
            let _ = writeln!(vocab, "{},{term},{},{:.6}", part.as_str(), v.doc_freq(i), v.idf(i));
        }
    }
    let mut vectors = String::from("article,ordinal,label,features\n");
    for a in &articles {
        for (c, x) in a.chapters.iter().zip(pipeline.transform(a, Role::Train)?) {
            let feats: Vec<String> = x.entries().iter().map(|(i, v)| format!("{i}:{v:.6}")).collect();
            let label = c.label.map(|l| l.to_string()).unwrap_or_default();
            let _ = writeln!(vectors, "{},{},{label},{}", a.id, c.ordinal, feats.join(" "));
        }
    }
    ctx.write_csv("vocab.csv", "featurize", &vocab)?;
    let path = ctx.write_csv("vectors.csv", "featurize", &vectors)?;
    println!("dimension {} ({} blocks) -> {}", pipeline.dim(), pipeline.vocabs().len(), path.display());
    Ok(())
}

pub fn train(ctx: &Ctx, args: &CorpusArgs, model: &ModelArgs) -> Result<()> {
    let articles = ctx.corpus(args)?;
    let m = fit(&resolve(model)?, &articles, ctx)?;
    let path = ctx.out_dir()?.join("model.bin");
    m.save(&path, ctx.cfg.seed())?;
    println!("{} model {} -> {}", m.family(), m.digest(), path.display());
    Ok(())
}

pub fn evaluate(ctx: &Ctx, model: &Path, args: &CorpusArgs) -> Result<()> {
    let m = AnyModel::load(model, None)?;
    let articles = ctx.corpus(args)?;
    let report = open_test(&m, &articles, &ctx.cfg.run.macro_classes)?;
    ctx.write_csv("evaluate.csv", "evaluate", &report_csv(&report, "evaluate", "test"))?;
    print!("{}", report.summary());
    Ok(())
}

fn emit_report(ctx: &Ctx, report: &ExperimentReport, stem: &str) -> Result<()> {
    let dir = ctx.out_dir()?;
    write_file(&dir.join(format!("{stem}.csv")), &report.to_csv())?;
    write_file(&dir.join(format!("{stem}.txt")), &report.summary())?;
    print!("{}", report.summary());
    Ok(())
}

pub fn cv(ctx: &Ctx, args: &CorpusArgs, model: &ModelArgs, protocol: Option<&str>) -> Result<()> {
    let articles = ctx.corpus(args)?;
    let protocol = protocol.map(Protocol::parse).transpose()?.unwrap_or(Protocol::CrossValidation);
    let report = match resolve(model)? {
        Target::Crf => run_crf(&articles, &ctx.cfg.run, protocol)?,
        Target::Row(row) => run_rows("cv", &[row], &articles, &ctx.cfg.run, protocol)?,
    };
    emit_report(ctx, &report, "cv")
}

pub fn experiment(
    ctx: &Ctx,
    id: &str,
    args: &CorpusArgs,
    window: Option<usize>,
    direction: Option<&str>,
    names: &[String],
    protocol: Option<&str>,
) -> Result<()> {
    let articles = ctx.corpus(args)?;
    let protocol = protocol.map(Protocol::parse).transpose()?;
    if id == "CRF" {
        let protocols = match protocol {
            Some(p) => vec![p],
            None => vec![Protocol::CrossValidation, Protocol::Holdout],
        };
        for p in protocols {
            let stem = if p == Protocol::CrossValidation { "CRF-cv" } else { "CRF-holdout" };
            emit_report(ctx, &run_crf(&articles, &ctx.cfg.run, p)?, stem)?;
        }
        return Ok(());
    }
    let eid = ExperimentId::parse(id)?;
    let direction = direction.map(Direction::parse).transpose()?;
    let filtered = window.is_some() || direction.is_some() || !names.is_empty();
    let rows: Vec<RowSpec> = grid(eid)
        .into_iter()
        .filter(|r| names.is_empty() || names.contains(&r.name))
        .filter(|r| match &r.model {
            RowModel::Neural(spec) => {
                window.is_none_or(|w| spec.fusion.window == w)
                    && direction.is_none_or(|d| spec.fusion.window == 0 || spec.fusion.direction == d)
            }
            RowModel::Classic { .. } => window.is_none() && direction.is_none(),
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::Config(format!("no row of {id} matches; rows: {}", row_names(&grid(eid)))));
    }
    let protocol = protocol.unwrap_or(Protocol::for_experiment(eid));
    let report = run_rows(eid.name(), &rows, &articles, &ctx.cfg.run, protocol)?;
    if filtered {
        log::info!("ran {} of {} rows", rows.len(), grid(eid).len());
    }
    emit_report(ctx, &report, eid.name())
}

pub fn predict(ctx: &Ctx, model: &Path, args: &CorpusArgs, force: bool) -> Result<()> {
    let Some(out) = &ctx.out else {
        return Err(Error::Config("predict needs --out FILE".into()));
    };
    let m = AnyModel::load(model, None)?;
    let mut articles = ctx.corpus(args)?;
    let labeled: Vec<String> = articles
        .iter()
        .filter(|a| a.chapters.iter().any(|c| c.label.is_some()))
        .map(|a| a.id.clone())
        .collect();
    if !labeled.is_empty() && !force {
        return Err(Error::InvalidInput(format!(
            "input already carries labels (articles: {}); pass --force to overwrite",
            labeled.join(", ")
        )));
    }
    let mut n = 0;
    for a in &mut articles {
        let labels = m.predict_article(a)?;
        for (c, l) in a.chapters.iter_mut().zip(labels) {
            c.label = Some(l);
            n += 1;
        }
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    write_jsonl(out, &articles)?;
    ctx.write_meta(out, "predict")?;
    println!("labeled {n} chapters in {} articles -> {}", articles.len(), out.display());
    Ok(())
}

pub fn opentest(ctx: &Ctx, train: &Path, test: &Path, model: &ModelArgs) -> Result<()> {
    let (tr, te) = (ctx.corpus_at(train, None)?, ctx.corpus_at(test, None)?);
    let m = fit(&resolve(model)?, &tr, ctx)?;
    let report = open_test(&m, &te, &ctx.cfg.run.macro_classes)?;
    ctx.write_csv("opentest.csv", "opentest", &report_csv(&report, "opentest", "test"))?;
    print!("{}", report.summary());
    Ok(())
}

pub fn timeseries(ctx: &Ctx, args: &CorpusArgs) -> Result<()> {
    let articles = ctx.corpus(args)?;
    for table in [yearly_proportion(&articles)?, yearly_avg_frequency(&articles)?] {
        let name = format!("timeseries_{}.csv", table.kind.as_str());
        let path = ctx.write_csv(&name, "timeseries", &table.to_csv())?;
        println!("{} years -> {}", table.rows.len(), path.display());
    }
    Ok(())
}

pub fn chi_analysis(ctx: &Ctx, args: &CorpusArgs, top_k: usize, drop_top: usize, field: &str, context_top: usize) -> Result<()> {
    let articles = ctx.corpus(args)?;
    let field = parse_field(field)?;
    if field == TextField::TitleContent {
        return Err(Error::Config("chi-analysis ranks a single field (title or content)".into()));
    }
    let features = &ctx.cfg.run.features;
    let docs: Vec<(Vec<String>, Label)> = articles
        .iter()
        .flat_map(|a| &a.chapters)
        .filter_map(|c| c.label.map(|l| (field_tokens(&c.title, &c.content, field, features), l)))
        .collect();
    if docs.is_empty() {
        return Err(Error::Unlabeled(articles.iter().map(|a| a.id.clone()).collect()));
    }
    let vocab = Vocabulary::fit(
        docs.iter().map(|(t, l)| (t.as_slice(), *l)),
        Provenance::from_ids(articles.iter().map(|a| a.id.as_str())),
    );
    let pareto = pareto_data(&vocab.weighted_chi_ranking(), top_k, drop_top)?;
    let path = ctx.write_csv("chi_weighted.csv", "chi-analysis", &pareto_csv(&pareto))?;
    println!("top {} weighted chi-square terms -> {}", pareto.len(), path.display());

    let stopwords = features.stopword_set();
    let mut body = String::from("target,offset,rank,term,chi\n");
    for target in Label::SUBSTANTIVE {
        for offset in [-1isize, 1] {
            let ranked = match context_chi_analysis(&articles, target, offset, &stopwords) {
                Err(Error::AbsentClass(c)) => {
                    log::warn!("class {c} absent; skipped in contextual analysis");
                    continue;
                }
                r => r?,
            };
            for (i, (term, chi)) in ranked.into_iter().take(context_top).enumerate() {
                let _ = writeln!(body, "{target},{offset},{},{term},{chi:.6}", i + 1);
            }
        }
    }
    let path = ctx.write_csv("chi_context.csv", "chi-analysis", &body)?;
    println!("contextual chi-square -> {}", path.display());
    Ok(())
}

pub fn ablate_order(ctx: &Ctx, args: &CorpusArgs, neural: &NeuralArgs) -> Result<()> {
    let articles = ctx.corpus(args)?;
    let spec = neural_spec(neural, 1)?;
    let results = order_ablation_all(&spec, &articles, &ctx.cfg.run)?;
    let mut body = format!("{CSV_HEADER}\n");
    for (mode, report) in &results {
        body.push_str(&report.csv_rows("ablate-order", mode.as_str()));
        println!("{:<34} macro_F1 {:.4}", mode.as_str(), report.macro_f1);
    }
    ctx.write_csv("ablate_order.csv", "ablate-order", &body)?;
    Ok(())
}

pub fn gradcheck(ctx: &Ctx, trials: usize, eps: f64, tol: f64) -> Result<()> {
    if trials == 0 || !(eps > 0.0) || !(tol > 0.0) {
        return Err(Error::Config("trials, eps and tol must be positive".into()));
    }
    let cases = gradcheck_suite(trials, eps, ctx.cfg.seed());
    let mut body = String::from("block,trials,max_rel_error,passed\n");
    let mut failed = Vec::new();
    for c in &cases {
        let GradCheckReport { entries, max_rel_error } = &c.report;
        let ok = c.report.passed(tol);
        let _ = writeln!(body, "{},{},{max_rel_error:.3e},{ok}", c.name, entries.len());
        println!("{:<32} max_rel_error {max_rel_error:.3e}  {}", c.name, if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(c.name.clone());
        }
    }
    ctx.write_csv("gradcheck.csv", "gradcheck", &body)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Invariant(format!("gradient check failed for: {}", failed.join(", "))))
    }
}
