//! Seeded synthetic corpus with canonical chapter order, class keywords
//! injected into titles and (diluted) into content, and a bookkeeping
//! sidecar recording what was generated.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Article, Chapter, Label, NUM_LABELS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub articles: usize,
    pub seed: u64,
    pub first_year: i32,
    pub last_year: i32,
    /// Share of related-work, method and evaluation chapters whose title
    /// carries no class keyword.
    pub uninformative_title_rate: f64,
    /// Per-word probability of a keyword of the chapter's own class.
    pub content_keyword_rate: f64,
    /// Per-word probability of a keyword of some other class.
    pub content_confusion_rate: f64,
    pub sentences: (usize, usize),
    pub words_per_sentence: (usize, usize),
    pub other_rate: f64,
    /// Share of titles given a leading enumerator such as "3." or "IV.".
    pub numbered_title_rate: f64,
    /// Article ids are this prefix followed by a 5-digit serial.
    pub id_prefix: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            articles: 500,
            seed: 42,
            first_year: 1990,
            last_year: 2019,
            uninformative_title_rate: 0.3,
            content_keyword_rate: 0.04,
            content_confusion_rate: 0.05,
            sentences: (4, 8),
            words_per_sentence: (8, 14),
            other_rate: 0.3,
            numbered_title_rate: 0.5,
            id_prefix: "S".into(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let rate = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        rate("uninformative_title_rate", self.uninformative_title_rate)?;
        rate("content_keyword_rate", self.content_keyword_rate)?;
        rate("content_confusion_rate", self.content_confusion_rate)?;
        rate("other_rate", self.other_rate)?;
        rate("numbered_title_rate", self.numbered_title_rate)?;
        if self.content_keyword_rate + self.content_confusion_rate > 1.0 {
            return Err(Error::Config("keyword and confusion rates sum above 1".into()));
        }
        if self.articles == 0 || self.last_year < self.first_year {
            return Err(Error::Config("need at least one article and a nonempty year range".into()));
        }
        if self.sentences.0 == 0 || self.sentences.0 > self.sentences.1 {
            return Err(Error::Config("bad sentence range".into()));
        }
        if self.words_per_sentence.0 == 0 || self.words_per_sentence.0 > self.words_per_sentence.1 {
            return Err(Error::Config("bad words-per-sentence range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChapterRecord {
    pub label: Label,
    pub informative_title: bool,
    pub keywords: usize,
}

/// Ground truth written next to the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSidecar {
    pub config: SynthConfig,
    /// Year to chapter count per label.
    pub year_label_counts: BTreeMap<i32, [usize; NUM_LABELS]>,
    pub year_article_counts: BTreeMap<i32, usize>,
    pub chapters: BTreeMap<String, Vec<ChapterRecord>>,
}

const INTRO_TITLES: &[&str] = &["Introduction", "Introduction", "Introduction and Motivation", "Motivation"];
const RELATED_TITLES: &[&str] =
    &["Related Work", "Related Work", "Previous Work", "Prior Work", "Literature Review", "Related Studies"];
const METHOD_TITLES: &[&str] =
    &["Method", "Methodology", "Proposed Method", "Our Approach", "Approach", "Model Architecture", "Proposed Model"];
const EVAL_TITLES: &[&str] =
    &["Experiments", "Experimental Results", "Evaluation", "Results", "Results and Discussion", "Experimental Setup"];
const CONCLUSION_TITLES: &[&str] =
    &["Conclusion", "Conclusions", "Conclusion and Future Work", "Concluding Remarks"];
const OTHER_TITLES: &[&str] = &["Acknowledgements", "Acknowledgments", "Appendix", "Ethics Statement"];

const KEYWORDS: [&[&str]; NUM_LABELS] = [
    &["paper", "propose", "contribution", "motivate", "address", "challenge", "important", "recently", "problem", "goal"],
    &["previous", "prior", "studies", "existing", "literature", "earlier", "surveyed", "approaches", "pioneered", "extended"],
    &["define", "compute", "layer", "function", "algorithm", "input", "output", "parameter", "denote", "equation"],
    &["accuracy", "baseline", "dataset", "outperforms", "score", "experiment", "test", "improvement", "measured", "significant"],
    &["future", "conclude", "summary", "presented", "plan", "extend", "limitations", "demonstrated", "directions", "finally"],
    &["thank", "grant", "reviewers", "supported", "funding", "appendix", "additional", "foundation", "helpful", "comments"],
];

const TOPICS: &[&str] = &[
    "lexical", "semantic", "syntactic", "graph", "dependency", "discourse", "sentiment", "translation", "parsing",
    "entity", "relation", "summarization", "dialogue", "morphology", "tagging", "retrieval", "question", "corpus",
    "alignment", "coreference", "grammar", "speech", "document", "embedding", "clustering", "tree", "span", "event",
    "argument", "citation", "keyphrase", "language", "generation", "inference", "topic", "word", "sequence", "token",
];

const FILLER: &[&str] = &[
    "the", "of", "and", "a", "to", "in", "is", "we", "for", "that", "this", "on", "with", "as", "by", "are", "be",
    "which", "an", "from", "can", "it", "each", "these", "such", "also", "both", "into", "other", "more", "model",
    "system", "method", "information", "based", "using", "set", "two", "different", "first", "given", "used", "large",
    "number", "case", "form", "order", "way", "level", "part", "structure", "process", "features", "text", "data",
];

fn titles_for(label: Label) -> &'static [&'static str] {
    match label {
        Label::Introduction => INTRO_TITLES,
        Label::RelatedWork => RELATED_TITLES,
        Label::Method => METHOD_TITLES,
        Label::EvalResult => EVAL_TITLES,
        Label::Conclusion => CONCLUSION_TITLES,
        Label::Other => OTHER_TITLES,
    }
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

const ROMAN: &[&str] = &["I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX", "X", "XI", "XII"];

struct Generator<'a> {
    cfg: &'a SynthConfig,
    rng: ChaCha8Rng,
}

impl Generator<'_> {
    fn chapter_plan(&mut self, year: i32) -> Vec<Label> {
        let span = (self.cfg.last_year - self.cfg.first_year).max(1) as f64;
        let t = (year - self.cfg.first_year) as f64 / span;
        let mut plan = vec![Label::Introduction];
        if self.rng.random_bool(0.4 + 0.4 * t) {
            plan.push(Label::RelatedWork);
        }
        plan.extend(std::iter::repeat_n(Label::Method, self.rng.random_range(1..=2)));
        plan.extend(std::iter::repeat_n(Label::EvalResult, self.rng.random_range(1..=2)));
        plan.push(Label::Conclusion);
        if self.rng.random_bool(self.cfg.other_rate) {
            plan.push(Label::Other);
        }
        plan
    }

    fn title(&mut self, label: Label, ordinal: u32, topics: &[&str]) -> (String, bool) {
        let noisy = matches!(label, Label::RelatedWork | Label::Method | Label::EvalResult)
            && self.rng.random_bool(self.cfg.uninformative_title_rate);
        let base = if noisy {
            let a = *topics.choose(&mut self.rng).expect("topics");
            let b = *TOPICS.choose(&mut self.rng).expect("topics");
            format!("{} {}", capitalize(a), capitalize(b))
        } else {
            let t = *titles_for(label).choose(&mut self.rng).expect("titles");
            if label != Label::Other && self.rng.random_bool(0.2) {
                format!("{t} on {}", capitalize(topics[0]))
            } else {
                t.to_string()
            }
        };
        let title = if self.rng.random_bool(self.cfg.numbered_title_rate) {
            if self.rng.random_bool(0.5) {
                format!("{ordinal} {base}")
            } else {
                format!("{}. {base}", ROMAN[(ordinal as usize - 1).min(ROMAN.len() - 1)])
            }
        } else {
            base
        };
        (title, !noisy)
    }

    fn content(&mut self, label: Label, topics: &[&str]) -> (String, usize) {
        let n_sent = self.rng.random_range(self.cfg.sentences.0..=self.cfg.sentences.1);
        let mut keywords = 0;
        let mut sentences = Vec::with_capacity(n_sent);
        for _ in 0..n_sent {
            let n_words = self.rng.random_range(self.cfg.words_per_sentence.0..=self.cfg.words_per_sentence.1);
            let mut words: Vec<String> = Vec::with_capacity(n_words + 2);
            for _ in 0..n_words {
                let r: f64 = self.rng.random();
                let w = if r < self.cfg.content_keyword_rate {
                    keywords += 1;
                    *KEYWORDS[label.index()].choose(&mut self.rng).expect("keywords")
                } else if r < self.cfg.content_keyword_rate + self.cfg.content_confusion_rate {
                    let other = self.rng.random_range(0..NUM_LABELS);
                    *KEYWORDS[other].choose(&mut self.rng).expect("keywords")
                } else if r < 0.5 {
                    *topics.choose(&mut self.rng).expect("topics")
                } else {
                    *FILLER.choose(&mut self.rng).expect("filler")
                };
                words.push(w.to_string());
            }
            match label {
                Label::RelatedWork | Label::Introduction if self.rng.random_bool(0.5) => {
                    let who = capitalize(TOPICS.choose(&mut self.rng).expect("topics"));
                    let year = self.rng.random_range(1980..2020);
                    words.push(format!("({who}, {year})"));
                }
                Label::RelatedWork if self.rng.random_bool(0.5) => {
                    words.push(format!("[{}]", self.rng.random_range(1..40)));
                }
                Label::EvalResult | Label::Method if self.rng.random_bool(0.3) => {
                    let kind = if self.rng.random_bool(0.5) { "Table" } else { "Figure" };
                    words.push(format!("in {kind} {}", self.rng.random_range(1..6)));
                }
                _ => {}
            }
            words[0] = capitalize(&words[0]);
            sentences.push(format!("{}.", words.join(" ")));
        }
        (sentences.join(" "), keywords)
    }
}

/// Generates `cfg.articles` labeled articles and the matching sidecar.
pub fn generate(cfg: &SynthConfig) -> Result<(Vec<Article>, SynthSidecar)> {
    cfg.validate()?;
    let mut g = Generator { cfg, rng: ChaCha8Rng::seed_from_u64(cfg.seed) };
    let mut articles = Vec::with_capacity(cfg.articles);
    let mut sidecar = SynthSidecar {
        config: cfg.clone(),
        year_label_counts: BTreeMap::new(),
        year_article_counts: BTreeMap::new(),
        chapters: BTreeMap::new(),
    };
    for i in 0..cfg.articles {
        let year = g.rng.random_range(cfg.first_year..=cfg.last_year);
        let topics: Vec<&str> = TOPICS.choose_multiple(&mut g.rng, 3).copied().collect();
        let plan = g.chapter_plan(year);
        let id = format!("{}{:05}", cfg.id_prefix, i + 1);
        let mut chapters = Vec::with_capacity(plan.len());
        let mut records = Vec::with_capacity(plan.len());
        let counts = sidecar.year_label_counts.entry(year).or_insert([0; NUM_LABELS]);
        for (k, &label) in plan.iter().enumerate() {
            let ordinal = k as u32 + 1;
            let (title, informative_title) = g.title(label, ordinal, &topics);
            let (content, keywords) = g.content(label, &topics);
            chapters.push(Chapter::new(ordinal, title, content).with_label(label));
            records.push(ChapterRecord { label, informative_title, keywords });
            counts[label.index()] += 1;
        }
        *sidecar.year_article_counts.entry(year).or_insert(0) += 1;
        sidecar.chapters.insert(id.clone(), records);
        articles.push(Article { id, year: Some(year), venue: Some("SYNTH".into()), chapters });
    }
    Ok((articles, sidecar))
}
