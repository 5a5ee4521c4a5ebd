use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

static BRACKET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[([^\[\]]*)\]").unwrap());
static NUMERIC_ITEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(\d+)\s*(?:[-–]\s*(\d+))?\s*$").unwrap());
static PAREN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\(([^()]*)\)").unwrap());
static AUTHOR_YEAR: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\p{Lu}[\p{L}'’\-]+.*?\b(?:1[89]|20)\d{2}[a-z]?\b").unwrap());
static FIGTABLE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(fig(?:ure)?s?\.?|tab(?:le)?s?\.?)\s*(\d+)").unwrap()
});

/// Counts citation markers in chapter text.
///
/// Bracketed numeric groups count one per reference (`[5,7]` is two, a range
/// `[2-4]` is three); parenthesised author-year groups count one per
/// `;`-separated segment that carries a capitalised name and a year.
pub fn count_citations(content: &str) -> u32 {
    let mut total = 0u32;
    for cap in BRACKET.captures_iter(content) {
        let inner = &cap[1];
        let items: Vec<_> = inner.split([',', ';']).collect();
        let mut group = 0u32;
        let mut ok = true;
        for item in &items {
            match NUMERIC_ITEM.captures(item) {
                Some(m) => {
                    let lo: u64 = m[1].parse().unwrap_or(0);
                    let n = match m.get(2).and_then(|hi| hi.as_str().parse::<u64>().ok()) {
                        Some(hi) if hi >= lo && hi - lo < 100 => (hi - lo + 1) as u32,
                        _ => 1,
                    };
                    group += n;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            total += group;
        }
    }
    for cap in PAREN.captures_iter(content) {
        total += cap[1]
            .split(';')
            .filter(|seg| AUTHOR_YEAR.is_match(seg))
            .count() as u32;
    }
    total
}

/// Counts distinct figure and table identifiers ("Figure 2", "Fig. 2",
/// "Table 1"); the same (kind, number) pair counts once.
pub fn count_figtables(content: &str) -> u32 {
    let mut seen = BTreeSet::new();
    for cap in FIGTABLE.captures_iter(content) {
        let kind = cap[1].to_ascii_lowercase().starts_with("fig");
        if let Ok(n) = cap[2].parse::<u64>() {
            seen.insert((kind, n));
        }
    }
    seen.len() as u32
}
