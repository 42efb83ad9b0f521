//! Turns a free-text user request into a structured [`Intent`].
//!
//! Matching is two-staged: a coarse pass scores the request against a
//! keyword lexicon per metric category, then a fine pass maps the matched
//! metric terms to actuatable parameters through the schema linkage and
//! combines them with the request's polarity (improve / reduce).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock, RwLock};
use std::time::SystemTime;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::Database;

const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetricCategory {
    QoS,
    Security,
    Mobility,
}

impl MetricCategory {
    /// Tie-break order when two categories score equally.
    pub const PRIORITY: [MetricCategory; 3] = [Self::QoS, Self::Security, Self::Mobility];
}

impl fmt::Display for MetricCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Increase,
    Decrease,
}

impl Direction {
    pub fn opposite(self) -> Self {
        match self {
            Direction::Increase => Direction::Decrease,
            Direction::Decrease => Direction::Increase,
        }
    }

    pub fn verb(self) -> &'static str {
        match self {
            Direction::Increase => "increase",
            Direction::Decrease => "decrease",
        }
    }
}

/// A transmitter → receiver pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkTarget {
    pub tx_id: i64,
    pub rx_id: i64,
}

impl LinkTarget {
    pub const fn new(tx_id: i64, rx_id: i64) -> Self {
        LinkTarget { tx_id, rx_id }
    }
}

impl fmt::Display for LinkTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.tx_id, self.rx_id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intent {
    pub category: MetricCategory,
    pub parameter: String,
    pub direction: Direction,
    pub target: LinkTarget,
    pub confidence: f64,
    pub raw_text: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntentError {
    #[error("request not recognized")]
    Unrecognized,
    #[error("no actuatable parameter for category {0}")]
    NoActuatableParameter(MetricCategory),
    #[error("remote backend unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("malformed remote reply: {0}")]
    MalformedRemoteReply(String),
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),
}

/// One user-facing metric wired to a concrete table column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkageEntry {
    /// Lexicon metric name this entry serves (e.g. `quality`, `latency`).
    pub metric: String,
    pub parameter: String,
    pub table: String,
    pub column: String,
    /// Which change of `parameter` improves this metric for the user.
    pub quality_direction: Direction,
    /// Set for metrics where a lower value is the improvement (latency,
    /// delay): magnitude words are read inverted.
    #[serde(default)]
    pub invert_polarity: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaLinkage {
    pub entries: BTreeMap<MetricCategory, Vec<LinkageEntry>>,
}

impl Default for SchemaLinkage {
    /// Encoding depth and transmit power on the `links` table; nothing is
    /// actuatable for Security or Mobility.
    fn default() -> Self {
        let entry = |metric: &str, parameter: &str, dir: Direction, invert: bool| LinkageEntry {
            metric: metric.into(),
            parameter: parameter.into(),
            table: "links".into(),
            column: parameter.into(),
            quality_direction: dir,
            invert_polarity: invert,
        };
        use Direction::*;
        let qos = vec![
            entry("quality", "encoding_depth", Increase, false),
            entry("latency", "encoding_depth", Decrease, true),
            entry("speed", "encoding_depth", Decrease, false),
            entry("encoding_depth", "encoding_depth", Increase, false),
            entry("tx_power_w", "tx_power_w", Increase, false),
        ];
        SchemaLinkage {
            entries: BTreeMap::from([
                (MetricCategory::QoS, qos),
                (MetricCategory::Security, vec![]),
                (MetricCategory::Mobility, vec![]),
            ]),
        }
    }
}

impl SchemaLinkage {
    /// Every referenced `(table, column)` must exist in `db`.
    pub fn validate(&self, db: &Database) -> Result<(), String> {
        for e in self.entries.values().flatten() {
            let table = db.table(&e.table).map_err(|err| err.to_string())?;
            table.schema.index_of(&e.column).map_err(|err| err.to_string())?;
        }
        Ok(())
    }

    pub fn entries(&self, category: MetricCategory) -> &[LinkageEntry] {
        self.entries.get(&category).map_or(&[], Vec::as_slice)
    }

    pub fn is_actuatable(&self, category: MetricCategory, parameter: &str) -> bool {
        self.entries(category).iter().any(|e| e.parameter == parameter)
    }

    /// `(table, column)` backing a parameter, in any category.
    pub fn resolve(&self, parameter: &str) -> Option<(&str, &str)> {
        self.entries
            .values()
            .flatten()
            .find(|e| e.parameter == parameter)
            .map(|e| (e.table.as_str(), e.column.as_str()))
    }

    /// Distinct linked columns of `table`, in first-seen order.
    pub fn columns_of(&self, table: &str) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for e in self.entries.values().flatten() {
            if e.table.eq_ignore_ascii_case(table) && !out.contains(&e.column.as_str()) {
                out.push(&e.column);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub phrase: String,
    pub weight: f64,
    /// Linkage metric; defaults to the phrase itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
}

impl LexiconEntry {
    pub fn metric(&self) -> &str {
        self.metric.as_deref().unwrap_or(&self.phrase)
    }
}

/// Keyword table per category, loadable from `{category: [{phrase, weight}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Lexicon {
    pub categories: BTreeMap<MetricCategory, Vec<LexiconEntry>>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::from_json(DEFAULT_LEXICON).expect("shipped lexicon is valid")
    }
}

impl Lexicon {
    pub fn from_json(text: &str) -> Result<Self, IntentError> {
        let lex: Lexicon =
            serde_json::from_str(text).map_err(|e| IntentError::InvalidLexicon(e.to_string()))?;
        for e in lex.categories.values().flatten() {
            if tokenize(&e.phrase).is_empty() || !(e.weight > 0.0) {
                return Err(IntentError::InvalidLexicon(format!(
                    "entry `{}` needs a non-empty phrase and positive weight",
                    e.phrase
                )));
            }
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IntentError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| IntentError::InvalidLexicon(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Lexicon hits for one category, in text order.
    fn hits<'a>(&'a self, tokens: &[String], category: MetricCategory) -> Vec<Hit<'a>> {
        let mut out = Vec::new();
        for entry in self.categories.get(&category).into_iter().flatten() {
            let phrase = tokenize(&entry.phrase);
            if phrase.len() > tokens.len() {
                continue;
            }
            for start in 0..=tokens.len() - phrase.len() {
                if phrase
                    .iter()
                    .zip(&tokens[start..])
                    .all(|(w, t)| word_matches(t, w))
                {
                    out.push(Hit { start, entry });
                }
            }
        }
        out.sort_by_key(|h| h.start);
        out
    }

    /// Summed hit weight per category.
    pub fn scores(&self, text: &str) -> BTreeMap<MetricCategory, f64> {
        let tokens = tokenize(text);
        MetricCategory::PRIORITY
            .iter()
            .map(|&c| (c, self.hits(&tokens, c).iter().fold(0.0, |acc, h| acc + h.entry.weight)))
            .collect()
    }

    /// Highest-scoring category with at least one hit.
    pub fn coarse_match(&self, text: &str) -> Result<MetricCategory, IntentError> {
        self.coarse_match_scored(text).map(|(c, _)| c)
    }

    fn coarse_match_scored(&self, text: &str) -> Result<(MetricCategory, f64), IntentError> {
        let scores = self.scores(text);
        let total: f64 = scores.values().sum();
        let mut best: Option<(MetricCategory, f64)> = None;
        for c in MetricCategory::PRIORITY {
            let s = scores[&c];
            if s > 0.0 && best.is_none_or(|(_, b)| s > b) {
                best = Some((c, s));
            }
        }
        best.map(|(c, s)| (c, s / total)).ok_or(IntentError::Unrecognized)
    }

    /// Actuatable `(parameter, direction)` pairs for `category`, first
    /// mention first, one per parameter.
    pub fn fine_match(
        &self,
        text: &str,
        category: MetricCategory,
        linkage: &SchemaLinkage,
    ) -> Result<Vec<(String, Direction)>, IntentError> {
        let tokens = tokenize(text);
        let mut out: Vec<(String, Direction)> = Vec::new();
        for hit in self.hits(&tokens, category) {
            let Some(link) = linkage
                .entries(category)
                .iter()
                .find(|e| e.metric == hit.entry.metric())
            else {
                continue;
            };
            let mut polarity = polarity_near(&tokens, hit.start).unwrap_or(Polarity::Improve);
            if link.invert_polarity {
                polarity = polarity.flip();
            }
            let direction = match polarity {
                Polarity::Improve => link.quality_direction,
                Polarity::Reduce => link.quality_direction.opposite(),
            };
            if out.iter().all(|(p, _)| *p != link.parameter) {
                out.push((link.parameter.clone(), direction));
            }
        }
        if out.is_empty() {
            return Err(IntentError::NoActuatableParameter(category));
        }
        Ok(out)
    }
}

struct Hit<'a> {
    start: usize,
    entry: &'a LexiconEntry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Polarity {
    Improve,
    Reduce,
}

impl Polarity {
    fn flip(self) -> Self {
        match self {
            Polarity::Improve => Polarity::Reduce,
            Polarity::Reduce => Polarity::Improve,
        }
    }
}

pub const IMPROVE_WORDS: [&str; 11] = [
    "improve", "increase", "higher", "better", "raise", "boost", "enhance", "more", "maximize",
    "greater", "up",
];
pub const REDUCE_WORDS: [&str; 12] = [
    "reduce", "decrease", "lower", "less", "cut", "shorten", "minimize", "fewer", "drop",
    "worse", "worsen", "down",
];

fn polarity_of(token: &str) -> Option<Polarity> {
    if IMPROVE_WORDS.iter().any(|w| word_matches(token, w)) {
        Some(Polarity::Improve)
    } else if REDUCE_WORDS.iter().any(|w| word_matches(token, w)) {
        Some(Polarity::Reduce)
    } else {
        None
    }
}

/// Closest polarity word to `pos`; a preceding word wins a distance tie.
fn polarity_near(tokens: &[String], pos: usize) -> Option<Polarity> {
    tokens
        .iter()
        .enumerate()
        .filter_map(|(i, t)| polarity_of(t).map(|p| (i, p)))
        .min_by_key(|&(i, _)| (i.abs_diff(pos), i > pos))
        .map(|(_, p)| p)
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Exact match or a regular inflection of `word` (plural, third person,
/// past tense).
fn word_matches(token: &str, word: &str) -> bool {
    if token == word {
        return true;
    }
    let Some(rest) = token.strip_prefix(word) else {
        return match (token.strip_suffix("ies"), word.strip_suffix('y')) {
            (Some(t), Some(w)) => t == w,
            _ => false,
        };
    };
    match rest {
        "s" | "es" | "ed" => true,
        "d" => word.ends_with('e'),
        _ => false,
    }
}

fn target_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\btransmitter\s+(\d+)\s+(?:and|to)\s+receiver\s+(\d+)\b").expect("valid regex")
    })
}

/// `(tx, rx)` named in the text as "transmitter X and receiver Y".
pub fn extract_target(text: &str) -> Option<LinkTarget> {
    let caps = target_regex().captures(text)?;
    Some(LinkTarget::new(caps[1].parse().ok()?, caps[2].parse().ok()?))
}

/// A source of intents: the rule-based matcher or a remote model.
pub trait IntentBackend: Send + Sync {
    fn name(&self) -> &str;
    fn analyze(&self, text: &str, default_target: LinkTarget) -> Result<Intent, IntentError>;
}

/// Lexicon that reloads itself when its backing file changes.
#[derive(Debug)]
pub struct HotLexicon {
    path: Option<PathBuf>,
    seen: Mutex<Option<SystemTime>>,
    current: RwLock<Arc<Lexicon>>,
}

impl HotLexicon {
    pub fn fixed(lexicon: Lexicon) -> Self {
        HotLexicon {
            path: None,
            seen: Mutex::new(None),
            current: RwLock::new(Arc::new(lexicon)),
        }
    }

    pub fn watch(path: impl Into<PathBuf>) -> Result<Self, IntentError> {
        let path = path.into();
        let lex = Lexicon::load(&path)?;
        let mtime = std::fs::metadata(&path).and_then(|m| m.modified()).ok();
        Ok(HotLexicon {
            path: Some(path),
            seen: Mutex::new(mtime),
            current: RwLock::new(Arc::new(lex)),
        })
    }

    /// Current lexicon, reloading first if the file's mtime moved. A file
    /// that fails to parse keeps the previous lexicon in place.
    pub fn get(&self) -> Arc<Lexicon> {
        if let Some(path) = &self.path {
            let mtime = std::fs::metadata(path).and_then(|m| m.modified()).ok();
            let mut seen = self.seen.lock().unwrap_or_else(|e| e.into_inner());
            if mtime.is_some() && mtime != *seen {
                match Lexicon::load(path) {
                    Ok(lex) => {
                        log::info!("reloaded lexicon from {}", path.display());
                        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(lex);
                        *seen = mtime;
                    }
                    Err(e) => log::warn!("keeping previous lexicon: {e}"),
                }
            }
        }
        self.current.read().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

pub struct RuleBasedAnalyzer {
    lexicon: HotLexicon,
    linkage: SchemaLinkage,
}

impl RuleBasedAnalyzer {
    pub fn new(lexicon: HotLexicon, linkage: SchemaLinkage) -> Self {
        RuleBasedAnalyzer { lexicon, linkage }
    }

    pub fn linkage(&self) -> &SchemaLinkage {
        &self.linkage
    }

    pub fn lexicon(&self) -> Arc<Lexicon> {
        self.lexicon.get()
    }
}

impl Default for RuleBasedAnalyzer {
    fn default() -> Self {
        Self::new(HotLexicon::fixed(Lexicon::default()), SchemaLinkage::default())
    }
}

impl IntentBackend for RuleBasedAnalyzer {
    fn name(&self) -> &str {
        "rule-based"
    }

    fn analyze(&self, text: &str, default_target: LinkTarget) -> Result<Intent, IntentError> {
        if text.trim().is_empty() {
            return Err(IntentError::Unrecognized);
        }
        let lex = self.lexicon.get();
        let (category, confidence) = lex.coarse_match_scored(text)?;
        let (parameter, direction) = lex
            .fine_match(text, category, &self.linkage)?
            .into_iter()
            .next()
            .ok_or(IntentError::NoActuatableParameter(category))?;
        Ok(Intent {
            category,
            parameter,
            direction,
            target: extract_target(text).unwrap_or(default_target),
            confidence,
            raw_text: text.to_string(),
        })
    }
}

/// Structured document a remote model must return for intent analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteIntentReply {
    pub category: MetricCategory,
    pub parameter: String,
    pub direction: Direction,
    pub tx_id: i64,
    pub rx_id: i64,
}

impl RemoteIntentReply {
    /// JSON schema sent alongside the prompt.
    pub fn json_schema() -> serde_json::Value {
        serde_json::json!({
            "type": "object",
            "properties": {
                "category": {"type": "string", "enum": ["QoS", "Security", "Mobility"]},
                "parameter": {"type": "string"},
                "direction": {"type": "string", "enum": ["Increase", "Decrease"]},
                "tx_id": {"type": "integer"},
                "rx_id": {"type": "integer"}
            },
            "required": ["category", "parameter", "direction", "tx_id", "rx_id"],
            "additionalProperties": false
        })
    }

    /// Parses and checks a reply against the linkage.
    pub fn validate(
        raw: &serde_json::Value,
        linkage: &SchemaLinkage,
        text: &str,
    ) -> Result<Intent, IntentError> {
        let reply: RemoteIntentReply = serde_json::from_value(raw.clone())
            .map_err(|e| IntentError::MalformedRemoteReply(e.to_string()))?;
        if !linkage.is_actuatable(reply.category, &reply.parameter) {
            return Err(IntentError::MalformedRemoteReply(format!(
                "parameter `{}` is not linked under {}",
                reply.parameter, reply.category
            )));
        }
        Ok(Intent {
            category: reply.category,
            parameter: reply.parameter,
            direction: reply.direction,
            target: LinkTarget::new(reply.tx_id, reply.rx_id),
            confidence: 1.0,
            raw_text: text.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: LinkTarget = LinkTarget::new(1, 2);

    fn lex() -> Lexicon {
        Lexicon::default()
    }

    #[test]
    fn coarse_categories() {
        let l = lex();
        assert_eq!(
            l.coarse_match("Please improve the data transmission quality"),
            Ok(MetricCategory::QoS)
        );
        assert_eq!(l.coarse_match("lower the latency please"), Ok(MetricCategory::QoS));
        assert_eq!(l.coarse_match("make my handover smoother"), Ok(MetricCategory::Mobility));
        assert_eq!(l.coarse_match("encrypt my traffic harder"), Ok(MetricCategory::Security));
        assert_eq!(l.coarse_match("hello there"), Err(IntentError::Unrecognized));
    }

    #[test]
    fn ties_prefer_qos() {
        assert_eq!(
            lex().coarse_match("secure quality while roaming handover"),
            Ok(MetricCategory::Mobility)
        );
        assert_eq!(lex().coarse_match("secure quality"), Ok(MetricCategory::QoS));
        assert_eq!(lex().coarse_match("privacy while roaming"), Ok(MetricCategory::Security));
    }

    #[test]
    fn fine_directions() {
        let (l, k) = (lex(), SchemaLinkage::default());
        assert_eq!(
            l.fine_match("improve the data transmission quality", MetricCategory::QoS, &k),
            Ok(vec![("encoding_depth".into(), Direction::Increase)])
        );
        assert_eq!(
            l.fine_match("reduce the data transmission latency", MetricCategory::QoS, &k),
            Ok(vec![("encoding_depth".into(), Direction::Decrease)])
        );
        assert_eq!(
            l.fine_match("encrypt my traffic harder", MetricCategory::Security, &k),
            Err(IntentError::NoActuatableParameter(MetricCategory::Security))
        );
    }

    #[test]
    fn analyze_examples() {
        let a = RuleBasedAnalyzer::default();
        let i = a.analyze("Please improve the data transmission quality", T).unwrap();
        assert_eq!(
            (i.category, i.parameter.as_str(), i.direction, i.target),
            (MetricCategory::QoS, "encoding_depth", Direction::Increase, T)
        );
        let i = a
            .analyze("Please increase the encoding depth between transmitter 1 and receiver 2", LinkTarget::new(9, 9))
            .unwrap();
        assert_eq!((i.parameter.as_str(), i.direction, i.target), ("encoding_depth", Direction::Increase, T));
        assert_eq!(a.analyze("", T), Err(IntentError::Unrecognized));
        assert_eq!(a.analyze("   ", T), Err(IntentError::Unrecognized));
    }

    #[test]
    fn target_extraction() {
        assert_eq!(extract_target("between transmitter 3 and receiver 14"), Some(LinkTarget::new(3, 14)));
        assert_eq!(extract_target("from Transmitter 5 to Receiver 6"), Some(LinkTarget::new(5, 6)));
        assert_eq!(extract_target("receiver 2"), None);
    }

    #[test]
    fn multi_intent_first_wins() {
        let a = RuleBasedAnalyzer::default();
        let i = a.analyze("improve quality and reduce latency", T).unwrap();
        assert_eq!(i.direction, Direction::Increase);
        let i = a.analyze("reduce latency and improve quality", T).unwrap();
        assert_eq!(i.direction, Direction::Decrease);
    }

    #[test]
    fn inflections() {
        assert!(word_matches("delays", "delay"));
        assert!(word_matches("latencies", "latency"));
        assert!(word_matches("improved", "improve"));
        assert!(word_matches("reduces", "reduce"));
        assert!(!word_matches("quit", "quality"));
    }

    #[test]
    fn remote_reply_validation() {
        let k = SchemaLinkage::default();
        let ok = serde_json::json!({"category":"QoS","parameter":"encoding_depth","direction":"Increase","tx_id":1,"rx_id":2});
        let i = RemoteIntentReply::validate(&ok, &k, "x").unwrap();
        assert_eq!((i.parameter.as_str(), i.target), ("encoding_depth", T));
        let bad = serde_json::json!({"category":"QoS","parameter":"magic_knob","direction":"Increase","tx_id":1,"rx_id":2});
        assert!(matches!(RemoteIntentReply::validate(&bad, &k, "x"), Err(IntentError::MalformedRemoteReply(_))));
        let bad = serde_json::json!({"category":"QoS","parameter":"encoding_depth","direction":"Sideways","tx_id":1,"rx_id":2});
        assert!(RemoteIntentReply::validate(&bad, &k, "x").is_err());
    }

    #[test]
    fn linkage_matches_default_schema() {
        let store = crate::store::SeedConfig::default_config().seed().unwrap();
        SchemaLinkage::default().validate(&store.snapshot()).unwrap();
    }

    #[test]
    fn lexicon_rejects_bad_entries() {
        assert!(Lexicon::from_json(r#"{"QoS":[{"phrase":"  ","weight":1}]}"#).is_err());
        assert!(Lexicon::from_json(r#"{"QoS":[{"phrase":"x","weight":0}]}"#).is_err());
        assert!(Lexicon::from_json(r#"{"Weather":[{"phrase":"x","weight":1}]}"#).is_err());
    }

    #[test]
    fn hot_reload_picks_up_changes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lex.json");
        std::fs::write(&path, r#"{"QoS":[{"phrase":"quality","weight":1}]}"#).unwrap();
        let hot = HotLexicon::watch(&path).unwrap();
        assert!(hot.get().coarse_match("sluggish").is_err());
        std::thread::sleep(std::time::Duration::from_millis(20));
        std::fs::write(&path, r#"{"QoS":[{"phrase":"sluggish","weight":1,"metric":"latency"}]}"#).unwrap();
        let later = SystemTime::now() + std::time::Duration::from_secs(5);
        let f = std::fs::File::options().write(true).open(&path).unwrap();
        f.set_modified(later).unwrap();
        assert_eq!(hot.get().coarse_match("sluggish"), Ok(MetricCategory::QoS));
        // a broken file keeps the last good lexicon
        std::fs::write(&path, "{").unwrap();
        f.set_modified(later + std::time::Duration::from_secs(5)).unwrap();
        assert_eq!(hot.get().coarse_match("sluggish"), Ok(MetricCategory::QoS));
    }
}
