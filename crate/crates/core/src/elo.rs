//! Elo ratings for pairwise preference voting.
//!
//! Items start at the initial rating (1500 by default) and move by
//! `K * (S - E)` after every match, where `E` is the logistic expected score
//! with scale `c`. Updates are applied as one delta added to the first item
//! and subtracted from the second, so the rating total is conserved.
//!
//! Matchmaking is epsilon-greedy: with probability 0.3 a uniformly random
//! pair, otherwise the least-played pair with the closest ratings. The
//! random stream for round `r` is a ChaCha8 generator seeded from the pool
//! seed on stream `r`, so a pool reloaded from disk keeps proposing the
//! same pairs.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const DEFAULT_K: f64 = 32.0;
pub const DEFAULT_C: f64 = 400.0;
pub const DEFAULT_INITIAL_RATING: f64 = 1500.0;
/// Probability of proposing a uniformly random pair.
pub const EXPLORATION_RATE: f64 = 0.3;

const HEADER_TAG: &str = "# elo-pool";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EloError {
    #[error("unknown item {0}")]
    UnknownItem(u32),
    #[error("item {0} cannot play itself")]
    SelfMatch(u32),
    #[error("need at least 2 items to form a pair, pool has {0}")]
    TooFewItems(usize),
    #[error("scale c must be positive, got {0}")]
    NonPositiveC(f64),
    #[error("K must be finite, got {0}")]
    InvalidK(f64),
    #[error("pool file line {line}: {reason}")]
    Format { line: usize, reason: String },
}

/// Logistic expected score of `a` against `b`.
pub fn expected_score(rating_a: f64, rating_b: f64, c: f64) -> Result<f64, EloError> {
    if c.is_nan() || c <= 0.0 {
        return Err(EloError::NonPositiveC(c));
    }
    Ok(1.0 / (1.0 + 10f64.powf((rating_b - rating_a) / c)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EloParams {
    pub k: f64,
    pub c: f64,
    pub initial_rating: f64,
    pub seed: u64,
}

impl Default for EloParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            c: DEFAULT_C,
            initial_rating: DEFAULT_INITIAL_RATING,
            seed: 0,
        }
    }
}

impl EloParams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), EloError> {
        if self.c.is_nan() || self.c <= 0.0 {
            return Err(EloError::NonPositiveC(self.c));
        }
        if !self.k.is_finite() {
            return Err(EloError::InvalidK(self.k));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EloItem {
    pub id: u32,
    pub label: String,
    pub rating: f64,
    pub matches_played: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    A,
    B,
    Draw,
}

impl Winner {
    fn score_a(self) -> f64 {
        match self {
            Winner::A => 1.0,
            Winner::B => 0.0,
            Winner::Draw => 0.5,
        }
    }
}

/// Rating changes from one match.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchDelta {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standing {
    pub id: u32,
    pub label: String,
    pub rating: f64,
    pub matches_played: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EloPool {
    params: EloParams,
    items: Vec<EloItem>,
}

impl EloPool {
    /// A fresh pool; items get ids 1, 2, ... in label order.
    pub fn new<S: Into<String>>(params: EloParams, labels: impl IntoIterator<Item = S>) -> Result<Self, EloError> {
        params.validate()?;
        let items = labels
            .into_iter()
            .enumerate()
            .map(|(i, label)| EloItem {
                id: i as u32 + 1,
                label: label.into(),
                rating: params.initial_rating,
                matches_played: 0,
            })
            .collect();
        Ok(Self { params, items })
    }

    pub fn params(&self) -> &EloParams {
        &self.params
    }

    pub fn items(&self) -> &[EloItem] {
        &self.items
    }

    pub fn item(&self, id: u32) -> Option<&EloItem> {
        self.items.iter().find(|item| item.id == id)
    }

    pub fn total_rating(&self) -> f64 {
        self.items.iter().map(|item| item.rating).sum()
    }

    /// Number of matches recorded so far.
    pub fn rounds(&self) -> u64 {
        self.items.iter().map(|item| item.matches_played).sum::<u64>() / 2
    }

    fn position(&self, id: u32) -> Result<usize, EloError> {
        self.items
            .iter()
            .position(|item| item.id == id)
            .ok_or(EloError::UnknownItem(id))
    }

    pub fn record_match(&mut self, a: u32, b: u32, winner: Winner) -> Result<MatchDelta, EloError> {
        if a == b {
            return Err(EloError::SelfMatch(a));
        }
        let ia = self.position(a)?;
        let ib = self.position(b)?;
        let expected_a = expected_score(self.items[ia].rating, self.items[ib].rating, self.params.c)?;
        let delta = self.params.k * (winner.score_a() - expected_a);
        self.items[ia].rating += delta;
        self.items[ib].rating -= delta;
        self.items[ia].matches_played += 1;
        self.items[ib].matches_played += 1;
        Ok(MatchDelta { a: delta, b: -delta })
    }

    /// The pair to vote on next.
    pub fn next_pair(&self) -> Result<(u32, u32), EloError> {
        let n = self.items.len();
        if n < 2 {
            return Err(EloError::TooFewItems(n));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
        rng.set_stream(self.rounds());
        if rng.random::<f64>() < EXPLORATION_RATE {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            return Ok((self.items[i].id, self.items[j].id));
        }

        // (matches played by the pair, rating gap, lower id, higher id)
        let mut best: Option<(u64, f64, u32, u32)> = None;
        for (i, a) in self.items.iter().enumerate() {
            for b in &self.items[i + 1..] {
                let (lo, hi) = if a.id < b.id { (a, b) } else { (b, a) };
                let key = (
                    a.matches_played + b.matches_played,
                    (a.rating - b.rating).abs(),
                    lo.id,
                    hi.id,
                );
                let better = match &best {
                    None => true,
                    Some(k) => key
                        .0
                        .cmp(&k.0)
                        .then(key.1.total_cmp(&k.1))
                        .then(key.2.cmp(&k.2))
                        .then(key.3.cmp(&k.3))
                        .is_lt(),
                };
                if better {
                    best = Some(key);
                }
            }
        }
        let (_, _, lo, hi) = best.expect("at least one pair");
        Ok((lo, hi))
    }

    /// Descending rating, ties by ascending id.
    pub fn standings(&self) -> Vec<Standing> {
        let mut rows: Vec<Standing> = self
            .items
            .iter()
            .map(|item| Standing {
                id: item.id,
                label: item.label.clone(),
                rating: item.rating,
                matches_played: item.matches_played,
            })
            .collect();
        rows.sort_by(|x, y| y.rating.total_cmp(&x.rating).then(x.id.cmp(&y.id)));
        rows
    }

    /// Tab-separated pool file: one header line with the parameters, then
    /// `id, label, rating, matches_played` per item. Ratings are written in
    /// shortest round-trip form, so reading the file back is lossless.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut out = format!(
            "{HEADER_TAG}\tK={}\tc={}\tinitial={}\tseed={}\n",
            p.k, p.c, p.initial_rating, p.seed
        );
        for item in &self.items {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                item.id,
                escape(&item.label),
                item.rating,
                item.matches_played
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, EloError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| EloError::Format {
            line: 1,
            reason: "missing header".into(),
        })?;
        let params = parse_header(header)?;
        params.validate()?;

        let mut items: Vec<EloItem> = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |reason: String| EloError::Format { line: line_no, reason };
            let fields: Vec<&str> = line.split('\t').collect();
            let [id, label, rating, played] = fields[..] else {
                return Err(bad(format!("expected 4 tab-separated fields, got {}", fields.len())));
            };
            let item = EloItem {
                id: id.parse().map_err(|_| bad(format!("bad id `{id}`")))?,
                label: unescape(label),
                rating: rating
                    .parse::<f64>()
                    .ok()
                    .filter(|r| r.is_finite())
                    .ok_or_else(|| bad(format!("bad rating `{rating}`")))?,
                matches_played: played.parse().map_err(|_| bad(format!("bad match count `{played}`")))?,
            };
            if items.iter().any(|existing| existing.id == item.id) {
                return Err(bad(format!("duplicate id {}", item.id)));
            }
            items.push(item);
        }
        Ok(Self { params, items })
    }
}

fn parse_header(line: &str) -> Result<EloParams, EloError> {
    let bad = |reason: String| EloError::Format { line: 1, reason };
    let mut fields = line.split('\t');
    if fields.next() != Some(HEADER_TAG) {
        return Err(bad(format!("header must start with `{HEADER_TAG}`")));
    }
    let mut params = EloParams::default();
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| bad(format!("bad header field `{field}`")))?;
        let number = || {
            value
                .parse::<f64>()
                .map_err(|_| bad(format!("bad value for {key}: `{value}`")))
        };
        match key {
            "K" => params.k = number()?,
            "c" => params.c = number()?,
            "initial" => params.initial_rating = number()?,
            "seed" => params.seed = value.parse().map_err(|_| bad(format!("bad seed `{value}`")))?,
            other => return Err(bad(format!("unknown header field `{other}`"))),
        }
    }
    Ok(params)
}

fn escape(label: &str) -> String {
    label.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

fn unescape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}
