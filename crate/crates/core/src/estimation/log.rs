//! Rating logs: ingestion from CSV and synthetic generation.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::model::{fmt_f64, Instance};

/// Default minimum number of events a user needs to be kept.
pub const DEFAULT_MIN_EVENTS: usize = 4096;
pub const DEFAULT_RATING_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEvent {
    pub arm: usize,
    pub loss: f64,
}

/// One user's time-ordered selections and losses.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingLog {
    pub user_id: String,
    pub events: Vec<LogEvent>,
}

impl RatingLog {
    pub fn new(user_id: impl Into<String>, events: Vec<LogEvent>, k: usize) -> Result<Self> {
        for e in &events {
            if e.arm >= k {
                return Err(Error::ArmOutOfRange { arm: e.arm, k });
            }
            if !e.loss.is_finite() {
                return Err(Error::NonFinite("log loss"));
            }
        }
        Ok(Self {
            user_id: user_id.into(),
            events,
        })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Everything but the last event, and the last event.
    pub fn split_last(&self) -> Result<(&[LogEvent], LogEvent)> {
        match self.events.split_last() {
            Some((last, train)) if !train.is_empty() => Ok((train, *last)),
            _ => Err(Error::InsufficientData(format!(
                "user {} needs at least two events for leave-one-out",
                self.user_id
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub k: usize,
    pub rating_max: f64,
    pub seed: u64,
    pub min_events: usize,
    /// Arm names to indices; when absent, arms are 0-based integers.
    pub arm_map: Option<HashMap<String, usize>>,
}

impl IngestOptions {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            rating_max: DEFAULT_RATING_MAX,
            seed,
            min_events: DEFAULT_MIN_EVENTS,
            arm_map: None,
        }
    }
}

/// A skipped input row.
#[derive(Debug, Clone, PartialEq)]
pub struct RowIssue {
    /// 1-based line number in the file, header included.
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    /// Kept users, sorted by id.
    pub logs: Vec<RatingLog>,
    pub skipped_rows: Vec<RowIssue>,
    /// Users dropped for having fewer than `min_events` rows.
    pub filtered_users: usize,
}

/// Reads an arm map: one `name,index` pair per line, header optional.
pub fn read_arm_map(path: impl AsRef<Path>) -> Result<HashMap<String, usize>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)?;
    let mut map = HashMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let (Some(name), Some(index)) = (rec.get(0), rec.get(1)) else {
            return Err(Error::Parse(format!("arm map line {}: expected name,index", i + 1)));
        };
        match index.trim().parse::<usize>() {
            Ok(idx) => {
                map.insert(name.trim().to_string(), idx);
            }
            Err(_) if i == 0 => continue,
            Err(_) => return Err(Error::Parse(format!("arm map line {}: bad index `{index}`", i + 1))),
        }
    }
    Ok(map)
}

pub fn ingest_rating_csv(path: impl AsRef<Path>, opts: &IngestOptions) -> Result<IngestReport> {
    ingest_rating_reader(std::fs::File::open(path)?, opts)
}

/// Parses `user,timestamp,arms,rating` rows. `arms` lists candidate arms
/// separated by `;`; one is drawn uniformly with the seeded generator when
/// there are several. Loss is `rating_max - rating`.
pub fn ingest_rating_reader<R: Read>(input: R, opts: &IngestOptions) -> Result<IngestReport> {
    if opts.k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (c_user, c_time, c_arms, c_rating) = (column("user")?, column("timestamp")?, column("arms")?, column("rating")?);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut per_user: BTreeMap<String, Vec<(i64, u64, LogEvent)>> = BTreeMap::new();
    let mut skipped = Vec::new();

    for (row, rec) in reader.records().enumerate() {
        let line = row as u64 + 2;
        let rec = match rec {
            Ok(rec) => rec,
            Err(e) => {
                skipped.push(RowIssue { line, message: e.to_string() });
                continue;
            }
        };
        let field = |i: usize| rec.get(i).map(str::trim).unwrap_or("");
        let parsed = (|| -> std::result::Result<(String, i64, usize, f64), String> {
            let user = field(c_user);
            if user.is_empty() {
                return Err("empty user".into());
            }
            let ts: i64 = field(c_time)
                .parse()
                .map_err(|_| format!("bad timestamp `{}`", field(c_time)))?;
            let rating: f64 = field(c_rating)
                .parse()
                .map_err(|_| format!("bad rating `{}`", field(c_rating)))?;
            if !rating.is_finite() {
                return Err("non-finite rating".into());
            }
            let candidates = field(c_arms)
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|name| resolve_arm(name, opts))
                .collect::<std::result::Result<Vec<usize>, String>>()?;
            let arm = match candidates.len() {
                0 => return Err("no candidate arms".into()),
                1 => candidates[0],
                n => candidates[rng.random_range(0..n)],
            };
            Ok((user.to_string(), ts, arm, opts.rating_max - rating))
        })();
        match parsed {
            Ok((user, ts, arm, loss)) => per_user
                .entry(user)
                .or_default()
                .push((ts, line, LogEvent { arm, loss })),
            Err(message) => skipped.push(RowIssue { line, message }),
        }
    }

    let mut logs = Vec::new();
    let mut filtered_users = 0;
    for (user, mut rows) in per_user {
        if rows.len() < opts.min_events {
            filtered_users += 1;
            continue;
        }
        // ties on timestamp keep file order
        rows.sort_by_key(|&(ts, line, _)| (ts, line));
        logs.push(RatingLog {
            user_id: user,
            events: rows.into_iter().map(|(_, _, e)| e).collect(),
        });
    }
    Ok(IngestReport {
        logs,
        skipped_rows: skipped,
        filtered_users,
    })
}

fn resolve_arm(name: &str, opts: &IngestOptions) -> std::result::Result<usize, String> {
    let idx = match &opts.arm_map {
        Some(map) => *map.get(name).ok_or_else(|| format!("unknown arm `{name}`"))?,
        None => name.parse::<usize>().map_err(|_| format!("bad arm `{name}`"))?,
    };
    if idx >= opts.k {
        return Err(format!("arm {idx} out of range for {} arms", opts.k));
    }
    Ok(idx)
}

/// How a synthetic user picks arms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogGenerator {
    /// Uniformly at random every round.
    Uniform,
    /// Repeats the previous arm with probability `stay`, otherwise uniform.
    Sticky { stay: f64 },
}

/// Simulates a user on `inst` and records the observed losses.
pub fn synthetic_log(
    user_id: impl Into<String>,
    inst: &Instance<f64>,
    n_events: usize,
    generator: LogGenerator,
    seed: u64,
) -> Result<RatingLog> {
    let k = inst.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_1065);
    let mut env = Environment::new(inst.clone(), seed);
    let mut events = Vec::with_capacity(n_events);
    let mut prev: Option<usize> = None;
    for _ in 0..n_events {
        let arm = match (generator, prev) {
            (LogGenerator::Sticky { stay }, Some(p)) if rng.random::<f64>() < stay => p,
            _ => rng.random_range(0..k),
        };
        let loss = env.step(arm)?;
        events.push(LogEvent { arm, loss });
        prev = Some(arm);
    }
    RatingLog::new(user_id, events, k)
}

/// Writes logs in the ingestion format with `rating = rating_max - loss` and
/// timestamps equal to the event index.
pub fn write_rating_csv<W: Write>(writer: W, logs: &[RatingLog], rating_max: f64) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["user", "timestamp", "arms", "rating"])?;
    for log in logs {
        for (i, e) in log.events.iter().enumerate() {
            out.write_record([
                log.user_id.clone(),
                i.to_string(),
                e.arm.to_string(),
                fmt_f64(rating_max - e.loss),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(k: usize, min_events: usize) -> IngestOptions {
        IngestOptions {
            min_events,
            ..IngestOptions::new(k, 0)
        }
    }

    #[test]
    fn loss_is_rating_max_minus_rating() {
        let csv = "user,timestamp,arms,rating\nu,1,0,5\nu,2,1,1\n";
        let rep = ingest_rating_reader(csv.as_bytes(), &opts(2, 1)).unwrap();
        assert_eq!(rep.logs[0].events, vec![LogEvent { arm: 0, loss: 0.0 }, LogEvent { arm: 1, loss: 4.0 }]);
    }

    #[test]
    fn events_sorted_by_timestamp() {
        let csv = "user,timestamp,arms,rating\nu,9,1,3\nu,2,0,4\nu,5,2,5\n";
        let rep = ingest_rating_reader(csv.as_bytes(), &opts(3, 1)).unwrap();
        let arms: Vec<usize> = rep.logs[0].events.iter().map(|e| e.arm).collect();
        assert_eq!(arms, vec![0, 2, 1]);
    }

    #[test]
    fn single_genre_rows_ignore_seed() {
        let csv = "user,timestamp,arms,rating\nu,1,2,3\nu,2,0,4\n";
        let a = ingest_rating_reader(csv.as_bytes(), &IngestOptions { seed: 1, ..opts(3, 1) }).unwrap();
        let b = ingest_rating_reader(csv.as_bytes(), &IngestOptions { seed: 2, ..opts(3, 1) }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn multi_genre_rows_pick_a_listed_arm() {
        let mut csv = String::from("user,timestamp,arms,rating\n");
        for i in 0..200 {
            csv.push_str(&format!("u,{i},1;3,4\n"));
        }
        let rep = ingest_rating_reader(csv.as_bytes(), &opts(4, 1)).unwrap();
        let arms: Vec<usize> = rep.logs[0].events.iter().map(|e| e.arm).collect();
        assert!(arms.iter().all(|&a| a == 1 || a == 3));
        assert!(arms.contains(&1) && arms.contains(&3));
    }

    #[test]
    fn malformed_rows_are_reported_and_skipped() {
        let csv = "user,timestamp,arms,rating\nu,1,0,5\nu,x,0,5\nu,3,7,5\nu,4,0,\nu,5,1,2\n";
        let rep = ingest_rating_reader(csv.as_bytes(), &opts(2, 1)).unwrap();
        assert_eq!(rep.logs[0].len(), 2);
        let lines: Vec<u64> = rep.skipped_rows.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![3, 4, 5]);
    }

    #[test]
    fn missing_column_names_it() {
        let csv = "user,timestamp,genre,rating\nu,1,0,5\n";
        match ingest_rating_reader(csv.as_bytes(), &opts(2, 1)) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "arms"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn min_event_filter_keeps_exactly_the_heavy_users() {
        // only users with at least 4096 rows survive
        let mut csv = String::from("user,timestamp,arms,rating\n");
        let sizes = [4095usize, 4096, 5000, 10, 8000];
        for (u, &n) in sizes.iter().enumerate() {
            for t in 0..n {
                csv.push_str(&format!("user{u},{t},{},3\n", t % 2));
            }
        }
        let rep = ingest_rating_reader(csv.as_bytes(), &opts(2, DEFAULT_MIN_EVENTS)).unwrap();
        let kept: Vec<&str> = rep.logs.iter().map(|l| l.user_id.as_str()).collect();
        let expected: Vec<String> = sizes
            .iter()
            .enumerate()
            .filter(|(_, &n)| n >= 4096)
            .map(|(u, _)| format!("user{u}"))
            .collect();
        assert_eq!(kept, expected);
        assert_eq!(rep.filtered_users, 2);
    }

    #[test]
    fn arm_names_resolve_through_map() {
        let map: HashMap<String, usize> = [("Horror".to_string(), 0), ("Comedy".to_string(), 1)].into();
        let csv = "user,timestamp,arms,rating\nu,1,Comedy,5\nu,2,Drama,3\n";
        let o = IngestOptions {
            arm_map: Some(map),
            ..opts(2, 1)
        };
        let rep = ingest_rating_reader(csv.as_bytes(), &o).unwrap();
        assert_eq!(rep.logs[0].events[0].arm, 1);
        assert_eq!(rep.skipped_rows.len(), 1);
    }

    #[test]
    fn written_csv_round_trips() {
        let inst = crate::experiments::random_instance(3, 4).unwrap();
        let log = synthetic_log("a", &inst, 50, LogGenerator::Uniform, 3).unwrap();
        let mut buf = Vec::new();
        write_rating_csv(&mut buf, std::slice::from_ref(&log), 5.0).unwrap();
        let rep = ingest_rating_reader(buf.as_slice(), &opts(3, 1)).unwrap();
        assert_eq!(rep.logs[0].events.len(), 50);
        for (a, b) in rep.logs[0].events.iter().zip(&log.events) {
            assert_eq!(a.arm, b.arm);
            assert!((a.loss - b.loss).abs() < 1e-12);
        }
    }
}
