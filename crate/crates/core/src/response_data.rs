//! Sessions, trial sequencing, and the append-only response dataset.
//!
//! A session runs 40 trials: 20 on the first manifold of its order, then 20
//! on the second. Each manifold position is the target exactly once, in an
//! order shuffled from the session seed, so any session can be replayed.

use std::io::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::StimulusConfig;
use crate::error::{Error, Result};
use crate::soft_labels::{SlpCatalog, N_CLASSES};
use crate::stats::{ContingencyTable, ParticipantResponses};
use crate::stimulus::FeatureVector;

pub const TRIALS_PER_MANIFOLD: usize = 20;
pub const TRIALS_PER_SESSION: u32 = 2 * TRIALS_PER_MANIFOLD as u32;

pub const CSV_HEADER: &str =
    "session_id,trial_index,manifold_id,slp_id,t_d1,t_d2,t_target,response,response_ms";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Session {
    pub session_id: String,
    pub slp_id: u32,
    /// Manifold ids in presentation order: `[1, 2]` or `[2, 1]`.
    pub manifold_order: [u8; 2],
    /// Milliseconds since the Unix epoch. Informational only.
    pub created_at: u64,
    /// Seeds the target presentation order.
    pub seed: u64,
    #[serde(skip)]
    trial_cursor: u32,
}

impl Session {
    pub fn new(
        session_id: impl Into<String>,
        slp_id: u32,
        manifold_order: [u8; 2],
        created_at: u64,
        seed: u64,
    ) -> Self {
        Self {
            session_id: session_id.into(),
            slp_id,
            manifold_order,
            created_at,
            seed,
            trial_cursor: 0,
        }
    }

    /// Index of the next trial to be answered, `0..=40`.
    pub fn trial_cursor(&self) -> u32 {
        self.trial_cursor
    }

    pub fn is_complete(&self) -> bool {
        self.trial_cursor >= TRIALS_PER_SESSION
    }

    /// Manifold shown on a given trial.
    pub fn manifold_for(&self, trial_index: u32) -> u8 {
        self.manifold_order[(trial_index as usize / TRIALS_PER_MANIFOLD).min(1)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub session_id: String,
    pub trial_index: u32,
    pub manifold_id: u8,
    pub slp_id: u32,
    pub t_d1: f64,
    pub t_d2: f64,
    pub t_target: f64,
    /// Species chosen, 1-based.
    pub response: u8,
    pub response_ms: u64,
}

/// Uniform draw of a condition and a manifold order.
pub fn assign_condition(seed: u64, catalog: &SlpCatalog) -> (u32, [u8; 2]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slp = catalog.entries()[rng.gen_range(0..catalog.len())].id;
    let order = if rng.gen_bool(0.5) { [1, 2] } else { [2, 1] };
    (slp, order)
}

/// Position index of a manifold coordinate, if it is one of the stimulus positions.
pub fn position_index(t: f64) -> Option<usize> {
    let last = (TRIALS_PER_MANIFOLD - 1) as f64;
    let i = (t * last).round();
    ((0.0..=last).contains(&i) && (i / last - t).abs() < 1e-9).then_some(i as usize)
}

/// Target order for each half of a session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresentationOrder {
    halves: [Vec<usize>; 2],
}

impl PresentationOrder {
    pub fn for_session(session: &Session) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(session.seed);
        rng.set_stream(1);
        let halves = std::array::from_fn(|_| {
            let mut order: Vec<usize> = (0..TRIALS_PER_MANIFOLD).collect();
            order.shuffle(&mut rng);
            order
        });
        Self { halves }
    }

    /// Position index of the target on a given trial.
    pub fn position(&self, trial_index: u32) -> usize {
        let i = trial_index as usize;
        self.halves[i / TRIALS_PER_MANIFOLD][i % TRIALS_PER_MANIFOLD]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialDescriptor {
    pub trial_index: u32,
    pub slp_id: u32,
    pub manifold_id: u8,
    pub position_index: usize,
    pub t_d1: f64,
    pub t_d2: f64,
    pub t_target: f64,
    pub d1: FeatureVector,
    pub d2: FeatureVector,
    pub target: FeatureVector,
}

impl TrialDescriptor {
    pub fn record(&self, session_id: &str, response: u8, response_ms: u64) -> TrialRecord {
        TrialRecord {
            session_id: session_id.to_string(),
            trial_index: self.trial_index,
            manifold_id: self.manifold_id,
            slp_id: self.slp_id,
            t_d1: self.t_d1,
            t_d2: self.t_d2,
            t_target: self.t_target,
            response,
            response_ms,
        }
    }
}

pub fn trial_at(
    session: &Session,
    trial_index: u32,
    stimuli: &StimulusConfig,
    order: &PresentationOrder,
) -> Result<TrialDescriptor> {
    if trial_index >= TRIALS_PER_SESSION {
        return Err(Error::SessionComplete(session.session_id.clone()));
    }
    let manifold_id = session.manifold_for(trial_index);
    let manifold = stimuli.manifold(manifold_id)?;
    if manifold.n_points() != TRIALS_PER_MANIFOLD {
        return Err(Error::Config(format!(
            "manifold {manifold_id} has {} points, sessions need {TRIALS_PER_MANIFOLD}",
            manifold.n_points()
        )));
    }
    let position_index = order.position(trial_index);
    let [t_d1, t_d2] = stimuli.labeled_positions;
    Ok(TrialDescriptor {
        trial_index,
        slp_id: session.slp_id,
        manifold_id,
        position_index,
        t_d1,
        t_d2,
        t_target: manifold.positions()[position_index],
        d1: manifold.point_at(t_d1)?,
        d2: manifold.point_at(t_d2)?,
        target: manifold.points()[position_index],
    })
}

/// The trial at the session's cursor.
pub fn next_trial(
    session: &Session,
    stimuli: &StimulusConfig,
    order: &PresentationOrder,
) -> Result<TrialDescriptor> {
    trial_at(session, session.trial_cursor, stimuli, order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordOutcome {
    Appended,
    /// Same session, trial, and response as an existing record.
    Duplicate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Jsonl,
    Csv,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(ExportFormat::Jsonl),
            "csv" => Ok(ExportFormat::Csv),
            _ => Err(Error::Validation(format!("unknown export format `{s}`"))),
        }
    }
}

/// One line of the JSONL log.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogLine {
    Record(TrialRecord),
    Session(Session),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    sessions: Vec<Session>,
    records: Vec<TrialRecord>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sessions(&self) -> &[Session] {
        &self.sessions
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn session(&self, id: &str) -> Option<&Session> {
        self.sessions.iter().find(|s| s.session_id == id)
    }

    pub fn add_session(&mut self, mut session: Session) -> Result<()> {
        self.check_session(&session)?;
        session.trial_cursor = 0;
        self.sessions.push(session);
        Ok(())
    }

    /// What [`Dataset::add_session`] would reject, without changing anything.
    pub fn check_session(&self, session: &Session) -> Result<()> {
        if self.session(&session.session_id).is_some() {
            return Err(Error::Conflict(format!(
                "session {} already exists",
                session.session_id
            )));
        }
        let mut order = session.manifold_order;
        order.sort_unstable();
        if order != [1, 2] {
            return Err(Error::Validation(format!(
                "manifold order {:?} is not a permutation of [1, 2]",
                session.manifold_order
            )));
        }
        Ok(())
    }

    /// Appends a response at the session cursor. Re-submitting an existing
    /// trial with the same response is a no-op.
    pub fn record_response(&mut self, record: TrialRecord) -> Result<RecordOutcome> {
        let outcome = self.check_response(&record)?;
        if outcome == RecordOutcome::Appended {
            let session = self
                .sessions
                .iter_mut()
                .find(|s| s.session_id == record.session_id)
                .expect("checked above");
            session.trial_cursor += 1;
            self.records.push(record);
        }
        Ok(outcome)
    }

    /// What [`Dataset::record_response`] would do, without changing anything.
    pub fn check_response(&self, record: &TrialRecord) -> Result<RecordOutcome> {
        let si = self
            .sessions
            .iter()
            .position(|s| s.session_id == record.session_id)
            .ok_or_else(|| Error::NotFound(format!("session {}", record.session_id)))?;
        let session = &self.sessions[si];
        if !(1..=N_CLASSES as u8).contains(&record.response) {
            return Err(Error::Validation(format!(
                "response {} is not a species id 1-3",
                record.response
            )));
        }
        if record.trial_index >= TRIALS_PER_SESSION {
            return Err(Error::Validation(format!(
                "trial index {} out of range",
                record.trial_index
            )));
        }
        if record.slp_id != session.slp_id {
            return Err(Error::Validation(format!(
                "record SLP {} differs from session SLP {}",
                record.slp_id, session.slp_id
            )));
        }
        if record.manifold_id != session.manifold_for(record.trial_index) {
            return Err(Error::Validation(format!(
                "trial {} belongs to manifold {}, not {}",
                record.trial_index,
                session.manifold_for(record.trial_index),
                record.manifold_id
            )));
        }
        if position_index(record.t_target).is_none() {
            return Err(Error::Validation(format!(
                "t_target {} is not a manifold position",
                record.t_target
            )));
        }

        let cursor = session.trial_cursor;
        if record.trial_index < cursor {
            let existing = self
                .records
                .iter()
                .find(|r| r.session_id == record.session_id && r.trial_index == record.trial_index)
                .expect("every trial below the cursor has a record");
            return if existing.response == record.response {
                Ok(RecordOutcome::Duplicate)
            } else {
                Err(Error::Conflict(format!(
                    "trial {} of session {} already answered with {}",
                    record.trial_index, record.session_id, existing.response
                )))
            };
        }
        if record.trial_index > cursor {
            return Err(Error::Sequencing {
                session_id: record.session_id.clone(),
                expected: cursor,
                got: record.trial_index,
            });
        }
        Ok(RecordOutcome::Appended)
    }

    pub fn export(&self, format: ExportFormat) -> Vec<u8> {
        match format {
            ExportFormat::Jsonl => {
                let mut out = Vec::new();
                for s in &self.sessions {
                    out.extend(jsonl_line(&LogLine::Session(s.clone())));
                }
                for r in &self.records {
                    out.extend(jsonl_line(&LogLine::Record(r.clone())));
                }
                out
            }
            ExportFormat::Csv => {
                let mut out = Vec::new();
                writeln!(out, "{CSV_HEADER}").expect("writing to a Vec");
                let mut w = csv::WriterBuilder::new()
                    .has_headers(false)
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_writer(out);
                for r in &self.records {
                    w.serialize(r).expect("records serialize");
                }
                w.into_inner().expect("flush to a Vec")
            }
        }
    }

    /// Parses either export format. JSONL carries full session metadata; a
    /// CSV load rebuilds sessions from their records with zero seed and
    /// timestamp.
    pub fn load(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        match text.lines().find(|l| !l.trim().is_empty()) {
            None => Ok(Self::new()),
            Some(first) if first.trim_start().starts_with('{') => Self::load_jsonl(text),
            Some(_) => Self::load_csv(text),
        }
    }

    fn load_jsonl(text: &str) -> Result<Self> {
        let mut sessions = Vec::new();
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LogLine = serde_json::from_str(line).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            match parsed {
                LogLine::Session(s) => sessions.push((i + 1, s)),
                LogLine::Record(r) => records.push((i + 1, r)),
            }
        }
        let mut ds = Self::new();
        for (line, s) in sessions {
            ds.add_session(s).map_err(|e| at_line(line, e))?;
        }
        for (line, r) in records {
            ds.record_response(r).map_err(|e| at_line(line, e))?;
        }
        Ok(ds)
    }

    fn load_csv(text: &str) -> Result<Self> {
        let header = text.lines().next().unwrap_or_default().trim_end_matches('\r');
        if header != CSV_HEADER {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{CSV_HEADER}`"),
            });
        }
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut ds = Self::new();
        let headers = reader
            .headers()
            .map_err(|e| at_line(1, Error::Validation(e.to_string())))?
            .clone();
        let mut raw = csv::StringRecord::new();
        loop {
            let more = reader.read_record(&mut raw).map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            if !more {
                break;
            }
            let line = raw.position().map_or(0, |p| p.line() as usize);
            let record: TrialRecord = raw.deserialize(Some(&headers)).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            if ds.session(&record.session_id).is_none() {
                let first = session_first_manifold(&record);
                let session =
                    Session::new(record.session_id.clone(), record.slp_id, [first, 3 - first], 0, 0);
                ds.add_session(session).map_err(|e| at_line(line, e))?;
            }
            ds.record_response(record).map_err(|e| at_line(line, e))?;
        }
        Ok(ds)
    }

    /// 20×3 response counts per manifold position, pooled over both manifolds.
    pub fn distribution_by_position(
        &self,
        slp_id: u32,
        catalog: &SlpCatalog,
    ) -> Result<Vec<[u64; N_CLASSES]>> {
        catalog.get(slp_id)?;
        let mut counts = vec![[0u64; N_CLASSES]; TRIALS_PER_MANIFOLD];
        let mut seen = false;
        for r in self.records.iter().filter(|r| r.slp_id == slp_id) {
            let pos = position_index(r.t_target).expect("validated on insert");
            counts[pos][usize::from(r.response - 1)] += 1;
            seen = true;
        }
        if !seen {
            return Err(Error::NotFound(format!("no trials for SLP {slp_id}")));
        }
        Ok(counts)
    }

    /// 14×3 response counts per SLP in catalog order.
    pub fn aggregate_by_slp(&self, catalog: &SlpCatalog) -> Vec<[u64; N_CLASSES]> {
        let mut counts = vec![[0u64; N_CLASSES]; catalog.len()];
        for r in &self.records {
            if let Some(i) = catalog.index_of(r.slp_id) {
                counts[i][usize::from(r.response - 1)] += 1;
            }
        }
        counts
    }

    /// Responses of every completed session, indexed by manifold position.
    pub fn participants(&self) -> Vec<ParticipantResponses> {
        self.sessions
            .iter()
            .filter(|s| s.is_complete())
            .map(|s| {
                let mut by_manifold = [vec![0u8; TRIALS_PER_MANIFOLD], vec![0u8; TRIALS_PER_MANIFOLD]];
                for r in self.records.iter().filter(|r| r.session_id == s.session_id) {
                    let pos = position_index(r.t_target).expect("validated on insert");
                    by_manifold[usize::from(r.manifold_id - 1)][pos] = r.response;
                }
                let [manifold1, manifold2] = by_manifold;
                ParticipantResponses {
                    id: s.session_id.clone(),
                    slp_id: s.slp_id,
                    manifold1,
                    manifold2,
                }
            })
            .collect()
    }
}

fn session_first_manifold(first_record: &TrialRecord) -> u8 {
    if (first_record.trial_index as usize) < TRIALS_PER_MANIFOLD {
        first_record.manifold_id
    } else {
        3 - first_record.manifold_id
    }
}

fn at_line(line: usize, e: Error) -> Error {
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

pub fn jsonl_line(line: &LogLine) -> Vec<u8> {
    let mut v = serde_json::to_vec(line).expect("log lines serialize");
    v.push(b'\n');
    v
}

/// Counts table with position or SLP row labels and species column labels.
pub fn counts_table(rows: &[[u64; N_CLASSES]], row_labels: Vec<String>) -> Result<ContingencyTable> {
    ContingencyTable::new(rows.iter().map(|r| r.to_vec()).collect())?.with_labels(
        row_labels,
        (1..=N_CLASSES).map(|k| format!("species{k}")).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (StimulusConfig, SlpCatalog) {
        (StimulusConfig::builtin(), SlpCatalog::builtin())
    }

    fn run_session(
        ds: &mut Dataset,
        cfg: &StimulusConfig,
        id: &str,
        slp: u32,
        seed: u64,
        answer: impl Fn(u32) -> u8,
    ) {
        let order = if seed.is_multiple_of(2) { [1, 2] } else { [2, 1] };
        ds.add_session(Session::new(id, slp, order, 0, seed)).unwrap();
        let session = ds.session(id).unwrap().clone();
        let po = PresentationOrder::for_session(&session);
        for i in 0..TRIALS_PER_SESSION {
            let t = trial_at(&session, i, cfg, &po).unwrap();
            ds.record_response(t.record(id, answer(i), 100)).unwrap();
        }
    }

    #[test]
    fn assignment_is_deterministic_and_covers_orders() {
        let c = SlpCatalog::builtin();
        assert_eq!(assign_condition(42, &c), assign_condition(42, &c));
        let orders: std::collections::HashSet<_> = (0..50).map(|s| assign_condition(s, &c).1).collect();
        assert_eq!(orders.len(), 2);
    }

    #[test]
    fn assignment_is_uniform() {
        let c = SlpCatalog::builtin();
        let mut counts = std::collections::HashMap::new();
        // Seeds 0..14000 put one SLP at 3.04σ, a 4% event across 14 cells;
        // this range is the next block of 14000.
        for seed in 14_000..28_000u64 {
            *counts.entry(assign_condition(seed, &c).0).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 14);
        // Binomial(14000, 1/14): mean 1000, sd ≈ 30.9.
        let sd = (14_000.0f64 * (1.0 / 14.0) * (13.0 / 14.0)).sqrt();
        for (id, n) in counts {
            assert!((f64::from(n) - 1000.0).abs() <= 3.0 * sd, "SLP {id}: {n}");
        }
    }

    #[test]
    fn session_covers_every_position_once_per_manifold() {
        let (cfg, _) = setup();
        let s = Session::new("s", 4, [2, 1], 0, 7);
        let po = PresentationOrder::for_session(&s);
        let mut seen = [vec![], vec![]];
        for i in 0..TRIALS_PER_SESSION {
            let t = trial_at(&s, i, &cfg, &po).unwrap();
            assert_eq!(t.slp_id, 4);
            seen[(i / 20) as usize].push(t.position_index);
            assert_eq!(t.manifold_id, if i < 20 { 2 } else { 1 });
        }
        for mut half in seen {
            half.sort_unstable();
            assert_eq!(half, (0..20).collect::<Vec<_>>());
        }
        assert_eq!(PresentationOrder::for_session(&s), po);
        assert!(matches!(
            trial_at(&s, 40, &cfg, &po),
            Err(Error::SessionComplete(_))
        ));
    }

    #[test]
    fn record_response_rules() {
        let (cfg, _) = setup();
        let mut ds = Dataset::new();
        let s = Session::new("s", 1, [1, 2], 0, 3);
        ds.add_session(s.clone()).unwrap();
        let po = PresentationOrder::for_session(&s);
        let t0 = trial_at(&s, 0, &cfg, &po).unwrap();
        assert_eq!(
            ds.record_response(t0.record("s", 2, 10)).unwrap(),
            RecordOutcome::Appended
        );
        assert_eq!(ds.records().len(), 1);
        assert_eq!(ds.session("s").unwrap().trial_cursor(), 1);
        assert_eq!(
            ds.record_response(t0.record("s", 2, 99)).unwrap(),
            RecordOutcome::Duplicate
        );
        assert_eq!(ds.records().len(), 1);
        assert!(matches!(
            ds.record_response(t0.record("s", 3, 10)),
            Err(Error::Conflict(_))
        ));
        let t5 = trial_at(&s, 5, &cfg, &po).unwrap();
        assert!(matches!(
            ds.record_response(t5.record("s", 1, 10)),
            Err(Error::Sequencing {
                expected: 1,
                got: 5,
                ..
            })
        ));
        let t1 = trial_at(&s, 1, &cfg, &po).unwrap();
        assert!(matches!(
            ds.record_response(t1.record("s", 4, 10)),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            ds.record_response(t1.record("x", 1, 10)),
            Err(Error::NotFound(_))
        ));
        let mut wrong = t1.record("s", 1, 10);
        wrong.t_target = 0.3;
        assert!(matches!(ds.record_response(wrong), Err(Error::Validation(_))));
        assert!(matches!(ds.add_session(s), Err(Error::Conflict(_))));
    }

    #[test]
    fn export_round_trips() {
        let (cfg, _) = setup();
        let mut ds = Dataset::new();
        assert_eq!(Dataset::load(&ds.export(ExportFormat::Jsonl)).unwrap(), ds);
        assert_eq!(
            ds.export(ExportFormat::Csv),
            format!("{CSV_HEADER}\n").into_bytes()
        );
        assert_eq!(Dataset::load(&ds.export(ExportFormat::Csv)).unwrap(), ds);

        run_session(&mut ds, &cfg, "a", 13, 1, |i| (i % 3 + 1) as u8);
        run_session(&mut ds, &cfg, "b", 2, 2, |i| (i % 2 + 1) as u8);
        let jsonl = ds.export(ExportFormat::Jsonl);
        let back = Dataset::load(&jsonl).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.export(ExportFormat::Jsonl), jsonl);

        let csv = ds.export(ExportFormat::Csv);
        let text = String::from_utf8(csv.clone()).unwrap();
        assert!(text.lines().all(|l| l.split(',').count() == 9));
        assert!(!text.contains('\r'));
        let back = Dataset::load(&csv).unwrap();
        assert_eq!(back.records(), ds.records());
        assert_eq!(back.export(ExportFormat::Csv), csv);
        for (a, b) in back.sessions().iter().zip(ds.sessions()) {
            assert_eq!(a.manifold_order, b.manifold_order);
            assert_eq!(a.slp_id, b.slp_id);
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let (cfg, _) = setup();
        let mut ds = Dataset::new();
        run_session(&mut ds, &cfg, "a", 13, 1, |_| 1);
        let mut text = String::from_utf8(ds.export(ExportFormat::Jsonl)).unwrap();
        text.push_str("{not json}\n");
        match Dataset::load(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 42),
            other => panic!("{other:?}"),
        }
        let mut csv = String::from_utf8(ds.export(ExportFormat::Csv)).unwrap();
        csv.push_str("a,40,1,13,0.25,0.75,zero,1,0\n");
        match Dataset::load(csv.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 42),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Dataset::load(b"wrong,header\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn contingency_builders() {
        let (cfg, catalog) = setup();
        let mut ds = Dataset::new();
        run_session(&mut ds, &cfg, "a", 13, 1, |_| 1);
        let by_pos = ds.distribution_by_position(13, &catalog).unwrap();
        assert_eq!(by_pos.len(), 20);
        assert!(by_pos.iter().all(|r| r.iter().sum::<u64>() == 2));
        assert_eq!(by_pos.iter().map(|r| r.iter().sum::<u64>()).sum::<u64>(), 40);
        assert!(matches!(
            ds.distribution_by_position(3, &catalog),
            Err(Error::NotFound(_))
        ));
        assert!(matches!(
            ds.distribution_by_position(1, &catalog),
            Err(Error::NotFound(_))
        ));

        // Second session answers 3 on manifold 1 and 2 on manifold 2.
        ds.add_session(Session::new("b", 13, [2, 1], 0, 9)).unwrap();
        let s = ds.session("b").unwrap().clone();
        let po = PresentationOrder::for_session(&s);
        for i in 0..TRIALS_PER_SESSION {
            let t = trial_at(&s, i, &cfg, &po).unwrap();
            let answer = if t.manifold_id == 1 { 3 } else { 2 };
            ds.record_response(t.record("b", answer, 0)).unwrap();
        }
        let by_pos = ds.distribution_by_position(13, &catalog).unwrap();
        assert!(by_pos.iter().all(|r| *r == [2, 1, 1]));
        let agg = ds.aggregate_by_slp(&catalog);
        let row = catalog.index_of(13).unwrap();
        assert_eq!(agg[row], [40, 20, 20]);
        assert!(agg.iter().enumerate().all(|(i, r)| i == row || *r == [0, 0, 0]));

        let ps = ds.participants();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[1].manifold1, vec![3; 20]);
        assert_eq!(ps[1].manifold2, vec![2; 20]);
    }

    #[test]
    fn position_index_lookup() {
        assert_eq!(position_index(0.0), Some(0));
        assert_eq!(position_index(1.0), Some(19));
        assert_eq!(position_index(5.0 / 19.0), Some(5));
        assert_eq!(position_index(0.25), None);
        assert_eq!(position_index(1.5), None);
    }
}
