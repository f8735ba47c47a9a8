//! Sessions on disk.
//!
//! Each session is two files in the data directory:
//!
//! * `<id>.session.json`: formula, granularity, tie-break, seed, the name
//!   of the spectrum file and the feedback log;
//! * `<id>.spectrum.<revision>.json`: the canonical spectrum document.
//!
//! The session file is the commit point. It is replaced atomically (write
//! to a temp file, fsync, rename) after every state change, and a
//! reanalysis writes the new spectrum under a fresh revision before the
//! session file that points at it. Loading a session replays its log, so
//! rankings are never stored, only recomputed.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use sbfl_core::formula::Formula;
use sbfl_core::ingest::{parse_canonical, parse_canonical_value, CanonicalDocument};
use sbfl_core::interactive::{FeedbackAction, Session};
use sbfl_core::ranking::{self, TieBreak};
use sbfl_core::spectrum::{ElementId, ElementKind, Spectrum};

use crate::error::ServiceError;
use crate::wire::{
    CreateRequest, ExplanationBody, ExportDocument, FeedbackRequest, HierarchyBody, RankingBody, ReanalyzeResponse,
    EXPORT_VERSION,
};

pub const SESSION_VERSION: &str = "sbfl-session/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFile {
    pub version: String,
    /// spectrum file name, relative to the data directory
    pub spectrum: String,
    pub revision: u64,
    pub formula: String,
    pub granularity: ElementKind,
    pub tiebreak: TieBreak,
    pub seed: u64,
    pub log: Vec<FeedbackAction>,
}

struct Slot {
    session: Session,
    revision: u64,
    seed: u64,
}

type Shared = Arc<Mutex<Slot>>;

/// All sessions of one data directory.
///
/// Requests against different sessions run concurrently; each session is
/// behind its own lock so writes to it are serialized.
pub struct SessionStore {
    dir: PathBuf,
    seed: u64,
    next: Mutex<u64>,
    sessions: Mutex<Registry>,
}

#[derive(Default)]
struct Registry {
    live: HashMap<String, Shared>,
    /// ids handed out whose files are still being written
    reserved: HashSet<String>,
}

impl SessionStore {
    /// Opens (creating if needed) a data directory. Session ids are drawn
    /// from a generator seeded with `seed`, skipping ids already on disk.
    pub fn open(dir: impl Into<PathBuf>, seed: u64) -> Result<Self, ServiceError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        Ok(SessionStore {
            dir,
            seed,
            next: Mutex::new(0),
            sessions: Mutex::new(Registry::default()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn create(&self, request: CreateRequest) -> Result<(String, RankingBody), ServiceError> {
        let parsed = parse_canonical_value(request.spectrum)?;
        let formula = Formula::resolve(&request.formula)?;
        let granularity = match request.granularity.as_deref() {
            Some(text) => parse_kind(text)?,
            None => default_granularity(&parsed.spectrum)?,
        };
        let tiebreak = match request.tiebreak.as_deref() {
            Some(text) => parse_tiebreak(text)?,
            None => TieBreak::default(),
        };
        let session = Session::new(
            Arc::new(parsed.spectrum),
            formula,
            granularity,
            tiebreak,
            parsed.call_graph,
        )?;
        let body = RankingBody::of(&session, None);
        let id = self.insert(session, None)?;
        Ok((id, body))
    }

    /// Rebuilds an exported session under a new id. The export's ranking
    /// must match what its log replays to.
    pub fn import(&self, export: ExportDocument) -> Result<(String, RankingBody), ServiceError> {
        if export.version != EXPORT_VERSION {
            return Err(ServiceError::invalid(
                "VersionMismatch",
                format!(
                    "unsupported export version `{}`, expected `{EXPORT_VERSION}`",
                    export.version
                ),
            ));
        }
        let parsed = parse_canonical_value(export.spectrum)?;
        let formula = Formula::resolve(&export.formula)?;
        let mut session = Session::new(
            Arc::new(parsed.spectrum),
            formula,
            export.granularity,
            export.tiebreak,
            parsed.call_graph,
        )?;
        for action in export.log {
            session.apply_feedback(action)?;
        }
        let body = RankingBody::of(&session, None);
        if body != export.ranking {
            return Err(ServiceError::invalid(
                "InconsistentExport",
                "replaying the exported log does not reproduce the exported ranking",
            ));
        }
        let id = self.insert(session, Some(export.seed))?;
        Ok((id, body))
    }

    pub fn ranking(&self, id: &str, limit: Option<usize>) -> Result<RankingBody, ServiceError> {
        self.read(id, |slot| Ok(RankingBody::of(&slot.session, limit)))
    }

    pub fn explanation(&self, id: &str, element: ElementId) -> Result<ExplanationBody, ServiceError> {
        self.read(id, |slot| ExplanationBody::of(&slot.session, element))
    }

    pub fn hierarchy(&self, id: &str) -> Result<HierarchyBody, ServiceError> {
        self.read(id, |slot| HierarchyBody::of(&slot.session))
    }

    pub fn feedback(&self, id: &str, request: FeedbackRequest) -> Result<RankingBody, ServiceError> {
        self.write(id, |slot| {
            slot.session.feedback(request.element, request.verdict)?;
            Ok((false, RankingBody::of(&slot.session, None)))
        })
    }

    pub fn undo(&self, id: &str) -> Result<RankingBody, ServiceError> {
        self.write(id, |slot| {
            slot.session.undo()?;
            Ok((false, RankingBody::of(&slot.session, None)))
        })
    }

    pub fn reanalyze(&self, id: &str, spectrum: serde_json::Value) -> Result<ReanalyzeResponse, ServiceError> {
        let parsed = parse_canonical_value(spectrum)?;
        self.write(id, move |slot| {
            let outcome = slot.session.reanalyze(Arc::new(parsed.spectrum), parsed.call_graph)?;
            slot.revision += 1;
            let response = ReanalyzeResponse {
                skipped: outcome.skipped,
                ranking: RankingBody::of(&slot.session, None),
            };
            Ok((true, response))
        })
    }

    pub fn export(&self, id: &str) -> Result<ExportDocument, ServiceError> {
        self.read(id, |slot| {
            let session = &slot.session;
            let document = CanonicalDocument::from_spectrum(session.spectrum(), session.call_graph());
            Ok(ExportDocument {
                version: EXPORT_VERSION.to_string(),
                formula: session.formula().label().to_string(),
                granularity: session.granularity(),
                tiebreak: session.tiebreak(),
                seed: slot.seed,
                log: session.log().to_vec(),
                spectrum: serde_json::to_value(document).map_err(internal)?,
                ranking: RankingBody::of(session, None),
            })
        })
    }

    fn read<T>(&self, id: &str, f: impl FnOnce(&Slot) -> Result<T, ServiceError>) -> Result<T, ServiceError> {
        let shared = self.get(id)?;
        let slot = shared.lock().map_err(|_| poisoned(id))?;
        f(&slot)
    }

    /// Runs a mutation on a copy of the session, persists it, then
    /// publishes it. `f` returns whether the spectrum changed.
    fn write<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Slot) -> Result<(bool, T), ServiceError>,
    ) -> Result<T, ServiceError> {
        let shared = self.get(id)?;
        let mut slot = shared.lock().map_err(|_| poisoned(id))?;
        let mut draft = Slot {
            session: slot.session.clone(),
            revision: slot.revision,
            seed: slot.seed,
        };
        let (spectrum_changed, out) = f(&mut draft)?;
        if spectrum_changed {
            self.write_spectrum(id, &draft)?;
        }
        self.write_session(id, &draft)?;
        if spectrum_changed {
            let _ = fs::remove_file(self.dir.join(spectrum_name(id, slot.revision)));
        }
        *slot = draft;
        Ok(out)
    }

    fn get(&self, id: &str) -> Result<Shared, ServiceError> {
        if !valid_id(id) {
            return Err(ServiceError::UnknownSession(id.to_string()));
        }
        if let Some(shared) = self.sessions.lock().map_err(|_| poisoned(id))?.live.get(id) {
            return Ok(shared.clone());
        }
        let slot = self.load(id)?;
        let mut sessions = self.sessions.lock().map_err(|_| poisoned(id))?;
        Ok(sessions
            .live
            .entry(id.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(slot)))
            .clone())
    }

    fn load(&self, id: &str) -> Result<Slot, ServiceError> {
        let path = self.session_path(id);
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(ServiceError::UnknownSession(id.to_string()))
            }
            Err(e) => return Err(io_error(&path, e)),
        };
        let file: SessionFile =
            serde_json::from_str(&text).map_err(|e| ServiceError::Internal(format!("{}: {e}", path.display())))?;
        if file.version != SESSION_VERSION {
            return Err(ServiceError::Internal(format!(
                "{}: unsupported session version `{}`",
                path.display(),
                file.version
            )));
        }
        let spectrum_path = self.dir.join(&file.spectrum);
        let spectrum_text = fs::read_to_string(&spectrum_path).map_err(|e| io_error(&spectrum_path, e))?;
        let corrupt =
            |e: &dyn std::fmt::Display| ServiceError::Internal(format!("session `{id}` cannot be restored: {e}"));
        let parsed = parse_canonical(&spectrum_text).map_err(|e| corrupt(&e))?;
        let formula = Formula::resolve(&file.formula).map_err(|e| corrupt(&e))?;
        let mut session = Session::new(
            Arc::new(parsed.spectrum),
            formula,
            file.granularity,
            file.tiebreak,
            parsed.call_graph,
        )
        .map_err(|e| corrupt(&e))?;
        for action in file.log {
            session.apply_feedback(action).map_err(|e| corrupt(&e))?;
        }
        Ok(Slot {
            session,
            revision: file.revision,
            seed: file.seed,
        })
    }

    fn insert(&self, session: Session, seed: Option<u64>) -> Result<String, ServiceError> {
        let (id, token) = self.allocate_id()?;
        let slot = Slot {
            session,
            revision: 0,
            seed: seed.unwrap_or(token),
        };
        let persisted = self
            .write_spectrum(&id, &slot)
            .and_then(|()| self.write_session(&id, &slot));
        let mut sessions = self.sessions.lock().map_err(|_| poisoned(&id))?;
        sessions.reserved.remove(&id);
        persisted?;
        sessions.live.insert(id.clone(), Arc::new(Mutex::new(slot)));
        Ok(id)
    }

    /// Next unused id, reserved until `insert` publishes or drops it.
    fn allocate_id(&self) -> Result<(String, u64), ServiceError> {
        let mut next = self.next.lock().map_err(|_| poisoned("<allocator>"))?;
        loop {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(*next);
            *next += 1;
            let token: u64 = rng.random();
            let id = format!("{token:016x}");
            let mut sessions = self.sessions.lock().map_err(|_| poisoned(&id))?;
            if sessions.live.contains_key(&id) || sessions.reserved.contains(&id) || self.session_path(&id).exists() {
                continue;
            }
            sessions.reserved.insert(id.clone());
            return Ok((id, token));
        }
    }

    fn write_spectrum(&self, id: &str, slot: &Slot) -> Result<(), ServiceError> {
        let session = &slot.session;
        let text = sbfl_core::ingest::export_canonical(session.spectrum(), session.call_graph());
        atomic_write(&self.dir.join(spectrum_name(id, slot.revision)), text.as_bytes())
    }

    fn write_session(&self, id: &str, slot: &Slot) -> Result<(), ServiceError> {
        let session = &slot.session;
        let file = SessionFile {
            version: SESSION_VERSION.to_string(),
            spectrum: spectrum_name(id, slot.revision),
            revision: slot.revision,
            formula: session.formula().label().to_string(),
            granularity: session.granularity(),
            tiebreak: session.tiebreak(),
            seed: slot.seed,
            log: session.log().to_vec(),
        };
        let mut text = serde_json::to_string_pretty(&file).map_err(internal)?;
        text.push('\n');
        atomic_write(&self.session_path(id), text.as_bytes())
    }

    fn session_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.session.json"))
    }
}

fn spectrum_name(id: &str, revision: u64) -> String {
    format!("{id}.spectrum.{revision}.json")
}

fn valid_id(id: &str) -> bool {
    id.len() == 16 && id.bytes().all(|b| b.is_ascii_hexdigit() && !b.is_ascii_uppercase())
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), ServiceError> {
    let tmp = path.with_extension("json.tmp");
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| io_error(path, e))
}

fn default_granularity(spectrum: &Spectrum) -> Result<ElementKind, ServiceError> {
    ranking::default_granularity(spectrum)
        .ok_or_else(|| ServiceError::invalid("NoSuchGranularity", "spectrum has no elements to rank"))
}

fn parse_kind(text: &str) -> Result<ElementKind, ServiceError> {
    ElementKind::parse(text)
        .ok_or_else(|| ServiceError::invalid("InvalidGranularity", format!("unknown granularity `{text}`")))
}

fn parse_tiebreak(text: &str) -> Result<TieBreak, ServiceError> {
    TieBreak::parse(text).ok_or_else(|| ServiceError::invalid("InvalidTieBreak", format!("unknown tie-break `{text}`")))
}

fn io_error(path: &Path, e: std::io::Error) -> ServiceError {
    ServiceError::Internal(format!("{}: {e}", path.display()))
}

fn internal(e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Internal(e.to_string())
}

fn poisoned(id: &str) -> ServiceError {
    ServiceError::Internal(format!("lock for `{id}` poisoned by an earlier panic"))
}
