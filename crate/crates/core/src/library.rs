//! The user's bibliography: saved papers, citation markers and DOI entries.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::OnceLock;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LibraryError {
    #[error("unknown paper `{0}`")]
    UnknownPaper(String),
    #[error("marker `{0}` is already in use")]
    DuplicateMarker(String),
    #[error("`{0}` not found")]
    NotFound(String),
    #[error("malformed DOI `{0}`")]
    MalformedDoi(String),
    #[error("DOI `{0}` not found")]
    DoiNotFound(String),
    #[error("metadata resolver unavailable: {0}")]
    ResolverUnavailable(String),
    #[error("library file: {0}")]
    Storage(String),
}

/// Bibliographic metadata for a DOI that is not part of the corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalMetadata {
    pub doi: String,
    pub title: String,
    #[serde(default)]
    pub authors: Vec<String>,
    #[serde(default)]
    pub journal: String,
    #[serde(default)]
    pub year: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryEntry {
    /// Corpus paper id, or `doi:<doi>` for external entries.
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paper_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<ExternalMetadata>,
    /// Milliseconds since the Unix epoch.
    pub added_at: u64,
    pub cite_keys: BTreeSet<String>,
}

impl LibraryEntry {
    pub fn cited(&self) -> bool {
        !self.cite_keys.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationMarker {
    pub marker_id: String,
    pub entry_id: String,
}

/// What to add to the library.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntryRef {
    Paper(String),
    External(ExternalMetadata),
}

/// Membership test against the loaded corpus.
pub trait PaperCatalog {
    fn contains_paper(&self, paper_id: &str) -> bool;
}

impl PaperCatalog for crate::engine::Engine {
    fn contains_paper(&self, paper_id: &str) -> bool {
        self.ordinal(paper_id).is_some()
    }
}

impl<F: Fn(&str) -> bool> PaperCatalog for F {
    fn contains_paper(&self, paper_id: &str) -> bool {
        self(paper_id)
    }
}

/// Result of removing an entry: markers that still sit in the manuscript but
/// no longer point at a library entry.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoveReport {
    pub entry_id: String,
    pub dangling_markers: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Library {
    entries: BTreeMap<String, LibraryEntry>,
    markers: BTreeMap<String, CitationMarker>,
    /// Last timestamp handed out; keeps `added_at` strictly increasing.
    #[serde(default)]
    clock: u64,
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

pub fn external_entry_id(doi: &str) -> String {
    format!("doi:{}", doi.to_ascii_lowercase())
}

impl Library {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, entry_id: &str) -> Option<&LibraryEntry> {
        self.entries.get(entry_id)
    }

    pub fn marker(&self, marker_id: &str) -> Option<&CitationMarker> {
        self.markers.get(marker_id)
    }

    fn tick(&mut self) -> u64 {
        self.clock = now_millis().max(self.clock + 1);
        self.clock
    }

    /// Adds an entry, or returns the existing one unchanged.
    pub fn add_entry(
        &mut self,
        entry: EntryRef,
        catalog: &dyn PaperCatalog,
    ) -> Result<LibraryEntry, LibraryError> {
        let (id, paper_id, metadata) = match entry {
            EntryRef::Paper(pid) => {
                if !catalog.contains_paper(&pid) {
                    return Err(LibraryError::UnknownPaper(pid));
                }
                (pid.clone(), Some(pid), None)
            }
            EntryRef::External(meta) => (external_entry_id(&meta.doi), None, Some(meta)),
        };
        if let Some(existing) = self.entries.get(&id) {
            return Ok(existing.clone());
        }
        let entry = LibraryEntry {
            id: id.clone(),
            paper_id,
            metadata,
            added_at: self.tick(),
            cite_keys: BTreeSet::new(),
        };
        self.entries.insert(id, entry.clone());
        Ok(entry)
    }

    /// Registers `marker_id` as a citation of `entry_id`. An id that is not yet
    /// in the library is treated as a corpus paper and added first.
    pub fn cite(
        &mut self,
        entry_id: &str,
        marker_id: &str,
        catalog: &dyn PaperCatalog,
    ) -> Result<CitationMarker, LibraryError> {
        if self.markers.contains_key(marker_id) {
            return Err(LibraryError::DuplicateMarker(marker_id.to_string()));
        }
        if !self.entries.contains_key(entry_id) {
            self.add_entry(EntryRef::Paper(entry_id.to_string()), catalog)?;
        }
        let entry = self.entries.get_mut(entry_id).expect("entry present");
        entry.cite_keys.insert(marker_id.to_string());
        let marker = CitationMarker {
            marker_id: marker_id.to_string(),
            entry_id: entry_id.to_string(),
        };
        self.markers.insert(marker_id.to_string(), marker.clone());
        Ok(marker)
    }

    /// Forgets a marker after its link was deleted from the manuscript.
    pub fn remove_marker(&mut self, marker_id: &str) -> Result<CitationMarker, LibraryError> {
        let marker = self
            .markers
            .remove(marker_id)
            .ok_or_else(|| LibraryError::NotFound(marker_id.to_string()))?;
        if let Some(entry) = self.entries.get_mut(&marker.entry_id) {
            entry.cite_keys.remove(marker_id);
        }
        Ok(marker)
    }

    /// Entries ordered by `added_at`, then id.
    pub fn list_entries(&self, cited_only: bool) -> Vec<LibraryEntry> {
        let mut out: Vec<LibraryEntry> = self
            .entries
            .values()
            .filter(|e| !cited_only || e.cited())
            .cloned()
            .collect();
        out.sort_by(|a, b| a.added_at.cmp(&b.added_at).then_with(|| a.id.cmp(&b.id)));
        out
    }

    pub fn remove_entry(&mut self, entry_id: &str) -> Result<RemoveReport, LibraryError> {
        let entry = self
            .entries
            .remove(entry_id)
            .ok_or_else(|| LibraryError::NotFound(entry_id.to_string()))?;
        for marker in &entry.cite_keys {
            self.markers.remove(marker);
        }
        Ok(RemoveReport {
            entry_id: entry.id,
            dangling_markers: entry.cite_keys.into_iter().collect(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("library serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LibraryError> {
        let lib: Self =
            serde_json::from_str(text).map_err(|e| LibraryError::Storage(e.to_string()))?;
        for marker in lib.markers.values() {
            let ok = lib
                .entries
                .get(&marker.entry_id)
                .is_some_and(|e| e.cite_keys.contains(&marker.marker_id));
            if !ok {
                return Err(LibraryError::Storage(format!(
                    "marker `{}` does not match its entry",
                    marker.marker_id
                )));
            }
        }
        Ok(lib)
    }

    /// Reads a library file; a missing file is an empty library.
    pub fn load(path: &Path) -> Result<Self, LibraryError> {
        match fs::read_to_string(path) {
            Ok(text) => Self::from_json(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::new()),
            Err(e) => Err(LibraryError::Storage(e.to_string())),
        }
    }

    /// Writes to a sibling temporary file and renames it over `path`.
    pub fn save(&self, path: &Path) -> Result<(), LibraryError> {
        let storage = |e: std::io::Error| LibraryError::Storage(e.to_string());
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(storage)?;
        }
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        fs::write(&tmp, self.to_json()).map_err(storage)?;
        fs::rename(&tmp, path).map_err(storage)
    }
}

/// Checks the `10.<registrant>/<suffix>` shape and strips common prefixes
/// (`doi:`, `https://doi.org/`).
pub fn normalize_doi(raw: &str) -> Result<String, LibraryError> {
    let malformed = || LibraryError::MalformedDoi(raw.to_string());
    let trimmed = raw.trim();
    let lower = trimmed.to_ascii_lowercase();
    let mut doi = trimmed;
    for prefix in [
        "https://doi.org/",
        "http://doi.org/",
        "https://dx.doi.org/",
        "doi:",
    ] {
        if lower.starts_with(prefix) {
            doi = &trimmed[prefix.len()..];
            break;
        }
    }
    let (registrant, suffix) = doi
        .strip_prefix("10.")
        .and_then(|rest| rest.split_once('/'))
        .ok_or_else(malformed)?;
    let registrant_ok = !registrant.is_empty()
        && registrant
            .split('.')
            .all(|part| !part.is_empty() && part.bytes().all(|b| b.is_ascii_digit()));
    if !registrant_ok || suffix.is_empty() || suffix.chars().any(char::is_whitespace) {
        return Err(malformed());
    }
    Ok(doi.to_string())
}

/// Looks up bibliographic metadata for a DOI.
pub trait MetadataResolver: Send + Sync {
    fn lookup(&self, doi: &str) -> Result<ExternalMetadata, LibraryError>;
}

/// Validates `doi` and asks `resolver` for its metadata.
pub fn resolve_doi(
    doi: &str,
    resolver: &dyn MetadataResolver,
) -> Result<ExternalMetadata, LibraryError> {
    let doi = normalize_doi(doi)?;
    resolver.lookup(&doi)
}

/// Resolver backed by a local JSON array of metadata records.
#[derive(Debug, Clone, Default)]
pub struct FixtureResolver {
    records: HashMap<String, ExternalMetadata>,
}

impl FixtureResolver {
    pub fn new(records: impl IntoIterator<Item = ExternalMetadata>) -> Self {
        Self {
            records: records
                .into_iter()
                .map(|m| (m.doi.to_ascii_lowercase(), m))
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, LibraryError> {
        let records: Vec<ExternalMetadata> =
            serde_json::from_str(text).map_err(|e| LibraryError::Storage(e.to_string()))?;
        Ok(Self::new(records))
    }

    /// The metadata bundled with the crate for tests and demos.
    pub fn bundled() -> &'static FixtureResolver {
        static BUNDLED: OnceLock<FixtureResolver> = OnceLock::new();
        BUNDLED.get_or_init(|| {
            Self::from_json(include_str!("../data/doi_fixture.json")).expect("bundled fixture")
        })
    }
}

impl MetadataResolver for FixtureResolver {
    fn lookup(&self, doi: &str) -> Result<ExternalMetadata, LibraryError> {
        self.records
            .get(&doi.to_ascii_lowercase())
            .cloned()
            .ok_or_else(|| LibraryError::DoiNotFound(doi.to_string()))
    }
}

/// Resolver that always reports itself unavailable; the default when no
/// fixture or network resolver is configured.
#[derive(Debug, Clone, Default)]
pub struct DisabledResolver;

impl MetadataResolver for DisabledResolver {
    fn lookup(&self, _doi: &str) -> Result<ExternalMetadata, LibraryError> {
        Err(LibraryError::ResolverUnavailable(
            "no DOI resolver configured".into(),
        ))
    }
}

#[cfg(feature = "http-resolver")]
pub use http::CrossrefResolver;

#[cfg(feature = "http-resolver")]
mod http {
    //! Crossref REST client: `GET {base}/works/{doi}` returning
    //! `{"message": {"title": [..], "author": [{"given", "family"}],
    //! "container-title": [..], "issued": {"date-parts": [[year, ..]]}}}`.

    use std::time::Duration;

    use serde::Deserialize;

    use super::{ExternalMetadata, LibraryError, MetadataResolver};

    pub struct CrossrefResolver {
        base_url: String,
        client: reqwest::blocking::Client,
    }

    impl CrossrefResolver {
        pub fn new(base_url: impl Into<String>) -> Result<Self, LibraryError> {
            let client = reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(10))
                .build()
                .map_err(|e| LibraryError::ResolverUnavailable(e.to_string()))?;
            Ok(Self {
                base_url: base_url.into().trim_end_matches('/').to_string(),
                client,
            })
        }
    }

    #[derive(Deserialize)]
    struct Envelope {
        message: Work,
    }

    #[derive(Deserialize)]
    struct Work {
        #[serde(default)]
        title: Vec<String>,
        #[serde(default)]
        author: Vec<Author>,
        #[serde(default, rename = "container-title")]
        container_title: Vec<String>,
        issued: Option<Issued>,
    }

    #[derive(Deserialize)]
    struct Author {
        given: Option<String>,
        family: Option<String>,
    }

    #[derive(Deserialize)]
    struct Issued {
        #[serde(rename = "date-parts", default)]
        date_parts: Vec<Vec<Option<i32>>>,
    }

    impl MetadataResolver for CrossrefResolver {
        fn lookup(&self, doi: &str) -> Result<ExternalMetadata, LibraryError> {
            let url = format!("{}/works/{}", self.base_url, doi);
            let resp = self
                .client
                .get(url)
                .send()
                .map_err(|e| LibraryError::ResolverUnavailable(e.to_string()))?;
            if resp.status() == reqwest::StatusCode::NOT_FOUND {
                return Err(LibraryError::DoiNotFound(doi.to_string()));
            }
            if !resp.status().is_success() {
                return Err(LibraryError::ResolverUnavailable(format!(
                    "resolver returned {}",
                    resp.status()
                )));
            }
            let work = resp
                .json::<Envelope>()
                .map_err(|e| LibraryError::ResolverUnavailable(e.to_string()))?
                .message;
            let year = work
                .issued
                .and_then(|i| {
                    i.date_parts
                        .first()
                        .and_then(|p| p.first().copied().flatten())
                })
                .unwrap_or(0);
            Ok(ExternalMetadata {
                doi: doi.to_string(),
                title: work.title.into_iter().next().unwrap_or_default(),
                authors: work
                    .author
                    .into_iter()
                    .map(|a| {
                        [a.given, a.family]
                            .into_iter()
                            .flatten()
                            .collect::<Vec<_>>()
                            .join(" ")
                    })
                    .collect(),
                journal: work.container_title.into_iter().next().unwrap_or_default(),
                year,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog(id: &str) -> bool {
        matches!(id, "p1" | "p2" | "p3")
    }

    fn meta(doi: &str) -> ExternalMetadata {
        ExternalMetadata {
            doi: doi.into(),
            title: "External".into(),
            ..ExternalMetadata::default()
        }
    }

    #[test]
    fn add_is_idempotent() {
        let mut lib = Library::new();
        let a = lib
            .add_entry(EntryRef::Paper("p1".into()), &catalog)
            .unwrap();
        let b = lib
            .add_entry(EntryRef::Paper("p1".into()), &catalog)
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(lib.len(), 1);
    }

    #[test]
    fn add_unknown_paper() {
        let mut lib = Library::new();
        assert_eq!(
            lib.add_entry(EntryRef::Paper("zz".into()), &catalog),
            Err(LibraryError::UnknownPaper("zz".into()))
        );
    }

    #[test]
    fn add_external_metadata() {
        let mut lib = Library::new();
        let e = lib
            .add_entry(EntryRef::External(meta("10.1/ABC")), &catalog)
            .unwrap();
        assert_eq!(e.id, "doi:10.1/abc");
        assert!(e.paper_id.is_none());
        assert_eq!(e.metadata.unwrap().title, "External");
    }

    #[test]
    fn cite_adds_entry_and_marker() {
        let mut lib = Library::new();
        let m = lib.cite("p2", "m1", &catalog).unwrap();
        assert_eq!(m.entry_id, "p2");
        assert!(lib.get("p2").unwrap().cited());
        assert_eq!(
            lib.cite("p1", "m1", &catalog),
            Err(LibraryError::DuplicateMarker("m1".into()))
        );
        assert_eq!(
            lib.cite("nope", "m2", &catalog),
            Err(LibraryError::UnknownPaper("nope".into()))
        );
    }

    #[test]
    fn removing_marker_keeps_entry() {
        let mut lib = Library::new();
        lib.cite("p1", "m1", &catalog).unwrap();
        lib.remove_marker("m1").unwrap();
        let e = lib.get("p1").unwrap();
        assert!(e.cite_keys.is_empty());
        assert!(lib.remove_marker("m1").is_err());
    }

    #[test]
    fn cited_only_listing() {
        let mut lib = Library::new();
        assert!(lib.list_entries(false).is_empty());
        lib.add_entry(EntryRef::Paper("p1".into()), &catalog)
            .unwrap();
        lib.cite("p2", "m1", &catalog).unwrap();
        let all: Vec<_> = lib.list_entries(false).into_iter().map(|e| e.id).collect();
        assert_eq!(all, vec!["p1", "p2"]);
        let cited: Vec<_> = lib.list_entries(true).into_iter().map(|e| e.id).collect();
        assert_eq!(cited, vec!["p2"]);
    }

    #[test]
    fn remove_entry_reports_dangling_markers() {
        let mut lib = Library::new();
        lib.cite("p1", "m1", &catalog).unwrap();
        lib.cite("p1", "m2", &catalog).unwrap();
        let report = lib.remove_entry("p1").unwrap();
        assert_eq!(report.dangling_markers, vec!["m1", "m2"]);
        assert!(lib.marker("m1").is_none());
        assert_eq!(
            lib.remove_entry("p1"),
            Err(LibraryError::NotFound("p1".into()))
        );
        // The marker id is free again.
        lib.cite("p3", "m1", &catalog).unwrap();
    }

    #[test]
    fn add_remove_restores_listing() {
        let mut lib = Library::new();
        lib.add_entry(EntryRef::Paper("p1".into()), &catalog)
            .unwrap();
        let before = lib.list_entries(false);
        lib.add_entry(EntryRef::Paper("p2".into()), &catalog)
            .unwrap();
        lib.remove_entry("p2").unwrap();
        assert_eq!(lib.list_entries(false), before);
    }

    #[test]
    fn persistence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("library.json");
        let mut lib = Library::new();
        lib.add_entry(EntryRef::External(meta("10.5/x")), &catalog)
            .unwrap();
        lib.cite("p1", "m1", &catalog).unwrap();
        lib.save(&path).unwrap();
        let back = Library::load(&path).unwrap();
        assert_eq!(back, lib);
        assert!(Library::load(&dir.path().join("absent.json"))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn inconsistent_file_rejected() {
        let text = r#"{"entries":{},"markers":{"m1":{"marker_id":"m1","entry_id":"p1"}}}"#;
        assert!(matches!(
            Library::from_json(text),
            Err(LibraryError::Storage(_))
        ));
    }

    #[test]
    fn doi_shapes() {
        assert_eq!(
            normalize_doi("10.1038/nphys1170").unwrap(),
            "10.1038/nphys1170"
        );
        assert_eq!(
            normalize_doi("https://doi.org/10.1000.10/a(b)c").unwrap(),
            "10.1000.10/a(b)c"
        );
        assert_eq!(normalize_doi(" doi:10.1/x ").unwrap(), "10.1/x");
        for bad in [
            "not-a-doi",
            "10./x",
            "10.abc/x",
            "10.1/",
            "11.1/x",
            "10.1/a b",
            "",
        ] {
            assert_eq!(
                normalize_doi(bad),
                Err(LibraryError::MalformedDoi(bad.into())),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn fixture_resolution() {
        let fixture = FixtureResolver::bundled();
        let m = resolve_doi("10.5555/manuscriptor.0002", fixture).unwrap();
        assert!(!m.title.is_empty());
        assert!(matches!(
            resolve_doi("not-a-doi", fixture),
            Err(LibraryError::MalformedDoi(_))
        ));
        assert!(matches!(
            resolve_doi("10.9999/unknown", fixture),
            Err(LibraryError::DoiNotFound(_))
        ));
        assert!(matches!(
            resolve_doi("10.9999/unknown", &DisabledResolver),
            Err(LibraryError::ResolverUnavailable(_))
        ));
    }
}
