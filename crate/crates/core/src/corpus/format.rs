use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use super::{load_mwlb, load_trofi, Corpus, CorpusError};

/// A corpus file format, selectable by name (`--format`).
pub trait CorpusFormat: Send + Sync {
    fn name(&self) -> &'static str;
    fn load(&self, path: &Path) -> Result<Corpus, CorpusError>;
}

pub struct TrofiFormat;

impl CorpusFormat for TrofiFormat {
    fn name(&self) -> &'static str {
        "trofi"
    }
    fn load(&self, path: &Path) -> Result<Corpus, CorpusError> {
        Ok(Corpus::Trofi(load_trofi(path)?.records))
    }
}

pub struct MwlbFormat;

impl CorpusFormat for MwlbFormat {
    fn name(&self) -> &'static str {
        "mwlb"
    }
    fn load(&self, path: &Path) -> Result<Corpus, CorpusError> {
        Ok(Corpus::Mwlb(load_mwlb(path)?))
    }
}

/// Name -> format lookup.
#[derive(Clone, Default)]
pub struct FormatRegistry {
    formats: BTreeMap<&'static str, Arc<dyn CorpusFormat>>,
}

impl FormatRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding `trofi` and `mwlb`.
    pub fn builtin() -> Self {
        let mut r = Self::new();
        r.register(Arc::new(TrofiFormat));
        r.register(Arc::new(MwlbFormat));
        r
    }

    /// Adds a format, replacing any previous one with the same name.
    pub fn register(&mut self, format: Arc<dyn CorpusFormat>) {
        self.formats.insert(format.name(), format);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn CorpusFormat>, CorpusError> {
        self.formats
            .get(name)
            .cloned()
            .ok_or_else(|| CorpusError::UnknownFormat(name.to_string()))
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.formats.keys().copied().collect()
    }
}
