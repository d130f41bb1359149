use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexing::ProfileRegistry;

/// Files larger than this are skipped during snapshot loading.
pub const MAX_FILE_BYTES: u64 = 1 << 20;

/// Optional per-repository metadata file at the repository root.
pub const REPO_META_FILE: &str = "repo-meta.toml";

/// Language id given to files no profile claims.
pub const UNKNOWN_LANGUAGE: &str = "text";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
    pub language: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl SourceFile {
    pub fn new(
        path: impl Into<String>,
        text: impl Into<String>,
        language: impl Into<String>,
    ) -> Self {
        SourceFile {
            path: path.into(),
            text: text.into(),
            language: language.into(),
            metadata: BTreeMap::new(),
        }
    }

    /// Directory part of the path, `""` at the root.
    pub fn dir(&self) -> &str {
        parent_dir(&self.path)
    }

    pub fn line_count(&self) -> usize {
        self.text.lines().count()
    }
}

pub(crate) fn parent_dir(path: &str) -> &str {
    path.rfind('/').map_or("", |i| &path[..i])
}

/// Relative, `/`-separated form of a path. Rejects absolute paths and `..`.
pub fn normalize_path(path: &str) -> Result<String> {
    let unified = path.replace('\\', "/");
    if unified.starts_with('/') {
        return Err(Error::Invalid(format!("path `{path}` is absolute")));
    }
    let mut parts = Vec::new();
    for part in unified.split('/') {
        match part {
            "" | "." => {}
            ".." => {
                return Err(Error::Invalid(format!(
                    "path `{path}` leaves the repository"
                )))
            }
            p => parts.push(p),
        }
    }
    if parts.is_empty() {
        return Err(Error::Invalid(format!("empty path `{path}`")));
    }
    Ok(parts.join("/"))
}

/// `test` or `source`, from common naming conventions.
pub fn file_role(path: &str) -> &'static str {
    let mut components = path.split('/');
    let name = components.next_back().unwrap_or("");
    let in_test_dir = path
        .split('/')
        .rev()
        .skip(1)
        .any(|c| matches!(c, "test" | "tests" | "__tests__" | "spec" | "testing"));
    let stem = name.split('.').next().unwrap_or("");
    let test_name = stem.starts_with("test_")
        || stem.ends_with("_test")
        || stem.ends_with("Test")
        || stem.ends_with("Tests")
        || name.contains(".test.")
        || name.contains(".spec.");
    if in_test_dir || test_name {
        "test"
    } else {
        "source"
    }
}

/// An immutable view of one repository tree.
#[derive(Debug, Clone)]
pub struct RepoSnapshot {
    pub root: PathBuf,
    pub name: String,
    pub metadata: BTreeMap<String, String>,
    files: BTreeMap<String, SourceFile>,
}

impl RepoSnapshot {
    /// Build a snapshot from in-memory `(path, text)` pairs.
    pub fn from_files<P, T>(
        name: &str,
        files: impl IntoIterator<Item = (P, T)>,
        registry: &ProfileRegistry,
    ) -> Result<Self>
    where
        P: AsRef<str>,
        T: Into<String>,
    {
        let mut snapshot = RepoSnapshot {
            root: PathBuf::new(),
            name: name.to_string(),
            metadata: BTreeMap::new(),
            files: BTreeMap::new(),
        };
        for (path, text) in files {
            snapshot.insert(path.as_ref(), text.into(), registry)?;
        }
        Ok(snapshot)
    }

    fn insert(&mut self, path: &str, text: String, registry: &ProfileRegistry) -> Result<()> {
        let path = normalize_path(path)?;
        let language = registry
            .for_path(&path)
            .map_or(UNKNOWN_LANGUAGE.to_string(), |p| p.id.clone());
        let mut file = SourceFile::new(path.clone(), text, language);
        file.metadata.insert("repo".into(), self.name.clone());
        file.metadata.insert("role".into(), file_role(&path).into());
        for (k, v) in &self.metadata {
            file.metadata.entry(k.clone()).or_insert_with(|| v.clone());
        }
        if self.files.insert(path.clone(), file).is_some() {
            return Err(Error::Invalid(format!("duplicate path `{path}`")));
        }
        Ok(())
    }

    /// Load a plain directory. Hidden entries, binary files and files over
    /// [`MAX_FILE_BYTES`] are skipped. Metadata comes from [`REPO_META_FILE`]
    /// when present.
    pub fn load(root: &Path, registry: &ProfileRegistry) -> Result<Self> {
        let mut metadata = BTreeMap::new();
        let meta_path = root.join(REPO_META_FILE);
        if meta_path.is_file() {
            let src = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
            let table: toml::Table = toml::from_str(&src)?;
            for (k, v) in table {
                let v = match v {
                    toml::Value::String(s) => s,
                    other => other.to_string(),
                };
                metadata.insert(k, v);
            }
        }
        let name = metadata.get("name").cloned().unwrap_or_else(|| {
            root.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| "repo".into())
        });
        let mut snapshot = RepoSnapshot {
            root: root.to_path_buf(),
            name,
            metadata,
            files: BTreeMap::new(),
        };

        let walker = walkdir::WalkDir::new(root)
            .sort_by_file_name()
            .into_iter()
            .filter_entry(|e| e.depth() == 0 || !e.file_name().to_string_lossy().starts_with('.'));
        for entry in walker {
            let entry = entry.map_err(|e| {
                let path = e.path().map(Path::to_path_buf).unwrap_or_default();
                Error::io(path, e.into())
            })?;
            if !entry.file_type().is_file() {
                continue;
            }
            let rel = entry
                .path()
                .strip_prefix(root)
                .expect("walkdir yields paths under root")
                .to_string_lossy()
                .replace('\\', "/");
            if rel == REPO_META_FILE {
                continue;
            }
            let size = entry
                .metadata()
                .map_err(|e| Error::io(entry.path(), e.into()))?
                .len();
            if size > MAX_FILE_BYTES {
                continue;
            }
            let bytes = std::fs::read(entry.path()).map_err(|e| Error::io(entry.path(), e))?;
            if bytes[..bytes.len().min(8000)].contains(&0) {
                continue;
            }
            let Ok(text) = String::from_utf8(bytes) else {
                continue;
            };
            snapshot.insert(&rel, text, registry)?;
        }
        Ok(snapshot)
    }

    pub fn get(&self, path: &str) -> Result<&SourceFile> {
        let key = normalize_path(path)?;
        self.files.get(&key).ok_or(Error::UnknownPath(key))
    }

    pub fn contains(&self, path: &str) -> bool {
        self.get(path).is_ok()
    }

    /// Files in lexicographic path order.
    pub fn files(&self) -> impl Iterator<Item = &SourceFile> {
        self.files.values()
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }
}
