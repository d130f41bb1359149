use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A string literal delimiter pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StringDelimiter {
    pub open: String,
    pub close: String,
    /// Backslash escapes the next character.
    #[serde(default = "default_true")]
    pub escape: bool,
    /// The literal may span newlines. Single-line literals end at the newline
    /// when unterminated.
    #[serde(default)]
    pub multiline: bool,
    /// Only recognised as a literal when it holds exactly one character or
    /// one escape sequence (Rust-style `'a'` versus the lifetime `'a`).
    #[serde(default)]
    pub char_literal: bool,
}

fn default_true() -> bool {
    true
}

impl StringDelimiter {
    fn simple(quote: &str) -> Self {
        StringDelimiter {
            open: quote.to_string(),
            close: quote.to_string(),
            escape: true,
            multiline: false,
            char_literal: false,
        }
    }

    fn multiline(quote: &str, escape: bool) -> Self {
        StringDelimiter {
            multiline: true,
            escape,
            ..Self::simple(quote)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageProfile {
    pub id: String,
    #[serde(default)]
    pub extensions: Vec<String>,
    #[serde(default)]
    pub line_comment: Vec<String>,
    #[serde(default)]
    pub block_comment: Vec<(String, String)>,
    #[serde(default)]
    pub strings: Vec<StringDelimiter>,
    #[serde(default)]
    pub blocks: Vec<(String, String)>,
    #[serde(default)]
    pub indent_based: bool,
}

impl LanguageProfile {
    /// Parse one profile document (TOML).
    pub fn from_toml(src: &str) -> Result<Self> {
        let mut profile: LanguageProfile = toml::from_str(src)?;
        profile.normalize();
        profile.validate()?;
        Ok(profile)
    }

    /// Longest delimiters first so that `"""` wins over `"`.
    fn normalize(&mut self) {
        self.line_comment
            .sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        self.block_comment
            .sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.cmp(b)));
        self.strings.sort_by(|a, b| {
            b.open
                .len()
                .cmp(&a.open.len())
                .then_with(|| a.open.cmp(&b.open))
        });
        self.blocks
            .sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.cmp(b)));
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidProfile {
            id: self.id.clone(),
            reason,
        };
        if self.id.trim().is_empty() {
            return Err(invalid("empty language id".into()));
        }
        check_category("line_comment", self.line_comment.iter().map(String::as_str))
            .map_err(invalid)?;
        check_category(
            "block_comment",
            self.block_comment.iter().map(|(o, _)| o.as_str()),
        )
        .map_err(invalid)?;
        check_category("strings", self.strings.iter().map(|s| s.open.as_str())).map_err(invalid)?;
        check_category("blocks", self.blocks.iter().map(|(o, _)| o.as_str())).map_err(invalid)?;
        let closers = self
            .block_comment
            .iter()
            .map(|(_, c)| c)
            .chain(self.strings.iter().map(|s| &s.close))
            .chain(self.blocks.iter().map(|(_, c)| c));
        for close in closers {
            if close.is_empty() {
                return Err(invalid("empty closing delimiter".into()));
            }
        }
        if self.indent_based && !self.blocks.is_empty() {
            return Err(invalid(
                "indent_based profiles take no block delimiters".into(),
            ));
        }
        Ok(())
    }

    pub fn python() -> Self {
        LanguageProfile {
            id: "python".into(),
            extensions: vec!["py".into(), "pyi".into()],
            line_comment: vec!["#".into()],
            block_comment: vec![],
            strings: vec![
                StringDelimiter::multiline("\"\"\"", true),
                StringDelimiter::multiline("'''", true),
                StringDelimiter::simple("\""),
                StringDelimiter::simple("'"),
            ],
            blocks: vec![],
            indent_based: true,
        }
    }

    fn c_family(id: &str, extensions: &[&str], strings: Vec<StringDelimiter>) -> Self {
        let mut profile = LanguageProfile {
            id: id.into(),
            extensions: extensions.iter().map(|e| e.to_string()).collect(),
            line_comment: vec!["//".into()],
            block_comment: vec![("/*".into(), "*/".into())],
            strings,
            blocks: vec![("{".into(), "}".into())],
            indent_based: false,
        };
        profile.normalize();
        profile
    }

    pub fn java() -> Self {
        Self::c_family(
            "java",
            &["java"],
            vec![
                StringDelimiter::multiline("\"\"\"", true),
                StringDelimiter::simple("\""),
                StringDelimiter::simple("'"),
            ],
        )
    }

    pub fn kotlin() -> Self {
        Self::c_family(
            "kotlin",
            &["kt", "kts"],
            vec![
                StringDelimiter::multiline("\"\"\"", false),
                StringDelimiter::simple("\""),
                StringDelimiter::simple("'"),
            ],
        )
    }

    fn js_strings() -> Vec<StringDelimiter> {
        vec![
            StringDelimiter::simple("\""),
            StringDelimiter::simple("'"),
            StringDelimiter::multiline("`", true),
        ]
    }

    pub fn javascript() -> Self {
        Self::c_family(
            "javascript",
            &["js", "jsx", "mjs", "cjs"],
            Self::js_strings(),
        )
    }

    pub fn typescript() -> Self {
        Self::c_family("typescript", &["ts", "tsx", "mts"], Self::js_strings())
    }

    pub fn cpp() -> Self {
        Self::c_family(
            "cpp",
            &["c", "h", "cc", "cpp", "cxx", "hpp", "hh", "hxx"],
            vec![StringDelimiter::simple("\""), StringDelimiter::simple("'")],
        )
    }

    pub fn csharp() -> Self {
        Self::c_family(
            "csharp",
            &["cs"],
            vec![
                StringDelimiter::multiline("\"\"\"", false),
                StringDelimiter::simple("\""),
                StringDelimiter::simple("'"),
            ],
        )
    }

    pub fn go() -> Self {
        Self::c_family(
            "go",
            &["go"],
            vec![
                StringDelimiter::simple("\""),
                StringDelimiter::simple("'"),
                StringDelimiter::multiline("`", false),
            ],
        )
    }

    pub fn php() -> Self {
        let mut profile = Self::c_family(
            "php",
            &["php"],
            vec![
                StringDelimiter::multiline("\"", true),
                StringDelimiter::multiline("'", true),
            ],
        );
        profile.line_comment.push("#".into());
        profile.normalize();
        profile
    }

    pub fn rust() -> Self {
        Self::c_family(
            "rust",
            &["rs"],
            vec![
                StringDelimiter::multiline("\"", true),
                StringDelimiter {
                    char_literal: true,
                    ..StringDelimiter::simple("'")
                },
            ],
        )
    }
}

fn check_category<'a>(name: &str, opens: impl Iterator<Item = &'a str>) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for open in opens {
        if open.is_empty() {
            return Err(format!("empty delimiter in `{name}`"));
        }
        if !seen.insert(open) {
            return Err(format!("duplicate delimiter `{open}` in `{name}`"));
        }
    }
    Ok(())
}

/// The set of known language profiles, keyed by id.
#[derive(Debug, Clone)]
pub struct ProfileRegistry {
    profiles: BTreeMap<String, LanguageProfile>,
}

impl Default for ProfileRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl ProfileRegistry {
    pub fn empty() -> Self {
        ProfileRegistry {
            profiles: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut registry = Self::empty();
        for mut profile in [
            LanguageProfile::python(),
            LanguageProfile::java(),
            LanguageProfile::kotlin(),
            LanguageProfile::javascript(),
            LanguageProfile::typescript(),
            LanguageProfile::cpp(),
            LanguageProfile::csharp(),
            LanguageProfile::go(),
            LanguageProfile::php(),
            LanguageProfile::rust(),
        ] {
            profile.normalize();
            registry.insert(profile);
        }
        registry
    }

    /// Adds or replaces the profile with the same id.
    pub fn insert(&mut self, profile: LanguageProfile) {
        self.profiles.insert(profile.id.clone(), profile);
    }

    pub fn get(&self, id: &str) -> Result<&LanguageProfile> {
        self.profiles
            .get(id)
            .ok_or_else(|| Error::UnknownLanguage(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.profiles.keys().map(String::as_str)
    }

    /// Profile whose extension list contains the file's extension.
    pub fn for_path(&self, path: &str) -> Option<&LanguageProfile> {
        let ext = Path::new(path).extension()?.to_str()?.to_ascii_lowercase();
        self.profiles.values().find(|p| p.extensions.contains(&ext))
    }

    /// Load profile documents from a `.toml` file or from every `.toml` file in
    /// a directory, overriding built-ins with the same id.
    pub fn load(&mut self, path: &Path) -> Result<()> {
        let files: Vec<_> = if path.is_dir() {
            let mut files: Vec<_> = std::fs::read_dir(path)
                .map_err(|e| Error::io(path, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "toml"))
                .collect();
            files.sort();
            files
        } else {
            vec![path.to_path_buf()]
        };
        for file in files {
            let src = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
            self.insert(LanguageProfile::from_toml(&src)?);
        }
        Ok(())
    }
}
