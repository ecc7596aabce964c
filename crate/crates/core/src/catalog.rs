//! Vulnerability taxonomy: catalog entries, scan lists, alias-based name
//! normalization, and ground truth.
//!
//! Models rarely echo a vulnerability name verbatim; the alias table turns
//! their labels (`FileAccessVulnerability`, `Info Leakage`, ...) back into
//! stable catalog ids. Matching folds case and punctuation, so only genuinely
//! different wordings need explicit aliases.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::paths_match;

const BUILTIN_CATALOG: &str = include_str!("../assets/catalog.toml");
const BUILTIN_GROUND_TRUTH: &str = include_str!("../assets/ground_truth.toml");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("failed to read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Parse {
        path: String,
        source: Box<toml::de::Error>,
    },
    #[error("duplicate vulnerability id {0:?}")]
    DuplicateId(String),
    #[error("alias {raw:?} is ambiguous: matches {candidates:?}")]
    AmbiguousAlias { raw: String, candidates: Vec<String> },
    #[error("unknown vulnerability id {0:?}")]
    UnknownVulnId(String),
}

/// One vulnerability class in the catalog.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VulnerabilityType {
    /// Stable slug, e.g. `webview-xss-deeplink`.
    pub id: String,
    pub canonical_name: String,
    /// Alternative names; the canonical name is always a member.
    #[serde(default)]
    pub aliases: Vec<String>,
    pub description: String,
    #[serde(default)]
    pub cwe_refs: Vec<String>,
}

/// A named, ordered selection of catalog ids to scan for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VulnerabilityList {
    pub name: String,
    pub members: Vec<String>,
}

/// Known (vulnerability, file) pairs for a target codebase.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    /// (vuln_id, file path) pairs; paths may be bare file names, matched by
    /// the `/`-boundary suffix rule.
    pub entries: BTreeSet<(String, String)>,
}

impl GroundTruth {
    /// Distinct vulnerability ids present in the truth set, sorted.
    pub fn vuln_ids(&self) -> Vec<String> {
        let ids: BTreeSet<&String> = self.entries.iter().map(|(v, _)| v).collect();
        ids.into_iter().cloned().collect()
    }

    /// True if `(vuln_id, file)` matches an entry under the suffix rule.
    pub fn contains(&self, vuln_id: &str, file: &str) -> bool {
        self.entries
            .iter()
            .any(|(v, f)| v == vuln_id && paths_match(f, file))
    }
}

/// Folds a name for alias comparison: lowercase, alphanumerics only.
/// Applying it twice equals applying it once.
pub fn fold_name(raw: &str) -> String {
    raw.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(|c| c.to_lowercase())
        .collect()
}

/// The loaded vulnerability catalog with its alias lookup table.
#[derive(Debug, Clone)]
pub struct Catalog {
    types: Vec<VulnerabilityType>,
    by_id: HashMap<String, usize>,
    by_folded_alias: HashMap<String, Vec<String>>,
}

impl Catalog {
    pub fn from_types(types: Vec<VulnerabilityType>) -> Result<Self, CatalogError> {
        let mut by_id = HashMap::new();
        let mut by_folded_alias: HashMap<String, Vec<String>> = HashMap::new();
        let mut types = types;
        for (idx, vt) in types.iter_mut().enumerate() {
            if by_id.insert(vt.id.clone(), idx).is_some() {
                return Err(CatalogError::DuplicateId(vt.id.clone()));
            }
            if !vt.aliases.iter().any(|a| a == &vt.canonical_name) {
                vt.aliases.insert(0, vt.canonical_name.clone());
            }
            for alias in &vt.aliases {
                let ids = by_folded_alias.entry(fold_name(alias)).or_default();
                if !ids.contains(&vt.id) {
                    ids.push(vt.id.clone());
                }
            }
        }
        Ok(Catalog {
            types,
            by_id,
            by_folded_alias,
        })
    }

    /// Parses a catalog document (TOML, `[[vulnerability]]` entries).
    pub fn parse(text: &str, origin: &str) -> Result<Self, CatalogError> {
        #[derive(Deserialize)]
        struct Doc {
            #[serde(rename = "vulnerability")]
            vulnerabilities: Vec<VulnerabilityType>,
        }
        let doc: Doc = toml::from_str(text).map_err(|source| CatalogError::Parse {
            path: origin.to_string(),
            source: Box::new(source),
        })?;
        Catalog::from_types(doc.vulnerabilities)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Catalog::parse(&text, &path.display().to_string())
    }

    /// The catalog shipped with the crate, covering every list member the
    /// built-in scan lists reference.
    pub fn builtin() -> Self {
        Catalog::parse(BUILTIN_CATALOG, "<builtin catalog>")
            .expect("bundled catalog must parse")
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn types(&self) -> &[VulnerabilityType] {
        &self.types
    }

    pub fn get(&self, id: &str) -> Option<&VulnerabilityType> {
        self.by_id.get(id).map(|&i| &self.types[i])
    }

    pub fn require(&self, id: &str) -> Result<&VulnerabilityType, CatalogError> {
        self.get(id)
            .ok_or_else(|| CatalogError::UnknownVulnId(id.to_string()))
    }

    /// Resolves a raw model-reported name to a catalog id via the folded
    /// alias table. `None` when nothing matches; an error when the fold
    /// matches two or more ids.
    pub fn normalize_name(&self, raw: &str) -> Result<Option<&str>, CatalogError> {
        match self.by_folded_alias.get(&fold_name(raw)) {
            None => Ok(None),
            Some(ids) if ids.len() == 1 => Ok(Some(ids[0].as_str())),
            Some(ids) => Err(CatalogError::AmbiguousAlias {
                raw: raw.to_string(),
                candidates: ids.clone(),
            }),
        }
    }

    /// Validates that every member of `list` resolves in this catalog.
    pub fn validate_list(&self, list: &VulnerabilityList) -> Result<(), CatalogError> {
        for id in &list.members {
            self.require(id)?;
        }
        Ok(())
    }
}

impl fmt::Display for VulnerabilityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.canonical_name, self.id)
    }
}

/// The eight issues the Vuldroid test application implements, in its
/// documentation order.
pub fn builtin_vuldroid_list() -> VulnerabilityList {
    VulnerabilityList {
        name: "vuldroid".to_string(),
        members: [
            "code-execution-malicious-app",
            "steal-files-webview-xhr",
            "steal-files-fileprovider",
            "steal-password-reset-tokens",
            "webview-xss-exported-activity",
            "webview-xss-deeplink",
            "intent-sniffing",
            "reading-user-email-broadcasts",
        ]
        .into_iter()
        .map(String::from)
        .collect(),
    }
}

/// The expanded scan list: the eight Vuldroid issues mixed into a broader set
/// of common web and mobile vulnerability classes (22 types total).
pub fn builtin_expanded_list() -> VulnerabilityList {
    VulnerabilityList {
        name: "expanded".to_string(),
        members: [
            "webview-xss-deeplink",
            "steal-password-reset-tokens",
            "security-logging-monitoring-failures",
            "cryptographic-failures",
            "steal-files-fileprovider",
            "identification-authentication-failures",
            "insecure-design",
            "reading-user-email-broadcasts",
            "hardcoded-credentials",
            "insecure-activity-handling",
            "server-side-request-forgery",
            "webview-xss-exported-activity",
            "broken-authentication",
            "man-in-the-middle",
            "vulnerable-outdated-components",
            "intent-sniffing",
            "code-execution-malicious-app",
            "broken-access-control",
            "security-misconfiguration",
            "insecure-input-validation",
            "logical-flaws",
            "steal-files-webview-xhr",
        ]
        .into_iter()
        .map(String::from)
        .collect(),
    }
}

/// Resolves a list by built-in name.
pub fn builtin_list(name: &str) -> Option<VulnerabilityList> {
    match name {
        "vuldroid" => Some(builtin_vuldroid_list()),
        "expanded" => Some(builtin_expanded_list()),
        _ => None,
    }
}

/// Parses a ground-truth document (TOML table `[truth]`, vuln_id -> paths).
pub fn parse_ground_truth(
    text: &str,
    origin: &str,
    catalog: &Catalog,
) -> Result<GroundTruth, CatalogError> {
    #[derive(Deserialize)]
    struct Doc {
        #[serde(default)]
        truth: BTreeMap<String, Vec<String>>,
    }
    let doc: Doc = toml::from_str(text).map_err(|source| CatalogError::Parse {
        path: origin.to_string(),
        source: Box::new(source),
    })?;
    let mut entries = BTreeSet::new();
    for (vuln_id, files) in doc.truth {
        catalog.require(&vuln_id)?;
        for file in files {
            entries.insert((vuln_id.clone(), file));
        }
    }
    Ok(GroundTruth { entries })
}

pub fn load_ground_truth(
    path: impl AsRef<Path>,
    catalog: &Catalog,
) -> Result<GroundTruth, CatalogError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_ground_truth(&text, &path.display().to_string(), catalog)
}

/// The Vuldroid ground truth shipped with the crate.
pub fn builtin_vuldroid_ground_truth(catalog: &Catalog) -> Result<GroundTruth, CatalogError> {
    parse_ground_truth(BUILTIN_GROUND_TRUTH, "<builtin ground truth>", catalog)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vt(id: &str, name: &str, aliases: &[&str]) -> VulnerabilityType {
        VulnerabilityType {
            id: id.to_string(),
            canonical_name: name.to_string(),
            aliases: aliases.iter().map(|s| s.to_string()).collect(),
            description: format!("{name} description"),
            cwe_refs: vec![],
        }
    }

    #[test]
    fn fold_is_idempotent() {
        for raw in ["Webview XSS via DeepLink", "  A-b C!! ", "", "ÄÖÜ"] {
            let once = fold_name(raw);
            assert_eq!(fold_name(&once), once);
        }
    }

    #[test]
    fn parse_small_catalog() {
        let text = r#"
[[vulnerability]]
id = "a"
canonical_name = "Alpha Issue"
description = "first"

[[vulnerability]]
id = "b"
canonical_name = "Beta Issue"
aliases = ["B-Issue"]
description = "second"
cwe_refs = ["CWE-1"]
"#;
        let cat = Catalog::parse(text, "test").unwrap();
        assert_eq!(cat.len(), 2);
        assert_eq!(cat.get("b").unwrap().cwe_refs, vec!["CWE-1"]);
        // canonical name is self-aliased
        assert_eq!(cat.normalize_name("alpha issue").unwrap(), Some("a"));
        assert_eq!(cat.normalize_name("bissue").unwrap(), Some("b"));
    }

    #[test]
    fn duplicate_id_rejected() {
        let text = r#"
[[vulnerability]]
id = "webview-xss-deeplink"
canonical_name = "One"
description = "x"

[[vulnerability]]
id = "webview-xss-deeplink"
canonical_name = "Two"
description = "y"
"#;
        match Catalog::parse(text, "test") {
            Err(CatalogError::DuplicateId(id)) => assert_eq!(id, "webview-xss-deeplink"),
            other => panic!("expected duplicate-id error, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_reports_origin() {
        let err = Catalog::parse("not [valid toml", "bad.toml").unwrap_err();
        assert!(err.to_string().contains("bad.toml"));
    }

    #[test]
    fn builtin_catalog_contains_code_execution_entry() {
        let cat = Catalog::builtin();
        assert!(cat
            .types()
            .iter()
            .any(|t| t.canonical_name == "Code Execution via Malicious App"));
    }

    #[test]
    fn vuldroid_list_has_eight_resolving_members() {
        let cat = Catalog::builtin();
        let list = builtin_vuldroid_list();
        assert_eq!(list.members.len(), 8);
        cat.validate_list(&list).unwrap();
        let names: Vec<&str> = list
            .members
            .iter()
            .map(|id| cat.get(id).unwrap().canonical_name.as_str())
            .collect();
        assert!(names.contains(&"Intent Sniffing Between Two Applications"));
    }

    #[test]
    fn expanded_list_is_superset_with_22_members() {
        let cat = Catalog::builtin();
        let expanded = builtin_expanded_list();
        assert_eq!(expanded.members.len(), 22);
        cat.validate_list(&expanded).unwrap();
        let names: Vec<&str> = expanded
            .members
            .iter()
            .map(|id| cat.get(id).unwrap().canonical_name.as_str())
            .collect();
        assert!(names.contains(&"Server-Side Request Forgery (SSRF)"));
        assert!(names.contains(&"Hardcoded Credentials"));

        let expanded_set: BTreeSet<&String> = expanded.members.iter().collect();
        for id in builtin_vuldroid_list().members.iter() {
            assert!(expanded_set.contains(id), "{id} missing from expanded list");
        }
        // no duplicates
        assert_eq!(expanded_set.len(), expanded.members.len());
    }

    #[test]
    fn normalize_case_fold_of_canonical() {
        let cat = Catalog::builtin();
        assert_eq!(
            cat.normalize_name("Webview Xss via DeepLink").unwrap(),
            Some("webview-xss-deeplink")
        );
    }

    #[test]
    fn normalize_file_access_alias() {
        let cat = Catalog::builtin();
        assert_eq!(
            cat.normalize_name("FileAccessVulnerability").unwrap(),
            Some("steal-files-webview-xhr")
        );
    }

    #[test]
    fn normalize_unknown_is_none() {
        let cat = Catalog::builtin();
        assert_eq!(cat.normalize_name("Totally Unknown Issue").unwrap(), None);
    }

    #[test]
    fn normalize_idempotent_on_canonical_names() {
        let cat = Catalog::builtin();
        for t in cat.types() {
            assert_eq!(
                cat.normalize_name(&t.canonical_name).unwrap(),
                Some(t.id.as_str()),
                "canonical name of {} must normalize to itself",
                t.id
            );
        }
    }

    #[test]
    fn ambiguous_alias_is_error() {
        let cat = Catalog::from_types(vec![
            vt("x", "Name X", &["Shared Label"]),
            vt("y", "Name Y", &["shared label!"]),
        ])
        .unwrap();
        match cat.normalize_name("Shared Label") {
            Err(CatalogError::AmbiguousAlias { candidates, .. }) => {
                assert_eq!(candidates.len(), 2);
            }
            other => panic!("expected ambiguous-alias error, got {other:?}"),
        }
    }

    #[test]
    fn bundled_ground_truth_contains_email_viewer() {
        let cat = Catalog::builtin();
        let truth = builtin_vuldroid_ground_truth(&cat).unwrap();
        assert!(truth.entries.contains(&(
            "reading-user-email-broadcasts".to_string(),
            "EmailViewer.java".to_string()
        )));
        // exactly the eight list vulns are covered
        assert_eq!(truth.vuln_ids(), {
            let mut ids = builtin_vuldroid_list().members;
            ids.sort();
            ids
        });
    }

    #[test]
    fn empty_ground_truth_file() {
        let cat = Catalog::builtin();
        let truth = parse_ground_truth("", "empty", &cat).unwrap();
        assert!(truth.entries.is_empty());
    }

    #[test]
    fn ground_truth_unknown_id_rejected() {
        let cat = Catalog::builtin();
        let err = parse_ground_truth(
            "[truth]\n\"no-such-vuln\" = [\"A.java\"]\n",
            "test",
            &cat,
        )
        .unwrap_err();
        assert!(matches!(err, CatalogError::UnknownVulnId(_)));
    }

    #[test]
    fn ground_truth_suffix_contains() {
        let cat = Catalog::builtin();
        let truth = builtin_vuldroid_ground_truth(&cat).unwrap();
        assert!(truth.contains(
            "reading-user-email-broadcasts",
            "app/src/main/java/com/vuldroid/application/EmailViewer.java"
        ));
        assert!(!truth.contains("reading-user-email-broadcasts", "Other.java"));
    }
}
