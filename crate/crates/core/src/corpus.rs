//! Conference-track corpus layout: seven ontologies and their 21 reference alignments.
//!
//! ```text
//! <root>/ontologies/<name>.owl
//! <root>/reference/<a>-<b>.rdf
//! <root>/checksums.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::{Cursor, Read};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use tracing::info;

use crate::alignment_format::parse_alignment;
use crate::error::{AlignError, Result};
use crate::model::{Alignment, Ontology};
use crate::rdfxml::parse_ontology;

/// The seven ontologies, in the lexical order used for pair names.
pub const ONTOLOGIES: [&str; 7] = ["cmt", "conference", "confOf", "edas", "ekaw", "iasted", "sigkdd"];

pub const DEFAULT_SOURCE: &str = "https://oaei.ontologymatching.org/2023/conference/data/conference.zip";

/// All 21 unordered pairs as (first, second) in canonical order.
pub fn all_pairs() -> Vec<(&'static str, &'static str)> {
    let mut pairs = Vec::with_capacity(21);
    for (i, a) in ONTOLOGIES.iter().enumerate() {
        for b in &ONTOLOGIES[i + 1..] {
            pairs.push((*a, *b));
        }
    }
    pairs
}

pub fn pair_name(a: &str, b: &str) -> String {
    format!("{a}-{b}")
}

/// Parse `cmt-sigkdd` or `cmt,sigkdd` into a canonical pair of the corpus.
pub fn parse_pair(spec: &str) -> Result<(&'static str, &'static str)> {
    let (x, y) = spec
        .split_once([',', '-'])
        .ok_or_else(|| AlignError::Config(format!("pair `{spec}` must look like a-b or a,b")))?;
    let find = |n: &str| {
        ONTOLOGIES
            .iter()
            .copied()
            .find(|o| o.eq_ignore_ascii_case(n.trim()))
            .ok_or_else(|| AlignError::Config(format!("unknown ontology `{n}`")))
    };
    let (x, y) = (find(x)?, find(y)?);
    all_pairs()
        .into_iter()
        .find(|&(a, b)| (a, b) == (x, y) || (a, b) == (y, x))
        .ok_or_else(|| AlignError::Config(format!("`{spec}` is not a pair of distinct ontologies")))
}

#[derive(Debug, Clone)]
pub struct Corpus {
    root: PathBuf,
}

impl Corpus {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        if !root.is_dir() {
            return Err(AlignError::CorpusMissing(root));
        }
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn ontology_path(&self, name: &str) -> PathBuf {
        self.root.join("ontologies").join(format!("{name}.owl"))
    }

    pub fn reference_path(&self, a: &str, b: &str) -> PathBuf {
        self.root.join("reference").join(format!("{}.rdf", pair_name(a, b)))
    }

    /// Files the layout requires but which are absent.
    pub fn missing_files(&self) -> Vec<String> {
        let mut missing = Vec::new();
        for name in ONTOLOGIES {
            if !self.ontology_path(name).is_file() {
                missing.push(format!("ontologies/{name}.owl"));
            }
        }
        for (a, b) in all_pairs() {
            if !self.reference_path(a, b).is_file() {
                missing.push(format!("reference/{}.rdf", pair_name(a, b)));
            }
        }
        missing
    }

    pub fn validate(&self) -> Result<()> {
        let missing = self.missing_files();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(AlignError::LayoutInvalid(missing))
        }
    }

    pub fn load_ontology(&self, name: &str) -> Result<Ontology> {
        let path = self.ontology_path(name);
        let bytes = fs::read(&path).map_err(|e| AlignError::io(&path, e))?;
        parse_ontology(&bytes, name)
    }

    pub fn load_reference(&self, a: &Ontology, b: &Ontology) -> Result<Alignment> {
        let path = self.reference_path(&a.name, &b.name);
        let bytes = fs::read(&path).map_err(|e| AlignError::io(&path, e))?;
        parse_alignment(&bytes, a, b)
    }
}

/// Checksums of the files placed by [`fetch_corpus`], keyed by relative path.
pub type Checksums = BTreeMap<String, String>;

fn classify(file_name: &str) -> Option<String> {
    let lower = file_name.to_lowercase();
    if let Some(stem) = lower.strip_suffix(".owl") {
        return ONTOLOGIES
            .iter()
            .find(|o| o.to_lowercase() == stem)
            .map(|o| format!("ontologies/{o}.owl"));
    }
    if let Some(stem) = lower.strip_suffix(".rdf") {
        return all_pairs()
            .into_iter()
            .find(|(a, b)| pair_name(a, b).to_lowercase() == stem)
            .map(|(a, b)| format!("reference/{}.rdf", pair_name(a, b)));
    }
    None
}

fn collect_dir(dir: &Path, found: &mut BTreeMap<String, Vec<u8>>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| AlignError::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    paths.sort();
    for path in paths {
        if path.is_dir() {
            collect_dir(&path, found)?;
        } else if let Some(rel) = path.file_name().and_then(|n| n.to_str()).and_then(classify) {
            if let std::collections::btree_map::Entry::Vacant(slot) = found.entry(rel) {
                slot.insert(fs::read(&path).map_err(|e| AlignError::io(&path, e))?);
            }
        } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("zip")) {
            let bytes = fs::read(&path).map_err(|e| AlignError::io(&path, e))?;
            collect_zip(&bytes, found)?;
        }
    }
    Ok(())
}

fn collect_zip(bytes: &[u8], found: &mut BTreeMap<String, Vec<u8>>) -> Result<()> {
    let mut archive = zip::ZipArchive::new(Cursor::new(bytes))
        .map_err(|e| AlignError::FetchFailed(format!("not a zip archive: {e}")))?;
    for i in 0..archive.len() {
        let mut entry = archive
            .by_index(i)
            .map_err(|e| AlignError::FetchFailed(e.to_string()))?;
        if entry.is_dir() {
            continue;
        }
        let name = entry.name().rsplit('/').next().unwrap_or_default().to_string();
        if name.to_lowercase().ends_with(".zip") {
            let mut inner = Vec::new();
            entry
                .read_to_end(&mut inner)
                .map_err(|e| AlignError::FetchFailed(e.to_string()))?;
            collect_zip(&inner, found)?;
        } else if let Some(rel) = classify(&name) {
            if let std::collections::btree_map::Entry::Vacant(slot) = found.entry(rel) {
                let mut data = Vec::new();
                entry
                    .read_to_end(&mut data)
                    .map_err(|e| AlignError::FetchFailed(e.to_string()))?;
                slot.insert(data);
            }
        }
    }
    Ok(())
}

fn download(url: &str) -> Result<Vec<u8>> {
    let resp = reqwest::blocking::get(url).map_err(|e| AlignError::FetchFailed(format!("{url}: {e}")))?;
    if !resp.status().is_success() {
        return Err(AlignError::FetchFailed(format!("{url}: HTTP {}", resp.status())));
    }
    resp.bytes()
        .map(|b| b.to_vec())
        .map_err(|e| AlignError::FetchFailed(format!("{url}: {e}")))
}

/// Gather the corpus from URLs, directories or zip archives into `dest`.
///
/// Nothing is written unless all 7 ontologies and 21 references were found.
pub fn fetch_corpus(sources: &[String], dest: &Path) -> Result<Checksums> {
    let mut found = BTreeMap::new();
    for source in sources {
        if source.starts_with("http://") || source.starts_with("https://") {
            info!(%source, "downloading");
            collect_zip(&download(source)?, &mut found)?;
        } else {
            let path = Path::new(source);
            if path.is_dir() {
                collect_dir(path, &mut found)?;
            } else if path.is_file() {
                let bytes = fs::read(path).map_err(|e| AlignError::io(path, e))?;
                collect_zip(&bytes, &mut found)?;
            } else {
                return Err(AlignError::FetchFailed(format!("{source}: no such file or directory")));
            }
        }
    }

    let mut expected: Vec<String> = ONTOLOGIES.iter().map(|o| format!("ontologies/{o}.owl")).collect();
    expected.extend(all_pairs().iter().map(|(a, b)| format!("reference/{}.rdf", pair_name(a, b))));
    let missing: Vec<String> = expected.into_iter().filter(|f| !found.contains_key(f)).collect();
    if !missing.is_empty() {
        return Err(AlignError::LayoutInvalid(missing));
    }

    let mut sums = Checksums::new();
    for (rel, bytes) in &found {
        let path = dest.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| AlignError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| AlignError::io(&path, e))?;
        sums.insert(rel.clone(), hex::encode(Sha256::digest(bytes)));
    }
    let manifest = dest.join("checksums.json");
    let text = serde_json::to_string_pretty(&sums)?;
    fs::write(&manifest, text + "\n").map_err(|e| AlignError::io(&manifest, e))?;
    Ok(sums)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_one_pairs_in_canonical_order() {
        let pairs = all_pairs();
        assert_eq!(pairs.len(), 21);
        assert_eq!(pairs[0], ("cmt", "conference"));
        assert_eq!(pairs[20], ("iasted", "sigkdd"));
        assert!(pairs.contains(&("confOf", "edas")));
    }

    #[test]
    fn pair_parsing() {
        assert_eq!(parse_pair("cmt,sigkdd").unwrap(), ("cmt", "sigkdd"));
        assert_eq!(parse_pair("sigkdd-cmt").unwrap(), ("cmt", "sigkdd"));
        assert_eq!(parse_pair("CONFOF,ekaw").unwrap(), ("confOf", "ekaw"));
        assert!(parse_pair("cmt,cmt").is_err());
        assert!(parse_pair("cmt,foo").is_err());
    }

    #[test]
    fn file_classification() {
        assert_eq!(classify("Conference.owl").as_deref(), Some("ontologies/conference.owl"));
        assert_eq!(classify("cmt-confof.rdf").as_deref(), Some("reference/cmt-confOf.rdf"));
        assert_eq!(classify("readme.txt"), None);
    }

    #[test]
    fn missing_corpus() {
        assert!(matches!(Corpus::open("/nonexistent/corpus"), Err(AlignError::CorpusMissing(_))));
    }
}
