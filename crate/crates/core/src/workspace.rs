//! Workspace discovery and overlay pairing.
//!
//! A workspace root holds `slides/` and optionally `overlays/`. An overlay
//! belongs to every slide whose id is a substring of the overlay's stem, so
//! `case_10_heatmap.png` pairs with both `case_1` and `case_10`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("workspace {0} has no slides/ directory")]
    MissingSlides(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlideKind {
    Pyramid,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlayKind {
    AnnotationStore,
    Geojson,
    GraphJson,
    ImageOverlay,
    SlideOverlay,
}

impl OverlayKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "annotation-store" => OverlayKind::AnnotationStore,
            "geojson" => OverlayKind::Geojson,
            "graph-json" => OverlayKind::GraphJson,
            "image-overlay" => OverlayKind::ImageOverlay,
            "slide-overlay" => OverlayKind::SlideOverlay,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OverlayKind::AnnotationStore => "annotation-store",
            OverlayKind::Geojson => "geojson",
            OverlayKind::GraphJson => "graph-json",
            OverlayKind::ImageOverlay => "image-overlay",
            OverlayKind::SlideOverlay => "slide-overlay",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SlideEntry {
    pub id: String,
    /// Relative to the workspace root, `/`-separated.
    pub path: String,
    pub kind: SlideKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OverlayEntry {
    pub path: String,
    pub stem: String,
    pub kind: OverlayKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WorkspaceCatalog {
    #[serde(skip)]
    pub root: PathBuf,
    pub slides: Vec<SlideEntry>,
    /// Paired overlays keyed by slide id.
    pub overlays: BTreeMap<String, Vec<OverlayEntry>>,
    pub unpaired: Vec<OverlayEntry>,
    pub diagnostics: Vec<String>,
}

impl WorkspaceCatalog {
    pub fn slide(&self, id: &str) -> Option<&SlideEntry> {
        self.slides.iter().find(|s| s.id == id)
    }

    pub fn overlays_for(&self, slide_id: &str) -> &[OverlayEntry] {
        self.overlays.get(slide_id).map_or(&[], |v| v.as_slice())
    }

    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.root.join(relative)
    }
}

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

fn extension(path: &Path) -> Option<String> {
    path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase())
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, WorkspaceError> {
    let read = fs::read_dir(dir).map_err(|source| WorkspaceError::Io { path: dir.to_path_buf(), source })?;
    let mut out = Vec::new();
    for entry in read {
        let entry = entry.map_err(|source| WorkspaceError::Io { path: dir.to_path_buf(), source })?;
        out.push(entry.path());
    }
    out.sort();
    Ok(out)
}

fn is_hidden(path: &Path) -> bool {
    file_name(path).starts_with('.')
}

fn is_pyramid_dir(path: &Path) -> bool {
    path.is_dir() && path.join("manifest.json").is_file()
}

fn classify_overlay(path: &Path) -> Option<(String, OverlayKind)> {
    if is_pyramid_dir(path) {
        return Some((file_name(path), OverlayKind::SlideOverlay));
    }
    if !path.is_file() {
        return None;
    }
    let kind = match extension(path)?.as_str() {
        "db" => OverlayKind::AnnotationStore,
        "geojson" => OverlayKind::Geojson,
        "json" => OverlayKind::GraphJson,
        e if IMAGE_EXTENSIONS.contains(&e) => OverlayKind::ImageOverlay,
        _ => return None,
    };
    Some((stem(path), kind))
}

/// Scans `root` and pairs overlays with slides. The result depends only on
/// the names in the tree, and is sorted.
pub fn scan_workspace(root: impl AsRef<Path>) -> Result<WorkspaceCatalog, WorkspaceError> {
    let root = root.as_ref();
    let slides_dir = root.join("slides");
    if !slides_dir.is_dir() {
        return Err(WorkspaceError::MissingSlides(root.to_path_buf()));
    }
    let mut diagnostics = Vec::new();
    let mut slides = Vec::new();
    for path in sorted_entries(&slides_dir)? {
        if is_hidden(&path) {
            continue;
        }
        let name = file_name(&path);
        let rel = format!("slides/{name}");
        if is_pyramid_dir(&path) {
            slides.push(SlideEntry { id: name, path: rel, kind: SlideKind::Pyramid });
        } else if path.is_file() && extension(&path).is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.as_str())) {
            slides.push(SlideEntry { id: stem(&path), path: rel, kind: SlideKind::Flat });
        } else {
            diagnostics.push(format!("{rel}: not a slide, ignored"));
        }
    }
    slides.sort_by(|a, b| a.id.cmp(&b.id).then(a.path.cmp(&b.path)));
    for pair in slides.windows(2) {
        if pair[0].id == pair[1].id {
            diagnostics.push(format!("slide id {} is ambiguous: {} and {}", pair[0].id, pair[0].path, pair[1].path));
        }
    }
    slides.dedup_by(|b, a| a.id == b.id);

    let mut overlays: BTreeMap<String, Vec<OverlayEntry>> = BTreeMap::new();
    let mut unpaired = Vec::new();
    let overlays_dir = root.join("overlays");
    if overlays_dir.is_dir() {
        for path in sorted_entries(&overlays_dir)? {
            if is_hidden(&path) {
                continue;
            }
            let rel = format!("overlays/{}", file_name(&path));
            let Some((stem, kind)) = classify_overlay(&path) else {
                diagnostics.push(format!("{rel}: unrecognized overlay, ignored"));
                continue;
            };
            let entry = OverlayEntry { path: rel, stem, kind };
            let matches: Vec<&SlideEntry> = slides.iter().filter(|s| entry.stem.contains(s.id.as_str())).collect();
            if matches.is_empty() {
                diagnostics.push(format!("{}: no slide id is contained in \"{}\"", entry.path, entry.stem));
                unpaired.push(entry);
                continue;
            }
            if matches.len() > 1 {
                let ids: Vec<&str> = matches.iter().map(|s| s.id.as_str()).collect();
                diagnostics.push(format!("{}: pairs with several slides: {}", entry.path, ids.join(", ")));
            }
            for s in matches {
                overlays.entry(s.id.clone()).or_default().push(entry.clone());
            }
        }
    } else {
        diagnostics.push("no overlays/ directory".to_string());
    }
    Ok(WorkspaceCatalog { root: root.to_path_buf(), slides, overlays, unpaired, diagnostics })
}
