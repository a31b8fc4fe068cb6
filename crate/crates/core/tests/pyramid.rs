mod common;

use common::*;
use rand::Rng;
use tileviz_core::slide::{
    check_aspect_ratio, generate_synthetic_slide, level_count_for, load_flat_overlay, SlideError, SlidePyramid,
};
use tileviz_core::{RasterImage, Rgba};

fn assert_level_matches(slide: &SlidePyramid, level: u32) {
    let (w, h) = slide.level_dimensions(level);
    let img = slide.read_region(level, 0, 0, w, h).unwrap();
    let oracle = oracle_synthetic_level(slide.width(), slide.height(), level);
    assert_eq!((oracle[0].len(), oracle.len()), (w as usize, h as usize));
    for y in 0..h {
        for x in 0..w {
            assert_eq!(img.get(x, y).0, oracle[y as usize][x as usize], "level {level} pixel ({x}, {y})");
        }
    }
}

#[test]
fn every_level_matches_box_filter_oracle_512() {
    let dir = tempfile::tempdir().unwrap();
    let slide = generate_synthetic_slide(512, 512, dir.path().join("s")).unwrap();
    assert_eq!(slide.level_count(), 2);
    let reopened = SlidePyramid::open(dir.path().join("s")).unwrap();
    for level in 0..reopened.level_count() {
        assert_level_matches(&reopened, level);
    }
}

#[test]
fn odd_sizes_replicate_edges() {
    let dir = tempfile::tempdir().unwrap();
    let slide = generate_synthetic_slide(1000, 601, dir.path().join("odd")).unwrap();
    assert_eq!(slide.level_count(), level_count_for(1000, 601));
    for level in 0..slide.level_count() {
        assert_level_matches(&slide, level);
    }
}

#[test]
fn first_downsampled_pixel() {
    let dir = tempfile::tempdir().unwrap();
    let slide = generate_synthetic_slide(512, 512, dir.path().join("s")).unwrap();
    // (0 + 1 + 0 + 1 + 2) / 4 = 1
    assert_eq!(slide.read_region(1, 0, 0, 1, 1).unwrap().get(0, 0), Rgba::new(1, 1, 0, 255));
}

#[test]
fn read_region_is_partition_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let slide = generate_synthetic_slide(700, 500, dir.path().join("s")).unwrap();
    let mut r = rng(9);
    for _ in 0..40 {
        let level = r.gen_range(0..slide.level_count());
        let (x, y) = (r.gen_range(-50..700i64), r.gen_range(-50..500i64));
        let (w, h) = (r.gen_range(2..300u32), r.gen_range(2..300u32));
        let whole = slide.read_region(level, x, y, w, h).unwrap();
        let split = r.gen_range(1..w);
        let left = slide.read_region(level, x, y, split, h).unwrap();
        let right = slide.read_region(level, x + split as i64, y, w - split, h).unwrap();
        let mut stitched = RasterImage::transparent(w, h);
        stitched.paste(&left, 0, 0);
        stitched.paste(&right, split, 0);
        assert_eq!(stitched, whole);
    }
}

#[test]
fn outside_pixels_are_white() {
    let dir = tempfile::tempdir().unwrap();
    let slide = generate_synthetic_slide(300, 300, dir.path().join("s")).unwrap();
    let img = slide.read_region(0, -2, 298, 4, 4).unwrap();
    assert_eq!(img.get(0, 0), Rgba::WHITE);
    assert_eq!(img.get(3, 3), Rgba::WHITE);
    assert_eq!(img.get(2, 0), Rgba::new(0, 42, 1, 255));
}

#[test]
fn tampered_pyramids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("s");
    generate_synthetic_slide(600, 300, &root).unwrap();
    std::fs::remove_file(root.join("tiles/1/1_0.png")).unwrap();
    assert!(matches!(SlidePyramid::open(&root), Err(SlideError::Inconsistent(_))));

    let root = dir.path().join("t");
    generate_synthetic_slide(300, 300, &root).unwrap();
    let mut manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("manifest.json")).unwrap()).unwrap();
    manifest["version"] = 7.into();
    std::fs::write(root.join("manifest.json"), manifest.to_string()).unwrap();
    assert!(matches!(SlidePyramid::open(&root), Err(SlideError::UnsupportedVersion(7))));

    assert!(matches!(SlidePyramid::open(dir.path().join("missing")), Err(SlideError::MissingManifest(_))));
}

#[test]
fn aspect_gate() {
    assert!(matches!(check_aspect_ratio(100, 50, 1000, 1000), Err(SlideError::AspectRatioMismatch { .. })));
    assert!(check_aspect_ratio(125, 64, 1000, 512).is_ok());

    let dir = tempfile::tempdir().unwrap();
    let parent = SlidePyramid::from_image("p", RasterImage::transparent(1000, 512));
    let ok = dir.path().join("ok.png");
    let bad = dir.path().join("bad.png");
    image::GrayImage::new(125, 64).save(&ok).unwrap();
    image::GrayImage::new(100, 50).save(&bad).unwrap();
    let overlay = load_flat_overlay(&ok, &parent).unwrap();
    assert_eq!(overlay.parent_slide_id, "p");
    assert!(matches!(load_flat_overlay(&bad, &parent), Err(SlideError::AspectRatioMismatch { .. })));
}
