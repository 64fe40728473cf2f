//! Image datasets: class-per-directory trees, CSV manifests, stratified
//! splits, coarse cluster relabeling and a synthetic texture generator.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::FilterType;
use image::{DynamicImage, RgbImage};
use log::warn;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::neural::Tensor;
use crate::{Error, Result};

/// Side length of EuroSAT RGB tiles.
pub const EUROSAT_SIZE: usize = 64;

pub const EUROSAT_CLASSES: [&str; 10] = [
    "AnnualCrop",
    "Forest",
    "HerbaceousVegetation",
    "Highway",
    "Industrial",
    "Pasture",
    "PermanentCrop",
    "Residential",
    "River",
    "SeaLake",
];

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledImage {
    /// `[3, H, W]`, values in `[0, 1]`.
    pub pixels: Tensor,
    pub label: usize,
    pub source_id: String,
}

/// Decoded images with their class names.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub class_names: Vec<String>,
    pub items: Vec<LabeledImage>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub path: PathBuf,
    pub label: usize,
}

/// File paths with labels, not yet decoded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub class_names: Vec<String>,
    pub items: Vec<ManifestItem>,
    pub split_seed: u64,
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", dir.display())))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}

/// One class per subdirectory of `root`, classes and files in sorted order.
/// Classes without any image file are skipped with a warning.
pub fn load_directory(root: impl AsRef<Path>) -> Result<DatasetManifest> {
    let root = root.as_ref();
    let mut class_names = Vec::new();
    let mut items = Vec::new();
    for dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let files: Vec<PathBuf> = sorted_entries(&dir)?
            .into_iter()
            .filter(|p| p.is_file() && is_image(p))
            .collect();
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        if files.is_empty() {
            warn!("skipping class directory {} with no images", dir.display());
            continue;
        }
        let label = class_names.len();
        class_names.push(name);
        items.extend(files.into_iter().map(|path| ManifestItem { path, label }));
    }
    if items.is_empty() {
        return Err(Error::Data(format!("no labeled images under {}", root.display())));
    }
    Ok(DatasetManifest {
        class_names,
        items,
        split_seed: 0,
    })
}

/// `path,label` lines (an optional `path,label` header is skipped). Labels
/// are class names; relative paths resolve against the CSV's directory.
pub fn load_csv_manifest(csv_path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let csv_path = csv_path.as_ref();
    let text = fs::read_to_string(csv_path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", csv_path.display())))?;
    let base = csv_path.parent().unwrap_or(Path::new("."));
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.eq_ignore_ascii_case("path,label")) {
            continue;
        }
        let (path, label) = line
            .rsplit_once(',')
            .ok_or_else(|| Error::Data(format!("{}:{}: expected path,label", csv_path.display(), n + 1)))?;
        let path = PathBuf::from(path.trim());
        let path = if path.is_absolute() { path } else { base.join(path) };
        rows.push((path, label.trim().to_string()));
    }
    let class_names: Vec<String> = rows
        .iter()
        .map(|(_, l)| l.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut seen = HashSet::new();
    let mut items = Vec::with_capacity(rows.len());
    for (path, label) in rows {
        if !seen.insert(path.clone()) {
            return Err(Error::Data(format!("duplicate manifest path {}", path.display())));
        }
        let label = class_names.binary_search(&label).expect("label collected above");
        items.push(ManifestItem { path, label });
    }
    if items.is_empty() {
        return Err(Error::Data(format!("manifest {} lists no images", csv_path.display())));
    }
    Ok(DatasetManifest {
        class_names,
        items,
        split_seed: 0,
    })
}

/// Decodes PNG/JPEG bytes into a `[3, size, size]` tensor in `[0, 1]`:
/// center-crop to a square, bilinear resize when the side differs, RGB only.
pub fn to_tensor(bytes: &[u8], size: usize) -> Result<Tensor> {
    let img = image::load_from_memory(bytes).map_err(|e| Error::Format(format!("cannot decode image: {e}")))?;
    Ok(image_to_tensor(img, size))
}

fn image_to_tensor(img: DynamicImage, size: usize) -> Tensor {
    let (w, h) = (img.width(), img.height());
    let side = w.min(h);
    let img = if w != h {
        img.crop_imm((w - side) / 2, (h - side) / 2, side, side)
    } else {
        img
    };
    let rgb = if side as usize != size {
        img.resize_exact(size as u32, size as u32, FilterType::Triangle).to_rgb8()
    } else {
        img.to_rgb8()
    };
    let mut data = vec![0.0; 3 * size * size];
    for (x, y, px) in rgb.enumerate_pixels() {
        for c in 0..3 {
            data[(c * size + y as usize) * size + x as usize] = px.0[c] as f64 / 255.0;
        }
    }
    Tensor::new(vec![3, size, size], data).expect("shape matches buffer")
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|i| i.label).collect()
    }

    /// Decodes every image (in parallel; output keeps manifest order).
    pub fn load(&self, size: usize) -> Result<Dataset> {
        let items = self
            .items
            .par_iter()
            .map(|item| {
                let bytes = fs::read(&item.path).map_err(|e| Error::Item {
                    path: item.path.clone(),
                    message: e.to_string(),
                })?;
                let pixels = to_tensor(&bytes, size).map_err(|e| Error::Item {
                    path: item.path.clone(),
                    message: e.to_string(),
                })?;
                Ok(LabeledImage {
                    pixels,
                    label: item.label,
                    source_id: item.path.display().to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            class_names: self.class_names.clone(),
            items,
        })
    }

    fn subset(&self, idx: &[usize], seed: u64) -> DatasetManifest {
        DatasetManifest {
            class_names: self.class_names.clone(),
            items: idx.iter().map(|&i| self.items[i].clone()).collect(),
            split_seed: seed,
        }
    }
}

/// Per-class seeded shuffle, then the first `round(n · fraction)` items of
/// each class (at least one on each side) go to training. Returned indices
/// are sorted.
pub fn stratified_split(labels: &[usize], train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Argument(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (class, mut idx) in by_class {
        let n = idx.len();
        if n < 2 {
            return Err(Error::Data(format!(
                "class {class} has {n} item(s); stratified split needs at least 2"
            )));
        }
        idx.shuffle(&mut rng);
        let n_train = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
        train.extend_from_slice(&idx[..n_train]);
        val.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

pub fn split(manifest: &DatasetManifest, train_fraction: f64, seed: u64) -> Result<(DatasetManifest, DatasetManifest)> {
    let (tr, va) = stratified_split(&manifest.labels(), train_fraction, seed)?;
    Ok((manifest.subset(&tr, seed), manifest.subset(&va, seed)))
}

/// Ordered grouping of fine classes into coarse clusters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterMap {
    pub clusters: Vec<Cluster>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub name: String,
    pub classes: Vec<String>,
}

impl Default for ClusterMap {
    /// Vegetation, Urban and WaterBodies over the EuroSAT classes.
    fn default() -> Self {
        let c = |name: &str, classes: &[&str]| Cluster {
            name: name.into(),
            classes: classes.iter().map(|s| s.to_string()).collect(),
        };
        Self {
            clusters: vec![
                c(
                    "Vegetation",
                    &["AnnualCrop", "PermanentCrop", "Pasture", "Forest", "HerbaceousVegetation"],
                ),
                c("Urban", &["Highway", "Industrial", "Residential"]),
                c("WaterBodies", &["River", "SeaLake"]),
            ],
        }
    }
}

impl ClusterMap {
    pub fn names(&self) -> Vec<String> {
        self.clusters.iter().map(|c| c.name.clone()).collect()
    }

    /// For each fine class index, the index of its cluster. Fails unless the
    /// clusters partition `class_names` exactly.
    pub fn coarse_of(&self, class_names: &[String]) -> Result<Vec<usize>> {
        let mut owner: BTreeMap<&str, usize> = BTreeMap::new();
        for (ci, cluster) in self.clusters.iter().enumerate() {
            for class in &cluster.classes {
                if owner.insert(class.as_str(), ci).is_some() {
                    return Err(Error::Config(format!("class '{class}' is in more than one cluster")));
                }
                if !class_names.contains(class) {
                    return Err(Error::Config(format!("cluster class '{class}' not in the dataset")));
                }
            }
        }
        class_names
            .iter()
            .map(|n| {
                owner
                    .get(n.as_str())
                    .copied()
                    .ok_or_else(|| Error::Config(format!("class '{n}' is not assigned to any cluster")))
            })
            .collect()
    }

    /// Maps a fine class index to `(cluster, index within the cluster)`.
    pub fn locate(&self, class_names: &[String], fine: usize) -> Result<(usize, usize)> {
        let name = class_names
            .get(fine)
            .ok_or_else(|| Error::Index(format!("class index {fine} out of range")))?;
        self.clusters
            .iter()
            .enumerate()
            .find_map(|(ci, c)| c.classes.iter().position(|n| n == name).map(|p| (ci, p)))
            .ok_or_else(|| Error::Config(format!("class '{name}' is not assigned to any cluster")))
    }
}

/// Replaces each label by its cluster index; cluster order follows `map`.
pub fn relabel_clusters(manifest: &DatasetManifest, map: &ClusterMap) -> Result<DatasetManifest> {
    let coarse = map.coarse_of(&manifest.class_names)?;
    Ok(DatasetManifest {
        class_names: map.names(),
        items: manifest
            .items
            .iter()
            .map(|i| ManifestItem {
                path: i.path.clone(),
                label: coarse[i.label],
            })
            .collect(),
        split_seed: manifest.split_seed,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|i| i.label).collect()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            class_names: self.class_names.clone(),
            items: idx.iter().map(|&i| self.items[i].clone()).collect(),
        }
    }

    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        let (tr, va) = stratified_split(&self.labels(), train_fraction, seed)?;
        Ok((self.subset(&tr), self.subset(&va)))
    }

    pub fn relabel_clusters(&self, map: &ClusterMap) -> Result<Dataset> {
        let coarse = map.coarse_of(&self.class_names)?;
        Ok(Dataset {
            class_names: map.names(),
            items: self
                .items
                .iter()
                .map(|i| LabeledImage {
                    label: coarse[i.label],
                    ..i.clone()
                })
                .collect(),
        })
    }

    /// Items of one cluster, relabeled to indices within that cluster.
    pub fn restrict_to_cluster(&self, map: &ClusterMap, cluster: usize) -> Result<Dataset> {
        let c = map
            .clusters
            .get(cluster)
            .ok_or_else(|| Error::Index(format!("cluster {cluster} out of range")))?;
        map.coarse_of(&self.class_names)?;
        let mut items = Vec::new();
        for item in &self.items {
            let (ci, local) = map.locate(&self.class_names, item.label)?;
            if ci == cluster {
                items.push(LabeledImage {
                    label: local,
                    ..item.clone()
                });
            }
        }
        Ok(Dataset {
            class_names: c.classes.clone(),
            items,
        })
    }

    /// Writes the images as 8-bit PNGs in a class-per-directory tree that
    /// [`load_directory`] reads back.
    pub fn export_directory(&self, root: impl AsRef<Path>) -> Result<()> {
        let root = root.as_ref();
        for (i, item) in self.items.iter().enumerate() {
            let dir = root.join(&self.class_names[item.label]);
            fs::create_dir_all(&dir)?;
            let [_, h, w] = <[usize; 3]>::try_from(item.pixels.shape()).map_err(|_| {
                Error::Shape(format!("expected [3, h, w] pixels, got {:?}", item.pixels.shape()))
            })?;
            let px = item.pixels.data();
            let img = RgbImage::from_fn(w as u32, h as u32, |x, y| {
                let at = |c: usize| (px[(c * h + y as usize) * w + x as usize] * 255.0).round().clamp(0.0, 255.0) as u8;
                image::Rgb([at(0), at(1), at(2)])
            });
            img.save(dir.join(format!("{i:06}.png")))
                .map_err(|e| Error::Data(format!("cannot write image: {e}")))?;
        }
        Ok(())
    }
}

/// Class names `class_0`, `class_1`, ...
pub fn synthetic_class_names(n_classes: usize) -> Vec<String> {
    (0..n_classes).map(|k| format!("class_{k}")).collect()
}

pub fn synthetic_generate(n_classes: usize, n_per_class: usize, image_size: usize, seed: u64) -> Result<Dataset> {
    synthetic_generate_named(&synthetic_class_names(n_classes), n_per_class, image_size, seed)
}

/// Oriented sinusoidal gratings: class `k` fixes an orientation and a spatial
/// period; every image draws its own phase, contrast, brightness, channel
/// gains and pixel noise. Random phase leaves each class mean nearly flat, so
/// raw pixels carry almost no linear signal.
pub fn synthetic_generate_named(
    class_names: &[String],
    n_per_class: usize,
    image_size: usize,
    seed: u64,
) -> Result<Dataset> {
    let n_classes = class_names.len();
    if n_classes < 2 {
        return Err(Error::Argument(format!("synthetic data needs at least 2 classes, got {n_classes}")));
    }
    if image_size == 0 {
        return Err(Error::Argument("image size must be positive".into()));
    }
    let n_freq = n_classes.div_ceil(5);
    let n_orient = n_classes.div_ceil(n_freq);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.08).expect("valid sigma");
    let mut items = Vec::with_capacity(n_classes * n_per_class);
    for (k, class_name) in class_names.iter().enumerate() {
        let base_angle = PI * (k % n_orient) as f64 / n_orient as f64;
        let base_period = 8.0 / (1 + k / n_orient) as f64;
        for i in 0..n_per_class {
            let angle = base_angle + rng.gen_range(-0.05..0.05);
            let freq = 2.0 * PI / (base_period * rng.gen_range(0.95..1.05));
            let phase = rng.gen_range(0.0..2.0 * PI);
            let contrast = rng.gen_range(0.2..0.35);
            let brightness = rng.gen_range(0.4..0.6);
            let gains: [f64; 3] = [rng.gen_range(0.8..1.2), rng.gen_range(0.8..1.2), rng.gen_range(0.8..1.2)];
            let (sa, ca) = angle.sin_cos();
            let mut data = vec![0.0; 3 * image_size * image_size];
            for y in 0..image_size {
                for x in 0..image_size {
                    let wave = (freq * (x as f64 * ca + y as f64 * sa) + phase).sin();
                    for (c, gain) in gains.iter().enumerate() {
                        let v = brightness + gain * contrast * wave + noise.sample(&mut rng);
                        data[(c * image_size + y) * image_size + x] = v.clamp(0.0, 1.0);
                    }
                }
            }
            items.push(LabeledImage {
                pixels: Tensor::new(vec![3, image_size, image_size], data)?,
                label: k,
                source_id: format!("synthetic/{class_name}/{i}"),
            });
        }
    }
    Ok(Dataset {
        class_names: class_names.to_vec(),
        items,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{ImageFormat, Rgb};
    use std::io::Cursor;

    fn png_bytes(w: u32, h: u32, v: u8) -> Vec<u8> {
        let img = RgbImage::from_pixel(w, h, Rgb([v, v, v]));
        let mut buf = Cursor::new(Vec::new());
        img.write_to(&mut buf, ImageFormat::Png).unwrap();
        buf.into_inner()
    }

    #[test]
    fn to_tensor_white_black_and_resize() {
        let white = to_tensor(&png_bytes(64, 64, 255), 64).unwrap();
        assert_eq!(white.shape(), &[3, 64, 64]);
        assert!(white.data().iter().all(|&v| v == 1.0));
        let black = to_tensor(&png_bytes(64, 64, 0), 64).unwrap();
        assert!(black.data().iter().all(|&v| v == 0.0));
        let big = to_tensor(&png_bytes(128, 128, 200), 64).unwrap();
        assert_eq!(big.shape(), &[3, 64, 64]);
        let wide = to_tensor(&png_bytes(96, 64, 10), 64).unwrap();
        assert_eq!(wide.shape(), &[3, 64, 64]);
        assert!(matches!(to_tensor(b"not an image", 64), Err(Error::Format(_))));
    }

    #[test]
    fn directory_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let ds = synthetic_generate(3, 4, 8, 1).unwrap();
        ds.export_directory(tmp.path()).unwrap();
        fs::create_dir(tmp.path().join("zz_empty")).unwrap();
        let m = load_directory(tmp.path()).unwrap();
        assert_eq!(m.class_names, vec!["class_0", "class_1", "class_2"]);
        assert_eq!(m.len(), 12);
        assert_eq!(m, load_directory(tmp.path()).unwrap());
        let loaded = m.load(8).unwrap();
        assert_eq!(loaded.labels(), ds.labels());
        for (a, b) in loaded.items.iter().zip(&ds.items) {
            for (x, y) in a.pixels.data().iter().zip(b.pixels.data()) {
                assert!((x - y).abs() <= 0.5 / 255.0 + 1e-12);
            }
        }
    }

    #[test]
    fn empty_root_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(load_directory(tmp.path()), Err(Error::Data(_))));
    }

    #[test]
    fn unreadable_image_names_path() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().join("a");
        fs::create_dir(&dir).unwrap();
        fs::write(dir.join("bad.png"), b"garbage").unwrap();
        let m = load_directory(tmp.path()).unwrap();
        match m.load(8) {
            Err(Error::Item { path, .. }) => assert!(path.ends_with("bad.png")),
            other => panic!("expected item error, got {other:?}"),
        }
    }

    #[test]
    fn csv_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let csv = tmp.path().join("m.csv");
        fs::write(&csv, "path,label\nimgs/a.png,River\nimgs/b.png,Forest\n").unwrap();
        let m = load_csv_manifest(&csv).unwrap();
        assert_eq!(m.class_names, vec!["Forest", "River"]);
        assert_eq!(m.labels(), vec![1, 0]);
        assert_eq!(m.items[0].path, tmp.path().join("imgs/a.png"));
        fs::write(&csv, "a.png,x\na.png,y\n").unwrap();
        assert!(matches!(load_csv_manifest(&csv), Err(Error::Data(_))));
    }

    fn fake_manifest(per_class: &[usize]) -> DatasetManifest {
        let mut items = Vec::new();
        for (label, &n) in per_class.iter().enumerate() {
            for i in 0..n {
                items.push(ManifestItem {
                    path: PathBuf::from(format!("{label}/{i}.png")),
                    label,
                });
            }
        }
        DatasetManifest {
            class_names: (0..per_class.len()).map(|i| i.to_string()).collect(),
            items,
            split_seed: 0,
        }
    }

    #[test]
    fn split_80_20_per_class() {
        let m = fake_manifest(&[100, 100, 100]);
        let (tr, va) = split(&m, 0.8, 42).unwrap();
        for c in 0..3 {
            assert_eq!(tr.labels().iter().filter(|&&l| l == c).count(), 80);
            assert_eq!(va.labels().iter().filter(|&&l| l == c).count(), 20);
        }
        let mut all: Vec<_> = tr.items.iter().chain(&va.items).map(|i| i.path.clone()).collect();
        all.sort();
        let mut orig: Vec<_> = m.items.iter().map(|i| i.path.clone()).collect();
        orig.sort();
        assert_eq!(all, orig);
        assert_eq!(split(&m, 0.8, 42).unwrap(), (tr.clone(), va.clone()));
        assert_ne!(split(&m, 0.8, 43).unwrap().0.items, tr.items);
        assert_eq!(tr.split_seed, 42);
    }

    #[test]
    fn split_edge_cases() {
        let (tr, va) = split(&fake_manifest(&[2, 2]), 0.5, 0).unwrap();
        assert_eq!((tr.len(), va.len()), (2, 2));
        assert!(matches!(split(&fake_manifest(&[2, 1]), 0.5, 0), Err(Error::Data(_))));
        assert!(matches!(split(&fake_manifest(&[2, 2]), 1.0, 0), Err(Error::Argument(_))));
        assert!(matches!(split(&fake_manifest(&[2, 2]), 0.0, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn eurosat_clusters() {
        let mut m = fake_manifest(&[1; 10]);
        m.class_names = EUROSAT_CLASSES.iter().map(|s| s.to_string()).collect();
        let map = ClusterMap::default();
        let coarse = relabel_clusters(&m, &map).unwrap();
        assert_eq!(coarse.class_names, vec!["Vegetation", "Urban", "WaterBodies"]);
        assert_eq!(coarse.len(), m.len());
        let label_of = |name: &str| coarse.items[EUROSAT_CLASSES.iter().position(|c| *c == name).unwrap()].label;
        assert_eq!(label_of("Forest"), 0);
        assert_eq!(label_of("Highway"), 1);
        assert_eq!(label_of("SeaLake"), 2);
        let total: usize = map.clusters.iter().map(|c| c.classes.len()).sum();
        assert_eq!(total, 10);

        let mut broken = map.clone();
        broken.clusters[2].classes.pop();
        assert!(matches!(relabel_clusters(&m, &broken), Err(Error::Config(_))));
    }

    #[test]
    fn synthetic_is_balanced_and_deterministic() {
        let a = synthetic_generate(4, 50, 16, 7).unwrap();
        assert_eq!(a.len(), 200);
        for c in 0..4 {
            assert_eq!(a.labels().iter().filter(|&&l| l == c).count(), 50);
        }
        let b = synthetic_generate(4, 50, 16, 7).unwrap();
        let bits = |d: &Dataset| {
            d.items
                .iter()
                .flat_map(|i| i.pixels.data().iter().map(|v| v.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a), bits(&b));
        assert!(a.items.iter().all(|i| i.pixels.data().iter().all(|v| (0.0..=1.0).contains(v))));
        assert!(matches!(synthetic_generate(1, 5, 8, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn restrict_to_cluster_relabels_locally() {
        let names: Vec<String> = EUROSAT_CLASSES.iter().map(|s| s.to_string()).collect();
        let ds = synthetic_generate_named(&names, 2, 4, 0).unwrap();
        let urban = ds.restrict_to_cluster(&ClusterMap::default(), 1).unwrap();
        assert_eq!(urban.class_names, vec!["Highway", "Industrial", "Residential"]);
        assert_eq!(urban.len(), 6);
        assert_eq!(urban.labels(), vec![0, 0, 1, 1, 2, 2]);
    }
}
