//! Images compiled into the library so that every workflow runs offline.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{FsiError, Result};
use crate::field::SceneImage;
use crate::importance::{corpus_from_sources, Corpus, ImportanceOrder};
use crate::io::load_luma_bytes;

macro_rules! corpus_files {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_bytes!(concat!("../assets/corpus/", $name)) as &[u8])),*]
    };
}

/// Grayscale natural images used to rank Fourier coefficients.
pub const CORPUS: &[(&str, &[u8])] = corpus_files!(
    "astronaut.png",
    "brick.png",
    "cell.png",
    "chelsea.png",
    "china.png",
    "coffee.png",
    "coins.png",
    "flower.png",
    "grace_hopper.png",
    "grass.png",
    "gravel.png",
    "hubble_deep_field.png",
    "ihc.png",
    "moon.png",
    "motorcycle_left.png",
    "rocket.png",
);

/// 256×256 photograph used as the default scene. It is not part of
/// [`CORPUS`].
pub const SCENE_PNG: &[u8] = include_bytes!("../assets/scenes/cameraman_256.png");

pub const SCENE_SIDE: usize = 256;

pub fn bundled_corpus(n: usize) -> Result<Corpus> {
    let sources: Vec<(String, Vec<u8>)> = CORPUS
        .iter()
        .map(|(name, bytes)| (name.to_string(), bytes.to_vec()))
        .collect();
    corpus_from_sources(&sources, n)
}

/// Importance order of the bundled corpus at side `n`, computed once per
/// side and shared.
pub fn bundled_ordering(n: usize) -> Result<Arc<ImportanceOrder>> {
    static CACHE: OnceLock<Mutex<BTreeMap<usize, Arc<ImportanceOrder>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(order) = cache.lock().expect("ordering cache poisoned").get(&n) {
        return Ok(Arc::clone(order));
    }
    let corpus = bundled_corpus(n)?;
    if corpus.blocks.is_empty() {
        return Err(FsiError::InvalidDimension(format!(
            "bundled corpus has no {n}x{n} blocks"
        )));
    }
    let order = Arc::new(ImportanceOrder::from_corpus(&corpus, n)?);
    cache
        .lock()
        .expect("ordering cache poisoned")
        .insert(n, Arc::clone(&order));
    Ok(order)
}

/// The bundled scene at side `n`, obtained by repeated 2×2 averaging.
/// `n` must be 256 divided by a power of two.
pub fn bundled_scene(n: usize) -> Result<SceneImage> {
    let mut scene = SceneImage::from_field(load_luma_bytes(SCENE_PNG)?)?;
    let mut side = SCENE_SIDE;
    while side > n && side.is_multiple_of(2) {
        scene = scene.downsample2()?;
        side /= 2;
    }
    if side != n {
        return Err(FsiError::InvalidDimension(format!(
            "bundled scene is available at 256/2^k, not {n}"
        )));
    }
    Ok(scene)
}
