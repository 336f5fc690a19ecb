//! Statistical importance of Fourier coefficients over a natural-image corpus.
//!
//! Blocks are transformed, the moduli of their spectra are summed per
//! half-plane frequency, and the frequencies are ranked by that sum in
//! descending order. Rank 1 is the most important coefficient.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{FsiError, Result};
use crate::field::{RealField, SceneImage};
use crate::io::{hex, load_luma_bytes, parse_header_fields};
use crate::spectrum::{Dft2, HalfPlaneMap};

/// Blocks cut from a directory of images plus a hash of the files used.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub blocks: Vec<SceneImage>,
    pub content_hash: String,
    pub files_used: usize,
}

/// Cuts non-overlapping `n`×`n` blocks from the top-left corner, discarding
/// partial blocks at the right and bottom edges.
pub fn tile_blocks(image: &RealField, n: usize) -> Result<Vec<SceneImage>> {
    let mut blocks = Vec::new();
    for by in 0..image.height() / n {
        for bx in 0..image.width() / n {
            blocks.push(SceneImage::from_field(image.crop(bx * n, by * n, n, n)?)?);
        }
    }
    Ok(blocks)
}

/// Loads every readable image under `dir` (non-recursive, sorted by path),
/// converts it to grayscale and tiles it into `n`×`n` blocks.
///
/// Unreadable files are skipped with a warning.
pub fn ingest_corpus(dir: &Path, n: usize) -> Result<Corpus> {
    crate::spectrum::validate_side(n)?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();

    let mut sources = Vec::new();
    for path in paths {
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                continue;
            }
        };
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        sources.push((name, bytes));
    }
    let corpus = corpus_from_sources(&sources, n)?;
    if corpus.blocks.is_empty() {
        return Err(FsiError::EmptyCorpus(dir.to_path_buf()));
    }
    Ok(corpus)
}

/// Builds a corpus from in-memory encoded images. Sources are processed in
/// (name, bytes) order, so the result does not depend on the order given.
pub fn corpus_from_sources(sources: &[(String, Vec<u8>)], n: usize) -> Result<Corpus> {
    let mut sorted: Vec<&(String, Vec<u8>)> = sources.iter().collect();
    sorted.sort();
    let mut hasher = Sha256::new();
    let mut blocks = Vec::new();
    let mut files_used = 0;
    for (name, bytes) in sorted {
        let image = match load_luma_bytes(bytes) {
            Ok(img) => img,
            Err(e) => {
                log::warn!("skipping {name}: {e}");
                continue;
            }
        };
        let tiles = tile_blocks(&image, n)?;
        if tiles.is_empty() {
            log::warn!(
                "{name}: {}x{} is smaller than the {n}x{n} block size",
                image.width(),
                image.height()
            );
            continue;
        }
        files_used += 1;
        hasher.update((name.len() as u64).to_le_bytes());
        hasher.update(name.as_bytes());
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
        blocks.extend(tiles);
    }
    Ok(Corpus {
        blocks,
        content_hash: hex(&hasher.finalize()),
        files_used,
    })
}

/// Per half-plane index, the sum over blocks of the spectral modulus.
///
/// Spectra are computed in parallel; the reduction always adds blocks in the
/// order given so the result does not depend on thread scheduling.
pub fn accumulate_importance(blocks: &[SceneImage], n: usize) -> Result<Vec<f64>> {
    let map = HalfPlaneMap::new(n)?;
    for b in blocks {
        if b.width() != n || b.height() != n {
            return Err(FsiError::mismatch(
                format!("{n}x{n}"),
                format!("{}x{}", b.width(), b.height()),
            ));
        }
    }
    const CHUNK: usize = 64;
    let mut sums = vec![0.0; map.len()];
    for chunk in blocks.chunks(CHUNK) {
        let moduli: Vec<Vec<f64>> = chunk
            .par_iter()
            .map_init(
                || Dft2::new(n).expect("validated side"),
                |dft, block| {
                    let spec = dft.forward(block.field()).expect("validated shape");
                    map.entries().iter().map(|&p| spec.get(p).norm()).collect()
                },
            )
            .collect();
        for m in &moduli {
            for (s, v) in sums.iter_mut().zip(m) {
                *s += v;
            }
        }
    }
    Ok(sums)
}

/// Half-plane frequencies ranked by descending accumulated modulus.
#[derive(Clone, Debug, PartialEq)]
pub struct ImportanceOrder {
    n: usize,
    /// `order[k - 1]` is the half-plane index at rank `k`.
    order: Vec<usize>,
    /// Accumulated modulus per half-plane index.
    sums: Vec<f64>,
    corpus_hash: String,
    content_hash: String,
}

/// Stable descending sort of `sums`; ties go to the lower canonical index.
pub fn sort_importance(sums: &[f64], n: usize) -> Result<ImportanceOrder> {
    sort_importance_with_corpus(sums, n, String::new())
}

pub fn sort_importance_with_corpus(
    sums: &[f64],
    n: usize,
    corpus_hash: String,
) -> Result<ImportanceOrder> {
    let expected = n * n / 2 + 2;
    crate::spectrum::validate_side(n)?;
    if sums.len() != expected {
        return Err(FsiError::mismatch(expected, sums.len()));
    }
    if let Some(bad) = sums.iter().find(|s| !s.is_finite() || **s < 0.0) {
        return Err(FsiError::OutOfRange {
            name: "modulus_sum",
            value: *bad,
            reason: "importance sums must be finite and nonnegative",
        });
    }
    let mut order: Vec<usize> = (0..sums.len()).collect();
    order.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
    Ok(ImportanceOrder::from_parts(
        n,
        order,
        sums.to_vec(),
        corpus_hash,
    ))
}

impl ImportanceOrder {
    fn from_parts(n: usize, order: Vec<usize>, sums: Vec<f64>, corpus_hash: String) -> Self {
        let mut hasher = Sha256::new();
        hasher.update((n as u64).to_le_bytes());
        for &i in &order {
            hasher.update((i as u64).to_le_bytes());
            hasher.update(sums[i].to_le_bytes());
        }
        let content_hash = hex(&hasher.finalize());
        Self {
            n,
            order,
            sums,
            corpus_hash,
            content_hash,
        }
    }

    /// Ingest, accumulate and sort in one go.
    pub fn from_corpus(corpus: &Corpus, n: usize) -> Result<Self> {
        let sums = accumulate_importance(&corpus.blocks, n)?;
        sort_importance_with_corpus(&sums, n, corpus.content_hash.clone())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `k_max`, the number of ranked coefficients.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Half-plane index at 1-based `rank`.
    pub fn index_at_rank(&self, rank: usize) -> usize {
        self.order[rank - 1]
    }

    /// 1-based rank of every half-plane index.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.order.len()];
        for (pos, &idx) in self.order.iter().enumerate() {
            ranks[idx] = pos + 1;
        }
        ranks
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn corpus_hash(&self) -> &str {
        &self.corpus_hash
    }

    /// SHA-256 over the ranked indices and their sums.
    pub fn content_hash(&self) -> &str {
        &self.content_hash
    }

    /// Writes the ordering CSV: a `#` comment line carrying `n` and the corpus
    /// hash, then `k,u,v,modulus_sum` rows in rank order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let map = HalfPlaneMap::new(self.n)?;
        writeln!(
            out,
            "# fsi-importance v1 n={} corpus_sha256={}",
            self.n,
            if self.corpus_hash.is_empty() {
                "none"
            } else {
                &self.corpus_hash
            }
        )?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["k", "u", "v", "modulus_sum"])?;
        for (pos, &idx) in self.order.iter().enumerate() {
            let p = map.entry(idx);
            w.write_record(&[
                (pos + 1).to_string(),
                p.u.to_string(),
                p.v.to_string(),
                self.sums[idx].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut first = String::new();
        input.read_line(&mut first)?;
        let fields = parse_header_fields(&first, "fsi-importance")?;
        let n: usize = fields
            .get("n")
            .ok_or_else(|| FsiError::parse("ordering", "header lacks n="))?
            .parse()
            .map_err(|e| FsiError::parse("ordering n", format!("{e}")))?;
        let corpus_hash = match fields.get("corpus_sha256").map(String::as_str) {
            None | Some("none") => String::new(),
            Some(h) => h.to_string(),
        };
        let map = HalfPlaneMap::new(n)?;

        let mut reader = csv::ReaderBuilder::new().from_reader(input);
        let mut order = Vec::with_capacity(map.len());
        let mut sums = vec![f64::NAN; map.len()];
        for (row, rec) in reader.records().enumerate() {
            let rec = rec?;
            let get = |i: usize| -> Result<&str> {
                rec.get(i)
                    .ok_or_else(|| FsiError::parse("ordering", format!("row {} is short", row + 1)))
            };
            let num = |s: &str| -> Result<usize> {
                s.trim()
                    .parse()
                    .map_err(|e| FsiError::parse("ordering", format!("row {}: {e}", row + 1)))
            };
            let k = num(get(0)?)?;
            if k != row + 1 {
                return Err(FsiError::parse(
                    "ordering",
                    format!("rank {k} out of sequence"),
                ));
            }
            let p = crate::spectrum::FrequencyPair::new(num(get(1)?)?, num(get(2)?)?);
            let idx = map.representative_index(p).ok_or_else(|| {
                FsiError::parse("ordering", format!("({}, {}) is not canonical", p.u, p.v))
            })?;
            let sum: f64 = get(3)?
                .trim()
                .parse()
                .map_err(|e| FsiError::parse("ordering", format!("row {}: {e}", row + 1)))?;
            if !sums[idx].is_nan() {
                return Err(FsiError::parse(
                    "ordering",
                    format!("duplicate ({}, {})", p.u, p.v),
                ));
            }
            sums[idx] = sum;
            order.push(idx);
        }
        if order.len() != map.len() {
            return Err(FsiError::parse(
                "ordering",
                format!("expected {} rows, found {}", map.len(), order.len()),
            ));
        }
        Ok(Self::from_parts(n, order, sums, corpus_hash))
    }
}
