//! Reference implementations used as test oracles. They are written directly
//! from the definitions, without sharing code with the engine.

use std::collections::{BTreeMap, HashSet};

/// dot / (|u| |v|); `None` for a zero vector or a length mismatch.
pub fn cosine(u: &[f32], v: &[f32]) -> Option<f64> {
    if u.len() != v.len() {
        return None;
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| *a as f64 * *b as f64).sum();
    let nu = u.iter().map(|a| (*a as f64).powi(2)).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| (*a as f64).powi(2)).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        None
    } else {
        Some((dot / (nu * nv)).clamp(-1.0, 1.0))
    }
}

/// Padded 3-grams: lowercase, non-alphanumerics become separators, each word
/// is framed as `"  " + word + " "`.
pub fn trigrams(text: &str) -> HashSet<String> {
    let mut out = HashSet::new();
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut HashSet<String>| {
        if word.is_empty() {
            return;
        }
        let framed: Vec<char> = format!("  {word} ").chars().collect();
        for i in 0..framed.len() - 2 {
            out.insert(framed[i..i + 3].iter().collect());
        }
        word.clear();
    };
    for c in text.chars() {
        for lc in c.to_lowercase() {
            if lc.is_alphanumeric() {
                word.push(lc);
            } else {
                flush(&mut word, &mut out);
            }
        }
    }
    flush(&mut word, &mut out);
    out
}

pub fn jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

/// Token-bucket embedding with FNV-1a 64 over each lowercased whitespace token.
pub fn hash_embed(text: &str, dim: usize) -> Vec<f32> {
    const OFFSET: u64 = 14695981039346656037;
    const PRIME: u64 = 1099511628211;
    let mut v = vec![0f32; dim];
    for token in text.split_whitespace() {
        let mut h = OFFSET;
        for b in token.to_lowercase().bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
        v[(h % dim as u64) as usize] += 1.0;
    }
    let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    if n > 0.0 {
        for x in &mut v {
            *x /= n;
        }
    }
    v
}

/// One oracle search result.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleHit {
    pub chunk_id: i64,
    pub cosine: f64,
    pub trigram: f64,
    pub fused: f64,
}

/// Chunks with their embeddings and gram sets computed once.
pub struct OracleCorpus {
    dim: usize,
    chunks: Vec<(i64, Vec<f32>, HashSet<String>)>,
}

impl OracleCorpus {
    pub fn new(chunks: &[(i64, &str)], dim: usize) -> Self {
        OracleCorpus {
            dim,
            chunks: chunks
                .iter()
                .map(|&(id, text)| (id, hash_embed(text, dim), trigrams(text)))
                .collect(),
        }
    }

    /// Exhaustive hybrid ranking: score every chunk, sort by fused score
    /// descending then id ascending, keep `k`. Zero vectors score cosine 0.
    pub fn search(&self, query: &str, alpha: f64, k: usize) -> Vec<OracleHit> {
        let q = hash_embed(query, self.dim);
        let qt = trigrams(query);
        let mut hits: Vec<OracleHit> = self
            .chunks
            .iter()
            .map(|(id, v, grams)| {
                let c = cosine(&q, v).unwrap_or(0.0);
                let t = jaccard(&qt, grams);
                OracleHit {
                    chunk_id: *id,
                    cosine: c,
                    trigram: t,
                    fused: alpha * (c + 1.0) / 2.0 + (1.0 - alpha) * t,
                }
            })
            .collect();
        hits.sort_by(|a, b| b.fused.partial_cmp(&a.fused).unwrap().then(a.chunk_id.cmp(&b.chunk_id)));
        hits.truncate(k);
        hits
    }
}

pub fn brute_force_search(query: &str, chunks: &[(i64, &str)], dim: usize, alpha: f64, k: usize) -> Vec<OracleHit> {
    OracleCorpus::new(chunks, dim).search(query, alpha, k)
}

/// Permission levels as integers: 0 none, 1 view, 2 edit.
#[derive(Debug, Clone, Default)]
pub struct PermissionWorld {
    /// parent index per collection
    pub parent: Vec<Option<usize>>,
    pub owner: Vec<usize>,
    /// (collection, principal) -> level
    pub grants: BTreeMap<(usize, usize), u8>,
}

impl PermissionWorld {
    /// Walks from `c` to its root: EDIT on any owned node, else the highest grant seen.
    pub fn effective(&self, principal: usize, c: usize) -> u8 {
        let mut best = 0;
        let mut node = Some(c);
        let mut steps = 0;
        while let Some(n) = node {
            steps += 1;
            assert!(steps <= self.parent.len(), "cycle in oracle world");
            if self.owner[n] == principal {
                return 2;
            }
            best = best.max(self.grants.get(&(n, principal)).copied().unwrap_or(0));
            node = self.parent[n];
        }
        best
    }
}

/// Character-offset spans `[start, end)` of fixed-stride chunking.
pub fn spans(len: usize, size: usize, overlap: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < len {
        let end = usize::min(start + size, len);
        out.push((start, end));
        if end == len {
            break;
        }
        start += size - overlap;
    }
    out
}
