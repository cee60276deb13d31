//! Deterministic work distribution.
//!
//! Work is always split into the same chunks regardless of how many worker
//! threads consume them, and chunk results are combined in chunk order, so
//! any `--jobs` setting produces bit-identical numerics. The job count is a
//! process-wide setting; the default of 1 keeps everything sequential.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

static JOBS: AtomicUsize = AtomicUsize::new(1);

/// Maximum number of work chunks an item range is split into. Chunking
/// depends only on the item count, never on the thread count.
const MAX_CHUNKS: usize = 8;

pub fn set_jobs(n: usize) {
    JOBS.store(n.max(1), Ordering::Relaxed);
}

pub fn jobs() -> usize {
    JOBS.load(Ordering::Relaxed)
}

/// Splits `0..n` into at most [`MAX_CHUNKS`] contiguous ranges.
pub(crate) fn chunk_ranges(n: usize) -> Vec<std::ops::Range<usize>> {
    if n == 0 {
        return Vec::new();
    }
    let chunks = n.min(MAX_CHUNKS);
    let base = n / chunks;
    let rem = n % chunks;
    let mut out = Vec::with_capacity(chunks);
    let mut start = 0;
    for i in 0..chunks {
        let len = base + usize::from(i < rem);
        out.push(start..start + len);
        start += len;
    }
    out
}

/// Applies `f` to every work item, in parallel when `jobs() > 1`, returning
/// results in item order. Items must already be chunk-sized units of work.
pub(crate) fn parallel_map<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, T) -> R + Sync,
{
    let workers = jobs().min(items.len());
    if workers <= 1 {
        return items.into_iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let n = items.len();
    let slots: Vec<Mutex<Option<T>>> = items.into_iter().map(|t| Mutex::new(Some(t))).collect();
    let results: Vec<Mutex<Option<R>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let item = slots[i].lock().unwrap().take().unwrap();
                let r = f(i, item);
                *results[i].lock().unwrap() = Some(r);
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().unwrap().unwrap())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunking_is_thread_count_independent() {
        let r = chunk_ranges(100);
        assert_eq!(r.len(), 8);
        assert_eq!(r.iter().map(|r| r.len()).sum::<usize>(), 100);
        assert_eq!(r[0], 0..13);
        // small n: one chunk per item
        assert_eq!(chunk_ranges(3).len(), 3);
        assert!(chunk_ranges(0).is_empty());
    }

    #[test]
    fn parallel_map_preserves_order() {
        set_jobs(4);
        let items: Vec<usize> = (0..50).collect();
        let out = parallel_map(items, |_, x| x * 2);
        assert_eq!(out, (0..50).map(|x| x * 2).collect::<Vec<_>>());
        set_jobs(1);
    }
}
