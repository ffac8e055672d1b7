//! Minimal deterministic work splitting.
//!
//! Results depend only on the item index, never on scheduling, so any thread
//! count produces identical output. `WISHART_SPECTRA_THREADS` caps the pool.

/// Number of worker threads to use.
pub fn thread_count() -> usize {
    if let Ok(v) = std::env::var("WISHART_SPECTRA_THREADS") {
        if let Ok(k) = v.trim().parse::<usize>() {
            return k.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Evaluate `f(i)` for `i in 0..count` on a scoped thread pool, returning
/// results in index order.
pub fn parallel_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = thread_count().min(count.max(1));
    if workers <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    let mut slots: Vec<Option<T>> = Vec::with_capacity(count);
    slots.resize_with(count, || None);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots_ptr = std::sync::Mutex::new(&mut slots);
    // Chunked self-scheduling: each worker grabs small index ranges.
    let chunk = (count / (workers * 8)).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let start = next.fetch_add(chunk, std::sync::atomic::Ordering::Relaxed);
                if start >= count {
                    break;
                }
                let end = (start + chunk).min(count);
                let mut local: Vec<(usize, T)> = Vec::with_capacity(end - start);
                for i in start..end {
                    local.push((i, f(i)));
                }
                let mut guard = slots_ptr.lock().unwrap();
                for (i, v) in local {
                    guard[i] = Some(v);
                }
            });
        }
    });
    slots.into_iter().map(|s| s.unwrap()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let out = parallel_map(1000, |i| i * i);
        assert!(out.iter().enumerate().all(|(i, &v)| v == i * i));
    }
}
