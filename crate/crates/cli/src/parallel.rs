//! Work distribution across experiment instances.
//!
//! `MARGIN_PATHS_THREADS` caps the pool; results are returned in submission
//! order, so parallelism never changes what gets written.

use std::sync::atomic::{AtomicUsize, Ordering};

fn cap_from(var: Option<&str>) -> Option<usize> {
    var.and_then(|v| v.trim().parse::<usize>().ok())
        .map(|n| n.max(1))
}

pub fn thread_cap() -> usize {
    if let Some(n) = cap_from(std::env::var("MARGIN_PATHS_THREADS").ok().as_deref()) {
        return n;
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Applies `f` to every index in `0..len`, fanning out over at most
/// `thread_cap()` threads, and returns the outputs in index order.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = thread_cap().min(len);
    if threads <= 1 {
        return (0..len).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut tagged: Vec<(usize, T)> = std::thread::scope(|s| {
        let workers: Vec<_> = (0..threads)
            .map(|_| {
                s.spawn(|| {
                    let mut mine = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= len {
                            break;
                        }
                        mine.push((i, f(i)));
                    }
                    mine
                })
            })
            .collect();
        let mut all = Vec::with_capacity(len);
        for w in workers {
            all.extend(w.join().expect("worker panicked"));
        }
        all
    });
    tagged.sort_by_key(|(i, _)| *i);
    tagged.into_iter().map(|(_, t)| t).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_parses_and_clamps() {
        assert_eq!(cap_from(Some("4")), Some(4));
        assert_eq!(cap_from(Some(" 2 ")), Some(2));
        assert_eq!(cap_from(Some("0")), Some(1));
        assert_eq!(cap_from(Some("nope")), None);
        assert_eq!(cap_from(None), None);
    }

    #[test]
    fn results_come_back_in_index_order() {
        let out = map_indexed(37, |i| {
            // stagger completion so order would scramble without the sort
            std::thread::sleep(std::time::Duration::from_micros((37 - i) as u64));
            i * i
        });
        assert_eq!(out, (0..37).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn empty_and_singleton_inputs() {
        assert_eq!(map_indexed(0, |i| i), Vec::<usize>::new());
        assert_eq!(map_indexed(1, |i| i + 10), vec![10]);
    }
}
