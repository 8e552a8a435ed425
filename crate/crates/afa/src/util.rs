//! Small shared numeric and scheduling helpers.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Index of the largest value; ties resolve to the lowest index. `NaN`
/// entries never win.
pub fn argmax_tie_low<T: PartialOrd>(xs: &[T]) -> usize {
    assert!(!xs.is_empty(), "argmax of empty slice");
    let mut best = 0;
    for i in 1..xs.len() {
        if xs[i] > xs[best] {
            best = i;
        }
    }
    best
}

/// Worker-thread budget: the `AFA_THREADS` environment variable when set to
/// a positive integer, otherwise the machine's available parallelism,
/// otherwise 1.
pub fn thread_budget() -> usize {
    if let Ok(raw) = std::env::var("AFA_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Run `n_jobs` independent jobs on at most `threads` scoped workers and
/// collect the results in job order.
///
/// Jobs are claimed from a shared counter, so scheduling is nondeterministic
/// but the output order (and, for jobs that derive their randomness from
/// their index alone, the output values) is not.
pub fn run_jobs<T: Send>(
    n_jobs: usize,
    threads: usize,
    job: impl Fn(usize) -> T + Sync,
) -> Vec<T> {
    let workers = threads.clamp(1, n_jobs.max(1));
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..n_jobs).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n_jobs {
                    break;
                }
                let out = job(i);
                *slots[i].lock().unwrap() = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("job produced no result"))
        .collect()
}
