//! CPU clock of the calling thread.
//!
//! Planning budgets and timing cells are measured in CPU time. The thread
//! clock is used rather than the process clock so that episodes running on a
//! worker pool each see only their own consumption.

/// CPU seconds consumed so far by the calling thread.
pub fn thread_cpu_seconds() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec for the duration of the call.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return 0.0;
    }
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// Measures CPU time elapsed since construction.
#[derive(Debug, Clone, Copy)]
pub struct CpuStopwatch {
    start: f64,
}

impl CpuStopwatch {
    pub fn start() -> Self {
        Self { start: thread_cpu_seconds() }
    }

    pub fn elapsed(&self) -> f64 {
        (thread_cpu_seconds() - self.start).max(0.0)
    }
}
