use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Spaces calls at least `1/rate` seconds apart. Callers are serialized
/// through the internal lock, so the spacing holds across threads.
pub struct RateLimiter {
    interval: Duration,
    last: Mutex<Option<Instant>>,
}

impl RateLimiter {
    /// `per_second` must be positive and finite.
    pub fn new(per_second: f64) -> Self {
        assert!(per_second > 0.0 && per_second.is_finite(), "rate must be positive");
        Self {
            interval: Duration::from_secs_f64(1.0 / per_second),
            last: Mutex::new(None),
        }
    }

    pub fn interval(&self) -> Duration {
        self.interval
    }

    /// Run `f` once the interval since the previous call has elapsed.
    pub fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        let mut last = self.last.lock().unwrap();
        if let Some(prev) = *last {
            let ready = prev + self.interval;
            let now = Instant::now();
            if ready > now {
                std::thread::sleep(ready - now);
            }
        }
        *last = Some(Instant::now());
        f()
    }
}
