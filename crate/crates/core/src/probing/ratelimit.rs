use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Token bucket refilling at `rate` tokens per second with burst `capacity`.
#[derive(Debug)]
pub struct TokenBucket {
    rate: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    /// `rate <= 0` yields an unlimited bucket.
    pub fn new(rate: f64, capacity: f64) -> Self {
        let capacity = capacity.max(1.0);
        Self {
            rate,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    pub fn per_second(rate: f64) -> Self {
        Self::new(rate, 1.0)
    }

    pub fn is_unlimited(&self) -> bool {
        self.rate <= 0.0
    }

    /// How long the caller must wait before one token is available,
    /// reserving it. Zero when a token is available now.
    pub fn reserve(&self, now: Instant) -> Duration {
        if self.is_unlimited() {
            return Duration::ZERO;
        }
        let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
        let (tokens, last) = *st;
        let elapsed = now.saturating_duration_since(last).as_secs_f64();
        let available = (tokens + elapsed * self.rate).min(self.capacity) - 1.0;
        *st = (available, now.max(last));
        if available >= 0.0 {
            Duration::ZERO
        } else {
            Duration::from_secs_f64(-available / self.rate)
        }
    }

    /// Blocks until a token is available.
    pub fn acquire(&self) {
        let wait = self.reserve(Instant::now());
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}
