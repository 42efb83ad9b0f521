use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::RequestOutcome;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Starts at 1 and increases by one per outcome.
    pub seq: u64,
    pub outcome: RequestOutcome,
}

/// Outcome stream with blocking long-poll reads.
#[derive(Debug, Default)]
pub struct EventFeed {
    outcomes: Mutex<Vec<RequestOutcome>>,
    ready: Condvar,
}

impl EventFeed {
    pub fn new() -> Self {
        EventFeed::default()
    }

    pub fn publish(&self, outcome: RequestOutcome) -> u64 {
        let mut v = self.outcomes.lock().unwrap_or_else(|e| e.into_inner());
        v.push(outcome);
        self.ready.notify_all();
        v.len() as u64
    }

    pub fn last_seq(&self) -> u64 {
        self.outcomes.lock().unwrap_or_else(|e| e.into_inner()).len() as u64
    }

    /// Events with `seq > since`, waiting up to `timeout` for the first one.
    pub fn since(&self, since: u64, timeout: Duration) -> Vec<Event> {
        let deadline = Instant::now() + timeout;
        let mut v = self.outcomes.lock().unwrap_or_else(|e| e.into_inner());
        while v.len() as u64 <= since {
            let now = Instant::now();
            if now >= deadline {
                return Vec::new();
            }
            v = self
                .ready
                .wait_timeout(v, deadline - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
        v.iter()
            .enumerate()
            .skip(since as usize)
            .map(|(i, o)| Event {
                seq: i as u64 + 1,
                outcome: o.clone(),
            })
            .collect()
    }
}
