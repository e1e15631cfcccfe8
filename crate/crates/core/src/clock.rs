//! Time sources. Every timestamp the tracker records goes through a [`Clock`]
//! so that runs can be replayed with a frozen or scripted timeline.

use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use chrono::{DateTime, SecondsFormat, Utc};

/// Milliseconds since the Unix epoch, UTC.
pub type EpochMillis = i64;

pub trait Clock: Send + Sync {
    fn now_ms(&self) -> EpochMillis;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> EpochMillis {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as i64)
            .unwrap_or(0)
    }
}

/// A clock that only moves when told to.
#[derive(Debug, Default)]
pub struct ManualClock {
    now: AtomicI64,
}

impl ManualClock {
    pub fn new(start_ms: EpochMillis) -> Self {
        Self {
            now: AtomicI64::new(start_ms),
        }
    }

    pub fn shared(start_ms: EpochMillis) -> Arc<Self> {
        Arc::new(Self::new(start_ms))
    }

    pub fn set(&self, ms: EpochMillis) {
        self.now.store(ms, Ordering::SeqCst);
    }

    pub fn advance(&self, ms: i64) {
        self.now.fetch_add(ms, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now_ms(&self) -> EpochMillis {
        self.now.load(Ordering::SeqCst)
    }
}

/// Render as `xsd:dateTime` with millisecond precision, e.g. `2024-05-01T12:00:00.000Z`.
pub fn format_datetime(ms: EpochMillis) -> String {
    match DateTime::<Utc>::from_timestamp_millis(ms) {
        Some(dt) => dt.to_rfc3339_opts(SecondsFormat::Millis, true),
        None => ms.to_string(),
    }
}

/// Parse an RFC 3339 timestamp into epoch milliseconds (sub-millisecond digits truncate).
pub fn parse_datetime(text: &str) -> Option<EpochMillis> {
    DateTime::parse_from_rfc3339(text)
        .ok()
        .map(|dt| dt.with_timezone(&Utc).timestamp_millis())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn datetime_round_trip() {
        let ms = 1_714_564_800_123;
        let text = format_datetime(ms);
        assert_eq!(text, "2024-05-01T12:00:00.123Z");
        assert_eq!(parse_datetime(&text), Some(ms));
        assert_eq!(parse_datetime("2024-05-01T14:00:00.123+02:00"), Some(ms));
    }

    #[test]
    fn manual_clock_moves_only_on_request() {
        let clock = ManualClock::new(10);
        assert_eq!(clock.now_ms(), 10);
        clock.advance(1500);
        assert_eq!(clock.now_ms(), 1510);
        clock.set(0);
        assert_eq!(clock.now_ms(), 0);
    }
}
