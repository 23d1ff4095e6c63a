use std::ops::Sub;
use std::sync::atomic::{AtomicU64, Ordering};

/// Monotone I/O counters shared by every reader and writer of a [`super::Dfs`].
#[derive(Debug, Default)]
pub struct IoLedger {
    bytes_read: AtomicU64,
    bytes_written: AtomicU64,
    files_opened: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LedgerSnapshot {
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub files_opened: u64,
}

impl Sub for LedgerSnapshot {
    type Output = LedgerSnapshot;

    fn sub(self, rhs: Self) -> Self::Output {
        LedgerSnapshot {
            bytes_read: self.bytes_read - rhs.bytes_read,
            bytes_written: self.bytes_written - rhs.bytes_written,
            files_opened: self.files_opened - rhs.files_opened,
        }
    }
}

impl IoLedger {
    pub(super) fn record_read(&self, n: u64) {
        self.bytes_read.fetch_add(n, Ordering::SeqCst);
    }

    pub(super) fn record_write(&self, n: u64) {
        self.bytes_written.fetch_add(n, Ordering::SeqCst);
    }

    pub(super) fn record_open(&self) {
        self.files_opened.fetch_add(1, Ordering::SeqCst);
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        LedgerSnapshot {
            bytes_read: self.bytes_read.load(Ordering::SeqCst),
            bytes_written: self.bytes_written.load(Ordering::SeqCst),
            files_opened: self.files_opened.load(Ordering::SeqCst),
        }
    }

    pub fn reset(&self) {
        self.bytes_read.store(0, Ordering::SeqCst);
        self.bytes_written.store(0, Ordering::SeqCst);
        self.files_opened.store(0, Ordering::SeqCst);
    }
}
