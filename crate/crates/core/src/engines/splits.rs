//! Assignment of input files to map tasks.

use crate::metastore::PartitionKey;
use crate::storage::FileSplit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitPolicy {
    /// Pack small files together and cut large ones, aiming at the target
    /// split size per task.
    Combine,
    /// One task per file, however small or large.
    PerFile,
}

pub const DEFAULT_TARGET_SPLIT_BYTES: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputFile {
    pub path: String,
    pub size: u64,
    pub partition: Option<PartitionKey>,
}

/// The byte ranges read by one map task.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaskSplit {
    pub chunks: Vec<(FileSplit, Option<PartitionKey>)>,
}

impl TaskSplit {
    pub fn bytes(&self) -> u64 {
        self.chunks.iter().map(|(s, _)| s.length).sum()
    }
}

/// Hidden and bookkeeping files (leading `.` or `_`) are never task input.
pub fn is_data_file(path: &str) -> bool {
    let name = path.rsplit('/').next().unwrap_or(path);
    !(name.starts_with('.') || name.starts_with('_'))
}

/// Plans splits in file order. With `splittable` false, files are never cut,
/// only packed (used for intermediate row files). Empty files get no task.
pub fn plan_splits(files: &[InputFile], policy: SplitPolicy, target: u64, splittable: bool) -> Vec<TaskSplit> {
    let mut out = Vec::new();
    match policy {
        SplitPolicy::PerFile => {
            for f in files.iter().filter(|f| f.size > 0) {
                out.push(TaskSplit { chunks: vec![(FileSplit::whole(&f.path, f.size), f.partition.clone())] });
            }
        }
        SplitPolicy::Combine => {
            let target = target.max(1);
            let mut current = TaskSplit::default();
            for f in files.iter().filter(|f| f.size > 0) {
                let mut offset = 0;
                while offset < f.size {
                    let length = if splittable { target.min(f.size - offset) } else { f.size };
                    if !current.chunks.is_empty() && current.bytes() + length > target {
                        out.push(std::mem::take(&mut current));
                    }
                    let split = FileSplit { path: f.path.clone(), offset, length, file_size: f.size };
                    current.chunks.push((split, f.partition.clone()));
                    offset += length;
                }
            }
            if !current.chunks.is_empty() {
                out.push(current);
            }
        }
    }
    out
}
