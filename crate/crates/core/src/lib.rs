//! A desk-scale warehouse engine: schema-on-read tables over a simulated
//! distributed file system, partitioned and columnar storage, and two
//! execution engines (chained MapReduce jobs vs. a single pipelined DAG)
//! under an explicit cost model.

pub mod bench;
pub mod cli;
pub mod dfs;
pub mod engines;
pub mod error;
pub mod hql;
pub mod metastore;
pub mod planner;
pub mod session;
pub mod storage;
pub mod types;

pub use error::{Error, Result};
pub use types::{DataType, Datum, Row};
