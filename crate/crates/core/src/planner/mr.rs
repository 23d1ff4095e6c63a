//! Translation of a stage DAG into a linear chain of MapReduce jobs. Every
//! stage that consumes a shuffle becomes the reduce side of one job; its
//! map side reads either base tables or the previous job's output on the
//! distributed file system.

use super::{Stage, StageDag};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapInput {
    /// A source stage whose scan runs inside the map tasks.
    Source { stage: usize },
    /// The materialized output of an earlier job.
    Intermediate { job: usize, stage: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MrJob {
    pub id: usize,
    /// One entry per shuffle input of the reduce stage, in edge order.
    pub map_inputs: Vec<MapInput>,
    /// `None` for a map-only job.
    pub reduce_stage: Option<usize>,
    pub output_path: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MrJobChain {
    pub stages: Vec<Stage>,
    pub jobs: Vec<MrJob>,
}

impl MrJobChain {
    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }
}

pub fn to_mr_chain(dag: &StageDag, scratch: &str) -> MrJobChain {
    let stages = dag.stages();
    let mut jobs: Vec<MrJob> = Vec::new();
    // Job that materializes each stage's output, if any.
    let mut produced_by: Vec<Option<usize>> = vec![None; stages.len()];
    let stage_of_tail = |v: usize| stages.iter().position(|s| s.tail() == v).unwrap();
    for stage in stages.iter().filter(|s| !s.is_source()) {
        let id = jobs.len();
        let map_inputs = stage
            .shuffle_inputs
            .iter()
            .map(|&e| {
                let from = stage_of_tail(dag.edges[e].from);
                match produced_by[from] {
                    Some(job) => MapInput::Intermediate { job, stage: from },
                    None => MapInput::Source { stage: from },
                }
            })
            .collect();
        produced_by[stage.id] = Some(id);
        jobs.push(MrJob { id, map_inputs, reduce_stage: Some(stage.id), output_path: format!("{scratch}/job-{id}") });
    }
    if jobs.is_empty() {
        jobs.push(MrJob {
            id: 0,
            map_inputs: vec![MapInput::Source { stage: 0 }],
            reduce_stage: None,
            output_path: format!("{scratch}/job-0"),
        });
    }
    MrJobChain { stages, jobs }
}
