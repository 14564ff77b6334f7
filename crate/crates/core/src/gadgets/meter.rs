//! Gate accounting for circuit construction.
//!
//! Two quantities are tracked for every gadget class:
//!
//! * relations: core arithmetic relations, counted per primitive (`add`, `sub`,
//!   `mul` = 1, `mul_add` = 2, a boolean check = 2, a `t`-bit decomposition =
//!   `4t - 2`, one Poseidon permutation = 1);
//! * rows: gate rows of the backend circuit opened while the gadget was active.
//!
//! Both are exclusive: a nested gadget's cost is charged to the nested class
//! only, so the class totals plus plumbing equal the circuit totals.

use std::collections::BTreeMap;
use std::fmt;

/// Query step or subcircuit a row belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stage {
    CentroidDistances,
    ProbeSelect,
    AdcTables,
    CandidateDistances,
    TopK,
    Binding,
    Challenge,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::CentroidDistances,
        Stage::ProbeSelect,
        Stage::AdcTables,
        Stage::CandidateDistances,
        Stage::TopK,
        Stage::Binding,
        Stage::Challenge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::CentroidDistances => "step1_centroid_distances",
            Stage::ProbeSelect => "step2_probe_select",
            Stage::AdcTables => "step3_adc_tables",
            Stage::CandidateDistances => "step4_candidate_distances",
            Stage::TopK => "step5_topk",
            Stage::Binding => "binding",
            Stage::Challenge => "challenge",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Totals of one gadget class or stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub instances: usize,
    pub relations: u64,
    pub rows: usize,
}

#[derive(Debug)]
struct Frame {
    name: &'static str,
    start_rows: usize,
    child_rows: usize,
}

#[derive(Debug, Default)]
pub struct GateMeter {
    classes: BTreeMap<&'static str, Tally>,
    stages: BTreeMap<Stage, Tally>,
    frames: Vec<Frame>,
    stage: Option<(Stage, usize, u64)>,
    plumbing_relations: u64,
    relations: u64,
}

impl GateMeter {
    pub(crate) fn enter(&mut self, name: &'static str, rows: usize) {
        self.frames.push(Frame { name, start_rows: rows, child_rows: 0 });
        self.classes.entry(name).or_default().instances += 1;
    }

    pub(crate) fn exit(&mut self, rows: usize) {
        let frame = self.frames.pop().expect("unbalanced gadget scope");
        let spent = rows - frame.start_rows;
        self.classes.get_mut(frame.name).expect("entered class").rows += spent - frame.child_rows;
        if let Some(parent) = self.frames.last_mut() {
            parent.child_rows += spent;
        }
    }

    pub(crate) fn begin_stage(&mut self, stage: Stage, rows: usize) {
        assert!(self.stage.is_none(), "stages do not nest");
        self.stage = Some((stage, rows, self.relations));
    }

    pub(crate) fn end_stage(&mut self, rows: usize) {
        let (stage, start, rel) = self.stage.take().expect("no open stage");
        let t = self.stages.entry(stage).or_default();
        t.instances += 1;
        t.rows += rows - start;
        t.relations += self.relations - rel;
    }

    pub(crate) fn charge(&mut self, relations: u64) {
        self.relations += relations;
        match self.frames.last() {
            Some(frame) => self.classes.get_mut(frame.name).expect("entered class").relations += relations,
            None => self.plumbing_relations += relations,
        }
    }

    pub fn class(&self, name: &str) -> Tally {
        self.classes.get(name).copied().unwrap_or_default()
    }

    pub fn classes(&self) -> impl Iterator<Item = (&'static str, Tally)> + '_ {
        self.classes.iter().map(|(&n, &t)| (n, t))
    }

    pub fn stage(&self, stage: Stage) -> Tally {
        self.stages.get(&stage).copied().unwrap_or_default()
    }

    pub fn total_relations(&self) -> u64 {
        self.relations
    }

    pub fn plumbing_relations(&self) -> u64 {
        self.plumbing_relations
    }

    /// One record per gadget class, then per stage, then totals.
    pub fn report(&self, total_rows: usize) -> String {
        let mut out = String::new();
        let mut class_rows = 0;
        for (name, t) in &self.classes {
            class_rows += t.rows;
            out += &format!("gadget name={name} instances={} relations={} rows={}\n", t.instances, t.relations, t.rows);
        }
        out += &format!(
            "gadget name=plumbing instances=1 relations={} rows={}\n",
            self.plumbing_relations,
            total_rows - class_rows
        );
        let mut stage_rows = 0;
        for stage in Stage::ALL {
            let t = self.stage(stage);
            stage_rows += t.rows;
            out += &format!("stage name={stage} relations={} rows={}\n", t.relations, t.rows);
        }
        out += &format!("stage name=plumbing rows={}\n", total_rows - stage_rows);
        out += &format!("total relations={} rows={total_rows}\n", self.relations);
        out
    }
}
