//! Feeder plus every derived structure the planner needs, built once.

use crate::error::Result;
use crate::plan::config::Params;
use crate::sync_structure::{BlackStartSets, ModeCatalogue};
use crate::topology::{
    build_backbone, partition_blocks, BackboneGraph, BlockId, BlockPartition, BusIdx, Feeder, LineClass, LineIdx,
    LoadClass,
};

/// Position of a switchable line within the ESW or SSW list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Switch {
    Esw(usize),
    Ssw(usize),
}

#[derive(Debug, Clone)]
pub struct Network {
    pub feeder: Feeder,
    pub partition: BlockPartition,
    pub backbone: BackboneGraph,
    pub bs: BlackStartSets,
    pub catalogue: ModeCatalogue,
    /// Every BS block ascending; the index space of sync matrices.
    pub bs_blocks: Vec<BlockId>,
    /// ESW lines in file order.
    pub esw: Vec<LineIdx>,
    /// SSW lines in file order.
    pub ssw: Vec<LineIdx>,
    pub switch_of_line: Vec<Option<Switch>>,
    /// Buses carrying at least one NL record, ascending.
    pub nl_buses: Vec<BusIdx>,
    /// Position in `nl_buses` for NL records, `None` for CL records.
    pub nl_of_load: Vec<Option<usize>>,
    /// Block of each BESS device.
    pub bess_block: Vec<BlockId>,
    pub bess_of_block: Vec<Option<usize>>,
    pub pv_block: Vec<BlockId>,
    pub load_block: Vec<BlockId>,
    /// Buses at either end of a switchable line.
    pub switch_terminal: Vec<bool>,
    pub params: Params,
}

impl Network {
    pub fn new(feeder: Feeder) -> Result<Self> {
        Self::with_params(feeder, Params::default())
    }

    pub fn with_params(feeder: Feeder, params: Params) -> Result<Self> {
        params.validate()?;
        let partition = partition_blocks(&feeder);
        let backbone = build_backbone(&partition, &feeder);
        let bs = BlackStartSets::from_feeder(&feeder, &partition);
        let catalogue = ModeCatalogue::build(&backbone, &bs);
        let bs_blocks = bs.all();
        let esw: Vec<LineIdx> = feeder.lines_of_class(LineClass::Esw).collect();
        let ssw: Vec<LineIdx> = feeder.lines_of_class(LineClass::Ssw).collect();
        let mut switch_of_line = vec![None; feeder.lines.len()];
        for (i, l) in esw.iter().enumerate() {
            switch_of_line[l.0] = Some(Switch::Esw(i));
        }
        for (i, l) in ssw.iter().enumerate() {
            switch_of_line[l.0] = Some(Switch::Ssw(i));
        }
        let nl_buses = feeder.load_buses(LoadClass::Nl);
        let nl_of_load = feeder
            .loads
            .iter()
            .map(|r| match r.class {
                LoadClass::Nl => nl_buses.binary_search(&r.bus).ok(),
                LoadClass::Cl => None,
            })
            .collect();
        let bess_block: Vec<BlockId> = feeder.bess.iter().map(|b| partition.block_of[b.bus.0]).collect();
        let mut bess_of_block = vec![None; partition.len()];
        for (i, &k) in bess_block.iter().enumerate() {
            bess_of_block[k] = Some(i);
        }
        let pv_block = feeder.pv.iter().map(|p| partition.block_of[p.bus.0]).collect();
        let load_block = feeder.loads.iter().map(|r| partition.block_of[r.bus.0]).collect();
        let mut switch_terminal = vec![false; feeder.buses.len()];
        for l in feeder.lines.iter().filter(|l| l.class.is_switchable()) {
            switch_terminal[l.from.0] = true;
            switch_terminal[l.to.0] = true;
        }
        Ok(Network {
            feeder,
            partition,
            backbone,
            bs,
            catalogue,
            bs_blocks,
            esw,
            ssw,
            switch_of_line,
            nl_buses,
            nl_of_load,
            bess_block,
            bess_of_block,
            pv_block,
            load_block,
            switch_terminal,
            params,
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.partition.len()
    }

    pub fn n_buses(&self) -> usize {
        self.feeder.buses.len()
    }

    pub fn n_lines(&self) -> usize {
        self.feeder.lines.len()
    }

    pub fn n_pairs(&self) -> usize {
        let n = self.bs_blocks.len();
        n * n.saturating_sub(1) / 2
    }

    /// Position of a BS block in `bs_blocks`.
    pub fn bs_pos(&self, k: BlockId) -> Option<usize> {
        self.bs_blocks.binary_search(&k).ok()
    }

    /// Blocks at the two ends of a switchable line.
    pub fn line_blocks(&self, l: LineIdx) -> (BlockId, BlockId) {
        let line = &self.feeder.lines[l.0];
        (self.partition.block_of[line.from.0], self.partition.block_of[line.to.0])
    }

    /// Closing allowance of the ESW pickup limit for a block that was
    /// energized in the previous step.
    pub fn esw_big_m(&self, k: BlockId) -> usize {
        self.partition.esw_lines[k].len().saturating_sub(2)
    }

    pub fn is_source_block(&self, k: BlockId) -> bool {
        self.bess_of_block[k].is_some() || self.bs.tg == Some(k)
    }
}
