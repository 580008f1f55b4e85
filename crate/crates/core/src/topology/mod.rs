//! Feeder ingestion, bus-block partition and the backbone graph.

pub mod backbone;
pub mod feeder;
pub mod partition;

pub use backbone::{build_backbone, enumerate_simple_paths, BackboneEdge, BackboneGraph, Path};
pub use feeder::{
    load_feeder, Base, BessDevice, Bus, BusIdx, Feeder, Line, LineClass, LineIdx, LoadClass, LoadRecord, Matrix3,
    PhaseSet, PhaseVec, Profiles, PvDevice, Season, TgDevice,
};
pub use partition::{partition_blocks, BlockId, BlockPartition};
