//! Community detection and construction of per-client datasets.

mod clients;
mod louvain;

pub use clients::{make_clients, split_labeled, ClientDataset, SplitRatios};
pub use louvain::{
    louvain, louvain_traced, modularity, CommunityAssignment, LouvainOutcome, MIN_PASS_GAIN,
};
