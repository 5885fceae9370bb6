//! Link-level physical-layer building blocks: carrier numerology, MCS and
//! transport-block sizing, QAM mapping, fading channels, and the resource
//! grid they act on.

pub mod channel;
pub mod grid;
pub mod mcs;
pub mod numerology;
pub mod qam;
pub mod tbs;

pub use channel::{
    add_awgn, load_channel_profile, parse_channel_profile, realize_channel, ChannelModel,
    ChannelProfile, ChannelRealizer, ChannelTap, ChannelTensor, DopplerModel,
};
pub use grid::{apply_channel, SlotGrid};
pub use mcs::{default_mcs_table, load_mcs_table, parse_mcs_table, McsEntry};
pub use numerology::NrNumerology;
pub use qam::{qam_demodulate_hard, qam_modulate};
pub use tbs::{compute_tbs, peak_rate_mbps, DEFAULT_OVERHEAD_RE_PER_PRB};
