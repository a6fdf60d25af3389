//! The physical probe: two four-wire chips giving four velocity channels,
//! and a back-chamber pressure channel.

mod channel;
mod geometry;
mod synth;

pub use channel::{
    BackChamber, ChannelResponse, PressureChannel, VelocityChannel, WireMode, EFFECTIVE_AREA,
};
pub(crate) use geometry::numerical_rank;
pub use geometry::{ChipAssembly, ProbeConfig, WireQuad, TOTAL_CHANNELS, VELOCITY_CHANNELS};
pub use synth::{sample_tone, synthesize_timeseries, TimeSeries};
