//! Frame transport: the wire packet format, `.taf` recordings and replay,
//! the per-sensor processing pipeline and the TCP ingestion service.

mod pipeline;
mod protocol;
mod recording;
mod server;

pub use pipeline::{
    presence_series, run_pipeline, FrameOutcome, PipelineConfig, PipelineError, PoseProvider, ReplayPoseProvider,
    SensorPipeline,
};
pub use protocol::{
    decode_frame, encode_frame, packet_len, read_framed, write_framed, DecodeError, EncodeError, FramePacket, CRC_LEN,
    HEADER_LEN, MAGIC, MAX_FRAMED_LEN, VERSION,
};
pub use recording::{
    frame_to_mhi, mhi_to_frame, record_frames, record_mhi, record_stream, replay, replay_into, ContentType, Recording,
    RecordingError, RecordingHeader, RecordingWriter, ReplayReport, MHI_SCALE, RECORDING_HEADER_LEN, RECORDING_MAGIC,
    RECORDING_VERSION,
};
pub use server::{serve, PipelineStats, ProviderFactory, SensorEvent, ServeReport, ServerHandle, ServerStats};
