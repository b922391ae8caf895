//! Mixed-precision KV-cache quantization with channel-wise precision boost.
//!
//! Keys are quantized per channel over pages of `G` tokens at 2 bits, with the
//! highest-magnitude channels of each page promoted to 4 bits; values are
//! quantized per token at 2 bits. The first `S` tokens (sink) and, for values,
//! the most recent `R` tokens (local window) stay in full precision.

pub mod analysis;
pub mod attention;
pub mod cache;
pub mod config;
pub mod error;
pub mod page;
pub mod quant;
pub mod tensor;

pub use analysis::{
    boost_sweep, channel_sensitivity, memory_report, MemoryReport, SensitivityReport, SweepRow,
};
pub use attention::{max_relative_deviation, oracle_attend, AttentionOutput};
pub use cache::{HeadCache, KeyPage, KittyCache, ValuePage};
pub use config::KittyConfig;
pub use error::{Error, Result};
pub use page::{
    dequantize_key_page, dequantize_value_page, pack_key_page, pack_value_page, page_byte_size,
    PageBytes, PageKind, QuantizedKeyPage, QuantizedValuePage, SerializedPage,
};
pub use quant::{
    channel_scores, dequantize_values, fake_quantize_matrix, quantize_values, select_boost, Axis,
    BoostSelection, ChannelScores, Heuristic, QuantParams,
};
pub use tensor::{generate_synthetic, read_tensor, write_tensor, HeadMatrix, SyntheticSpec};
