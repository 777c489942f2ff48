//! Waveform I/O, STFT analysis/synthesis, low-pass construction and the
//! log-spectral distance.

mod buffer;
mod filter;
mod grid;
mod lsd;
mod spectrum;
mod stft;
pub mod wav;

pub use buffer::AudioBuffer;
pub use filter::make_lowres;
pub use grid::Grid;
pub use lsd::{lsd, lsd_band, lsd_spectrogram, LSD_EPSILON};
pub use spectrum::{energy_fraction_above, highpass_brickwall, to_db};
pub use stft::{
    hann_periodic, istft, istft_with_len, stft, stft_polar, Spectrogram, StftParams, WindowKind,
};
pub use wav::{load_wav, save_wav, WavCodec};
