//! RIFF/WAVE reading and writing.
//!
//! Reads 16-bit PCM and 32-bit IEEE float (plain or `WAVE_FORMAT_EXTENSIBLE`),
//! any channel count, and downmixes to mono by averaging channels. Writes
//! mono files in either encoding.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AudioBuffer;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum WavCodec {
    Pcm16,
    Float32,
}

struct Format {
    tag: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<Format> {
    if body.len() < 16 {
        return Err(Error::Format("fmt chunk shorter than 16 bytes".into()));
    }
    let mut tag = u16_at(body, 0);
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let bits = u16_at(body, 14);
    if tag == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) then the sub-format GUID,
        // whose first two bytes are the plain format tag.
        if body.len() < 26 {
            return Err(Error::Format("extensible fmt chunk too short".into()));
        }
        tag = u16_at(body, 24);
    }
    if channels == 0 {
        return Err(Error::Format("zero channels".into()));
    }
    if sample_rate == 0 {
        return Err(Error::Format("zero sample rate".into()));
    }
    Ok(Format {
        tag,
        channels,
        sample_rate,
        bits,
    })
}

/// Decodes WAV bytes into a mono buffer.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Format("missing RIFF/WAVE header".into()));
    }
    let mut pos = 12;
    let mut format = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let start = pos + 8;
        let end = start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::Format(format!("chunk {:?} runs past end of file", String::from_utf8_lossy(id))))?;
        match id {
            b"fmt " => format = Some(parse_fmt(&bytes[start..end])?),
            b"data" => data = Some(&bytes[start..end]),
            _ => {}
        }
        pos = end + (size & 1);
    }
    let format = format.ok_or_else(|| Error::Format("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::Format("no data chunk".into()))?;

    let channels = format.channels as usize;
    let frame_samples: Vec<f32> = match (format.tag, format.bits) {
        (FORMAT_PCM, 16) => data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f32 / 32768.0)
            .collect(),
        (FORMAT_IEEE_FLOAT, 32) => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect(),
        (tag, bits) => {
            return Err(Error::Unsupported(format!(
                "format tag {tag:#06x} with {bits} bits per sample"
            )))
        }
    };
    if !frame_samples.len().is_multiple_of(channels) {
        return Err(Error::Format("data length is not a whole number of frames".into()));
    }
    let samples = if channels == 1 {
        frame_samples
    } else {
        frame_samples
            .chunks_exact(channels)
            .map(|frame| {
                let sum: f64 = frame.iter().map(|&s| s as f64).sum();
                (sum / channels as f64) as f32
            })
            .collect()
    };
    AudioBuffer::new(samples, format.sample_rate)
}

/// Encodes a mono buffer as WAV bytes.
pub fn encode_wav(buffer: &AudioBuffer, codec: WavCodec) -> Vec<u8> {
    let n = buffer.len();
    let (tag, bits, fmt_len) = match codec {
        WavCodec::Pcm16 => (FORMAT_PCM, 16u16, 16u32),
        WavCodec::Float32 => (FORMAT_IEEE_FLOAT, 32u16, 18u32),
    };
    let block_align = bits / 8;
    let data_len = (n * block_align as usize) as u32;
    // Non-PCM formats carry a fact chunk with the frame count.
    let fact_len = if codec == WavCodec::Float32 { 12 } else { 0 };
    let riff_len = 4 + (8 + fmt_len) + fact_len + (8 + data_len);

    let mut out = Vec::with_capacity(riff_len as usize + 8);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&riff_len.to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&fmt_len.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&buffer.sample_rate_hz().to_le_bytes());
    out.extend_from_slice(&(buffer.sample_rate_hz() * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    if fmt_len == 18 {
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    if fact_len > 0 {
        out.extend_from_slice(b"fact");
        out.extend_from_slice(&4u32.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    match codec {
        WavCodec::Pcm16 => {
            for &s in buffer.samples() {
                out.extend_from_slice(&quantize_pcm16(s).to_le_bytes());
            }
        }
        WavCodec::Float32 => {
            for &s in buffer.samples() {
                out.extend_from_slice(&s.to_le_bytes());
            }
        }
    }
    out
}

/// Clamps to [-1, 1) and rounds to the nearest 16-bit step.
fn quantize_pcm16(s: f32) -> i16 {
    let q = (s as f64 * 32768.0).round();
    q.clamp(-32768.0, 32767.0) as i16
}

pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes)
}

pub fn save_wav(buffer: &AudioBuffer, path: impl AsRef<Path>, codec: WavCodec) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_wav(buffer, codec)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw_wav(tag: u16, channels: u16, rate: u32, bits: u16, data: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(4 + 24 + 8 + data.len() as u32).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&tag.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&rate.to_le_bytes());
        let align = channels * bits / 8;
        out.extend_from_slice(&(rate * align as u32).to_le_bytes());
        out.extend_from_slice(&align.to_le_bytes());
        out.extend_from_slice(&bits.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(data);
        out
    }

    #[test]
    fn pcm16_scaling() {
        let data: Vec<u8> = [0i16, 16384, -32768]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        let buf = decode_wav(&raw_wav(1, 1, 16000, 16, &data)).unwrap();
        assert_eq!(buf.samples(), &[0.0, 0.5, -1.0]);
        assert_eq!(buf.sample_rate_hz(), 16000);
    }

    #[test]
    fn stereo_float_averages_channels() {
        let data: Vec<u8> = [1.0f32, 0.0, 1.0, 0.0]
            .iter()
            .flat_map(|v| v.to_le_bytes())
            .collect();
        let buf = decode_wav(&raw_wav(3, 2, 44100, 32, &data)).unwrap();
        assert_eq!(buf.samples(), &[0.5, 0.5]);
    }

    #[test]
    fn truncated_header_is_format_error() {
        let full = raw_wav(1, 1, 16000, 16, &[0, 0]);
        assert!(matches!(decode_wav(&full[..10]), Err(Error::Format(_))));
        assert!(matches!(decode_wav(&full[..30]), Err(Error::Format(_))));
    }

    #[test]
    fn unsupported_codec() {
        let wav = raw_wav(1, 1, 16000, 24, &[0, 0, 0]);
        assert!(matches!(decode_wav(&wav), Err(Error::Unsupported(_))));
        let wav = raw_wav(6, 1, 8000, 8, &[0]);
        assert!(matches!(decode_wav(&wav), Err(Error::Unsupported(_))));
    }

    #[test]
    fn skips_unknown_chunks_and_reads_extensible() {
        let mut wav = Vec::new();
        wav.extend_from_slice(b"RIFF");
        wav.extend_from_slice(&0u32.to_le_bytes());
        wav.extend_from_slice(b"WAVE");
        wav.extend_from_slice(b"LIST");
        wav.extend_from_slice(&3u32.to_le_bytes());
        wav.extend_from_slice(&[1, 2, 3, 0]);
        wav.extend_from_slice(b"fmt ");
        wav.extend_from_slice(&40u32.to_le_bytes());
        wav.extend_from_slice(&FORMAT_EXTENSIBLE.to_le_bytes());
        wav.extend_from_slice(&1u16.to_le_bytes());
        wav.extend_from_slice(&8000u32.to_le_bytes());
        wav.extend_from_slice(&32000u32.to_le_bytes());
        wav.extend_from_slice(&4u16.to_le_bytes());
        wav.extend_from_slice(&32u16.to_le_bytes());
        wav.extend_from_slice(&22u16.to_le_bytes());
        wav.extend_from_slice(&32u16.to_le_bytes());
        wav.extend_from_slice(&4u32.to_le_bytes());
        wav.extend_from_slice(&FORMAT_IEEE_FLOAT.to_le_bytes());
        wav.extend_from_slice(&[0; 14]);
        wav.extend_from_slice(b"data");
        wav.extend_from_slice(&4u32.to_le_bytes());
        wav.extend_from_slice(&0.75f32.to_le_bytes());
        let buf = decode_wav(&wav).unwrap();
        assert_eq!(buf.samples(), &[0.75]);
    }

    #[test]
    fn float32_round_trip_is_exact() {
        let buf = AudioBuffer::new(vec![0.25, -0.125], 24000).unwrap();
        let back = decode_wav(&encode_wav(&buf, WavCodec::Float32)).unwrap();
        assert_eq!(back, buf);
    }

    #[test]
    fn pcm16_clamps_and_bounds_error() {
        let buf = AudioBuffer::new(vec![2.0, -3.0, 0.5, 0.1234], 24000).unwrap();
        let back = decode_wav(&encode_wav(&buf, WavCodec::Pcm16)).unwrap();
        assert_eq!(back.samples()[0], 32767.0 / 32768.0);
        assert_eq!(back.samples()[1], -1.0);
        for (a, b) in back.samples()[2..].iter().zip(&buf.samples()[2..]) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
    }

    #[test]
    fn riff_length_matches_file() {
        let buf = AudioBuffer::new(vec![0.5; 3], 8000).unwrap();
        for codec in [WavCodec::Pcm16, WavCodec::Float32] {
            let bytes = encode_wav(&buf, codec);
            assert_eq!(u32_at(&bytes, 4) as usize, bytes.len() - 8);
            assert_eq!(decode_wav(&bytes).unwrap().len(), 3);
        }
    }

    #[test]
    fn save_to_missing_dir_is_io_error() {
        let buf = AudioBuffer::new(vec![0.0], 8000).unwrap();
        let err = save_wav(&buf, "/nonexistent-dir/x/y.wav", WavCodec::Pcm16).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
