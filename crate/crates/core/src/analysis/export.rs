use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::UncertaintyMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MapFormat {
    Pgm,
    Csv,
}

/// Binary P5 greymap: one column per frame, one row per bin, Nyquist on top.
pub fn render_pgm(map: &UncertaintyMap) -> Vec<u8> {
    let (frames, bins) = map.values.shape();
    let mut out = format!("P5\n{frames} {bins}\n255\n").into_bytes();
    out.reserve(frames * bins);
    for f in (0..bins).rev() {
        for t in 0..frames {
            out.push((255.0 * map.values.get(t, f)).round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}

/// One `t,f,u` row per bin after a metadata comment line.
pub fn render_csv(map: &UncertaintyMap) -> String {
    let (frames, bins) = map.values.shape();
    let mut out = format!(
        "# clip_percentile={},epsilon={:e},n={}\nt,f,u\n",
        map.clip_percentile, map.epsilon, map.candidates
    );
    for t in 0..frames {
        for f in 0..bins {
            writeln!(out, "{t},{f},{:.6}", map.values.get(t, f)).expect("write to string");
        }
    }
    out
}

pub fn export_map(map: &UncertaintyMap, path: impl AsRef<Path>, format: MapFormat) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        MapFormat::Pgm => render_pgm(map),
        MapFormat::Csv => render_csv(map).into_bytes(),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::Grid;

    fn map(values: Grid) -> UncertaintyMap {
        UncertaintyMap {
            values,
            epsilon: 1e-12,
            clip_percentile: 90.0,
            candidates: 3,
        }
    }

    #[test]
    fn pgm_payloads() {
        let zero = render_pgm(&map(Grid::zeros(2, 2)));
        assert_eq!(zero, b"P5\n2 2\n255\n\0\0\0\0");
        let one = render_pgm(&map(Grid::from_vec(2, 2, vec![1.0; 4]).unwrap()));
        assert_eq!(&one[one.len() - 4..], &[255u8; 4]);
    }

    #[test]
    fn pgm_orientation() {
        // 3 frames x 2 bins; only bin 1 (the top row) of frame 2 is lit.
        let mut g = Grid::zeros(3, 2);
        g.set(2, 1, 0.5);
        let bytes = render_pgm(&map(g));
        let payload = &bytes[b"P5\n3 2\n255\n".len()..];
        assert_eq!(payload, &[0, 0, 128, 0, 0, 0]);
    }

    #[test]
    fn csv_round_trip() {
        let values: Vec<f64> = (0..6).map(|i| i as f64 / 7.0).collect();
        let m = map(Grid::from_vec(2, 3, values.clone()).unwrap());
        let text = render_csv(&m);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# clip_percentile=90,epsilon=1e-12,n=3"));
        assert_eq!(lines.next(), Some("t,f,u"));
        for (i, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split(',').collect();
            assert_eq!(parts[0].parse::<usize>().unwrap(), i / 3);
            assert_eq!(parts[1].parse::<usize>().unwrap(), i % 3);
            assert!((parts[2].parse::<f64>().unwrap() - values[i]).abs() <= 5e-7);
        }
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = export_map(&map(Grid::zeros(1, 1)), dir.path().join("no/such/dir.pgm"), MapFormat::Pgm);
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}
