//! Dataset file format, little-endian throughout:
//!
//! ```text
//! "TDNNAS-DS1"  u32 version  u32 features  u32 classes  u32 sequences
//! u32 length + UTF-8 JSON provenance
//! per sequence:
//!   u32 T
//!   T × features f32 frames, row-major
//!   T u32 labels
//!   ceil(T / 8) mask bytes, least significant bit first
//! ```

use std::path::Path;

use super::generate::{Dataset, Provenance};
use crate::error::Result;
use crate::io::bin::{read_file, write_file, ByteReader, ByteWriter};
use crate::numcore::Matrix;
use crate::tdnnf::Sequence;

pub const DATASET_MAGIC: &str = "TDNNAS-DS1";
pub const DATASET_VERSION: u32 = 1;

pub fn encode_dataset(d: &Dataset) -> Vec<u8> {
    let mut w = ByteWriter::new();
    w.bytes(DATASET_MAGIC.as_bytes());
    w.u32(DATASET_VERSION);
    w.u32(d.features as u32);
    w.u32(d.classes as u32);
    w.u32(d.sequences.len() as u32);
    w.str(&serde_json::to_string(&d.provenance).expect("provenance serializes"));
    for s in &d.sequences {
        w.u32(s.len() as u32);
        for &v in s.frames.data() {
            w.f32(v as f32);
        }
        for &y in &s.labels {
            w.u32(y);
        }
        for chunk in s.mask.chunks(8) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &m)| acc | (u8::from(m) << i));
            w.u8(byte);
        }
    }
    w.into_inner()
}

pub fn decode_dataset(bytes: &[u8], path: &Path) -> Result<Dataset> {
    let mut r = ByteReader::new(bytes, path);
    r.header(DATASET_MAGIC, DATASET_VERSION)?;
    let features = r.u32()? as usize;
    let classes = r.u32()? as usize;
    let n = r.u32()? as usize;
    let provenance: Provenance = serde_json::from_str(&r.str()?)
        .map_err(|e| r.error(format!("bad provenance: {e}")))?;
    let mut sequences = Vec::with_capacity(n);
    for _ in 0..n {
        let t = r.u32()? as usize;
        let data = (0..t * features)
            .map(|_| Ok(r.f32()? as f64))
            .collect::<Result<Vec<_>>>()?;
        let labels = (0..t).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        if let Some(&bad) = labels.iter().find(|&&y| y as usize >= classes) {
            return Err(r.error(format!("label {bad} with {classes} classes")));
        }
        let packed = r.take(t.div_ceil(8))?;
        let mask = (0..t).map(|i| packed[i / 8] >> (i % 8) & 1 == 1).collect();
        sequences.push(Sequence::new(Matrix::from_vec(t, features, data)?, labels, mask)?);
    }
    r.finish()?;
    Ok(Dataset {
        features,
        classes,
        provenance,
        sequences,
    })
}

pub fn save_dataset(d: &Dataset, path: &Path) -> Result<()> {
    write_file(path, &encode_dataset(d))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    decode_dataset(&read_file(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::tasks::generate::{gen_lagged_product, gen_planted_bottleneck, BottleneckTask};

    #[test]
    fn round_trip_is_exact() {
        let d = gen_lagged_product(3, 0, 2, 4, 13, 3).unwrap();
        let bytes = encode_dataset(&d);
        assert_eq!(decode_dataset(&bytes, Path::new("x")).unwrap(), d);
        let task = BottleneckTask { rank: 2, features: 3, classes: 3, teacher_hidden: 4 };
        let p = gen_planted_bottleneck(1, 0, &task, 2, 9).unwrap();
        assert_eq!(decode_dataset(&encode_dataset(&p), Path::new("x")).unwrap(), p);
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = encode_dataset(&gen_lagged_product(8, 0, 2, 5, 20, 4).unwrap());
        let b = encode_dataset(&gen_lagged_product(8, 0, 2, 5, 20, 4).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with(DATASET_MAGIC.as_bytes()));
    }

    #[test]
    fn wrong_magic_and_version_rejected() {
        let mut bytes = encode_dataset(&gen_lagged_product(8, 0, 1, 1, 5, 1).unwrap());
        bytes[DATASET_MAGIC.len()] = 9;
        assert!(matches!(
            decode_dataset(&bytes, Path::new("d")),
            Err(Error::BadVersion { found: 9, .. })
        ));
        bytes[0] = b'X';
        assert!(matches!(decode_dataset(&bytes, Path::new("d")), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn truncation_rejected() {
        let bytes = encode_dataset(&gen_lagged_product(8, 0, 1, 2, 5, 1).unwrap());
        let err = decode_dataset(&bytes[..bytes.len() - 1], Path::new("d")).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }
}
