//! Binary model files.
//!
//! Layout (little endian):
//!
//! ```text
//! magic        8 bytes  "UDRLMODL"
//! version      u16
//! family tag   u8
//! n_classes    u32
//! input_dim    u32
//! n_names      u32, then per name: u32 byte length + UTF-8 bytes
//! payload_len  u64
//! payload      bincode-encoded model body
//! ```

use std::fs;
use std::io::{self, Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use udrl_core::models::{Family, ModelBody, TrainedModel};

use crate::error::{Result, ServiceError};
use crate::fsutil::write_atomic;

pub const MAGIC: &[u8; 8] = b"UDRLMODL";
pub const FORMAT_VERSION: u16 = 1;

pub fn family_tag(family: Family) -> u8 {
    match family {
        Family::RandomForest => 1,
        Family::ExtraTrees => 2,
        Family::AdaBoost => 3,
        Family::GradientBoosting => 4,
        Family::Knn => 5,
        Family::Mlp => 6,
    }
}

fn family_from_tag(tag: u8) -> Option<Family> {
    Family::ALL.into_iter().find(|f| family_tag(*f) == tag)
}

pub fn encode_model(model: &TrainedModel) -> Vec<u8> {
    let payload = bincode::serialize(&model.body).expect("model bodies are always serializable");
    let mut out = Vec::with_capacity(payload.len() + 64);
    out.extend_from_slice(MAGIC);
    // writes into a Vec cannot fail
    out.write_u16::<LE>(FORMAT_VERSION).unwrap();
    out.write_u8(family_tag(model.family)).unwrap();
    out.write_u32::<LE>(model.n_classes as u32).unwrap();
    out.write_u32::<LE>(model.input_dim as u32).unwrap();
    out.write_u32::<LE>(model.feature_names.len() as u32).unwrap();
    for name in &model.feature_names {
        out.write_u32::<LE>(name.len() as u32).unwrap();
        out.extend_from_slice(name.as_bytes());
    }
    out.write_u64::<LE>(payload.len() as u64).unwrap();
    out.extend_from_slice(&payload);
    out
}

pub fn decode_model(bytes: &[u8], path: &Path) -> Result<TrainedModel> {
    let truncated = |e: io::Error| match e.kind() {
        io::ErrorKind::UnexpectedEof => ServiceError::Truncated { path: path.into() },
        _ => ServiceError::io(path, e),
    };
    let corrupt = |message: String| ServiceError::Corrupt {
        path: path.into(),
        message,
    };
    if !bytes.starts_with(MAGIC) {
        return Err(if MAGIC.starts_with(bytes) {
            ServiceError::Truncated { path: path.into() }
        } else {
            ServiceError::BadMagic { path: path.into() }
        });
    }
    let mut r = Cursor::new(bytes);
    r.set_position(MAGIC.len() as u64);
    let version = r.read_u16::<LE>().map_err(truncated)?;
    if version != FORMAT_VERSION {
        return Err(ServiceError::UnsupportedVersion {
            path: path.into(),
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let tag = r.read_u8().map_err(truncated)?;
    let family = family_from_tag(tag).ok_or(ServiceError::UnknownFamily { path: path.into(), tag })?;
    let n_classes = r.read_u32::<LE>().map_err(truncated)? as usize;
    let input_dim = r.read_u32::<LE>().map_err(truncated)? as usize;
    let n_names = r.read_u32::<LE>().map_err(truncated)? as usize;
    let mut feature_names = Vec::with_capacity(n_names.min(1024));
    for _ in 0..n_names {
        let len = r.read_u32::<LE>().map_err(truncated)? as usize;
        let mut buf = vec![0u8; len.min(bytes.len())];
        if len > buf.len() {
            return Err(ServiceError::Truncated { path: path.into() });
        }
        r.read_exact(&mut buf).map_err(truncated)?;
        feature_names.push(String::from_utf8(buf).map_err(|e| corrupt(e.to_string()))?);
    }
    let payload_len = r.read_u64::<LE>().map_err(truncated)?;
    let rest = &bytes[r.position() as usize..];
    if (rest.len() as u64) < payload_len {
        return Err(ServiceError::Truncated { path: path.into() });
    }
    if rest.len() as u64 > payload_len {
        return Err(corrupt(format!("{} trailing bytes", rest.len() as u64 - payload_len)));
    }
    let body: ModelBody = bincode::deserialize(rest).map_err(|e| corrupt(e.to_string()))?;
    Ok(TrainedModel {
        family,
        n_classes,
        input_dim,
        feature_names,
        body,
    })
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    write_atomic(path, &encode_model(model))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let bytes = fs::read(path).map_err(|e| ServiceError::io(path, e))?;
    decode_model(&bytes, path)
}
