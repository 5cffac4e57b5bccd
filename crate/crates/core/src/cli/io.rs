//! Bit files and their `.meta` sidecars.
//!
//! Packed files store bits LSB-first within each byte with the last byte zero
//! padded. The sidecar is `key = value` text holding at least the true bit
//! count and the storage format.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bitcore::BitString;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitFormat {
    #[default]
    Packed,
    /// One `'0'`/`'1'` character per bit.
    Ascii,
}

impl fmt::Display for BitFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BitFormat::Packed => "packed",
            BitFormat::Ascii => "ascii",
        })
    }
}

impl FromStr for BitFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "packed" => Ok(BitFormat::Packed),
            "ascii" => Ok(BitFormat::Ascii),
            _ => Err(Error::param(format!("format must be packed or ascii, got {s:?}"))),
        }
    }
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Ordered `key = value` metadata.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Meta(pub BTreeMap<String, String>);

impl Meta {
    pub fn insert(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn to_text(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut m = Meta::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::format(path, format!("bad metadata line {line:?}")))?;
            m.insert(k.trim(), v.trim());
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Option<Self>> {
        let mp = meta_path(path);
        match std::fs::read_to_string(&mp) {
            Ok(text) => Meta::parse(&text, &mp).map(Some),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(mp, e)),
        }
    }
}

/// Writes `bits` and a sidecar holding `bits`, `format` and `extra`.
pub fn write_bits(path: &Path, bits: &BitString, format: BitFormat, extra: &Meta) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let data = match format {
        BitFormat::Packed => bits.to_bytes(),
        BitFormat::Ascii => {
            let mut s = bits.to_ascii().into_bytes();
            s.push(b'\n');
            s
        }
    };
    std::fs::write(path, data).map_err(|e| Error::io(path, e))?;
    let mut meta = extra.clone();
    meta.insert("bits", bits.len());
    meta.insert("format", format);
    let mp = meta_path(path);
    std::fs::write(&mp, meta.to_text()).map_err(|e| Error::io(mp, e))
}

/// Reads a bit file, checking it against its sidecar when one exists.
///
/// Without a sidecar, a packed file is taken to hold `8 * bytes` bits and
/// a file ending in `.txt` is read as ASCII.
pub fn read_bits(path: &Path) -> Result<(BitString, Meta)> {
    let meta = Meta::read(path)?;
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = match meta.as_ref().and_then(|m| m.get("format")) {
        Some(f) => f.parse().map_err(|_| Error::format(path, format!("unknown format {f:?}")))?,
        None if path.extension().is_some_and(|e| e == "txt") => BitFormat::Ascii,
        None => BitFormat::Packed,
    };
    let declared = match meta.as_ref().and_then(|m| m.get("bits")) {
        Some(b) => Some(
            b.parse::<usize>()
                .map_err(|_| Error::format(path, format!("bad bit count {b:?}")))?,
        ),
        None => None,
    };
    let bits = match format {
        BitFormat::Packed => {
            let len = declared.unwrap_or(data.len() * 8);
            if data.len() != len.div_ceil(8) {
                return Err(Error::format(
                    path,
                    format!("{} bytes on disk but metadata declares {len} bits", data.len()),
                ));
            }
            if len % 8 != 0 && data[data.len() - 1] >> (len % 8) != 0 {
                return Err(Error::format(path, "padding bits in the last byte are not zero"));
            }
            BitString::from_bytes(&data, len)?
        }
        BitFormat::Ascii => {
            let text = std::str::from_utf8(&data).map_err(|_| Error::format(path, "not ASCII"))?;
            let bits: BitString = text
                .parse()
                .map_err(|_| Error::format(path, "ASCII bit files may only contain 0, 1 and whitespace"))?;
            if let Some(len) = declared.filter(|&l| l != bits.len()) {
                return Err(Error::format(
                    path,
                    format!("{} bits on disk but metadata declares {len}", bits.len()),
                ));
            }
            bits
        }
    };
    Ok((bits, meta.unwrap_or_default()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packed_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        let bits: BitString = "1011001110".parse().unwrap();
        let mut extra = Meta::default();
        extra.insert("config_digest", "abc");
        write_bits(&path, &bits, BitFormat::Packed, &extra).unwrap();
        assert_eq!(std::fs::read(&path).unwrap().len(), 2);
        let (back, meta) = read_bits(&path).unwrap();
        assert_eq!(back, bits);
        assert_eq!(meta.get("config_digest"), Some("abc"));
        assert_eq!(meta.get("bits"), Some("10"));
    }

    #[test]
    fn ascii_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        let bits: BitString = "0001110".parse().unwrap();
        write_bits(&path, &bits, BitFormat::Ascii, &Meta::default()).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "0001110\n");
        assert_eq!(read_bits(&path).unwrap().0, bits);
    }

    #[test]
    fn truncation_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        write_bits(&path, &BitString::ones(100), BitFormat::Packed, &Meta::default()).unwrap();
        let data = std::fs::read(&path).unwrap();
        std::fs::write(&path, &data[..10]).unwrap();
        assert!(matches!(read_bits(&path), Err(Error::Format { .. })));
    }

    #[test]
    fn nonzero_padding_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        write_bits(&path, &BitString::ones(4), BitFormat::Packed, &Meta::default()).unwrap();
        std::fs::write(&path, [0xff]).unwrap();
        assert!(read_bits(&path).is_err());
    }

    #[test]
    fn missing_sidecar_reads_whole_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("raw.bin");
        std::fs::write(&path, [0x01, 0x80]).unwrap();
        let (bits, _) = read_bits(&path).unwrap();
        assert_eq!(bits.len(), 16);
        assert_eq!(bits.to_ascii(), "1000000000000001");
    }
}
