//! Little-endian binary layouts for datasets and checkpoints.
//!
//! Both files end in a CRC-32 of every preceding byte. Loading checks, in
//! order: magic, version, declared length against the file size, then CRC.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mlp::{Layer, MlpArchitecture, MlpParams};
use crate::orbit::{OrbitalElements, SensorImage};
use crate::trainer::{AdamState, LabeledSample, ObservedSample};

pub const DATASET_MAGIC: [u8; 4] = *b"SPND";
pub const CHECKPOINT_MAGIC: [u8; 4] = *b"SPNC";
pub const FORMAT_VERSION: u32 = 1;
/// Fixed dataset header size; the CRC adds four more bytes.
pub const DATASET_HEADER_LEN: usize = 40;
const PARAM_DIM: u32 = 3;

/// Labeled and observed pools sharing one image size.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub width: usize,
    pub height: usize,
    pub labeled: Vec<LabeledSample>,
    pub observed: Vec<ObservedSample>,
}

impl Dataset {
    pub fn empty(width: usize, height: usize) -> Self {
        Dataset {
            width,
            height,
            labeled: Vec::new(),
            observed: Vec::new(),
        }
    }

    /// Copy with every image rounded to 32-bit precision, i.e. what a
    /// save/load cycle returns.
    pub fn quantized(&self) -> Dataset {
        let q = |y: &SensorImage| {
            let px = y.pixels().iter().map(|&p| p as f32 as f64).collect();
            SensorImage::from_pixels(y.width(), y.height(), px).expect("rounding keeps pixels valid")
        };
        Dataset {
            width: self.width,
            height: self.height,
            labeled: self
                .labeled
                .iter()
                .map(|s| LabeledSample { x: s.x, y: q(&s.y) })
                .collect(),
            observed: self
                .observed
                .iter()
                .map(|s| ObservedSample {
                    y: q(&s.y),
                    x_hidden: s.x_hidden,
                })
                .collect(),
        }
    }
}

/// Network parameters plus, optionally, the optimizer state that produced
/// them.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: MlpParams,
    pub adam: Option<AdamState>,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, v: &[f64]) {
        for x in v {
            self.0.extend_from_slice(&x.to_le_bytes());
        }
    }
    fn f32s(&mut self, v: &[f64]) {
        for &x in v {
            self.0.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    fn finish(mut self, path: &Path) -> Result<()> {
        let crc = crc32fast::hash(&self.0);
        self.u32(crc);
        fs::write(path, &self.0).map_err(|e| Error::io(path, e))
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Truncated {
                path: self.path.into(),
                detail: format!("need {n} bytes at offset {}, file has {}", self.pos, self.buf.len()),
            }),
        }
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        Ok(self
            .take(n.checked_mul(8).ok_or_else(|| self.malformed("array too large"))?)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
    fn f32s(&mut self, n: usize) -> Result<Vec<f64>> {
        Ok(self
            .take(n.checked_mul(4).ok_or_else(|| self.malformed("array too large"))?)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }
    fn malformed(&self, detail: impl Into<String>) -> Error {
        Error::Malformed {
            path: self.path.into(),
            detail: detail.into(),
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn check_preamble(buf: &[u8], path: &Path, magic: [u8; 4]) -> Result<()> {
    let mut r = Reader { buf, pos: 0, path };
    let found: [u8; 4] = r.take(4)?.try_into().unwrap();
    if found != magic {
        return Err(Error::BadMagic {
            path: path.into(),
            expected: magic,
            found,
        });
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            path: path.into(),
            expected: FORMAT_VERSION,
            found: version,
        });
    }
    Ok(())
}

fn check_length_and_crc(buf: &[u8], path: &Path, declared: usize) -> Result<()> {
    if buf.len() < declared {
        return Err(Error::Truncated {
            path: path.into(),
            detail: format!("expected {declared} bytes, found {}", buf.len()),
        });
    }
    if buf.len() > declared {
        return Err(Error::Malformed {
            path: path.into(),
            detail: format!("{} trailing bytes", buf.len() - declared),
        });
    }
    let (body, tail) = buf.split_at(declared - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Crc {
            path: path.into(),
            stored,
            computed,
        });
    }
    Ok(())
}

fn to_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Contract(format!("{what} {v} exceeds 32 bits")))
}

pub fn save_dataset(path: impl AsRef<Path>, d: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let p = d.width * d.height;
    let sizes_ok = d.labeled.iter().map(|s| &s.y).chain(d.observed.iter().map(|s| &s.y)).all(|y| {
        y.width() == d.width && y.height() == d.height
    });
    if !sizes_ok {
        return Err(Error::dim("save_dataset", "image size differs from dataset header"));
    }
    let mut w = Writer(Vec::with_capacity(
        DATASET_HEADER_LEN + (d.labeled.len() + d.observed.len()) * (24 + 4 * p) + 4,
    ));
    w.0.extend_from_slice(&DATASET_MAGIC);
    w.u32(FORMAT_VERSION);
    w.u64(d.labeled.len() as u64);
    w.u64(d.observed.len() as u64);
    w.u32(to_u32(d.width, "width")?);
    w.u32(to_u32(d.height, "height")?);
    w.u32(PARAM_DIM);
    w.u32(0);
    for s in &d.labeled {
        w.f64s(&s.x.as_array());
    }
    for s in &d.labeled {
        w.f32s(s.y.pixels());
    }
    for s in &d.observed {
        w.f64s(&s.x_hidden.as_array());
    }
    for s in &d.observed {
        w.f32s(s.y.pixels());
    }
    w.finish(path)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let buf = read_file(path)?;
    check_preamble(&buf, path, DATASET_MAGIC)?;
    let mut r = Reader {
        buf: &buf,
        pos: 8,
        path,
    };
    let n_l = r.u64()?;
    let n_o = r.u64()?;
    let width = r.u32()? as usize;
    let height = r.u32()? as usize;
    let param_dim = r.u32()?;
    let flags = r.u32()?;
    if param_dim != PARAM_DIM {
        return Err(r.malformed(format!("param_dim {param_dim}, expected {PARAM_DIM}")));
    }
    if flags != 0 {
        return Err(r.malformed(format!("unknown flags {flags:#x}")));
    }
    let per_sample = (width as u64)
        .checked_mul(height as u64)
        .and_then(|p| p.checked_mul(4))
        .and_then(|b| b.checked_add(24));
    let declared = per_sample
        .and_then(|s| n_l.checked_add(n_o).and_then(|n| n.checked_mul(s)))
        .and_then(|b| b.checked_add(DATASET_HEADER_LEN as u64 + 4))
        .and_then(|b| usize::try_from(b).ok())
        .ok_or_else(|| r.malformed("declared sizes overflow"))?;
    check_length_and_crc(&buf, path, declared)?;

    let (n_l, n_o, p) = (n_l as usize, n_o as usize, width * height);
    let elements = |r: &mut Reader<'_>, n: usize| -> Result<Vec<OrbitalElements>> {
        let raw = r.f64s(3 * n)?;
        raw.chunks_exact(3)
            .map(|c| {
                OrbitalElements::from_array([c[0], c[1], c[2]])
                    .map_err(|e| r.malformed(e.to_string()))
            })
            .collect()
    };
    let images = |r: &mut Reader<'_>, n: usize| -> Result<Vec<SensorImage>> {
        let raw = r.f32s(n * p)?;
        raw.chunks_exact(p.max(1))
            .take(n)
            .map(|c| SensorImage::from_pixels(width, height, c.to_vec()).map_err(|e| r.malformed(e.to_string())))
            .collect()
    };
    let lx = elements(&mut r, n_l)?;
    let ly = images(&mut r, n_l)?;
    let ox = elements(&mut r, n_o)?;
    let oy = images(&mut r, n_o)?;
    Ok(Dataset {
        width,
        height,
        labeled: lx.into_iter().zip(ly).map(|(x, y)| LabeledSample { x, y }).collect(),
        observed: ox
            .into_iter()
            .zip(oy)
            .map(|(x_hidden, y)| ObservedSample { y, x_hidden })
            .collect(),
    })
}

pub fn save_checkpoint(path: impl AsRef<Path>, params: &MlpParams, adam: Option<&AdamState>) -> Result<()> {
    let path = path.as_ref();
    params.validate()?;
    let a = &params.arch;
    let mut w = Writer(Vec::with_capacity(64 + 8 * params.param_count() * if adam.is_some() { 3 } else { 1 }));
    w.0.extend_from_slice(&CHECKPOINT_MAGIC);
    w.u32(FORMAT_VERSION);
    w.u32(to_u32(a.input_dim, "input_dim")?);
    w.u32(to_u32(a.hidden_dims.len(), "depth")?);
    for &h in &a.hidden_dims {
        w.u32(to_u32(h, "hidden width")?);
    }
    w.u32(to_u32(a.output_dim, "output_dim")?);
    w.f64s(&params.head_ranges);
    for l in &params.layers {
        w.f64s(&l.weights);
        w.f64s(&l.biases);
    }
    match adam {
        None => w.u8(0),
        Some(s) => {
            if !s.matches(params) {
                return Err(Error::Architecture("optimizer state does not match parameters".into()));
            }
            w.u8(1);
            w.u64(s.step);
            for t in s.m.iter().chain(&s.v) {
                w.f64s(t);
            }
        }
    }
    w.finish(path)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let buf = read_file(path)?;
    check_preamble(&buf, path, CHECKPOINT_MAGIC)?;
    let mut r = Reader {
        buf: &buf,
        pos: 8,
        path,
    };
    let input_dim = r.u32()? as usize;
    let depth = r.u32()? as usize;
    if depth > 1024 {
        return Err(r.malformed(format!("implausible depth {depth}")));
    }
    let hidden: Vec<usize> = (0..depth).map(|_| r.u32().map(|h| h as usize)).collect::<Result<_>>()?;
    let output_dim = r.u32()? as usize;
    let arch = MlpArchitecture {
        input_dim,
        hidden_dims: hidden,
        output_dim,
    };
    arch.validate().map_err(|e| r.malformed(e.to_string()))?;
    let n_params = arch.param_count();
    let body_start = r.pos;
    // head ranges + parameters, then the optimizer flag
    let flag_at = body_start + 24 + 8 * n_params;
    let flag = *buf.get(flag_at).ok_or_else(|| Error::Truncated {
        path: path.into(),
        detail: format!("parameters end past {} bytes", buf.len()),
    })?;
    let declared = match flag {
        0 => flag_at + 1 + 4,
        1 => flag_at + 1 + 8 + 16 * n_params + 4,
        f => return Err(r.malformed(format!("bad optimizer flag {f}"))),
    };
    check_length_and_crc(&buf, path, declared)?;

    let hr = r.f64s(3)?;
    let head_ranges = [hr[0], hr[1], hr[2]];
    let mut layers = Vec::with_capacity(depth + 1);
    for (out, inp) in arch.layer_shapes() {
        let weights = r.f64s(out * inp)?;
        let biases = r.f64s(out)?;
        layers.push(Layer { weights, biases });
    }
    let params = MlpParams {
        arch,
        layers,
        head_ranges,
    };
    r.u8()?;
    let adam = if flag == 1 {
        let step = r.u64()?;
        let sizes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
        let m = sizes.iter().map(|&n| r.f64s(n)).collect::<Result<Vec<_>>>()?;
        let v = sizes.iter().map(|&n| r.f64s(n)).collect::<Result<Vec<_>>>()?;
        Some(AdamState { step, m, v })
    } else {
        None
    };
    Ok(Checkpoint { params, adam })
}

/// Load a checkpoint and require it to have architecture `arch`.
pub fn load_checkpoint_for(path: impl AsRef<Path>, arch: &MlpArchitecture) -> Result<Checkpoint> {
    let ck = load_checkpoint(path.as_ref())?;
    if &ck.params.arch != arch {
        return Err(Error::Architecture(format!(
            "{}: checkpoint has input {} hidden {:?}, config wants input {} hidden {:?}",
            path.as_ref().display(),
            ck.params.arch.input_dim,
            ck.params.arch.hidden_dims,
            arch.input_dim,
            arch.hidden_dims
        )));
    }
    Ok(ck)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::init;

    #[test]
    fn empty_dataset_is_header_plus_crc() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.spnd");
        save_dataset(&p, &Dataset::empty(8, 4)).unwrap();
        assert_eq!(fs::metadata(&p).unwrap().len(), 44);
        assert_eq!(load_dataset(&p).unwrap(), Dataset::empty(8, 4));
    }

    #[test]
    fn checkpoint_without_optimizer_section() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.spnc");
        let params = init(&MlpArchitecture::new(6, vec![4]), 3, 0.95).unwrap();
        save_checkpoint(&p, &params, None).unwrap();
        let ck = load_checkpoint(&p).unwrap();
        assert_eq!(ck.params, params);
        assert!(ck.adam.is_none());
    }

    #[test]
    fn short_file_is_truncated_not_magic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s");
        fs::write(&p, b"SP").unwrap();
        assert!(matches!(load_dataset(&p), Err(Error::Truncated { .. })));
    }
}
