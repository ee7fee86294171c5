//! Binary checkpoint: little-endian, magic `MRGN`, a u32 format version,
//! then length-prefixed sections (encoder, weight prototypes, median
//! prototypes, geometry scalars, RNG seed, epoch count). Loading is
//! fail-closed: any truncation, bad magic/version or length mismatch is
//! an error before anything is used.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::trainer::{Activation, Encoder, Layer};

pub const MAGIC: [u8; 4] = *b"MRGN";
pub const VERSION: u32 = 1;

/// The per-class scalar slice of a geometry snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScalars {
    pub kappa: f64,
    pub theta_vmf: f64,
    pub margin: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryScalars {
    pub theta_cell: f64,
    pub theta_vmf_min: f64,
    pub s0: f64,
    pub alpha: f64,
    pub per_class: Vec<ClassScalars>,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub encoder: Encoder,
    pub weight_prototypes: Matrix,
    pub median_prototypes: Matrix,
    pub geometry: GeometryScalars,
    pub seed: u64,
    pub epochs: u32,
}

struct SectionWriter {
    buf: Vec<u8>,
}

impl SectionWriter {
    fn new() -> Self {
        SectionWriter { buf: Vec::new() }
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        for v in vs {
            self.f64(*v);
        }
    }
}

struct SectionReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> SectionReader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        SectionReader { buf, pos: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Checkpoint(format!(
                "section truncated: wanted {n} bytes at offset {}, have {}",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(8 * n)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Checkpoint(format!(
                "section has {} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn write_matrix(w: &mut SectionWriter, m: &Matrix) {
    w.u32(m.nrows() as u32);
    w.u32(m.ncols() as u32);
    w.f64s(m.data());
}

fn read_matrix(r: &mut SectionReader) -> Result<Matrix> {
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let data = r.f64s(rows * cols)?;
    Matrix::from_vec(rows, cols, data)
        .map_err(|e| Error::Checkpoint(format!("bad matrix section: {e}")))
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut sections: Vec<Vec<u8>> = Vec::new();

        let mut enc = SectionWriter::new();
        enc.u32(match self.encoder.activation {
            Activation::Identity => 0,
            Activation::Tanh => 1,
        });
        enc.u32(self.encoder.layers.len() as u32);
        for layer in &self.encoder.layers {
            write_matrix(&mut enc, &layer.weights);
            enc.f64s(&layer.bias);
        }
        sections.push(enc.buf);

        let mut wp = SectionWriter::new();
        write_matrix(&mut wp, &self.weight_prototypes);
        sections.push(wp.buf);

        let mut mp = SectionWriter::new();
        write_matrix(&mut mp, &self.median_prototypes);
        sections.push(mp.buf);

        let mut geo = SectionWriter::new();
        geo.u32(self.geometry.per_class.len() as u32);
        geo.f64(self.geometry.theta_cell);
        geo.f64(self.geometry.theta_vmf_min);
        geo.f64(self.geometry.s0);
        geo.f64(self.geometry.alpha);
        for c in &self.geometry.per_class {
            geo.f64(c.kappa);
            geo.f64(c.theta_vmf);
            geo.f64(c.margin);
            geo.f64(c.scale);
        }
        sections.push(geo.buf);

        let mut seed = SectionWriter::new();
        seed.u64(self.seed);
        sections.push(seed.buf);

        let mut epochs = SectionWriter::new();
        epochs.u32(self.epochs);
        sections.push(epochs.buf);

        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for s in &sections {
            out.extend_from_slice(&(s.len() as u64).to_le_bytes());
            out.extend_from_slice(s);
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(&out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut raw = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut raw)?;
        let mut top = SectionReader::new(&raw);
        let magic = top.take(4)?;
        if magic != MAGIC {
            return Err(Error::Checkpoint(format!(
                "bad magic bytes {magic:?}, expected {MAGIC:?}"
            )));
        }
        let version = top.u32()?;
        if version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {version}, expected {VERSION}"
            )));
        }
        let mut sections = Vec::with_capacity(6);
        for _ in 0..6 {
            let len = top.u64()? as usize;
            sections.push(top.take(len)?);
        }
        top.finish()?;

        let mut enc = SectionReader::new(sections[0]);
        let activation = match enc.u32()? {
            0 => Activation::Identity,
            1 => Activation::Tanh,
            other => {
                return Err(Error::Checkpoint(format!(
                    "unknown activation tag {other}"
                )))
            }
        };
        let layer_count = enc.u32()? as usize;
        if layer_count == 0 {
            return Err(Error::Checkpoint("encoder has no layers".into()));
        }
        let mut layers = Vec::with_capacity(layer_count);
        for _ in 0..layer_count {
            let weights = read_matrix(&mut enc)?;
            let bias = enc.f64s(weights.nrows())?;
            layers.push(Layer { weights, bias });
        }
        enc.finish()?;

        let mut wp = SectionReader::new(sections[1]);
        let weight_prototypes = read_matrix(&mut wp)?;
        wp.finish()?;
        let mut mp = SectionReader::new(sections[2]);
        let median_prototypes = read_matrix(&mut mp)?;
        mp.finish()?;

        let mut geo = SectionReader::new(sections[3]);
        let classes = geo.u32()? as usize;
        let theta_cell = geo.f64()?;
        let theta_vmf_min = geo.f64()?;
        let s0 = geo.f64()?;
        let alpha = geo.f64()?;
        let mut per_class = Vec::with_capacity(classes);
        for _ in 0..classes {
            per_class.push(ClassScalars {
                kappa: geo.f64()?,
                theta_vmf: geo.f64()?,
                margin: geo.f64()?,
                scale: geo.f64()?,
            });
        }
        geo.finish()?;

        let mut seed_r = SectionReader::new(sections[4]);
        let seed = seed_r.u64()?;
        seed_r.finish()?;
        let mut ep = SectionReader::new(sections[5]);
        let epochs = ep.u32()?;
        ep.finish()?;

        if median_prototypes.nrows() != classes || weight_prototypes.nrows() != classes {
            return Err(Error::Checkpoint(format!(
                "prototype rows ({}, {}) disagree with geometry classes ({classes})",
                weight_prototypes.nrows(),
                median_prototypes.nrows()
            )));
        }

        Ok(Checkpoint {
            encoder: Encoder { layers, activation },
            weight_prototypes,
            median_prototypes,
            geometry: GeometryScalars {
                theta_cell,
                theta_vmf_min,
                s0,
                alpha,
                per_class,
            },
            seed,
            epochs,
        })
    }
}
