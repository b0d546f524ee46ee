//! Network file format: magic "GSN1", little-endian, length-prefixed
//! strings, raw f64 matrices. Round trip is bit-exact on every
//! probability, so a reloaded network scores streams identically.

use std::fmt;
use std::io::{self, Read, Write};

use bgac_core::features::FeatureConfig;
use bgac_core::gsn::{GestureSpottingNetwork, GestureVariant, SpotConfig};
use bgac_core::hmm::{HmmModel, Topology};

const MAGIC: &[u8; 4] = b"GSN1";

#[derive(Debug)]
pub enum NetFileError {
    Io(io::Error),
    BadMagic,
    Corrupt(String),
}

impl fmt::Display for NetFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetFileError::Io(e) => write!(f, "io error: {e}"),
            NetFileError::BadMagic => write!(f, "not a GSN1 network file"),
            NetFileError::Corrupt(what) => write!(f, "corrupt network file: {what}"),
        }
    }
}

impl std::error::Error for NetFileError {}

impl From<io::Error> for NetFileError {
    fn from(e: io::Error) -> Self {
        NetFileError::Io(e)
    }
}

fn write_str<W: Write>(w: &mut W, s: &str) -> io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn write_f64s<W: Write>(w: &mut W, xs: &[f64]) -> io::Result<()> {
    for &x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn write_model<W: Write>(w: &mut W, m: &HmmModel) -> io::Result<()> {
    w.write_all(&[match m.topology {
        Topology::LeftToRight => 0u8,
        Topology::Ergodic => 1u8,
    }])?;
    w.write_all(&(m.n_states as u32).to_le_bytes())?;
    w.write_all(&(m.n_symbols as u32).to_le_bytes())?;
    write_f64s(w, &m.initial)?;
    write_f64s(w, &m.transitions)?;
    write_f64s(w, &m.emissions)
}

pub fn save_network<W: Write>(
    w: &mut W,
    net: &GestureSpottingNetwork,
) -> Result<(), NetFileError> {
    w.write_all(MAGIC)?;
    w.write_all(&(net.variants.len() as u32).to_le_bytes())?;
    for v in &net.variants {
        write_str(w, &v.gesture_name)?;
        write_str(w, &v.variant_name)?;
        write_model(w, &v.model)?;
    }
    write_model(w, &net.threshold)?;
    // Spot config.
    w.write_all(&(net.config.min_len_frames as u32).to_le_bytes())?;
    w.write_all(&net.config.refractory_ms.to_le_bytes())?;
    w.write_all(&net.config.emission_floor.to_le_bytes())?;
    w.write_all(&(net.config.gesture_min_duration_ms.len() as u32).to_le_bytes())?;
    for (name, ms) in &net.config.gesture_min_duration_ms {
        write_str(w, name)?;
        w.write_all(&ms.to_le_bytes())?;
    }
    // Feature config + resample rate.
    w.write_all(&net.feature_config.radius_threshold_m.to_le_bytes())?;
    w.write_all(&net.feature_config.speed_threshold_mps.to_le_bytes())?;
    w.write_all(&net.resample_hz.to_le_bytes())?;
    Ok(())
}

struct Reader<R: Read> {
    r: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N], NetFileError> {
        let mut buf = [0u8; N];
        self.r
            .read_exact(&mut buf)
            .map_err(|_| NetFileError::Corrupt(String::from("unexpected end of file")))?;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8, NetFileError> {
        Ok(self.bytes::<1>()?[0])
    }

    fn u32(&mut self) -> Result<u32, NetFileError> {
        Ok(u32::from_le_bytes(self.bytes::<4>()?))
    }

    fn f64(&mut self) -> Result<f64, NetFileError> {
        Ok(f64::from_le_bytes(self.bytes::<8>()?))
    }

    fn string(&mut self) -> Result<String, NetFileError> {
        let len = self.u32()? as usize;
        if len > 1 << 20 {
            return Err(NetFileError::Corrupt(format!("implausible string length {len}")));
        }
        let mut buf = vec![0u8; len];
        self.r
            .read_exact(&mut buf)
            .map_err(|_| NetFileError::Corrupt(String::from("unexpected end of file")))?;
        String::from_utf8(buf).map_err(|_| NetFileError::Corrupt(String::from("non-UTF-8 name")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, NetFileError> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f64()?);
        }
        Ok(out)
    }

    fn model(&mut self) -> Result<HmmModel, NetFileError> {
        let topology = match self.u8()? {
            0 => Topology::LeftToRight,
            1 => Topology::Ergodic,
            t => return Err(NetFileError::Corrupt(format!("bad topology tag {t}"))),
        };
        let n_states = self.u32()? as usize;
        let n_symbols = self.u32()? as usize;
        if n_states > 4096 || n_symbols > 1 << 20 {
            return Err(NetFileError::Corrupt(format!(
                "implausible model size {n_states}x{n_symbols}"
            )));
        }
        Ok(HmmModel {
            n_states,
            n_symbols,
            topology,
            initial: self.f64s(n_states)?,
            transitions: self.f64s(n_states * n_states)?,
            emissions: self.f64s(n_states * n_symbols)?,
        })
    }
}

pub fn load_network<R: Read>(r: R) -> Result<GestureSpottingNetwork, NetFileError> {
    let mut rd = Reader { r };
    if &rd.bytes::<4>()? != MAGIC {
        return Err(NetFileError::BadMagic);
    }
    let n_variants = rd.u32()? as usize;
    if n_variants > 4096 {
        return Err(NetFileError::Corrupt(format!("implausible variant count {n_variants}")));
    }
    let mut variants = Vec::with_capacity(n_variants);
    for _ in 0..n_variants {
        let gesture_name = rd.string()?;
        let variant_name = rd.string()?;
        let model = rd.model()?;
        variants.push(GestureVariant { gesture_name, variant_name, model });
    }
    let threshold = rd.model()?;
    let min_len_frames = rd.u32()? as usize;
    let refractory_ms = rd.f64()?;
    let emission_floor = rd.f64()?;
    let n_gates = rd.u32()? as usize;
    let mut gesture_min_duration_ms = Vec::with_capacity(n_gates);
    for _ in 0..n_gates {
        let name = rd.string()?;
        let ms = rd.f64()?;
        gesture_min_duration_ms.push((name, ms));
    }
    let feature_config = FeatureConfig {
        radius_threshold_m: rd.f64()?,
        speed_threshold_mps: rd.f64()?,
    };
    let resample_hz = rd.f64()?;
    Ok(GestureSpottingNetwork {
        variants,
        threshold,
        config: SpotConfig {
            min_len_frames,
            refractory_ms,
            emission_floor,
            gesture_min_duration_ms,
        },
        feature_config,
        resample_hz,
    })
}

pub fn save_network_file(
    path: &std::path::Path,
    net: &GestureSpottingNetwork,
) -> Result<(), NetFileError> {
    let mut f = io::BufWriter::new(std::fs::File::create(path)?);
    save_network(&mut f, net)?;
    f.flush()?;
    Ok(())
}

pub fn load_network_file(path: &std::path::Path) -> Result<GestureSpottingNetwork, NetFileError> {
    load_network(io::BufReader::new(std::fs::File::open(path)?))
}
