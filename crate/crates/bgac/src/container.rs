//! RIFF capture container: form type "BGAC", little-endian fields, chunks
//! padded to even length. Chunk ids: HDRS (session header), DPTH (LZF
//! compressed packed depth), RGBF (opaque JPEG), SKEL (skeleton frames).
//! Unknown chunks are skipped so future stream types stay readable.

use std::fmt;
use std::io::{self, Read, Write};

use bgac_core::lzf;
use bgac_core::skeleton::{Joint, JointState, Skeleton, JOINT_COUNT};

pub const STREAM_DEPTH: u32 = 1 << 0;
pub const STREAM_RGB: u32 = 1 << 1;
pub const STREAM_SKELETON: u32 = 1 << 2;
/// Reserved; no audio codec is implemented.
pub const STREAM_AUDIO: u32 = 1 << 3;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionHeader {
    pub format_version: u32,
    pub sensor_id: String,
    pub start_epoch_ms: u64,
    pub stream_flags: u32,
}

impl Default for SessionHeader {
    fn default() -> Self {
        SessionHeader {
            format_version: FORMAT_VERSION,
            sensor_id: String::from("synthetic"),
            start_epoch_ms: 0,
            stream_flags: STREAM_DEPTH | STREAM_SKELETON,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthFrame {
    pub timestamp_ms: u64,
    pub width: u16,
    pub height: u16,
    /// Packed pixels: 13-bit depth (mm) in the high bits, 3-bit player id
    /// in the low bits.
    pub pixels: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbFrame {
    pub timestamp_ms: u64,
    pub width: u16,
    pub height: u16,
    /// JPEG bytes, stored opaque; only SOI/EOI framing is checked.
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonFrameRecord {
    pub timestamp_ms: u64,
    pub skeletons: Vec<Skeleton>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    Depth(DepthFrame),
    Rgb(RgbFrame),
    Skeleton(SkeletonFrameRecord),
}

impl Frame {
    pub fn timestamp_ms(&self) -> u64 {
        match self {
            Frame::Depth(f) => f.timestamp_ms,
            Frame::Rgb(f) => f.timestamp_ms,
            Frame::Skeleton(f) => f.timestamp_ms,
        }
    }
}

#[derive(Debug)]
pub enum ContainerError {
    Io(io::Error),
    /// Not a RIFF/BGAC file at all.
    BadMagic,
    UnsupportedVersion(u32),
    /// File ended inside a chunk; offset is where the read failed.
    Truncated { offset: u64 },
    /// Structurally invalid chunk payload.
    Corrupt { offset: u64, what: String },
    /// Frame timestamps within one stream must be non-decreasing.
    OutOfOrder { stream: &'static str, timestamp_ms: u64 },
    /// Pixel buffer length does not match width × height.
    BadFrame(String),
}

impl fmt::Display for ContainerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContainerError::Io(e) => write!(f, "io error: {e}"),
            ContainerError::BadMagic => write!(f, "not a BGAC container (bad RIFF magic)"),
            ContainerError::UnsupportedVersion(v) => {
                write!(f, "unsupported container version {v}")
            }
            ContainerError::Truncated { offset } => {
                write!(f, "truncated container at byte offset {offset}")
            }
            ContainerError::Corrupt { offset, what } => {
                write!(f, "corrupt chunk at byte offset {offset}: {what}")
            }
            ContainerError::OutOfOrder { stream, timestamp_ms } => write!(
                f,
                "{stream} frame at {timestamp_ms} ms is earlier than its predecessor"
            ),
            ContainerError::BadFrame(what) => write!(f, "invalid frame: {what}"),
        }
    }
}

impl std::error::Error for ContainerError {}

impl From<io::Error> for ContainerError {
    fn from(e: io::Error) -> Self {
        ContainerError::Io(e)
    }
}

fn chunk_id(id: &[u8; 4]) -> [u8; 4] {
    *id
}

/// Streaming writer. Chunks are emitted as frames arrive; memory is
/// bounded by the largest single frame. The RIFF size field is patched on
/// `finish`, so the sink must be seekable.
pub struct SessionWriter<W: Write + io::Seek> {
    sink: W,
    bytes_written: u64,
    last_ts: [Option<u64>; 3], // depth, rgb, skeleton
}

impl<W: Write + io::Seek> SessionWriter<W> {
    pub fn new(mut sink: W, header: &SessionHeader) -> Result<Self, ContainerError> {
        sink.write_all(b"RIFF")?;
        sink.write_all(&0u32.to_le_bytes())?; // patched in finish()
        sink.write_all(b"BGAC")?;
        let mut w = SessionWriter {
            sink,
            bytes_written: 12,
            last_ts: [None; 3],
        };
        let mut body = Vec::new();
        body.extend_from_slice(&header.format_version.to_le_bytes());
        body.extend_from_slice(&header.start_epoch_ms.to_le_bytes());
        body.extend_from_slice(&header.stream_flags.to_le_bytes());
        let id = header.sensor_id.as_bytes();
        body.extend_from_slice(&(id.len() as u32).to_le_bytes());
        body.extend_from_slice(id);
        w.write_chunk(b"HDRS", &body)?;
        Ok(w)
    }

    fn write_chunk(&mut self, id: &[u8; 4], body: &[u8]) -> Result<(), ContainerError> {
        self.sink.write_all(&chunk_id(id))?;
        self.sink.write_all(&(body.len() as u32).to_le_bytes())?;
        self.sink.write_all(body)?;
        self.bytes_written += 8 + body.len() as u64;
        if body.len() % 2 == 1 {
            self.sink.write_all(&[0u8])?;
            self.bytes_written += 1;
        }
        Ok(())
    }

    fn check_order(
        &mut self,
        stream_idx: usize,
        stream: &'static str,
        ts: u64,
    ) -> Result<(), ContainerError> {
        if let Some(prev) = self.last_ts[stream_idx] {
            if ts < prev {
                return Err(ContainerError::OutOfOrder { stream, timestamp_ms: ts });
            }
        }
        self.last_ts[stream_idx] = Some(ts);
        Ok(())
    }

    pub fn write_frame(&mut self, frame: &Frame) -> Result<(), ContainerError> {
        match frame {
            Frame::Depth(f) => self.write_depth(f),
            Frame::Rgb(f) => self.write_rgb(f),
            Frame::Skeleton(f) => self.write_skeleton(f),
        }
    }

    pub fn write_depth(&mut self, f: &DepthFrame) -> Result<(), ContainerError> {
        if f.pixels.len() != f.width as usize * f.height as usize {
            return Err(ContainerError::BadFrame(format!(
                "depth pixel count {} != {}x{}",
                f.pixels.len(),
                f.width,
                f.height
            )));
        }
        self.check_order(0, "depth", f.timestamp_ms)?;
        let mut raw = Vec::with_capacity(f.pixels.len() * 2);
        for &p in &f.pixels {
            raw.extend_from_slice(&p.to_le_bytes());
        }
        let packed = lzf::compress(&raw);
        let mut body = Vec::with_capacity(16 + packed.len());
        body.extend_from_slice(&f.timestamp_ms.to_le_bytes());
        body.extend_from_slice(&f.width.to_le_bytes());
        body.extend_from_slice(&f.height.to_le_bytes());
        body.extend_from_slice(&(packed.len() as u32).to_le_bytes());
        body.extend_from_slice(&packed);
        self.write_chunk(b"DPTH", &body)
    }

    pub fn write_rgb(&mut self, f: &RgbFrame) -> Result<(), ContainerError> {
        if f.payload.len() < 4
            || f.payload[..2] != [0xFF, 0xD8]
            || f.payload[f.payload.len() - 2..] != [0xFF, 0xD9]
        {
            return Err(ContainerError::BadFrame(String::from(
                "rgb payload missing JPEG SOI/EOI framing",
            )));
        }
        self.check_order(1, "rgb", f.timestamp_ms)?;
        let mut body = Vec::with_capacity(16 + f.payload.len());
        body.extend_from_slice(&f.timestamp_ms.to_le_bytes());
        body.extend_from_slice(&f.width.to_le_bytes());
        body.extend_from_slice(&f.height.to_le_bytes());
        body.extend_from_slice(&(f.payload.len() as u32).to_le_bytes());
        body.extend_from_slice(&f.payload);
        self.write_chunk(b"RGBF", &body)
    }

    pub fn write_skeleton(&mut self, f: &SkeletonFrameRecord) -> Result<(), ContainerError> {
        if f.skeletons.len() > 2 {
            return Err(ContainerError::BadFrame(format!(
                "{} skeletons in one frame; the tracker supports at most 2",
                f.skeletons.len()
            )));
        }
        self.check_order(2, "skeleton", f.timestamp_ms)?;
        let mut body = Vec::with_capacity(9 + f.skeletons.len() * (1 + JOINT_COUNT * 13));
        body.extend_from_slice(&f.timestamp_ms.to_le_bytes());
        body.push(f.skeletons.len() as u8);
        for skel in &f.skeletons {
            body.push(skel.player_id);
            for joint in &skel.joints {
                body.push(joint.state as u8);
                body.extend_from_slice(&joint.position[0].to_le_bytes());
                body.extend_from_slice(&joint.position[1].to_le_bytes());
                body.extend_from_slice(&joint.position[2].to_le_bytes());
            }
        }
        self.write_chunk(b"SKEL", &body)
    }

    /// Patch the RIFF size field and flush; returns total bytes written.
    pub fn finish(mut self) -> Result<u64, ContainerError> {
        let riff_size = (self.bytes_written - 8) as u32;
        self.sink.seek(io::SeekFrom::Start(4))?;
        self.sink.write_all(&riff_size.to_le_bytes())?;
        self.sink.seek(io::SeekFrom::End(0))?;
        self.sink.flush()?;
        Ok(self.bytes_written)
    }
}

/// Streaming reader; yields frames in file order. Memory use is bounded
/// by the largest single chunk.
pub struct SessionReader<R: Read> {
    source: R,
    pub header: SessionHeader,
    offset: u64,
    remaining: u64,
}

impl<R: Read> SessionReader<R> {
    pub fn new(mut source: R) -> Result<Self, ContainerError> {
        let mut magic = [0u8; 12];
        source
            .read_exact(&mut magic)
            .map_err(|_| ContainerError::BadMagic)?;
        if &magic[0..4] != b"RIFF" || &magic[8..12] != b"BGAC" {
            return Err(ContainerError::BadMagic);
        }
        let riff_size = u32::from_le_bytes(magic[4..8].try_into().unwrap()) as u64;
        let mut reader = SessionReader {
            source,
            header: SessionHeader::default(),
            offset: 12,
            remaining: riff_size.saturating_sub(4),
        };
        let (id, body) = reader
            .next_chunk()?
            .ok_or(ContainerError::Truncated { offset: 12 })?;
        if &id != b"HDRS" {
            return Err(ContainerError::Corrupt {
                offset: 12,
                what: String::from("first chunk is not HDRS"),
            });
        }
        reader.header = parse_header(&body, 12)?;
        if reader.header.format_version != FORMAT_VERSION {
            return Err(ContainerError::UnsupportedVersion(reader.header.format_version));
        }
        Ok(reader)
    }

    /// Read the next raw chunk (id, body); None at clean end of file.
    fn next_chunk(&mut self) -> Result<Option<([u8; 4], Vec<u8>)>, ContainerError> {
        if self.remaining == 0 {
            return Ok(None);
        }
        let chunk_start = self.offset;
        let mut head = [0u8; 8];
        match self.source.read_exact(&mut head) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => {
                return Err(ContainerError::Truncated { offset: chunk_start });
            }
            Err(e) => return Err(e.into()),
        }
        let id: [u8; 4] = head[0..4].try_into().unwrap();
        let len = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
        let padded = len + (len % 2);
        let mut body = vec![0u8; padded];
        self.source
            .read_exact(&mut body)
            .map_err(|_| ContainerError::Truncated { offset: chunk_start + 8 })?;
        body.truncate(len);
        let consumed = 8 + padded as u64;
        self.offset += consumed;
        self.remaining = self.remaining.saturating_sub(consumed);
        Ok(Some((id, body)))
    }

    /// Next known frame; unknown chunk ids are skipped with a warning.
    pub fn next_frame(&mut self) -> Result<Option<Frame>, ContainerError> {
        loop {
            let chunk_start = self.offset;
            let Some((id, body)) = self.next_chunk()? else {
                return Ok(None);
            };
            match &id {
                b"DPTH" => return parse_depth(&body, chunk_start).map(Some),
                b"RGBF" => return parse_rgb(&body, chunk_start).map(Some),
                b"SKEL" => return parse_skeleton(&body, chunk_start).map(Some),
                other => {
                    log::warn!(
                        "skipping unknown chunk {:?} at byte offset {chunk_start}",
                        String::from_utf8_lossy(other)
                    );
                }
            }
        }
    }
}

impl<R: Read> Iterator for SessionReader<R> {
    type Item = Result<Frame, ContainerError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame().transpose()
    }
}

struct Cursor<'a> {
    body: &'a [u8],
    pos: usize,
    chunk_offset: u64,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ContainerError> {
        if self.pos + n > self.body.len() {
            return Err(ContainerError::Corrupt {
                offset: self.chunk_offset + self.pos as u64,
                what: format!("chunk body too short, needed {n} more bytes"),
            });
        }
        let s = &self.body[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ContainerError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, ContainerError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, ContainerError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ContainerError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, ContainerError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

fn parse_header(body: &[u8], chunk_offset: u64) -> Result<SessionHeader, ContainerError> {
    let mut c = Cursor { body, pos: 0, chunk_offset };
    let format_version = c.u32()?;
    let start_epoch_ms = c.u64()?;
    let stream_flags = c.u32()?;
    let id_len = c.u32()? as usize;
    let sensor_id = String::from_utf8(c.take(id_len)?.to_vec()).map_err(|_| {
        ContainerError::Corrupt {
            offset: chunk_offset,
            what: String::from("sensor_id is not UTF-8"),
        }
    })?;
    Ok(SessionHeader {
        format_version,
        sensor_id,
        start_epoch_ms,
        stream_flags,
    })
}

fn parse_depth(body: &[u8], chunk_offset: u64) -> Result<Frame, ContainerError> {
    let mut c = Cursor { body, pos: 0, chunk_offset };
    let timestamp_ms = c.u64()?;
    let width = c.u16()?;
    let height = c.u16()?;
    let clen = c.u32()? as usize;
    let packed = c.take(clen)?;
    let raw = lzf::decompress(packed).map_err(|e| ContainerError::Corrupt {
        offset: chunk_offset,
        what: format!("lzf: {e:?}"),
    })?;
    let expect = width as usize * height as usize * 2;
    if raw.len() != expect {
        return Err(ContainerError::Corrupt {
            offset: chunk_offset,
            what: format!("decompressed {} bytes, expected {expect}", raw.len()),
        });
    }
    let pixels = raw
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect();
    Ok(Frame::Depth(DepthFrame { timestamp_ms, width, height, pixels }))
}

fn parse_rgb(body: &[u8], chunk_offset: u64) -> Result<Frame, ContainerError> {
    let mut c = Cursor { body, pos: 0, chunk_offset };
    let timestamp_ms = c.u64()?;
    let width = c.u16()?;
    let height = c.u16()?;
    let len = c.u32()? as usize;
    let payload = c.take(len)?.to_vec();
    Ok(Frame::Rgb(RgbFrame { timestamp_ms, width, height, payload }))
}

fn parse_skeleton(body: &[u8], chunk_offset: u64) -> Result<Frame, ContainerError> {
    let mut c = Cursor { body, pos: 0, chunk_offset };
    let timestamp_ms = c.u64()?;
    let count = c.u8()? as usize;
    if count > 2 {
        return Err(ContainerError::Corrupt {
            offset: chunk_offset,
            what: format!("{count} skeletons in one frame"),
        });
    }
    let mut skeletons = Vec::with_capacity(count);
    for _ in 0..count {
        let player_id = c.u8()?;
        let mut skel = Skeleton::new(player_id);
        for j in 0..JOINT_COUNT {
            let state_raw = c.u8()?;
            let state = JointState::from_u8(state_raw).ok_or_else(|| ContainerError::Corrupt {
                offset: chunk_offset,
                what: format!("bad joint state {state_raw}"),
            })?;
            let x = c.f32()?;
            let y = c.f32()?;
            let z = c.f32()?;
            skel.joints[j] = Joint { position: [x, y, z], state };
        }
        skeletons.push(skel);
    }
    Ok(Frame::Skeleton(SkeletonFrameRecord { timestamp_ms, skeletons }))
}

/// Per-stream inter-frame gap statistics over an already-read frame list.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct FrameRateStats {
    pub depth: Option<bgac_core::eval::GapStats>,
    pub rgb: Option<bgac_core::eval::GapStats>,
    pub skeleton: Option<bgac_core::eval::GapStats>,
    pub depth_frames: usize,
    pub rgb_frames: usize,
    pub skeleton_frames: usize,
}

pub fn frame_rate_stats(frames: &[Frame]) -> FrameRateStats {
    let mut depth = Vec::new();
    let mut rgb = Vec::new();
    let mut skeleton = Vec::new();
    for f in frames {
        match f {
            Frame::Depth(d) => depth.push(d.timestamp_ms),
            Frame::Rgb(r) => rgb.push(r.timestamp_ms),
            Frame::Skeleton(s) => skeleton.push(s.timestamp_ms),
        }
    }
    FrameRateStats {
        depth: bgac_core::eval::gap_stats(&depth).ok(),
        rgb: bgac_core::eval::gap_stats(&rgb).ok(),
        skeleton: bgac_core::eval::gap_stats(&skeleton).ok(),
        depth_frames: depth.len(),
        rgb_frames: rgb.len(),
        skeleton_frames: skeleton.len(),
    }
}

/// Read every frame of a container file into memory. Convenience for
/// sessions known to fit; the streaming reader is the general path.
pub fn read_all<R: Read>(source: R) -> Result<(SessionHeader, Vec<Frame>), ContainerError> {
    let mut reader = SessionReader::new(source)?;
    let mut frames = Vec::new();
    while let Some(f) = reader.next_frame()? {
        frames.push(f);
    }
    Ok((reader.header.clone(), frames))
}

/// Write a whole session in one call; returns bytes written.
pub fn write_all<W: Write + io::Seek>(
    sink: W,
    header: &SessionHeader,
    frames: &[Frame],
) -> Result<u64, ContainerError> {
    let mut w = SessionWriter::new(sink, header)?;
    for f in frames {
        w.write_frame(f)?;
    }
    w.finish()
}
