//! Pixel containers and their on-disk formats.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;
const FSQ_MAGIC: &[u8; 4] = b"FSQ1";

/// `F × H × W × C` block of 8-bit pixels, frame-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSequence {
    frames: usize,
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl FrameSequence {
    pub fn new(frames: usize, height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        if frames < 2 {
            return Err(Error::invalid(format!(
                "a sequence needs at least 2 frames, got {frames}"
            )));
        }
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "frame extents {height}×{width} must be positive"
            )));
        }
        let expected = frames * height * width * CHANNELS;
        if pixels.len() != expected {
            return Err(Error::ShapeMismatch {
                op: "FrameSequence::new",
                expected: vec![frames, height, width, CHANNELS],
                found: vec![pixels.len()],
            });
        }
        Ok(FrameSequence {
            frames,
            height,
            width,
            pixels,
        })
    }

    /// Stack equally sized frames.
    pub fn from_frames(height: usize, width: usize, frames: &[Vec<u8>]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(frames.len() * height * width * CHANNELS);
        for (i, f) in frames.iter().enumerate() {
            if f.len() != height * width * CHANNELS {
                return Err(Error::invalid(format!(
                    "frame {i} has {} bytes, expected {}",
                    f.len(),
                    height * width * CHANNELS
                )));
            }
            pixels.extend_from_slice(f);
        }
        Self::new(frames.len(), height, width, pixels)
    }

    pub fn frame_count(&self) -> usize {
        self.frames
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        CHANNELS
    }

    /// Elements per frame, `H·W·C`.
    pub fn frame_len(&self) -> usize {
        self.height * self.width * CHANNELS
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn frame(&self, i: usize) -> &[u8] {
        let n = self.frame_len();
        &self.pixels[i * n..(i + 1) * n]
    }

    pub fn frame_mut(&mut self, i: usize) -> &mut [u8] {
        let n = self.frame_len();
        &mut self.pixels[i * n..(i + 1) * n]
    }

    pub fn frame_f64(&self, i: usize) -> Frame {
        Frame {
            height: self.height,
            width: self.width,
            values: self.frame(i).iter().map(|&p| f64::from(p)).collect(),
        }
    }

    pub fn write_fsq<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(FSQ_MAGIC)?;
        for v in [self.frames, self.height, self.width, CHANNELS] {
            let v =
                u32::try_from(v).map_err(|_| Error::Format(format!("extent {v} exceeds u32")))?;
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.pixels)?;
        Ok(())
    }

    pub fn read_fsq<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format("truncated .fsq header".into()))?;
        if &magic != FSQ_MAGIC {
            return Err(Error::Format(format!("bad .fsq magic {magic:?}")));
        }
        let mut dims = [0usize; 4];
        for d in &mut dims {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)
                .map_err(|_| Error::Format("truncated .fsq header".into()))?;
            *d = u32::from_le_bytes(b) as usize;
        }
        let [f, h, w, c] = dims;
        if c != CHANNELS {
            return Err(Error::Format(format!(
                ".fsq has {c} channels, only {CHANNELS} supported"
            )));
        }
        let n = f
            .checked_mul(h)
            .and_then(|v| v.checked_mul(w))
            .and_then(|v| v.checked_mul(c))
            .ok_or_else(|| Error::Format(".fsq extents overflow".into()))?;
        let mut pixels = Vec::new();
        r.take(n as u64 + 1).read_to_end(&mut pixels)?;
        if pixels.len() != n {
            return Err(Error::Format(format!(
                ".fsq payload has {} bytes, expected {n}",
                pixels.len()
            )));
        }
        Self::new(f, h, w, pixels).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save_fsq(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_fsq(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load_fsq(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_fsq(BufReader::new(File::open(path)?))
    }

    /// Binary PPM (P6, maxval 255) of frame `i`.
    pub fn write_ppm<W: Write>(&self, i: usize, mut w: W) -> Result<()> {
        if i >= self.frames {
            return Err(Error::invalid(format!(
                "frame {i} out of range (F = {})",
                self.frames
            )));
        }
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(self.frame(i))?;
        Ok(())
    }

    /// Build a sequence from PPM files, one frame each.
    pub fn from_ppm_files<P: AsRef<Path>>(paths: &[P]) -> Result<Self> {
        let mut frames = Vec::with_capacity(paths.len());
        let mut extents = None;
        for p in paths {
            let (h, w, px) = read_ppm(BufReader::new(File::open(p)?))?;
            match extents {
                None => extents = Some((h, w)),
                Some(e) if e != (h, w) => {
                    return Err(Error::Format(format!(
                        "{} is {h}×{w}, expected {}×{}",
                        p.as_ref().display(),
                        e.0,
                        e.1
                    )))
                }
                _ => {}
            }
            frames.push(px);
        }
        let (h, w) = extents.ok_or_else(|| Error::invalid("no PPM files given"))?;
        Self::from_frames(h, w, &frames)
    }
}

/// Parse a binary PPM (P6, maxval 255); returns `(height, width, pixels)`.
pub fn read_ppm<R: BufRead>(mut r: R) -> Result<(usize, usize, Vec<u8>)> {
    let mut fields = Vec::with_capacity(4);
    let mut token = Vec::new();
    let mut in_comment = false;
    while fields.len() < 4 {
        let mut b = [0u8; 1];
        if r.read(&mut b)? == 0 {
            return Err(Error::Format("truncated PPM header".into()));
        }
        let c = b[0];
        if in_comment {
            in_comment = c != b'\n';
            continue;
        }
        if c == b'#' {
            in_comment = true;
        } else if c.is_ascii_whitespace() {
            if !token.is_empty() {
                fields.push(String::from_utf8_lossy(&token).into_owned());
                token.clear();
            }
        } else {
            token.push(c);
        }
    }
    if fields[0] != "P6" {
        return Err(Error::Format(format!(
            "unsupported PPM magic {}",
            fields[0]
        )));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad PPM field '{s}'")))
    };
    let (w, h, maxval) = (parse(&fields[1])?, parse(&fields[2])?, parse(&fields[3])?);
    if maxval != 255 {
        return Err(Error::Format(format!(
            "PPM maxval {maxval} unsupported (need 255)"
        )));
    }
    let mut px = vec![0u8; w * h * CHANNELS];
    r.read_exact(&mut px)
        .map_err(|_| Error::Format("truncated PPM pixel data".into()))?;
    Ok((h, w, px))
}

/// Single frame with real-valued pixels on the 0–255 scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub height: usize,
    pub width: usize,
    /// `H × W × C`, row-major.
    pub values: Vec<f64>,
}

impl Frame {
    pub fn zeros(height: usize, width: usize) -> Self {
        Frame {
            height,
            width,
            values: vec![0.0; height * width * CHANNELS],
        }
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize, c: usize) -> f64 {
        self.values[(y * self.width + x) * CHANNELS + c]
    }

    /// Round half to even and clamp to `[0, 255]`.
    pub fn quantize(&self) -> Vec<u8> {
        self.values
            .iter()
            .map(|&v| v.clamp(0.0, 255.0).round_ties_even() as u8)
            .collect()
    }
}
