//! Framed binary protocol between the pipeline and external generators.
//!
//! Every frame starts with a 16-byte header:
//!
//! | bytes | field                                         |
//! |-------|-----------------------------------------------|
//! | 0..4  | magic `FSGN`                                  |
//! | 4     | version (`1`)                                 |
//! | 5     | role: `r`, `s`, `c`, `b`, or `e` for errors   |
//! | 6..8  | `u16` auxiliary plane count                   |
//! | 8..12 | `u32` height                                  |
//! | 12..16| `u32` width                                   |
//!
//! All integers are little-endian. The payload of a data frame is
//! `(3 + aux) · H · W` little-endian `f32` samples, plane by plane, each plane
//! row-major: three image planes, then the auxiliary planes. Requests carry
//! the role's conditioning as auxiliary planes (reenactment: one heatmap
//! plane per landmark; segmentation: none; inpainting: one label plane;
//! blending: three target-frame planes and one label plane). Responses
//! mirror the request header with `aux = 1`: three image planes and one
//! plane of mask labels stored as `f32` (0, 1, 2).
//!
//! Error frames use role `e`, `H = W = 0`, and `aux` holding the payload
//! length in bytes: one kind byte (`1` = the peer rejected our frame,
//! `2` = the generator itself failed) followed by a UTF-8 message.

use std::io::{ErrorKind, Read, Write};

use crate::error::{Error, ProtocolError, Result};
use crate::heatmaps::Heatmap;
use crate::image::{Image, Label, SegMask};

use super::generator::{Conditioning, GenRequest, GenResponse, Role};

pub const MAGIC: &[u8; 4] = b"FSGN";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 16;
pub const ERROR_ROLE: u8 = b'e';
/// Largest accepted frame side.
pub const MAX_SIDE: u32 = 8192;
/// Largest accepted payload.
pub const MAX_PAYLOAD: usize = 1 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub version: u8,
    pub role: u8,
    pub aux: u16,
    pub height: u32,
    pub width: u32,
}

impl Header {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[..4].copy_from_slice(MAGIC);
        b[4] = self.version;
        b[5] = self.role;
        b[6..8].copy_from_slice(&self.aux.to_le_bytes());
        b[8..12].copy_from_slice(&self.height.to_le_bytes());
        b[12..16].copy_from_slice(&self.width.to_le_bytes());
        b
    }

    pub fn parse(b: &[u8; HEADER_LEN]) -> Result<Self, ProtocolError> {
        let magic: [u8; 4] = b[..4].try_into().unwrap();
        if &magic != MAGIC {
            return Err(ProtocolError::BadMagic(magic));
        }
        let h = Header {
            version: b[4],
            role: b[5],
            aux: u16::from_le_bytes([b[6], b[7]]),
            height: u32::from_le_bytes(b[8..12].try_into().unwrap()),
            width: u32::from_le_bytes(b[12..16].try_into().unwrap()),
        };
        if h.version != VERSION {
            return Err(ProtocolError::Version(h.version));
        }
        if h.role != ERROR_ROLE && Role::from_byte(h.role).is_none() {
            return Err(ProtocolError::Role(h.role));
        }
        if h.role != ERROR_ROLE
            && (h.height == 0 || h.width == 0 || h.height > MAX_SIDE || h.width > MAX_SIDE)
        {
            return Err(ProtocolError::Dimensions {
                height: h.height,
                width: h.width,
            });
        }
        if h.payload_len() > MAX_PAYLOAD {
            return Err(ProtocolError::Dimensions {
                height: h.height,
                width: h.width,
            });
        }
        Ok(h)
    }

    pub fn payload_len(&self) -> usize {
        if self.role == ERROR_ROLE {
            self.aux as usize
        } else {
            4 * (3 + self.aux as usize) * self.height as usize * self.width as usize
        }
    }

    pub fn frame_len(&self) -> usize {
        HEADER_LEN + self.payload_len()
    }
}

/// One frame as read off the stream.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub header: Header,
    pub payload: Vec<u8>,
}

/// Reads up to `buf.len()` bytes, returning how many arrived before EOF.
fn read_full(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(n) => got += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(got)
}

fn io_to_protocol(e: std::io::Error) -> Error {
    match e.kind() {
        ErrorKind::WouldBlock | ErrorKind::TimedOut => ProtocolError::Timeout.into(),
        _ => Error::Io(e),
    }
}

/// Reads one frame. `Ok(None)` means the stream ended cleanly between frames.
pub fn read_frame(r: &mut impl Read) -> Result<Option<Frame>> {
    let mut hb = [0u8; HEADER_LEN];
    let got = read_full(r, &mut hb).map_err(io_to_protocol)?;
    if got == 0 {
        return Ok(None);
    }
    if got < HEADER_LEN {
        return Err(ProtocolError::Truncated {
            expected: HEADER_LEN,
            got,
        }
        .into());
    }
    let header = Header::parse(&hb)?;
    let mut payload = vec![0u8; header.payload_len()];
    let got = read_full(r, &mut payload).map_err(io_to_protocol)?;
    if got < payload.len() {
        return Err(ProtocolError::Truncated {
            expected: header.frame_len(),
            got: HEADER_LEN + got,
        }
        .into());
    }
    Ok(Some(Frame { header, payload }))
}

fn push_plane(buf: &mut Vec<u8>, plane: impl IntoIterator<Item = f32>) {
    for v in plane {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn push_image(buf: &mut Vec<u8>, img: &Image) {
    for c in 0..3 {
        push_plane(buf, img.plane(c));
    }
}

fn push_mask(buf: &mut Vec<u8>, mask: &SegMask) {
    push_plane(buf, mask.labels().iter().map(|&l| l as u8 as f32));
}

fn data_header(role: Role, aux: usize, height: usize, width: usize) -> Result<Header> {
    let aux = u16::try_from(aux).map_err(|_| Error::invalid("too many conditioning planes"))?;
    let dim = |v: usize| {
        u32::try_from(v)
            .ok()
            .filter(|&v| v <= MAX_SIDE)
            .ok_or_else(|| Error::invalid("raster too large for the wire"))
    };
    Ok(Header {
        version: VERSION,
        role: role.byte(),
        aux,
        height: dim(height)?,
        width: dim(width)?,
    })
}

pub fn encode_request(req: &GenRequest) -> Result<Vec<u8>> {
    req.validate()?;
    let aux = match &req.conditioning {
        Conditioning::None => 0,
        Conditioning::Heatmap(hm) => hm.channels(),
        Conditioning::Mask(_) => 1,
        Conditioning::Blend { .. } => 4,
    };
    let header = data_header(req.role, aux, req.height(), req.width())?;
    let mut buf = Vec::with_capacity(header.frame_len());
    buf.extend_from_slice(&header.to_bytes());
    push_image(&mut buf, &req.image);
    match &req.conditioning {
        Conditioning::None => {}
        Conditioning::Heatmap(hm) => push_plane(&mut buf, hm.data().iter().copied()),
        Conditioning::Mask(m) => push_mask(&mut buf, m),
        Conditioning::Blend { target, mask } => {
            push_image(&mut buf, target);
            push_mask(&mut buf, mask);
        }
    }
    Ok(buf)
}

pub fn encode_response(role: Role, resp: &GenResponse) -> Result<Vec<u8>> {
    let header = data_header(role, 1, resp.image.height(), resp.image.width())?;
    let mut buf = Vec::with_capacity(header.frame_len());
    buf.extend_from_slice(&header.to_bytes());
    push_image(&mut buf, &resp.image.to_rgb());
    push_mask(&mut buf, &resp.mask);
    Ok(buf)
}

/// Error frame kinds.
pub const REJECTED: u8 = 1;
pub const GENERATOR_FAILED: u8 = 2;

pub fn encode_error(kind: u8, message: &str) -> Vec<u8> {
    let mut msg = message.as_bytes();
    if msg.len() > u16::MAX as usize - 1 {
        msg = &msg[..u16::MAX as usize - 1];
    }
    let header = Header {
        version: VERSION,
        role: ERROR_ROLE,
        aux: (msg.len() + 1) as u16,
        height: 0,
        width: 0,
    };
    let mut buf = header.to_bytes().to_vec();
    buf.push(kind);
    buf.extend_from_slice(msg);
    buf
}

fn planes(frame: &Frame) -> Vec<Vec<f32>> {
    let n = frame.header.height as usize * frame.header.width as usize;
    frame
        .payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect::<Vec<_>>()
        .chunks(n)
        .map(|c| c.to_vec())
        .collect()
}

fn payload_err(msg: impl Into<String>) -> Error {
    ProtocolError::Payload(msg.into()).into()
}

fn image_from(planes: &[Vec<f32>], h: usize, w: usize) -> Result<Image> {
    Image::from_planes(h, w, planes).map_err(|e| payload_err(e.to_string()))
}

fn mask_from(plane: &[f32], h: usize, w: usize) -> Result<SegMask> {
    let labels = plane
        .iter()
        .map(|&v| match v {
            0.0 => Ok(Label::Background),
            1.0 => Ok(Label::Face),
            2.0 => Ok(Label::Hair),
            v => Err(payload_err(format!(
                "mask plane holds {v}, not a class label"
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    SegMask::new(h, w, labels).map_err(|e| payload_err(e.to_string()))
}

fn error_from(frame: &Frame) -> Error {
    let (kind, msg) = frame
        .payload
        .split_first()
        .map(|(k, m)| (*k, String::from_utf8_lossy(m).into_owned()))
        .unwrap_or((0, String::new()));
    match kind {
        GENERATOR_FAILED => Error::Peer(msg),
        _ => ProtocolError::Payload(format!("peer rejected frame: {msg}")).into(),
    }
}

/// Decodes a request frame, validating every sample.
pub fn decode_request(frame: &Frame) -> Result<GenRequest> {
    let h = &frame.header;
    let role = Role::from_byte(h.role).ok_or(ProtocolError::Role(h.role))?;
    let (rows, cols) = (h.height as usize, h.width as usize);
    let planes = planes(frame);
    let image = image_from(&planes[..3], rows, cols)?;
    let aux = &planes[3..];
    let conditioning = match (role, aux.len()) {
        (Role::Segment, 0) => Conditioning::None,
        (Role::Reenact, n) if n > 0 => Conditioning::Heatmap(
            Heatmap::from_planes(n, rows, cols, aux.concat())
                .map_err(|e| payload_err(e.to_string()))?,
        ),
        (Role::Inpaint, 1) => Conditioning::Mask(mask_from(&aux[0], rows, cols)?),
        (Role::Blend, 4) => Conditioning::Blend {
            target: image_from(&aux[..3], rows, cols)?,
            mask: mask_from(&aux[3], rows, cols)?,
        },
        (role, n) => {
            return Err(payload_err(format!(
                "{role} request cannot carry {n} conditioning planes"
            )))
        }
    };
    Ok(GenRequest {
        role,
        image,
        conditioning,
    })
}

/// Decodes a response frame to a request of the given role and size.
pub fn decode_response(
    frame: &Frame,
    role: Role,
    height: usize,
    width: usize,
) -> Result<GenResponse> {
    let h = &frame.header;
    if h.role == ERROR_ROLE {
        return Err(error_from(frame));
    }
    if h.role != role.byte() || h.height as usize != height || h.width as usize != width {
        return Err(ProtocolError::Mismatch(format!(
            "expected {} {height}x{width}, got role {:#04x} {}x{}",
            role, h.role, h.height, h.width
        ))
        .into());
    }
    if h.aux != 1 {
        return Err(payload_err(format!(
            "response carries {} auxiliary planes, expected 1",
            h.aux
        )));
    }
    let planes = planes(frame);
    Ok(GenResponse {
        image: image_from(&planes[..3], height, width)?,
        mask: mask_from(&planes[3], height, width)?,
    })
}

pub fn write_frame(w: &mut impl Write, bytes: &[u8]) -> Result<()> {
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

/// Serves requests from `input` until it ends cleanly, answering each with
/// the generator's response. A malformed frame is answered with an error
/// frame and ends the session with the protocol error, since the stream
/// can no longer be trusted to be in sync.
pub fn serve(
    input: &mut impl Read,
    output: &mut impl Write,
    gen: &mut dyn super::Generator,
) -> Result<usize> {
    let mut served = 0;
    loop {
        let frame = match read_frame(input) {
            Ok(Some(f)) => f,
            Ok(None) => return Ok(served),
            Err(e) => {
                let _ = write_frame(output, &encode_error(REJECTED, &e.to_string()));
                return Err(e);
            }
        };
        let req = match decode_request(&frame) {
            Ok(r) => r,
            Err(e) => {
                write_frame(output, &encode_error(REJECTED, &e.to_string()))?;
                return Err(e);
            }
        };
        match gen.generate(&req) {
            Ok(resp) => write_frame(output, &encode_response(req.role, &resp)?)?,
            Err(e) => write_frame(output, &encode_error(GENERATOR_FAILED, &e.to_string()))?,
        }
        served += 1;
    }
}
