//! Envelope framing for the socket backend.
//!
//! Every point-to-point message travels as one frame:
//!
//! ```text
//! offset  size  field
//!      0     4  magic 0x4D534F52, little endian
//!      4     1  version (currently 1)
//!      5     1  element type tag (1 = signed 64-bit integer)
//!      6     2  padding, zero
//!      8     4  message tag
//!     12     4  source rank
//!     16     4  destination rank
//!     20     8  payload length in elements
//!     28     8  reserved, zero
//!     36     4  trailing pad to the fixed 40-byte header
//!     40     …  payload: length × 8-byte little-endian signed integers
//! ```
//!
//! All multi-byte fields are little endian. The layout is pinned by a
//! golden-vector test; changing any byte is a wire break.

use crate::transport::TransportError;
use crate::Element;

pub const WIRE_MAGIC: u32 = 0x4D53_4F52;
pub const WIRE_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 40;

/// Refuse to allocate payloads beyond this many elements (2 GiB of data);
/// anything larger is a corrupt or hostile frame.
pub const MAX_PAYLOAD_ELEMENTS: u64 = 1 << 28;

/// Tag for the payload element type. Only 64-bit signed integers exist
/// today; the tag keeps the wire self-describing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ElementType {
    I64 = 1,
}

impl ElementType {
    fn from_wire(byte: u8) -> Result<Self, TransportError> {
        match byte {
            1 => Ok(ElementType::I64),
            other => Err(TransportError::BadElementType { found: other }),
        }
    }
}

/// One point-to-point message: payload plus addressing metadata.
///
/// `source_rank != dest_rank` always; self-addressed envelopes are
/// rejected at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub payload: Vec<Element>,
    pub element_type: ElementType,
    pub message_tag: u32,
    pub source_rank: u32,
    pub dest_rank: u32,
}

impl Envelope {
    pub fn new(
        payload: Vec<Element>,
        message_tag: u32,
        source_rank: u32,
        dest_rank: u32,
    ) -> Result<Self, TransportError> {
        if source_rank == dest_rank {
            return Err(TransportError::SelfMessage {
                rank: source_rank as usize,
            });
        }
        Ok(Envelope {
            payload,
            element_type: ElementType::I64,
            message_tag,
            source_rank,
            dest_rank,
        })
    }

    /// Payload length in elements, as carried in the header.
    pub fn len(&self) -> u64 {
        self.payload.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }
}

/// Header fields of a frame, decoded ahead of the payload so readers can
/// size their buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameHeader {
    pub element_type: ElementType,
    pub message_tag: u32,
    pub source_rank: u32,
    pub dest_rank: u32,
    pub length: u64,
}

pub fn encode_header(envelope: &Envelope) -> [u8; HEADER_LEN] {
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(&WIRE_MAGIC.to_le_bytes());
    header[4] = WIRE_VERSION;
    header[5] = envelope.element_type as u8;
    // bytes 6..8 stay zero (padding)
    header[8..12].copy_from_slice(&envelope.message_tag.to_le_bytes());
    header[12..16].copy_from_slice(&envelope.source_rank.to_le_bytes());
    header[16..20].copy_from_slice(&envelope.dest_rank.to_le_bytes());
    header[20..28].copy_from_slice(&envelope.len().to_le_bytes());
    // bytes 28..36 reserved, 36..40 pad — all zero
    header
}

pub fn decode_header(header: &[u8; HEADER_LEN]) -> Result<FrameHeader, TransportError> {
    let magic = u32::from_le_bytes(header[0..4].try_into().unwrap());
    if magic != WIRE_MAGIC {
        return Err(TransportError::BadMagic { found: magic });
    }
    if header[4] != WIRE_VERSION {
        return Err(TransportError::BadVersion { found: header[4] });
    }
    let element_type = ElementType::from_wire(header[5])?;
    let length = u64::from_le_bytes(header[20..28].try_into().unwrap());
    if length > MAX_PAYLOAD_ELEMENTS {
        return Err(TransportError::PayloadTooLarge { length });
    }
    Ok(FrameHeader {
        element_type,
        message_tag: u32::from_le_bytes(header[8..12].try_into().unwrap()),
        source_rank: u32::from_le_bytes(header[12..16].try_into().unwrap()),
        dest_rank: u32::from_le_bytes(header[16..20].try_into().unwrap()),
        length,
    })
}

/// Serializes a whole frame: header followed by the payload bytes.
pub fn encode_envelope(envelope: &Envelope) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + envelope.payload.len() * 8);
    out.extend_from_slice(&encode_header(envelope));
    for value in &envelope.payload {
        out.extend_from_slice(&value.to_le_bytes());
    }
    out
}

pub fn decode_payload(header: &FrameHeader, bytes: &[u8]) -> Result<Vec<Element>, TransportError> {
    if bytes.len() as u64 != header.length * 8 {
        return Err(TransportError::TruncatedFrame);
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|chunk| Element::from_le_bytes(chunk.try_into().unwrap()))
        .collect())
}

/// Deserializes a frame produced by [`encode_envelope`]. The buffer must
/// hold exactly one frame.
pub fn decode_envelope(bytes: &[u8]) -> Result<Envelope, TransportError> {
    if bytes.len() < HEADER_LEN {
        return Err(TransportError::TruncatedFrame);
    }
    let header_bytes: &[u8; HEADER_LEN] = bytes[..HEADER_LEN].try_into().unwrap();
    let header = decode_header(header_bytes)?;
    let payload = decode_payload(&header, &bytes[HEADER_LEN..])?;
    if header.source_rank == header.dest_rank {
        return Err(TransportError::SelfMessage {
            rank: header.source_rank as usize,
        });
    }
    Ok(Envelope {
        payload,
        element_type: header.element_type,
        message_tag: header.message_tag,
        source_rank: header.source_rank,
        dest_rank: header.dest_rank,
    })
}
