use std::net::SocketAddr;
use std::time::Instant;

use super::{ByteOrder, SktError, SktVariableSchema, WordKind};

/// One 32-bit value as carried on the wire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SktWord {
    Float(f32),
    Int(i32),
}

impl SktWord {
    pub fn value(self) -> f64 {
        match self {
            SktWord::Float(f) => f64::from(f),
            SktWord::Int(i) => f64::from(i),
        }
    }

    fn to_bits(self) -> u32 {
        match self {
            SktWord::Float(f) => f.to_bits(),
            SktWord::Int(i) => i as u32,
        }
    }
}

/// A decoded frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SktPacket {
    pub words: Vec<SktWord>,
    pub source: Option<SocketAddr>,
    pub received_at: Option<Instant>,
}

impl SktPacket {
    pub fn values(&self) -> Vec<f64> {
        self.words.iter().map(|w| w.value()).collect()
    }
}

/// Encodes one frame: four bytes per schema variable, IEEE-754 single
/// precision for FLOAT32 and two's complement for INT32, in the schema's
/// byte order.
///
/// FLOAT32 values are rounded to single precision; INT32 values must be
/// integral and in range.
pub fn encode_packet(values: &[f64], schema: &SktVariableSchema) -> Result<Vec<u8>, SktError> {
    if values.len() != schema.len() {
        return Err(SktError::ArityMismatch { expected: schema.len(), got: values.len() });
    }
    let mut out = Vec::with_capacity(schema.frame_len());
    for (index, (&value, var)) in values.iter().zip(schema.variables()).enumerate() {
        if !value.is_finite() {
            return Err(SktError::NonFinite { index, value });
        }
        let word = match var.kind {
            WordKind::Float32 => {
                let f = value as f32;
                if !f.is_finite() {
                    return Err(SktError::NonFinite { index, value });
                }
                SktWord::Float(f)
            }
            WordKind::Int32 => {
                if value.fract() != 0.0 || value < f64::from(i32::MIN) || value > f64::from(i32::MAX) {
                    return Err(SktError::NotAnInt32 { index, value });
                }
                SktWord::Int(value as i32)
            }
        };
        let bits = word.to_bits();
        match schema.byte_order() {
            ByteOrder::Big => out.extend_from_slice(&bits.to_be_bytes()),
            ByteOrder::Little => out.extend_from_slice(&bits.to_le_bytes()),
        }
    }
    Ok(out)
}

/// Decodes exactly one frame. Frames carrying a NaN float are refused so the
/// caller can drop and count them.
pub fn decode_packet(bytes: &[u8], schema: &SktVariableSchema) -> Result<SktPacket, SktError> {
    if bytes.len() != schema.frame_len() {
        return Err(SktError::FrameLength { expected: schema.frame_len(), got: bytes.len() });
    }
    let mut words = Vec::with_capacity(schema.len());
    for (index, (chunk, var)) in bytes.chunks_exact(4).zip(schema.variables()).enumerate() {
        let raw: [u8; 4] = chunk.try_into().expect("chunks_exact yields 4 bytes");
        let bits = match schema.byte_order() {
            ByteOrder::Big => u32::from_be_bytes(raw),
            ByteOrder::Little => u32::from_le_bytes(raw),
        };
        let word = match var.kind {
            WordKind::Float32 => {
                let f = f32::from_bits(bits);
                if f.is_nan() {
                    return Err(SktError::NotANumber { index });
                }
                SktWord::Float(f)
            }
            WordKind::Int32 => SktWord::Int(bits as i32),
        };
        words.push(word);
    }
    Ok(SktPacket { words, source: None, received_at: None })
}

/// Splits a TCP byte stream into fixed-size frames, buffering partial frames
/// across reads.
#[derive(Debug, Clone)]
pub struct FrameDecoder {
    frame_len: usize,
    pending: Vec<u8>,
}

impl FrameDecoder {
    pub fn new(frame_len: usize) -> Self {
        assert!(frame_len > 0, "frame length must be positive");
        Self { frame_len, pending: Vec::with_capacity(frame_len) }
    }

    /// Appends `bytes` and returns every frame completed by them, in order.
    pub fn push(&mut self, bytes: &[u8]) -> Vec<Vec<u8>> {
        self.pending.extend_from_slice(bytes);
        let complete = self.pending.len() / self.frame_len * self.frame_len;
        let frames = self.pending[..complete].chunks_exact(self.frame_len).map(<[u8]>::to_vec).collect();
        self.pending.drain(..complete);
        frames
    }

    /// Bytes of an incomplete frame waiting for more input.
    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Ends the stream. Leftover bytes form a malformed frame.
    pub fn finish(self) -> Result<(), SktError> {
        if self.pending.is_empty() {
            Ok(())
        } else {
            Err(SktError::MalformedFrame { leftover: self.pending.len(), frame_len: self.frame_len })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skt::Target;
    use proptest::prelude::*;

    fn one_float() -> SktVariableSchema {
        SktVariableSchema::single("x", WordKind::Float32, Target::Insolation)
    }

    fn one_int() -> SktVariableSchema {
        SktVariableSchema::single("n", WordKind::Int32, Target::Ignored)
    }

    #[test]
    fn golden_vectors() {
        assert_eq!(encode_packet(&[1.0], &one_float()).unwrap(), [0x3F, 0x80, 0x00, 0x00]);
        assert_eq!(
            encode_packet(&[1000.0, 25.0], &SktVariableSchema::default()).unwrap(),
            [0x44, 0x7A, 0x00, 0x00, 0x41, 0xC8, 0x00, 0x00]
        );
        assert_eq!(encode_packet(&[1.0], &one_int()).unwrap(), [0x00, 0x00, 0x00, 0x01]);
        assert_eq!(encode_packet(&[-2.0], &one_int()).unwrap(), [0xFF, 0xFF, 0xFF, 0xFE]);
        assert_eq!(decode_packet(&[0x3F, 0x80, 0x00, 0x00], &one_float()).unwrap().values(), [1.0]);
    }

    #[test]
    fn little_endian_option() {
        let schema = SktVariableSchema::default().with_byte_order(ByteOrder::Little);
        let bytes = encode_packet(&[1000.0, 25.0], &schema).unwrap();
        assert_eq!(bytes, [0x00, 0x00, 0x7A, 0x44, 0x00, 0x00, 0xC8, 0x41]);
        assert_eq!(decode_packet(&bytes, &schema).unwrap().values(), [1000.0, 25.0]);
    }

    #[test]
    fn encode_rejections() {
        let s = SktVariableSchema::default();
        assert_eq!(encode_packet(&[1.0], &s), Err(SktError::ArityMismatch { expected: 2, got: 1 }));
        assert!(matches!(encode_packet(&[f64::NAN, 1.0], &s), Err(SktError::NonFinite { index: 0, .. })));
        assert!(matches!(encode_packet(&[1.0, f64::INFINITY], &s), Err(SktError::NonFinite { index: 1, .. })));
        assert!(matches!(encode_packet(&[1e300, 1.0], &s), Err(SktError::NonFinite { index: 0, .. })));
        assert!(matches!(encode_packet(&[1.5], &one_int()), Err(SktError::NotAnInt32 { .. })));
        assert!(matches!(encode_packet(&[3e9], &one_int()), Err(SktError::NotAnInt32 { .. })));
    }

    #[test]
    fn decode_rejects_nan_and_bad_lengths() {
        let nan = f32::NAN.to_bits().to_be_bytes();
        assert_eq!(decode_packet(&nan, &one_float()), Err(SktError::NotANumber { index: 0 }));
        // The same bits are a perfectly good INT32.
        assert!(decode_packet(&nan, &one_int()).is_ok());
        assert!(matches!(decode_packet(&[0; 7], &SktVariableSchema::default()), Err(SktError::FrameLength { .. })));
    }

    #[test]
    fn fragments_assemble_into_one_frame() {
        let bytes = encode_packet(&[1000.0, 25.0], &SktVariableSchema::default()).unwrap();
        let mut dec = FrameDecoder::new(8);
        assert!(dec.push(&bytes[..6]).is_empty());
        assert_eq!(dec.pending(), 6);
        let frames = dec.push(&bytes[6..]);
        assert_eq!(frames, vec![bytes]);
        assert!(dec.finish().is_ok());
    }

    #[test]
    fn leftover_bytes_are_malformed() {
        let mut dec = FrameDecoder::new(8);
        dec.push(&[1, 2, 3]);
        assert_eq!(dec.finish(), Err(SktError::MalformedFrame { leftover: 3, frame_len: 8 }));
    }

    fn finite_f32() -> impl Strategy<Value = f32> {
        any::<u32>().prop_map(f32::from_bits).prop_filter("finite", |f| f.is_finite())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn round_trip_finite_floats(a in finite_f32(), b in finite_f32()) {
            let s = SktVariableSchema::default();
            let bytes = encode_packet(&[f64::from(a), f64::from(b)], &s).unwrap();
            let back = decode_packet(&bytes, &s).unwrap();
            prop_assert_eq!(back.words, vec![SktWord::Float(a), SktWord::Float(b)]);
        }
    }

    proptest! {
        #[test]
        fn round_trip_ints(n in any::<i32>()) {
            let bytes = encode_packet(&[f64::from(n)], &one_int()).unwrap();
            prop_assert_eq!(decode_packet(&bytes, &one_int()).unwrap().words, vec![SktWord::Int(n)]);
        }

        #[test]
        fn framing_is_partition_invariant(
            values in proptest::collection::vec((0.0f32..1600.0, -40.0f32..90.0), 1..40),
            cuts in proptest::collection::vec(1usize..13, 1..200),
        ) {
            let s = SktVariableSchema::default();
            let stream: Vec<u8> = values
                .iter()
                .flat_map(|&(g, t)| encode_packet(&[f64::from(g), f64::from(t)], &s).unwrap())
                .collect();
            let mut dec = FrameDecoder::new(s.frame_len());
            let mut decoded = Vec::new();
            let mut pos = 0;
            let mut cut = cuts.iter().cycle();
            while pos < stream.len() {
                let end = (pos + cut.next().unwrap()).min(stream.len());
                for frame in dec.push(&stream[pos..end]) {
                    decoded.push(decode_packet(&frame, &s).unwrap().values());
                }
                pos = end;
            }
            prop_assert!(dec.finish().is_ok());
            let expected: Vec<Vec<f64>> = values.iter().map(|&(g, t)| vec![f64::from(g), f64::from(t)]).collect();
            prop_assert_eq!(decoded, expected);
        }
    }
}
