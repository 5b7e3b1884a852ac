//! Fixed-width wire format for compressed messages.
//!
//! Layout, little-endian bit order (first bit written is the least
//! significant bit of byte 0):
//!
//! ```text
//! support_size : ⌈log₂(d+1)⌉ bits
//! indices      : ⌈log₂ d⌉ bits each, ascending, omitted when support_size = d
//! values       : 32 bits (f32) or 9 bits (natural) each
//! ```
//!
//! A natural value is a sign bit followed by an 8-bit exponent code `c`:
//! `c = 0` is zero, otherwise the value is `±2^(c − 128)`.
//!
//! The payload after the header is exactly [`super::encoded_bits`] long.

use super::{binary_exponent, ceil_log2, CompressedMessage, ValueCoding, NATURAL_MIN_EXP};
use crate::error::{Error, Result};

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value >> width == 0);
        for b in 0..width {
            let bit = ((value >> b) & 1) as u8;
            let byte = (self.bit_len / 8) as usize;
            if byte == self.bytes.len() {
                self.bytes.push(0);
            }
            self.bytes[byte] |= bit << (self.bit_len % 8);
            self.bit_len += 1;
        }
    }

    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn read(&mut self, width: u32) -> Result<u64> {
        let mut value = 0u64;
        for b in 0..width {
            let byte = (self.pos / 8) as usize;
            let Some(&v) = self.bytes.get(byte) else {
                return Err(Error::Codec("unexpected end of stream".into()));
            };
            value |= (((v >> (self.pos % 8)) & 1) as u64) << b;
            self.pos += 1;
        }
        Ok(value)
    }

    pub fn position(&self) -> u64 {
        self.pos
    }
}

/// Width of the support-size header for dimension `d`.
pub fn header_bits(d: usize) -> u32 {
    ceil_log2(d + 1)
}

#[derive(Debug, Clone)]
pub struct EncodedMessage {
    pub bytes: Vec<u8>,
    pub bit_len: u64,
}

impl EncodedMessage {
    /// Bits following the support-size header.
    pub fn payload_bits(&self, d: usize) -> u64 {
        self.bit_len - header_bits(d) as u64
    }
}

fn natural_code(v: f64) -> Result<u64> {
    let sign = u64::from(v.is_sign_negative());
    if v == 0.0 {
        return Ok(sign);
    }
    let a = v.abs();
    let e = binary_exponent(a);
    if a != f64::from_bits(((e + 1023) as u64) << 52) || !(NATURAL_MIN_EXP..=127).contains(&e) {
        return Err(Error::Codec(format!("{v} is not an encodable power of two")));
    }
    Ok(sign | (((e + 128) as u64) << 1))
}

fn natural_value(code: u64) -> f64 {
    let negative = code & 1 == 1;
    let c = (code >> 1) as i32;
    let magnitude = if c == 0 { 0.0 } else { f64::from_bits(((c - 128 + 1023) as u64) << 52) };
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

pub fn encode(msg: &CompressedMessage) -> Result<EncodedMessage> {
    let d = msg.dim;
    let s = msg.indices.len();
    if s > d || msg.values.len() != s {
        return Err(Error::Codec("support larger than dimension".into()));
    }
    let mut w = BitWriter::new();
    w.write(s as u64, header_bits(d));
    if s < d {
        let width = ceil_log2(d);
        let mut prev = None;
        for &i in &msg.indices {
            if i >= d || prev.is_some_and(|p| p >= i) {
                return Err(Error::Codec("indices must be ascending and below d".into()));
            }
            prev = Some(i);
            w.write(i as u64, width);
        }
    }
    for &v in &msg.values {
        match msg.coding {
            ValueCoding::Float32 => w.write((v as f32).to_bits() as u64, 32),
            ValueCoding::Natural => w.write(natural_code(v)?, 9),
        }
    }
    let bit_len = w.bit_len();
    Ok(EncodedMessage { bytes: w.into_bytes(), bit_len })
}

/// Decodes a message over R^d. Float-coded values come back at single
/// precision.
pub fn decode(bytes: &[u8], d: usize, coding: ValueCoding) -> Result<CompressedMessage> {
    let mut r = BitReader::new(bytes);
    let s = r.read(header_bits(d))? as usize;
    if s > d {
        return Err(Error::Codec(format!("support size {s} exceeds dimension {d}")));
    }
    let indices = if s < d {
        let width = ceil_log2(d);
        (0..s).map(|_| r.read(width).map(|v| v as usize)).collect::<Result<Vec<_>>>()?
    } else {
        (0..d).collect()
    };
    let values = (0..s)
        .map(|_| match coding {
            ValueCoding::Float32 => r.read(32).map(|b| f32::from_bits(b as u32) as f64),
            ValueCoding::Natural => r.read(9).map(natural_value),
        })
        .collect::<Result<Vec<_>>>()?;
    let bit_length = r.position() - header_bits(d) as u64;
    Ok(CompressedMessage { dim: d, indices, values, coding, bit_length })
}
