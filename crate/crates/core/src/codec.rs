//! CBOR (RFC 8949) codec restricted to the JSON data model.
//!
//! The encoder always emits preferred serialization: shortest argument
//! encodings, definite lengths and the narrowest float width that preserves
//! the value. Map keys come out in the order of the JSON object, which for
//! `serde_json::Map` is lexicographic.
//!
//! The decoder accepts any well-formed definite-length item that has a JSON
//! equivalent. Byte strings, tags, non-text map keys, `undefined`, other
//! simple values and non-finite floats are reported as
//! [`CodecError::UnsupportedItem`].

use alloc::string::String;
use alloc::vec::Vec;

use serde_json::{Map, Number, Value};

use crate::error::CodecError;

const MAX_DEPTH: usize = 128;

const MAJOR_UNSIGNED: u8 = 0;
const MAJOR_NEGATIVE: u8 = 1;
const MAJOR_BYTES: u8 = 2;
const MAJOR_TEXT: u8 = 3;
const MAJOR_ARRAY: u8 = 4;
const MAJOR_MAP: u8 = 5;
const MAJOR_TAG: u8 = 6;
const MAJOR_SIMPLE: u8 = 7;

pub fn encode_cbor(document: &Value) -> Vec<u8> {
    let mut out = Vec::new();
    encode_into(document, &mut out);
    out
}

pub fn encode_into(document: &Value, out: &mut Vec<u8>) {
    match document {
        Value::Null => out.push(0xf6),
        Value::Bool(false) => out.push(0xf4),
        Value::Bool(true) => out.push(0xf5),
        Value::Number(n) => encode_number(n, out),
        Value::String(s) => {
            write_head(MAJOR_TEXT, s.len() as u64, out);
            out.extend_from_slice(s.as_bytes());
        }
        Value::Array(items) => {
            write_head(MAJOR_ARRAY, items.len() as u64, out);
            for item in items {
                encode_into(item, out);
            }
        }
        Value::Object(map) => {
            write_head(MAJOR_MAP, map.len() as u64, out);
            for (k, v) in map {
                write_head(MAJOR_TEXT, k.len() as u64, out);
                out.extend_from_slice(k.as_bytes());
                encode_into(v, out);
            }
        }
    }
}

fn write_head(major: u8, arg: u64, out: &mut Vec<u8>) {
    let m = major << 5;
    if arg < 24 {
        out.push(m | arg as u8);
    } else if arg <= u8::MAX as u64 {
        out.extend_from_slice(&[m | 24, arg as u8]);
    } else if arg <= u16::MAX as u64 {
        out.push(m | 25);
        out.extend_from_slice(&(arg as u16).to_be_bytes());
    } else if arg <= u32::MAX as u64 {
        out.push(m | 26);
        out.extend_from_slice(&(arg as u32).to_be_bytes());
    } else {
        out.push(m | 27);
        out.extend_from_slice(&arg.to_be_bytes());
    }
}

fn encode_number(n: &Number, out: &mut Vec<u8>) {
    if let Some(u) = n.as_u64() {
        write_head(MAJOR_UNSIGNED, u, out);
    } else if let Some(i) = n.as_i64() {
        // i < 0 here; the CBOR argument is -1 - i.
        write_head(MAJOR_NEGATIVE, !(i as u64), out);
    } else {
        let f = n.as_f64().unwrap_or(0.0);
        encode_float(f, out);
    }
}

fn encode_float(f: f64, out: &mut Vec<u8>) {
    if let Some(h) = f16_bits_exact(f) {
        out.push(0xf9);
        out.extend_from_slice(&h.to_be_bytes());
    } else if (f as f32) as f64 == f {
        out.push(0xfa);
        out.extend_from_slice(&(f as f32).to_bits().to_be_bytes());
    } else {
        out.push(0xfb);
        out.extend_from_slice(&f.to_bits().to_be_bytes());
    }
}

/// Half-precision bits of `f` when the conversion is lossless.
fn f16_bits_exact(f: f64) -> Option<u16> {
    if !f.is_finite() {
        return None;
    }
    let sign: u16 = if f.is_sign_negative() { 0x8000 } else { 0 };
    let a = f.abs();
    if a == 0.0 {
        return Some(sign);
    }
    // Subnormal halves are m * 2^-24 with m < 1024.
    let scaled = a * 16_777_216.0;
    if scaled < 1024.0 {
        return (libm::trunc(scaled) == scaled).then_some(sign | scaled as u16);
    }
    let bits = a.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32 - 1023;
    let mant = bits & ((1u64 << 52) - 1);
    if !(-14..=15).contains(&exp) || mant & ((1u64 << 42) - 1) != 0 {
        return None;
    }
    Some(sign | (((exp + 15) as u16) << 10) | (mant >> 42) as u16)
}

fn f16_to_f64(h: u16) -> f64 {
    let negative = h & 0x8000 != 0;
    let exp = (h >> 10) & 0x1f;
    let mant = (h & 0x3ff) as u64;
    let magnitude = match exp {
        0 => mant as f64 * 5.960_464_477_539_063e-8,
        31 if mant == 0 => f64::INFINITY,
        31 => f64::NAN,
        _ => f64::from_bits((((exp as i64 - 15 + 1023) as u64) << 52) | (mant << 42)),
    };
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

pub fn decode_cbor(bytes: &[u8]) -> Result<Value, CodecError> {
    let mut d = Decoder { buf: bytes, pos: 0 };
    let v = d.item(0)?;
    if d.pos != bytes.len() {
        return Err(CodecError::Decode {
            offset: d.pos,
            reason: "trailing bytes after top-level item",
        });
    }
    Ok(v)
}

struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    fn eof(&self) -> CodecError {
        CodecError::Decode {
            offset: self.pos,
            reason: "unexpected end of input",
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| self.eof())?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn argument(&mut self, ai: u8, start: usize) -> Result<u64, CodecError> {
        Ok(match ai {
            0..=23 => ai as u64,
            24 => self.take(1)?[0] as u64,
            25 => u16::from_be_bytes(self.take(2)?.try_into().unwrap()) as u64,
            26 => u32::from_be_bytes(self.take(4)?.try_into().unwrap()) as u64,
            27 => u64::from_be_bytes(self.take(8)?.try_into().unwrap()),
            _ => {
                return Err(CodecError::Decode {
                    offset: start,
                    reason: "reserved additional information value",
                })
            }
        })
    }

    /// Container lengths can never exceed the bytes left, since every item
    /// takes at least one byte. Checking up front bounds allocations.
    fn container_len(&self, len: u64, per_item: u64, start: usize) -> Result<usize, CodecError> {
        let remaining = (self.buf.len() - self.pos) as u64;
        match len.checked_mul(per_item) {
            Some(need) if need <= remaining => Ok(len as usize),
            _ => Err(CodecError::Decode {
                offset: start,
                reason: "declared length exceeds input",
            }),
        }
    }

    fn item(&mut self, depth: usize) -> Result<Value, CodecError> {
        let start = self.pos;
        if depth > MAX_DEPTH {
            return Err(CodecError::Decode {
                offset: start,
                reason: "nesting too deep",
            });
        }
        let ib = *self.buf.get(self.pos).ok_or_else(|| self.eof())?;
        self.pos += 1;
        let major = ib >> 5;
        let ai = ib & 0x1f;
        if ai == 31 {
            return Err(match major {
                MAJOR_BYTES | MAJOR_TEXT | MAJOR_ARRAY | MAJOR_MAP => CodecError::UnsupportedItem {
                    offset: start,
                    item: "indefinite-length item",
                },
                MAJOR_SIMPLE => CodecError::Decode {
                    offset: start,
                    reason: "break outside an indefinite-length item",
                },
                _ => CodecError::Decode {
                    offset: start,
                    reason: "indefinite length is not allowed for this major type",
                },
            });
        }
        if major == MAJOR_SIMPLE {
            return self.simple(ai, start);
        }
        let arg = self.argument(ai, start)?;
        match major {
            MAJOR_UNSIGNED => Ok(Value::Number(arg.into())),
            MAJOR_NEGATIVE => {
                if arg > i64::MAX as u64 {
                    return Err(CodecError::UnsupportedItem {
                        offset: start,
                        item: "negative integer below the 64-bit signed range",
                    });
                }
                Ok(Value::Number((-1 - arg as i64).into()))
            }
            MAJOR_BYTES => Err(CodecError::UnsupportedItem {
                offset: start,
                item: "byte string",
            }),
            MAJOR_TEXT => Ok(Value::String(self.text(arg, start)?)),
            MAJOR_ARRAY => {
                let len = self.container_len(arg, 1, start)?;
                let mut items = Vec::with_capacity(len);
                for _ in 0..len {
                    items.push(self.item(depth + 1)?);
                }
                Ok(Value::Array(items))
            }
            MAJOR_MAP => {
                let len = self.container_len(arg, 2, start)?;
                let mut map = Map::new();
                for _ in 0..len {
                    let key_start = self.pos;
                    let kb = *self.buf.get(self.pos).ok_or_else(|| self.eof())?;
                    if kb >> 5 != MAJOR_TEXT || kb & 0x1f == 31 {
                        return Err(CodecError::UnsupportedItem {
                            offset: key_start,
                            item: "map key that is not a definite-length text string",
                        });
                    }
                    self.pos += 1;
                    let klen = self.argument(kb & 0x1f, key_start)?;
                    let key = self.text(klen, key_start)?;
                    let value = self.item(depth + 1)?;
                    if map.insert(key, value).is_some() {
                        return Err(CodecError::UnsupportedItem {
                            offset: key_start,
                            item: "duplicate map key",
                        });
                    }
                }
                Ok(Value::Object(map))
            }
            MAJOR_TAG => Err(CodecError::UnsupportedItem {
                offset: start,
                item: "tag",
            }),
            _ => unreachable!("major type is three bits"),
        }
    }

    fn text(&mut self, len: u64, start: usize) -> Result<String, CodecError> {
        let len = self.container_len(len, 1, start)?;
        let raw = self.take(len)?;
        core::str::from_utf8(raw).map(String::from).map_err(|_| CodecError::Decode {
            offset: start,
            reason: "text string is not valid UTF-8",
        })
    }

    fn simple(&mut self, ai: u8, start: usize) -> Result<Value, CodecError> {
        let float = |f: f64| {
            Number::from_f64(f).map(Value::Number).ok_or(CodecError::UnsupportedItem {
                offset: start,
                item: "non-finite float",
            })
        };
        match ai {
            20 => Ok(Value::Bool(false)),
            21 => Ok(Value::Bool(true)),
            22 => Ok(Value::Null),
            23 => Err(CodecError::UnsupportedItem {
                offset: start,
                item: "undefined",
            }),
            24 => {
                let v = self.take(1)?[0];
                if v < 32 {
                    Err(CodecError::Decode {
                        offset: start,
                        reason: "two-byte encoding of a simple value below 32",
                    })
                } else {
                    Err(CodecError::UnsupportedItem {
                        offset: start,
                        item: "simple value",
                    })
                }
            }
            25 => {
                let h = u16::from_be_bytes(self.take(2)?.try_into().unwrap());
                float(f16_to_f64(h))
            }
            26 => {
                let bits = u32::from_be_bytes(self.take(4)?.try_into().unwrap());
                float(f32::from_bits(bits) as f64)
            }
            27 => {
                let bits = u64::from_be_bytes(self.take(8)?.try_into().unwrap());
                float(f64::from_bits(bits))
            }
            28..=30 => Err(CodecError::Decode {
                offset: start,
                reason: "reserved additional information value",
            }),
            _ => Err(CodecError::UnsupportedItem {
                offset: start,
                item: "simple value",
            }),
        }
    }
}

/// Canonical JSON text: sorted keys, no insignificant whitespace, shortest
/// round-trip float formatting.
pub fn canonical_json(document: &Value) -> String {
    // serde_json's map is ordered by key and its float formatting is the
    // shortest round-trip representation.
    serde_json::to_string(document).expect("JSON values always serialize")
}
