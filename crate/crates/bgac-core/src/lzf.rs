//! LZF block codec in the standard libLZF token format: literal runs and
//! back-references, no framing. Compressed depth frames written by other
//! tools in this format decode here and vice versa.

use alloc::vec::Vec;

/// Errors produced while decoding a compressed block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LzfError {
    /// Control byte or run extends past the end of the input.
    TruncatedInput { at: usize },
    /// Back-reference points before the start of the output.
    BadBackref { at: usize },
}

impl core::fmt::Display for LzfError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            LzfError::TruncatedInput { at } => {
                write!(f, "lzf stream truncated at input byte {at}")
            }
            LzfError::BadBackref { at } => {
                write!(f, "lzf back-reference out of range at input byte {at}")
            }
        }
    }
}

const HASH_LOG: usize = 14;
const HASH_SIZE: usize = 1 << HASH_LOG;
const MAX_OFF: usize = 1 << 13;
const MAX_REF: usize = (1 << 8) + (1 << 3); // 264
const MAX_LIT: usize = 1 << 5;

#[inline]
fn first3(data: &[u8], i: usize) -> u32 {
    (data[i] as u32) << 16 | (data[i + 1] as u32) << 8 | data[i + 2] as u32
}

#[inline]
fn hash(h: u32) -> usize {
    ((h.wrapping_mul(0x9E37_79B1)) >> (32 - HASH_LOG as u32)) as usize & (HASH_SIZE - 1)
}

/// Compress `raw` into a fresh buffer. Incompressible input grows by at
/// most one control byte per 32 literals.
pub fn compress(raw: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(raw.len() / 2 + 16);
    let mut table = [usize::MAX; HASH_SIZE];

    let mut pos = 0usize;
    let mut lit_start = 0usize;

    while pos + 2 < raw.len() {
        let h = hash(first3(raw, pos));
        let candidate = table[h];
        table[h] = pos;

        if candidate != usize::MAX
            && candidate < pos
            && pos - candidate <= MAX_OFF
            && raw[candidate..candidate + 3] == raw[pos..pos + 3]
        {
            // Extend the match.
            let mut len = 3;
            let max_len = MAX_REF.min(raw.len() - pos);
            while len < max_len && raw[candidate + len] == raw[pos + len] {
                len += 1;
            }

            flush_literals(&mut out, &raw[lit_start..pos]);

            let off = pos - candidate - 1;
            if len - 2 < 7 {
                out.push((((len - 2) << 5) | (off >> 8)) as u8);
            } else {
                out.push(((7 << 5) | (off >> 8)) as u8);
                out.push((len - 2 - 7) as u8);
            }
            out.push((off & 0xFF) as u8);

            // Seed the table with positions inside the match so later
            // matches can reference them.
            let end = pos + len;
            pos += 1;
            while pos < end && pos + 2 < raw.len() {
                table[hash(first3(raw, pos))] = pos;
                pos += 1;
            }
            pos = end;
            lit_start = pos;
        } else {
            pos += 1;
        }
    }

    flush_literals(&mut out, &raw[lit_start..]);
    out
}

fn flush_literals(out: &mut Vec<u8>, mut lits: &[u8]) {
    while !lits.is_empty() {
        let n = lits.len().min(MAX_LIT);
        out.push((n - 1) as u8);
        out.extend_from_slice(&lits[..n]);
        lits = &lits[n..];
    }
}

/// Decompress a full LZF block into a fresh buffer.
pub fn decompress(compressed: &[u8]) -> Result<Vec<u8>, LzfError> {
    let mut out = Vec::with_capacity(compressed.len() * 3);
    let mut pos = 0usize;

    while pos < compressed.len() {
        let token_at = pos;
        let ctrl = compressed[pos] as usize;
        pos += 1;

        if ctrl < MAX_LIT {
            let run = ctrl + 1;
            if pos + run > compressed.len() {
                return Err(LzfError::TruncatedInput { at: token_at });
            }
            out.extend_from_slice(&compressed[pos..pos + run]);
            pos += run;
        } else {
            let mut len = ctrl >> 5;
            if len == 7 {
                if pos >= compressed.len() {
                    return Err(LzfError::TruncatedInput { at: token_at });
                }
                len += compressed[pos] as usize;
                pos += 1;
            }
            len += 2;

            if pos >= compressed.len() {
                return Err(LzfError::TruncatedInput { at: token_at });
            }
            let off = ((ctrl & 0x1F) << 8 | compressed[pos] as usize) + 1;
            pos += 1;

            if off > out.len() {
                return Err(LzfError::BadBackref { at: token_at });
            }
            let mut src = out.len() - off;
            for _ in 0..len {
                let b = out[src];
                out.push(b);
                src += 1;
            }
        }
    }

    Ok(out)
}
