//! Packed depth pixel format: 13 bits of depth in millimeters in the high
//! bits, 3 bits of player id mask in the low bits.

/// Maximum representable depth in millimeters.
pub const MAX_DEPTH_MM: u16 = 8191;
/// Maximum player id (0 = background).
pub const MAX_PLAYER_ID: u8 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelError {
    DepthOutOfRange { depth_mm: u16 },
    PlayerIdOutOfRange { player_id: u8 },
}

impl core::fmt::Display for PixelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PixelError::DepthOutOfRange { depth_mm } => {
                write!(f, "depth {depth_mm} mm exceeds 13-bit range")
            }
            PixelError::PlayerIdOutOfRange { player_id } => {
                write!(f, "player id {player_id} exceeds 3-bit range")
            }
        }
    }
}

/// Pack a depth sample and player id into one 16-bit pixel.
pub fn pack_depth_pixel(depth_mm: u16, player_id: u8) -> Result<u16, PixelError> {
    if depth_mm > MAX_DEPTH_MM {
        return Err(PixelError::DepthOutOfRange { depth_mm });
    }
    if player_id > MAX_PLAYER_ID {
        return Err(PixelError::PlayerIdOutOfRange { player_id });
    }
    Ok((depth_mm << 3) | player_id as u16)
}

/// Inverse of [`pack_depth_pixel`]; total on all 16-bit values.
pub fn unpack_depth_pixel(packed: u16) -> (u16, u8) {
    (packed >> 3, (packed & 0x7) as u8)
}
