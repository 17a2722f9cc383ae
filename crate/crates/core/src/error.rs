use std::fmt;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The k-search reached its ceiling without meeting the error bound.
    #[error("no k up to the ceiling {ceiling} meets the error bound")]
    CeilingExceeded { ceiling: u64 },

    /// A k-search was stopped through its cancellation token.
    #[error("k search cancelled")]
    Cancelled,

    /// A finite sample source ran out of bits.
    #[error("sample stream exhausted after {consumed} bits ({bytes_read} bytes read)")]
    Exhausted { consumed: u64, bytes_read: u64 },

    /// A bit file contained something other than '0', '1' or whitespace.
    #[error("invalid byte {} at offset {offset} in bit stream", DisplayByte(*byte))]
    Format { offset: u64, byte: u8 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

struct DisplayByte(u8);

impl fmt::Display for DisplayByte {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_ascii_graphic() {
            write!(f, "{:?} ({:#04x})", self.0 as char, self.0)
        } else {
            write!(f, "{:#04x}", self.0)
        }
    }
}
