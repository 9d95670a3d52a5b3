use std::io::Read;

use crate::error::{Error, Result};

/// `read_exact` that reports a short stream as corruption.
pub(crate) fn read_exact_or_corrupt(source: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    source.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Corruption(format!("truncated {what}")),
        _ => Error::Io(e),
    })
}
