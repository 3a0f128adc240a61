//! Binary field snapshots: `b"SCHG"`, little-endian `u32` N, then N `f64` values.

use std::io::{Read, Write};

use super::grid::{GridFunction, TorusGrid};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"SCHG";

pub fn write_snapshot<T: Real, W: Write>(out: &mut W, u: &GridFunction<T>) -> Result<()> {
    let n = u32::try_from(u.len()).map_err(|_| Error::Snapshot("grid too large".into()))?;
    out.write_all(SNAPSHOT_MAGIC)?;
    out.write_all(&n.to_le_bytes())?;
    for v in u.values() {
        out.write_all(&v.as_f64().to_le_bytes())?;
    }
    Ok(())
}

/// Reads one record; `Ok(None)` at a clean end of stream.
pub fn read_snapshot<T: Real, R: Read>(input: &mut R, grid: &TorusGrid<T>) -> Result<Option<GridFunction<T>>> {
    let mut magic = [0u8; 4];
    match input.read_exact(&mut magic) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot(format!("bad magic {magic:?}")));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    if n != grid.n_points() {
        return Err(Error::GridMismatch {
            left: n,
            right: grid.n_points(),
        });
    }
    let mut values = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        input.read_exact(&mut buf)?;
        values.push(T::lit(f64::from_le_bytes(buf)));
    }
    GridFunction::new(grid, values).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_fixed() {
        let g = TorusGrid::<f64>::new(8).unwrap();
        let u = GridFunction::from_fn(&g, |x| x.sin()).unwrap();
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, &u).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 8 * 8);
        assert_eq!(&bytes[..4], b"SCHG");
        assert_eq!(&bytes[4..8], &8u32.to_le_bytes());
        assert_eq!(&bytes[8..16], &u.values()[0].to_le_bytes());
        let mut cursor = &bytes[..];
        let back = read_snapshot(&mut cursor, &g).unwrap().unwrap();
        assert_eq!(back.values(), u.values());
        assert!(read_snapshot(&mut cursor, &g).unwrap().is_none());
    }

    #[test]
    fn rejects_bad_magic() {
        let g = TorusGrid::<f64>::new(8).unwrap();
        let bytes = b"XXXX\x08\x00\x00\x00".to_vec();
        assert!(read_snapshot(&mut &bytes[..], &g).is_err());
    }
}
