use super::matrix::OperatorMatrix;
use faer::Mat;
use std::io::{self, Read, Write};

/// Writes every block as a little-endian `u64` dimension followed by its entries in row-major order.
pub fn write_blocks<W: Write>(op: &OperatorMatrix, mut w: W) -> io::Result<()> {
    for b in op.blocks() {
        let m = b.to_dense();
        w.write_all(&(m.nrows() as u64).to_le_bytes())?;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                w.write_all(&m[(i, j)].to_le_bytes())?;
            }
        }
    }
    Ok(())
}

/// Reads blocks written by [`write_blocks`] until end of input.
pub fn read_blocks<R: Read>(mut r: R) -> io::Result<Vec<Mat<f64>>> {
    let mut out = Vec::new();
    let mut word = [0u8; 8];
    loop {
        match r.read_exact(&mut word) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(out),
            Err(e) => return Err(e),
        }
        let n = u64::from_le_bytes(word) as usize;
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                r.read_exact(&mut word)?;
                m[(i, j)] = f64::from_le_bytes(word);
            }
        }
        out.push(m);
    }
}
