//! Text and binary tensor containers.
//!
//! Text: a header line `TNSR d n1 … nd` followed by the `N` entries as
//! whitespace-separated decimal floats in storage order.
//!
//! Binary: the magic bytes `TNSR1`, a little-endian `u32` order `d`, `d`
//! little-endian `u32` extents, then `N` little-endian `f64` entries.

use std::io::{BufRead, Read, Write};

use super::Tensor;
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 5] = b"TNSR1";
const TEXT_TAG: &str = "TNSR";

pub fn write_text<W: Write>(t: &Tensor, mut w: W) -> Result<()> {
    write!(w, "{TEXT_TAG} {}", t.order())?;
    for n in t.shape() {
        write!(w, " {n}")?;
    }
    writeln!(w)?;
    let row = *t.shape().last().expect("non-empty shape");
    for chunk in t.data().chunks(row) {
        let line: Vec<String> = chunk.iter().map(|x| format!("{x:e}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_text<R: BufRead>(r: R) -> Result<Tensor> {
    let mut text = String::new();
    let mut r = r;
    r.read_to_string(&mut text)?;
    parse_text(&text)
}

pub fn parse_text(text: &str) -> Result<Tensor> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some(TEXT_TAG) {
        return Err(Error::Parse(format!("missing {TEXT_TAG} header")));
    }
    let d: usize = parse_field(fields.next(), "order")?;
    let shape: Vec<usize> = (0..d).map(|_| parse_field(fields.next(), "extent")).collect::<Result<_>>()?;
    if fields.next().is_some() {
        return Err(Error::Parse(format!("header lists more than {d} extents")));
    }
    let data: Vec<f64> = lines
        .flat_map(str::split_whitespace)
        .map(|tok| tok.parse::<f64>().map_err(|e| Error::Parse(format!("bad entry {tok:?}: {e}"))))
        .collect::<Result<_>>()?;
    Tensor::new(shape, data)
}

pub fn write_binary<W: Write>(t: &Tensor, mut w: W) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&to_u32(t.order())?.to_le_bytes())?;
    for &n in t.shape() {
        w.write_all(&to_u32(n)?.to_le_bytes())?;
    }
    for x in t.data() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Reads one binary container and requires the input to end with it.
pub fn read_binary<R: Read>(mut r: R) -> Result<Tensor> {
    let t = read_binary_block(&mut r)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Parse("trailing bytes after payload".into()));
    }
    Ok(t)
}

/// Reads exactly one binary container, leaving any following bytes unread.
pub fn read_binary_block<R: Read>(r: &mut R) -> Result<Tensor> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic).map_err(|_| Error::Parse("truncated magic".into()))?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Parse("bad magic".into()));
    }
    let d = read_u32(r)? as usize;
    let shape: Vec<usize> = (0..d).map(|_| read_u32(r).map(|n| n as usize)).collect::<Result<_>>()?;
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::Parse(format!("invalid shape {shape:?}")));
    }
    let n = shape
        .iter()
        .try_fold(1usize, |acc, &x| acc.checked_mul(x))
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Parse("shape overflows".into()))?;
    let mut bytes = Vec::new();
    r.take(n as u64).read_to_end(&mut bytes)?;
    if bytes.len() != n {
        return Err(Error::Parse(format!("expected {n} payload bytes, found {}", bytes.len())));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Tensor::new(shape, data)
}

/// Reads either container, dispatching on the leading magic bytes.
pub fn read_any(bytes: &[u8]) -> Result<Tensor> {
    if bytes.starts_with(BINARY_MAGIC) {
        read_binary(bytes)
    } else {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))?;
        parse_text(text)
    }
}

fn parse_field(tok: Option<&str>, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::Parse(format!("header missing {what}")))?;
    tok.parse().map_err(|e| Error::Parse(format!("bad {what} {tok:?}: {e}")))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(|_| Error::Parse("truncated header".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn to_u32(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Dimension(format!("{n} does not fit in u32")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::gaussian_tensor;
    use proptest::prelude::*;

    #[test]
    fn text_header_layout() {
        let t = Tensor::new(vec![2, 1], vec![1.5, -2.0]).unwrap();
        let mut buf = Vec::new();
        write_text(&t, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("TNSR 2 2 1\n"));
        assert_eq!(parse_text(&s).unwrap(), t);
    }

    #[test]
    fn binary_layout_is_bit_exact() {
        let t = Tensor::new(vec![1, 2], vec![1.0, -0.5]).unwrap();
        let mut buf = Vec::new();
        write_binary(&t, &mut buf).unwrap();
        let mut expected = b"TNSR1".to_vec();
        expected.extend(2u32.to_le_bytes());
        expected.extend(1u32.to_le_bytes());
        expected.extend(2u32.to_le_bytes());
        expected.extend(1.0f64.to_le_bytes());
        expected.extend((-0.5f64).to_le_bytes());
        assert_eq!(buf, expected);
    }

    #[test]
    fn readers_validate_length() {
        assert!(parse_text("TNSR 2 2 2\n1 2 3").is_err());
        assert!(parse_text("TNSR 2 2 2\n1 2 3 4 5").is_err());
        assert!(parse_text("TNSX 1 1\n1").is_err());
        let t = gaussian_tensor(&[2, 3], 1);
        let mut buf = Vec::new();
        write_binary(&t, &mut buf).unwrap();
        assert!(read_binary(&buf[..buf.len() - 1]).is_err());
        buf.push(0);
        assert!(read_binary(&buf[..]).is_err());
    }

    proptest! {
        #[test]
        fn both_formats_round_trip(shape in prop::collection::vec(1usize..4, 1..4), seed in 0u64..1000) {
            let t = gaussian_tensor(&shape, seed);
            let mut text = Vec::new();
            write_text(&t, &mut text).unwrap();
            prop_assert_eq!(&read_any(&text).unwrap(), &t);
            let mut bin = Vec::new();
            write_binary(&t, &mut bin).unwrap();
            prop_assert_eq!(&read_any(&bin).unwrap(), &t);
        }
    }
}
