//! Record framing: `[len: u32 LE][kind: u8][payload][crc32: u32 LE]`, where
//! `len` counts kind + payload and the CRC covers the same bytes.

use crate::frontend::{CatalogPath, Ident, TypeTag};
use crate::types::{Position, Value};

use super::record::{LogRecord, RecordKind};
use super::StoreError;

const MAX_PAYLOAD: usize = 1 << 31;

const VAL_NULL: u8 = 0;
const VAL_BOOL: u8 = 1;
const VAL_INT: u8 = 2;
const VAL_FLOAT: u8 = 3;
const VAL_STR: u8 = 4;

pub fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

fn unzigzag(v: u64) -> i64 {
    ((v >> 1) as i64) ^ -((v & 1) as i64)
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn varint(&mut self, v: u64) {
        put_varint(&mut self.buf, v);
    }

    fn byte(&mut self, b: u8) {
        self.buf.push(b);
    }

    fn bool(&mut self, b: bool) {
        self.buf.push(b as u8);
    }

    fn str(&mut self, s: &str) {
        self.varint(s.len() as u64);
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn pos(&mut self, p: Position) -> Result<(), StoreError> {
        let off = p.offset().ok_or(StoreError::UnresolvedReference)?;
        self.varint(off);
        Ok(())
    }

    fn opt_pos(&mut self, p: Option<Position>) -> Result<(), StoreError> {
        match p {
            None => self.byte(0),
            Some(p) => {
                self.byte(1);
                self.pos(p)?;
            }
        }
        Ok(())
    }

    fn positions(&mut self, ps: &[Position]) -> Result<(), StoreError> {
        self.varint(ps.len() as u64);
        for p in ps {
            self.pos(*p)?;
        }
        Ok(())
    }

    fn value(&mut self, v: &Value) {
        match v {
            Value::Null => self.byte(VAL_NULL),
            Value::Bool(b) => {
                self.byte(VAL_BOOL);
                self.bool(*b);
            }
            Value::Int(i) => {
                self.byte(VAL_INT);
                self.varint(zigzag(*i));
            }
            Value::Float(x) => {
                self.byte(VAL_FLOAT);
                self.buf.extend_from_slice(&x.to_le_bytes());
            }
            Value::Str(s) => {
                self.byte(VAL_STR);
                self.str(s);
            }
        }
    }

    fn props(&mut self, ps: &[(Position, Value)]) -> Result<(), StoreError> {
        self.varint(ps.len() as u64);
        for (p, v) in ps {
            self.pos(*p)?;
            self.value(v);
        }
        Ok(())
    }

    fn path(&mut self, path: &CatalogPath) {
        self.varint(path.0.len() as u64);
        for seg in &path.0 {
            self.str(&seg.name);
            self.bool(seg.quoted);
        }
    }
}

fn tag_byte(t: TypeTag) -> u8 {
    match t {
        TypeTag::String => VAL_STR,
        TypeTag::Int => VAL_INT,
        TypeTag::Float => VAL_FLOAT,
        TypeTag::Bool => VAL_BOOL,
    }
}

/// Encodes one framed record. All position references must be resolved.
pub fn encode_record(record: &LogRecord) -> Result<Vec<u8>, StoreError> {
    let mut w = Writer { buf: Vec::new() };
    w.byte(record.kind() as u8);
    match record {
        LogRecord::TxnBegin { txn_id, user } => {
            w.varint(*txn_id);
            w.str(user);
        }
        LogRecord::TxnCommit { txn_id } => w.varint(*txn_id),
        LogRecord::SchemaDef { path } | LogRecord::GraphTypeDef { path } => w.path(path),
        LogRecord::NodeTypeDef {
            label,
            quoted,
            graph_type,
            origin_graph,
            singleton,
        } => {
            w.str(label);
            w.bool(*quoted);
            w.opt_pos(*graph_type)?;
            w.pos(*origin_graph)?;
            w.bool(*singleton);
        }
        LogRecord::EdgeTypeDef {
            label,
            quoted,
            graph_type,
            origin_graph,
            connecting,
        } => {
            w.str(label);
            w.bool(*quoted);
            w.opt_pos(*graph_type)?;
            w.pos(*origin_graph)?;
            match connecting {
                None => w.byte(0),
                Some((s, t)) => {
                    w.byte(1);
                    w.pos(*s)?;
                    w.pos(*t)?;
                }
            }
        }
        LogRecord::PropertyDef {
            owner,
            name,
            quoted,
            tag,
        } => {
            w.pos(*owner)?;
            w.str(name);
            w.bool(*quoted);
            w.byte(tag_byte(*tag));
        }
        LogRecord::GraphDef { path, graph_type } => {
            w.path(path);
            w.opt_pos(*graph_type)?;
        }
        LogRecord::Node {
            graph,
            types,
            props,
        } => {
            w.pos(*graph)?;
            w.positions(types)?;
            w.props(props)?;
        }
        LogRecord::Edge {
            graph,
            types,
            leaving,
            arriving,
            props,
        } => {
            w.pos(*graph)?;
            w.positions(types)?;
            w.pos(*leaving)?;
            w.pos(*arriving)?;
            w.props(props)?;
        }
        LogRecord::Update {
            element,
            set,
            remove,
        } => {
            w.pos(*element)?;
            w.props(set)?;
            w.positions(remove)?;
        }
        LogRecord::Delete { element } => w.pos(*element)?,
        LogRecord::SubProperty { sub, sup } => {
            w.pos(*sub)?;
            w.pos(*sup)?;
        }
    }
    let body = w.buf;
    if body.len() > MAX_PAYLOAD {
        return Err(StoreError::PayloadTooLarge(body.len()));
    }
    let mut out = Vec::with_capacity(body.len() + 8);
    out.extend_from_slice(&(body.len() as u32).to_le_bytes());
    out.extend_from_slice(&body);
    out.extend_from_slice(&crc32fast::hash(&body).to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    record: u64,
}

impl<'a> Reader<'a> {
    fn malformed(&self, why: &str) -> StoreError {
        StoreError::Malformed {
            position: self.record,
            reason: why.to_string(),
        }
    }

    fn byte(&mut self) -> Result<u8, StoreError> {
        let b = *self
            .buf
            .get(self.pos)
            .ok_or_else(|| self.malformed("payload ends early"))?;
        self.pos += 1;
        Ok(b)
    }

    fn bool(&mut self) -> Result<bool, StoreError> {
        match self.byte()? {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(self.malformed("bad bool byte")),
        }
    }

    fn varint(&mut self) -> Result<u64, StoreError> {
        let mut v: u64 = 0;
        let mut shift = 0;
        loop {
            let b = self.byte()?;
            let low = u64::from(b & 0x7f);
            if shift > 63 || (shift == 63 && low > 1) {
                return Err(self.malformed("varint overflow"));
            }
            v |= low << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
            shift += 7;
        }
    }

    fn len(&mut self) -> Result<usize, StoreError> {
        let n = self.varint()? as usize;
        if n > self.buf.len() - self.pos {
            return Err(self.malformed("length exceeds payload"));
        }
        Ok(n)
    }

    fn str(&mut self) -> Result<String, StoreError> {
        let n = self.len()?;
        let bytes = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        String::from_utf8(bytes.to_vec()).map_err(|_| self.malformed("invalid UTF-8"))
    }

    fn pos(&mut self) -> Result<Position, StoreError> {
        let v = self.varint()?;
        if v > i64::MAX as u64 {
            return Err(self.malformed("position out of range"));
        }
        Ok(Position::committed(v))
    }

    fn opt_pos(&mut self) -> Result<Option<Position>, StoreError> {
        Ok(if self.bool()? { Some(self.pos()?) } else { None })
    }

    fn positions(&mut self) -> Result<Vec<Position>, StoreError> {
        let n = self.len()?;
        (0..n).map(|_| self.pos()).collect()
    }

    fn value(&mut self) -> Result<Value, StoreError> {
        Ok(match self.byte()? {
            VAL_NULL => Value::Null,
            VAL_BOOL => Value::Bool(self.bool()?),
            VAL_INT => Value::Int(unzigzag(self.varint()?)),
            VAL_FLOAT => {
                let end = self.pos + 8;
                let bytes: [u8; 8] = self
                    .buf
                    .get(self.pos..end)
                    .and_then(|s| s.try_into().ok())
                    .ok_or_else(|| self.malformed("float ends early"))?;
                self.pos = end;
                Value::Float(f64::from_le_bytes(bytes))
            }
            VAL_STR => Value::Str(self.str()?),
            _ => return Err(self.malformed("unknown value tag")),
        })
    }

    fn props(&mut self) -> Result<Vec<(Position, Value)>, StoreError> {
        let n = self.len()?;
        (0..n)
            .map(|_| Ok((self.pos()?, self.value()?)))
            .collect()
    }

    fn tag(&mut self) -> Result<TypeTag, StoreError> {
        Ok(match self.byte()? {
            VAL_STR => TypeTag::String,
            VAL_INT => TypeTag::Int,
            VAL_FLOAT => TypeTag::Float,
            VAL_BOOL => TypeTag::Bool,
            _ => return Err(self.malformed("unknown type tag")),
        })
    }

    fn path(&mut self) -> Result<CatalogPath, StoreError> {
        let n = self.len()?;
        let mut segs = Vec::with_capacity(n);
        for _ in 0..n {
            let name = self.str()?;
            let quoted = self.bool()?;
            segs.push(Ident { name, quoted });
        }
        Ok(CatalogPath(segs))
    }
}

/// Decodes the record framed at `offset` in `bytes` (a whole-file buffer).
/// Returns the record and the offset just past it.
pub fn decode_record(bytes: &[u8], offset: usize) -> Result<(LogRecord, usize), StoreError> {
    let position = offset as u64;
    let truncated = StoreError::TruncatedRecord { position };
    let header = bytes.get(offset..offset + 4).ok_or(truncated.clone())?;
    let len = u32::from_le_bytes(header.try_into().unwrap()) as usize;
    if len == 0 {
        return Err(StoreError::Malformed {
            position,
            reason: "zero-length record".into(),
        });
    }
    let body_start = offset + 4;
    let body_end = body_start
        .checked_add(len)
        .ok_or(truncated.clone())?;
    let crc_end = body_end + 4;
    if crc_end > bytes.len() {
        return Err(truncated);
    }
    let body = &bytes[body_start..body_end];
    let stored = u32::from_le_bytes(bytes[body_end..crc_end].try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(StoreError::CrcMismatch { position });
    }
    let kind = RecordKind::from_byte(body[0]).ok_or(StoreError::UnknownKind {
        position,
        kind: body[0],
    })?;
    let mut r = Reader {
        buf: &body[1..],
        pos: 0,
        record: position,
    };
    let record = match kind {
        RecordKind::TxnBegin => LogRecord::TxnBegin {
            txn_id: r.varint()?,
            user: r.str()?,
        },
        RecordKind::TxnCommit => LogRecord::TxnCommit {
            txn_id: r.varint()?,
        },
        RecordKind::SchemaDef => LogRecord::SchemaDef { path: r.path()? },
        RecordKind::GraphTypeDef => LogRecord::GraphTypeDef { path: r.path()? },
        RecordKind::NodeTypeDef => LogRecord::NodeTypeDef {
            label: r.str()?,
            quoted: r.bool()?,
            graph_type: r.opt_pos()?,
            origin_graph: r.pos()?,
            singleton: r.bool()?,
        },
        RecordKind::EdgeTypeDef => LogRecord::EdgeTypeDef {
            label: r.str()?,
            quoted: r.bool()?,
            graph_type: r.opt_pos()?,
            origin_graph: r.pos()?,
            connecting: if r.bool()? {
                Some((r.pos()?, r.pos()?))
            } else {
                None
            },
        },
        RecordKind::PropertyDef => LogRecord::PropertyDef {
            owner: r.pos()?,
            name: r.str()?,
            quoted: r.bool()?,
            tag: r.tag()?,
        },
        RecordKind::GraphDef => LogRecord::GraphDef {
            path: r.path()?,
            graph_type: r.opt_pos()?,
        },
        RecordKind::Node => LogRecord::Node {
            graph: r.pos()?,
            types: r.positions()?,
            props: r.props()?,
        },
        RecordKind::Edge => LogRecord::Edge {
            graph: r.pos()?,
            types: r.positions()?,
            leaving: r.pos()?,
            arriving: r.pos()?,
            props: r.props()?,
        },
        RecordKind::Update => LogRecord::Update {
            element: r.pos()?,
            set: r.props()?,
            remove: r.positions()?,
        },
        RecordKind::Delete => LogRecord::Delete { element: r.pos()? },
        RecordKind::SubProperty => LogRecord::SubProperty {
            sub: r.pos()?,
            sup: r.pos()?,
        },
    };
    if r.pos != r.buf.len() {
        return Err(r.malformed("trailing payload bytes"));
    }
    Ok((record, crc_end))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bitwise reflected CRC-32 (IEEE 802.3), independent of crc32fast.
    fn crc32_reference(data: &[u8]) -> u32 {
        let mut crc = 0xffff_ffffu32;
        for &b in data {
            crc ^= u32::from(b);
            for _ in 0..8 {
                let mask = (crc & 1).wrapping_neg();
                crc = (crc >> 1) ^ (0xedb8_8320 & mask);
            }
        }
        !crc
    }

    #[test]
    fn crc_reference_check_value() {
        assert_eq!(crc32_reference(b"123456789"), 0xcbf4_3926);
    }

    #[test]
    fn commit_record_golden_bytes() {
        let bytes = encode_record(&LogRecord::TxnCommit { txn_id: 1 }).unwrap();
        let body = [RecordKind::TxnCommit as u8, 0x01];
        let mut want = vec![2, 0, 0, 0];
        want.extend_from_slice(&body);
        want.extend_from_slice(&crc32_reference(&body).to_le_bytes());
        assert_eq!(bytes, want);
        assert_eq!(decode_record(&bytes, 0).unwrap(), (LogRecord::TxnCommit { txn_id: 1 }, 10));
    }

    #[test]
    fn node_without_properties_golden() {
        let rec = LogRecord::Node {
            graph: Position::committed(0),
            types: vec![Position::committed(200)],
            props: vec![],
        };
        let bytes = encode_record(&rec).unwrap();
        // kind, graph 0, one type, varint(200) = c8 01, zero props
        let body = [RecordKind::Node as u8, 0x00, 0x01, 0xc8, 0x01, 0x00];
        assert_eq!(&bytes[0..4], &(body.len() as u32).to_le_bytes());
        assert_eq!(&bytes[4..10], &body);
        assert_eq!(&bytes[10..], &crc32_reference(&body).to_le_bytes());
    }

    #[test]
    fn value_encodings() {
        let rec = LogRecord::Update {
            element: Position::committed(9),
            set: vec![
                (Position::committed(1), Value::Int(-1)),
                (Position::committed(2), Value::Str("é".into())),
                (Position::committed(3), Value::Float(1.5)),
                (Position::committed(4), Value::Bool(true)),
                (Position::committed(5), Value::Null),
            ],
            remove: vec![Position::committed(6)],
        };
        let bytes = encode_record(&rec).unwrap();
        let body = &bytes[4..bytes.len() - 4];
        let mut want = vec![RecordKind::Update as u8, 9, 5];
        want.extend([1, VAL_INT, 1]); // zigzag(-1) = 1
        want.extend([2, VAL_STR, 2, 0xc3, 0xa9]);
        want.extend([3, VAL_FLOAT]);
        want.extend(1.5f64.to_le_bytes());
        want.extend([4, VAL_BOOL, 1]);
        want.extend([5, VAL_NULL]);
        want.extend([1, 6]);
        assert_eq!(body, &want[..]);
        assert_eq!(decode_record(&bytes, 0).unwrap().0, rec);
    }

    #[test]
    fn flipped_bit_fails_crc() {
        let mut bytes = encode_record(&LogRecord::TxnBegin {
            txn_id: 7,
            user: "anonymous".into(),
        })
        .unwrap();
        bytes[6] ^= 0x04;
        assert!(matches!(
            decode_record(&bytes, 0),
            Err(StoreError::CrcMismatch { position: 0 })
        ));
    }

    #[test]
    fn short_buffer_is_truncated() {
        let bytes = encode_record(&LogRecord::TxnCommit { txn_id: 300 }).unwrap();
        for cut in 0..bytes.len() {
            assert!(matches!(
                decode_record(&bytes[..cut], 0),
                Err(StoreError::TruncatedRecord { position: 0 })
            ));
        }
    }

    #[test]
    fn unknown_kind() {
        let body = [99u8, 0];
        let mut bytes = (body.len() as u32).to_le_bytes().to_vec();
        bytes.extend_from_slice(&body);
        bytes.extend_from_slice(&crc32_reference(&body).to_le_bytes());
        assert!(matches!(
            decode_record(&bytes, 0),
            Err(StoreError::UnknownKind { kind: 99, .. })
        ));
    }

    #[test]
    fn provisional_refs_do_not_encode() {
        let rec = LogRecord::Delete {
            element: Position::provisional(2),
        };
        assert!(matches!(
            encode_record(&rec),
            Err(StoreError::UnresolvedReference)
        ));
    }

    #[test]
    fn zigzag_extremes() {
        for v in [0, 1, -1, i64::MAX, i64::MIN] {
            assert_eq!(unzigzag(zigzag(v)), v);
        }
    }
}
