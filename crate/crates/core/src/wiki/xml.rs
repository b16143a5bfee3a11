use std::io::BufRead;

use quick_xml::escape::resolve_predefined_entity;
use quick_xml::events::Event;
use quick_xml::Reader;

use super::{PageRecord, WikiError};

/// Pages in document order. Only the current page is buffered.
pub struct PageStream<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    /// Open element names, outermost first.
    path: Vec<Vec<u8>>,
    done: bool,
}

/// Streams `<page>` elements from an uncompressed pages-articles dump.
///
/// Malformed XML ends the stream with [`WikiError::MalformedXml`]; input that
/// stops inside an open element ends it with [`WikiError::Truncated`].
pub fn stream_pages<R: BufRead>(input: R) -> PageStream<R> {
    let mut reader = Reader::from_reader(input);
    reader.config_mut().trim_text(false);
    PageStream { reader, buf: Vec::new(), path: Vec::new(), done: false }
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Title,
    Namespace,
    Id,
    Text,
    Other,
}

impl<R: BufRead> PageStream<R> {
    fn field(&self) -> Field {
        let n = self.path.len();
        if n >= 2 && self.path[n - 2] == b"page" {
            match self.path[n - 1].as_slice() {
                b"title" => Field::Title,
                b"ns" => Field::Namespace,
                b"id" => Field::Id,
                _ => Field::Other,
            }
        } else if n >= 3 && self.path[n - 1] == b"text" && self.path[n - 2] == b"revision" {
            Field::Text
        } else {
            Field::Other
        }
    }

    fn malformed(&mut self) -> WikiError {
        self.done = true;
        WikiError::MalformedXml(self.reader.error_position())
    }

    fn next_page(&mut self) -> Result<Option<PageRecord>, WikiError> {
        let mut page: Option<PageRecord> = None;
        let mut id_seen = false;
        let mut scratch = String::new();
        loop {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(e) => e.into_owned(),
                Err(_) => return Err(self.malformed()),
            };
            match event {
                Event::Start(e) => {
                    let name = e.name().as_ref().to_vec();
                    if name == b"page" {
                        page = Some(PageRecord::default());
                        id_seen = false;
                    }
                    self.path.push(name);
                    scratch.clear();
                }
                Event::Empty(e) => {
                    if e.name().as_ref() == b"page" {
                        return Ok(Some(PageRecord::default()));
                    }
                }
                Event::End(_) => {
                    let field = self.field();
                    let closed = self.path.pop().unwrap_or_default();
                    if let Some(p) = page.as_mut() {
                        match field {
                            Field::Title => p.title = std::mem::take(&mut scratch),
                            Field::Namespace => {
                                p.namespace = scratch.trim().parse().map_err(|_| self.malformed())?;
                            }
                            Field::Id if !id_seen => {
                                p.page_id = scratch.trim().parse().map_err(|_| self.malformed())?;
                                id_seen = true;
                            }
                            Field::Text => p.text = std::mem::take(&mut scratch),
                            _ => {}
                        }
                    }
                    scratch.clear();
                    if closed == b"page" {
                        if let Some(p) = page.take() {
                            return Ok(Some(p));
                        }
                    }
                }
                Event::Text(t) => {
                    if page.is_some() && self.field() != Field::Other {
                        scratch.push_str(&t.decode().map_err(|_| self.malformed())?);
                    }
                }
                Event::CData(t) => {
                    if page.is_some() && self.field() != Field::Other {
                        scratch.push_str(&t.decode().map_err(|_| self.malformed())?);
                    }
                }
                Event::GeneralRef(r) => {
                    if page.is_some() && self.field() != Field::Other {
                        match r.resolve_char_ref() {
                            Ok(Some(c)) => scratch.push(c),
                            Ok(None) => {
                                let name = r.decode().map_err(|_| self.malformed())?;
                                match resolve_predefined_entity(&name) {
                                    Some(s) => scratch.push_str(s),
                                    None => return Err(self.malformed()),
                                }
                            }
                            Err(_) => return Err(self.malformed()),
                        }
                    }
                }
                Event::Eof => {
                    self.done = true;
                    if !self.path.is_empty() || page.is_some() {
                        return Err(WikiError::Truncated);
                    }
                    return Ok(None);
                }
                _ => {}
            }
        }
    }
}

impl<R: BufRead> Iterator for PageStream<R> {
    type Item = Result<PageRecord, WikiError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        self.next_page().transpose()
    }
}
