use super::DsrError;
use crate::Library;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Frame {
    token: usize,
    remaining: usize,
    last_child: Option<usize>,
}

/// Incremental view of a partial pre-order traversal: which open slot the
/// next token fills, its ancestors and its left sibling.
///
/// Invariant: the stack holds exactly the ancestors of the next slot, each
/// with at least one unfilled child slot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SlotTracker {
    stack: Vec<Frame>,
    len: usize,
}

impl SlotTracker {
    pub fn new() -> SlotTracker {
        SlotTracker::default()
    }

    /// Replays `partial`; errors if it closes before its end.
    pub fn from_prefix(lib: &Library, partial: &[usize]) -> Result<SlotTracker, DsrError> {
        let mut t = SlotTracker::new();
        for (k, &tok) in partial.iter().enumerate() {
            if t.is_complete() {
                return Err(DsrError::InvalidPrefix { position: k });
            }
            t.push(tok, lib.arity(tok));
        }
        Ok(t)
    }

    pub fn push(&mut self, token: usize, arity: usize) {
        debug_assert!(!self.is_complete());
        if let Some(top) = self.stack.last_mut() {
            top.remaining -= 1;
            top.last_child = Some(token);
        }
        self.len += 1;
        if arity > 0 {
            self.stack.push(Frame { token, remaining: arity, last_child: None });
        } else {
            while self.stack.last().is_some_and(|f| f.remaining == 0) {
                self.stack.pop();
            }
        }
    }

    /// Tokens placed so far.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn is_complete(&self) -> bool {
        self.len > 0 && self.stack.is_empty()
    }

    /// Open slots still to fill.
    pub fn dangling(&self) -> usize {
        if self.len == 0 {
            1
        } else {
            self.stack.iter().map(|f| f.remaining).sum()
        }
    }

    pub fn parent(&self) -> Option<usize> {
        self.stack.last().map(|f| f.token)
    }

    pub fn sibling(&self) -> Option<usize> {
        self.stack.last().and_then(|f| f.last_child)
    }

    /// Ancestors of the next slot, root first.
    pub fn ancestors(&self) -> impl Iterator<Item = usize> + '_ {
        self.stack.iter().map(|f| f.token)
    }
}

/// Parent and left sibling of the slot the next token will fill.
pub fn parent_sibling(partial: &[usize], lib: &Library) -> Result<(Option<usize>, Option<usize>), DsrError> {
    let t = SlotTracker::from_prefix(lib, partial)?;
    if t.is_complete() {
        return Err(DsrError::CompleteTraversal);
    }
    Ok((t.parent(), t.sibling()))
}
