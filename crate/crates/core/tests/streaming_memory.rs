//! Parsing a generated million-row posts file must not allocate more than a
//! fixed ceiling, however many rows stream through.

use std::alloc::{GlobalAlloc, Layout, System};
use std::io::{BufReader, Read};
use std::sync::atomic::{AtomicUsize, Ordering};

use accepted::ingest::parse_posts;

struct Counting;

static CURRENT: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let p = System.alloc(layout);
        if !p.is_null() {
            let now = CURRENT.fetch_add(layout.size(), Ordering::SeqCst) + layout.size();
            PEAK.fetch_max(now, Ordering::SeqCst);
        }
        p
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        CURRENT.fetch_sub(layout.size(), Ordering::SeqCst);
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

/// Synthesizes a posts file on the fly, so the test itself holds only one
/// row of text at a time.
struct GeneratedPosts {
    rows: u64,
    next: u64,
    pending: Vec<u8>,
    at: usize,
    closed: bool,
}

impl GeneratedPosts {
    fn new(rows: u64) -> Self {
        let header = b"<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<posts>\n".to_vec();
        GeneratedPosts { rows, next: 0, pending: header, at: 0, closed: false }
    }

    fn refill(&mut self) {
        self.pending.clear();
        self.at = 0;
        if self.next < self.rows {
            let id = self.next + 1;
            let row = if id % 3 == 0 {
                format!("  <row Id=\"{id}\" PostTypeId=\"2\" ParentId=\"{}\" CreationDate=\"2012-03-04T05:06:07.890\" Score=\"1\" Body=\"&lt;p&gt;answer {id}&lt;/p&gt;\" OwnerUserId=\"{}\" />\n", id - 1, id % 97)
            } else {
                format!("  <row Id=\"{id}\" PostTypeId=\"1\" CreationDate=\"2012-03-04T05:06:07.890\" Score=\"2\" Body=\"&lt;p&gt;How do I parse row {id}?&lt;/p&gt;&lt;pre&gt;&lt;code&gt;x = {id};&lt;/code&gt;&lt;/pre&gt;\" OwnerUserId=\"{}\" Title=\"Question {id}\" Tags=\"&lt;rust&gt;&lt;xml&gt;\" />\n", id % 89)
            };
            self.pending.extend_from_slice(row.as_bytes());
            self.next += 1;
        } else if !self.closed {
            self.pending.extend_from_slice(b"</posts>\n");
            self.closed = true;
        }
    }
}

impl Read for GeneratedPosts {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        if self.at == self.pending.len() {
            self.refill();
        }
        let n = (self.pending.len() - self.at).min(buf.len());
        buf[..n].copy_from_slice(&self.pending[self.at..self.at + n]);
        self.at += n;
        Ok(n)
    }
}

fn peak_while_parsing(rows: u64) -> (usize, u64) {
    let source = BufReader::with_capacity(64 * 1024, GeneratedPosts::new(rows));
    let baseline = CURRENT.load(Ordering::SeqCst);
    PEAK.store(baseline, Ordering::SeqCst);
    let mut questions = 0;
    for post in parse_posts(source) {
        let post = post.expect("generated rows are valid");
        questions += u64::from(post.is_question());
    }
    (PEAK.load(Ordering::SeqCst) - baseline, questions)
}

#[test]
fn million_rows_parse_under_fixed_ceiling() {
    const CEILING: usize = 1 << 20;
    let (small_peak, small_questions) = peak_while_parsing(10_000);
    let (peak, questions) = peak_while_parsing(1_000_000);
    assert_eq!(small_questions, 6_667);
    assert_eq!(questions, 666_667);
    assert!(peak < CEILING, "peak {peak} bytes exceeds {CEILING}");
    // Growing the input a hundredfold must not grow the footprint.
    assert!(peak <= small_peak + 4096, "peak grew from {small_peak} to {peak}");
}
