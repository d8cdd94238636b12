//! Adapter for an out-of-process segmentation model.
//!
//! Two exchanges are supported. In directory mode each request is a PNG
//! written to `<dir>/req_<index>.png` and the reply is read from
//! `<dir>/resp_<index>.png`. In stream mode both directions carry a 4-byte
//! big-endian length followed by PNG bytes, one reply per request, in order.
//! Replies are 8-bit masks thresholded at 128.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::io::{decode_mask_png, encode_frame_png};
use crate::imaging::{BinaryMask, Frame, Roi};
use crate::segmentation::{ContactMask, Segmenter};

pub const DEFAULT_TIMEOUT_MS: u64 = 100;
const POLL_INTERVAL: Duration = Duration::from_micros(500);
/// Upper bound on a single framed message; guards against a corrupt length.
const MAX_MESSAGE_BYTES: u32 = 64 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ExchangeConfig {
    Directory { dir: PathBuf },
    /// Spawn `command` and talk over its stdin/stdout.
    Stream { command: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalConfig {
    pub exchange: ExchangeConfig,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    /// Whether the pipeline substitutes the heuristic segmenter when the
    /// external one is unavailable.
    #[serde(default = "default_true")]
    pub fallback_to_heuristic: bool,
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_MS
}

fn default_true() -> bool {
    true
}

impl ExternalConfig {
    pub fn directory(dir: impl Into<PathBuf>) -> Self {
        Self {
            exchange: ExchangeConfig::Directory { dir: dir.into() },
            timeout_ms: DEFAULT_TIMEOUT_MS,
            fallback_to_heuristic: true,
        }
    }
}

enum Transport {
    Directory(PathBuf),
    Stream(StreamTransport),
}

struct StreamTransport {
    requests: Sender<Vec<u8>>,
    replies: Receiver<io::Result<Vec<u8>>>,
    sent: u64,
    received: u64,
    child: Option<Child>,
}

impl Drop for StreamTransport {
    fn drop(&mut self) {
        if let Some(child) = self.child.as_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// One in-flight request at a time; not meant to be shared across threads.
pub struct ExternalSegmenter {
    transport: Transport,
    timeout: Duration,
}

impl std::fmt::Debug for ExternalSegmenter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mode = match &self.transport {
            Transport::Directory(d) => format!("directory {}", d.display()),
            Transport::Stream(_) => "stream".to_string(),
        };
        f.debug_struct("ExternalSegmenter").field("mode", &mode).field("timeout", &self.timeout).finish()
    }
}

impl ExternalSegmenter {
    pub fn from_config(cfg: &ExternalConfig) -> Result<Self> {
        let timeout = Duration::from_millis(cfg.timeout_ms);
        match &cfg.exchange {
            ExchangeConfig::Directory { dir } => Self::directory(dir, timeout),
            ExchangeConfig::Stream { command } => Self::spawn(command, timeout),
        }
    }

    pub fn directory(dir: &Path, timeout: Duration) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::Config(format!("exchange directory {} does not exist", dir.display())));
        }
        Ok(Self { transport: Transport::Directory(dir.to_path_buf()), timeout })
    }

    pub fn spawn(command: &[String], timeout: Duration) -> Result<Self> {
        let (program, args) =
            command.split_first().ok_or_else(|| Error::Config("empty external segmenter command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Config(format!("cannot start {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut seg = Self::from_streams(stdin, stdout, timeout);
        if let Transport::Stream(s) = &mut seg.transport {
            s.child = Some(child);
        }
        Ok(seg)
    }

    /// Stream mode over arbitrary byte channels.
    pub fn from_streams(
        writer: impl Write + Send + 'static,
        reader: impl Read + Send + 'static,
        timeout: Duration,
    ) -> Self {
        let (req_tx, req_rx) = mpsc::channel::<Vec<u8>>();
        let (resp_tx, resp_rx) = mpsc::channel();
        // Writes happen off the caller's thread so a stalled peer cannot
        // block past the timeout.
        thread::spawn(move || {
            let mut writer = writer;
            for msg in req_rx {
                if write_message(&mut writer, &msg).is_err() {
                    break;
                }
            }
        });
        thread::spawn(move || {
            let mut reader = reader;
            loop {
                let msg = read_message(&mut reader);
                let stop = msg.is_err();
                if resp_tx.send(msg).is_err() || stop {
                    break;
                }
            }
        });
        Self {
            transport: Transport::Stream(StreamTransport {
                requests: req_tx,
                replies: resp_rx,
                sent: 0,
                received: 0,
                child: None,
            }),
            timeout,
        }
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    /// Raw mask for `frame`; any failure to obtain one in time is
    /// [`Error::SegmentationUnavailable`].
    pub fn mask(&mut self, frame: &Frame) -> Result<BinaryMask> {
        let png = encode_frame_png(frame)?;
        let mask = match &mut self.transport {
            Transport::Directory(dir) => directory_exchange(dir, frame.index, &png, self.timeout)?,
            Transport::Stream(s) => stream_exchange(s, png, self.timeout)?,
        };
        if mask.width() != frame.width() || mask.height() != frame.height() {
            return Err(Error::SegmentationUnavailable(format!(
                "reply mask is {}x{}, frame is {}x{}",
                mask.width(),
                mask.height(),
                frame.width(),
                frame.height()
            )));
        }
        Ok(mask)
    }

    pub fn segment_external(&mut self, frame: &Frame, roi: &Roi) -> Result<ContactMask> {
        let mask = self.mask(frame)?;
        ContactMask::from_mask(mask, *roi)
    }
}

impl Segmenter for ExternalSegmenter {
    fn segment(&mut self, frame: &Frame) -> Result<BinaryMask> {
        self.mask(frame)
    }
}

pub fn request_path(dir: &Path, index: u64) -> PathBuf {
    dir.join(format!("req_{index}.png"))
}

pub fn response_path(dir: &Path, index: u64) -> PathBuf {
    dir.join(format!("resp_{index}.png"))
}

fn directory_exchange(dir: &Path, index: u64, png: &[u8], timeout: Duration) -> Result<BinaryMask> {
    let start = Instant::now();
    let req = request_path(dir, index);
    let resp = response_path(dir, index);
    let _ = fs::remove_file(&resp);
    // Rename so the peer never observes a partial request.
    let tmp = dir.join(format!(".req_{index}.png.part"));
    fs::write(&tmp, png)?;
    fs::rename(&tmp, &req)?;

    let mut last_err = None;
    loop {
        match fs::read(&resp) {
            Ok(bytes) => match decode_mask_png(&bytes) {
                Ok(mask) => {
                    let _ = fs::remove_file(&resp);
                    let _ = fs::remove_file(&req);
                    return Ok(mask);
                }
                // Possibly still being written.
                Err(e) => last_err = Some(e.to_string()),
            },
            Err(e) if e.kind() == io::ErrorKind::NotFound => {}
            Err(e) => last_err = Some(e.to_string()),
        }
        if start.elapsed() >= timeout {
            let _ = fs::remove_file(&req);
            let detail = last_err.map(|e| format!(" (last error: {e})")).unwrap_or_default();
            return Err(Error::SegmentationUnavailable(format!(
                "no reply for frame {index} within {} ms{detail}",
                timeout.as_millis()
            )));
        }
        thread::sleep(POLL_INTERVAL);
    }
}

fn stream_exchange(s: &mut StreamTransport, png: Vec<u8>, timeout: Duration) -> Result<BinaryMask> {
    let deadline = Instant::now() + timeout;
    s.requests.send(png).map_err(|_| Error::SegmentationUnavailable("external stream closed".into()))?;
    s.sent += 1;
    loop {
        let remaining = deadline.saturating_duration_since(Instant::now());
        match s.replies.recv_timeout(remaining) {
            Ok(Ok(bytes)) => {
                s.received += 1;
                // Replies to requests that already timed out.
                if s.received < s.sent {
                    continue;
                }
                return decode_mask_png(&bytes)
                    .map_err(|e| Error::SegmentationUnavailable(format!("undecodable reply: {e}")));
            }
            Ok(Err(e)) => return Err(Error::SegmentationUnavailable(format!("external stream failed: {e}"))),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Error::SegmentationUnavailable("external stream closed".into()))
            }
            Err(RecvTimeoutError::Timeout) => {
                return Err(Error::SegmentationUnavailable(format!(
                    "no reply within {} ms",
                    timeout.as_millis()
                )))
            }
        }
    }
}

pub fn write_message(w: &mut impl Write, payload: &[u8]) -> io::Result<()> {
    let len = u32::try_from(payload.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "message too long"))?;
    w.write_all(&len.to_be_bytes())?;
    w.write_all(payload)?;
    w.flush()
}

pub fn read_message(r: &mut impl Read) -> io::Result<Vec<u8>> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_be_bytes(len);
    if len > MAX_MESSAGE_BYTES {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("message length {len} too large")));
    }
    let mut buf = vec![0u8; len as usize];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::io::{decode_frame_png, encode_mask_png};
    use std::sync::atomic::{AtomicBool, Ordering};
    use std::sync::Arc;

    fn test_frame(index: u64) -> Frame {
        Frame::filled(48, 32, [180, 170, 160]).with_index(index)
    }

    fn truth() -> BinaryMask {
        BinaryMask::from_fn(48, 32, |x, y| (x as i32 - 20).pow(2) + (y as i32 - 16).pow(2) < 100)
    }

    /// Serves every request in `dir` with `reply` after `delay`.
    fn directory_stub(dir: PathBuf, reply: BinaryMask, delay: Duration, stop: Arc<AtomicBool>) -> thread::JoinHandle<()> {
        thread::spawn(move || {
            while !stop.load(Ordering::Relaxed) {
                for entry in fs::read_dir(&dir).unwrap().flatten() {
                    let name = entry.file_name().to_string_lossy().into_owned();
                    if let Some(idx) = name.strip_prefix("req_").and_then(|n| n.strip_suffix(".png")) {
                        let Ok(bytes) = fs::read(entry.path()) else { continue };
                        let _ = fs::remove_file(entry.path());
                        decode_frame_png(&bytes, 0).unwrap();
                        thread::sleep(delay);
                        let tmp = dir.join(format!("tmp_{idx}"));
                        fs::write(&tmp, encode_mask_png(&reply).unwrap()).unwrap();
                        fs::rename(&tmp, dir.join(format!("resp_{idx}.png"))).unwrap();
                    }
                }
                thread::sleep(Duration::from_micros(200));
            }
        })
    }

    #[test]
    fn directory_zero_mask() {
        let dir = tempfile::tempdir().unwrap();
        let stop = Arc::new(AtomicBool::new(false));
        let h = directory_stub(dir.path().into(), BinaryMask::new(48, 32), Duration::ZERO, stop.clone());
        let mut seg = ExternalSegmenter::directory(dir.path(), Duration::from_millis(2000)).unwrap();
        let c = seg.segment_external(&test_frame(3), &Roi::inset(48, 32, 2)).unwrap();
        assert_eq!(c.area_fraction, 0.0);
        assert!(c.contours.is_empty());
        stop.store(true, Ordering::Relaxed);
        h.join().unwrap();
        assert!(!response_path(dir.path(), 3).exists());
    }

    #[test]
    fn directory_passes_mask_through() {
        let dir = tempfile::tempdir().unwrap();
        let stop = Arc::new(AtomicBool::new(false));
        let h = directory_stub(dir.path().into(), truth(), Duration::ZERO, stop.clone());
        let mut seg = ExternalSegmenter::directory(dir.path(), Duration::from_millis(2000)).unwrap();
        for i in 0..3 {
            let c = seg.segment_external(&test_frame(i), &Roi::full(48, 32)).unwrap();
            assert_eq!(c.mask.iou(&truth()), 1.0);
        }
        stop.store(true, Ordering::Relaxed);
        h.join().unwrap();
    }

    #[test]
    fn directory_timeout() {
        let dir = tempfile::tempdir().unwrap();
        let stop = Arc::new(AtomicBool::new(false));
        let h = directory_stub(dir.path().into(), truth(), Duration::from_millis(300), stop.clone());
        let mut seg = ExternalSegmenter::directory(dir.path(), Duration::from_millis(30)).unwrap();
        let start = Instant::now();
        let err = seg.mask(&test_frame(0)).unwrap_err();
        assert!(matches!(err, Error::SegmentationUnavailable(_)), "{err}");
        assert!(start.elapsed() < Duration::from_millis(250));
        stop.store(true, Ordering::Relaxed);
        h.join().unwrap();
    }

    #[test]
    fn missing_directory_is_config_error() {
        let err = ExternalSegmenter::directory(Path::new("/nonexistent/exchange"), Duration::from_millis(5)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    /// In-process stream peer; `delays[i]` is applied before reply `i`.
    fn stream_pair(reply: BinaryMask, delays: Vec<u64>, timeout: Duration) -> ExternalSegmenter {
        let (req_r, req_w) = io::pipe().unwrap();
        let (resp_r, resp_w) = io::pipe().unwrap();
        thread::spawn(move || {
            let (mut r, mut w) = (req_r, resp_w);
            let png = encode_mask_png(&reply).unwrap();
            let mut i = 0;
            while let Ok(msg) = read_message(&mut r) {
                decode_frame_png(&msg, 0).unwrap();
                thread::sleep(Duration::from_millis(delays.get(i).copied().unwrap_or(0)));
                if write_message(&mut w, &png).is_err() {
                    break;
                }
                i += 1;
            }
        });
        ExternalSegmenter::from_streams(req_w, resp_r, timeout)
    }

    #[test]
    fn stream_round_trip() {
        let mut seg = stream_pair(truth(), vec![], Duration::from_millis(2000));
        for i in 0..4 {
            assert_eq!(seg.mask(&test_frame(i)).unwrap(), truth());
        }
    }

    #[test]
    fn stream_timeout_then_recovers_in_order() {
        let mut seg = stream_pair(truth(), vec![200, 0, 0], Duration::from_millis(40));
        assert!(matches!(seg.mask(&test_frame(0)), Err(Error::SegmentationUnavailable(_))));
        thread::sleep(Duration::from_millis(250));
        // the late first reply is discarded, the second one is ours
        let seg_timeout_ok = {
            seg.timeout = Duration::from_millis(2000);
            seg.mask(&test_frame(1))
        };
        assert_eq!(seg_timeout_ok.unwrap(), truth());
        assert_eq!(seg.mask(&test_frame(2)).unwrap(), truth());
    }

    #[test]
    fn stream_peer_exit_is_unavailable() {
        let (_req_r, req_w) = io::pipe().unwrap();
        let (resp_r, resp_w) = io::pipe().unwrap();
        drop(resp_w);
        let mut seg = ExternalSegmenter::from_streams(req_w, resp_r, Duration::from_millis(500));
        assert!(matches!(seg.mask(&test_frame(0)), Err(Error::SegmentationUnavailable(_))));
    }

    #[test]
    fn framing_round_trip_and_limits() {
        let mut buf = Vec::new();
        write_message(&mut buf, b"hello").unwrap();
        assert_eq!(&buf[..4], &[0, 0, 0, 5]);
        assert_eq!(read_message(&mut buf.as_slice()).unwrap(), b"hello");
        let huge = (MAX_MESSAGE_BYTES + 1).to_be_bytes();
        assert!(read_message(&mut huge.as_slice()).is_err());
        assert!(read_message(&mut [0u8, 0, 0, 9, 1].as_slice()).is_err());
    }

    #[test]
    fn config_defaults() {
        let cfg: ExternalConfig = serde_json::from_str(r#"{"exchange":{"mode":"stream","command":["seg"]}}"#).unwrap();
        assert_eq!(cfg.timeout_ms, 100);
        assert!(cfg.fallback_to_heuristic);
    }
}
