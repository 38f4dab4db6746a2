use std::net::SocketAddr;
use std::sync::mpsc::Sender;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::watch;
use tokio::task::{JoinHandle, JoinSet};

use super::{decode_packet, ByteOrder, FrameDecoder, IngestCounters, SktError, SktVariableSchema, SktWord, Target};
use crate::plant::PlantLink;
use crate::pv::EnvUpdate;

pub const DEFAULT_SKT_PORT: u16 = 4575;
const ROLE_PREFIX: &[u8] = b"ROLE ";
const MAX_ROLE_LINE: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub bind: SocketAddr,
    /// Reply to every accepted packet with the two ingest counters as INT32.
    pub echo: bool,
    pub schema: SktVariableSchema,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([0, 0, 0, 0], DEFAULT_SKT_PORT)),
            echo: false,
            schema: SktVariableSchema::default(),
        }
    }
}

/// Where decoded environment updates go.
pub trait EnvSink: Send + Sync + 'static {
    /// Returns false when the receiver is gone.
    fn push(&self, update: EnvUpdate) -> bool;
}

impl EnvSink for Sender<EnvUpdate> {
    fn push(&self, update: EnvUpdate) -> bool {
        self.send(update).is_ok()
    }
}

impl EnvSink for PlantLink {
    fn push(&self, update: EnvUpdate) -> bool {
        self.send_env(update)
    }
}

/// Running gateway. Dropping the handle does not stop it; call `shutdown`.
pub struct GatewayHandle {
    local_addr: SocketAddr,
    stop: watch::Sender<bool>,
    task: JoinHandle<()>,
}

impl GatewayHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Stops accepting, closes every client and waits for the acceptor.
    pub async fn shutdown(self) {
        let _ = self.stop.send(true);
        let _ = self.task.await;
    }
}

/// Binds the listener and spawns the acceptor on the current runtime.
pub async fn serve<S: EnvSink>(
    config: GatewayConfig,
    sink: S,
    counters: Arc<IngestCounters>,
) -> Result<GatewayHandle, SktError> {
    let listener = TcpListener::bind(config.bind).await?;
    let local_addr = listener.local_addr()?;
    tracing::info!(%local_addr, "sensor gateway listening");
    let (stop, mut stopped) = watch::channel(false);
    let sink = Arc::new(sink);
    let shared = Arc::new(config);
    let task = tokio::spawn(async move {
        let mut clients = JoinSet::new();
        loop {
            tokio::select! {
                _ = stopped.changed() => break,
                accepted = listener.accept() => match accepted {
                    Ok((stream, peer)) => {
                        let (sink, counters, config) = (sink.clone(), counters.clone(), shared.clone());
                        clients.spawn(async move {
                            counters.client_connected(peer, Instant::now());
                            if let Err(e) = handle_client(stream, peer, &config, sink.as_ref(), &counters).await {
                                tracing::warn!(%peer, error = %e, "sensor client closed with error");
                            }
                            counters.client_disconnected(peer);
                        });
                    }
                    Err(e) => tracing::warn!(error = %e, "accept failed"),
                },
                Some(_) = clients.join_next(), if !clients.is_empty() => {}
            }
        }
        clients.shutdown().await;
    });
    Ok(GatewayHandle { local_addr, stop, task })
}

/// Outcome of looking for a role header at the start of a stream.
enum RoleScan {
    NeedMore,
    Role(Option<Target>, usize),
}

fn scan_role(buf: &[u8]) -> Result<RoleScan, SktError> {
    let n = buf.len().min(ROLE_PREFIX.len());
    if buf[..n] != ROLE_PREFIX[..n] {
        return Ok(RoleScan::Role(None, 0));
    }
    if buf.len() < ROLE_PREFIX.len() {
        return Ok(RoleScan::NeedMore);
    }
    match buf.iter().position(|&b| b == b'\n') {
        Some(end) => {
            let name = std::str::from_utf8(&buf[ROLE_PREFIX.len()..end])
                .map_err(|_| SktError::Role("role header is not UTF-8".into()))?;
            let target: Target = name.trim_end_matches('\r').parse()?;
            if target == Target::Ignored {
                return Err(SktError::Role("role must be INSOLATION or TEMPERATURE".into()));
            }
            Ok(RoleScan::Role(Some(target), end + 1))
        }
        None if buf.len() > MAX_ROLE_LINE => Err(SktError::Role("role header too long".into())),
        None => Ok(RoleScan::NeedMore),
    }
}

async fn handle_client(
    mut stream: TcpStream,
    peer: SocketAddr,
    config: &GatewayConfig,
    sink: &dyn EnvSink,
    counters: &IngestCounters,
) -> Result<(), SktError> {
    let _ = stream.set_nodelay(true);
    let schema = &config.schema;
    let mut decoder = FrameDecoder::new(schema.frame_len());
    let mut head: Vec<u8> = Vec::new();
    let mut role: Option<Option<Target>> = None;
    let mut buf = vec![0u8; 4096];
    loop {
        let n = stream.read(&mut buf).await?;
        if n == 0 {
            break;
        }
        let mut data = &buf[..n];
        if role.is_none() {
            head.extend_from_slice(data);
            match scan_role(&head)? {
                RoleScan::NeedMore => continue,
                RoleScan::Role(r, consumed) => {
                    if let Some(t) = r {
                        tracing::info!(%peer, role = ?t, "sensor client declared role");
                    }
                    role = Some(r);
                    let rest = head.split_off(consumed);
                    head = rest;
                    data = &[];
                }
            }
        }
        let pending = std::mem::take(&mut head);
        let frames = if pending.is_empty() { decoder.push(data) } else { decoder.push(&pending) };
        let role = role.flatten();
        for frame in frames {
            let packet = match decode_packet(&frame, schema) {
                Ok(p) => p,
                Err(e) => {
                    tracing::debug!(%peer, error = %e, "dropping packet");
                    counters.record_dropped();
                    continue;
                }
            };
            let (update, applied) = to_update(&packet.words, schema, role);
            if !applied.is_empty() && !sink.push(update) {
                return Ok(());
            }
            counters.record_packet(peer, &applied, Instant::now());
            if config.echo {
                let sc = counters.sample_counters();
                let reply = echo_frame(sc.insolation_count, sc.temperature_count, schema.byte_order());
                stream.write_all(&reply).await?;
            }
        }
    }
    if role.is_none() && !head.is_empty() {
        // Stream ended inside a possible role header.
        counters.record_malformed();
    } else if let Err(e) = decoder.finish() {
        tracing::debug!(%peer, error = %e, "stream ended mid-frame");
        counters.record_malformed();
    }
    Ok(())
}

fn to_update(words: &[SktWord], schema: &SktVariableSchema, role: Option<Target>) -> (EnvUpdate, Vec<usize>) {
    let mut update = EnvUpdate::default();
    let mut applied = Vec::new();
    for (i, (word, var)) in words.iter().zip(schema.variables()).enumerate() {
        if role.is_some_and(|r| r != var.target) {
            continue;
        }
        match var.target {
            Target::Insolation => update.insolation = Some(word.value()),
            Target::Temperature => update.temperature = Some(word.value()),
            Target::Ignored => continue,
        }
        applied.push(i);
    }
    (update, applied)
}

fn echo_frame(a: u64, b: u64, order: ByteOrder) -> [u8; 8] {
    let mut out = [0u8; 8];
    for (slot, v) in out.chunks_exact_mut(4).zip([a, b]) {
        let v = v.min(i32::MAX as u64) as i32;
        slot.copy_from_slice(&match order {
            ByteOrder::Big => v.to_be_bytes(),
            ByteOrder::Little => v.to_le_bytes(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skt::encode_packet;
    use std::sync::mpsc;
    use std::time::Duration;

    async fn start(echo: bool) -> (GatewayHandle, mpsc::Receiver<EnvUpdate>, Arc<IngestCounters>) {
        let config = GatewayConfig { bind: "127.0.0.1:0".parse().unwrap(), echo, ..Default::default() };
        let counters = Arc::new(IngestCounters::new(&config.schema));
        let (tx, rx) = mpsc::channel();
        let handle = serve(config, tx, counters.clone()).await.unwrap();
        (handle, rx, counters)
    }

    async fn wait_for(counters: &IngestCounters, f: impl Fn(&IngestCounters) -> bool) {
        for _ in 0..200 {
            if f(counters) {
                return;
            }
            tokio::time::sleep(Duration::from_millis(10)).await;
        }
        panic!("condition not reached: {:?}", counters.snapshot(Instant::now()));
    }

    #[test]
    fn role_scan() {
        assert!(matches!(scan_role(b"RO").unwrap(), RoleScan::NeedMore));
        assert!(matches!(scan_role(b"ROLE INSO").unwrap(), RoleScan::NeedMore));
        assert!(matches!(scan_role(b"ROLE INSOLATION\nxx").unwrap(), RoleScan::Role(Some(Target::Insolation), 16)));
        assert!(matches!(scan_role(&[0x44, 0x7A]).unwrap(), RoleScan::Role(None, 0)));
        assert!(scan_role(b"ROLE WIND\n").is_err());
        assert!(scan_role(b"ROLE IGNORED\n").is_err());
    }

    #[tokio::test]
    async fn fragmented_frames_reach_the_sink() {
        let (handle, rx, counters) = start(false).await;
        let mut s = TcpStream::connect(handle.local_addr()).await.unwrap();
        let bytes = encode_packet(&[800.0, 40.0], &SktVariableSchema::default()).unwrap();
        for b in &bytes {
            s.write_all(&[*b]).await.unwrap();
            s.flush().await.unwrap();
        }
        wait_for(&counters, |c| c.packets() == 1).await;
        let u = rx.try_recv().unwrap();
        assert_eq!((u.insolation, u.temperature), (Some(800.0), Some(40.0)));
        handle.shutdown().await;
    }

    #[tokio::test]
    async fn role_header_masks_other_variable() {
        let (handle, rx, counters) = start(false).await;
        let mut s = TcpStream::connect(handle.local_addr()).await.unwrap();
        s.write_all(b"ROLE TEMPERATURE\n").await.unwrap();
        s.write_all(&encode_packet(&[800.0, 40.0], &SktVariableSchema::default()).unwrap()).await.unwrap();
        wait_for(&counters, |c| c.packets() == 1).await;
        let u = rx.try_recv().unwrap();
        assert_eq!((u.insolation, u.temperature), (None, Some(40.0)));
        assert_eq!(counters.sample_counters().insolation_count, 0);
        assert_eq!(counters.sample_counters().temperature_count, 1);
        handle.shutdown().await;
    }

    #[tokio::test]
    async fn nan_dropped_and_partial_tail_malformed() {
        let (handle, rx, counters) = start(false).await;
        let mut s = TcpStream::connect(handle.local_addr()).await.unwrap();
        let mut nan = f32::NAN.to_bits().to_be_bytes().to_vec();
        nan.extend_from_slice(&25f32.to_bits().to_be_bytes());
        s.write_all(&nan).await.unwrap();
        s.write_all(&encode_packet(&[500.0, 20.0], &SktVariableSchema::default()).unwrap()).await.unwrap();
        s.write_all(&[1, 2, 3]).await.unwrap();
        drop(s);
        wait_for(&counters, |c| c.malformed() == 1).await;
        assert_eq!((counters.packets(), counters.dropped()), (1, 1));
        assert_eq!(rx.try_iter().count(), 1);
        handle.shutdown().await;
    }

    #[tokio::test]
    async fn echo_returns_counters() {
        let (handle, _rx, _counters) = start(true).await;
        let mut s = TcpStream::connect(handle.local_addr()).await.unwrap();
        let frame = encode_packet(&[1000.0, 25.0], &SktVariableSchema::default()).unwrap();
        s.write_all(&frame).await.unwrap();
        s.write_all(&frame).await.unwrap();
        let mut reply = [0u8; 16];
        tokio::time::timeout(Duration::from_secs(2), s.read_exact(&mut reply)).await.unwrap().unwrap();
        assert_eq!(&reply[8..], &[0, 0, 0, 2, 0, 0, 0, 2]);
        handle.shutdown().await;
    }

    #[tokio::test]
    async fn two_clients_one_per_role() {
        let (handle, rx, counters) = start(false).await;
        let schema = SktVariableSchema::default();
        let mut a = TcpStream::connect(handle.local_addr()).await.unwrap();
        let mut b = TcpStream::connect(handle.local_addr()).await.unwrap();
        a.write_all(b"ROLE INSOLATION\n").await.unwrap();
        b.write_all(b"ROLE TEMPERATURE\n").await.unwrap();
        for _ in 0..5 {
            a.write_all(&encode_packet(&[900.0, 0.0], &schema).unwrap()).await.unwrap();
            b.write_all(&encode_packet(&[0.0, 30.0], &schema).unwrap()).await.unwrap();
        }
        wait_for(&counters, |c| c.packets() == 10).await;
        let sc = counters.sample_counters();
        assert_eq!((sc.insolation_count, sc.temperature_count), (5, 5));
        for u in rx.try_iter() {
            assert!(u.insolation.is_none_or(|g| g == 900.0));
            assert!(u.temperature.is_none_or(|t| t == 30.0));
        }
        assert_eq!(counters.snapshot(Instant::now()).clients.len(), 2);
        handle.shutdown().await;
    }
}
