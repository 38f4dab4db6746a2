//! Two sensor boards, one per role, feeding the TCP gateway on loopback.
//!
//! cargo run --example gateway_loopback

use std::sync::{mpsc, Arc};
use std::time::{Duration, Instant};

use pvtwin::skt::{encode_packet, serve, GatewayConfig, IngestCounters, SktVariableSchema};
use tokio::io::AsyncWriteExt;
use tokio::net::TcpStream;

async fn board(addr: std::net::SocketAddr, role: &str, values: impl Fn(u32) -> [f64; 2]) -> std::io::Result<()> {
    let schema = SktVariableSchema::default();
    let mut s = TcpStream::connect(addr).await?;
    s.write_all(format!("ROLE {role}\n").as_bytes()).await?;
    let mut tick = tokio::time::interval(Duration::from_millis(100));
    for k in 0..20 {
        tick.tick().await;
        s.write_all(&encode_packet(&values(k), &schema).expect("finite values")).await?;
    }
    Ok(())
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = GatewayConfig { bind: "127.0.0.1:0".parse()?, ..Default::default() };
    let counters = Arc::new(IngestCounters::new(&config.schema));
    let (tx, rx) = mpsc::channel();
    let gateway = serve(config, tx, counters.clone()).await?;
    println!("gateway on {}", gateway.local_addr());

    let addr = gateway.local_addr();
    let (a, b) = tokio::join!(
        board(addr, "INSOLATION", |k| [500.0 + 25.0 * f64::from(k), 0.0]),
        board(addr, "TEMPERATURE", |k| [0.0, 25.0 + 0.5 * f64::from(k)]),
    );
    a?;
    b?;
    tokio::time::sleep(Duration::from_millis(100)).await;

    let updates: Vec<_> = rx.try_iter().collect();
    println!("{} env updates, last two: {:?}", updates.len(), &updates[updates.len().saturating_sub(2)..]);
    println!("{}", serde_json::to_string_pretty(&counters.snapshot(Instant::now()))?);
    gateway.shutdown().await;
    Ok(())
}
