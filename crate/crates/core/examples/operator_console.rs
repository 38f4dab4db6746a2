//! Starts the full service and drives it the way a console would: sensor
//! boards over TCP, load and breaker commands over HTTP, telemetry over the
//! WebSocket stream.
//!
//! cargo run --example operator_console

use std::time::Duration;

use futures::StreamExt;
use pvtwin::runtime::{PlantConfig, Service, ServiceOptions};
use pvtwin::skt::{encode_packet, SktVariableSchema};
use tokio::io::AsyncWriteExt;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = PlantConfig::default();
    config.gateway.bind = "127.0.0.1:0".parse()?;
    config.api.bind = "127.0.0.1:0".parse()?;
    let service = Service::start(&config, ServiceOptions::default()).await?;
    let api = format!("http://{}", service.api_addr());
    println!("gateway {}, api {api}", service.skt_addr());

    let mut board = tokio::net::TcpStream::connect(service.skt_addr()).await?;
    board.write_all(&encode_packet(&[650.0, 35.0], &SktVariableSchema::default())?).await?;

    let client = reqwest::Client::new();
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{}/stream", service.api_addr())).await?;
    tokio::time::sleep(Duration::from_millis(200)).await;

    let r = client.post(format!("{api}/load")).json(&serde_json::json!({"p_setpoint": 30})).send().await?;
    println!("POST /load 30 W -> {} {}", r.status(), r.text().await?);
    let r = client.post(format!("{api}/load")).json(&serde_json::json!({"p_setpoint": 50})).send().await?;
    println!("POST /load 50 W -> {} {}", r.status(), r.text().await?);
    let r = client.post(format!("{api}/fault")).json(&serde_json::json!({"action": "inject"})).send().await?;
    println!("POST /fault inject -> {}", r.status());
    tokio::time::sleep(Duration::from_millis(200)).await;
    let r = client.post(format!("{api}/breaker")).json(&serde_json::json!({"action": "close"})).send().await?;
    println!("POST /breaker close -> {} {}", r.status(), r.text().await?);

    for _ in 0..3 {
        if let Some(msg) = ws.next().await {
            println!("stream: {}", msg?.into_text()?);
        }
    }
    let state: serde_json::Value = client.get(format!("{api}/state")).send().await?.json().await?;
    println!("state: breaker={} G={} T={}", state["breaker_position"], state["insolation"], state["temperature"]);
    let counters = client.get(format!("{api}/counters")).send().await?.text().await?;
    println!("counters: {counters}");
    let curve: serde_json::Value = client.get(format!("{api}/ivcurve")).send().await?.json().await?;
    println!("ivcurve: {} points, mpp {}", curve["points"].as_array().map_or(0, Vec::len), curve["mpp"]);

    let outcome = service.shutdown().await?;
    println!("stopped after {} steps", outcome.report.steps);
    Ok(())
}
