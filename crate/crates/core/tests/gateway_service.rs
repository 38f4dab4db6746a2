#![allow(clippy::await_holding_lock)]
mod common;

use std::time::{Duration, Instant};

use common::{loopback_config, serial, start, Api};
use pvtwin::skt::{encode_packet, ByteOrder, SktVariable, SktVariableSchema, Target, WordKind};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpStream;

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn sensor_values_reach_telemetry_and_are_clamped() {
    let _guard = serial();
    let service = start(&loopback_config()).await;
    let api = Api::new(&service);
    let schema = SktVariableSchema::default();

    let mut board = TcpStream::connect(service.skt_addr()).await.unwrap();
    board.write_all(&encode_packet(&[420.0, 33.5], &schema).unwrap()).await.unwrap();
    let deadline = Instant::now() + Duration::from_secs(1);
    loop {
        let (_, s) = api.get("/state").await;
        if s["insolation"] == 420.0 {
            assert_eq!(s["temperature"], 33.5);
            assert_eq!(s["counters"]["insolation_count"], 1);
            assert_eq!(s["counters"]["temperature_count"], 1);
            break;
        }
        assert!(Instant::now() < deadline);
        tokio::time::sleep(Duration::from_millis(5)).await;
    }

    // Out of range values are clamped, infinities included.
    let mut frame = f32::INFINITY.to_be_bytes().to_vec();
    frame.extend((-300f32).to_be_bytes());
    board.write_all(&frame).await.unwrap();
    // A NaN packet is dropped whole.
    let mut nan = 100f32.to_be_bytes().to_vec();
    nan.extend(f32::NAN.to_be_bytes());
    board.write_all(&nan).await.unwrap();
    board.write_all(&[0x44]).await.unwrap();
    drop(board);

    let deadline = Instant::now() + Duration::from_secs(1);
    loop {
        let (_, c) = api.get("/counters").await;
        if c["malformed"] == 1 {
            assert_eq!(c["dropped"], 1);
            assert_eq!(c["packets"], 2);
            break;
        }
        assert!(Instant::now() < deadline, "{c}");
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
    let (_, s) = api.get("/state").await;
    assert_eq!(s["insolation"], 1600.0);
    assert_eq!(s["temperature"], -40.0);
    service.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn custom_schema_little_endian_with_echo() {
    let _guard = serial();
    let mut config = loopback_config();
    config.gateway.echo = true;
    config.gateway.schema = SktVariableSchema::new(
        vec![
            SktVariable::new("seq", WordKind::Int32, Target::Ignored),
            SktVariable::new("t", WordKind::Float32, Target::Temperature),
            SktVariable::new("g", WordKind::Int32, Target::Insolation),
        ],
        ByteOrder::Little,
    )
    .unwrap();
    let service = start(&config).await;
    let api = Api::new(&service);

    let mut board = TcpStream::connect(service.skt_addr()).await.unwrap();
    for seq in 1..=3 {
        let frame = encode_packet(&[f64::from(seq), 41.5, 750.0], &config.gateway.schema).unwrap();
        assert_eq!(frame.len(), 12);
        board.write_all(&frame).await.unwrap();
        let mut reply = [0u8; 8];
        tokio::time::timeout(Duration::from_secs(1), board.read_exact(&mut reply)).await.unwrap().unwrap();
        let ins = i32::from_le_bytes(reply[..4].try_into().unwrap());
        let tmp = i32::from_le_bytes(reply[4..].try_into().unwrap());
        assert_eq!((ins, tmp), (seq, seq));
    }
    tokio::time::sleep(Duration::from_millis(20)).await;
    let (_, s) = api.get("/state").await;
    assert_eq!((s["insolation"].as_f64(), s["temperature"].as_f64()), (Some(750.0), Some(41.5)));
    let (_, c) = api.get("/counters").await;
    assert_eq!(c["variables"][0]["count"], 0, "ignored variable is not counted");
    service.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn per_client_error_does_not_affect_others() {
    let _guard = serial();
    let service = start(&loopback_config()).await;
    let api = Api::new(&service);
    let schema = SktVariableSchema::default();

    let mut bad = TcpStream::connect(service.skt_addr()).await.unwrap();
    bad.write_all(b"ROLE WIND\n").await.unwrap();
    let mut buf = [0u8; 1];
    // The gateway hangs up on a bad role header.
    let n = tokio::time::timeout(Duration::from_secs(1), bad.read(&mut buf)).await.unwrap().unwrap_or(0);
    assert_eq!(n, 0);

    let mut good = TcpStream::connect(service.skt_addr()).await.unwrap();
    good.write_all(b"ROLE INSOLATION\n").await.unwrap();
    good.write_all(&encode_packet(&[321.0, 80.0], &schema).unwrap()).await.unwrap();
    let deadline = Instant::now() + Duration::from_secs(1);
    loop {
        let (_, s) = api.get("/state").await;
        if s["insolation"] == 321.0 {
            assert_eq!(s["temperature"], 25.0, "role masks the other slot");
            break;
        }
        assert!(Instant::now() < deadline);
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
    service.shutdown().await.unwrap();
}
