//! Encodes and decodes sensor frames, including split delivery over a stream.
//!
//! cargo run --example skt_codec

use pvtwin::skt::{decode_packet, encode_packet, ByteOrder, FrameDecoder, SktVariableSchema};

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02X}")).collect::<Vec<_>>().join(" ")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let schema = SktVariableSchema::default();
    let frame = encode_packet(&[1000.0, 25.0], &schema)?;
    println!("big endian:    {}", hex(&frame));
    let le = schema.clone().with_byte_order(ByteOrder::Little);
    println!("little endian: {}", hex(&encode_packet(&[1000.0, 25.0], &le)?));

    let mut stream = Vec::new();
    for (g, t) in [(200.0, 20.0), (650.5, 31.25), (1000.0, 45.0)] {
        stream.extend(encode_packet(&[g, t], &schema)?);
    }
    let mut decoder = FrameDecoder::new(schema.frame_len());
    for chunk in stream.chunks(5) {
        for f in decoder.push(chunk) {
            println!("frame {:<26} -> {:?}", hex(&f), decode_packet(&f, &schema)?.values());
        }
    }
    decoder.finish()?;

    let mut nan = f32::NAN.to_be_bytes().to_vec();
    nan.extend(25f32.to_be_bytes());
    println!("NaN frame: {}", decode_packet(&nan, &schema).unwrap_err());
    Ok(())
}
