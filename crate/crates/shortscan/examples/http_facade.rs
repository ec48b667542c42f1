//! Serve the simulated resolver over loopback HTTP and hit it with raw
//! requests: 301 redirects, 404s, and 403 rate limits on the wire.
//!
//! ```bash
//! cargo run --example http_facade
//! ```

use shortscan::http::HttpFacade;
use shortscan::shortener::{GenerationStrategy, RatePolicy, ShortenerService};
use shortscan::space::{SpaceFamily, TokenSpace};
use shortscan::VirtualClock;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::sync::Arc;

fn get(addr: &str, path: &str) -> Vec<String> {
    let mut stream = TcpStream::connect(addr).unwrap();
    write!(stream, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let reader = BufReader::new(stream);
    reader
        .lines()
        .map_while(Result::ok)
        .take_while(|l| !l.is_empty())
        .collect()
}

fn main() {
    let service = Arc::new(
        ShortenerService::new(
            SpaceFamily::single(TokenSpace::base62(4)),
            RatePolicy {
                sustained_rate: 1.0,
                burst_rate: 2.0,
                burst_window: 2.0,
                ..RatePolicy::default()
            },
            VirtualClock::new(),
        )
        .unwrap(),
    );
    let link = service
        .shorten(
            "https://files.example.com/report.pdf",
            &GenerationStrategy::Random { seed: 1 },
            "storage",
        )
        .unwrap();

    let facade = HttpFacade::serve(service, "127.0.0.1:0").unwrap();
    let addr = facade.addr().to_string();
    println!("facade listening on http://{addr}\n");

    println!("GET /{} (mapped token):", link.token);
    for line in get(&addr, &format!("/{}", link.token)) {
        println!("  {line}");
    }

    println!("\nGET /zzzz (unmapped token):");
    for line in get(&addr, "/zzzz").iter().take(1) {
        println!("  {line}");
    }

    println!("\nhammering until the rate policy bites:");
    for i in 1..=8 {
        let status = get(&addr, "/zzzz").first().cloned().unwrap_or_default();
        println!("  request {i}: {status}");
        if status.contains("403") {
            break;
        }
    }
    facade.shutdown();
}
