//! Loopback HTTP facade over the simulated resolver.
//!
//! `GET /{token}` maps resolution outcomes onto status codes the way a
//! real shortener would: 301 with a `Location` header, 404 for unmapped
//! tokens, 403 when rate-limited, and 429 with a challenge nonce header
//! for CAPTCHA challenges. The client id is the peer IP, so every
//! connecting socket gets its own rate bucket.

use crate::shortener::{Resolution, ShortenerService};
use std::io;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;
use tiny_http::{Header, Response, Server};

/// Handle to a running facade; shut it down explicitly or on drop.
pub struct HttpFacade {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl HttpFacade {
    /// Bind `addr` (e.g. `127.0.0.1:0`) and serve `service` until shut
    /// down.
    pub fn serve(service: Arc<ShortenerService>, addr: &str) -> io::Result<Self> {
        let server = Server::http(addr)
            .map_err(|e| io::Error::new(io::ErrorKind::AddrInUse, e.to_string()))?;
        let addr = match server.server_addr() {
            tiny_http::ListenAddr::IP(ip) => ip,
            #[allow(unreachable_patterns)]
            _ => return Err(io::Error::other("non-IP listener")),
        };
        let shutdown = Arc::new(AtomicBool::new(false));
        let stop = shutdown.clone();
        let handle = std::thread::spawn(move || {
            while !stop.load(Ordering::Acquire) {
                match server.recv_timeout(Duration::from_millis(50)) {
                    Ok(Some(request)) => handle_request(&service, request),
                    Ok(None) => {}
                    Err(_) => break,
                }
            }
        });
        Ok(Self {
            addr,
            shutdown,
            handle: Some(handle),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shutdown.store(true, Ordering::Release);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

impl Drop for HttpFacade {
    fn drop(&mut self) {
        self.stop();
    }
}

fn handle_request(service: &ShortenerService, request: tiny_http::Request) {
    let client = request
        .remote_addr()
        .map(|a| a.ip().to_string())
        .unwrap_or_else(|| "unknown".to_string());
    let token = request.url().trim_start_matches('/').to_string();
    let response = match service.resolve(&token, &client) {
        Resolution::Redirect(long_url) => {
            let location =
                Header::from_bytes(&b"Location"[..], long_url.as_bytes()).expect("header");
            Response::from_string("").with_status_code(301).with_header(location)
        }
        Resolution::NotFound => Response::from_string("not found").with_status_code(404),
        Resolution::RateLimited => Response::from_string("rate limited").with_status_code(403),
        Resolution::CaptchaChallenge { nonce } => {
            let header =
                Header::from_bytes(&b"x-captcha-nonce"[..], nonce.as_bytes()).expect("header");
            Response::from_string("solve challenge")
                .with_status_code(429)
                .with_header(header)
        }
    };
    let _ = request.respond(response);
}
