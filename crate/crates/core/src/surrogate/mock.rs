//! In-process stand-in for a remote surrogate service, for tests and demos.
//!
//! Speaks just enough HTTP/1.1 to answer `POST /predict` with one response
//! per connection.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU32, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde_json::json;

use crate::aero::Atmosphere;
use crate::geometry::{loft_wing, MeshResolution};

use super::liftline::synthesize_field;
use super::{LiftLine, RemoteRequest, RemoteResponse, Surrogate};

#[derive(Debug, Clone)]
pub enum MockBehavior {
    /// `p_s = p_inf` and zero shear at every query point.
    Freestream { p_inf: f64 },
    /// The same stored response for every request.
    Canned(RemoteResponse),
    /// Fields synthesized from the lifting-line model on a wing lofted at
    /// `resolution`, which must match the client's query resolution.
    Analytic { resolution: MeshResolution },
}

#[derive(Debug, Clone)]
pub struct MockOptions {
    pub behavior: MockBehavior,
    /// Connections closed without a response before answering normally.
    pub drop_first: u32,
    /// Delay before each response.
    pub delay: Duration,
    /// Return one `p_s` entry fewer than there are query points.
    pub wrong_length: bool,
}

impl MockOptions {
    pub fn new(behavior: MockBehavior) -> Self {
        Self {
            behavior,
            drop_first: 0,
            delay: Duration::ZERO,
            wrong_length: false,
        }
    }
}

pub struct MockRemote {
    addr: SocketAddr,
    requests: Arc<AtomicU32>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockRemote {
    pub fn start(options: MockOptions) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let requests = Arc::new(AtomicU32::new(0));
        let stop = Arc::new(AtomicBool::new(false));
        let (req, st) = (requests.clone(), stop.clone());
        let handle = thread::spawn(move || {
            for stream in listener.incoming() {
                if st.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let n = req.fetch_add(1, Ordering::SeqCst);
                if n < options.drop_first {
                    drop(stream);
                    continue;
                }
                let opts = options.clone();
                thread::spawn(move || {
                    let _ = serve(stream, &opts);
                });
            }
        });
        Ok(Self {
            addr,
            requests,
            stop,
            handle: Some(handle),
        })
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Connections accepted so far, dropped ones included.
    pub fn request_count(&self) -> u32 {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockRemote {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(stream: TcpStream, opts: &MockOptions) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let mut content_length = 0usize;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                content_length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    thread::sleep(opts.delay);

    let (status, payload) = match serde_json::from_slice::<RemoteRequest>(&body) {
        Ok(req) => match respond(&req, opts) {
            Ok(v) => ("200 OK", v),
            Err(msg) => ("500 Internal Server Error", json!({ "error": msg })),
        },
        Err(e) => ("400 Bad Request", json!({ "error": e.to_string() })),
    };
    let text = payload.to_string();
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    )?;
    out.flush()
}

fn respond(req: &RemoteRequest, opts: &MockOptions) -> Result<serde_json::Value, String> {
    let n = req.query_points.len();
    let mut response = match &opts.behavior {
        MockBehavior::Freestream { p_inf } => RemoteResponse {
            p_s: vec![*p_inf; n],
            tau: vec![[0.0; 3]; n],
            model_version: "mock-freestream".into(),
        },
        MockBehavior::Canned(r) => r.clone(),
        MockBehavior::Analytic { resolution } => {
            let atm = Atmosphere::isa_sea_level();
            let pred = LiftLine::default()
                .predict(&req.design, &req.inflow, &atm)
                .map_err(|e| e.to_string())?;
            let mesh = loft_wing(&req.design, resolution).map_err(|e| e.to_string())?;
            let c = &pred.coefficients;
            let field = synthesize_field(&mesh, &req.inflow, &atm, c.f_drag, c.f_lift).map_err(|e| e.to_string())?;
            RemoteResponse {
                p_s: field.p_s,
                tau: field.tau,
                model_version: "mock-analytic".into(),
            }
        }
    };
    if opts.wrong_length {
        response.p_s.pop();
    }
    serde_json::to_value(response).map_err(|e| e.to_string())
}
