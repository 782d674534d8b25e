use std::net::{SocketAddr, ToSocketAddrs};

use serde_json::json;
use wingforge::SurrogateRef;

use super::Output;
use crate::args::ServeArgs;
use crate::config::CliConfig;
use crate::error::{bad_input, Classify, CliResult};

pub fn run(args: &ServeArgs, config: &CliConfig, as_json: bool) -> CliResult<Output> {
    let mut service = config.service_config();
    if let Some(root) = config.data_root(args.dataset.as_deref()) {
        service.datasets.entry("default".into()).or_insert(root);
    }
    if let SurrogateRef::Remote(_) = &config.backend {
        service
            .backends
            .entry("remote".into())
            .or_insert_with(|| config.backend.clone());
    }
    let addr: SocketAddr = (args.host.as_str(), args.port)
        .to_socket_addrs()
        .input_ctx(format!("resolving {}:{}", args.host, args.port))?
        .next()
        .ok_or_else(|| bad_input(format!("{} does not resolve", args.host)))?;

    if as_json {
        println!(
            "{}",
            json!({"command": "serve", "address": addr.to_string(), "status": "listening"})
        );
    }
    let runtime = tokio::runtime::Runtime::new().internal()?;
    runtime
        .block_on(wingforge_service::serve(service, addr))
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidInput | std::io::ErrorKind::AddrInUse | std::io::ErrorKind::AddrNotAvailable => {
                crate::error::CliError::input(e)
            }
            _ => crate::error::CliError::internal(e),
        })?;
    Ok(Output {
        json: json!({"command": "serve", "address": addr.to_string(), "status": "stopped"}),
        text: String::new(),
    })
}
