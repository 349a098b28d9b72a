//! A sharing service on an ephemeral port and a blocking client for it.

use std::net::SocketAddr;

use agora::share::{self, ShareOptions};
use ureq::Agent;

pub const TOKEN: &str = "s3cret";

pub struct Server {
    pub base: String,
    pub dir: tempfile::TempDir,
    _shutdown: tokio::sync::oneshot::Sender<()>,
}

pub fn start(max_upload_bytes: usize) -> Server {
    let dir = tempfile::tempdir().unwrap();
    let options = ShareOptions { max_upload_bytes, ..ShareOptions::new(dir.path(), TOKEN) };
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let (addr_tx, addr_rx) = std::sync::mpsc::channel::<SocketAddr>();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            addr_tx.send(listener.local_addr().unwrap()).unwrap();
            share::serve(listener, options, async {
                let _ = rx.await;
            })
            .await
            .unwrap();
        });
    });
    let addr = addr_rx.recv().unwrap();
    Server { base: format!("http://{addr}"), dir, _shutdown: tx }
}

pub fn agent() -> Agent {
    Agent::config_builder().http_status_as_error(false).build().into()
}

pub struct Reply {
    pub status: u16,
    pub headers: ureq::http::HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }
}

pub fn finish(result: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Reply {
    let mut resp = result.unwrap();
    Reply {
        status: resp.status().as_u16(),
        headers: resp.headers().clone(),
        body: resp.body_mut().with_config().limit(64 << 20).read_to_vec().unwrap(),
    }
}

pub fn upload(base: &str, token: Option<&str>, filename: Option<&str>, body: &[u8]) -> Reply {
    let url = match filename {
        Some(f) => format!("{base}/graphs?filename={}", f.replace('#', "%23")),
        None => format!("{base}/graphs"),
    };
    let mut req = agent().post(&url);
    if let Some(t) = token {
        req = req.header("Authorization", &format!("Bearer {t}"));
    }
    finish(req.send(body))
}

pub fn get(base: &str, path: &str) -> Reply {
    finish(agent().get(&format!("{base}{path}")).header("Origin", "http://viewer.example").call())
}
