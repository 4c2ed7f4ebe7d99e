//! Test support: in-process mock servers for the external services lore talks
//! to (S3, the arXiv API, OpenAI-compatible chat and embeddings) and fixture
//! builders. Everything binds to `127.0.0.1` on an ephemeral port.

pub mod arxiv;
pub mod corpus;
pub mod fixtures;
pub mod fuzz;
pub mod openai;
pub mod oracle;
pub mod s3;

use std::net::SocketAddr;

use axum::Router;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

/// A running server; aborted on drop.
#[derive(Debug)]
pub struct Served {
    pub addr: SocketAddr,
    task: JoinHandle<()>,
}

impl Served {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for Served {
    fn drop(&mut self) {
        self.task.abort();
    }
}

pub async fn serve(router: Router) -> Served {
    let listener = TcpListener::bind("127.0.0.1:0").await.expect("bind loopback");
    let addr = listener.local_addr().expect("local addr");
    let task = tokio::spawn(async move {
        axum::serve(listener, router).await.expect("mock server runs");
    });
    Served { addr, task }
}
