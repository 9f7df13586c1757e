#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use anonaug_core::{anonymize, Algorithm, BackendConfig, Dataset, Profile};

/// One scripted reply of the stub chat endpoint.
#[derive(Clone)]
pub enum Reply {
    /// 200 with `choices[0].message.content` set to the string.
    Content(String),
    /// Status code and raw body.
    Status(u16, String),
    /// Reads the request, then stalls for the duration without answering.
    Stall(Duration),
}

/// A local HTTP server that answers POSTs from a script; the last reply repeats.
pub struct StubServer {
    pub url: String,
    requests: Arc<Mutex<Vec<String>>>,
}

impl StubServer {
    pub fn start(script: Vec<Reply>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        thread::spawn(move || {
            for (i, stream) in listener.incoming().enumerate() {
                let Ok(stream) = stream else { break };
                let reply = script[i.min(script.len() - 1)].clone();
                let log = Arc::clone(&log);
                thread::spawn(move || serve(stream, reply, &log));
            }
        });
        StubServer { url, requests }
    }

    /// Request bodies received so far.
    pub fn requests(&self) -> Vec<String> {
        self.requests.lock().unwrap().clone()
    }

    pub fn config(&self, key_env: &str) -> BackendConfig {
        let mut cfg = BackendConfig::remote(&self.url, "stub-model", key_env);
        cfg.retry_base_delay_ms = 10;
        cfg.timeout_seconds = 5;
        cfg
    }
}

fn serve(stream: TcpStream, reply: Reply, log: &Mutex<Vec<String>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut length = 0;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.eq_ignore_ascii_case("content-length") {
                length = value.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; length];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    log.lock().unwrap().push(String::from_utf8_lossy(&body).into_owned());

    let (status, text) = match reply {
        Reply::Content(content) => (
            200,
            serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string(),
        ),
        Reply::Status(status, body) => (status, body),
        Reply::Stall(d) => {
            thread::sleep(d);
            return;
        }
    };
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    );
    let _ = stream.flush();
}

/// 20 seeded Italia-profile rows.
pub fn italia_small() -> Dataset<f64> {
    Profile::Italia.generate(20, 7).unwrap()
}

/// `italia_small` anonymized with Mondrian at k = 5.
pub fn italia_small_anon() -> Dataset<f64> {
    anonymize(&italia_small(), Algorithm::BasicMondrian, 5, 0).unwrap().output
}
