//! Minimal chat-completion stub server for backend tests.

#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

/// Path, JSON body and `Authorization` header of one request.
pub type Hit = (String, serde_json::Value, Option<String>);

/// Routes:
/// - `/answer/<X>`: replies with a completion ending in `ANSWER: X`
/// - `/slow`: sleeps two seconds before replying
/// - `/noanswer`: replies without an answer marker
/// - `/error`: replies 500
pub struct StubServer {
    pub base: String,
    hits: Arc<Mutex<Vec<Hit>>>,
    slow_hits: Arc<AtomicUsize>,
}

impl StubServer {
    pub fn start() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind stub");
        let base = format!("http://{}", listener.local_addr().unwrap());
        let hits = Arc::new(Mutex::new(Vec::new()));
        let slow_hits = Arc::new(AtomicUsize::new(0));
        let (h, s) = (Arc::clone(&hits), Arc::clone(&slow_hits));
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let (h, s) = (Arc::clone(&h), Arc::clone(&s));
                thread::spawn(move || handle(stream, &h, &s));
            }
        });
        Self {
            base,
            hits,
            slow_hits,
        }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub fn hits_for(&self, path: &str) -> usize {
        if path == "/slow" {
            return self.slow_hits.load(Ordering::SeqCst);
        }
        self.hits
            .lock()
            .unwrap()
            .iter()
            .filter(|(p, _, _)| p == path)
            .count()
    }

    pub fn requests(&self) -> Vec<Hit> {
        self.hits.lock().unwrap().clone()
    }
}

fn handle(stream: TcpStream, hits: &Mutex<Vec<Hit>>, slow_hits: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() {
        return;
    }
    let path = request_line
        .split_whitespace()
        .nth(1)
        .unwrap_or("/")
        .to_string();
    let mut length = 0usize;
    let mut auth = None;
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
            match name.trim().to_ascii_lowercase().as_str() {
                "content-length" => length = value.trim().parse().unwrap_or(0),
                "authorization" => auth = Some(value.trim().to_string()),
                _ => {}
            }
        }
    }
    let mut body = vec![0u8; length];
    if reader.read_exact(&mut body).is_err() {
        return;
    }
    let json: serde_json::Value = serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null);

    let (status, content) = if path == "/slow" {
        slow_hits.fetch_add(1, Ordering::SeqCst);
        thread::sleep(Duration::from_secs(2));
        ("200 OK", Some("too late\nANSWER: late".to_string()))
    } else {
        hits.lock().unwrap().push((path.clone(), json, auth));
        if let Some(answer) = path.strip_prefix("/answer/") {
            (
                "200 OK",
                Some(format!(
                    "Let me think.\nANSWER: wrong\nOn reflection...\nANSWER: {answer}"
                )),
            )
        } else if path == "/noanswer" {
            ("200 OK", Some("I am not sure.".to_string()))
        } else {
            ("500 Internal Server Error", None)
        }
    };
    let payload = match content {
        Some(c) => {
            serde_json::json!({"choices": [{"message": {"role": "assistant", "content": c}}]})
                .to_string()
        }
        None => "{\"error\":\"boom\"}".to_string(),
    };
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    );
    let _ = stream.flush();
}
